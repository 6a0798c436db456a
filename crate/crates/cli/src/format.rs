//! Bit-stable number printing: 17 significant digits in JSON, 9 in CSV.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty JSON whose floats carry 17 significant digits, enough to round
/// trip every `f64`. Non-finite values become `null`.
struct Archival<'a>(PrettyFormatter<'a>);

impl Formatter for Archival<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Archival(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialisation cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// `%.9g`-style rendering.
pub fn csv_number(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // exponent after rounding to the target precision
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_round_trip() {
        #[derive(Serialize)]
        struct S {
            x: f64,
            y: Vec<f64>,
            n: usize,
        }
        let s = S { x: std::f64::consts::PI, y: vec![0.1, -2.5e-300, f64::NAN], n: 3 };
        let text = to_json(&s);
        assert!(text.contains("3.1415926535897931e0"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), std::f64::consts::PI);
        assert_eq!(back["y"][0].as_f64().unwrap(), 0.1);
        assert_eq!(back["y"][1].as_f64().unwrap(), -2.5e-300);
        assert!(back["y"][2].is_null());
        assert_eq!(back["n"].as_u64().unwrap(), 3);
    }

    #[test]
    fn csv_numbers_have_nine_digits() {
        assert_eq!(csv_number(std::f64::consts::PI), "3.14159265");
        assert_eq!(csv_number(1.2345678949), "1.23456789");
        assert_eq!(csv_number(-98.76543216), "-98.7654322");
        assert_eq!(csv_number(-0.25), "-0.25");
        assert_eq!(csv_number(1.0), "1");
        assert_eq!(csv_number(123456789.4), "123456789");
        assert_eq!(csv_number(1234567890.0), "1.23456789e9");
        assert_eq!(csv_number(-1.5e-7), "-1.5e-7");
        assert_eq!(csv_number(0.0001), "0.0001");
        assert_eq!(csv_number(0.0), "0");
        assert_eq!(csv_number(f64::NAN), "NaN");
        // 9.9999999996 rounds up a decade
        assert_eq!(csv_number(9.9999999996), "10");
    }
}
