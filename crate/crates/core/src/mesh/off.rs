use std::fs;
use std::io::Write;
use std::path::Path;

use super::{MeshError, SurfaceMesh, Vec3};

pub fn load_off(path: impl AsRef<Path>) -> Result<SurfaceMesh, MeshError> {
    let text = fs::read_to_string(path)?;
    parse_off(&text)
}

/// Parse ASCII OFF text containing only triangles. `#` starts a comment.
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, "OFF")) => {}
        Some((_, other)) => return Err(MeshError::MalformedHeader(format!("expected \"OFF\", found {other:?}"))),
        None => return Err(MeshError::MalformedHeader("empty file".into())),
    }
    let (line, counts) = lines.next().ok_or_else(|| MeshError::MalformedHeader("missing counts line".into()))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshError::MalformedHeader(format!("bad counts line {line}")))?;
    if counts.len() != 3 {
        return Err(MeshError::MalformedHeader(format!("counts line {line} needs \"V F E\"")));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices: Vec<Vec3> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) =
            lines.next().ok_or(MeshError::Parse { line: 0, msg: "unexpected end of vertex list".into() })?;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| MeshError::Parse { line, msg: e.to_string() })?;
        if xyz.len() < 3 || xyz.iter().any(|c| !c.is_finite()) {
            return Err(MeshError::Parse { line, msg: "vertex needs three finite coordinates".into() });
        }
        vertices.push([xyz[0], xyz[1], xyz[2]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (line, l) = lines.next().ok_or(MeshError::Parse { line: 0, msg: "unexpected end of face list".into() })?;
        let tokens: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Parse { line, msg: "face indices must be non-negative integers".into() })?;
        let arity = *tokens.first().ok_or(MeshError::Parse { line, msg: "empty face".into() })?;
        if arity != 3 {
            return Err(MeshError::NonTriangleFace { face: f, arity });
        }
        if tokens.len() < 4 {
            return Err(MeshError::Parse { line, msg: "triangle needs three indices".into() });
        }
        faces.push([tokens[1], tokens[2], tokens[3]]);
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

pub fn write_off(mesh: &SurfaceMesh, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} {}", mesh.num_vertices(), mesh.num_faces(), mesh.num_edges())?;
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2])?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Write ASCII OFF. Periodic meshes lose their seam identification
/// geometry: a reloaded torus takes its metric from vertex positions.
pub fn save_off(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    write_off(mesh, &mut file)?;
    file.flush()?;
    Ok(())
}
