use std::fmt::Write as _;

use super::{HalfEdgeMesh, MeshError};
use crate::geom::Vec3;

/// Parse Wavefront OBJ text. Only `v` and `f` records are used; texture and
/// normal indices in `f` records are ignored, negative indices are relative.
pub fn load_obj(bytes: &[u8]) -> Result<HalfEdgeMesh, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Parse { line: 0, message: e.to_string() })?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut parts = content.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line, message: e.to_string() })?;
                if coords.len() != 3 {
                    return Err(MeshError::Parse { line, message: "vertex needs three coordinates".into() });
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for tok in parts {
                    let idx = tok.split('/').next().unwrap_or("");
                    let k: i64 = idx.parse().map_err(|_| MeshError::Parse { line, message: format!("bad index `{tok}`") })?;
                    let resolved = if k > 0 {
                        k - 1
                    } else if k < 0 {
                        positions.len() as i64 + k
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved >= positions.len() as i64 {
                        return Err(MeshError::Parse { line, message: format!("index {k} out of range") });
                    }
                    face.push(resolved as usize);
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    HalfEdgeMesh::from_polygons(positions, &faces)
}

/// Write the mesh as OBJ with shortest round-trip decimal coordinates.
pub fn save_obj(mesh: &HalfEdgeMesh) -> Vec<u8> {
    let mut out = String::new();
    for p in mesh.positions() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.polygons() {
        out.push('f');
        for v in f {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
    }
    out.into_bytes()
}
