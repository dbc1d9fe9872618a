//! Binary STL of the deviated flank patch.

use std::io::Write;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::cutting::DeviationField;
use crate::error::{Error, Result};

/// Vertices are grid points moved along their normals by the deviation.
pub fn deviated_vertices(field: &DeviationField) -> Vec<Point3<f64>> {
    let g = &field.grid;
    g.points
        .iter()
        .zip(&g.normals)
        .zip(&field.deviations)
        .map(|((p, n), d)| p + n * *d)
        .collect()
}

pub fn triangle_count(rows: usize, cols: usize) -> usize {
    2 * rows.saturating_sub(1) * cols.saturating_sub(1)
}

/// Triangles as vertex index triples, wound so facet normals agree with the
/// flank normals (pointing out of the tooth).
pub fn triangles(field: &DeviationField) -> Vec<[usize; 3]> {
    let g = &field.grid;
    let mut tris = Vec::with_capacity(triangle_count(g.rows, g.cols));
    for r in 0..g.rows.saturating_sub(1) {
        for c in 0..g.cols.saturating_sub(1) {
            let a = g.index(r, c);
            let b = g.index(r, c + 1);
            let d = g.index(r + 1, c);
            let e = g.index(r + 1, c + 1);
            tris.push([a, b, e]);
            tris.push([a, e, d]);
        }
    }
    let verts = deviated_vertices(field);
    let flip = tris
        .first()
        .is_some_and(|t| facet_normal(&verts, t).dot(&g.normals[t[0]]) < 0.0);
    if flip {
        for t in &mut tris {
            t.swap(1, 2);
        }
    }
    tris
}

fn facet_normal(v: &[Point3<f64>], t: &[usize; 3]) -> Vector3<f64> {
    (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]])).normalize()
}

pub fn write_stl<W: Write>(field: &DeviationField, mut out: W) -> Result<()> {
    if field.grid.rows < 2 || field.grid.cols < 2 {
        return Err(Error::InvalidGrid(
            "need at least 2x2 points for a mesh".into(),
        ));
    }
    let verts = deviated_vertices(field);
    let tris = triangles(field);
    let mut header = [0u8; 80];
    let tag = b"hobsim deviated flank patch";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(tris.len() as u32).to_le_bytes())?;
    for t in &tris {
        let n = facet_normal(&verts, t);
        for x in n.iter() {
            out.write_all(&(*x as f32).to_le_bytes())?;
        }
        for &i in t {
            for x in verts[i].coords.iter() {
                out.write_all(&(*x as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

pub fn export_stl(field: &DeviationField, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_stl(field, &mut w)?;
    w.flush()?;
    Ok(())
}
