//! Line-oriented mesh file: header `NN NT NB`, then NN `r z` lines, NT
//! `i j k` triangle lines (0-based) and NB boundary node indices in order.
//! Lines starting with `#` are comments.

use super::Mesh;
use crate::error::{GsError, Result};
use crate::geometry::Point;
use std::fmt::Write as _;
use std::path::Path;

pub fn parse_mesh(text: &str, path: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let perr = |line: usize, msg: String| GsError::Parse {
        path: path.to_string(),
        line,
        msg,
    };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| perr(0, "empty mesh file".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| perr(hline, format!("bad header: {e}")))?;
    if counts.len() != 3 {
        return Err(perr(hline, "header must be `NN NT NB`".into()));
    }
    let (nn, nt, nb) = (counts[0], counts[1], counts[2]);

    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hline, "unexpected end of file in node block".into()))?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad node line: {e}")))?;
        if vals.len() != 2 {
            return Err(perr(ln, "node line must be `r z`".into()));
        }
        nodes.push(Point::new(vals[0], vals[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hline, "unexpected end of file in triangle block".into()))?;
        let vals: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad triangle line: {e}")))?;
        if vals.len() != 3 {
            return Err(perr(ln, "triangle line must be `i j k`".into()));
        }
        triangles.push([vals[0], vals[1], vals[2]]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hline, "unexpected end of file in boundary block".into()))?;
        let v: usize = l
            .parse()
            .map_err(|e| perr(ln, format!("bad boundary index: {e}")))?;
        boundary.push(v);
    }
    Mesh::new(nodes, triangles, boundary)
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, &path.display().to_string())
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut s = String::new();
    writeln!(
        s,
        "{} {} {}",
        mesh.node_count(),
        mesh.triangle_count(),
        mesh.boundary_nodes().len()
    )
    .unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{:e} {:e}", p.r, p.z).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for &b in mesh.boundary_nodes() {
        writeln!(s, "{b}").unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}
