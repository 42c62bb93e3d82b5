//! Flux topology: magnetic axis, X-point / limiter boundary flux, normalized
//! flux, per-triangle plasma coverage and level-line contours of the P1 flux
//! field. Everything here is a pure function of (mesh, nodal values).

use crate::error::{GsError, Result};
use crate::geometry::{point_in_polygon, polygon_area, Point};
use crate::mesh::Mesh;
use crate::sparse::solve_spd_dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    XPoint,
    Limiter,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryKind::XPoint => write!(f, "x-point"),
            BoundaryKind::Limiter => write!(f, "limiter"),
        }
    }
}

/// Nodal poloidal flux plus everything derived from its topology.
#[derive(Debug, Clone)]
pub struct FluxState {
    pub psi: Vec<f64>,
    pub axis: Point,
    pub psi_axis: f64,
    pub psi_b: f64,
    pub kind: BoundaryKind,
    pub x_point: Option<Point>,
    /// normalized flux: 0 on the axis, 1 on the plasma boundary
    pub psibar: Vec<f64>,
    /// plasma coverage fraction per triangle, in `[0, 1]`
    pub mask: Vec<f64>,
    /// closed plasma boundary polyline, counterclockwise
    pub boundary_contour: Vec<Point>,
    /// true when the input flux used the opposite sign convention
    pub sign_flipped: bool,
    pub warnings: Vec<String>,
}

/// Result of the local quadratic fit over a node patch.
struct CriticalPoint {
    location: Point,
    value: f64,
    /// negative-definite Hessian (maximum) when true, saddle when false
    is_max: bool,
}

/// Least-squares quadratic fit of psi over the patch of node `i`; returns
/// the critical point of the fitted surface if there is a usable one.
fn patch_quadratic_fit(mesh: &Mesh, psi: &[f64], i: usize) -> Option<CriticalPoint> {
    let mut patch = vec![i];
    for n in mesh.node_neighbors(i) {
        patch.push(n);
    }
    if patch.len() < 7 {
        let ring: Vec<usize> = patch[1..].to_vec();
        for n in ring {
            for nn in mesh.node_neighbors(n) {
                if !patch.contains(&nn) {
                    patch.push(nn);
                }
            }
        }
    }
    if patch.len() < 6 {
        return None;
    }
    let c = mesh.node(i);
    let scale = patch
        .iter()
        .map(|&n| mesh.node(n).dist(c))
        .fold(0.0, f64::max)
        .max(1e-300);

    // normal equations for psi ~ c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2
    let mut ata = vec![vec![0.0; 6]; 6];
    let mut atb = vec![0.0; 6];
    for &n in &patch {
        let p = mesh.node(n);
        let x = (p.r - c.r) / scale;
        let y = (p.z - c.z) / scale;
        let row = [1.0, x, y, x * x, x * y, y * y];
        for a in 0..6 {
            for b in 0..6 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * psi[n];
        }
    }
    for d in 0..6 {
        ata[d][d] *= 1.0 + 1e-12;
    }
    let cf = solve_spd_dense(&ata, &atb).ok()?;
    let (c1, c2, c3, c4, c5) = (cf[1], cf[2], cf[3], cf[4], cf[5]);
    let det = 4.0 * c3 * c5 - c4 * c4;
    if det.abs() < 1e-14 * (c3.abs() + c4.abs() + c5.abs()).powi(2).max(1e-300) {
        return None;
    }
    // solve H [x y]^T = -[c1 c2]^T with H = [[2c3, c4], [c4, 2c5]]
    let x = (-c1 * 2.0 * c5 + c2 * c4) / det;
    let y = (-c2 * 2.0 * c3 + c1 * c4) / det;
    if x * x + y * y > 1.44 {
        return None; // critical point escapes the patch
    }
    let value = cf[0] + c1 * x + c2 * y + c3 * x * x + c4 * x * y + c5 * y * y;
    let is_max = det > 0.0 && (2.0 * c3 + 2.0 * c5) < 0.0;
    if det > 0.0 && !is_max {
        return None; // a minimum; neither axis nor X-point
    }
    Some(CriticalPoint {
        location: Point::new(c.r + x * scale, c.z + y * scale),
        value,
        is_max,
    })
}

/// Location and value of the flux maximum (the magnetic axis), refined by a
/// quadratic fit over the maximal node's patch.
pub fn find_axis(mesh: &Mesh, psi: &[f64]) -> Result<(Point, f64)> {
    let mut best: Option<usize> = None;
    let mut bnd_max = f64::NEG_INFINITY;
    for i in 0..mesh.node_count() {
        if mesh.is_boundary_node(i) {
            bnd_max = bnd_max.max(psi[i]);
        } else if best.map(|b| psi[i] > psi[b]).unwrap_or(true) {
            best = Some(i);
        }
    }
    let imax = best.ok_or(GsError::NoInteriorMaximum)?;
    if psi[imax] <= bnd_max {
        return Err(GsError::NoInteriorMaximum);
    }
    let nodal_max = psi[imax];
    match patch_quadratic_fit(mesh, psi, imax) {
        Some(cp) if cp.is_max => Ok((cp.location, cp.value.max(nodal_max))),
        _ => Ok((mesh.node(imax), nodal_max)),
    }
}

/// All saddle points of the P1 field: patch sign-change detection refined by
/// the local quadratic fit.
pub fn find_saddle_points(mesh: &Mesh, psi: &[f64]) -> Vec<(Point, f64)> {
    let mut out = Vec::new();
    for i in 0..mesh.node_count() {
        if mesh.is_boundary_node(i) {
            continue;
        }
        let mut ring = mesh.node_neighbors(i);
        let c = mesh.node(i);
        ring.sort_by(|&a, &b| {
            let pa = mesh.node(a);
            let pb = mesh.node(b);
            let ta = (pa.z - c.z).atan2(pa.r - c.r);
            let tb = (pb.z - c.z).atan2(pb.r - c.r);
            ta.partial_cmp(&tb).unwrap()
        });
        if ring.len() < 4 {
            continue;
        }
        let mut changes = 0usize;
        for k in 0..ring.len() {
            let a = psi[ring[k]] - psi[i];
            let b = psi[ring[(k + 1) % ring.len()]] - psi[i];
            let sa = if a >= 0.0 { 1 } else { -1 };
            let sb = if b >= 0.0 { 1 } else { -1 };
            if sa != sb {
                changes += 1;
            }
        }
        if changes < 4 {
            continue;
        }
        match patch_quadratic_fit(mesh, psi, i) {
            Some(cp) if !cp.is_max => out.push((cp.location, cp.value)),
            _ => out.push((mesh.node(i), psi[i])),
        }
    }
    out
}

/// Boundary flux: the largest qualifying saddle value (X-point), else the
/// wall maximum (limiter). Returns (psi_b, kind, x_point, tie_warning).
pub fn find_boundary_flux(
    mesh: &Mesh,
    psi: &[f64],
    psi_axis: f64,
) -> (f64, BoundaryKind, Option<Point>, Option<String>) {
    let bnd_min = mesh
        .boundary_nodes()
        .iter()
        .map(|&b| psi[b])
        .fold(f64::INFINITY, f64::min);
    let bnd_max = mesh
        .boundary_nodes()
        .iter()
        .map(|&b| psi[b])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut qualifying: Vec<(Point, f64)> = find_saddle_points(mesh, psi)
        .into_iter()
        .filter(|&(_, v)| v > bnd_min && v < psi_axis)
        .collect();
    qualifying.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    if let Some(&(xp, v)) = qualifying.first() {
        // the largest saddle value gives the smallest plasma
        let mut warning = None;
        if qualifying.len() > 1 {
            let second = qualifying[1].1;
            if (v - second).abs() < 1e-6 * (psi_axis - v).abs().max(1e-300) {
                warning = Some(format!(
                    "saddle tie-break: kept psi_b = {v:.6e}, runner-up {second:.6e}"
                ));
            }
        }
        (v, BoundaryKind::XPoint, Some(xp), warning)
    } else {
        (bnd_max, BoundaryKind::Limiter, None, None)
    }
}

/// psibar = (psi - psi_axis) / (psi_b - psi_axis); > 1 outside the plasma.
pub fn normalize_flux(psi: &[f64], psi_axis: f64, psi_b: f64) -> Result<Vec<f64>> {
    let denom = psi_b - psi_axis;
    if denom.abs() < 1e-14 * psi_axis.abs().max(psi_b.abs()).max(1.0) {
        return Err(GsError::DegenerateFlux);
    }
    Ok(psi.iter().map(|&v| (v - psi_axis) / denom).collect())
}

/// Fraction of each triangle covered by {psibar <= 1}, exact for the linear
/// interpolant.
pub fn plasma_mask(mesh: &Mesh, psibar: &[f64]) -> Vec<f64> {
    (0..mesh.triangle_count())
        .map(|t| {
            let tri = mesh.triangle(t);
            let v = [psibar[tri[0]], psibar[tri[1]], psibar[tri[2]]];
            let below = v.iter().filter(|&&x| x < 1.0).count();
            match below {
                3 => 1.0,
                0 => 0.0,
                _ => {
                    let pts = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
                    clipped_fraction(&pts, &v)
                }
            }
        })
        .collect()
}

/// Fraction of the triangle where the linear field is below 1.
fn clipped_fraction(pts: &[Point; 3], v: &[f64; 3]) -> f64 {
    let mut poly: Vec<Point> = Vec::with_capacity(4);
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        if v[a] < 1.0 {
            poly.push(pts[a]);
        }
        if (v[a] < 1.0) != (v[b] < 1.0) {
            let t = (1.0 - v[a]) / (v[b] - v[a]);
            poly.push(pts[a] + (pts[b] - pts[a]) * t);
        }
    }
    if poly.len() < 3 {
        return 0.0;
    }
    let total = polygon_area([pts[0], pts[1], pts[2]].as_ref());
    (polygon_area(&poly) / total).clamp(0.0, 1.0)
}

/// One chain of level-line segments (marching triangles).
struct Chain {
    points: Vec<Point>,
    closed: bool,
}

fn extract_chains(mesh: &Mesh, field: &[f64], level: f64) -> Vec<Chain> {
    let nt = mesh.triangle_count();
    // a triangle is crossed when its vertices straddle the level
    let above = |n: usize| field[n] >= level;
    // crossing point on edge (a, b)
    let crossing = |a: usize, b: usize| -> Point {
        let t = (level - field[a]) / (field[b] - field[a]);
        mesh.node(a) + (mesh.node(b) - mesh.node(a)) * t
    };
    // for each crossed triangle: the two local edge indices that are crossed
    let crossed_edges = |t: usize| -> Option<[usize; 2]> {
        let tri = mesh.triangle(t);
        let mut es = Vec::with_capacity(2);
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            if above(a) != above(b) {
                es.push(k);
            }
        }
        if es.len() == 2 {
            Some([es[0], es[1]])
        } else {
            None
        }
    };

    let mut visited = vec![false; nt];
    let mut chains = Vec::new();
    for start in 0..nt {
        if visited[start] || crossed_edges(start).is_none() {
            continue;
        }
        // walk forward from `start`, then backward if the chain is open
        let mut pts: std::collections::VecDeque<Point> = std::collections::VecDeque::new();
        let mut closed = false;
        for dir in 0..2 {
            let mut t = start;
            let mut enter: Option<usize> = None; // local edge we entered through
            if dir == 1 {
                if closed {
                    break;
                }
                // second pass: walk out the other side of `start`
                visited[start] = false;
            }
            loop {
                if visited[t] {
                    if t == start && dir == 0 && pts.len() > 2 {
                        closed = true;
                    }
                    break;
                }
                visited[t] = true;
                let es = match crossed_edges(t) {
                    Some(e) => e,
                    None => break,
                };
                let exit = match enter {
                    None => {
                        if dir == 0 {
                            // seed: emit both crossing points
                            let tri = mesh.triangle(t);
                            let p0 = crossing(tri[(es[0] + 1) % 3], tri[(es[0] + 2) % 3]);
                            let p1 = crossing(tri[(es[1] + 1) % 3], tri[(es[1] + 2) % 3]);
                            pts.push_back(p0);
                            pts.push_back(p1);
                            es[1]
                        } else {
                            // backward seed: leave through the other edge
                            es[0]
                        }
                    }
                    Some(e_in) => {
                        let e_out = if es[0] == e_in { es[1] } else { es[0] };
                        let tri = mesh.triangle(t);
                        let p = crossing(tri[(e_out + 1) % 3], tri[(e_out + 2) % 3]);
                        if dir == 0 {
                            pts.push_back(p);
                        } else {
                            pts.push_front(p);
                        }
                        e_out
                    }
                };
                match mesh.neighbors_of(t)[exit] {
                    Some(next) => {
                        // find which local edge of `next` is the shared one
                        let tri_t = mesh.triangle(t);
                        let (sa, sb) = (tri_t[(exit + 1) % 3], tri_t[(exit + 2) % 3]);
                        let tri_n = mesh.triangle(next);
                        let mut shared = 0usize;
                        for k in 0..3 {
                            let a = tri_n[(k + 1) % 3];
                            let b = tri_n[(k + 2) % 3];
                            if (a == sa && b == sb) || (a == sb && b == sa) {
                                shared = k;
                                break;
                            }
                        }
                        t = next;
                        enter = Some(shared);
                    }
                    None => break, // exits through the wall
                }
            }
        }
        let mut points: Vec<Point> = pts.into_iter().collect();
        // drop consecutive duplicates
        points.dedup_by(|a, b| a.dist(*b) < 1e-14);
        if points.len() >= 2 {
            chains.push(Chain { points, closed });
        }
    }
    chains
}

/// Marching-triangles level line of the P1 field, returned as a closed
/// counterclockwise polyline enclosing `axis`. For the separatrix level in
/// X-point topology the open chain is clipped at the X-point.
pub fn extract_contour(
    mesh: &Mesh,
    field: &[f64],
    level: f64,
    axis: Point,
    x_point: Option<Point>,
) -> Result<Vec<Point>> {
    let chains = extract_chains(mesh, field, level);

    // closed chains that enclose the axis: keep the smallest
    let mut best: Option<Vec<Point>> = None;
    for ch in &chains {
        if ch.closed && point_in_polygon(axis, &ch.points) {
            let a = polygon_area(&ch.points).abs();
            if best
                .as_ref()
                .map(|b| a < polygon_area(b).abs())
                .unwrap_or(true)
            {
                best = Some(ch.points.clone());
            }
        }
    }
    if let Some(mut pts) = best {
        if polygon_area(&pts) < 0.0 {
            pts.reverse();
        }
        return Ok(pts);
    }

    // open chains: clip at the X-point, or close a small limiter gap
    let h = mesh.median_edge();
    for ch in &chains {
        if ch.closed {
            continue;
        }
        if let Some(xp) = x_point {
            if let Some(pts) = clip_open_chain_at_x(&ch.points, xp, axis) {
                return Ok(pts);
            }
        }
        let pts = &ch.points;
        if pts.first().unwrap().dist(*pts.last().unwrap()) < 4.0 * h
            && point_in_polygon(axis, pts)
        {
            let mut out = pts.clone();
            if polygon_area(&out) < 0.0 {
                out.reverse();
            }
            return Ok(out);
        }
    }
    Err(GsError::OpenContour { level })
}

/// Keep the part of an open separatrix chain that winds around the axis and
/// close it through the X-point.
fn clip_open_chain_at_x(pts: &[Point], xp: Point, axis: Point) -> Option<Vec<Point>> {
    if pts.len() < 8 {
        return None;
    }
    let d: Vec<f64> = pts.iter().map(|p| p.dist(xp)).collect();
    // local minima of the distance to the X-point
    let mut minima: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        let prev = if i == 0 { f64::INFINITY } else { d[i - 1] };
        let next = if i + 1 == pts.len() {
            f64::INFINITY
        } else {
            d[i + 1]
        };
        if d[i] <= prev && d[i] <= next {
            minima.push(i);
        }
    }
    if minima.len() < 2 {
        return None;
    }
    minima.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let (mut i1, mut i2) = (minima[0], minima[1]);
    if i1 > i2 {
        std::mem::swap(&mut i1, &mut i2);
    }
    if i2 - i1 < 4 {
        return None;
    }
    let mut out: Vec<Point> = pts[i1..=i2].to_vec();
    out.push(xp);
    if !point_in_polygon(axis, &out) {
        return None;
    }
    if polygon_area(&out) < 0.0 {
        out.reverse();
    }
    Some(out)
}

impl FluxState {
    /// Full topology pipeline for a nodal flux field. Fields written with
    /// the opposite sign convention (interior minimum) are negated on
    /// ingest and flagged.
    pub fn from_psi(mesh: &Mesh, psi: Vec<f64>) -> Result<FluxState> {
        let mut psi = psi;
        let mut warnings = Vec::new();
        let mut sign_flipped = false;
        if find_axis(mesh, &psi).is_err() {
            let negated: Vec<f64> = psi.iter().map(|v| -v).collect();
            if find_axis(mesh, &negated).is_ok() {
                psi = negated;
                sign_flipped = true;
                warnings.push("input flux sign convention flipped on ingest".into());
            }
        }
        let (axis, psi_axis) = find_axis(mesh, &psi)?;
        let (psi_b, kind, x_point, tie) = find_boundary_flux(mesh, &psi, psi_axis);
        if let Some(w) = tie {
            warnings.push(w);
        }
        let psibar = normalize_flux(&psi, psi_axis, psi_b)?;
        let mask = plasma_mask(mesh, &psibar);
        // separatrix contour, with a small inset ladder as a fallback for
        // marginal discrete topologies
        let mut boundary_contour = None;
        for &lvl in &[1.0, 1.0 - 1e-6, 1.0 - 1e-3, 1.0 - 1e-2] {
            match extract_contour(mesh, &psibar, lvl, axis, x_point) {
                Ok(c) => {
                    if lvl < 1.0 {
                        warnings.push(format!(
                            "plasma boundary contour extracted at inset level {lvl}"
                        ));
                    }
                    boundary_contour = Some(c);
                    break;
                }
                Err(_) => continue,
            }
        }
        let boundary_contour =
            boundary_contour.ok_or(GsError::OpenContour { level: 1.0 })?;
        Ok(FluxState {
            psi,
            axis,
            psi_axis,
            psi_b,
            kind,
            x_point,
            psibar,
            mask,
            boundary_contour,
            sign_flipped,
            warnings,
        })
    }

    /// Synthetic circular topology used to bootstrap cold starts, where the
    /// vacuum field has no interior maximum yet.
    pub fn synthetic_circular(mesh: &Mesh, center: Point, radius: f64) -> FluxState {
        let psi: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|p| -(p.dist2(center)) / (radius * radius))
            .collect();
        let psibar: Vec<f64> = psi.iter().map(|v| -v).collect();
        let mask = plasma_mask(mesh, &psibar);
        let n_pts = 64;
        let boundary_contour = (0..n_pts)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n_pts as f64;
                Point::new(center.r + radius * t.cos(), center.z + radius * t.sin())
            })
            .collect();
        FluxState {
            psi,
            axis: center,
            psi_axis: 0.0,
            psi_b: -1.0,
            kind: BoundaryKind::Limiter,
            x_point: None,
            psibar,
            mask,
            boundary_contour,
            sign_flipped: false,
            warnings: vec!["cold start: synthetic circular plasma topology".into()],
        }
    }

    /// Level line of the normalized flux through stored topology hints.
    pub fn contour(&self, mesh: &Mesh, level: f64) -> Result<Vec<Point>> {
        extract_contour(mesh, &self.psibar, level, self.axis, self.x_point)
    }

    /// Interpolated normalized flux at a point, if inside the domain.
    pub fn psibar_at(&self, mesh: &Mesh, p: Point) -> Option<f64> {
        mesh.locate(p).map(|loc| mesh.value_at(&self.psibar, &loc))
    }
}
