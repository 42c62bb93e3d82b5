//! Vessel mesh generation: resample the wall contour, seed a hexagonal
//! lattice of interior points, Bowyer-Watson triangulate and keep the
//! triangles inside the contour. Incremental insertion with cavity
//! adjacency keeps construction near-linear in the point count.

use super::Mesh;
use crate::error::{GsError, Result};
use crate::geometry::{
    dist_to_polygon, point_in_polygon, polygon_area, resample_closed, Point,
};

struct Tri {
    v: [usize; 3],
    nbr: [Option<usize>; 3],
    cc: Point,
    r2: f64,
    alive: bool,
}

struct Triangulator {
    verts: Vec<Point>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    last: usize,
}

fn circumcircle(a: Point, b: Point, c: Point) -> (Point, f64) {
    let br = b - a;
    let cr = c - a;
    let d = 2.0 * (br.r * cr.z - br.z * cr.r);
    if d.abs() < 1e-300 {
        return (a, f64::INFINITY);
    }
    let b2 = br.r * br.r + br.z * br.z;
    let c2 = cr.r * cr.r + cr.z * cr.z;
    let ur = (cr.z * b2 - br.z * c2) / d;
    let uz = (br.r * c2 - cr.r * b2) / d;
    (Point::new(a.r + ur, a.z + uz), ur * ur + uz * uz)
}

impl Triangulator {
    fn new(points: &[Point]) -> Triangulator {
        let mut rmin = f64::INFINITY;
        let mut rmax = f64::NEG_INFINITY;
        let mut zmin = f64::INFINITY;
        let mut zmax = f64::NEG_INFINITY;
        for p in points {
            rmin = rmin.min(p.r);
            rmax = rmax.max(p.r);
            zmin = zmin.min(p.z);
            zmax = zmax.max(p.z);
        }
        let cr = 0.5 * (rmin + rmax);
        let cz = 0.5 * (zmin + zmax);
        let scale = ((rmax - rmin).max(zmax - zmin)).max(1e-12) * 64.0;
        let sup = [
            Point::new(cr, cz + scale),
            Point::new(cr - 0.866 * scale, cz - 0.5 * scale),
            Point::new(cr + 0.866 * scale, cz - 0.5 * scale),
        ];
        let mut verts = sup.to_vec();
        verts.reserve(points.len());
        let (cc, r2) = circumcircle(sup[0], sup[1], sup[2]);
        let tris = vec![Tri {
            v: [0, 1, 2],
            nbr: [None; 3],
            cc,
            r2,
            alive: true,
        }];
        Triangulator {
            verts,
            tris,
            free: Vec::new(),
            last: 0,
        }
    }

    fn orient(&self, a: usize, b: usize, p: Point) -> f64 {
        let pa = self.verts[a];
        let pb = self.verts[b];
        (pb.r - pa.r) * (p.z - pa.z) - (pb.z - pa.z) * (p.r - pa.r)
    }

    /// Walk from `last` to a triangle containing p.
    fn find_containing(&self, p: Point) -> Option<usize> {
        let mut t = self.last;
        if !self.tris[t].alive {
            t = self.tris.iter().position(|x| x.alive)?;
        }
        let max_steps = 4 * self.tris.len() + 16;
        let mut step = 0usize;
        'walk: while step < max_steps {
            step += 1;
            let tri = &self.tris[t];
            for kk in 0..3 {
                let k = (kk + step) % 3;
                let a = tri.v[(k + 1) % 3];
                let b = tri.v[(k + 2) % 3];
                if self.orient(a, b, p) < 0.0 {
                    match tri.nbr[k] {
                        Some(n) => {
                            t = n;
                            continue 'walk;
                        }
                        None => break 'walk,
                    }
                }
            }
            return Some(t);
        }
        // degenerate walk; exhaustive scan
        (0..self.tris.len()).find(|&t| {
            let tri = &self.tris[t];
            tri.alive
                && (0..3).all(|k| {
                    self.orient(tri.v[(k + 1) % 3], tri.v[(k + 2) % 3], p) >= -1e-12
                })
        })
    }

    fn insert(&mut self, p: Point) -> Result<()> {
        let vp = self.verts.len();
        self.verts.push(p);
        let start = self
            .find_containing(p)
            .ok_or_else(|| GsError::Geometry("triangulation walk failed".into()))?;

        // flood fill the cavity of triangles whose circumcircle contains p
        let mut bad = vec![start];
        let mut in_bad = std::collections::HashSet::new();
        in_bad.insert(start);
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                if let Some(n) = self.tris[t].nbr[k] {
                    if !in_bad.contains(&n) {
                        let tri = &self.tris[n];
                        let d2 = tri.cc.dist2(p);
                        if d2 < tri.r2 * (1.0 - 1e-12) {
                            in_bad.insert(n);
                            bad.push(n);
                            stack.push(n);
                        }
                    }
                }
            }
        }

        // cavity boundary: directed edges (a -> b) with their outside triangle
        let mut boundary: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for &t in &bad {
            for k in 0..3 {
                let n = self.tris[t].nbr[k];
                if n.is_none() || !in_bad.contains(&n.unwrap()) {
                    let a = self.tris[t].v[(k + 1) % 3];
                    let b = self.tris[t].v[(k + 2) % 3];
                    boundary.push((a, b, n));
                }
            }
        }
        for &t in &bad {
            self.tris[t].alive = false;
            self.free.push(t);
        }

        // fan of new triangles (vp, a, b)
        let mut by_start: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();
        let mut created: Vec<usize> = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            let (cc, r2) = circumcircle(p, self.verts[a], self.verts[b]);
            let tri = Tri {
                v: [vp, a, b],
                nbr: [outside, None, None],
                cc,
                r2,
                alive: true,
            };
            let idx = match self.free.pop() {
                Some(slot) => {
                    self.tris[slot] = tri;
                    slot
                }
                None => {
                    self.tris.push(tri);
                    self.tris.len() - 1
                }
            };
            if let Some(out) = outside {
                for k in 0..3 {
                    if let Some(n) = self.tris[out].nbr[k] {
                        if in_bad.contains(&n) {
                            let oa = self.tris[out].v[(k + 1) % 3];
                            let ob = self.tris[out].v[(k + 2) % 3];
                            if (oa == b && ob == a) || (oa == a && ob == b) {
                                self.tris[out].nbr[k] = Some(idx);
                            }
                        }
                    }
                }
            }
            by_start.insert(a, idx);
            created.push(idx);
        }
        // wire the fan: edge (b, vp) pairs with the new triangle starting at b,
        // edge (vp, a) with the one ending at a
        for &idx in &created {
            let [_, a, b] = self.tris[idx].v;
            self.tris[idx].nbr[1] = by_start.get(&b).copied(); // opposite a: edge (b, vp)
            let left = created
                .iter()
                .copied()
                .find(|&j| self.tris[j].v[2] == a);
            self.tris[idx].nbr[2] = left; // opposite b: edge (vp, a)
        }
        self.last = created[0];
        Ok(())
    }

    /// Final triangles (vertex indices shifted past the 3 super vertices).
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.tris
            .iter()
            .filter(|t| t.alive && t.v.iter().all(|&v| v >= 3))
            .map(|t| [t.v[0] - 3, t.v[1] - 3, t.v[2] - 3])
            .collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Delaunay-quality triangulation of the interior of a closed contour with
/// edges of roughly `target_h`; boundary nodes lie on the contour.
pub fn generate_vessel_mesh(contour: &[Point], target_h: f64) -> Result<Mesh> {
    let mut contour: Vec<Point> = contour.to_vec();
    if contour.len() > 1 && contour[0].dist(*contour.last().unwrap()) < 1e-12 {
        contour.pop();
    }
    if contour.len() < 3 {
        return Err(GsError::Geometry("degenerate contour: fewer than 3 points".into()));
    }
    for p in &contour {
        if !(p.r > 0.0) {
            return Err(GsError::Geometry(format!(
                "contour point has r = {} <= 0",
                p.r
            )));
        }
    }
    let area = polygon_area(&contour);
    if area.abs() < 1e-12 * target_h * target_h {
        return Err(GsError::Geometry("degenerate contour: zero area".into()));
    }
    if area < 0.0 {
        contour.reverse();
    }

    let boundary = resample_closed(&contour, target_h)?;
    let nb = boundary.len();

    // hexagonal interior lattice anchored at the centroid
    let cen = {
        let n = boundary.len() as f64;
        let mut c = Point::new(0.0, 0.0);
        for p in &boundary {
            c = c + *p;
        }
        Point::new(c.r / n, c.z / n)
    };
    let (mut rmin, mut rmax, mut zmin, mut zmax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &boundary {
        rmin = rmin.min(p.r);
        rmax = rmax.max(p.r);
        zmin = zmin.min(p.z);
        zmax = zmax.max(p.z);
    }
    let row_h = target_h * 3f64.sqrt() / 2.0;
    let clearance = 0.5 * target_h * (1.0 - 1e-9);
    let mut points = boundary.clone();
    let jmax = ((zmax - cen.z) / row_h).ceil() as i64;
    let jmin_row = ((zmin - cen.z) / row_h).floor() as i64;
    for j in jmin_row..=jmax {
        let z = cen.z + j as f64 * row_h;
        let offset = if j.rem_euclid(2) == 1 { 0.5 * target_h } else { 0.0 };
        let imax = ((rmax - cen.r) / target_h).ceil() as i64;
        let imin_col = ((rmin - cen.r) / target_h).floor() as i64;
        for i in imin_col..=imax {
            let r = cen.r + i as f64 * target_h + offset;
            let p = Point::new(r, z);
            if point_in_polygon(p, &boundary) && dist_to_polygon(p, &boundary) >= clearance {
                // tiny deterministic jitter breaks lattice cocircularity
                let h1 = splitmix64((i as u64) << 32 ^ (j as u64) ^ 0x5bd1e995);
                let h2 = splitmix64(h1);
                let jr = ((h1 >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2e-4 * target_h;
                let jz = ((h2 >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2e-4 * target_h;
                points.push(Point::new(r + jr, z + jz));
            }
        }
    }

    let mut tr = Triangulator::new(&points);
    for &p in &points {
        tr.insert(p)?;
    }
    let kept: Vec<[usize; 3]> = tr
        .triangles()
        .into_iter()
        .filter(|t| {
            let c = Point::new(
                (points[t[0]].r + points[t[1]].r + points[t[2]].r) / 3.0,
                (points[t[0]].z + points[t[1]].z + points[t[2]].z) / 3.0,
            );
            point_in_polygon(c, &boundary)
        })
        .collect();
    if kept.is_empty() {
        return Err(GsError::Geometry(
            "triangulation produced no interior triangles".into(),
        ));
    }
    Mesh::new(points, kept, (0..nb).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(center: Point, radius: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Point::new(center.r + radius * t.cos(), center.z + radius * t.sin())
            })
            .collect()
    }

    #[test]
    fn unit_square_coarse() {
        let sq = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let m = generate_vessel_mesh(&sq, 0.5).unwrap();
        assert!(m.triangle_count() >= 8, "got {}", m.triangle_count());
        assert!((m.total_area() - 1.0).abs() < 1e-9, "area {}", m.total_area());
    }

    #[test]
    fn circle_area_converges() {
        let c = circle(Point::new(3.0, 0.0), 0.5, 720);
        let exact = PI * 0.25;
        let m1 = generate_vessel_mesh(&c, 0.05).unwrap();
        let e1 = (m1.total_area() - exact).abs() / exact;
        assert!(e1 < 0.005, "coarse area error {e1}");
        let m2 = generate_vessel_mesh(&c, 0.025).unwrap();
        let e2 = (m2.total_area() - exact).abs() / exact;
        assert!(e2 < e1, "refinement must shrink the area error: {e2} vs {e1}");
    }

    #[test]
    fn triangle_count_scales_inverse_h_squared() {
        let c = circle(Point::new(3.0, 0.0), 0.5, 720);
        let m1 = generate_vessel_mesh(&c, 0.05).unwrap();
        let m2 = generate_vessel_mesh(&c, 0.025).unwrap();
        let ratio = m2.triangle_count() as f64 / m1.triangle_count() as f64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn triangle_areas_sum_to_boundary_polygon_area() {
        let c = circle(Point::new(3.0, 0.0), 0.5, 720);
        let m = generate_vessel_mesh(&c, 0.06).unwrap();
        let poly_area = crate::geometry::polygon_area(&m.boundary_polygon());
        assert!(
            (m.total_area() - poly_area).abs() <= 1e-10 * poly_area,
            "triangulation {} vs polygon {}",
            m.total_area(),
            poly_area
        );
    }

    #[test]
    fn boundary_length_matches_contour() {
        let c = circle(Point::new(3.0, 0.0), 0.5, 720);
        let m = generate_vessel_mesh(&c, 0.05).unwrap();
        let poly = m.boundary_polygon();
        let len = crate::geometry::polygon_perimeter(&poly);
        let contour_len = crate::geometry::polygon_perimeter(&c);
        assert!(
            (len - contour_len).abs() / contour_len < 1e-3,
            "perimeter {len} vs {contour_len}"
        );
    }

    #[test]
    fn rejects_degenerate_contour() {
        let line = vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(generate_vessel_mesh(&line, 0.1).is_err());
    }
}
