//! Triangulated poloidal cross-section of the vacuum vessel: geometry,
//! validation, point location and P1 interpolation services used by every
//! other module. The mesh is immutable after construction and safe to share
//! across threads.

mod delaunay;
mod io;
mod locate;

pub use delaunay::generate_vessel_mesh;
pub use io::{load_mesh, parse_mesh, save_mesh};

use crate::error::{GsError, Result};
use crate::geometry::{polygon_area, triangle_area, Point};
use locate::LocateGrid;

/// Result of point location: containing triangle plus barycentric weights
/// (nonnegative up to a boundary tolerance, summing to 1).
#[derive(Debug, Clone, Copy)]
pub struct PointLocation {
    pub triangle: usize,
    pub bary: [f64; 3],
}

pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    boundary_normals: Vec<Point>,
    is_boundary: Vec<bool>,
    areas: Vec<f64>,
    /// neighbor across the edge opposite vertex k of each triangle
    neighbors: Vec<[Option<usize>; 3]>,
    /// triangles incident to each node, unordered
    node_triangles: Vec<Vec<usize>>,
    grid: LocateGrid,
    median_edge: f64,
}

impl Mesh {
    /// Validate raw arrays and build the derived structures. Triangles with
    /// negative signed area are reoriented; every other invariant violation
    /// is an error.
    pub fn new(
        nodes: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary_nodes: Vec<usize>,
    ) -> Result<Mesh> {
        if nodes.len() < 3 || triangles.is_empty() {
            return Err(GsError::Topology("mesh needs at least one triangle".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !(p.r > 0.0) || !p.r.is_finite() || !p.z.is_finite() {
                return Err(GsError::Geometry(format!(
                    "node {i} has r = {} (the axisymmetric domain requires r > 0)",
                    p.r
                )));
            }
        }
        let nn = nodes.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nn {
                    return Err(GsError::Topology(format!(
                        "triangle {t} references node {v} out of {nn}"
                    )));
                }
            }
            let mut a = triangle_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
                a = -a;
            }
            if a <= 0.0 {
                return Err(GsError::Topology(format!("triangle {t} has zero area")));
            }
            areas.push(a);
        }

        // edge -> (count, [tri, vertex-opposite]); manifoldness check
        let mut edge_map: std::collections::HashMap<(usize, usize), Vec<(usize, usize)>> =
            std::collections::HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push((t, k));
            }
        }
        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut boundary_edges: std::collections::HashMap<usize, Vec<usize>> =
            std::collections::HashMap::new();
        for (&(a, b), owners) in &edge_map {
            match owners.len() {
                1 => {
                    boundary_edges.entry(a).or_default().push(b);
                    boundary_edges.entry(b).or_default().push(a);
                }
                2 => {
                    let (t0, k0) = owners[0];
                    let (t1, k1) = owners[1];
                    neighbors[t0][k0] = Some(t1);
                    neighbors[t1][k1] = Some(t0);
                }
                n => {
                    return Err(GsError::Topology(format!(
                        "edge ({a},{b}) shared by {n} triangles (non-manifold)"
                    )))
                }
            }
        }

        // the boundary edges must trace a single closed loop
        for (node, nbrs) in &boundary_edges {
            if nbrs.len() != 2 {
                return Err(GsError::Topology(format!(
                    "boundary node {node} has {} boundary edges (open or branching boundary)",
                    nbrs.len()
                )));
            }
        }
        if boundary_nodes.len() != boundary_edges.len() {
            return Err(GsError::Topology(format!(
                "boundary list has {} nodes but the triangulation boundary has {}",
                boundary_nodes.len(),
                boundary_edges.len()
            )));
        }
        for w in boundary_nodes.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            if !edge_map.contains_key(&key) || edge_map[&key].len() != 1 {
                return Err(GsError::Topology(format!(
                    "consecutive boundary nodes {} and {} are not joined by a boundary edge",
                    w[0], w[1]
                )));
            }
        }
        let wrap = (
            boundary_nodes[0].min(*boundary_nodes.last().unwrap()),
            boundary_nodes[0].max(*boundary_nodes.last().unwrap()),
        );
        if boundary_nodes.len() > 2 && edge_map.get(&wrap).map(|o| o.len()) != Some(1) {
            return Err(GsError::Topology(
                "boundary list does not close into a loop".into(),
            ));
        }

        // orient the boundary counterclockwise
        let mut boundary_nodes = boundary_nodes;
        let poly: Vec<Point> = boundary_nodes.iter().map(|&i| nodes[i]).collect();
        if polygon_area(&poly) < 0.0 {
            boundary_nodes.reverse();
        }

        let mut is_boundary = vec![false; nn];
        for &b in &boundary_nodes {
            is_boundary[b] = true;
        }

        // outward normal per boundary node: bisector of the adjacent edge normals
        let nb = boundary_nodes.len();
        let mut boundary_normals = Vec::with_capacity(nb);
        for k in 0..nb {
            let prev = nodes[boundary_nodes[(k + nb - 1) % nb]];
            let cur = nodes[boundary_nodes[k]];
            let next = nodes[boundary_nodes[(k + 1) % nb]];
            let edge_normal = |a: Point, b: Point| -> Point {
                // CCW polygon: outward is the tangent rotated by -90 degrees
                Point::new(b.z - a.z, -(b.r - a.r)).normalized()
            };
            let n = edge_normal(prev, cur) + edge_normal(cur, next);
            boundary_normals.push(n.normalized());
        }

        let mut node_triangles = vec![Vec::new(); nn];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri.iter() {
                node_triangles[v].push(t);
            }
        }

        let mut edge_lens: Vec<f64> = edge_map
            .keys()
            .map(|&(a, b)| nodes[a].dist(nodes[b]))
            .collect();
        edge_lens.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let median_edge = edge_lens[edge_lens.len() / 2];

        let grid = LocateGrid::build(&nodes, &triangles);

        Ok(Mesh {
            nodes,
            triangles,
            boundary_nodes,
            boundary_normals,
            is_boundary,
            areas,
            neighbors,
            node_triangles,
            grid,
            median_edge,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_normal(&self, k: usize) -> Point {
        self.boundary_normals[k]
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn triangles_of_node(&self, i: usize) -> &[usize] {
        &self.node_triangles[i]
    }

    pub fn neighbors_of(&self, t: usize) -> [Option<usize>; 3] {
        self.neighbors[t]
    }

    /// Median edge length; reference spacing for chord quadrature.
    pub fn median_edge(&self) -> f64 {
        self.median_edge
    }

    /// Closed boundary polygon, counterclockwise.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        self.boundary_nodes.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        Point::new(
            (self.nodes[a].r + self.nodes[b].r + self.nodes[c].r) / 3.0,
            (self.nodes[a].z + self.nodes[b].z + self.nodes[c].z) / 3.0,
        )
    }

    /// Barycentric coordinates of p in triangle t (signed; sums to 1).
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let inv = 1.0 / (2.0 * self.areas[t]);
        [
            triangle_area(p, b, c) * 2.0 * inv,
            triangle_area(a, p, c) * 2.0 * inv,
            triangle_area(a, b, p) * 2.0 * inv,
        ]
    }

    /// Locate a point: walk through triangles from a grid-seeded start, with
    /// an exhaustive cell-candidate fallback. Returns None when outside.
    pub fn locate(&self, p: Point) -> Option<PointLocation> {
        const TOL: f64 = 1e-9;
        if let Some(mut t) = self.grid.seed(p) {
            for _ in 0..2 * self.triangles.len() {
                let bary = self.barycentric(t, p);
                let (mut worst, mut worst_k) = (bary[0], 0usize);
                for k in 1..3 {
                    if bary[k] < worst {
                        worst = bary[k];
                        worst_k = k;
                    }
                }
                if worst >= -TOL {
                    return Some(PointLocation {
                        triangle: t,
                        bary: clamp_bary(bary),
                    });
                }
                match self.neighbors[t][worst_k] {
                    Some(next) => t = next,
                    None => break,
                }
            }
        }
        // fallback: every triangle overlapping the cell of p
        for &t in self.grid.candidates(p) {
            let t = t as usize;
            let bary = self.barycentric(t, p);
            if bary.iter().all(|&w| w >= -TOL) {
                return Some(PointLocation {
                    triangle: t,
                    bary: clamp_bary(bary),
                });
            }
        }
        None
    }

    /// P1 interpolation of a nodal field at p; exact for affine fields.
    pub fn interpolate(&self, nodal: &[f64], p: Point) -> Result<f64> {
        let loc = self.locate(p).ok_or(GsError::OutsideDomain)?;
        Ok(self.value_at(nodal, &loc))
    }

    pub fn value_at(&self, nodal: &[f64], loc: &PointLocation) -> f64 {
        let [i, j, k] = self.triangles[loc.triangle];
        loc.bary[0] * nodal[i] + loc.bary[1] * nodal[j] + loc.bary[2] * nodal[k]
    }

    /// Constant P1 gradient of a nodal field on triangle t.
    pub fn gradient(&self, t: usize, nodal: &[f64]) -> Point {
        let g = self.shape_gradients(t);
        let [i, j, k] = self.triangles[t];
        Point::new(
            nodal[i] * g[0].r + nodal[j] * g[1].r + nodal[k] * g[2].r,
            nodal[i] * g[0].z + nodal[j] * g[1].z + nodal[k] * g[2].z,
        )
    }

    /// Gradients of the three P1 shape functions on triangle t.
    pub fn shape_gradients(&self, t: usize) -> [Point; 3] {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let inv2a = 1.0 / (2.0 * self.areas[t]);
        [
            Point::new((b.z - c.z) * inv2a, (c.r - b.r) * inv2a),
            Point::new((c.z - a.z) * inv2a, (a.r - c.r) * inv2a),
            Point::new((a.z - b.z) * inv2a, (b.r - a.r) * inv2a),
        ]
    }

    /// Area-weighted recovery of the P1 gradient at the nodes: averages the
    /// piecewise-constant triangle gradients over each node's patch. The
    /// recovered field is continuous and markedly smoother along contours.
    pub fn recovered_gradient(&self, nodal: &[f64]) -> Vec<Point> {
        let mut acc = vec![Point::new(0.0, 0.0); self.nodes.len()];
        let mut wsum = vec![0.0; self.nodes.len()];
        for t in 0..self.triangles.len() {
            let g = self.gradient(t, nodal);
            let w = self.areas[t];
            for &v in &self.triangles[t] {
                acc[v] = acc[v] + g * w;
                wsum[v] += w;
            }
        }
        for (a, w) in acc.iter_mut().zip(&wsum) {
            *a = *a * (1.0 / w);
        }
        acc
    }

    /// Nodes adjacent to `i` through shared triangles (1-ring), unordered.
    pub fn node_neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &t in &self.node_triangles[i] {
            for &v in &self.triangles[t] {
                if v != i && !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

fn clamp_bary(mut b: [f64; 3]) -> [f64; 3] {
    for w in b.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    let s = b[0] + b[1] + b[2];
    [b[0] / s, b[1] / s, b[2] / s]
}
