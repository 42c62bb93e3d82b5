//! Shared helpers for the test suites. Not part of the public API surface.
#![doc(hidden)]

use crate::geometry::Point;
use crate::mesh::Mesh;

/// Structured rectangular mesh with a center node per cell (four triangles
/// each). Exactly mirror-symmetric about the rectangle mid-plane, which the
/// shape-symmetry tests rely on.
pub fn structured_rect_mesh(r0: f64, r1: f64, z0: f64, z1: f64, nr: usize, nz: usize) -> Mesh {
    let mut nodes = Vec::new();
    let idx = |i: usize, j: usize| j * (nr + 1) + i;
    for j in 0..=nz {
        for i in 0..=nr {
            nodes.push(Point::new(
                r0 + (r1 - r0) * i as f64 / nr as f64,
                z0 + (z1 - z0) * j as f64 / nz as f64,
            ));
        }
    }
    let grid_count = nodes.len();
    let mut triangles = Vec::new();
    for j in 0..nz {
        for i in 0..nr {
            let c = nodes.len();
            nodes.push(Point::new(
                r0 + (r1 - r0) * (i as f64 + 0.5) / nr as f64,
                z0 + (z1 - z0) * (j as f64 + 0.5) / nz as f64,
            ));
            let (a, b, d, e) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
            triangles.push([d, e, c]);
            triangles.push([e, a, c]);
        }
    }
    let _ = grid_count;
    let mut boundary = Vec::new();
    for i in 0..=nr {
        boundary.push(idx(i, 0));
    }
    for j in 1..=nz {
        boundary.push(idx(nr, j));
    }
    for i in (0..nr).rev() {
        boundary.push(idx(i, nz));
    }
    for j in (1..nz).rev() {
        boundary.push(idx(0, j));
    }
    Mesh::new(nodes, triangles, boundary).expect("structured mesh is valid")
}

/// Deterministic uniform samples in [-1, 1].
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng(seed)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    }
}
