//! Uniform background grid accelerating point location: each cell stores the
//! triangles whose bounding box overlaps it, plus one seed triangle to start
//! walks from.

use crate::geometry::Point;

pub struct LocateGrid {
    rmin: f64,
    zmin: f64,
    inv_dr: f64,
    inv_dz: f64,
    nr: usize,
    nz: usize,
    cells: Vec<Vec<u32>>,
}

impl LocateGrid {
    pub fn build(nodes: &[Point], triangles: &[[usize; 3]]) -> LocateGrid {
        let mut rmin = f64::INFINITY;
        let mut rmax = f64::NEG_INFINITY;
        let mut zmin = f64::INFINITY;
        let mut zmax = f64::NEG_INFINITY;
        for p in nodes {
            rmin = rmin.min(p.r);
            rmax = rmax.max(p.r);
            zmin = zmin.min(p.z);
            zmax = zmax.max(p.z);
        }
        let pad = 1e-9 * (rmax - rmin + zmax - zmin).max(1e-300);
        rmin -= pad;
        zmin -= pad;
        rmax += pad;
        zmax += pad;
        let n_target = (triangles.len() as f64).sqrt().ceil() as usize;
        let nr = n_target.max(1);
        let nz = n_target.max(1);
        let dr = (rmax - rmin) / nr as f64;
        let dz = (zmax - zmin) / nz as f64;
        let mut cells = vec![Vec::new(); nr * nz];
        for (t, tri) in triangles.iter().enumerate() {
            let (mut r0, mut r1, mut z0, mut z1) = (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            );
            for &v in tri {
                r0 = r0.min(nodes[v].r);
                r1 = r1.max(nodes[v].r);
                z0 = z0.min(nodes[v].z);
                z1 = z1.max(nodes[v].z);
            }
            let i0 = (((r0 - rmin) / dr) as usize).min(nr - 1);
            let i1 = (((r1 - rmin) / dr) as usize).min(nr - 1);
            let j0 = (((z0 - zmin) / dz) as usize).min(nz - 1);
            let j1 = (((z1 - zmin) / dz) as usize).min(nz - 1);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    cells[j * nr + i].push(t as u32);
                }
            }
        }
        LocateGrid {
            rmin,
            zmin,
            inv_dr: 1.0 / dr,
            inv_dz: 1.0 / dz,
            nr,
            nz,
            cells,
        }
    }

    fn cell_of(&self, p: Point) -> Option<usize> {
        let i = (p.r - self.rmin) * self.inv_dr;
        let j = (p.z - self.zmin) * self.inv_dz;
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nr || j >= self.nz {
            return None;
        }
        Some(j * self.nr + i)
    }

    /// A triangle near p to start walking from.
    pub fn seed(&self, p: Point) -> Option<usize> {
        let c = self.cell_of(p)?;
        self.cells[c].first().map(|&t| t as usize)
    }

    /// All triangles whose bounding box overlaps the cell containing p.
    pub fn candidates(&self, p: Point) -> &[u32] {
        match self.cell_of(p) {
            Some(c) => &self.cells[c],
            None => &[],
        }
    }
}
