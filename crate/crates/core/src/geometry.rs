//! Small planar-geometry helpers shared across the toolkit: points in the
//! poloidal (r, z) plane, polygon predicates and closed-polyline utilities.

use crate::error::{GsError, Result};

/// A point of the poloidal cross-section, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub r: f64,
    pub z: f64,
}

impl Point {
    pub fn new(r: f64, z: f64) -> Self {
        Point { r, z }
    }

    pub fn dist(&self, other: Point) -> f64 {
        ((self.r - other.r).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn dist2(&self, other: Point) -> f64 {
        (self.r - other.r).powi(2) + (self.z - other.z).powi(2)
    }

    pub fn norm(&self) -> f64 {
        (self.r * self.r + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Point {
        let n = self.norm();
        Point::new(self.r / n, self.z / n)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.r + o.r, self.z + o.z)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.r - o.r, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.r * s, self.z * s)
    }
}

/// 2-D cross product (signed parallelogram area of the two vectors).
pub fn cross(a: Point, b: Point) -> f64 {
    a.r * b.z - a.z * b.r
}

pub fn dot(a: Point, b: Point) -> f64 {
    a.r * b.r + a.z * b.z
}

/// Signed area of the triangle (a, b, c); positive when counterclockwise.
pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(b - a, c - a)
}

/// Signed area of a polygon given without repetition of the first vertex.
pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += cross(a, b);
    }
    0.5 * acc
}

/// Perimeter of a closed polygon given without repetition of the first vertex.
pub fn polygon_perimeter(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| pts[i].dist(pts[(i + 1) % n])).sum()
}

/// Even-odd crossing test; points on an edge may land on either side.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if ((pi.z > p.z) != (pj.z > p.z))
            && (p.r < (pj.r - pi.r) * (p.z - pi.z) / (pj.z - pi.z) + pi.r)
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the segment [a, b].
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (dot(p - a, ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Minimum distance from `p` to the boundary of a closed polygon.
pub fn dist_to_polygon(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| dist_point_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Directed Hausdorff distance from the vertices of `a` to the polyline of
/// `b` (both treated as closed), measured point-to-segment.
fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|&p| dist_to_polygon(p, b))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two closed polylines.
pub fn hausdorff_distance(a: &[Point], b: &[Point]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Resample a closed polyline at (near-)uniform arc spacing `target_h`.
/// Original vertices are kept when the cumulative arc length hits them
/// exactly, so polygonal contours keep their corners when `target_h`
/// divides the edge lengths.
pub fn resample_closed(poly: &[Point], target_h: f64) -> Result<Vec<Point>> {
    if poly.len() < 3 {
        return Err(GsError::Geometry(
            "contour needs at least 3 points".into(),
        ));
    }
    if target_h <= 0.0 {
        return Err(GsError::Geometry("target spacing must be positive".into()));
    }
    let total = polygon_perimeter(poly);
    if total <= 0.0 {
        return Err(GsError::Geometry("degenerate contour (zero length)".into()));
    }
    let n = ((total / target_h).round() as usize).max(3);
    let spacing = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    let mut seg_start = 0.0; // arc length at the start of segment `seg`
    let npoly = poly.len();
    let seg_len =
        |i: usize| -> f64 { poly[i].dist(poly[(i + 1) % npoly]) };
    let mut cur_len = seg_len(0);
    for k in 0..n {
        let s = k as f64 * spacing;
        while s > seg_start + cur_len + 1e-12 * total {
            seg_start += cur_len;
            seg += 1;
            cur_len = seg_len(seg % npoly);
        }
        let a = poly[seg % npoly];
        let b = poly[(seg + 1) % npoly];
        let t = if cur_len > 0.0 {
            ((s - seg_start) / cur_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(a + (b - a) * t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_area_and_perimeter() {
        let sq = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        assert!((polygon_perimeter(&sq) - 4.0).abs() < 1e-15);
        assert!(point_in_polygon(Point::new(1.5, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(2.5, 0.5), &sq));
    }

    #[test]
    fn resample_square_keeps_corners() {
        let sq = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let pts = resample_closed(&sq, 0.5).unwrap();
        assert_eq!(pts.len(), 8);
        // corners survive because 0.5 divides every edge
        for c in &sq {
            assert!(pts.iter().any(|p| p.dist(*c) < 1e-12));
        }
        assert!((polygon_area(&pts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_of_shifted_square() {
        let sq: Vec<Point> = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let shifted: Vec<Point> = sq.iter().map(|p| Point::new(p.r + 0.1, p.z)).collect();
        let d = hausdorff_distance(&sq, &shifted);
        assert!((d - 0.1).abs() < 1e-12, "d = {d}");
    }
}
