use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Straight piece of a discrete crack line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackSegment {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

/// Planar rectangular crack face in 3D: `origin + s*edge_u + t*edge_v`,
/// `s, t` in `[0, 1]`, with orthogonal edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackFace {
    pub origin: [f64; 3],
    pub edge_u: [f64; 3],
    pub edge_v: [f64; 3],
}

/// Initial crack geometry `l`: any union of points, segments and faces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Crack {
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub segments: Vec<CrackSegment>,
    #[serde(default)]
    pub faces: Vec<CrackFace>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn pad(x: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    p
}

impl CrackSegment {
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self, GeometryError> {
        let seg = CrackSegment { a: pad(a), b: pad(b) };
        let d = sub(seg.b, seg.a);
        if !(dot(d, d) > 0.0) {
            return Err(GeometryError::DegenerateCrack);
        }
        Ok(seg)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        let x = pad(x);
        let d = sub(self.b, self.a);
        let t = (dot(sub(x, self.a), d) / dot(d, d)).clamp(0.0, 1.0);
        let foot = [self.a[0] + t * d[0], self.a[1] + t * d[1], self.a[2] + t * d[2]];
        let r = sub(x, foot);
        dot(r, r).sqrt()
    }
}

impl CrackFace {
    pub fn new(origin: [f64; 3], edge_u: [f64; 3], edge_v: [f64; 3]) -> Result<Self, GeometryError> {
        let (uu, vv) = (dot(edge_u, edge_u), dot(edge_v, edge_v));
        if !(uu > 0.0 && vv > 0.0) || dot(edge_u, edge_v).abs() > 1e-12 * (uu * vv).sqrt() {
            return Err(GeometryError::DegenerateCrack);
        }
        Ok(CrackFace { origin, edge_u, edge_v })
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        let r = sub(pad(x), self.origin);
        let s = (dot(r, self.edge_u) / dot(self.edge_u, self.edge_u)).clamp(0.0, 1.0);
        let t = (dot(r, self.edge_v) / dot(self.edge_v, self.edge_v)).clamp(0.0, 1.0);
        let mut q = r;
        for k in 0..3 {
            q[k] -= s * self.edge_u[k] + t * self.edge_v[k];
        }
        dot(q, q).sqrt()
    }
}

impl Crack {
    pub fn segment(a: &[f64], b: &[f64]) -> Result<Self, GeometryError> {
        Ok(Crack { segments: vec![CrackSegment::new(a, b)?], ..Default::default() })
    }

    pub fn point(x: &[f64]) -> Self {
        Crack { points: vec![pad(x)], ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty() && self.faces.is_empty()
    }
}

/// Closest distance from `x` to the crack; `+inf` for an empty crack.
pub fn crack_distance(x: &[f64], crack: &Crack) -> f64 {
    let p = crack.points.iter().map(|p| {
        let r = sub(pad(x), *p);
        dot(r, r).sqrt()
    });
    let s = crack.segments.iter().map(|s| s.distance(x));
    let f = crack.faces.iter().map(|f| f.distance(x));
    p.chain(s).chain(f).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn notch() -> Crack {
        Crack::segment(&[0.0, 0.5], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn on_segment_is_zero() {
        assert_eq!(crack_distance(&[0.3, 0.5], &notch()), 0.0);
    }

    #[test]
    fn perpendicular_offset() {
        assert!((crack_distance(&[0.25, 0.6], &notch()) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn clamps_to_endpoint() {
        assert!((crack_distance(&[0.7, 0.5], &notch()) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn point_crack_in_1d() {
        let c = Crack::point(&[0.0]);
        assert_eq!(crack_distance(&[-0.25], &c), 0.25);
        assert_eq!(crack_distance(&[0.5], &Crack::default()), f64::INFINITY);
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(matches!(CrackSegment::new(&[1.0, 1.0], &[1.0, 1.0]), Err(GeometryError::DegenerateCrack)));
    }

    #[test]
    fn face_distance_in_3d() {
        let f = CrackFace::new([0.0, 0.0, 0.5], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert!((f.distance(&[0.25, 0.3, 0.6]) - 0.1).abs() < 1e-15);
        assert!((f.distance(&[0.8, 0.3, 0.5]) - 0.3).abs() < 1e-15);
    }
}
