//! Gauss–Legendre rules and physical Gauss-point clouds.

use std::io::Write;

use nalgebra::DMatrix;
use num_traits::Float;
use thiserror::Error;

use crate::geometry::presets::Face;
use crate::geometry::{ElementMesh, GeometryError, NurbsPatch};

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("Gauss rule size {0} outside 1..=64")]
    RuleSize(usize),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no boundary cloud for the loaded edge")]
    MissingEdge,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Nodes (ascending) and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre_1d<F: Float>(n: usize) -> Result<(Vec<F>, Vec<F>), QuadratureError> {
    if !(1..=64).contains(&n) {
        return Err(QuadratureError::RuleSize(n));
    }
    let c = |v: f64| F::from(v).unwrap();
    let mut nodes = vec![F::zero(); n];
    let mut weights = vec![F::zero(); n];
    let legendre = |x: F| {
        let (mut p0, mut p1) = (F::one(), x);
        for k in 2..=n {
            let k = c(k as f64);
            let p2 = ((c(2.0) * k - F::one()) * x * p1 - (k - F::one()) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if n == 1 {
            (F::one(), x)
        } else {
            (p0, p1)
        }
    };
    let nf = c(n as f64);
    for i in 0..n.div_ceil(2) {
        let mut x = c((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = F::one();
        for _ in 0..100 {
            let (pm, p) = legendre(x);
            dp = nf * (x * p - pm) / (x * x - F::one());
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= c(1e-15) {
                break;
            }
        }
        let (pm, p) = legendre(x);
        if n > 1 {
            dp = nf * (x * p - pm) / (x * x - F::one());
        }
        let w = c(2.0) / ((F::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = F::zero();
    }
    Ok((nodes, weights))
}

/// Physical Gauss points with Jacobian-scaled weights, grouped by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussCloud {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub cell: Vec<usize>,
}

impl GaussCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), QuadratureError> {
        let axes = ["x", "y", "z"];
        writeln!(out, "{},weight,cell", axes[..self.dim].join(","))?;
        for ((p, w), c) in self.points.iter().zip(&self.weights).zip(&self.cell) {
            for v in &p[..self.dim] {
                write!(out, "{v:e},")?;
            }
            writeln!(out, "{w:e},{c}")?;
        }
        Ok(())
    }
}

/// Tensor-product rule of `n^d` points in each cell of `mesh`.
pub fn build_cloud(mesh: &ElementMesh<f64>, patches: &[NurbsPatch<f64>], n: usize) -> Result<GaussCloud, QuadratureError> {
    let (nodes, w1) = gauss_legendre_1d::<f64>(n)?;
    let d = mesh.dim();
    let per_cell = n.pow(d as u32);
    let mut cloud = GaussCloud {
        dim: d,
        points: Vec::with_capacity(mesh.len() * per_cell),
        weights: Vec::with_capacity(mesh.len() * per_cell),
        cell: Vec::with_capacity(mesh.len() * per_cell),
    };
    let mut xi = vec![0.0; d];
    for (cid, c) in mesh.cells().iter().enumerate() {
        let patch = &patches[c.patch];
        let scale = c.volume(d) / f64::from(1u32 << d);
        for flat in 0..per_cell {
            let mut rem = flat;
            let mut w = scale;
            for k in 0..d {
                let i = rem % n;
                rem /= n;
                xi[k] = 0.5 * (c.lo[k] + c.hi[k]) + 0.5 * (c.hi[k] - c.lo[k]) * nodes[i];
                w *= w1[i];
            }
            let (x, jac) = patch.map(&xi)?;
            let mut p = [0.0; 3];
            p[..d].copy_from_slice(&x);
            cloud.points.push(p);
            cloud.weights.push(w * jac.determinant().abs());
            cloud.cell.push(cid);
        }
    }
    Ok(cloud)
}

pub fn integrate(values: &[f64], cloud: &GaussCloud) -> Result<f64, QuadratureError> {
    if values.len() != cloud.len() {
        return Err(QuadratureError::LengthMismatch { expected: cloud.len(), got: values.len() });
    }
    Ok(values.iter().zip(&cloud.weights).map(|(v, w)| v * w).sum())
}

/// Gauss points on boundary faces with surface weights and outward unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCloud {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 3]>,
}

impl BoundaryCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n^(d-1)` points per knot span of every listed face.
pub fn build_boundary_cloud(patches: &[NurbsPatch<f64>], faces: &[Face], n: usize) -> Result<BoundaryCloud, QuadratureError> {
    let (nodes, w1) = gauss_legendre_1d::<f64>(n)?;
    let d = patches.first().map(NurbsPatch::dim).unwrap_or(0);
    let mut cloud = BoundaryCloud { dim: d, points: Vec::new(), weights: Vec::new(), normals: Vec::new() };
    for f in faces {
        let patch = &patches[f.patch];
        let others: Vec<usize> = (0..d).filter(|&k| k != f.dir).collect();
        let spans: Vec<Vec<(usize, f64, f64)>> = others.iter().map(|&k| patch.knot_vectors()[k].spans()).collect();
        let mut span_idx = vec![0usize; others.len()];
        loop {
            let per = n.pow(others.len() as u32);
            for flat in 0..per {
                let mut xi = vec![0.0; d];
                xi[f.dir] = f64::from(f.side);
                let mut w = 1.0;
                let mut rem = flat;
                for (j, &k) in others.iter().enumerate() {
                    let (_, lo, hi) = spans[j][span_idx[j]];
                    let i = rem % n;
                    rem /= n;
                    xi[k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[i];
                    w *= 0.5 * (hi - lo) * w1[i];
                }
                let (x, jac) = patch.map(&xi)?;
                let cof = cofactor_column(&jac, f.dir);
                let sign = if f.side == 1 { 1.0 } else { -1.0 };
                let len = cof.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut p = [0.0; 3];
                p[..d].copy_from_slice(&x);
                let mut nrm = [0.0; 3];
                for k in 0..d {
                    nrm[k] = sign * cof[k] / len;
                }
                cloud.points.push(p);
                cloud.weights.push(w * len);
                cloud.normals.push(nrm);
            }
            let mut j = 0;
            loop {
                if j == others.len() {
                    break;
                }
                span_idx[j] += 1;
                if span_idx[j] < spans[j].len() {
                    break;
                }
                span_idx[j] = 0;
                j += 1;
            }
            if j == others.len() {
                break;
            }
        }
    }
    Ok(cloud)
}

/// Column `dir` of `det(J) J^-T`, the area-weighted normal of the face `xi[dir] = const`.
fn cofactor_column(jac: &DMatrix<f64>, dir: usize) -> Vec<f64> {
    let det = jac.determinant();
    let inv_t = jac.clone().try_inverse().expect("non-degenerate Jacobian").transpose();
    (0..jac.nrows()).map(|r| det * inv_t[(r, dir)]).collect()
}
