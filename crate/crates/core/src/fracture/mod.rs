//! Phase-field constitutive layer: strain kinematics, tension/compression
//! split, degradation and the history field.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{crack_distance, Crack};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractureError {
    #[error("invalid material: {0}")]
    Material(String),
    #[error("non-finite strain component")]
    NonFinite,
    #[error("history would decrease at point {index}: {old} -> {new}")]
    HistoryDecrease { index: usize, old: f64, new: f64 },
    #[error("history has {expected} points, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "Gc")]
    pub gc: f64,
    pub l0: f64,
}

impl MaterialParams {
    pub fn validate(&self, dim: usize) -> Result<(), FractureError> {
        let bad = |m: &str| Err(FractureError::Material(m.to_string()));
        if !(self.mu > 0.0) {
            return bad("mu must be positive");
        }
        if !(self.gc > 0.0) {
            return bad("Gc must be positive");
        }
        if !(self.l0 > 0.0) {
            return bad("l0 must be positive");
        }
        if !(self.lambda > -2.0 / dim as f64 * self.mu) {
            return bad("lambda violates ellipticity");
        }
        Ok(())
    }
}

/// How the strain energy is divided into a degradable and a persistent part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Spectral decomposition into tensile and compressive eigen-parts.
    #[default]
    Spectral,
    /// Whole energy degradable, nothing persistent.
    NoSplit,
}

pub fn degradation<T: Scalar>(phi: T) -> T {
    (T::one() - phi).square()
}

/// Symmetric small strain with its principal values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainState<T> {
    pub dim: usize,
    pub eps: [[T; 3]; 3],
    pub eigs: [T; 3],
}

impl<T: Scalar> StrainState<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigs[..self.dim]
    }

    pub fn trace(&self) -> T {
        self.eigenvalues().iter().fold(T::zero(), |a, &b| a + b)
    }
}

impl StrainState<f64> {
    /// Orthonormal eigenvectors as columns, ordered like the solver's eigenvalues.
    pub fn eigenvectors(&self) -> Matrix3<f64> {
        let m = Matrix3::from_fn(|i, j| if i < self.dim && j < self.dim { self.eps[i][j] } else { 0.0 });
        let eig = SymmetricEigen::new(m);
        let mut q = Matrix3::zeros();
        let mut used = [false; 3];
        for (k, &target) in self.eigenvalues().iter().enumerate() {
            let j = (0..3)
                .filter(|&j| !used[j] && eig.eigenvectors.column(j).rows(self.dim, 3 - self.dim).norm() < 1e-12)
                .min_by(|&a, &b| {
                    (eig.eigenvalues[a] - target).abs().partial_cmp(&(eig.eigenvalues[b] - target).abs()).unwrap()
                })
                .expect("eigenvector available");
            used[j] = true;
            q.set_column(k, &eig.eigenvectors.column(j));
        }
        q
    }
}

const EIG_EPS: f64 = 1e-30;

/// `eps = sym(grad_u)` and its eigenvalues: closed form in 2D, trigonometric
/// Cardano in 3D.
pub fn strain_from_grad<T: Scalar>(grad: &[[T; 3]; 3], dim: usize) -> Result<StrainState<T>, FractureError> {
    let mut eps = [[T::zero(); 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            let v = (grad[i][j] + grad[j][i]).scale(0.5);
            if !v.value().is_finite() {
                return Err(FractureError::NonFinite);
            }
            eps[i][j] = v;
        }
    }
    let mut eigs = [T::zero(); 3];
    match dim {
        1 => eigs[0] = eps[0][0],
        2 => {
            let m = (eps[0][0] + eps[1][1]).scale(0.5);
            let h = (eps[0][0] - eps[1][1]).scale(0.5);
            let r = (h.square() + eps[0][1].square() + T::constant(EIG_EPS)).sqrt();
            eigs[0] = m + r;
            eigs[1] = m - r;
        }
        _ => eigs = cardano(&eps),
    }
    Ok(StrainState { dim, eps, eigs })
}

fn cardano<T: Scalar>(a: &[[T; 3]; 3]) -> [T; 3] {
    let q = (a[0][0] + a[1][1] + a[2][2]).scale(1.0 / 3.0);
    let p1 = a[0][1].square() + a[0][2].square() + a[1][2].square();
    let p2 = (a[0][0] - q).square() + (a[1][1] - q).square() + (a[2][2] - q).square() + p1.scale(2.0);
    let p = (p2.scale(1.0 / 6.0) + T::constant(EIG_EPS)).sqrt();
    let b = |i: usize, j: usize| {
        let v = if i == j { a[i][j] - q } else { a[i][j] };
        v / p
    };
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = det.scale(0.5).max(T::constant(-1.0 + 1e-12)).min(T::constant(1.0 - 1e-12));
    let theta = r.acos().scale(1.0 / 3.0);
    let e1 = q + p.scale(2.0) * theta.cos();
    let e3 = q + p.scale(2.0) * (theta + T::constant(2.0 * std::f64::consts::FRAC_PI_3)).cos();
    let e2 = q.scale(3.0) - e1 - e3;
    [e1, e2, e3]
}

/// `(psi_plus, psi_minus)` from principal strains.
pub fn psi_split<T: Scalar>(eigs: &[T], mat: &MaterialParams, mode: SplitMode) -> (T, T) {
    let ls = eigs.iter().fold(T::zero(), |a, &b| a + b);
    match mode {
        SplitMode::Spectral => {
            let mut plus = (ls + ls.abs()).square().scale(mat.lambda / 8.0);
            let mut minus = (ls - ls.abs()).square().scale(mat.lambda / 8.0);
            for &e in eigs {
                plus = plus + (e + e.abs()).square().scale(mat.mu / 4.0);
                minus = minus + (e - e.abs()).square().scale(mat.mu / 4.0);
            }
            (plus, minus)
        }
        SplitMode::NoSplit => {
            let total = eigs.iter().fold(ls.square().scale(mat.lambda / 2.0), |a, &e| a + e.square().scale(mat.mu));
            (total, T::zero())
        }
    }
}

pub fn elastic_density<T: Scalar>(phi: T, psi_plus: T, psi_minus: T) -> T {
    degradation(phi) * psi_plus + psi_minus
}

pub fn fracture_density<T: Scalar>(phi: T, grad_phi: &[T], h: T, mat: &MaterialParams) -> T {
    let g2 = grad_phi.iter().fold(T::zero(), |a, &b| a + b.square());
    (phi.square() + g2.scale(mat.l0 * mat.l0)).scale(mat.gc / (2.0 * mat.l0)) + degradation(phi) * h
}

/// Initial history from the distance to the crack; zero beyond `l0 / 2`.
pub fn init_history(points: &[[f64; 3]], crack: &Crack, mat: &MaterialParams, b: f64) -> Vec<f64> {
    let peak = b * mat.gc / (2.0 * mat.l0);
    points
        .iter()
        .map(|x| {
            let d = crack_distance(x, crack);
            if d <= mat.l0 / 2.0 {
                peak * (1.0 - 2.0 * d / mat.l0)
            } else {
                0.0
            }
        })
        .collect()
}

/// `max(psi_plus, h_prev)`; on a tie the stored value is kept.
pub fn update_history<T: Scalar>(h_prev: T, psi_plus: T) -> T {
    h_prev.max(psi_plus)
}

/// Committed history values, one per point, with the step they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryField {
    pub step: usize,
    pub values: Vec<f64>,
}

impl HistoryField {
    pub fn new(values: Vec<f64>) -> Self {
        HistoryField { step: 0, values }
    }

    /// Pointwise max with `psi_plus`; the result never decreases.
    pub fn commit(&mut self, psi_plus: &[f64]) -> Result<(), FractureError> {
        if psi_plus.len() != self.values.len() {
            return Err(FractureError::Length { expected: self.values.len(), got: psi_plus.len() });
        }
        for (h, &p) in self.values.iter_mut().zip(psi_plus) {
            *h = update_history(*h, p);
        }
        self.step += 1;
        Ok(())
    }

    /// Error at the first point where `next` falls below `self`.
    pub fn check_monotone(&self, next: &HistoryField) -> Result<(), FractureError> {
        for (index, (&old, &new)) in self.values.iter().zip(&next.values).enumerate() {
            if !(new >= old) {
                return Err(FractureError::HistoryDecrease { index, old, new });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Recording;

    fn senp_mat() -> MaterialParams {
        MaterialParams { lambda: 121.15, mu: 80.77, gc: 2.7e-3, l0: 0.0125 }
    }

    fn unit_mat() -> MaterialParams {
        MaterialParams { lambda: 1.0, mu: 1.0, gc: 1.0, l0: 1.0 }
    }

    #[test]
    fn degradation_values() {
        assert_eq!(degradation(0.0), 1.0);
        assert_eq!(degradation(1.0), 0.0);
        assert_eq!(degradation(0.5), 0.25);
    }

    #[test]
    fn material_validation() {
        assert!(senp_mat().validate(2).is_ok());
        let mut m = senp_mat();
        m.lambda = -81.0;
        assert!(m.validate(2).is_err());
        m.lambda = -80.0;
        assert!(m.validate(2).is_ok());
        assert!(MaterialParams { l0: 0.0, ..senp_mat() }.validate(2).is_err());
    }

    #[test]
    fn zero_and_diagonal_strain() {
        let s = strain_from_grad(&[[0.0; 3]; 3], 2).unwrap();
        assert!(s.eigenvalues().iter().all(|e| e.abs() < 1e-14));
        let g = [[0.01, 0.0, 0.0], [0.0, -0.02, 0.0], [0.0; 3]];
        let s = strain_from_grad(&g, 2).unwrap();
        assert!((s.eigs[0] - 0.01).abs() < 1e-14 && (s.eigs[1] + 0.02).abs() < 1e-14);
        let s3 = strain_from_grad(&[[0.01, 0.0, 0.0], [0.0, -0.02, 0.0], [0.0, 0.0, 0.005]], 3).unwrap();
        let mut e = s3.eigs;
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((e[0] - 0.01).abs() < 1e-14 && (e[1] - 0.005).abs() < 1e-14 && (e[2] + 0.02).abs() < 1e-14);
    }

    #[test]
    fn non_finite_strain_rejected() {
        let g = [[f64::NAN, 0.0, 0.0], [0.0; 3], [0.0; 3]];
        assert_eq!(strain_from_grad(&g, 2), Err(FractureError::NonFinite));
    }

    #[test]
    fn split_hand_values() {
        let (p, m) = psi_split(&[1.0, -1.0], &unit_mat(), SplitMode::Spectral);
        assert_eq!((p, m), (1.0, 1.0));
        let (_, m) = psi_split(&[0.3, 0.0], &senp_mat(), SplitMode::Spectral);
        assert_eq!(m, 0.0);
        let (p, m) = psi_split(&[0.2], &MaterialParams { lambda: 0.0, mu: 0.5, ..unit_mat() }, SplitMode::NoSplit);
        assert!((p - 0.02).abs() < 1e-16 && m == 0.0);
    }

    #[test]
    fn densities() {
        assert_eq!(elastic_density(1.0, 3.0, 2.0), 2.0);
        assert_eq!(elastic_density(0.0, 3.0, 2.0), 5.0);
        assert_eq!(elastic_density(0.5, 4.0, 1.0), 2.0);
        let m = senp_mat();
        assert_eq!(fracture_density(0.0, &[0.0, 0.0], 0.0, &m), 0.0);
        assert!((fracture_density(1.0, &[0.0, 0.0], 7.0, &m) - m.gc / (2.0 * m.l0)).abs() < 1e-15);
        let f = fracture_density(0.5, &[6.0, 8.0], 0.0, &m);
        assert!((f - 0.0286875).abs() < 1e-15);
    }

    #[test]
    fn history_initialisation() {
        let crack = Crack::segment(&[0.0, 0.5], &[0.5, 0.5]).unwrap();
        let m = senp_mat();
        let peak = 1000.0 * m.gc / (2.0 * m.l0);
        let pts = [[0.3, 0.5, 0.0], [0.3, 0.5 + m.l0 / 4.0, 0.0], [0.3, 0.5 + m.l0, 0.0]];
        let h = init_history(&pts, &crack, &m, 1000.0);
        assert!((h[0] - peak).abs() < 1e-12);
        assert!((h[1] - peak / 2.0).abs() < 1e-9);
        assert_eq!(h[2], 0.0);
    }

    #[test]
    fn history_update_and_tie() {
        assert_eq!(update_history(5.0, 3.0), 5.0);
        assert_eq!(update_history(3.0, 5.0), 5.0);
        let rec = Recording::new();
        let v = rec.inputs(&[2.0, 2.0]);
        let h = update_history(v[0], v[1]);
        assert_eq!(rec.gradient(h, &v).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn history_commit_is_monotone() {
        let mut h = HistoryField::new(vec![1.0, 2.0]);
        let before = h.clone();
        h.commit(&[0.5, 3.0]).unwrap();
        assert_eq!(h.values, vec![1.0, 3.0]);
        assert_eq!(h.step, 1);
        before.check_monotone(&h).unwrap();
        assert!(h.check_monotone(&before).is_err());
        assert!(h.commit(&[1.0]).is_err());
    }

    #[test]
    fn eigenvectors_reconstruct_strain() {
        let g = [[0.3, 0.1, -0.2], [0.05, -0.1, 0.4], [0.0, 0.2, 0.25]];
        for dim in [2, 3] {
            let s = strain_from_grad(&g, dim).unwrap();
            let q = s.eigenvectors();
            let l = Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|i, _| if i < dim { s.eigs[i] } else { 0.0 }));
            let back = q * l * q.transpose();
            for i in 0..dim {
                for j in 0..dim {
                    assert!((back[(i, j)] - s.eps[i][j]).abs() < 1e-10);
                }
            }
        }
    }
}
