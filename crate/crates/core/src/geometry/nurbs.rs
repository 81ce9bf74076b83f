use nalgebra::DMatrix;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{GeometryError, KnotVector};

/// Tensor-product NURBS map from `[0,1]^d` to physical space (`d` in 1..=3).
///
/// Control points are stored with the first parametric direction varying
/// fastest; each point uses the first `d` coordinates of a 3-array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NurbsPatch<F> {
    knots: Vec<KnotVector<F>>,
    points: Vec<[F; 3]>,
    weights: Vec<F>,
}

impl<F: Float> NurbsPatch<F> {
    pub fn new(knots: Vec<KnotVector<F>>, points: Vec<[F; 3]>, weights: Vec<F>) -> Result<Self, GeometryError> {
        if knots.is_empty() || knots.len() > 3 {
            return Err(GeometryError::Shape(format!("unsupported dimension {}", knots.len())));
        }
        let expected: usize = knots.iter().map(KnotVector::n_basis).product();
        if points.len() != expected || weights.len() != expected {
            return Err(GeometryError::Shape(format!(
                "control grid needs {expected} points and weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > F::zero())) {
            return Err(GeometryError::Shape("weights must be strictly positive".into()));
        }
        Ok(NurbsPatch { knots, points, weights })
    }

    /// Non-rational patch with unit weights.
    pub fn polynomial(knots: Vec<KnotVector<F>>, points: Vec<[F; 3]>) -> Result<Self, GeometryError> {
        let n = points.len();
        Self::new(knots, points, vec![F::one(); n])
    }

    /// Degree-1 map of the axis-aligned box `lo..hi`.
    pub fn axis_box(lo: &[F], hi: &[F]) -> Self {
        let d = lo.len();
        let knots = vec![KnotVector::uniform(1, 1); d];
        let mut points = Vec::with_capacity(1 << d);
        for idx in 0..(1usize << d) {
            let mut p = [F::zero(); 3];
            for k in 0..d {
                p[k] = if idx >> k & 1 == 1 { hi[k] } else { lo[k] };
            }
            points.push(p);
        }
        Self::polynomial(knots, points).expect("box patch is well formed")
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn knot_vectors(&self) -> &[KnotVector<F>] {
        &self.knots
    }

    pub fn control_points(&self) -> &[[F; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    fn check_domain(&self, xi: &[F]) -> Result<(), GeometryError> {
        if xi.len() != self.dim() {
            return Err(GeometryError::Shape(format!("expected {} parametric coordinates", self.dim())));
        }
        for &x in xi {
            if !(x >= F::zero() && x <= F::one()) {
                return Err(GeometryError::OutOfDomain(x.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Ok(())
    }

    /// Rational basis values `R_A(xi)` on the support of `xi` as
    /// `(control index, value)` pairs. They sum to one.
    pub fn rational_basis(&self, xi: &[F]) -> Result<Vec<(usize, F)>, GeometryError> {
        self.check_domain(xi)?;
        let local = self.local_basis(xi);
        let wsum = local.iter().fold(F::zero(), |acc, (a, n, _)| acc + self.weights[*a] * *n);
        Ok(local.into_iter().map(|(a, n, _)| (a, self.weights[a] * n / wsum)).collect())
    }

    /// (control index, tensor basis value, gradient wrt xi)
    fn local_basis(&self, xi: &[F]) -> Vec<(usize, F, [F; 3])> {
        let d = self.dim();
        let mut per_dir = Vec::with_capacity(d);
        for (k, kv) in self.knots.iter().enumerate() {
            let span = kv.find_span(xi[k]);
            let (v, dv) = kv.basis_and_derivative(span, xi[k]);
            per_dir.push((span - kv.degree(), v, dv));
        }
        let counts: Vec<usize> = per_dir.iter().map(|(_, v, _)| v.len()).collect();
        let strides: Vec<usize> = {
            let mut s = vec![1usize; d];
            for k in 1..d {
                s[k] = s[k - 1] * self.knots[k - 1].n_basis();
            }
            s
        };
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut a = 0;
            let mut val = F::one();
            let mut grad = [F::one(); 3];
            let mut local_idx = [0usize; 3];
            for k in 0..d {
                local_idx[k] = rem % counts[k];
                rem /= counts[k];
            }
            for k in 0..d {
                let (first, ref v, _) = per_dir[k];
                a += (first + local_idx[k]) * strides[k];
                val = val * v[local_idx[k]];
            }
            for (g, gk) in grad.iter_mut().enumerate().take(d) {
                for k in 0..d {
                    let (_, ref v, ref dv) = per_dir[k];
                    *gk = *gk * if k == g { dv[local_idx[k]] } else { v[local_idx[k]] };
                }
            }
            for gk in grad.iter_mut().skip(d) {
                *gk = F::zero();
            }
            out.push((a, val, grad));
        }
        out
    }

    /// Physical point and Jacobian `dx/dxi` (row = physical component).
    pub fn map(&self, xi: &[F]) -> Result<(Vec<F>, DMatrix<F>), GeometryError>
    where
        F: nalgebra::RealField + Copy,
    {
        let (x, jac) = self.map_unchecked(xi)?;
        let det = jac.determinant();
        if !(det > F::zero()) {
            return Err(GeometryError::Degenerate(det.to_f64().unwrap_or(f64::NAN)));
        }
        Ok((x, jac))
    }

    /// Like [`map`](Self::map) without the orientation check.
    pub fn map_unchecked(&self, xi: &[F]) -> Result<(Vec<F>, DMatrix<F>), GeometryError>
    where
        F: nalgebra::Scalar,
    {
        self.check_domain(xi)?;
        let d = self.dim();
        let local = self.local_basis(xi);
        let mut w = F::zero();
        let mut dw = [F::zero(); 3];
        let mut num = [F::zero(); 3];
        let mut dnum = [[F::zero(); 3]; 3];
        for (a, n, g) in &local {
            let wa = self.weights[*a];
            let p = self.points[*a];
            w = w + wa * *n;
            for k in 0..d {
                dw[k] = dw[k] + wa * g[k];
            }
            for i in 0..d {
                num[i] = num[i] + wa * *n * p[i];
                for k in 0..d {
                    dnum[i][k] = dnum[i][k] + wa * g[k] * p[i];
                }
            }
        }
        let x: Vec<F> = (0..d).map(|i| num[i] / w).collect();
        let mut jac = DMatrix::from_element(d, d, F::zero());
        for i in 0..d {
            for k in 0..d {
                jac[(i, k)] = (dnum[i][k] - x[i] * dw[k]) / w;
            }
        }
        Ok((x, jac))
    }

    /// Evaluate at `xi`, returning only the physical point.
    pub fn point(&self, xi: &[F]) -> Result<Vec<F>, GeometryError>
    where
        F: nalgebra::Scalar,
    {
        Ok(self.map_unchecked(xi)?.0)
    }

    /// Image of `xi` with all three embedding coordinates.
    pub fn embedded_point(&self, xi: &[F]) -> Result<[F; 3], GeometryError> {
        let mut x = [F::zero(); 3];
        for (i, r) in self.rational_basis(xi)? {
            for k in 0..3 {
                x[k] = x[k] + r * self.points[i][k];
            }
        }
        Ok(x)
    }
}
