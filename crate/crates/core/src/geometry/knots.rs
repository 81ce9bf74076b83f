use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Open knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector<F> {
    knots: Vec<F>,
    degree: usize,
}

impl<F: Float> KnotVector<F> {
    pub fn new(knots: Vec<F>, degree: usize) -> Result<Self, GeometryError> {
        let bad = |reason: &str| GeometryError::InvalidKnots(reason.to_string());
        if knots.len() < 2 * (degree + 1) {
            return Err(bad("too few knots for the degree"));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(bad("knots must be non-decreasing"));
        }
        let n = knots.len();
        if knots[0] != F::zero() || knots[n - 1] != F::one() {
            return Err(bad("knot vector must start at 0 and end at 1"));
        }
        if knots[..=degree].iter().any(|&k| k != F::zero())
            || knots[n - degree - 1..].iter().any(|&k| k != F::one())
        {
            return Err(bad("end knots must be repeated degree+1 times"));
        }
        Ok(KnotVector { knots, degree })
    }

    /// `[0,..,0, 1/n, .., (n-1)/n, 1,..,1]` with `spans` equal spans.
    pub fn uniform(degree: usize, spans: usize) -> Self {
        let mut knots = vec![F::zero(); degree + 1];
        let n = F::from(spans).unwrap();
        for i in 1..spans {
            knots.push(F::from(i).unwrap() / n);
        }
        knots.extend(std::iter::repeat(F::one()).take(degree + 1));
        KnotVector { knots, degree }
    }

    /// Open knot vector with the given interior breakpoints (each simple).
    pub fn with_breaks(degree: usize, interior: &[F]) -> Result<Self, GeometryError> {
        let mut knots = vec![F::zero(); degree + 1];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat(F::one()).take(degree + 1));
        Self::new(knots, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[F] {
        &self.knots
    }

    /// Number of basis functions (= control points in this direction).
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Non-empty knot spans as `(knot index, lo, hi)`.
    pub fn spans(&self) -> Vec<(usize, F, F)> {
        (self.degree..self.n_basis())
            .filter(|&i| self.knots[i] < self.knots[i + 1])
            .map(|i| (i, self.knots[i], self.knots[i + 1]))
            .collect()
    }

    /// Index `s` with `knots[s] <= xi < knots[s+1]`; `xi == 1` maps to the last span.
    pub fn find_span(&self, xi: F) -> usize {
        let n = self.n_basis();
        if xi >= self.knots[n] {
            return n - 1;
        }
        if xi <= self.knots[self.degree] {
            return self.degree;
        }
        let (mut lo, mut hi) = (self.degree, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xi < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values and first derivatives of the `p+1` basis functions that are
    /// non-zero on `span` (functions `span-p ..= span`).
    pub fn basis_and_derivative(&self, span: usize, xi: F) -> (Vec<F>, Vec<F>) {
        let p = self.degree;
        let u = &self.knots;
        // ndu table from the triangular recursion; column j holds degree-j values.
        let mut ndu = vec![vec![F::zero(); p + 1]; p + 1];
        let mut left = vec![F::zero(); p + 1];
        let mut right = vec![F::zero(); p + 1];
        ndu[0][0] = F::one();
        for j in 1..=p {
            left[j] = xi - u[span + 1 - j];
            right[j] = u[span + j] - xi;
            let mut saved = F::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let values: Vec<F> = (0..=p).map(|r| ndu[r][p]).collect();
        let mut ders = vec![F::zero(); p + 1];
        if p > 0 {
            let pf = F::from(p).unwrap();
            for r in 0..=p {
                let mut d = F::zero();
                if r >= 1 {
                    d = d + ndu[r - 1][p - 1] / ndu[p][r - 1];
                }
                if r < p {
                    d = d - ndu[r][p - 1] / ndu[p][r];
                }
                ders[r] = pf * d;
            }
        }
        (values, ders)
    }
}

/// `N_{i,p}(xi)` by the Cox–de Boor recursion, with the half-open span
/// convention and the right end point assigned to the last non-empty span.
pub fn bspline_basis<F: Float>(kv: &KnotVector<F>, i: usize, xi: F) -> Result<F, GeometryError> {
    let n = kv.n_basis();
    if i >= n {
        return Err(GeometryError::BasisIndex { index: i, count: n });
    }
    if !(xi >= F::zero() && xi <= F::one()) {
        return Err(GeometryError::OutOfDomain(xi.to_f64().unwrap_or(f64::NAN)));
    }
    let last = kv.find_span(F::one());
    Ok(cox_de_boor(kv.knots(), i, kv.degree(), xi, last))
}

fn cox_de_boor<F: Float>(u: &[F], i: usize, p: usize, xi: F, last_span: usize) -> F {
    if p == 0 {
        let inside = u[i] <= xi && xi < u[i + 1];
        let right_end = xi == u[u.len() - 1] && i == last_span;
        return if inside || right_end { F::one() } else { F::zero() };
    }
    let mut acc = F::zero();
    let d1 = u[i + p] - u[i];
    if d1 > F::zero() {
        acc = acc + (xi - u[i]) / d1 * cox_de_boor(u, i, p - 1, xi, last_span);
    }
    let d2 = u[i + p + 1] - u[i + 1];
    if d2 > F::zero() {
        acc = acc + (u[i + p + 1] - xi) / d2 * cox_de_boor(u, i + 1, p - 1, xi, last_span);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn linear_hat_at_midpoint() {
        let kv = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(bspline_basis(&kv, 0, 0.5).unwrap(), 0.5);
        assert_eq!(bspline_basis(&kv, 1, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn quadratic_interpolates_endpoints() {
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(bspline_basis(&kv, 0, 0.0).unwrap(), 1.0);
        assert_eq!(bspline_basis(&kv, 2, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn index_out_of_range() {
        let kv = KnotVector::<f64>::uniform(2, 3);
        assert!(matches!(bspline_basis(&kv, 5, 0.5), Err(GeometryError::BasisIndex { .. })));
    }

    #[test]
    fn rejects_non_open_vectors() {
        assert!(KnotVector::new(vec![0.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 2.0, 2.0], 1).is_err());
    }

    #[test]
    fn partition_of_unity_and_agreement_with_recursion() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 0.2, 0.5, 0.5, 0.8, 1.0, 1.0, 1.0], 2).unwrap();
        for _ in 0..50 {
            let xi: f64 = rng.gen();
            let sum: f64 = (0..kv.n_basis()).map(|i| bspline_basis(&kv, i, xi).unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let span = kv.find_span(xi);
            let (vals, _) = kv.basis_and_derivative(span, xi);
            for (r, v) in vals.iter().enumerate() {
                let rec = bspline_basis(&kv, span - 2 + r, xi).unwrap();
                assert!((v - rec).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let kv = KnotVector::<f64>::uniform(3, 4);
        let xi = 0.37;
        let span = kv.find_span(xi);
        let (_, d) = kv.basis_and_derivative(span, xi);
        let h = 1e-6;
        for (r, dv) in d.iter().enumerate() {
            let i = span - 3 + r;
            let fd = (bspline_basis(&kv, i, xi + h).unwrap() - bspline_basis(&kv, i, xi - h).unwrap()) / (2.0 * h);
            assert!((dv - fd).abs() < 1e-7, "{dv} vs {fd}");
        }
    }
}
