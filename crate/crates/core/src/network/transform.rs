use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Dual;
use crate::Scalar;

/// Closed-form output modifiers `field = A(x) + B(x) * raw`. The phase
/// field is always passed through unchanged.
///
/// `load` is the prescribed boundary displacement of the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputTransform {
    /// No constraint: `A = 0`, `B = 1`.
    Identity,
    /// `u = (x + 1)(x - 1) u_raw`.
    Bar1d,
    /// `u = x(1 - x) u_raw`, `v = y(y - 1) v_raw + y load`.
    SenpTension,
    /// Point supports at `(1, 0)` and `(19, 0)`, load point `(10, 8)`:
    /// `u = w2/(w2 + 1) u_raw`,
    /// `v = w1 w2 w3 / ((w1 + 1)(w2 + 1)(w3 + 1)) v_raw - (y / 8) load`.
    AsymBend3Holes,
    /// `u = z u_raw`, `v = z v_raw`, `w = z(z - 1) w_raw + z load`.
    CubeTension,
}

/// One prescribed value: field `field` must equal `value` at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSample {
    pub x: [f64; 3],
    pub field: usize,
    pub value: f64,
}

/// `A`, `B` and their spatial gradients at one point, per displacement field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransformCoefficients {
    pub a: [f64; 3],
    pub da: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub db: [[f64; 3]; 3],
}

impl OutputTransform {
    /// `(A_k, B_k)` for every displacement component.
    pub fn parts<T: Scalar>(&self, x: &[T], load: f64) -> Vec<(T, T)> {
        let one = T::one();
        let c = T::constant;
        match self {
            OutputTransform::Identity => x.iter().map(|_| (T::zero(), one)).collect(),
            OutputTransform::Bar1d => vec![(T::zero(), (x[0] + one) * (x[0] - one))],
            OutputTransform::SenpTension => {
                vec![(T::zero(), x[0] * (one - x[0])), (x[1].scale(load), x[1] * (x[1] - one))]
            }
            OutputTransform::AsymBend3Holes => {
                let w = |px: f64, py: f64| (x[0] - c(px)).square() + (x[1] - c(py)).square();
                let (w1, w2, w3) = (w(1.0, 0.0), w(19.0, 0.0), w(10.0, 8.0));
                let bu = w2 / (w2 + one);
                let bv = w1 * w2 * w3 / ((w1 + one) * (w2 + one) * (w3 + one));
                vec![(T::zero(), bu), (x[1].scale(-load / 8.0), bv)]
            }
            OutputTransform::CubeTension => {
                let z = x[2];
                vec![(T::zero(), z), (T::zero(), z), (z.scale(load), z * (z - one))]
            }
        }
    }

    /// Physical fields (displacements then phase field) from raw outputs.
    pub fn apply<T: Scalar>(&self, x: &[T], raw: &[T], load: f64) -> Vec<T> {
        let mut out: Vec<T> = self.parts(x, load).into_iter().zip(raw).map(|((a, b), &r)| a + b * r).collect();
        out.push(raw[x.len()]);
        out
    }

    pub fn coefficients(&self, x: &[f64], load: f64) -> TransformCoefficients {
        let seeded: Vec<Dual<f64, 3>> = x.iter().enumerate().map(|(k, &v)| Dual::seed(v, k)).collect();
        let mut out = TransformCoefficients::default();
        for (k, (a, b)) in self.parts(&seeded, load).into_iter().enumerate() {
            out.a[k] = a.v;
            out.b[k] = b.v;
            out.da[k] = a.d;
            out.db[k] = b.d;
        }
        out
    }

    /// `n` random points on the Dirichlet boundary with their prescribed values.
    pub fn dirichlet_samples<R: Rng>(&self, rng: &mut R, n: usize, load: f64) -> Vec<DirichletSample> {
        let s = |x: [f64; 3], field: usize, value: f64| DirichletSample { x, field, value };
        (0..n)
            .map(|i| {
                let t: f64 = rng.gen();
                let t2: f64 = rng.gen();
                match self {
                    OutputTransform::Identity => s([t, t2, 0.0], 0, f64::NAN),
                    OutputTransform::Bar1d => s([if i % 2 == 0 { -1.0 } else { 1.0 }, 0.0, 0.0], 0, 0.0),
                    OutputTransform::SenpTension => match i % 3 {
                        0 => s([0.0, t, 0.0], 0, 0.0),
                        1 => s([t, 0.0, 0.0], 1, 0.0),
                        _ => s([t, 1.0, 0.0], 1, load),
                    },
                    OutputTransform::AsymBend3Holes => match i % 4 {
                        0 => s([1.0, 0.0, 0.0], 1, 0.0),
                        1 => s([19.0, 0.0, 0.0], 1, 0.0),
                        2 => s([19.0, 0.0, 0.0], 0, 0.0),
                        _ => s([10.0, 8.0, 0.0], 1, -load),
                    },
                    OutputTransform::CubeTension => match i % 4 {
                        3 => s([t, t2, 1.0], 2, load),
                        f => s([t, t2, 0.0], f, 0.0),
                    },
                }
            })
            .collect()
    }
}
