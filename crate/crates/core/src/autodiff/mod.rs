//! Automatic differentiation.
//!
//! Two engines cooperate:
//!
//! * [`Var`] / [`Recording`]: a reverse-mode scalar graph used for gradients
//!   of scalar functions with respect to many inputs (network parameters,
//!   strain components, raw network outputs).
//! * [`Dual`]: forward-mode numbers used for first derivatives of fields
//!   with respect to the (at most three) spatial coordinates.
//!
//! Nesting `Dual<Var, D>` yields parameter gradients of spatial derivatives,
//! which is what the variational energy needs.

mod dual;
mod params;
mod tape;

pub use dual::Dual;
pub use params::{LayerSlice, ParamVector};
pub use tape::{Recording, Var};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("non-finite result in `{primitive}` with operands {operands:?}")]
    NonFinite { primitive: &'static str, operands: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Value and gradient of a scalar function of a parameter vector.
///
/// `f` receives traced copies of the parameters. Its value is computed with
/// the same floating-point operations as a plain `f64` evaluation, so the
/// returned value is bitwise identical to calling a generic `f` on floats.
pub fn grad_params<F>(f: F, theta: &ParamVector) -> Result<(f64, ParamVector), AdError>
where
    F: FnOnce(&[Var]) -> Var,
{
    let rec = Recording::new();
    let vars = rec.inputs(theta.values());
    let out = f(&vars);
    let grad = rec.gradient(out, &vars)?;
    Ok((out.val(), theta.with_values(grad)))
}

/// Jacobian `d(outputs)/d(inputs)` of a field map at `x`, shape `(n_out, D)`.
pub fn input_jacobian<F, const D: usize>(apply: F, x: &[f64]) -> Result<DMatrix<f64>, AdError>
where
    F: FnOnce(&[Dual<f64, D>]) -> Vec<Dual<f64, D>>,
{
    if x.len() != D {
        return Err(AdError::DimensionMismatch { expected: D, got: x.len() });
    }
    let seeded: Vec<Dual<f64, D>> = x.iter().enumerate().map(|(k, &v)| Dual::seed(v, k)).collect();
    let out = apply(&seeded);
    let mut jac = DMatrix::zeros(out.len(), D);
    for (i, o) in out.iter().enumerate() {
        if !o.v.is_finite() || o.d.iter().any(|d| !d.is_finite()) {
            return Err(AdError::NonFinite { primitive: "input_jacobian", operands: x.to_vec() });
        }
        for k in 0..D {
            jac[(i, k)] = o.d[k];
        }
    }
    Ok(jac)
}
