//! Discrete energy `sum_g (f_e + f_c - f u) w` and its parameter gradient.

use ndarray::Array2;
use rayon::prelude::*;

use super::{Problem, SolverError};
use crate::autodiff::{grad_params, Dual, ParamVector, Var};
use crate::config::HistoryPolicy;
use crate::fracture::{elastic_density, fracture_density, psi_split, strain_from_grad, update_history, FractureError};
use crate::network::{forward_with, input_block, tangent_backward, tangent_forward, TransformCoefficients};
use crate::Scalar;

/// Per-Gauss-point data that does not change during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointData {
    pub x: [f64; 3],
    pub weight: f64,
    /// Transform coefficients for a unit load.
    pub coeffs: TransformCoefficients,
    pub elastic_only: bool,
    pub body_force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities<T> {
    pub elastic: T,
    pub fracture: T,
    pub work: T,
    pub psi_plus: T,
}

impl<T: Scalar> Densities<T> {
    pub fn total(&self) -> T {
        self.elastic + self.fracture - self.work
    }
}

/// Displacement gradient, displacement and phase field from raw outputs.
pub struct Fields<T> {
    pub u: [T; 3],
    pub grad_u: [[T; 3]; 3],
    pub phi: T,
    pub grad_phi: [T; 3],
}

pub fn fields_from_raw<T: Scalar>(dim: usize, y: &[T], jac: &[[T; 3]], c: &TransformCoefficients, load: f64) -> Fields<T> {
    let mut f = Fields { u: [T::zero(); 3], grad_u: [[T::zero(); 3]; 3], phi: y[dim], grad_phi: [T::zero(); 3] };
    for k in 0..dim {
        let b = T::constant(c.b[k]);
        f.u[k] = T::constant(c.a[k] * load) + b * y[k];
        for j in 0..dim {
            f.grad_u[k][j] = T::constant(c.da[k][j] * load) + y[k].scale(c.db[k][j]) + b * jac[k][j];
        }
        f.grad_phi[k] = jac[dim][k];
    }
    f
}

pub fn point_densities<T: Scalar>(
    problem: &Problem,
    p: &PointData,
    y: &[T],
    jac: &[[T; 3]],
    h_prev: f64,
    load: f64,
) -> Result<Densities<T>, FractureError> {
    let dim = problem.dim;
    let mat = &problem.cfg.material;
    let f = fields_from_raw(dim, y, jac, &p.coeffs, load);
    let strain = strain_from_grad(&f.grad_u, dim)?;
    let (plus, minus) = psi_split(strain.eigenvalues(), mat, problem.cfg.split);
    let work = f.u[0].scale(p.body_force);
    if p.elastic_only {
        return Ok(Densities { elastic: plus + minus, fracture: T::zero(), work, psi_plus: plus });
    }
    let h = match problem.cfg.history {
        HistoryPolicy::Live => update_history(T::constant(h_prev), plus),
        HistoryPolicy::Frozen => T::constant(h_prev),
    };
    Ok(Densities {
        elastic: elastic_density(f.phi, plus, minus),
        fracture: fracture_density(f.phi, &f.grad_phi[..dim], h, mat),
        work,
        psi_plus: plus,
    })
}

struct PrefixCache {
    start: usize,
    prefix: Vec<f64>,
    blocks: Vec<Array2<f64>>,
}

/// Chunked energy evaluator with an optional cache of frozen activations.
pub struct Assembler {
    pub chunk: usize,
    cache: Option<PrefixCache>,
}

impl Default for Assembler {
    fn default() -> Self {
        Assembler { chunk: 1024, cache: None }
    }
}

impl Assembler {
    pub fn new(chunk: usize) -> Self {
        Assembler { chunk: chunk.max(1), cache: None }
    }

    fn ranges(&self, n: usize) -> Vec<(usize, usize)> {
        (0..n).step_by(self.chunk).map(|a| (a, (a + self.chunk).min(n))).collect()
    }

    fn refresh_cache(&mut self, problem: &Problem, theta: &[f64], start: usize) {
        let layout = problem.arch.layout();
        let cut = layout[start].offset;
        let fresh = matches!(&self.cache, Some(c) if c.start == start && c.prefix[..] == theta[..cut]);
        if start == 0 || fresh {
            return;
        }
        let dim = problem.dim;
        let blocks = self
            .ranges(problem.points.len())
            .into_par_iter()
            .map(|(a, b)| {
                let x: Vec<[f64; 3]> = problem.points[a..b].iter().map(|p| p.x).collect();
                let acts = tangent_forward(&problem.arch, theta, input_block(&x, dim), 0, dim);
                acts.input_of(start).clone()
            })
            .collect();
        self.cache = Some(PrefixCache { start, prefix: theta[..cut].to_vec(), blocks });
    }

    /// Energy at `theta` (full length); the gradient of layers `start..` is
    /// written to `grad` (full length, other entries zero).
    pub fn energy_grad(
        &mut self,
        problem: &Problem,
        h_prev: &[f64],
        load: f64,
        theta: &[f64],
        start: usize,
        grad: &mut [f64],
    ) -> Result<f64, SolverError> {
        self.refresh_cache(problem, theta, start);
        let ranges = self.ranges(problem.points.len());
        let cache = self.cache.as_ref().filter(|c| c.start == start && start > 0);
        let parts: Vec<Result<(f64, Vec<f64>), SolverError>> = ranges
            .par_iter()
            .enumerate()
            .map(|(ci, &(a, b))| {
                let dim = problem.dim;
                let input = match cache {
                    Some(c) => c.blocks[ci].clone(),
                    None => {
                        let x: Vec<[f64; 3]> = problem.points[a..b].iter().map(|p| p.x).collect();
                        input_block(&x, dim)
                    }
                };
                let acts = tangent_forward(&problem.arch, theta, input, start, dim);
                let (e, g_out) = chunk_kernel(problem, &problem.points[a..b], &h_prev[a..b], load, acts.output())?;
                let mut g = vec![0.0; theta.len()];
                tangent_backward(&problem.arch, theta, &acts, g_out, &mut g);
                Ok((e, g))
            })
            .collect();
        grad.fill(0.0);
        let mut energy = 0.0;
        for part in parts {
            let (e, g) = part?;
            energy += e;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        Ok(energy)
    }

    /// Energy only, skipping the backward pass.
    pub fn energy(&mut self, problem: &Problem, h_prev: &[f64], load: f64, theta: &[f64]) -> Result<f64, SolverError> {
        let dim = problem.dim;
        let mut total = 0.0;
        for (a, b) in self.ranges(problem.points.len()) {
            let x: Vec<[f64; 3]> = problem.points[a..b].iter().map(|p| p.x).collect();
            let acts = tangent_forward(&problem.arch, theta, input_block(&x, dim), 0, dim);
            total += chunk_kernel(problem, &problem.points[a..b], &h_prev[a..b], load, acts.output())?.0;
        }
        Ok(total)
    }
}

fn chunk_kernel(problem: &Problem, pts: &[PointData], h: &[f64], load: f64, out: &Array2<f64>) -> Result<(f64, Array2<f64>), SolverError> {
    match problem.dim {
        1 => chunk_kernel_n::<4>(problem, pts, h, load, out),
        2 => chunk_kernel_n::<9>(problem, pts, h, load, out),
        _ => chunk_kernel_n::<16>(problem, pts, h, load, out),
    }
}

fn chunk_kernel_n<const N: usize>(
    problem: &Problem,
    pts: &[PointData],
    h: &[f64],
    load: f64,
    out: &Array2<f64>,
) -> Result<(f64, Array2<f64>), SolverError> {
    let dim = problem.dim;
    let n_out = dim + 1;
    let p = pts.len();
    let mut g = Array2::zeros((n_out, p * (dim + 1)));
    let mut energy = 0.0;
    for (j, pd) in pts.iter().enumerate() {
        let mut y = [Dual::<f64, N>::lift(0.0); 4];
        let mut jac = [[Dual::<f64, N>::lift(0.0); 3]; 4];
        for k in 0..n_out {
            y[k] = Dual::seed(out[(k, j)], k);
            for c in 0..dim {
                jac[k][c] = Dual::seed(out[(k, (c + 1) * p + j)], n_out + k * dim + c);
            }
        }
        let d = point_densities(problem, pd, &y[..n_out], &jac[..n_out], h[j], load)
            .map_err(|_| SolverError::NonFinite { x: pd.x })?
            .total();
        if !d.v.is_finite() || d.d.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { x: pd.x });
        }
        energy += pd.weight * d.v;
        for k in 0..n_out {
            g[(k, j)] = pd.weight * d.d[k];
            for c in 0..dim {
                g[(k, (c + 1) * p + j)] = pd.weight * d.d[n_out + k * dim + c];
            }
        }
    }
    Ok((energy, g))
}

/// Energy and full parameter gradient through the scalar tape; slow, used
/// to cross-check [`Assembler`].
pub fn reference_energy(problem: &Problem, h_prev: &[f64], load: f64, theta: &ParamVector) -> Result<(f64, ParamVector), SolverError> {
    match problem.dim {
        1 => reference_energy_d::<1>(problem, h_prev, load, theta),
        2 => reference_energy_d::<2>(problem, h_prev, load, theta),
        _ => reference_energy_d::<3>(problem, h_prev, load, theta),
    }
}

fn reference_energy_d<const D: usize>(problem: &Problem, h_prev: &[f64], load: f64, theta: &ParamVector) -> Result<(f64, ParamVector), SolverError> {
    let mut failure = None;
    let result = grad_params(
        |vars: &[Var]| {
            let th: Vec<Dual<Var, D>> = vars.iter().map(|&v| Dual::lift(v)).collect();
            let mut total = Var::constant(0.0);
            for (pd, &h) in problem.points.iter().zip(h_prev) {
                let x: Vec<Dual<Var, D>> = (0..D).map(|k| Dual::seed(Var::constant(pd.x[k]), k)).collect();
                let out = forward_with(&problem.arch, &th, &x);
                let y: Vec<Var> = out.iter().map(|o| o.v).collect();
                let jac: Vec<[Var; 3]> = out
                    .iter()
                    .map(|o| {
                        let mut r = [Var::constant(0.0); 3];
                        r[..D].copy_from_slice(&o.d);
                        r
                    })
                    .collect();
                match point_densities(problem, pd, &y, &jac, h, load) {
                    Ok(d) => total = total + d.total().scale(pd.weight),
                    Err(_) => failure = Some(pd.x),
                }
            }
            total
        },
        theta,
    );
    if let Some(x) = failure {
        return Err(SolverError::NonFinite { x });
    }
    result.map_err(|e| SolverError::Autodiff(e.to_string()))
}
