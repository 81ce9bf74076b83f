//! Property suites runnable on demand: `ad`, `quadrature`, `split`, `bc`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{grad_params, input_jacobian, Dual, ParamVector};
use crate::config::RunConfig;
use crate::fracture::{psi_split, strain_from_grad, MaterialParams, SplitMode};
use crate::geometry::presets::{self, PRESET_NAMES};
use crate::geometry::{refine_region, ElementMesh};
use crate::network::{forward_with, init_xavier, MlpArchitecture};
use crate::quadrature::{build_cloud, gauss_legendre_1d, integrate};
use crate::Scalar;

pub const SUITES: [&str; 4] = ["ad", "quadrature", "split", "bc"];

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("unknown suite `{0}` (known: ad, quadrature, split, bc)")]
    UnknownSuite(String),
}

/// One pass/fail result.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{} {}", self.suite, self.name, self.detail)
    }
}

fn line(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> CheckLine {
    CheckLine { suite, name: name.into(), passed, detail }
}

pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckLine>, CheckError> {
    match name {
        "ad" => Ok(ad_suite(seed)),
        "quadrature" => Ok(quadrature_suite()),
        "split" => Ok(split_suite(seed)),
        "bc" => Ok(bc_suite(seed)),
        other => Err(CheckError::UnknownSuite(other.to_string())),
    }
}

const FD_STEP: f64 = 1e-5;

/// Absolute 1e-8 or relative 1e-5 agreement.
pub fn fd_agrees(ad: f64, fd: f64) -> bool {
    let err = (ad - fd).abs();
    err <= 1e-8 || err <= 1e-5 * fd.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Exp,
    Sqrt,
    Abs,
    Cos,
    Acos,
    Max,
    Min,
    Powi,
    Powf,
    Square,
}

impl Primitive {
    pub const ALL: [Primitive; 16] = [
        Primitive::Add,
        Primitive::Sub,
        Primitive::Mul,
        Primitive::Div,
        Primitive::Neg,
        Primitive::Tanh,
        Primitive::Exp,
        Primitive::Sqrt,
        Primitive::Abs,
        Primitive::Cos,
        Primitive::Acos,
        Primitive::Max,
        Primitive::Min,
        Primitive::Powi,
        Primitive::Powf,
        Primitive::Square,
    ];

    pub fn eval<T: Scalar>(self, a: T, b: T) -> T {
        match self {
            Primitive::Add => a + b,
            Primitive::Sub => a - b,
            Primitive::Mul => a * b,
            Primitive::Div => a / b,
            Primitive::Neg => -a,
            Primitive::Tanh => a.tanh(),
            Primitive::Exp => a.exp(),
            Primitive::Sqrt => a.sqrt(),
            Primitive::Abs => a.abs(),
            Primitive::Cos => a.cos(),
            Primitive::Acos => a.acos(),
            Primitive::Max => a.max(b),
            Primitive::Min => a.min(b),
            Primitive::Powi => a.powi(3),
            Primitive::Powf => a.powf(2.5),
            Primitive::Square => a.square(),
        }
    }

    /// Sample operands away from kinks and domain edges.
    pub fn sample<R: Rng>(self, rng: &mut R) -> (f64, f64) {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(-2.0..2.0);
        let away = |v: f64| if v.abs() < 0.1 { v.signum() * 0.1 + v } else { v };
        match self {
            Primitive::Div => (a, away(b)),
            Primitive::Sqrt | Primitive::Powf => (0.1 + a.abs(), b),
            Primitive::Abs => (away(a), b),
            Primitive::Acos => (0.45 * a, b),
            Primitive::Max | Primitive::Min if (a - b).abs() < 0.1 => (a, b + 0.2),
            _ => (a, b),
        }
    }
}

pub fn ad_suite(seed: u64) -> Vec<CheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for p in Primitive::ALL {
        let mut worst = 0.0f64;
        let mut ok = true;
        for _ in 0..20 {
            let (a, b) = p.sample(&mut rng);
            let theta = ParamVector::from_values(vec![a, b]);
            let (_, g) = grad_params(|v| p.eval(v[0], v[1]), &theta).expect("primitive gradient");
            let dual = p.eval(Dual::<f64, 2>::seed(a, 0), Dual::seed(b, 1));
            let fd = [
                (p.eval(a + FD_STEP, b) - p.eval(a - FD_STEP, b)) / (2.0 * FD_STEP),
                (p.eval(a, b + FD_STEP) - p.eval(a, b - FD_STEP)) / (2.0 * FD_STEP),
            ];
            for k in 0..2 {
                for ad in [g.values()[k], dual.d[k]] {
                    worst = worst.max((ad - fd[k]).abs());
                    ok &= fd_agrees(ad, fd[k]);
                }
            }
        }
        out.push(line("ad", format!("{p:?}").to_lowercase(), ok, format!("max_abs_err={worst:.2e}")));
    }
    let (mut grad_ok, mut jac_ok) = (true, true);
    let (mut grad_worst, mut jac_worst) = (0.0f64, 0.0f64);
    for net in 0..100 {
        let d = 1 + net % 3;
        let arch = MlpArchitecture::new(vec![d, rng.gen_range(2..7), rng.gen_range(2..7), d + 1]).unwrap();
        let theta = init_xavier(&arch, seed.wrapping_add(net as u64)).theta.into_values();
        let theta: Vec<f64> = theta.iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..(d + 1) * (d + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, g) = grad_params(|v| network_functional(&arch, v, &x, &c), &ParamVector::from_values(theta.clone())).unwrap();
        let mut probe = theta.clone();
        for i in 0..theta.len() {
            probe[i] = theta[i] + FD_STEP;
            let fp = network_functional(&arch, &probe, &x, &c);
            probe[i] = theta[i] - FD_STEP;
            let fm = network_functional(&arch, &probe, &x, &c);
            probe[i] = theta[i];
            let fd = (fp - fm) / (2.0 * FD_STEP);
            grad_worst = grad_worst.max((g.values()[i] - fd).abs());
            grad_ok &= fd_agrees(g.values()[i], fd);
        }
        let (ok, worst) = match d {
            1 => jacobian_check::<1>(&arch, &theta, &x),
            2 => jacobian_check::<2>(&arch, &theta, &x),
            _ => jacobian_check::<3>(&arch, &theta, &x),
        };
        jac_ok &= ok;
        jac_worst = jac_worst.max(worst);
    }
    out.push(line("ad", "network_param_grad", grad_ok, format!("nets=100 max_abs_err={grad_worst:.2e}")));
    out.push(line("ad", "network_input_jacobian", jac_ok, format!("nets=100 max_abs_err={jac_worst:.2e}")));
    out
}

/// `sum c_o y_o + sum c_{o,k} dy_o/dx_k`, touching values and input derivatives.
fn network_functional<T: Scalar>(arch: &MlpArchitecture, theta: &[T], x: &[f64], c: &[f64]) -> T {
    let d = x.len();
    let th: Vec<Dual<T, 3>> = theta.iter().map(|&v| Dual::lift(v)).collect();
    let xs: Vec<Dual<T, 3>> = x.iter().enumerate().map(|(k, &v)| Dual::seed(T::constant(v), k)).collect();
    let y = forward_with(arch, &th, &xs);
    let mut total = T::zero();
    for (o, yo) in y.iter().enumerate() {
        total = total + yo.v.scale(c[o * (d + 1)]);
        for k in 0..d {
            total = total + yo.d[k].scale(c[o * (d + 1) + k + 1]);
        }
    }
    total
}

fn jacobian_check<const D: usize>(arch: &MlpArchitecture, theta: &[f64], x: &[f64]) -> (bool, f64) {
    let jac = input_jacobian::<_, D>(
        |xs| {
            let th: Vec<Dual<f64, D>> = theta.iter().map(|&v| Dual::lift(v)).collect();
            forward_with(arch, &th, xs)
        },
        x,
    )
    .unwrap();
    let (mut ok, mut worst) = (true, 0.0f64);
    let mut probe = x.to_vec();
    for k in 0..D {
        probe[k] = x[k] + FD_STEP;
        let fp = forward_with(arch, theta, &probe);
        probe[k] = x[k] - FD_STEP;
        let fm = forward_with(arch, theta, &probe);
        probe[k] = x[k];
        for o in 0..fp.len() {
            let fd = (fp[o] - fm[o]) / (2.0 * FD_STEP);
            worst = worst.max((jac[(o, k)] - fd).abs());
            ok &= fd_agrees(jac[(o, k)], fd);
        }
    }
    (ok, worst)
}

pub fn quadrature_suite() -> Vec<CheckLine> {
    let mut out = Vec::new();
    for n in 1..=16 {
        let (x, w) = gauss_legendre_1d::<f64>(n).expect("rule");
        let worst = (0..2 * n)
            .map(|p| {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                (got - exact).abs()
            })
            .fold(0.0, f64::max);
        out.push(line("quadrature", format!("gauss_n{n}_degree{}", 2 * n - 1), worst <= 1e-13, format!("max_abs_err={worst:.2e}")));
    }
    let disc = presets::quarter_disc();
    let mesh = refine_region(&ElementMesh::from_patches(std::slice::from_ref(&disc)), |_| true, 2);
    let area = build_cloud(&mesh, &[disc], 4).and_then(|c| integrate(&vec![1.0; c.len()], &c)).unwrap_or(f64::NAN);
    let err = (area - FRAC_PI_4).abs();
    out.push(line("quadrature", "quarter_disc_area", err < 1e-6, format!("area={area:.12} err={err:.2e}")));
    let senp = presets::senp_tension();
    let count = build_cloud(&senp.mesh, &senp.patches, 8).map_or(0, |c| c.len());
    out.push(line("quadrature", "senp_point_count", count == 61_440, format!("points={count} cells={}", senp.mesh.len())));
    out
}

fn full_energy(eps: &[[f64; 3]; 3], d: usize, mat: &MaterialParams) -> f64 {
    let tr: f64 = (0..d).map(|i| eps[i][i]).sum();
    let sq: f64 = (0..d).flat_map(|i| (0..d).map(move |j| eps[i][j] * eps[i][j])).sum();
    mat.lambda / 2.0 * tr * tr + mat.mu * sq
}

fn random_strain<R: Rng>(rng: &mut R, d: usize) -> [[f64; 3]; 3] {
    let mut e = [[0.0; 3]; 3];
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-0.05..0.05);
            e[i][j] = v;
            e[j][i] = v;
        }
    }
    e
}

pub fn split_suite(seed: u64) -> Vec<CheckLine> {
    let mat = MaterialParams { lambda: 121.15, mu: 80.77, gc: 2.7e-3, l0: 0.0125 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for d in 1..=3 {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let e = random_strain(&mut rng, d);
            let s = strain_from_grad(&e, d).expect("finite strain");
            let (p, m) = psi_split(s.eigenvalues(), &mat, SplitMode::Spectral);
            worst = worst.max((p + m - full_energy(&e, d, &mat)).abs());
        }
        out.push(line("split", format!("identity_d{d}"), worst <= 1e-10, format!("strains=100 max_abs_err={worst:.2e}")));
    }
    for d in 2..=3 {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let e = random_strain(&mut rng, d);
            let q = if d == 2 {
                Rotation3::from_axis_angle(&Vector3::z_axis(), rng.gen_range(-3.1..3.1)).into_inner()
            } else {
                Rotation3::from_euler_angles(rng.gen_range(-3.1..3.1), rng.gen_range(-3.1..3.1), rng.gen_range(-3.1..3.1)).into_inner()
            };
            let m = Matrix3::from_fn(|i, j| e[i][j]);
            let r = q * m * q.transpose();
            let rotated: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| if i < d && j < d { r[(i, j)] } else { 0.0 }));
            let a = psi_split(strain_from_grad(&e, d).unwrap().eigenvalues(), &mat, SplitMode::Spectral);
            let b = psi_split(strain_from_grad(&rotated, d).unwrap().eigenvalues(), &mat, SplitMode::Spectral);
            worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
        out.push(line("split", format!("rotation_d{d}"), worst <= 1e-10, format!("strains=100 max_abs_err={worst:.2e}")));
    }
    out
}

/// 1000 Dirichlet samples per preset under random network parameters.
pub fn bc_suite(seed: u64) -> Vec<CheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PRESET_NAMES
        .iter()
        .map(|name| {
            let cfg = RunConfig::preset(name).expect("preset");
            let dim = cfg.dim();
            let arch = MlpArchitecture::new(cfg.architecture.clone()).unwrap();
            let mut worst = 0.0f64;
            let samples = 1000;
            for chunk in 0..10 {
                let theta: Vec<f64> =
                    init_xavier(&arch, rng.gen()).theta.into_values().into_iter().map(|v| v * rng.gen_range(0.5..4.0)).collect();
                let load = rng.gen_range(-1.0..1.0) * (chunk + 1) as f64 * cfg.load.delta_u.abs().max(1e-3);
                for s in cfg.transform.dirichlet_samples(&mut rng, samples / 10, load) {
                    let raw = forward_with(&arch, &theta, &s.x[..dim]);
                    let fields = cfg.transform.apply(&s.x[..dim], &raw, load);
                    worst = worst.max((fields[s.field] - s.value).abs());
                }
            }
            line("bc", *name, worst <= 1e-12, format!("samples={samples} max_abs_err={worst:.2e}"))
        })
        .collect()
}
