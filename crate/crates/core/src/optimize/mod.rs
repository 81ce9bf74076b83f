//! Full-batch Adam and L-BFGS with a strong-Wolfe line search.
//!
//! Objectives are closures `f(theta, grad_out) -> value`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Gradient or relative-decrease tolerance reached.
    Converged,
    /// Iteration budget used up.
    MaxIters,
    /// No acceptable step found; best point so far returned.
    LineSearchFailed,
    /// Objective produced a non-finite value; last finite iterate returned.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub theta: Vec<f64>,
    /// Loss at the starting point and at every accepted iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
}

impl OptimResult {
    pub fn final_loss(&self) -> f64 {
        *self.trace.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iters: usize,
    /// Stop once `max|grad| <= grad_tol`.
    pub grad_tol: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, iters: 1500, grad_tol: 0.0 }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bias-corrected Adam. The trace has `iters + 1` entries unless the run
/// stops early.
pub fn adam_run<F>(mut f: F, theta0: &[f64], cfg: &AdamConfig) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let mut g = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut trace = Vec::with_capacity(cfg.iters + 1);
    let mut evaluations = 0;
    for t in 1..=cfg.iters {
        let loss = f(&theta, &mut g);
        evaluations += 1;
        if !loss.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return OptimResult { theta, trace, iterations: t - 1, evaluations, status: Status::NonFinite };
        }
        trace.push(loss);
        if inf_norm(&g) <= cfg.grad_tol {
            return OptimResult { theta, trace, iterations: t - 1, evaluations, status: Status::Converged };
        }
        let c1 = 1.0 - cfg.beta1.powi(t as i32);
        let c2 = 1.0 - cfg.beta2.powi(t as i32);
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            theta[i] -= cfg.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.eps);
        }
    }
    let loss = f(&theta, &mut g);
    evaluations += 1;
    let status = if loss.is_finite() { Status::MaxIters } else { Status::NonFinite };
    if loss.is_finite() {
        trace.push(loss);
    }
    OptimResult { theta, trace, iterations: cfg.iters, evaluations, status }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Stop when `(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) <= ftol`.
    pub ftol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 20, max_iters: 600, grad_tol: 1e-10, ftol: 0.0, c1: 1e-4, c2: 0.9, max_line_search: 25 }
    }
}

/// Stored correction pairs with their curvature `1 / s.y`.
#[derive(Debug, Clone, Default)]
pub struct LbfgsMemory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        LbfgsMemory { pairs: VecDeque::with_capacity(capacity), capacity }
    }

    /// Keep the pair only if `s.y > 1e-12 |s| |y|`. Returns whether it was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()) || self.capacity == 0 {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y, _)| (s.as_slice(), y.as_slice()))
    }

    /// Two-loop recursion: `-H g`.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alpha.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|qi| *qi = -*qi);
        q
    }
}

struct Probe {
    alpha: f64,
    f: f64,
    d: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

fn probe<F: FnMut(&[f64], &mut [f64]) -> f64>(f: &mut F, x: &[f64], p: &[f64], alpha: f64, evals: &mut usize) -> Probe {
    let xn: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
    let mut g = vec![0.0; x.len()];
    let mut val = f(&xn, &mut g);
    *evals += 1;
    if !val.is_finite() || g.iter().any(|v| !v.is_finite()) {
        val = f64::INFINITY;
    }
    let d = if val.is_finite() { dot(&g, p) } else { f64::NAN };
    Probe { alpha, f: val, d, x: xn, g }
}

fn cubic_min(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a - b);
    let rad = d1 * d1 - lo.d * hi.d;
    let width = (b - a).abs();
    let (left, right) = (a.min(b) + 0.1 * width, a.max(b) - 0.1 * width);
    if rad >= 0.0 && hi.d.is_finite() && hi.f.is_finite() {
        let d2 = (b - a).signum() * rad.sqrt();
        let t = b - (b - a) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
        if t.is_finite() && t >= left && t <= right {
            return t;
        }
    }
    0.5 * (a + b)
}

/// Strong-Wolfe search along `p`; `None` if no acceptable point was found.
fn line_search<F>(f: &mut F, x: &[f64], fx: f64, g: &[f64], p: &[f64], alpha0: f64, cfg: &LbfgsConfig, evals: &mut usize) -> Result<Probe, Option<Probe>>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d0 = dot(g, p);
    let origin = Probe { alpha: 0.0, f: fx, d: d0, x: x.to_vec(), g: g.to_vec() };
    let armijo = |q: &Probe| q.f <= fx + cfg.c1 * q.alpha * d0;
    let mut best: Option<Probe> = None;
    let keep = |q: &Probe, best: &mut Option<Probe>| {
        if q.f < fx && armijo(q) && best.as_ref().is_none_or(|b| q.f < b.f) {
            *best = Some(Probe { alpha: q.alpha, f: q.f, d: q.d, x: q.x.clone(), g: q.g.clone() });
        }
    };
    let mut prev = origin;
    let mut alpha = alpha0;
    let mut budget = cfg.max_line_search;
    let (mut lo, mut hi);
    loop {
        if budget == 0 {
            return Err(best);
        }
        budget -= 1;
        let cur = probe(f, x, p, alpha, evals);
        keep(&cur, &mut best);
        if !armijo(&cur) || (prev.alpha > 0.0 && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if cur.d.abs() <= -cfg.c2 * d0 {
            return Ok(cur);
        }
        if cur.d >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        prev = cur;
        alpha *= 2.0;
    }
    while budget > 0 {
        budget -= 1;
        let a = cubic_min(&lo, &hi);
        if (a - lo.alpha).abs() <= 1e-16 * a.abs().max(1e-300) {
            break;
        }
        let cur = probe(f, x, p, a, evals);
        keep(&cur, &mut best);
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.d.abs() <= -cfg.c2 * d0 {
                return Ok(cur);
            }
            if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    Err(best)
}

pub fn lbfgs_run<F>(mut f: F, theta0: &[f64], cfg: &LbfgsConfig) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = theta0.len();
    let mut x = theta0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return OptimResult { theta: x, trace: vec![], iterations: 0, evaluations, status: Status::NonFinite };
    }
    let mut trace = vec![fx];
    let mut mem = LbfgsMemory::new(cfg.memory);
    let mut iterations = 0;
    let mut status = Status::MaxIters;
    while iterations < cfg.max_iters {
        if inf_norm(&g) <= cfg.grad_tol {
            status = Status::Converged;
            break;
        }
        let mut p = mem.direction(&g);
        if !(dot(&p, &g) < 0.0) {
            mem.clear();
            p = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if mem.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let step = match line_search(&mut f, &x, fx, &g, &p, alpha0, cfg, &mut evaluations) {
            Ok(s) => Ok(s),
            Err(best) if !mem.is_empty() => {
                mem.clear();
                let p: Vec<f64> = g.iter().map(|v| -v).collect();
                let a0 = (1.0 / inf_norm(&g)).min(1.0);
                line_search(&mut f, &x, fx, &g, &p, a0, cfg, &mut evaluations).or(Err(best))
            }
            Err(best) => Err(best),
        };
        let (accepted, failed) = match step {
            Ok(s) => (Some(s), false),
            Err(best) => (best, true),
        };
        let Some(s) = accepted.filter(|s| s.f < fx) else {
            status = Status::LineSearchFailed;
            break;
        };
        let sv: Vec<f64> = s.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = s.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        mem.push(sv, yv);
        let rel = (fx - s.f) / fx.abs().max(s.f.abs()).max(1.0);
        x = s.x;
        g = s.g;
        fx = s.f;
        trace.push(fx);
        iterations += 1;
        if failed {
            status = Status::LineSearchFailed;
            break;
        }
        if rel <= cfg.ftol {
            status = Status::Converged;
            break;
        }
    }
    if status == Status::MaxIters && inf_norm(&g) <= cfg.grad_tol {
        status = Status::Converged;
    }
    OptimResult { theta: x, trace, iterations, evaluations, status }
}
