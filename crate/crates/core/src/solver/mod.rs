//! Displacement stepping: energy assembly, training, history commit,
//! transfer learning and field prediction.

pub mod analytic;
pub mod energy;
pub mod output;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::autodiff::Dual;
use crate::config::{BodyForce, ConfigError, InitialHistory, RunConfig};
use crate::fracture::{degradation, init_history, psi_split, strain_from_grad, FractureError, HistoryField};
use crate::geometry::presets::{self, Domain};
use crate::geometry::{crack_distance, GeometryError};
use crate::network::{
    init_xavier, input_block, tangent_forward, write_checkpoint, FreezeMask, MlpArchitecture, MlpParams, NetworkError,
};
use crate::optimize::{adam_run, lbfgs_run, AdamConfig, LbfgsConfig, OptimResult, Status};
use crate::Scalar;
use crate::quadrature::{build_boundary_cloud, build_cloud, BoundaryCloud, GaussCloud, QuadratureError};

pub use energy::{fields_from_raw, point_densities, reference_energy, Assembler, Densities, PointData};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Fracture(#[from] FractureError),
    #[error("non-finite energy density at x = {x:?}")]
    NonFinite { x: [f64; 3] },
    #[error("autodiff: {0}")]
    Autodiff(String),
    #[error("loaded boundary has no quadrature points")]
    MissingEdge,
    #[error("step {step} failed ({message}); state saved to {}", checkpoint.display())]
    StepFailed { step: usize, checkpoint: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything about a run that stays fixed across steps.
#[derive(Debug, Clone)]
pub struct Problem {
    pub cfg: RunConfig,
    pub dim: usize,
    pub arch: MlpArchitecture,
    pub domain: Domain,
    pub cloud: GaussCloud,
    pub edge: BoundaryCloud,
    pub points: Vec<PointData>,
}

impl Problem {
    pub fn new(cfg: RunConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let domain = presets::by_name(&cfg.preset, cfg.material.l0)?;
        let cloud = build_cloud(&domain.mesh, &domain.patches, cfg.gauss_per_dim)?;
        let edge = build_boundary_cloud(&domain.patches, &domain.loaded_faces, cfg.gauss_per_dim)?;
        Self::with_parts(cfg, domain, cloud, edge)
    }

    /// Problem over an explicit cloud, e.g. a thinned one.
    pub fn with_parts(cfg: RunConfig, domain: Domain, cloud: GaussCloud, edge: BoundaryCloud) -> Result<Self, SolverError> {
        let dim = cfg.dim();
        let arch = MlpArchitecture::new(cfg.architecture.clone())?;
        arch.check_dim(dim)?;
        let points = cloud
            .points
            .iter()
            .zip(&cloud.weights)
            .map(|(x, &w)| PointData {
                x: *x,
                weight: w,
                coeffs: cfg.transform.coefficients(&x[..dim], 1.0),
                elastic_only: is_elastic(&cfg, x),
                body_force: body_force(&cfg, x),
            })
            .collect();
        Ok(Problem { cfg, dim, arch, domain, cloud, edge, points })
    }

    /// Initial history at arbitrary points.
    pub fn initial_history(&self, points: &[[f64; 3]]) -> Vec<f64> {
        match self.cfg.initial_history {
            InitialHistory::Taper { b } => init_history(points, &self.cfg.crack, &self.cfg.material, b),
            InitialHistory::Plateau { value, half_width } => points
                .iter()
                .map(|x| if crack_distance(x, &self.cfg.crack) <= half_width { value } else { 0.0 })
                .collect(),
        }
    }

    pub fn displacement(&self, step: usize) -> f64 {
        (step + 1) as f64 * self.cfg.load.delta_u
    }
}

fn is_elastic(cfg: &RunConfig, x: &[f64; 3]) -> bool {
    cfg.elastic_regions.iter().any(|r| r.contains(&x[..cfg.dim()]))
}

fn body_force(cfg: &RunConfig, x: &[f64; 3]) -> f64 {
    match cfg.body_force {
        Some(BodyForce::SinPiX) => (std::f64::consts::PI * x[0]).sin(),
        None => 0.0,
    }
}

/// Uniform points over the bounding box of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    pub shape: [usize; 3],
    pub points: Vec<[f64; 3]>,
    pub inside: Vec<bool>,
}

impl PredictionGrid {
    pub fn new(domain: &Domain, n: usize) -> Self {
        let dim = domain.dim();
        let n = n.max(2);
        let mut shape = [1; 3];
        shape[..dim].fill(n);
        let coord = |k: usize, i: usize| {
            if k >= dim {
                0.0
            } else {
                domain.lo[k] + (domain.hi[k] - domain.lo[k]) * i as f64 / (n - 1) as f64
            }
        };
        let mut points = Vec::with_capacity(shape.iter().product());
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    points.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
        let inside = points.iter().map(|x| domain.contains(x)).collect();
        PredictionGrid { shape, points, inside }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fields and energies at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub u: [f64; 3],
    pub grad_u: [[f64; 3]; 3],
    pub phi: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub displacement: f64,
    /// Reaction on the loaded boundary, in N.
    pub load: f64,
    pub transfer: bool,
    pub adam: Option<OptimResult>,
    pub lbfgs: Option<OptimResult>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub elastic_energy: f64,
    pub fracture_energy: f64,
    pub seconds: f64,
}

impl StepRecord {
    pub fn iterations(&self) -> usize {
        self.adam.as_ref().map_or(0, |r| r.iterations) + self.lbfgs.as_ref().map_or(0, |r| r.iterations)
    }

    /// `(iter, phase, loss)` rows, Adam first.
    pub fn loss_rows(&self) -> Vec<(usize, &'static str, f64)> {
        let mut rows = Vec::new();
        for (phase, r) in [("adam", &self.adam), ("lbfgs", &self.lbfgs)] {
            if let Some(r) = r {
                rows.extend(r.trace.iter().enumerate().map(|(i, &l)| (i, phase, l)));
            }
        }
        rows
    }
}

/// Mutable state of a run.
pub struct Solver {
    pub problem: Problem,
    pub params: MlpParams,
    pub history: HistoryField,
    pub grid: PredictionGrid,
    pub grid_history: HistoryField,
    pub records: Vec<StepRecord>,
    pub assembler: Assembler,
    pool: rayon::ThreadPool,
}

impl Solver {
    pub fn new(cfg: RunConfig) -> Result<Self, SolverError> {
        Self::from_problem(Problem::new(cfg)?)
    }

    pub fn from_problem(problem: Problem) -> Result<Self, SolverError> {
        let params = init_xavier(&problem.arch, problem.cfg.seed);
        let history = HistoryField::new(problem.initial_history(&problem.cloud.points));
        let grid = PredictionGrid::new(&problem.domain, problem.cfg.output.grid);
        let grid_history = HistoryField::new(problem.initial_history(&grid.points));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(problem.cfg.threads)
            .build()
            .map_err(|e| SolverError::Threads(e.to_string()))?;
        Ok(Solver { problem, params, history, grid, grid_history, records: Vec::new(), assembler: Assembler::default(), pool })
    }

    /// Independent copy of the state (a fresh pool, an empty activation cache).
    pub fn try_clone(&self) -> Result<Self, SolverError> {
        let mut s = Self::from_problem(self.problem.clone())?;
        s.params = self.params.clone();
        s.history = self.history.clone();
        s.grid_history = self.grid_history.clone();
        s.records = self.records.clone();
        Ok(s)
    }

    pub fn step(&self) -> usize {
        self.records.len()
    }

    pub fn mask_for(&self, step: usize) -> FreezeMask {
        let n = self.problem.arch.n_layers();
        if self.problem.cfg.transfer.enabled && step >= 1 {
            FreezeMask::last_only(n)
        } else {
            FreezeMask::all(n)
        }
    }

    fn budgets(&self, step: usize) -> (AdamConfig, LbfgsConfig) {
        let cfg = &self.problem.cfg;
        if cfg.transfer.enabled && step >= 1 {
            (cfg.transfer.adam, cfg.transfer.lbfgs)
        } else {
            (cfg.adam, cfg.lbfgs)
        }
    }

    /// Energy of the current parameters at the given step's load.
    pub fn energy(&mut self, step: usize) -> Result<f64, SolverError> {
        let load = self.problem.displacement(step);
        let theta = self.params.values().to_vec();
        let Solver { problem, history, assembler, pool, .. } = self;
        pool.install(|| assembler.energy(problem, &history.values, load, &theta))
    }

    /// Train at the next displacement, then commit parameters and history.
    pub fn train_step(&mut self) -> Result<&StepRecord, SolverError> {
        let started = Instant::now();
        let step = self.step();
        let load = self.problem.displacement(step);
        let mask = self.mask_for(step);
        let (adam_cfg, lbfgs_cfg) = self.budgets(step);
        let start = mask.first_trainable();
        let layout = self.problem.arch.layout();
        let ranges: Vec<_> = layout.iter().enumerate().filter(|(l, _)| mask.is_trainable(*l)).map(|(_, s)| s.range()).collect();
        let base = self.params.values().to_vec();
        let view0: Vec<f64> = ranges.iter().flat_map(|r| base[r.clone()].iter().copied()).collect();

        let Solver { problem, history, assembler, pool, .. } = self;
        let mut failure: Option<SolverError> = None;
        let mut full = base.clone();
        let mut grad_full = vec![0.0; base.len()];
        let mut objective = |view: &[f64], grad: &mut [f64]| -> f64 {
            let mut at = 0;
            for r in &ranges {
                full[r.clone()].copy_from_slice(&view[at..at + r.len()]);
                at += r.len();
            }
            let result = pool.install(|| assembler.energy_grad(problem, &history.values, load, &full, start, &mut grad_full));
            match result {
                Ok(e) => {
                    let mut at = 0;
                    for r in &ranges {
                        grad[at..at + r.len()].copy_from_slice(&grad_full[r.clone()]);
                        at += r.len();
                    }
                    e
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };

        let mut view = view0;
        let mut adam = None;
        let mut lbfgs = None;
        if adam_cfg.iters > 0 {
            let r = adam_run(&mut objective, &view, &adam_cfg);
            view = r.theta.clone();
            adam = Some(r);
        }
        if lbfgs_cfg.max_iters > 0 {
            let r = lbfgs_run(&mut objective, &view, &lbfgs_cfg);
            view = r.theta.clone();
            lbfgs = Some(r);
        }
        let aborted = [&adam, &lbfgs].iter().any(|r| matches!(r, Some(r) if r.status == Status::NonFinite));
        let initial_loss = adam.as_ref().or(lbfgs.as_ref()).map_or(f64::NAN, |r| r.trace[0]);
        let final_loss = lbfgs.as_ref().or(adam.as_ref()).map_or(f64::NAN, |r| r.final_loss());

        crate::network::scatter_view(&mut self.params, &mask, &view)?;
        if aborted {
            let message = failure.map_or_else(|| "non-finite loss".to_string(), |e| e.to_string());
            let checkpoint = self.save_failure(step)?;
            return Err(SolverError::StepFailed { step, checkpoint, message });
        }

        let parts = self.energy_parts(load)?;
        let cloud_eval = self.evaluate(&self.problem.cloud.points.clone(), load);
        let psi: Vec<f64> = cloud_eval.iter().map(|e| e.psi_plus).collect();
        self.history.commit(&psi)?;
        let grid_eval = self.evaluate(&self.grid.points.clone(), load);
        let psi: Vec<f64> = grid_eval.iter().map(|e| e.psi_plus).collect();
        self.grid_history.commit(&psi)?;
        let reaction = self.reaction_load(load)?;

        self.records.push(StepRecord {
            step,
            displacement: load,
            load: reaction,
            transfer: start > 0,
            adam,
            lbfgs,
            initial_loss,
            final_loss,
            elastic_energy: parts.elastic,
            fracture_energy: parts.fracture,
            seconds: started.elapsed().as_secs_f64(),
        });
        Ok(self.records.last().unwrap())
    }

    fn save_failure(&self, step: usize) -> Result<PathBuf, SolverError> {
        let dir = &self.problem.cfg.output.dir;
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("failed_step{step}.ckpt"));
        write_checkpoint(BufWriter::new(File::create(&path)?), &self.params, step as u64)?;
        Ok(path)
    }

    /// Weighted sums of the energy densities with the pre-commit history.
    pub fn energy_parts(&self, load: f64) -> Result<Densities<f64>, SolverError> {
        let problem = &self.problem;
        let dim = problem.dim;
        let x: Vec<[f64; 3]> = problem.cloud.points.clone();
        let raw = self.raw_outputs(&x);
        let mut sum = Densities { elastic: 0.0, fracture: 0.0, work: 0.0, psi_plus: 0.0 };
        for (i, (pd, (y, jac))) in problem.points.iter().zip(raw).enumerate() {
            let d = point_densities(problem, pd, &y[..=dim], &jac[..=dim], self.history.values[i], load)?;
            sum.elastic += pd.weight * d.elastic;
            sum.fracture += pd.weight * d.fracture;
            sum.work += pd.weight * d.work;
            sum.psi_plus += pd.weight * d.psi_plus;
        }
        Ok(sum)
    }

    /// Raw network outputs and their spatial Jacobians.
    fn raw_outputs(&self, x: &[[f64; 3]]) -> Vec<([f64; 4], [[f64; 3]; 4])> {
        let problem = &self.problem;
        let dim = problem.dim;
        let theta = self.params.values();
        let chunks: Vec<&[[f64; 3]]> = x.chunks(1024).collect();
        let blocks: Vec<Array2<f64>> = self.pool.install(|| {
            chunks
                .par_iter()
                .map(|c| tangent_forward(&problem.arch, theta, input_block(c, dim), 0, dim).output().clone())
                .collect()
        });
        let mut out = Vec::with_capacity(x.len());
        for (c, b) in chunks.iter().zip(&blocks) {
            let p = c.len();
            for j in 0..p {
                let mut y = [0.0; 4];
                let mut jac = [[0.0; 3]; 4];
                for k in 0..=dim {
                    y[k] = b[(k, j)];
                    for d in 0..dim {
                        jac[k][d] = b[(k, (d + 1) * p + j)];
                    }
                }
                out.push((y, jac));
            }
        }
        out
    }

    /// Fields at arbitrary points; `phi` is zero inside elastic regions.
    pub fn evaluate(&self, x: &[[f64; 3]], load: f64) -> Vec<PointEval> {
        let cfg = &self.problem.cfg;
        let dim = self.problem.dim;
        self.raw_outputs(x)
            .into_iter()
            .zip(x)
            .map(|((y, jac), xi)| {
                let c = cfg.transform.coefficients(&xi[..dim], 1.0);
                let f = fields_from_raw(dim, &y, &jac, &c, load);
                let (plus, minus) = match strain_from_grad(&f.grad_u, dim) {
                    Ok(s) => psi_split(s.eigenvalues(), &cfg.material, cfg.split),
                    Err(_) => (f64::NAN, f64::NAN),
                };
                let phi = if is_elastic(cfg, xi) { 0.0 } else { f.phi };
                PointEval { u: f.u, grad_u: f.grad_u, phi, psi_plus: plus, psi_minus: minus }
            })
            .collect()
    }

    /// Traction integral on the loaded boundary along the load axis, in N.
    pub fn reaction_load(&self, load: f64) -> Result<f64, SolverError> {
        let edge = &self.problem.edge;
        if edge.is_empty() {
            return Err(SolverError::MissingEdge);
        }
        let cfg = &self.problem.cfg;
        let axis = cfg.load_axis;
        let evals = self.evaluate(&edge.points, load);
        let mut total = 0.0;
        for ((e, n), w) in evals.iter().zip(&edge.normals).zip(&edge.weights) {
            let sigma = stress(&e.grad_u, e.phi, self.problem.dim, cfg);
            let t: f64 = (0..self.problem.dim).map(|j| sigma[axis][j] * n[j]).sum();
            total += w * t;
        }
        Ok(total * 1e3)
    }

    /// Fields on the prediction grid (inside points only) with grid history.
    pub fn predict_fields(&self) -> Vec<output::FieldRow> {
        let load = self.records.last().map_or(0.0, |r| r.displacement);
        let evals = self.evaluate(&self.grid.points, load);
        self.grid
            .points
            .iter()
            .zip(evals)
            .zip(&self.grid_history.values)
            .zip(&self.grid.inside)
            .filter(|(_, &inside)| inside)
            .map(|(((x, e), &h), _)| output::FieldRow { x: *x, u: e.u, phi: e.phi, h })
            .collect()
    }

    /// Write the artifacts of the latest step to `dir`.
    pub fn write_step(&self, dir: &Path) -> Result<(), SolverError> {
        let Some(rec) = self.records.last() else { return Ok(()) };
        let dim = self.problem.dim;
        let i = rec.step;
        fs::create_dir_all(dir)?;
        let rows = self.predict_fields();
        output::write_fields(BufWriter::new(File::create(dir.join(format!("fields_step{i}.csv")))?), dim, &rows)?;
        output::write_loss(BufWriter::new(File::create(dir.join(format!("loss_step{i}.csv")))?), rec)?;
        output::write_load_disp(BufWriter::new(File::create(dir.join("load_disp.csv"))?), &self.records)?;
        let out = &self.problem.cfg.output;
        if out.vtk {
            let evals = self.evaluate(&self.grid.points, rec.displacement);
            output::write_vtk(BufWriter::new(File::create(dir.join(format!("fields_step{i}.vtk")))?), &self.grid, dim, &evals, &self.grid_history.values)?;
        }
        if out.checkpoints {
            write_checkpoint(BufWriter::new(File::create(dir.join(format!("step{i}.ckpt")))?), &self.params, i as u64)?;
        }
        Ok(())
    }
}

/// `sigma = g(phi) dPsi+/deps + dPsi-/deps`.
pub fn stress(grad_u: &[[f64; 3]; 3], phi: f64, dim: usize, cfg: &RunConfig) -> [[f64; 3]; 3] {
    const INDEX: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
    let mut e = [[Dual::<f64, 6>::lift(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = Dual::seed(0.5 * (grad_u[i][j] + grad_u[j][i]), INDEX[i][j]);
        }
    }
    let mut sigma = [[0.0; 3]; 3];
    let Ok(s) = strain_from_grad(&e, dim) else { return [[f64::NAN; 3]; 3] };
    let (plus, minus) = psi_split(s.eigenvalues(), &cfg.material, cfg.split);
    let f = plus.scale(degradation(phi)) + minus;
    for i in 0..dim {
        for j in 0..dim {
            let scale = if i == j { 1.0 } else { 0.5 };
            sigma[i][j] = scale * f.d[INDEX[i][j]];
        }
    }
    sigma
}

/// Run every step of `cfg`, writing artifacts to `out` when given.
pub fn run(cfg: RunConfig, out: Option<&Path>) -> Result<Solver, SolverError> {
    let mut solver = Solver::new(cfg)?;
    for _ in 0..solver.problem.cfg.load.n_steps {
        let rec = solver.train_step()?;
        log::info!("step {} u = {:.4e} loss = {:.6e} load = {:.3} N", rec.step, rec.displacement, rec.final_loss, rec.load);
        if let Some(dir) = out {
            solver.write_step(dir)?;
        }
    }
    Ok(solver)
}
