use pinn_fracture::config::{HistoryPolicy, InitialHistory, RunConfig};
use pinn_fracture::geometry::presets;
use pinn_fracture::network::{init_xavier, MlpParams, OutputTransform};
use pinn_fracture::quadrature::{build_boundary_cloud, build_cloud, GaussCloud};
use pinn_fracture::solver::{point_densities, reference_energy, stress, Assembler, Problem, Solver};
use pinn_fracture::{MaterialParams, SplitMode};

fn thinned(cloud: &GaussCloud, every: usize) -> GaussCloud {
    let keep: Vec<usize> = (0..cloud.len()).step_by(every).collect();
    GaussCloud {
        dim: cloud.dim,
        points: keep.iter().map(|&i| cloud.points[i]).collect(),
        weights: keep.iter().map(|&i| cloud.weights[i]).collect(),
        cell: keep.iter().map(|&i| cloud.cell[i]).collect(),
    }
}

fn small_problem(name: &str, every: usize, edit: impl FnOnce(&mut RunConfig)) -> Problem {
    let mut cfg = RunConfig::preset(name).unwrap();
    edit(&mut cfg);
    let domain = presets::by_name(name, cfg.material.l0).unwrap();
    let cloud = thinned(&build_cloud(&domain.mesh, &domain.patches, cfg.gauss_per_dim).unwrap(), every);
    let edge = build_boundary_cloud(&domain.patches, &domain.loaded_faces, cfg.gauss_per_dim).unwrap();
    Problem::with_parts(cfg, domain, cloud, edge).unwrap()
}

fn quick_budgets(cfg: &mut RunConfig) {
    cfg.adam.iters = 30;
    cfg.lbfgs.max_iters = 30;
    cfg.transfer.lbfgs.max_iters = 30;
    cfg.output.grid = 11;
}

/// `sum w f` for prescribed raw outputs and Jacobians.
fn manufactured_energy(problem: &Problem, field: impl Fn(&[f64; 3]) -> ([f64; 4], [[f64; 3]; 4])) -> f64 {
    let n = problem.dim + 1;
    problem
        .points
        .iter()
        .map(|p| {
            let (y, jac) = field(&p.x);
            p.weight * point_densities(problem, p, &y[..n], &jac[..n], 0.0, 0.0).unwrap().total()
        })
        .sum()
}

#[test]
fn zero_network_and_load_give_zero_energy() {
    let mut cfg = RunConfig::preset("bar1d").unwrap();
    cfg.initial_history = InitialHistory::Plateau { value: 0.0, half_width: 0.0 };
    cfg.body_force = None;
    let domain = presets::by_name("bar1d", cfg.material.l0).unwrap();
    let cloud = build_cloud(&domain.mesh, &domain.patches, 8).unwrap();
    let edge = build_boundary_cloud(&domain.patches, &domain.loaded_faces, 8).unwrap();
    let problem = Problem::with_parts(cfg, domain, cloud, edge).unwrap();
    let theta = MlpParams::zeros(problem.arch.clone());
    let h = vec![0.0; problem.points.len()];
    assert_eq!(Assembler::default().energy(&problem, &h, 0.0, theta.values()).unwrap(), 0.0);
}

#[test]
fn linear_bar_stores_half_strain_squared() {
    let eps = 0.3;
    let problem = small_problem("bar1d", 1, |c| {
        c.transform = OutputTransform::Identity;
        c.body_force = None;
        c.material = MaterialParams { lambda: 0.0, mu: 0.5, gc: 1.0, l0: 0.0125 };
    });
    let e = manufactured_energy(&problem, |x| ([eps * x[0], 0.0, 0.0, 0.0], [[eps, 0.0, 0.0], [0.0; 3], [0.0; 3], [0.0; 3]]));
    assert!((e - 0.5 * eps * eps * 2.0).abs() < 1e-12, "{e}");
}

#[test]
fn manufactured_plane_field_energy() {
    let a = 0.7;
    for split in [SplitMode::Spectral, SplitMode::NoSplit] {
        let problem = small_problem("senp-tension", 1, |c| {
            c.transform = OutputTransform::Identity;
            c.split = split;
            c.history = HistoryPolicy::Frozen;
            c.material = MaterialParams { lambda: 0.0, mu: 1.0, gc: 1.0, l0: 0.0125 };
        });
        let e = manufactured_energy(&problem, |x| ([a * x[0], 0.0, 0.0, 0.0], [[a, 0.0, 0.0], [0.0; 3], [0.0; 3], [0.0; 3]]));
        assert!((e - a * a).abs() < 1e-10, "{split:?}: {e}");
    }
}

#[test]
fn fast_gradient_matches_tape() {
    for (name, every) in [("bar1d", 7), ("senp-tension", 997), ("cube-tension", 301)] {
        for policy in [HistoryPolicy::Live, HistoryPolicy::Frozen] {
            let problem = small_problem(name, every, |c| {
                c.history = policy;
                c.architecture = match name {
                    "bar1d" => vec![1, 6, 5, 2],
                    "cube-tension" => vec![3, 6, 5, 4],
                    _ => vec![2, 6, 5, 3],
                };
            });
            let params = init_xavier(&problem.arch, 3);
            let h: Vec<f64> = (0..problem.points.len()).map(|i| 1e-3 * (i % 5) as f64).collect();
            let load = if name == "bar1d" { 0.0 } else { 3.0 * problem.cfg.load.delta_u };
            let (e_ref, g_ref) = reference_energy(&problem, &h, load, &params.theta).unwrap();
            let mut grad = vec![0.0; params.values().len()];
            let mut asm = Assembler::new(4);
            let e = asm.energy_grad(&problem, &h, load, params.values(), 0, &mut grad).unwrap();
            assert!((e - e_ref).abs() <= 1e-12 * (1.0 + e_ref.abs()), "{name}: {e} vs {e_ref}");
            for (a, b) in grad.iter().zip(g_ref.values()) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{name}: {a} vs {b}");
            }
            let last = problem.arch.n_layers() - 1;
            let cut = problem.arch.layout()[last].offset;
            let mut tail = vec![0.0; grad.len()];
            let e_tail = asm.energy_grad(&problem, &h, load, params.values(), last, &mut tail).unwrap();
            assert_eq!(e_tail.to_bits(), e.to_bits());
            assert!(tail[..cut].iter().all(|&v| v == 0.0));
            for (a, b) in tail[cut..].iter().zip(&grad[cut..]) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn chunking_does_not_change_the_gradient() {
    let problem = small_problem("senp-tension", 97, |_| {});
    let params = init_xavier(&problem.arch, 1);
    let h = vec![0.0; problem.points.len()];
    let mut g1 = vec![0.0; params.values().len()];
    let mut g2 = g1.clone();
    let e1 = Assembler::new(1024).energy_grad(&problem, &h, 1e-3, params.values(), 0, &mut g1).unwrap();
    let e2 = Assembler::new(100).energy_grad(&problem, &h, 1e-3, params.values(), 0, &mut g2).unwrap();
    assert!((e1 - e2).abs() < 1e-14 * e1.abs().max(1.0));
    for (a, b) in g1.iter().zip(&g2) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn uniaxial_strain_reaction() {
    let problem = small_problem("senp-tension", 1, |_| {});
    let cfg = &problem.cfg;
    let delta = 1e-3;
    let mut grad = [[0.0; 3]; 3];
    grad[1][1] = delta;
    let mut total = 0.0;
    for (n, w) in problem.edge.normals.iter().zip(&problem.edge.weights) {
        let s = stress(&grad, 0.0, 2, cfg);
        total += w * (s[1][0] * n[0] + s[1][1] * n[1]);
    }
    let expected = (cfg.material.lambda + 2.0 * cfg.material.mu) * delta;
    assert!((total - expected).abs() < 1e-12, "{total} vs {expected}");
}

#[test]
fn shear_stress_is_symmetric_and_linear() {
    let cfg = RunConfig::preset("cube-tension").unwrap();
    let mut grad = [[0.0; 3]; 3];
    grad[0][1] = 2e-3;
    let s = stress(&grad, 0.0, 3, &cfg);
    assert!((s[0][1] - s[1][0]).abs() < 1e-15);
    assert!((s[0][1] - cfg.material.mu * 2e-3).abs() < 1e-12, "{}", s[0][1]);
}

#[test]
fn zero_displacement_gives_zero_reaction() {
    let problem = small_problem("senp-tension", 50, |c| c.load.delta_u = 0.0);
    let mut solver = Solver::from_problem(problem).unwrap();
    solver.params = MlpParams::zeros(solver.problem.arch.clone());
    assert!(solver.reaction_load(0.0).unwrap().abs() < 1e-10);
}

#[test]
fn training_lowers_energy_and_history_grows() {
    let problem = small_problem("senp-tension", 40, |c| {
        quick_budgets(c);
        c.load.n_steps = 2;
    });
    let mut solver = Solver::from_problem(problem).unwrap();
    let h0 = solver.history.values.clone();
    let g0 = solver.grid_history.values.clone();
    let rec = solver.train_step().unwrap().clone();
    assert!(rec.final_loss <= rec.initial_loss);
    assert!(rec.fracture_energy >= 0.0 && rec.final_loss.is_finite());
    let trace = &rec.lbfgs.as_ref().unwrap().trace;
    assert!(trace.windows(2).all(|w| w[1] < w[0]));
    assert!(solver.history.values.iter().zip(&h0).all(|(a, b)| a >= b));
    assert!(solver.grid_history.values.iter().zip(&g0).all(|(a, b)| a >= b));
    assert_eq!(solver.history.step, 1);
}

#[test]
fn transfer_steps_keep_hidden_layers_bitwise() {
    let problem = small_problem("senp-tension", 40, |c| {
        quick_budgets(c);
        c.transfer.lbfgs.max_iters = 10;
    });
    let mut solver = Solver::from_problem(problem).unwrap();
    solver.train_step().unwrap();
    let cut = solver.problem.arch.layout().last().unwrap().offset;
    let after_first = solver.params.values().to_vec();
    for _ in 0..2 {
        let rec = solver.train_step().unwrap();
        assert!(rec.transfer);
    }
    let now = solver.params.values();
    assert!(now[..cut].iter().zip(&after_first[..cut]).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_ne!(&now[cut..], &after_first[cut..]);
}

#[test]
fn single_step_ignores_transfer_flag() {
    let run = |enabled: bool| {
        let problem = small_problem("senp-tension", 80, |c| {
            quick_budgets(c);
            c.transfer.enabled = enabled;
        });
        let mut s = Solver::from_problem(problem).unwrap();
        s.train_step().unwrap();
        s.params.values().to_vec()
    };
    assert_eq!(run(true), run(false));
}

#[test]
fn warm_start_converges_faster() {
    let problem = small_problem("bar1d", 1, |c| {
        c.adam.iters = 0;
        c.lbfgs.max_iters = 400;
        c.lbfgs.ftol = 1e-7;
        c.transfer.enabled = false;
        c.output.grid = 11;
    });
    let mut solver = Solver::from_problem(problem).unwrap();
    let first = solver.train_step().unwrap().iterations();
    let second = solver.train_step().unwrap().iterations();
    assert!(second < first, "{second} vs {first}");
}

#[test]
fn dirichlet_rows_hold_on_the_prediction_grid() {
    let problem = small_problem("senp-tension", 200, |c| {
        quick_budgets(c);
        c.output.grid = 21;
    });
    let mut solver = Solver::from_problem(problem).unwrap();
    solver.train_step().unwrap();
    let d = solver.records[0].displacement;
    for row in solver.predict_fields() {
        if row.x[1] == 0.0 {
            assert_eq!(row.u[1], 0.0);
        }
        if row.x[1] == 1.0 {
            assert!((row.u[1] - d).abs() < 1e-15);
        }
    }
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem("senp-tension", 200, |c| {
        quick_budgets(c);
        c.output.vtk = true;
    });
    let mut solver = Solver::from_problem(problem).unwrap();
    for _ in 0..2 {
        solver.train_step().unwrap();
        solver.write_step(dir.path()).unwrap();
    }
    let ld = std::fs::read_to_string(dir.path().join("load_disp.csv")).unwrap();
    assert_eq!(ld.lines().count(), 3);
    assert!(ld.starts_with("step,displacement,load\n"));
    for f in ["fields_step1.csv", "loss_step1.csv", "fields_step1.vtk", "step1.ckpt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let loss = std::fs::read_to_string(dir.path().join("loss_step0.csv")).unwrap();
    assert!(loss.starts_with("iter,phase,loss\n0,adam,"));
}
