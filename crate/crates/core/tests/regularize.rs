use faer::linalg::solvers::Solve;
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use viscowri::field::{grad_x_into, grad_z_into, tv_norm_slice};
use viscowri::regularize::*;
use viscowri::{Grid2D, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_operator(rows: usize, cols: usize, seed: u64) -> DenseOperator {
    let mut r = rng(seed);
    let s = 0.5f64.sqrt();
    DenseOperator::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        C64::new(re * s, im * s)
    })
}

fn real_operator(rows: usize, cols: usize, seed: u64) -> DenseOperator {
    let mut r = rng(seed);
    DenseOperator::from_fn(rows, cols, |i, j| {
        let v: f64 = StandardNormal.sample(&mut r);
        C64::new(v + if i == j { 3.0 } else { 0.0 }, 0.0)
    })
}

fn random_complex(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    (0..n).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn piecewise_complex(grid: &Grid2D) -> Vec<C64> {
    (0..grid.len())
        .map(|k| {
            let (iz, ix) = (k % grid.nz(), k / grid.nz());
            if iz < grid.nz() / 2 && ix < grid.nx() / 2 {
                C64::new(1.0, 0.5)
            } else if ix >= grid.nx() / 2 {
                C64::new(-0.5, 1.0)
            } else {
                C64::new(0.2, -0.3)
            }
        })
        .collect()
}

struct Identity(usize);

impl LinearOperator for Identity {
    fn model_len(&self) -> usize {
        self.0
    }
    fn data_len(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        x.to_vec()
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        y.to_vec()
    }
    fn gram(&self) -> Gram {
        Gram::Diagonal(vec![1.0; self.0])
    }
}

/// Dense matrix of a gradient operator, built column by column.
fn gradient_matrix(grid: &Grid2D, x_dir: bool) -> Mat<f64> {
    let n = grid.len();
    let mut m = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        if x_dir {
            grad_x_into(grid, &e, &mut out).unwrap();
        } else {
            grad_z_into(grid, &e, &mut out).unwrap();
        }
        for i in 0..n {
            m[(i, j)] = out[i];
        }
        e[j] = 0.0;
    }
    m
}

#[test]
fn dense_operator_adjoint_identity() {
    let op = gaussian_operator(7, 12, 3);
    let x = random_complex(12, 4);
    let y = random_complex(7, 5);
    let lhs: C64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
    let rhs: C64 = x.iter().zip(op.apply_adjoint(&y)).map(|(a, b)| a * b.conj()).sum();
    assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
}

#[test]
fn tv_model_solve_recovers_consistent_stack() {
    let grid = Grid2D::new(5, 4, 1.0).unwrap();
    let op = gaussian_operator(8, 20, 11);
    let x_true = random_complex(20, 12);
    let y = op.apply(&x_true);
    let meas = LinearMeasurement::new(grid, &op, y.clone()).unwrap();
    let mut aux = TvAuxState::<C64>::zeros(20);
    grad_x_into(&grid, &x_true, &mut aux.px).unwrap();
    grad_z_into(&grid, &x_true, &mut aux.pz).unwrap();
    let hyper = RegHyperparams { lambda: 2.0, gamma_x: 0.7, gamma_z: 1.3, ..Default::default() };
    let x = tv_model_solve(&meas, &y, &aux, &hyper).unwrap();
    assert!(rel_err(&x, &x_true) < 1e-10);
}

#[test]
fn tv_model_solve_normal_residual() {
    let grid = Grid2D::new(6, 5, 2.0).unwrap();
    let n = grid.len();
    let dx = gradient_matrix(&grid, true);
    let dz = gradient_matrix(&grid, false);
    for seed in 0..5 {
        let op = gaussian_operator(9, n, 100 + seed);
        let y = random_complex(9, 200 + seed);
        let aux = TvAuxState {
            px: random_complex(n, 300 + seed),
            pz: random_complex(n, 400 + seed),
            qx: random_complex(n, 500 + seed),
            qz: random_complex(n, 600 + seed),
        };
        let (lambda, gx, gz) = (1.5, 0.4, 2.5);
        let hyper = RegHyperparams { lambda, gamma_x: gx, gamma_z: gz, ..Default::default() };
        let meas = LinearMeasurement::new(grid, &op, y.clone()).unwrap();
        let x = tv_model_solve(&meas, &y, &aux, &hyper).unwrap();

        let g = op.matrix();
        let normal = Mat::<C64>::from_fn(n, n, |i, j| {
            let data: C64 = (0..g.nrows()).map(|k| g[(k, i)].conj() * g[(k, j)]).sum();
            let reg: f64 = (0..n).map(|k| gx * dx[(k, i)] * dx[(k, j)] + gz * dz[(k, i)] * dz[(k, j)]).sum();
            data * lambda + reg
        });
        let rhs: Vec<C64> = (0..n)
            .map(|i| {
                let data: C64 = (0..g.nrows()).map(|k| g[(k, i)].conj() * y[k]).sum();
                let reg: C64 = (0..n)
                    .map(|k| (aux.px[k] + aux.qx[k]) * gx * dx[(k, i)] + (aux.pz[k] + aux.qz[k]) * gz * dz[(k, i)])
                    .sum();
                data * lambda + reg
            })
            .collect();
        let res: Vec<C64> =
            (0..n).map(|i| (0..n).map(|j| normal[(i, j)] * x[j]).sum::<C64>() - rhs[i]).collect();
        assert!(norm(&res) <= 1e-9 * norm(&rhs), "seed {seed}: {}", norm(&res) / norm(&rhs));
    }
}

#[test]
fn singular_normal_system_is_reported() {
    let grid = Grid2D::new(3, 3, 1.0).unwrap();
    let op = gaussian_operator(4, 9, 1);
    let meas = LinearMeasurement::new(grid, &op, vec![C64::new(1.0, 0.0); 4]).unwrap();
    let hyper = RegHyperparams { lambda: 0.0, ..Default::default() };
    let err = tv_model_solve(&meas, &meas.y, &TvAuxState::zeros(9), &hyper);
    assert!(matches!(err, Err(viscowri::Error::Solver(_)) | Err(viscowri::Error::InvalidArgument(_))));
}

#[test]
fn alg1_denoises_piecewise_constant_field() {
    let grid = Grid2D::new(12, 10, 1.0).unwrap();
    let x_pc = piecewise_complex(&grid);
    let op = Identity(grid.len());
    let meas = LinearMeasurement::new(grid, &op, x_pc.clone()).unwrap();
    let hyper = RegHyperparams { lambda: 5.0, max_iters: 200, ..Default::default() }.with_gamma(2.0);
    let (x, log) = alg1_solve(&meas, &hyper, true).unwrap();
    assert!(rel_err(&x, &x_pc) <= 1e-3, "{}", rel_err(&x, &x_pc));
    assert_eq!(log.len(), 200);
}

#[test]
fn alg1_large_lambda_inverts_operator() {
    let grid = Grid2D::new(4, 4, 1.0).unwrap();
    let op = real_operator(16, 16, 9);
    let x_true = random_complex(16, 10);
    let meas = LinearMeasurement::new(grid, &op, op.apply(&x_true)).unwrap();
    let hyper = RegHyperparams { lambda: 1e12, max_iters: 5, ..Default::default() };
    let (x, _) = alg1_solve(&meas, &hyper, false).unwrap();
    assert!(rel_err(&x, &x_true) < 1e-6);
}

#[test]
fn alg2_half_tau_matches_rescaled_alg1_on_real_data() {
    let grid = Grid2D::new(6, 6, 1.0).unwrap();
    let op = real_operator(20, 36, 21);
    let x_true: Vec<C64> = (0..36).map(|k| C64::new(if k % 6 < 3 { 1.0 } else { -0.5 }, 0.0)).collect();
    let meas = LinearMeasurement::new(grid, &op, op.apply(&x_true)).unwrap();
    let base = RegHyperparams { lambda: 1.0, tau: 0.5, max_iters: 40, ..Default::default() }.with_gamma(3.0);
    let (x2, _) = alg2_solve(&meas, &base, true).unwrap();
    let scaled = RegHyperparams { lambda: 2.0, ..base }.with_gamma(6.0);
    let (x1, _) = alg1_solve(&meas, &scaled, true).unwrap();
    assert!(rel_err(&x2, &x1) < 1e-10);
    assert!(x2.iter().all(|z| z.im.abs() < 1e-12));
}

#[test]
fn alg2_tau_one_leaves_imaginary_part_unregularized() {
    let grid = Grid2D::new(5, 4, 1.0).unwrap();
    let op = real_operator(20, 20, 31);
    let x_true: Vec<C64> = (0..20).map(|k| C64::new(0.0, if k < 10 { 1.0 } else { 2.0 })).collect();
    let meas = LinearMeasurement::new(grid, &op, op.apply(&x_true)).unwrap();
    let hyper = RegHyperparams { lambda: 1.0, tau: 1.0, max_iters: 300, ..Default::default() }.with_gamma(1.0);
    let (x, _) = alg2_solve(&meas, &hyper, false).unwrap();
    assert!(rel_err(&x, &x_true) <= 1e-6, "{}", rel_err(&x, &x_true));
}

#[test]
fn zero_data_gives_zero_model() {
    let grid = Grid2D::new(4, 5, 1.0).unwrap();
    let op = gaussian_operator(8, 20, 41);
    let meas = LinearMeasurement::new(grid, &op, vec![C64::new(0.0, 0.0); 8]).unwrap();
    let hyper = RegHyperparams { max_iters: 10, ..Default::default() };
    let (x1, _) = alg1_solve(&meas, &hyper, true).unwrap();
    let (x2, _) = alg2_solve(&meas, &hyper, true).unwrap();
    let (p3, _) = alg3_solve(&meas, &hyper, true).unwrap();
    assert!(x1.iter().chain(&x2).all(|z| z.norm() == 0.0));
    assert!(p3.a.iter().all(|&a| a == 0.0));
}

#[test]
fn alg3_real_reduction_keeps_zero_phase() {
    let grid = Grid2D::line(40, 1.0).unwrap();
    let op = real_operator(40, 40, 51);
    let a_true: Vec<f64> = (0..40).map(|i| if i < 15 { 1.0 } else if i < 30 { 2.0 } else { 0.5 }).collect();
    let x_true: Vec<C64> = a_true.iter().map(|&a| C64::new(a, 0.0)).collect();
    let meas = LinearMeasurement::new(grid, &op, op.apply(&x_true)).unwrap();
    let hyper = RegHyperparams { lambda: 1.0, tau: 1.0, max_iters: 300, ..Default::default() }.with_gamma(5.0);
    let (p, _) = alg3_solve(&meas, &hyper, true).unwrap();
    assert!(p.theta.iter().all(|&t| t == 0.0));
    assert!(rel_err(&p.to_complex(), &x_true) < 1e-4, "{}", rel_err(&p.to_complex(), &x_true));
}

#[test]
fn alg3_magnitude_stays_nonnegative() {
    let grid = Grid2D::line(30, 1.0).unwrap();
    let op = gaussian_operator(12, 30, 61);
    let x: Vec<C64> = (0..30).map(|i| C64::from_polar(if i < 12 { 1.0 } else { 0.3 }, 0.02 * i as f64)).collect();
    let meas = LinearMeasurement::new(grid, &op, op.apply(&x)).unwrap();
    let hyper = RegHyperparams { max_iters: 50, ..Default::default() }.with_gamma(10.0);
    let mut solver = TvSolver::new(&meas, hyper, Scheme::Alg3).unwrap();
    for _ in 0..50 {
        solver.iterate(true).unwrap();
        assert!(solver.state.polar.a.iter().all(|&a| a >= 0.0));
    }
}

#[test]
fn phase_step_does_not_increase_objective() {
    let grid = Grid2D::line(25, 1.0).unwrap();
    for seed in 0..10 {
        let op = gaussian_operator(10, 25, 700 + seed);
        let mut r = rng(800 + seed);
        let a: Vec<f64> = (0..25).map(|_| r.random_range(0.1..1.5)).collect();
        let theta: Vec<f64> = (0..25).map(|_| r.random_range(-1.0..1.0)).collect();
        let y = random_complex(10, 900 + seed);
        let hyper = RegHyperparams { lambda: 0.7, tau: 0.4, phase_weight: 3.0, ..Default::default() };
        let objective = |t: &[f64]| {
            (1.0 - hyper.tau) * hyper.phase_weight * phase_regularizer(&grid, t, hyper.phase_reg).unwrap()
                + hyper.lambda * phase_misfit(t, &a, &op, &y)
        };
        let grad = phase_misfit_gradient(&theta, &a, &op, &y).unwrap();
        let c = curvature_estimate(&op.gram(), &a, &theta);
        let delta = composite_gradient_step(&grid, &theta, &grad, c, &hyper).unwrap();
        let out = armijo_search(&theta, &delta, &hyper, objective);
        assert!(!out.stagnated, "seed {seed}");
        assert!(out.beta > 0.0);
        assert!(out.value <= objective(&theta));
    }
}

#[test]
fn phase_gradient_matches_central_differences() {
    let mut r = rng(2024);
    for inst in 0..20 {
        let n = r.random_range(2..=40);
        let m = r.random_range(1..=30);
        let op = gaussian_operator(m, n, 1000 + inst);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0)).collect();
        let theta: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let y = random_complex(m, 2000 + inst);
        let g = phase_misfit_gradient(&theta, &a, &op, &y).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let (mut tp, mut tm) = (theta.clone(), theta.clone());
                tp[i] += h;
                tm[i] -= h;
                (phase_misfit(&tp, &a, &op, &y) - phase_misfit(&tm, &a, &op, &y)) / (2.0 * h)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num <= 1e-6 * den, "instance {inst}: {}", num / den);
    }
}

#[test]
fn consistent_data_gives_zero_phase_gradient() {
    let op = gaussian_operator(6, 10, 5);
    let a: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 0.1).collect();
    let theta: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    let x: Vec<C64> = a.iter().zip(&theta).map(|(&r, &t)| C64::from_polar(r, t)).collect();
    let g = phase_misfit_gradient(&theta, &a, &op, &op.apply(&x)).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn smooth_phase_prox_matches_dense_solve() {
    let grid = Grid2D::new(8, 8, 1.0).unwrap();
    let n = grid.len();
    let dx = gradient_matrix(&grid, true);
    let dz = gradient_matrix(&grid, false);
    let t = 0.8;
    let a = Mat::<f64>::from_fn(n, n, |i, j| {
        let lap: f64 = (0..n).map(|k| dx[(k, i)] * dx[(k, j)] + dz[(k, i)] * dz[(k, j)]).sum();
        t * lap + if i == j { 1.0 } else { 0.0 }
    });
    let mut r = rng(77);
    let v: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let b = Mat::<f64>::from_fn(n, 1, |i, _| v[i]);
    let dense = a.full_piv_lu().solve(&b);
    let p = phase_prox(&grid, &v, t, PhaseReg::SmoothPhase).unwrap();
    for i in 0..n {
        assert!((p[i] - dense[(i, 0)]).abs() <= 1e-10);
    }
}

#[test]
fn refine_data_accumulates_violations() {
    let op = gaussian_operator(5, 8, 8);
    let y0 = random_complex(5, 1);
    let x1 = random_complex(8, 2);
    let x2 = random_complex(8, 3);
    let y1 = refine_data(&y0, &y0, &op, &x1).unwrap();
    let y2 = refine_data(&y1, &y0, &op, &x2).unwrap();
    let (g1, g2) = (op.apply(&x1), op.apply(&x2));
    for k in 0..5 {
        let expected = y0[k] * 2.0 - g1[k] - g2[k];
        assert!((y2[k] - y0[k] - expected).norm() < 1e-13);
    }
    let x_fit = vec![C64::new(0.0, 0.0); 8];
    let zero = vec![C64::new(0.0, 0.0); 5];
    assert_eq!(refine_data(&zero, &zero, &op, &x_fit).unwrap(), zero);
}

#[test]
fn refinement_enforces_underdetermined_constraint() {
    let n = 500;
    let grid = Grid2D::line(n, 1.0).unwrap();
    let op = gaussian_operator(50, n, 4242);
    let x: Vec<C64> = (0..n)
        .map(|i| C64::from_polar(if i < 100 { 0.1 } else if i < 300 { 0.2 } else { 0.05 }, 0.002 * i as f64))
        .collect();
    let y = op.apply(&x);
    let meas = LinearMeasurement::new(grid, &op, y.clone()).unwrap();
    let hyper = RegHyperparams { lambda: 100.0, max_iters: 500, ..Default::default() }.with_gamma(1000.0);
    let (_, log) = alg1_solve(&meas, &hyper, true).unwrap();
    let last = log.last().unwrap();
    assert!(last.constraint_violation < 1e-6 * norm(&y).max(1.0), "{}", last.constraint_violation);
}

#[test]
fn iteration_log_has_expected_columns() {
    let rec = IterationRecord {
        iter: 3,
        data_misfit: 1.0,
        tv_a: 2.0,
        phase_reg: 0.0,
        constraint_violation: 0.5,
        beta: 1.0,
        c: 4.0,
    };
    let mut buf = Vec::new();
    write_iteration_log(&[rec], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,data_misfit,tv_a,phase_reg,constraint_violation,beta,c");
    assert!(lines.next().unwrap().starts_with("3,"));
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| C64::new(a, b)), len)
}

proptest! {
    #[test]
    fn joint_prox_is_nonexpansive_and_keeps_phase(
        zx in complex_vec(16), zz in complex_vec(16), gx in 0.1..10.0f64, gz in 0.1..10.0f64
    ) {
        let (px, pz) = joint_prox_update(&zx, &zz, gx, gz);
        for k in 0..16 {
            prop_assert!(px[k].norm() <= zx[k].norm() + 1e-15);
            prop_assert!(pz[k].norm() <= zz[k].norm() + 1e-15);
            if px[k].norm() > 1e-12 {
                prop_assert!((px[k].arg() - zx[k].arg()).abs() < 1e-12);
            }
            if pz[k].norm() > 1e-12 {
                prop_assert!((pz[k].arg() - zz[k].arg()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separate_prox_is_nonexpansive(
        zx in complex_vec(16), zz in complex_vec(16), g in 0.1..10.0f64, tau in 0.0..=1.0f64
    ) {
        let (px, pz) = separate_ri_prox_update(&zx, &zz, g, g, tau);
        for k in 0..16 {
            prop_assert!(px[k].re.abs() <= zx[k].re.abs() + 1e-15);
            prop_assert!(px[k].im.abs() <= zx[k].im.abs() + 1e-15);
            prop_assert!(pz[k].norm() <= zz[k].norm() + 1e-15);
        }
    }

    #[test]
    fn soft_threshold_identity(re in -10.0..10.0f64, im in -10.0..10.0f64, g in 0.0..5.0f64) {
        let z = C64::new(re, im);
        let p = z * shrink_weight(z.norm(), g);
        prop_assert!((p.norm() - (z.norm() - g).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn half_tau_on_real_input_halves_threshold(
        x in prop::collection::vec(-5.0..5.0f64, 12), z in prop::collection::vec(-5.0..5.0f64, 12), g in 0.1..10.0f64
    ) {
        let zx: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        let zz: Vec<C64> = z.iter().map(|&v| C64::new(v, 0.0)).collect();
        let (sx, sz) = separate_ri_prox_update(&zx, &zz, g, g, 0.5);
        let (jx, jz) = joint_prox_update(&zx, &zz, 2.0 * g, 2.0 * g);
        for k in 0..12 {
            prop_assert!((sx[k] - jx[k]).norm() < 1e-14);
            prop_assert!((sz[k] - jz[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn tv_of_a_scaled_field_scales(v in prop::collection::vec(-3.0..3.0f64, 20), s in -4.0..4.0f64) {
        let grid = Grid2D::new(4, 5, 0.5).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        let a = tv_norm_slice(&grid, &v).unwrap();
        let b = tv_norm_slice(&grid, &scaled).unwrap();
        prop_assert!((b - s.abs() * a).abs() <= 1e-12 * (1.0 + b));
    }
}
