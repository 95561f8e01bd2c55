mod common;

use common::*;
use proptest::prelude::*;
use tt_rram::completion::{cg_run, relative_residual};
use tt_rram::{
    cg_solve, exact_step, objective, residual, retract_fixed_rank, riemannian_gradient, Ambient, CgConfig, CgStop,
    CgTrace, SampleSet, TangentFrame, TtTensor,
};

fn problem(shape: &[usize], r_true: &[usize], every: usize, seed: u64) -> (SampleSet<f64>, TtTensor<f64>) {
    let a = TtTensor::random_normal(shape, r_true, &mut rng(seed)).unwrap();
    let dense = brute_dense(&a);
    let positions: Vec<usize> = (0..dense.len()).filter(|p| (p * 7 + seed as usize) % every == 0).collect();
    (SampleSet::from_dense(&dense, &positions).unwrap(), a)
}

#[test]
fn objective_and_residual_match_dense() {
    let (omega, _) = problem(&[4, 5, 3], &[2, 2], 3, 1);
    let x = TtTensor::random_normal(&[4, 5, 3], &[2, 1], &mut rng(2)).unwrap();
    let xd = brute_dense(&x);
    let r = residual(&x, &omega).unwrap();
    let mut f = 0.0;
    for (s, idx) in omega.indices().enumerate() {
        let want = xd.get(idx) - omega.values()[s];
        assert!((r.values()[s] - want).abs() < 1e-12);
        f += 0.5 * want * want;
    }
    assert!((objective(&x, &omega).unwrap() - f).abs() < 1e-12 * f);
}

#[test]
fn exact_step_zeroes_the_derivative() {
    let mut g = rng(3);
    let d = matrix_normal(40, 1, &mut g);
    let r = matrix_normal(40, 1, &mut g);
    let t = exact_step(d.as_slice(), r.as_slice()).unwrap();
    let deriv: f64 = d.iter().zip(r.iter()).map(|(di, ri)| (ri + t * di) * di).sum();
    assert!(deriv.abs() <= 1e-10 * d.norm_squared());
    assert!(exact_step(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    assert!(exact_step(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn gradient_is_projected_scattered_residual() {
    let (omega, _) = problem(&[3, 4, 3], &[2, 2], 2, 4);
    let x = TtTensor::random_normal(&[3, 4, 3], &[1, 2], &mut rng(5)).unwrap();
    let g = riemannian_gradient(&x, &omega).unwrap();
    let r = residual(&x, &omega).unwrap().to_dense().unwrap();
    let want = tangent_projection_oracle(&g.frame().point(), &r);
    assert!(rel_err(&brute_dense(&g.to_tt()), &want) < 1e-8);
}

#[test]
fn full_grid_solve_recovers_low_rank_tensor() {
    let a = TtTensor::random_normal(&[5, 5, 5, 5], &[2, 3, 2], &mut rng(6)).unwrap();
    let omega = SampleSet::full(&brute_dense(&a));
    let x0 = TtTensor::random_normal(&[5, 5, 5, 5], &[2, 3, 2], &mut rng(7)).unwrap();
    let cfg = CgConfig { j_max: 500, eps_grad: 1e-12, eps_rel: 1e-12, eps_stagnation: 1e-15 };
    let (x, trace) = cg_solve(&x0, &omega, &cfg).unwrap();
    assert!(trace.stop.converged(), "{:?}", trace.stop);
    assert!(relative_residual(objective(&x, &omega).unwrap(), &omega) < 1e-8);
}

#[test]
fn cg_stops_on_iteration_budget_and_reports_it() {
    let (omega, _) = problem(&[6, 6, 6], &[3, 3], 3, 8);
    let x0 = TtTensor::random_normal(&[6, 6, 6], &[1, 1], &mut rng(9)).unwrap();
    let cfg = CgConfig { j_max: 3, ..CgConfig::default() };
    let (_, trace) = cg_solve(&x0, &omega, &cfg).unwrap();
    assert_eq!(trace.stop, CgStop::MaxIter);
    assert_eq!(trace.iterations(), 3);
    assert!(CgConfig { eps_grad: 0.0, ..cfg }.validate().is_err());
}

#[test]
fn cg_trace_csv_round_trip() {
    let (omega, _) = problem(&[5, 5, 5], &[2, 2], 2, 10);
    let x0 = TtTensor::random_normal(&[5, 5, 5], &[2, 2], &mut rng(11)).unwrap();
    let (_, trace) = cg_solve(&x0, &omega, &CgConfig::default()).unwrap();
    let csv = trace.to_csv();
    assert!(csv.starts_with("iter,f_omega_rel,grad_norm,wall_ms\n"));
    assert_eq!(CgTrace::records_from_csv(&csv).unwrap(), trace.records);
}

#[test]
fn cg_is_reproducible() {
    let (omega, _) = problem(&[5, 4, 5], &[2, 2], 2, 12);
    let x0 = TtTensor::random_normal(&[5, 4, 5], &[2, 2], &mut rng(13)).unwrap();
    let (a, ta) = cg_solve(&x0, &omega, &CgConfig::default()).unwrap();
    let (b, tb) = cg_solve(&x0, &omega, &CgConfig::default()).unwrap();
    assert_eq!(a.cores(), b.cores());
    let f = |t: &CgTrace| t.records.iter().map(|r| r.f_omega_rel).collect::<Vec<_>>();
    assert_eq!(f(&ta), f(&tb));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cost_never_increases(seed in any::<u64>(), every in 2usize..4) {
        let (omega, _) = problem(&[5, 5, 5, 4], &[2, 3, 2], every, seed);
        let x0 = TtTensor::random_normal(&[5, 5, 5, 4], &[1, 2, 2], &mut rng(seed ^ 1)).unwrap();
        let (_, trace) = cg_solve(&x0, &omega, &CgConfig { j_max: 25, ..CgConfig::default() }).unwrap();
        for w in trace.records.windows(2) {
            prop_assert!(w[1].f_omega_rel <= w[0].f_omega_rel * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>()) {
        let (omega, _) = problem(&[4, 4, 4], &[2, 2], 2, seed);
        let x = TtTensor::random_normal(&[4, 4, 4], &[2, 2], &mut rng(seed ^ 2)).unwrap();
        let (state, _) = cg_run(&x, &omega, &CgConfig { j_max: 0, ..CgConfig::default() }).unwrap();
        let frame = state.frame.clone();
        let y = dense_normal(&[4, 4, 4], &mut rng(seed ^ 3));
        let eta = tt_rram::project_tangent(&frame, Ambient::Dense(&y), 2).unwrap();
        let eta = eta.scaled(1.0 / eta.norm());
        let h = 1e-5;
        let fp = objective(&retract_fixed_rank(&eta, h).unwrap(), &omega).unwrap();
        let fm = objective(&retract_fixed_rank(&eta, -h).unwrap(), &omega).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let an = state.grad.inner(&eta).unwrap();
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(state.grad_norm));
    }

    #[test]
    fn frame_point_keeps_the_tensor(seed in any::<u64>()) {
        let x = TtTensor::random_normal(&[3, 4, 5], &[2, 3], &mut rng(seed)).unwrap();
        let frame = TangentFrame::new(&x).unwrap();
        prop_assert!(rel_err(&brute_dense(&frame.point()), &brute_dense(&x)) < 1e-12);
    }
}
