use super::*;
use crate::catalog::{controlled_hutchinson, non_decaying, oscillating_kernel, pure_kernel, square_wave_delay};
use crate::certify::DelayTerm;
use crate::models::{GrowthTerm, HutchinsonParams};
use crate::timefunc::TrigTerm;

fn opts(t_end: f64, step: f64) -> SimOptions<f64> {
    SimOptions { t_end: Some(t_end), step: Some(step) }
}

fn instant(coef: TimeFunction<f64>) -> EquationSpec<f64> {
    EquationSpec::new(vec![DelayTerm::new(coef, 0.0)], None, None, None, 0.0).unwrap()
}

#[test]
fn ode_reduction_matches_exponential() {
    let spec = instant(TimeFunction::constant(1.0));
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &opts(1.0, 1e-3)).unwrap();
    assert!((traj.final_value() - (-1.0f64).exp()).abs() < 1e-8);
    let nondelay = EquationSpec::new(vec![], Some(TimeFunction::constant(1.0)), None, None, 0.0).unwrap();
    let traj = simulate_linear(&nondelay, &InitialHistory::constant(1.0), &opts(1.0, 1e-3)).unwrap();
    assert!((traj.final_value() - (-1.0f64).exp()).abs() < 1e-8);
}

#[test]
fn rk4_has_fourth_order() {
    let spec = instant(TimeFunction::trig(1.0, vec![TrigTerm::sin(0.5, 1.0)]));
    let exact = (-2.0 + 0.5 * (2.0f64.cos() - 1.0)).exp();
    let err = |h: f64| {
        let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &opts(2.0, h)).unwrap();
        (traj.final_value() - exact).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn unit_delay_matches_method_of_steps() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(1.0), 1.0)]).unwrap();
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &opts(3.0, 0.01)).unwrap();
    assert!((traj.value_at(1.0)).abs() < 1e-12);
    assert!((traj.value_at(2.0) + 0.5).abs() < 1e-10);
    assert!((traj.final_value() + 1.0 / 6.0).abs() < 1e-9);
}

#[test]
fn non_decaying_returns_to_one_each_period() {
    let eps = 0.1f64;
    let spec = non_decaying(eps).unwrap();
    let period = eps + eps.exp() - 1.0;
    assert!((period - 0.20517).abs() < 1e-5);
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &SimOptions { t_end: Some(20.0 * period), step: None })
        .unwrap();
    for n in 1..=20 {
        let t = n as f64 * period;
        let i = traj.grid.iter().position(|&g| (g - t).abs() < 1e-9).expect("period start on grid");
        assert!((traj.values[i] - 1.0).abs() < 1e-3, "n = {n}: {}", traj.values[i]);
    }
    let est = estimate_decay(&traj, 0.0).unwrap();
    assert!(est.lambda_hat.abs() < 1e-3, "{est:?}");
}

#[test]
fn trajectories_scale_with_history() {
    let spec = oscillating_kernel(0.3f64).unwrap();
    let phi = InitialHistory::Function { function: TimeFunction::trig(1.0, vec![TrigTerm::sin(0.4, 3.0)]) };
    let o = SimOptions { t_end: Some(20.0), step: None };
    let base = simulate_linear(&spec, &phi, &o).unwrap();
    let scaled = simulate_linear(&spec, &phi.scaled(-3.5), &o).unwrap();
    let peak = base.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (x, y) in base.values.iter().zip(&scaled.values) {
        assert!((y + 3.5 * x).abs() <= 1e-9 * 3.5 * peak);
    }
}

#[test]
fn bounded_forcing_gives_bounded_response() {
    let spec = square_wave_delay(1.1f64, 0.1, 0.2).unwrap().with_forcing(TimeFunction::trig(0.0, vec![TrigTerm::sin(1.0, 1.0)]));
    let traj = simulate_linear(&spec, &InitialHistory::constant(0.0), &SimOptions { t_end: Some(200.0), step: None }).unwrap();
    let overall = traj.max_abs_in(0.0, 200.0);
    let last = traj.max_abs_in(150.0, 200.0);
    assert!(overall.is_finite() && overall < 10.0);
    assert!(last >= 0.95 * overall, "last {last}, overall {overall}");
}

#[test]
fn decay_of_exponential() {
    let spec = instant(TimeFunction::constant(1.0));
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &opts(30.0, 0.01)).unwrap();
    let est = estimate_decay(&traj, 0.0).unwrap();
    assert!((est.lambda_hat - 1.0).abs() < 1e-3);
    assert!((est.m_hat - 1.0).abs() < 1e-3);
    assert!(est.r2 > 0.999);
}

#[test]
fn pure_kernel_decays() {
    let spec = pure_kernel().unwrap();
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &SimOptions { t_end: Some(200.0), step: None }).unwrap();
    let est = estimate_decay(&traj, 0.0).unwrap();
    assert!(est.lambda_hat > 0.0 && est.r2 > 0.9, "{est:?}");
}

#[test]
fn step_guard() {
    let spec = pure_kernel::<f64>().unwrap();
    let err = simulate_linear(&spec, &InitialHistory::constant(1.0), &opts(10.0, 10.0));
    assert!(matches!(err, Err(Error::StepTooLarge { .. })));
}

#[test]
fn hutchinson_equilibrium_is_fixed() {
    let p = HutchinsonParams {
        k: 2.0,
        r_terms: vec![GrowthTerm::new(TimeFunction::trig(1.0, vec![TrigTerm::cos(0.5, 2.0)]), 0.5)],
        u: TimeFunction::zero(),
        sigma: 0.0,
        g_offset: None,
        t0: 0.0,
    };
    let traj = simulate_model(&Model::Hutchinson(p), &InitialHistory::constant(2.0), &opts(20.0, 0.01)).unwrap();
    assert!(traj.values.iter().all(|x| (x - 2.0).abs() < 1e-10));
}

#[test]
fn controlled_hutchinson_converges() {
    let model = Model::Hutchinson(controlled_hutchinson(0.05f64).unwrap());
    let traj = simulate_model(&model, &InitialHistory::constant(1.2), &SimOptions { t_end: Some(200.0), step: None }).unwrap();
    assert!((traj.final_value() - 1.0).abs() < 1e-3);
    assert!(traj.values.iter().all(|x| x.is_finite()));
}

#[test]
fn empty_and_flat_decay_errors() {
    let traj = Trajectory { grid: vec![0.0, 1.0, 2.0], values: vec![0.0; 3], step: 1.0, aligned: true };
    assert!(matches!(estimate_decay(&traj, 0.0), Err(Error::ZeroSolution)));
    let traj = Trajectory { grid: vec![0.0, 1.0, 2.0], values: vec![1.0, 0.5, 0.2], step: 1.0, aligned: true };
    assert!(matches!(estimate_decay(&traj, 0.0), Err(Error::InsufficientPeaks { .. })));
}

#[test]
fn csv_has_header_and_round_trips() {
    let traj = Trajectory { grid: vec![0.0, 0.1], values: vec![1.0, 1.0 / 3.0], step: 0.1, aligned: true };
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let x: f64 = lines.nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(x, 1.0 / 3.0);
}
