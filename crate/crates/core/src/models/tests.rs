use super::*;
use crate::catalog::controlled_hutchinson_rounding;
use crate::certify::{run, sweep_boundary, Criterion, Options, SweepOptions, Verdict};
use crate::timefunc::TrigTerm;

fn mg(a: f64, b: f64, gamma: f64, r: f64, tau: f64) -> MackeyGlassParams<f64> {
    MackeyGlassParams {
        a,
        b,
        gamma,
        r: TimeFunction::constant(r),
        u: TimeFunction::zero(),
        tau,
        sigma: 0.0,
        delay_offset: None,
        g_offset: None,
        t0: 0.0,
    }
}

fn controlled_hutchinson(h0: f64) -> Result<HutchinsonParams<f64>> {
    crate::catalog::controlled_hutchinson(h0)
}

fn rounded() -> ModelOptions<f64> {
    ModelOptions { rounding: Some(controlled_hutchinson_rounding()), ..Default::default() }
}

#[test]
fn controlled_hutchinson_linearization() {
    let p = controlled_hutchinson(0.05).unwrap();
    let spec = p.linearize().unwrap();
    assert_eq!(spec.terms().len(), 2);
    for t in [0.0f64, 0.3, 1.7] {
        assert!((spec.terms()[0].coef.eval(t) - (0.5 - 0.75 * (10.0 * t).cos())).abs() < 1e-14);
        assert!((spec.terms()[1].coef.eval(t) - (0.5 + 0.75 * (10.0 * t).sin())).abs() < 1e-14);
        assert!((spec.terms()[0].offset_at(t) - 0.05 * t.sin().abs()).abs() < 1e-14);
        assert!((spec.terms()[1].offset_at(t) - 0.1 * t.cos().powi(2)).abs() < 1e-14);
    }
}

#[test]
fn controlled_hutchinson_oscillation_merges_same_frequency() {
    let cert = controlled_hutchinson(0.05).unwrap().certify(HutchinsonVariant::Combined, &rounded()).unwrap();
    let alpha0 = cert.constant("alpha0").unwrap();
    assert!((alpha0 - 0.15 * 2f64.sqrt()).abs() < 1e-12, "alpha0 = {alpha0}");
    assert_eq!(cert.verdict, Verdict::Certified);
    assert!((cert.lhs - (4.5 * 0.05 + 0.45)).abs() < 1e-12);
}

#[test]
fn controlled_hutchinson_boundaries() {
    let opts = SweepOptions { tol: 1e-7, ..Default::default() };
    let rounded_opts = rounded();
    let v = sweep_boundary(
        |h| controlled_hutchinson(h)?.certify(HutchinsonVariant::Combined, &rounded_opts),
        0.01,
        0.3,
        &opts,
    )
    .unwrap();
    let expected = ((-0.15 * 2f64.sqrt()).exp() - 0.45) / 4.5;
    assert!((v - expected).abs() < 1e-6, "{v} vs {expected}");
    assert!((v - 0.0797).abs() < 1e-3);

    let plain = ModelOptions::default();
    let v = sweep_boundary(
        |h| controlled_hutchinson(h)?.certify(HutchinsonVariant::Combined, &plain),
        0.01,
        0.3,
        &opts,
    )
    .unwrap();
    assert!((v - 0.1589).abs() < 1e-3, "{v}");
}

#[test]
fn rounding_below_computed_is_rejected() {
    let opts = ModelOptions { rounding: Some(Rounding { prefactor: 2.0, ratio: 1.5 }), ..Default::default() };
    let err = controlled_hutchinson(0.05).unwrap().certify(HutchinsonVariant::Combined, &opts);
    assert!(matches!(err, Err(Error::BadParams(_))));
}

#[test]
fn hutchinson_variants_pick_their_floor() {
    let p = controlled_hutchinson(0.05).unwrap();
    let opts = ModelOptions::default();
    let growth = p.certify(HutchinsonVariant::Growth, &opts).unwrap();
    assert_eq!(growth.criterion, Criterion::HutchinsonGrowth);
    assert!((growth.constant("alpha0").unwrap() - 0.15).abs() < 1e-12);
    let control = p.certify(HutchinsonVariant::Control, &opts).unwrap();
    assert_eq!(control.criterion, Criterion::HutchinsonControl);
    assert!((control.constant("alpha0").unwrap() - 0.15).abs() < 1e-12);
}

#[test]
fn hutchinson_verdict_matches_delay_only_on_linearization() {
    for &(r, tau) in &[(1.0f64, 0.2f64), (1.0, 0.5), (0.5, 0.9)] {
        let p = HutchinsonParams {
            k: 2.0,
            r_terms: vec![GrowthTerm::new(
                TimeFunction::trig(r, vec![TrigTerm::sin(0.3 * r, 3.0)]),
                tau,
            )],
            u: TimeFunction::zero(),
            sigma: 0.0,
            g_offset: None,
            t0: 0.0,
        };
        let model = p.certify(HutchinsonVariant::Combined, &ModelOptions::default()).unwrap();
        let spec = p.linearize().unwrap();
        let linear = run(&spec, Criterion::DelayOnly, &Options::default()).unwrap();
        assert_eq!(model.verdict, linear.verdict, "r = {r}, tau = {tau}");
        assert!((model.threshold - linear.threshold).abs() < 1e-12);
    }
}

#[test]
fn hutchinson_rhs_values() {
    let p = HutchinsonParams {
        k: 1.0f64,
        r_terms: vec![GrowthTerm::new(TimeFunction::constant(1.0), 1.0)],
        u: TimeFunction::zero(),
        sigma: 0.0,
        g_offset: None,
        t0: 0.0,
    };
    let v = p.rhs(0.0, Side::Right, 1.1, &|_| 1.1);
    assert!((v + 0.11).abs() < 1e-14);
    let q = controlled_hutchinson(0.05).unwrap();
    for t in [0.0, 0.4, 2.2] {
        assert!(q.rhs(t, Side::Right, 1.0, &|_| 1.0).abs() < 1e-14);
    }
}

#[test]
fn hutchinson_linearization_error_is_second_order() {
    let p = controlled_hutchinson(0.05).unwrap();
    let spec = p.linearize().unwrap();
    let (t, y0, y_past) = (0.7, 0.3, -0.2);
    let err = |eps: f64| {
        let past = |_s: f64| 1.0 + eps * y_past;
        let nonlinear = p.rhs(t, Side::Right, 1.0 + eps * y0, &past);
        let linear: f64 = -spec.terms().iter().map(|term| term.coef.eval(t) * eps * y_past).sum::<f64>();
        (nonlinear - linear).abs()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn mackey_glass_equilibrium() {
    let e = mg(2.0, 1.0, 1.0, 1.0, 0.5).equilibrium().unwrap();
    assert!((e.n_star - 1.0).abs() < 1e-14);
    assert!((e.nu + 0.5).abs() < 1e-14);
    let e = mg(3.0, 1.0, 2.0, 1.0, 0.5).equilibrium().unwrap();
    assert!((e.n_star - 2f64.sqrt()).abs() < 1e-14);
    assert!((e.nu - (2.0 * 2.0 - 3.0) / 3.0).abs() < 1e-14);
    assert!(mg(1.0, 1.0, 1.0, 1.0, 0.5).equilibrium().is_err());
}

#[test]
fn mackey_glass_slope_matches_nu() {
    for &(a, b, gamma) in &[(2.0, 1.0, 1.0), (3.0, 1.0, 2.0), (2.5, 0.7, 4.0)] {
        let p = mg(a, b, gamma, 1.0, 0.5);
        let e = p.equilibrium().unwrap();
        let h = 1e-6;
        let slope = (p.production(e.n_star + h) - p.production(e.n_star - h)) / (2.0 * h);
        assert!((slope + e.nu).abs() < 1e-6, "a={a} b={b} γ={gamma}: slope {slope}, nu {}", e.nu);
    }
}

#[test]
fn mackey_glass_printed_prefactor() {
    let p = mg(2.0, 1.0, 1.0, 0.8, 0.5);
    let opts = ModelOptions { mg_prefactor: MgPrefactor::Printed, ..Default::default() };
    let cert = p.certify(&opts).unwrap();
    assert!((cert.lhs - 0.8 * 0.5 * 0.5).abs() < 1e-14);
    assert_eq!(cert.threshold, 1.0);
    let sound = p.certify(&ModelOptions::default()).unwrap();
    assert!(sound.lhs > cert.lhs);
    assert!((sound.lhs - 1.5 * 0.8 * 0.5 * 0.5 / 0.5).abs() < 1e-14);
}

#[test]
fn mackey_glass_rejects_drifting_control() {
    let mut p = mg(2.0, 1.0, 1.0, 1.0, 0.5);
    p.u = TimeFunction::constant(0.1);
    p.sigma = 0.1;
    assert!(matches!(p.certify(&ModelOptions::default()), Err(Error::SplitInfeasible(_))));
    p.u = TimeFunction::trig(0.0, vec![TrigTerm::sin(0.2, 4.0)]);
    let cert = p.certify(&ModelOptions::default()).unwrap();
    assert!((cert.constant("alpha0").unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn model_json_round_trip() {
    let m = Model::Hutchinson(controlled_hutchinson(0.05).unwrap());
    let s = serde_json::to_string(&m).unwrap();
    assert!(s.contains("\"model\":\"hutchinson\""));
    let back: Model<f64> = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
    let mg_model = Model::MackeyGlass(mg(2.0, 1.0, 1.0, 1.0, 0.5));
    let back: Model<f64> = serde_json::from_str(&serde_json::to_string(&mg_model).unwrap()).unwrap();
    assert_eq!(back, mg_model);
    assert_eq!(back.equilibrium().unwrap(), 1.0);
}
