use super::*;
use crate::timefunc::TrigTerm;
use proptest::prelude::*;

fn kernel_eq(sigma: f64) -> EquationSpec<f64> {
    let a1 = TimeFunction::trig(0.09, vec![TrigTerm::sin(-0.1, 5.0)]);
    let a2 = TimeFunction::trig(0.09, vec![TrigTerm::cos(0.1, 10.0)]);
    let k = KernelFunction::phase(0.1, 0.2, 1.0, 1.0, 0.0, sigma).unwrap();
    EquationSpec::delays(vec![(a1, 0.1), (a2, 0.2)]).unwrap().with_kernel(k)
}

fn pure_kernel_eq() -> EquationSpec<f64> {
    let k = KernelFunction::phase(10.0, 11.0, 1.0, 10.0, -std::f64::consts::FRAC_PI_2, 0.1).unwrap();
    EquationSpec::new(vec![], None, Some(k), None, 0.0).unwrap()
}

fn wave(high: f64, low: f64) -> TimeFunction<f64> {
    TimeFunction::square_wave(high, low, 1.0, 2.0).unwrap()
}

fn square_wave_eq(mu: f64, beta: f64, tau: f64) -> EquationSpec<f64> {
    EquationSpec::delays(vec![(wave(mu, -beta), tau)]).unwrap()
}

fn shift(lambda: f64) -> Options<f64> {
    Options { split: SplitPolicy::Shift { lambda }, ..Options::default() }
}

fn tight() -> Options<f64> {
    Options { mode: BoundMode::Tight, ..Options::default() }
}

#[test]
fn explicit_a_on_oscillating_delays_and_kernel() {
    let opts = Options::default();
    let c = run(&kernel_eq(0.4), Criterion::ExplicitA, &opts).unwrap();
    assert!(c.certified());
    assert!((c.constant("alpha0").unwrap() - 0.06).abs() < 1e-15);
    assert!((c.threshold - (-0.06f64).exp()).abs() < 1e-15);
    assert!((c.constant("A").unwrap() - (0.38 + 0.3 * 0.4)).abs() < 1e-12);
    let expect = (0.38 + 0.3 * 0.4) * 0.3 * 0.19 / 0.18 + 0.3 * 0.4 / 0.18;
    assert!((c.lhs - expect).abs() < 1e-12);
    assert!(!run(&kernel_eq(0.5), Criterion::ExplicitA, &opts).unwrap().certified());
    let edge = run(&kernel_eq(0.46628), Criterion::ExplicitA, &opts).unwrap();
    assert!((edge.ratio() - 1.0).abs() < 1e-4);
}

#[test]
fn sweep_recovers_sigma_boundary() {
    let opts = Options::default();
    let v = sweep_boundary(|s| run(&kernel_eq(s), Criterion::ExplicitA, &opts), 0.05, 1.0, &SweepOptions::default()).unwrap();
    assert!((v - 0.46628).abs() < 1e-4, "{v}");
    assert!(run(&kernel_eq(v - 1e-6), Criterion::ExplicitA, &opts).unwrap().certified());
    assert!(!run(&kernel_eq(v + 1e-6), Criterion::ExplicitA, &opts).unwrap().certified());
}

#[test]
fn kernel_only_on_pure_integral_equation() {
    let c = run(&pure_kernel_eq(), Criterion::KernelOnly, &Options::default()).unwrap();
    let beta0 = 4.4 * 0.5f64.sin() / 9.0;
    assert!((c.constant("beta0").unwrap() - beta0).abs() < 1e-6);
    assert!((c.constant("beta0").unwrap() - 0.2343858).abs() < 1e-6);
    assert!((c.constant("b_abs_norm").unwrap() - 2.1).abs() < 1e-12);
    assert!((c.constant("c_norm").unwrap() - 0.105).abs() < 1e-12);
    assert!((c.ratio() - 0.2787).abs() < 1e-3);
    assert!(c.certified());
    let t = run(&pure_kernel_eq(), Criterion::KernelOnly, &tight()).unwrap();
    assert!(t.ratio() <= c.ratio());
}

#[test]
fn kernel_only_rejects_delays() {
    let spec = kernel_eq(0.3);
    assert!(matches!(kernel_only(&spec, &Options::default()), Err(Error::ShapeMismatch(_))));
    let c = run(&spec, Criterion::KernelOnly, &Options::default()).unwrap();
    assert_eq!(c.verdict, Verdict::Inapplicable);
    assert!(c.lhs.is_nan());
}

#[test]
fn delay_only_on_square_wave() {
    let (mu, beta, tau) = (1.1, 0.1, 0.2);
    let c = run(&square_wave_eq(mu, beta, tau), Criterion::DelayOnly, &shift((mu + beta) / 2.0)).unwrap();
    let expect = 2.0 * tau * mu * mu / (mu - beta) * ((mu + beta) / 2.0f64).exp();
    assert!((c.ratio() - expect).abs() < 1e-12);
    assert!((c.ratio() - 0.881906).abs() < 1e-6);
    assert!(c.certified());
    let family = lambda_split(mu, beta, tau, LambdaPolicy::Arithmetic).unwrap();
    assert!((family.ratio() - c.ratio()).abs() < 1e-12);
    // At λ = (μ+β)/2 the shift split and the mean split give the same bound.
    let mean = run(&square_wave_eq(mu, beta, tau), Criterion::DelayOnly, &Options::default()).unwrap();
    assert!((mean.ratio() - c.ratio()).abs() < 1e-12);
    assert!((mean.constant("alpha0").unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn boundary_of_square_wave_family() {
    let (mu, beta) = (1.1, 0.1);
    let opts = shift((mu + beta) / 2.0);
    let v = sweep_boundary(|t| run(&square_wave_eq(mu, beta, t), Criterion::DelayOnly, &opts), 0.01, 1.0, &SweepOptions::default())
        .unwrap();
    assert!((v - 0.22678).abs() < 1e-4);
    assert!((v - arithmetic_tau_star(mu, beta)).abs() < 1e-6);
}

#[test]
fn zero_oscillation_gives_unit_threshold() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(0.7), 0.0)]).unwrap();
    for crit in [Criterion::ExplicitA, Criterion::DelayOnly, Criterion::SingleDelayExplicit] {
        let c = run(&spec, crit, &Options::default()).unwrap();
        assert_eq!(c.threshold, 1.0, "{crit}");
        assert_eq!(c.lhs, 0.0, "{crit}");
        assert!(c.certified());
    }
    let c = run(&spec, Criterion::IntegralA, &Options::default()).unwrap();
    assert_eq!(c.lhs, 0.0);
    assert!(c.certified());
    let c = run(&spec, Criterion::RefinedIntegralA, &Options::default()).unwrap();
    assert_eq!(c.lhs, 0.0);
}

#[test]
fn direct_dominates_explicit_on_oscillating_example() {
    let opts = Options::default();
    let spec = kernel_eq(0.4);
    let explicit = run(&spec, Criterion::ExplicitA, &opts).unwrap();
    let direct = run(&spec, Criterion::IntegralA, &opts).unwrap();
    let refined = run(&spec, Criterion::RefinedIntegralA, &opts).unwrap();
    assert_eq!(direct.mode, CertMode::Direct);
    assert!(direct.certified() && refined.certified());
    assert!(direct.lhs <= explicit.ratio(), "{} vs {}", direct.lhs, explicit.ratio());
    assert!(refined.lhs <= direct.lhs + 1e-9, "{} vs {}", refined.lhs, direct.lhs);
    assert!(direct.provenance.iter().any(|l| l.contains("horizon")));

    let far = run(&kernel_eq(5.0), Criterion::IntegralA, &opts).unwrap();
    assert!(!far.certified());
}

#[test]
fn other_direct_variants_run() {
    let opts = Options::default();
    let spec = kernel_eq(0.4);
    for crit in [
        Criterion::IntegralC,
        Criterion::RefinedIntegralC,
        Criterion::IntegralB,
        Criterion::RefinedIntegralB,
    ] {
        let c = run(&spec, crit, &opts).unwrap();
        assert_ne!(c.verdict, Verdict::Inapplicable, "{crit}: {:?}", c.provenance);
        assert!(c.lhs.is_finite());
    }
    let c = run(&pure_kernel_eq(), Criterion::IntegralB, &opts).unwrap();
    assert!(c.certified(), "{:?}", c);
    let r = run(&pure_kernel_eq(), Criterion::RefinedIntegralB, &opts).unwrap();
    assert!(r.lhs <= c.lhs + 1e-9);
}

#[test]
fn refined_single_delay_constant_coefficient() {
    // With constant a the weight settles at τa², so sup S → τa.
    for (a, tau) in [(0.5f64, 1.0f64), (1.0, 0.8), (1.0, 1.2)] {
        let spec = EquationSpec::delays(vec![(TimeFunction::constant(a), tau)]).unwrap();
        let c = run(&spec, Criterion::RefinedIntegralA, &Options::default()).unwrap();
        assert!((c.lhs - tau * a).abs() < 1e-6, "{} vs {}", c.lhs, tau * a);
        assert_eq!(c.certified(), tau * a < 1.0);
        let s = run(&spec, Criterion::SingleDelayIntegral, &Options::default()).unwrap();
        assert!((s.lhs - c.lhs).abs() < 1e-12);
        let coarse = run(&spec, Criterion::IntegralA, &Options::default()).unwrap();
        assert!((coarse.lhs - tau * a).abs() < 1e-6);
    }
}

#[test]
fn direct_rejects_unstable_reference() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(-0.5), 1.0)]).unwrap();
    let c = run(&spec, Criterion::IntegralA, &Options::default()).unwrap();
    assert_eq!(c.verdict, Verdict::Inapplicable);
    assert!(c.provenance[0].contains("not uniformly exponentially stable"));
    assert!(matches!(integral(&spec, 'a', &Options::default()), Err(Error::ReferenceOdeUnstable(_))));
}

#[test]
fn tight_never_exceeds_conservative() {
    let cases: Vec<(EquationSpec<f64>, Criterion, Options<f64>)> = vec![
        (kernel_eq(0.3), Criterion::ExplicitA, Options::default()),
        (kernel_eq(0.3), Criterion::ExplicitC, Options::default()),
        (pure_kernel_eq(), Criterion::KernelOnly, Options::default()),
        (pure_kernel_eq(), Criterion::ExplicitB, Options::default()),
        (square_wave_eq(1.1, 0.1, 0.2), Criterion::DelayOnly, shift(0.6)),
        (
            EquationSpec::delays(vec![(TimeFunction::trig(0.5, vec![TrigTerm::sin(0.3, 2.0)]), 0.3)]).unwrap(),
            Criterion::SingleDelayExplicit,
            Options::default(),
        ),
    ];
    for (spec, crit, opts) in cases {
        let cons = run(&spec, crit, &opts).unwrap();
        assert_ne!(cons.verdict, Verdict::Inapplicable, "{crit}");
        let t = run(&spec, crit, &Options { mode: BoundMode::Tight, ..opts }).unwrap();
        assert!(t.lhs <= cons.lhs * (1.0 + 1e-12), "{crit}: {} > {}", t.lhs, cons.lhs);
        assert!(t.ratio() <= cons.ratio() * (1.0 + 1e-12), "{crit}");
    }
}

#[test]
fn single_delay_explicit_conservative_formula() {
    let a = TimeFunction::trig(0.5f64, vec![TrigTerm::sin(0.3, 2.0)]);
    let spec = EquationSpec::delays(vec![(a, 0.3)]).unwrap();
    let c = run(&spec, Criterion::SingleDelayExplicit, &Options::default()).unwrap();
    // ||a/ã|| = 0.8/0.5 and q ≤ τ||a||.
    assert!((c.lhs - 0.8 / 0.5 * 0.3 * 0.8).abs() < 1e-12);
    assert!((c.constant("alpha0").unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn nondelay_criteria() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(0.2f64), 1.0)])
        .unwrap()
        .with_nondelay(TimeFunction::trig(1.0, vec![TrigTerm::cos(0.5, 3.0)]));
    let c = run(&spec, Criterion::NondelayExplicit, &Options::default()).unwrap();
    assert!((c.lhs - 0.2).abs() < 1e-12);
    assert!((c.threshold - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
    assert!(c.certified());
    let d = run(&spec, Criterion::NondelayIntegral, &Options::default()).unwrap();
    assert!(d.certified());
    assert!(d.lhs <= c.ratio());
    // Explicit and integral criteria for Σ a_k refuse a non-delay term.
    assert_eq!(run(&spec, Criterion::ExplicitA, &Options::default()).unwrap().verdict, Verdict::Inapplicable);
    assert_eq!(run(&kernel_eq(0.2), Criterion::NondelayExplicit, &Options::default()).unwrap().verdict, Verdict::Inapplicable);
}

#[test]
fn gil_comparator() {
    let opts = Options::default();
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(0.3), 1.0)]).unwrap();
    let c = gil(&spec, &opts).unwrap();
    assert!(c.certified());
    assert_eq!(c.constant("b"), Some(0.3));
    assert!((c.lhs - 0.3 * std::f64::consts::E).abs() < 1e-12);
    let too_long = EquationSpec::delays(vec![(TimeFunction::constant(0.3), 1.3)]).unwrap();
    assert!(!gil(&too_long, &opts).unwrap().certified());

    // The printed reduction is what the test gives for the wave μ / +β.
    let (mu, beta, tau) = (0.55, 0.05, 0.1);
    let plus = EquationSpec::delays(vec![(wave(mu, beta), tau)]).unwrap();
    let g = gil(&plus, &opts).unwrap();
    let printed = gil_printed(mu, beta, tau).unwrap();
    assert!((g.constant("b").unwrap() - (mu + beta) / 2.0).abs() < 1e-12);
    assert!((g.constant("drift_ratio").unwrap() - printed.constant("drift_ratio").unwrap()).abs() < 1e-9);
    assert!((printed.constant("drift_ratio").unwrap() - 0.9583).abs() < 1e-4);
    // For the wave μ / −β the mean is (μ−β)/2 and the drift ratio changes.
    let minus = square_wave_eq(mu, beta, tau);
    let g = gil(&minus, &opts).unwrap();
    let expect = (mu + beta) * (2.0 * mu - beta) / (mu - beta);
    assert!((g.constant("drift_ratio").unwrap() - expect).abs() < 1e-9);
    assert!(!g.certified());
}

#[test]
fn zhang_comparator() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(0.5f64), 1.0)])
        .unwrap()
        .with_nondelay(TimeFunction::constant(1.0));
    let c = run(&spec, Criterion::Zhang, &Options::default()).unwrap();
    assert!((c.lhs - 0.5).abs() < 1e-6);
    assert!(c.certified());
    assert!(c.provenance.iter().any(|l| l.contains("asymptotic stability only")));
    let neg = EquationSpec::delays(vec![(TimeFunction::constant(-0.5), 1.0)])
        .unwrap()
        .with_nondelay(TimeFunction::constant(1.0));
    assert_eq!(run(&neg, Criterion::Zhang, &Options::default()).unwrap().verdict, Verdict::Inapplicable);
    let no_drift = EquationSpec::delays(vec![(TimeFunction::constant(0.1), 1.0)])
        .unwrap()
        .with_nondelay(TimeFunction::trig(0.0, vec![TrigTerm::sin(1.0, 1.0)]));
    assert!(!run(&no_drift, Criterion::Zhang, &Options::default()).unwrap().certified());
}

#[test]
fn product_limsup_comparator() {
    let spec = EquationSpec::delays(vec![(TimeFunction::constant(0.5f64), 1.0)]).unwrap();
    let c = run(&spec, Criterion::ProductLimsup, &Options::default()).unwrap();
    assert!((c.constant("delay_mass").unwrap() - 0.5).abs() < 1e-9);
    assert!((c.constant("response_sup").unwrap() - 1.0).abs() < 1e-6);
    assert!(c.certified());
    // The product test is at least as sharp as the refined integral test here.
    let r = run(&spec, Criterion::RefinedIntegralA, &Options::default()).unwrap();
    assert!(c.lhs <= r.lhs + 1e-6);
    assert_eq!(run(&kernel_eq(0.2), Criterion::ProductLimsup, &Options::default()).unwrap().verdict, Verdict::Inapplicable);
}

#[test]
fn ode_criteria_through_run() {
    let c = run(&kernel_eq(0.2), Criterion::OdeSplit, &Options::default()).unwrap();
    assert!(c.certified());
    assert!((c.constant("a0_floor").unwrap() - 0.18).abs() < 1e-12);
}

#[test]
fn criterion_names_round_trip() {
    for &c in Criterion::ALL {
        assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, format!("\"{}\"", c.as_str()));
        assert!(!c.describe().is_empty());
    }
    assert!("nope".parse::<Criterion>().is_err());
    assert_eq!(spec_criteria().len(), Criterion::ALL.len() - 6);
}

#[test]
fn certificate_json_shape() {
    let c = run(&pure_kernel_eq(), Criterion::KernelOnly, &Options::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&c).unwrap();
    for key in ["criterion", "verdict", "lhs", "threshold", "constants", "mode", "provenance"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["verdict"], "certified");
    assert_eq!(v["mode"], "conservative");
    let back: Certificate<f64> = serde_json::from_value(v).unwrap();
    assert_eq!(back, c);
}

#[test]
fn equation_spec_json_round_trip_and_validation() {
    let spec = kernel_eq(0.3);
    let json = serde_json::to_string(&spec).unwrap();
    let back: EquationSpec<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    assert!(serde_json::from_str::<EquationSpec<f64>>("{}").is_err());
    assert!(serde_json::from_str::<EquationSpec<f64>>(r#"{"terms":[{"coef":{"kind":"constant","value":1},"tau":-1}]}"#).is_err());
    let bad_offset = DelayTerm::with_offset(TimeFunction::constant(1.0), 0.1, TimeFunction::constant(0.5));
    assert!(EquationSpec::new(vec![bad_offset], None, None, None, 0.0).is_err());
}

#[test]
fn tie_is_not_certified() {
    let c = Certificate::decide(Criterion::Gil, 1.0, 1.0, CertMode::Conservative);
    assert!(!c.certified());
    let c = Certificate::decide(Criterion::Gil, f64::NAN, 1.0, CertMode::Conservative);
    assert!(!c.certified());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delay_only_is_scale_invariant(k in 0.2f64..5.0, mu in 0.3f64..3.0, frac in 0.05f64..0.9, tau in 0.01f64..0.5) {
        let beta = frac * mu;
        let lambda = (mu + beta) / 2.0;
        let base = run(&square_wave_eq(mu, beta, tau), Criterion::DelayOnly, &shift(lambda)).unwrap();
        let scaled_wave = TimeFunction::square_wave(k * mu, -k * beta, 1.0 / k, 2.0 / k).unwrap();
        let scaled = EquationSpec::delays(vec![(scaled_wave, tau / k)]).unwrap();
        let s = run(&scaled, Criterion::DelayOnly, &shift(k * lambda)).unwrap();
        prop_assert!((s.lhs - base.lhs).abs() <= 1e-9 * base.lhs.max(1.0));
        prop_assert!((s.threshold - base.threshold).abs() <= 1e-12);
        prop_assert_eq!(s.verdict, base.verdict);
    }

    #[test]
    fn explicit_a_grows_with_sigma(s1 in 0.01f64..2.0, s2 in 0.01f64..2.0) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let a = run(&kernel_eq(lo), Criterion::ExplicitA, &Options::default()).unwrap();
        let b = run(&kernel_eq(hi), Criterion::ExplicitA, &Options::default()).unwrap();
        prop_assert!(a.ratio() <= b.ratio() + 1e-12);
    }

    #[test]
    fn verdict_matches_strict_inequality(lhs in 0.0f64..2.0, th in 0.0f64..2.0) {
        let c = Certificate::decide(Criterion::DelayOnly, lhs, th, CertMode::Tight);
        prop_assert_eq!(c.certified(), lhs < th);
    }
}
