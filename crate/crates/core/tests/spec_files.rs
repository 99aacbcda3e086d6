use std::path::PathBuf;

use oscidelay::certify::{run, Criterion, Options};
use oscidelay::models::{HutchinsonVariant, ModelOptions};
use oscidelay::{catalog, EquationSpec, InitialHistory, Model};

fn load<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn linear_spec_files_match_the_catalog() {
    let pairs: [(&str, EquationSpec); 4] = [
        ("oscillating-kernel.json", catalog::oscillating_kernel(0.4).unwrap()),
        ("pure-kernel.json", catalog::pure_kernel().unwrap()),
        ("square-wave.json", catalog::square_wave_delay(1.1, 0.1, 0.2).unwrap()),
        ("non-decaying.json", catalog::non_decaying(0.1).unwrap()),
    ];
    for (file, built) in pairs {
        let loaded: EquationSpec = load(file);
        for c in [Criterion::ExplicitA, Criterion::KernelOnly, Criterion::DelayOnly, Criterion::OdeWindow] {
            let a = run(&loaded, c, &Options::default()).unwrap();
            let b = run(&built, c, &Options::default()).unwrap();
            assert_eq!(a.verdict, b.verdict, "{file} {c}");
            if a.lhs.is_finite() {
                assert!((a.lhs - b.lhs).abs() <= 1e-12 * b.lhs.abs().max(1.0), "{file} {c}: {} vs {}", a.lhs, b.lhs);
            }
        }
        for t in [0.0, 0.37, 1.9, 7.25] {
            let (x, y) = (loaded.coef_sum().eval(t), built.coef_sum().eval(t));
            assert!((x - y).abs() < 1e-12, "{file} at {t}: {x} vs {y}");
        }
    }
}

#[test]
fn hutchinson_file_matches_the_catalog() {
    let Model::Hutchinson(loaded) = load::<Model>("controlled-hutchinson.json") else { panic!("wrong model") };
    let built = catalog::controlled_hutchinson(0.05).unwrap();
    let opts = ModelOptions::default();
    let a = loaded.certify(HutchinsonVariant::Combined, &opts).unwrap();
    let b = built.certify(HutchinsonVariant::Combined, &opts).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert!((a.lhs - b.lhs).abs() < 1e-12 && (a.threshold - b.threshold).abs() < 1e-12);
}

#[test]
fn mackey_glass_file_is_a_valid_model() {
    let m: Model = load("mackey-glass.json");
    assert!(m.equilibrium().unwrap() > 0.0);
    assert!(m.certify(&ModelOptions::default()).is_ok());
    let lin = m.linearize().unwrap();
    assert_eq!(lin.terms().len(), 3);
}

#[test]
fn history_file_parses() {
    let h: InitialHistory = load("history-wave.json");
    assert!((h.eval(0.0) - 1.0).abs() < 1e-15);
    assert!((h.eval(-0.5) - (1.0 + 0.5 * (-1.5f64).sin())).abs() < 1e-15);
}
