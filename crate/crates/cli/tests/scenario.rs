use std::path::PathBuf;

use switchnet_cli::error::CliError;
use switchnet_cli::scenario::Initial;
use switchnet_cli::{parse_scenario, ModelId, Scenario};

fn bundled() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn parse(text: &str) -> Result<Scenario, CliError> {
    Scenario::from_toml(text, "inline")
}

fn field_error(text: &str) -> (String, String) {
    match parse(text) {
        Err(CliError::Invalid { field, message }) => (field, message),
        other => panic!("expected a field error, got {other:?}"),
    }
}

const MINIMAL: &str = r#"
model = "hk"
n = 3
d = 1

[initial]
kind = "explicit"
values = [[0.0], [0.5], [2.0]]

[params]
eps = 1.0
"#;

#[test]
fn minimal_scenario_gets_defaults() {
    let s = parse(MINIMAL).unwrap();
    assert_eq!(s.model, ModelId::Hk);
    assert_eq!(s.initial, Initial::Explicit { values: vec![vec![0.0], vec![0.5], vec![2.0]] });
    assert_eq!((s.run.max_iters, s.run.tol, s.run.trials, s.run.seed), (10_000, 1e-12, 1, 0));
}

#[test]
fn bundled_scenarios_round_trip() {
    let files = bundled();
    assert_eq!(files.len(), 7);
    let mut models = Vec::new();
    for path in files {
        let s = parse_scenario(&path).unwrap();
        let emitted = s.to_toml().unwrap();
        assert_eq!(parse(&emitted).unwrap(), s, "{}", path.display());
        // emitting is a fixed point after one pass
        assert_eq!(parse(&emitted).unwrap().to_toml().unwrap(), emitted);
        models.push(s.model);
    }
    models.sort_by_key(|m| m.as_str());
    models.dedup();
    assert_eq!(models.len(), 7);
}

#[test]
fn awkward_floats_round_trip() {
    let mut s = parse(MINIMAL).unwrap();
    s.initial = Initial::Explicit {
        values: vec![vec![0.1 + 0.2], vec![-1e-300], vec![123_456_789.123_456_78]],
    };
    s.run.tol = 5e-324;
    assert_eq!(parse(&s.to_toml().unwrap()).unwrap(), s);
}

#[test]
fn missing_pair_bound_is_named() {
    let text = r#"
model = "hk-restricted"
n = 3
d = 1
[initial]
kind = "explicit"
values = [[0.0], [0.5], [1.0]]
[params]
edges = [[0, 1], [0, 2]]
eps_pairs = [{ i = 0, j = 1, eps = 0.5 }]
"#;
    assert_eq!(
        field_error(text),
        ("params.eps_pairs".to_string(), "missing bound for edge (0, 2)".to_string())
    );
}

#[test]
fn mu_outside_open_interval_is_rejected() {
    let text = r#"
model = "nn-async"
n = 3
d = 1
[initial]
kind = "explicit"
values = [[0.0], [0.5], [1.0]]
[params]
mu = [0.5, 1.0, 0.5]
"#;
    let (field, message) = field_error(text);
    assert_eq!(field, "params.mu[1]");
    assert!(message.starts_with("μ must lie in (0,1)"), "{message}");
}

#[test]
fn field_errors() {
    let cases = [
        (MINIMAL.replace("eps = 1.0", "eps = -1.0"), "params.eps"),
        (MINIMAL.replace("eps = 1.0", ""), "params.eps"),
        (MINIMAL.replace("eps = 1.0", "eps = 1.0\nstubborn = [0]"), "params.stubborn"),
        (MINIMAL.replace("[2.0]]", "[2.0], [3.0]]"), "initial.values"),
        (MINIMAL.replace("[0.5]", "[0.5, 1.0]"), "initial.values[1]"),
        (MINIMAL.replace("n = 3", "n = 0"), "n"),
        (format!("{MINIMAL}\n[run]\ntrials = 0\n"), "run.trials"),
        (format!("{MINIMAL}\n[run]\nmax_iters = 0\n"), "run.max_iters"),
    ];
    for (text, field) in cases {
        assert_eq!(field_error(&text).0, field, "{text}");
    }
}

#[test]
fn sync_needs_common_mu() {
    let text = r#"
model = "nn-sync"
n = 2
d = 1
[initial]
kind = "explicit"
values = [[0.0], [1.0]]
[params]
mu = [0.3, 0.4]
"#;
    assert_eq!(field_error(text).0, "params.mu");
}

#[test]
fn syntax_errors_carry_the_line() {
    let err = parse(&MINIMAL.replace("model = \"hk\"", "model = \"nope\"")).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("line 2"), "{text}");
    assert!(text.contains("unknown variant `nope`"), "{text}");

    let err = parse(&MINIMAL.replace("eps = 1.0", "epsilon = 1.0")).unwrap_err();
    assert!(matches!(err, CliError::Syntax { .. }));
    assert!(err.to_string().contains("epsilon"), "{err}");
}

#[test]
fn uniform_profiles_follow_the_seed() {
    let text = r#"
model = "nn-sync"
n = 4
d = 2
[initial]
kind = "uniform-random"
low = -1.0
high = 1.0
[params]
mu = [0.3, 0.3, 0.3, 0.3]
[run]
seed = 9
"#;
    let s = parse(text).unwrap();
    assert_eq!(s.profile(0).unwrap(), s.profile(0).unwrap());
    assert_ne!(s.profile(0).unwrap(), s.profile(1).unwrap());
    let x = s.profile(3).unwrap();
    assert!(x.matrix().iter().all(|v| (-1.0..1.0).contains(v)));
    assert!(s.is_stochastic());
}
