use super::*;
use crate::error::Error;
use crate::protocols::Backend;
use crate::rng::StreamKey;

fn cfg(estimator: EstimatorKind) -> ExperimentConfig {
    ExperimentConfig {
        name: "t".into(),
        id: 3,
        family: FamilySpec { kind: FamilyKind::Bernoulli, d: 8, s: 2, mean: None, signal: None },
        constraint: Backend::Ldp { epsilon: 1.0 },
        p: LossExponent(2.0),
        n: vec![2000, 4000, 8000],
        trials: 40,
        seed: 17,
        estimator,
    }
}

#[test]
fn loss_exponent_parsing() {
    #[derive(serde::Deserialize)]
    struct W {
        p: LossExponent,
    }
    let p = |s: &str| toml::from_str::<W>(s).map(|w| w.p.0);
    assert_eq!(p("p = 2").unwrap(), 2.0);
    assert_eq!(p("p = 2.5").unwrap(), 2.5);
    assert!(p("p = \"inf\"").unwrap().is_infinite());
    assert!(p("p = \"Infinity\"").unwrap().is_infinite());
    assert_eq!(p("p = \"4\"").unwrap(), 4.0);
    for bad in ["p = 0.5", "p = \"abc\"", "p = \"nan\"", "p = true"] {
        assert!(p(bad).is_err(), "{bad}");
    }
    assert_eq!(serde_json::to_string(&LossExponent(f64::INFINITY)).unwrap(), "\"inf\"");
    assert_eq!(LossExponent::surrogate(8), 6.0);
    assert_eq!(LossExponent::surrogate(1), 1.0);
    assert_eq!(LossExponent::surrogate(5), 5.0);
}

#[test]
fn config_files() {
    let one = r#"
        seed = 5
        p = "inf"
        n = [100, 200]
        trials = 3
        [family]
        kind = "gaussian"
        d = 4
        s = 1
        [constraint]
        kind = "comm"
        bits = 2
    "#;
    let plan = ExperimentPlan::from_toml_str(one).unwrap();
    assert_eq!(plan.experiments.len(), 1);
    let c = &plan.experiments[0];
    assert_eq!(c.constraint, Backend::Comm { bits: 2 });
    assert_eq!(c.family.mean().unwrap(), vec![0.5, 0.0, 0.0, 0.0]);
    assert_eq!(c.estimator, EstimatorKind::Protocol);

    let many = r#"
        [[experiments]]
        p = 2
        n = [10]
        trials = 1
        estimator = "oracle"
        family = { kind = "bernoulli", d = 3, s = 3, mean = [0.1, 0.2, 0.3] }
        constraint = { kind = "ldp", epsilon = 0.5 }
        [[experiments]]
        p = 1
        n = [10]
        trials = 1
        family = { kind = "bernoulli", d = 3, s = 1, signal = -0.25 }
        constraint = { kind = "ldp", epsilon = 0.5 }
    "#;
    let plan = ExperimentPlan::from_toml_str(many).unwrap();
    assert_eq!(plan.experiments.len(), 2);
    assert_eq!(plan.experiments[1].family.mean().unwrap(), vec![-0.25, 0.0, 0.0]);

    let json = serde_json::to_string(&plan.experiments[0]).unwrap();
    assert_eq!(ExperimentPlan::from_json_str(&json).unwrap().experiments[0], plan.experiments[0]);
    let json = serde_json::to_string(&plan).unwrap();
    assert_eq!(ExperimentPlan::from_json_str(&json).unwrap(), plan);

    let broken = [
        one.replace("trials = 3", "trials = 0"),
        one.replace("n = [100, 200]", "n = []"),
        one.replace("seed = 5", "seed = 5\nbogus = 1"),
        one.replace("bits = 2", "bits = 9"),
        one.replace("s = 1", "s = 5"),
        one.replace("kind = \"comm\"\n        bits = 2", "kind = \"ldp\"\n        epsilon = 2.0"),
        "experiments = []".to_string(),
        "not toml [".to_string(),
    ];
    for b in &broken {
        assert!(ExperimentPlan::from_toml_str(b).is_err(), "{b}");
    }
    assert!(matches!(ExperimentPlan::from_json_str("{"), Err(Error::Parse(_))));
}

#[test]
fn oracle_has_zero_risk() {
    let r = monte_carlo_risk(&cfg(EstimatorKind::Oracle)).unwrap();
    assert!(r.points.iter().all(|p| p.risk == 0.0 && p.stderr == 0.0));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let mut c = cfg(EstimatorKind::Protocol);
    c.p = LossExponent(f64::INFINITY);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| monte_carlo_risk(&c).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.without_timing(), b.without_timing());
    assert!(a.points[0].surrogate.is_some());
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_csv(&[a], &mut x).unwrap();
    write_csv(&[b], &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn csv_layout() {
    let r = monte_carlo_risk(&cfg(EstimatorKind::Protocol)).unwrap();
    let mut out = Vec::new();
    write_csv(&[r.clone(), r], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("bernoulli,ldp,1.0,2000,8,2,2,40,"), "{}", lines[1]);
    assert!(lines[1].ends_with(",17"));
    let mut empty = Vec::new();
    write_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap().trim(), CSV_COLUMNS.join(","));
}

#[test]
fn estimator_errors_name_the_grid_point() {
    let mut c = cfg(EstimatorKind::Protocol);
    c.family.d = 81;
    c.family.s = 1;
    c.n = vec![50];
    match monte_carlo_risk(&c) {
        Err(Error::Configuration(m)) => assert!(m.contains("(n, d, s) = (50, 81, 1)"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn synthetic_rate_fits() {
    let ns = [1e3, 4e3, 1.6e4, 6.4e4];
    let half: Vec<f64> = ns.iter().map(|n: &f64| 3.0 / n.sqrt()).collect();
    let fit = fit_loglog(&ns, &half).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-9);
    assert!(fit.max_abs_residual < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
    let one: Vec<f64> = ns.iter().map(|n| 0.7 / n).collect();
    assert!((fit_loglog(&ns, &one).unwrap().slope + 1.0).abs() < 1e-9);
    assert!(fit_loglog(&ns[..2], &one[..2]).is_err());
    assert!(fit_loglog(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(fit_loglog(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
}

#[test]
fn bootstrap_error_shrinks_like_root_trials() {
    let key = StreamKey::from_seed(1);
    let draws = |m: u64| -> Vec<f64> { (0..m).map(|i| key.uniform(i, 0)).collect() };
    let small = bootstrap_stderr(&draws(400), 1.0, 400, &key.derive(1));
    let large = bootstrap_stderr(&draws(6400), 1.0, 400, &key.derive(2));
    let ratio = small / large;
    assert!((3.2..=4.8).contains(&ratio), "{ratio}");
    // uniform mean has standard error 1/√(12 m)
    assert!((small - 1.0 / (12.0f64 * 400.0).sqrt()).abs() < 0.2 * small);
}

#[test]
fn suite_names() {
    match run_verification_suite("bogus", 0, None) {
        Err(Error::InvalidParameter(m)) => {
            for s in Suite::ALL {
                assert!(m.contains(s.name()), "{m}");
            }
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn small_suites_pass() {
    for s in Suite::ALL {
        let budget = if s == Suite::Binomial { 6 } else { 12 };
        let r = run_verification_suite(s.name(), 2, Some(budget)).unwrap();
        assert!(r.pass(), "{s}: {:?}", r.failure_details);
        assert_eq!(r.suite, s.name());
        assert!(r.max_slack_used >= 0.0);
        let json = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 5, "{keys:?}");
    }
}
