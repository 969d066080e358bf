use findscope_core::verify::{run, Battery, VerifySettings};

fn quick() -> VerifySettings {
    let mut s = VerifySettings::fast(0.5, 1.0, 3);
    s.ns = vec![200, 2000];
    s.marginal_reps = 100;
    s.cov_reps = 100;
    s.cascade_seeds = 1000;
    s.jump_seeds = 4000;
    s
}

#[test]
fn exact_batteries_are_green() {
    let r = run(&quick(), &[Battery::Split, Battery::Equivalence]).unwrap();
    assert_eq!(r.criterion_passed("AC1"), Some(true));
    assert_eq!(r.criterion_passed("AC2"), Some(true));
}

#[test]
fn jump_battery_picks_common_prefix() {
    let r = run(&quick(), &[Battery::Jump]).unwrap();
    assert_eq!(r.criterion_passed("AC7"), Some(true), "{:#?}", r.checks);
}

#[test]
fn tamper_shifts_variance_targets() {
    let mut s = quick();
    s.tamper = true;
    let r = run(&s, &[Battery::Cascade]).unwrap();
    let var = r.checks.iter().find(|c| c.name.starts_with("Var Z_")).unwrap();
    assert!(!var.passed);
    let m = run(&s, &[Battery::Marginal]).unwrap();
    let target = m.reports().into_iter().find(|r| r.estimator.starts_with("var Y_n")).unwrap().target.unwrap();
    assert!((target - 2.546_918_160_678_027).abs() < 1e-12);
}

#[test]
fn report_is_thread_count_independent() {
    let s = quick();
    let go = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| run(&s, &[Battery::Cascade, Battery::Cov]).unwrap());
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(go(1), go(3));
}

#[test]
fn rejects_empty_sizes() {
    let mut s = quick();
    s.ns.clear();
    assert!(run(&s, &[Battery::Split]).is_err());
}

#[test]
fn battery_names_are_stable() {
    let names: Vec<&str> = Battery::ALL.iter().map(|b| b.name()).collect();
    assert_eq!(
        names,
        ["split", "equivalence", "engine", "marginal", "cov", "cascade", "sup", "tail", "jump", "variation", "modulus"]
    );
}
