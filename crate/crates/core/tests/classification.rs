mod common;

use common::*;
use rand::Rng;
use rotsol::classification::{
    check_no_period_3d, classify_3d, corollary_case, detect_period_2d, probe_open_case, Basis,
    CorollaryCase, PeriodOutcome, Verdict, PERICENTER_SECTION,
};
use rotsol::emden::{integrate_3d, EmdenState3D, IntegrateOptions, TrajectoryEnd};
use rotsol::Error;

/// Pericenter-to-pericenter period for `xi = 1, lambda = -1, gamma = 1.5`
/// from `a = 1.1` at rest, from an 8th-order reference integration with
/// root-polished crossings.
const REFERENCE_PERIOD: f64 = 6.36188852158751;

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[test]
fn exhaustive_sign_grid() {
    for lambda in [-1.0, 0.0, 1.0] {
        for gamma in [1.0, 1.5, 3.0] {
            for b1 in [-0.5, 0.0, 0.5] {
                let p = params(1.0, gamma, lambda, 1.0, 1.0);
                let s = ic3(1.0, 0.0, 2.0, b1);
                let c = classify_3d(&p, &s);
                let expected = match (sign(lambda), gamma == 1.0, sign(b1)) {
                    (1, _, _) => Verdict::Global,
                    (0, _, 0 | 1) => Verdict::Global,
                    (0, _, _) => Verdict::FiniteTimeBlowup { t: Some(4.0) },
                    (-1, true, _) => Verdict::FiniteTimeBlowup { t: None },
                    (-1, false, -1 | 0) => Verdict::FiniteTimeBlowup { t: None },
                    _ => Verdict::UnknownOpenCase,
                };
                assert_eq!(c.verdict, expected, "lambda={lambda} gamma={gamma} b1={b1}");
                assert!(matches!(c.basis, Basis::Analytic { case } if case == corollary_case(&p, &s)));
            }
        }
    }
}

#[test]
fn case_ids() {
    let ids: Vec<&str> = [
        CorollaryCase::PositiveLambda,
        CorollaryCase::ZeroLambdaNonnegativeB1,
        CorollaryCase::ZeroLambdaNegativeB1,
        CorollaryCase::NegativeLambdaIsothermal,
        CorollaryCase::NegativeLambdaNonpositiveB1,
        CorollaryCase::Open,
    ]
    .iter()
    .map(|c| c.id())
    .collect();
    assert_eq!(ids, ["1", "2a", "2b", "3a", "3b", "open"]);
}

#[test]
fn classification_json_is_flat() {
    let c = classify_3d(&params(1.0, 1.4, 0.0, 1.0, 1.0), &ic3(1.0, 0.0, 1.0, -1.0));
    let v: serde_json::Value = serde_json::to_value(c).unwrap();
    assert_eq!(v["verdict"], "finite_time_blowup");
    assert_eq!(v["T"], 1.0);
    assert_eq!(v["basis"], "analytic");
    assert_eq!(v["case"], "zero_lambda_negative_b1");
    let back: rotsol::classification::Classification = serde_json::from_value(v).unwrap();
    assert_eq!(back, c);
}

#[test]
fn linear_collapse_time_matches_the_table() {
    let mut r = rng(31);
    for _ in 0..20 {
        let b0 = uniform(&mut r, 0.2, 3.0);
        let b1 = uniform(&mut r, -2.0, -0.05);
        let p = params(1.0, uniform(&mut r, 1.0, 3.0), 0.0, 1.0, uniform(&mut r, -1.0, 1.0));
        let s = ic3(uniform(&mut r, 0.5, 2.0), uniform(&mut r, -0.5, 0.5), b0, b1);
        let Verdict::FiniteTimeBlowup { t: Some(t_exact) } = classify_3d(&p, &s).verdict else {
            panic!("expected an analytic blowup time");
        };
        let traj = integrate_3d(&p, &s, 2.0 * t_exact, &IntegrateOptions::standard()).unwrap();
        let t_est = traj.termination.blowup_time().expect("blowup");
        assert!((t_est - t_exact).abs() <= 1e-8 * t_exact, "{t_est} vs {t_exact}");
    }
}

#[test]
fn integrator_never_contradicts_decided_cases() {
    let mut r = rng(32);
    let (mut decided, mut events) = (0, 0);
    while decided < 100 {
        let lambda = [-1.0, 0.0, 1.0][r.gen_range(0..3)] * uniform(&mut r, 0.2, 2.0);
        let gamma = if r.gen_bool(0.3) { 1.0 } else { uniform(&mut r, 1.1, 3.0) };
        let p = params(1.0, gamma, lambda, 1.0, uniform(&mut r, -1.5, 1.5));
        let s = ic3(
            uniform(&mut r, 0.5, 2.0),
            uniform(&mut r, -1.0, 1.0),
            uniform(&mut r, 0.5, 2.0),
            uniform(&mut r, -1.0, 1.0),
        );
        let verdict = classify_3d(&p, &s).verdict;
        if verdict == Verdict::UnknownOpenCase {
            continue;
        }
        decided += 1;
        let traj = integrate_3d(&p, &s, 50.0, &IntegrateOptions::standard()).unwrap();
        match (verdict, traj.termination) {
            (_, TrajectoryEnd::StepFailure { .. }) => panic!("integrator failure for {p:?} {s:?}"),
            (Verdict::Global, end) => assert_eq!(end, TrajectoryEnd::ReachedTEnd, "{p:?} {s:?}"),
            (Verdict::FiniteTimeBlowup { t }, end) => {
                if let Some(t_exact) = t.filter(|&t| t < 50.0) {
                    let t_est = end.blowup_time().expect("event before the horizon");
                    assert!((t_est - t_exact).abs() <= 1e-8 * t_exact);
                }
                if end.blowup_time().is_some() {
                    events += 1;
                }
            }
            (Verdict::UnknownOpenCase, _) => unreachable!(),
        }
    }
    assert!(events > 0);
}

#[test]
fn open_case_probes_report_numerical_evidence() {
    let p = params(1.0, 2.0, -1.0, 1.0, 1.0);
    let c = probe_open_case(&p, &ic3(1.0, 0.0, 1.0, 0.01), 100.0, 1e-10).unwrap();
    assert_eq!(c.basis, Basis::NumericalEvidence { t_horizon: 100.0 });
    assert_ne!(c.verdict, Verdict::Global);
    println!("open-case probe (b1 = 0.01, horizon 100): {:?}", c.verdict);

    let c = probe_open_case(&p, &ic3(1.0, 0.0, 1.0, 1e6), 1e-2, 1e-10).unwrap();
    assert_eq!(c.verdict, Verdict::UnknownOpenCase);

    let err = probe_open_case(&params(1.0, 2.0, 1.0, 1.0, 1.0), &ic3(1.0, 0.0, 1.0, 0.01), 1.0, 1e-10);
    assert!(matches!(err, Err(Error::Misuse(_))));
}

#[test]
fn perturbed_equilibrium_is_periodic() {
    let p = params(1.0, 1.5, -1.0, 1.0, 1.0);
    let out = detect_period_2d(&p, &ic2(1.1, 0.0), 50.0, 1e-10).unwrap();
    let est = out.estimate().expect("periodic orbit").clone();
    assert_eq!(est.method, PERICENTER_SECTION);
    assert!(est.return_error < 1e-6, "{est:?}");
    assert!(rel(est.period, REFERENCE_PERIOD) < 1e-8, "{} vs {REFERENCE_PERIOD}", est.period);

    let half = detect_period_2d(&p, &ic2(1.1, 0.0), 50.0, 5e-11).unwrap();
    assert!(rel(half.estimate().unwrap().period, est.period) < 1e-6);
}

#[test]
fn period_detection_across_the_oscillatory_range() {
    for gamma in [1.0, 1.25, 1.5, 1.75] {
        for a0 in [0.8, 1.3] {
            let p = params(1.0, gamma, -1.0, 1.0, 1.0);
            let out = detect_period_2d(&p, &ic2(a0, 0.0), 200.0, 1e-10).unwrap();
            let est = out.estimate().unwrap_or_else(|| panic!("gamma={gamma} a0={a0}: {out:?}"));
            assert!(est.period > 0.0 && est.return_error < 1e-6, "{est:?}");
        }
    }
}

#[test]
fn expanding_orbits_have_no_period() {
    let p = params(1.0, 1.5, 1.0, 1.0, 1.0);
    assert_eq!(detect_period_2d(&p, &ic2(1.0, -0.5), 50.0, 1e-10).unwrap(), PeriodOutcome::NotDetected);
    let p = params(1.0, 1.5, -1.0, 1.0, 1.0);
    assert_eq!(
        detect_period_2d(&p, &ic2(1.0, 0.0), 50.0, 1e-10).unwrap(),
        PeriodOutcome::FixedPoint { a_star: 1.0 }
    );
}

#[test]
fn negative_lambda_trajectories_are_monotone_in_b_dot() {
    let mut r = rng(33);
    for _ in 0..30 {
        let p = params(1.0, uniform(&mut r, 1.0, 3.0), uniform(&mut r, -2.0, -0.1), 1.0, uniform(&mut r, -1.0, 1.0));
        let s = ic3(uniform(&mut r, 0.5, 2.0), uniform(&mut r, -1.0, 1.0), uniform(&mut r, 0.5, 2.0), uniform(&mut r, -1.0, 1.0));
        let traj = integrate_3d(&p, &s, 20.0, &IntegrateOptions::standard()).unwrap();
        assert!(check_no_period_3d(&p, &traj).unwrap());
    }
}

#[test]
fn tampered_trajectories_fail_the_monotonicity_check() {
    let p = params(1.0, 1.5, -1.0, 1.0, 1.0);
    let traj = integrate_3d(&p, &ic3(1.0, 0.0, 1.0, 0.5), 2.0, &IntegrateOptions::standard()).unwrap();
    let mut samples = traj.samples.clone();
    let k = samples.len() / 2;
    samples[k] = EmdenState3D { b_dot: samples[k - 1].b_dot + 0.1, ..samples[k] };
    assert!(!check_no_period_3d(&p, &traj.with_samples(samples)).unwrap());

    let p0 = params(1.0, 1.5, 0.0, 1.0, 1.0);
    let flat = integrate_3d(&p0, &ic3(1.0, 0.0, 1.0, 0.0), 2.0, &IntegrateOptions::standard()).unwrap();
    assert!(matches!(check_no_period_3d(&p0, &flat), Err(Error::Misuse(_))));
}
