use std::path::PathBuf;
use std::process::Command;

use proptest::prelude::*;
use rotsol::config::{
    parse_config, serialize_config, Axis, ConfigEntries, Grid, InitialCondition, Mode, RunConfig,
    Tolerances,
};
use rotsol::emden::{EmdenState2D, EmdenState3D};
use rotsol::run::{run, run_to, RunStatus, EVIDENCE_LABEL, FIELD_HEADER};
use rotsol::{Error, PhysParams};

const BASE: &str = "\
# unit isothermal-free setup
gamma = 1.4
lambda = 1
alpha = 1
xi = 1
a0 = 1
a1 = 0
b0 = 1
b1 = 0
";

fn with(extra: &str) -> RunConfig {
    parse_config(&format!("{BASE}{extra}")).unwrap()
}

fn output(config: &RunConfig) -> (rotsol::Result<RunStatus>, String) {
    let mut buf = Vec::new();
    let status = run_to(config, &mut buf);
    (status, String::from_utf8(buf).unwrap())
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotsol"))
}

#[test]
fn parse_errors_name_the_key() {
    let err = parse_config("gamma=0.5\nlambda=1\nalpha=1\nxi=1\na0=1\na1=0\nb0=1\nb1=0").unwrap_err();
    assert!(err.to_string().contains("gamma must be ≥ 1"), "{err}");
    let err = parse_config(&BASE.replace("a0 = 1", "a0 = -1")).unwrap_err();
    assert!(err.to_string().contains("a0"), "{err}");
    let err = parse_config(&format!("{BASE}colour = blue\n")).unwrap_err();
    assert!(err.to_string().contains("colour") && err.to_string().contains("line 10"), "{err}");
    let err = parse_config(&BASE.replace("xi = 1", "xi = one")).unwrap_err();
    assert!(err.to_string().contains("xi"), "{err}");
    let err = parse_config(&BASE.replace("b1 = 0\n", "")).unwrap_err();
    assert!(err.to_string().contains("b1"), "{err}");
    let grid = "mode = sample\ntimes = 1\ngrid.y = 0:1:2\ngrid.z = 0:1:2\n";
    let err = parse_config(&format!("{BASE}{grid}grid.x = 0:1:1\n")).unwrap_err();
    assert!(err.to_string().contains("grid.x"), "{err}");
    let c = with(&format!("{grid}grid.x = 0.5:0.5:1\n"));
    assert_eq!(c.grid.unwrap().x.points(), [0.5]);
}

#[test]
fn defaults_are_filled() {
    let c = with("");
    assert_eq!(c.tolerances, Tolerances::default());
    assert_eq!(c.tolerances.rel_tol, 1e-10);
    assert_eq!(c.tolerances.abs_tol, 1e-12);
    assert_eq!(c.params.k(), 1.0);
    assert_eq!(c.mode, None);
    assert_eq!(c.ic.dim(), 3);
}

#[test]
fn overrides_replace_file_values() {
    let mut e = ConfigEntries::parse(&BASE.replace("b0 = 1\nb1 = 0\n", "")).unwrap();
    e.set("lambda=-2").unwrap();
    e.set_value("dim", "2").unwrap();
    let c = e.build().unwrap();
    assert_eq!(c.params.lambda(), -2.0);
    assert_eq!(c.ic.dim(), 2);
    assert!(e.set("no_equals_sign").is_err());
}

fn arb_axis() -> impl Strategy<Value = Axis> {
    (-10.0f64..0.0, 0.1f64..10.0, 2usize..20).prop_map(|(min, max, count)| Axis { min, max, count })
}

prop_compose! {
    fn arb_config()(
        gamma in prop_oneof![Just(1.0), 1.0f64..4.0],
        k in 0.01f64..10.0,
        lambda in -5.0f64..5.0,
        alpha in 0.0f64..5.0,
        xi in -5.0f64..5.0,
        mu in 0.0f64..3.0,
        a in 0.01f64..10.0,
        a1 in -5.0f64..5.0,
        b in 0.01f64..10.0,
        b1 in -5.0f64..5.0,
        three_d in any::<bool>(),
        mode in prop::sample::select(vec![None, Some(Mode::Integrate), Some(Mode::Sample), Some(Mode::Verify), Some(Mode::Classify), Some(Mode::Sweep)]),
        t_end in 0.5f64..50.0,
        n_times in 0usize..5,
        grid in proptest::option::of((arb_axis(), arb_axis(), arb_axis())),
        rel_tol in 1e-13f64..1e-4,
        h in 1e-5f64..1e-1,
        probe in proptest::option::of(1.0f64..100.0),
        output in proptest::option::of("[a-z]{1,8}\\.(csv|json)"),
        sweep in proptest::collection::vec((prop::sample::select(vec!["lambda", "xi", "a1"]), proptest::collection::vec(-3.0f64..3.0, 1..4)), 0..2),
    ) -> RunConfig {
        let ic = if three_d {
            InitialCondition::ThreeD(EmdenState3D::new(0.0, a, a1, b, b1).unwrap())
        } else {
            InitialCondition::TwoD(EmdenState2D::new(0.0, a, a1).unwrap())
        };
        let mut seen = std::collections::HashSet::new();
        RunConfig {
            mode,
            params: PhysParams::new(k, gamma, lambda, alpha, xi).unwrap().with_mu(mu).unwrap(),
            ic,
            t_end,
            times: (0..n_times).map(|i| t_end * (i as f64 + 1.0) / (n_times as f64 + 1.0)).collect(),
            grid: grid.map(|(x, y, z)| Grid { x, y, z: three_d.then_some(z) }),
            tolerances: Tolerances { rel_tol, abs_tol: rel_tol * 1e-2, max_steps: 1000 + n_times, floor_factor: 1e-9 },
            stencil_h: h,
            output: output.map(PathBuf::from),
            probe_horizon: probe,
            sweep: sweep
                .into_iter()
                .filter(|(n, _)| seen.insert(*n))
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_then_parse_is_identity(c in arb_config()) {
        let text = serialize_config(&c);
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, c);
    }
}

#[test]
fn classify_linear_collapse() {
    let c = with("mode = classify\nlambda = 0\nb1 = -1\n");
    let (status, text) = output(&c);
    assert_eq!(status.unwrap(), RunStatus::Complete);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "finite_time_blowup");
    assert_eq!(v["T"], 1.0);
    assert_eq!(v["basis"], "analytic");
    assert_eq!(v["params"]["lambda"], 0.0);
    assert_eq!(v["ic"]["b_dot"], -1.0);
}

#[test]
fn classify_open_case_with_probe_is_labelled() {
    let c = with("mode = classify\ngamma = 2\nlambda = -1\nb1 = 0.01\nprobe.horizon = 100\n");
    let (_, text) = output(&c);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "unknown_open_case");
    assert_eq!(v["probe"]["basis"], "numerical_evidence");
    assert_eq!(v["evidence"], EVIDENCE_LABEL);
}

#[test]
fn classify_2d_reports_the_period() {
    let c = parse_config("mode=classify\ndim=2\ngamma=1.5\nlambda=-1\nalpha=1\nxi=1\na0=1.1\na1=0\nt_end=50\n").unwrap();
    let (_, text) = output(&c);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["period"]["outcome"], "periodic");
    assert!((v["period"]["period"].as_f64().unwrap() - 6.36188852158751).abs() < 1e-7);
}

#[test]
fn vacuum_sample_has_eight_zero_rows() {
    let c = with("mode = sample\nalpha = 0\ntimes = 0.5\ngrid.x = -1:1:2\ngrid.y = -1:1:2\ngrid.z = -1:1:2\n");
    let (status, text) = output(&c);
    assert_eq!(status.unwrap(), RunStatus::Complete);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], FIELD_HEADER);
    assert_eq!(lines.len(), 9);
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(4).unwrap(), "0.0");
    }
}

#[test]
fn sample_rows_follow_the_grid_ordering() {
    let c = with("mode = sample\ntimes = 0.25, 1.0\ngrid.x = -1:1:3\ngrid.y = 0:2:4\ngrid.z = -0.5:0.5:2\n");
    let (_, text) = output(&c);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let (nx, ny, nz, nt) = (3, 4, 2, 2);
    assert_eq!(rows.len(), nx * ny * nz * nt);
    let g = c.grid.unwrap();
    for it in 0..nt {
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let row = &rows[ix + nx * (iy + ny * (iz + nz * it))];
                    assert_eq!(row[0], g.x.point(ix));
                    assert_eq!(row[1], g.y.point(iy));
                    assert_eq!(row[2], g.z.unwrap().point(iz));
                    assert_eq!(row[3], c.times[it]);
                }
            }
        }
    }
}

#[test]
fn sample_floats_round_trip() {
    let c = with("mode = sample\ntimes = 0.3\ngrid.x = -0.7:0.9:3\ngrid.y = -1:1:2\ngrid.z = 0:1:2\n");
    let (_, text) = output(&c);
    let traj = rotsol::emden::integrate_3d(
        &c.params,
        match &c.ic {
            InitialCondition::ThreeD(s) => s,
            _ => unreachable!(),
        },
        0.3,
        &rotsol::emden::IntegrateOptions::standard(),
    )
    .unwrap();
    let field = rotsol::fields::TrajectoryField3D::new(c.params, traj).at(0.3).unwrap();
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        let s = field.eval(v[0], v[1], v[2]).unwrap();
        assert_eq!(v[4..], [s.rho, s.u[0], s.u[1], s.u[2], s.s, s.p]);
    }
}

#[test]
fn sample_2d_uses_zero_z() {
    let c = parse_config("mode=sample\ndim=2\ngamma=1.5\nlambda=-1\nalpha=1\nxi=1\na0=1\na1=0\ntimes=0,1\ngrid.x=-1:1:2\ngrid.y=-1:1:3\n").unwrap();
    let (_, text) = output(&c);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 3 * 2);
    assert!(rows.iter().all(|r| {
        let v: Vec<&str> = r.split(',').collect();
        v[2] == "0.0" && v[7] == "0.0"
    }));
}

#[test]
fn sample_past_blowup_is_truncated() {
    let c = with("mode = sample\nlambda = 0\nb1 = -1\ntimes = 0.5, 2\ngrid.x = 0:1:2\ngrid.y = 0:1:2\ngrid.z = 0:1:2\n");
    let (status, text) = output(&c);
    let status = status.unwrap();
    assert!(matches!(status, RunStatus::BlowupTruncated(_)));
    assert_eq!(status.exit_code(), 3);
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn integrate_writes_jsonl_with_termination_last() {
    let c = with("mode = integrate\ntimes = 0, 0.5, 1\nt_end = 1\n");
    let (status, text) = output(&c);
    assert_eq!(status.unwrap(), RunStatus::Complete);
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    for (l, t) in lines.iter().zip([0.0, 0.5, 1.0]) {
        assert_eq!(l["t"], t);
        for key in ["a", "a_dot", "b", "b_dot", "energy"] {
            assert!(l[key].is_f64(), "missing {key}");
        }
    }
    assert_eq!(lines[3]["termination"], "reached_t_end");
}

#[test]
fn integrate_blowup_exits_with_three() {
    let c = with("mode = integrate\nlambda = 0\nb1 = -1\nt_end = 2\n");
    let (status, text) = output(&c);
    assert!(matches!(status.unwrap(), RunStatus::BlowupTruncated(_)));
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["termination"], "blowup_detected");
    assert!((last["t_est"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(last["which"], "b");
}

#[test]
fn integrate_open_case_is_labelled() {
    let c = with("mode = integrate\ngamma = 2\nlambda = -1\nb1 = 0.01\nt_end = 0.5\n");
    let (_, text) = output(&c);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["evidence"], EVIDENCE_LABEL);
}

#[test]
fn integrate_2d_omits_b() {
    let c = parse_config("mode=integrate\ndim=2\ngamma=1.5\nlambda=-1\nalpha=1\nxi=1\na0=1.1\na1=0\nt_end=1\ntimes=0.5\n").unwrap();
    let (_, text) = output(&c);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first.get("b").is_none() && first["a"].is_f64());
}

#[test]
fn verify_reports_second_order() {
    let c = with("mode = verify\nlambda = -0.5\ngamma = 1.5\nrel_tol = 1e-12\nabs_tol = 1e-14\ntimes = 0.2, 0.4\ngrid.x = -0.8:0.6:3\ngrid.y = -0.5:0.7:3\ngrid.z = 0.1:0.9:2\n");
    let (status, text) = output(&c);
    assert_eq!(status.unwrap(), RunStatus::Complete);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 36);
    assert_eq!(v["stencil_h"], 1e-3);
    for key in ["min_mass_order", "min_momentum_order"] {
        let o = v["summary"][key].as_f64().unwrap();
        assert!((o - 2.0).abs() < 0.4, "{key} = {o}");
    }
}

#[test]
fn verify_rejects_times_before_the_stencil() {
    let c = with("mode = verify\ntimes = 0\ngrid.x = 0:1:2\ngrid.y = 0:1:2\ngrid.z = 0:1:2\n");
    assert!(matches!(output(&c).0, Err(Error::Config(_))));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let c = with("mode = sweep\nt_end = 5\nsweep.lambda = -1, 0, 1\nsweep.b1 = -0.5, 0.5\n");
    let (status, text) = output(&c);
    assert_eq!(status.unwrap(), RunStatus::Complete);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "K,gamma,lambda,alpha,xi,a0,a1,b0,b1,case,verdict,T_analytic,T_est");
    assert_eq!(lines.len(), 7);
    let row = |i: usize| lines[i].split(',').map(str::to_string).collect::<Vec<_>>();
    // lambda = 0, b1 = -0.5 collapses at t = 2.
    let r = row(3);
    assert_eq!((r[2].as_str(), r[8].as_str()), ("0.0", "-0.5"));
    assert_eq!((r[9].as_str(), r[10].as_str(), r[11].as_str()), ("2b", "finite_time_blowup", "2.0"));
    assert!((r[12].parse::<f64>().unwrap() - 2.0).abs() < 1e-8);
    // lambda = -1, b1 = 0.5 is undecided.
    assert_eq!(row(2)[9], "open");
    assert_eq!(row(5)[10], "global");
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("field{i}.csv"));
        let mut c = with("mode = sample\ntimes = 0.1, 0.7\ngrid.x = -1:1:9\ngrid.y = -1:1:7\ngrid.z = -1:1:5\n");
        c.output = Some(path.clone());
        assert_eq!(run(&c).unwrap(), RunStatus::Complete);
        outputs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 1 + 9 * 7 * 5 * 2);
}

#[test]
fn binary_exit_codes_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, BASE).unwrap();

    let out = bin().args(["classify", "--config"]).arg(&cfg).args(["--set", "lambda=0", "--set", "b1=-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["T"], 1.0);

    let out = bin().args(["classify", "--config"]).arg(&cfg).args(["--set", "gamma=0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma must be ≥ 1"));

    let traj = dir.path().join("traj.jsonl");
    let out = bin()
        .args(["integrate", "--config"])
        .arg(&cfg)
        .args(["--set", "lambda=0", "--set", "b1=-1", "--set", "t_end=3", "--output"])
        .arg(&traj)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(&traj).unwrap();
    assert!(text.lines().last().unwrap().contains("blowup_detected"));

    let out = bin()
        .args(["integrate", "--dim", "2", "--set", "gamma=1.5", "--set", "lambda=-1", "--set", "alpha=1", "--set", "xi=1", "--set", "a0=1.1", "--set", "a1=0", "--set", "t_end=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin().args(["sample", "--config"]).arg(&cfg).args(["--set", "times=0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "grid is required");
}
