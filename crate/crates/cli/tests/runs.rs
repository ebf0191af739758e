use std::sync::OnceLock;

use serde_json::Value;

use hyperminimal_cli::config::{DataSpec, RunConfig, Slot, Target};
use hyperminimal_cli::{run, sweep, Axis};

fn schema() -> &'static jsonschema::JSONSchema {
    static S: OnceLock<jsonschema::JSONSchema> = OnceLock::new();
    S.get_or_init(|| {
        let text = include_str!("../../../docs/report.schema.json");
        let v: Value = serde_json::from_str(text).unwrap();
        jsonschema::JSONSchema::compile(&v).unwrap()
    })
}

fn validate(report: &hyperminimal_cli::Report) {
    let v: Value = serde_json::from_str(&report.to_json()).unwrap();
    let msgs: Vec<String> = match schema().validate(&v) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "report does not validate: {msgs:?}");
}

fn config(target: Target, l: i64, data: DataSpec) -> RunConfig {
    RunConfig {
        target,
        l,
        data,
        ..RunConfig::default()
    }
}

#[test]
fn superminimal_run_is_stable_and_validates() {
    let c = config(
        Target::Rh4,
        1,
        DataSpec::BasisElement {
            index: 0,
            amplitude: 1.0,
            slot: Slot::Theta2,
        },
    );
    let r = run(&c).report;
    validate(&r);
    assert!(r.passed, "{:?}", r.checks);
    let inv = r.invariants.as_ref().unwrap();
    assert!((inv.area - 2.0 * std::f64::consts::PI).abs() < 0.02 * 2.0 * std::f64::consts::PI);
    assert_eq!(r.moduli.as_ref().unwrap().descriptor.verdict, hyperminimal::moduli::Verdict::Stable);
}

#[test]
fn zero_rh3_run_is_polystable() {
    let r = run(&config(Target::Rh3, 0, DataSpec::Zero)).report;
    validate(&r);
    assert!(r.passed);
    let s = r.solution.as_ref().unwrap();
    assert!(s.u_max.abs() <= 1e-10 && s.u_min.abs() <= 1e-10);
    assert_eq!(r.moduli.as_ref().unwrap().descriptor.verdict, hyperminimal::moduli::Verdict::Polystable);
}

#[test]
fn reports_are_deterministic_and_written_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Target::Rh4, 0, DataSpec::Random { amplitude: 0.3 });
    c.seed = 42;
    c.output_dir = Some(dir.path().join("a"));
    let a = run(&c);
    c.output_dir = Some(dir.path().join("b"));
    let b = run(&c);
    assert!(a.report.passed);
    let ja = std::fs::read_to_string(dir.path().join("a/report.json")).unwrap();
    let jb = std::fs::read_to_string(dir.path().join("b/report.json")).unwrap();
    assert_eq!(ja.replace("/a\"", "/b\""), jb);
    let csv = std::fs::read_to_string(dir.path().join("a/fields.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "vertex,x,y,u,w,kappa_gamma,kappa_perp,u4_norm");
    assert_eq!(csv.lines().count(), 1 + a.report.mesh.as_ref().unwrap().vertices);
    assert_eq!(b.fields.unwrap().rows.len(), a.fields.unwrap().rows.len());

    c.seed = 43;
    let other = run(&c).report;
    assert_ne!(other.invariants.unwrap().area, a.report.invariants.unwrap().area);
}

#[test]
fn failures_are_reported_with_their_stage() {
    let r = run(&RunConfig {
        genus: 1,
        ..RunConfig::default()
    })
    .report;
    validate(&r);
    let f = r.failed_at.as_ref().unwrap();
    assert_eq!((f.module.as_str(), f.operation.as_str()), ("cli", "validate"));
    assert!(!r.passed);

    // too few iterations to converge
    let mut c = config(Target::Rh4, 1, DataSpec::Random { amplitude: 0.3 });
    c.solver.max_iter = 1;
    let r = run(&c).report;
    validate(&r);
    let f = r.failed_at.as_ref().unwrap();
    assert_eq!(f.module, "germsolve");
    assert!(f.payload["newton_trace"].is_array());
    assert!(r.mesh.is_some() && r.bundle_dims.len() == 2);

    let c = config(
        Target::Rh4,
        0,
        DataSpec::BasisElement {
            index: 9,
            amplitude: 1.0,
            slot: Slot::Theta1,
        },
    );
    let f = run(&c).report.failed_at.unwrap();
    assert_eq!(f.operation, "build_data");
}

#[test]
fn manufactured_run_reports_its_error() {
    let mut errs = Vec::new();
    for r in [3, 4] {
        let c = RunConfig {
            resolution: r,
            ..config(Target::Rh3, 0, DataSpec::Manufactured { u_star: 0.1 })
        };
        let rep = run(&c).report;
        validate(&rep);
        assert!(rep.passed);
        errs.push((rep.mms_error.unwrap(), rep.mesh.unwrap().mesh_size));
    }
    let order = (errs[0].0 / errs[1].0).ln() / (errs[0].1 / errs[1].1).ln();
    assert!(order >= 1.8, "{errs:?}");
}

#[test]
fn file_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Target::Rh3, 0, DataSpec::Random { amplitude: 0.2 });
    let mesh = hyperminimal::mesh::build_surface(2, 3).unwrap();
    let path = dir.path().join("q.json");
    let q: Vec<[f64; 2]> = (0..mesh.num_vertices()).map(|_| [0.0, 0.0]).collect();
    std::fs::write(&path, serde_json::json!({ "q": q }).to_string()).unwrap();
    let r = run(&RunConfig {
        data: DataSpec::File { path },
        ..c
    })
    .report;
    assert!(r.passed, "{:?}", r.failed_at);
    assert!(r.solution.unwrap().u_max.abs() < 1e-10);
}

#[test]
fn amplitude_sweep_decreases_area_within_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Target::Rh4, 0, DataSpec::Random { amplitude: 0.0 });
    c.seed = 5;
    c.output_dir = Some(dir.path().to_path_buf());
    let out = sweep(&c, Axis::Amplitude, &[0.0, 0.1, 0.2, 0.3, 0.4]).unwrap();
    let areas: Vec<f64> = out.rows.iter().map(|r| r.area.unwrap()).collect();
    assert!((areas[0] - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    for w in areas.windows(2) {
        assert!(w[1] < w[0], "{areas:?}");
    }
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(table.starts_with("value,area,euler_integral,max_identity_residual,verdict"));
    assert_eq!(table.lines().count(), 6);
    for r in &out.reports {
        validate(r);
    }
}

#[test]
fn sweep_records_bad_rows_and_continues() {
    let c = config(Target::Rh4, 0, DataSpec::Zero);
    let out = sweep(&c, Axis::L, &[-1.0, 0.0, 5.0, 0.5]).unwrap();
    assert_eq!(out.rows.len(), 4);
    assert!(out.rows[1].error.is_none() && out.rows[1].passed);
    assert!(out.rows[2].error.as_ref().unwrap().contains("cli::validate"));
    assert!(out.rows[3].error.as_ref().unwrap().contains("instantiate"));
    // zero data cannot carry nonzero degree
    assert!(out.rows[0].error.is_some());
}
