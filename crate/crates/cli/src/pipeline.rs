//! mesh → bundles → solve → invariants → higgs → moduli, with every failure
//! recorded in the report rather than lost.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use hyperminimal::bundles::{
    dbar_operator, expected_h0, harmonic_part, holomorphic_basis, make_line_bundle, metric_weights, DiscreteSection,
    FaceForm, HolomorphicBasis, LineBundle,
};
use hyperminimal::germ::{self, GermData, GermData3, GermData4, GermSolution, Manufactured};
use hyperminimal::higgs::{self, HiggsAssembly};
use hyperminimal::invariants::{self, identity_tolerance, InvariantReport};
use hyperminimal::mesh::{build_surface, SurfaceMesh};
use hyperminimal::moduli::{self, ClassFlag, ClassFlags};
use hyperminimal::{Error, Result};

use crate::config::{DataSpec, RunConfig, Slot, Target};
use crate::report::*;

/// How far a run goes; every later stage needs the earlier ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Mesh,
    Basis,
    Solve,
    Invariants,
    Classify,
}

/// The gauge parameter used by the scaling checks.
pub const GAUGE_LAMBDA: C64 = C64::new(1.3, -0.7);

pub struct RunOutcome {
    pub report: Report,
    pub fields: Option<FieldTable>,
}

struct Failure {
    module: &'static str,
    operation: &'static str,
    error: Error,
}

trait Context<T> {
    fn at(self, module: &'static str, operation: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> Context<T> for Result<T> {
    fn at(self, module: &'static str, operation: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure {
            module,
            operation,
            error,
        })
    }
}

/// Runs every stage and writes the outputs when `output_dir` is set.
pub fn run(config: &RunConfig) -> RunOutcome {
    run_until(config, Stage::Classify)
}

pub fn run_until(config: &RunConfig, stage: Stage) -> RunOutcome {
    let mut report = Report::new(config);
    let mut fields = None;
    if let Err(f) = execute(config, stage, &mut report, &mut fields) {
        report.failed_at = Some(FailedAt {
            module: f.module.into(),
            operation: f.operation.into(),
            message: f.error.to_string(),
            payload: error_payload(&f.error),
        });
    }
    report.passed = report.failed_at.is_none() && report.checks.values().all(|&c| c);
    if let Some(dir) = &config.output_dir {
        if let Err(e) = write_outputs(dir, &report, fields.as_ref()) {
            report.passed = false;
            report.failed_at.get_or_insert(FailedAt {
                module: "cli".into(),
                operation: "write_outputs".into(),
                message: e.to_string(),
                payload: error_payload(&e),
            });
        }
    }
    RunOutcome { report, fields }
}

fn mesh_summary(mesh: &SurfaceMesh) -> MeshSummary {
    let min_angle = mesh.face_angles.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    MeshSummary {
        genus: mesh.genus,
        resolution: mesh.resolution,
        vertices: mesh.num_vertices(),
        faces: mesh.num_faces(),
        edges: mesh.edges.len(),
        euler_characteristic: mesh.euler_characteristic(),
        mesh_size: mesh.mesh_size(),
        total_area: mesh.total_area(),
        exact_area: mesh.exact_area(),
        min_angle_deg: min_angle.to_degrees(),
        digest: mesh.digest(),
    }
}

fn solution_summary(sol: &GermSolution) -> SolutionSummary {
    SolutionSummary {
        converged: sol.converged,
        iterations: sol.iterations(),
        residual: sol.residual,
        u_max: sol.u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        u_min: sol.u.iter().copied().fold(f64::INFINITY, f64::min),
        w_max_abs: sol.w.as_ref().map(|w| w.iter().map(|x| x.abs()).fold(0.0, f64::max)),
        newton_trace: sol.newton_trace.clone(),
    }
}

/// `(m, n)` of the holomorphic data for each target.
fn data_types(target: Target) -> Vec<(i32, i32)> {
    match target {
        Target::Rh3 => vec![(2, 0)],
        Target::Rh4 => vec![(2, 1), (2, -1)],
    }
}

fn needs_basis(data: &DataSpec) -> bool {
    matches!(data, DataSpec::BasisElement { .. } | DataSpec::Random { .. })
}

#[derive(Deserialize)]
struct FileData {
    q: Option<Vec<[f64; 2]>>,
    theta1: Option<Vec<[f64; 2]>>,
    theta2: Option<Vec<[f64; 2]>>,
}

fn section_from(mesh: &SurfaceMesh, (m, n): (i32, i32), l: i64, values: Option<Vec<[f64; 2]>>) -> Result<DiscreteSection> {
    let Some(values) = values else {
        return Ok(DiscreteSection::zero(mesh, m, n, l));
    };
    if values.len() != mesh.num_vertices() {
        return Err(Error::Shape {
            expected: mesh.num_vertices(),
            got: values.len(),
        });
    }
    Ok(DiscreteSection {
        m,
        n,
        l,
        values: values.iter().map(|v| C64::new(v[0], v[1])).collect(),
    })
}

fn build_data(config: &RunConfig, mesh: &SurfaceMesh, bases: &[Option<HolomorphicBasis>]) -> Result<Vec<DiscreteSection>> {
    let types = data_types(config.target);
    let l = config.l;
    let zero = |t: (i32, i32)| DiscreteSection::zero(mesh, t.0, t.1, l);
    let basis = |k: usize| {
        bases[k]
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("the holomorphic basis is unavailable".into()))
    };
    match &config.data {
        DataSpec::Zero | DataSpec::Manufactured { .. } => Ok(types.iter().map(|&t| zero(t)).collect()),
        DataSpec::BasisElement { index, amplitude, slot } => {
            let k = if config.target == Target::Rh4 && *slot == Slot::Theta1 { 0 } else { types.len() - 1 };
            let b = basis(k)?;
            let e = b.sections.get(*index).ok_or_else(|| {
                Error::InvalidParameter(format!("basis index {index} out of range for dimension {}", b.dim()))
            })?;
            let mut out: Vec<DiscreteSection> = types.iter().map(|&t| zero(t)).collect();
            out[k] = e.scaled(C64::new(*amplitude, 0.0));
            Ok(out)
        }
        DataSpec::Random { amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut out = Vec::new();
            for (k, &t) in types.iter().enumerate() {
                let b = basis(k)?;
                if b.dim() == 0 {
                    out.push(zero(t));
                    continue;
                }
                let c: Vec<C64> = (0..b.dim())
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let c: Vec<C64> = c.iter().map(|z| z * (*amplitude / norm)).collect();
                out.push(b.combination(&c));
            }
            Ok(out)
        }
        DataSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            let f: FileData = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
            match config.target {
                Target::Rh3 => Ok(vec![section_from(mesh, types[0], l, f.q)?]),
                Target::Rh4 => Ok(vec![
                    section_from(mesh, types[0], l, f.theta1)?,
                    section_from(mesh, types[1], l, f.theta2)?,
                ]),
            }
        }
    }
}

fn execute(config: &RunConfig, stage: Stage, report: &mut Report, fields: &mut Option<FieldTable>) -> std::result::Result<(), Failure> {
    config.validate().at("cli", "validate")?;
    let mesh = Arc::new(build_surface(config.genus, config.resolution).at("mesh", "build_surface")?);
    report.mesh = Some(mesh_summary(&mesh));
    if stage == Stage::Mesh {
        return Ok(());
    }

    if let DataSpec::Manufactured { u_star } = config.data {
        if stage < Stage::Solve {
            return Ok(());
        }
        let exact = Manufactured::bump_for(&mesh, u_star);
        let t = exact.forcing(&mesh);
        let sol = germ::solve_gauss3_forced(&mesh, &t, config.solver.tol, config.solver.max_iter)
            .at("germsolve", "solve_gauss3_forced")?;
        report.solution = Some(solution_summary(&sol));
        report.checks.insert("solution.converged".into(), sol.converged);
        report.mms_error = Some(exact.error(&mesh, &sol.u));
        *fields = Some(FieldTable {
            columns: vec!["x".into(), "y".into(), "u".into(), "u_exact".into()],
            rows: (0..mesh.num_vertices())
                .map(|i| vec![mesh.vertices[i].re, mesh.vertices[i].im, sol.u[i], exact.eval(mesh.vertices[i]).0])
                .collect(),
        });
        return Ok(());
    }

    let bundle = make_line_bundle(&mesh, config.l).at("bundles", "make_line_bundle")?;
    let mut bases = Vec::new();
    for (m, n) in data_types(config.target) {
        let op = dbar_operator(&mesh, &bundle, m, n);
        let expected = expected_h0(config.genus, m, n, config.l);
        let mut entry = BundleDim {
            m,
            n,
            l: config.l,
            dim: None,
            expected,
            gap_ratio: None,
            singular_values: Vec::new(),
            warning: None,
        };
        match holomorphic_basis(&mesh, &op, expected) {
            Ok(b) => {
                entry.dim = Some(b.dim());
                entry.gap_ratio = Some(b.gap_ratio);
                entry.singular_values = b.singular_values.clone();
                entry.warning = b.warning.clone();
                bases.push(Some(b));
            }
            Err(e) if !needs_basis(&config.data) => {
                entry.warning = Some(e.to_string());
                bases.push(None);
            }
            Err(e) => return Err(e).at("bundles", "holomorphic_basis"),
        }
        report.bundle_dims.push(entry);
    }
    let dims_ok = report.bundle_dims.iter().all(|b| b.dim.is_some() && (b.expected.is_none() || b.dim == b.expected));
    report.checks.insert("bundles.dimensions".into(), dims_ok);
    if stage == Stage::Basis {
        return Ok(());
    }

    let mut sections = build_data(config, &mesh, &bases).at("cli", "build_data")?;
    let data = match config.target {
        Target::Rh3 => GermData::Rh3(GermData3::new(mesh.clone(), sections.remove(0)).at("germsolve", "GermData3::new")?),
        Target::Rh4 => {
            let t2 = sections.pop().expect("two data");
            let t1 = sections.pop().expect("two data");
            GermData::Rh4(GermData4::new(mesh.clone(), bundle.clone(), t1, t2).at("germsolve", "GermData4::new")?)
        }
    };
    let sol = germ::solve(&data, config.solver.tol, config.solver.max_iter).at("germsolve", "solve")?;
    report.solution = Some(solution_summary(&sol));
    report.checks.insert("solution.converged".into(), sol.converged);
    if stage == Stage::Solve {
        return Ok(());
    }

    let inv = invariants::compute_invariants(&data, &sol).at("invariants", "compute_invariants")?;
    let summary = invariants_summary(config, &mesh, &inv);
    let exact_ok = summary
        .residuals
        .iter()
        .filter(|(k, _)| !k.ends_with("_frame"))
        .all(|(_, &v)| v <= summary.exact_tolerance);
    let frame_ok = summary
        .residuals
        .iter()
        .filter(|(k, _)| k.ends_with("_frame"))
        .all(|(_, &v)| v <= summary.identity_tolerance);
    let quadrature = (mesh.total_area() - mesh.exact_area()).abs() + summary.exact_tolerance;
    report.checks.insert("invariants.exact_identities".into(), exact_ok);
    report.checks.insert("invariants.frame_identities".into(), frame_ok);
    report
        .checks
        .insert("invariants.area_bound".into(), summary.area <= summary.area_bound + quadrature);
    *fields = Some(field_table(&mesh, &sol, &inv));
    report.invariants = Some(summary);
    if stage == Stage::Invariants {
        return Ok(());
    }

    let asm = higgs::build_from_germ(&data, &sol).at("higgs", "build_from_germ")?;
    let (checks, flags) = higgs_checks(config, &mesh, &bundle, &sol, &asm).map_err(|(operation, error)| Failure {
        module: "higgs",
        operation,
        error,
    })?;
    report.checks.insert("higgs.structure".into(), checks.structure_ok);
    report.checks.insert("higgs.phi_isotropic".into(), checks.phi_isotropy == 0.0);
    report.checks.insert(
        "higgs.gauge_scaling".into(),
        checks.gauge_scaling_defect <= 1e-12 && checks.gauge_round_trip_defect <= 1e-12,
    );
    report
        .checks
        .insert("higgs.q_v_preserved".into(), checks.q_v_preserved.values().all(|&b| b));
    report.higgs_checks = Some(checks);

    let descriptor = moduli::classify(config.genus, config.target.n(), config.l, &flags).at("moduli", "classify")?;
    let secant = if config.target == Target::Rh4 && config.l != 0 {
        moduli::secant_genericity(config.genus, config.l.abs()).ok()
    } else {
        None
    };
    report.moduli = Some(ModuliSummary { descriptor, secant });
    Ok(())
}

fn invariants_summary(config: &RunConfig, mesh: &SurfaceMesh, inv: &InvariantReport) -> InvariantsSummary {
    let g = config.genus as f64;
    let max = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    InvariantsSummary {
        area: inv.area,
        euler_integral: inv.euler_integral,
        geodesic_area: 4.0 * PI * (g - 1.0),
        area_bound: 2.0 * PI * (2.0 * (g - 1.0) - config.l.abs() as f64),
        mesh_size: inv.mesh_size,
        residuals: inv.residuals.clone(),
        exact_tolerance: config.tolerances.exact_scale * config.solver.tol,
        identity_tolerance: identity_tolerance(mesh.mesh_size(), config.tolerances.identity_scale)
            * (1.0 + max(&inv.ii_norm_sq)).powi(2),
        max_ii_norm_sq: max(&inv.ii_norm_sq),
        max_abs_kappa_perp: max(&inv.kappa_perp),
        max_u4_norm: max(&inv.u4_norm_sq).sqrt(),
        superminimal: invariants::superminimal_test(inv, config.tolerances.superminimal),
    }
}

fn field_table(mesh: &SurfaceMesh, sol: &GermSolution, inv: &InvariantReport) -> FieldTable {
    let w = sol.w.clone().unwrap_or_else(|| vec![0.0; mesh.num_vertices()]);
    FieldTable {
        columns: ["x", "y", "u", "w", "kappa_gamma", "kappa_perp", "u4_norm"].map(String::from).to_vec(),
        rows: (0..mesh.num_vertices())
            .map(|i| {
                vec![
                    mesh.vertices[i].re,
                    mesh.vertices[i].im,
                    sol.u[i],
                    w[i],
                    inv.kappa_gamma[i],
                    inv.kappa_perp[i],
                    inv.u4_norm_sq[i].sqrt(),
                ]
            })
            .collect(),
    }
}

fn relative_defect(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

type HiggsOutcome = std::result::Result<(HiggsChecks, ClassFlags), (&'static str, Error)>;

fn higgs_checks(config: &RunConfig, mesh: &SurfaceMesh, bundle: &LineBundle, sol: &GermSolution, asm: &HiggsAssembly) -> HiggsOutcome {
    let lambda = GAUGE_LAMBDA;
    let scaled = higgs::gauge_scale(asm, lambda).map_err(|e| ("gauge_scale", e))?;
    let back = higgs::gauge_scale(&scaled, lambda.inv()).map_err(|e| ("gauge_scale", e))?;
    let mut scaling = relative_defect(&scaled.phi, &asm.phi.iter().map(|p| p * lambda).collect::<Vec<_>>());
    let mut round_trip = relative_defect(&back.phi, &asm.phi);
    for k in 0..asm.beta_blocks.len() {
        let expect: Vec<C64> = asm.beta_blocks[k].values.iter().map(|b| b / lambda).collect();
        scaling = scaling.max(relative_defect(&scaled.beta_blocks[k].values, &expect));
        round_trip = round_trip.max(relative_defect(&back.beta_blocks[k].values, &asm.beta_blocks[k].values));
    }
    let mut q_v_preserved = std::collections::BTreeMap::new();
    q_v_preserved.insert("g_lambda".to_string(), higgs::preserves_q_v(asm, &higgs::g_lambda_weights(asm)));
    if asm.n == 4 {
        q_v_preserved.insert("c_star".to_string(), higgs::preserves_q_v(asm, &higgs::C_STAR_WEIGHTS));
    }

    let h = mesh.mesh_size();
    let class_tolerance = config.tolerances.class_tol * h * h;
    let weights = metric_weights(mesh, &sol.u);
    let mut classes = Vec::new();
    let mut harmonic: Vec<(FaceForm, f64)> = Vec::new();
    for (k, beta) in asm.beta_blocks.iter().enumerate() {
        let (part, norm) = harmonic_part(mesh, bundle, beta, &sol.u).map_err(|e| ("harmonic_part", e))?;
        let total = beta
            .values
            .iter()
            .zip(&weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt();
        let relative = if total > 0.0 { norm / total } else { 0.0 };
        let flag = ClassFlag::from_norm(relative, class_tolerance);
        let name = if asm.n == 3 { "beta".to_string() } else { format!("beta{}", k + 1) };
        classes.push(ClassCheck {
            block: name,
            norm,
            relative,
            flag,
        });
        harmonic.push((part, if flag == ClassFlag::Zero { 0.0 } else { norm }));
    }

    let (flags, hodge, proportional, normal_form) = if asm.n == 3 {
        (ClassFlags::rh3(classes[0].flag), None, None, None)
    } else {
        let both = classes.iter().all(|c| c.flag == ClassFlag::Nonzero);
        let proportional = (config.l == 0 && both)
            .then(|| moduli::angular_distance(&harmonic[0].0, &harmonic[1].0, &weights) < moduli::PROPORTIONAL_TOL);
        let nf = moduli::orbit_normal_form(&harmonic[0].0, harmonic[0].1, &harmonic[1].0, harmonic[1].1, 0.0)
            .ok()
            .map(|nf| NormalFormSummary {
                scale: nf.scale,
                phase: nf.phase,
                norms: nf.norms,
            });
        let hodge = higgs::hodge_flag(asm, config.tolerances.superminimal).map_err(|e| ("hodge_flag", e))?;
        (
            ClassFlags::rh4(classes[0].flag, classes[1].flag, proportional.unwrap_or(false)),
            Some(hodge),
            proportional,
            nf,
        )
    };
    let checks = HiggsChecks {
        structure_ok: asm.check_structure().is_ok(),
        phi_isotropy: asm.phi_isotropy().norm(),
        gauge_lambda: (lambda.re, lambda.im),
        gauge_scaling_defect: scaling,
        gauge_round_trip_defect: round_trip,
        q_v_preserved,
        hodge,
        class_tolerance,
        classes,
        proportional,
        normal_form,
    };
    Ok((checks, flags))
}
