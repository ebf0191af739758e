//! The structured report and the per-vertex plot data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hyperminimal::germ::NewtonStep;
use hyperminimal::invariants::Superminimal;
use hyperminimal::moduli::{ClassFlag, ModuliDescriptor, SecantCertificate};
use hyperminimal::Error;

use crate::config::RunConfig;

/// Name of the generator behind `random` data, recorded in every report.
pub const GENERATOR: &str = "ChaCha8Rng";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshSummary {
    pub genus: usize,
    pub resolution: usize,
    pub vertices: usize,
    pub faces: usize,
    pub edges: usize,
    pub euler_characteristic: i64,
    pub mesh_size: f64,
    pub total_area: f64,
    pub exact_area: f64,
    pub min_angle_deg: f64,
    pub digest: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleDim {
    /// `K^m L^n`.
    pub m: i32,
    pub n: i32,
    pub l: i64,
    pub dim: Option<usize>,
    pub expected: Option<usize>,
    pub gap_ratio: Option<f64>,
    pub singular_values: Vec<f64>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub u_max: f64,
    pub u_min: f64,
    pub w_max_abs: Option<f64>,
    pub newton_trace: Vec<NewtonStep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantsSummary {
    pub area: f64,
    pub euler_integral: f64,
    /// `4π(g-1)`, the area of the totally geodesic surface.
    pub geodesic_area: f64,
    /// `2π(2(g-1) - |l|)`.
    pub area_bound: f64,
    pub mesh_size: f64,
    pub residuals: BTreeMap<String, f64>,
    pub exact_tolerance: f64,
    pub identity_tolerance: f64,
    pub max_ii_norm_sq: f64,
    pub max_abs_kappa_perp: f64,
    pub max_u4_norm: f64,
    pub superminimal: Superminimal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassCheck {
    pub block: String,
    /// Norm of the harmonic part in the induced metric.
    pub norm: f64,
    /// The same, divided by the norm of the form.
    pub relative: f64,
    pub flag: ClassFlag,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalFormSummary {
    pub scale: f64,
    pub phase: f64,
    pub norms: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HiggsChecks {
    pub structure_ok: bool,
    pub phi_isotropy: f64,
    pub gauge_lambda: (f64, f64),
    /// Relative deviation of `gauge_scale` from `(β/λ, λφ)`.
    pub gauge_scaling_defect: f64,
    /// Relative deviation of `gauge_scale(gauge_scale(·, λ), 1/λ)` from the identity.
    pub gauge_round_trip_defect: f64,
    pub q_v_preserved: BTreeMap<String, bool>,
    pub hodge: Option<bool>,
    pub class_tolerance: f64,
    pub classes: Vec<ClassCheck>,
    pub proportional: Option<bool>,
    pub normal_form: Option<NormalFormSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuliSummary {
    #[serde(flatten)]
    pub descriptor: ModuliDescriptor,
    pub secant: Option<SecantCertificate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailedAt {
    pub module: String,
    pub operation: String,
    pub message: String,
    pub payload: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub config_echo: RunConfig,
    pub generator: String,
    pub mesh: Option<MeshSummary>,
    pub bundle_dims: Vec<BundleDim>,
    pub solution: Option<SolutionSummary>,
    pub mms_error: Option<f64>,
    pub invariants: Option<InvariantsSummary>,
    pub higgs_checks: Option<HiggsChecks>,
    pub moduli: Option<ModuliSummary>,
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
    pub failed_at: Option<FailedAt>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Report {
            config_echo: config.clone(),
            generator: GENERATOR.into(),
            mesh: None,
            bundle_dims: Vec::new(),
            solution: None,
            mms_error: None,
            invariants: None,
            higgs_checks: None,
            moduli: None,
            checks: BTreeMap::new(),
            passed: false,
            failed_at: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    /// Largest entry of `invariants.residuals`.
    pub fn max_identity_residual(&self) -> Option<f64> {
        self.invariants
            .as_ref()
            .map(|i| i.residuals.values().copied().fold(0.0, f64::max))
    }
}

/// Structured view of an error for `failed_at.payload`.
pub fn error_payload(e: &Error) -> Value {
    match e {
        Error::InvalidParameter(m) | Error::Unsolvable(m) | Error::Structure(m) => json!({ "detail": m }),
        Error::Resource { vertices, budget } => json!({ "vertices": vertices, "budget": budget }),
        Error::MeshQuality { face, reason } => json!({ "face": face, "reason": reason }),
        Error::Shape { expected, got } => json!({ "expected": expected, "got": got }),
        Error::IndeterminateKernel {
            required,
            singular_values,
        } => json!({ "required": required, "singular_values": singular_values }),
        Error::LinearSolve { residual, detail } => json!({ "residual": residual, "detail": detail }),
        Error::NonConvergence { trace } | Error::Stagnation { trace } => json!({ "newton_trace": trace }),
        Error::IndefiniteLinearization { iteration } => json!({ "iteration": iteration }),
        Error::Parse { line, message } => json!({ "line": line, "message": message }),
        Error::Io(err) => json!({ "detail": err.to_string() }),
        Error::StaleSolution | Error::DegenerateOrbit => json!({}),
    }
}

/// Vertex fields for plotting, one row per vertex.
#[derive(Clone, Debug, Default)]
pub struct FieldTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FieldTable {
    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        let mut header = vec!["vertex".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(csv_error)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Writes `report.json` and, when present, `fields.csv` into `dir`.
pub fn write_outputs(dir: &Path, report: &Report, fields: Option<&FieldTable>) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    if let Some(f) = fields {
        f.write_csv(&dir.join("fields.csv"))?;
    }
    Ok(())
}
