//! Run configuration: what to build, what data to put on it, and the
//! tolerances every check is judged against.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use hyperminimal::germ::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use hyperminimal::mesh::predicted_vertex_count;
use hyperminimal::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Rh3,
    Rh4,
}

impl Target {
    pub fn n(self) -> usize {
        match self {
            Target::Rh3 => 3,
            Target::Rh4 => 4,
        }
    }
}

/// Which RH4 datum a basis element is placed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// Section of `K²L`.
    Theta1,
    /// Section of `K²L⁻¹`.
    Theta2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    Zero,
    /// `amplitude` times one orthonormal basis element; the other RH4 datum is zero.
    BasisElement {
        index: usize,
        amplitude: f64,
        #[serde(default = "default_slot")]
        slot: Slot,
    },
    /// Seeded random combination of basis elements with L² norm `amplitude`
    /// in each datum.
    Random { amplitude: f64 },
    /// Vertex values read from a JSON file with keys `q` or `theta1`, `theta2`.
    File { path: PathBuf },
    /// RH3 problem forced so that a bump of height `u_star` is the exact solution.
    Manufactured { u_star: f64 },
}

fn default_slot() -> Slot {
    Slot::Theta2
}

impl DataSpec {
    pub fn amplitude(&self) -> Option<f64> {
        match *self {
            DataSpec::BasisElement { amplitude, .. } | DataSpec::Random { amplitude } => Some(amplitude),
            DataSpec::Manufactured { u_star } => Some(u_star),
            _ => None,
        }
    }
}

impl fmt::Display for DataSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSpec::Zero => write!(f, "zero"),
            DataSpec::BasisElement { index, amplitude, slot } => {
                let s = if *slot == Slot::Theta1 { "theta1" } else { "theta2" };
                write!(f, "basis:{index}:{amplitude}:{s}")
            }
            DataSpec::Random { amplitude } => write!(f, "random:{amplitude}"),
            DataSpec::File { path } => write!(f, "file:{}", path.display()),
            DataSpec::Manufactured { u_star } => write!(f, "manufactured:{u_star}"),
        }
    }
}

/// `zero`, `basis:INDEX:AMPLITUDE[:theta1|theta2]`, `random:AMPLITUDE`,
/// `file:PATH` or `manufactured:U_STAR`.
impl FromStr for DataSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.splitn(2, ':').collect();
        let rest = parts.get(1).copied().unwrap_or("");
        let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        match parts[0] {
            "zero" => Ok(DataSpec::Zero),
            "basis" => {
                let f: Vec<&str> = rest.split(':').collect();
                if f.len() < 2 || f.len() > 3 {
                    return Err("expected basis:INDEX:AMPLITUDE[:theta1|theta2]".into());
                }
                let slot = match f.get(2).copied() {
                    None | Some("theta2") => Slot::Theta2,
                    Some("theta1") => Slot::Theta1,
                    Some(other) => return Err(format!("unknown slot {other:?}")),
                };
                Ok(DataSpec::BasisElement {
                    index: f[0].parse().map_err(|e| format!("{:?}: {e}", f[0]))?,
                    amplitude: num(f[1])?,
                    slot,
                })
            }
            "random" => Ok(DataSpec::Random { amplitude: num(rest)? }),
            "file" if !rest.is_empty() => Ok(DataSpec::File { path: rest.into() }),
            "manufactured" => Ok(DataSpec::Manufactured { u_star: num(rest)? }),
            _ => Err(format!("unrecognised data spec {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Newton stops when the discrete L² norm of the residual is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// `C` in the slack `C·h²·(1 + max ‖II‖²)²` on identities recomputed
    /// through the independent frame discretisation; the last factor is the
    /// size of the quartic curvature terms. Acceptance data stay below `0.15`.
    pub identity_scale: f64,
    /// Identities that hold exactly for the discrete solution (area,
    /// Gauss–Bonnet, Euler integral) may differ by this multiple of the solver tolerance.
    pub exact_scale: f64,
    /// `C` in the relative class tolerance `C·h²`. Exact coboundaries leave a
    /// relative harmonic part of `2.0·h²` to `2.3·h²`, and a nonzero verdict
    /// needs `10·C·h² < 1`, so at resolution 3 the usable range is narrow.
    pub class_tol: f64,
    /// Below this sup norm of `‖U4‖` the surface counts as superminimal.
    pub superminimal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity_scale: 1.0,
            exact_scale: 10.0,
            class_tol: 2.5,
            superminimal: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub genus: usize,
    pub resolution: usize,
    pub target: Target,
    /// Degree of `L`; must be zero for RH3.
    pub l: i64,
    pub data: DataSpec,
    pub solver: SolverConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            genus: 2,
            resolution: 3,
            target: Target::Rh4,
            l: 0,
            data: DataSpec::Zero,
            solver: SolverConfig::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            output_dir: None,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Checks every numeric field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<(), Error> {
        if self.genus < 2 {
            return Err(invalid(format!("genus must be at least 2, got {}", self.genus)));
        }
        if self.resolution < 1 {
            return Err(invalid("resolution must be at least 1".into()));
        }
        let budget = hyperminimal::mesh::DEFAULT_VERTEX_BUDGET;
        let vertices = predicted_vertex_count(self.genus, self.resolution);
        if vertices > budget {
            return Err(Error::Resource { vertices, budget });
        }
        match self.target {
            Target::Rh3 if self.l != 0 => return Err(invalid(format!("RH3 runs have l = 0, got {}", self.l))),
            Target::Rh4 if self.l.abs() >= 2 * (self.genus as i64 - 1) => {
                return Err(invalid(format!("|l| must be below 2(g-1) = {}", 2 * (self.genus - 1))))
            }
            _ => {}
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) || self.solver.max_iter == 0 {
            return Err(invalid("solver tolerance must be positive and max_iter at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("identity_scale", t.identity_scale),
            ("exact_scale", t.exact_scale),
            ("class_tol", t.class_tol),
            ("superminimal", t.superminimal),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        match &self.data {
            DataSpec::BasisElement { amplitude, .. } | DataSpec::Random { amplitude } if !amplitude.is_finite() => {
                Err(invalid("amplitude must be finite".into()))
            }
            DataSpec::BasisElement { slot: Slot::Theta1, .. } if self.target == Target::Rh3 => {
                Err(invalid("RH3 has a single datum; use slot theta2 or omit it".into()))
            }
            DataSpec::Manufactured { u_star } if !u_star.is_finite() => Err(invalid("u_star must be finite".into())),
            DataSpec::Manufactured { .. } if self.target != Target::Rh3 => {
                Err(invalid("manufactured solutions are RH3 problems".into()))
            }
            _ => Ok(()),
        }
    }
}
