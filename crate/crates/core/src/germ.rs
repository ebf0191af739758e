//! Damped Newton solvers for the conformal factor `u` (induced metric
//! `e^{2u} h`) and the normal-bundle metric weight `w`.
//!
//! With `Δ` the background Laplace–Beltrami operator the equations are
//!
//! ```text
//! RH3:  Δu = e^{2u} - 1 + e^{-2u} t_q
//! RH4:  Δu = e^{2u} - 1 + e^{-2u} (e^{2w} t1 + e^{-2w} t2)
//!       Δw = ρ0 - e^{-2u} (e^{-2w} t2 - e^{2w} t1)
//! ```
//!
//! where `t = 4|φ|²` is the density of a holomorphic datum (see [`density`]).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bundles::{DiscreteSection, LineBundle};
use crate::disk;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::SurfaceMesh;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 30;
const MIN_STEP: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

/// Density `t = 4|φ|²` of a datum given in the unitary frame `(ρ dz)^m ⊗ e_L`.
///
/// This is the single place where the frame normalisation enters: with
/// `γ = e^{2u} h` and `h = ρ²|dz|²` it makes `‖II^{2,0}‖²_γ = e^{-4u} t` for
/// RH3 and `e^{-4u}(e^{2w} t1 + e^{-2w} t2)` for RH4, and `s² = e^{2u} ρ² / 2`
/// for the frame length `s = ‖∂_z‖_γ`.
pub fn density(section: &DiscreteSection) -> Vec<f64> {
    section.values.iter().map(|v| 4.0 * v.norm_sqr()).collect()
}

#[derive(Clone, Debug)]
pub struct GermData3 {
    pub mesh: Arc<SurfaceMesh>,
    /// Hopf differential, a section of `K²`.
    pub q: DiscreteSection,
}

#[derive(Clone, Debug)]
pub struct GermData4 {
    pub mesh: Arc<SurfaceMesh>,
    pub bundle: LineBundle,
    /// Section of `K² L`.
    pub theta1: DiscreteSection,
    /// Section of `K² L⁻¹`.
    pub theta2: DiscreteSection,
}

fn check_section(mesh: &SurfaceMesh, s: &DiscreteSection, m: i32, n: i32, what: &str) -> Result<()> {
    if (s.m, s.n) != (m, n) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be a section of K^{m} L^{n}, got K^{} L^{}",
            s.m, s.n
        )));
    }
    if s.values.len() != mesh.num_vertices() {
        return Err(Error::Shape {
            expected: mesh.num_vertices(),
            got: s.values.len(),
        });
    }
    if s.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} has non-finite values")));
    }
    Ok(())
}

impl GermData3 {
    pub fn new(mesh: Arc<SurfaceMesh>, q: DiscreteSection) -> Result<Self> {
        check_section(&mesh, &q, 2, 0, "q")?;
        Ok(GermData3 { mesh, q })
    }
}

impl GermData4 {
    pub fn new(
        mesh: Arc<SurfaceMesh>,
        bundle: LineBundle,
        theta1: DiscreteSection,
        theta2: DiscreteSection,
    ) -> Result<Self> {
        let g = mesh.genus as i64;
        if bundle.degree.abs() >= 2 * (g - 1) {
            return Err(Error::InvalidParameter(format!(
                "|l| = {} must be below 2(g-1) = {}",
                bundle.degree.abs(),
                2 * (g - 1)
            )));
        }
        if bundle.edge_transport.len() != mesh.edges.len() {
            return Err(Error::Shape {
                expected: mesh.edges.len(),
                got: bundle.edge_transport.len(),
            });
        }
        check_section(&mesh, &theta1, 2, 1, "theta1")?;
        check_section(&mesh, &theta2, 2, -1, "theta2")?;
        Ok(GermData4 {
            mesh,
            bundle,
            theta1,
            theta2,
        })
    }
}

#[derive(Clone, Debug)]
pub enum GermData {
    Rh3(GermData3),
    Rh4(GermData4),
}

impl GermData {
    pub fn mesh(&self) -> &Arc<SurfaceMesh> {
        match self {
            GermData::Rh3(d) => &d.mesh,
            GermData::Rh4(d) => &d.mesh,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            GermData::Rh3(_) => 3,
            GermData::Rh4(_) => 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GermSolution {
    pub u: Vec<f64>,
    /// Absent for RH3.
    pub w: Option<Vec<f64>>,
    pub newton_trace: Vec<NewtonStep>,
    pub converged: bool,
    pub residual: f64,
}

impl GermSolution {
    pub fn iterations(&self) -> usize {
        self.newton_trace.len().saturating_sub(1)
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::StaleSolution)
        }
    }
}

/// Discrete L² norm of the strong residual, from the weak residual `r = K x + M N(x)`.
fn strong_norm(r: &[f64], mass: &[f64]) -> f64 {
    r.iter().zip(mass).map(|(r, m)| r * r / m).sum::<f64>().sqrt()
}

trait System {
    fn size(&self) -> usize;
    /// Weak residual.
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> (Vec<(usize, usize, f64)>, bool);
    fn mass(&self) -> Vec<f64>;
}

fn newton<S: System>(sys: &S, mut x: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<NewtonStep>, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let mass = sys.mass();
    let mut r = sys.residual(&x);
    let mut norm = strong_norm(&r, &mass);
    let mut trace = vec![NewtonStep {
        iteration: 0,
        residual: norm,
        step: 0.0,
    }];
    for it in 1..=max_iter {
        if norm <= tol {
            return Ok((x, trace, norm));
        }
        let (jac, symmetric) = sys.jacobian(&x);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = match linalg::solve_real(sys.size(), &jac, &rhs, symmetric) {
            Ok(dx) => dx,
            Err(_) => return Err(Error::IndefiniteLinearization { iteration: it }),
        };
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let rt = sys.residual(&trial);
            let nt = strong_norm(&rt, &mass);
            if nt.is_finite() && nt < norm {
                x = trial;
                r = rt;
                norm = nt;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                return Err(Error::Stagnation { trace });
            }
        }
        trace.push(NewtonStep {
            iteration: it,
            residual: norm,
            step,
        });
    }
    if norm <= tol {
        Ok((x, trace, norm))
    } else {
        Err(Error::NonConvergence { trace })
    }
}

struct Gauss3<'a> {
    mesh: &'a SurfaceMesh,
    t: &'a [f64],
}

impl System for Gauss3<'_> {
    fn size(&self) -> usize {
        self.mesh.num_vertices()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.mesh.stiffness.matvec(u);
        (0..u.len())
            .map(|i| {
                let e = (2.0 * u[i]).exp();
                ku[i] + self.mesh.vertex_areas[i] * (e - 1.0 + self.t[i] / e)
            })
            .collect()
    }

    fn jacobian(&self, u: &[f64]) -> (Vec<(usize, usize, f64)>, bool) {
        let mut j = self.mesh.stiffness.triplets();
        for i in 0..u.len() {
            let e = (2.0 * u[i]).exp();
            j.push((i, i, self.mesh.vertex_areas[i] * (2.0 * e - 2.0 * self.t[i] / e)));
        }
        (j, true)
    }

    fn mass(&self) -> Vec<f64> {
        self.mesh.vertex_areas.clone()
    }
}

/// Solves the RH3 equation with a prescribed density `t` (not necessarily
/// coming from a holomorphic datum).
pub fn solve_gauss3_forced(mesh: &SurfaceMesh, t: &[f64], tol: f64, max_iter: usize) -> Result<GermSolution> {
    mesh.check_len(t)?;
    let sys = Gauss3 { mesh, t };
    let (u, trace, residual) = newton(&sys, vec![0.0; mesh.num_vertices()], tol, max_iter)?;
    Ok(GermSolution {
        u,
        w: None,
        newton_trace: trace,
        converged: true,
        residual,
    })
}

pub fn solve_gauss3(data: &GermData3, tol: f64, max_iter: usize) -> Result<GermSolution> {
    solve_gauss3_forced(&data.mesh, &density(&data.q), tol, max_iter)
}

struct GaussRicci4<'a> {
    mesh: &'a SurfaceMesh,
    rho0: f64,
    t1: &'a [f64],
    t2: &'a [f64],
}

impl GaussRicci4<'_> {
    fn pq(&self, i: usize, w: f64) -> (f64, f64) {
        let (a, b) = ((2.0 * w).exp() * self.t1[i], (-2.0 * w).exp() * self.t2[i]);
        (a + b, b - a)
    }
}

impl System for GaussRicci4<'_> {
    fn size(&self) -> usize {
        2 * self.mesh.num_vertices()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let nv = self.mesh.num_vertices();
        let (u, w) = x.split_at(nv);
        let ku = self.mesh.stiffness.matvec(u);
        let kw = self.mesh.stiffness.matvec(w);
        let mut r = vec![0.0; 2 * nv];
        for i in 0..nv {
            let a = self.mesh.vertex_areas[i];
            let e = (2.0 * u[i]).exp();
            let (p, q) = self.pq(i, w[i]);
            r[i] = ku[i] + a * (e - 1.0 + p / e);
            r[nv + i] = kw[i] + a * (self.rho0 - q / e);
        }
        r
    }

    fn jacobian(&self, x: &[f64]) -> (Vec<(usize, usize, f64)>, bool) {
        let nv = self.mesh.num_vertices();
        let (u, w) = x.split_at(nv);
        let k = self.mesh.stiffness.triplets();
        let mut j = Vec::with_capacity(2 * k.len() + 4 * nv);
        j.extend(k.iter().copied());
        j.extend(k.iter().map(|&(r, c, v)| (r + nv, c + nv, v)));
        for i in 0..nv {
            let a = self.mesh.vertex_areas[i];
            let e = (2.0 * u[i]).exp();
            let (p, q) = self.pq(i, w[i]);
            j.push((i, i, a * (2.0 * e - 2.0 * p / e)));
            j.push((i, nv + i, -2.0 * a * q / e));
            j.push((nv + i, i, 2.0 * a * q / e));
            j.push((nv + i, nv + i, 2.0 * a * p / e));
        }
        (j, false)
    }

    fn mass(&self) -> Vec<f64> {
        let mut m = self.mesh.vertex_areas.clone();
        m.extend_from_within(..);
        m
    }
}

/// Solves the RH4 system for prescribed densities `t1`, `t2` and background
/// curvature density `rho0` of `L`.
pub fn solve_gauss_ricci4_densities(
    mesh: &SurfaceMesh,
    rho0: f64,
    t1: &[f64],
    t2: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<GermSolution> {
    mesh.check_len(t1)?;
    mesh.check_len(t2)?;
    let l = rho0 * mesh.total_area() / (2.0 * PI);
    let zero1 = t1.iter().all(|&t| t == 0.0);
    let zero2 = t2.iter().all(|&t| t == 0.0);
    // integrating the second equation: ∫ e^{-2u}(e^{-2w} t2 - e^{2w} t1) = 2πl
    let unsolvable = match (zero1, zero2) {
        (true, true) => l.abs() > 1e-9,
        (true, false) => l <= 1e-9,
        (false, true) => l >= -1e-9,
        (false, false) => false,
    };
    if unsolvable {
        return Err(Error::Unsolvable(format!(
            "degree {l:.0} is incompatible with the vanishing pattern of (theta1, theta2) = ({}, {})",
            if zero1 { "0" } else { "nonzero" },
            if zero2 { "0" } else { "nonzero" }
        )));
    }
    let nv = mesh.num_vertices();
    if zero1 && zero2 {
        // w is harmonic, hence constant; fix it to zero
        let mut sol = solve_gauss3_forced(mesh, t1, tol, max_iter)?;
        sol.w = Some(vec![0.0; nv]);
        return Ok(sol);
    }
    let sys = GaussRicci4 { mesh, rho0, t1, t2 };
    let (x, trace, residual) = newton(&sys, vec![0.0; 2 * nv], tol, max_iter)?;
    let (u, w) = x.split_at(nv);
    Ok(GermSolution {
        u: u.to_vec(),
        w: Some(w.to_vec()),
        newton_trace: trace,
        converged: true,
        residual,
    })
}

pub fn solve_gauss_ricci4(data: &GermData4, tol: f64, max_iter: usize) -> Result<GermSolution> {
    solve_gauss_ricci4_densities(
        &data.mesh,
        data.bundle.density,
        &density(&data.theta1),
        &density(&data.theta2),
        tol,
        max_iter,
    )
}

pub fn solve(data: &GermData, tol: f64, max_iter: usize) -> Result<GermSolution> {
    match data {
        GermData::Rh3(d) => solve_gauss3(d, tol, max_iter),
        GermData::Rh4(d) => solve_gauss_ricci4(d, tol, max_iter),
    }
}

/// Manufactured RH3 solutions with closed-form background Laplacian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Manufactured {
    Constant(f64),
    /// `a (1 - (r/R)²)⁴` in the hyperbolic distance `r` from the origin, zero beyond `R`.
    Bump { amplitude: f64, radius: f64 },
}

impl Manufactured {
    /// A bump reaching `amplitude` at the centre and vanishing at 90% of the inradius.
    pub fn bump_for(mesh: &SurfaceMesh, amplitude: f64) -> Self {
        let n = mesh.domain.sides() as f64;
        let inradius = (1.0 / (PI / n).tan()).acosh();
        Manufactured::Bump {
            amplitude,
            radius: 0.9 * inradius,
        }
    }

    /// `(u*, Δ_h u*)` at `z`.
    pub fn eval(&self, z: C64) -> (f64, f64) {
        match *self {
            Manufactured::Constant(c) => (c, 0.0),
            Manufactured::Bump { amplitude: a, radius: big_r } => {
                let r = disk::distance(z, C64::new(0.0, 0.0));
                if r >= big_r {
                    return (0.0, 0.0);
                }
                let x = 1.0 - (r / big_r).powi(2);
                let r2 = big_r * big_r;
                let f = a * x.powi(4);
                // f' / r and f''
                let fp_over_r = -8.0 * a * x.powi(3) / r2;
                let fpp = fp_over_r + 48.0 * a * r * r * x * x / (r2 * r2);
                let r_coth = if r < 1e-8 { 1.0 } else { r / r.tanh() };
                (f, fpp + r_coth * fp_over_r)
            }
        }
    }

    pub fn exact(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        mesh.vertices.iter().map(|&z| self.eval(z).0).collect()
    }

    /// Density `t = e^{2u*}(Δu* - e^{2u*} + 1)` making `u*` an exact solution.
    pub fn forcing(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        mesh.vertices
            .iter()
            .map(|&z| {
                let (u, lap) = self.eval(z);
                let e = (2.0 * u).exp();
                e * (lap - e + 1.0)
            })
            .collect()
    }

    /// Max-norm error of the discrete solution against `u*`.
    pub fn error(&self, mesh: &SurfaceMesh, u: &[f64]) -> f64 {
        self.exact(mesh)
            .iter()
            .zip(u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_surface;

    #[test]
    fn zero_data_gives_totally_geodesic_metric() {
        let mesh = build_surface(2, 2).unwrap();
        let t = vec![0.0; mesh.num_vertices()];
        let sol = solve_gauss3_forced(&mesh, &t, 1e-12, 10).unwrap();
        assert!(sol.u.iter().all(|u| u.abs() < 1e-12));
        assert_eq!(sol.iterations(), 0);
    }

    #[test]
    fn constant_manufactured_solution_is_exact() {
        let mesh = build_surface(2, 2).unwrap();
        let mms = Manufactured::Constant(0.1);
        let t = mms.forcing(&mesh);
        assert!((t[0] + 0.2704).abs() < 1e-3);
        let sol = solve_gauss3_forced(&mesh, &t, 1e-12, 20).unwrap();
        assert!(mms.error(&mesh, &sol.u) < 1e-10);
    }

    #[test]
    fn bump_laplacian_matches_finite_differences() {
        let mms = Manufactured::Bump {
            amplitude: 0.3,
            radius: 1.2,
        };
        let z = C64::new(0.2, 0.1);
        let h = 1e-4;
        let f = |z: C64| mms.eval(z).0;
        let lap_e = (f(z + h) + f(z - h) + f(z + C64::new(0.0, h)) + f(z - C64::new(0.0, h)) - 4.0 * f(z)) / (h * h);
        let lap_h = lap_e / disk::density(z).powi(2);
        assert!((lap_h - mms.eval(z).1).abs() < 1e-5);
    }

    #[test]
    fn zero_data_with_nonzero_degree_is_rejected() {
        let mesh = build_surface(2, 1).unwrap();
        let z = vec![0.0; mesh.num_vertices()];
        let rho0 = 2.0 * PI / mesh.total_area();
        assert!(matches!(
            solve_gauss_ricci4_densities(&mesh, rho0, &z, &z, 1e-10, 10),
            Err(Error::Unsolvable(_))
        ));
    }

    #[test]
    fn exhausted_iterations_report_the_trace() {
        let mesh = build_surface(2, 1).unwrap();
        let t = Manufactured::Constant(0.3).forcing(&mesh);
        match solve_gauss3_forced(&mesh, &t, 1e-14, 1) {
            Err(Error::NonConvergence { trace }) => assert_eq!(trace.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
