//! Pointwise and integrated invariants of a solved germ, and residuals of the
//! identities they satisfy.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bundles::{dbar_operator, DiscreteSection, LineBundle};
use crate::disk;
use crate::error::Result;
use crate::germ::{density, GermData, GermSolution};
use crate::mesh::{laplacian, SurfaceMesh};

pub const RESIDUAL_KEYS: [&str; 7] = [
    "gauss_identity",
    "gauss_bonnet",
    "area_identity",
    "kappaperp_identity",
    "ricci_frame",
    "codazzi_frame",
    "chi_integral",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantReport {
    pub n: usize,
    pub genus: usize,
    pub degree: i64,
    pub kappa_gamma: Vec<f64>,
    /// Identically zero for RH3.
    pub kappa_perp: Vec<f64>,
    pub ii_norm_sq: Vec<f64>,
    pub u4_norm_sq: Vec<f64>,
    pub area: f64,
    pub euler_integral: f64,
    pub mesh_size: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// The pointwise densities entering the Gauss and Ricci equations.
struct Densities {
    /// `‖II^{2,0}‖²_γ e^{4u}`.
    p: Vec<f64>,
    /// `‖U4‖²_γ e^{8u}`.
    u4: Vec<f64>,
    rho0: f64,
    degree: i64,
}

fn densities(data: &GermData, sol: &GermSolution) -> Densities {
    match data {
        GermData::Rh3(d) => {
            let t = density(&d.q);
            Densities {
                u4: t.iter().map(|t| t * t).collect(),
                p: t,
                rho0: 0.0,
                degree: 0,
            }
        }
        GermData::Rh4(d) => {
            let t1 = density(&d.theta1);
            let t2 = density(&d.theta2);
            let w = sol.w.as_deref().expect("RH4 solution carries w");
            let a: Vec<f64> = (0..t1.len()).map(|i| (2.0 * w[i]).exp() * t1[i]).collect();
            let b: Vec<f64> = (0..t1.len()).map(|i| (-2.0 * w[i]).exp() * t2[i]).collect();
            Densities {
                p: a.iter().zip(&b).map(|(a, b)| a + b).collect(),
                u4: t1.iter().zip(&t2).map(|(x, y)| 4.0 * x * y).collect(),
                rho0: d.bundle.density,
                degree: d.bundle.degree,
            }
        }
    }
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.map(f64::abs).fold(0.0, f64::max)
}

pub fn compute_invariants(data: &GermData, sol: &GermSolution) -> Result<InvariantReport> {
    sol.ensure_converged()?;
    let mesh = data.mesh();
    mesh.check_len(&sol.u)?;
    let nv = mesh.num_vertices();
    let u = &sol.u;
    let lap = laplacian(mesh);
    let lap_u = lap.apply(u);
    let d = densities(data, sol);
    let e2u: Vec<f64> = u.iter().map(|u| (2.0 * u).exp()).collect();
    let kappa_gamma: Vec<f64> = (0..nv).map(|i| (-1.0 - lap_u[i]) / e2u[i]).collect();
    let kappa_perp: Vec<f64> = match &sol.w {
        Some(w) => {
            let lap_w = lap.apply(w);
            (0..nv).map(|i| (d.rho0 - lap_w[i]) / e2u[i]).collect()
        }
        None => vec![0.0; nv],
    };
    let ii_norm_sq: Vec<f64> = (0..nv).map(|i| d.p[i] / (e2u[i] * e2u[i])).collect();
    let u4_norm_sq: Vec<f64> = (0..nv).map(|i| d.u4[i] / e2u[i].powi(4)).collect();
    let dual = &mesh.vertex_areas;
    let area: f64 = (0..nv).map(|i| dual[i] * e2u[i]).sum();
    let euler_integral: f64 = (0..nv).map(|i| dual[i] * e2u[i] * kappa_perp[i]).sum::<f64>() / (2.0 * PI);
    let g = mesh.genus as f64;
    let chi = 2.0 - 2.0 * g;

    let mut residuals = BTreeMap::new();
    residuals.insert(
        "gauss_identity".into(),
        max_abs((0..nv).map(|i| kappa_gamma[i] + 1.0 + ii_norm_sq[i])),
    );
    let gb: f64 = (0..nv).map(|i| dual[i] * e2u[i] * kappa_gamma[i]).sum::<f64>() / (2.0 * PI);
    residuals.insert("gauss_bonnet".into(), (gb - chi).abs());
    let ii_integral: f64 = (0..nv).map(|i| dual[i] * e2u[i] * ii_norm_sq[i]).sum();
    residuals.insert(
        "area_identity".into(),
        (area - 4.0 * PI * (g - 1.0) + ii_integral).abs(),
    );
    residuals.insert("chi_integral".into(), (euler_integral - d.degree as f64).abs());
    residuals.insert(
        "kappaperp_identity".into(),
        max_abs((0..nv).map(|i| {
            kappa_perp[i].powi(2) - (1.0 + kappa_gamma[i]).powi(2) + u4_norm_sq[i]
        })),
    );

    let frame = frame_equation_residuals(data, sol)?;
    residuals.insert("kappaperp_frame".into(), frame.kappaperp_identity);
    residuals.insert("ricci_frame".into(), frame.ricci);
    residuals.insert("codazzi_frame".into(), frame.codazzi);
    residuals.insert("gauss_frame".into(), frame.gauss);
    if let Some(s) = supermin_residual(&kappa_perp, &ii_norm_sq, &u4_norm_sq) {
        residuals.insert("supermin_identity".into(), s);
    }
    Ok(InvariantReport {
        n: data.n(),
        genus: mesh.genus,
        degree: d.degree,
        kappa_gamma,
        kappa_perp,
        ii_norm_sq,
        u4_norm_sq,
        area,
        euler_integral,
        mesh_size: mesh.mesh_size(),
        residuals,
    })
}

/// `max |κ⊥ ∓ ‖II‖²|` on the superminimal branch, when `U4` is negligible.
fn supermin_residual(kp: &[f64], ii: &[f64], u4: &[f64]) -> Option<f64> {
    let scale = ii.iter().copied().fold(0.0, f64::max).max(1e-300);
    let u4max = u4.iter().copied().fold(0.0, f64::max).sqrt();
    if u4max > 1e-8 * scale.max(1.0) {
        return None;
    }
    let plus = max_abs(kp.iter().zip(ii).map(|(k, i)| k - i));
    let minus = max_abs(kp.iter().zip(ii).map(|(k, i)| k + i));
    Some(plus.min(minus))
}

/// Cotangent Laplacian of straight-edged triangles, with the fan of each
/// vertex drawn in the chart centred at that vertex. Charts centred at a
/// point differ by rotations, so each face contributes in isolation. An
/// independent discretisation of the background Laplacian used by the frame
/// equations.
struct ChartLaplacian {
    /// For each face and corner `c`: the face moved so that corner `c` sits at the origin.
    centred: Vec<[[C64; 3]; 3]>,
    /// Half-cotangent weights `[w(c, c+1), w(c, c+2)]` in the centred triangle.
    weights: Vec<[[f64; 2]; 3]>,
    /// `ρ(0)² A_E` over the dual cells.
    mass: Vec<f64>,
}

impl ChartLaplacian {
    fn new(mesh: &SurfaceMesh) -> Self {
        let nf = mesh.num_faces();
        let mut centred = Vec::with_capacity(nf);
        let mut weights = Vec::with_capacity(nf);
        let mut mass = vec![0.0; mesh.num_vertices()];
        for (f, z) in mesh.corner_positions.iter().enumerate() {
            let mut cz = [[C64::new(0.0, 0.0); 3]; 3];
            let mut cw = [[0.0; 2]; 3];
            for c in 0..3 {
                let t = disk::Mobius::to_origin(z[c]);
                let p: [C64; 3] = std::array::from_fn(|j| t.apply(z[j]));
                let (j, k) = ((c + 1) % 3, (c + 2) % 3);
                let cot = |a: usize| {
                    let (b, d) = ((a + 1) % 3, (a + 2) % 3);
                    let ang = ((p[d] - p[a]) / (p[b] - p[a])).arg();
                    1.0 / ang.tan()
                };
                cw[c] = [0.5 * cot(k), 0.5 * cot(j)];
                let part = ((p[j] - p[c]).norm_sqr() * cot(k) + (p[k] - p[c]).norm_sqr() * cot(j)) / 8.0;
                mass[mesh.faces[f][c]] += 4.0 * part;
                cz[c] = p;
            }
            centred.push(cz);
            weights.push(cw);
        }
        ChartLaplacian { centred, weights, mass }
    }

    /// `Σ w (f_i - f_j)` over each vertex fan, with corner values computed
    /// by `value(face, corner, position in the chart centred at the row vertex)`.
    fn stiffness(&self, mesh: &SurfaceMesh, value: impl Fn(usize, usize, C64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; mesh.num_vertices()];
        for (f, ids) in mesh.faces.iter().enumerate() {
            for c in 0..3 {
                let p = &self.centred[f][c];
                let v: [f64; 3] = std::array::from_fn(|j| value(f, j, p[j]));
                let [wj, wk] = self.weights[f][c];
                out[ids[c]] += wj * (v[c] - v[(c + 1) % 3]) + wk * (v[c] - v[(c + 2) % 3]);
            }
        }
        out
    }
}

/// Reconstruction of the frame coefficients `A1 = a + b`, `A2 = i(a - b)`
/// from the L-frame components `a`, `b` of `II(Z,Z)`.
pub fn frame_coefficients(a: C64, b: C64) -> (C64, C64) {
    (a + b, C64::new(0.0, 1.0) * (a - b))
}

/// Inverse of [`frame_coefficients`].
pub fn frame_components(a1: C64, a2: C64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    ((a1 - i * a2) / 2.0, (a1 + i * a2) / 2.0)
}

/// `-i s⁻⁴ (A1 Ā2 - Ā1 A2)`: the normal curvature on the algebraic side of the Ricci equation.
pub fn ricci_curvature(a1: C64, a2: C64, s2: f64) -> f64 {
    let c = a1 * a2.conj() - a1.conj() * a2;
    (C64::new(0.0, -1.0) * c).re / (s2 * s2)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FrameResiduals {
    pub gauss: f64,
    pub codazzi: f64,
    pub ricci: f64,
    /// `max |(κ⊥)² - (1 + κ_γ)² + ‖U4‖²|` with both curvatures from the chart
    /// stencil. Unlike the report's own identity residual this one carries
    /// discretisation error.
    pub kappaperp_identity: f64,
}

impl FrameResiduals {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("gauss_frame".to_string(), self.gauss),
            ("codazzi_frame".to_string(), self.codazzi),
            ("ricci_frame".to_string(), self.ricci),
        ])
    }
}

/// Relative ∂̄ residual of a datum; zero for the zero section.
fn codazzi(mesh: &SurfaceMesh, bundle: &LineBundle, s: &DiscreteSection) -> f64 {
    let norm = s.l2_norm(mesh);
    if norm == 0.0 {
        return 0.0;
    }
    let op = dbar_operator(mesh, bundle, s.m, s.n);
    op.face_norm(&op.apply(&s.values)) / norm
}

/// Evaluates the frame equations in the chart of each face, with the frame
/// length `s² = e^{2u} ρ² / 2` and the normal connection of `(L, e^{2w} h_L)`.
pub fn frame_equation_residuals(data: &GermData, sol: &GermSolution) -> Result<FrameResiduals> {
    sol.ensure_converged()?;
    let mesh = data.mesh();
    let nv = mesh.num_vertices();
    let u = &sol.u;
    let chart = ChartLaplacian::new(mesh);
    let d = densities(data, sol);

    // Gauss: κ_γ = -s⁻² ∂∂̄ log s² = ½ K_E(log s²) / (e^{2u} Ã)
    let k_log = chart.stiffness(mesh, |f, j, z| {
        2.0 * u[mesh.faces[f][j]] + 2.0 * disk::density(z).ln() - 2f64.ln()
    });
    let e2u: Vec<f64> = u.iter().map(|u| (2.0 * u).exp()).collect();
    let kappa_gamma: Vec<f64> = (0..nv).map(|i| 0.5 * k_log[i] / (e2u[i] * chart.mass[i])).collect();
    let gauss = max_abs((0..nv).map(|i| kappa_gamma[i] + 1.0 + d.p[i] / (e2u[i] * e2u[i])));

    let (codazzi_res, ricci, kappaperp_identity) = match data {
        GermData::Rh3(g3) => {
            let b0 = crate::bundles::make_line_bundle(mesh, 0)?;
            let c = codazzi(mesh, &b0, &g3.q);
            let kp = max_abs((0..nv).map(|i| (1.0 + kappa_gamma[i]).powi(2) - d.u4[i] / e2u[i].powi(4)));
            (c, 0.0, kp)
        }
        GermData::Rh4(g4) => {
            let w = sol.w.as_deref().expect("RH4 solution carries w");
            let c = codazzi(mesh, &g4.bundle, &g4.theta1).max(codazzi(mesh, &g4.bundle, &g4.theta2));
            // curvature side: κ⊥ = (ρ0 - Δw) e^{-2u}, Δ from the chart stencil
            let kw = chart.stiffness(mesh, |f, j, _| w[mesh.faces[f][j]]);
            let mut ricci = 0.0f64;
            let mut kp = 0.0f64;
            for i in 0..nv {
                let rho = disk::density(mesh.vertices[i]);
                let kappa_eta = (d.rho0 + kw[i] / chart.mass[i]) / e2u[i];
                let s2 = e2u[i] * rho * rho / 2.0;
                let scale = rho * rho / 2f64.sqrt();
                let a = g4.theta1.values[i] * w[i].exp() * scale;
                let b = g4.theta2.values[i] * (-w[i]).exp() * scale;
                let (a1, a2) = frame_coefficients(a, b);
                let kappa_alg = ricci_curvature(a1, a2, s2);
                ricci = ricci.max((kappa_eta - kappa_alg).abs());
                let gap = kappa_eta * kappa_eta - (1.0 + kappa_gamma[i]).powi(2) + d.u4[i] / e2u[i].powi(4);
                kp = kp.max(gap.abs());
            }
            (c, ricci, kp)
        }
    };
    Ok(FrameResiduals {
        gauss,
        codazzi: codazzi_res,
        ricci,
        kappaperp_identity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Superminimal {
    SuperminimalPlus,
    SuperminimalMinus,
    NotSuperminimal,
}

/// Classifies by the sup norm of `U4`; on the superminimal locus the branch is
/// the sign in `κ⊥ = ±‖II^{2,0}‖²`. Ties (including `II = 0`) go to the plus branch.
pub fn superminimal_test(report: &InvariantReport, tol: f64) -> Superminimal {
    let u4 = report.u4_norm_sq.iter().copied().fold(0.0, f64::max).sqrt();
    if u4 >= tol {
        return Superminimal::NotSuperminimal;
    }
    let plus = max_abs(report.kappa_perp.iter().zip(&report.ii_norm_sq).map(|(k, i)| k - i));
    let minus = max_abs(report.kappa_perp.iter().zip(&report.ii_norm_sq).map(|(k, i)| k + i));
    if plus <= minus {
        Superminimal::SuperminimalPlus
    } else {
        Superminimal::SuperminimalMinus
    }
}

/// `scale · h²`: the slack allowed on discretisation-limited identities.
pub fn identity_tolerance(mesh_size: f64, scale: f64) -> f64 {
    scale * mesh_size * mesh_size
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{solve, GermData3, GermData4};
    use crate::mesh::build_surface;
    use std::sync::Arc;

    #[test]
    fn frame_algebra_round_trips() {
        let (a, b) = (C64::new(0.3, -1.2), C64::new(2.0, 0.7));
        let (a1, a2) = frame_coefficients(a, b);
        let (a_, b_) = frame_components(a1, a2);
        assert!((a - a_).norm() < 1e-15 && (b - b_).norm() < 1e-15);
        let k = ricci_curvature(a1, a2, 1.0);
        assert!((k - 2.0 * (b.norm_sqr() - a.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn totally_geodesic_rh3() {
        let mesh = Arc::new(build_surface(2, 2).unwrap());
        let q = DiscreteSection::zero(&mesh, 2, 0, 0);
        let data = GermData::Rh3(GermData3::new(mesh.clone(), q).unwrap());
        let sol = solve(&data, 1e-12, 10).unwrap();
        let rep = compute_invariants(&data, &sol).unwrap();
        assert!(rep.kappa_gamma.iter().all(|k| (k + 1.0).abs() < 1e-10));
        assert!((rep.area - 4.0 * PI).abs() < 1e-10);
        for key in RESIDUAL_KEYS {
            assert!(rep.residuals.contains_key(key), "{key}");
        }
        assert!(rep.residuals["gauss_identity"] < 1e-10);
    }

    #[test]
    fn totally_geodesic_rh4_is_plus_branch() {
        let mesh = Arc::new(build_surface(2, 2).unwrap());
        let b = crate::bundles::make_line_bundle(&mesh, 0).unwrap();
        let t1 = DiscreteSection::zero(&mesh, 2, 1, 0);
        let t2 = DiscreteSection::zero(&mesh, 2, -1, 0);
        let data = GermData::Rh4(GermData4::new(mesh.clone(), b, t1, t2).unwrap());
        let sol = solve(&data, 1e-12, 10).unwrap();
        let rep = compute_invariants(&data, &sol).unwrap();
        assert!(rep.kappa_perp.iter().all(|k| k.abs() < 1e-12));
        assert_eq!(superminimal_test(&rep, 1e-8), Superminimal::SuperminimalPlus);
        assert!(rep.residuals["ricci_frame"] < 1e-10);
    }

    #[test]
    fn stale_solutions_are_refused() {
        let mesh = Arc::new(build_surface(2, 1).unwrap());
        let q = DiscreteSection::zero(&mesh, 2, 0, 0);
        let data = GermData::Rh3(GermData3::new(mesh.clone(), q).unwrap());
        let mut sol = solve(&data, 1e-12, 10).unwrap();
        sol.converged = false;
        assert!(matches!(
            compute_invariants(&data, &sol),
            Err(crate::error::Error::StaleSolution)
        ));
    }
}
