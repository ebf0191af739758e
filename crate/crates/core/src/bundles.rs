//! Line bundles `K^m L^n` on the discrete surface: a constant-curvature U(1)
//! transport for `L`, the face-based ∂̄ operator, holomorphic section bases,
//! and the Dolbeault triviality test for (0,1)-forms.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::disk;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::SurfaceMesh;

/// Required ratio between the last kernel singular value and the next one.
pub const GAP_RATIO: f64 = 10.0;
/// Orientation of the face holonomy relative to the curvature form.
const HOLONOMY_SIGN: f64 = 1.0;
/// How many of the smallest singular values are searched for a gap.
const GAP_WINDOW: usize = 48;
/// Largest vertex count handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 1024;
/// Extra vectors carried past the expected kernel by the sparse path.
pub const SPARSE_EXTRA: usize = 6;
const SPARSE_SWEEPS: usize = 40;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineBundle {
    pub degree: i64,
    /// Transport along each mesh edge from `edges[e][0]` to `edges[e][1]`.
    pub edge_transport: Vec<C64>,
    pub face_curvature: Vec<f64>,
    /// Curvature per unit background area, `2πl / area`.
    pub density: f64,
}

impl LineBundle {
    /// Transport from corner `a` to corner `b` along mesh edge `e`.
    fn along(&self, e: usize, forward: bool) -> C64 {
        if forward {
            self.edge_transport[e]
        } else {
            self.edge_transport[e].conj()
        }
    }

    /// `T_j`: the factor expressing the frame at corner `j` of face `f` in the frame at corner 0.
    pub fn corner_factors(&self, mesh: &SurfaceMesh, f: usize) -> [C64; 3] {
        let fe = &mesh.face_edges[f];
        let u01 = self.along(fe[0].0, fe[0].1);
        // edge 2 runs from corner 2 to corner 0
        let u02 = self.along(fe[2].0, !fe[2].1);
        [C64::new(1.0, 0.0), u01.conj(), u02.conj()]
    }

    /// Holonomy angle around face `f`, in `(-π, π]`.
    pub fn holonomy(&self, mesh: &SurfaceMesh, f: usize) -> f64 {
        let mut h = C64::new(1.0, 0.0);
        for &(e, fwd) in &mesh.face_edges[f] {
            h *= self.along(e, fwd);
        }
        h.arg()
    }

    pub fn dual(&self) -> LineBundle {
        LineBundle {
            degree: -self.degree,
            edge_transport: self.edge_transport.iter().map(|t| t.conj()).collect(),
            face_curvature: self.face_curvature.iter().map(|c| -c).collect(),
            density: -self.density,
        }
    }

    /// `(1/2π) Σ curvature`.
    pub fn degree_integral(&self) -> f64 {
        self.face_curvature.iter().sum::<f64>() / (2.0 * PI)
    }
}

pub fn make_line_bundle(mesh: &SurfaceMesh, l: i64) -> Result<LineBundle> {
    let nf = mesh.num_faces();
    let ne = mesh.edges.len();
    let total = mesh.total_area();
    let face_curvature: Vec<f64> = mesh
        .face_areas
        .iter()
        .map(|a| 2.0 * PI * l as f64 * a / total)
        .collect();
    if l == 0 {
        return Ok(LineBundle {
            degree: 0,
            edge_transport: vec![C64::new(1.0, 0.0); ne],
            face_curvature,
            density: 0.0,
        });
    }
    // edge angles θ = dᵀx with d θ = F - 2π n, the whole 2πl flux removed at face 0
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ne];
    for (f, fe) in mesh.face_edges.iter().enumerate() {
        for &(e, fwd) in fe {
            incident[e].push((f, if fwd { 1.0 } else { -1.0 }));
        }
    }
    let mut rhs: Vec<f64> = face_curvature.clone();
    rhs[0] -= 2.0 * PI * l as f64;
    let mut trip = Vec::with_capacity(4 * ne);
    for inc in &incident {
        for &(f, s) in inc {
            for &(g, t) in inc {
                // face 0 is pinned
                if f != 0 && g != 0 {
                    trip.push((f - 1, g - 1, s * t));
                }
            }
        }
    }
    let x_red = linalg::solve_real(nf - 1, &trip, &rhs[1..], true)?;
    let mut x = vec![0.0];
    x.extend(x_red);
    let edge_transport = incident
        .iter()
        .map(|inc| {
            let theta: f64 = inc.iter().map(|&(f, s)| s * x[f]).sum();
            C64::from_polar(1.0, HOLONOMY_SIGN * theta)
        })
        .collect();
    Ok(LineBundle {
        degree: l,
        edge_transport,
        face_curvature,
        density: 2.0 * PI * l as f64 / total,
    })
}

/// A section of `K^m L^n`, one component per vertex in the frame `(ρ dz)^m ⊗ e_L^n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteSection {
    pub m: i32,
    pub n: i32,
    pub l: i64,
    pub values: Vec<C64>,
}

impl DiscreteSection {
    pub fn zero(mesh: &SurfaceMesh, m: i32, n: i32, l: i64) -> Self {
        DiscreteSection {
            m,
            n,
            l,
            values: vec![C64::new(0.0, 0.0); mesh.num_vertices()],
        }
    }

    pub fn scaled(&self, a: C64) -> Self {
        DiscreteSection {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }

    /// Pointwise `|φ|²`.
    pub fn norm_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Area-weighted L² norm.
    pub fn l2_norm(&self, mesh: &SurfaceMesh) -> f64 {
        self.values
            .iter()
            .zip(&mesh.vertex_areas)
            .map(|(v, a)| v.norm_sqr() * a)
            .sum::<f64>()
            .sqrt()
    }

    /// ∂̄ of the section, as unitary face components.
    pub fn dbar_residual(&self, mesh: &SurfaceMesh, bundle: &LineBundle) -> Vec<C64> {
        dbar_operator(mesh, bundle, self.m, self.n).apply(&self.values)
    }
}

/// Quadratic Cauchy–Riemann stencil on sections of `K^m L^n`.
///
/// Faces `4k .. 4k+3` are the children of one coarser triangle; its six
/// vertices carry an isoparametric quadratic interpolant in the coarse
/// triangle's chart. Row `f` is the unitary component of ∂̄ of that
/// interpolant at the centroid of child `f`, in the frame of the coarse
/// triangle's first corner.
#[derive(Clone, Debug)]
pub struct DbarOperator {
    pub m: i32,
    pub n: i32,
    pub l: i64,
    pub ncols: usize,
    pub rows: Vec<[(usize, C64); 6]>,
    /// Shape function values times unitary frame factors: interpolation of vertex data to row points.
    pub interp: Vec<[(usize, C64); 6]>,
    pub face_areas: Vec<f64>,
}

/// Reference centroids of the four children, in the order produced by refinement.
const CHILD_CENTROIDS: [(f64, f64); 4] = [
    (1.0 / 6.0, 1.0 / 6.0),
    (2.0 / 3.0, 1.0 / 6.0),
    (1.0 / 6.0, 2.0 / 3.0),
    (1.0 / 3.0, 1.0 / 3.0),
];

/// Six-node quadratic shape functions and their reference derivatives.
/// Node order: three corners, then the midpoints of edges 01, 12, 20.
fn shape(s: f64, t: f64) -> ([f64; 6], [(f64, f64); 6]) {
    let l = [1.0 - s - t, s, t];
    let dl = [(-1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];
    let mut n = [0.0; 6];
    let mut dn = [(0.0, 0.0); 6];
    for i in 0..3 {
        n[i] = l[i] * (2.0 * l[i] - 1.0);
        dn[i] = ((4.0 * l[i] - 1.0) * dl[i].0, (4.0 * l[i] - 1.0) * dl[i].1);
    }
    for (e, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        n[3 + e] = 4.0 * l[i] * l[j];
        dn[3 + e] = (
            4.0 * (dl[i].0 * l[j] + l[i] * dl[j].0),
            4.0 * (dl[i].1 * l[j] + l[i] * dl[j].1),
        );
    }
    (n, dn)
}

pub fn dbar_operator(mesh: &SurfaceMesh, bundle: &LineBundle, m: i32, n: i32) -> DbarOperator {
    let nf = mesh.num_faces();
    let mut rows = Vec::with_capacity(nf);
    let mut interp = Vec::with_capacity(nf);
    for k in 0..nf / 4 {
        let f = 4 * k;
        let nodes = [(f, 0), (f + 1, 1), (f + 2, 2), (f, 1), (f + 1, 2), (f, 2)];
        let z = nodes.map(|(ff, j)| mesh.corner_positions[ff][j]);
        let ids = nodes.map(|(ff, j)| mesh.faces[ff][j]);
        let rot = nodes.map(|(ff, j)| mesh.corner_rotations[ff][j]);
        let t0 = bundle.corner_factors(mesh, f);
        let t1 = bundle.corner_factors(mesh, f + 1);
        let t2 = bundle.corner_factors(mesh, f + 2);
        let t = [C64::new(1.0, 0.0), t0[1] * t1[1], t0[2] * t2[2], t0[1], t0[1] * t1[2], t0[2]];
        let unitary: [C64; 6] = std::array::from_fn(|j| rot[j].powi(-m) * t[j].powi(n));
        let chart: [C64; 6] = std::array::from_fn(|j| unitary[j] * disk::density(z[j]).powi(m));
        for &(s, tt) in &CHILD_CENTROIDS {
            let (nn, dn) = shape(s, tt);
            let zs: C64 = (0..6).map(|j| z[j] * dn[j].0).sum();
            let zt: C64 = (0..6).map(|j| z[j] * dn[j].1).sum();
            let zq: C64 = (0..6).map(|j| z[j] * nn[j]).sum();
            let den = zs.conj() * zt - zt.conj() * zs;
            let w = disk::density(zq).powi(-(m + 1));
            rows.push(std::array::from_fn(|j| {
                (ids[j], (zt * dn[j].0 - zs * dn[j].1) / den * chart[j] * w)
            }));
            interp.push(std::array::from_fn(|j| (ids[j], unitary[j] * nn[j])));
        }
    }
    DbarOperator {
        m,
        n,
        l: bundle.degree,
        ncols: mesh.num_vertices(),
        rows,
        interp,
        face_areas: mesh.face_areas.clone(),
    }
}

/// Positions of the ∂̄ rows, in the chart of each face.
pub fn row_points(mesh: &SurfaceMesh) -> Vec<C64> {
    let mut out = Vec::with_capacity(mesh.num_faces());
    for k in 0..mesh.num_faces() / 4 {
        let f = 4 * k;
        let nodes = [(f, 0), (f + 1, 1), (f + 2, 2), (f, 1), (f + 1, 2), (f, 2)];
        let z = nodes.map(|(ff, j)| mesh.corner_positions[ff][j]);
        for &(s, t) in &CHILD_CENTROIDS {
            let (nn, _) = shape(s, t);
            out.push((0..6).map(|j| z[j] * nn[j]).sum());
        }
    }
    out
}

impl DbarOperator {
    pub fn apply(&self, values: &[C64]) -> Vec<C64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(v, c)| c * values[v]).sum())
            .collect()
    }

    /// Values of a vertex field of the same bundle type at the row points, in row frames.
    pub fn interpolate(&self, values: &[C64]) -> Vec<C64> {
        self.interp
            .iter()
            .map(|r| r.iter().map(|&(v, c)| c * values[v]).sum())
            .collect()
    }

    /// Area-weighted L² norm of a face field.
    pub fn face_norm(&self, face_values: &[C64]) -> f64 {
        face_values
            .iter()
            .zip(&self.face_areas)
            .map(|(v, a)| v.norm_sqr() * a)
            .sum::<f64>()
            .sqrt()
    }

    /// Triplets of the Hermitian normal operator `D* A D`.
    fn normal_entries(&self) -> Vec<(usize, usize, C64)> {
        let mut entries = Vec::with_capacity(self.rows.len() * 36);
        for (row, area) in self.rows.iter().zip(&self.face_areas) {
            for &(i, ci) in row {
                for &(j, cj) in row {
                    entries.push((i, j, ci.conj() * cj * *area));
                }
            }
        }
        entries
    }

    /// `M^{-1/2} D* A D M^{-1/2}` as a dense Hermitian matrix.
    fn normal_matrix(&self, mass: &[f64]) -> Mat<C64> {
        let n = self.ncols;
        let mut a = Mat::<C64>::zeros(n, n);
        for (row, area) in self.rows.iter().zip(&self.face_areas) {
            for &(i, ci) in row {
                for &(j, cj) in row {
                    a[(i, j)] += ci.conj() * cj * *area / (mass[i] * mass[j]).sqrt();
                }
            }
        }
        a
    }
}

/// Smooth bump of Euclidean radius `radius` about `centre`, in the chart of the vertex representatives.
pub fn bump(z: C64, centre: C64, radius: f64) -> f64 {
    let r2 = (z - centre).norm_sqr() / (radius * radius);
    if r2 < 1.0 {
        (1.0 - r2).powi(3)
    } else {
        0.0
    }
}

/// A smooth, generally non-holomorphic section: a sum of weighted bumps.
/// Keep the bumps inside the polygon, where vertex frames are chart frames.
pub fn bump_section(
    mesh: &SurfaceMesh,
    (m, n, l): (i32, i32, i64),
    centres: &[C64],
    radius: f64,
    weights: &[C64],
) -> DiscreteSection {
    let values = mesh
        .vertices
        .iter()
        .map(|&z| centres.iter().zip(weights).map(|(&c, &w)| w * bump(z, c, radius)).sum())
        .collect();
    DiscreteSection { m, n, l, values }
}

#[derive(Clone, Debug)]
pub struct HolomorphicBasis {
    /// Orthonormal in the lumped L² inner product.
    pub sections: Vec<DiscreteSection>,
    /// Smallest singular values of the area-weighted operator, ascending.
    pub singular_values: Vec<f64>,
    /// `σ_k / σ_{k-1}` at the detected dimension `k`.
    pub gap_ratio: f64,
    pub warning: Option<String>,
}

impl HolomorphicBasis {
    pub fn dim(&self) -> usize {
        self.sections.len()
    }

    pub fn combination(&self, coeffs: &[C64]) -> DiscreteSection {
        let first = &self.sections[0];
        let mut out = DiscreteSection {
            m: first.m,
            n: first.n,
            l: first.l,
            values: vec![C64::new(0.0, 0.0); first.values.len()],
        };
        for (c, s) in coeffs.iter().zip(&self.sections) {
            for (o, v) in out.values.iter_mut().zip(&s.values) {
                *o += c * v;
            }
        }
        out
    }

    /// Lumped L² projection of `seed` onto the span of the basis.
    pub fn project(&self, mesh: &SurfaceMesh, seed: &DiscreteSection) -> DiscreteSection {
        let coeffs: Vec<C64> = self
            .sections
            .iter()
            .map(|e| {
                e.values
                    .iter()
                    .zip(&seed.values)
                    .zip(&mesh.vertex_areas)
                    .map(|((e, s), a)| e.conj() * s * a)
                    .sum()
            })
            .collect();
        self.combination(&coeffs)
    }
}

/// Numerical kernel of `op`, with a dimension cross-check when `expected_dim` is given.
pub fn holomorphic_basis(mesh: &SurfaceMesh, op: &DbarOperator, expected_dim: Option<usize>) -> Result<HolomorphicBasis> {
    let (eigenvalues, vectors) = if op.ncols <= DENSE_LIMIT {
        dense_spectrum(mesh, op)?
    } else {
        let block = (expected_dim.unwrap_or(8) + SPARSE_EXTRA).min(op.ncols);
        sparse_spectrum(mesh, op, block)?
    };
    let count = eigenvalues.len();
    let singular_values: Vec<f64> = eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
    // the kernel ends at the largest ratio between consecutive singular values
    let floor = 1e-300;
    let mut best = (0usize, 0.0f64);
    for k in 1..count {
        let ratio = singular_values[k] / singular_values[k - 1].max(floor);
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    let (dim, gap_ratio) = best;
    if gap_ratio < GAP_RATIO {
        return Err(Error::IndeterminateKernel {
            required: GAP_RATIO,
            singular_values,
        });
    }
    let sections = vectors
        .into_iter()
        .take(dim)
        .map(|mut values| {
            // fix the free phase: largest entry real and positive
            let big = values
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or(C64::new(1.0, 0.0));
            let phase = big.conj() / big.norm();
            values.iter_mut().for_each(|v| *v *= phase);
            DiscreteSection {
                m: op.m,
                n: op.n,
                l: op.l,
                values,
            }
        })
        .collect();
    let warning = match expected_dim {
        Some(e) if e != dim => Some(format!("detected kernel dimension {dim}, expected {e}")),
        _ => None,
    };
    Ok(HolomorphicBasis {
        sections,
        singular_values,
        gap_ratio,
        warning,
    })
}

type Spectrum = (Vec<f64>, Vec<Vec<C64>>);

/// Lowest eigenpairs of `D* A D x = λ M x`, vectors M-orthonormal.
fn dense_spectrum(mesh: &SurfaceMesh, op: &DbarOperator) -> Result<Spectrum> {
    let mass = &mesh.vertex_areas;
    let a = op.normal_matrix(mass);
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearSolve {
            residual: f64::NAN,
            detail: format!("eigensolver: {e:?}"),
        })?;
    let s = eig.S();
    let u = eig.U();
    let count = op.ncols.min(GAP_WINDOW);
    let values = (0..count).map(|i| s[i].re).collect();
    let vectors = (0..count)
        .map(|k| (0..op.ncols).map(|i| u[(i, k)] / mass[i].sqrt()).collect())
        .collect();
    Ok((values, vectors))
}

/// Subspace iteration with one sparse factorisation. The spectrum of the
/// normal operator has an O(1) gap above the kernel, so a handful of sweeps
/// resolves the lowest `block` pairs.
fn sparse_spectrum(mesh: &SurfaceMesh, op: &DbarOperator, block: usize) -> Result<Spectrum> {
    let n = op.ncols;
    let mass = &mesh.vertex_areas;
    let normal = op.normal_entries();
    let factor = linalg::ComplexFactor::new(n, &normal)?;
    let apply_normal = |x: &[C64]| {
        let mut y = vec![C64::new(0.0, 0.0); n];
        for &(r, c, v) in &normal {
            y[r] += v * x[c];
        }
        y
    };
    // deterministic, well spread starting block
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut x: Vec<Vec<C64>> = (0..block)
        .map(|j| (0..n).map(|i| C64::from_polar(1.0, 2.0 * PI * golden * ((i + 1) * (j + 1)) as f64)).collect())
        .collect();
    let mut prev = vec![f64::INFINITY; block];
    let mut values = prev.clone();
    for _ in 0..SPARSE_SWEEPS {
        let mut y: Vec<Vec<C64>> = x
            .iter()
            .map(|v| factor.solve(&v.iter().zip(mass).map(|(v, m)| v * m).collect::<Vec<_>>()))
            .collect();
        m_orthonormalise(&mut y, mass);
        let ny: Vec<Vec<C64>> = y.iter().map(|v| apply_normal(v)).collect();
        let k = y.len();
        let small = Mat::<C64>::from_fn(k, k, |i, j| y[i].iter().zip(&ny[j]).map(|(a, b)| a.conj() * b).sum());
        let eig = small.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearSolve {
            residual: f64::NAN,
            detail: format!("eigensolver: {e:?}"),
        })?;
        let (s, u) = (eig.S(), eig.U());
        values = (0..k).map(|i| s[i].re).collect();
        x = (0..k)
            .map(|j| (0..n).map(|r| (0..k).map(|i| y[i][r] * u[(i, j)]).sum()).collect())
            .collect();
        let settled = values
            .iter()
            .zip(&prev)
            .all(|(a, b)| (a - b).abs() <= 1e-10 * a.abs().max(1e-300));
        prev = values.clone();
        if settled {
            break;
        }
    }
    Ok((values, x))
}

/// Modified Gram-Schmidt in the lumped inner product; drops dependent vectors.
fn m_orthonormalise(vs: &mut Vec<Vec<C64>>, mass: &[f64]) {
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).zip(mass).map(|((a, b), m)| a.conj() * b * m).sum() };
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(v, q)| *v -= c * q);
            }
        }
        let norm = dot(&v, &v).re.sqrt();
        if norm > 1e-300 {
            v.iter_mut().for_each(|v| *v /= norm);
            out.push(v);
        }
    }
    *vs = out;
}

/// `h⁰(K^m L^n)` on a genus `g` surface with `deg L = l`, when Riemann–Roch
/// determines it: degree above `2g - 2` or below zero.
pub fn expected_h0(genus: usize, m: i32, n: i32, l: i64) -> Option<usize> {
    let g = genus as i64;
    let deg = m as i64 * (2 * g - 2) + n as i64 * l;
    if deg < 0 {
        Some(0)
    } else if deg > 2 * g - 2 {
        Some((deg - g + 1) as usize)
    } else if deg == 0 && m == 0 && (n == 0 || l == 0) {
        Some(1)
    } else {
        None
    }
}

/// A (0,1)-form with values in `K^m L^n`: one unitary component per face,
/// at the face centroid, in the row frames of [`DbarOperator`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceForm {
    pub m: i32,
    pub n: i32,
    pub values: Vec<C64>,
}

impl FaceForm {
    pub fn scaled(&self, a: C64) -> Self {
        FaceForm {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }
}

/// Face weights `A_f e^{2ū_f}` of the induced metric.
pub fn metric_weights(mesh: &SurfaceMesh, metric_u: &[f64]) -> Vec<f64> {
    mesh.faces
        .iter()
        .zip(&mesh.face_areas)
        .map(|(f, a)| a * (2.0 * f.iter().map(|&v| metric_u[v]).sum::<f64>() / 3.0).exp())
        .collect()
}

/// The part of `beta` orthogonal to the image of ∂̄ in the metric `e^{2u} h`,
/// and its norm. Least squares through the normal equations, with one step
/// of iterative refinement.
pub fn harmonic_part(
    mesh: &SurfaceMesh,
    bundle: &LineBundle,
    beta: &FaceForm,
    metric_u: &[f64],
) -> Result<(FaceForm, f64)> {
    mesh.check_len(metric_u)?;
    if beta.values.len() != mesh.num_faces() {
        return Err(Error::Shape {
            expected: mesh.num_faces(),
            got: beta.values.len(),
        });
    }
    if beta.is_structurally_zero() {
        return Ok((beta.clone(), 0.0));
    }
    let op = dbar_operator(mesh, bundle, beta.m, beta.n);
    let weights = metric_weights(mesh, metric_u);
    let nv = mesh.num_vertices();
    let mut trip = Vec::with_capacity(36 * op.rows.len());
    let mut rhs = vec![C64::new(0.0, 0.0); nv];
    for ((row, w), b) in op.rows.iter().zip(&weights).zip(&beta.values) {
        for &(i, ci) in row {
            rhs[i] += ci.conj() * b * *w;
            for &(j, cj) in row {
                trip.push((i, j, ci.conj() * cj * *w));
            }
        }
    }
    let mut psi = linalg::solve_complex(nv, &trip, &rhs)?;
    let mut r = rhs.clone();
    for &(i, j, v) in &trip {
        r[i] -= v * psi[j];
    }
    let dpsi = linalg::solve_complex(nv, &trip, &r)?;
    psi.iter_mut().zip(&dpsi).for_each(|(p, d)| *p += d);
    let image = op.apply(&psi);
    let values: Vec<C64> = beta.values.iter().zip(&image).map(|(b, i)| b - i).collect();
    let norm = values
        .iter()
        .zip(&weights)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum::<f64>()
        .sqrt();
    Ok((FaceForm { values, ..beta.clone() }, norm))
}

/// Norm of the harmonic part of `beta`; the class is trivial when it is below `tol`.
pub fn class_is_trivial(
    mesh: &SurfaceMesh,
    bundle: &LineBundle,
    beta: &FaceForm,
    metric_u: &[f64],
    tol: f64,
) -> Result<(bool, f64)> {
    let (_, norm) = harmonic_part(mesh, bundle, beta, metric_u)?;
    Ok((norm < tol, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_surface;

    #[test]
    fn sparse_and_dense_spectra_agree() {
        let mesh = build_surface(2, 3).unwrap();
        let b = make_line_bundle(&mesh, 1).unwrap();
        let op = dbar_operator(&mesh, &b, 2, 1);
        let (dense, dv) = dense_spectrum(&mesh, &op).unwrap();
        let (sparse, sv) = sparse_spectrum(&mesh, &op, 10).unwrap();
        for k in 0..6 {
            assert!((dense[k] - sparse[k]).abs() < 1e-8 * dense[k].max(1e-12), "{k}");
        }
        // the kernels span the same space
        let dot = |a: &[C64], b: &[C64]| -> C64 {
            a.iter().zip(b).zip(&mesh.vertex_areas).map(|((a, b), m)| a.conj() * b * m).sum()
        };
        for v in &sv[..4] {
            let captured: f64 = dv[..4].iter().map(|d| dot(d, v).norm_sqr()).sum();
            assert!((captured - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn projection_fixes_a_datum_across_resolutions() {
        let norm = |r: usize| {
            let mesh = build_surface(2, r).unwrap();
            let b = make_line_bundle(&mesh, 0).unwrap();
            let h = holomorphic_basis(&mesh, &dbar_operator(&mesh, &b, 2, 0), Some(3)).unwrap();
            let seed = bump_section(&mesh, (2, 0, 0), &[C64::new(0.2, 0.1)], 0.3, &[C64::new(1.0, 0.0)]);
            h.project(&mesh, &seed).l2_norm(&mesh)
        };
        let (a, b) = (norm(3), norm(4));
        assert!((a - b).abs() < 1e-2 * b, "{a} {b}");
    }

    #[test]
    fn trivial_bundle_has_unit_transport() {
        let mesh = build_surface(2, 1).unwrap();
        let b = make_line_bundle(&mesh, 0).unwrap();
        assert!(b.edge_transport.iter().all(|t| *t == C64::new(1.0, 0.0)));
        assert_eq!(b.degree_integral(), 0.0);
    }

    #[test]
    fn holonomy_matches_curvature_and_degree_is_exact() {
        let mesh = build_surface(2, 2).unwrap();
        for l in [-1i64, 1, 2] {
            let b = make_line_bundle(&mesh, l).unwrap();
            assert!((b.degree_integral() - l as f64).abs() < 1e-12);
            for f in 0..mesh.num_faces() {
                let d = b.holonomy(&mesh, f) - HOLONOMY_SIGN * b.face_curvature[f];
                let d = (d + PI).rem_euclid(2.0 * PI) - PI;
                assert!(d.abs() < 1e-9, "face {f}: {d}");
            }
        }
    }

    #[test]
    fn dual_bundle_conjugates_transport() {
        let mesh = build_surface(2, 1).unwrap();
        let p = make_line_bundle(&mesh, 1).unwrap();
        let m = make_line_bundle(&mesh, -1).unwrap();
        for (a, b) in p.dual().edge_transport.iter().zip(&m.edge_transport) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constants_are_holomorphic_functions() {
        let mesh = build_surface(2, 1).unwrap();
        let b = make_line_bundle(&mesh, 0).unwrap();
        let op = dbar_operator(&mesh, &b, 0, 0);
        let r = op.apply(&vec![C64::new(1.5, -2.0); mesh.num_vertices()]);
        assert!(r.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn riemann_roch_predictions() {
        assert_eq!(expected_h0(2, 2, 1, 1), Some(4));
        assert_eq!(expected_h0(2, 2, 0, 0), Some(3));
        assert_eq!(expected_h0(2, 2, -1, 1), Some(2));
        assert_eq!(expected_h0(2, -1, 1, 1), Some(0));
        assert_eq!(expected_h0(2, 1, 0, 0), None);
    }
}
