//! Discrete holomorphic structure and Higgs field of the orthogonal Higgs
//! bundle attached to a solved germ.
//!
//! `V` is modelled smoothly on `K⁻¹ ⊕ W ⊕ K` with `W = 1` for RH3 and
//! `W = L⁻¹ ⊕ L` for RH4. Off-diagonal blocks are symbolic multiples of
//! stored (0,1)-forms, so the structural identities are checked exactly.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bundles::{class_is_trivial, dbar_operator, make_line_bundle, DiscreteSection, FaceForm, LineBundle};
use crate::error::{Error, Result};
use crate::germ::{GermData, GermSolution};
use crate::mesh::SurfaceMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Summand {
    KInv,
    Trivial,
    LInv,
    L,
    K,
}

impl Summand {
    /// `(m, n)` with the summand equal to `K^m L^n`.
    pub fn bundle_type(self) -> (i32, i32) {
        match self {
            Summand::KInv => (-1, 0),
            Summand::Trivial => (0, 0),
            Summand::LInv => (0, -1),
            Summand::L => (0, 1),
            Summand::K => (1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Block {
    Zero,
    /// The holomorphic structure of the diagonal summand.
    Dbar,
    /// `coeff · beta_blocks[beta]`.
    Form { coeff: C64, beta: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HiggsAssembly {
    pub n: usize,
    pub summands: Vec<Summand>,
    pub block_dbar: Vec<Vec<Block>>,
    /// Constant pairing, exact.
    pub q_v: Vec<Vec<i8>>,
    /// `[β]` for RH3, `[β₁, β₂]` for RH4 with `β₁` in `K⁻¹L⁻¹`, `β₂` in `K⁻¹L`.
    pub beta_blocks: Vec<FaceForm>,
    /// Components of the inclusion `φ: K⁻¹ → V`, one per summand.
    pub phi: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockInfo {
    pub row: Summand,
    pub col: Summand,
    pub kind: String,
}

impl HiggsAssembly {
    fn skeleton(n: usize, beta_blocks: Vec<FaceForm>) -> Self {
        let one = C64::new(1.0, 0.0);
        let (summands, forms): (Vec<Summand>, Vec<(usize, usize, C64, usize)>) = if n == 3 {
            (
                vec![Summand::KInv, Summand::Trivial, Summand::K],
                vec![(0, 1, -one, 0), (1, 2, one, 0)],
            )
        } else {
            // α₃ = (β₁, β₂)ᵀ and α₁ = -α₃ᵗ through the swap pairing on W
            (
                vec![Summand::KInv, Summand::LInv, Summand::L, Summand::K],
                vec![(1, 3, one, 0), (2, 3, one, 1), (0, 1, -one, 1), (0, 2, -one, 0)],
            )
        };
        let k = summands.len();
        let mut block_dbar = vec![vec![Block::Zero; k]; k];
        for (i, row) in block_dbar.iter_mut().enumerate() {
            row[i] = Block::Dbar;
        }
        for (i, j, coeff, beta) in forms {
            block_dbar[i][j] = Block::Form { coeff, beta };
        }
        let mut q_v = vec![vec![0i8; k]; k];
        for i in 0..k {
            q_v[i][k - 1 - i] = 1;
        }
        if n == 3 {
            q_v[1][1] = 1;
        }
        let mut phi = vec![C64::new(0.0, 0.0); k];
        phi[0] = one;
        HiggsAssembly {
            n,
            summands,
            block_dbar,
            q_v,
            beta_blocks,
            phi,
        }
    }

    fn size(&self) -> usize {
        self.summands.len()
    }

    /// The `W` partner of summand `i` under `Q_W`.
    fn partner(&self, i: usize) -> usize {
        let k = self.size();
        (1..k - 1).find(|&j| self.q_v[i][j] != 0).unwrap_or(i)
    }

    /// `φᵗ ∘ φ = Q_V(φ, φ)`, evaluated with the exact pairing.
    pub fn phi_isotropy(&self) -> C64 {
        let k = self.size();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                if self.q_v[i][j] != 0 {
                    acc += self.phi[i] * self.phi[j] * f64::from(self.q_v[i][j]);
                }
            }
        }
        acc
    }

    /// Checks the upper-triangular shape, the vanishing corner block, the
    /// `α₁ = -α₃ᵗ` constraint and isotropy of `φ`. All comparisons are exact.
    pub fn check_structure(&self) -> Result<()> {
        let k = self.size();
        let fail = |m: String| Err(Error::Structure(m));
        for i in 0..k {
            for j in 0..k {
                let b = self.block_dbar[i][j];
                let ok = match (i.cmp(&j), b) {
                    (std::cmp::Ordering::Equal, Block::Dbar) => true,
                    (std::cmp::Ordering::Greater, Block::Zero) => true,
                    (std::cmp::Ordering::Less, _) => true,
                    _ => false,
                };
                if !ok {
                    return fail(format!("block ({i},{j}) is {b:?}"));
                }
            }
        }
        if self.block_dbar[0][k - 1] != Block::Zero {
            return fail("corner block must vanish for Q_V to be holomorphic".into());
        }
        for i in 1..k - 1 {
            for j in 1..k - 1 {
                if i != j && self.block_dbar[i][j] != Block::Zero {
                    return fail(format!("W block ({i},{j}) must vanish"));
                }
            }
            let top = self.block_dbar[0][self.partner(i)];
            let right = self.block_dbar[i][k - 1];
            let ok = match (top, right) {
                (Block::Form { coeff: a, beta: x }, Block::Form { coeff: b, beta: y }) => x == y && a == -b,
                (Block::Zero, Block::Zero) => true,
                _ => false,
            };
            if !ok {
                return fail(format!("α₁ ≠ -α₃ᵗ at W index {i}"));
            }
        }
        if self.phi.iter().skip(1).any(|p| *p != C64::new(0.0, 0.0)) {
            return fail("φ must take values in K⁻¹".into());
        }
        if self.phi_isotropy() != C64::new(0.0, 0.0) {
            return fail("φᵗφ ≠ 0".into());
        }
        Ok(())
    }

    /// `g X g⁻¹` for the constant gauge `g = diag(a^{weights[i]})`, applied to
    /// `∂̄_V` and to `φ`. Integer weights keep the scale factors exact.
    pub fn conjugate(&self, a: C64, weights: &[i32]) -> Result<HiggsAssembly> {
        if a == C64::new(0.0, 0.0) {
            return Err(Error::InvalidParameter("gauge parameter must be nonzero".into()));
        }
        if weights.len() != self.size() {
            return Err(Error::Shape {
                expected: self.size(),
                got: weights.len(),
            });
        }
        let mut out = self.clone();
        for (i, row) in out.block_dbar.iter_mut().enumerate() {
            for (j, b) in row.iter_mut().enumerate() {
                if let Block::Form { coeff, .. } = b {
                    *coeff *= a.powi(weights[i] - weights[j]);
                }
            }
        }
        for (p, w) in out.phi.iter_mut().zip(weights) {
            *p *= a.powi(*w);
        }
        Ok(out)
    }

    /// Folds block coefficients into the stored forms so that the `α₃`
    /// blocks carry coefficient one.
    pub fn normalized(&self) -> HiggsAssembly {
        let k = self.size();
        let mut out = self.clone();
        for i in 1..k - 1 {
            if let Block::Form { coeff, beta } = self.block_dbar[i][k - 1] {
                out.beta_blocks[beta] = self.beta_blocks[beta].scaled(coeff);
                out.block_dbar[i][k - 1] = Block::Form { coeff: C64::new(1.0, 0.0), beta };
                let p = self.partner(i);
                out.block_dbar[0][p] = Block::Form { coeff: C64::new(-1.0, 0.0), beta };
            }
        }
        out
    }

    pub fn manifest(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        for (i, row) in self.block_dbar.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                let kind = match b {
                    Block::Zero => continue,
                    Block::Dbar => format!("dbar on K^{:?}L^{:?}", self.summands[i].bundle_type().0, self.summands[i].bundle_type().1),
                    Block::Form { coeff, beta } => format!("{coeff} * beta[{beta}]"),
                };
                out.push(BlockInfo {
                    row: self.summands[i],
                    col: self.summands[j],
                    kind,
                });
            }
        }
        out
    }
}

/// Real scalar field at the row points of the ∂̄ stencil.
fn scalar_at_rows(mesh: &SurfaceMesh, bundle: &LineBundle, field: &[f64]) -> Vec<f64> {
    let op = dbar_operator(mesh, bundle, 0, 0);
    let vals: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
    op.interpolate(&vals).iter().map(|v| v.re).collect()
}

/// `β = 2 conj(θ) e^{-2u} e^{2 s w}` at the row points, as a form of type
/// `K⁻¹ L^{-n}`. The factor two matches the density convention, so that
/// `|β|²` reproduces the `‖II^{2,0}‖²_γ` contribution of `θ`.
fn beta_from(
    mesh: &SurfaceMesh,
    bundle: &LineBundle,
    theta: &DiscreteSection,
    u_rows: &[f64],
    w_rows: Option<&[f64]>,
) -> FaceForm {
    let op = dbar_operator(mesh, bundle, -theta.m, -theta.n);
    let conj: Vec<C64> = theta.values.iter().map(|v| v.conj()).collect();
    let at_rows = op.interpolate(&conj);
    let s = theta.n as f64;
    let values = at_rows
        .iter()
        .enumerate()
        .map(|(f, v)| {
            let w = w_rows.map_or(0.0, |w| w[f]);
            v * 2.0 * (-2.0 * u_rows[f] + 2.0 * s * w).exp()
        })
        .collect();
    FaceForm {
        m: 1 - theta.m,
        n: -theta.n,
        values,
    }
}

pub fn build_from_germ(data: &GermData, sol: &GermSolution) -> Result<HiggsAssembly> {
    sol.ensure_converged()?;
    let mesh = data.mesh();
    mesh.check_len(&sol.u)?;
    let asm = match data {
        GermData::Rh3(d) => {
            let bundle = make_line_bundle(mesh, 0)?;
            let u_rows = scalar_at_rows(mesh, &bundle, &sol.u);
            let beta = beta_from(mesh, &bundle, &d.q, &u_rows, None);
            HiggsAssembly::skeleton(3, vec![beta])
        }
        GermData::Rh4(d) => {
            let w = sol.w.as_deref().ok_or(Error::StaleSolution)?;
            let u_rows = scalar_at_rows(mesh, &d.bundle, &sol.u);
            let w_rows = scalar_at_rows(mesh, &d.bundle, w);
            let b1 = beta_from(mesh, &d.bundle, &d.theta1, &u_rows, Some(&w_rows));
            let b2 = beta_from(mesh, &d.bundle, &d.theta2, &u_rows, Some(&w_rows));
            HiggsAssembly::skeleton(4, vec![b1, b2])
        }
    };
    asm.check_structure()?;
    Ok(asm)
}

/// The pair `(β/λ, λφ)`: by the constant gauge `g_λ = diag(λ, 1_W, λ⁻¹)`
/// the bundle of `β/λ` carries the Higgs field `λΦ` of the original one.
pub fn gauge_scale(asm: &HiggsAssembly, lambda: C64) -> Result<HiggsAssembly> {
    if lambda == C64::new(0.0, 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be a nonzero finite number".into()));
    }
    let inv = lambda.inv();
    let mut out = asm.clone();
    out.beta_blocks = asm.beta_blocks.iter().map(|b| b.scaled(inv)).collect();
    out.phi = asm.phi.iter().map(|p| p * lambda).collect();
    out.check_structure()?;
    Ok(out)
}

/// `g_λ` as integer weights for [`HiggsAssembly::conjugate`].
pub fn g_lambda_weights(asm: &HiggsAssembly) -> Vec<i32> {
    let k = asm.summands.len();
    (0..k).map(|i| if i == 0 { 1 } else if i == k - 1 { -1 } else { 0 }).collect()
}

/// Weights of the lift of `a ∈ SO(Q_W) ≅ ℂ×`, acting on `L⁻¹ ⊕ L` by `(a, a⁻¹)`.
pub const C_STAR_WEIGHTS: [i32; 4] = [0, 1, -1, 0];

/// `gᵗ Q_V g = Q_V` for `g = diag(a^{weights})`, checked on exponents: a
/// pairing entry survives only between summands whose weights cancel.
pub fn preserves_q_v(asm: &HiggsAssembly, weights: &[i32]) -> bool {
    let k = asm.summands.len();
    (0..k).all(|i| (0..k).all(|j| asm.q_v[i][j] == 0 || weights[i] + weights[j] == 0))
}

/// True when some β block vanishes below `tol` in sup norm.
pub fn hodge_flag(asm: &HiggsAssembly, tol: f64) -> Result<bool> {
    if asm.n != 4 {
        return Err(Error::InvalidParameter("the Hodge criterion applies to RH4 assemblies".into()));
    }
    Ok(asm.beta_blocks.iter().any(|b| b.sup_norm() < tol))
}

/// Dolbeault test on every β block: `(trivial, residual)` per block.
pub fn beta_classes(
    asm: &HiggsAssembly,
    mesh: &SurfaceMesh,
    bundle: &LineBundle,
    metric_u: &[f64],
    tol: f64,
) -> Result<Vec<(bool, f64)>> {
    asm.beta_blocks
        .iter()
        .map(|b| class_is_trivial(mesh, bundle, b, metric_u, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{solve, GermData3, GermData4};
    use crate::mesh::build_surface;
    use std::sync::Arc;

    fn zero_rh4(l: i64) -> (GermData, GermSolution) {
        let mesh = Arc::new(build_surface(2, 1).unwrap());
        let b = make_line_bundle(&mesh, l).unwrap();
        let t1 = DiscreteSection::zero(&mesh, 2, 1, l);
        let t2 = DiscreteSection::zero(&mesh, 2, -1, l);
        let data = GermData::Rh4(GermData4::new(mesh, b, t1, t2).unwrap());
        let sol = solve(&data, 1e-12, 10).unwrap();
        (data, sol)
    }

    #[test]
    fn totally_geodesic_assembly_is_a_direct_sum() {
        let (data, sol) = zero_rh4(0);
        let asm = build_from_germ(&data, &sol).unwrap();
        assert!(asm.beta_blocks.iter().all(|b| b.is_structurally_zero()));
        assert!(hodge_flag(&asm, 1e-12).unwrap());
        let scaled = gauge_scale(&asm, C64::new(0.5, 2.0)).unwrap();
        assert!(scaled.beta_blocks.iter().all(|b| b.is_structurally_zero()));
        assert_eq!(scaled.phi[0], C64::new(0.5, 2.0));
    }

    #[test]
    fn structure_violations_are_caught() {
        let (data, sol) = zero_rh4(0);
        let asm = build_from_germ(&data, &sol).unwrap();
        let mut bad = asm.clone();
        bad.block_dbar[0][3] = Block::Form { coeff: C64::new(1.0, 0.0), beta: 0 };
        assert!(bad.check_structure().is_err());
        let mut bad = asm.clone();
        bad.block_dbar[0][1] = Block::Form { coeff: C64::new(1.0, 0.0), beta: 1 };
        assert!(bad.check_structure().is_err());
        let mut bad = asm;
        bad.phi[3] = C64::new(1.0, 0.0);
        assert!(bad.check_structure().is_err());
    }

    #[test]
    fn gauges_preserve_the_pairing() {
        let (data, sol) = zero_rh4(0);
        let asm = build_from_germ(&data, &sol).unwrap();
        assert!(preserves_q_v(&asm, &g_lambda_weights(&asm)));
        assert!(preserves_q_v(&asm, &C_STAR_WEIGHTS));
        assert!(!preserves_q_v(&asm, &[1, 0, 0, 1]));
    }

    #[test]
    fn rh3_beta_blocks_mirror_each_other() {
        let mesh = Arc::new(build_surface(2, 1).unwrap());
        let q = DiscreteSection::zero(&mesh, 2, 0, 0);
        let data = GermData::Rh3(GermData3::new(mesh, q).unwrap());
        let sol = solve(&data, 1e-12, 10).unwrap();
        let asm = build_from_germ(&data, &sol).unwrap();
        assert_eq!(asm.summands, vec![Summand::KInv, Summand::Trivial, Summand::K]);
        assert!(matches!(asm.block_dbar[0][1], Block::Form { coeff, beta: 0 } if coeff == C64::new(-1.0, 0.0)));
        assert!(matches!(asm.block_dbar[1][2], Block::Form { coeff, beta: 0 } if coeff == C64::new(1.0, 0.0)));
        assert!(hodge_flag(&asm, 1.0).is_err());
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let (data, sol) = zero_rh4(0);
        let asm = build_from_germ(&data, &sol).unwrap();
        assert!(gauge_scale(&asm, C64::new(0.0, 0.0)).is_err());
    }
}
