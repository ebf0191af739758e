use std::sync::Arc;

use num_complex::Complex64 as C64;

use hyperminimal::bundles::*;
use hyperminimal::germ::{solve, GermData, GermData3};
use hyperminimal::higgs::build_from_germ;
use hyperminimal::mesh::{build_surface, SurfaceMesh};
use hyperminimal::moduli::ClassFlag;

/// `∂̄(f ∂_z)` for a smooth compactly supported `f`, evaluated exactly at the row points.
fn coboundary(mesh: &SurfaceMesh) -> FaceForm {
    let (p, rad, c) = (C64::new(0.1, -0.05), 0.35, C64::new(0.7, 0.4));
    let values = row_points(mesh)
        .iter()
        .map(|&z| {
            let r2 = (z - p).norm_sqr() / (rad * rad);
            if r2 < 1.0 {
                c * 3.0 * (1.0 - r2).powi(2) * (-(z - p) / (rad * rad))
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    FaceForm { m: -1, n: 0, values }
}

fn relative_harmonic(mesh: &SurfaceMesh, bundle: &LineBundle, beta: &FaceForm, u: &[f64]) -> f64 {
    let (_, norm) = harmonic_part(mesh, bundle, beta, u).unwrap();
    let w = metric_weights(mesh, u);
    let total = beta.values.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt();
    norm / total
}

#[test]
fn coboundaries_vanish_at_second_order() {
    let mut rel = Vec::new();
    for r in 3..=4 {
        let mesh = build_surface(2, r).unwrap();
        let b = make_line_bundle(&mesh, 0).unwrap();
        let u = vec![0.0; mesh.num_vertices()];
        let h = mesh.mesh_size();
        let x = relative_harmonic(&mesh, &b, &coboundary(&mesh), &u);
        assert_eq!(ClassFlag::from_norm(x, 2.5 * h * h), ClassFlag::Zero, "r={r} rel={x}");
        rel.push(x);
    }
    assert!(rel[0] / rel[1] >= 3.0, "{rel:?}");
}

#[test]
fn hopf_differentials_give_nontrivial_classes() {
    let mesh = Arc::new(build_surface(2, 3).unwrap());
    let b = make_line_bundle(&mesh, 0).unwrap();
    let basis = holomorphic_basis(&mesh, &dbar_operator(&mesh, &b, 2, 0), Some(3)).unwrap();
    let seed = bump_section(&mesh, (2, 0, 0), &[C64::new(0.2, 0.1)], 0.3, &[C64::new(1.0, 0.0)]);
    let q = basis.project(&mesh, &seed);
    let q = q.scaled(C64::new(0.3 / q.l2_norm(&mesh), 0.0));
    let data = GermData::Rh3(GermData3::new(mesh.clone(), q).unwrap());
    let sol = solve(&data, 1e-12, 30).unwrap();
    let asm = build_from_germ(&data, &sol).unwrap();
    let x = relative_harmonic(&mesh, &b, &asm.beta_blocks[0], &sol.u);
    let h = mesh.mesh_size();
    assert_eq!(ClassFlag::from_norm(x, 2.5 * h * h), ClassFlag::Nonzero, "rel={x}");
}
