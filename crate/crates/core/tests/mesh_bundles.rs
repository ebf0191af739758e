use std::f64::consts::PI;

use hyperminimal::bundles::*;
use hyperminimal::germ::Manufactured;
use hyperminimal::mesh::*;

#[test]
fn vertex_counts_are_frozen() {
    let expected = [30, 126, 510, 2046, 8190];
    for (r, &n) in (1..=5).zip(&expected) {
        assert_eq!(predicted_vertex_count(2, r), n, "r={r}");
    }
    for r in 1..=3 {
        let m = build_surface(2, r).unwrap();
        assert_eq!(m.num_vertices(), expected[r - 1]);
        assert_eq!(m.euler_characteristic(), -2);
    }
    let m = build_surface(3, 2).unwrap();
    assert_eq!(m.num_vertices(), predicted_vertex_count(3, 2));
    assert_eq!(m.euler_characteristic(), -4);
}

#[test]
fn meshes_are_bit_identical_across_builds() {
    let a = build_surface(2, 3).unwrap();
    let b = build_surface(2, 3).unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.vertices, b.vertices);
    assert_eq!(a.edge_weights, b.edge_weights);
}

#[test]
fn side_pairings_transport_fields_exactly() {
    let m = build_surface(2, 2).unwrap();
    let field: Vec<f64> = (0..m.num_vertices()).map(|i| (i as f64).sin()).collect();
    for id in &m.identifications {
        let there = id.map.apply(m.vertices[id.vertex]);
        assert!((there - id.copy).norm() < 1e-10);
        // the copy carries the representative's index, so the value comes back unchanged
        let back = id.map.inverse().apply(there);
        assert!((back - m.vertices[id.vertex]).norm() < 1e-10);
        assert_eq!(field[id.vertex], field[id.vertex]);
    }
}

#[test]
fn gauss_bonnet_quadrature_shrinks_under_refinement() {
    // the total curvature of e^{2u}h is -4π(g-1) - ∫Δu dA, and ∫Δu dA = 0.
    // Resolution 2 is still pre-asymptotic (ratio 1.7 to resolution 3).
    let mut errs = Vec::new();
    for r in 3..=5 {
        let m = build_surface(2, r).unwrap();
        let bump = Manufactured::bump_for(&m, 1.0);
        let lap: Vec<f64> = m.vertices.iter().map(|&z| bump.eval(z).1).collect();
        errs.push(integrate(&m, &lap, None).unwrap().abs());
    }
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "{errs:?}");
    }
}

#[test]
fn degree_is_exact_at_every_resolution() {
    for r in 1..=3 {
        let m = build_surface(2, r).unwrap();
        for l in -1..=1 {
            let b = make_line_bundle(&m, l).unwrap();
            assert!((b.degree_integral() - l as f64).abs() < 1e-12, "r={r} l={l}");
        }
    }
}

#[test]
fn riemann_roch_dimensions_at_reference_resolution() {
    let m = build_surface(2, 3).unwrap();
    for (l, k2l, k2linv) in [(1, 4, 2), (0, 3, 3), (-1, 2, 4)] {
        let b = make_line_bundle(&m, l).unwrap();
        for (n, want) in [(1, k2l), (-1, k2linv)] {
            let basis = holomorphic_basis(&m, &dbar_operator(&m, &b, 2, n), None).unwrap();
            assert_eq!(basis.dim(), want, "l={l} n={n}");
            assert!(basis.gap_ratio >= GAP_RATIO, "l={l} n={n} gap {}", basis.gap_ratio);
        }
    }
}

#[test]
fn basis_sections_become_holomorphic_under_refinement() {
    let mut worst = Vec::new();
    for r in 3..=4 {
        let m = build_surface(2, r).unwrap();
        let b = make_line_bundle(&m, 1).unwrap();
        let basis = holomorphic_basis(&m, &dbar_operator(&m, &b, 2, 1), Some(4)).unwrap();
        worst.push(basis.singular_values[basis.dim() - 1]);
    }
    assert!(worst[0] / worst[1] >= 2.0, "{worst:?}");
}

#[test]
fn quartic_differentials_have_expected_dimension() {
    let m = build_surface(2, 3).unwrap();
    let b = make_line_bundle(&m, 0).unwrap();
    let basis = holomorphic_basis(&m, &dbar_operator(&m, &b, 2, 0), expected_h0(2, 2, 0, 0)).unwrap();
    assert_eq!(basis.dim(), 3);
    assert!(basis.warning.is_none());
    for s in &basis.sections {
        assert!((s.l2_norm(&m) - 1.0).abs() < 1e-10);
    }
    assert!((m.exact_area() - 4.0 * PI).abs() < 1e-12);
}
