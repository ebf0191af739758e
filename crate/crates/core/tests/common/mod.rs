#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperminimal::bundles::*;
use hyperminimal::germ::{GermData, GermData4};
use hyperminimal::mesh::{build_surface, SurfaceMesh};

pub struct Bases {
    pub mesh: Arc<SurfaceMesh>,
    pub bundle: LineBundle,
    pub k2l: HolomorphicBasis,
    pub k2linv: HolomorphicBasis,
}

pub fn bases(resolution: usize, l: i64) -> Bases {
    let mesh = Arc::new(build_surface(2, resolution).unwrap());
    let bundle = make_line_bundle(&mesh, l).unwrap();
    let k2l = holomorphic_basis(&mesh, &dbar_operator(&mesh, &bundle, 2, 1), expected_h0(2, 2, 1, l)).unwrap();
    let k2linv = holomorphic_basis(&mesh, &dbar_operator(&mesh, &bundle, 2, -1), expected_h0(2, 2, -1, l)).unwrap();
    Bases {
        mesh,
        bundle,
        k2l,
        k2linv,
    }
}

pub fn random_coeffs(dim: usize, norm: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    c.iter().map(|z| z * (norm / n)).collect()
}

impl Bases {
    pub fn data(&self, theta1: DiscreteSection, theta2: DiscreteSection) -> GermData {
        GermData::Rh4(GermData4::new(self.mesh.clone(), self.bundle.clone(), theta1, theta2).unwrap())
    }

    /// Generic data with L² norms `a1`, `a2`.
    pub fn random(&self, a1: f64, a2: f64, seed: u64) -> GermData {
        let t1 = self.k2l.combination(&random_coeffs(self.k2l.dim(), a1, seed));
        let t2 = self.k2linv.combination(&random_coeffs(self.k2linv.dim(), a2, seed + 1));
        self.data(t1, t2)
    }
}
