//! Poincaré disk primitives: orientation-preserving isometries in SU(1,1)
//! form, hyperbolic distance, geodesic interpolation and angles.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Disk isometry `z -> (a z + b) / (conj(b) z + conj(a))` with `|a|^2 - |b|^2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius {
        a: C64::new(1.0, 0.0),
        b: C64::new(0.0, 0.0),
    };

    pub fn rotation(angle: f64) -> Self {
        Mobius {
            a: C64::from_polar(1.0, 0.5 * angle),
            b: C64::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation by `distance` along the diameter pointing at `direction`.
    pub fn translation(direction: f64, distance: f64) -> Self {
        let half = 0.5 * distance;
        Mobius {
            a: C64::new(half.cosh(), 0.0),
            b: C64::from_polar(half.sinh(), direction),
        }
    }

    /// The isometry sending `p` to the origin and fixing the diameter through it.
    pub fn to_origin(p: C64) -> Self {
        let s = 1.0 / (1.0 - p.norm_sqr()).sqrt();
        Mobius {
            a: C64::new(s, 0.0),
            b: -p * s,
        }
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let d = self.b.conj() * z + self.a.conj();
        1.0 / (d * d)
    }

    /// Unit complex number `g'(z) / |g'(z)|`: the chart rotation at `z`.
    pub fn rotation_at(&self, z: C64) -> C64 {
        let d = self.derivative(z);
        d / d.norm()
    }

    pub fn compose(&self, other: &Mobius) -> Mobius {
        // self ∘ other as 2x2 matrices [[a, b], [conj b, conj a]]
        Mobius {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// `|a|^2 - |b|^2 - 1`; zero for a genuine disk isometry.
    pub fn determinant_defect(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - 1.0
    }
}

/// Conformal density of the hyperbolic metric, `h = rho^2 |dz|^2`.
pub fn density(z: C64) -> f64 {
    2.0 / (1.0 - z.norm_sqr())
}

pub fn distance(z: C64, w: C64) -> f64 {
    let r = ((z - w) / (C64::new(1.0, 0.0) - z.conj() * w)).norm();
    2.0 * r.atanh()
}

/// Point at fraction `t` of the hyperbolic arclength along the geodesic from `z` to `w`.
pub fn geodesic_point(z: C64, w: C64, t: f64) -> C64 {
    let m = Mobius::to_origin(z);
    let w0 = m.apply(w);
    let r = w0.norm();
    if r == 0.0 {
        return z;
    }
    let d = 2.0 * r.atanh();
    let p = w0 / r * (0.5 * t * d).tanh();
    m.inverse().apply(p)
}

pub fn geodesic_midpoint(z: C64, w: C64) -> C64 {
    geodesic_point(z, w, 0.5)
}

/// Interior angle at `p` of the geodesic triangle `(p, q, r)`, signed positive
/// when `(p, q, r)` is counter-clockwise.
pub fn angle_at(p: C64, q: C64, r: C64) -> f64 {
    let m = Mobius::to_origin(p);
    (m.apply(r) / m.apply(q)).arg()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_moves_origin_to_expected_radius() {
        let t = Mobius::translation(0.3, 1.7);
        let z = t.apply(C64::new(0.0, 0.0));
        assert!((distance(z, C64::new(0.0, 0.0)) - 1.7).abs() < 1e-13);
        assert!((z.arg() - 0.3).abs() < 1e-13);
        assert!(t.determinant_defect().abs() < 1e-14);
    }

    #[test]
    fn compose_and_inverse_agree_with_pointwise_application() {
        let f = Mobius::translation(1.1, 0.8);
        let g = Mobius::rotation(0.4).compose(&Mobius::translation(-2.0, 1.3));
        let z = C64::new(0.1, -0.35);
        let fg = f.compose(&g);
        assert!((fg.apply(z) - f.apply(g.apply(z))).norm() < 1e-14);
        assert!((f.inverse().apply(f.apply(z)) - z).norm() < 1e-14);
    }

    #[test]
    fn isometries_preserve_distance_and_density() {
        let g = Mobius::translation(2.2, 0.9).compose(&Mobius::rotation(1.0));
        let (z, w) = (C64::new(0.2, 0.1), C64::new(-0.3, 0.4));
        assert!((distance(g.apply(z), g.apply(w)) - distance(z, w)).abs() < 1e-12);
        let lhs = density(g.apply(z)) * g.derivative(z).norm();
        assert!((lhs - density(z)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_is_equidistant() {
        let (z, w) = (C64::new(0.5, 0.1), C64::new(-0.2, 0.6));
        let m = geodesic_midpoint(z, w);
        assert!((distance(z, m) - distance(m, w)).abs() < 1e-12);
        assert!((distance(z, m) * 2.0 - distance(z, w)).abs() < 1e-12);
    }

    #[test]
    fn angles_of_small_triangle_sum_near_pi() {
        let p = C64::new(0.1, 0.1);
        let q = p + C64::new(1e-3, 0.0);
        let r = p + C64::new(0.0, 1e-3);
        let s = angle_at(p, q, r) + angle_at(q, r, p) + angle_at(r, p, q);
        assert!(s < std::f64::consts::PI && s > std::f64::consts::PI - 1e-5);
    }
}
