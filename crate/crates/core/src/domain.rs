//! Disc geometry and the explicit reproducing kernel of the Bergman space `H²(D(x, r))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};

/// Relative slack applied to the radius when deciding whether a point is interior.
pub const INTERIOR_TOLERANCE: f64 = 1e-12;

/// Open disc `D(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    center: c64,
    radius: f64,
}

impl Disc {
    pub fn new(center: c64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "disc radius must be positive and finite, got {radius}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidParameter("disc center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// The unit disc `D(0, 1)`.
    pub fn unit() -> Self {
        Self { center: c64::new(0.0, 0.0), radius: 1.0 }
    }

    /// `D(1, 3/2)`, the domain of the Gauss-map example.
    pub fn gauss_example() -> Self {
        Self { center: c64::new(1.0, 0.0), radius: 1.5 }
    }

    pub fn center(&self) -> c64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Normalized coordinate `(z - x) / r`.
    #[inline]
    pub fn normalized(&self, z: c64) -> c64 {
        (z - self.center) / self.radius
    }

    /// Strict-interior test `|z - x| ≤ r (1 - 1e-12)`.
    pub fn contains(&self, z: c64) -> bool {
        (z - self.center).norm() <= self.radius * (1.0 - INTERIOR_TOLERANCE)
    }

    fn require_inside(&self, z: c64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::PointOutsideDisc { point: z, center: self.center, radius: self.radius })
        }
    }

    /// Distance from `z` to the boundary circle (positive inside).
    pub fn boundary_distance(&self, z: c64) -> f64 {
        self.radius - (z - self.center).norm()
    }

    /// Point on the boundary circle at angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> c64 {
        self.center + c64::new(theta.cos(), theta.sin()) * self.radius
    }

    /// Bergman kernel `B(z, w) = 1 / (π r² (1 - u conj(v))²)` with `u, v` the normalized
    /// coordinates of `z` and `w`.
    pub fn bergman_kernel(&self, z: c64, w: c64) -> Result<c64> {
        self.require_inside(z)?;
        self.require_inside(w)?;
        Ok(self.bergman_kernel_unchecked(z, w))
    }

    /// Kernel evaluation without the interior check; used in quadrature loops where the
    /// arguments are images of validated contractions.
    #[inline]
    pub fn bergman_kernel_unchecked(&self, z: c64, w: c64) -> c64 {
        let u = self.normalized(z);
        let v = self.normalized(w);
        let one_minus = c64::new(1.0, 0.0) - u * v.conj();
        (one_minus * one_minus).inv() / (PI * self.radius * self.radius)
    }

    /// Orthonormal basis function `e_ℓ(z) = sqrt((ℓ+1)/π) · ((z - x)/r)^ℓ / r`.
    pub fn basis_eval(&self, ell: usize, z: c64) -> c64 {
        let u = self.normalized(z);
        u.powi(ell as i32) * (((ell + 1) as f64 / PI).sqrt() / self.radius)
    }

    /// Fills `out[ℓ] = e_ℓ(z)` for `ℓ = 0..out.len()` by forward recurrence.
    pub fn basis_values_into(&self, z: c64, out: &mut [c64]) {
        let u = self.normalized(z);
        let mut power = c64::new(1.0 / self.radius, 0.0);
        for (ell, slot) in out.iter_mut().enumerate() {
            *slot = power * ((ell + 1) as f64 / PI).sqrt();
            power *= u;
        }
    }

    pub fn basis_values(&self, z: c64, count: usize) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); count];
        self.basis_values_into(z, &mut out);
        out
    }

    /// Two-sided bound `1/(π r²) ≤ B(z, z) ≤ 1/(π dist(z, ∂D)²)`.
    pub fn kernel_diag_bounds(&self, z: c64) -> Result<(f64, f64)> {
        self.require_inside(z)?;
        let dist = self.boundary_distance(z);
        Ok((1.0 / (PI * self.radius * self.radius), 1.0 / (PI * dist * dist)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn kernel_at_center_of_unit_disc() {
        let k = Disc::unit().bergman_kernel(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(k.re, 1.0 / PI, max_relative = 1e-15);
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn kernel_gauss_disc_at_origin() {
        let k = Disc::gauss_example().bergman_kernel(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(k.re, 36.0 / (25.0 * PI), max_relative = 1e-14);
        assert!(k.im.abs() < 1e-16);
    }

    #[test]
    fn kernel_with_one_argument_at_center() {
        let k = Disc::unit().bergman_kernel(c(0.5, 0.0), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(k.re, 1.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn kernel_rejects_exterior_points() {
        let d = Disc::unit();
        assert!(matches!(
            d.bergman_kernel(c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::PointOutsideDisc { .. })
        ));
        assert!(d.bergman_kernel(c(0.0, 0.0), c(0.0, 2.0)).is_err());
        assert!(d.kernel_diag_bounds(c(0.0, -1.0)).is_err());
    }

    #[test]
    fn basis_examples() {
        let unit = Disc::unit();
        assert_relative_eq!(unit.basis_eval(0, c(0.3, -0.7)).re, 1.0 / PI.sqrt(), max_relative = 1e-15);
        assert_eq!(Disc::gauss_example().basis_eval(1, c(1.0, 0.0)), c(0.0, 0.0));
        let v = unit.basis_eval(2, c(0.5, 0.0));
        assert_relative_eq!(v.re, (3.0 / PI).sqrt() * 0.25, max_relative = 1e-15);
    }

    #[test]
    fn basis_recurrence_matches_direct_evaluation() {
        let d = Disc::gauss_example();
        let z = c(0.2, 0.9);
        let values = d.basis_values(z, 25);
        for (ell, v) in values.iter().enumerate() {
            let direct = d.basis_eval(ell, z);
            assert!((v - direct).norm() <= 1e-13 * direct.norm().max(1e-300));
        }
    }

    #[test]
    fn diag_bound_examples() {
        let (lo, hi) = Disc::unit().kernel_diag_bounds(c(0.0, 0.0)).unwrap();
        assert_relative_eq!(lo, 1.0 / PI);
        assert_relative_eq!(hi, 1.0 / PI);

        let (lo, hi) = Disc::gauss_example().kernel_diag_bounds(c(0.0, 0.0)).unwrap();
        assert_relative_eq!(lo, 4.0 / (9.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(hi, 4.0 / PI, max_relative = 1e-14);

        let (lo, hi) = Disc::unit().kernel_diag_bounds(c(0.9, 0.0)).unwrap();
        assert_relative_eq!(lo, 1.0 / PI);
        assert_relative_eq!(hi, 100.0 / PI, max_relative = 1e-12);
    }

    #[test]
    fn kernel_diagonal_within_bounds_for_random_points() {
        use rand::{Rng, SeedableRng};
        let d = Disc::new(c(-0.4, 2.0), 0.7).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let rad = d.radius() * rng.random::<f64>().sqrt() * 0.999;
            let theta = rng.random::<f64>() * 2.0 * PI;
            let z = d.center() + c64::from_polar(rad, theta);
            let k = d.bergman_kernel(z, z).unwrap();
            let (lo, hi) = d.kernel_diag_bounds(z).unwrap();
            assert_eq!(k.im, 0.0);
            assert!(k.re >= lo * (1.0 - 1e-14) && k.re <= hi * (1.0 + 1e-14));
        }
    }

    #[test]
    fn invalid_radius_rejected() {
        assert!(Disc::new(c(0.0, 0.0), 0.0).is_err());
        assert!(Disc::new(c(0.0, 0.0), -1.0).is_err());
        assert!(Disc::new(c(0.0, 0.0), f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn kernel_is_hermitian(ar in 0.0f64..0.99, at in 0.0f64..6.3, br in 0.0f64..0.99, bt in 0.0f64..6.3) {
            let d = Disc::new(c(0.3, -0.2), 1.3).unwrap();
            let z = d.center() + c64::from_polar(ar * d.radius(), at);
            let w = d.center() + c64::from_polar(br * d.radius(), bt);
            let kzw = d.bergman_kernel(z, w).unwrap();
            let kwz = d.bergman_kernel(w, z).unwrap();
            prop_assert!((kzw - kwz.conj()).norm() <= 1e-12 * kzw.norm());
        }

        #[test]
        fn basis_modulus_bound(ell in 0usize..60, r in 0.0f64..1.0, t in 0.0f64..6.3) {
            let d = Disc::gauss_example();
            let z = d.center() + c64::from_polar(r * d.radius(), t);
            let bound = (((ell + 1) as f64) / PI).sqrt() * r.powi(ell as i32);
            prop_assert!(d.basis_eval(ell, z).norm() <= bound * (1.0 + 1e-12));
        }
    }
}
