//! The nonlinearity f, its derivative and primitive, and g(z) = z f(|z|²).
//!
//! Supported models:
//! * pure power f(r) = r^((p-1)/2) (so g(z) = z|z|^(p-1)), 1 < p < 1 + 4/(d-2)₊,
//! * cubic-quintic f(r) = r − r² (g(z) = z|z|² − z|z|⁴),
//! * the linear limit f ≡ 0, exposed for integrator validation.
//!
//! Cartesian partials of g are used throughout (z = x + iy), with the
//! identity (∂_x g + i ∂_y g)(z) = 2 z² f'(|z|²).

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// Mass-criticality of f relative to the dimension: p vs 1 + 4/d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    PurePower { p: f64 },
    CubicQuintic,
    /// f ≡ 0: free Schrödinger flow, used as a test hook.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub kind: Kind,
    /// Set when f'(0) diverges analytically (pure powers with p < 3) and the
    /// convention f'(0) = 0 is applied.  Functional evaluations multiply
    /// f'(|u|²) by factors vanishing at u = 0, so the products stay finite.
    pub nonsmooth_origin: bool,
}

/// First and second Cartesian partials of g at a point.
#[derive(Debug, Clone, Copy)]
pub struct GJet {
    pub g: Complex64,
    pub gx: Complex64,
    pub gy: Complex64,
    /// Second partials; populated only for `g_partials(.., 2)`.
    pub gxx: Complex64,
    pub gxy: Complex64,
    pub gyy: Complex64,
}

impl Nonlinearity {
    pub fn pure_power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("pure power needs p > 1, got {p}")));
        }
        Ok(Nonlinearity { kind: Kind::PurePower { p }, nonsmooth_origin: p < 3.0 })
    }

    pub fn cubic_quintic() -> Self {
        Nonlinearity { kind: Kind::CubicQuintic, nonsmooth_origin: false }
    }

    /// Linear Schrödinger limit (f ≡ 0); no solitons exist for it.
    pub fn zero() -> Self {
        Nonlinearity { kind: Kind::Zero, nonsmooth_origin: false }
    }

    /// Check the H¹-subcriticality window 1 < p < 1 + 4/(d-2)₊ in dimension d.
    pub fn validate_for_dim(&self, d: usize) -> Result<()> {
        if let Kind::PurePower { p } = self.kind {
            if d >= 3 {
                let pmax = 1.0 + 4.0 / (d as f64 - 2.0);
                if p >= pmax {
                    return Err(Error::InvalidParameter(format!(
                        "p={p} not H¹-subcritical in d={d}: requires p < {pmax}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn criticality(&self, d: usize) -> Criticality {
        match self.kind {
            Kind::PurePower { p } => {
                let pc = 1.0 + 4.0 / d as f64;
                if (p - pc).abs() < 1e-12 {
                    Criticality::Critical
                } else if p < pc {
                    Criticality::Subcritical
                } else {
                    Criticality::Supercritical
                }
            }
            // r - r² never satisfies d·r·f'(r) = 2 f(r); the stable branch
            // applies throughout its existence window.
            Kind::CubicQuintic => Criticality::Subcritical,
            Kind::Zero => Criticality::Subcritical,
        }
    }

    /// Existence window for ground states Q_ω.
    pub fn omega_window(&self) -> (f64, f64) {
        match self.kind {
            Kind::PurePower { .. } => (0.0, f64::INFINITY),
            Kind::CubicQuintic => (0.0, 3.0 / 16.0),
            Kind::Zero => (0.0, 0.0),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        debug_assert!(!(r < 0.0), "f defined on [0, inf)");
        match self.kind {
            Kind::PurePower { p } => r.powf((p - 1.0) / 2.0),
            Kind::CubicQuintic => r - r * r,
            Kind::Zero => 0.0,
        }
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        debug_assert!(!(r < 0.0));
        match self.kind {
            Kind::PurePower { p } => {
                let e = (p - 3.0) / 2.0;
                if r == 0.0 {
                    // f'(0) = 0 convention when the analytic limit diverges
                    if e == 0.0 {
                        return (p - 1.0) / 2.0;
                    }
                    return 0.0;
                }
                (p - 1.0) / 2.0 * r.powf(e)
            }
            Kind::CubicQuintic => 1.0 - 2.0 * r,
            Kind::Zero => 0.0,
        }
    }

    pub fn f_second(&self, r: f64) -> f64 {
        debug_assert!(!(r < 0.0));
        match self.kind {
            Kind::PurePower { p } => {
                let e = (p - 5.0) / 2.0;
                if r == 0.0 {
                    if e == 0.0 {
                        return (p - 1.0) / 2.0 * (p - 3.0) / 2.0;
                    }
                    return 0.0;
                }
                (p - 1.0) / 2.0 * (p - 3.0) / 2.0 * r.powf(e)
            }
            Kind::CubicQuintic => -2.0,
            Kind::Zero => 0.0,
        }
    }

    /// Primitive F(r) = ∫₀^r f(ρ) dρ.
    pub fn big_f(&self, r: f64) -> f64 {
        debug_assert!(!(r < 0.0));
        match self.kind {
            Kind::PurePower { p } => 2.0 * r.powf((p + 1.0) / 2.0) / (p + 1.0),
            Kind::CubicQuintic => r * r / 2.0 - r * r * r / 3.0,
            Kind::Zero => 0.0,
        }
    }

    /// g(z) = z f(|z|²).
    pub fn g(&self, z: Complex64) -> Complex64 {
        z * self.f(z.norm_sqr())
    }

    /// g with Cartesian partials up to the requested order (1 or 2).
    pub fn g_partials(&self, z: Complex64, order: usize) -> Result<GJet> {
        if order == 0 || order > 2 {
            return Err(Error::InvalidParameter(format!(
                "g_partials order must be 1 or 2, got {order}"
            )));
        }
        let (x, y) = (z.re, z.im);
        let s = z.norm_sqr();
        let f = self.f(s);
        let fp = self.f_prime(s);
        let gx = Complex64::new(f, 0.0) + 2.0 * x * z * fp;
        let gy = Complex64::new(0.0, f) + 2.0 * y * z * fp;
        let mut jet = GJet {
            g: z * f,
            gx,
            gy,
            gxx: Complex64::ZERO,
            gxy: Complex64::ZERO,
            gyy: Complex64::ZERO,
        };
        if order == 2 {
            let fpp = self.f_second(s);
            jet.gxx = (2.0 * z + Complex64::new(4.0 * x, 0.0)) * fp + 4.0 * x * x * z * fpp;
            jet.gxy = Complex64::new(2.0 * y, 2.0 * x) * fp + 4.0 * x * y * z * fpp;
            jet.gyy = (2.0 * z + Complex64::new(0.0, 4.0 * y)) * fp + 4.0 * y * y * z * fpp;
        }
        Ok(jet)
    }

    /// Power exponent, when the model is a pure power.
    pub fn power(&self) -> Option<f64> {
        match self.kind {
            Kind::PurePower { p } => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_cubic_point_values() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        assert_eq!(nl.f(4.0), 4.0);
        assert_eq!(nl.f_prime(4.0), 1.0);
        assert_eq!(nl.big_f(4.0), 8.0);
        assert!(!nl.nonsmooth_origin);
    }

    #[test]
    fn cubic_quintic_point_values() {
        let nl = Nonlinearity::cubic_quintic();
        assert_eq!(nl.f(1.0), 0.0);
        assert_eq!(nl.f_prime(1.0), -1.0);
        assert!((nl.big_f(1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quintic_satisfies_mass_critical_identity_in_1d() {
        // d·r·f'(r) = 2 f(r) characterizes p = 1 + 4/d.
        let nl = Nonlinearity::pure_power(5.0).unwrap();
        let d = 1.0;
        for r in [0.3, 1.0, 2.0, 7.5] {
            let lhs = d * r * nl.f_prime(r);
            let rhs = 2.0 * nl.f(r);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "r={r}");
        }
        assert_eq!(nl.criticality(1), Criticality::Critical);
    }

    #[test]
    fn criticality_tags() {
        assert_eq!(Nonlinearity::pure_power(3.0).unwrap().criticality(1), Criticality::Subcritical);
        assert_eq!(Nonlinearity::pure_power(5.0).unwrap().criticality(1), Criticality::Critical);
        assert_eq!(
            Nonlinearity::pure_power(7.0).unwrap().criticality(1),
            Criticality::Supercritical
        );
        assert_eq!(Nonlinearity::pure_power(3.0).unwrap().criticality(2), Criticality::Critical);
        assert_eq!(Nonlinearity::cubic_quintic().criticality(1), Criticality::Subcritical);
    }

    #[test]
    fn critical_identity_fails_off_critical() {
        for (p, d) in [(3.0, 1usize), (7.0, 1), (5.0, 2)] {
            let nl = Nonlinearity::pure_power(p).unwrap();
            let r = 1.7;
            let lhs = d as f64 * r * nl.f_prime(r);
            let rhs = 2.0 * nl.f(r);
            assert!((lhs - rhs).abs() > 1e-6, "p={p} d={d} should not be critical");
        }
        let nl = Nonlinearity::cubic_quintic();
        for d in [1.0, 2.0] {
            let r = 0.4;
            assert!((d * r * nl.f_prime(r) - 2.0 * nl.f(r)).abs() > 1e-6);
        }
    }

    #[test]
    fn g_at_origin_and_simple_points() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        assert_eq!(nl.g(Complex64::ZERO), Complex64::ZERO);
        let z = Complex64::new(1.0, 1.0);
        let g = nl.g(z);
        assert!((g - Complex64::new(2.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn g_partial_identity_at_real_point() {
        // ∂_x g + i ∂_y g = 2 z² f'(|z|²); at z = 2, p = 3 this equals 8.
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let z = Complex64::new(2.0, 0.0);
        let jet = nl.g_partials(z, 1).unwrap();
        let combo = jet.gx + Complex64::i() * jet.gy;
        assert!((combo - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!((jet.gx - Complex64::new(12.0, 0.0)).norm() < 1e-12);
        assert!((jet.gy - Complex64::new(0.0, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn g_partial_combo_identity_random_points() {
        let models = [
            Nonlinearity::pure_power(3.0).unwrap(),
            Nonlinearity::pure_power(5.0).unwrap(),
            Nonlinearity::cubic_quintic(),
        ];
        let mut state = 0x2545f4914f6cdd1du64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        for nl in models {
            for _ in 0..10 {
                let z = Complex64::new(rnd(), rnd());
                let jet = nl.g_partials(z, 1).unwrap();
                let lhs = jet.gx + Complex64::i() * jet.gy;
                let rhs = 2.0 * z * z * nl.f_prime(z.norm_sqr());
                assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()), "{nl:?} z={z}");
            }
        }
    }

    #[test]
    fn g_partials_match_finite_differences() {
        let h = 1e-5;
        let models = [
            Nonlinearity::pure_power(3.0).unwrap(),
            Nonlinearity::pure_power(5.0).unwrap(),
            Nonlinearity::cubic_quintic(),
        ];
        let mut state = 0x853c49e6748fea9bu64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        for nl in models {
            for _ in 0..20 {
                let z = Complex64::new(rnd(), rnd());
                if z.norm() < 0.2 {
                    continue;
                }
                let jet = nl.g_partials(z, 1).unwrap();
                let fd_x = (nl.g(z + h) - nl.g(z - h)) / (2.0 * h);
                let fd_y = (nl.g(z + Complex64::new(0.0, h)) - nl.g(z - Complex64::new(0.0, h)))
                    / (2.0 * h);
                assert!((jet.gx - fd_x).norm() < 1e-7 * (1.0 + jet.gx.norm()), "{nl:?} z={z}");
                assert!((jet.gy - fd_y).norm() < 1e-7 * (1.0 + jet.gy.norm()), "{nl:?} z={z}");
            }
        }
    }

    #[test]
    fn second_partials_match_finite_differences() {
        let nl = Nonlinearity::pure_power(5.0).unwrap();
        let z = Complex64::new(1.3, -0.7);
        let h = 1e-4;
        let jet = nl.g_partials(z, 2).unwrap();
        let gx = |z: Complex64| nl.g_partials(z, 1).unwrap().gx;
        let gy = |z: Complex64| nl.g_partials(z, 1).unwrap().gy;
        let ex = Complex64::new(h, 0.0);
        let ey = Complex64::new(0.0, h);
        assert!((jet.gxx - (gx(z + ex) - gx(z - ex)) / (2.0 * h)).norm() < 1e-6);
        assert!((jet.gxy - (gx(z + ey) - gx(z - ey)) / (2.0 * h)).norm() < 1e-6);
        assert!((jet.gyy - (gy(z + ey) - gy(z - ey)) / (2.0 * h)).norm() < 1e-6);
    }

    #[test]
    fn primitive_derivative_is_f() {
        let models = [
            Nonlinearity::pure_power(3.0).unwrap(),
            Nonlinearity::pure_power(4.2).unwrap(),
            Nonlinearity::cubic_quintic(),
        ];
        for nl in models {
            for r in [0.1, 0.5, 1.0, 2.5] {
                let h = 1e-6;
                let fd = (nl.big_f(r + h) - nl.big_f(r - h)) / (2.0 * h);
                assert!((fd - nl.f(r)).abs() < 1e-8 * (1.0 + nl.f(r).abs()), "{nl:?} r={r}");
            }
        }
    }

    #[test]
    fn nonsmooth_origin_flag_and_convention() {
        let nl = Nonlinearity::pure_power(2.0).unwrap();
        assert!(nl.nonsmooth_origin);
        assert_eq!(nl.f_prime(0.0), 0.0);
        assert!(Nonlinearity::pure_power(0.5).is_err());
    }

    #[test]
    fn cubic_quintic_existence_window() {
        let nl = Nonlinearity::cubic_quintic();
        let (lo, hi) = nl.omega_window();
        assert_eq!(lo, 0.0);
        assert!((hi - 3.0 / 16.0).abs() < 1e-15);
    }
}
