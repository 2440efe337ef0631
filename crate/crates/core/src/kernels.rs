//! Pure integrand evaluators for the force, heating, and net-intensity
//! integrals, plus the angular weight that shapes the emitted radiation.
//!
//! All three integrals share one braced structure:
//!
//! ```text
//! { B_u(β,x,θ)·α''(y_u)·[coth(ħω/2k_BT₂) − coth(ħy_u/2k_BT₁)]
//! + B_s(β,x,θ)·α''(y_s)·[coth(ħω/2k_BT₂) − coth(ħy_s/2k_BT₁)] }
//! ```
//!
//! with y_u = γω(1+βx) the Doppler-shifted frequency and y_s = y_u + Ω its
//! rotation-shifted partner. They differ only in prefactor and the measure
//! factor (x, 1+βx, or 1), so the brace is one shared code path — divergence
//! between three hand-copied versions is the main bug risk here.

use crate::constants::{C, HBAR, K_B};
use crate::dynamics::{Environment, ParticleState};
use crate::error::{Error, Result};
use crate::response::ParticleResponse;
use crate::thermal::{diff_parts, planck_parts, xcoth};

/// Kinematic and thermodynamic inputs of the radiation integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicParams {
    beta: f64,
    gamma: f64,
    theta: f64,
    cos2: f64,
    sin2: f64,
    omega_spin: f64,
    t1: f64,
    t2: f64,
    response: ParticleResponse,
}

impl KinematicParams {
    /// `beta` ∈ [0, 1), `omega_spin` ≥ 0 rad/s, temperatures in K (≥ 0),
    /// `theta` in rad between the spin and velocity vectors.
    pub fn new(
        beta: f64,
        theta: f64,
        omega_spin: f64,
        t1: f64,
        t2: f64,
        response: ParticleResponse,
    ) -> Result<Self> {
        if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
            return Err(Error::invalid(format!("beta must be in [0, 1), got {beta}")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid(format!("theta must be finite, got {theta}")));
        }
        if !(omega_spin.is_finite() && omega_spin >= 0.0) {
            return Err(Error::invalid(format!(
                "omega_spin must be finite and non-negative, got {omega_spin}"
            )));
        }
        for (name, t) in [("t1", t1), ("t2", t2)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {t}"
                )));
            }
        }
        let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
        let (s, c) = theta.sin_cos();
        Ok(KinematicParams {
            beta,
            gamma,
            theta,
            cos2: c * c,
            sin2: s * s,
            omega_spin,
            t1,
            t2,
            response,
        })
    }

    pub fn from_state(
        state: &ParticleState,
        env: &Environment,
        response: ParticleResponse,
    ) -> Result<Self> {
        Self::new(
            state.beta,
            state.theta,
            state.omega_spin,
            state.t1,
            env.t2,
            response,
        )
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Lorentz factor (1 − β²)^(−1/2), derived at construction.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn omega_spin(&self) -> f64 {
        self.omega_spin
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn response(&self) -> &ParticleResponse {
        &self.response
    }

    /// α''(y)·[coth(ħω/2k_BT₂) − coth(ħy/2k_BT₁)] for ω ≠ 0.
    ///
    /// Finite everywhere: near the T₁ coth pole at y = 0 the product is
    /// rewritten through α''(y)/y and t·coth(t), both analytic, so the pole
    /// never surfaces as a float infinity. The two branches agree to
    /// rounding at the |t| = 0.05 seam.
    fn alpha_diff(&self, omega: f64, y: f64) -> f64 {
        if self.t1 > 0.0 {
            let t1 = HBAR * y / (2.0 * K_B * self.t1);
            if t1.abs() < 0.05 {
                let over = self.response.eval_over_omega(y);
                let second = self.t1 * xcoth(t1);
                if self.t2 == 0.0 {
                    let s = if omega > 0.0 { 1.0 } else { -1.0 };
                    return over * (y * s - (2.0 * K_B / HBAR) * second);
                }
                let t2 = HBAR * omega / (2.0 * K_B * self.t2);
                let u = HBAR * y / (2.0 * K_B * self.t2);
                // (u/t2)·xcoth(t2) = u·coth(t2); the ratio form makes the
                // equilibrium case (y = ω, T₁ = T₂) cancel exactly
                let first = self.t2 * (u / t2) * xcoth(t2);
                return over * (2.0 * K_B / HBAR) * (first - second);
            }
        }
        let p2 = planck_parts(omega, self.t2).expect("callers exclude omega = 0");
        let p1 = planck_parts(y, self.t1).expect("T1 = 0 or argument away from pole");
        self.response.eval(y) * diff_parts(p2, p1)
    }
}

fn brackets_from_trig(beta: f64, x: f64, cos2: f64, sin2: f64) -> (f64, f64) {
    let a = (1.0 - beta * beta) * (1.0 - x * x);
    // = (1+βx)² + (β+x)², hence non-negative on the whole domain
    let b = (1.0 + beta * beta) * (1.0 + x * x) + 4.0 * beta * x;
    (
        a * cos2 + b * (sin2 / 2.0),
        a * sin2 + b * ((1.0 + cos2) / 2.0),
    )
}

/// Coefficient of the unshifted α''(γω(1+βx)) term:
/// (1−β²)(1−x²)cos²θ + [(1+β²)(1+x²)+4βx]·sin²θ/2.
pub fn bracket_unshifted(beta: f64, x: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    brackets_from_trig(beta, x, c * c, s * s).0
}

/// Coefficient of the rotation-shifted α''(γω(1+βx)+Ω) term:
/// (1−β²)(1−x²)sin²θ + [(1+β²)(1+x²)+4βx]·(1+cos²θ)/2.
///
/// This is also the angular weight f(x, θ) of the zero-temperature
/// emission pattern — the same function, not a copy.
pub fn bracket_shifted(beta: f64, x: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    brackets_from_trig(beta, x, c * c, s * s).1
}

/// The zero-temperature angular emission weight f(x, θ).
pub fn angular_weight(beta: f64, x: f64, theta: f64) -> f64 {
    bracket_shifted(beta, x, theta)
}

/// The shared braced factor at (ω, x); requires ω ≠ 0 (the integrand ops
/// below handle ω = 0 themselves, where the ω⁴ prefactor wins as ω³).
pub(crate) fn brace(p: &KinematicParams, omega: f64, x: f64) -> f64 {
    let (bu, bs) = brackets_from_trig(p.beta, x, p.cos2, p.sin2);
    let yu = p.gamma * omega * (1.0 + p.beta * x);
    let ys = yu + p.omega_spin;
    bu * p.alpha_diff(omega, yu) + bs * p.alpha_diff(omega, ys)
}

/// Tangential-force spectral density (dyn per rad/s per unit x):
/// −(ħγ/4πc⁴)·ω⁴·x·{brace}.
pub fn force_integrand(omega: f64, x: f64, p: &KinematicParams) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    debug_assert!(omega.is_finite());
    if omega == 0.0 {
        return 0.0;
    }
    let pref = -HBAR * p.gamma / (4.0 * std::f64::consts::PI * C.powi(4));
    pref * omega.powi(4) * x * brace(p, omega, x)
}

/// Heating-rate spectral density (erg/s per rad/s per unit x):
/// +(ħγ/4πc³)·ω⁴·(1+βx)·{brace}.
pub fn heat_integrand(omega: f64, x: f64, p: &KinematicParams) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    debug_assert!(omega.is_finite());
    if omega == 0.0 {
        return 0.0;
    }
    let pref = HBAR * p.gamma / (4.0 * std::f64::consts::PI * C.powi(3));
    pref * omega.powi(4) * (1.0 + p.beta * x) * brace(p, omega, x)
}

/// Net radiated intensity spectral density (erg/s per rad/s per unit x),
/// assembled as the energy-conservation combination
/// −(heating + V·force) so the balance holds pointwise by construction.
pub fn intensity_integrand(omega: f64, x: f64, p: &KinematicParams) -> f64 {
    -(heat_integrand(omega, x, p) + C * p.beta * force_integrand(omega, x, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::PolarizabilityModel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lorentz_response() -> ParticleResponse {
        ParticleResponse::electric_only(PolarizabilityModel::Lorentz {
            alpha0: 1e-18,
            omega0: 2e14,
            gamma_d: 2e13,
        })
    }

    fn params(beta: f64, theta: f64, omega_spin: f64, t1: f64, t2: f64) -> KinematicParams {
        KinematicParams::new(beta, theta, omega_spin, t1, t2, lorentz_response()).unwrap()
    }

    #[test]
    fn bracket_spot_values() {
        assert_relative_eq!(bracket_unshifted(0.0, 0.0, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            bracket_unshifted(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(bracket_shifted(0.0, 0.0, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            bracket_shifted(0.0, 0.0, std::f64::consts::FRAC_PI_2),
            1.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn bracket_suppression_near_light_speed() {
        // At x = −1 the polynomial factor becomes 2(1−β)².
        let beta = 0.99;
        let poly = (1.0 + beta * beta) * 2.0 - 4.0 * beta;
        assert_relative_eq!(poly, 2.0 * (1.0 - beta) * (1.0 - beta), max_relative = 1e-10);
        let b = bracket_shifted(beta, -1.0, 0.3);
        assert!(b > 0.0 && b < 1e-3, "expected strong suppression, got {b}");
    }

    #[test]
    fn shifted_bracket_is_the_angular_weight() {
        for &(beta, x, theta) in &[(0.0, 0.3, 0.2), (0.5, -0.7, 1.1), (0.9, 0.99, 2.9)] {
            assert_eq!(
                bracket_shifted(beta, x, theta),
                angular_weight(beta, x, theta)
            );
        }
    }

    #[test]
    fn shifted_bracket_integrates_to_eight_thirds_at_rest() {
        // Simpson with 2000 intervals as the independent check.
        for &theta in &[0.0, 0.4, std::f64::consts::FRAC_PI_2, 2.0] {
            let n = 2000;
            let h = 2.0 / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let x = -1.0 + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s += w * bracket_shifted(0.0, x, theta);
            }
            s *= h / 3.0;
            assert_relative_eq!(s, 8.0 / 3.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn bracket_sum_is_two_at_rest() {
        for i in 0..100 {
            for j in 0..100 {
                let x = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / 100.0;
                let sum = bracket_unshifted(0.0, x, theta) + bracket_shifted(0.0, x, theta);
                assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn brackets_nonnegative(
            beta in 0.0..0.999f64,
            x in -1.0..1.0f64,
            theta in 0.0..std::f64::consts::PI,
        ) {
            prop_assert!(bracket_unshifted(beta, x, theta) >= 0.0);
            prop_assert!(bracket_shifted(beta, x, theta) >= 0.0);
        }

        #[test]
        fn brackets_symmetric_under_theta_reflection(
            beta in 0.0..0.999f64,
            x in -1.0..1.0f64,
            theta in 0.0..std::f64::consts::PI,
        ) {
            let mirrored = std::f64::consts::PI - theta;
            let u = bracket_unshifted(beta, x, theta);
            let um = bracket_unshifted(beta, x, mirrored);
            prop_assert!((u - um).abs() <= 1e-14 * (1.0 + u.abs()));
            let s = bracket_shifted(beta, x, theta);
            let sm = bracket_shifted(beta, x, mirrored);
            prop_assert!((s - sm).abs() <= 1e-14 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn force_integrand_odd_in_x_at_rest() {
        // β = 0 makes the α'' argument x-independent, so the x factor is
        // the only odd piece and the integrand is exactly odd.
        let p = params(0.0, 0.7, 5e12, 150.0, 450.0);
        for &omega in &[1e12, -3e13, 7.7e13] {
            for &x in &[0.1, 0.5, 0.93] {
                assert_eq!(
                    force_integrand(omega, x, &p),
                    -force_integrand(omega, -x, &p)
                );
            }
        }
    }

    #[test]
    fn equilibrium_integrands_vanish_identically() {
        let p = params(0.0, 0.4, 0.0, 300.0, 300.0);
        for k in 0..200 {
            let omega = -2e14 + 2e12 * k as f64 + 3.7e9;
            for &x in &[-0.9, -0.2, 0.0, 0.55, 1.0] {
                assert_eq!(force_integrand(omega, x, &p), 0.0);
                assert_eq!(heat_integrand(omega, x, &p), 0.0);
                assert_eq!(intensity_integrand(omega, x, &p), 0.0);
            }
        }
    }

    #[test]
    fn integrands_zero_at_omega_zero() {
        let p = params(0.3, 0.9, 1e12, 200.0, 350.0);
        assert_eq!(force_integrand(0.0, 0.5, &p), 0.0);
        assert_eq!(heat_integrand(0.0, 0.5, &p), 0.0);
        assert_eq!(intensity_integrand(0.0, 0.5, &p), 0.0);
    }

    #[test]
    fn integrands_finite_near_shifted_pole() {
        // ω where the shifted argument y_s crosses zero: α''(0)·coth(pole)
        // must resolve to the finite slope limit, not NaN.
        let p = params(0.4, 1.0, 1e13, 250.0, 0.0);
        let x = 0.2;
        let pole_omega = -p.omega_spin() / (p.gamma() * (1.0 + p.beta() * x));
        for &w in &[
            pole_omega,
            pole_omega * (1.0 + 1e-12),
            pole_omega * (1.0 - 1e-12),
        ] {
            let f = force_integrand(w, x, &p);
            let q = heat_integrand(w, x, &p);
            let i = intensity_integrand(w, x, &p);
            assert!(f.is_finite() && q.is_finite() && i.is_finite());
        }
        // and it is actually continuous across the pole
        let a = heat_integrand(pole_omega * (1.0 + 1e-9), x, &p);
        let b = heat_integrand(pole_omega * (1.0 - 1e-9), x, &p);
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn heating_positive_toward_hotter_background() {
        let p = params(0.0, 0.0, 0.0, 100.0, 400.0);
        for k in 1..100 {
            let omega = 1e12 * k as f64;
            for &x in &[-0.5, 0.0, 0.5] {
                assert!(heat_integrand(omega, x, &p) >= 0.0);
            }
        }
    }

    #[test]
    fn zero_t_support_is_the_negative_shifted_band() {
        let p = params(0.3, 0.5, 1e13, 0.0, 0.0);
        let g = p.gamma();
        let x = 0.1;
        let lo = -p.omega_spin() / (g * (1.0 + p.beta() * x));
        // inside the band: nonzero
        let mid = 0.5 * lo;
        assert!(heat_integrand(mid, x, &p) != 0.0);
        // outside on both sides: exactly zero
        assert_eq!(heat_integrand(lo * 1.01, x, &p), 0.0);
        assert_eq!(heat_integrand(1.0e11, x, &p), 0.0);
        // intensity is nonnegative there for a passive model
        assert!(intensity_integrand(mid, x, &p) >= 0.0);
    }

    #[test]
    fn intensity_is_the_exact_balance_combination() {
        let p = params(0.6, 1.2, 8e12, 150.0, 500.0);
        for k in 0..50 {
            let omega = -5e14 + 2e13 * k as f64 + 1.1e9;
            for &x in &[-0.8, 0.0, 0.3] {
                let lhs = intensity_integrand(omega, x, &p);
                let rhs = -(heat_integrand(omega, x, &p)
                    + C * p.beta() * force_integrand(omega, x, &p));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn gamma_consistent_with_beta() {
        for &beta in &[0.0, 0.3, 0.9, 0.999] {
            let p = params(beta, 0.0, 0.0, 0.0, 1.0);
            let expect = 1.0 / (1.0 - beta * beta).sqrt();
            assert_relative_eq!(p.gamma(), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn constructor_rejects_bad_input() {
        let r = lorentz_response();
        assert!(KinematicParams::new(1.0, 0.0, 0.0, 0.0, 0.0, r.clone()).is_err());
        assert!(KinematicParams::new(-0.1, 0.0, 0.0, 0.0, 0.0, r.clone()).is_err());
        assert!(KinematicParams::new(0.5, f64::NAN, 0.0, 0.0, 0.0, r.clone()).is_err());
        assert!(KinematicParams::new(0.5, 0.0, -1.0, 0.0, 0.0, r.clone()).is_err());
        assert!(KinematicParams::new(0.5, 0.0, 0.0, -1.0, 0.0, r.clone()).is_err());
        assert!(KinematicParams::new(0.5, 0.0, 0.0, 0.0, f64::INFINITY, r).is_err());
    }
}
