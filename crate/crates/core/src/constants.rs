//! Physical constants (CGS-Gaussian) and the reference scales used to keep
//! all kernel integrals O(1) regardless of the tiny CGS magnitudes involved
//! (the bare intensity prefactor ħ/c³ is ~4e-59 erg·s⁴/cm³).

use crate::dynamics::{Environment, ParticleState};
use crate::error::{Error, Result};

/// Reduced Planck constant (erg·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-27;
/// Boltzmann constant (erg/K), CODATA 2018.
pub const K_B: f64 = 1.380_649e-16;
/// Speed of light in vacuum (cm/s), exact.
pub const C: f64 = 2.997_924_58e10;

/// The three constants every formula here depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    k_b: f64,
    c: f64,
}

impl PhysicalConstants {
    /// CODATA values in CGS-Gaussian units.
    pub const fn cgs() -> Self {
        PhysicalConstants {
            hbar: HBAR,
            k_b: K_B,
            c: C,
        }
    }

    pub fn new(hbar: f64, k_b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("k_b", k_b), ("c", c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(PhysicalConstants { hbar, k_b, c })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::cgs()
    }
}

/// Reference scales for nondimensionalization.
///
/// Frequencies are measured in units of `omega_ref`, polarizabilities in
/// units of `alpha_ref`; the derived references convert dimensionless
/// integrals back to CGS:
///
/// ```text
/// intensity_ref = ħ·ω_ref⁵·α_ref/c³   (erg/s)
/// force_ref     = intensity_ref/c      (dyn)
/// time_ref      = 1/ω_ref              (s)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    omega_ref: f64,
    alpha_ref: f64,
    intensity_ref: f64,
    force_ref: f64,
    time_ref: f64,
}

/// Build a [`UnitScale`] from a reference frequency (rad/s) and a reference
/// polarizability volume (cm³).
pub fn make_scale(omega_ref: f64, alpha_ref: f64) -> Result<UnitScale> {
    if !(omega_ref.is_finite() && omega_ref > 0.0) {
        return Err(Error::invalid(format!(
            "omega_ref must be positive and finite, got {omega_ref}"
        )));
    }
    if !(alpha_ref.is_finite() && alpha_ref > 0.0) {
        return Err(Error::invalid(format!(
            "alpha_ref must be positive and finite, got {alpha_ref}"
        )));
    }
    let intensity_ref = HBAR * omega_ref.powi(5) * alpha_ref / C.powi(3);
    Ok(UnitScale {
        omega_ref,
        alpha_ref,
        intensity_ref,
        force_ref: intensity_ref / C,
        time_ref: 1.0 / omega_ref,
    })
}

impl UnitScale {
    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    pub fn alpha_ref(&self) -> f64 {
        self.alpha_ref
    }

    pub fn intensity_ref(&self) -> f64 {
        self.intensity_ref
    }

    pub fn force_ref(&self) -> f64 {
        self.force_ref
    }

    pub fn time_ref(&self) -> f64 {
        self.time_ref
    }

    pub fn omega_to_dimensionless(&self, omega: f64) -> f64 {
        omega / self.omega_ref
    }

    pub fn omega_to_physical(&self, w: f64) -> f64 {
        w * self.omega_ref
    }

    pub fn force_to_dimensionless(&self, f: f64) -> f64 {
        f / self.force_ref
    }

    pub fn force_to_physical(&self, f: f64) -> f64 {
        f * self.force_ref
    }

    pub fn power_to_dimensionless(&self, p: f64) -> f64 {
        p / self.intensity_ref
    }

    pub fn power_to_physical(&self, p: f64) -> f64 {
        p * self.intensity_ref
    }
}

/// Default margin for the point-dipole validity conditions: a ratio that is
/// supposed to be "much less than one" triggers a warning at 0.1.
pub const REGIME_MARGIN: f64 = 0.1;

/// One violated validity condition, with the ratio that violated it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeWarning {
    /// Which condition, e.g. `"Omega*R/c"`.
    pub condition: String,
    /// Computed value of the ratio that should be small.
    pub ratio: f64,
    /// Threshold it was compared against.
    pub threshold: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {:.3e} exceeds {:.1e}",
            self.condition, self.ratio, self.threshold
        )
    }
}

/// Check the point-dipole validity conditions ΩR/c ≪ 1 and
/// R ≪ min(2πħc/k_BT₁, 2πħc/k_BT₂) with the default margin.
pub fn validate_regime(state: &ParticleState, env: &Environment) -> Vec<RegimeWarning> {
    validate_regime_with_margin(state, env, REGIME_MARGIN)
}

/// Same as [`validate_regime`] with a caller-chosen margin.
pub fn validate_regime_with_margin(
    state: &ParticleState,
    env: &Environment,
    margin: f64,
) -> Vec<RegimeWarning> {
    let mut warnings = Vec::new();

    let spin_ratio = state.omega_spin * state.radius / C;
    if spin_ratio >= margin {
        warnings.push(RegimeWarning {
            condition: "Omega*R/c".to_string(),
            ratio: spin_ratio,
            threshold: margin,
        });
    }

    // Thermal wavelength bound; a zero temperature puts no bound at all.
    let t_max = state.t1.max(env.t2);
    if t_max > 0.0 {
        let lambda_min = 2.0 * std::f64::consts::PI * HBAR * C / (K_B * t_max);
        let ratio = state.radius / lambda_min;
        if ratio >= margin {
            warnings.push(RegimeWarning {
                condition: "R/min(2*pi*hbar*c/k_B*T)".to_string(),
                ratio,
                threshold: margin,
            });
        }
    }

    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_inputs_give_hbar_over_c_cubed() {
        let s = make_scale(1.0, 1.0).unwrap();
        assert_relative_eq!(s.intensity_ref(), HBAR / C.powi(3), max_relative = 1e-15);
        assert_relative_eq!(s.force_ref(), HBAR / C.powi(4), max_relative = 1e-15);
        assert_eq!(s.time_ref(), 1.0);
    }

    #[test]
    fn derived_intensity_reference() {
        // Direct arithmetic: ħ·(1e12)⁵·1e-18/c³.
        let s = make_scale(1e12, 1e-18).unwrap();
        let expected = HBAR * 1e60 * 1e-18 / (C * C * C);
        assert_relative_eq!(s.intensity_ref(), expected, max_relative = 1e-14);
    }

    #[test]
    fn conversions_round_trip() {
        let s = make_scale(3.7e13, 2.2e-19).unwrap();
        for q in [1.0e-9, 4.2, 8.8e17] {
            assert_relative_eq!(
                s.force_to_physical(s.force_to_dimensionless(q)),
                q,
                max_relative = 1e-14
            );
            assert_relative_eq!(
                s.power_to_physical(s.power_to_dimensionless(q)),
                q,
                max_relative = 1e-14
            );
            assert_relative_eq!(
                s.omega_to_physical(s.omega_to_dimensionless(q)),
                q,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn make_scale_rejects_bad_input() {
        assert!(make_scale(0.0, 1.0).is_err());
        assert!(make_scale(1.0, -1.0).is_err());
        assert!(make_scale(f64::NAN, 1.0).is_err());
        assert!(make_scale(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn constants_check() {
        let k = PhysicalConstants::cgs();
        assert!(k.hbar() > 0.0 && k.k_b() > 0.0 && k.c() > 0.0);
        assert!(PhysicalConstants::new(-1.0, 1.0, 1.0).is_err());
    }

    fn state(radius: f64, omega_spin: f64, t1: f64) -> ParticleState {
        ParticleState::new(1e-14, 0.0, t1, omega_spin, 0.0, radius).unwrap()
    }

    #[test]
    fn regime_quiet_for_small_particle() {
        // Omega*R/c ≈ 3.3e-9 and R well under the 300 K thermal wavelength.
        let w = validate_regime(
            &state(1e-7, 1e9, 300.0),
            &Environment::new(300.0).unwrap(),
        );
        assert!(w.is_empty(), "{w:?}");
    }

    #[test]
    fn regime_flags_fast_spin() {
        let w = validate_regime(&state(1.0, 1e11, 0.0), &Environment::new(0.0).unwrap());
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].condition, "Omega*R/c");
        assert_relative_eq!(w[0].ratio, 1e11 / C, max_relative = 1e-12);
        assert!(w[0].ratio > 3.3 && w[0].ratio < 3.4);
    }

    #[test]
    fn regime_vacuous_at_zero_everything() {
        let w = validate_regime(&state(1e-7, 0.0, 0.0), &Environment::new(0.0).unwrap());
        assert!(w.is_empty());
    }
}
