//! Thermal occupation factors: coth(ħω/2k_BT) evaluated without
//! catastrophic cancellation, with the exact T = 0 limit coth → sign(ω).
//!
//! Every integrand in this crate carries these factors, and the physics
//! lives in their *differences*, which can be 26 orders of magnitude below
//! either term. The working representation is therefore
//!
//! ```text
//! coth(x) = sign(x) · (1 + n),   n = 2/(e^{2|x|} − 1)
//! ```
//!
//! so the leading 1's cancel exactly in same-sign differences.

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};

/// Argument pair of a thermal coth factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalArg {
    omega: f64,
    temperature: f64,
}

impl ThermalArg {
    /// `omega` in rad/s (any sign), `temperature` in K (≥ 0).
    pub fn new(omega: f64, temperature: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::invalid(format!("omega must be finite, got {omega}")));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be finite and non-negative, got {temperature}"
            )));
        }
        Ok(ThermalArg { omega, temperature })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// Value of a coth factor, or the ω = 0, T > 0 pole.
///
/// The pole is an explicit marker rather than an IEEE infinity: integrand
/// assembly has to cancel it against the ω⁴ prefactor analytically, and a
/// marker makes forgetting that a loud failure instead of silent NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CothValue {
    Finite(f64),
    Pole,
}

impl CothValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            CothValue::Finite(v) => Some(v),
            CothValue::Pole => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, CothValue::Pole)
    }
}

/// Sign/excess decomposition of coth: value = sign·(1 + excess).
///
/// `sign ∈ {−1, 0, +1}` (0 only for ω = 0 at T = 0) and `excess ≥ 0` is
/// twice the Bose occupation of the mode.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CothParts {
    pub sign: f64,
    pub excess: f64,
}

impl CothParts {
    pub fn value(self) -> f64 {
        self.sign * (1.0 + self.excess)
    }
}

fn sign3(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// coth of a dimensionless argument, decomposed; `None` marks the x = 0 pole.
pub(crate) fn coth_parts(x: f64) -> Option<CothParts> {
    if x == 0.0 {
        return None;
    }
    Some(CothParts {
        sign: sign3(x),
        excess: 2.0 / (2.0 * x.abs()).exp_m1(),
    })
}

/// Decomposed coth(ħω/2k_BT); `None` marks the (ω = 0, T > 0) pole.
/// T = 0 is the exact limit sign(ω), not a small-T approximation.
pub(crate) fn planck_parts(omega: f64, temperature: f64) -> Option<CothParts> {
    if temperature == 0.0 {
        return Some(CothParts {
            sign: sign3(omega),
            excess: 0.0,
        });
    }
    coth_parts(HBAR * omega / (2.0 * K_B * temperature))
}

/// Difference of two decomposed coth values, cancellation-free: the unit
/// parts cancel exactly for same-sign arguments and add exactly otherwise.
pub(crate) fn diff_parts(a: CothParts, b: CothParts) -> f64 {
    if a.sign == b.sign {
        a.sign * (a.excess - b.excess)
    } else {
        (a.sign - b.sign) + (a.sign * a.excess - b.sign * b.excess)
    }
}

/// t·coth(t), analytic through t = 0 (value 1 there). Used to remove the
/// coth pole against an explicit factor of its argument.
pub(crate) fn xcoth(t: f64) -> f64 {
    let at = t.abs();
    if at < 1e-4 {
        // t·coth(t) = 1 + t²/3 − t⁴/45 + O(t⁶)
        let t2 = t * t;
        1.0 + t2 / 3.0 - t2 * t2 / 45.0
    } else {
        at * (1.0 + 2.0 / (2.0 * at).exp_m1())
    }
}

/// coth(ħω/2k_BT). Returns [`CothValue::Pole`] at (ω = 0, T > 0); at T = 0
/// the value is sign(ω) exactly.
pub fn coth_planck(arg: ThermalArg) -> CothValue {
    match planck_parts(arg.omega, arg.temperature) {
        Some(p) => CothValue::Finite(p.value()),
        None => CothValue::Pole,
    }
}

/// coth_planck(a) − coth_planck(b) without catastrophic cancellation.
/// A pole in either argument propagates as [`CothValue::Pole`].
pub fn coth_diff(a: ThermalArg, b: ThermalArg) -> CothValue {
    match (
        planck_parts(a.omega, a.temperature),
        planck_parts(b.omega, b.temperature),
    ) {
        (Some(pa), Some(pb)) => CothValue::Finite(diff_parts(pa, pb)),
        _ => CothValue::Pole,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn arg(omega: f64, t: f64) -> ThermalArg {
        ThermalArg::new(omega, t).unwrap()
    }

    /// ω such that ħω/2k_BT equals `x` at temperature `t`.
    fn omega_for(x: f64, t: f64) -> f64 {
        2.0 * K_B * t * x / HBAR
    }

    #[test]
    fn zero_temperature_is_sign() {
        assert_eq!(coth_planck(arg(3.0e12, 0.0)), CothValue::Finite(1.0));
        assert_eq!(coth_planck(arg(-5.0e9, 0.0)), CothValue::Finite(-1.0));
        assert_eq!(coth_planck(arg(0.0, 0.0)), CothValue::Finite(0.0));
    }

    #[test]
    fn pole_is_marked() {
        assert!(coth_planck(arg(0.0, 300.0)).is_pole());
        assert!(coth_diff(arg(0.0, 300.0), arg(1.0, 300.0)).is_pole());
        assert!(coth_diff(arg(1.0, 300.0), arg(0.0, 300.0)).is_pole());
    }

    #[test]
    fn coth_of_one() {
        // mpmath (dps=40): coth(1) = 1.3130352854993313036...
        let t = 300.0;
        let v = coth_planck(arg(omega_for(1.0, t), t)).finite().unwrap();
        assert_relative_eq!(v, 1.313_035_285_499_331_3, max_relative = 1e-14);
    }

    #[test]
    fn large_argument_excess_is_representable() {
        // coth(40) = 1 + 2e⁻⁸⁰; the excess survives in the decomposition.
        let t = 10.0;
        let p = planck_parts(omega_for(40.0, t), t).unwrap();
        assert_eq!(p.value(), 1.0); // collapses to 1 in plain f64
        // mpmath: coth(40) − 1 = 3.60970208319783021e-35
        assert_relative_eq!(p.excess, 3.609_702_083_197_830_2e-35, max_relative = 1e-12);
    }

    #[test]
    fn diff_of_equal_args_is_exactly_zero() {
        let a = arg(7.7e13, 412.0);
        assert_eq!(coth_diff(a, a), CothValue::Finite(0.0));
    }

    #[test]
    fn diff_of_opposite_signs_at_zero_t() {
        assert_eq!(
            coth_diff(arg(2.0, 0.0), arg(-3.0, 0.0)),
            CothValue::Finite(2.0)
        );
    }

    #[test]
    fn diff_resolves_tiny_tail_difference() {
        // x_a = 30, x_b = 31: naive subtraction gives exactly 0;
        // the expm1 form gives 2(e⁻⁶⁰ − e⁻⁶²) = 1.5142891796925079e-26
        // (mpmath, dps=40).
        let t = 100.0;
        let d = coth_diff(arg(omega_for(30.0, t), t), arg(omega_for(31.0, t), t))
            .finite()
            .unwrap();
        assert!(d > 0.0);
        assert_relative_eq!(d, 1.514_289_179_692_507_9e-26, max_relative = 1e-12);
    }

    #[test]
    fn diff_matches_naive_when_naive_is_healthy() {
        let t1 = 250.0;
        let t2 = 700.0;
        for &(wa, wb) in &[
            (3.0e13, 9.0e13),
            (-2.0e13, 4.0e14),
            (5.0e12, -5.0e12),
            (1.0e14, 3.0e13),
        ] {
            let robust = coth_diff(arg(wa, t2), arg(wb, t1)).finite().unwrap();
            let naive = coth_planck(arg(wa, t2)).finite().unwrap()
                - coth_planck(arg(wb, t1)).finite().unwrap();
            if naive.abs() > 1e-6 {
                assert_relative_eq!(robust, naive, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn oddness_in_omega() {
        for &t in &[0.0, 1.0, 300.0] {
            for &w in &[1.0e10, 3.3e13, 8.0e15] {
                let plus = coth_planck(arg(w, t)).finite().unwrap();
                let minus = coth_planck(arg(-w, t)).finite().unwrap();
                assert_eq!(plus, -minus);
            }
        }
    }

    #[test]
    fn monotone_toward_one_as_t_drops() {
        let w = 5.0e13;
        let mut last = f64::INFINITY;
        for &t in &[3000.0, 300.0, 30.0, 3.0, 0.0] {
            let v = coth_planck(arg(w, t)).finite().unwrap();
            assert!(v >= 1.0);
            assert!(v <= last);
            last = v;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn xcoth_is_analytic_at_zero() {
        assert_eq!(xcoth(0.0), 1.0);
        assert_relative_eq!(xcoth(1e-5), 1.0 + 1e-10 / 3.0, max_relative = 1e-15);
        // continuity across the series/direct switch
        assert_relative_eq!(xcoth(1e-4 * 0.999), xcoth(1e-4 * 1.001), max_relative = 1e-10);
        assert_relative_eq!(xcoth(2.0), 2.0 / 2.0_f64.tanh(), max_relative = 1e-14);
        assert_eq!(xcoth(-3.0), xcoth(3.0));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(ThermalArg::new(f64::NAN, 1.0).is_err());
        assert!(ThermalArg::new(f64::INFINITY, 1.0).is_err());
        assert!(ThermalArg::new(1.0, -1.0).is_err());
        assert!(ThermalArg::new(1.0, f64::NAN).is_err());
    }
}
