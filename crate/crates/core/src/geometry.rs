//! The spin rotation matrix and the fluctuation–dissipation spectral
//! weights of the rotating dipole components.
//!
//! Rotation about the axis n by phase φ mixes the transverse dipole
//! components, so their lab-frame correlators sample the response at the
//! shifted frequencies ω± = ω ± Ω in addition to ω itself; the weights
//! below are the brace factors multiplying (1/2)·2πħ·δ(ω + ω′) in the
//! diagonal correlators.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::response::{alpha_coth, PolarizabilityModel};

/// Axis and phase of a rigid rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSpec {
    axis: Vector3<f64>,
    phase: f64,
}

impl RotationSpec {
    /// `axis` must be unit length to 1e-12; `phase` is the angle Ωτ in rad.
    pub fn new(axis: Vector3<f64>, phase: f64) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::invalid(format!("phase must be finite, got {phase}")));
        }
        let norm = axis.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "rotation axis must be unit length (|n| = {norm})"
            )));
        }
        Ok(RotationSpec { axis, phase })
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// A_ik = n_i n_k + (δ_ik − n_i n_k)·cos φ − e_ikl n_l·sin φ.
///
/// Proper rotation: A·Aᵀ = I, det A = 1, and A·n = n.
pub fn rotation_matrix(spec: &RotationSpec) -> Matrix3<f64> {
    let n = spec.axis;
    let (s, c) = spec.phase.sin_cos();
    let k = 1.0 - c;
    Matrix3::new(
        n.x * n.x * k + c,
        n.x * n.y * k - n.z * s,
        n.x * n.z * k + n.y * s,
        n.y * n.x * k + n.z * s,
        n.y * n.y * k + c,
        n.y * n.z * k - n.x * s,
        n.z * n.x * k - n.y * s,
        n.z * n.y * k + n.x * s,
        n.z * n.z * k + c,
    )
}

/// Everything the spectral weights depend on besides the frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FdtContext {
    theta: f64,
    omega_spin: f64,
    t1: f64,
    model: PolarizabilityModel,
}

impl FdtContext {
    /// `theta` ∈ [0, π] between the spin and velocity vectors,
    /// `omega_spin` ≥ 0 (rad/s), `t1` ≥ 0 (K).
    pub fn new(
        theta: f64,
        omega_spin: f64,
        t1: f64,
        model: PolarizabilityModel,
    ) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::invalid(format!("theta must be in [0, pi], got {theta}")));
        }
        if !(omega_spin.is_finite() && omega_spin >= 0.0) {
            return Err(Error::invalid(format!(
                "omega_spin must be finite and non-negative, got {omega_spin}"
            )));
        }
        if !(t1.is_finite() && t1 >= 0.0) {
            return Err(Error::invalid(format!(
                "t1 must be finite and non-negative, got {t1}"
            )));
        }
        Ok(FdtContext {
            theta,
            omega_spin,
            t1,
            model,
        })
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

    pub fn model(&self) -> &PolarizabilityModel {
        &self.model
    }
}

/// Diagonal dipole-correlator component in the comoving frame, with x along
/// the velocity projection and z completing the triad.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleComponent {
    Xx,
    Yy,
    Zz,
}

/// Spectral weight of one diagonal dipole correlator (cm³).
///
/// With A(o) = α''(o)·coth(ħo/2k_BT₁) and ω± = ω ± Ω:
///
/// ```text
/// xx: 2cos²θ·A(ω) + sin²θ·[A(ω⁺) + A(ω⁻)]
/// yy: 2sin²θ·A(ω) + cos²θ·[A(ω⁺) + A(ω⁻)]
/// zz:                      A(ω⁺) + A(ω⁻)
/// ```
///
/// The coth poles are removable against the odd zeros of α'' and are taken
/// exactly, so the result is finite and non-negative for every ω.
pub fn dipole_spectral_weight(
    component: DipoleComponent,
    omega: f64,
    ctx: &FdtContext,
) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::invalid(format!("omega must be finite, got {omega}")));
    }
    let shifted = alpha_coth(&ctx.model, omega + ctx.omega_spin, ctx.t1)
        + alpha_coth(&ctx.model, omega - ctx.omega_spin, ctx.t1);
    Ok(match component {
        DipoleComponent::Zz => shifted,
        DipoleComponent::Xx | DipoleComponent::Yy => {
            let c = ctx.theta.cos();
            let s = ctx.theta.sin();
            let (c2, s2) = (c * c, s * s);
            let unshifted = 2.0 * alpha_coth(&ctx.model, omega, ctx.t1);
            match component {
                DipoleComponent::Xx => c2 * unshifted + s2 * shifted,
                DipoleComponent::Yy => s2 * unshifted + c2 * shifted,
                DipoleComponent::Zz => unreachable!(),
            }
        }
    })
}

/// xx + yy + zz; algebraically independent of θ since cos²θ + sin²θ = 1.
pub fn spectral_weight_trace(omega: f64, ctx: &FdtContext) -> Result<f64> {
    Ok(dipole_spectral_weight(DipoleComponent::Xx, omega, ctx)?
        + dipole_spectral_weight(DipoleComponent::Yy, omega, ctx)?
        + dipole_spectral_weight(DipoleComponent::Zz, omega, ctx)?)
}
