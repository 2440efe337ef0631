//! Polarizability models: the imaginary (dissipative) part α''(ω) of the
//! particle's electric and magnetic response.
//!
//! Only α'' is modeled — the real part never enters the radiation integrals.
//! Evaluators apply the causal odd extension α''(−ω) = −α''(ω) themselves,
//! so models are specified for ω ≥ 0 only.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::thermal::{coth_parts, xcoth};

/// Frequency-dependent imaginary polarizability α''(ω), in cm³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolarizabilityModel {
    /// Damped oscillator:
    /// α''(ω) = α₀·ω₀²·γ·ω / [(ω₀² − ω²)² + γ²ω²].
    Lorentz {
        #[serde(rename = "alpha0_cm3")]
        alpha0: f64,
        #[serde(rename = "omega0_rad_s")]
        omega0: f64,
        #[serde(rename = "gamma_rad_s")]
        gamma_d: f64,
    },
    /// α''(ω) = κ·ω·|ω|^(n−1); n = 1 is the ohmic case α'' = κω.
    PowerLaw {
        #[serde(rename = "kappa_cm3_s")]
        kappa: f64,
        exponent: u32,
    },
    /// Linear interpolation on an ascending positive frequency grid;
    /// zero outside the grid (extrapolated tails would silently dominate
    /// the ω⁴-weighted integrals).
    Tabulated {
        #[serde(rename = "omega_rad_s")]
        grid: Vec<f64>,
        #[serde(rename = "alpha_im_cm3")]
        values: Vec<f64>,
    },
}

impl PolarizabilityModel {
    /// The identically-zero response, for channels that do not dissipate.
    pub fn zero() -> Self {
        PolarizabilityModel::PowerLaw {
            kappa: 0.0,
            exponent: 1,
        }
    }

    /// Load a tabulated model from a two-column CSV
    /// `omega_rad_per_s, alpha_im_cm3` (ascending; `#` comments allowed).
    pub fn tabulated_from_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let parse = |s: Option<&str>, what: &str| -> Result<f64> {
                s.ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("missing {what} column"),
                })?
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("bad {what}: {e}"),
                })
            };
            grid.push(parse(cols.next(), "omega_rad_per_s")?);
            values.push(parse(cols.next(), "alpha_im_cm3")?);
            if cols.next().is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected exactly two columns".to_string(),
                });
            }
        }
        if grid.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: "no data rows".to_string(),
            });
        }
        Ok(PolarizabilityModel::Tabulated { grid, values })
    }

    /// Characteristic frequency of the model, if it has one; feeds the
    /// integration cutoff.
    pub fn frequency_scale(&self) -> Option<f64> {
        match self {
            PolarizabilityModel::Lorentz { omega0, gamma_d, .. } => Some(omega0 + 5.0 * gamma_d),
            PolarizabilityModel::PowerLaw { .. } => None,
            PolarizabilityModel::Tabulated { grid, .. } => grid.last().copied(),
        }
    }

    /// Frequencies where the model has structure (resonances, table edges);
    /// the integrators place panel boundaries at their kinematic images.
    pub(crate) fn feature_frequencies(&self) -> Vec<f64> {
        match self {
            PolarizabilityModel::Lorentz { omega0, gamma_d, .. } => {
                vec![(omega0 - gamma_d).max(0.0), *omega0, omega0 + gamma_d]
            }
            PolarizabilityModel::PowerLaw { .. } => Vec::new(),
            PolarizabilityModel::Tabulated { grid, .. } => {
                match (grid.first(), grid.last()) {
                    (Some(&a), Some(&b)) => vec![a, b],
                    _ => Vec::new(),
                }
            }
        }
    }

    /// Typical α'' magnitude near `omega_ref`, used to pick the
    /// nondimensionalization scale. Any positive value works; this one
    /// keeps the dimensionless integrand near unity.
    pub(crate) fn magnitude_scale(&self, omega_ref: f64) -> f64 {
        match self {
            PolarizabilityModel::Lorentz {
                alpha0,
                omega0,
                gamma_d,
            } => {
                // peak value at resonance
                (alpha0 * omega0 / gamma_d).abs()
            }
            PolarizabilityModel::PowerLaw { kappa, exponent } => {
                (kappa * omega_ref.powi(*exponent as i32)).abs()
            }
            PolarizabilityModel::Tabulated { values, .. } => {
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }

    fn interp_abs(grid: &[f64], values: &[f64], w: f64) -> f64 {
        let (first, last) = match (grid.first(), grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return 0.0,
        };
        if w < first || w > last {
            return 0.0;
        }
        let hi = grid.partition_point(|&g| g < w);
        if hi == 0 {
            return values[0];
        }
        if hi >= grid.len() {
            return values[grid.len() - 1];
        }
        let (g0, g1) = (grid[hi - 1], grid[hi]);
        let (v0, v1) = (values[hi - 1], values[hi]);
        v0 + (v1 - v0) * (w - g0) / (g1 - g0)
    }

    /// Odd-extended α''(ω); unchecked fast path.
    pub(crate) fn eval(&self, omega: f64) -> f64 {
        debug_assert!(!omega.is_nan());
        match self {
            PolarizabilityModel::Lorentz {
                alpha0,
                omega0,
                gamma_d,
            } => {
                let w0sq = omega0 * omega0;
                let d = w0sq - omega * omega;
                alpha0 * w0sq * gamma_d * omega / (d * d + gamma_d * gamma_d * omega * omega)
            }
            PolarizabilityModel::PowerLaw { kappa, exponent } => {
                kappa * omega * omega.abs().powi(*exponent as i32 - 1)
            }
            PolarizabilityModel::Tabulated { grid, values } => {
                if omega == 0.0 {
                    return 0.0;
                }
                let v = Self::interp_abs(grid, values, omega.abs());
                if omega > 0.0 {
                    v
                } else {
                    -v
                }
            }
        }
    }

    /// α''(ω)/ω with the removable ω = 0 limit taken exactly. Even in ω.
    pub(crate) fn eval_over_omega(&self, omega: f64) -> f64 {
        debug_assert!(!omega.is_nan());
        match self {
            PolarizabilityModel::Lorentz {
                alpha0,
                omega0,
                gamma_d,
            } => {
                let w0sq = omega0 * omega0;
                let d = w0sq - omega * omega;
                alpha0 * w0sq * gamma_d / (d * d + gamma_d * gamma_d * omega * omega)
            }
            PolarizabilityModel::PowerLaw { kappa, exponent } => {
                kappa * omega.abs().powi(*exponent as i32 - 1)
            }
            PolarizabilityModel::Tabulated { grid, values } => {
                let aw = omega.abs();
                match grid.first() {
                    Some(&first) if aw >= first => Self::interp_abs(grid, values, aw) / aw,
                    // zero below the grid, so the slope at the origin is zero
                    _ => 0.0,
                }
            }
        }
    }
}

/// Electric and magnetic dissipation channels of one particle. The two
/// channels have identical structure; the magnetic one may be the zero model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleResponse {
    pub electric: PolarizabilityModel,
    pub magnetic: PolarizabilityModel,
}

impl ParticleResponse {
    pub fn electric_only(electric: PolarizabilityModel) -> Self {
        ParticleResponse {
            electric,
            magnetic: PolarizabilityModel::zero(),
        }
    }

    pub(crate) fn eval(&self, omega: f64) -> f64 {
        self.electric.eval(omega) + self.magnetic.eval(omega)
    }

    pub(crate) fn eval_over_omega(&self, omega: f64) -> f64 {
        self.electric.eval_over_omega(omega) + self.magnetic.eval_over_omega(omega)
    }

    pub fn frequency_scale(&self) -> Option<f64> {
        match (
            self.electric.frequency_scale(),
            self.magnetic.frequency_scale(),
        ) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub(crate) fn feature_frequencies(&self) -> Vec<f64> {
        let mut f = self.electric.feature_frequencies();
        f.extend(self.magnetic.feature_frequencies());
        f
    }

    pub(crate) fn magnitude_scale(&self, omega_ref: f64) -> f64 {
        self.electric.magnitude_scale(omega_ref) + self.magnetic.magnitude_scale(omega_ref)
    }
}

/// Odd-extended α''(ω) of one model (cm³).
pub fn alpha_im(model: &PolarizabilityModel, omega: f64) -> Result<f64> {
    if omega.is_nan() {
        return Err(Error::invalid("alpha_im: omega is NaN"));
    }
    Ok(model.eval(omega))
}

/// α''_e(ω) + α''_m(ω), the combined dissipation entering the integrals.
pub fn combined_alpha_im(resp: &ParticleResponse, omega: f64) -> Result<f64> {
    if omega.is_nan() {
        return Err(Error::invalid("combined_alpha_im: omega is NaN"));
    }
    Ok(resp.eval(omega))
}

/// α''(ω)·coth(ħω/2k_BT): finite for every (ω, T), including the ω → 0
/// coth pole, which the odd zero of α'' cancels. Near the pole the product
/// is computed as (α''/ω)·(2k_BT/ħ)·[t·coth t] with t = ħω/2k_BT.
pub fn alpha_coth(model: &PolarizabilityModel, omega: f64, temperature: f64) -> f64 {
    debug_assert!(temperature >= 0.0);
    if temperature == 0.0 {
        let v = model.eval(omega);
        return if omega >= 0.0 { v } else { -v };
    }
    let t = HBAR * omega / (2.0 * K_B * temperature);
    if t.abs() < 0.05 {
        model.eval_over_omega(omega) * (2.0 * K_B * temperature / HBAR) * xcoth(t)
    } else {
        // t is well away from the pole here, so coth_parts cannot be None
        model.eval(omega) * coth_parts(t).map(|p| p.value()).unwrap_or(0.0)
    }
}

/// A single problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    /// α''(ω) < 0 at a sampled positive frequency.
    NegativeSample { omega: f64, value: f64 },
    /// Table grid is not strictly ascending at this index.
    NonAscendingGrid { index: usize },
    /// Table value is negative at this index.
    NegativeTableValue { index: usize, value: f64 },
    /// Table grid entry is not strictly positive at this index.
    NonPositiveGrid { index: usize },
    /// Grid and value arrays differ in length, or the table is empty.
    MalformedTable { message: String },
    /// A scalar model parameter is outside its domain.
    BadParameter { name: &'static str, value: f64 },
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationIssue::NegativeSample { omega, value } => {
                write!(f, "alpha''({omega:.6e}) = {value:.6e} < 0")
            }
            ValidationIssue::NonAscendingGrid { index } => {
                write!(f, "grid not strictly ascending at index {index}")
            }
            ValidationIssue::NegativeTableValue { index, value } => {
                write!(f, "table value {value:.6e} < 0 at index {index}")
            }
            ValidationIssue::NonPositiveGrid { index } => {
                write!(f, "grid entry not strictly positive at index {index}")
            }
            ValidationIssue::MalformedTable { message } => write!(f, "{message}"),
            ValidationIssue::BadParameter { name, value } => {
                write!(f, "parameter {name} = {value:.6e} out of domain")
            }
        }
    }
}

/// Pass/fail report of a passivity and structure check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            write!(f, "pass")
        } else {
            write!(f, "fail:")?;
            for issue in &self.issues {
                write!(f, " [{issue}]")?;
            }
            Ok(())
        }
    }
}

/// Check passivity (α'' ≥ 0 for ω > 0) on a log-spaced sample of
/// (0, omega_max], plus the structural invariants of the model itself.
pub fn validate_model(model: &PolarizabilityModel, omega_max: f64) -> Result<ValidationReport> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::invalid(format!(
            "omega_max must be positive and finite, got {omega_max}"
        )));
    }
    let mut issues = Vec::new();

    match model {
        PolarizabilityModel::Lorentz {
            alpha0,
            omega0,
            gamma_d,
        } => {
            for (name, v) in [("alpha0", *alpha0), ("omega0", *omega0), ("gamma_d", *gamma_d)] {
                if !(v.is_finite() && v > 0.0) {
                    issues.push(ValidationIssue::BadParameter { name, value: v });
                }
            }
        }
        PolarizabilityModel::PowerLaw { kappa, exponent } => {
            if !(kappa.is_finite() && *kappa >= 0.0) {
                issues.push(ValidationIssue::BadParameter {
                    name: "kappa",
                    value: *kappa,
                });
            }
            if *exponent == 0 {
                issues.push(ValidationIssue::BadParameter {
                    name: "exponent",
                    value: 0.0,
                });
            }
        }
        PolarizabilityModel::Tabulated { grid, values } => {
            if grid.is_empty() || grid.len() != values.len() {
                issues.push(ValidationIssue::MalformedTable {
                    message: format!(
                        "table has {} grid points and {} values",
                        grid.len(),
                        values.len()
                    ),
                });
            }
            for (i, &g) in grid.iter().enumerate() {
                if !(g.is_finite() && g > 0.0) {
                    issues.push(ValidationIssue::NonPositiveGrid { index: i });
                }
                if i > 0 && g <= grid[i - 1] {
                    issues.push(ValidationIssue::NonAscendingGrid { index: i });
                }
            }
            for (i, &v) in values.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    issues.push(ValidationIssue::NegativeTableValue { index: i, value: v });
                }
            }
        }
    }

    if issues.is_empty() {
        const SAMPLES: usize = 256;
        let lo = omega_max * 1e-9;
        let ratio = (omega_max / lo).ln();
        for k in 0..SAMPLES {
            let w = lo * (ratio * (k as f64 + 1.0) / SAMPLES as f64).exp();
            let v = model.eval(w);
            if !v.is_finite() || v < 0.0 {
                issues.push(ValidationIssue::NegativeSample { omega: w, value: v });
            }
        }
    }

    Ok(ValidationReport { issues })
}
