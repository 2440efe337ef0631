//! Adaptive integration of the radiation integrals: tangential force,
//! heating rate, and net radiated intensity, plus the zero-temperature
//! closed forms and an independent dense-grid oracle.
//!
//! The outer frequency integral is split at every point where an integrand
//! factor changes character — the ω = 0 coth pole, the band where the
//! rotation-shifted argument changes sign, and the kinematic images of the
//! response model's resonances — and each panel is handled by a 15-point
//! Gauss–Kronrod rule with bisection on the worst panel. Panel bookkeeping
//! is strictly deterministic (worst-error, ties broken by position;
//! compensated summation in position order), so identical inputs give
//! bit-identical results.

use rayon::prelude::*;

use crate::constants::{make_scale, UnitScale, C, HBAR, K_B};
use crate::error::{Error, Result};
use crate::kernels::{brace, KinematicParams};
use crate::response::ParticleResponse;

/// Tolerances and limits shared by all integrals.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Relative tolerance on each integral.
    pub rel_tol: f64,
    /// Absolute tolerance in units of the natural result scale
    /// (the reference intensity or force of the nondimensionalization).
    pub abs_tol: f64,
    /// Maximum bisection depth per panel.
    pub max_depth: u32,
    /// The frequency integral is truncated at this multiple of the largest
    /// characteristic frequency (thermal, rotational, or model scale, with
    /// the Doppler stretch 1/γ(1−β) applied to comoving scales).
    pub cutoff_multiplier: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_depth: 40,
            cutoff_multiplier: 60.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(Error::invalid(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if self.max_depth < 4 {
            return Err(Error::invalid(format!(
                "max_depth must be at least 4, got {}",
                self.max_depth
            )));
        }
        if !(self.cutoff_multiplier.is_finite() && self.cutoff_multiplier >= 10.0) {
            return Err(Error::invalid(format!(
                "cutoff_multiplier must be at least 10, got {}",
                self.cutoff_multiplier
            )));
        }
        Ok(())
    }
}

/// One integral with its error estimate and convergence flag.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IntegralResult {
    /// Value in physical CGS units (dyn or erg/s).
    pub value: f64,
    /// Estimated absolute error, same units.
    pub error_estimate: f64,
    /// Number of integrand evaluations spent.
    pub evaluations: u64,
    /// Whether `error_estimate ≤ max(rel_tol·|value|, abs_tol·reference)`
    /// was reached. Non-convergence still reports the best value found.
    pub converged: bool,
}

impl IntegralResult {
    fn trivially_zero() -> Self {
        IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }
}

/// Which of the three shared-brace integrals to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandKind {
    Force,
    Heating,
    Intensity,
}

// ---------------------------------------------------------------------------
// 15-point Gauss–Kronrod panel rule (QUADPACK abscissae and weights).
// ---------------------------------------------------------------------------

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

struct PanelEval {
    value: f64,
    abserr: f64,
    resabs: f64,
}

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> PanelEval {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let fc = f(center);
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    let mut res_kronrod = fc * WGK[7];
    let mut res_gauss = fc * WG[3];
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let offset = half * XGK[j];
        let f1 = f(center - offset);
        let f2 = f(center + offset);
        fv1[j] = f1;
        fv2[j] = f2;
        let fsum = f1 + f2;
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * fsum;
        }
        res_kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = ((res_kronrod - res_gauss) * half).abs();
    PanelEval {
        value: res_kronrod * half,
        abserr: rescale_error(err, res_abs * abs_half, res_asc * abs_half),
        resabs: res_abs * abs_half,
    }
}

// ---------------------------------------------------------------------------
// Deterministic global-adaptive driver.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    abserr: f64,
    depth: u32,
    splittable: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RawIntegral {
    pub value: f64,
    pub abserr: f64,
    pub evaluations: u64,
    pub converged: bool,
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

const MAX_PANELS: usize = 4096;

fn make_panel(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, depth: u32, max_depth: u32) -> Panel {
    let e = gk15(f, a, b);
    // a panel at the roundoff floor or minimal width cannot improve
    let floor = 50.0 * f64::EPSILON * e.resabs;
    let width_ok = (b - a).abs() > 8.0 * f64::EPSILON * a.abs().max(b.abs());
    Panel {
        a,
        b,
        value: e.value,
        abserr: e.abserr,
        depth,
        splittable: depth < max_depth && e.abserr > floor && width_ok,
    }
}

/// Adaptive quadrature over the union of `[breakpoints[i], breakpoints[i+1]]`.
/// `breakpoints` must be sorted ascending; zero-width segments are skipped.
pub(crate) fn adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_depth: u32,
) -> RawIntegral {
    let mut panels: Vec<Panel> = Vec::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            panels.push(make_panel(f, w[0], w[1], 0, max_depth));
        }
    }
    if panels.is_empty() {
        return RawIntegral {
            value: 0.0,
            abserr: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut gk_calls = panels.len() as u64;

    loop {
        let total_value: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.abserr).sum();
        if total_err <= abs_tol.max(rel_tol * total_value.abs()) {
            break;
        }
        if panels.len() >= MAX_PANELS {
            break;
        }
        // worst splittable panel; ties broken by position for determinism
        let mut worst: Option<usize> = None;
        for (i, p) in panels.iter().enumerate() {
            if !p.splittable {
                continue;
            }
            worst = match worst {
                None => Some(i),
                Some(j) => {
                    let q = &panels[j];
                    if p.abserr > q.abserr || (p.abserr == q.abserr && p.a < q.a) {
                        Some(i)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        let Some(i) = worst else { break };
        let Panel { a, b, depth, .. } = panels[i];
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) {
            panels[i].splittable = false;
            continue;
        }
        panels[i] = make_panel(f, a, mid, depth + 1, max_depth);
        panels.push(make_panel(f, mid, b, depth + 1, max_depth));
        gk_calls += 2;
    }

    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = compensated_sum(panels.iter().map(|p| p.value));
    let abserr = compensated_sum(panels.iter().map(|p| p.abserr));
    RawIntegral {
        value,
        abserr,
        evaluations: gk_calls * 15,
        converged: abserr <= abs_tol.max(rel_tol * value.abs()),
    }
}

// ---------------------------------------------------------------------------
// Scale selection and the nested 2-D engine.
// ---------------------------------------------------------------------------

/// Largest characteristic frequency of the problem: thermal scales (the
/// comoving one Doppler-stretched by 1/γ(1−β)), the rotation rate, and the
/// response model's own scale. Zero when nothing sets a scale.
pub(crate) fn max_characteristic_frequency(p: &KinematicParams) -> f64 {
    let stretch = 1.0 / (p.gamma() * (1.0 - p.beta()));
    let mut s: f64 = 0.0;
    s = s.max(K_B * p.t2() / HBAR);
    s = s.max(K_B * p.t1() / HBAR * stretch);
    s = s.max(p.omega_spin() * stretch);
    if let Some(m) = p.response().frequency_scale() {
        s = s.max(m);
    }
    s
}

/// Pick reference scales that keep the dimensionless integrand O(1).
pub(crate) fn auto_scale(p: &KinematicParams) -> Option<UnitScale> {
    let omega_ref = max_characteristic_frequency(p);
    if !(omega_ref.is_finite() && omega_ref > 0.0) {
        return None;
    }
    let mag = p.response().magnitude_scale(omega_ref);
    let alpha_ref = if mag.is_finite() && mag > 0.0 { mag } else { 1.0 };
    Some(make_scale(omega_ref, alpha_ref).expect("scales positive by construction"))
}

pub(crate) struct Engine<'a> {
    p: &'a KinematicParams,
    cfg: QuadratureConfig,
    scale: UnitScale,
    /// Ω in units of omega_ref.
    omega_spin_w: f64,
    /// Model feature frequencies in units of omega_ref.
    features_w: Vec<f64>,
    /// Domain half-width in units of omega_ref (thermal case).
    wmax: f64,
    /// Both temperatures exactly zero: integrate the exact finite support.
    zero_t: bool,
}

impl<'a> Engine<'a> {
    /// `None` means the result is trivially zero (no temperature, no spin).
    pub fn build(p: &'a KinematicParams, cfg: &QuadratureConfig) -> Result<Option<Self>> {
        cfg.validate()?;
        if p.t1() == 0.0 && p.t2() == 0.0 && p.omega_spin() == 0.0 {
            return Ok(None);
        }
        let scale = auto_scale(p).expect("a non-trivial problem has a frequency scale");
        Ok(Some(Self::with_scale(p, cfg, scale)))
    }

    pub fn with_scale(p: &'a KinematicParams, cfg: &QuadratureConfig, scale: UnitScale) -> Self {
        let omega_ref = scale.omega_ref();
        let wmax = cfg.cutoff_multiplier * max_characteristic_frequency(p) / omega_ref;
        Engine {
            p,
            cfg: cfg.clone(),
            scale,
            omega_spin_w: p.omega_spin() / omega_ref,
            features_w: p
                .response()
                .feature_frequencies()
                .into_iter()
                .map(|f| f / omega_ref)
                .collect(),
            wmax,
            zero_t: p.t1() == 0.0 && p.t2() == 0.0,
        }
    }

    pub fn uses_zero_t_support(&self) -> bool {
        self.zero_t
    }

    fn doppler_edges(&self) -> [f64; 2] {
        let g = self.p.gamma();
        let b = self.p.beta();
        [g * (1.0 - b), g * (1.0 + b)]
    }

    /// Sorted outer-integration breakpoints (dimensionless frequency).
    fn omega_breakpoints(&self) -> Vec<f64> {
        let edges = self.doppler_edges();
        let om = self.omega_spin_w;
        let mut pts: Vec<f64> = Vec::new();
        let (lo, hi);

        if self.zero_t {
            // Exact support of the sign differences: only the band where the
            // shifted argument is positive while ω < 0 contributes.
            lo = -om / edges[0];
            hi = 0.0;
            pts.push(-om / self.p.gamma());
            pts.push(-om / edges[1]);
            for &f in &self.features_w {
                for &e in &edges {
                    pts.push((f - om) / e);
                }
            }
        } else {
            lo = -self.wmax;
            hi = self.wmax;
            let omega_ref = self.scale.omega_ref();
            let stretch = 1.0 / edges[0];
            // support markers for each thermal scale, so no panel can
            // straddle the entire occupied band unsampled
            for s in [
                K_B * self.p.t2() / (HBAR * omega_ref),
                K_B * self.p.t1() / (HBAR * omega_ref) * stretch,
            ] {
                if s > 0.0 {
                    for m in [1.0, self.cfg.cutoff_multiplier] {
                        pts.push(s * m);
                        pts.push(-s * m);
                    }
                }
            }
            if om > 0.0 {
                for &e in &edges {
                    for sign in [1.0, -1.0] {
                        pts.push(sign * om / e);
                    }
                }
                pts.push(om);
                pts.push(-om);
            }
            for &f in &self.features_w {
                for shift in [0.0, om] {
                    for sign in [1.0, -1.0] {
                        for &e in &edges {
                            pts.push((sign * f - shift) / e);
                        }
                    }
                }
            }
        }

        pts.retain(|w| *w > lo && *w < hi);
        pts.push(lo);
        pts.push(hi);
        if !self.zero_t {
            pts.push(0.0);
        }
        pts.sort_by(f64::total_cmp);
        let tol = 1e-12 * (hi - lo);
        pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        pts
    }

    /// Inner-integration breakpoints: the x where the shifted argument
    /// changes sign or crosses a model feature.
    fn x_breakpoints(&self, w: f64) -> Vec<f64> {
        let mut pts = vec![-1.0, 1.0];
        let b = self.p.beta();
        if b > 0.0 && w != 0.0 {
            let gw = self.p.gamma() * w;
            let om = self.omega_spin_w;
            let mut push = |target: f64, shift: f64| {
                let x = ((target - shift) / gw - 1.0) / b;
                if x > -1.0 && x < 1.0 {
                    pts.push(x);
                }
            };
            push(0.0, om);
            let features = self.features_w.clone();
            for f in features {
                for sign in [1.0, -1.0] {
                    push(sign * f, 0.0);
                    push(sign * f, om);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        pts
    }

    /// Dimensionless inner x-integral of measure·brace at fixed w.
    fn inner_x(&self, w: f64, kind: IntegrandKind) -> RawIntegral {
        let omega_phys = self.scale.omega_to_physical(w);
        let inv_alpha = 1.0 / self.scale.alpha_ref();
        let beta = self.p.beta();
        let p = self.p;
        let mut f = |x: f64| {
            let g = brace(p, omega_phys, x) * inv_alpha;
            match kind {
                IntegrandKind::Force => x * g,
                IntegrandKind::Heating => (1.0 + beta * x) * g,
                IntegrandKind::Intensity => -g,
            }
        };
        adaptive(
            &mut f,
            &self.x_breakpoints(w),
            self.cfg.rel_tol * 0.1,
            self.cfg.abs_tol * 0.1,
            self.cfg.max_depth,
        )
    }

    fn prefactor(&self, kind: IntegrandKind) -> (f64, f64) {
        let (sign, reference) = match kind {
            IntegrandKind::Force => (-1.0, self.scale.force_ref()),
            IntegrandKind::Heating => (1.0, self.scale.intensity_ref()),
            IntegrandKind::Intensity => (1.0, self.scale.intensity_ref()),
        };
        (sign, self.p.gamma() / (4.0 * std::f64::consts::PI) * reference)
    }

    /// Full nested quadrature of one integral, in physical units.
    pub fn integrate(&self, kind: IntegrandKind) -> IntegralResult {
        let breakpoints = self.omega_breakpoints();
        let mut inner_evals: u64 = 0;
        let mut inner_ok = true;
        let mut f = |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let inner = self.inner_x(w, kind);
            inner_evals += inner.evaluations;
            inner_ok &= inner.converged;
            w.powi(4) * inner.value
        };
        let raw = adaptive(
            &mut f,
            &breakpoints,
            self.cfg.rel_tol,
            self.cfg.abs_tol,
            self.cfg.max_depth,
        );
        let (sign, pref) = self.prefactor(kind);
        IntegralResult {
            value: sign * pref * raw.value,
            error_estimate: pref * raw.abserr,
            evaluations: inner_evals,
            converged: raw.converged && inner_ok,
        }
    }

    /// dI/dω at one physical frequency (erg/s per rad/s), with convergence
    /// flag and evaluation count.
    pub fn intensity_marginal_omega(&self, omega_phys: f64) -> (f64, bool, u64) {
        let w = self.scale.omega_to_dimensionless(omega_phys);
        if w == 0.0 {
            return (0.0, true, 0);
        }
        let inner = self.inner_x(w, IntegrandKind::Intensity);
        let (sign, pref) = self.prefactor(IntegrandKind::Intensity);
        (
            sign * pref / self.scale.omega_ref() * w.powi(4) * inner.value,
            inner.converged,
            inner.evaluations,
        )
    }

    /// dI/dx at one emission-direction cosine (erg/s per unit x).
    pub fn intensity_marginal_x(&self, x: f64) -> (f64, bool, u64) {
        let mut breakpoints = self.omega_breakpoints();
        let b = self.p.beta();
        if self.omega_spin_w > 0.0 {
            let locus = -self.omega_spin_w / (self.p.gamma() * (1.0 + b * x));
            let (lo, hi) = (breakpoints[0], *breakpoints.last().unwrap());
            if locus > lo && locus < hi {
                breakpoints.push(locus);
                breakpoints.sort_by(f64::total_cmp);
            }
        }
        let omega_ref = self.scale.omega_ref();
        let inv_alpha = 1.0 / self.scale.alpha_ref();
        let p = self.p;
        let mut evals: u64 = 0;
        let mut f = |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            evals += 1;
            w.powi(4) * (-brace(p, w * omega_ref, x) * inv_alpha)
        };
        let raw = adaptive(
            &mut f,
            &breakpoints,
            self.cfg.rel_tol,
            self.cfg.abs_tol,
            self.cfg.max_depth,
        );
        let (sign, pref) = self.prefactor(IntegrandKind::Intensity);
        (sign * pref * raw.value, raw.converged, evals)
    }
}

// ---------------------------------------------------------------------------
// Public integral operations.
// ---------------------------------------------------------------------------

fn integrate_kind(
    p: &KinematicParams,
    cfg: &QuadratureConfig,
    kind: IntegrandKind,
) -> Result<IntegralResult> {
    match Engine::build(p, cfg)? {
        None => Ok(IntegralResult::trivially_zero()),
        Some(engine) => Ok(engine.integrate(kind)),
    }
}

/// Tangential (friction) force F_x in dyn. Negative means deceleration.
pub fn tangential_force(p: &KinematicParams, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    integrate_kind(p, cfg, IntegrandKind::Force)
}

/// Particle heating rate Q̇ in erg/s (positive: the particle absorbs net
/// energy from the background).
pub fn heating_rate(p: &KinematicParams, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    integrate_kind(p, cfg, IntegrandKind::Heating)
}

/// Net radiated intensity I = I₁ − I₂ in erg/s.
pub fn net_intensity(p: &KinematicParams, cfg: &QuadratureConfig) -> Result<IntegralResult> {
    integrate_kind(p, cfg, IntegrandKind::Intensity)
}

/// Spontaneous emission intensity of a spinning particle in cold vacuum:
/// (4ħ/3πc³)·∫₀^Ω dξ ξ⁴ [α''_e(Ω−ξ) + α''_m(Ω−ξ)], independent of the
/// translational velocity and the spin orientation.
pub fn zero_t_intensity(
    resp: &ParticleResponse,
    omega_spin: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if !(omega_spin.is_finite() && omega_spin >= 0.0) {
        return Err(Error::invalid(format!(
            "omega_spin must be finite and non-negative, got {omega_spin}"
        )));
    }
    if omega_spin == 0.0 {
        return Ok(IntegralResult::trivially_zero());
    }
    let mag = resp.magnitude_scale(omega_spin);
    let alpha_ref = if mag.is_finite() && mag > 0.0 { mag } else { 1.0 };

    // ξ = Ω·u, so the dimensionless integrand is u⁴·α''(Ω(1−u))/α_ref
    let mut f = |u: f64| u.powi(4) * resp.eval(omega_spin * (1.0 - u)) / alpha_ref;

    let mut pts = vec![0.0, 1.0];
    for feat in resp.feature_frequencies() {
        let u = 1.0 - feat / omega_spin;
        if u > 0.0 && u < 1.0 {
            pts.push(u);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);

    let raw = adaptive(&mut f, &pts, cfg.rel_tol, cfg.abs_tol, cfg.max_depth);
    let pref =
        4.0 * HBAR * omega_spin.powi(5) * alpha_ref / (3.0 * std::f64::consts::PI * C.powi(3));
    Ok(IntegralResult {
        value: pref * raw.value,
        error_estimate: pref * raw.abserr,
        evaluations: raw.evaluations,
        converged: raw.converged,
    })
}

/// Cold-vacuum tangential force, via the exact proportionality
/// F_x = −(β/c)·I⁽⁰⁾ with the single shared integral.
pub fn zero_t_force(
    resp: &ParticleResponse,
    omega_spin: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
        return Err(Error::invalid(format!("beta must be in [0, 1), got {beta}")));
    }
    let i0 = zero_t_intensity(resp, omega_spin, cfg)?;
    let factor = -beta / C;
    Ok(IntegralResult {
        value: factor * i0.value,
        error_estimate: factor.abs() * i0.error_estimate,
        evaluations: i0.evaluations,
        converged: i0.converged,
    })
}

// ---------------------------------------------------------------------------
// Dense-grid oracle: composite Simpson in x, trapezoid on a feature-aware
// frequency grid. No adaptivity anywhere — deliberately simple, so it fails
// independently of the adaptive path it cross-checks.
// ---------------------------------------------------------------------------

/// All three integrals from one dense-grid pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValues {
    pub force: f64,
    pub heating: f64,
    pub intensity: f64,
}

fn oracle_omega_nodes(p: &KinematicParams, scale: &UnitScale, grid_n: usize) -> Vec<f64> {
    let g = p.gamma();
    let b = p.beta();
    let omega_ref = scale.omega_ref();
    let om = p.omega_spin() / omega_ref;
    let zero_t = p.t1() == 0.0 && p.t2() == 0.0;
    let mut nodes: Vec<f64> = Vec::with_capacity(2 * grid_n);

    let mut features: Vec<f64> = Vec::new();
    if om > 0.0 {
        features.extend([
            -om / (g * (1.0 - b)),
            -om / g,
            -om / (g * (1.0 + b)),
            om / (g * (1.0 - b)),
            om / g,
            om / (g * (1.0 + b)),
        ]);
    }
    for f in p.response().feature_frequencies() {
        let fw = f / omega_ref;
        for shift in [0.0, om] {
            for sign in [1.0, -1.0] {
                features.push((sign * fw - shift) / (g * (1.0 - b)));
                features.push((sign * fw - shift) / (g * (1.0 + b)));
            }
        }
    }

    if zero_t {
        // pad slightly past the exact support; the integrand is exactly
        // zero outside, so the padding only probes the support logic
        let lo = -1.02 * om / (g * (1.0 - b));
        let n = grid_n.max(64);
        for k in 0..=n {
            nodes.push(lo * (1.0 - k as f64 / n as f64));
        }
        nodes.extend(features.iter().filter(|w| **w > lo && **w < 0.0));
    } else {
        let wmax = 1.1 * QuadratureConfig::default().cutoff_multiplier
            * max_characteristic_frequency(p)
            / omega_ref;
        let per_side = (grid_n / 2).max(32);
        let lo_mag = wmax * 1e-7;
        let ratio = (wmax / lo_mag).ln();
        for k in 0..per_side {
            let w = lo_mag * (ratio * k as f64 / (per_side - 1) as f64).exp();
            nodes.push(w);
            nodes.push(-w);
        }
        nodes.push(0.0);
        // light clusters around each feature
        for &q in &features {
            if q.abs() < wmax {
                nodes.push(q);
                for eps in [1e-4, 1e-3, 1e-2] {
                    for s in [1.0, -1.0] {
                        let w = q * (1.0 + s * eps);
                        if w.abs() < wmax {
                            nodes.push(w);
                        }
                    }
                }
            }
        }
        nodes.retain(|w| w.abs() <= wmax);
    }

    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| *a == *b);
    nodes
}

/// Evaluate all three integrals on a `grid_n`-scaled tensor grid
/// (`grid_n` frequency nodes by `grid_n` direction cosines).
pub fn dense_oracle_all(p: &KinematicParams, grid_n: usize) -> Result<OracleValues> {
    if grid_n < 64 {
        return Err(Error::invalid(format!("grid_n must be at least 64, got {grid_n}")));
    }
    if p.t1() == 0.0 && p.t2() == 0.0 && p.omega_spin() == 0.0 {
        return Ok(OracleValues {
            force: 0.0,
            heating: 0.0,
            intensity: 0.0,
        });
    }
    let scale = auto_scale(p).expect("non-trivial problem");
    let omega_nodes = oracle_omega_nodes(p, &scale, grid_n);

    let n_x = grid_n + grid_n % 2; // Simpson needs an even interval count
    let hx = 2.0 / n_x as f64;
    let inv_alpha = 1.0 / scale.alpha_ref();
    let beta = p.beta();
    let omega_ref = scale.omega_ref();

    // one row per frequency node: Simpson across x for all three measures
    let rows: Vec<[f64; 3]> = omega_nodes
        .par_iter()
        .map(|&w| {
            if w == 0.0 {
                return [0.0; 3];
            }
            let omega_phys = w * omega_ref;
            let mut acc = [0.0f64; 3];
            for j in 0..=n_x {
                let x = -1.0 + j as f64 * hx;
                let weight = if j == 0 || j == n_x {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let g = brace(p, omega_phys, x) * inv_alpha;
                acc[0] += weight * x * g;
                acc[1] += weight * (1.0 + beta * x) * g;
                acc[2] += weight * (-g);
            }
            let w4 = w.powi(4);
            [
                acc[0] * hx / 3.0 * w4,
                acc[1] * hx / 3.0 * w4,
                acc[2] * hx / 3.0 * w4,
            ]
        })
        .collect();

    // trapezoid over the (non-uniform) frequency nodes, in index order
    let mut sums = [0.0f64; 3];
    for k in 0..omega_nodes.len().saturating_sub(1) {
        let dw = omega_nodes[k + 1] - omega_nodes[k];
        for (i, s) in sums.iter_mut().enumerate() {
            *s += 0.5 * (rows[k][i] + rows[k + 1][i]) * dw;
        }
    }

    let gamma_over_4pi = p.gamma() / (4.0 * std::f64::consts::PI);
    Ok(OracleValues {
        force: -gamma_over_4pi * scale.force_ref() * sums[0],
        heating: gamma_over_4pi * scale.intensity_ref() * sums[1],
        intensity: gamma_over_4pi * scale.intensity_ref() * sums[2],
    })
}

/// One integral from the dense-grid oracle.
pub fn dense_oracle(kind: IntegrandKind, p: &KinematicParams, grid_n: usize) -> Result<f64> {
    let all = dense_oracle_all(p, grid_n)?;
    Ok(match kind {
        IntegrandKind::Force => all.force,
        IntegrandKind::Heating => all.heating,
        IntegrandKind::Intensity => all.intensity,
    })
}

// ---------------------------------------------------------------------------
// Energy bookkeeping.
// ---------------------------------------------------------------------------

/// The three integrals and how well they satisfy I + Q̇ + F_x·V = 0.
#[derive(Debug, Clone)]
pub struct EnergyBalance {
    pub force: IntegralResult,
    pub heating: IntegralResult,
    pub intensity: IntegralResult,
    /// |I + Q̇ + F_x·V| / max(|I|, |Q̇|, |F_x·V|, floor); measures
    /// quadrature error only, since the identity is exact.
    pub residual: f64,
}

impl EnergyBalance {
    pub fn all_converged(&self) -> bool {
        self.force.converged && self.heating.converged && self.intensity.converged
    }
}

/// Compute F_x, Q̇, I independently and their energy-balance residual.
pub fn energy_balance(p: &KinematicParams, cfg: &QuadratureConfig) -> Result<EnergyBalance> {
    let force = tangential_force(p, cfg)?;
    let heating = heating_rate(p, cfg)?;
    let intensity = net_intensity(p, cfg)?;
    let fv = force.value * C * p.beta();
    let floor = auto_scale(p)
        .map(|s| cfg.abs_tol * s.intensity_ref())
        .unwrap_or(f64::MIN_POSITIVE);
    let denom = intensity
        .value
        .abs()
        .max(heating.value.abs())
        .max(fv.abs())
        .max(floor);
    let residual = (intensity.value + heating.value + fv).abs() / denom;
    Ok(EnergyBalance {
        force,
        heating,
        intensity,
        residual,
    })
}

/// Just the residual of [`energy_balance`].
pub fn energy_balance_residual(p: &KinematicParams, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(energy_balance(p, cfg)?.residual)
}
