//! Spectral and angular distributions of the emitted radiation — marginals
//! of the net-intensity integrand — and their CSV/JSON serialization.
//!
//! The frequency spectrum is folded onto ω ≥ 0: the density at ω is the sum
//! of the signed marginals at +ω and −ω, so emission and absorption carry
//! opposite signs and the trapezoid total reproduces the net intensity.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::KinematicParams;
use crate::quadrature::{auto_scale, max_characteristic_frequency, Engine, QuadratureConfig};

/// A sampled distribution with its provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    abscissa: Vec<f64>,
    density: Vec<f64>,
    metadata: BTreeMap<String, String>,
}

impl SpectrumSeries {
    pub fn new(
        abscissa: Vec<f64>,
        density: Vec<f64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if abscissa.is_empty() {
            return Err(Error::invalid("series grid must not be empty"));
        }
        if abscissa.len() != density.len() {
            return Err(Error::invalid(format!(
                "grid has {} points but density has {}",
                abscissa.len(),
                density.len()
            )));
        }
        for w in abscissa.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("series grid must be strictly ascending"));
            }
        }
        if abscissa.iter().chain(density.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("series values must all be finite"));
        }
        Ok(SpectrumSeries {
            abscissa,
            density,
            metadata,
        })
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Trapezoid integral of the density over the grid.
    pub fn trapezoid_total(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.abscissa.len().saturating_sub(1) {
            total += 0.5
                * (self.density[k] + self.density[k + 1])
                * (self.abscissa[k + 1] - self.abscissa[k]);
        }
        total
    }
}

fn format_g(v: f64) -> String {
    format!("{v:.6e}")
}

fn series_metadata(
    kind: &str,
    p: &KinematicParams,
    cfg: &QuadratureConfig,
    zero_t_reduction: bool,
    converged: bool,
) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("kind".to_string(), kind.to_string());
    m.insert("beta".to_string(), format_g(p.beta()));
    m.insert("gamma".to_string(), format_g(p.gamma()));
    m.insert("theta_rad".to_string(), format_g(p.theta()));
    m.insert("omega_spin_rad_s".to_string(), format_g(p.omega_spin()));
    m.insert("t1_k".to_string(), format_g(p.t1()));
    m.insert("t2_k".to_string(), format_g(p.t2()));
    m.insert(
        "electric_model".to_string(),
        serde_json::to_string(&p.response().electric).unwrap_or_default(),
    );
    m.insert(
        "magnetic_model".to_string(),
        serde_json::to_string(&p.response().magnetic).unwrap_or_default(),
    );
    m.insert("rel_tol".to_string(), format_g(cfg.rel_tol));
    m.insert("abs_tol".to_string(), format_g(cfg.abs_tol));
    m.insert("max_depth".to_string(), cfg.max_depth.to_string());
    m.insert(
        "cutoff_multiplier".to_string(),
        format_g(cfg.cutoff_multiplier),
    );
    m.insert(
        "zero_t_reduction".to_string(),
        zero_t_reduction.to_string(),
    );
    m.insert("converged".to_string(), converged.to_string());
    let mut hasher = Sha256::new();
    for (k, v) in &m {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    m.insert("config_hash".to_string(), hex);
    m
}

/// dI/dω on `omega_grid` (rad/s, ascending, ≥ 0), in erg/s per rad/s.
/// Each point folds the signed marginals at ±ω together.
pub fn intensity_spectrum(
    p: &KinematicParams,
    omega_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<SpectrumSeries> {
    if omega_grid.is_empty() {
        return Err(Error::invalid("omega grid must not be empty"));
    }
    if omega_grid.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("omega grid must be finite and non-negative"));
    }
    let engine = Engine::build(p, cfg)?;
    let mut density = Vec::with_capacity(omega_grid.len());
    let mut converged = true;
    let mut zero_t = p.t1() == 0.0 && p.t2() == 0.0;
    match &engine {
        None => density.resize(omega_grid.len(), 0.0),
        Some(e) => {
            zero_t = e.uses_zero_t_support();
            for &omega in omega_grid {
                let (plus, ok_p, _) = e.intensity_marginal_omega(omega);
                let (minus, ok_m, _) = e.intensity_marginal_omega(-omega);
                converged &= ok_p && ok_m;
                density.push(plus + minus);
            }
        }
    }
    SpectrumSeries::new(
        omega_grid.to_vec(),
        density,
        series_metadata("omega", p, cfg, zero_t, converged),
    )
}

/// dI/dx on `x_grid` (emission-direction cosines in [−1, 1], ascending),
/// in erg/s per unit x.
pub fn angular_distribution(
    p: &KinematicParams,
    x_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<SpectrumSeries> {
    if x_grid.is_empty() {
        return Err(Error::invalid("x grid must not be empty"));
    }
    if x_grid
        .iter()
        .any(|x| !x.is_finite() || !(-1.0..=1.0).contains(x))
    {
        return Err(Error::invalid("x grid must lie within [-1, 1]"));
    }
    let engine = Engine::build(p, cfg)?;
    let mut density = Vec::with_capacity(x_grid.len());
    let mut converged = true;
    let mut zero_t = p.t1() == 0.0 && p.t2() == 0.0;
    match &engine {
        None => density.resize(x_grid.len(), 0.0),
        Some(e) => {
            zero_t = e.uses_zero_t_support();
            for &x in x_grid {
                let (v, ok, _) = e.intensity_marginal_x(x);
                converged &= ok;
                density.push(v);
            }
        }
    }
    SpectrumSeries::new(
        x_grid.to_vec(),
        density,
        series_metadata("angular", p, cfg, zero_t, converged),
    )
}

/// Frequency grid suited to the problem's scales: dense where the density
/// lives, with nodes pinned on the rotation-shift band edges where the
/// integrand has kinks.
pub fn auto_omega_grid(p: &KinematicParams, cfg: &QuadratureConfig, n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::invalid(format!("need at least 16 grid points, got {n}")));
    }
    let scale = match auto_scale(p) {
        Some(s) => s,
        None => {
            // no frequency scale at all; any grid holds only zeros
            return Ok((0..n).map(|k| k as f64 + 1.0).collect());
        }
    };
    let g = p.gamma();
    let b = p.beta();
    let mut pts: Vec<f64> = Vec::with_capacity(2 * n);

    let mut features = vec![];
    if p.omega_spin() > 0.0 {
        features.extend([
            p.omega_spin() / (g * (1.0 - b)),
            p.omega_spin() / g,
            p.omega_spin() / (g * (1.0 + b)),
            p.omega_spin(),
        ]);
    }

    if p.t1() == 0.0 && p.t2() == 0.0 {
        let edge = 1.05 * p.omega_spin() / (g * (1.0 - b));
        for k in 0..n {
            pts.push(edge * k as f64 / (n - 1) as f64);
        }
    } else {
        let hi = cfg.cutoff_multiplier * max_characteristic_frequency(p);
        let n_lin = n / 2;
        for k in 0..n_lin {
            pts.push(hi * k as f64 / (n_lin - 1) as f64);
        }
        let n_log = n / 2;
        let lo = hi * 1e-6;
        let ratio = (hi / lo).ln();
        for k in 0..n_log {
            pts.push(lo * (ratio * k as f64 / (n_log - 1) as f64).exp());
        }
        let max = hi;
        features.retain(|f| *f < max);
    }
    pts.extend(features);
    pts.retain(|w| w.is_finite() && *w >= 0.0);
    pts.push(0.0);
    pts.sort_by(f64::total_cmp);
    let span = pts.last().copied().unwrap_or(1.0).max(scale.omega_ref() * 1e-12);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);
    Ok(pts)
}

/// Uniform direction-cosine grid on [−1, 1].
pub fn auto_x_grid(n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::invalid(format!("need at least 16 grid points, got {n}")));
    }
    Ok((0..n)
        .map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
        .collect())
}

/// On-disk representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Json,
}

impl SeriesFormat {
    /// Infer from the file extension; `None` for anything unrecognized.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Some(SeriesFormat::Csv),
            Some("json") => Some(SeriesFormat::Json),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesFile {
    metadata: BTreeMap<String, String>,
    abscissa: Vec<f64>,
    density: Vec<f64>,
}

/// Write a series; floats carry 17 significant digits so a read-back is
/// bit-exact.
pub fn write_series(series: &SpectrumSeries, path: &Path, format: SeriesFormat) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    match format {
        SeriesFormat::Csv => {
            let mut out = Vec::with_capacity(64 * series.len());
            writeln!(out, "# photodrag-series v1").map_err(io_err)?;
            for (k, v) in &series.metadata {
                writeln!(out, "# {k}={v}").map_err(io_err)?;
            }
            writeln!(out, "abscissa,density").map_err(io_err)?;
            for (a, d) in series.abscissa.iter().zip(&series.density) {
                writeln!(out, "{a:.16e},{d:.16e}").map_err(io_err)?;
            }
            fs::write(path, out).map_err(io_err)
        }
        SeriesFormat::Json => {
            let file = SeriesFile {
                metadata: series.metadata.clone(),
                abscissa: series.abscissa.clone(),
                density: series.density.clone(),
            };
            let text = serde_json::to_string_pretty(&file)
                .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
            fs::write(path, text).map_err(io_err)
        }
    }
}

/// Read back a series written by [`write_series`].
pub fn read_series(path: &Path, format: SeriesFormat) -> Result<SpectrumSeries> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    match format {
        SeriesFormat::Csv => {
            let mut metadata = BTreeMap::new();
            let mut abscissa = Vec::new();
            let mut density = Vec::new();
            let mut seen_header = false;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                let parse_err = |message: String| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message,
                };
                if let Some(rest) = line.strip_prefix('#') {
                    if let Some((k, v)) = rest.trim().split_once('=') {
                        metadata.insert(k.trim().to_string(), v.to_string());
                    }
                    continue;
                }
                if !seen_header {
                    if line != "abscissa,density" {
                        return Err(parse_err(format!("expected column header, got '{line}'")));
                    }
                    seen_header = true;
                    continue;
                }
                let (a, d) = line
                    .split_once(',')
                    .ok_or_else(|| parse_err("expected two comma-separated values".into()))?;
                abscissa.push(
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(format!("bad abscissa: {e}")))?,
                );
                density.push(
                    d.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(format!("bad density: {e}")))?,
                );
            }
            SpectrumSeries::new(abscissa, density, metadata)
        }
        SeriesFormat::Json => {
            let file: SeriesFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
            SpectrumSeries::new(file.abscissa, file.density, file.metadata)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::angular_weight;
    use crate::response::{ParticleResponse, PolarizabilityModel};
    use approx::assert_relative_eq;

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
    fn equilibrium_spectrum_is_identically_zero() {
        let p = params(0.0, 0.4, 0.0, 300.0, 300.0);
        let cfg = QuadratureConfig::default();
        let grid = auto_omega_grid(&p, &cfg, 64).unwrap();
        let s = intensity_spectrum(&p, &grid, &cfg).unwrap();
        assert!(s.density().iter().all(|d| *d == 0.0));
    }

    #[test]
    fn zero_t_spectrum_totals_match_and_depend_on_beta_pointwise() {
        let cfg = QuadratureConfig::default();
        let omega_spin = 3e13;
        let slow = params(0.0, 0.5, omega_spin, 0.0, 0.0);
        let fast = params(0.9, 0.5, omega_spin, 0.0, 0.0);
        let i0 = crate::quadrature::zero_t_intensity(slow.response(), omega_spin, &cfg)
            .unwrap()
            .value;

        // build both spectra on the wider (fast) support so they share a grid
        let grid = auto_omega_grid(&fast, &cfg, 1024).unwrap();
        let s_slow = intensity_spectrum(&slow, &grid, &cfg).unwrap();
        let s_fast = intensity_spectrum(&fast, &grid, &cfg).unwrap();

        assert_relative_eq!(s_slow.trapezoid_total(), i0, max_relative = 1e-3);
        assert_relative_eq!(s_fast.trapezoid_total(), i0, max_relative = 1e-3);

        // same totals, visibly different shapes
        let mut max_rel_diff: f64 = 0.0;
        let peak = s_slow.density().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in s_slow.density().iter().zip(s_fast.density()) {
            if a.abs() > 0.05 * peak {
                max_rel_diff = max_rel_diff.max((a - b).abs() / a.abs());
            }
        }
        assert!(
            max_rel_diff > 0.1,
            "spectra should differ pointwise, max rel diff {max_rel_diff}"
        );
    }

    #[test]
    fn zero_t_angular_shape_is_the_angular_weight_at_rest() {
        let cfg = QuadratureConfig::default();
        let theta = 0.8;
        let p = params(0.0, theta, 3e13, 0.0, 0.0);
        let grid = auto_x_grid(33).unwrap();
        let s = angular_distribution(&p, &grid, &cfg).unwrap();
        // at β = 0 the ω-integral is x-independent, so the density is
        // proportional to the angular weight f(x, θ)
        let mid = s.len() / 2;
        let x0 = s.abscissa()[mid];
        let d0 = s.density()[mid];
        for (x, d) in s.abscissa().iter().zip(s.density()) {
            let expect = angular_weight(0.0, *x, theta) / angular_weight(0.0, x0, theta);
            assert_relative_eq!(d / d0, expect, max_relative = 1e-6);
        }
    }

    #[test]
    fn angular_distribution_symmetric_under_theta_reflection() {
        let cfg = QuadratureConfig::default();
        let grid = auto_x_grid(17).unwrap();
        let a = angular_distribution(&params(0.4, 0.6, 3e13, 0.0, 0.0), &grid, &cfg).unwrap();
        let b = angular_distribution(
            &params(0.4, std::f64::consts::PI - 0.6, 3e13, 0.0, 0.0),
            &grid,
            &cfg,
        )
        .unwrap();
        for (x, y) in a.density().iter().zip(b.density()) {
            assert_relative_eq!(x, y, max_relative = 1e-9);
        }
    }

    #[test]
    fn angular_total_is_theta_independent_and_matches_i0() {
        let cfg = QuadratureConfig::default();
        let omega_spin = 3e13;
        let i0 = crate::quadrature::zero_t_intensity(
            &lorentz_response(),
            omega_spin,
            &cfg,
        )
        .unwrap()
        .value;
        let grid = auto_x_grid(513).unwrap();
        for theta in [0.0, 0.7, std::f64::consts::FRAC_PI_2] {
            let p = params(0.5, theta, omega_spin, 0.0, 0.0);
            let s = angular_distribution(&p, &grid, &cfg).unwrap();
            assert_relative_eq!(s.trapezoid_total(), i0, max_relative = 1e-3);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = params(0.3, 0.7, 1e13, 100.0, 350.0);
        let cfg = QuadratureConfig::default();
        let grid = auto_omega_grid(&p, &cfg, 64).unwrap();
        let s = intensity_spectrum(&p, &grid, &cfg).unwrap();

        let csv_path = dir.path().join("s.csv");
        write_series(&s, &csv_path, SeriesFormat::Csv).unwrap();
        let back = read_series(&csv_path, SeriesFormat::Csv).unwrap();
        assert_eq!(s.abscissa(), back.abscissa());
        assert_eq!(s.density(), back.density());
        assert_eq!(s.metadata(), back.metadata());

        let json_path = dir.path().join("s.json");
        write_series(&s, &json_path, SeriesFormat::Json).unwrap();
        let back = read_series(&json_path, SeriesFormat::Json).unwrap();
        assert_eq!(s.abscissa(), back.abscissa());
        assert_eq!(s.density(), back.density());
        assert_eq!(s.metadata(), back.metadata());
    }

    #[test]
    fn metadata_records_parameters_and_hash() {
        let p = params(0.3, 0.7, 1e13, 100.0, 350.0);
        let cfg = QuadratureConfig::default();
        let grid = auto_omega_grid(&p, &cfg, 64).unwrap();
        let s = intensity_spectrum(&p, &grid, &cfg).unwrap();
        let m = s.metadata();
        for key in [
            "kind",
            "beta",
            "theta_rad",
            "omega_spin_rad_s",
            "t1_k",
            "t2_k",
            "electric_model",
            "magnetic_model",
            "rel_tol",
            "abs_tol",
            "max_depth",
            "cutoff_multiplier",
            "zero_t_reduction",
            "config_hash",
        ] {
            assert!(m.contains_key(key), "missing metadata key {key}");
        }
        assert_eq!(m["kind"], "omega");
        assert_eq!(m["zero_t_reduction"], "false");
    }

    #[test]
    fn empty_and_malformed_grids_are_rejected() {
        let p = params(0.3, 0.7, 1e13, 100.0, 350.0);
        let cfg = QuadratureConfig::default();
        assert!(intensity_spectrum(&p, &[], &cfg).is_err());
        assert!(intensity_spectrum(&p, &[-1.0, 1.0], &cfg).is_err());
        assert!(angular_distribution(&p, &[], &cfg).is_err());
        assert!(angular_distribution(&p, &[-2.0, 0.0], &cfg).is_err());
        assert!(SpectrumSeries::new(vec![1.0, 1.0], vec![0.0, 0.0], BTreeMap::new()).is_err());
        assert!(SpectrumSeries::new(vec![], vec![], BTreeMap::new()).is_err());
        assert!(
            SpectrumSeries::new(vec![0.0, 1.0], vec![f64::NAN, 0.0], BTreeMap::new()).is_err()
        );
    }

    #[test]
    fn format_inference() {
        assert_eq!(
            SeriesFormat::from_path(Path::new("a/b.csv")),
            Some(SeriesFormat::Csv)
        );
        assert_eq!(
            SeriesFormat::from_path(Path::new("a/b.json")),
            Some(SeriesFormat::Json)
        );
        assert_eq!(SeriesFormat::from_path(Path::new("a/b.txt")), None);
    }
}
