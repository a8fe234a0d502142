//! Run configuration for the verification binary.
//!
//! A [`RunConfig`] is a JSON-serializable description of one workbench
//! instance: the spatial torus, the time grid, quadrature and truncation
//! orders, the gauge data (ξ list and optional gauge functional Λ), the
//! master RNG seed, the suite selection, and per-check tolerance overrides.
//! Every field has a default, so `{}` is a valid configuration; unknown
//! fields are rejected so that typos cannot silently fall back to defaults.
//!
//! [`RunConfig::validate`] checks the semantic invariants that the schema
//! cannot express (positive lengths, window coverage, truncation bounds, …)
//! and reports violations with field-level messages.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fock::MAX_GENERATORS;
use crate::spatial::SpatialComplex;
use crate::wave::TimeGrid;
use crate::{Error, Result};

/// The spatial torus: dimension, subdivisions per axis, edge lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    /// Dimension of Σ (1 or 2).
    pub dimension: usize,
    /// Number of subdivisions per axis.
    pub divisions: usize,
    /// Edge length per axis; must have `dimension` entries.
    pub lengths: Vec<f64>,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig {
            dimension: 2,
            divisions: 8,
            lengths: vec![1.0, 1.0],
        }
    }
}

/// The time grid for propagation: window, coarse intervals, refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_min: f64,
    pub t_max: f64,
    /// Coarse sample intervals across the window (must be even, so that the
    /// refined grid has an odd point count and Simpson quadrature applies).
    pub intervals: usize,
    /// Refined (field-track) subintervals per coarse interval.
    pub refinement: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            t_min: -4.0,
            t_max: 4.0,
            intervals: 400,
            refinement: 20,
        }
    }
}

/// Truncation orders of the Fock–Krein representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    /// Number of smeared-field generators of the representation family.
    pub fock_generators: usize,
    /// Total particle-number cutoff N of the truncated Fock sector.
    pub particle_cutoff: usize,
    /// Hermite level cutoff per zero-mode direction of the oscillator
    /// sector.
    pub hermite_cutoff: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            fock_generators: 6,
            particle_cutoff: 3,
            hermite_cutoff: 5,
        }
    }
}

/// Time profile parameters of the gauge functional Λ = p(t) ⊗ φ, where the
/// vertex shape φ is drawn from the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            center: 0.0,
            half_width: 1.0,
            amplitude: 1.0,
        }
    }
}

/// Gauge data: the ξ values exercised by the gauge-parameter suite, and the
/// optional gauge functional used by the representation suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeConfig {
    /// Gauge parameters for the ξ-dynamics suite.
    pub xi: Vec<f64>,
    /// Gauge functional; `null` disables the one-point-shift checks.
    pub lambda: Option<LambdaConfig>,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            xi: vec![0.5, 1.0, 2.0],
            lambda: Some(LambdaConfig::default()),
        }
    }
}

/// Complete configuration of a workbench run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub spatial: SpatialConfig,
    pub time: TimeConfig,
    /// Quadrature points for trigonometric-moment integrals.
    pub quadrature_points: usize,
    pub truncation: TruncationConfig,
    pub gauge: GaugeConfig,
    /// Master RNG seed; every check derives its own stream from
    /// (seed, check name).
    pub seed: u64,
    /// Suites to run when the command line requests none; empty means all.
    pub suites: Vec<String>,
    /// Per-check tolerance overrides, keyed by `"<suite>/<check>"`.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spatial: SpatialConfig::default(),
            time: TimeConfig::default(),
            quadrature_points: 1600,
            truncation: TruncationConfig::default(),
            gauge: GaugeConfig::default(),
            seed: 7,
            suites: Vec::new(),
            tolerances: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Parses a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Loads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Semantic validation with field-level messages.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));

        if !(1..=2).contains(&self.spatial.dimension) {
            return fail(
                "spatial.dimension",
                format!("must be 1 or 2, got {}", self.spatial.dimension),
            );
        }
        if !(2..=128).contains(&self.spatial.divisions) {
            return fail(
                "spatial.divisions",
                format!("must lie in 2..=128, got {}", self.spatial.divisions),
            );
        }
        if self.spatial.lengths.len() != self.spatial.dimension {
            return fail(
                "spatial.lengths",
                format!(
                    "needs {} entries for dimension {}, got {}",
                    self.spatial.dimension,
                    self.spatial.dimension,
                    self.spatial.lengths.len()
                ),
            );
        }
        for (i, &l) in self.spatial.lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return fail("spatial.lengths", format!("entry {i} must be finite and positive, got {l}"));
            }
        }

        if !self.time.t_min.is_finite() || !self.time.t_max.is_finite() {
            return fail("time", "window bounds must be finite".to_string());
        }
        // The verification corpora place sources in |t| < 3 and time-slice
        // cutoffs out to |t| = 3.8, so the window must contain [−4, 4].
        if self.time.t_min > -4.0 || self.time.t_max < 4.0 {
            return fail(
                "time",
                format!(
                    "window [{}, {}] must contain [-4, 4] (the corpus support)",
                    self.time.t_min, self.time.t_max
                ),
            );
        }
        if self.time.intervals < 2 || !self.time.intervals.is_multiple_of(2) {
            return fail(
                "time.intervals",
                format!("must be even and at least 2, got {}", self.time.intervals),
            );
        }
        if self.time.refinement == 0 {
            return fail("time.refinement", "must be at least 1".to_string());
        }
        if self.time.intervals.saturating_mul(self.time.refinement) > 10_000_000 {
            return fail(
                "time",
                format!(
                    "refined grid has {} panels; the limit is 10^7",
                    self.time.intervals * self.time.refinement
                ),
            );
        }

        if self.quadrature_points < 64 {
            return fail(
                "quadrature_points",
                format!("must be at least 64, got {}", self.quadrature_points),
            );
        }

        if !(1..=MAX_GENERATORS).contains(&self.truncation.fock_generators) {
            return fail(
                "truncation.fock_generators",
                format!(
                    "must lie in 1..={MAX_GENERATORS}, got {}",
                    self.truncation.fock_generators
                ),
            );
        }
        if self.truncation.particle_cutoff == 0 {
            return fail("truncation.particle_cutoff", "must be at least 1".to_string());
        }
        if !(2..=16).contains(&self.truncation.hermite_cutoff) {
            return fail(
                "truncation.hermite_cutoff",
                format!("must lie in 2..=16, got {}", self.truncation.hermite_cutoff),
            );
        }

        if self.gauge.xi.is_empty() {
            return fail("gauge.xi", "needs at least one gauge parameter".to_string());
        }
        for (i, &xi) in self.gauge.xi.iter().enumerate() {
            if !(xi.is_finite() && xi > 0.0) {
                return fail("gauge.xi", format!("entry {i} must be finite and positive, got {xi}"));
            }
        }
        if let Some(lam) = &self.gauge.lambda {
            if !(lam.half_width.is_finite() && lam.half_width > 0.0) {
                return fail(
                    "gauge.lambda.half_width",
                    format!("must be finite and positive, got {}", lam.half_width),
                );
            }
            if !lam.center.is_finite() || !lam.amplitude.is_finite() {
                return fail("gauge.lambda", "center and amplitude must be finite".to_string());
            }
            if lam.center.abs() + lam.half_width > 3.9 {
                return fail(
                    "gauge.lambda",
                    format!(
                        "support [{}, {}] must stay inside (-3.9, 3.9)",
                        lam.center - lam.half_width,
                        lam.center + lam.half_width
                    ),
                );
            }
        }

        for (key, &tol) in &self.tolerances {
            if !(tol.is_finite() && tol >= 0.0) {
                return fail(
                    "tolerances",
                    format!("override '{key}' must be finite and non-negative, got {tol}"),
                );
            }
        }
        Ok(())
    }

    /// Builds the configured spatial complex.
    pub fn complex(&self) -> Result<SpatialComplex> {
        SpatialComplex::flat_torus(
            self.spatial.dimension,
            self.spatial.divisions,
            &self.spatial.lengths,
        )
    }

    /// Builds the configured time grid.
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(
            self.time.t_min,
            self.time.t_max,
            self.time.intervals,
            self.time.refinement,
        )
    }

    /// Tolerance for a check, honoring `"<suite>/<check>"` overrides.
    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}
