//! Machine-readable verification reports.
//!
//! A [`SuiteReport`] echoes the configuration it ran under, stamps the
//! build environment, states the sign/normalization conventions the checks
//! assume, and lists one [`CheckRecord`] per executed check.  Records carry
//! the verified property as a self-documenting mathematical statement next
//! to the measured residual and the tolerance it was held to.
//!
//! Reports are bit-for-bit reproducible for a fixed (config, seed): checks
//! are sorted by (suite, name), every residual is computed from a per-check
//! RNG stream independent of scheduling, and wall-clock timings are only
//! included on explicit request.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Schema version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Suite that owns the check.
    pub suite: String,
    /// Stable check name; `"<suite>/<name>"` keys tolerance overrides.
    pub name: String,
    /// The verified property, stated mathematically.
    pub statement: String,
    /// Measured residual (0 for skipped checks).
    pub residual: f64,
    /// Tolerance the residual was compared against.
    pub tolerance: f64,
    /// Whether `residual <= tolerance` (skipped checks pass vacuously).
    pub passed: bool,
    /// Reason the check was skipped, when it was.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
    /// Wall-clock runtime; only present when timings were requested, since
    /// they are not reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<u64>,
}

impl CheckRecord {
    /// A measured check; passes iff the residual is finite and within
    /// tolerance.
    pub fn measured(
        suite: &str,
        name: &str,
        statement: &str,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        CheckRecord {
            suite: suite.to_string(),
            name: name.to_string(),
            statement: statement.to_string(),
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
            skipped: None,
            runtime_ms: None,
        }
    }

    /// A skipped check (unsatisfiable precondition, e.g. insufficient
    /// truncation); recorded so every requested check appears exactly once.
    pub fn skipped(suite: &str, name: &str, statement: &str, reason: &str) -> Self {
        CheckRecord {
            suite: suite.to_string(),
            name: name.to_string(),
            statement: statement.to_string(),
            residual: 0.0,
            tolerance: 0.0,
            passed: true,
            skipped: Some(reason.to_string()),
            runtime_ms: None,
        }
    }
}

/// Build-environment stamp.  Deliberately excludes hostnames and wall-clock
/// times so identical (config, seed) runs emit identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub package: String,
    pub version: String,
    pub target_os: String,
    pub target_arch: String,
}

impl Default for EnvironmentStamp {
    fn default() -> Self {
        EnvironmentStamp {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            target_os: std::env::consts::OS.to_string(),
            target_arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Sign and normalization conventions the residuals assume, stated once per
/// report so the numbers are interpretable on their own.
fn conventions() -> Vec<String> {
    vec![
        "propagator: G = G⁺ − G⁻ (retarded minus advanced); field commutator \
         [Â(f), Â(g)] = −i G(f,g)·1"
            .to_string(),
        "Lorentzian pairing signs at degree 1: (+dt, −spatial); classical \
         symplectic form σ uses (−dt, +spatial), so σ(Ψ^{Gf}, Ψ^{Gg}) = ⟨Gf, g⟩"
            .to_string(),
        crate::brst::NORMALIZATION.to_string(),
        "gauge-parameter intertwiner inverse: 𝔍_R⁻¹ = 1 + (ξ − 1) d∘R∘δ".to_string(),
    ]
}

/// A complete verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub environment: EnvironmentStamp,
    pub conventions: Vec<String>,
    /// Echo of the configuration the checks ran under.
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn new(config: RunConfig) -> Self {
        SuiteReport {
            schema_version: SCHEMA_VERSION,
            environment: EnvironmentStamp::default(),
            conventions: conventions(),
            config,
            checks: Vec::new(),
        }
    }

    /// Canonical ordering: by (suite, name).  Check names are unique within
    /// a suite, so this is a total order independent of scheduling.
    pub fn sort(&mut self) {
        self.checks
            .sort_by(|a, b| (&a.suite, &a.name).cmp(&(&b.suite, &b.name)));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The failed records, for diagnostics.
    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }
}
