//! Command-line front end of the verification workbench.
//!
//! Subcommands:
//!
//! * `verify`   — run the named residual suites and emit a JSON report.
//! * `spectrum` — emit the Hodge–Laplacian spectra of the configured torus
//!   as CSV.
//! * `twopoint` — emit the Wightman-style two-point function of a fixed
//!   test form as CSV, optionally with its discrete Fourier magnitudes.
//!
//! Exit codes: 0 on success, 1 when at least one check fails (the report is
//! still written), 2 on configuration errors, 3 on internal numerical
//! errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use workbench::config::RunConfig;
use workbench::oneparticle::OneParticleStructure;
use workbench::profile::TimeProfile;
use workbench::spacetime::{SeparableTerm, SpacetimeForm};
use workbench::spatial::{EigenBasis, SpatialForm};
use workbench::suites::run_suites;
use workbench::wave::WaveContext;
use workbench::{Error, Result};

/// Environment variable naming a default configuration file, consulted when
/// `--config` is not given.
const CONFIG_ENV: &str = "WORKBENCH_CONFIG";

#[derive(Parser)]
#[command(
    name = "workbench",
    about = "Verification workbench for Gupta–Bleuler quantization on a lattice spacetime",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a JSON configuration file.  Falls back to $WORKBENCH_CONFIG,
    /// then to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the output here instead of to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and emit a JSON report.
    Verify {
        #[command(flatten)]
        common: ConfigArg,

        /// Suites to run (repeatable).  Defaults to the configured list,
        /// then to every suite.
        #[arg(long = "suite")]
        suites: Vec<String>,

        /// Maximum number of suites to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,

        /// Record per-check wall-clock times in the report.  Off by
        /// default so that reports are byte-for-byte reproducible.
        #[arg(long)]
        timings: bool,
    },
    /// Emit the Hodge–Laplacian spectra as CSV (degree,index,eigenvalue,is_kernel).
    Spectrum {
        #[command(flatten)]
        common: ConfigArg,
    },
    /// Emit the two-point function t ↦ ⟨κf, e^{iHt} κf⟩ of a fixed
    /// eigenmode test form as CSV (t,re,im).
    Twopoint {
        #[command(flatten)]
        common: ConfigArg,

        /// Append the positive-frequency DFT magnitudes and the
        /// negative-frequency mass ratio.
        #[arg(long)]
        fourier: bool,
    },
}

fn load_config(arg: &Option<PathBuf>) -> Result<RunConfig> {
    let path = arg.clone().or_else(|| {
        std::env::var_os(CONFIG_ENV).map(PathBuf::from)
    });
    let config = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|e| {
            Error::Config(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(payload.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write to stdout: {e}")))
        }
    }
}

fn cmd_verify(
    common: &ConfigArg,
    suites: &[String],
    jobs: usize,
    timings: bool,
) -> Result<bool> {
    let config = load_config(&common.config)?;
    let report = run_suites(&config, suites, jobs, timings)?;
    emit(&common.out, &report.to_json())?;
    let failures = report.failures();
    let skipped = report
        .checks
        .iter()
        .filter(|c| c.skipped.is_some())
        .count();
    eprintln!(
        "workbench verify: {} checks, {} failed, {} skipped",
        report.checks.len(),
        failures.len(),
        skipped
    );
    for failure in &failures {
        eprintln!(
            "  FAIL {}/{}: residual {:.3e} > tolerance {:.3e}",
            failure.suite, failure.name, failure.residual, failure.tolerance
        );
    }
    Ok(failures.is_empty())
}

fn cmd_spectrum(common: &ConfigArg) -> Result<()> {
    let config = load_config(&common.config)?;
    let complex = config.complex()?;
    let basis = EigenBasis::analyze(&complex)?;
    let mut csv = String::from("degree,index,eigenvalue,is_kernel\n");
    for degree in 0..=complex.dimension() {
        let eigenvalues = basis.eigenvalues(degree);
        let kernel = basis.kernel_dim(degree);
        for (index, lambda) in eigenvalues.iter().enumerate() {
            csv.push_str(&format!(
                "{degree},{index},{lambda},{}\n",
                index < kernel
            ));
        }
    }
    emit(&common.out, &csv)
}

/// The fixed `twopoint` probe: the first non-harmonic one-form eigenmode,
/// smeared with a unit bump profile centered at t = 0.
fn twopoint_probe(
    complex: &workbench::spatial::SpatialComplex,
    basis: &EigenBasis,
) -> Result<SpacetimeForm> {
    let kernel = basis.kernel_dim(1);
    if basis.eigenvalues(1).len() <= kernel {
        return Err(Error::Config(
            "the one-form Laplacian has no nonzero modes on this lattice".to_string(),
        ));
    }
    let shape = SpatialForm {
        degree: 1,
        values: basis.modes(1).column(kernel).clone_owned(),
    };
    SpacetimeForm::new(
        complex,
        1,
        vec![],
        vec![SeparableTerm {
            profile: TimeProfile::bump(0.0, 1.0, 1.0)?,
            shape,
        }],
    )
}

fn cmd_twopoint(common: &ConfigArg, fourier: bool) -> Result<()> {
    const SAMPLES: usize = 256;
    const SPAN: f64 = 32.0;
    let config = load_config(&common.config)?;
    let complex = config.complex()?;
    let basis = EigenBasis::analyze(&complex)?;
    let grid = config.grid()?;
    let ctx = WaveContext::new(&complex, &basis, grid)?;
    let structure = OneParticleStructure::new(&ctx, config.quadrature_points)?;
    let probe = twopoint_probe(&complex, &basis)?;
    let kappa = structure.kappa(&probe)?;

    let mut csv = String::from("t,re,im\n");
    let step = SPAN / SAMPLES as f64;
    for j in 0..SAMPLES {
        let t = -SPAN / 2.0 + j as f64 * step;
        let value = structure.krein_inner(&kappa, &structure.evolve(&kappa, t));
        csv.push_str(&format!("{t},{},{}\n", value.re, value.im));
    }
    if fourier {
        let spectrum = structure.positive_frequency_spectrum(&probe, &probe, SAMPLES, SPAN)?;
        csv.push('\n');
        csv.push_str("omega,magnitude\n");
        for (omega, magnitude) in spectrum.frequencies.iter().zip(&spectrum.magnitudes) {
            csv.push_str(&format!("{omega},{magnitude}\n"));
        }
        csv.push_str(&format!(
            "negative_mass_ratio,{}\n",
            spectrum.negative_mass_ratio(0.5)
        ));
    }
    emit(&common.out, &csv)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify {
            common,
            suites,
            jobs,
            timings,
        } => cmd_verify(common, suites, *jobs, *timings),
        Command::Spectrum { common } => cmd_spectrum(common).map(|()| true),
        Command::Twopoint { common, fourier } => {
            cmd_twopoint(common, *fourier).map(|()| true)
        }
    }
}

fn main() {
    std::process::exit(match run() {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("workbench: {err}");
            match err {
                Error::Config(_) => 2,
                Error::Domain(_) | Error::Numerical(_) => 3,
            }
        }
    });
}
