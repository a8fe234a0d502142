//! Named verification suites over a configured workbench instance.
//!
//! Each suite builds the configured model (torus, eigenbasis, time grid)
//! and runs a fixed list of residual checks against the structures under
//! test: discrete Hodge theory, the classical propagator bridge, the Krein
//! one-particle structure, the Fock–Krein representation, the field
//! algebra, the gauge-parameter intertwiners, the scalar-sector two-point
//! compatibility conditions, and the positive-frequency diagnostics.
//!
//! Determinism: every check owns an RNG stream seeded from the master seed
//! and the check's qualified name, so results are independent of execution
//! order and of the `--jobs` level used to run suites concurrently.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{observable_ideal_separation, AlgebraElement, FieldAlgebra, Word};
use crate::brst::{BrstCorpus, BrstPair};
use crate::config::RunConfig;
use crate::fock::{GBOperator, GBRepresentation};
use crate::gaugeparam::{SampledOneForm, XiData, XiOperators};
use crate::oneparticle::{OneParticleStructure, ZeroModeVector};
use crate::profile::{SmoothStep, TimeProfile};
use crate::report::{CheckRecord, SuiteReport};
use crate::spacetime::{BlockKind, SeparableTerm, SpacetimeForm};
use crate::spatial::{SpatialComplex, SpatialForm};
use crate::wave::{
    Direction, ModalForm, SolutionBlock, SolutionForm, TimeGrid, TimesliceVariant, WaveContext,
};
use crate::{Error, Result};

/// The available suites, in canonical order.
pub const SUITE_NAMES: [&str; 8] = [
    "geometry",
    "propagation",
    "one_particle",
    "fock",
    "algebra",
    "gauge_param",
    "brst",
    "frequency",
];

/// FNV-1a hash of a check name, mixed into the master seed so that every
/// check draws from its own reproducible RNG stream.
fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// The RNG stream of one named check.
fn check_rng(master_seed: u64, qualified_name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed ^ fnv1a(qualified_name))
}

/// Accumulates the records of one suite, wiring each check to its RNG
/// stream, its tolerance override, and (on request) its wall-clock timing.
struct Recorder<'a> {
    suite: &'static str,
    config: &'a RunConfig,
    timings: bool,
    records: Vec<CheckRecord>,
}

impl<'a> Recorder<'a> {
    fn new(suite: &'static str, config: &'a RunConfig, timings: bool) -> Self {
        Recorder {
            suite,
            config,
            timings,
            records: Vec::new(),
        }
    }

    /// Runs one check body and records its residual against the (possibly
    /// overridden) tolerance.
    fn run(
        &mut self,
        name: &str,
        statement: &str,
        default_tolerance: f64,
        body: impl FnOnce(&mut ChaCha8Rng) -> Result<f64>,
    ) -> Result<()> {
        let key = format!("{}/{name}", self.suite);
        let mut rng = check_rng(self.config.seed, &key);
        let started = Instant::now();
        let residual = body(&mut rng)?;
        let tolerance = self.config.tolerance(&key, default_tolerance);
        let mut record = CheckRecord::measured(self.suite, name, statement, residual, tolerance);
        if self.timings {
            record.runtime_ms = Some(started.elapsed().as_millis() as u64);
        }
        self.records.push(record);
        Ok(())
    }

    /// Records a check whose precondition cannot be met under this
    /// configuration.
    fn skip(&mut self, name: &str, statement: &str, reason: &str) {
        self.records
            .push(CheckRecord::skipped(self.suite, name, statement, reason));
    }

    fn finish(self) -> Vec<CheckRecord> {
        self.records
    }
}

/// The configured spatial model, shared by every suite.
struct Setup {
    complex: SpatialComplex,
    basis: crate::spatial::EigenBasis,
    grid: TimeGrid,
}

impl Setup {
    fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let complex = config.complex()?;
        let basis = crate::spatial::EigenBasis::analyze(&complex)?;
        let grid = config.grid()?;
        Ok(Setup {
            complex,
            basis,
            grid,
        })
    }

    fn ctx(&self) -> Result<WaveContext<'_>> {
        WaveContext::new(&self.complex, &self.basis, self.grid.clone())
    }
}

fn require_dimension_two(config: &RunConfig, suite: &str) -> Result<()> {
    if config.spatial.dimension != 2 {
        return Err(Error::Config(format!(
            "suite '{suite}' requires spatial dimension 2 \
             (its corpus uses 2-forms and the harmonic one-form sector)"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Seeded corpora.

fn random_profile(rng: &mut ChaCha8Rng) -> TimeProfile {
    let center = rng.gen_range(-1.5..1.5);
    let half_width = rng.gen_range(0.7..1.3);
    let amplitude = rng.gen_range(0.5..1.5);
    match rng.gen_range(0..3) {
        0 => TimeProfile::bump(center, half_width, amplitude),
        1 => TimeProfile::odd_bump(center, half_width, amplitude),
        _ => TimeProfile::wiggle(center, half_width, amplitude),
    }
    .expect("profile parameters are in range")
}

fn random_shape(rng: &mut ChaCha8Rng, complex: &SpatialComplex, degree: usize) -> SpatialForm {
    SpatialForm {
        degree,
        values: DVector::from_fn(complex.n_cells(degree), |_, _| rng.gen_range(-1.0..1.0)),
    }
}

fn random_one_form(rng: &mut ChaCha8Rng, complex: &SpatialComplex) -> SpacetimeForm {
    SpacetimeForm::new(
        complex,
        1,
        vec![SeparableTerm {
            profile: random_profile(rng),
            shape: random_shape(rng, complex, 0),
        }],
        vec![SeparableTerm {
            profile: random_profile(rng),
            shape: random_shape(rng, complex, 1),
        }],
    )
    .expect("valid one-form")
}

fn random_scalar(rng: &mut ChaCha8Rng, complex: &SpatialComplex) -> SpacetimeForm {
    SpacetimeForm::scalar_term(complex, random_profile(rng), random_shape(rng, complex, 0))
        .expect("valid scalar form")
}

/// A co-closed 1-form, as δ of a random 2-form (δ² = 0 exactly).
fn co_closed_one_form(rng: &mut ChaCha8Rng, complex: &SpatialComplex) -> SpacetimeForm {
    SpacetimeForm::new(
        complex,
        2,
        vec![SeparableTerm {
            profile: random_profile(rng),
            shape: random_shape(rng, complex, 1),
        }],
        vec![SeparableTerm {
            profile: random_profile(rng),
            shape: random_shape(rng, complex, 2),
        }],
    )
    .expect("valid two-form")
    .delta(complex)
    .expect("codifferential of a two-form")
}

/// An exact 1-form dφ.
fn exact_one_form(rng: &mut ChaCha8Rng, complex: &SpatialComplex) -> SpacetimeForm {
    random_scalar(rng, complex)
        .d(complex)
        .expect("differential of a scalar")
}

/// The configured gauge functional Λ = p(t) ⊗ φ, with a seeded vertex
/// shape.
fn lambda_form(
    config: &RunConfig,
    complex: &SpatialComplex,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SpacetimeForm>> {
    let Some(lam) = &config.gauge.lambda else {
        return Ok(None);
    };
    let profile = TimeProfile::bump(lam.center, lam.half_width, lam.amplitude)?;
    let shape = random_shape(rng, complex, 0);
    Ok(Some(SpacetimeForm::scalar_term(complex, profile, shape)?))
}

// ---------------------------------------------------------------------------
// Small numerics shared by checks.

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Blockwise signs that make the time-domain integral of a propagated
/// solution against a test form reproduce the σ-oriented duality pairing
/// `⟨Gf, g⟩_M = σ(Ψ^{Gf}, Ψ^{Gg})`: the signature signs `(+dt, −spatial)`
/// at degree 1, and a global minus at degree 0 from the propagator
/// orientation.
fn sigma_oriented_signs(degree: usize) -> &'static [(f64, BlockKind)] {
    match degree {
        0 => &[(-1.0, BlockKind::Spatial)],
        _ => &[(1.0, BlockKind::Dt), (-1.0, BlockKind::Spatial)],
    }
}

/// `⟨sol, g⟩_M` (σ-oriented) by the reference quadrature: a trapezoid rule
/// with `n_intervals` time samples across the whole window.  The integrand
/// is smooth and compactly supported, so the trapezoid rule converges
/// superalgebraically — doubling the sample count divides the error by far
/// more than 4 until the rounding floor.
fn bridge_pairing(
    ctx: &WaveContext,
    sol: &SolutionForm,
    gm: &ModalForm,
    n_intervals: usize,
) -> f64 {
    let (t0, t1) = (ctx.grid.t_min(), ctx.grid.t_max());
    let step = (t1 - t0) / n_intervals as f64;
    let times: Vec<f64> = (0..=n_intervals).map(|j| t0 + j as f64 * step).collect();
    let mut total = 0.0;
    for &(sign, kind) in sigma_oriented_signs(sol.degree) {
        let (Some(sb), Some(mb)) = (sol.block(kind), gm.block(kind)) else {
            continue;
        };
        let samples = mb.samples(&times);
        let mut acc = 0.0;
        for (j, &t) in times.iter().enumerate() {
            let weight = if j == 0 || j == n_intervals { 0.5 } else { 1.0 };
            let (value, _) = ctx.solution_coeffs_at(sb, t);
            acc += weight * value.dot(&samples.column(j));
        }
        total += sign * acc * step;
    }
    total
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Samples one block of a closed-form test form on the refined grid.
fn block_samples(ctx: &WaveContext, f: &SpacetimeForm, kind: BlockKind) -> Result<DMatrix<f64>> {
    let modal = ctx.modal(f)?;
    Ok(match modal.block(kind) {
        Some(mb) => mb.samples(ctx.times()),
        None => DMatrix::zeros(0, ctx.times().len()),
    })
}

// ---------------------------------------------------------------------------
// geometry

fn geometry_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    let setup = Setup::new(config)?;
    let complex = &setup.complex;
    let basis = &setup.basis;
    let dim = complex.dimension();
    let mut rec = Recorder::new("geometry", config, timings);

    rec.run(
        "differential_squares_to_zero",
        "d_{p+1} ∘ d_p = 0 exactly, as an integer incidence identity",
        0.0,
        |_| {
            let mut worst = 0.0f64;
            for p in 0..dim.saturating_sub(1) {
                let lower = complex.incidence(p).expect("incidence d_p");
                let upper = complex.incidence(p + 1).expect("incidence d_{p+1}");
                worst = worst.max((upper * lower).amax());
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "codifferential_adjoint_to_differential",
        "⟨d a, b⟩_{p+1} = ⟨a, δ b⟩_p for random cochains at every degree",
        1e-12,
        |rng| {
            let mut worst = 0.0f64;
            for p in 0..dim {
                for _ in 0..20 {
                    let a = DVector::from_fn(complex.n_cells(p), |_, _| rng.gen_range(-1.0..1.0));
                    let b =
                        DVector::from_fn(complex.n_cells(p + 1), |_, _| rng.gen_range(-1.0..1.0));
                    let lhs = complex.inner_on(p + 1, &complex.d_on(p, &a)?, &b)?;
                    let rhs = complex.inner_on(p, &a, &complex.delta_on(p + 1, &b)?)?;
                    worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "laplacian_kernels_have_betti_dimensions",
        "dim ker Δᵖ = C(dim Σ, p), the torus Betti numbers",
        0.0,
        |_| {
            let mut mismatch = 0usize;
            for p in 0..=dim {
                mismatch += basis.kernel_dim(p).abs_diff(binomial(dim, p));
            }
            Ok(mismatch as f64)
        },
    )?;

    rec.run(
        "scalar_spectrum_matches_the_product_formula",
        "Δ⁰ eigenvalues are Σ_axes (2/h)² sin²(π k / n), in sorted order",
        1e-9,
        |_| {
            let n = complex.divisions();
            let axis_lambda = |axis: usize, k: usize| {
                let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
                (2.0 / complex.spacing(axis)).powi(2) * s * s
            };
            let mut expected: Vec<f64> = match dim {
                1 => (0..n).map(|k| axis_lambda(0, k)).collect(),
                _ => (0..n)
                    .flat_map(|k| (0..n).map(move |l| axis_lambda(0, k) + axis_lambda(1, l)))
                    .collect(),
            };
            expected.sort_by(f64::total_cmp);
            let computed = basis.eigenvalues(0);
            let mut worst = 0.0f64;
            for (i, lam) in expected.iter().enumerate() {
                worst = worst.max((computed[i] - lam).abs() / (1.0 + lam));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "kernel_eigenvalues_vanish_exactly",
        "the leading dim ker Δᵖ eigenvalues are stored as exact zeros",
        0.0,
        |_| {
            let mut worst = 0.0f64;
            for p in 0..=dim {
                let lam = basis.eigenvalues(p);
                for i in 0..basis.kernel_dim(p) {
                    worst = worst.max(lam[i].abs());
                }
            }
            Ok(worst)
        },
    )?;

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// propagation

fn propagation_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "propagation")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let mut rec = Recorder::new("propagation", config, timings);

    let mixed_pair = |rng: &mut ChaCha8Rng, trial: usize| {
        if trial.is_multiple_of(2) {
            (
                random_one_form(rng, &setup.complex),
                random_one_form(rng, &setup.complex),
            )
        } else {
            (
                random_scalar(rng, &setup.complex),
                random_scalar(rng, &setup.complex),
            )
        }
    };

    rec.run(
        "bridge_identity_links_pairing_and_symplectic_form",
        "σ(Ψ₀^{Gf}, Ψ₀^{Gg}) = ⟨Gf, g⟩ under the reference trapezoid \
         quadrature over 200 seeded pairs",
        1e-4,
        |rng| {
            let mut worst = 0.0f64;
            for trial in 0..200 {
                let (f, g) = mixed_pair(rng, trial);
                let (fm, gm) = (ctx.modal(&f)?, ctx.modal(&g)?);
                let (pf, pg) = (ctx.pauli_jordan(&fm, quad), ctx.pauli_jordan(&gm, quad));
                let sigma = ctx.sigma(
                    &ctx.solution_cauchy_at(&pf, 0.0)?,
                    &ctx.solution_cauchy_at(&pg, 0.0)?,
                )?;
                let pairing = bridge_pairing(&ctx, &pf, &gm, config.time.intervals);
                worst = worst.max((pairing - sigma).abs() / (1.0 + sigma.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "bridge_quadrature_error_falls_under_sample_doubling",
        "doubling the time samples divides the bridge quadrature error by ≥ 4 \
         (superalgebraic trapezoid convergence on smooth compactly supported \
         integrands); the residual is 4 · (fine error) / (coarse error)",
        1.0,
        |rng| {
            let mut coarse_error = 0.0f64;
            let mut fine_error = 0.0f64;
            for trial in 0..20 {
                let (f, g) = mixed_pair(rng, trial);
                let (fm, gm) = (ctx.modal(&f)?, ctx.modal(&g)?);
                let sol = ctx.pauli_jordan(&fm, quad);
                let truth = ctx.propagator_pairing(&fm, &gm, quad)?;
                coarse_error +=
                    (bridge_pairing(&ctx, &sol, &gm, config.time.intervals) - truth).abs();
                fine_error +=
                    (bridge_pairing(&ctx, &sol, &gm, 2 * config.time.intervals) - truth).abs();
            }
            // Below this summed error the quadrature has already converged
            // to the rounding floor and the ratio is noise.
            if coarse_error <= 1e-11 {
                return Ok(0.0);
            }
            Ok(4.0 * fine_error / coarse_error)
        },
    )?;

    rec.run(
        "retarded_green_solves_the_wave_equation",
        "□(G⁺f) = f on interior samples, by five-point finite differences",
        2e-4,
        |rng| {
            let mut residual = 0.0f64;
            for trial in 0..2 {
                let f = if trial == 0 {
                    random_scalar(rng, &setup.complex)
                } else {
                    random_one_form(rng, &setup.complex)
                };
                let fm = ctx.modal(&f)?;
                let field = ctx.green(&fm, Direction::Retarded);
                for kind in [BlockKind::Dt, BlockKind::Spatial] {
                    let (Some(tracks), Some(mb)) = (field.block(kind), fm.block(kind)) else {
                        continue;
                    };
                    let rhs = mb.samples(ctx.times());
                    let (boxed, range) = ctx.fd_box(mb.degree, &tracks.u);
                    let mut worst = 0.0f64;
                    let mut scale = 1.0f64;
                    for k in 0..rhs.nrows() {
                        for j in range.clone() {
                            worst = worst.max((boxed[(k, j)] - rhs[(k, j)]).abs());
                            scale = scale.max(rhs[(k, j)].abs());
                        }
                    }
                    residual = residual.max(worst / scale);
                }
            }
            Ok(residual)
        },
    )?;

    rec.run(
        "cauchy_evolution_reproduces_homogeneous_solutions",
        "solve_cauchy of the t = 1.3 data of Gf, evolved back, returns the t = 0 data",
        1e-8,
        |rng| {
            let mut worst = 0.0f64;
            for trial in 0..3 {
                let (f, _) = mixed_pair(rng, trial);
                let sol = ctx.pauli_jordan(&ctx.modal(&f)?, quad);
                let resolved = ctx.solve_cauchy(&ctx.solution_cauchy_at(&sol, 1.3)?)?;
                let back = ctx.solution_cauchy_at(&resolved, -1.3)?;
                let orig = ctx.solution_cauchy_at(&sol, 0.0)?;
                let blocks = [
                    (back.dt.as_ref(), orig.dt.as_ref()),
                    (back.spatial.as_ref(), orig.spatial.as_ref()),
                ];
                for (xb, yb) in blocks {
                    let (Some(x), Some(y)) = (xb, yb) else {
                        continue;
                    };
                    let scale = 1.0 + y.value.values.amax() + y.velocity.values.amax();
                    worst = worst.max((&x.value.values - &y.value.values).amax() / scale);
                    worst = worst.max((&x.velocity.values - &y.velocity.values).amax() / scale);
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "symplectic_form_is_conserved",
        "σ(Ψ_t^{Gf}, Ψ_t^{Gg}) is time-independent and equals the moment-space ⟨Gf, g⟩",
        1e-8,
        |rng| {
            let mut worst = 0.0f64;
            for trial in 0..5 {
                let (f, g) = mixed_pair(rng, trial);
                let (fm, gm) = (ctx.modal(&f)?, ctx.modal(&g)?);
                let (pf, pg) = (ctx.pauli_jordan(&fm, quad), ctx.pauli_jordan(&gm, quad));
                let expected = ctx.propagator_pairing(&fm, &gm, quad)?;
                for &t in &[-2.5, -1.0, 0.0, 0.8, 3.1] {
                    let s = ctx.sigma(
                        &ctx.solution_cauchy_at(&pf, t)?,
                        &ctx.solution_cauchy_at(&pg, t)?,
                    )?;
                    worst = worst.max((s - expected).abs() / (1.0 + expected.abs()));
                }
            }
            Ok(worst)
        },
    )?;

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// one_particle

fn one_particle_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "one_particle")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let structure = OneParticleStructure::new(&ctx, quad)?;
    let (k0, k1) = structure.kernel_dims();
    let mut rec = Recorder::new("one_particle", config, timings);

    rec.run(
        "kappa_annihilates_wave_operator_images",
        "κ(□f) = 0 for test 1-forms f",
        1e-4,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let f = random_one_form(rng, &setup.complex);
                let scale = structure.kappa(&f)?.j_norm().max(1.0);
                worst = worst.max(structure.kappa(&f.box_operator(&setup.complex)?)?.j_norm() / scale);
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "zero_mode_map_annihilates_wave_operator_images",
        "ν(□f) = 0 for test 1-forms f",
        1e-5,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let f = random_one_form(rng, &setup.complex);
                let nu = structure.zero_mode(&f.box_operator(&setup.complex)?)?;
                worst = worst.max(nu.gram().sqrt());
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "krein_norm_is_positive_on_co_closed_forms",
        "⟨κf, κf⟩ ≥ 0 and is real for co-closed f",
        1e-8,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let f = co_closed_one_form(rng, &setup.complex);
                let k = structure.kappa(&f)?;
                let norm = structure.krein_inner(&k, &k);
                let scale = 1.0 + k.j_norm().powi(2);
                worst = worst.max((-norm.re).max(0.0) / scale);
                worst = worst.max(norm.im.abs() / scale);
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "exact_forms_are_krein_orthogonal",
        "⟨κ(dφ), κ(g)⟩ = 0 for exact dφ against co-closed and exact g",
        1e-5,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let kd = structure.kappa(&exact_one_form(rng, &setup.complex))?;
                for g in [
                    co_closed_one_form(rng, &setup.complex),
                    exact_one_form(rng, &setup.complex),
                ] {
                    let kg = structure.kappa(&g)?;
                    let inner = structure.krein_inner(&kd, &kg);
                    worst = worst.max(inner.norm() / (1.0 + kd.j_norm() * kg.j_norm()));
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "krein_and_zero_mode_parts_decompose_the_propagator",
        "Im ⟨κf, κg⟩ + G_Z(f, g) = G(f, g)",
        1e-4,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let f = random_one_form(rng, &setup.complex);
                let g = random_one_form(rng, &setup.complex);
                let pairing = structure.g_pairing(&f, &g)?;
                let im = structure
                    .krein_inner(&structure.kappa(&f)?, &structure.kappa(&g)?)
                    .im;
                let gz = structure.gz_form(&f, &g)?;
                worst = worst.max((im + gz - pairing).abs() / (1.0 + pairing.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "zero_mode_form_matches_the_kernel_symplectic_form",
        "G_Z(f, g) = σ_Z(νf, νg) on the harmonic block",
        1e-5,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let f = random_one_form(rng, &setup.complex);
                let g = random_one_form(rng, &setup.complex);
                let gz = structure.gz_form(&f, &g)?;
                let sz = structure.sigma_z(&structure.zero_mode(&f)?, &structure.zero_mode(&g)?);
                worst = worst.max((gz - sz).abs() / (1.0 + gz.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "energy_is_positive_on_co_closed_forms",
        "⟨κf, H κf⟩ ≥ 0 for co-closed f",
        1e-8,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let e = structure.energy_form(&co_closed_one_form(rng, &setup.complex))?;
                worst = worst.max((-e).max(0.0) / (1.0 + e.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "energy_generates_time_translation",
        "H τ(Ψ_t) = i ∂_t τ(Ψ_t) along propagated solutions, by central differences",
        1e-6,
        |rng| {
            let mut worst = 0.0f64;
            let delta = 2e-5;
            for _ in 0..3 {
                let f = random_one_form(rng, &setup.complex);
                let sol = ctx.pauli_jordan(&ctx.modal(&f)?, quad);
                for &t in &[-1.2, 0.0, 0.7] {
                    let h_tau = structure.energy_apply(&structure.tau_at_time(&sol, t));
                    let fd = structure
                        .tau_at_time(&sol, t + delta)
                        .sub(&structure.tau_at_time(&sol, t - delta))
                        .scaled(Complex64::new(0.0, 1.0 / (2.0 * delta)));
                    worst = worst.max(fd.sub(&h_tau).j_norm() / h_tau.j_norm().max(1.0));
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "zero_mode_metric_is_the_plain_gram",
        "K(x, y) is the symmetric blockwise Gram of the harmonic data",
        1e-10,
        |rng| {
            let random_z = |rng: &mut ChaCha8Rng| ZeroModeVector {
                value_scalar: DVector::from_fn(k0, |_, _| rng.gen_range(-1.0..1.0)),
                value_oneform: DVector::from_fn(k1, |_, _| rng.gen_range(-1.0..1.0)),
                velocity_scalar: DVector::from_fn(k0, |_, _| rng.gen_range(-1.0..1.0)),
                velocity_oneform: DVector::from_fn(k1, |_, _| rng.gen_range(-1.0..1.0)),
            };
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let x = random_z(rng);
                let y = random_z(rng);
                let kxx = structure.k_inner(&x, &x);
                worst = worst.max((kxx - x.gram()).abs() / (1.0 + kxx.abs()));
                let kxy = structure.k_inner(&x, &y);
                let kyx = structure.k_inner(&y, &x);
                worst = worst.max((kxy - kyx).abs() / (1.0 + kxy.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "harmonic_duals_realize_the_zero_mode_pairing",
        "⟨F_y, f⟩ = σ_Z(𝔍y, ν(f)) over 30 seeded test forms",
        1e-5,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..30 {
                let mut y = structure.zero_mode_zero();
                for i in 0..k1 {
                    y.velocity_oneform[i] = rng.gen_range(-1.0..1.0);
                }
                let dual = structure.harmonic_dual_form(&y)?;
                let f = random_one_form(rng, &setup.complex);
                let lhs = ctx.solution_pairing(&dual, &ctx.modal(&f)?, quad)?;
                let rhs =
                    structure.sigma_z(&structure.complex_structure(&y), &structure.zero_mode(&f)?);
                worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "harmonic_duals_are_harmonic_and_static",
        "the spatial shape of F_y is closed and co-closed, and F_y has no dt or velocity part",
        1e-10,
        |_| {
            let mut worst = 0.0f64;
            for i in 0..k1 {
                let mut y = structure.zero_mode_zero();
                y.velocity_oneform[i] = 1.0;
                let dual = structure.harmonic_dual_form(&y)?;
                let sp = dual.spatial.as_ref().expect("spatial block");
                let cell = setup.basis.synthesize(1, &sp.a)?;
                worst = worst.max(setup.complex.d_on(1, &cell)?.amax());
                worst = worst.max(setup.complex.delta_on(1, &cell)?.amax());
                worst = worst.max(sp.b.amax());
                if let Some(dt) = dual.dt.as_ref() {
                    worst = worst.max(dt.a.amax()).max(dt.b.amax());
                }
            }
            Ok(worst)
        },
    )?;

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// fock

/// Generating data of the representation under test: co-closed, exact, and
/// unconstrained 1-forms, plus the scalars whose differentials appear in
/// the family (used as gauge generators).
struct FockCorpus {
    family: Vec<SpacetimeForm>,
    phis: Vec<SpacetimeForm>,
    n_co_closed: usize,
}

fn fock_corpus(rng: &mut ChaCha8Rng, complex: &SpatialComplex, generators: usize) -> FockCorpus {
    let n_co_closed = generators.div_ceil(3);
    let n_exact = (generators + 1) / 3;
    let n_random = generators / 3;
    let mut family = Vec::with_capacity(generators);
    for _ in 0..n_co_closed {
        family.push(co_closed_one_form(rng, complex));
    }
    let phis: Vec<SpacetimeForm> = (0..n_exact).map(|_| random_scalar(rng, complex)).collect();
    for phi in &phis {
        family.push(phi.d(complex).expect("differential of a scalar"));
    }
    for _ in 0..n_random {
        family.push(random_one_form(rng, complex));
    }
    FockCorpus {
        family,
        phis,
        n_co_closed,
    }
}

fn fock_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "fock")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let structure = OneParticleStructure::new(&ctx, quad)?;

    // The representation and its generating corpus are shared by every
    // check; they draw from their own named streams.
    let corpus = fock_corpus(
        &mut check_rng(config.seed, "fock/corpus"),
        &setup.complex,
        config.truncation.fock_generators,
    );
    let lambda = lambda_form(
        config,
        &setup.complex,
        &mut check_rng(config.seed, "fock/lambda"),
    )?;
    let rep = GBRepresentation::new(
        &structure,
        &corpus.family,
        config.truncation.particle_cutoff,
        config.truncation.hermite_cutoff,
        lambda.clone(),
    )?;
    let mut rec = Recorder::new("fock", config, timings);

    rec.run(
        "field_commutators_match_the_propagator",
        "[Â(f), Â(g)] = −i G(f, g)·1: the Fock factor carries the excited part \
         on interior occupation sectors, and the full commutator reproduces \
         −i G(f, g) on the vacuum",
        1e-6,
        |_| {
            let fock_interior = rep.fock.interior_indices();
            let mut worst = 0.0f64;
            for i in 0..corpus.family.len() {
                for j in (i + 1)..corpus.family.len() {
                    let (f, g) = (&corpus.family[i], &corpus.family[j]);
                    let op_f = rep.field_operator(f)?;
                    let op_g = rep.field_operator(g)?;
                    let g_total = structure.g_pairing(f, g)?;
                    let g_particle = structure
                        .krein_inner(&structure.kappa(f)?, &structure.kappa(g)?)
                        .im;
                    let scale = 1.0 + g_total.abs() + g_particle.abs();

                    let ff = &op_f.terms[0].0;
                    let fg = &op_g.terms[0].0;
                    let comm = ff * fg - fg * ff;
                    for &row in &fock_interior {
                        for &col in &fock_interior {
                            let expect = if row == col {
                                Complex64::new(0.0, -g_particle)
                            } else {
                                Complex64::new(0.0, 0.0)
                            };
                            worst = worst.max((comm[(row, col)] - expect).norm() / scale);
                        }
                    }

                    let acted = op_f.commutator(&op_g).apply(&rep.vacuum());
                    worst = worst
                        .max((acted[(0, 0)] - Complex64::new(0.0, -g_total)).norm() / scale);
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "zero_mode_commutators_match_the_kernel_form",
        "the oscillator factor of [Â(f), Â(g)] is −i G_Z(f, g) on interior levels",
        1e-8,
        |_| {
            let zero_interior = rep.hermite.interior_indices();
            let mut worst = 0.0f64;
            for i in 0..corpus.family.len() {
                for j in (i + 1)..corpus.family.len() {
                    let (f, g) = (&corpus.family[i], &corpus.family[j]);
                    let op_f = rep.field_operator(f)?;
                    let op_g = rep.field_operator(g)?;
                    let g_zero = structure.gz_form(f, g)?;
                    let g_particle = structure
                        .krein_inner(&structure.kappa(f)?, &structure.kappa(g)?)
                        .im;
                    let scale = 1.0 + g_zero.abs() + g_particle.abs();

                    let bf = &op_f.terms[1].1;
                    let bg = &op_g.terms[1].1;
                    let comm = bf * bg - bg * bf;
                    for &row in &zero_interior {
                        for &col in &zero_interior {
                            let expect = if row == col {
                                Complex64::new(0.0, -g_zero)
                            } else {
                                Complex64::new(0.0, 0.0)
                            };
                            worst = worst.max((comm[(row, col)] - expect).norm() / scale);
                        }
                    }
                }
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "ideal_generators_vanish_in_operator_norm",
        "‖π(Â(□f) − Λ(δ□f)·1)‖ = 0: the dynamical ideal is annihilated",
        1e-4,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..3 {
                let f = random_one_form(rng, &setup.complex);
                worst = worst.max(rep.ideal_generator(&f)?.norm_upper_bound());
            }
            Ok(worst)
        },
    )?;

    let gauge_statement = "ω(Â(f)) = ⟨dΛ, f⟩: the gauge functional shifts the one-point function";
    if lambda.is_some() {
        rec.run(
            "gauge_functional_shifts_the_one_point_function",
            gauge_statement,
            1e-10,
            |_| {
                let d_lambda = lambda.as_ref().expect("gauge functional").d(&setup.complex)?;
                let mut worst = 0.0f64;
                for f in &corpus.family {
                    let one_point = rep.n_point(&[f])?;
                    let expected = d_lambda.lorentz_pairing(&setup.complex, f, quad)?;
                    worst = worst
                        .max((one_point - Complex64::new(expected, 0.0)).norm()
                            / (1.0 + expected.abs()));
                }
                Ok(worst)
            },
        )?;
    } else {
        rec.skip(
            "gauge_functional_shifts_the_one_point_function",
            gauge_statement,
            "skipped: no gauge functional configured (gauge.lambda is null)",
        );
    }

    let gb_statement = "⟨ψ, (Â(dφ) − Λ(□φ)·1) ψ'⟩ = 0 between observable-generated states, \
                        to first and second order";
    if corpus.phis.len() >= 2 {
        rec.run(
            "gauge_generators_vanish_between_observable_states",
            gb_statement,
            1e-5,
            |_| {
                let obs: Vec<GBOperator> = corpus.family[..corpus.n_co_closed.min(2)]
                    .iter()
                    .map(|f| rep.field_operator(f))
                    .collect::<Result<_>>()?;
                let states = rep.monomial_states(&obs, 1);
                let gauge: Vec<GBOperator> = corpus
                    .phis
                    .iter()
                    .map(|phi| rep.gauge_generator(phi))
                    .collect::<Result<_>>()?;
                let mut worst = 0.0f64;
                for y in &gauge {
                    let scale = 1.0 + y.norm_upper_bound();
                    for psi in &states {
                        for psi2 in &states {
                            worst =
                                worst.max(rep.state_inner(psi, &y.apply(psi2)).norm() / scale);
                        }
                    }
                }
                let second = gauge[0].product(&gauge[1]);
                let scale = 1.0 + gauge[0].norm_upper_bound() * gauge[1].norm_upper_bound();
                for psi in &states {
                    for psi2 in &states {
                        worst = worst.max(rep.state_inner(psi, &second.apply(psi2)).norm() / scale);
                    }
                }
                Ok(worst)
            },
        )?;
    } else {
        rec.skip(
            "gauge_generators_vanish_between_observable_states",
            gb_statement,
            "skipped: the family has fewer than two exact generators at this truncation",
        );
    }

    rec.run(
        "observable_state_gram_is_positive",
        "the Krein Gram of states generated by observable (co-closed) fields \
         is positive semidefinite",
        1e-8,
        |_| {
            let obs: Vec<GBOperator> = corpus.family[..corpus.n_co_closed.min(2)]
                .iter()
                .map(|f| rep.field_operator(f))
                .collect::<Result<_>>()?;
            let states = rep.monomial_states(&obs, 3);
            let eig = SymmetricEigen::new(rep.krein_gram(&states));
            let max = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, b| a.min(*b));
            Ok((-min).max(0.0) / max.max(1e-300))
        },
    )?;

    let wick_statement = "ω₄(f₁..f₄) = ω₂ω₂ + ω₂ω₂ + ω₂ω₂ (quasi-free Wick factorization)";
    if 2 * config.truncation.particle_cutoff < 4 {
        rec.skip(
            "four_point_functions_factorize_by_wick",
            wick_statement,
            "skipped: truncation insufficient — the four-point function needs \
             particle cutoff ≥ 2",
        );
    } else if corpus.family.len() < 4 {
        rec.skip(
            "four_point_functions_factorize_by_wick",
            wick_statement,
            "skipped: the family has fewer than four generators",
        );
    } else {
        rec.run(
            "four_point_functions_factorize_by_wick",
            wick_statement,
            1e-8,
            |_| {
                let ops: Vec<GBOperator> = corpus.family[..4]
                    .iter()
                    .map(|f| rep.field_operator(f))
                    .collect::<Result<_>>()?;
                let w2 =
                    |a: usize, b: usize| rep.vacuum_expectation(&[&ops[a], &ops[b]]);
                let w4 = rep.vacuum_expectation(&[&ops[0], &ops[1], &ops[2], &ops[3]]);
                let wick = w2(0, 1) * w2(2, 3) + w2(0, 2) * w2(1, 3) + w2(0, 3) * w2(1, 2);
                let scale = 1.0
                    + (0..4)
                        .flat_map(|a| (0..4).map(move |b| (a, b)))
                        .filter(|(a, b)| a != b)
                        .map(|(a, b)| w2(a, b).norm())
                        .fold(0.0f64, f64::max)
                        .powi(2);
                Ok((w4 - wick).norm() / scale)
            },
        )?;
    }

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// algebra

fn algebra_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "algebra")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let mut rec = Recorder::new("algebra", config, timings);

    rec.run(
        "normal_form_is_idempotent_and_confluent",
        "commutator rewriting reaches the same canonical form under every \
         reduction order, and canonical forms are fixed points, over 10³ words",
        1e-12,
        |rng| {
            let forms: Vec<SpacetimeForm> =
                (0..6).map(|_| random_one_form(rng, &setup.complex)).collect();
            let alg = FieldAlgebra::new(&ctx, forms, quad)?;
            let mut worst = 0.0f64;
            for _ in 0..1000u32 {
                let len = rng.gen_range(2..=5);
                let word: Word = (0..len).map(|_| rng.gen_range(0..6u32)).collect();
                let coeff = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let e = AlgebraElement {
                    terms: [(word, coeff)].into(),
                };
                let first = alg.normal_form(&e);
                let scale = 1.0 + first.l1_norm();
                let shuffled = alg.normal_form_with(&e, &mut |k| rng.gen_range(0..k));
                worst = worst.max(first.l1_distance(&shuffled) / scale);
                worst = worst.max(first.l1_distance(&alg.normal_form(&first)) / scale);
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "gauge_transforms_compose_additively",
        "𝔊_Λ(ab) = 𝔊_Λ(a)𝔊_Λ(b) and 𝔊_{Λ'} ∘ 𝔊_Λ = 𝔊_{Λ+Λ'}",
        1e-10,
        |rng| {
            let forms: Vec<SpacetimeForm> =
                (0..4).map(|_| random_one_form(rng, &setup.complex)).collect();
            let alg = FieldAlgebra::new(&ctx, forms, quad)?;
            let lambda = random_scalar(rng, &setup.complex);
            let lambda2 = random_scalar(rng, &setup.complex);
            let a = AlgebraElement {
                terms: [
                    (vec![2u32, 0u32], Complex64::new(0.7, -0.2)),
                    (vec![1u32], Complex64::new(-1.1, 0.4)),
                ]
                .into(),
            };
            let b = AlgebraElement {
                terms: [
                    (vec![3u32, 1u32], Complex64::new(0.3, 0.9)),
                    (Vec::new(), Complex64::new(0.5, 0.0)),
                ]
                .into(),
            };
            let mut worst = 0.0f64;
            let lhs = alg.gauge_transform(&alg.mul(&a, &b), &lambda)?;
            let rhs = alg.mul(
                &alg.gauge_transform(&a, &lambda)?,
                &alg.gauge_transform(&b, &lambda)?,
            );
            worst = worst.max(lhs.l1_distance(&rhs) / (1.0 + lhs.l1_norm()));

            let summed = SpacetimeForm::new(
                &setup.complex,
                0,
                Vec::new(),
                lambda
                    .terms(BlockKind::Spatial)
                    .iter()
                    .chain(lambda2.terms(BlockKind::Spatial).iter())
                    .cloned()
                    .collect(),
            )?;
            for i in 0..4u32 {
                let gen = AlgebraElement::generator(i);
                let staged =
                    alg.gauge_transform(&alg.gauge_transform(&gen, &lambda)?, &lambda2)?;
                let direct = alg.gauge_transform(&gen, &summed)?;
                worst = worst.max(staged.l1_distance(&direct) / (1.0 + direct.l1_norm()));
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "gauge_transforms_transport_ideal_generators",
        "𝔊_{Λ'} maps the ideal generator of Λ to the ideal generator of Λ+Λ'",
        1e-6,
        |rng| {
            let f = random_one_form(rng, &setup.complex);
            let box_f = f.box_operator(&setup.complex)?;
            let delta_box_f = box_f.delta(&setup.complex)?;
            let lambda = random_scalar(rng, &setup.complex);
            let lambda2 = random_scalar(rng, &setup.complex);
            let alg = FieldAlgebra::new(&ctx, vec![box_f], quad)?;

            let ideal_gen = |lam: &SpacetimeForm| -> Result<AlgebraElement> {
                let pairing = lam.lorentz_pairing(&setup.complex, &delta_box_f, quad)?;
                Ok(AlgebraElement::generator(0)
                    .sub(&AlgebraElement::scalar(Complex64::new(pairing, 0.0))))
            };
            let transported = alg.gauge_transform(&ideal_gen(&lambda)?, &lambda2)?;
            let summed = SpacetimeForm::new(
                &setup.complex,
                0,
                Vec::new(),
                lambda
                    .terms(BlockKind::Spatial)
                    .iter()
                    .chain(lambda2.terms(BlockKind::Spatial).iter())
                    .cloned()
                    .collect(),
            )?;
            let expected = ideal_gen(&summed)?;
            Ok(transported.l1_distance(&expected) / (1.0 + expected.l1_norm()))
        },
    )?;

    rec.run(
        "time_slice_reduction_preserves_represented_fields",
        "‖π(Â(f)) − π(Â(g))‖ = 0 for the time-slice representative g of f, \
         up to the dropped out-of-span excitation",
        1e-4,
        |rng| {
            let structure = OneParticleStructure::new(&ctx, quad)?;
            let (k0, k1) = structure.kernel_dims();
            let mut family: Vec<SpacetimeForm> = (0..3)
                .map(|_| co_closed_one_form(rng, &setup.complex))
                .collect();
            let f = random_one_form(rng, &setup.complex);
            family.push(f.clone());
            let rep = GBRepresentation::new(
                &structure,
                &family,
                config.truncation.particle_cutoff,
                config.truncation.hermite_cutoff,
                None,
            )?;

            let step = SmoothStep::rising(2.7, 3.7)?;
            let sliced = ctx.timeslice_reduce(&f, &step, TimesliceVariant::Generic)?;
            let kappa_g = structure.extend_kappa(&f, &step)?;
            let sol_g = ctx.pauli_jordan_from_field(&sliced.g);
            let dt = sol_g.dt.as_ref().expect("dt block");
            let sp = sol_g.spatial.as_ref().expect("spatial block");
            let nu_g = ZeroModeVector {
                value_scalar: dt.a.rows(0, k0).clone_owned(),
                value_oneform: sp.a.rows(0, k1).clone_owned(),
                velocity_scalar: dt.b.rows(0, k0).clone_owned(),
                velocity_oneform: sp.b.rows(0, k1).clone_owned(),
            };

            let kappa_f = structure.kappa(&f)?;
            let nu_f = structure.zero_mode(&f)?;
            let d_kappa = kappa_f.sub(&kappa_g);
            let d_nu = ZeroModeVector {
                value_scalar: &nu_f.value_scalar - &nu_g.value_scalar,
                value_oneform: &nu_f.value_oneform - &nu_g.value_oneform,
                velocity_scalar: &nu_f.velocity_scalar - &nu_g.velocity_scalar,
                velocity_oneform: &nu_f.velocity_oneform - &nu_g.velocity_oneform,
            };
            let (diff_op, excess) = rep.field_operator_from_data(&d_kappa, &d_nu, 0.0);
            let n = rep.fock.particle_cutoff as f64;
            let bound = diff_op.norm_upper_bound() + (2.0 * (n + 1.0)).sqrt() * excess;
            let scale = 1.0 + rep.field_operator(&f)?.norm_upper_bound();
            Ok(bound / scale)
        },
    )?;

    // The separation witness backs two records; it draws from its own
    // stream so both stay reproducible.
    let separation = {
        let mut rng = check_rng(config.seed, "algebra/separation_corpus");
        let structure = OneParticleStructure::new(&ctx, quad)?;
        let observables: Vec<SpacetimeForm> = (0..6)
            .map(|_| co_closed_one_form(&mut rng, &setup.complex))
            .collect();
        let lambda = lambda_form(config, &setup.complex, &mut rng)?;
        let rep = GBRepresentation::new(
            &structure,
            &observables,
            config.truncation.particle_cutoff,
            config.truncation.hermite_cutoff,
            lambda,
        )?;
        let sources: Vec<SpacetimeForm> = (0..20)
            .map(|_| random_one_form(&mut rng, &setup.complex))
            .collect();
        observable_ideal_separation(&rep, &observables, &sources)?
    };

    rec.run(
        "gauge_ideal_is_numerically_null",
        "every represented ideal generator has operator norm 0 over 20 sources",
        1e-4,
        |_| Ok(separation.max_ideal_norm),
    )?;

    rec.run(
        "observables_separate_from_the_ideal",
        "observable field norms exceed ideal norms by ≥ 10³; \
         the residual is the reciprocal separation ratio",
        1e-3,
        |_| {
            if separation.min_observable_norm <= 0.0 {
                return Err(Error::Numerical(
                    "observable states collapsed to zero norm".to_string(),
                ));
            }
            Ok(1.0 / separation.ratio)
        },
    )?;

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// gauge_param

fn gauge_param_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "gauge_param")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let step = SmoothStep::rising(-0.5, 0.5)?;
    let mut rec = Recorder::new("gauge_param", config, timings);

    let mut xis: Vec<f64> = Vec::new();
    for &xi in &config.gauge.xi {
        if !xis.contains(&xi) {
            xis.push(xi);
        }
    }

    for &xi in &xis {
        let ops = XiOperators::new(&ctx, xi, step)?;
        if xi == 1.0 {
            rec.run(
                "wave_operator_reduces_to_feynman_gauge_at_xi_1",
                "□₁ = □ sample for sample on test 1-forms",
                1e-10,
                |rng| {
                    let f = random_one_form(rng, &setup.complex);
                    let via_xi = ops.box_xi(&f)?;
                    let via_box = f.box_operator(&setup.complex)?;
                    let mut worst = 0.0f64;
                    for kind in [BlockKind::Dt, BlockKind::Spatial] {
                        let lhs = block_samples(&ctx, &via_xi, kind)?;
                        let rhs = block_samples(&ctx, &via_box, kind)?;
                        let scale = max_abs(&rhs).max(1.0);
                        worst = worst.max(max_abs(&(lhs - &rhs)) / scale);
                    }
                    Ok(worst)
                },
            )?;
            rec.run(
                "intertwiners_reduce_to_the_identity_at_xi_1",
                "𝔍_R, 𝔍_R⁻¹ and 𝔍_L are exactly the identity at ξ = 1",
                0.0,
                |rng| {
                    let f = random_one_form(rng, &setup.complex);
                    let base = SampledOneForm::sample(&ctx, &f)?;
                    let mut worst = ops.i_r(&f)?.max_distance(&base);
                    worst = worst.max(ops.i_r_inverse(&f)?.max_distance(&base));
                    worst = worst.max(ops.i_l(&f)?.max_distance(&base));
                    Ok(worst)
                },
            )?;
            continue;
        }

        rec.run(
            &format!("intertwiner_carries_xi_{xi}_dynamics_to_feynman_gauge"),
            "□(𝔍_R ψ) = □_ξ ψ on interior samples, by five-point finite differences",
            1e-4,
            |rng| {
                let psi = random_one_form(rng, &setup.complex);
                let twisted = ops.i_r(&psi)?;
                let box_xi_psi = ops.box_xi(&psi)?;
                let (box_dt, valid0) = ctx.fd_box(0, &twisted.dt_value);
                let (box_sp, valid1) = ctx.fd_box(1, &twisted.sp_value);
                let rhs_dt = block_samples(&ctx, &box_xi_psi, BlockKind::Dt)?;
                let rhs_sp = block_samples(&ctx, &box_xi_psi, BlockKind::Spatial)?;
                let scale = max_abs(&rhs_dt).max(max_abs(&rhs_sp)).max(1.0);
                let mut worst = 0.0f64;
                for j in valid0 {
                    for k in 0..rhs_dt.nrows() {
                        worst = worst.max((box_dt[(k, j)] - rhs_dt[(k, j)]).abs());
                    }
                }
                for j in valid1 {
                    for k in 0..rhs_sp.nrows() {
                        worst = worst.max((box_sp[(k, j)] - rhs_sp[(k, j)]).abs());
                    }
                }
                Ok(worst / scale)
            },
        )?;

        rec.run(
            &format!("intertwiner_composition_is_the_identity_at_xi_{xi}"),
            "𝔍_R⁻¹ ∘ 𝔍_R = id = 𝔍_R ∘ 𝔍_R⁻¹ on test 1-forms",
            1e-4,
            |rng| {
                let psi = random_one_form(rng, &setup.complex);
                let base = SampledOneForm::sample(&ctx, &psi)?;
                let scale = base.max_abs().max(1.0);
                let round_trip = ops.i_r_grid(&ops.i_r(&psi)?, true);
                let mut worst = round_trip.max_distance(&base) / scale;
                let other = ops.i_r_grid(&ops.i_r_inverse(&psi)?, false);
                worst = worst.max(other.max_distance(&base) / scale);
                Ok(worst)
            },
        )?;

        rec.run(
            &format!("twisted_commutator_matches_the_intertwined_propagator_at_xi_{xi}"),
            "[Ã(f), Ã(g)] = −i G(𝔍_L f, 𝔍_L g)·1 in a representation built \
             from the intertwined data",
            1e-6,
            |rng| {
                let structure = OneParticleStructure::new(&ctx, quad)?;
                let (k0, k1) = structure.kernel_dims();
                let prepared = |f: &SpacetimeForm| -> Result<_> {
                    let w = ops.i_l(f)?;
                    let sol = ctx.pauli_jordan_from_field(&w.grid_field());
                    let tau = structure.tau_at_time(&sol, 0.0);
                    let dt = sol.dt.as_ref().expect("dt block");
                    let sp = sol.spatial.as_ref().expect("spatial block");
                    let nu = ZeroModeVector {
                        value_scalar: dt.a.rows(0, k0).clone_owned(),
                        value_oneform: sp.a.rows(0, k1).clone_owned(),
                        velocity_scalar: dt.b.rows(0, k0).clone_owned(),
                        velocity_oneform: sp.b.rows(0, k1).clone_owned(),
                    };
                    Ok((sol, tau, nu))
                };
                let f = random_one_form(rng, &setup.complex);
                let g = random_one_form(rng, &setup.complex);
                let (sol_f, tau_f, nu_f) = prepared(&f)?;
                let (sol_g, tau_g, nu_g) = prepared(&g)?;

                let pair = |x: &SolutionForm, y: &SolutionForm| {
                    let block = |xb: &SolutionBlock, yb: &SolutionBlock| {
                        xb.a.dot(&yb.b) - xb.b.dot(&yb.a)
                    };
                    -block(x.dt.as_ref().unwrap(), y.dt.as_ref().unwrap())
                        + block(x.spatial.as_ref().unwrap(), y.spatial.as_ref().unwrap())
                };
                let g_twisted = pair(&sol_f, &sol_g);

                let rep = GBRepresentation::from_kappa_bars(
                    &structure,
                    vec![tau_f.conj(), tau_g.conj()],
                    2,
                    4,
                    None,
                )?;
                let (op_f, excess_f) = rep.field_operator_from_data(&tau_f, &nu_f, 0.0);
                let (op_g, excess_g) = rep.field_operator_from_data(&tau_g, &nu_g, 0.0);
                let commutator = rep.vacuum_expectation(&[&op_f, &op_g])
                    - rep.vacuum_expectation(&[&op_g, &op_f]);
                let expected = Complex64::new(0.0, -g_twisted);
                let worst = (commutator - expected).norm() / (1.0 + g_twisted.abs());
                Ok(worst.max(excess_f).max(excess_g))
            },
        )?;

        rec.run(
            &format!("localized_primitive_annihilates_the_green_defect_at_xi_{xi}"),
            "G(f − L□f) = 0 in Cauchy-data norm for slice-localized scalars",
            1e-4,
            |rng| {
                let profile = TimeProfile::bump(1.5, 0.8, 1.0)?;
                let f = SpacetimeForm::scalar_term(
                    &setup.complex,
                    profile,
                    random_shape(rng, &setup.complex, 0),
                )?;
                ops.l_defect_check(&f)
            },
        )?;
    }

    let rk4_statement = "the ξ-dynamics RK4 stepper self-converges at fourth order \
                         (Richardson end-state ratio 17; the residual is |ratio/16 − 1|)";
    if let Some(&xi) = xis.iter().find(|&&xi| xi != 1.0) {
        rec.run(
            "rk4_time_stepper_self_converges_at_fourth_order",
            rk4_statement,
            0.25,
            |rng| {
                let ops = XiOperators::new(&ctx, xi, step)?;
                let n0 = setup.basis.eigenvalues(0).len();
                let n1 = setup.basis.eigenvalues(1).len();
                let data = XiData {
                    phi: DVector::from_fn(n0, |_, _| rng.gen_range(-1.0..1.0)),
                    phi_dot: DVector::from_fn(n0, |_, _| rng.gen_range(-1.0..1.0)),
                    a: DVector::from_fn(n1, |_, _| rng.gen_range(-1.0..1.0)),
                    a_dot: DVector::from_fn(n1, |_, _| rng.gen_range(-1.0..1.0)),
                };
                let end_state = |dt: f64| -> Result<DVector<f64>> {
                    let sol = ops.solve(&data, 0.0, 1.0, dt)?;
                    let last = sol.times.len() - 1;
                    let columns = [
                        sol.phi.column(last).clone_owned(),
                        sol.phi_dot.column(last).clone_owned(),
                        sol.a.column(last).clone_owned(),
                        sol.a_dot.column(last).clone_owned(),
                    ];
                    let len = columns.iter().map(|c| c.len()).sum();
                    Ok(DVector::from_iterator(
                        len,
                        columns.iter().flat_map(|c| c.iter().copied()),
                    ))
                };
                let coarse = end_state(0.02)?;
                let medium = end_state(0.01)?;
                let fine = end_state(0.005)?;
                let ratio = (coarse - &fine).norm() / (medium - &fine).norm();
                Ok((ratio / 16.0 - 1.0).abs())
            },
        )?;
    } else {
        rec.skip(
            "rk4_time_stepper_self_converges_at_fourth_order",
            rk4_statement,
            "skipped: no ξ ≠ 1 configured",
        );
    }

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// brst

fn brst_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "brst")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let structure = OneParticleStructure::new(&ctx, quad)?;
    let pair = BrstPair::new(&structure, quad);

    let corpus = {
        let mut rng = check_rng(config.seed, "brst/corpus");
        let harmonic_free_one_form = |rng: &mut ChaCha8Rng| -> Result<SpacetimeForm> {
            let dt_shape = pair.harmonic_free_shape(&random_shape(rng, &setup.complex, 0))?;
            let sp_shape = pair.harmonic_free_shape(&random_shape(rng, &setup.complex, 1))?;
            SpacetimeForm::new(
                &setup.complex,
                1,
                vec![SeparableTerm {
                    profile: random_profile(rng),
                    shape: dt_shape,
                }],
                vec![SeparableTerm {
                    profile: random_profile(rng),
                    shape: sp_shape,
                }],
            )
        };
        let mean_zero_scalar = |rng: &mut ChaCha8Rng| -> Result<SpacetimeForm> {
            let shape = pair.harmonic_free_shape(&random_shape(rng, &setup.complex, 0))?;
            SpacetimeForm::scalar_term(&setup.complex, random_profile(rng), shape)
        };
        BrstCorpus {
            one_forms: (0..4).map(|_| random_one_form(&mut rng, &setup.complex)).collect(),
            co_closed_one_forms: (0..3)
                .map(|_| co_closed_one_form(&mut rng, &setup.complex))
                .collect(),
            harmonic_free_one_forms: (0..6)
                .map(|_| harmonic_free_one_form(&mut rng))
                .collect::<Result<_>>()?,
            scalars: (0..6).map(|_| mean_zero_scalar(&mut rng)).collect::<Result<_>>()?,
        }
    };
    let report = pair.compatibility_suite(&corpus)?;
    let mut rec = Recorder::new("brst", config, timings);

    let checks: [(&str, &str, f64); 8] = [
        (
            "wave_ideal_lies_in_the_one_form_kernel",
            "ω¹(□f, g) = ω¹(f, □g) = 0",
            report.wave_ideal_one_form,
        ),
        (
            "wave_ideal_lies_in_the_scalar_kernel",
            "ω⁰(□φ, ψ) = ω⁰(φ, □ψ) = 0",
            report.wave_ideal_scalar,
        ),
        (
            "one_form_antisymmetry_returns_the_propagator",
            "ω¹(f, g) − ω¹(g, f) = −i G(f, g)",
            report.antisymmetry_one_form,
        ),
        (
            "scalar_antisymmetry_returns_the_propagator",
            "ω⁰(φ, ψ) − ω⁰(ψ, φ) = −i G⁰(φ, ψ)",
            report.antisymmetry_scalar,
        ),
        (
            "divergence_intertwines_the_sectors",
            "ω⁰(δf, g) = −ω¹(f, dg) on the mean-zero/harmonic-free corpus",
            report.cross_relation,
        ),
        (
            "classical_divergence_identity_holds",
            "G(f, dg) = −G⁰(δf, g) on the mean-zero/harmonic-free corpus",
            report.classical_identity,
        ),
        (
            "one_form_states_are_positive",
            "ω¹(f, f) ≥ 0 for co-closed f",
            report.one_form_positivity,
        ),
        (
            "scalar_states_are_positive",
            "ω⁰(φ, φ) ≥ 0 for mean-zero φ",
            report.scalar_positivity,
        ),
    ];
    for (name, statement, residual) in checks {
        rec.run(name, statement, 1e-4, |_| Ok(residual))?;
    }

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// frequency

fn frequency_suite(config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    require_dimension_two(config, "frequency")?;
    let setup = Setup::new(config)?;
    let ctx = setup.ctx()?;
    let quad = config.quadrature_points;
    let structure = OneParticleStructure::new(&ctx, quad)?;
    let mut rec = Recorder::new("frequency", config, timings);

    const SAMPLES: usize = 256;
    const SPAN: f64 = 32.0;
    let resolution = 2.0 * std::f64::consts::PI / SPAN;

    rec.run(
        "two_point_functions_are_positive_frequency",
        "t ↦ ⟨κf, e^{iHt} κg⟩ has negative-frequency mass ratio 0 over 50 pairs",
        1e-6,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let f = random_one_form(rng, &setup.complex);
                let g = random_one_form(rng, &setup.complex);
                let spectrum = structure.positive_frequency_spectrum(&f, &g, SAMPLES, SPAN)?;
                worst = worst.max(spectrum.negative_mass_ratio(0.5));
            }
            Ok(worst)
        },
    )?;

    let peak_statement = "a single spatial eigenmode produces one dominant spectral peak \
                          at its eigenfrequency ω = √λ, within one DFT bin";
    let lam1 = setup.basis.eigenvalues(1);
    let k1 = setup.basis.kernel_dim(1);
    let candidates: Vec<usize> = (k1..lam1.len())
        .filter(|&k| {
            let omega = lam1[k].sqrt();
            (1.0..=20.0).contains(&omega)
        })
        .collect();
    if candidates.is_empty() {
        rec.skip(
            "pure_modes_peak_at_their_eigenfrequencies",
            peak_statement,
            "skipped: no one-form eigenfrequency falls inside the DFT band (1, 20)",
        );
    } else {
        rec.run(
            "pure_modes_peak_at_their_eigenfrequencies",
            peak_statement,
            resolution,
            |_| {
                let picks = [
                    candidates[0],
                    candidates[candidates.len() / 2],
                    candidates[candidates.len() - 1],
                ];
                let mut worst = 0.0f64;
                for &k in &picks {
                    let mode = SpatialForm {
                        degree: 1,
                        values: setup.basis.modes(1).column(k).clone_owned(),
                    };
                    let g = SpacetimeForm::new(
                        &setup.complex,
                        1,
                        vec![],
                        vec![SeparableTerm {
                            profile: TimeProfile::bump(0.0, 1.0, 1.0)?,
                            shape: mode,
                        }],
                    )?;
                    let spectrum = structure.positive_frequency_spectrum(&g, &g, SAMPLES, SPAN)?;
                    worst = worst.max((spectrum.peak_frequency() - lam1[k].sqrt()).abs());
                }
                Ok(worst)
            },
        )?;
    }

    rec.run(
        "two_point_at_zero_is_the_krein_inner_product",
        "F(0) = ⟨κf, κg⟩ exactly (evolution by t = 0 is the identity)",
        0.0,
        |rng| {
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let f = random_one_form(rng, &setup.complex);
                let g = random_one_form(rng, &setup.complex);
                let kf = structure.kappa(&f)?;
                let kg = structure.kappa(&g)?;
                let f0 = structure.krein_inner(&kf, &structure.evolve(&kg, 0.0));
                worst = worst.max((f0 - structure.krein_inner(&kf, &kg)).norm());
            }
            Ok(worst)
        },
    )?;

    rec.run(
        "scalar_two_points_are_positive_frequency",
        "the scalar-sector spectrum t ↦ ⟨κ⁰φ, e^{iH⁰t} κ⁰ψ⟩ carries no \
         negative-frequency mass over 10 mean-zero pairs",
        1e-6,
        |rng| {
            let pair = BrstPair::new(&structure, quad);
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let scalar = |rng: &mut ChaCha8Rng| -> Result<SpacetimeForm> {
                    let shape =
                        pair.harmonic_free_shape(&random_shape(rng, &setup.complex, 0))?;
                    SpacetimeForm::scalar_term(&setup.complex, random_profile(rng), shape)
                };
                let f = scalar(rng)?;
                let g = scalar(rng)?;
                let spectrum = pair.scalar_spectrum(&f, &g, SAMPLES, SPAN)?;
                worst = worst.max(spectrum.negative_mass_ratio(0.5));
            }
            Ok(worst)
        },
    )?;

    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// Dispatch.

/// Runs one named suite under the given configuration.
pub fn run_suite(name: &str, config: &RunConfig, timings: bool) -> Result<Vec<CheckRecord>> {
    match name {
        "geometry" => geometry_suite(config, timings),
        "propagation" => propagation_suite(config, timings),
        "one_particle" => one_particle_suite(config, timings),
        "fock" => fock_suite(config, timings),
        "algebra" => algebra_suite(config, timings),
        "gauge_param" => gauge_param_suite(config, timings),
        "brst" => brst_suite(config, timings),
        "frequency" => frequency_suite(config, timings),
        other => Err(Error::Config(format!(
            "unknown suite '{other}'; available suites: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

/// Resolves the suite list: explicit requests win, then the configured
/// selection, then all suites.  Duplicates collapse so that every check
/// appears exactly once.
pub fn resolve_suites(config: &RunConfig, requested: &[String]) -> Result<Vec<String>> {
    let chosen: Vec<String> = if !requested.is_empty() {
        requested.to_vec()
    } else if !config.suites.is_empty() {
        config.suites.clone()
    } else {
        SUITE_NAMES.iter().map(|s| s.to_string()).collect()
    };
    let mut names = Vec::new();
    for name in chosen {
        if !SUITE_NAMES.contains(&name.as_str()) {
            return Err(Error::Config(format!(
                "unknown suite '{name}'; available suites: {}",
                SUITE_NAMES.join(", ")
            )));
        }
        if !names.contains(&name) {
            names.push(name);
        }
    }
    Ok(names)
}

/// Runs the selected suites, up to `jobs` concurrently, and assembles the
/// canonical report.  Results are independent of `jobs` because every check
/// owns a named RNG stream and records are sorted afterwards.
pub fn run_suites(
    config: &RunConfig,
    requested: &[String],
    jobs: usize,
    timings: bool,
) -> Result<SuiteReport> {
    config.validate()?;
    let names = resolve_suites(config, requested)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<CheckRecord>>> = pool.install(|| {
        names
            .par_iter()
            .map(|name| run_suite(name, config, timings))
            .collect()
    });
    let mut report = SuiteReport::new(config.clone());
    for suite_records in results {
        report.checks.extend(suite_records?);
    }
    report.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A small instance for fast suite-infrastructure tests.
    fn test_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.spatial.divisions = 5;
        config.time.intervals = 200;
        config.time.refinement = 10;
        config.truncation.fock_generators = 4;
        config.truncation.particle_cutoff = 2;
        config.truncation.hermite_cutoff = 4;
        config
    }

    #[test]
    fn unknown_suites_are_config_errors() {
        let config = test_config();
        assert!(matches!(
            run_suite("nonsense", &config, false),
            Err(Error::Config(_))
        ));
        let requested = vec!["geometry".to_string(), "nonsense".to_string()];
        assert!(matches!(
            resolve_suites(&config, &requested),
            Err(Error::Config(_))
        ));
        // Defaults expand to all suites, in canonical order, deduplicated.
        let all = resolve_suites(&config, &[]).unwrap();
        assert_eq!(all, SUITE_NAMES.map(String::from).to_vec());
        let repeated = vec!["fock".to_string(), "fock".to_string()];
        assert_eq!(resolve_suites(&config, &repeated).unwrap(), ["fock"]);
    }

    #[test]
    fn geometry_suite_passes_on_the_test_torus() {
        let records = run_suite("geometry", &test_config(), false).unwrap();
        assert_eq!(records.len(), 5);
        for record in &records {
            assert!(
                record.passed,
                "{}: residual {} > {}",
                record.name, record.residual, record.tolerance
            );
        }
    }

    #[test]
    fn geometry_suite_supports_dimension_one_but_others_reject_it() {
        let mut config = test_config();
        config.spatial.dimension = 1;
        config.spatial.divisions = 4;
        config.spatial.lengths = vec![1.0];
        let records = run_suite("geometry", &config, false).unwrap();
        assert!(records.iter().all(|r| r.passed));
        assert!(matches!(
            run_suite("one_particle", &config, false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reports_are_byte_identical_across_job_counts() {
        let mut config = test_config();
        config.suites = vec!["geometry".to_string()];
        let serial = run_suites(&config, &[], 1, false).unwrap();
        let parallel = run_suites(&config, &[], 3, false).unwrap();
        assert_eq!(serial.to_json(), parallel.to_json());
        assert!(serial.all_passed());
    }

    #[test]
    fn tolerance_overrides_reach_the_records() {
        let mut config = test_config();
        config
            .tolerances
            .insert("geometry/codifferential_adjoint_to_differential".to_string(), 0.5);
        let records = run_suite("geometry", &config, false).unwrap();
        let record = records
            .iter()
            .find(|r| r.name == "codifferential_adjoint_to_differential")
            .unwrap();
        assert_eq!(record.tolerance, 0.5);
    }

    #[test]
    fn timings_are_strictly_opt_in() {
        let config = test_config();
        let without = run_suite("geometry", &config, false).unwrap();
        assert!(without.iter().all(|r| r.runtime_ms.is_none()));
        let with = run_suite("geometry", &config, true).unwrap();
        assert!(with.iter().all(|r| r.runtime_ms.is_some()));
    }

    #[test]
    fn fock_suite_gates_the_four_point_at_insufficient_truncation() {
        let mut config = test_config();
        config.truncation.particle_cutoff = 1;
        let records = run_suite("fock", &config, false).unwrap();
        let wick = records
            .iter()
            .find(|r| r.name == "four_point_functions_factorize_by_wick")
            .unwrap();
        assert!(wick.passed);
        let reason = wick.skipped.as_ref().expect("gated check is marked skipped");
        assert!(reason.contains("truncation insufficient"), "reason: {reason}");
    }

    #[test]
    fn per_check_rng_streams_are_stable_and_distinct() {
        let mut a = check_rng(7, "fock/corpus");
        let mut b = check_rng(7, "fock/corpus");
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        let mut c = check_rng(7, "fock/lambda");
        assert_ne!(a.gen::<u64>(), c.gen::<u64>());
    }
}
