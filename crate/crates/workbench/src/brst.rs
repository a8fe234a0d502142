//! Scalar-sector states for the Gupta–Bleuler pipeline: the one-particle
//! map κ⁰, the vacuum two-point pair (ω⁰, ω¹), and their compatibility
//! conditions.
//!
//! The gauge-fixed vector theory carries, besides the one-form two-point
//! function ω¹(f,g) = ⟨Ω, Â(f)Â(g)Ω⟩ of the vacuum, a scalar companion
//! ω⁰ for the gauge-fixing sector.  Both are assembled from one-particle
//! data:
//!
//! * κ⁰(f) = τ(Ψ₀^{G⁰f}) with τ: (𝔣, 𝔣̇) ↦ Δ^{1/4}𝔣 + i Δ^{−1/4}𝔣̇ on the
//!   non-harmonic scalar modes, where G⁰ is the scalar Pauli–Jordan
//!   propagator;
//! * ω⁰(f,g) = ½⟨κ⁰(g), κ⁰(f)⟩ in the *positive* scalar-mode inner
//!   product, and ω¹(f,g) = ½⟨κ̄(f), κ̄(g)⟩_𝒦 plus the oscillator-sector
//!   vacuum moment of the zero-mode symbols (see [`NORMALIZATION`]).
//!
//! The pair is compatible with the dynamics and with each other:
//!
//! 1. ω¹(□f, g) = ω¹(f, □g) = 0 and
//! 2. ω⁰(□f, g) = ω⁰(f, □g) = 0 — the wave ideal is annihilated;
//! 3. ω¹(f,g) − ω¹(g,f) = −i G(f,g) and
//! 4. ω⁰(f,g) − ω⁰(g,f) = −i G⁰(f,g) — commutators are the propagators;
//! 5. ω⁰(δf, g) = −ω¹(f, dg) — the divergence intertwines the sectors,
//!    resting on the classical identity G(f, dg) = −G⁰(δf, g);
//! 6. ω¹(f,f) ≥ 0 on co-closed f and
//! 7. ω⁰(f,f) ≥ 0 — positivity on the admissible cone.
//!
//! On the compact spatial complex harmonic scalars exist (the constants),
//! so Δ^{−1/4} is singular there: κ⁰ is restricted to test forms whose
//! propagated data is mean-zero, and the cross-relation (5) is checked on
//! 1-forms with harmonic-free propagated data.  On such data the
//! zero-mode moment of ω¹(f, dg) vanishes — d-exact sources excite no
//! harmonic modes — and the identity closes without a zero-mode
//! correction.  [`BrstPair::compatibility_suite`] measures all seven
//! conditions on a supplied corpus and reports per-condition residuals.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::oneparticle::{
    FrequencySpectrum, KreinVector, OneParticleStructure, ZeroModeVector, HARMONIC_LEAK_TOL,
};
use crate::profile::TimeProfile;
use crate::spacetime::SpacetimeForm;
use crate::spatial::SpatialForm;
use crate::{Error, Result};

/// The normalization convention fixed by requiring all seven
/// compatibility conditions simultaneously: both two-point functions
/// carry the vacuum factor ½, and the scalar sector pairs in conjugate
/// order, so that each antisymmetrized difference returns exactly −i
/// times its propagator pairing.
pub const NORMALIZATION: &str =
    "ω¹(f,g) = ½⟨κ̄f, κ̄g⟩_𝒦 + ⟨B(νf) B(νg)⟩₀;  ω⁰(f,g) = ½⟨κ⁰g, κ⁰f⟩";

/// The scalar/one-form two-point pair of the Gupta–Bleuler vacuum.
pub struct BrstPair<'a, 'b> {
    pub structure: &'b OneParticleStructure<'a>,
    quad_points: usize,
}

/// Test-form corpus for the compatibility suite.  Empty sections are
/// skipped (their residuals stay 0).
pub struct BrstCorpus {
    /// Unrestricted 1-forms: wave-ideal and antisymmetry checks.
    pub one_forms: Vec<SpacetimeForm>,
    /// Co-closed 1-forms: the positivity cone of ω¹.
    pub co_closed_one_forms: Vec<SpacetimeForm>,
    /// 1-forms whose propagated Cauchy data is harmonic-free: the
    /// cross-relation between the sectors.
    pub harmonic_free_one_forms: Vec<SpacetimeForm>,
    /// Mean-zero scalar forms: every ω⁰ entry.
    pub scalars: Vec<SpacetimeForm>,
}

/// Per-condition residuals of the compatibility suite, each relative to
/// `1 +` the magnitude of the two-point evaluations entering the check.
#[derive(Debug, Clone)]
pub struct BrstReport {
    /// The two-point normalization in force ([`NORMALIZATION`]).
    pub normalization: String,
    /// max |ω¹(□f, g)| ∨ |ω¹(f, □g)| — condition 1.
    pub wave_ideal_one_form: f64,
    /// max |ω⁰(□f, g)| ∨ |ω⁰(f, □g)| — condition 2.
    pub wave_ideal_scalar: f64,
    /// max |ω¹(f,g) − ω¹(g,f) + i G(f,g)| — condition 3.
    pub antisymmetry_one_form: f64,
    /// max |ω⁰(f,g) − ω⁰(g,f) + i G⁰(f,g)| — condition 4.
    pub antisymmetry_scalar: f64,
    /// max |ω⁰(δf, g) + ω¹(f, dg)| — condition 5.
    pub cross_relation: f64,
    /// max |G(f, dg) + G⁰(δf, g)| — the classical identity under (5).
    pub classical_identity: f64,
    /// max over co-closed f of (−Re ω¹(f,f))⁺ ∨ |Im ω¹(f,f)| — condition 6.
    pub one_form_positivity: f64,
    /// max over scalars f of (−Re ω⁰(f,f))⁺ ∨ |Im ω⁰(f,f)| — condition 7.
    pub scalar_positivity: f64,
}

impl BrstReport {
    /// The largest residual across all seven conditions and the
    /// classical identity.
    pub fn max_residual(&self) -> f64 {
        [
            self.wave_ideal_one_form,
            self.wave_ideal_scalar,
            self.antisymmetry_one_form,
            self.antisymmetry_scalar,
            self.cross_relation,
            self.classical_identity,
            self.one_form_positivity,
            self.scalar_positivity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The oscillator-sector coefficient maps of a zero-mode vector: the
/// represented symbol is `B(ν) = Σ_j (u_j X_j + i v_j D_j)` with
/// `u = (𝔣̇₀, 𝔞̇)` and `v = (𝔣₀, −𝔞)` over the harmonic directions.
fn oscillator_uv(z: &ZeroModeVector) -> (DVector<f64>, DVector<f64>) {
    let n = z.velocity_scalar.len() + z.velocity_oneform.len();
    let u = DVector::from_iterator(
        n,
        z.velocity_scalar
            .iter()
            .chain(z.velocity_oneform.iter())
            .copied(),
    );
    let v = DVector::from_iterator(
        n,
        z.value_scalar
            .iter()
            .copied()
            .chain(z.value_oneform.iter().map(|x| -x)),
    );
    (u, v)
}

impl<'a, 'b> BrstPair<'a, 'b> {
    pub fn new(structure: &'b OneParticleStructure<'a>, quad_points: usize) -> Self {
        BrstPair {
            structure,
            quad_points,
        }
    }

    /// Project a spatial shape onto the orthogonal complement of the
    /// harmonic modes of its degree — for degree 0 this removes the
    /// mean, for degree 1 the harmonic circulations.
    pub fn harmonic_free_shape(&self, shape: &SpatialForm) -> Result<SpatialForm> {
        let basis = self.structure.ctx.basis;
        let mut coeffs = basis.coefficients(shape.degree, &shape.values)?;
        for i in 0..basis.kernel_dim(shape.degree) {
            coeffs[i] = 0.0;
        }
        Ok(SpatialForm {
            degree: shape.degree,
            values: basis.synthesize(shape.degree, &coeffs)?,
        })
    }

    /// κ⁰: scalar test form → positive one-particle space,
    /// `f ↦ τ(Ψ₀^{G⁰f})` over the non-harmonic scalar modes.
    ///
    /// The constant mode carries `Δ = 0`, where `Δ^{−1/4}` is singular;
    /// propagated data leaking onto it (relative to [`HARMONIC_LEAK_TOL`])
    /// is a domain error.  Mean-zero test forms stay clear of it.
    pub fn kappa0(&self, f: &SpacetimeForm) -> Result<DVector<Complex64>> {
        if f.degree() != 0 {
            return Err(Error::Config(format!(
                "κ⁰ expects a scalar test form, got degree {}",
                f.degree()
            )));
        }
        let modal = self.structure.ctx.modal(f)?;
        let sol = self.structure.ctx.pauli_jordan(&modal, self.quad_points);
        let block = sol
            .spatial
            .as_ref()
            .expect("scalar solutions carry a spatial block");
        let k0 = self.structure.kernel_dims().0;
        let leak = (block.a.rows(0, k0).norm_squared() + block.b.rows(0, k0).norm_squared()).sqrt();
        let scale = (block.a.norm_squared() + block.b.norm_squared())
            .sqrt()
            .max(1.0);
        if leak > HARMONIC_LEAK_TOL * scale {
            return Err(Error::Domain(format!(
                "constant-mode content {leak:.3e} of the propagated scalar data hits \
                 the Δ^{{−1/4}} singularity; draw tests from the mean-zero sector"
            )));
        }
        Ok(self.structure.tau_at_time(&sol, 0.0).scalar)
    }

    /// The positive inner product on the scalar one-particle space,
    /// conjugate-linear in the first argument.
    pub fn scalar_inner(&self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..x.len() {
            acc += x[i].conj() * y[i];
        }
        acc
    }

    /// The scalar-sector two-point function `ω⁰(f,g) = ½⟨κ⁰(g), κ⁰(f)⟩`.
    ///
    /// The conjugate ordering mirrors the one-form sector, whose Fock
    /// space is built on the conjugated vectors κ̄; it makes the
    /// antisymmetrized difference `−i G⁰(f,g)` and keeps the diagonal
    /// `ω⁰(f,f) = ½‖κ⁰(f)‖² ≥ 0`.
    pub fn omega0(&self, f: &SpacetimeForm, g: &SpacetimeForm) -> Result<Complex64> {
        let kf = self.kappa0(f)?;
        let kg = self.kappa0(g)?;
        Ok(0.5 * self.scalar_inner(&kf, &kg).conj())
    }

    /// The one-form vacuum two-point function
    /// `ω¹(f,g) = ⟨Ω, Â(f) Â(g) Ω⟩`, evaluated in closed form:
    /// `½⟨κ̄f, κ̄g⟩_𝒦` from the Fock factor plus the ground-state moment
    /// of the oscillator-sector symbols from the zero modes.
    pub fn omega1(&self, f: &SpacetimeForm, g: &SpacetimeForm) -> Result<Complex64> {
        let (kf, nf) = self.one_form_data(f)?;
        let (kg, ng) = self.one_form_data(g)?;
        let fock = 0.5 * self.structure.krein_inner(&kf, &kg).conj();
        Ok(fock + oscillator_moment(&nf, &ng))
    }

    /// The propagator pairing `⟨Gf, g⟩_M` at this pair's quadrature
    /// resolution, for test forms of any common degree.
    pub fn propagator(&self, f: &SpacetimeForm, g: &SpacetimeForm) -> Result<f64> {
        let fm = self.structure.ctx.modal(f)?;
        let gm = self.structure.ctx.modal(g)?;
        self.structure.ctx.propagator_pairing(&fm, &gm, self.quad_points)
    }

    /// Windowed discrete Fourier transform of
    /// `F(t) = ⟨κ⁰f, e^{iΔ^{1/2} t} κ⁰g⟩`: the scalar-sector surrogate
    /// for the positive-frequency (microlocal spectrum) property.  All
    /// spectral mass should sit at positive frequencies.
    pub fn scalar_spectrum(
        &self,
        f: &SpacetimeForm,
        g: &SpacetimeForm,
        n_samples: usize,
        t_span: f64,
    ) -> Result<FrequencySpectrum> {
        if n_samples < 16 || !t_span.is_finite() || t_span <= 0.0 {
            return Err(Error::Config(
                "frequency sampling needs ≥ 16 samples over a positive span".to_string(),
            ));
        }
        let kf = self.kappa0(f)?;
        let kg = self.kappa0(g)?;
        let basis = self.structure.ctx.basis;
        let k0 = basis.kernel_dim(0);
        let omegas: Vec<f64> = (0..kf.len())
            .map(|i| basis.eigenvalues(0)[k0 + i].sqrt())
            .collect();
        let window = TimeProfile::bump(t_span / 2.0, t_span / 2.0, 1.0)?;
        let dt = t_span / n_samples as f64;
        let samples: Vec<Complex64> = (0..n_samples)
            .map(|j| {
                let t = dt * j as f64;
                let evolved = DVector::from_fn(kg.len(), |i, _| {
                    kg[i] * Complex64::from_polar(1.0, omegas[i] * t)
                });
                self.scalar_inner(&kf, &evolved) * window.value(t)
            })
            .collect();
        let half = n_samples as i64 / 2;
        let mut frequencies = Vec::with_capacity(n_samples + 1);
        let mut magnitudes = Vec::with_capacity(n_samples + 1);
        for m in -half..=half {
            let omega_m = 2.0 * std::f64::consts::PI * m as f64 / t_span;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in samples.iter().enumerate() {
                let t = dt * j as f64;
                acc += s * Complex64::from_polar(1.0, -omega_m * t);
            }
            frequencies.push(omega_m);
            magnitudes.push((acc * dt).norm_sqr());
        }
        Ok(FrequencySpectrum {
            frequencies,
            magnitudes,
        })
    }

    /// Evaluate all seven compatibility conditions (and the classical
    /// identity supporting the cross-relation) on a corpus, returning
    /// the per-condition residuals.
    pub fn compatibility_suite(&self, corpus: &BrstCorpus) -> Result<BrstReport> {
        let complex = self.structure.ctx.complex;
        let mut report = BrstReport {
            normalization: NORMALIZATION.to_string(),
            wave_ideal_one_form: 0.0,
            wave_ideal_scalar: 0.0,
            antisymmetry_one_form: 0.0,
            antisymmetry_scalar: 0.0,
            cross_relation: 0.0,
            classical_identity: 0.0,
            one_form_positivity: 0.0,
            scalar_positivity: 0.0,
        };

        for (i, f) in corpus.one_forms.iter().enumerate() {
            let g = &corpus.one_forms[(i + 1) % corpus.one_forms.len()];
            let base = self.omega1(f, g)?;
            let scale = 1.0 + base.norm();
            let ideal = self
                .omega1(&f.box_operator(complex)?, g)?
                .norm()
                .max(self.omega1(f, &g.box_operator(complex)?)?.norm());
            report.wave_ideal_one_form = report.wave_ideal_one_form.max(ideal / scale);
            let anti = base - self.omega1(g, f)? + Complex64::i() * self.propagator(f, g)?;
            report.antisymmetry_one_form = report.antisymmetry_one_form.max(anti.norm() / scale);
        }

        for (i, f) in corpus.scalars.iter().enumerate() {
            let g = &corpus.scalars[(i + 1) % corpus.scalars.len()];
            let base = self.omega0(f, g)?;
            let scale = 1.0 + base.norm();
            let ideal = self
                .omega0(&f.box_operator(complex)?, g)?
                .norm()
                .max(self.omega0(f, &g.box_operator(complex)?)?.norm());
            report.wave_ideal_scalar = report.wave_ideal_scalar.max(ideal / scale);
            let anti = base - self.omega0(g, f)? + Complex64::i() * self.propagator(f, g)?;
            report.antisymmetry_scalar = report.antisymmetry_scalar.max(anti.norm() / scale);
            let diag = self.omega0(f, f)?;
            let positivity = (-diag.re).max(0.0).max(diag.im.abs());
            report.scalar_positivity = report
                .scalar_positivity
                .max(positivity / (1.0 + diag.norm()));
        }

        for f in &corpus.co_closed_one_forms {
            let diag = self.omega1(f, f)?;
            let positivity = (-diag.re).max(0.0).max(diag.im.abs());
            report.one_form_positivity = report
                .one_form_positivity
                .max(positivity / (1.0 + diag.norm()));
        }

        for f in &corpus.harmonic_free_one_forms {
            let delta_f = f.delta(complex)?;
            for g in &corpus.scalars {
                let dg = g.d(complex)?;
                let w0 = self.omega0(&delta_f, g)?;
                let w1 = self.omega1(f, &dg)?;
                let scale = 1.0 + w0.norm() + w1.norm();
                report.cross_relation = report.cross_relation.max((w0 + w1).norm() / scale);
                let classical = self.propagator(f, &dg)? + self.propagator(&delta_f, g)?;
                report.classical_identity =
                    report.classical_identity.max(classical.abs() / scale);
            }
        }

        Ok(report)
    }

    /// One propagation pass for a 1-form: the non-harmonic one-particle
    /// vector κ(f) and the harmonic Cauchy data ν(f) of `Ψ₀^{Gf}`.
    fn one_form_data(&self, f: &SpacetimeForm) -> Result<(KreinVector, ZeroModeVector)> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "the vacuum two-point function pairs 1-forms, got degree {}",
                f.degree()
            )));
        }
        let modal = self.structure.ctx.modal(f)?;
        let sol = self.structure.ctx.pauli_jordan(&modal, self.quad_points);
        let kappa = self.structure.tau_at_time(&sol, 0.0);
        let dt = sol.dt.as_ref().expect("1-form solutions carry a dt block");
        let sp = sol
            .spatial
            .as_ref()
            .expect("1-form solutions carry a spatial block");
        let (k0, k1) = self.structure.kernel_dims();
        let nu = ZeroModeVector {
            value_scalar: dt.a.rows(0, k0).clone_owned(),
            value_oneform: sp.a.rows(0, k1).clone_owned(),
            velocity_scalar: dt.b.rows(0, k0).clone_owned(),
            velocity_oneform: sp.b.rows(0, k1).clone_owned(),
        };
        Ok((kappa, nu))
    }
}

/// The ground-state moment `⟨0| B(x) B(y) |0⟩` of two oscillator-sector
/// symbols, in closed form from the moments `⟨X²⟩ = −⟨D²⟩ = ½` and
/// `⟨XD⟩ = −⟨DX⟩ = −½` of each harmonic direction.
fn oscillator_moment(x: &ZeroModeVector, y: &ZeroModeVector) -> Complex64 {
    let (ux, vx) = oscillator_uv(x);
    let (uy, vy) = oscillator_uv(y);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..ux.len() {
        acc += Complex64::new(
            0.5 * (ux[i] * uy[i] + vx[i] * vy[i]),
            0.5 * (vx[i] * uy[i] - ux[i] * vy[i]),
        );
    }
    acc
}
