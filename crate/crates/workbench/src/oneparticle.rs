//! One-particle structure over the mode decomposition: the indefinite-metric
//! space 𝒦, the maps τ and κ, the zero-mode symplectic sector, the energy
//! operator, and the positive-frequency diagnostic.
//!
//! The carrier space is 𝒦 = (−Ω⁰⊥ ⊕ Ω¹⊥) ⊗ ℂ: complex coefficients over the
//! strictly positive Laplacian modes of degrees 0 and 1, with the indefinite
//! inner product `⟨u, v⟩ = −⟨u₀, v₀⟩ + ⟨u₁, v₁⟩` (conjugate-linear in the
//! first argument; the scalar block carries the sign flip).
//!
//! The building blocks:
//!
//! * `τ(𝔣, 𝔣̇) = Δ^{1/4}𝔣 + i Δ^{−1/4}𝔣̇`, blockwise on harmonic-free Cauchy
//!   data — the frequency-weighted packaging of data into 𝒦;
//! * `κ(f) = τ(P⊥ Ψ₀^{Gf})`: Pauli–Jordan data of a test form at `t = 0`,
//!   harmonically projected, then packaged.  Its fundamental identity is
//!   `Im⟨κ(f), κ(g)⟩ + G_Z(f, g) = ⟨Gf, g⟩_M`, where `G_Z` is the
//!   zero-mode remainder supported on harmonic Cauchy data;
//! * the zero-mode space Z of harmonic data pairs with symplectic form
//!   `σ_Z`, compatible complex structure 𝔍 (`𝔍² = −1`), and the positive
//!   inner product `K = −σ_Z(·, 𝔍·)`, which in harmonic coordinates is the
//!   plain block Gram matrix;
//! * the energy operator `H = Δ^{1/2} ⊕ Δ^{1/2}` with `τ(Ψ_t) = e^{−iHt}τ(Ψ₀)`
//!   along solutions, so `H τ = i ∂_t τ`;
//! * a windowed discrete Fourier transform of `t ↦ ⟨κf, e^{iHt}κg⟩`, whose
//!   spectral mass sits entirely at positive frequencies — the lattice-scale
//!   stand-in for the positive-frequency (microlocal) condition;
//! * `extend_kappa`: κ evaluated through a time-slice reduction, verifying
//!   that κ only depends on a test form through its slice-localized
//!   representative;
//! * time-constant harmonic dual 1-forms `F_y` realizing the zero-mode
//!   pairing `⟨F_y, f⟩_M = σ_Z(𝔍y, ν(f))`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::profile::{SmoothStep, TimeProfile};
use crate::spacetime::{BlockData, CauchyData, SpacetimeForm};
use crate::wave::{SolutionBlock, SolutionForm, TimesliceVariant, WaveContext};
use crate::{Error, Result};

/// Element of 𝒦: complex coefficients over the non-kernel eigenmodes.
#[derive(Clone, Debug, PartialEq)]
pub struct KreinVector {
    /// Coefficients over non-kernel 0-form modes (negative-metric block).
    pub scalar: DVector<Complex64>,
    /// Coefficients over non-kernel 1-form modes (positive-metric block).
    pub oneform: DVector<Complex64>,
}

impl KreinVector {
    /// Norm of the auxiliary Hilbert structure (both blocks counted
    /// positively); the natural magnitude scale for tolerances.
    pub fn j_norm(&self) -> f64 {
        (self.scalar.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self.oneform.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            scalar: &self.scalar - &other.scalar,
            oneform: &self.oneform - &other.oneform,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            scalar: self.scalar.map(|z| z * factor),
            oneform: self.oneform.map(|z| z * factor),
        }
    }

    /// Componentwise complex conjugation (the eigenmode basis is real, so
    /// this is the canonical real structure on 𝒦).
    pub fn conj(&self) -> Self {
        Self {
            scalar: self.scalar.map(|z| z.conj()),
            oneform: self.oneform.map(|z| z.conj()),
        }
    }

    /// In-place accumulation `self += factor · other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Self) {
        self.scalar.axpy(factor, &other.scalar, Complex64::new(1.0, 0.0));
        self.oneform.axpy(factor, &other.oneform, Complex64::new(1.0, 0.0));
    }
}

/// Element of the zero-mode phase space Z: Cauchy data supported on the
/// harmonic modes, split into value and velocity slots over degrees 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroModeVector {
    pub value_scalar: DVector<f64>,
    pub value_oneform: DVector<f64>,
    pub velocity_scalar: DVector<f64>,
    pub velocity_oneform: DVector<f64>,
}

impl ZeroModeVector {
    pub fn gram(&self) -> f64 {
        self.value_scalar.norm_squared()
            + self.value_oneform.norm_squared()
            + self.velocity_scalar.norm_squared()
            + self.velocity_oneform.norm_squared()
    }

    pub fn negated(&self) -> Self {
        Self {
            value_scalar: -&self.value_scalar,
            value_oneform: -&self.value_oneform,
            velocity_scalar: -&self.velocity_scalar,
            velocity_oneform: -&self.velocity_oneform,
        }
    }
}

/// Windowed frequency content of a mode-evolved correlation function.
#[derive(Clone, Debug)]
pub struct FrequencySpectrum {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl FrequencySpectrum {
    /// Fraction of the total spectral mass at frequencies below `−guard`.
    pub fn negative_mass_ratio(&self, guard: f64) -> f64 {
        let total: f64 = self.magnitudes.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let neg: f64 = self
            .frequencies
            .iter()
            .zip(&self.magnitudes)
            .filter(|(f, _)| **f < -guard)
            .map(|(_, m)| m)
            .sum();
        neg / total
    }

    /// Frequency of the largest spectral peak.
    pub fn peak_frequency(&self) -> f64 {
        let mut best = 0;
        for i in 0..self.magnitudes.len() {
            if self.magnitudes[i] > self.magnitudes[best] {
                best = i;
            }
        }
        self.frequencies[best]
    }
}

/// Relative tolerance for harmonic leakage into the domain of Δ^{−1/4}.
pub const HARMONIC_LEAK_TOL: f64 = 1e-8;

/// The one-particle structure: frequency scalings over both mode families,
/// bound to a wave context for propagator evaluations.
pub struct OneParticleStructure<'a> {
    pub ctx: &'a WaveContext<'a>,
    quad_points: usize,
    kernel_dims: [usize; 2],
    /// λ^{1/4} over non-kernel modes, per degree.
    quarter: [DVector<f64>; 2],
    /// λ^{−1/4} over non-kernel modes, per degree.
    quarter_inv: [DVector<f64>; 2],
    /// ω = √λ over non-kernel modes, per degree.
    omega: [DVector<f64>; 2],
}

impl<'a> OneParticleStructure<'a> {
    pub fn new(ctx: &'a WaveContext<'a>, quad_points: usize) -> Result<Self> {
        let mut kernel_dims = [0; 2];
        let mut quarter = [DVector::zeros(0), DVector::zeros(0)];
        let mut quarter_inv = [DVector::zeros(0), DVector::zeros(0)];
        let mut omega = [DVector::zeros(0), DVector::zeros(0)];
        for p in 0..=1 {
            let k = ctx.basis.kernel_dim(p);
            let lam = ctx.basis.eigenvalues(p);
            let n = lam.len() - k;
            kernel_dims[p] = k;
            quarter[p] = DVector::from_fn(n, |i, _| lam[k + i].powf(0.25));
            quarter_inv[p] = DVector::from_fn(n, |i, _| lam[k + i].powf(-0.25));
            omega[p] = DVector::from_fn(n, |i, _| lam[k + i].sqrt());
        }
        Ok(Self {
            ctx,
            quad_points,
            kernel_dims,
            quarter,
            quarter_inv,
            omega,
        })
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    /// Kernel dimensions of the degree-0 and degree-1 Laplacians.
    pub fn kernel_dims(&self) -> (usize, usize) {
        (self.kernel_dims[0], self.kernel_dims[1])
    }

    /// A zero element of 𝒦.
    pub fn zero_vector(&self) -> KreinVector {
        KreinVector {
            scalar: DVector::zeros(self.quarter[0].len()),
            oneform: DVector::zeros(self.quarter[1].len()),
        }
    }

    /// A zero element of Z.
    pub fn zero_mode_zero(&self) -> ZeroModeVector {
        ZeroModeVector {
            value_scalar: DVector::zeros(self.kernel_dims[0]),
            value_oneform: DVector::zeros(self.kernel_dims[1]),
            velocity_scalar: DVector::zeros(self.kernel_dims[0]),
            velocity_oneform: DVector::zeros(self.kernel_dims[1]),
        }
    }

    /// τ on one mode-coefficient block, with the kernel slots removed.
    fn tau_block(&self, p: usize, value: &DVector<f64>, velocity: &DVector<f64>) -> DVector<Complex64> {
        let k = self.kernel_dims[p];
        let n = self.quarter[p].len();
        DVector::from_fn(n, |i, _| {
            Complex64::new(
                self.quarter[p][i] * value[k + i],
                self.quarter_inv[p][i] * velocity[k + i],
            )
        })
    }

    /// τ: Cauchy data → 𝒦, `Δ^{1/4}·value + i Δ^{−1/4}·velocity` blockwise.
    ///
    /// The data must be orthogonal to the harmonic modes (relative leakage
    /// ≤ [`HARMONIC_LEAK_TOL`]); Δ^{−1/4} has no harmonic domain.
    pub fn tau(&self, data: &CauchyData) -> Result<KreinVector> {
        if data.degree > 1 {
            return Err(Error::Config(format!(
                "τ expects data of degree 0 or 1, got {}",
                data.degree
            )));
        }
        let mut blocks: Vec<(usize, &BlockData)> = Vec::new();
        if let Some(b) = &data.dt {
            blocks.push((0, b));
        }
        if let Some(b) = &data.spatial {
            blocks.push((data.degree, b));
        }
        let mut out = self.zero_vector();
        for (p, block) in blocks {
            let val = self.ctx.basis.coefficients(p, &block.value.values)?;
            let vel = self.ctx.basis.coefficients(p, &block.velocity.values)?;
            for c in [&val, &vel] {
                let leak: f64 = c.rows(0, self.kernel_dims[p]).norm();
                if leak > HARMONIC_LEAK_TOL * c.norm().max(1.0) {
                    return Err(Error::Domain(format!(
                        "harmonic leakage {leak:.3e} in degree-{p} data exceeds \
                         the Δ^{{−1/4}} domain tolerance"
                    )));
                }
            }
            let tau = self.tau_block(p, &val, &vel);
            if p == 0 {
                out.scalar = tau;
            } else {
                out.oneform = tau;
            }
        }
        Ok(out)
    }

    /// τ of the harmonically projected data of a solution at time `t`:
    /// `τ(P⊥ Ψ_t)`.  Along any solution this equals `e^{−iHt} τ(P⊥ Ψ₀)`.
    pub fn tau_at_time(&self, sol: &SolutionForm, t: f64) -> KreinVector {
        let mut out = self.zero_vector();
        let mut fill = |p: usize, block: &SolutionBlock| {
            let (val, vel) = self.ctx.solution_coeffs_at(block, t);
            let tau = self.tau_block(p, &val, &vel);
            if p == 0 {
                out.scalar = tau;
            } else {
                out.oneform = tau;
            }
        };
        if let Some(b) = &sol.dt {
            fill(0, b);
        }
        if let Some(b) = &sol.spatial {
            fill(b.degree, b);
        }
        out
    }

    /// κ: test form → 𝒦, `f ↦ τ(P⊥ Ψ₀^{Gf})`.  Degree-1 forms fill both
    /// blocks; degree-0 forms fill the scalar block only.
    pub fn kappa(&self, f: &SpacetimeForm) -> Result<KreinVector> {
        if f.degree() > 1 {
            return Err(Error::Config(format!(
                "κ expects a test form of degree 0 or 1, got {}",
                f.degree()
            )));
        }
        let modal = self.ctx.modal(f)?;
        let sol = self.ctx.pauli_jordan(&modal, self.quad_points);
        Ok(self.tau_at_time(&sol, 0.0))
    }

    /// The indefinite inner product `−⟨u₀,v₀⟩ + ⟨u₁,v₁⟩`, conjugate-linear
    /// in the first argument.
    pub fn krein_inner(&self, u: &KreinVector, v: &KreinVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..u.scalar.len() {
            acc -= u.scalar[i].conj() * v.scalar[i];
        }
        for i in 0..u.oneform.len() {
            acc += u.oneform[i].conj() * v.oneform[i];
        }
        acc
    }

    /// The propagator pairing `⟨Gf, g⟩_M`.
    pub fn g_pairing(&self, f: &SpacetimeForm, g: &SpacetimeForm) -> Result<f64> {
        let fm = self.ctx.modal(f)?;
        let gm = self.ctx.modal(g)?;
        self.ctx.propagator_pairing(&fm, &gm, self.quad_points)
    }

    /// The zero-mode remainder `G_Z(f, g) = ⟨Gf, g⟩_M − Im⟨κ(f), κ(g)⟩`.
    pub fn gz_form(&self, f: &SpacetimeForm, g: &SpacetimeForm) -> Result<f64> {
        let pairing = self.g_pairing(f, g)?;
        let inner = self.krein_inner(&self.kappa(f)?, &self.kappa(g)?);
        Ok(pairing - inner.im)
    }

    /// ν: harmonic-mode Cauchy data of `Ψ₀^{Gf}` (the zero-mode content of
    /// a degree-1 test form).
    pub fn zero_mode(&self, f: &SpacetimeForm) -> Result<ZeroModeVector> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "zero-mode map expects a 1-form, got degree {}",
                f.degree()
            )));
        }
        let modal = self.ctx.modal(f)?;
        let sol = self.ctx.pauli_jordan(&modal, self.quad_points);
        let dt = sol.dt.as_ref().expect("1-form solutions carry a dt block");
        let sp = sol
            .spatial
            .as_ref()
            .expect("1-form solutions carry a spatial block");
        let (k0, k1) = (self.kernel_dims[0], self.kernel_dims[1]);
        Ok(ZeroModeVector {
            value_scalar: dt.a.rows(0, k0).clone_owned(),
            value_oneform: sp.a.rows(0, k1).clone_owned(),
            velocity_scalar: dt.b.rows(0, k0).clone_owned(),
            velocity_oneform: sp.b.rows(0, k1).clone_owned(),
        })
    }

    /// The symplectic form on Z (the harmonic-block restriction of the
    /// Cauchy symplectic form, with its degree signs `(−, +)`).
    pub fn sigma_z(&self, x: &ZeroModeVector, y: &ZeroModeVector) -> f64 {
        -(x.value_scalar.dot(&y.velocity_scalar) - x.velocity_scalar.dot(&y.value_scalar))
            + (x.value_oneform.dot(&y.velocity_oneform)
                - x.velocity_oneform.dot(&y.value_oneform))
    }

    /// The compatible complex structure on Z:
    /// `𝔍((𝔣₀, 𝔣_Σ), (𝔤₀, 𝔤_Σ)) = ((−𝔤₀, 𝔤_Σ), (𝔣₀, −𝔣_Σ))`.
    /// Satisfies `𝔍² = −1` and makes `K = −σ_Z(·, 𝔍·)` the plain block Gram.
    pub fn complex_structure(&self, z: &ZeroModeVector) -> ZeroModeVector {
        ZeroModeVector {
            value_scalar: -&z.velocity_scalar,
            value_oneform: z.velocity_oneform.clone(),
            velocity_scalar: z.value_scalar.clone(),
            velocity_oneform: -&z.value_oneform,
        }
    }

    /// The positive inner product `K(x, y) = −σ_Z(x, 𝔍y)` on Z.
    pub fn k_inner(&self, x: &ZeroModeVector, y: &ZeroModeVector) -> f64 {
        -self.sigma_z(x, &self.complex_structure(y))
    }

    /// The energy operator `H = Δ^{1/2} ⊕ Δ^{1/2}` on 𝒦.
    pub fn energy_apply(&self, u: &KreinVector) -> KreinVector {
        KreinVector {
            scalar: DVector::from_fn(u.scalar.len(), |i, _| u.scalar[i] * self.omega[0][i]),
            oneform: DVector::from_fn(u.oneform.len(), |i, _| u.oneform[i] * self.omega[1][i]),
        }
    }

    /// The quadratic energy `⟨κ(f), H κ(f)⟩` (real by construction).
    pub fn energy_form(&self, f: &SpacetimeForm) -> Result<f64> {
        let k = self.kappa(f)?;
        Ok(self.krein_inner(&k, &self.energy_apply(&k)).re)
    }

    /// `e^{iHt}` on 𝒦: phase `e^{iω_k t}` per mode.
    pub fn evolve(&self, u: &KreinVector, t: f64) -> KreinVector {
        let phase = |omega: f64| Complex64::from_polar(1.0, omega * t);
        KreinVector {
            scalar: DVector::from_fn(u.scalar.len(), |i, _| u.scalar[i] * phase(self.omega[0][i])),
            oneform: DVector::from_fn(u.oneform.len(), |i, _| {
                u.oneform[i] * phase(self.omega[1][i])
            }),
        }
    }

    /// Windowed discrete Fourier transform of `F(t) = ⟨κf, e^{iHt} κg⟩`,
    /// sampled at `n_samples` points over `[0, t_span]` under a smooth
    /// compactly supported window.  All spectral mass should sit at
    /// positive frequencies.
    pub fn positive_frequency_spectrum(
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
        let kf = self.kappa(f)?;
        let kg = self.kappa(g)?;
        let window = TimeProfile::bump(t_span / 2.0, t_span / 2.0, 1.0)?;
        let dt = t_span / n_samples as f64;
        let samples: Vec<Complex64> = (0..n_samples)
            .map(|j| {
                let t = dt * j as f64;
                self.krein_inner(&kf, &self.evolve(&kg, t)) * window.value(t)
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

    /// κ through the time-slice reduction: `κ̃(f) := κ(g)` with `g` the
    /// slice-localized representative of `f`.  Agrees with `κ(f)` because
    /// the corrector is a d'Alembertian image.
    pub fn extend_kappa(&self, f: &SpacetimeForm, step: &SmoothStep) -> Result<KreinVector> {
        let reduced = self
            .ctx
            .timeslice_reduce(f, step, TimesliceVariant::Generic)?;
        let sol = self.ctx.pauli_jordan_from_field(&reduced.g);
        Ok(self.tau_at_time(&sol, 0.0))
    }

    /// The time-constant harmonic dual 1-form of `y` (supported on the
    /// 1-form velocity slot of Z): the homogeneous solution whose spatial
    /// block is the harmonic representative, satisfying
    /// `⟨F_y, f⟩_M = σ_Z(𝔍y, ν(f))` for every test 1-form `f`.
    pub fn harmonic_dual_form(&self, y: &ZeroModeVector) -> Result<SolutionForm> {
        let stray = y.value_scalar.norm() + y.value_oneform.norm() + y.velocity_scalar.norm();
        if stray > 0.0 {
            return Err(Error::Domain(
                "harmonic dual forms are defined on the 1-form velocity slot only".to_string(),
            ));
        }
        let n0 = self.ctx.basis.eigenvalues(0).len();
        let n1 = self.ctx.basis.eigenvalues(1).len();
        let mut a = DVector::zeros(n1);
        for i in 0..self.kernel_dims[1] {
            a[i] = y.velocity_oneform[i];
        }
        Ok(SolutionForm {
            degree: 1,
            dt: Some(SolutionBlock {
                degree: 0,
                a: DVector::zeros(n0),
                b: DVector::zeros(n0),
            }),
            spatial: Some(SolutionBlock {
                degree: 1,
                a,
                b: DVector::zeros(n1),
            }),
        })
    }
}
