//! The ξ-family of wave operators `□_ξ = δd + (1/ξ) dδ` on 1-forms,
//! interpolating through the Feynman-gauge operator `□ = □₁`, together with
//!
//! * a mode-block Cauchy solver for `□_ξ u = 0` (classical 4th-order time
//!   stepper with an energy-drift instability guard),
//! * the exact right inverse `R` of `□` (retarded zero-data Duhamel solve,
//!   so `□Rf = f` on all compactly supported inputs),
//! * the localized primitive `L = η₋G₊ + η₊G₋` built from a smooth
//!   partition `η₋ + η₊ = 1` of the time axis, and
//! * the intertwiners `𝔍_R = 1 + (ξ⁻¹−1) dRδ` (with inverse
//!   `𝔍_R⁻¹ = 1 + (ξ−1) dRδ`) and `𝔍_L = 1 + (ξ⁻¹−1) dLδ` carrying
//!   ξ-dynamics to Feynman-gauge dynamics: `□ ∘ 𝔍_R = □_ξ`.
//!
//! Spatial directions stay exact (everything is expressed in the Laplacian
//! eigenbasis); only the time direction is discretized.

use nalgebra::{DMatrix, DVector};

use crate::profile::SmoothStep;
use crate::spacetime::{BlockKind, SeparableTerm, SpacetimeForm};
use crate::wave::{Direction, GridField, Tracks, WaveContext};
use crate::{Error, Result};

/// Relative energy drift above which the time stepper is declared unstable.
pub const ENERGY_DRIFT_TOL: f64 = 1e-2;

/// The gauge-parameter operator family at a fixed ξ > 0.
pub struct XiOperators<'a, 'b> {
    pub ctx: &'b WaveContext<'a>,
    pub xi: f64,
    /// The rising cutoff η₊; the partition is completed by η₋ = 1 − η₊.
    pub step: SmoothStep,
}

/// Cauchy data for `□_ξ`: the scalar (dt) component φ and the spatial
/// 1-form component a, with their time derivatives, in eigencoordinates.
#[derive(Clone, Debug)]
pub struct XiData {
    pub phi: DVector<f64>,
    pub phi_dot: DVector<f64>,
    pub a: DVector<f64>,
    pub a_dot: DVector<f64>,
}

/// A numerically integrated solution of `□_ξ u = 0`, sampled at every
/// accepted step (matrices are modes × sample times).
#[derive(Clone, Debug)]
pub struct XiSolution {
    pub times: Vec<f64>,
    pub phi: DMatrix<f64>,
    pub phi_dot: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub a_dot: DMatrix<f64>,
}

/// A time-sampled 1-form in eigencoordinates, carrying the exact time
/// derivative of its dt component so that δ can be applied without finite
/// differencing.  This is the natural output format of the intertwiners,
/// whose `dRδ`/`dLδ` corrections are not separable closed forms.
#[derive(Clone, Debug)]
pub struct SampledOneForm {
    /// dt-component values (0-form modes × supergrid times).
    pub dt_value: DMatrix<f64>,
    /// ∂ₜ of the dt component.
    pub dt_deriv: DMatrix<f64>,
    /// Spatial-component values (1-form modes × supergrid times).
    pub sp_value: DMatrix<f64>,
}

/// A time-sampled scalar with two derivative tracks, the output of the
/// localized primitive `L` (whose cutoff products also have no closed form).
#[derive(Clone, Debug)]
pub struct ScalarTracks {
    pub value: DMatrix<f64>,
    pub deriv: DMatrix<f64>,
    pub second: DMatrix<f64>,
}

impl SampledOneForm {
    /// Samples a closed-form 1-form on the context grid.  Missing blocks
    /// sample to zero.
    pub fn sample(ctx: &WaveContext, f: &SpacetimeForm) -> Result<Self> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "sampled 1-form built from degree {}",
                f.degree()
            )));
        }
        let modal = ctx.modal(f)?;
        let times = ctx.times();
        let npts = times.len();
        let n0 = ctx.basis.eigenvalues(0).len();
        let n1 = ctx.basis.eigenvalues(1).len();
        let (dt_value, dt_deriv) = match &modal.dt {
            None => (DMatrix::zeros(n0, npts), DMatrix::zeros(n0, npts)),
            Some(b) => {
                let mut derived = b.clone();
                for p in &mut derived.profiles {
                    *p = p.nth_derivative(1);
                }
                (b.samples(times), derived.samples(times))
            }
        };
        let sp_value = match &modal.spatial {
            None => DMatrix::zeros(n1, npts),
            Some(b) => b.samples(times),
        };
        Ok(Self {
            dt_value,
            dt_deriv,
            sp_value,
        })
    }

    /// Samples of `δw = −ẇ₀ − δ_Σ w_Σ` (a 0-form track).
    pub fn delta_samples(&self, ctx: &WaveContext) -> DMatrix<f64> {
        -&self.dt_deriv - ctx.d_map(0).transpose() * &self.sp_value
    }

    /// The sampled field as a [`GridField`] (value tracks only), ready for
    /// the grid-level propagator.
    pub fn grid_field(&self) -> GridField {
        GridField {
            degree: 1,
            dt: Some(Tracks {
                u: self.dt_value.clone(),
                v: None,
            }),
            spatial: Some(Tracks {
                u: self.sp_value.clone(),
                v: None,
            }),
        }
    }

    /// Largest absolute entry across all tracks.
    pub fn max_abs(&self) -> f64 {
        let m = |x: &DMatrix<f64>| x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        m(&self.dt_value).max(m(&self.dt_deriv)).max(m(&self.sp_value))
    }

    /// Largest absolute entry of the track-wise difference.
    pub fn max_distance(&self, other: &Self) -> f64 {
        let m = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            (x - y).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
        };
        m(&self.dt_value, &other.dt_value)
            .max(m(&self.dt_deriv, &other.dt_deriv))
            .max(m(&self.sp_value, &other.sp_value))
    }
}

/// Scales every term's shape by a constant, blockwise.
fn scaled_terms(terms: &[SeparableTerm], c: f64) -> Vec<SeparableTerm> {
    terms
        .iter()
        .map(|t| {
            let mut shape = t.shape.clone();
            shape.values *= c;
            SeparableTerm {
                profile: t.profile.clone(),
                shape,
            }
        })
        .collect()
}

/// Scales row `k` of a track matrix by `lam[k]` (application of a diagonal
/// spatial operator to mode samples).
fn row_scaled(lam: &DVector<f64>, tracks: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = tracks.clone();
    for k in 0..out.nrows() {
        let s = lam[k];
        for j in 0..out.ncols() {
            out[(k, j)] *= s;
        }
    }
    out
}

impl<'a, 'b> XiOperators<'a, 'b> {
    pub fn new(ctx: &'b WaveContext<'a>, xi: f64, step: SmoothStep) -> Result<Self> {
        if !xi.is_finite() || xi <= 0.0 {
            return Err(Error::Config(format!(
                "gauge parameter must be positive and finite, got {xi}"
            )));
        }
        Ok(Self { ctx, xi, step })
    }

    /// `□_ξ f = δdf + (1/ξ) dδf` on a closed-form 1-form, by composing the
    /// form-level operators.
    pub fn box_xi(&self, f: &SpacetimeForm) -> Result<SpacetimeForm> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "□_ξ is defined on 1-forms, got degree {}",
                f.degree()
            )));
        }
        let complex = self.ctx.complex;
        let dd = f.d(complex)?.delta(complex)?;
        let dd_scaled = f.delta(complex)?.d(complex)?;
        SpacetimeForm::new(
            complex,
            1,
            dd.terms(BlockKind::Dt)
                .iter()
                .cloned()
                .chain(scaled_terms(dd_scaled.terms(BlockKind::Dt), 1.0 / self.xi))
                .collect(),
            dd.terms(BlockKind::Spatial)
                .iter()
                .cloned()
                .chain(scaled_terms(
                    dd_scaled.terms(BlockKind::Spatial),
                    1.0 / self.xi,
                ))
                .collect(),
        )
    }

    /// The conserved energy of the `□_ξ` flow,
    /// `E = ½‖ȧ‖² − ½‖d_Σφ‖² + ½‖d_Σa‖² − (1/2ξ)‖φ̇‖² + (1/2ξ)‖δ_Σa‖²`
    /// (indefinite, as usual for a gauge-fixed vector field; exact constancy
    /// along solutions makes its drift a sharp instability detector).
    pub fn energy(&self, phi: &DVector<f64>, p: &DVector<f64>, a: &DVector<f64>, q: &DVector<f64>) -> f64 {
        let t = self.ctx.d_map(0);
        let d1 = self.ctx.d_map(1);
        0.5 * q.norm_squared() - 0.5 * (t * phi).norm_squared()
            + 0.5 * (d1 * a).norm_squared()
            - 0.5 / self.xi * p.norm_squared()
            + 0.5 / self.xi * (t.transpose() * a).norm_squared()
    }

    /// Integrates `□_ξ u = 0` from Cauchy data at `t0` to `t1` by the
    /// classical 4th-order Runge–Kutta scheme on the per-mode system
    ///
    /// ```text
    /// φ̈ = −ξ Δ₀ φ + (ξ−1) δ_Σ ȧ
    /// ä = −[Δ₁ + (1/ξ−1) d_Σδ_Σ] a + (1−1/ξ) d_Σ φ̇
    /// ```
    ///
    /// recording every step.  A relative drift of the conserved energy
    /// beyond [`ENERGY_DRIFT_TOL`] aborts with a numerical error.
    pub fn solve(&self, data: &XiData, t0: f64, t1: f64, dt: f64) -> Result<XiSolution> {
        if !dt.is_finite() || dt <= 0.0 || !(t1 - t0).is_finite() || t1 <= t0 {
            return Err(Error::Config(format!(
                "integration needs t1 > t0 and dt > 0, got [{t0}, {t1}] at {dt}"
            )));
        }
        let lam0 = self.ctx.basis.eigenvalues(0);
        let lam1 = self.ctx.basis.eigenvalues(1);
        let (n0, n1) = (lam0.len(), lam1.len());
        if data.phi.len() != n0 || data.phi_dot.len() != n0 {
            return Err(Error::Config(format!(
                "scalar component needs {n0} modes, got {}",
                data.phi.len()
            )));
        }
        if data.a.len() != n1 || data.a_dot.len() != n1 {
            return Err(Error::Config(format!(
                "1-form component needs {n1} modes, got {}",
                data.a.len()
            )));
        }
        let t = self.ctx.d_map(0).clone();
        let tt = t.transpose();
        let xi = self.xi;
        let rhs = |phi: &DVector<f64>,
                   p: &DVector<f64>,
                   a: &DVector<f64>,
                   q: &DVector<f64>|
         -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
            let mut p_dot = &tt * q;
            p_dot *= xi - 1.0;
            for k in 0..n0 {
                p_dot[k] -= xi * lam0[k] * phi[k];
            }
            let div_a = &tt * a;
            let mut q_dot = &t * &(p * (1.0 - 1.0 / xi) - &div_a * (1.0 / xi - 1.0));
            for k in 0..n1 {
                q_dot[k] -= lam1[k] * a[k];
            }
            (p.clone(), p_dot, q.clone(), q_dot)
        };

        let n_steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n_steps as f64;
        let mut phi = data.phi.clone();
        let mut p = data.phi_dot.clone();
        let mut a = data.a.clone();
        let mut q = data.a_dot.clone();

        let e0 = self.energy(&phi, &p, &a, &q);
        let scale = 1.0
            + 0.5 * (p.norm_squared() + q.norm_squared())
            + 0.5 * ((&t * &phi).norm_squared() + (self.ctx.d_map(1) * &a).norm_squared())
            + 0.5 * (&tt * &a).norm_squared();

        let mut out = XiSolution {
            times: Vec::with_capacity(n_steps + 1),
            phi: DMatrix::zeros(n0, n_steps + 1),
            phi_dot: DMatrix::zeros(n0, n_steps + 1),
            a: DMatrix::zeros(n1, n_steps + 1),
            a_dot: DMatrix::zeros(n1, n_steps + 1),
        };
        let record = |step: usize, time: f64, phi: &DVector<f64>, p: &DVector<f64>, a: &DVector<f64>, q: &DVector<f64>, out: &mut XiSolution| {
            out.times.push(time);
            out.phi.set_column(step, phi);
            out.phi_dot.set_column(step, p);
            out.a.set_column(step, a);
            out.a_dot.set_column(step, q);
        };
        record(0, t0, &phi, &p, &a, &q, &mut out);

        for step in 1..=n_steps {
            let (k1p, k1pd, k1a, k1ad) = rhs(&phi, &p, &a, &q);
            let (k2p, k2pd, k2a, k2ad) = rhs(
                &(&phi + &k1p * (h / 2.0)),
                &(&p + &k1pd * (h / 2.0)),
                &(&a + &k1a * (h / 2.0)),
                &(&q + &k1ad * (h / 2.0)),
            );
            let (k3p, k3pd, k3a, k3ad) = rhs(
                &(&phi + &k2p * (h / 2.0)),
                &(&p + &k2pd * (h / 2.0)),
                &(&a + &k2a * (h / 2.0)),
                &(&q + &k2ad * (h / 2.0)),
            );
            let (k4p, k4pd, k4a, k4ad) = rhs(
                &(&phi + &k3p * h),
                &(&p + &k3pd * h),
                &(&a + &k3a * h),
                &(&q + &k3ad * h),
            );
            phi += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
            p += (k1pd + k2pd * 2.0 + k3pd * 2.0 + k4pd) * (h / 6.0);
            a += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
            q += (k1ad + k2ad * 2.0 + k3ad * 2.0 + k4ad) * (h / 6.0);

            let e = self.energy(&phi, &p, &a, &q);
            if !e.is_finite() || (e - e0).abs() > ENERGY_DRIFT_TOL * scale {
                return Err(Error::Numerical(format!(
                    "time stepper unstable at step {step} (dt = {h:.3e}): \
                     energy drift {:.3e} exceeds {ENERGY_DRIFT_TOL:.0e} × {scale:.3e}",
                    (e - e0).abs()
                )));
            }
            record(step, t0 + h * step as f64, &phi, &p, &a, &q, &mut out);
        }
        Ok(out)
    }

    /// The retarded right inverse `Rf`: the solution of `□u = f` with
    /// vanishing data before the support of `f` (degrees 0 and 1).
    pub fn r_operator(&self, f: &SpacetimeForm) -> Result<GridField> {
        if f.degree() > 1 {
            return Err(Error::Config(format!(
                "R is implemented for degrees 0 and 1, got {}",
                f.degree()
            )));
        }
        let modal = self.ctx.modal(f)?;
        Ok(self.ctx.green(&modal, Direction::Retarded))
    }

    /// The localized primitive `Lf = η₋ G₊f + η₊ G₋f` of a scalar `f`,
    /// compactly supported because each cutoff suppresses the escaping tail
    /// of its Green operator.  Returns value, derivative and second
    /// derivative tracks (the derivatives mix cutoff jets with the exact
    /// Duhamel velocities, and `ü± = −Δ₀u± − f` closes the second order).
    pub fn l_operator(&self, f: &SpacetimeForm) -> Result<ScalarTracks> {
        if f.degree() != 0 {
            return Err(Error::Config(format!(
                "L is a scalar operator, got degree {}",
                f.degree()
            )));
        }
        let modal = self.ctx.modal(f)?;
        let block = match &modal.spatial {
            Some(b) => b,
            None => {
                let n0 = self.ctx.basis.eigenvalues(0).len();
                let npts = self.ctx.times().len();
                return Ok(ScalarTracks {
                    value: DMatrix::zeros(n0, npts),
                    deriv: DMatrix::zeros(n0, npts),
                    second: DMatrix::zeros(n0, npts),
                });
            }
        };
        let times = self.ctx.times();
        let samples = block.samples(times);
        let plus = self.ctx.green_from_samples(0, &samples, Direction::Retarded);
        let minus = self.ctx.green_from_samples(0, &samples, Direction::Advanced);
        let (up, vp) = (&plus.u, plus.v.as_ref().expect("Duhamel tracks carry velocities"));
        let (um, vm) = (&minus.u, minus.v.as_ref().expect("Duhamel tracks carry velocities"));
        let lam0 = self.ctx.basis.eigenvalues(0);

        let n0 = up.nrows();
        let npts = times.len();
        let mut value = DMatrix::zeros(n0, npts);
        let mut deriv = DMatrix::zeros(n0, npts);
        let mut second = DMatrix::zeros(n0, npts);
        for j in 0..npts {
            let (g, g1, g2, _) = self.step.jet3(times[j]);
            for k in 0..n0 {
                let (a, b) = (up[(k, j)], um[(k, j)]);
                let (da, db) = (vp[(k, j)], vm[(k, j)]);
                value[(k, j)] = (1.0 - g) * a + g * b;
                deriv[(k, j)] = g1 * (b - a) + (1.0 - g) * da + g * db;
                second[(k, j)] = g2 * (b - a) + 2.0 * g1 * (db - da)
                    - lam0[k] * value[(k, j)]
                    - samples[(k, j)];
            }
        }
        Ok(ScalarTracks {
            value,
            deriv,
            second,
        })
    }

    /// The residual norm of the defect identity `f − L□f ∈ im □`: builds
    /// the sampled difference, applies the Pauli–Jordan propagator (whose
    /// kernel is exactly im □ on compactly supported scalars) and returns
    /// the norm of the resulting Cauchy data.
    pub fn l_defect_check(&self, f: &SpacetimeForm) -> Result<f64> {
        if f.degree() != 0 {
            return Err(Error::Config(format!(
                "the defect check applies to scalars, got degree {}",
                f.degree()
            )));
        }
        let box_f = f.box_operator(self.ctx.complex)?;
        let l_box = self.l_operator(&box_f)?;
        let modal = self.ctx.modal(f)?;
        let samples = match &modal.spatial {
            Some(b) => b.samples(self.ctx.times()),
            None => DMatrix::zeros(l_box.value.nrows(), l_box.value.ncols()),
        };
        let field = GridField {
            degree: 0,
            dt: None,
            spatial: Some(Tracks {
                u: samples - &l_box.value,
                v: None,
            }),
        };
        let sol = self.ctx.pauli_jordan_from_field(&field);
        let block = sol.spatial.expect("scalar fields carry a spatial block");
        Ok((block.a.norm_squared() + block.b.norm_squared()).sqrt())
    }

    /// `𝔍_R f = f + (ξ⁻¹−1) dRδf` on a closed-form 1-form.
    pub fn i_r(&self, f: &SpacetimeForm) -> Result<SampledOneForm> {
        Ok(self.i_r_grid(&SampledOneForm::sample(self.ctx, f)?, false))
    }

    /// `𝔍_R⁻¹ f = f + (ξ−1) dRδf` on a closed-form 1-form.
    pub fn i_r_inverse(&self, f: &SpacetimeForm) -> Result<SampledOneForm> {
        Ok(self.i_r_grid(&SampledOneForm::sample(self.ctx, f)?, true))
    }

    /// The grid-level intertwiner, applicable to already-sampled fields so
    /// the maps can be composed.  `δw` is formed from the stored derivative
    /// track, `u = R(δw)` by the retarded Duhamel solve, and the gradient
    /// correction uses the Duhamel velocity (`dt` slot) and the spatial
    /// derivative map (`d_Σ` slot); `ü = −Δ₀u − δw` closes the derivative
    /// track of the correction.
    pub fn i_r_grid(&self, w: &SampledOneForm, inverse: bool) -> SampledOneForm {
        let c = if inverse {
            self.xi - 1.0
        } else {
            1.0 / self.xi - 1.0
        };
        let chi = w.delta_samples(self.ctx);
        let tracks = self
            .ctx
            .green_from_samples(0, &chi, Direction::Retarded);
        let u = &tracks.u;
        let v = tracks.v.as_ref().expect("Duhamel tracks carry velocities");
        let lam0 = self.ctx.basis.eigenvalues(0);
        SampledOneForm {
            dt_value: &w.dt_value + v * c,
            dt_deriv: &w.dt_deriv + (row_scaled(lam0, u) + &chi) * (-c),
            sp_value: &w.sp_value + self.ctx.d_map(0) * u * c,
        }
    }

    /// `𝔍_L f = f + (ξ⁻¹−1) dLδf` on a closed-form 1-form, with the
    /// localized primitive in place of the retarded inverse (so the output
    /// stays compactly supported and can be smeared like a test form).
    pub fn i_l(&self, f: &SpacetimeForm) -> Result<SampledOneForm> {
        let base = SampledOneForm::sample(self.ctx, f)?;
        let c = 1.0 / self.xi - 1.0;
        let chi = f.delta(self.ctx.complex)?;
        let l = self.l_operator(&chi)?;
        Ok(SampledOneForm {
            dt_value: &base.dt_value + &l.deriv * c,
            dt_deriv: &base.dt_deriv + &l.second * c,
            sp_value: &base.sp_value + self.ctx.d_map(0) * &l.value * c,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::GBRepresentation;
    use crate::oneparticle::{OneParticleStructure, ZeroModeVector};
    use crate::profile::TimeProfile;
    use crate::spacetime::SeparableTerm;
    use crate::spatial::{EigenBasis, SpatialComplex, SpatialForm};
    use crate::wave::{SolutionBlock, SolutionForm, TimeGrid};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const QUAD: usize = 1600;

    struct Fixture {
        complex: SpatialComplex,
        basis: EigenBasis,
    }

    impl Fixture {
        fn torus() -> Self {
            let complex = SpatialComplex::flat_torus(2, 5, &[1.0, 1.0]).unwrap();
            let basis = EigenBasis::analyze(&complex).unwrap();
            Fixture { complex, basis }
        }

        fn ctx(&self) -> WaveContext<'_> {
            let grid = TimeGrid::new(-4.0, 4.0, 200, 10).unwrap();
            WaveContext::new(&self.complex, &self.basis, grid).unwrap()
        }
    }

    fn xi_ops<'a, 'b>(ctx: &'b WaveContext<'a>, xi: f64) -> XiOperators<'a, 'b> {
        XiOperators::new(ctx, xi, SmoothStep::rising(-0.5, 0.5).unwrap()).unwrap()
    }

    fn random_profile(rng: &mut ChaCha8Rng) -> TimeProfile {
        let center = rng.gen_range(-1.5..1.5);
        let half_width = rng.gen_range(0.7..1.3);
        let amplitude = rng.gen_range(0.5..1.5);
        match rng.gen_range(0..3) {
            0 => TimeProfile::bump(center, half_width, amplitude),
            1 => TimeProfile::odd_bump(center, half_width, amplitude),
            _ => TimeProfile::wiggle(center, half_width, amplitude),
        }
        .unwrap()
    }

    fn random_shape(rng: &mut ChaCha8Rng, complex: &SpatialComplex, deg: usize) -> SpatialForm {
        SpatialForm {
            degree: deg,
            values: DVector::from_fn(complex.n_cells(deg), |_, _| rng.gen_range(-1.0..1.0)),
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
        .unwrap()
    }

    fn random_scalar(rng: &mut ChaCha8Rng, complex: &SpatialComplex) -> SpacetimeForm {
        SpacetimeForm::scalar_term(complex, random_profile(rng), random_shape(rng, complex, 0))
            .unwrap()
    }

    fn random_data(rng: &mut ChaCha8Rng, ctx: &WaveContext) -> XiData {
        let n0 = ctx.basis.eigenvalues(0).len();
        let n1 = ctx.basis.eigenvalues(1).len();
        XiData {
            phi: DVector::from_fn(n0, |_, _| rng.gen_range(-1.0..1.0)),
            phi_dot: DVector::from_fn(n0, |_, _| rng.gen_range(-1.0..1.0)),
            a: DVector::from_fn(n1, |_, _| rng.gen_range(-1.0..1.0)),
            a_dot: DVector::from_fn(n1, |_, _| rng.gen_range(-1.0..1.0)),
        }
    }

    /// Samples a closed-form form blockwise on the grid (dt block of a
    /// 1-form is a 0-cochain track).
    fn block_samples(ctx: &WaveContext, f: &SpacetimeForm, kind: BlockKind) -> DMatrix<f64> {
        let modal = ctx.modal(f).unwrap();
        let deg = match kind {
            BlockKind::Dt => f.degree() - 1,
            BlockKind::Spatial => f.degree(),
        };
        let n = ctx.basis.eigenvalues(deg).len();
        match modal.block(kind) {
            Some(b) => b.samples(ctx.times()),
            None => DMatrix::zeros(n, ctx.times().len()),
        }
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Dense matrix exponential by scaling and squaring (test oracle).
    fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * m.nrows() as f64;
        let s = norm.log2().ceil().max(0.0) as u32 + 1;
        let b = m / 2f64.powi(s as i32);
        let mut term = DMatrix::identity(m.nrows(), m.ncols());
        let mut sum = term.clone();
        for k in 1..=20 {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn xi_one_recovers_the_feynman_wave_operator() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let f = random_one_form(&mut rng, &fx.complex);

        // δd + dδ agrees with the wave operator sample for sample.
        let via_xi = ops.box_xi(&f).unwrap();
        let via_box = f.box_operator(&fx.complex).unwrap();
        for kind in [BlockKind::Dt, BlockKind::Spatial] {
            let lhs = block_samples(&ctx, &via_xi, kind);
            let rhs = block_samples(&ctx, &via_box, kind);
            let scale = max_abs(&rhs).max(1.0);
            assert!(
                max_abs(&(lhs - &rhs)) <= 1e-10 * scale,
                "□₁ disagrees with □ on {kind:?}"
            );
        }

        // All three intertwiners degenerate to the identity (coefficient 0).
        let base = SampledOneForm::sample(&ctx, &f).unwrap();
        assert_eq!(ops.i_r(&f).unwrap().max_distance(&base), 0.0);
        assert_eq!(ops.i_r_inverse(&f).unwrap().max_distance(&base), 0.0);
        assert_eq!(ops.i_l(&f).unwrap().max_distance(&base), 0.0);
    }

    #[test]
    fn transverse_cauchy_data_evolves_as_an_ordinary_wave() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let n0 = ctx.basis.eigenvalues(0).len();
        let n2 = ctx.basis.eigenvalues(2).len();

        // Co-exact 1-form data is transverse: δ_Σ (δ_Σ β) = 0 exactly.
        let co_exact = |rng: &mut ChaCha8Rng| {
            ctx.delta_map(2) * DVector::from_fn(n2, |_, _| rng.gen_range(-1.0f64..1.0))
        };
        let data = XiData {
            phi: DVector::zeros(n0),
            phi_dot: DVector::zeros(n0),
            a: co_exact(&mut rng),
            a_dot: co_exact(&mut rng),
        };
        let sol = ops.solve(&data, 0.0, 2.0, 2.5e-4).unwrap();

        let exact = SolutionBlock {
            degree: 1,
            a: data.a.clone(),
            b: data.a_dot.clone(),
        };
        let last = sol.times.len() - 1;
        for j in [last / 3, 2 * last / 3, last] {
            let (val, vel) = ctx.solution_coeffs_at(&exact, sol.times[j]);
            assert!((sol.a.column(j) - val).norm() <= 1e-8);
            assert!((sol.a_dot.column(j) - vel).norm() <= 1e-8);
            // The scalar component never wakes up (up to the rounding-level
            // δ_Σ∘δ_Σ residue driving it, accumulated over ~10⁴ steps).
            assert!(sol.phi.column(j).norm() <= 1e-9);
        }
    }

    #[test]
    fn longitudinal_blocks_match_the_matrix_exponential() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let xi = 0.5;
        let ops = xi_ops(&ctx, xi);
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let lam0 = ctx.basis.eigenvalues(0);
        let n0 = lam0.len();

        // A single nonkernel scalar mode k and its gradient direction.
        let k = 7usize;
        let lambda = lam0[k];
        assert!(lambda > 0.0);
        let mut e_k = DVector::zeros(n0);
        e_k[k] = 1.0;
        let big_e = ctx.d_map(0) * &e_k / lambda.sqrt();

        let z0 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0f64..1.0));
        let data = XiData {
            phi: &e_k * z0[0],
            phi_dot: &e_k * z0[1],
            a: &big_e * z0[2],
            a_dot: &big_e * z0[3],
        };
        let t_end = 1.5;
        let sol = ops.solve(&data, 0.0, t_end, 2.5e-4).unwrap();

        // Oracle: exp(tA) on the (φ, φ̇, α, α̇) block along (e_k, E).
        let rl = lambda.sqrt();
        let a_mat = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0,
                -xi * lambda, 0.0, 0.0, (xi - 1.0) * rl,
                0.0, 0.0, 0.0, 1.0,
                0.0, (1.0 - 1.0 / xi) * rl, -lambda / xi, 0.0,
            ],
        );
        let z_end = expm(&(a_mat * t_end)) * z0;

        let last = sol.times.len() - 1;
        let projected = DVector::from_vec(vec![
            e_k.dot(&sol.phi.column(last).clone_owned()),
            e_k.dot(&sol.phi_dot.column(last).clone_owned()),
            big_e.dot(&sol.a.column(last).clone_owned()),
            big_e.dot(&sol.a_dot.column(last).clone_owned()),
        ]);
        assert!(
            (projected - &z_end).norm() <= 1e-8,
            "longitudinal block deviates from the matrix exponential"
        );
        // Nothing leaks out of the invariant block.
        let leak = (sol.phi.column(last) - &e_k * z_end[0]).norm()
            + (sol.a.column(last) - &big_e * z_end[2]).norm();
        assert!(leak <= 1e-8, "leak {leak} out of the longitudinal block");
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let data = random_data(&mut rng, &ctx);

        let end_state = |dt: f64| {
            let sol = ops.solve(&data, 0.0, 1.0, dt).unwrap();
            let last = sol.times.len() - 1;
            let mut z = sol.phi.column(last).clone_owned();
            let stack = |z: &mut DVector<f64>, c: DVector<f64>| {
                *z = DVector::from_iterator(z.len() + c.len(), z.iter().chain(c.iter()).copied());
            };
            stack(&mut z, sol.phi_dot.column(last).clone_owned());
            stack(&mut z, sol.a.column(last).clone_owned());
            stack(&mut z, sol.a_dot.column(last).clone_owned());
            z
        };
        let coarse = end_state(0.02);
        let medium = end_state(0.01);
        let fine = end_state(0.005);
        let ratio = (coarse - &fine).norm() / (medium - &fine).norm();
        // Richardson: (1 − 4⁻²)/(4⁻¹ − 4⁻²)·… = 17 for a 4th-order scheme.
        assert!(
            (14.5..20.0).contains(&ratio),
            "self-convergence ratio {ratio} is not 4th order"
        );
    }

    #[test]
    fn reference_step_meets_the_residual_bound() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let xi = 2.0;
        let ops = xi_ops(&ctx, xi);
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let data = random_data(&mut rng, &ctx);
        let dt = 1.25e-3;
        let sol = ops.solve(&data, 0.0, 1.0, dt).unwrap();

        let t = ctx.d_map(0);
        let lam0 = ctx.basis.eigenvalues(0);
        let lam1 = ctx.basis.eigenvalues(1);
        let npts = sol.times.len();
        let c = 1.0 / (12.0 * dt * dt);
        let second = |track: &DMatrix<f64>, k: usize, j: usize| {
            c * (-track[(k, j - 2)] + 16.0 * track[(k, j - 1)] - 30.0 * track[(k, j)]
                + 16.0 * track[(k, j + 1)]
                - track[(k, j + 2)])
        };

        let mut worst = 0.0f64;
        for j in (2..npts - 2).step_by(25) {
            let div_adot = t.transpose() * sol.a_dot.column(j).clone_owned();
            for k in 0..lam0.len() {
                let r = -second(&sol.phi, k, j) / xi - lam0[k] * sol.phi[(k, j)]
                    + (1.0 - 1.0 / xi) * div_adot[k];
                worst = worst.max(r.abs());
            }
            let grad_p = t * sol.phi_dot.column(j).clone_owned();
            let ttr_a = t * (t.transpose() * sol.a.column(j).clone_owned());
            for k in 0..lam1.len() {
                let r = -second(&sol.a, k, j)
                    - lam1[k] * sol.a[(k, j)]
                    - (1.0 / xi - 1.0) * ttr_a[k]
                    + (1.0 - 1.0 / xi) * grad_p[k];
                worst = worst.max(r.abs());
            }
        }
        let scale = max_abs(&sol.phi).max(max_abs(&sol.a)).max(1.0);
        assert!(
            worst <= 1e-5 * scale,
            "residual {worst} at the reference step (scale {scale})"
        );
    }

    #[test]
    fn unstable_steps_are_rejected() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let data = random_data(&mut rng, &ctx);
        match ops.solve(&data, 0.0, 4.0, 0.5) {
            Err(Error::Numerical(msg)) => {
                assert!(msg.contains("energy"), "unexpected message: {msg}")
            }
            Err(other) => panic!("expected a numerical error, got {other}"),
            Ok(_) => panic!("a 0.5 step at max frequency ≈ 13.5 must blow up"),
        }
    }

    #[test]
    fn retarded_inverse_solves_the_wave_equation() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(76);

        for f in [
            random_one_form(&mut rng, &fx.complex),
            random_one_form(&mut rng, &fx.complex),
        ] {
            let rf = ops.r_operator(&f).unwrap();
            for (kind, deg) in [(BlockKind::Dt, 0usize), (BlockKind::Spatial, 1usize)] {
                let track = match kind {
                    BlockKind::Dt => rf.dt.as_ref().unwrap(),
                    BlockKind::Spatial => rf.spatial.as_ref().unwrap(),
                };
                let (boxed, valid) = ctx.fd_box(deg, &track.u);
                let src = block_samples(&ctx, &f, kind);
                let scale = max_abs(&src).max(1.0);
                let mut worst = 0.0f64;
                for j in valid {
                    for k in 0..src.nrows() {
                        worst = worst.max((boxed[(k, j)] - src[(k, j)]).abs());
                    }
                }
                assert!(worst <= 1e-4 * scale, "□Rf ≠ f on {kind:?}: {worst}");
            }
        }

        // R of the zero form is identically zero.
        let zero = SpacetimeForm::new(&fx.complex, 1, Vec::new(), Vec::new()).unwrap();
        let rz = ops.r_operator(&zero).unwrap();
        for track in [rz.dt.as_ref(), rz.spatial.as_ref()].into_iter().flatten() {
            assert_eq!(max_abs(&track.u), 0.0);
        }
    }

    #[test]
    fn duhamel_solution_matches_direct_quadrature() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let k = 9usize;
        let n0 = ctx.basis.eigenvalues(0).len();
        let lambda = ctx.basis.eigenvalues(0)[k];
        let omega = lambda.sqrt();

        // A source concentrated on a single spatial eigenmode.
        let mut e_k = DVector::zeros(n0);
        e_k[k] = 1.0;
        let shape = SpatialForm {
            degree: 0,
            values: fx.basis.synthesize(0, &e_k).unwrap(),
        };
        let profile = TimeProfile::wiggle(0.0, 1.0, 1.0).unwrap();
        let f = SpacetimeForm::scalar_term(&fx.complex, profile.clone(), shape).unwrap();
        let rf = ops.r_operator(&f).unwrap();
        let track = rf.spatial.as_ref().unwrap();

        // Oracle: u(t) = −∫ sin(ω(t−s))/ω · g(s) ds by composite Simpson.
        let duhamel = |t: f64| {
            let (lo, _) = profile.support();
            if t <= lo {
                return 0.0;
            }
            let n = 4000;
            let h = (t - lo) / n as f64;
            let mut acc = 0.0;
            for q in 0..=n {
                let s = lo + h * q as f64;
                let w = if q == 0 || q == n {
                    1.0
                } else if q % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * (omega * (t - s)).sin() * profile.value(s);
            }
            -acc * h / (3.0 * omega)
        };

        let times = ctx.times();
        for j in [400, 900, 1201, 1600, 1999] {
            let got = track.u[(k, j)];
            let want = duhamel(times[j]);
            assert!(
                (got - want).abs() <= 1e-6,
                "Duhamel mismatch at t = {}: {got} vs {want}",
                times[j]
            );
        }
    }

    #[test]
    fn retarded_inverse_commutes_with_the_gradient() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let phi = random_scalar(&mut rng, &fx.complex);

        let r_phi = ops.r_operator(&phi).unwrap();
        let scalar_tracks = r_phi.spatial.as_ref().unwrap();
        let r_d_phi = ops.r_operator(&phi.d(&fx.complex).unwrap()).unwrap();

        // d(R₀φ) has dt track ∂ₜ(R₀φ) and spatial track d_Σ(R₀φ).
        let dt_lhs = scalar_tracks.v.as_ref().unwrap();
        let sp_lhs = ctx.d_map(0) * &scalar_tracks.u;
        let dt_rhs = &r_d_phi.dt.as_ref().unwrap().u;
        let sp_rhs = &r_d_phi.spatial.as_ref().unwrap().u;
        let scale = max_abs(dt_rhs).max(max_abs(sp_rhs)).max(1.0);
        assert!(max_abs(&(dt_lhs - dt_rhs)) <= 1e-4 * scale);
        assert!(max_abs(&(sp_lhs - sp_rhs)) <= 1e-4 * scale);
    }

    #[test]
    fn localized_primitive_is_compactly_supported() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(78);

        // Support strictly inside the window, away from the cutoff region.
        let profile = TimeProfile::bump(1.5, 0.8, 1.0).unwrap();
        let f = SpacetimeForm::scalar_term(
            &fx.complex,
            profile.clone(),
            random_shape(&mut rng, &fx.complex, 0),
        )
        .unwrap();
        let lf = ops.l_operator(&f).unwrap();

        // Supp Lf ⊆ [min(f_lo, η_lo), max(f_hi, η_hi)]: the retarded branch
        // dies under η₋ after the cutoff, the advanced one under η₊ before.
        let (f_lo, f_hi) = profile.support();
        let (eta_lo, eta_hi) = ops.step.interval();
        let lo = f_lo.min(eta_lo);
        let hi = f_hi.max(eta_hi);
        let times = ctx.times();
        for (j, &t) in times.iter().enumerate() {
            if t < lo - 2.0 * ctx.grid.super_step() || t > hi + 2.0 * ctx.grid.super_step() {
                for k in 0..lf.value.nrows() {
                    assert_eq!(
                        lf.value[(k, j)],
                        0.0,
                        "Lf leaks outside its causal window at t = {t}"
                    );
                }
            }
        }

        // Defect: G(f − L□f) vanishes within tolerance.
        let defect = ops.l_defect_check(&f).unwrap();
        assert!(defect <= 1e-4, "primitive defect {defect}");

        // And G annihilates wave-operator images outright.
        let h = random_scalar(&mut rng, &fx.complex);
        let box_h = h.box_operator(&fx.complex).unwrap();
        let sol = ctx.pauli_jordan(&ctx.modal(&box_h).unwrap(), QUAD);
        let block = sol.spatial.unwrap();
        let g_norm = (block.a.norm_squared() + block.b.norm_squared()).sqrt();
        assert!(g_norm <= 1e-6, "G□h = {g_norm}");
    }

    #[test]
    fn intertwiner_carries_xi_dynamics_to_feynman_gauge() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let psi = random_one_form(&mut rng, &fx.complex);

        for xi in [0.5, 2.0] {
            let ops = xi_ops(&ctx, xi);
            let twisted = ops.i_r(&psi).unwrap();
            let box_xi_psi = ops.box_xi(&psi).unwrap();

            let (box_dt, valid0) = ctx.fd_box(0, &twisted.dt_value);
            let (box_sp, valid1) = ctx.fd_box(1, &twisted.sp_value);
            let rhs_dt = block_samples(&ctx, &box_xi_psi, BlockKind::Dt);
            let rhs_sp = block_samples(&ctx, &box_xi_psi, BlockKind::Spatial);
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
            assert!(
                worst <= 1e-4 * scale,
                "□𝔍_R ≠ □_ξ at ξ = {xi}: {worst} (scale {scale})"
            );
        }
    }

    #[test]
    fn intertwiner_composition_is_the_identity() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let psi = random_one_form(&mut rng, &fx.complex);
        let base = SampledOneForm::sample(&ctx, &psi).unwrap();

        for xi in [0.5, 2.0] {
            let ops = xi_ops(&ctx, xi);
            let round_trip = ops.i_r_grid(&ops.i_r(&psi).unwrap(), true);
            let dist = round_trip.max_distance(&base);
            let scale = base.max_abs().max(1.0);
            assert!(
                dist <= 1e-4 * scale,
                "𝔍_R⁻¹𝔍_R ≠ 1 at ξ = {xi}: {dist}"
            );
            // And in the other order.
            let other = ops.i_r_grid(&ops.i_r_inverse(&psi).unwrap(), false);
            assert!(other.max_distance(&base) <= 1e-4 * scale);
        }
    }

    #[test]
    fn modified_symbols_obey_the_twisted_commutator() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let ops = xi_ops(&ctx, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let (k0, k1) = structure.kernel_dims();

        let prepared = |f: &SpacetimeForm| {
            let w = ops.i_l(f).unwrap();
            let sol = ctx.pauli_jordan_from_field(&w.grid_field());
            let tau = structure.tau_at_time(&sol, 0.0);
            let dt = sol.dt.as_ref().unwrap();
            let sp = sol.spatial.as_ref().unwrap();
            let nu = ZeroModeVector {
                value_scalar: dt.a.rows(0, k0).clone_owned(),
                value_oneform: sp.a.rows(0, k1).clone_owned(),
                velocity_scalar: dt.b.rows(0, k0).clone_owned(),
                velocity_oneform: sp.b.rows(0, k1).clone_owned(),
            };
            (sol, tau, nu)
        };
        let f = random_one_form(&mut rng, &fx.complex);
        let g = random_one_form(&mut rng, &fx.complex);
        let (sol_f, tau_f, nu_f) = prepared(&f);
        let (sol_g, tau_g, nu_g) = prepared(&g);

        // G(𝔍_Lf, 𝔍_Lg) is the symplectic pairing of the two propagated
        // solutions (degree signs −dt, +spatial).
        let pair = |x: &SolutionForm, y: &SolutionForm| {
            let block = |xb: &SolutionBlock, yb: &SolutionBlock| xb.a.dot(&yb.b) - xb.b.dot(&yb.a);
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
        )
        .unwrap();
        let (op_f, excess_f) = rep.field_operator_from_data(&tau_f, &nu_f, 0.0);
        let (op_g, excess_g) = rep.field_operator_from_data(&tau_g, &nu_g, 0.0);
        assert!(excess_f <= 1e-10 && excess_g <= 1e-10);

        let commutator = rep.vacuum_expectation(&[&op_f, &op_g])
            - rep.vacuum_expectation(&[&op_g, &op_f]);
        let expected = Complex64::new(0.0, -g_twisted);
        assert!(
            (commutator - expected).norm() <= 1e-6 * (1.0 + g_twisted.abs()),
            "[Ã(f), Ã(g)] = {commutator} vs −iG(𝔍f, 𝔍g) = {expected}"
        );
    }
}
