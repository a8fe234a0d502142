//! Test forms on the product spacetime M = ℝ × Σ and their calculus.
//!
//! A degree-`k` form is stored in the product split
//!
//! ```text
//! f = dt ∧ f_dt + f_sp,
//! ```
//!
//! where `f_dt` has spatial degree `k − 1` and `f_sp` spatial degree `k`;
//! each block is a finite sum of separable terms `p(t) ⊗ φ` with a
//! [`TimeProfile`] `p` and a [`SpatialForm`] `φ`.  Because profiles carry
//! exact derivatives and spatial operators act term by term, the spacetime
//! exterior derivative, codifferential and wave operator are all exact on
//! this class (no time discretization enters).
//!
//! With the ultrastatic metric `dt² − g_Σ` the operators read, blockwise:
//!
//! ```text
//! d (φ)              = dt ∧ φ̇ + d_Σ φ                             (k = 0)
//! d (dt∧f₀ + f_Σ)    = dt ∧ (ḟ_Σ − d_Σ f₀) + d_Σ f_Σ              (k = 1)
//! δ (dt∧f₀ + f_Σ)    = −ḟ₀ − δ_Σ f_Σ                              (k = 1)
//! δ (dt∧α + β)       = dt ∧ (δ_Σ α) − α̇ − δ_Σ β                   (k = 2)
//! □ = dδ + δd        = −∂²_t − Δ_Σ     on every block,
//! ```
//!
//! and the Lorentzian L² pairing carries the signature signs
//! `+` (degree 0), `(+dt, −sp)` (degree 1), `(−dt, +sp)` (degree 2).
//! Time integrals of products of profiles are evaluated with the composite
//! trapezoid rule, which converges superalgebraically here because every
//! integrand is C^∞ with all derivatives vanishing at the ends of its
//! support.

use nalgebra::DVector;

use crate::profile::TimeProfile;
use crate::spatial::{SpatialComplex, SpatialForm};
use crate::{Error, Result};

/// One separable summand `p(t) ⊗ φ` of a spacetime form block.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeparableTerm {
    pub profile: TimeProfile,
    pub shape: SpatialForm,
}

/// The two blocks of the product split of a spacetime form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// The `dt ∧ (…)` block; spatial degree `k − 1`.
    Dt,
    /// The purely spatial block; spatial degree `k`.
    Spatial,
}

/// A compactly supported test `k`-form on M = ℝ × Σ.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpacetimeForm {
    degree: usize,
    dt_terms: Vec<SeparableTerm>,
    spatial_terms: Vec<SeparableTerm>,
}

/// Signature signs `(dt block, spatial block)` of the Lorentzian pairing at
/// each form degree.
fn pairing_signs(degree: usize) -> Result<(f64, f64)> {
    match degree {
        0 => Ok((0.0, 1.0)),
        1 => Ok((1.0, -1.0)),
        2 => Ok((-1.0, 1.0)),
        _ => Err(Error::Config(format!(
            "no Lorentzian pairing implemented for degree {degree}"
        ))),
    }
}

impl SpacetimeForm {
    /// Builds and validates a form from its blocks.
    ///
    /// The `dt` block must be empty for `k = 0`, and each block present must
    /// have shapes of the correct spatial degree (`k − 1` resp. `k`); blocks
    /// whose spatial degree would exceed the dimension of Σ must be empty.
    pub fn new(
        complex: &SpatialComplex,
        degree: usize,
        dt_terms: Vec<SeparableTerm>,
        spatial_terms: Vec<SeparableTerm>,
    ) -> Result<Self> {
        if degree > complex.dimension() + 1 {
            return Err(Error::Config(format!(
                "spacetime degree {degree} exceeds dim M = {}",
                complex.dimension() + 1
            )));
        }
        if degree == 0 && !dt_terms.is_empty() {
            return Err(Error::Config(
                "a 0-form has no dt block".to_string(),
            ));
        }
        if degree > complex.dimension() && !spatial_terms.is_empty() {
            return Err(Error::Config(format!(
                "degree-{degree} forms on this complex have no spatial block"
            )));
        }
        for term in &dt_terms {
            check_shape(complex, &term.shape, degree.wrapping_sub(1))?;
        }
        for term in &spatial_terms {
            check_shape(complex, &term.shape, degree)?;
        }
        Ok(Self {
            degree,
            dt_terms,
            spatial_terms,
        })
    }

    /// A scalar (degree-0) form `Σ p_i ⊗ φ_i`.
    pub fn scalar(complex: &SpatialComplex, terms: Vec<SeparableTerm>) -> Result<Self> {
        Self::new(complex, 0, Vec::new(), terms)
    }

    /// A single-term scalar form `p ⊗ φ`.
    pub fn scalar_term(
        complex: &SpatialComplex,
        profile: TimeProfile,
        shape: SpatialForm,
    ) -> Result<Self> {
        Self::scalar(complex, vec![SeparableTerm { profile, shape }])
    }

    /// Form degree `k`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Terms of the requested block.
    pub fn terms(&self, block: BlockKind) -> &[SeparableTerm] {
        match block {
            BlockKind::Dt => &self.dt_terms,
            BlockKind::Spatial => &self.spatial_terms,
        }
    }

    /// Smallest interval containing the time support of every term.
    pub fn time_support(&self) -> Option<(f64, f64)> {
        let mut out: Option<(f64, f64)> = None;
        for term in self.dt_terms.iter().chain(self.spatial_terms.iter()) {
            let (a, b) = term.profile.support();
            out = Some(match out {
                None => (a, b),
                Some((lo, hi)) => (lo.min(a), hi.max(b)),
            });
        }
        out
    }

    /// Spatial degree of a block of this form (`k − 1` for the dt block,
    /// which does not exist on 0-forms).
    pub fn block_degree(&self, block: BlockKind) -> usize {
        match block {
            BlockKind::Dt => self.degree.saturating_sub(1),
            BlockKind::Spatial => self.degree,
        }
    }

    /// Evaluates one block at time `t` as a spatial cochain.  Blocks that do
    /// not exist at this degree evaluate to an empty vector.
    pub fn block_at(
        &self,
        complex: &SpatialComplex,
        block: BlockKind,
        t: f64,
    ) -> Result<DVector<f64>> {
        let terms = self.terms(block);
        let deg = self.block_degree(block);
        let len = if (block == BlockKind::Dt && self.degree == 0) || deg > complex.dimension() {
            0
        } else {
            complex.n_cells(deg)
        };
        let mut out = DVector::zeros(len);
        for term in terms {
            out.axpy(term.profile.value(t), &term.shape.values, 1.0);
        }
        Ok(out)
    }

    /// The exact time derivative (profiles differentiate in closed form).
    pub fn time_derivative(&self) -> Self {
        let diff = |terms: &[SeparableTerm]| {
            terms
                .iter()
                .map(|t| SeparableTerm {
                    profile: t.profile.derivative(),
                    shape: t.shape.clone(),
                })
                .collect()
        };
        Self {
            degree: self.degree,
            dt_terms: diff(&self.dt_terms),
            spatial_terms: diff(&self.spatial_terms),
        }
    }

    /// Spacetime exterior derivative `d : Ωᵏ → Ωᵏ⁺¹`.
    pub fn d(&self, complex: &SpatialComplex) -> Result<Self> {
        if self.degree + 1 > complex.dimension() + 1 {
            return Err(Error::Config(format!(
                "no exterior derivative out of top spacetime degree {}",
                self.degree
            )));
        }
        let mut dt_terms = Vec::new();
        let mut spatial_terms = Vec::new();

        // dt ∧ ∂_t of the spatial block.
        for term in &self.spatial_terms {
            dt_terms.push(SeparableTerm {
                profile: term.profile.derivative(),
                shape: term.shape.clone(),
            });
        }
        // −dt ∧ d_Σ of the dt block.
        for term in &self.dt_terms {
            let d_shape = complex.d(&term.shape)?;
            dt_terms.push(SeparableTerm {
                profile: scale_profile(&term.profile, -1.0),
                shape: d_shape,
            });
        }
        // d_Σ of the spatial block (dropped at top spatial degree, where it
        // vanishes identically).
        for term in &self.spatial_terms {
            if term.shape.degree < complex.dimension() {
                spatial_terms.push(SeparableTerm {
                    profile: term.profile.clone(),
                    shape: complex.d(&term.shape)?,
                });
            }
        }
        Self::new(complex, self.degree + 1, dt_terms, spatial_terms)
    }

    /// Spacetime codifferential `δ : Ωᵏ → Ωᵏ⁻¹` (degrees 1 and 2).
    pub fn delta(&self, complex: &SpatialComplex) -> Result<Self> {
        match self.degree {
            1 => {
                // δ(dt∧f₀ + f_Σ) = −ḟ₀ − δ_Σ f_Σ.
                let mut terms = Vec::new();
                for term in &self.dt_terms {
                    terms.push(SeparableTerm {
                        profile: scale_profile(&term.profile.derivative(), -1.0),
                        shape: term.shape.clone(),
                    });
                }
                for term in &self.spatial_terms {
                    terms.push(SeparableTerm {
                        profile: scale_profile(&term.profile, -1.0),
                        shape: complex.delta(&term.shape)?,
                    });
                }
                Self::new(complex, 0, Vec::new(), terms)
            }
            2 => {
                // δ(dt∧α + β) = dt ∧ (δ_Σ α) + (−α̇ − δ_Σ β).
                let mut dt_terms = Vec::new();
                let mut spatial_terms = Vec::new();
                for term in &self.dt_terms {
                    dt_terms.push(SeparableTerm {
                        profile: term.profile.clone(),
                        shape: complex.delta(&term.shape)?,
                    });
                    spatial_terms.push(SeparableTerm {
                        profile: scale_profile(&term.profile.derivative(), -1.0),
                        shape: term.shape.clone(),
                    });
                }
                for term in &self.spatial_terms {
                    spatial_terms.push(SeparableTerm {
                        profile: scale_profile(&term.profile, -1.0),
                        shape: complex.delta(&term.shape)?,
                    });
                }
                Self::new(complex, 1, dt_terms, spatial_terms)
            }
            d => Err(Error::Config(format!(
                "spacetime codifferential implemented for degrees 1 and 2, got {d}"
            ))),
        }
    }

    /// The wave operator `□ = dδ + δd = −∂²_t − Δ_Σ`, acting blockwise.
    pub fn box_operator(&self, complex: &SpatialComplex) -> Result<Self> {
        let apply = |terms: &[SeparableTerm]| -> Result<Vec<SeparableTerm>> {
            let mut out = Vec::with_capacity(2 * terms.len());
            for term in terms {
                out.push(SeparableTerm {
                    profile: scale_profile(&term.profile.nth_derivative(2), -1.0),
                    shape: term.shape.clone(),
                });
                out.push(SeparableTerm {
                    profile: scale_profile(&term.profile, -1.0),
                    shape: complex.laplacian(&term.shape)?,
                });
            }
            Ok(out)
        };
        Self::new(
            complex,
            self.degree,
            apply(&self.dt_terms)?,
            apply(&self.spatial_terms)?,
        )
    }

    /// Lorentzian L² pairing `⟨f, g⟩_M` of two forms of equal degree, with
    /// `n_intervals` trapezoid panels per profile-product integral.
    pub fn lorentz_pairing(
        &self,
        complex: &SpatialComplex,
        other: &Self,
        n_intervals: usize,
    ) -> Result<f64> {
        if self.degree != other.degree {
            return Err(Error::Config(format!(
                "pairing needs equal degrees, got {} and {}",
                self.degree, other.degree
            )));
        }
        let (sign_dt, sign_sp) = pairing_signs(self.degree)?;
        let mut total = 0.0;
        for (sign, block) in [(sign_dt, BlockKind::Dt), (sign_sp, BlockKind::Spatial)] {
            if sign == 0.0 {
                continue;
            }
            for a in self.terms(block) {
                for b in other.terms(block) {
                    let spatial = complex.inner(&a.shape, &b.shape)?;
                    if spatial == 0.0 {
                        continue;
                    }
                    let time = profile_product_integral(&a.profile, &b.profile, n_intervals);
                    total += sign * time * spatial;
                }
            }
        }
        Ok(total)
    }

    /// Value and first time derivative of each block at time `t`.
    pub fn cauchy_data_at(&self, complex: &SpatialComplex, t: f64) -> Result<CauchyData> {
        let velocity = self.time_derivative();
        let block_data = |block: BlockKind| -> Result<Option<BlockData>> {
            let deg = self.block_degree(block);
            if (block == BlockKind::Dt && self.degree == 0) || deg > complex.dimension() {
                return Ok(None);
            }
            Ok(Some(BlockData {
                value: SpatialForm {
                    degree: deg,
                    values: self.block_at(complex, block, t)?,
                },
                velocity: SpatialForm {
                    degree: deg,
                    values: velocity.block_at(complex, block, t)?,
                },
            }))
        };
        Ok(CauchyData {
            degree: self.degree,
            dt: block_data(BlockKind::Dt)?,
            spatial: block_data(BlockKind::Spatial)?,
        })
    }
}

fn check_shape(complex: &SpatialComplex, shape: &SpatialForm, degree: usize) -> Result<()> {
    if shape.degree != degree {
        return Err(Error::Config(format!(
            "block shape has spatial degree {}, expected {degree}",
            shape.degree
        )));
    }
    if degree > complex.dimension() || shape.values.len() != complex.n_cells(degree) {
        return Err(Error::Config(format!(
            "block shape has {} entries, expected {}",
            shape.values.len(),
            if degree <= complex.dimension() {
                complex.n_cells(degree)
            } else {
                0
            }
        )));
    }
    Ok(())
}

fn scale_profile(p: &TimeProfile, factor: f64) -> TimeProfile {
    p.scaled(factor)
}

/// Value and first time derivative of every block of a form at a fixed time.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CauchyData {
    pub degree: usize,
    pub dt: Option<BlockData>,
    pub spatial: Option<BlockData>,
}

/// One block's value/velocity pair.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockData {
    pub value: SpatialForm,
    pub velocity: SpatialForm,
}

/// `∫ p(t) q(t) dt` over the intersection of the supports, by the composite
/// trapezoid rule (superalgebraically accurate: the integrand is C^∞ and
/// vanishes with all derivatives at the interval ends).
pub fn profile_product_integral(p: &TimeProfile, q: &TimeProfile, n_intervals: usize) -> f64 {
    let (pa, pb) = p.support();
    let (qa, qb) = q.support();
    let (a, b) = (pa.max(qa), pb.min(qb));
    if a >= b {
        return 0.0;
    }
    integrate_smooth(a, b, n_intervals, |t| p.value(t) * q.value(t))
}

/// Composite trapezoid quadrature of a smooth function on `[a, b]`.
pub fn integrate_smooth(a: f64, b: f64, n_intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n_intervals.max(1);
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for k in 1..n {
        sum += f(a + h * k as f64);
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const QUAD: usize = 1200;

    fn complex() -> SpatialComplex {
        SpatialComplex::flat_torus(2, 5, &[1.0, 1.3]).unwrap()
    }

    fn random_shape(rng: &mut impl Rng, complex: &SpatialComplex, degree: usize) -> SpatialForm {
        SpatialForm {
            degree,
            values: DVector::from_fn(complex.n_cells(degree), |_, _| rng.gen_range(-1.0..1.0)),
        }
    }

    fn random_profile(rng: &mut impl Rng) -> TimeProfile {
        let center = rng.gen_range(-1.0..1.0);
        let half_width = rng.gen_range(0.6..1.4);
        let amplitude = rng.gen_range(0.5..1.5) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        match rng.gen_range(0..3) {
            0 => TimeProfile::bump(center, half_width, amplitude),
            1 => TimeProfile::odd_bump(center, half_width, amplitude),
            _ => TimeProfile::wiggle(center, half_width, amplitude),
        }
        .unwrap()
    }

    fn random_form(rng: &mut ChaCha8Rng, complex: &SpatialComplex, degree: usize) -> SpacetimeForm {
        let term = |rng: &mut ChaCha8Rng, deg: usize| SeparableTerm {
            profile: random_profile(rng),
            shape: random_shape(rng, complex, deg),
        };
        let dt_terms = if degree == 0 {
            Vec::new()
        } else {
            vec![term(rng, degree - 1), term(rng, degree - 1)]
        };
        let spatial_terms = if degree <= complex.dimension() {
            vec![term(rng, degree), term(rng, degree)]
        } else {
            Vec::new()
        };
        SpacetimeForm::new(complex, degree, dt_terms, spatial_terms).unwrap()
    }

    fn block_norm_at(complex: &SpatialComplex, f: &SpacetimeForm, t: f64) -> f64 {
        let mut total: f64 = 0.0;
        for block in [BlockKind::Dt, BlockKind::Spatial] {
            let v = f.block_at(complex, block, t).unwrap();
            if !v.is_empty() {
                total += v.norm_squared();
            }
        }
        total.sqrt()
    }

    #[test]
    fn d_then_d_vanishes_pointwise() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_form(&mut rng, &complex, 0);
        let ddphi = phi.d(&complex).unwrap().d(&complex).unwrap();
        for &t in &[-1.5, -0.4, 0.0, 0.7, 1.6] {
            assert!(block_norm_at(&complex, &ddphi, t) <= 1e-12);
        }
    }

    #[test]
    fn delta_then_delta_vanishes_pointwise() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_form(&mut rng, &complex, 2);
        let ddf = f.delta(&complex).unwrap().delta(&complex).unwrap();
        for &t in &[-1.5, -0.4, 0.0, 0.7, 1.6] {
            assert!(block_norm_at(&complex, &ddf, t) <= 1e-10);
        }
    }

    #[test]
    fn d_and_delta_are_adjoint_under_the_lorentzian_pairing() {
        // ⟨d f, g⟩_{k+1} = ⟨f, δ g⟩_k for (k = 0, 1): this fixes the relative
        // signs of all component formulas against the signature convention.
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..=1usize {
            let f = random_form(&mut rng, &complex, k);
            let g = random_form(&mut rng, &complex, k + 1);
            let lhs = f
                .d(&complex)
                .unwrap()
                .lorentz_pairing(&complex, &g, QUAD)
                .unwrap();
            let rhs = f
                .lorentz_pairing(&complex, &g.delta(&complex).unwrap(), QUAD)
                .unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())),
                "degree {k}: ⟨df,g⟩ = {lhs} vs ⟨f,δg⟩ = {rhs}"
            );
        }
    }

    #[test]
    fn box_operator_commutes_with_d_and_is_symmetric() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_form(&mut rng, &complex, 0);

        let box_d = phi.d(&complex).unwrap().box_operator(&complex).unwrap();
        let d_box = phi.box_operator(&complex).unwrap().d(&complex).unwrap();
        for &t in &[-1.2, -0.3, 0.2, 0.9] {
            let mut err: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for block in [BlockKind::Dt, BlockKind::Spatial] {
                let a = box_d.block_at(&complex, block, t).unwrap();
                let b = d_box.block_at(&complex, block, t).unwrap();
                err += (&a - &b).norm_squared();
                scale += a.norm_squared();
            }
            assert!(err.sqrt() <= 1e-9 * scale.sqrt(), "t = {t}");
        }

        let f = random_form(&mut rng, &complex, 1);
        let g = random_form(&mut rng, &complex, 1);
        let lhs = f
            .box_operator(&complex)
            .unwrap()
            .lorentz_pairing(&complex, &g, QUAD)
            .unwrap();
        let rhs = f
            .lorentz_pairing(&complex, &g.box_operator(&complex).unwrap(), QUAD)
            .unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs().max(rhs.abs())),
            "⟨□f,g⟩ = {lhs} vs ⟨f,□g⟩ = {rhs}"
        );
    }

    #[test]
    fn box_equals_minus_second_time_derivative_minus_laplacian() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_form(&mut rng, &complex, 1);
        let boxed = f.box_operator(&complex).unwrap();
        let fdd = f.time_derivative().time_derivative();
        for &t in &[-0.9, 0.1, 0.8] {
            for block in [BlockKind::Dt, BlockKind::Spatial] {
                let deg = f.block_degree(block);
                let direct = boxed.block_at(&complex, block, t).unwrap();
                let v = f.block_at(&complex, block, t).unwrap();
                let lap = complex.laplacian_on(deg, &v).unwrap();
                let expected = -fdd.block_at(&complex, block, t).unwrap() - lap;
                assert!((&direct - &expected).norm() <= 1e-10 * (1.0 + expected.norm()));
            }
        }
    }

    #[test]
    fn disjoint_time_supports_pair_to_zero() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let shape_a = random_shape(&mut rng, &complex, 0);
        let shape_b = random_shape(&mut rng, &complex, 0);
        let f = SpacetimeForm::scalar_term(
            &complex,
            TimeProfile::bump(-2.0, 1.0, 1.0).unwrap(),
            shape_a,
        )
        .unwrap();
        let g = SpacetimeForm::scalar_term(
            &complex,
            TimeProfile::bump(2.0, 1.0, 1.0).unwrap(),
            shape_b,
        )
        .unwrap();
        assert_eq!(f.lorentz_pairing(&complex, &g, QUAD).unwrap(), 0.0);
    }

    #[test]
    fn cauchy_data_matches_block_evaluation() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_form(&mut rng, &complex, 1);
        let data = f.cauchy_data_at(&complex, 0.25).unwrap();
        let dt = data.dt.unwrap();
        assert_eq!(dt.value.values, f.block_at(&complex, BlockKind::Dt, 0.25).unwrap());
        assert_eq!(
            dt.velocity.values,
            f.time_derivative()
                .block_at(&complex, BlockKind::Dt, 0.25)
                .unwrap()
        );
        assert_eq!(dt.value.degree, 0);
        assert_eq!(data.spatial.as_ref().unwrap().value.degree, 1);
    }

    #[test]
    fn rejects_malformed_blocks_and_degrees() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // dt block on a scalar.
        let term = SeparableTerm {
            profile: TimeProfile::bump(0.0, 1.0, 1.0).unwrap(),
            shape: random_shape(&mut rng, &complex, 0),
        };
        assert!(SpacetimeForm::new(&complex, 0, vec![term.clone()], vec![]).is_err());
        // Wrong spatial degree in a block.
        assert!(SpacetimeForm::new(&complex, 2, vec![], vec![term.clone()]).is_err());
        // Degree beyond dim M.
        assert!(SpacetimeForm::new(&complex, 4, vec![], vec![]).is_err());
        // No codifferential on scalars; no derivative out of the top degree.
        let phi = SpacetimeForm::scalar(&complex, vec![term]).unwrap();
        assert!(phi.delta(&complex).is_err());
        let top = random_form(&mut rng, &complex, 3);
        assert!(top.d(&complex).is_err());
    }

    #[test]
    fn serializes_round_trip() {
        let complex = complex();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_form(&mut rng, &complex, 2);
        let json = serde_json::to_string(&f).unwrap();
        let back: SpacetimeForm = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn quadrature_integrates_a_known_smooth_integral() {
        // ∫ cos(t) over [0, π/2] with generous resolution: the trapezoid
        // rule's algebraic error bound still certifies 6 digits here.
        let got = integrate_smooth(0.0, std::f64::consts::FRAC_PI_2, 4000, f64::cos);
        assert!((got - 1.0).abs() < 1e-7);
    }
}
