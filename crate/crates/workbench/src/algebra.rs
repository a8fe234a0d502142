//! The free *-algebra of smeared field symbols `A(f₁), A(f₂), …` over an
//! indexed generating set of test 1-forms, subject to the commutation
//! relation `A(f)A(g) − A(g)A(f) = −i G(f, g)`.
//!
//! Elements are complex combinations of words in the generators; the
//! canonical representative keeps every word sorted by generator index
//! (normal order), with out-of-order products rewritten by the commutation
//! rule.  On top of the symbolic layer sit the gauge transformations
//! `A(f) ↦ A(f) − ⟨dΛ, f⟩·1`, the observable test `δf = 0`, and
//! representation-level witnesses: evaluation of elements as operators on
//! the truncated Fock ⊗ oscillator space, and the norm separation between
//! observables and the dynamical ideal.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{GBOperator, GBRepresentation};
use crate::spacetime::{BlockKind, SpacetimeForm, profile_product_integral};
use crate::wave::WaveContext;
use crate::{Error, Result};

/// Relative tolerance on `‖δf‖` below which a 1-form counts as co-closed
/// (and its field symbol as an observable).
pub const OBSERVABLE_TOL: f64 = 1e-8;

/// A word in the generators, by index.  Canonical words are nondecreasing.
pub type Word = Vec<u32>;

/// A complex combination of normal-ordered words.  The empty word is the
/// algebra unit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraElement {
    pub terms: BTreeMap<Word, Complex64>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    /// The generator symbol `A(f_i)`.
    pub fn generator(i: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![i], Complex64::new(1.0, 0.0));
        Self { terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            accumulate(&mut terms, w.clone(), *c);
        }
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(w, x)| (w.clone(), x * c)).collect(),
        }
    }

    /// Filtration degree: the longest word present.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Sum of absolute coefficient differences (over the union of words).
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let mut total = 0.0;
        for (w, c) in &self.terms {
            let d = other.terms.get(w).copied().unwrap_or_default();
            total += (c - d).norm();
        }
        for (w, d) in &other.terms {
            if !self.terms.contains_key(w) {
                total += d.norm();
            }
        }
        total
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }
}

fn accumulate(terms: &mut BTreeMap<Word, Complex64>, word: Word, coeff: Complex64) {
    use std::collections::btree_map::Entry;
    match terms.entry(word) {
        Entry::Vacant(e) => {
            if coeff != Complex64::new(0.0, 0.0) {
                e.insert(coeff);
            }
        }
        Entry::Occupied(mut e) => {
            let updated = *e.get() + coeff;
            if updated == Complex64::new(0.0, 0.0) {
                e.remove();
            } else {
                *e.get_mut() = updated;
            }
        }
    }
}

/// The algebra context: the indexed generating forms and their pairwise
/// propagator pairings, which appear as scalars in the commutation rule.
pub struct FieldAlgebra<'a, 'b> {
    pub ctx: &'b WaveContext<'a>,
    pub forms: Vec<SpacetimeForm>,
    quad_points: usize,
    /// `G(f_i, f_j)`, antisymmetrized so the rewriting scalars are exactly
    /// consistent (`g[(i,j)] = −g[(j,i)]`, zero diagonal).
    gram: DMatrix<f64>,
}

impl<'a, 'b> FieldAlgebra<'a, 'b> {
    pub fn new(
        ctx: &'b WaveContext<'a>,
        forms: Vec<SpacetimeForm>,
        quad_points: usize,
    ) -> Result<Self> {
        for (i, f) in forms.iter().enumerate() {
            if f.degree() != 1 {
                return Err(Error::Config(format!(
                    "field symbols smear 1-forms, generator {i} has degree {}",
                    f.degree()
                )));
            }
        }
        let n = forms.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let fm = ctx.modal(&forms[i])?;
                let gm = ctx.modal(&forms[j])?;
                let g_ij = ctx.propagator_pairing(&fm, &gm, quad_points)?;
                gram[(i, j)] = g_ij;
                gram[(j, i)] = -g_ij;
            }
        }
        Ok(Self {
            ctx,
            forms,
            quad_points,
            gram,
        })
    }

    /// The propagator pairing `G(f_i, f_j)` used by the commutation rule.
    pub fn pairing(&self, i: u32, j: u32) -> f64 {
        self.gram[(i as usize, j as usize)]
    }

    /// Canonical (normal-ordered) representative, rewriting the leftmost
    /// inversion first.
    pub fn normal_form(&self, e: &AlgebraElement) -> AlgebraElement {
        self.normal_form_with(e, &mut |_| 0)
    }

    /// Canonical representative with a caller-chosen reduction order:
    /// `choose(k)` picks which of the `k` inversions of the current word to
    /// rewrite.  All choices lead to the same canonical output (confluence);
    /// this entry point exists to verify exactly that.
    pub fn normal_form_with(
        &self,
        e: &AlgebraElement,
        choose: &mut dyn FnMut(usize) -> usize,
    ) -> AlgebraElement {
        let mut out = BTreeMap::new();
        let mut work: Vec<(Word, Complex64)> =
            e.terms.iter().map(|(w, c)| (w.clone(), *c)).collect();
        while let Some((word, coeff)) = work.pop() {
            let inversions: Vec<usize> = (0..word.len().saturating_sub(1))
                .filter(|&k| word[k] > word[k + 1])
                .collect();
            if inversions.is_empty() {
                accumulate(&mut out, word, coeff);
                continue;
            }
            let k = inversions[choose(inversions.len()) % inversions.len()];
            // A(f_x) A(f_y) = A(f_y) A(f_x) − i G(f_x, f_y) for x > y.
            let (x, y) = (word[k], word[k + 1]);
            let mut swapped = word.clone();
            swapped.swap(k, k + 1);
            let mut contracted = word.clone();
            contracted.drain(k..k + 2);
            let g = Complex64::new(0.0, -self.pairing(x, y));
            work.push((swapped, coeff));
            work.push((contracted, coeff * g));
        }
        AlgebraElement { terms: out }
    }

    /// Product in the algebra, returned in canonical form.
    pub fn mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut raw = BTreeMap::new();
        for (wa, ca) in &a.terms {
            for (wb, cb) in &b.terms {
                let mut word = wa.clone();
                word.extend_from_slice(wb);
                accumulate(&mut raw, word, ca * cb);
            }
        }
        self.normal_form(&AlgebraElement { terms: raw })
    }

    /// The gauge automorphism `𝔊_Λ: A(f_i) ↦ A(f_i) − ⟨dΛ, f_i⟩·1`,
    /// extended multiplicatively.
    pub fn gauge_transform(
        &self,
        e: &AlgebraElement,
        lambda: &SpacetimeForm,
    ) -> Result<AlgebraElement> {
        if lambda.degree() != 0 {
            return Err(Error::Config(format!(
                "gauge functionals are 0-forms, got degree {}",
                lambda.degree()
            )));
        }
        let d_lambda = lambda.d(self.ctx.complex)?;
        let shifts: Vec<Complex64> = self
            .forms
            .iter()
            .map(|f| {
                Ok(Complex64::new(
                    d_lambda.lorentz_pairing(self.ctx.complex, f, self.quad_points)?,
                    0.0,
                ))
            })
            .collect::<Result<_>>()?;
        let mut out = AlgebraElement::zero();
        for (word, coeff) in &e.terms {
            let mut acc = AlgebraElement::scalar(*coeff);
            for &i in word {
                let shifted = AlgebraElement::generator(i)
                    .sub(&AlgebraElement::scalar(shifts[i as usize]));
                acc = self.mul(&acc, &shifted);
            }
            out = out.add(&acc);
        }
        Ok(self.normal_form(&out))
    }

    /// Positive L² magnitude of a form: the block pairing with all-plus
    /// signs (a genuine norm, unlike the indefinite Lorentzian pairing).
    pub fn positive_norm(&self, f: &SpacetimeForm) -> Result<f64> {
        let mut total = 0.0;
        for block in [BlockKind::Dt, BlockKind::Spatial] {
            for a in f.terms(block) {
                for b in f.terms(block) {
                    let spatial = self.ctx.complex.inner(&a.shape, &b.shape)?;
                    if spatial == 0.0 {
                        continue;
                    }
                    total +=
                        spatial * profile_product_integral(&a.profile, &b.profile, self.quad_points);
                }
            }
        }
        Ok(total.max(0.0).sqrt())
    }

    /// Whether `A(f)` is an observable symbol: `‖δf‖ ≤ 1e−8` relative to
    /// the magnitude of `f`.
    pub fn is_observable(&self, f: &SpacetimeForm) -> Result<bool> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "observables smear 1-forms, got degree {}",
                f.degree()
            )));
        }
        let delta = f.delta(self.ctx.complex)?;
        let residual = self.positive_norm(&delta)?;
        let scale = self.positive_norm(f)?.max(1.0);
        Ok(residual <= OBSERVABLE_TOL * scale)
    }

    /// Evaluate an element as an operator in a representation, given the
    /// represented generators (`gen_ops[i]` for `A(f_i)`).
    pub fn evaluate(
        &self,
        e: &AlgebraElement,
        rep: &GBRepresentation,
        gen_ops: &[GBOperator],
    ) -> GBOperator {
        let fd = rep.fock.dim();
        let zd = rep.hermite.dim();
        let mut out = GBOperator {
            fock_dim: fd,
            zero_dim: zd,
            terms: Vec::new(),
        };
        for (word, coeff) in &e.terms {
            let mut factor = GBOperator::scalar(fd, zd, *coeff);
            for &i in word {
                factor = factor.product(&gen_ops[i as usize]);
            }
            out = out.add(&factor);
        }
        out
    }
}

/// Norm separation between represented observables and represented
/// generators of the dynamical ideal.
#[derive(Clone, Debug)]
pub struct SeparationReport {
    /// Smallest Hilbert norm of `π(A(g))Ω` over the observable sample.
    pub min_observable_norm: f64,
    /// Largest operator-norm bound of `π(A(□f) − Λ(δ□f))` over the sample.
    pub max_ideal_norm: f64,
    /// `min_observable_norm / max_ideal_norm`.
    pub ratio: f64,
}

/// Witness that observables stay faithful while the ideal is annihilated:
/// every observable must hold a representation norm bounded away from zero
/// while every ideal generator represents to (numerically) zero.
pub fn observable_ideal_separation(
    rep: &GBRepresentation,
    observables: &[SpacetimeForm],
    sources: &[SpacetimeForm],
) -> Result<SeparationReport> {
    if observables.is_empty() || sources.is_empty() {
        return Err(Error::Config(
            "separation check needs at least one observable and one source".into(),
        ));
    }
    let mut min_observable_norm = f64::INFINITY;
    for g in observables {
        let op = rep.field_operator(g)?;
        let state = op.apply(&rep.vacuum());
        let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        min_observable_norm = min_observable_norm.min(norm);
    }
    let mut max_ideal_norm = 0.0f64;
    for f in sources {
        let op = rep.ideal_generator(f)?;
        max_ideal_norm = max_ideal_norm.max(op.norm_upper_bound());
    }
    let ratio = if max_ideal_norm > 0.0 {
        min_observable_norm / max_ideal_norm
    } else {
        f64::INFINITY
    };
    Ok(SeparationReport {
        min_observable_norm,
        max_ideal_norm,
        ratio,
    })
}
