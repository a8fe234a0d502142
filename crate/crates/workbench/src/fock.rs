//! Truncated Gupta–Bleuler representation: a bosonic Fock space over a
//! finite Krein subbasis of the one-particle space, tensored with a
//! Schrödinger (Hermite) sector for the harmonic zero modes.
//!
//! The representation is assembled from a generating family of test
//! 1-forms.  Their one-particle images `κ(f)` (componentwise conjugated, so
//! that smeared-field commutators reproduce `−iG`) are orthonormalized
//! against the indefinite inner product into a subbasis `w₁ … w_m` with
//! `⟨w_i, w_j⟩ = s_i δ_ij`, `s_i = ±1`.  The Fock sector is spanned by
//! occupation states `|α⟩`, `|α| ≤ N`, with the indefinite Fock inner
//! product weighted by `Π_i s_i^{α_i}`.  The zero-mode sector carries the
//! position operators `X_j` and derivatives `D_j` of a harmonic-oscillator
//! (Hermite) basis along each harmonic direction.
//!
//! A smeared field acts as
//!
//! ```text
//! Â(f) = (a(κ̄f) + a*(κ̄f))/√2 ⊗ 1  +  1 ⊗ (Σ_j u_j X_j + i v_j D_j)  +  ⟨dΛ, f⟩·1
//! ```
//!
//! where `u` holds the velocity-slot harmonic coordinates of the
//! propagated form, `v` the complex-structure image of its value slot, and
//! `Λ` is an optional gauge functional.  Operators are kept as sums of
//! tensor products `A ⊗ B`, which keeps applications cheap and gives sharp
//! operator-norm upper bounds term by term.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::oneparticle::{KreinVector, OneParticleStructure, ZeroModeVector};
use crate::spacetime::SpacetimeForm;
use crate::{Error, Result};

/// Relative eigenvalue tolerance below which a generating family is
/// declared linearly dependent.
pub const RANK_TOL: f64 = 1e-8;

/// Relative tolerance for the part of a one-particle vector outside the
/// span of the Fock subbasis.
pub const PROJECTION_TOL: f64 = 1e-6;

/// Largest admissible generating family.
pub const MAX_GENERATORS: usize = 12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dimension of the bosonic Fock truncation over `generators` modes with at
/// most `cutoff` particles: `Σ_{k ≤ cutoff} C(generators + k − 1, k)`.
pub fn fock_dimension(generators: usize, cutoff: usize) -> usize {
    let mut total = 1usize;
    let mut term = 1usize;
    for k in 1..=cutoff {
        // Binomial recurrence C(m+k−1, k) = C(m+k−2, k−1)·(m+k−1)/k;
        // the division is exact at every step.
        term = term * (generators + k - 1) / k;
        total += term;
    }
    total
}

/// All multisets over `{0, …, modes−1}` of size at most `max_order`, as
/// nondecreasing index sequences ordered by (length, lexicographic).
pub fn multisets(modes: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut all = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for seq in &frontier {
            let lo = seq.last().copied().unwrap_or(0);
            for i in lo..modes {
                let mut ext = seq.clone();
                ext.push(i);
                next.push(ext);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

fn enumerate_occupations(modes: usize, cutoff: usize) -> Vec<Vec<u32>> {
    fn fill(slot: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == cur.len() {
            cur[slot] = remaining;
            out.push(cur.clone());
            cur[slot] = 0;
            return;
        }
        for take in (0..=remaining).rev() {
            cur[slot] = take;
            fill(slot + 1, remaining - take, cur, out);
        }
        cur[slot] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; modes];
    for total in 0..=cutoff as u32 {
        fill(0, total, &mut cur, &mut out);
    }
    out
}

/// Occupation-number model of the truncated bosonic Fock space over an
/// orthonormalized Krein subbasis.
pub struct FockBasis {
    /// Subbasis vectors `w_i` with `⟨w_i, w_j⟩ = s_i δ_ij`.
    pub vectors: Vec<KreinVector>,
    /// The Krein self-products `s_i = ±1`.
    pub signs: Vec<f64>,
    /// Maximum particle number `N`.
    pub particle_cutoff: usize,
    occupations: Vec<Vec<u32>>,
    index: BTreeMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn new(vectors: Vec<KreinVector>, signs: Vec<f64>, particle_cutoff: usize) -> Self {
        let occupations = enumerate_occupations(vectors.len(), particle_cutoff);
        let index = occupations
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.clone(), i))
            .collect();
        Self {
            vectors,
            signs,
            particle_cutoff,
            occupations,
            index,
        }
    }

    /// Number of one-particle modes `m`.
    pub fn modes(&self) -> usize {
        self.vectors.len()
    }

    /// Dimension of the truncation, `Σ_{k ≤ N} C(m+k−1, k)`.
    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    /// Occupation multi-indices in basis order (the vacuum is index 0).
    pub fn occupations(&self) -> &[Vec<u32>] {
        &self.occupations
    }

    /// Diagonal of the Fock fundamental symmetry: `Π_i s_i^{α_i}` per state.
    pub fn j_signs(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |row, _| {
            let mut s = 1.0;
            for (i, &n) in self.occupations[row].iter().enumerate() {
                if self.signs[i] < 0.0 && n % 2 == 1 {
                    s = -s;
                }
            }
            s
        })
    }

    /// Annihilation operator of `ψ = Σ_i c_i w_i`, conjugate-linear in the
    /// coefficients through the Krein product:
    /// `a(ψ)|α⟩ = Σ_i conj(c_i) s_i √α_i |α − e_i⟩`.
    pub fn annihilation_matrix(&self, coeffs: &DVector<Complex64>) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for (col, occ) in self.occupations.iter().enumerate() {
            for i in 0..self.modes() {
                if occ[i] == 0 {
                    continue;
                }
                let mut low = occ.clone();
                low[i] -= 1;
                let row = self.index[&low];
                mat[(row, col)] += coeffs[i].conj() * self.signs[i] * (occ[i] as f64).sqrt();
            }
        }
        mat
    }

    /// Creation operator of `φ = Σ_i c_i w_i`:
    /// `a*(φ)|α⟩ = Σ_i c_i √(α_i + 1) |α + e_i⟩` (states beyond the particle
    /// cutoff are dropped).
    pub fn creation_matrix(&self, coeffs: &DVector<Complex64>) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for (col, occ) in self.occupations.iter().enumerate() {
            let total: u32 = occ.iter().sum();
            if total as usize >= self.particle_cutoff {
                continue;
            }
            for i in 0..self.modes() {
                let mut high = occ.clone();
                high[i] += 1;
                let row = self.index[&high];
                mat[(row, col)] += coeffs[i] * ((occ[i] + 1) as f64).sqrt();
            }
        }
        mat
    }

    /// Indices of states with particle number `≤ N − 1`, on which canonical
    /// commutators are free of truncation effects.
    pub fn interior_indices(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .filter(|(_, occ)| (occ.iter().sum::<u32>() as usize) < self.particle_cutoff)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Hermite (harmonic-oscillator) model of the zero-mode sector: one
/// oscillator per harmonic direction, truncated at `cutoff` levels each.
pub struct HermiteSector {
    /// Number of harmonic directions (scalar kernel first, then 1-form).
    pub directions: usize,
    /// Levels kept per direction.
    pub cutoff: usize,
}

impl HermiteSector {
    pub fn new(directions: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::Config(format!(
                "oscillator sector needs at least 2 levels per direction, got {cutoff}"
            )));
        }
        Ok(Self { directions, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.directions as u32)
    }

    fn stride(&self, dir: usize) -> usize {
        self.cutoff.pow(dir as u32)
    }

    fn level(&self, idx: usize, dir: usize) -> usize {
        (idx / self.stride(dir)) % self.cutoff
    }

    /// The position operator along direction `dir`:
    /// `X|n⟩ = √(n/2)|n−1⟩ + √((n+1)/2)|n+1⟩`.
    pub fn position_matrix(&self, dir: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        let stride = self.stride(dir);
        for col in 0..dim {
            let n = self.level(col, dir);
            if n > 0 {
                mat[(col - stride, col)] = (n as f64 / 2.0).sqrt();
            }
            if n + 1 < self.cutoff {
                mat[(col + stride, col)] = ((n + 1) as f64 / 2.0).sqrt();
            }
        }
        mat
    }

    /// The derivative operator along direction `dir`:
    /// `D|n⟩ = √(n/2)|n−1⟩ − √((n+1)/2)|n+1⟩`.
    pub fn derivative_matrix(&self, dir: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        let stride = self.stride(dir);
        for col in 0..dim {
            let n = self.level(col, dir);
            if n > 0 {
                mat[(col - stride, col)] = (n as f64 / 2.0).sqrt();
            }
            if n + 1 < self.cutoff {
                mat[(col + stride, col)] = -(((n + 1) as f64) / 2.0).sqrt();
            }
        }
        mat
    }

    /// The zero-mode field contribution `Σ_j u_j X_j + i v_j D_j` as one
    /// dense matrix.
    pub fn field_matrix(&self, u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            for dir in 0..self.directions {
                let n = self.level(col, dir);
                let stride = self.stride(dir);
                if n > 0 {
                    let amp = (n as f64 / 2.0).sqrt();
                    mat[(col - stride, col)] += Complex64::new(u[dir], v[dir]) * amp;
                }
                if n + 1 < self.cutoff {
                    let amp = ((n + 1) as f64 / 2.0).sqrt();
                    mat[(col + stride, col)] += Complex64::new(u[dir], -v[dir]) * amp;
                }
            }
        }
        mat
    }

    /// Indices whose levels stay `≤ cutoff − 2` in every direction; ladder
    /// commutation relations are exact between such states.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&idx| (0..self.directions).all(|d| self.level(idx, d) + 1 < self.cutoff))
            .collect()
    }
}

/// An operator on the Fock ⊗ oscillator space, stored as a sum of tensor
/// products `Σ_k A_k ⊗ B_k`.
#[derive(Clone)]
pub struct GBOperator {
    pub fock_dim: usize,
    pub zero_dim: usize,
    pub terms: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)>,
}

impl GBOperator {
    pub fn identity(fock_dim: usize, zero_dim: usize) -> Self {
        Self {
            fock_dim,
            zero_dim,
            terms: vec![(DMatrix::identity(fock_dim, fock_dim), DMatrix::identity(zero_dim, zero_dim))],
        }
    }

    /// The scalar operator `c·1`.
    pub fn scalar(fock_dim: usize, zero_dim: usize, c: Complex64) -> Self {
        let mut op = Self::identity(fock_dim, zero_dim);
        op.terms[0].0 *= c;
        op
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            fock_dim: self.fock_dim,
            zero_dim: self.zero_dim,
            terms: self.terms.iter().map(|(a, b)| (a * c, b.clone())).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self {
            fock_dim: self.fock_dim,
            zero_dim: self.zero_dim,
            terms,
        }
    }

    /// Operator product, using `(A ⊗ B)(A' ⊗ B') = AA' ⊗ BB'` termwise.
    pub fn product(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, b) in &self.terms {
            for (a2, b2) in &other.terms {
                terms.push((a * a2, b * b2));
            }
        }
        Self {
            fock_dim: self.fock_dim,
            zero_dim: self.zero_dim,
            terms,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.product(other)
            .add(&other.product(self).scaled(-ONE))
    }

    /// Apply to a state, stored as a `fock_dim × zero_dim` coefficient
    /// matrix: `Σ_k A_k · X · B_kᵀ`.
    pub fn apply(&self, state: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.fock_dim, self.zero_dim);
        for (a, b) in &self.terms {
            out += a * state * b.transpose();
        }
        out
    }

    /// Upper bound on the Hilbert operator norm: `Σ_k ‖A_k‖₂ ‖B_k‖₂`.
    pub fn norm_upper_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| spectral_norm(a) * spectral_norm(b))
            .sum()
    }

    /// Materialize the full matrix (small truncations only).
    pub fn dense(&self) -> Result<DMatrix<Complex64>> {
        let dim = self.fock_dim * self.zero_dim;
        if dim > 4096 {
            return Err(Error::Config(format!(
                "refusing to materialize a {dim}-dimensional dense operator"
            )));
        }
        let mut out = DMatrix::zeros(dim, dim);
        for (a, b) in &self.terms {
            out += a.kronecker(b);
        }
        Ok(out)
    }

    /// The Krein adjoint `J M† J`, where `J` acts by `j_signs` on the Fock
    /// factor and trivially on the (positive) oscillator factor.
    pub fn j_adjoint(&self, j_signs: &DVector<f64>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, b)| {
                let mut ja = a.adjoint();
                for r in 0..ja.nrows() {
                    for c in 0..ja.ncols() {
                        ja[(r, c)] *= j_signs[r] * j_signs[c];
                    }
                }
                (ja, b.adjoint())
            })
            .collect();
        Self {
            fock_dim: self.fock_dim,
            zero_dim: self.zero_dim,
            terms,
        }
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s))
}

/// The assembled Gupta–Bleuler representation: field operators, vacuum
/// n-point functions, and the structural property checks.
pub struct GBRepresentation<'a, 'b> {
    pub structure: &'b OneParticleStructure<'a>,
    pub fock: FockBasis,
    pub hermite: HermiteSector,
    lambda: Option<SpacetimeForm>,
    d_lambda: Option<SpacetimeForm>,
}

impl<'a, 'b> GBRepresentation<'a, 'b> {
    /// Build the representation from a generating family of test 1-forms.
    ///
    /// The conjugated one-particle images `κ̄(f_i)` are orthonormalized by
    /// eigendecomposition of their Krein Gram matrix; families that are
    /// linearly dependent (relative eigenvalue below [`RANK_TOL`]) are
    /// rejected.  `lambda`, if given, is a degree-0 gauge functional whose
    /// differential shifts every field operator by `⟨dΛ, f⟩·1`.
    pub fn new(
        structure: &'b OneParticleStructure<'a>,
        generators: &[SpacetimeForm],
        particle_cutoff: usize,
        hermite_cutoff: usize,
        lambda: Option<SpacetimeForm>,
    ) -> Result<Self> {
        let raw: Vec<KreinVector> = generators
            .iter()
            .map(|f| Ok(structure.kappa(f)?.conj()))
            .collect::<Result<_>>()?;
        Self::from_kappa_bars(structure, raw, particle_cutoff, hermite_cutoff, lambda)
    }

    /// Build the representation directly from conjugated one-particle
    /// vectors (used when the generating data comes from grid-level
    /// propagation rather than from closed-form test forms).
    pub fn from_kappa_bars(
        structure: &'b OneParticleStructure<'a>,
        raw: Vec<KreinVector>,
        particle_cutoff: usize,
        hermite_cutoff: usize,
        lambda: Option<SpacetimeForm>,
    ) -> Result<Self> {
        if raw.is_empty() || raw.len() > MAX_GENERATORS {
            return Err(Error::Config(format!(
                "generating family must have 1 to {MAX_GENERATORS} forms, got {}",
                raw.len()
            )));
        }
        if particle_cutoff == 0 {
            return Err(Error::Config(
                "particle cutoff must be at least 1".into(),
            ));
        }
        let m = raw.len();
        let gram = DMatrix::from_fn(m, m, |i, j| structure.krein_inner(&raw[i], &raw[j]));
        let eig = SymmetricEigen::new(gram);
        let max_abs = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));
        let dependent: Vec<usize> = (0..m)
            .filter(|&i| eig.eigenvalues[i].abs() < RANK_TOL * max_abs)
            .collect();
        if !dependent.is_empty() {
            return Err(Error::Config(format!(
                "generating family is linearly dependent: Gram directions {:?} have \
                 relative eigenvalues below {RANK_TOL:.0e}",
                dependent
            )));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .expect("Gram eigenvalues are finite")
        });
        let mut vectors = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        for &j in &order {
            let scale = 1.0 / eig.eigenvalues[j].abs().sqrt();
            let mut w = structure.zero_vector();
            for (i, r) in raw.iter().enumerate() {
                w.add_scaled(eig.eigenvectors[(i, j)] * scale, r);
            }
            vectors.push(w);
            signs.push(eig.eigenvalues[j].signum());
        }
        let (k0, k1) = structure.kernel_dims();
        let hermite = HermiteSector::new(k0 + k1, hermite_cutoff)?;
        let d_lambda = match &lambda {
            Some(lam) => {
                if lam.degree() != 0 {
                    return Err(Error::Config(format!(
                        "gauge functional must be a 0-form, got degree {}",
                        lam.degree()
                    )));
                }
                Some(lam.d(structure.ctx.complex)?)
            }
            None => None,
        };
        Ok(Self {
            structure,
            fock: FockBasis::new(vectors, signs, particle_cutoff),
            hermite,
            lambda,
            d_lambda,
        })
    }

    /// Coefficients of `ψ` over the orthonormalized subbasis.  Errors if the
    /// component outside the span exceeds [`PROJECTION_TOL`] relative to the
    /// vector's magnitude.
    pub fn project(&self, psi: &KreinVector) -> Result<DVector<Complex64>> {
        let m = self.fock.modes();
        let coeffs = DVector::from_fn(m, |i, _| {
            self.structure.krein_inner(&self.fock.vectors[i], psi) * self.fock.signs[i]
        });
        let mut recon = self.structure.zero_vector();
        for i in 0..m {
            recon.add_scaled(coeffs[i], &self.fock.vectors[i]);
        }
        let excess = psi.sub(&recon).j_norm();
        if excess > PROJECTION_TOL * psi.j_norm().max(1.0) {
            return Err(Error::Domain(format!(
                "one-particle vector leaves the Fock span: excess norm {excess:.3e} \
                 (magnitude {:.3e})",
                psi.j_norm()
            )));
        }
        Ok(coeffs)
    }

    fn gauge_shift(&self, f: &SpacetimeForm) -> Result<f64> {
        match &self.d_lambda {
            Some(dl) => dl.lorentz_pairing(
                self.structure.ctx.complex,
                f,
                self.structure.quad_points(),
            ),
            None => Ok(0.0),
        }
    }

    /// Assemble a field operator from explicit one-particle data: the
    /// (unconjugated) one-particle vector, the harmonic Cauchy data, and a
    /// scalar shift.  Returns the operator together with the norm of the
    /// component of the conjugated vector outside the Fock span (which the
    /// truncation drops).
    pub fn field_operator_from_data(
        &self,
        kappa: &KreinVector,
        nu: &ZeroModeVector,
        shift: f64,
    ) -> (GBOperator, f64) {
        let kbar = kappa.conj();
        let m = self.fock.modes();
        let coeffs = DVector::from_fn(m, |i, _| {
            self.structure.krein_inner(&self.fock.vectors[i], &kbar) * self.fock.signs[i]
        });
        let mut recon = self.structure.zero_vector();
        for i in 0..m {
            recon.add_scaled(coeffs[i], &self.fock.vectors[i]);
        }
        let excess = kbar.sub(&recon).j_norm();
        let inv_sqrt2 = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
        let fock_part = (self.fock.annihilation_matrix(&coeffs)
            + self.fock.creation_matrix(&coeffs))
            * inv_sqrt2;
        let dirs = self.hermite.directions;
        let u = DVector::from_iterator(
            dirs,
            nu.velocity_scalar.iter().chain(nu.velocity_oneform.iter()).copied(),
        );
        let v = DVector::from_iterator(
            dirs,
            nu.value_scalar
                .iter()
                .copied()
                .chain(nu.value_oneform.iter().map(|x| -x)),
        );
        let zero_part = self.hermite.field_matrix(&u, &v);
        (self.assemble(fock_part, zero_part, shift), excess)
    }

    /// One-particle data of `Â(f)` plus a span check on the conjugated
    /// vector.
    fn checked_operator(
        &self,
        f: &SpacetimeForm,
        shift: f64,
    ) -> Result<GBOperator> {
        if f.degree() != 1 {
            return Err(Error::Config(format!(
                "field operators smear 1-forms, got degree {}",
                f.degree()
            )));
        }
        let kappa = self.structure.kappa(f)?;
        let nu = self.structure.zero_mode(f)?;
        let (op, excess) = self.field_operator_from_data(&kappa, &nu, shift);
        if excess > PROJECTION_TOL * kappa.j_norm().max(1.0) {
            return Err(Error::Domain(format!(
                "one-particle vector leaves the Fock span: excess norm {excess:.3e} \
                 (magnitude {:.3e})",
                kappa.j_norm()
            )));
        }
        Ok(op)
    }

    fn assemble(
        &self,
        fock_part: DMatrix<Complex64>,
        zero_part: DMatrix<Complex64>,
        shift: f64,
    ) -> GBOperator {
        let fd = self.fock.dim();
        let zd = self.hermite.dim();
        let mut first = fock_part;
        for i in 0..fd {
            first[(i, i)] += Complex64::new(shift, 0.0);
        }
        GBOperator {
            fock_dim: fd,
            zero_dim: zd,
            terms: vec![
                (first, DMatrix::identity(zd, zd)),
                (DMatrix::identity(fd, fd), zero_part),
            ],
        }
    }

    /// The smeared field operator
    /// `Â(f) = (a(κ̄f) + a*(κ̄f))/√2 ⊗ 1 + 1 ⊗ Â_𝔍(f) + ⟨dΛ, f⟩·1`.
    pub fn field_operator(&self, f: &SpacetimeForm) -> Result<GBOperator> {
        let shift = self.gauge_shift(f)?;
        self.checked_operator(f, shift)
    }

    /// A generator of the dynamical ideal, `Â(□f) − Λ(δ□f)·1`; its norm
    /// bounds measure how relations of the field algebra survive the
    /// truncation.
    pub fn ideal_generator(&self, f: &SpacetimeForm) -> Result<GBOperator> {
        let complex = self.structure.ctx.complex;
        let box_f = f.box_operator(complex)?;
        let mut shift = self.gauge_shift(&box_f)?;
        if let Some(lam) = &self.lambda {
            let delta_box = box_f.delta(complex)?;
            shift -= lam.lorentz_pairing(complex, &delta_box, self.structure.quad_points())?;
        }
        self.checked_operator(&box_f, shift)
    }

    /// A Gupta–Bleuler gauge generator, `Â(dφ) − Λ(□φ)·1`, for a scalar φ.
    /// Matrix elements between observable-generated states should vanish.
    pub fn gauge_generator(&self, phi: &SpacetimeForm) -> Result<GBOperator> {
        if phi.degree() != 0 {
            return Err(Error::Config(format!(
                "gauge generators come from 0-forms, got degree {}",
                phi.degree()
            )));
        }
        let complex = self.structure.ctx.complex;
        let d_phi = phi.d(complex)?;
        let mut shift = self.gauge_shift(&d_phi)?;
        if let Some(lam) = &self.lambda {
            let box_phi = phi.box_operator(complex)?;
            shift -= lam.lorentz_pairing(complex, &box_phi, self.structure.quad_points())?;
        }
        self.checked_operator(&d_phi, shift)
    }

    /// The fundamental symmetry `J = (Π_i s_i^{α_i}) ⊗ 1`.
    pub fn fundamental_symmetry(&self) -> GBOperator {
        let signs = self.fock.j_signs();
        let fd = self.fock.dim();
        let zd = self.hermite.dim();
        let mut j = DMatrix::zeros(fd, fd);
        for i in 0..fd {
            j[(i, i)] = Complex64::new(signs[i], 0.0);
        }
        GBOperator {
            fock_dim: fd,
            zero_dim: zd,
            terms: vec![(j, DMatrix::identity(zd, zd))],
        }
    }

    /// The vacuum `Ω ⊗ (oscillator ground state)`.
    pub fn vacuum(&self) -> DMatrix<Complex64> {
        let mut state = DMatrix::zeros(self.fock.dim(), self.hermite.dim());
        state[(0, 0)] = ONE;
        state
    }

    /// The indefinite inner product of two states (`J`-weighted on the Fock
    /// factor, plain on the oscillator factor), conjugate-linear on the left.
    pub fn state_inner(&self, x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> Complex64 {
        let signs = self.fock.j_signs();
        let mut acc = Complex64::new(0.0, 0.0);
        for f in 0..self.fock.dim() {
            let mut row = Complex64::new(0.0, 0.0);
            for z in 0..self.hermite.dim() {
                row += x[(f, z)].conj() * y[(f, z)];
            }
            acc += row * signs[f];
        }
        acc
    }

    /// Vacuum expectation of a product of operators (applied right to left).
    pub fn vacuum_expectation(&self, ops: &[&GBOperator]) -> Complex64 {
        let mut state = self.vacuum();
        for op in ops.iter().rev() {
            state = op.apply(&state);
        }
        state[(0, 0)]
    }

    /// The vacuum n-point function `⟨Ω, Â(f₁) ⋯ Â(f_n) Ω⟩`.
    ///
    /// `n` is capped at twice the particle cutoff; beyond that the
    /// truncation biases the value.
    pub fn n_point(&self, forms: &[&SpacetimeForm]) -> Result<Complex64> {
        if forms.len() > 2 * self.fock.particle_cutoff {
            return Err(Error::Config(format!(
                "{}-point function exceeds the reliable order {} of the truncation",
                forms.len(),
                2 * self.fock.particle_cutoff
            )));
        }
        let ops: Vec<GBOperator> = forms
            .iter()
            .map(|f| self.field_operator(f))
            .collect::<Result<_>>()?;
        Ok(self.vacuum_expectation(&ops.iter().collect::<Vec<_>>()))
    }

    /// States `Π_{i ∈ S} op_i · Ω` for every multiset `S` of size at most
    /// `max_order`, in deterministic order.
    pub fn monomial_states(
        &self,
        ops: &[GBOperator],
        max_order: usize,
    ) -> Vec<DMatrix<Complex64>> {
        multisets(ops.len(), max_order)
            .into_iter()
            .map(|seq| {
                let mut state = self.vacuum();
                for &i in seq.iter().rev() {
                    state = ops[i].apply(&state);
                }
                state
            })
            .collect()
    }

    /// Gram matrix of states under the plain (positive) inner product.
    pub fn hilbert_gram(&self, states: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
        DMatrix::from_fn(states.len(), states.len(), |i, j| {
            states[i].iter().zip(states[j].iter()).map(|(a, b)| a.conj() * b).sum()
        })
    }

    /// Gram matrix of states under the indefinite inner product.
    pub fn krein_gram(&self, states: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
        DMatrix::from_fn(states.len(), states.len(), |i, j| {
            self.state_inner(&states[i], &states[j])
        })
    }
}

/// Scale each state to unit Hilbert norm (untouched if already zero), so
/// that Gram-based rank counts are insensitive to state magnitudes.
pub fn unit_normalize(states: &mut [DMatrix<Complex64>]) {
    for s in states {
        let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            *s /= Complex64::new(norm, 0.0);
        }
    }
}

/// Rank of a Hermitian Gram matrix at relative eigenvalue tolerance `rel_tol`.
pub fn hermitian_rank(gram: &DMatrix<Complex64>, rel_tol: f64) -> usize {
    let eig = SymmetricEigen::new(gram.clone());
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, d| acc.max(d.abs()));
    if max_abs == 0.0 {
        return 0;
    }
    eig.eigenvalues
        .iter()
        .filter(|d| d.abs() > rel_tol * max_abs)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::TimeProfile;
    use crate::spacetime::SeparableTerm;
    use crate::spatial::{EigenBasis, SpatialComplex, SpatialForm};
    use crate::wave::{TimeGrid, WaveContext};
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
        .unwrap()
        .delta(complex)
        .unwrap()
    }

    /// Standard generating family: two co-closed forms, two exact forms
    /// (whose scalar potentials are returned alongside), two generic forms.
    fn generating_family(
        rng: &mut ChaCha8Rng,
        complex: &SpatialComplex,
    ) -> (Vec<SpacetimeForm>, Vec<SpacetimeForm>) {
        let phis = vec![random_scalar(rng, complex), random_scalar(rng, complex)];
        let family = vec![
            co_closed_one_form(rng, complex),
            co_closed_one_form(rng, complex),
            phis[0].d(complex).unwrap(),
            phis[1].d(complex).unwrap(),
            random_one_form(rng, complex),
            random_one_form(rng, complex),
        ];
        (family, phis)
    }

    fn random_coeffs(rng: &mut ChaCha8Rng, m: usize) -> DVector<Complex64> {
        DVector::from_fn(m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn combinatorial_dimensions_match() {
        assert_eq!(fock_dimension(1, 2), 3);
        assert_eq!(fock_dimension(2, 3), 10);
        assert_eq!(fock_dimension(6, 3), 84);
        let occs = enumerate_occupations(3, 2);
        assert_eq!(occs.len(), fock_dimension(3, 2));
        assert_eq!(occs[0], vec![0, 0, 0]);
        // Multisets of size ≤ k over m symbols count the same way.
        assert_eq!(multisets(6, 3).len(), 84);
    }

    #[test]
    fn orthonormalization_yields_unit_krein_gram() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        let m = rep.fock.modes();
        assert_eq!(m, 6);
        for i in 0..m {
            assert_eq!(rep.fock.signs[i].abs(), 1.0);
            for j in 0..m {
                let inner = structure.krein_inner(&rep.fock.vectors[i], &rep.fock.vectors[j]);
                let expect = if i == j { rep.fock.signs[i] } else { 0.0 };
                assert!(
                    (inner - Complex64::new(expect, 0.0)).norm() < 1e-10,
                    "Gram({i},{j}) = {inner}"
                );
            }
        }
        // The family contains exact forms, whose images are Krein-neutral;
        // a span containing a neutral direction has mixed signature.
        assert!(rep.fock.signs.iter().any(|s| *s > 0.0));
        assert!(rep.fock.signs.iter().any(|s| *s < 0.0));
        assert_eq!(rep.fock.dim(), fock_dimension(6, 3));
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = random_one_form(&mut rng, &fx.complex);
        match GBRepresentation::new(&structure, &[f.clone(), f], 2, 4, None) {
            Err(Error::Config(msg)) => assert!(msg.contains("dependent"), "{msg}"),
            Err(other) => panic!("expected a configuration error, got {other:?}"),
            Ok(_) => panic!("a duplicated generator must be rejected"),
        }
    }

    #[test]
    fn ccr_holds_on_the_reduced_particle_sector() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 4, None).unwrap();
        let m = rep.fock.modes();

        for seed in 0..5 {
            let mut srng = ChaCha8Rng::seed_from_u64(100 + seed);
            let c_psi = random_coeffs(&mut srng, m);
            let c_phi = random_coeffs(&mut srng, m);
            // ⟨ψ, φ⟩ = Σ_i conj(c_i) s_i d_i over the orthonormalized basis.
            let inner: Complex64 = (0..m)
                .map(|i| c_psi[i].conj() * rep.fock.signs[i] * c_phi[i])
                .sum();
            let a = rep.fock.annihilation_matrix(&c_psi);
            let c = rep.fock.creation_matrix(&c_phi);
            let comm = &a * &c - &c * &a;
            for &row in &rep.fock.interior_indices() {
                for &col in &rep.fock.interior_indices() {
                    let expect = if row == col { inner } else { Complex64::new(0.0, 0.0) };
                    assert!(
                        (comm[(row, col)] - expect).norm() <= 1e-10 * (1.0 + inner.norm()),
                        "CCR failed at ({row},{col}): {} vs {expect}",
                        comm[(row, col)]
                    );
                }
            }
            // a(ψ) kills the vacuum; ⟨Ω, a(ψ) a*(φ) Ω⟩ is the Krein product.
            assert!(a.column(0).iter().all(|z| z.norm() == 0.0));
            let two_point = (&a * c.column(0))[0];
            assert!((two_point - inner).norm() <= 1e-12 * (1.0 + inner.norm()));
        }
    }

    #[test]
    fn projection_outside_the_span_is_rejected() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 2, 4, None).unwrap();

        let outside = random_one_form(&mut rng, &fx.complex);
        match rep.field_operator(&outside) {
            Err(Error::Domain(msg)) => assert!(msg.contains("span"), "{msg}"),
            other => panic!("expected a domain error, got {:?}", other.map(|_| ())),
        }
        // n-point order is capped by the particle cutoff.
        let f = &family[0];
        let err = rep.n_point(&[f, f, f, f, f]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn hermite_ladder_and_vacuum_moments() {
        let sector = HermiteSector::new(2, 8).unwrap();
        let interior = sector.interior_indices();
        for di in 0..2 {
            for xj in 0..2 {
                let d = sector.derivative_matrix(di);
                let x = sector.position_matrix(xj);
                let comm = &d * &x - &x * &d;
                for &row in &interior {
                    for &col in &interior {
                        let expect = if row == col && di == xj { 1.0 } else { 0.0 };
                        assert!(
                            (comm[(row, col)] - expect).abs() < 1e-12,
                            "[D_{di}, X_{xj}] at ({row},{col}) = {}",
                            comm[(row, col)]
                        );
                    }
                }
            }
        }
        let x = sector.position_matrix(0);
        let d = sector.derivative_matrix(0);
        let moment = |m: &DMatrix<f64>| m[(0, 0)];
        assert!((moment(&(&x * &x)) - 0.5).abs() < 1e-14);
        assert!((moment(&(&x * &d)) + 0.5).abs() < 1e-14);
        assert!((moment(&(&d * &x)) - 0.5).abs() < 1e-14);
        assert!((moment(&(&d * &d)) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn field_commutators_reproduce_the_propagator() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        let fock_int = rep.fock.interior_indices();
        let zero_int = rep.hermite.interior_indices();
        for i in 0..family.len() {
            for j in (i + 1)..family.len() {
                let (f, g) = (&family[i], &family[j]);
                let op_f = rep.field_operator(f).unwrap();
                let op_g = rep.field_operator(g).unwrap();
                let g_total = structure.g_pairing(f, g).unwrap();
                let g_particle = structure
                    .krein_inner(&structure.kappa(f).unwrap(), &structure.kappa(g).unwrap())
                    .im;
                let g_zero = structure.gz_form(f, g).unwrap();
                let scale = 1.0 + g_total.abs() + g_particle.abs();

                // Fock factor: [F_f, F_g] = −i·(particle part of G) on the
                // reduced particle sector.
                let ff = &op_f.terms[0].0;
                let fg = &op_g.terms[0].0;
                let comm_f = ff * fg - fg * ff;
                for &row in &fock_int {
                    for &col in &fock_int {
                        let expect = if row == col {
                            Complex64::new(0.0, -g_particle)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        assert!(
                            (comm_f[(row, col)] - expect).norm() <= 1e-6 * scale,
                            "Fock commutator at ({row},{col}): {} vs {expect}",
                            comm_f[(row, col)]
                        );
                    }
                }

                // Oscillator factor: [B_f, B_g] = −i·(zero-mode part of G)
                // away from the level cutoff.
                let bf = &op_f.terms[1].1;
                let bg = &op_g.terms[1].1;
                let comm_b = bf * bg - bg * bf;
                for &row in &zero_int {
                    for &col in &zero_int {
                        let expect = if row == col {
                            Complex64::new(0.0, -g_zero)
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        assert!(
                            (comm_b[(row, col)] - expect).norm() <= 1e-8 * scale,
                            "oscillator commutator at ({row},{col}): {} vs {expect}",
                            comm_b[(row, col)]
                        );
                    }
                }

                // Full operator on the vacuum: [Â(f), Â(g)] Ω = −i G(f,g) Ω.
                let comm = op_f.commutator(&op_g);
                let acted = comm.apply(&rep.vacuum());
                assert!(
                    (acted[(0, 0)] - Complex64::new(0.0, -g_total)).norm() <= 1e-6 * scale,
                    "total commutator on vacuum: {} vs −i·{g_total}",
                    acted[(0, 0)]
                );
            }
        }
    }

    #[test]
    fn vacuum_moments_are_quasi_free() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        let picks = [&family[0], &family[2], &family[4], &family[5]];
        let ops: Vec<GBOperator> = picks
            .iter()
            .map(|f| rep.field_operator(f).unwrap())
            .collect();

        // Odd moments vanish without a gauge shift.
        for op in &ops {
            assert!(rep.vacuum_expectation(&[op]).norm() <= 1e-10);
        }
        assert!(rep.vacuum_expectation(&[&ops[0], &ops[1], &ops[2]]).norm() <= 1e-9);

        // Antisymmetric part of the two-point function is −iG.
        let w2 = |a: usize, b: usize| rep.vacuum_expectation(&[&ops[a], &ops[b]]);
        for a in 0..4 {
            for b in (a + 1)..4 {
                let g = structure.g_pairing(picks[a], picks[b]).unwrap();
                let anti = w2(a, b) - w2(b, a);
                assert!(
                    (anti - Complex64::new(0.0, -g)).norm() <= 1e-6 * (1.0 + g.abs()),
                    "ω₂ antisymmetry for ({a},{b}): {anti} vs −i·{g}"
                );
            }
        }

        // Four-point function factorizes into pair products.
        let w4 = rep.vacuum_expectation(&[&ops[0], &ops[1], &ops[2], &ops[3]]);
        let wick = w2(0, 1) * w2(2, 3) + w2(0, 2) * w2(1, 3) + w2(0, 3) * w2(1, 2);
        let scale = 1.0
            + (0..4)
                .flat_map(|a| (0..4).map(move |b| (a, b)))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| w2(a, b).norm())
                .fold(0.0f64, f64::max)
                .powi(2);
        assert!(
            (w4 - wick).norm() <= 1e-8 * scale,
            "ω₄ = {w4} vs Wick {wick}"
        );
    }

    #[test]
    fn gauge_functional_shifts_the_one_point_function() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let lambda = random_scalar(&mut rng, &fx.complex);
        let d_lambda = lambda.d(&fx.complex).unwrap();
        let rep = GBRepresentation::new(&structure, &family, 2, 4, Some(lambda)).unwrap();

        for f in &family {
            let expect = d_lambda.lorentz_pairing(&fx.complex, f, QUAD).unwrap();
            let w1 = rep.n_point(&[f]).unwrap();
            assert!(
                (w1 - Complex64::new(expect, 0.0)).norm() <= 1e-10 * (1.0 + expect.abs()),
                "ω₁ = {w1} vs ⟨dΛ, f⟩ = {expect}"
            );
        }
        // The shift is symmetric, so it drops out of the commutator.
        let (f, g) = (&family[4], &family[5]);
        let gg = structure.g_pairing(f, g).unwrap();
        let anti = rep.n_point(&[f, g]).unwrap() - rep.n_point(&[g, f]).unwrap();
        assert!((anti - Complex64::new(0.0, -gg)).norm() <= 1e-6 * (1.0 + gg.abs()));
    }

    #[test]
    fn ideal_generators_vanish_in_norm() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let lambda = random_scalar(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, Some(lambda)).unwrap();

        // Arbitrary test forms: the wave-equation image very nearly
        // annihilates both the particle and the zero-mode sectors, so the
        // whole generator is small in norm.
        for _ in 0..3 {
            let f = random_one_form(&mut rng, &fx.complex);
            let gen = rep.ideal_generator(&f).unwrap();
            let bound = gen.norm_upper_bound();
            assert!(bound <= 1e-4, "ideal generator norm bound {bound}");
        }
    }

    #[test]
    fn gauge_generators_vanish_between_observable_states() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let (family, phis) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        // Observable (co-closed) field operators generate the test states.
        let obs: Vec<GBOperator> = family[..2]
            .iter()
            .map(|f| rep.field_operator(f).unwrap())
            .collect();
        let states = rep.monomial_states(&obs, 1);
        let gauge: Vec<GBOperator> = phis
            .iter()
            .map(|phi| rep.gauge_generator(phi).unwrap())
            .collect();

        for y in &gauge {
            for psi in &states {
                for psi2 in &states {
                    let val = rep.state_inner(psi, &y.apply(psi2));
                    let scale = 1.0 + y.norm_upper_bound();
                    assert!(
                        val.norm() <= 1e-5 * scale,
                        "⟨ψ, Y ψ'⟩ = {val} (bound {scale})"
                    );
                }
            }
        }
        // Second order: products of two gauge generators.
        let y2 = gauge[0].product(&gauge[1]);
        for psi in &states {
            for psi2 in &states {
                let val = rep.state_inner(psi, &y2.apply(psi2));
                let scale = 1.0 + gauge[0].norm_upper_bound() * gauge[1].norm_upper_bound();
                assert!(val.norm() <= 1e-5 * scale, "second order: {val}");
            }
        }
    }

    #[test]
    fn krein_gram_of_observable_states_is_positive() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        let obs: Vec<GBOperator> = family[..2]
            .iter()
            .map(|f| rep.field_operator(f).unwrap())
            .collect();
        let states = rep.monomial_states(&obs, 3);
        assert_eq!(states.len(), fock_dimension(2, 3));
        let gram = rep.krein_gram(&states);
        let eig = SymmetricEigen::new(gram);
        let max = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        assert!(
            min >= -1e-8 * max,
            "indefinite Gram on observable states: min {min}, max {max}"
        );
    }

    #[test]
    fn monomial_states_fill_the_truncation() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 5, None).unwrap();

        let ops: Vec<GBOperator> = family
            .iter()
            .map(|f| rep.field_operator(f).unwrap())
            .collect();
        let mut states = rep.monomial_states(&ops, 3);
        assert_eq!(states.len(), fock_dimension(6, 3));
        unit_normalize(&mut states);
        let gram = rep.hilbert_gram(&states);
        assert_eq!(hermitian_rank(&gram, 1e-10), states.len());
    }

    #[test]
    fn field_operators_are_j_symmetric() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        // Small truncation so the dense matrix stays materializable.
        let family = vec![
            co_closed_one_form(&mut rng, &fx.complex),
            random_scalar(&mut rng, &fx.complex).d(&fx.complex).unwrap(),
            random_one_form(&mut rng, &fx.complex),
        ];
        let lambda = random_scalar(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 2, 3, Some(lambda)).unwrap();

        let j_signs = rep.fock.j_signs();
        for f in &family {
            let op = rep.field_operator(f).unwrap();
            let dense = op.dense().unwrap();
            let adj = op.j_adjoint(&j_signs).dense().unwrap();
            let scale = dense.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
            let diff = (&dense - &adj).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            assert!(diff <= 1e-10 * scale, "J-symmetry residual {diff}");
        }

        let j_op = rep.fundamental_symmetry();
        let j = j_op.dense().unwrap();
        let id = DMatrix::<Complex64>::identity(j.nrows(), j.ncols());
        assert_eq!(&j * &j, id);
        assert_eq!(j.adjoint(), j);
    }

    #[test]
    fn exact_modes_commute_with_observables() {
        let fx = Fixture::torus();
        let ctx = fx.ctx();
        let structure = OneParticleStructure::new(&ctx, QUAD).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let (family, _) = generating_family(&mut rng, &fx.complex);
        let rep = GBRepresentation::new(&structure, &family, 3, 4, None).unwrap();

        // κ̄ of the exact generator, as a pure annihilation operator.
        let kbar = structure.kappa(&family[2]).unwrap().conj();
        let coeffs = rep.project(&kbar).unwrap();
        let a_exact = rep.fock.annihilation_matrix(&coeffs);

        for g in &family[..2] {
            let op_g = rep.field_operator(g).unwrap();
            let fg = &op_g.terms[0].0;
            let comm = &a_exact * fg - fg * &a_exact;
            let scale = 1.0 + kbar.j_norm();
            for &row in &rep.fock.interior_indices() {
                for &col in &rep.fock.interior_indices() {
                    assert!(
                        comm[(row, col)].norm() <= 1e-8 * scale,
                        "[a(κ(dφ)), Â(g)] at ({row},{col}) = {}",
                        comm[(row, col)]
                    );
                }
            }
        }
    }
}
