//! Solution theory for the normally hyperbolic operator □ = −∂²_t − Δ_Σ on
//! M = ℝ × Σ, diagonalized over the eigenbasis of Δ_Σ.
//!
//! In the eigenbasis every block of a spacetime form decouples into scalar
//! mode equations: □ sends the mode function `u_k(t)` to `−ü_k − λ_k u_k`.
//! The solution operators used downstream are:
//!
//! * homogeneous evolution ([`SolutionForm`]): for `λ > 0`,
//!   `u(t) = a·cos(ωt) + b·sin(ωt)/ω` with `ω = √λ`; for harmonic modes
//!   `u(t) = a + b·t`;
//! * retarded/advanced Green operators
//!   `u₊(t) = −(1/ω) ∫_{−∞}^{t} sin(ω(t−s)) f_k(s) ds` (resp. the mirror
//!   integral over `[t, ∞)`), with kernel-mode limit `−∫ (t−s) f_k(s) ds`;
//!   both satisfy `−ü − λu = f`, i.e. `□ G± f = f`;
//! * the Pauli–Jordan propagator `G = G₊ − G₋`, a homogeneous solution with
//!   closed-form Cauchy data at `t = 0` in terms of the trigonometric
//!   moments `C_k = ∫ cos(ω_k s) f_k(s) ds`, `S_k = ∫ sin(ω_k s) f_k(s) ds`:
//!   `u(0) = S_k/ω_k`, `u̇(0) = −C_k` (kernel modes: `∫ s f ds`, `−∫ f ds`);
//! * the classical symplectic form on Cauchy data, with signature-dictated
//!   block signs, satisfying `σ(Ψ^{Gf}, Ψ^{Gg}) = ⟨Gf, g⟩_M`;
//! * time-slice reduction: localizing a test form `f` to `g` supported in a
//!   slice `ℝ_U × Σ` with `□h = f − g`, in three variants (generic, for
//!   closed `f` via a scalar potential, for co-closed `f` via a 2-form
//!   potential).
//!
//! Green integrals are evaluated by a fourth-order prefix quadrature on a
//! refined uniform grid ("supergrid"), so downstream residuals sit well
//! below the verification tolerances even for the stiffest lattice modes.

use nalgebra::{DMatrix, DVector};

use crate::profile::SmoothStep;
use crate::spacetime::{BlockData, BlockKind, CauchyData, SpacetimeForm};
use crate::spatial::{EigenBasis, SpatialComplex, SpatialForm};
use crate::{Error, Result};

/// Uniform time grid with a quadrature refinement factor.
///
/// The coarse grid carries `n_intervals` panels over `[t_min, t_max]`; all
/// quadrature and field tracks live on the refined grid with
/// `n_intervals · refinement` panels.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    n_intervals: usize,
    refinement: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_intervals: usize, refinement: usize) -> Result<Self> {
        if !t_min.is_finite() || !t_max.is_finite() || t_min >= t_max {
            return Err(Error::Config(format!(
                "time window needs finite t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if n_intervals < 8 || refinement < 1 || n_intervals * refinement < 16 {
            return Err(Error::Config(format!(
                "time grid too coarse: {n_intervals} intervals at refinement {refinement}"
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            n_intervals,
            refinement,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    /// Number of supergrid panels.
    pub fn n_super(&self) -> usize {
        self.n_intervals * self.refinement
    }

    /// Supergrid spacing.
    pub fn super_step(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_super() as f64
    }

    /// All supergrid points (length `n_super() + 1`).
    pub fn super_times(&self) -> Vec<f64> {
        let h = self.super_step();
        (0..=self.n_super()).map(|j| self.t_min + h * j as f64).collect()
    }

    /// Supergrid indices of the coarse grid points.
    pub fn coarse_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.n_intervals).map(|i| i * self.refinement)
    }

    /// Whether `[a, b]` fits inside the window.
    pub fn contains(&self, a: f64, b: f64) -> bool {
        self.t_min <= a && b <= self.t_max
    }
}

/// Fourth-order cumulative quadrature of uniform samples: `out[j] ≈
/// ∫_{s_0}^{s_j} g`, using the Adams–Moulton-style panel rule
/// `h/24·(−g_{j−1} + 13g_j + 13g_{j+1} − g_{j+2})` with matching one-sided
/// rules at the ends.
fn prefix_integral(g: &[f64], h: f64, out: &mut [f64]) {
    let m = g.len() - 1;
    debug_assert!(m >= 3);
    debug_assert_eq!(out.len(), g.len());
    out[0] = 0.0;
    let c = h / 24.0;
    for j in 0..m {
        let panel = if j == 0 {
            c * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if j == m - 1 {
            c * (g[m - 3] - 5.0 * g[m - 2] + 19.0 * g[m - 1] + 9.0 * g[m])
        } else {
            c * (-g[j - 1] + 13.0 * g[j] + 13.0 * g[j + 1] - g[j + 2])
        };
        out[j + 1] = out[j] + panel;
    }
}

/// Direction of a Green operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Support in the causal future of the source.
    Retarded,
    /// Support in the causal past of the source.
    Advanced,
}

/// Mode-space representation of one block of a test form: a list of time
/// profiles with their eigenbasis coefficient columns.
#[derive(Clone, Debug)]
pub struct ModalBlock {
    pub degree: usize,
    pub profiles: Vec<crate::profile::TimeProfile>,
    /// `coeffs[(k, i)]` = coefficient of profile `i`'s shape on mode `k`.
    pub coeffs: DMatrix<f64>,
}

impl ModalBlock {
    /// Samples `f_k(t_j)` for all modes on the given times.
    pub fn samples(&self, times: &[f64]) -> DMatrix<f64> {
        let p = DMatrix::from_fn(self.profiles.len(), times.len(), |i, j| {
            self.profiles[i].value(times[j])
        });
        &self.coeffs * p
    }

    /// Samples of the exact time derivative `ḟ_k(t_j)`.
    pub fn derivative_samples(&self, times: &[f64]) -> DMatrix<f64> {
        let dp: Vec<_> = self.profiles.iter().map(|p| p.derivative()).collect();
        let p = DMatrix::from_fn(dp.len(), times.len(), |i, j| dp[i].value(times[j]));
        &self.coeffs * p
    }
}

/// Mode-space representation of a test form (one [`ModalBlock`] per block).
#[derive(Clone, Debug)]
pub struct ModalForm {
    pub degree: usize,
    pub dt: Option<ModalBlock>,
    pub spatial: Option<ModalBlock>,
}

impl ModalForm {
    pub fn block(&self, kind: BlockKind) -> Option<&ModalBlock> {
        match kind {
            BlockKind::Dt => self.dt.as_ref(),
            BlockKind::Spatial => self.spatial.as_ref(),
        }
    }
}

/// Mode tracks of a time-dependent field on the supergrid.
#[derive(Clone, Debug)]
pub struct Tracks {
    /// Values `u_k(t_j)`, modes × supergrid points.
    pub u: DMatrix<f64>,
    /// Time derivatives `u̇_k(t_j)`; absent when a construction does not
    /// provide them in closed form.
    pub v: Option<DMatrix<f64>>,
}

/// A sampled field on M: one [`Tracks`] per block, on the context's grid.
#[derive(Clone, Debug)]
pub struct GridField {
    pub degree: usize,
    pub dt: Option<Tracks>,
    pub spatial: Option<Tracks>,
}

impl GridField {
    pub fn block(&self, kind: BlockKind) -> Option<&Tracks> {
        match kind {
            BlockKind::Dt => self.dt.as_ref(),
            BlockKind::Spatial => self.spatial.as_ref(),
        }
    }
}

/// One block of a homogeneous solution in eigenbasis coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionBlock {
    pub degree: usize,
    /// Value coefficients at `t = 0`.
    pub a: DVector<f64>,
    /// Velocity coefficients at `t = 0`.
    pub b: DVector<f64>,
}

/// A global homogeneous solution of □u = 0, exact per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionForm {
    pub degree: usize,
    pub dt: Option<SolutionBlock>,
    pub spatial: Option<SolutionBlock>,
}

impl SolutionForm {
    pub fn block(&self, kind: BlockKind) -> Option<&SolutionBlock> {
        match kind {
            BlockKind::Dt => self.dt.as_ref(),
            BlockKind::Spatial => self.spatial.as_ref(),
        }
    }
}

/// Variant of the time-slice reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimesliceVariant {
    /// Works for any test form.
    Generic,
    /// For closed 1-forms: the corrector is exact, `h = dχ`.
    Closed,
    /// For co-closed 1-forms: the corrector is co-exact, `h = δχ₂`.
    CoClosed,
}

/// Result of a time-slice reduction: `g` is supported in the slice and
/// `□h = f − g`.
#[derive(Clone, Debug)]
pub struct TimesliceOutput {
    pub g: GridField,
    pub h: GridField,
    /// Set when `f` was already supported in the slice (then `g = f`,
    /// `h = 0`).
    pub trivial: bool,
}

struct TrigTable {
    cos: DMatrix<f64>,
    sin: DMatrix<f64>,
}

/// Shared state for all wave-equation operations: the complex, its
/// eigenbasis, the time grid, per-degree trigonometric tables on the
/// supergrid, and the mode-space intertwiners of `d_Σ`.
pub struct WaveContext<'a> {
    pub complex: &'a SpatialComplex,
    pub basis: &'a EigenBasis,
    pub grid: TimeGrid,
    times: Vec<f64>,
    trig: Vec<TrigTable>,
    d_maps: Vec<DMatrix<f64>>,
}

impl<'a> WaveContext<'a> {
    pub fn new(complex: &'a SpatialComplex, basis: &'a EigenBasis, grid: TimeGrid) -> Result<Self> {
        let times = grid.super_times();
        let mut trig = Vec::new();
        for p in 0..=complex.dimension() {
            let lam = basis.eigenvalues(p);
            let n = lam.len();
            let mut cos = DMatrix::zeros(n, times.len());
            let mut sin = DMatrix::zeros(n, times.len());
            for k in 0..n {
                let omega = lam[k].sqrt();
                for (j, &t) in times.iter().enumerate() {
                    let (s, c) = (omega * t).sin_cos();
                    cos[(k, j)] = c;
                    sin[(k, j)] = s;
                }
            }
            trig.push(TrigTable { cos, sin });
        }
        // d-intertwiners in mode coordinates: T_p = V_{p+1}ᵀ M_{p+1} d_p V_p.
        let mut d_maps = Vec::new();
        for p in 0..complex.dimension() {
            let v_lo = basis.modes(p);
            let n_lo = v_lo.ncols();
            let mut image = DMatrix::zeros(complex.n_cells(p + 1), n_lo);
            for k in 0..n_lo {
                let col = DVector::from_column_slice(v_lo.column(k).as_slice());
                image.set_column(k, &complex.d_on(p, &col)?);
            }
            let mut weighted = image.clone();
            for (r, mut row) in weighted.row_iter_mut().enumerate() {
                row *= complex.mass(p + 1)[r];
            }
            d_maps.push(basis.modes(p + 1).tr_mul(&weighted));
        }
        Ok(Self {
            complex,
            basis,
            grid,
            times,
            trig,
            d_maps,
        })
    }

    /// Supergrid times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Mode-space matrix of `d_Σ : Ωᵖ → Ωᵖ⁺¹`.
    pub fn d_map(&self, p: usize) -> &DMatrix<f64> {
        &self.d_maps[p]
    }

    /// Mode-space matrix of `δ_Σ : Ωᵖ → Ωᵖ⁻¹` (the transpose of the `d` map,
    /// by adjointness in the mass-orthonormal basis).
    pub fn delta_map(&self, p: usize) -> DMatrix<f64> {
        self.d_maps[p - 1].transpose()
    }

    /// Converts a test form to mode space, checking that its time support
    /// fits inside the grid window.
    pub fn modal(&self, f: &SpacetimeForm) -> Result<ModalForm> {
        if let Some((a, b)) = f.time_support() {
            if !self.grid.contains(a, b) {
                return Err(Error::Config(format!(
                    "form support [{a:.3}, {b:.3}] exceeds the time window \
                     [{}, {}]",
                    self.grid.t_min(),
                    self.grid.t_max()
                )));
            }
        }
        let make = |kind: BlockKind| -> Result<Option<ModalBlock>> {
            let deg = f.block_degree(kind);
            if (kind == BlockKind::Dt && f.degree() == 0) || deg > self.complex.dimension() {
                return Ok(None);
            }
            let terms = f.terms(kind);
            let n_modes = self.complex.n_cells(deg);
            let mut coeffs = DMatrix::zeros(n_modes, terms.len());
            let mut profiles = Vec::with_capacity(terms.len());
            for (i, term) in terms.iter().enumerate() {
                coeffs.set_column(i, &self.basis.coefficients(deg, &term.shape.values)?);
                profiles.push(term.profile.clone());
            }
            Ok(Some(ModalBlock {
                degree: deg,
                profiles,
                coeffs,
            }))
        };
        Ok(ModalForm {
            degree: f.degree(),
            dt: make(BlockKind::Dt)?,
            spatial: make(BlockKind::Spatial)?,
        })
    }

    /// Green tracks for a sampled mode source (`samples`: modes × supergrid
    /// points) of spatial degree `p`.
    pub fn green_from_samples(
        &self,
        p: usize,
        samples: &DMatrix<f64>,
        direction: Direction,
    ) -> Tracks {
        let lam = self.basis.eigenvalues(p);
        let n_modes = samples.nrows();
        let npts = samples.ncols();
        let h = self.grid.super_step();
        let mut u = DMatrix::zeros(n_modes, npts);
        let mut v = DMatrix::zeros(n_modes, npts);
        let mut wa = vec![0.0; npts];
        let mut wb = vec![0.0; npts];
        let mut pa = vec![0.0; npts];
        let mut pb = vec![0.0; npts];
        for k in 0..n_modes {
            if lam[k] == 0.0 {
                // Kernel mode: □u = −ü; K(t, s) = −(t − s).
                for j in 0..npts {
                    let g = samples[(k, j)];
                    wa[j] = g;
                    wb[j] = self.times[j] * g;
                }
                prefix_integral(&wa, h, &mut pa); // I_j = ∫ f
                prefix_integral(&wb, h, &mut pb); // T_j = ∫ s f
                match direction {
                    Direction::Retarded => {
                        for j in 0..npts {
                            u[(k, j)] = -(self.times[j] * pa[j] - pb[j]);
                            v[(k, j)] = -pa[j];
                        }
                    }
                    Direction::Advanced => {
                        let (ia, ta) = (pa[npts - 1], pb[npts - 1]);
                        for j in 0..npts {
                            u[(k, j)] = self.times[j] * (ia - pa[j]) - (ta - pb[j]);
                            v[(k, j)] = ia - pa[j];
                        }
                    }
                }
            } else {
                let omega = lam[k].sqrt();
                let cos = self.trig[p].cos.row(k);
                let sin = self.trig[p].sin.row(k);
                for j in 0..npts {
                    let g = samples[(k, j)];
                    wa[j] = cos[j] * g;
                    wb[j] = sin[j] * g;
                }
                prefix_integral(&wa, h, &mut pa); // C_j
                prefix_integral(&wb, h, &mut pb); // S_j
                match direction {
                    Direction::Retarded => {
                        for j in 0..npts {
                            u[(k, j)] = -(sin[j] * pa[j] - cos[j] * pb[j]) / omega;
                            v[(k, j)] = -(cos[j] * pa[j] + sin[j] * pb[j]);
                        }
                    }
                    Direction::Advanced => {
                        let (ca, sa) = (pa[npts - 1], pb[npts - 1]);
                        for j in 0..npts {
                            u[(k, j)] = (sin[j] * (ca - pa[j]) - cos[j] * (sa - pb[j])) / omega;
                            v[(k, j)] = cos[j] * (ca - pa[j]) + sin[j] * (sa - pb[j]);
                        }
                    }
                }
            }
        }
        Tracks { u, v: Some(v) }
    }

    /// Retarded or advanced Green operator applied to a test form, blockwise.
    pub fn green(&self, f: &ModalForm, direction: Direction) -> GridField {
        let apply = |block: &Option<ModalBlock>| {
            block.as_ref().map(|b| {
                let samples = b.samples(&self.times);
                self.green_from_samples(b.degree, &samples, direction)
            })
        };
        GridField {
            degree: f.degree,
            dt: apply(&f.dt),
            spatial: apply(&f.spatial),
        }
    }

    /// Trigonometric moments of one modal block: per mode `k`,
    /// `C_k = ∫ cos(ω_k s) f_k ds` and `S_k = ∫ sin(ω_k s) f_k ds`; kernel
    /// modes carry `I_k = ∫ f_k` and `T_k = ∫ s f_k ds` in the same slots.
    /// Each profile is integrated over its own support (trapezoid; the
    /// integrand vanishes to all orders at both ends).
    pub fn trig_moments_block(&self, block: &ModalBlock, quad_points: usize) -> (DVector<f64>, DVector<f64>) {
        let lam = self.basis.eigenvalues(block.degree);
        let n_modes = block.coeffs.nrows();
        let mut cmom = DVector::zeros(n_modes);
        let mut smom = DVector::zeros(n_modes);
        for (i, profile) in block.profiles.iter().enumerate() {
            let (a, b) = profile.support();
            let n = quad_points.max(16);
            let h = (b - a) / n as f64;
            // Profile samples once; reused for every mode.
            let svals: Vec<f64> = (0..=n).map(|q| a + h * q as f64).collect();
            let pvals: Vec<f64> = svals.iter().map(|&s| profile.value(s)).collect();
            for k in 0..n_modes {
                let c = block.coeffs[(k, i)];
                if c == 0.0 {
                    continue;
                }
                let (mut ci, mut si) = (0.0, 0.0);
                if lam[k] == 0.0 {
                    for q in 0..=n {
                        let w = if q == 0 || q == n { 0.5 } else { 1.0 };
                        ci += w * pvals[q];
                        si += w * svals[q] * pvals[q];
                    }
                } else {
                    let omega = lam[k].sqrt();
                    for q in 0..=n {
                        let w = if q == 0 || q == n { 0.5 } else { 1.0 };
                        let (sn, cs) = (omega * svals[q]).sin_cos();
                        ci += w * cs * pvals[q];
                        si += w * sn * pvals[q];
                    }
                }
                cmom[k] += c * ci * h;
                smom[k] += c * si * h;
            }
        }
        (cmom, smom)
    }

    /// Trigonometric moments of a sampled source (modes × supergrid points),
    /// via the fourth-order prefix rule.  Used when the source exists only
    /// as tracks (e.g. the localized output of a time-slice reduction).
    pub fn trig_moments_from_samples(
        &self,
        p: usize,
        samples: &DMatrix<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let lam = self.basis.eigenvalues(p);
        let npts = samples.ncols();
        let h = self.grid.super_step();
        let mut cmom = DVector::zeros(samples.nrows());
        let mut smom = DVector::zeros(samples.nrows());
        let mut w = vec![0.0; npts];
        let mut acc = vec![0.0; npts];
        for k in 0..samples.nrows() {
            if lam[k] == 0.0 {
                for j in 0..npts {
                    w[j] = samples[(k, j)];
                }
                prefix_integral(&w, h, &mut acc);
                cmom[k] = acc[npts - 1];
                for j in 0..npts {
                    w[j] = self.times[j] * samples[(k, j)];
                }
                prefix_integral(&w, h, &mut acc);
                smom[k] = acc[npts - 1];
            } else {
                let cos = self.trig[p].cos.row(k);
                let sin = self.trig[p].sin.row(k);
                for j in 0..npts {
                    w[j] = cos[j] * samples[(k, j)];
                }
                prefix_integral(&w, h, &mut acc);
                cmom[k] = acc[npts - 1];
                for j in 0..npts {
                    w[j] = sin[j] * samples[(k, j)];
                }
                prefix_integral(&w, h, &mut acc);
                smom[k] = acc[npts - 1];
            }
        }
        (cmom, smom)
    }

    /// The Pauli–Jordan propagator applied to a sampled source field.
    pub fn pauli_jordan_from_field(&self, field: &GridField) -> SolutionForm {
        let make = |tracks: &Option<Tracks>, deg: usize| {
            tracks.as_ref().map(|t| {
                let lam = self.basis.eigenvalues(deg);
                let (cmom, smom) = self.trig_moments_from_samples(deg, &t.u);
                let n = cmom.len();
                let mut a = DVector::zeros(n);
                let mut b = DVector::zeros(n);
                for k in 0..n {
                    if lam[k] == 0.0 {
                        a[k] = smom[k];
                        b[k] = -cmom[k];
                    } else {
                        a[k] = smom[k] / lam[k].sqrt();
                        b[k] = -cmom[k];
                    }
                }
                SolutionBlock { degree: deg, a, b }
            })
        };
        SolutionForm {
            degree: field.degree,
            dt: make(&field.dt, field.degree.saturating_sub(1)),
            spatial: make(&field.spatial, field.degree),
        }
    }

    /// The Pauli–Jordan propagator `Gf = (G₊ − G₋)f` as an exact homogeneous
    /// solution, from the trigonometric moments of `f`.
    pub fn pauli_jordan(&self, f: &ModalForm, quad_points: usize) -> SolutionForm {
        let make = |block: &Option<ModalBlock>| {
            block.as_ref().map(|b| {
                let lam = self.basis.eigenvalues(b.degree);
                let (cmom, smom) = self.trig_moments_block(b, quad_points);
                let n = cmom.len();
                let mut a = DVector::zeros(n);
                let mut bb = DVector::zeros(n);
                for k in 0..n {
                    if lam[k] == 0.0 {
                        a[k] = smom[k]; // ∫ s f ds
                        bb[k] = -cmom[k]; // −∫ f ds
                    } else {
                        a[k] = smom[k] / lam[k].sqrt();
                        bb[k] = -cmom[k];
                    }
                }
                SolutionBlock {
                    degree: b.degree,
                    a,
                    b: bb,
                }
            })
        };
        SolutionForm {
            degree: f.degree,
            dt: make(&f.dt),
            spatial: make(&f.spatial),
        }
    }

    /// Homogeneous evolution of Cauchy data given at `t = 0`.
    pub fn solve_cauchy(&self, data: &CauchyData) -> Result<SolutionForm> {
        let make = |block: &Option<BlockData>| -> Result<Option<SolutionBlock>> {
            match block {
                None => Ok(None),
                Some(bd) => {
                    let deg = bd.value.degree;
                    Ok(Some(SolutionBlock {
                        degree: deg,
                        a: self.basis.coefficients(deg, &bd.value.values)?,
                        b: self.basis.coefficients(deg, &bd.velocity.values)?,
                    }))
                }
            }
        };
        Ok(SolutionForm {
            degree: data.degree,
            dt: make(&data.dt)?,
            spatial: make(&data.spatial)?,
        })
    }

    /// Mode coefficients `(value, velocity)` of a solution block at time `t`.
    pub fn solution_coeffs_at(&self, block: &SolutionBlock, t: f64) -> (DVector<f64>, DVector<f64>) {
        let lam = self.basis.eigenvalues(block.degree);
        let n = block.a.len();
        let mut value = DVector::zeros(n);
        let mut velocity = DVector::zeros(n);
        for k in 0..n {
            if lam[k] == 0.0 {
                value[k] = block.a[k] + block.b[k] * t;
                velocity[k] = block.b[k];
            } else {
                let omega = lam[k].sqrt();
                let (s, c) = (omega * t).sin_cos();
                value[k] = block.a[k] * c + block.b[k] * s / omega;
                velocity[k] = -block.a[k] * omega * s + block.b[k] * c;
            }
        }
        (value, velocity)
    }

    /// Cauchy data of a solution at time `t`, in cell coordinates.
    pub fn solution_cauchy_at(&self, sol: &SolutionForm, t: f64) -> Result<CauchyData> {
        let make = |block: &Option<SolutionBlock>| -> Result<Option<BlockData>> {
            match block {
                None => Ok(None),
                Some(sb) => {
                    let (val, vel) = self.solution_coeffs_at(sb, t);
                    Ok(Some(BlockData {
                        value: SpatialForm {
                            degree: sb.degree,
                            values: self.basis.synthesize(sb.degree, &val)?,
                        },
                        velocity: SpatialForm {
                            degree: sb.degree,
                            values: self.basis.synthesize(sb.degree, &vel)?,
                        },
                    }))
                }
            }
        };
        Ok(CauchyData {
            degree: sol.degree,
            dt: make(&sol.dt)?,
            spatial: make(&sol.spatial)?,
        })
    }

    /// The classical symplectic form on Cauchy data,
    ///
    /// ```text
    /// σ(Ψ, Φ) = Σ_blocks s_b · (⟨ψ_b, φ̇_b⟩_Σ − ⟨ψ̇_b, φ_b⟩_Σ),
    /// ```
    ///
    /// with block signs `s = (+)` at degree 0 and `s = (−dt, +spatial)` at
    /// degree 1, so that `σ(Ψ^{Gf}, Ψ^{Gg}) = ⟨Gf, g⟩_M`.
    pub fn sigma(&self, x: &CauchyData, y: &CauchyData) -> Result<f64> {
        if x.degree != y.degree {
            return Err(Error::Config(format!(
                "symplectic form needs equal degrees, got {} and {}",
                x.degree, y.degree
            )));
        }
        let signs: &[(f64, bool)] = match x.degree {
            0 => &[(1.0, false)],
            1 => &[(-1.0, true), (1.0, false)],
            d => {
                return Err(Error::Config(format!(
                    "symplectic form implemented for degrees 0 and 1, got {d}"
                )))
            }
        };
        let mut total = 0.0;
        for &(sign, is_dt) in signs {
            let (xb, yb) = if is_dt {
                (x.dt.as_ref(), y.dt.as_ref())
            } else {
                (x.spatial.as_ref(), y.spatial.as_ref())
            };
            let (xb, yb) = match (xb, yb) {
                (Some(a), Some(b)) => (a, b),
                (None, None) => continue,
                _ => {
                    return Err(Error::Config(
                        "mismatched blocks in symplectic form".to_string(),
                    ))
                }
            };
            total += sign
                * (self.complex.inner(&xb.value, &yb.velocity)?
                    - self.complex.inner(&xb.velocity, &yb.value)?);
        }
        Ok(total)
    }

    /// The propagator pairing `E(f, g) = ⟨Gf, g⟩_M = σ(Ψ^{Gf}, Ψ^{Gg})`,
    /// evaluated directly from trigonometric moments: per mode
    /// `(C_g S_f − S_g C_f)/ω` on the dt block and the opposite sign on the
    /// spatial block (degree 1); kernel modes use `(I, T)` moments.
    pub fn propagator_pairing(&self, f: &ModalForm, g: &ModalForm, quad_points: usize) -> Result<f64> {
        if f.degree != g.degree {
            return Err(Error::Config(format!(
                "propagator pairing needs equal degrees, got {} and {}",
                f.degree, g.degree
            )));
        }
        let signs: &[(f64, BlockKind)] = match f.degree {
            0 => &[(1.0, BlockKind::Spatial)],
            1 => &[(-1.0, BlockKind::Dt), (1.0, BlockKind::Spatial)],
            d => {
                return Err(Error::Config(format!(
                    "propagator pairing implemented for degrees 0 and 1, got {d}"
                )))
            }
        };
        let mut total = 0.0;
        for &(sign, kind) in signs {
            let (fb, gb) = match (f.block(kind), g.block(kind)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let lam = self.basis.eigenvalues(fb.degree);
            let (cf, sf) = self.trig_moments_block(fb, quad_points);
            let (cg, sg) = self.trig_moments_block(gb, quad_points);
            let mut block_sum = 0.0;
            for k in 0..cf.len() {
                if lam[k] == 0.0 {
                    // (I_f T_g − T_f I_g)
                    block_sum += cf[k] * sg[k] - sf[k] * cg[k];
                } else {
                    block_sum += (cf[k] * sg[k] - sf[k] * cg[k]) / lam[k].sqrt();
                }
            }
            total += sign * block_sum;
        }
        Ok(total)
    }

    /// Lorentzian pairing `⟨sol, g⟩_M` of a homogeneous solution against a
    /// test form, from the moments of `g` (signature signs `(+dt, −sp)` at
    /// degree 1, `+` at degree 0).
    pub fn solution_pairing(&self, sol: &SolutionForm, g: &ModalForm, quad_points: usize) -> Result<f64> {
        if sol.degree != g.degree {
            return Err(Error::Config(format!(
                "solution pairing needs equal degrees, got {} and {}",
                sol.degree, g.degree
            )));
        }
        let signs: &[(f64, BlockKind)] = match g.degree {
            0 => &[(1.0, BlockKind::Spatial)],
            1 => &[(1.0, BlockKind::Dt), (-1.0, BlockKind::Spatial)],
            d => {
                return Err(Error::Config(format!(
                    "solution pairing implemented for degrees 0 and 1, got {d}"
                )))
            }
        };
        let mut total = 0.0;
        for &(sign, kind) in signs {
            let (sb, gb) = match (sol.block(kind), g.block(kind)) {
                (Some(a), Some(b)) => (a, b),
                (None, None) => continue,
                _ => {
                    return Err(Error::Config(
                        "mismatched blocks in solution pairing".to_string(),
                    ))
                }
            };
            let lam = self.basis.eigenvalues(gb.degree);
            let (cg, sg) = self.trig_moments_block(gb, quad_points);
            let mut block_sum = 0.0;
            for k in 0..cg.len() {
                if lam[k] == 0.0 {
                    block_sum += sb.a[k] * cg[k] + sb.b[k] * sg[k];
                } else {
                    block_sum += sb.a[k] * cg[k] + sb.b[k] * sg[k] / lam[k].sqrt();
                }
            }
            total += sign * block_sum;
        }
        Ok(total)
    }

    /// Interior five-point finite-difference evaluation of `□` on a block's
    /// value track: returns `(−FD²(u) − λ u, valid column range)`.  This is
    /// the independent oracle used to validate exactly constructed fields.
    pub fn fd_box(&self, p: usize, u: &DMatrix<f64>) -> (DMatrix<f64>, std::ops::Range<usize>) {
        let lam = self.basis.eigenvalues(p);
        let h = self.grid.super_step();
        let npts = u.ncols();
        let mut out = DMatrix::zeros(u.nrows(), npts);
        let c = 1.0 / (12.0 * h * h);
        for k in 0..u.nrows() {
            for j in 2..npts.saturating_sub(2) {
                let dd = c
                    * (-u[(k, j - 2)] + 16.0 * u[(k, j - 1)] - 30.0 * u[(k, j)]
                        + 16.0 * u[(k, j + 1)]
                        - u[(k, j + 2)]);
                out[(k, j)] = -dd - lam[k] * u[(k, j)];
            }
        }
        (out, 2..npts.saturating_sub(2))
    }

    /// Time-slice reduction of a test form `f`: produces `g` supported in
    /// the slice defined by `step`'s transition interval and `h` with
    /// `□h = f − g`.
    ///
    /// The interpolating cutoffs are `η₊ = cos θ`, `η₋ = sin θ` with
    /// `θ = (π/2)·step`, so `η₊² + η₋² = 1`, `η₊ = 1` in the past of the
    /// slice and `η₋ = 1` in its future.
    ///
    /// * [`TimesliceVariant::Generic`]: `h = η₊² G₊f + η₋² G₋f`; then
    ///   `g = (η₊²)″ w + 2(η₊²)′ ẇ` with the Pauli–Jordan field `w`.
    /// * [`TimesliceVariant::Closed`] (requires `df = 0`, degree 1):
    ///   `h = dχ` with the iterated scalar potential
    ///   `χ = Σ_± η± G±⁰(η± G±⁰ δf)`, so the reduction stays inside the
    ///   space of exact correctors.
    /// * [`TimesliceVariant::CoClosed`] (requires `δf = 0`, degree 1):
    ///   the mirror construction `h = δχ₂`, `χ₂ = Σ_± η± G±²(η± G±² df)`.
    pub fn timeslice_reduce(
        &self,
        f: &SpacetimeForm,
        step: &SmoothStep,
        variant: TimesliceVariant,
    ) -> Result<TimesliceOutput> {
        let modal = self.modal(f)?;
        let (u0, u1) = step.interval();
        if !self.grid.contains(u0, u1) {
            return Err(Error::Config(
                "slice interval must lie inside the time window".to_string(),
            ));
        }

        // Trivial localization: f already lives in the slice.
        if let Some((a, b)) = f.time_support() {
            if u0 <= a && b <= u1 {
                let tracks = |blk: &Option<ModalBlock>| {
                    blk.as_ref().map(|b| Tracks {
                        u: b.samples(&self.times),
                        v: Some(b.derivative_samples(&self.times)),
                    })
                };
                let zero = |blk: &Option<ModalBlock>| {
                    blk.as_ref().map(|b| Tracks {
                        u: DMatrix::zeros(b.coeffs.nrows(), self.times.len()),
                        v: Some(DMatrix::zeros(b.coeffs.nrows(), self.times.len())),
                    })
                };
                return Ok(TimesliceOutput {
                    g: GridField {
                        degree: f.degree(),
                        dt: tracks(&modal.dt),
                        spatial: tracks(&modal.spatial),
                    },
                    h: GridField {
                        degree: f.degree(),
                        dt: zero(&modal.dt),
                        spatial: zero(&modal.spatial),
                    },
                    trivial: true,
                });
            }
        }

        match variant {
            TimesliceVariant::Generic => self.timeslice_generic(&modal, step),
            TimesliceVariant::Closed => {
                if f.degree() != 1 {
                    return Err(Error::Config(
                        "closed-variant reduction expects a 1-form".to_string(),
                    ));
                }
                let phi = f.delta(self.complex)?;
                self.timeslice_potential(&modal, &self.modal(&phi)?, step, true)
            }
            TimesliceVariant::CoClosed => {
                if f.degree() != 1 {
                    return Err(Error::Config(
                        "co-closed-variant reduction expects a 1-form".to_string(),
                    ));
                }
                let psi = f.d(self.complex)?;
                self.timeslice_potential(&modal, &self.modal(&psi)?, step, false)
            }
        }
    }

    fn timeslice_generic(&self, modal: &ModalForm, step: &SmoothStep) -> Result<TimesliceOutput> {
        // Squared-cutoff jets: q = η₊² = cos²θ = (1 + cos(πg))/2, and
        // η₋² = 1 − q, so only q's jets are needed.
        let q: Vec<[f64; 4]> = self
            .times
            .iter()
            .map(|&t| {
                let (g, g1, g2, g3) = step.jet3(t);
                let phi = [std::f64::consts::PI * g, std::f64::consts::PI * g1,
                    std::f64::consts::PI * g2, std::f64::consts::PI * g3];
                let c = cos_jet3(phi);
                [(1.0 + c[0]) / 2.0, c[1] / 2.0, c[2] / 2.0, c[3] / 2.0]
            })
            .collect();

        let reduce_block = |blk: &Option<ModalBlock>| -> Option<(Tracks, Tracks)> {
            blk.as_ref().map(|b| {
                let samples = b.samples(&self.times);
                let plus = self.green_from_samples(b.degree, &samples, Direction::Retarded);
                let minus = self.green_from_samples(b.degree, &samples, Direction::Advanced);
                let (up, vp) = (&plus.u, plus.v.as_ref().unwrap());
                let (um, vm) = (&minus.u, minus.v.as_ref().unwrap());
                let lam = self.basis.eigenvalues(b.degree);
                let n = up.nrows();
                let npts = up.ncols();
                let mut uh = DMatrix::zeros(n, npts);
                let mut vh = DMatrix::zeros(n, npts);
                let mut ug = DMatrix::zeros(n, npts);
                let mut vg = DMatrix::zeros(n, npts);
                for k in 0..n {
                    for j in 0..npts {
                        let [q0, q1, q2, q3] = q[j];
                        let w = up[(k, j)] - um[(k, j)];
                        let wd = vp[(k, j)] - vm[(k, j)];
                        uh[(k, j)] = q0 * up[(k, j)] + (1.0 - q0) * um[(k, j)];
                        vh[(k, j)] = q1 * w + q0 * vp[(k, j)] + (1.0 - q0) * vm[(k, j)];
                        ug[(k, j)] = q2 * w + 2.0 * q1 * wd;
                        // ẇ̈ = −λw on the homogeneous difference track.
                        vg[(k, j)] = q3 * w + 3.0 * q2 * wd - 2.0 * q1 * lam[k] * w;
                    }
                }
                (
                    Tracks { u: ug, v: Some(vg) },
                    Tracks { u: uh, v: Some(vh) },
                )
            })
        };

        let dt = reduce_block(&modal.dt);
        let spatial = reduce_block(&modal.spatial);
        let (g_dt, h_dt) = dt.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        let (g_sp, h_sp) = spatial.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        Ok(TimesliceOutput {
            g: GridField {
                degree: modal.degree,
                dt: g_dt,
                spatial: g_sp,
            },
            h: GridField {
                degree: modal.degree,
                dt: h_dt,
                spatial: h_sp,
            },
            trivial: false,
        })
    }

    /// Shared implementation of the closed (`exact = true`, scalar potential,
    /// `h = dχ`) and co-closed (`exact = false`, 2-form potential, `h = δχ₂`)
    /// reductions.  `pot` is `δf` resp. `df` in mode space.
    fn timeslice_potential(
        &self,
        modal: &ModalForm,
        pot: &ModalForm,
        step: &SmoothStep,
        exact: bool,
    ) -> Result<TimesliceOutput> {
        // Cutoff jets η₊ = cos θ, η₋ = sin θ, θ = (π/2) g.
        let half_pi = std::f64::consts::FRAC_PI_2;
        let (mut eplus, mut eminus) = (Vec::new(), Vec::new());
        for &t in &self.times {
            let (g, g1, g2, g3) = step.jet3(t);
            let theta = [half_pi * g, half_pi * g1, half_pi * g2, half_pi * g3];
            eplus.push(cos_jet3(theta));
            eminus.push(sin_jet3(theta));
        }

        // χ jets per potential block: χ = Σ± η± G±(η± G± pot).
        let chi_block = |b: &ModalBlock| -> ChiJets {
            let lam = self.basis.eigenvalues(b.degree).clone_owned();
            let samples = b.samples(&self.times);
            let n = samples.nrows();
            let npts = samples.ncols();
            let mut chi = ChiJets {
                c0: DMatrix::zeros(n, npts),
                c1: DMatrix::zeros(n, npts),
                c2: DMatrix::zeros(n, npts),
                c3: DMatrix::zeros(n, npts),
            };
            for (dir, eta) in [
                (Direction::Retarded, &eplus),
                (Direction::Advanced, &eminus),
            ] {
                let x = self.green_from_samples(b.degree, &samples, dir);
                let (ux, vx) = (&x.u, x.v.as_ref().unwrap());
                // Windowed source w = η·x.
                let mut w = DMatrix::zeros(n, npts);
                for k in 0..n {
                    for j in 0..npts {
                        w[(k, j)] = eta[j][0] * ux[(k, j)];
                    }
                }
                let y = self.green_from_samples(b.degree, &w, dir);
                let (uy, vy) = (&y.u, y.v.as_ref().unwrap());
                for k in 0..n {
                    let l = lam[k];
                    for j in 0..npts {
                        let e = eta[j];
                        let (uyk, vyk) = (uy[(k, j)], vy[(k, j)]);
                        // ÿ = −λy − w, ẏ‴… via ẇ = η′x + ηẋ.
                        let ay = -l * uyk - w[(k, j)];
                        let wd = e[1] * ux[(k, j)] + e[0] * vx[(k, j)];
                        let jy = -l * vyk - wd;
                        chi.c0[(k, j)] += e[0] * uyk;
                        chi.c1[(k, j)] += e[1] * uyk + e[0] * vyk;
                        chi.c2[(k, j)] += e[2] * uyk + 2.0 * e[1] * vyk + e[0] * ay;
                        chi.c3[(k, j)] +=
                            e[3] * uyk + 3.0 * e[2] * vyk + 3.0 * e[1] * ay + e[0] * jy;
                    }
                }
            }
            chi
        };

        let f_dt = modal
            .dt
            .as_ref()
            .ok_or_else(|| Error::Numerical("missing dt block".to_string()))?;
        let f_sp = modal
            .spatial
            .as_ref()
            .ok_or_else(|| Error::Numerical("missing spatial block".to_string()))?;
        let f_dt_samples = f_dt.samples(&self.times);
        let f_sp_samples = f_sp.samples(&self.times);
        let lam0 = self.basis.eigenvalues(0);
        let lam1 = self.basis.eigenvalues(1);

        if exact {
            // χ scalar; h = dχ: dt block χ̇, spatial block T·χ.
            let pot_block = pot
                .spatial
                .as_ref()
                .ok_or_else(|| Error::Numerical("missing potential block".to_string()))?;
            let chi = chi_block(pot_block);
            let t01 = self.d_map(0);

            let h_dt = Tracks {
                u: chi.c1.clone(),
                v: Some(chi.c2.clone()),
            };
            let h_sp = Tracks {
                u: t01 * &chi.c0,
                v: Some(t01 * &chi.c1),
            };
            // □h: dt block −χ‴ − λ⁰ χ̇ ; spatial block T(−χ̈) − λ¹ ∘ Tχ.
            let mut g_dt = f_dt_samples;
            for k in 0..g_dt.nrows() {
                for j in 0..g_dt.ncols() {
                    g_dt[(k, j)] -= -chi.c3[(k, j)] - lam0[k] * chi.c1[(k, j)];
                }
            }
            let t_chi0 = t01 * &chi.c0;
            let t_chi2 = t01 * &chi.c2;
            let mut g_sp = f_sp_samples;
            for k in 0..g_sp.nrows() {
                for j in 0..g_sp.ncols() {
                    g_sp[(k, j)] -= -t_chi2[(k, j)] - lam1[k] * t_chi0[(k, j)];
                }
            }
            Ok(TimesliceOutput {
                g: GridField {
                    degree: 1,
                    dt: Some(Tracks { u: g_dt, v: None }),
                    spatial: Some(Tracks { u: g_sp, v: None }),
                },
                h: GridField {
                    degree: 1,
                    dt: Some(h_dt),
                    spatial: Some(h_sp),
                },
                trivial: false,
            })
        } else {
            // χ₂ is a 2-form field with blocks α (dt, degree 1) and β
            // (spatial, degree 2); h = δχ₂ = dt∧(δ_Σα) + (−α̇ − δ_Σβ).
            let pot_dt = pot
                .dt
                .as_ref()
                .ok_or_else(|| Error::Numerical("missing potential dt block".to_string()))?;
            let pot_sp = pot
                .spatial
                .as_ref()
                .ok_or_else(|| Error::Numerical("missing potential spatial block".to_string()))?;
            let alpha = chi_block(pot_dt);
            let beta = chi_block(pot_sp);
            let s10 = self.delta_map(1);
            let s21 = self.delta_map(2);
            let lam2 = self.basis.eigenvalues(2);

            let h_dt = Tracks {
                u: &s10 * &alpha.c0,
                v: Some(&s10 * &alpha.c1),
            };
            let h_sp = Tracks {
                u: -&alpha.c1 - &s21 * &beta.c0,
                v: Some(-&alpha.c2 - &s21 * &beta.c1),
            };
            // □χ₂ blockwise, then δ of it.
            let mut wa = DMatrix::zeros(alpha.c0.nrows(), alpha.c0.ncols());
            let mut wa_dot = wa.clone();
            for k in 0..wa.nrows() {
                for j in 0..wa.ncols() {
                    wa[(k, j)] = -alpha.c2[(k, j)] - lam1[k] * alpha.c0[(k, j)];
                    wa_dot[(k, j)] = -alpha.c3[(k, j)] - lam1[k] * alpha.c1[(k, j)];
                }
            }
            let mut wb = DMatrix::zeros(beta.c0.nrows(), beta.c0.ncols());
            for k in 0..wb.nrows() {
                for j in 0..wb.ncols() {
                    wb[(k, j)] = -beta.c2[(k, j)] - lam2[k] * beta.c0[(k, j)];
                }
            }
            let box_h_dt = &s10 * &wa;
            let box_h_sp = -wa_dot - &s21 * &wb;
            let g_dt = f_dt_samples - box_h_dt;
            let g_sp = f_sp_samples - box_h_sp;
            Ok(TimesliceOutput {
                g: GridField {
                    degree: 1,
                    dt: Some(Tracks { u: g_dt, v: None }),
                    spatial: Some(Tracks { u: g_sp, v: None }),
                },
                h: GridField {
                    degree: 1,
                    dt: Some(h_dt),
                    spatial: Some(h_sp),
                },
                trivial: false,
            })
        }
    }
}

struct ChiJets {
    c0: DMatrix<f64>,
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    c3: DMatrix<f64>,
}

/// Jets of `cos(φ(t))` from jets of `φ`.
fn cos_jet3(p: [f64; 4]) -> [f64; 4] {
    let (s, c) = p[0].sin_cos();
    [
        c,
        -s * p[1],
        -s * p[2] - c * p[1] * p[1],
        -s * p[3] - 3.0 * c * p[1] * p[2] + s * p[1] * p[1] * p[1],
    ]
}

/// Jets of `sin(φ(t))` from jets of `φ`.
fn sin_jet3(p: [f64; 4]) -> [f64; 4] {
    let (s, c) = p[0].sin_cos();
    [
        s,
        c * p[1],
        c * p[2] - s * p[1] * p[1],
        c * p[3] - 3.0 * s * p[1] * p[2] - c * p[1] * p[1] * p[1],
    ]
}
