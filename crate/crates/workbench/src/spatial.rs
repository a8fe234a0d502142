//! Discrete exterior calculus on a flat torus Σ = ℝᵐ/Λ, m ∈ {1, 2}.
//!
//! The torus is discretized as a periodic cubical complex with `divisions`
//! cells per axis.  A `p`-cochain stores the integral of a smooth `p`-form
//! over each `p`-cell (vertices carry point values, edges carry line
//! integrals, plaquettes carry surface integrals), so the exterior
//! derivative `d` is the integer incidence operator given by Stokes'
//! theorem and satisfies d∘d = 0 *exactly* in floating point.
//!
//! The L² structure is carried by diagonal mass matrices `M_p` that convert
//! cell integrals back into Riemann sums of pointwise inner products:
//!
//! * vertices: `h_x·h_y` (resp. `h` in one dimension),
//! * x-edges: `h_y/h_x`, y-edges: `h_x/h_y` (resp. `1/h`),
//! * plaquettes: `1/(h_x·h_y)`.
//!
//! The codifferential is the L²-adjoint `δ_p = M_{p−1}⁻¹ d_{p−1}ᵀ M_p`, and
//! the Hodge Laplacian `Δ_p = d_{p−1} δ_p + δ_{p+1} d_p` is self-adjoint and
//! positive semidefinite with kernel of dimension equal to the Betti number
//! `b_p` of the torus.  [`EigenBasis`] diagonalizes every `Δ_p` in an
//! M-orthonormal basis; real spectral powers `Δ^s` (used throughout the
//! quantization pipeline, e.g. `Δ^{±1/4}`) act mode-by-mode.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative threshold separating the harmonic kernel of a Laplacian from its
/// nonzero spectrum: eigenvalues at or below `KERNEL_REL · λ_max` are treated
/// as exact zeros.
pub const KERNEL_REL: f64 = 1e-8;

/// A real `p`-cochain on a [`SpatialComplex`] ("spatial form" for short).
///
/// `values[i]` is the integral of the represented smooth form over the `i`-th
/// `p`-cell, in the cell ordering fixed by the complex.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpatialForm {
    /// Cochain degree `p` (0 = vertices, 1 = edges, 2 = plaquettes).
    pub degree: usize,
    /// One entry per `p`-cell.
    pub values: DVector<f64>,
}

impl SpatialForm {
    /// Builds a form after checking that `values` has one entry per `p`-cell.
    pub fn new(complex: &SpatialComplex, degree: usize, values: DVector<f64>) -> Result<Self> {
        complex.check_degree(degree)?;
        if values.len() != complex.n_cells(degree) {
            return Err(Error::Config(format!(
                "degree-{degree} form needs {} entries, got {}",
                complex.n_cells(degree),
                values.len()
            )));
        }
        Ok(Self { degree, values })
    }
}

/// Flat-torus cochain complex with its metric (mass) structure.
#[derive(Clone, Debug)]
pub struct SpatialComplex {
    dimension: usize,
    divisions: usize,
    edge_lengths: Vec<f64>,
    spacing: Vec<f64>,
    /// Number of `p`-cells, indexed by degree `p = 0..=dimension`.
    cells: Vec<usize>,
    /// Integer incidence matrices; `incidence[p]` is `d_p : Ωᵖ → Ωᵖ⁺¹`.
    incidence: Vec<DMatrix<f64>>,
    /// Diagonals of the mass matrices `M_p`.
    mass: Vec<DVector<f64>>,
}

impl SpatialComplex {
    /// Builds the periodic cubical complex of the flat torus with
    /// `divisions` cells along each axis and total axis lengths
    /// `edge_lengths` (one entry per axis).
    ///
    /// Requires `dimension ∈ {1, 2}`, `divisions ≥ 3` (so that the
    /// nearest-neighbour stencils do not degenerate) and positive lengths.
    pub fn flat_torus(dimension: usize, divisions: usize, edge_lengths: &[f64]) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::Config(format!(
                "spatial dimension must be 1 or 2, got {dimension}"
            )));
        }
        if divisions < 3 {
            return Err(Error::Config(format!(
                "need at least 3 divisions per axis, got {divisions}"
            )));
        }
        if edge_lengths.len() != dimension {
            return Err(Error::Config(format!(
                "expected {dimension} edge length(s), got {}",
                edge_lengths.len()
            )));
        }
        if edge_lengths.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::Config(format!(
                "edge lengths must be positive and finite, got {edge_lengths:?}"
            )));
        }

        let n = divisions;
        let spacing: Vec<f64> = edge_lengths.iter().map(|l| l / n as f64).collect();

        let (cells, incidence, mass) = match dimension {
            1 => {
                let h = spacing[0];
                let cells = vec![n, n];
                // d₀: (d a)_i = a_{i+1} − a_i on the periodic chain.
                let mut d0 = DMatrix::zeros(n, n);
                for i in 0..n {
                    d0[(i, (i + 1) % n)] += 1.0;
                    d0[(i, i)] -= 1.0;
                }
                let mass = vec![
                    DVector::from_element(n, h),
                    DVector::from_element(n, 1.0 / h),
                ];
                (cells, vec![d0], mass)
            }
            2 => {
                let (hx, hy) = (spacing[0], spacing[1]);
                let nv = n * n;
                let cells = vec![nv, 2 * nv, nv];
                let vid = |ix: usize, iy: usize| (ix % n) + n * (iy % n);
                // Edge ordering: all x-edges first (x-edge `vid(ix,iy)` runs
                // from vertex (ix,iy) to (ix+1,iy)), then all y-edges.
                let xe = |ix: usize, iy: usize| vid(ix, iy);
                let ye = |ix: usize, iy: usize| nv + vid(ix, iy);

                let mut d0 = DMatrix::zeros(2 * nv, nv);
                for iy in 0..n {
                    for ix in 0..n {
                        d0[(xe(ix, iy), vid(ix + 1, iy))] += 1.0;
                        d0[(xe(ix, iy), vid(ix, iy))] -= 1.0;
                        d0[(ye(ix, iy), vid(ix, iy + 1))] += 1.0;
                        d0[(ye(ix, iy), vid(ix, iy))] -= 1.0;
                    }
                }
                // Plaquette `vid(ix,iy)` is bounded counterclockwise by
                // x-edge(ix,iy), y-edge(ix+1,iy), −x-edge(ix,iy+1),
                // −y-edge(ix,iy).
                let mut d1 = DMatrix::zeros(nv, 2 * nv);
                for iy in 0..n {
                    for ix in 0..n {
                        let p = vid(ix, iy);
                        d1[(p, xe(ix, iy))] += 1.0;
                        d1[(p, ye(ix + 1, iy))] += 1.0;
                        d1[(p, xe(ix, iy + 1))] -= 1.0;
                        d1[(p, ye(ix, iy))] -= 1.0;
                    }
                }

                let mut edge_mass = DVector::zeros(2 * nv);
                for i in 0..nv {
                    edge_mass[i] = hy / hx;
                    edge_mass[nv + i] = hx / hy;
                }
                let mass = vec![
                    DVector::from_element(nv, hx * hy),
                    edge_mass,
                    DVector::from_element(nv, 1.0 / (hx * hy)),
                ];
                (cells, vec![d0, d1], mass)
            }
            _ => unreachable!(),
        };

        Ok(Self {
            dimension,
            divisions,
            edge_lengths: edge_lengths.to_vec(),
            spacing,
            cells,
            incidence,
            mass,
        })
    }

    /// Spatial dimension m of the torus.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of cells along each axis.
    pub fn divisions(&self) -> usize {
        self.divisions
    }

    /// Total length of the torus along `axis`.
    pub fn edge_length(&self, axis: usize) -> f64 {
        self.edge_lengths[axis]
    }

    /// Grid spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    /// Number of `p`-cells.
    pub fn n_cells(&self, p: usize) -> usize {
        self.cells[p]
    }

    /// Diagonal of the mass matrix `M_p`.
    pub fn mass(&self, p: usize) -> &DVector<f64> {
        &self.mass[p]
    }

    /// Incidence matrix `d_p` for `p < dimension`.
    pub fn incidence(&self, p: usize) -> Option<&DMatrix<f64>> {
        self.incidence.get(p)
    }

    fn check_degree(&self, p: usize) -> Result<()> {
        if p > self.dimension {
            return Err(Error::Config(format!(
                "degree {p} exceeds the top degree {}",
                self.dimension
            )));
        }
        Ok(())
    }

    fn check_cochain(&self, p: usize, v: &DVector<f64>) -> Result<()> {
        self.check_degree(p)?;
        if v.len() != self.cells[p] {
            return Err(Error::Config(format!(
                "degree-{p} cochain needs {} entries, got {}",
                self.cells[p],
                v.len()
            )));
        }
        Ok(())
    }

    /// Exterior derivative on raw coefficient vectors: `d_p v`, `p < dim`.
    pub fn d_on(&self, p: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_cochain(p, v)?;
        if p >= self.dimension {
            return Err(Error::Config(format!(
                "no exterior derivative out of top degree {p}"
            )));
        }
        Ok(&self.incidence[p] * v)
    }

    /// Codifferential on raw coefficient vectors: `δ_p v = M_{p−1}⁻¹ d_{p−1}ᵀ M_p v`,
    /// `1 ≤ p ≤ dim`.
    pub fn delta_on(&self, p: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_cochain(p, v)?;
        if p == 0 {
            return Err(Error::Config(
                "no codifferential out of degree 0".to_string(),
            ));
        }
        let weighted = v.component_mul(&self.mass[p]);
        let mut out = self.incidence[p - 1].tr_mul(&weighted);
        out.component_div_assign(&self.mass[p - 1]);
        Ok(out)
    }

    /// Hodge Laplacian `Δ_p v = (d_{p−1} δ_p + δ_{p+1} d_p) v` (terms outside
    /// the degree range are omitted).
    pub fn laplacian_on(&self, p: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_cochain(p, v)?;
        let mut out = DVector::zeros(v.len());
        if p > 0 {
            out += self.d_on(p - 1, &self.delta_on(p, v)?)?;
        }
        if p < self.dimension {
            out += self.delta_on(p + 1, &self.d_on(p, v)?)?;
        }
        Ok(out)
    }

    /// L² inner product `⟨a, b⟩_p = aᵀ M_p b`.
    pub fn inner_on(&self, p: usize, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        self.check_cochain(p, a)?;
        self.check_cochain(p, b)?;
        Ok(a.component_mul(&self.mass[p]).dot(b))
    }

    /// L² norm of a `p`-cochain.
    pub fn norm_on(&self, p: usize, a: &DVector<f64>) -> Result<f64> {
        Ok(self.inner_on(p, a, a)?.max(0.0).sqrt())
    }

    /// Exterior derivative of a [`SpatialForm`].
    pub fn d(&self, f: &SpatialForm) -> Result<SpatialForm> {
        Ok(SpatialForm {
            degree: f.degree + 1,
            values: self.d_on(f.degree, &f.values)?,
        })
    }

    /// Codifferential of a [`SpatialForm`].
    pub fn delta(&self, f: &SpatialForm) -> Result<SpatialForm> {
        Ok(SpatialForm {
            degree: f.degree - 1,
            values: self.delta_on(f.degree, &f.values)?,
        })
    }

    /// Hodge Laplacian of a [`SpatialForm`].
    pub fn laplacian(&self, f: &SpatialForm) -> Result<SpatialForm> {
        Ok(SpatialForm {
            degree: f.degree,
            values: self.laplacian_on(f.degree, &f.values)?,
        })
    }

    /// L² inner product of two forms of equal degree.
    pub fn inner(&self, a: &SpatialForm, b: &SpatialForm) -> Result<f64> {
        if a.degree != b.degree {
            return Err(Error::Config(format!(
                "inner product needs equal degrees, got {} and {}",
                a.degree, b.degree
            )));
        }
        self.inner_on(a.degree, &a.values, &b.values)
    }

    /// L² norm of a form.
    pub fn norm(&self, a: &SpatialForm) -> Result<f64> {
        self.norm_on(a.degree, &a.values)
    }

    /// Dense matrix of `Δ_p`, assembled from the incidence and mass data.
    pub fn laplacian_matrix(&self, p: usize) -> Result<DMatrix<f64>> {
        self.check_degree(p)?;
        let np = self.cells[p];
        let mut lap = DMatrix::zeros(np, np);
        if p < self.dimension {
            // δ_{p+1} d_p = M_p⁻¹ d_pᵀ M_{p+1} d_p
            let d = &self.incidence[p];
            let mut up = d.transpose();
            scale_columns(&mut up, &self.mass[p + 1]);
            let mut up = up * d;
            scale_rows_inv(&mut up, &self.mass[p]);
            lap += up;
        }
        if p > 0 {
            // d_{p−1} δ_p = d_{p−1} M_{p−1}⁻¹ d_{p−1}ᵀ M_p
            let d = &self.incidence[p - 1];
            let mut dt = d.transpose();
            scale_rows_inv(&mut dt, &self.mass[p - 1]);
            let mut down = d * dt;
            scale_columns(&mut down, &self.mass[p]);
            lap += down;
        }
        Ok(lap)
    }
}

fn scale_rows_inv(m: &mut DMatrix<f64>, diag: &DVector<f64>) {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row /= diag[i];
    }
}

fn scale_columns(m: &mut DMatrix<f64>, diag: &DVector<f64>) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= diag[j];
    }
}

/// M-orthonormal eigenbases of all the Hodge Laplacians of a complex.
///
/// Each `Δ_p` is similar to the symmetric matrix `M_p^{1/2} Δ_p M_p^{−1/2}`,
/// which is diagonalized with a dense symmetric eigensolver; eigenvectors are
/// mapped back through `M_p^{−1/2}`, making the stored mode columns
/// orthonormal in the L² (mass) inner product.  Eigenvalues are sorted
/// ascending and those at or below the kernel tolerance are clamped to zero,
/// so kernel modes always occupy the leading columns.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    eigenvalues: Vec<DVector<f64>>,
    modes: Vec<DMatrix<f64>>,
    mass: Vec<DVector<f64>>,
    kernel_dims: Vec<usize>,
    kernel_tolerances: Vec<f64>,
    dimension: usize,
}

impl EigenBasis {
    /// Diagonalizes `Δ_p` for every degree of the complex.
    pub fn analyze(complex: &SpatialComplex) -> Result<Self> {
        let mut eigenvalues = Vec::new();
        let mut modes = Vec::new();
        let mut kernel_dims = Vec::new();
        let mut kernel_tolerances = Vec::new();

        for p in 0..=complex.dimension() {
            let mass = &complex.mass[p];
            let sqrt_m = mass.map(f64::sqrt);
            let lap = complex.laplacian_matrix(p)?;

            // S = M^{1/2} Δ M^{−1/2}, symmetrized against round-off.
            let mut s = lap;
            scale_rows(&mut s, &sqrt_m);
            scale_columns_inv(&mut s, &sqrt_m);
            let s = (&s + s.transpose()) * 0.5;

            let eig = s.symmetric_eigen();
            let np = complex.n_cells(p);
            let mut order: Vec<usize> = (0..np).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

            let lambda_max = order
                .last()
                .map(|&i| eig.eigenvalues[i].max(0.0))
                .unwrap_or(0.0);
            let tol = if lambda_max > 0.0 {
                KERNEL_REL * lambda_max
            } else {
                KERNEL_REL
            };

            let mut vals = DVector::zeros(np);
            let mut vecs = DMatrix::zeros(np, np);
            let mut kernel = 0;
            for (k, &i) in order.iter().enumerate() {
                let lambda = eig.eigenvalues[i];
                vals[k] = if lambda.abs() <= tol {
                    kernel += 1;
                    0.0
                } else if lambda < 0.0 {
                    return Err(Error::Numerical(format!(
                        "degree-{p} Laplacian produced a significantly negative \
                         eigenvalue {lambda:.3e}"
                    )));
                } else {
                    lambda
                };
                // Map w back through M^{−1/2}: columns become M-orthonormal.
                let w = eig.eigenvectors.column(i);
                for r in 0..np {
                    vecs[(r, k)] = w[r] / sqrt_m[r];
                }
            }

            eigenvalues.push(vals);
            modes.push(vecs);
            kernel_dims.push(kernel);
            kernel_tolerances.push(tol);
        }

        Ok(Self {
            eigenvalues,
            modes,
            mass: complex.mass.clone(),
            kernel_dims,
            kernel_tolerances,
            dimension: complex.dimension(),
        })
    }

    fn check_degree(&self, p: usize) -> Result<()> {
        if p > self.dimension {
            return Err(Error::Config(format!(
                "degree {p} exceeds the top degree {}",
                self.dimension
            )));
        }
        Ok(())
    }

    /// Eigenvalues of `Δ_p`, ascending; kernel entries are exact zeros.
    pub fn eigenvalues(&self, p: usize) -> &DVector<f64> {
        &self.eigenvalues[p]
    }

    /// M-orthonormal eigenvector columns of `Δ_p`, matching [`Self::eigenvalues`].
    pub fn modes(&self, p: usize) -> &DMatrix<f64> {
        &self.modes[p]
    }

    /// Dimension of the numerical kernel (harmonic space) of `Δ_p`.
    pub fn kernel_dim(&self, p: usize) -> usize {
        self.kernel_dims[p]
    }

    /// Absolute eigenvalue threshold below which a degree-`p` mode counts as
    /// harmonic.
    pub fn kernel_tolerance(&self, p: usize) -> f64 {
        self.kernel_tolerances[p]
    }

    /// Expansion coefficients `c = Vᵀ M v` of a cochain in the eigenbasis.
    pub fn coefficients(&self, p: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_degree(p)?;
        if v.len() != self.mass[p].len() {
            return Err(Error::Config(format!(
                "degree-{p} cochain needs {} entries, got {}",
                self.mass[p].len(),
                v.len()
            )));
        }
        Ok(self.modes[p].tr_mul(&v.component_mul(&self.mass[p])))
    }

    /// Reassembles a cochain `v = V c` from eigenbasis coefficients.
    pub fn synthesize(&self, p: usize, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_degree(p)?;
        if coeffs.len() != self.modes[p].ncols() {
            return Err(Error::Config(format!(
                "degree-{p} coefficient vector needs {} entries, got {}",
                self.modes[p].ncols(),
                coeffs.len()
            )));
        }
        Ok(&self.modes[p] * coeffs)
    }

    /// L²-orthogonal projection onto the harmonic space ker Δ_p.
    pub fn harmonic_projection(&self, p: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        let c = self.coefficients(p, v)?;
        let mut ch = DVector::zeros(c.len());
        ch.rows_mut(0, self.kernel_dims[p])
            .copy_from(&c.rows(0, self.kernel_dims[p]));
        self.synthesize(p, &ch)
    }

    /// Real spectral power `Δ_p^s v`.
    ///
    /// * `s = 0` is the exact identity (harmonic content passes through).
    /// * `s > 0` annihilates the harmonic component, consistent with
    ///   `λ^s → 0` as `λ → 0⁺`.
    /// * `s < 0` requires the harmonic component of `v` to vanish up to the
    ///   kernel tolerance; otherwise the power is undefined and a domain
    ///   error is returned.
    pub fn spectral_power(&self, p: usize, s: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if s == 0.0 {
            self.check_degree(p)?;
            return Ok(v.clone());
        }
        let mut c = self.coefficients(p, v)?;
        let kernel = self.kernel_dims[p];
        if s < 0.0 {
            let harm: f64 = c.rows(0, kernel).norm();
            let scale = c.norm().max(1.0);
            if harm > self.kernel_tolerances[p] * scale {
                return Err(Error::Domain(format!(
                    "negative spectral power Δ^{s} applied to a degree-{p} form \
                     with harmonic component of norm {harm:.3e}"
                )));
            }
        }
        for k in 0..c.len() {
            c[k] = if k < kernel {
                0.0
            } else {
                self.eigenvalues[p][k].powf(s) * c[k]
            };
        }
        self.synthesize(p, &c)
    }

    /// Hodge decomposition `v = exact + coexact + harmonic` of a `p`-cochain,
    /// returned in that order.
    ///
    /// The pieces are computed as `d δ Δ⁺ v` and `δ d Δ⁺ v` with the spectral
    /// pseudoinverse `Δ⁺`, so they are mutually L²-orthogonal and exactly in
    /// the range of `d` resp. `δ`.
    pub fn hodge_split(
        &self,
        complex: &SpatialComplex,
        p: usize,
        v: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let harmonic = self.harmonic_projection(p, v)?;
        let perp = v - &harmonic;
        let g = self.spectral_power(p, -1.0, &perp)?;
        let exact = if p > 0 {
            complex.d_on(p - 1, &complex.delta_on(p, &g)?)?
        } else {
            DVector::zeros(v.len())
        };
        let coexact = if p < complex.dimension() {
            complex.delta_on(p + 1, &complex.d_on(p, &g)?)?
        } else {
            DVector::zeros(v.len())
        };
        Ok((exact, coexact, harmonic))
    }
}

fn scale_rows(m: &mut DMatrix<f64>, diag: &DVector<f64>) {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= diag[i];
    }
}

fn scale_columns_inv(m: &mut DMatrix<f64>, diag: &DVector<f64>) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col /= diag[j];
    }
}
