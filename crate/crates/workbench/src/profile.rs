//! Smooth, compactly supported time profiles with exact derivatives of every
//! order.
//!
//! Every profile is of the form
//!
//! ```text
//! f(t) = A · Q(s) · (1 − s²)^{−2m} · exp(1 − 1/(1 − s²)),   s = (t − c)/w,
//! ```
//!
//! supported on `[c − w, c + w]`, where `Q` is a polynomial in the scaled
//! time `s` and `m ≥ 0` tracks how many inverse powers of `u = 1 − s²` have
//! accumulated.  The family is closed under differentiation:
//!
//! ```text
//! d/ds [Q u^{−2m} e^{1−1/u}] = [Q′u² + 4msuQ − 2sQ] u^{−2(m+1)} e^{1−1/u},
//! ```
//!
//! so `d/dt` maps `(A, Q, m) ↦ (A/w, Q′u² + 4msuQ − 2sQ, m + 1)` exactly.
//! This gives C^∞ test data whose time derivatives carry no finite-difference
//! error — essential when wave-equation residuals are checked at tolerances
//! near round-off.

use crate::{Error, Result};

/// A compactly supported C^∞ profile on the time axis.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeProfile {
    center: f64,
    half_width: f64,
    amplitude: f64,
    /// Numerator polynomial `Q(s)`, lowest coefficient first.
    numerator: Vec<f64>,
    /// Accumulated inverse power `m` of `u = 1 − s²` (as `u^{−2m}`).
    power: u32,
}

impl TimeProfile {
    /// General constructor with an explicit numerator polynomial (lowest
    /// coefficient first).
    pub fn from_polynomial(
        center: f64,
        half_width: f64,
        amplitude: f64,
        numerator: Vec<f64>,
    ) -> Result<Self> {
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::Config(format!(
                "profile half-width must be positive and finite, got {half_width}"
            )));
        }
        if !center.is_finite() || !amplitude.is_finite() {
            return Err(Error::Config(format!(
                "profile center/amplitude must be finite, got {center}, {amplitude}"
            )));
        }
        if numerator.is_empty() || numerator.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "profile numerator polynomial must be nonempty and finite".to_string(),
            ));
        }
        Ok(Self {
            center,
            half_width,
            amplitude,
            numerator,
            power: 0,
        })
    }

    /// The even bump `A·φ(s)`, `φ(s) = e^{1−1/(1−s²)}`, normalized so the
    /// peak value is `A`.
    pub fn bump(center: f64, half_width: f64, amplitude: f64) -> Result<Self> {
        Self::from_polynomial(center, half_width, amplitude, vec![1.0])
    }

    /// The odd bump `A·s·φ(s)`; vanishes at the center, changes sign there.
    pub fn odd_bump(center: f64, half_width: f64, amplitude: f64) -> Result<Self> {
        Self::from_polynomial(center, half_width, amplitude, vec![0.0, 1.0])
    }

    /// The double-lobed bump `A·(1 − 2s²)·φ(s)`; one sign change on each
    /// side of the center, so it carries both low- and mid-frequency mass.
    pub fn wiggle(center: f64, half_width: f64, amplitude: f64) -> Result<Self> {
        Self::from_polynomial(center, half_width, amplitude, vec![1.0, 0.0, -2.0])
    }

    /// Support center `c`.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Support half-width `w`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Closed support interval `[c − w, c + w]`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Evaluates the profile; returns exactly `0.0` outside the open support.
    pub fn value(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - s * s;
        let exponent = 1.0 - 1.0 / u - 2.0 * f64::from(self.power) * u.ln();
        self.amplitude * poly_eval(&self.numerator, s) * exponent.exp()
    }

    /// The same profile with its amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.amplitude *= factor;
        out
    }

    /// The exact time derivative, as another profile in the same family.
    pub fn derivative(&self) -> Self {
        let q = &self.numerator;
        let m = f64::from(self.power);
        // u = 1 − s² and s as polynomials.
        let u = [1.0, 0.0, -1.0];
        let u2 = poly_mul(&u, &u);
        let mut new_q = poly_mul(&poly_derivative(q), &u2);
        // + 4m·s·u·Q
        poly_add_scaled(
            &mut new_q,
            &poly_mul(&[0.0, 4.0 * m], &poly_mul(&u, q)),
            1.0,
        );
        // − 2s·Q
        poly_add_scaled(&mut new_q, &poly_mul(&[0.0, 2.0], q), -1.0);
        Self {
            center: self.center,
            half_width: self.half_width,
            amplitude: self.amplitude / self.half_width,
            numerator: new_q,
            power: self.power + 1,
        }
    }

    /// The exact `n`-th time derivative.
    pub fn nth_derivative(&self, n: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.derivative();
        }
        out
    }
}

/// Third-order jet (value and first three derivatives) for forward-mode
/// differentiation of the smooth step, which is not polynomial-times-bump
/// shaped and therefore lives outside the [`TimeProfile`] family.  Third
/// derivatives of cutoffs are needed when differentiated cutoff products
/// multiply wave solutions.
#[derive(Clone, Copy, Debug)]
struct Jet3 {
    v: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

impl Jet3 {
    fn constant(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }

    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
            d3: -self.d3,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }

    fn recip(self) -> Self {
        let f0 = 1.0 / self.v;
        let (v1, v2, v3) = (self.d1, self.d2, self.d3);
        Self {
            v: f0,
            d1: -v1 * f0 * f0,
            d2: (2.0 * v1 * v1 * f0 - v2) * f0 * f0,
            d3: (-6.0 * v1 * v1 * v1 * f0 * f0 + 6.0 * v1 * v2 * f0 - v3) * f0 * f0,
        }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        let (v1, v2, v3) = (self.d1, self.d2, self.d3);
        Self {
            v: e,
            d1: e * v1,
            d2: e * (v2 + v1 * v1),
            d3: e * (v3 + 3.0 * v1 * v2 + v1 * v1 * v1),
        }
    }
}

/// `ψ(u) = e^{−1/u}` for `u > 0`, extended by zero — the standard C^∞
/// one-sided mollifier, on jets.
fn psi_jet(u: Jet3) -> Jet3 {
    if u.v <= 1e-12 {
        return Jet3::constant(0.0);
    }
    u.recip().neg().exp()
}

/// Monotone C^∞ step: 0 for `t ≤ lo`, 1 for `t ≥ hi`, strictly increasing in
/// between, with exact first and second derivatives.
///
/// The transition is `g(u) = ψ(u)/(ψ(u) + ψ(1 − u))` in the scaled variable
/// `u = (t − lo)/(hi − lo)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothStep {
    lo: f64,
    hi: f64,
}

impl SmoothStep {
    /// A step rising across `[lo, hi]`.
    pub fn rising(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::Config(format!(
                "smooth step needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Transition interval `[lo, hi]`.
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `(g(t), g′(t), g″(t))`.
    pub fn jet(&self, t: f64) -> (f64, f64, f64) {
        let (g, d1, d2, _) = self.jet3(t);
        (g, d1, d2)
    }

    /// `(g(t), g′(t), g″(t), g‴(t))`.
    pub fn jet3(&self, t: f64) -> (f64, f64, f64, f64) {
        if t <= self.lo {
            return (0.0, 0.0, 0.0, 0.0);
        }
        if t >= self.hi {
            return (1.0, 0.0, 0.0, 0.0);
        }
        let width = self.hi - self.lo;
        let u = Jet3 {
            v: (t - self.lo) / width,
            d1: 1.0 / width,
            d2: 0.0,
            d3: 0.0,
        };
        let num = psi_jet(u);
        let den = num.add(psi_jet(Jet3::constant(1.0).add(u.neg())));
        let g = num.mul(den.recip());
        (g.v, g.d1, g.d2, g.d3)
    }

    /// Step value `g(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.jet(t).0
    }
}

/// Evaluates a polynomial (lowest coefficient first) by Horner's scheme.
fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add_scaled(a: &mut Vec<f64>, b: &[f64], scale: f64) {
    if b.len() > a.len() {
        a.resize(b.len(), 0.0);
    }
    for (ai, &bi) in a.iter_mut().zip(b.iter()) {
        *ai += scale * bi;
    }
}
