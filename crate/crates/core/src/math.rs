//! Small exact primitives shared by the bound computations.
//!
//! All entropies are in bits. A [`DifferencePmf`] stores only the
//! nonnegative half `r_0..r_{q-1}` of the symmetric pmf of `X - Y`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `sum == 1` when validating probability vectors.
pub const PMF_SUM_TOL: f64 = 1e-9;
/// Entries down to this value are accepted as rounding noise and clamped to 0.
pub const NEGATIVE_GRACE: f64 = -1e-15;
/// Default tolerance on the minimum eigenvalue in [`is_psd`].
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// A Shannon entropy (or an entropy-like exponent) in bits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub fn new(bits: f64) -> Self {
        EntropyValue(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl From<EntropyValue> for f64 {
    fn from(v: EntropyValue) -> f64 {
        v.0
    }
}

fn check_entries(values: &mut [f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidPmf(format!("entry {i} is not finite")));
        }
        if *v < 0.0 {
            if *v < NEGATIVE_GRACE {
                return Err(Error::InvalidPmf(format!("entry {i} is negative ({v})")));
            }
            *v = 0.0;
        }
        sum += *v;
    }
    Ok(sum)
}

/// Probability vector `p_0..p_{q-1}` on the alphabet `{0, ..., q-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SourcePmf {
    p: Vec<f64>,
}

impl SourcePmf {
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidPmf(format!(
                "alphabet size must be at least 2, got {}",
                p.len()
            )));
        }
        let sum = check_entries(&mut p)?;
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
        }
        Ok(SourcePmf { p })
    }

    /// Normalizes a nonnegative weight vector into a pmf.
    pub fn from_weights(mut w: Vec<f64>) -> Result<Self> {
        let sum = check_entries(&mut w)?;
        if sum <= 0.0 {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        w.iter_mut().for_each(|x| *x /= sum);
        SourcePmf::new(w)
    }

    pub fn uniform(q: usize) -> Result<Self> {
        SourcePmf::new(vec![1.0 / q as f64; q])
    }

    pub fn q(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }
}

impl TryFrom<Vec<f64>> for SourcePmf {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        SourcePmf::new(p)
    }
}

impl From<SourcePmf> for Vec<f64> {
    fn from(p: SourcePmf) -> Vec<f64> {
        p.p
    }
}

/// Symmetric pmf of `D = X - Y` on `{-(q-1), ..., q-1}`, stored as `r_0..r_{q-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DifferencePmf {
    r: Vec<f64>,
}

impl DifferencePmf {
    pub fn new(mut r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::InvalidPmf("empty difference pmf".into()));
        }
        check_entries(&mut r)?;
        let mass = full_mass(&r);
        if (mass - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!(
                "r_0 + 2 * sum(r_k) = {mass}, expected 1"
            )));
        }
        Ok(DifferencePmf { r })
    }

    /// Point mass at zero difference.
    pub fn point_mass(q: usize) -> Self {
        let mut r = vec![0.0; q.max(1)];
        r[0] = 1.0;
        DifferencePmf { r }
    }

    pub fn q(&self) -> usize {
        self.r.len()
    }

    pub fn half(&self) -> &[f64] {
        &self.r
    }

    /// `r_k` for any integer `k`, zero outside the support.
    pub fn coeff(&self, k: i64) -> f64 {
        self.r.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Full pmf ordered `k = -(q-1), ..., q-1`.
    pub fn expand(&self) -> Vec<f64> {
        let q = self.r.len();
        let mut full = Vec::with_capacity(2 * q - 1);
        full.extend(self.r[1..].iter().rev());
        full.extend(self.r.iter());
        full
    }

    /// Entropy of the full symmetric pmf.
    pub fn entropy(&self) -> EntropyValue {
        let tail: f64 = self.r[1..].iter().map(|&x| plogp(x)).sum();
        EntropyValue(-(plogp(self.r[0]) + 2.0 * tail))
    }
}

impl TryFrom<Vec<f64>> for DifferencePmf {
    type Error = Error;

    fn try_from(r: Vec<f64>) -> Result<Self> {
        DifferencePmf::new(r)
    }
}

impl From<DifferencePmf> for Vec<f64> {
    fn from(r: DifferencePmf) -> Vec<f64> {
        r.r
    }
}

fn full_mass(r: &[f64]) -> f64 {
    r[0] + 2.0 * r[1..].iter().sum::<f64>()
}

#[inline]
fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy `-sum x log2 x` with `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<EntropyValue> {
    let mut sum = 0.0;
    for (i, &x) in dist.iter().enumerate() {
        if !x.is_finite() || x < NEGATIVE_GRACE {
            return Err(Error::InvalidPmf(format!("entry {i} is {x}")));
        }
        sum += x.max(0.0);
    }
    if (sum - 1.0).abs() > PMF_SUM_TOL {
        return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
    }
    Ok(EntropyValue(-dist.iter().map(|&x| plogp(x)).sum::<f64>()))
}

/// Binary entropy without the domain check; callers guarantee `x` in `[0, 1]`.
#[inline]
pub(crate) fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`.
pub fn binary_entropy(x: f64) -> Result<EntropyValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} not in [0, 1]")));
    }
    Ok(EntropyValue(h2(x)))
}

pub(crate) fn h2_inv(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The unique `beta` in `[0, 1/2]` with `h(beta) = y`, by bisection to 1e-12.
pub fn binary_entropy_inv(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("binary entropy value {y} not in [0, 1]")));
    }
    Ok(h2_inv(y))
}

/// `r_k = sum_i p_i p_{i+k}` for `k = 0..q-1`.
pub fn autocorrelation(p: &SourcePmf) -> DifferencePmf {
    let p = p.probs();
    let q = p.len();
    let r = (0..q)
        .map(|k| p[..q - k].iter().zip(&p[k..]).map(|(a, b)| a * b).sum())
        .collect();
    DifferencePmf { r }
}

/// Evaluates `R(theta) = r_0 + 2 sum_{k>=1} r_k cos(k theta)`.
pub fn spectrum_eval(r: &DifferencePmf, theta: f64) -> f64 {
    cosine_series(r.half(), theta)
}

pub(crate) fn cosine_series(r: &[f64], theta: f64) -> f64 {
    r[0] + 2.0
        * r[1..]
            .iter()
            .enumerate()
            .map(|(i, &rk)| rk * ((i + 1) as f64 * theta).cos())
            .sum::<f64>()
}

/// The order-`N` Toeplitz matrix `T_ij = r_{i-j}` of a difference pmf.
#[derive(Clone, Debug)]
pub struct ToeplitzView<'a> {
    source: &'a DifferencePmf,
    order: usize,
}

impl<'a> ToeplitzView<'a> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.source.coeff(i as i64 - j as i64)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |i, j| self.entry(i, j))
    }
}

/// Builds `T^(N)(r)`; entries beyond bandwidth `q-1` are zero.
pub fn toeplitz(r: &DifferencePmf, order: usize) -> Result<ToeplitzView<'_>> {
    if order == 0 {
        return Err(Error::Domain("Toeplitz order must be at least 1".into()));
    }
    Ok(ToeplitzView { source: r, order })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD test through the symmetric eigenvalue decomposition.
pub fn is_psd(t: &ToeplitzView<'_>, tol: f64) -> PsdReport {
    let min_eigenvalue = min_eigenvalue(t.to_matrix());
    PsdReport {
        psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    }
}

pub(crate) fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
