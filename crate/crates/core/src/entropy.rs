//! Maximum-entropy bound on the difference distribution of a q-ary source.
//!
//! The program maximizes `H(r)` over symmetric pmfs on `{-(q-1), ..., q-1}`
//! subject to `r_0 >= 1/q` and `R(theta_j) >= 0` on the grid
//! `theta_j = pi j / (M - 1)`. Every true difference pmf satisfies these
//! constraints, so the dual value at any nonnegative multipliers bounds the
//! entropy of every such pmf from above.
//!
//! With `c_k = mu [k = 0] + sum_j lambda_j cos(k theta_j)` the dual function is
//!
//! ```text
//! g(mu, lambda) = log2( sum_{|k| < q} 2^{c_k} ) - mu / q
//! ```
//!
//! and its minimizer yields the primal through the Gibbs form `r_k ∝ 2^{c_k}`.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::math::{self, cosine_series, DifferencePmf, EntropyValue};
use crate::{Error, Result};

/// Multipliers below this are zeroed before a certificate is emitted.
pub const LAMBDA_TRUNCATION: f64 = 1e-14;
/// Primal spectra dipping below this between grid points are flagged.
pub const SPECTRUM_FLAG: f64 = -1e-6;
/// Tolerance used when replaying a stored certificate.
pub const RECERTIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub q: usize,
    pub grid_size: usize,
    pub dual_tol: f64,
    pub max_iters: usize,
    pub toeplitz_check_n: usize,
}

impl RelaxationConfig {
    pub fn new(q: usize) -> Self {
        RelaxationConfig {
            q,
            grid_size: 4096,
            dual_tol: 1e-10,
            max_iters: 100_000,
            toeplitz_check_n: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Config(format!("q must be at least 2, got {}", self.q)));
        }
        if self.grid_size < 2 * self.q - 1 {
            return Err(Error::Config(format!(
                "grid_size {} is below 2q - 1 = {}",
                self.grid_size,
                2 * self.q - 1
            )));
        }
        if !(self.dual_tol > 0.0) {
            return Err(Error::Config("dual_tol must be positive".into()));
        }
        if self.max_iters == 0 || self.toeplitz_check_n == 0 {
            return Err(Error::Config("max_iters and toeplitz_check_n must be positive".into()));
        }
        Ok(())
    }
}

/// `theta_j = pi j / (M - 1)`.
#[inline]
pub fn grid_angle(j: usize, grid_size: usize) -> f64 {
    PI * j as f64 / (grid_size - 1) as f64
}

#[inline]
fn grid_cos(k: usize, j: usize, grid_size: usize) -> f64 {
    (k as f64 * grid_angle(j, grid_size)).cos()
}

/// Nonnegative multipliers together with the dual value they certify.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub q: usize,
    pub grid_size: usize,
    pub mu: f64,
    /// Sparse `(j, lambda_j)` pairs with strictly positive values, sorted by `j`.
    pub lambda: Vec<(usize, f64)>,
    pub dual_value_bits: f64,
}

impl DualCertificate {
    /// Recomputes the dual value from the stored multipliers alone.
    pub fn recompute(&self) -> Result<EntropyValue> {
        dual_value_sparse(self.q, self.grid_size, self.mu, &self.lambda)
    }
}

fn check_multipliers(q: usize, grid_size: usize, mu: f64, lambda: &[(usize, f64)]) -> Result<()> {
    if q < 2 || grid_size < 2 {
        return Err(Error::Config(format!("invalid q = {q} or grid size = {grid_size}")));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::NegativeMultiplier { index: usize::MAX, value: mu });
    }
    let mut last = None;
    for &(j, v) in lambda {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::NegativeMultiplier { index: j, value: v });
        }
        if j >= grid_size {
            return Err(Error::Config(format!("grid index {j} out of range")));
        }
        if last.is_some_and(|l| j <= l) {
            return Err(Error::Config("lambda indices must be strictly increasing".into()));
        }
        last = Some(j);
    }
    Ok(())
}

fn exponents(q: usize, grid_size: usize, mu: f64, lambda: &[(usize, f64)]) -> Vec<f64> {
    let mut c = vec![0.0; q];
    for &(j, v) in lambda {
        if v == 0.0 {
            continue;
        }
        for (k, ck) in c.iter_mut().enumerate() {
            *ck += v * grid_cos(k, j, grid_size);
        }
    }
    c[0] += mu;
    c
}

/// `log2 Z` and the normalized Gibbs half-pmf for half-exponents `c`.
fn log_partition(c: &[f64]) -> (f64, Vec<f64>) {
    let shift = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = c.iter().map(|&ck| (ck - shift).exp2()).collect();
    let z = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|x| *x /= z);
    (shift + z.log2(), w)
}

fn dual_value_sparse(
    q: usize,
    grid_size: usize,
    mu: f64,
    lambda: &[(usize, f64)],
) -> Result<EntropyValue> {
    check_multipliers(q, grid_size, mu, lambda)?;
    let c = exponents(q, grid_size, mu, lambda);
    let (log_z, _) = log_partition(&c);
    Ok(EntropyValue::new(log_z - mu / q as f64))
}

/// Dual function at dense multipliers; `lambda.len()` is the grid size.
///
/// Weak duality makes this an upper bound on the entropy of every
/// difference pmf with `r_0 >= 1/q` and a spectrum nonnegative on the grid.
pub fn dual_value(q: usize, mu: f64, lambda: &[f64]) -> Result<EntropyValue> {
    let sparse: Vec<(usize, f64)> = lambda
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (j, v))
        .collect();
    if let Some(j) = lambda.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::NegativeMultiplier { index: j, value: lambda[j] });
    }
    dual_value_sparse(q, lambda.len(), mu, &sparse)
}

/// Closed-form maximum under the collision constraint alone:
/// `(1/q) log2 q + ((q-1)/q) log2 (2q)`.
pub fn coarse_bound(q: usize) -> Result<EntropyValue> {
    if q < 2 {
        return Err(Error::Domain(format!("q must be at least 2, got {q}")));
    }
    let qf = q as f64;
    Ok(EntropyValue::new(qf.log2() / qf + (qf - 1.0) / qf * (2.0 * qf).log2()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyBound {
    pub q: usize,
    /// Certified upper bound; always equal to `certificate.dual_value_bits`.
    pub value_bits: f64,
    pub primal: DifferencePmf,
    pub certificate: DualCertificate,
    pub duality_gap_bits: f64,
    pub spectrum_min: f64,
    pub toeplitz_min_eig: f64,
    pub converged: bool,
    pub iterations: usize,
    pub config: RelaxationConfig,
}

impl EntropyBound {
    /// The primal touches negative values between grid points.
    pub fn spectrum_flagged(&self) -> bool {
        self.spectrum_min < SPECTRUM_FLAG
    }

    pub fn to_record(&self) -> CertificateRecord {
        CertificateRecord {
            q: self.q,
            value_bits: self.value_bits,
            mu: self.certificate.mu,
            lambda: self.certificate.lambda.clone(),
            grid_size: self.certificate.grid_size,
            dual_tol: self.config.dual_tol,
            converged: self.converged,
            spectrum_min: self.spectrum_min,
            toeplitz_min_eig: self.toeplitz_min_eig,
            toeplitz_check_n: self.config.toeplitz_check_n,
            duality_gap_bits: self.duality_gap_bits,
            primal: self.primal.half().to_vec(),
        }
    }
}

/// Flat JSON form of an [`EntropyBound`], replayable without re-solving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub q: usize,
    pub value_bits: f64,
    pub mu: f64,
    pub lambda: Vec<(usize, f64)>,
    pub grid_size: usize,
    pub dual_tol: f64,
    pub converged: bool,
    pub spectrum_min: f64,
    pub toeplitz_min_eig: f64,
    #[serde(default)]
    pub toeplitz_check_n: usize,
    #[serde(default)]
    pub duality_gap_bits: f64,
    #[serde(default)]
    pub primal: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recertification {
    pub stored_bits: f64,
    pub recomputed_bits: f64,
    pub valid: bool,
}

/// Replays a stored certificate: multipliers must be nonnegative and the dual
/// value recomputed from them must match the stored bound within `tol`.
pub fn recertify(record: &CertificateRecord, tol: f64) -> Result<Recertification> {
    let recomputed = dual_value_sparse(record.q, record.grid_size, record.mu, &record.lambda)?;
    let recomputed_bits = recomputed.bits();
    Ok(Recertification {
        stored_bits: record.value_bits,
        recomputed_bits,
        valid: (recomputed_bits - record.value_bits).abs() <= tol,
    })
}

/// Minimum eigenvalue of `T^(N)(r)` for each requested order.
pub fn verify_toeplitz_truncation(r: &DifferencePmf, orders: &[usize]) -> Result<Vec<(usize, f64)>> {
    orders
        .iter()
        .map(|&n| {
            let t = math::toeplitz(r, n)?;
            Ok((n, math::is_psd(&t, math::DEFAULT_PSD_TOL).min_eigenvalue))
        })
        .collect()
}

/// Grid data and evaluation of the dual restricted to a set of active angles.
struct DualProblem {
    q: usize,
    grid_size: usize,
    /// `cos(k theta_j)` stored row-major by `j`.
    cos: Vec<f64>,
}

struct Eval {
    value: f64,
    gibbs: Vec<f64>,
}

impl DualProblem {
    fn new(q: usize, grid_size: usize) -> Self {
        let mut cos = Vec::with_capacity(q * grid_size);
        for j in 0..grid_size {
            cos.extend((0..q).map(|k| grid_cos(k, j, grid_size)));
        }
        DualProblem { q, grid_size, cos }
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.cos[j * self.q..(j + 1) * self.q]
    }

    /// Variables are `x = [mu, lambda_{active[0]}, ...]`.
    fn eval(&self, active: &[usize], x: &[f64]) -> Eval {
        let mut c = vec![0.0; self.q];
        for (&j, &v) in active.iter().zip(&x[1..]) {
            for (ck, cj) in c.iter_mut().zip(self.row(j)) {
                *ck += v * cj;
            }
        }
        c[0] += x[0];
        let (log_z, gibbs) = log_partition(&c);
        Eval {
            value: log_z - x[0] / self.q as f64,
            gibbs,
        }
    }

    fn spectrum_at(&self, gibbs: &[f64], j: usize) -> f64 {
        let row = self.row(j);
        gibbs[0] + 2.0 * gibbs[1..].iter().zip(&row[1..]).map(|(r, c)| r * c).sum::<f64>()
    }

    fn gradient(&self, active: &[usize], gibbs: &[f64]) -> Vec<f64> {
        let mut g = Vec::with_capacity(active.len() + 1);
        g.push(gibbs[0] - 1.0 / self.q as f64);
        g.extend(active.iter().map(|&j| self.spectrum_at(gibbs, j)));
        g
    }

    /// `ln 2 * Cov(features)` under the Gibbs pmf.
    fn hessian(&self, active: &[usize], gibbs: &[f64]) -> DMatrix<f64> {
        let m = active.len() + 1;
        let q = self.q;
        // Feature matrix over half-indices, weighted by the full pmf mass at +-k.
        let feat = DMatrix::from_fn(q, m, |k, v| {
            if v == 0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.row(active[v - 1])[k]
            }
        });
        let weights = DVector::from_fn(q, |k, _| if k == 0 { gibbs[0] } else { 2.0 * gibbs[k] });
        let mean = feat.transpose() * &weights;
        let weighted = DMatrix::from_fn(q, m, |k, v| feat[(k, v)] * weights[k]);
        let second = feat.transpose() * weighted;
        (second - &mean * mean.transpose()) * LN_2
    }
}

fn projected_grad_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| if xi > 0.0 { gi.abs() } else { (-gi).max(0.0) })
        .fold(0.0, f64::max)
}

/// Projected Newton on the dual restricted to `active`. Returns iterations used.
fn restricted_newton(
    prob: &DualProblem,
    active: &[usize],
    x: &mut Vec<f64>,
    tol: f64,
    budget: usize,
) -> usize {
    const ARMIJO: f64 = 1e-4;
    let mut iters = 0;
    let mut cur = prob.eval(active, x);
    let mut g = prob.gradient(active, &cur.gibbs);
    while iters < budget {
        let pg = projected_grad_norm(x, &g);
        if pg <= tol {
            break;
        }
        iters += 1;

        let m = x.len();
        let eps = pg.min(1e-8);
        let binding: Vec<bool> = (0..m).map(|i| x[i] <= eps && g[i] > 0.0).collect();
        let free: Vec<usize> = (0..m).filter(|&i| !binding[i]).collect();

        let h = prob.hessian(active, &cur.gibbs);
        let mut dir = vec![0.0; m];
        if !free.is_empty() {
            let nf = free.len();
            let hf = DMatrix::from_fn(nf, nf, |a, b| h[(free[a], free[b])]);
            let gf = DVector::from_fn(nf, |a, _| -g[free[a]]);
            let scale = (0..nf).map(|a| hf[(a, a)]).fold(0.0, f64::max).max(1e-300);
            let mut tau = 1e-12 * scale;
            let step = loop {
                let mut reg = hf.clone();
                for a in 0..nf {
                    reg[(a, a)] += tau;
                }
                if let Some(ch) = reg.cholesky() {
                    break ch.solve(&gf);
                }
                tau *= 100.0;
            };
            for (a, &i) in free.iter().enumerate() {
                dir[i] = step[a];
            }
        }
        for i in 0..m {
            if binding[i] {
                dir[i] = -g[i];
            }
        }

        let mut s = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| (xi + s * di).max(0.0)).collect();
            let next = prob.eval(active, &trial);
            let decrease: f64 = g.iter().zip(trial.iter().zip(x.iter())).map(|(gi, (t, xi))| gi * (t - xi)).sum();
            let noise = 4.0 * f64::EPSILON * cur.value.abs().max(1.0);
            if next.value <= cur.value + ARMIJO * decrease {
                break Some((trial, next));
            }
            if (next.value - cur.value).abs() <= noise {
                let g_next = prob.gradient(active, &next.gibbs);
                if projected_grad_norm(&trial, &g_next) < pg {
                    break Some((trial, next));
                }
            }
            s *= 0.5;
            if s < 1e-20 {
                break None;
            }
        };
        match accepted {
            Some((trial, next)) => {
                *x = trial;
                cur = next;
                g = prob.gradient(active, &cur.gibbs);
            }
            None => break,
        }
    }
    iters
}

/// Local minima of the grid spectrum that violate `R(theta_j) >= -threshold`,
/// most violated first.
fn violated_minima(prob: &DualProblem, gibbs: &[f64], threshold: f64) -> Vec<usize> {
    let m = prob.grid_size;
    let spec: Vec<f64> = (0..m).map(|j| prob.spectrum_at(gibbs, j)).collect();
    let mut found: Vec<usize> = (0..m)
        .filter(|&j| {
            spec[j] < -threshold
                && (j == 0 || spec[j] <= spec[j - 1])
                && (j + 1 == m || spec[j] <= spec[j + 1])
        })
        .collect();
    found.sort_by(|&a, &b| spec[a].total_cmp(&spec[b]).then(a.cmp(&b)));
    found
}

/// Solves the grid relaxation and returns a certified entropy upper bound.
///
/// The dual is minimized by an exchange method: projected Newton on a small
/// active set of angles, then the most violated local minima of the primal
/// spectrum are added until the projected gradient over the whole grid falls
/// below `dual_tol`. The reported value is the dual objective at the final
/// (truncated) multipliers, so it is a valid bound whether or not the
/// iteration converged.
pub fn solve_relaxation(cfg: &RelaxationConfig) -> Result<EntropyBound> {
    cfg.validate()?;
    let q = cfg.q;
    let prob = DualProblem::new(q, cfg.grid_size);
    let inner_tol = (0.01 * cfg.dual_tol).max(1e-15);
    let max_add = 2 * q;

    let mut active: BTreeMap<usize, f64> = BTreeMap::new();
    let mut mu = 0.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let idx: Vec<usize> = active.keys().copied().collect();
        let mut x: Vec<f64> = std::iter::once(mu).chain(active.values().copied()).collect();
        let budget = (cfg.max_iters - iterations).min(500);
        iterations += restricted_newton(&prob, &idx, &mut x, inner_tol, budget).max(1);
        mu = x[0];
        for (j, v) in idx.iter().zip(&x[1..]) {
            active.insert(*j, *v);
        }

        let gibbs = prob.eval(&idx, &x).gibbs;
        let grad = prob.gradient(&idx, &gibbs);
        let restricted_pg = projected_grad_norm(&x, &grad);

        // Retire angles that dropped out and are strictly feasible.
        for (&j, &g) in idx.iter().zip(&grad[1..]) {
            if active[&j] == 0.0 && g > 0.0 {
                active.remove(&j);
            }
        }

        let violations = violated_minima(&prob, &gibbs, 0.5 * cfg.dual_tol);
        let new: Vec<usize> = violations
            .into_iter()
            .filter(|j| !active.contains_key(j))
            .take(max_add)
            .collect();
        if new.is_empty() {
            let worst = violated_minima(&prob, &gibbs, cfg.dual_tol);
            if restricted_pg <= cfg.dual_tol && worst.is_empty() {
                converged = true;
                break;
            }
            if restricted_pg <= cfg.dual_tol {
                // violations sit on active angles; nothing left to add
                break;
            }
        }
        for j in new {
            active.insert(j, 0.0);
        }
    }

    let lambda: Vec<(usize, f64)> = active
        .into_iter()
        .filter(|&(_, v)| v >= LAMBDA_TRUNCATION)
        .collect();
    let value = dual_value_sparse(q, cfg.grid_size, mu, &lambda)?;
    let certificate = DualCertificate {
        q,
        grid_size: cfg.grid_size,
        mu,
        lambda,
        dual_value_bits: value.bits(),
    };

    let (_, gibbs) = log_partition(&exponents(q, cfg.grid_size, mu, &certificate.lambda));
    let primal = DifferencePmf::new(gibbs)?;
    let duality_gap_bits = value.bits() - primal.entropy().bits();
    let spectrum_min = refined_spectrum_min(primal.half(), 16 * cfg.grid_size);
    let toeplitz_min_eig = math::is_psd(&math::toeplitz(&primal, cfg.toeplitz_check_n)?, 0.0).min_eigenvalue;

    Ok(EntropyBound {
        q,
        value_bits: value.bits(),
        primal,
        certificate,
        duality_gap_bits,
        spectrum_min,
        toeplitz_min_eig,
        converged,
        iterations,
        config: cfg.clone(),
    })
}

/// Scans `R` on `points` angles of `[0, pi]` and polishes the lowest local
/// minima by golden-section search.
fn refined_spectrum_min(r: &[f64], points: usize) -> f64 {
    let step = PI / (points - 1) as f64;
    let vals: Vec<f64> = (0..points).map(|t| cosine_series(r, t as f64 * step)).collect();
    let mut minima: Vec<usize> = (0..points)
        .filter(|&t| (t == 0 || vals[t] <= vals[t - 1]) && (t + 1 == points || vals[t] <= vals[t + 1]))
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    for &t in minima.iter().take(8) {
        let lo = t.saturating_sub(1) as f64 * step;
        let hi = ((t + 1).min(points - 1)) as f64 * step;
        best = best.min(golden_min(|th| cosine_series(r, th), lo, hi));
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(a)).min(f(b))
}
