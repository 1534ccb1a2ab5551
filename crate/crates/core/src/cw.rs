//! Rate bounds for binary constant-weight B2 codes of relative weight `alpha`.
//!
//! The bound `rho(alpha)` is the root of
//! `F(R) = Psi_alpha(delta_lp(R, alpha) / 2) - R` on `[0, h(alpha)]`, where
//! `Psi_alpha` combines the difference-vector counting estimate of the
//! distance distribution with the constant-weight LP lower estimate. `F` is
//! strictly decreasing there, so bisection on the endpoint bracket finds the
//! unique (hence largest) root.

use serde::{Deserialize, Serialize};

use crate::math::{h2, h2_inv, EntropyValue};
use crate::{Error, Result};

/// Rate bound for general binary B2 codes, drawn as a reference line.
pub const GENERAL_B2_BOUND: f64 = 0.57525;

const DOMAIN_SLACK: f64 = 1e-12;
const ZOOM_HALF_WIDTH: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwParams {
    pub alpha: f64,
    pub bisect_tol: f64,
    pub e_grid: usize,
    pub alpha_grid: usize,
    pub refine_passes: usize,
}

impl CwParams {
    pub fn new(alpha: f64) -> Self {
        CwParams {
            alpha,
            bisect_tol: 1e-9,
            e_grid: 2001,
            alpha_grid: 2001,
            refine_passes: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.bisect_tol > 0.0) {
            return Err(Error::Config("bisect_tol must be positive".into()));
        }
        if self.e_grid < 3 || self.alpha_grid < 3 {
            return Err(Error::Config("search grids need at least 3 points".into()));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} not in (0, 0.5]")))
    }
}

fn psi_raw(alpha: f64, xi: f64) -> f64 {
    let comp = 1.0 - alpha;
    0.5 * (h2(2.0 * xi) + 2.0 * xi + h2(alpha)
        - alpha * h2((xi / alpha).min(1.0))
        - comp * h2((xi / comp).min(1.0)))
}

/// `Psi_alpha(xi) = [h(2xi) + 2xi + h(alpha) - alpha h(xi/alpha) - (1-alpha) h(xi/(1-alpha))] / 2`.
pub fn psi(alpha: f64, xi: f64) -> Result<EntropyValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1)")));
    }
    let top = alpha.min(1.0 - alpha);
    if !(xi >= 0.0 && xi <= top + DOMAIN_SLACK) {
        return Err(Error::Domain(format!("xi = {xi} not in [0, {top}]")));
    }
    Ok(EntropyValue::new(psi_raw(alpha, xi.min(top))))
}

/// Closed-form derivative `log2((1 - 2xi) / sqrt((alpha - xi)(1 - alpha - xi)))`.
pub fn psi_prime(alpha: f64, xi: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1)")));
    }
    let top = alpha.min(1.0 - alpha);
    if !(xi >= 0.0 && xi < top) {
        return Err(Error::Domain(format!("xi = {xi} not in [0, {top})")));
    }
    Ok(((1.0 - 2.0 * xi) / ((alpha - xi) * (1.0 - alpha - xi)).sqrt()).log2())
}

fn delta_lp_raw(rate: f64, alpha: f64, h_alpha: f64) -> f64 {
    if rate >= h_alpha {
        return 0.0;
    }
    let beta = h2_inv(rate).min(alpha);
    let num = alpha * (1.0 - alpha) - beta * (1.0 - beta);
    (2.0 * num / (1.0 + 2.0 * (beta * (1.0 - beta)).sqrt())).max(0.0)
}

/// Constant-weight LP bound on the relative minimum distance at rate `rate`.
pub fn delta_lp(rate: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let h_alpha = h2(alpha);
    if !(rate >= 0.0 && rate <= h_alpha + DOMAIN_SLACK) {
        return Err(Error::Domain(format!(
            "rate {rate} not in [0, h(alpha) = {h_alpha}]: no beta <= alpha"
        )));
    }
    Ok(delta_lp_raw(rate, alpha, h_alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub rho: f64,
    pub xi_star: f64,
    pub delta_lp: f64,
    /// `|rho - Psi_alpha(delta_lp(rho) / 2)|`.
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
}

/// The fixed point alone, without the competing bound.
pub fn fixed_point(alpha: f64, bisect_tol: f64) -> Result<FixedPoint> {
    check_alpha(alpha)?;
    let h_alpha = h2(alpha);
    let f = |r: f64| psi_raw(alpha, 0.5 * delta_lp_raw(r, alpha, h_alpha)) - r;

    let (mut lo, mut hi) = (0.0, h_alpha);
    let (f_low, f_high) = (f(lo), f(hi));
    if !(f_low > 0.0 && f_high < 0.0) {
        return Err(Error::Bracket { f_low, f_high });
    }
    let mut iterations = 0;
    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = f(mid);
    while iterations < 200 && (hi - lo > bisect_tol || f_mid.abs() > bisect_tol) {
        if f_mid > 0.0 {
            lo = mid;
        } else if f_mid < 0.0 {
            hi = mid;
        } else {
            break;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break;
        }
        mid = next;
        f_mid = f(mid);
        iterations += 1;
    }
    let delta = delta_lp_raw(mid, alpha, h_alpha);
    let residual = f_mid.abs();
    Ok(FixedPoint {
        rho: mid,
        xi_star: 0.5 * delta,
        delta_lp: delta,
        residual,
        iterations,
        bracket: (lo, hi),
        converged: residual <= bisect_tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwBoundResult {
    pub alpha: f64,
    pub rho: f64,
    pub xi_star: f64,
    pub delta_lp_at_rho: f64,
    pub r_sima: f64,
    pub general_bound: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
}

/// `rho(alpha)` together with the competing bound at the same `alpha`.
pub fn rho(params: &CwParams) -> Result<CwBoundResult> {
    params.validate()?;
    let fp = fixed_point(params.alpha, params.bisect_tol)?;
    let r_sima = sima_bound(params)?;
    Ok(CwBoundResult {
        alpha: params.alpha,
        rho: fp.rho,
        xi_star: fp.xi_star,
        delta_lp_at_rho: fp.delta_lp,
        r_sima,
        general_bound: GENERAL_B2_BOUND,
        residual: fp.residual,
        iterations: fp.iterations,
        bracket: fp.bracket,
        converged: fp.converged,
    })
}

/// One point `(e, alpha')` of the Sima et al. inner problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimaInner {
    pub e: f64,
    pub alpha_prime: f64,
    pub p0: f64,
    pub p1: f64,
    pub p_minus1: f64,
    pub h3: f64,
    /// `max{ e h(alpha'/e), [e h(alpha'/e) + (1-e) H3] / 2 }`.
    pub value: f64,
}

fn alpha_prime_range(alpha: f64, e: f64) -> (f64, f64) {
    let hi = e.min(alpha);
    ((alpha - 1.0 + e).max(0.0).min(hi), hi)
}

impl SimaInner {
    pub fn new(alpha: f64, e: f64, alpha_prime: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::Domain(format!("e = {e} not in [0, 1]")));
        }
        let (lo, hi) = alpha_prime_range(alpha, e);
        if !(alpha_prime >= lo - DOMAIN_SLACK && alpha_prime <= hi + DOMAIN_SLACK) {
            return Err(Error::Domain(format!("alpha' = {alpha_prime} not in [{lo}, {hi}]")));
        }
        let ap = alpha_prime.clamp(lo, hi);
        let (p0, h3) = ternary(alpha, e, ap);
        let p1 = 0.5 * (1.0 - p0);
        Ok(SimaInner {
            e,
            alpha_prime: ap,
            p0,
            p1,
            p_minus1: p1,
            h3,
            value: sima_objective(alpha, e, ap),
        })
    }
}

/// `p0` and `H(p0, p1, p1)` for the suffix difference; degenerate at `e = 1`.
fn ternary(alpha: f64, e: f64, ap: f64) -> (f64, f64) {
    let rest = 1.0 - e;
    if rest <= 0.0 {
        return (1.0, 0.0);
    }
    let a = alpha - ap;
    let b = rest - alpha + ap;
    let p0 = ((a * a + b * b) / (rest * rest)).min(1.0);
    // H(p0, (1-p0)/2, (1-p0)/2) = h(p0) + (1 - p0)
    (p0, h2(p0) + (1.0 - p0))
}

#[inline]
fn sima_objective(alpha: f64, e: f64, ap: f64) -> f64 {
    let prefix = if e > 0.0 { e * h2((ap / e).min(1.0)) } else { 0.0 };
    let suffix = if e < 1.0 { (1.0 - e) * ternary(alpha, e, ap).1 } else { 0.0 };
    prefix.max(0.5 * (prefix + suffix))
}

/// Grid search over `points` values, then `passes` refinements that each cut
/// the step by 10 around the incumbent. `better(a, b)` is true when `a` beats `b`.
fn zoom_search(
    lo: f64,
    hi: f64,
    points: usize,
    passes: usize,
    f: impl Fn(f64) -> f64,
    better: impl Fn(f64, f64) -> bool,
) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let (mut a, mut b) = (lo, hi);
    let mut step = (hi - lo) / (points - 1) as f64;
    let mut count = points;
    let mut best = (lo, f(lo));
    for pass in 0..=passes {
        for i in 0..count {
            let x = if i + 1 == count { b } else { a + step * i as f64 };
            let v = f(x);
            if better(v, best.1) {
                best = (x, v);
            }
        }
        if pass < passes {
            // zoom 10x: +-ZOOM_HALF_WIDTH old steps around the incumbent
            a = (best.0 - ZOOM_HALF_WIDTH * step).max(lo);
            b = (best.0 + ZOOM_HALF_WIDTH * step).min(hi);
            step /= 10.0;
            count = ((b - a) / step).round() as usize + 1;
        }
    }
    best
}

fn sima_inner_max(alpha: f64, e: f64, points: usize, passes: usize) -> f64 {
    let (lo, hi) = alpha_prime_range(alpha, e);
    zoom_search(lo, hi, points, passes, |ap| sima_objective(alpha, e, ap), |a, b| a > b).1
}

/// `R_S(alpha) = min_e max_{alpha'} max{...}` by nested refined grid search.
pub fn sima_bound(params: &CwParams) -> Result<f64> {
    params.validate()?;
    let alpha = params.alpha;
    let outer = |e: f64| sima_inner_max(alpha, e, params.alpha_grid, params.refine_passes);
    Ok(zoom_search(0.0, 1.0, params.e_grid, params.refine_passes, outer, |a, b| a < b).1)
}

#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub alpha: f64,
    pub outcome: std::result::Result<CwBoundResult, String>,
}

/// `alpha_min, alpha_min + step, ...` up to `alpha_max`, rounded to 12 decimals.
pub fn alpha_grid(alpha_min: f64, alpha_max: f64, step: f64) -> Result<Vec<f64>> {
    check_alpha(alpha_min)?;
    check_alpha(alpha_max)?;
    if alpha_max < alpha_min {
        return Err(Error::Domain("alpha_max below alpha_min".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Domain("step must be positive".into()));
    }
    let count = ((alpha_max - alpha_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((alpha_min + step * i as f64) * 1e12).round() / 1e12)
        .filter(|&a| a <= alpha_max + 1e-12)
        .collect())
}

/// Sweep of [`rho`] over an alpha range; per-point failures are kept in place.
pub fn cw_curve(alpha_min: f64, alpha_max: f64, step: f64, params: &CwParams) -> Result<Vec<CurvePoint>> {
    let alphas = alpha_grid(alpha_min, alpha_max, step)?;
    Ok(alphas
        .into_iter()
        .map(|alpha| CurvePoint {
            alpha,
            outcome: rho(&CwParams { alpha, ..params.clone() }).map_err(|e| e.to_string()),
        })
        .collect())
}
