use std::path::Path;

use anyhow::{bail, Context, Result};
use b2bounds::combinatorics::{
    check_search_guard, distinct_difference_count, is_b2_code, max_b2_exhaustive, prefix_difference_injectivity,
    random_greedy_b2, verify_counting_bound, Code,
};
use b2bounds::cw::{self, CwBoundResult, CwParams};
use b2bounds::entropy::{recertify as replay, CertificateRecord, EntropyBound, RelaxationConfig, RECERTIFY_TOL};
use b2bounds::qary::{coarse_rate, compare_report, qary_bound};
use serde_json::{json, Value};

use crate::args::{CwArgs, Range, SolverArgs};
use crate::report::{full, opt_full, up5, Report};

const TABLE_Q: std::ops::RangeInclusive<usize> = 2..=32;

fn relaxation(q: usize, s: &SolverArgs) -> Result<RelaxationConfig> {
    let cfg = RelaxationConfig {
        q,
        grid_size: s.grid_size,
        dual_tol: s.dual_tol,
        max_iters: s.max_iters,
        toeplitz_check_n: s.toeplitz_n,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn certificate_json(b: &EntropyBound) -> Value {
    json!({
        "converged": b.converged,
        "spectrum_flagged": b.spectrum_flagged(),
        "iterations": b.iterations,
        "certificate": b.to_record(),
    })
}

pub fn qary(q: usize, s: &SolverArgs) -> Result<Report> {
    let cfg = relaxation(q, s)?;
    let bound = qary_bound(&cfg)?;
    let eb = bound.entropy_bound.as_ref().context("solver returned no certificate")?;
    let coarse = coarse_rate(q)?.rate;

    let mut r = Report::new("qary", json!({ "q": q, "solver": s }));
    r.line(format!("q                      {q}"));
    r.line(format!("rate bound             {}", up5(bound.rate)));
    r.line(format!("entropy bound (bits)   {}", up5(bound.entropy_bits)));
    r.line(format!("collision-only rate    {}", up5(coarse)));
    r.line(format!(
        "certificate            mu {} with {} active angles of {}",
        up5(eb.certificate.mu),
        eb.certificate.lambda.len(),
        eb.certificate.grid_size
    ));
    r.line(format!("converged              {}", eb.converged));
    r.line(format!("spectrum check         {}", if eb.spectrum_flagged() { "flagged" } else { "ok" }));
    if !eb.converged {
        r.line("warning: dual tolerance not reached; the value is still a certified bound");
    }

    r.header = vec!["q", "rate", "entropy_bits", "coarse_rate", "converged", "spectrum_min", "toeplitz_min_eig"];
    r.rows.push(vec![
        q.to_string(),
        full(bound.rate),
        full(bound.entropy_bits),
        full(coarse),
        eb.converged.to_string(),
        full(eb.spectrum_min),
        full(eb.toeplitz_min_eig),
    ]);
    let mut res = json!({
        "q": q,
        "rate": bound.rate,
        "entropy_bits": bound.entropy_bits,
        "coarse_rate": coarse,
        "duality_gap_bits": eb.duality_gap_bits,
    });
    merge(&mut res, certificate_json(eb));
    r.results.push(res);
    Ok(r)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

pub fn qary_table(range: Range<usize>, s: &SolverArgs) -> Result<Report> {
    if !TABLE_Q.contains(&range.lo) || !TABLE_Q.contains(&range.hi) {
        bail!("q range {}..{} outside {}..{}", range.lo, range.hi, TABLE_Q.start(), TABLE_Q.end());
    }
    let template = relaxation(range.lo, s)?;
    let qs: Vec<usize> = (range.lo..=range.hi).collect();
    for &q in &qs {
        relaxation(q, s)?;
    }
    let rows = compare_report(&qs, &template)?;

    let mut r = Report::new("qary-table", json!({ "q": range, "solver": s }));
    r.line(format!(
        "{:>3}  {:>8}  {:>8}  {:>9}  {:>9}  {:>8}  {:>9}",
        "q", "computed", "new_ref", "lindstrom", "prev_ours", "wang", "converged"
    ));
    let dash = |x: Option<f64>| x.map(up5).unwrap_or_else(|| "-".into());
    for row in &rows {
        let rf = row.reference;
        r.line(format!(
            "{:>3}  {:>8}  {:>8}  {:>9}  {:>9}  {:>8}  {:>9}",
            row.q,
            up5(row.computed),
            dash(rf.map(|x| x.new_bound)),
            dash(rf.map(|x| x.lindstrom)),
            dash(rf.map(|x| x.previous_ours)),
            dash(rf.map(|x| x.wang)),
            row.converged
        ));
    }
    if rows.iter().any(|row| !row.converged) {
        r.line("warning: some rows did not reach the dual tolerance; their values are still certified bounds");
    }

    r.header = vec!["q", "computed", "new_ref", "lindstrom", "prev_ours", "wang", "delta"];
    for row in &rows {
        let rf = row.reference;
        r.rows.push(vec![
            row.q.to_string(),
            full(row.computed),
            opt_full(rf.map(|x| x.new_bound)),
            opt_full(rf.map(|x| x.lindstrom)),
            opt_full(rf.map(|x| x.previous_ours)),
            opt_full(rf.map(|x| x.wang)),
            opt_full(row.delta),
        ]);
        let mut res = json!({
            "q": row.q,
            "computed": row.computed,
            "entropy_bits": row.bound.entropy_bits,
            "reference": rf,
            "delta": row.delta,
        });
        if let Some(eb) = &row.bound.entropy_bound {
            merge(&mut res, certificate_json(eb));
        }
        r.results.push(res);
    }
    Ok(r)
}

fn cw_params(alpha: f64, a: &CwArgs) -> CwParams {
    CwParams {
        alpha,
        bisect_tol: a.bisect_tol,
        e_grid: a.e_grid,
        alpha_grid: a.alpha_grid,
        refine_passes: a.refine_passes,
    }
}

const CURVE_HEADER: [&str; 7] = ["alpha", "rho", "xi_star", "delta_lp", "r_sima", "general_ref", "converged"];

fn curve_row(c: &CwBoundResult) -> Vec<String> {
    vec![
        full(c.alpha),
        full(c.rho),
        full(c.xi_star),
        full(c.delta_lp_at_rho),
        full(c.r_sima),
        full(c.general_bound),
        c.converged.to_string(),
    ]
}

pub fn cw(alpha: f64, a: &CwArgs) -> Result<Report> {
    let params = cw_params(alpha, a);
    params.validate()?;
    let c = cw::rho(&params)?;

    let mut r = Report::new("cw", json!({ "alpha": alpha, "params": a }));
    r.line(format!("alpha                  {}", up5(c.alpha)));
    r.line(format!("rate bound rho         {}", up5(c.rho)));
    r.line(format!("xi*                    {}", up5(c.xi_star)));
    r.line(format!("delta_LP(rho)          {}", up5(c.delta_lp_at_rho)));
    r.line(format!("competing bound R_S    {}", up5(c.r_sima)));
    r.line(format!("general B2 bound       {}", up5(c.general_bound)));
    r.line(format!("below general bound    {}", c.rho <= c.general_bound));
    r.line(format!("converged              {}", c.converged));
    r.header = CURVE_HEADER.to_vec();
    r.rows.push(curve_row(&c));
    r.results.push(serde_json::to_value(&c)?);
    if !c.converged {
        r.failed = true;
    }
    Ok(r)
}

pub fn cw_curve(range: Range<f64>, step: f64, a: &CwArgs) -> Result<Report> {
    cw_params(range.lo, a).validate()?;
    let points = cw::cw_curve(range.lo, range.hi, step, &cw_params(range.lo, a))?;

    let mut r = Report::new("cw-curve", json!({ "alpha": range, "step": step, "params": a }));
    r.line(format!("{:>7}  {:>7}  {:>7}  {:>9}", "alpha", "rho", "r_sima", "converged"));
    r.header = CURVE_HEADER.to_vec();
    for p in &points {
        match &p.outcome {
            Ok(c) => {
                r.line(format!("{:>7}  {:>7}  {:>7}  {:>9}", up5(c.alpha), up5(c.rho), up5(c.r_sima), c.converged));
                r.rows.push(curve_row(c));
                r.results.push(serde_json::to_value(c)?);
                r.failed |= !c.converged;
            }
            Err(msg) => {
                r.line(format!("{:>7}  error: {msg}", up5(p.alpha)));
                let mut row = vec![full(p.alpha)];
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push("false".into());
                r.rows.push(row);
                r.results.push(json!({ "alpha": p.alpha, "error": msg }));
                r.failed = true;
            }
        }
    }
    Ok(r)
}

struct Check {
    property: String,
    passed: bool,
    detail: String,
}

fn code_checks(label: &str, code: &Code, checks: &mut Vec<Check>) {
    let b2 = is_b2_code(code);
    let detail = match &b2.violation {
        Some(((a, b), (c, d), sum)) => {
            let w = code.to_strings();
            format!("{}+{} = {}+{} = {:?}", w[*a], w[*b], w[*c], w[*d], sum)
        }
        None => format!("{} words", code.len()),
    };
    checks.push(Check { property: format!("{label}: B2 property"), passed: b2.is_b2, detail });

    let bad: Vec<usize> = (0..=code.n()).filter(|&e| !matches!(prefix_difference_injectivity(code, e), Ok(true))).collect();
    checks.push(Check {
        property: format!("{label}: prefix-class differences distinct for every prefix length"),
        passed: bad.is_empty(),
        detail: if bad.is_empty() { format!("e = 0..{}", code.n()) } else { format!("repeats at e = {bad:?}") },
    });

    let m = code.len();
    let distinct = distinct_difference_count(code);
    checks.push(Check {
        property: format!("{label}: ordered differences distinct"),
        passed: distinct == m * m.saturating_sub(1),
        detail: format!("{distinct} of {}", m * m.saturating_sub(1)),
    });

    if code.constant_weight().is_some() && b2.is_b2 {
        match verify_counting_bound(code) {
            Ok(rep) => {
                let broken: Vec<String> = rep
                    .rows
                    .iter()
                    .filter(|row| !row.holds)
                    .map(|row| format!("i={}: {} > {}", row.i, row.lhs, row.rhs))
                    .collect();
                checks.push(Check {
                    property: format!("{label}: distance-distribution counting bound"),
                    passed: rep.all_hold,
                    detail: if broken.is_empty() { format!("{} values of i", rep.rows.len()) } else { broken.join("; ") },
                });
            }
            Err(e) => checks.push(Check {
                property: format!("{label}: distance-distribution counting bound"),
                passed: false,
                detail: e.to_string(),
            }),
        }
    }
}

pub fn verify(n: usize, q: u8, weight: Option<usize>, seed: u64, samples: usize) -> Result<Report> {
    check_search_guard(n, q)?;
    let out = max_b2_exhaustive(n, q, weight)?;
    let mut checks = Vec::new();
    code_checks("exhaustive witness", &out.witness, &mut checks);
    for i in 0..samples as u64 {
        let s = seed.wrapping_add(i);
        let code = random_greedy_b2(n, q, weight, s)?;
        code_checks(&format!("greedy code (seed {s})"), &code, &mut checks);
    }

    let mut r = Report::new(
        "verify",
        json!({ "n": n, "q": q, "weight": weight, "seed": seed, "samples": samples }),
    );
    let scope = weight.map_or(String::new(), |w| format!(", weight {w}"));
    r.line(format!("maximum B2 code size for n = {n}, q = {q}{scope}: {}", out.max_size));
    r.line(format!("witness: {}", out.witness.to_strings().join(" ")));
    for c in &checks {
        r.line(format!("{}  {}  ({})", if c.passed { "PASS" } else { "FAIL" }, c.property, c.detail));
    }

    r.header = vec!["property", "passed", "detail"];
    r.results.push(json!({
        "kind": "search",
        "max_size": out.max_size,
        "witness": out.witness,
        "nodes": out.nodes,
    }));
    for c in &checks {
        r.rows.push(vec![c.property.clone(), c.passed.to_string(), c.detail.clone()]);
        r.results.push(json!({ "kind": "check", "property": c.property, "passed": c.passed, "detail": c.detail }));
    }
    r.failed = checks.iter().any(|c| !c.passed);
    Ok(r)
}

/// Certificates inside a file: a bare record, or the `results` of a JSON report.
fn load_certificates(path: &Path) -> Result<Vec<CertificateRecord>> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(results) = doc.get("results").and_then(Value::as_array) {
        let records = results
            .iter()
            .filter_map(|r| r.get("certificate"))
            .map(|c| serde_json::from_value(c.clone()))
            .collect::<std::result::Result<Vec<CertificateRecord>, _>>()
            .context("malformed certificate in results")?;
        if records.is_empty() {
            bail!("no certificates in {}", path.display());
        }
        return Ok(records);
    }
    Ok(vec![serde_json::from_value(doc).context("not a certificate record")?])
}

pub fn recertify(path: &Path) -> Result<Report> {
    let records = load_certificates(path)?;
    let mut r = Report::new("recertify", json!({ "path": path.display().to_string(), "tolerance": RECERTIFY_TOL }));
    r.header = vec!["q", "stored_bits", "recomputed_bits", "valid", "detail"];
    for rec in &records {
        let (recomputed, valid, detail) = match replay(rec, RECERTIFY_TOL) {
            Ok(rc) if rc.valid => (Some(rc.recomputed_bits), true, "match".to_string()),
            Ok(rc) => (
                Some(rc.recomputed_bits),
                false,
                format!("off by {} bits", up5((rc.recomputed_bits - rc.stored_bits).abs())),
            ),
            Err(e) => (None, false, e.to_string()),
        };
        r.line(format!(
            "q = {}  stored {}  recomputed {}  {}",
            rec.q,
            up5(rec.value_bits),
            recomputed.map(up5).unwrap_or_else(|| "-".into()),
            if valid { "valid".to_string() } else { format!("INVALID: {detail}") }
        ));
        r.rows.push(vec![
            rec.q.to_string(),
            full(rec.value_bits),
            opt_full(recomputed),
            valid.to_string(),
            detail.clone(),
        ]);
        r.results.push(json!({
            "q": rec.q,
            "stored_bits": rec.value_bits,
            "recomputed_bits": recomputed,
            "valid": valid,
            "detail": detail,
        }));
        r.failed |= !valid;
    }
    Ok(r)
}
