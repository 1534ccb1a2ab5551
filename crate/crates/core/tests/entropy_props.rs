use b2bounds::entropy::{
    coarse_bound, dual_value, recertify, solve_relaxation, verify_toeplitz_truncation, EntropyBound, RelaxationConfig,
    RECERTIFY_TOL,
};
use b2bounds::math::{autocorrelation, entropy, SourcePmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(q: usize, grid_size: usize) -> EntropyBound {
    let cfg = RelaxationConfig { grid_size, ..RelaxationConfig::new(q) };
    let b = solve_relaxation(&cfg).unwrap();
    assert!(b.converged, "q={q} M={grid_size} did not converge");
    b
}

fn random_source(rng: &mut ChaCha8Rng, q: usize) -> SourcePmf {
    // mix of dense and sparse supports
    let sparse = rng.gen_bool(0.3);
    let w: Vec<f64> = (0..q)
        .map(|_| if sparse && rng.gen_bool(0.5) { 0.0 } else { rng.gen::<f64>().powi(3) })
        .collect();
    if w.iter().sum::<f64>() == 0.0 {
        return SourcePmf::uniform(q).unwrap();
    }
    SourcePmf::from_weights(w).unwrap()
}

#[test]
fn frozen_values_from_conic_oracle() {
    // independent interior-point solve of the same grid relaxation
    for (q, m, h) in [
        (2, 4096, 1.5),
        (3, 4096, 2.231623087),
        (9, 4096, 3.996983981),
        (9, 64, 3.997361155),
        (9, 316, 3.997051182),
        (12, 4096, 4.433355636),
        (13, 4096, 4.553716265),
    ] {
        let b = solve(q, m);
        assert!((b.value_bits - h).abs() < 1e-6, "q={q} M={m}: {} vs {h}", b.value_bits);
    }
}

#[test]
fn weak_duality_against_random_sources() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for q in 2..=16 {
        let bound = solve(q, 4096).value_bits;
        for _ in 0..1000 {
            let p = random_source(&mut rng, q);
            let h = entropy(&autocorrelation(&p).expand()).unwrap().bits();
            assert!(h <= bound + 1e-9, "q={q} h={h} bound={bound}");
        }
    }
}

#[test]
fn any_nonnegative_multipliers_bound_autocorrelations() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let q = rng.gen_range(2..=16);
        let m = rng.gen_range(2 * q..200);
        let mu = rng.gen_range(0.0..5.0);
        let lambda: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.1) { rng.gen_range(0.0..2.0) } else { 0.0 }).collect();
        let g = dual_value(q, mu, &lambda).unwrap().bits();
        for _ in 0..20 {
            let p = random_source(&mut rng, q);
            let h = entropy(&autocorrelation(&p).expand()).unwrap().bits();
            assert!(h <= g + 1e-12, "q={q} h={h} g={g}");
        }
    }
}

#[test]
fn value_lies_under_the_coarse_bound() {
    for q in 2..=16 {
        let b = solve(q, 4096);
        let coarse = coarse_bound(q).unwrap().bits();
        assert!(b.value_bits <= coarse + 1e-9, "q={q}");
        let uniform = entropy(&autocorrelation(&SourcePmf::uniform(q).unwrap()).expand()).unwrap().bits();
        assert!(uniform <= b.value_bits + 1e-9);
    }
}

#[test]
fn certificates_are_self_contained() {
    for q in 2..=16 {
        let b = solve(q, 4096);
        let again = b.certificate.recompute().unwrap().bits();
        assert!((again - b.value_bits).abs() <= 1e-12, "q={q}");
        assert!(b.certificate.mu >= 0.0 && b.certificate.lambda.iter().all(|&(_, v)| v > 0.0));
        let rc = recertify(&b.to_record(), RECERTIFY_TOL).unwrap();
        assert!(rc.valid);
    }
}

#[test]
fn duality_gap_is_small() {
    for q in 2..=16 {
        let b = solve(q, 4096);
        let h = b.primal.entropy().bits();
        assert!(h >= b.value_bits - 1e-6, "q={q} gap={}", b.value_bits - h);
        assert!(h <= b.value_bits + 1e-9, "q={q}");
        assert!(b.primal.half()[0] >= 1.0 / q as f64 - 1e-9);
    }
}

#[test]
fn nested_grid_refinement_never_loosens() {
    // M - 1 in {9, 63, 315, 4095}: each grid contains the previous one
    for q in [2, 3, 4, 5] {
        let vals: Vec<f64> = [10, 64, 316, 4096].iter().map(|&m| solve(q, m).value_bits).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "q={q} {vals:?}");
    }
    for q in [9, 12, 16] {
        let vals: Vec<f64> = [64, 316, 4096].iter().map(|&m| solve(q, m).value_bits).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "q={q} {vals:?}");
    }
}

#[test]
fn primal_truncations_stay_psd() {
    let b = solve(9, 4096);
    for (n, min) in verify_toeplitz_truncation(&b.primal, &[2, 10, 50, 100]).unwrap() {
        assert!(min >= -1e-8, "N={n} min={min}");
    }
}

#[test]
fn binary_anchor() {
    let t = std::time::Instant::now();
    let b = solve(2, 4096);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert!((b.value_bits - 1.5).abs() < 1e-6);
    // the Gibbs primal is the uniform autocorrelation (1/4, 1/2, 1/4)
    assert!((b.primal.half()[0] - 0.5).abs() < 1e-6 && (b.primal.half()[1] - 0.25).abs() < 1e-6);
}
