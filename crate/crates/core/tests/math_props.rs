use b2bounds::math::{
    autocorrelation, binary_entropy, binary_entropy_inv, entropy, is_psd, spectrum_eval, toeplitz, SourcePmf,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn source_pmf() -> impl Strategy<Value = SourcePmf> {
    (2usize..=16)
        .prop_flat_map(|q| prop::collection::vec(0.0f64..1.0, q))
        .prop_filter("nonzero mass", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| SourcePmf::from_weights(w).unwrap())
}

/// |sum_j p_j e^{ij theta}|^2 computed directly.
fn power(p: &[f64], theta: f64) -> f64 {
    let (re, im) = p.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, &pj)| {
        let a = j as f64 * theta;
        (re + pj * a.cos(), im + pj * a.sin())
    });
    re * re + im * im
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn autocorrelation_is_a_difference_pmf(p in source_pmf()) {
        let q = p.q();
        let r = autocorrelation(&p);
        let full = r.expand();
        prop_assert_eq!(full.len(), 2 * q - 1);
        prop_assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(r.half()[0] >= 1.0 / q as f64 - 1e-12);
        let h = entropy(&full).unwrap().bits();
        prop_assert!(h <= ((2 * q - 1) as f64).log2() + 1e-12);
    }

    #[test]
    fn spectrum_is_nonnegative_and_equals_power(p in source_pmf()) {
        let r = autocorrelation(&p);
        for j in 0..512 {
            let theta = std::f64::consts::PI * j as f64 / 511.0;
            let s = spectrum_eval(&r, theta);
            prop_assert!(s >= -1e-12, "theta={theta} s={s}");
            prop_assert!((s - power(p.probs(), theta)).abs() <= 1e-12);
        }
    }

    #[test]
    fn toeplitz_sections_are_psd(p in source_pmf()) {
        let r = autocorrelation(&p);
        for n in 1..=64 {
            let rep = is_psd(&toeplitz(&r, n).unwrap(), 1e-10);
            prop_assert!(rep.psd && rep.min_eigenvalue >= -1e-10, "N={n} min={}", rep.min_eigenvalue);
        }
    }

    #[test]
    fn spectrum_matches_power_at_random_angles(p in source_pmf(), theta in -10.0f64..10.0) {
        let r = autocorrelation(&p);
        prop_assert!((spectrum_eval(&r, theta) - power(p.probs(), theta)).abs() <= 1e-12);
    }
}

#[test]
fn psd_agrees_with_quadratic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let q = rng.gen_range(2..=16);
        let p = SourcePmf::from_weights((0..q).map(|_| rng.gen::<f64>() + 1e-3).collect()).unwrap();
        let r = autocorrelation(&p);
        for n in 1..=8 {
            let t = toeplitz(&r, n).unwrap();
            let rep = is_psd(&t, 1e-10);
            let tol = 1e-10;
            let forms_ok = (0..1000).all(|_| {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                let form: f64 = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| x[i] * t.entry(i, j) * x[j])
                    .sum();
                form >= -tol * norm2
            });
            assert_eq!(rep.psd, forms_ok, "trial {trial} N={n}");
        }
    }
}

#[test]
fn indefinite_sequence_fails_both_tests() {
    // r_1 = 0.45 > r_0 / 2 makes the order-3 section indefinite
    let r = b2bounds::math::DifferencePmf::new(vec![0.1, 0.45]).unwrap();
    let t = toeplitz(&r, 3).unwrap();
    let rep = is_psd(&t, 1e-10);
    assert!(!rep.psd);
    let x = [1.0, -1.0, 1.0];
    let form: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| x[i] * t.entry(i, j) * x[j]).sum();
    assert!(form < 0.0);
}

#[test]
fn binary_entropy_inverse_round_trip() {
    for i in 0..=1000 {
        let y = i as f64 / 1000.0;
        let x = binary_entropy_inv(y).unwrap();
        assert!((0.0..=0.5).contains(&x));
        let back = binary_entropy(x).unwrap().bits();
        assert!((back - y).abs() <= 1e-10, "y={y} back={back}");
    }
}
