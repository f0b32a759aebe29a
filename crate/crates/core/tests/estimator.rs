use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ucn_core::entropy::{causal_entropy, causal_entropy_by_decomposition, kl_entropy, EstimatorConfig};

/// `X = c·Z + U`, `Y = c·Z + V`, `(U, V)` unit normals with correlation `rho`.
fn gaussian_triple(m: usize, rho: f64, c: f64, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let (mut x, mut y, mut z) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        let (a, b, w) = (draw(), draw(), draw());
        x.push(c * w + a);
        y.push(c * w + rho * a + (1.0 - rho * rho).sqrt() * b);
        z.push(w);
    }
    (x, y, z)
}

/// `I(X;Y|Z) = ½ ln(|Σ_xz|·|Σ_yz| / (|Σ_z|·|Σ_xyz|))` for the triple above.
fn gaussian_cmi(rho: f64, c: f64) -> f64 {
    let v = c * c + 1.0;
    let s = Matrix3::new(v, c * c + rho, c, c * c + rho, v, c, c, c, 1.0);
    let det2 = |i: usize, j: usize| s[(i, i)] * s[(j, j)] - s[(i, j)] * s[(j, i)];
    if c == 0.0 {
        // Z is independent of (X, Y): plain mutual information.
        return 0.5 * (s[(0, 0)] * s[(1, 1)] / det2(0, 1)).ln();
    }
    0.5 * (det2(0, 2) * det2(1, 2) / (s[(2, 2)] * s.determinant())).ln()
}

#[test]
fn oracle_matches_closed_forms() {
    assert!((gaussian_cmi(0.6, 0.0) - 0.2231435513).abs() < 1e-9);
    // With a common driver the partial correlation is still rho.
    for rho in [0.0f64, 0.3, 0.8] {
        let want = -0.5 * (1.0 - rho * rho).ln();
        assert!((gaussian_cmi(rho, 0.8) - want).abs() < 1e-12);
    }
}

#[test]
fn gaussian_information_within_five_hundredths() {
    let cfg = EstimatorConfig::default();
    for c in [0.0, 0.8] {
        for rho in [0.0, 0.3, 0.6, 0.8] {
            let want = gaussian_cmi(rho, c);
            for seed in 0..3 {
                let (x, y, z) = gaussian_triple(2000, rho, c, 100 + seed);
                let got = if c == 0.0 {
                    causal_entropy(&x, &y, &[], &cfg).unwrap()
                } else {
                    causal_entropy(&x, &y, &[&z], &cfg).unwrap()
                };
                assert!((got - want).abs() <= 0.05, "rho={rho} c={c} seed={seed}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn observed_common_driver_explains_dependence() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let w: Vec<f64> = (0..2000).map(|_| draw()).collect();
    let x: Vec<f64> = w.iter().map(|v| v + draw()).collect();
    let y: Vec<f64> = w.iter().map(|v| v + draw()).collect();
    let cfg = EstimatorConfig::default();
    assert!(causal_entropy(&x, &y, &[], &cfg).unwrap() > 0.1);
    assert!(causal_entropy(&x, &y, &[&w], &cfg).unwrap().abs() <= 0.05);
}

#[test]
fn entropy_calibration_over_ten_seeds() {
    let cfg = EstimatorConfig::default();
    let half_ln_2pie = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let cases: [(&str, f64); 3] = [("uniform", 0.0), ("normal", half_ln_2pie), ("normal2", half_ln_2pie + 2f64.ln())];
    for (name, want) in cases {
        let mean = (0..10)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v: Vec<f64> = (0..2000)
                    .map(|_| match name {
                        "uniform" => rand::Rng::random::<f64>(&mut rng),
                        "normal" => StandardNormal.sample(&mut rng),
                        _ => 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng),
                    })
                    .collect();
                kl_entropy(&[&v], &cfg).unwrap()
            })
            .sum::<f64>()
            / 10.0;
        assert!((mean - want).abs() <= 0.05, "{name}: {mean} vs {want}");
    }
}

#[test]
fn count_form_agrees_with_entropy_decomposition() {
    let cfg = EstimatorConfig::default();
    for (rho, c) in [(0.0, 0.8), (0.6, 0.0), (0.6, 0.8), (0.8, 0.5)] {
        let (x, y, z) = gaussian_triple(2000, rho, c, 7);
        let zs: Vec<&[f64]> = if c == 0.0 { vec![] } else { vec![&z] };
        let a = causal_entropy(&x, &y, &zs, &cfg).unwrap();
        let b = causal_entropy_by_decomposition(&x, &y, &zs, &cfg).unwrap();
        assert!((a - b).abs() <= 0.1, "rho={rho} c={c}: {a} vs {b}");
    }
}

#[test]
fn kl_scale_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..500).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let cfg = EstimatorConfig { jitter_scale: 0.0, ..EstimatorConfig::default() };
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let base = kl_entropy(&refs, &cfg).unwrap();
    for a in [0.25, 3.0, 7.5] {
        let scaled: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|v| v * a).collect()).collect();
        let refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let h = kl_entropy(&refs, &cfg).unwrap();
        assert!((h - base - 3.0 * f64::ln(a)).abs() < 1e-9, "a={a}: {h} vs {base}");
    }
}

/// Values on a 1/64 grid, so `4v + b` for dyadic `b` is computed exactly
/// and every max-norm comparison survives the map unchanged.
fn dyadic(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            (v * 64.0).round() / 64.0
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_permutations_change_nothing(seed in 0u64..1000, dz in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..2 + dz)
            .map(|_| (0..300).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let mut order: Vec<usize> = (0..300).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<Vec<f64>> = cols.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
        let cfg = EstimatorConfig::default().with_seed(seed);
        let est = |c: &[Vec<f64>]| {
            let z: Vec<&[f64]> = c[2..].iter().map(Vec::as_slice).collect();
            causal_entropy(&c[0], &c[1], &z, &cfg).unwrap()
        };
        prop_assert_eq!(est(&cols).to_bits(), est(&shuffled).to_bits());
        let all: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let all_s: Vec<&[f64]> = shuffled.iter().map(Vec::as_slice).collect();
        prop_assert_eq!(kl_entropy(&all, &cfg).unwrap().to_bits(), kl_entropy(&all_s, &cfg).unwrap().to_bits());
    }

    #[test]
    fn x_and_y_are_interchangeable(seed in 0u64..1000, dz in 0usize..3) {
        let cols: Vec<Vec<f64>> = (0..2 + dz as u64).map(|i| dyadic(250, seed * 7 + i)).collect();
        let z: Vec<&[f64]> = cols[2..].iter().map(Vec::as_slice).collect();
        let cfg = EstimatorConfig::default();
        let a = causal_entropy(&cols[0], &cols[1], &z, &cfg).unwrap();
        let b = causal_entropy(&cols[1], &cols[0], &z, &cfg).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn uniform_affine_maps_change_nothing(seed in 0u64..1000, shift in -8i32..8, dz in 0usize..3) {
        let cols: Vec<Vec<f64>> = (0..2 + dz as u64).map(|i| dyadic(250, seed * 11 + i)).collect();
        let b = shift as f64 / 4.0;
        let mapped: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|v| 4.0 * v + b).collect()).collect();
        let cfg = EstimatorConfig { jitter_scale: 0.0, ..EstimatorConfig::default() };
        let est = |c: &[Vec<f64>]| {
            let z: Vec<&[f64]> = c[2..].iter().map(Vec::as_slice).collect();
            causal_entropy(&c[0], &c[1], &z, &cfg).unwrap()
        };
        prop_assert_eq!(est(&cols).to_bits(), est(&mapped).to_bits());
    }
}
