//! Wall time of one conditional estimate as the conditioning set grows.
//!
//! cargo run --release -p ucn-core --example estimator_timing

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ucn_core::entropy::{causal_entropy, kl_entropy, EstimatorConfig};

fn main() {
    let m = 1995;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cols: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let cfg = EstimatorConfig::default();
    for dz in 0..=9 {
        let z: Vec<&[f64]> = cols[2..2 + dz].iter().map(Vec::as_slice).collect();
        let start = Instant::now();
        let reps = 5;
        let mut v = 0.0;
        for _ in 0..reps {
            v = causal_entropy(&cols[0], &cols[1], &z, &cfg).unwrap();
        }
        let cmi = start.elapsed().as_secs_f64() * 1e3 / reps as f64;
        let all: Vec<&[f64]> = cols[..2 + dz].iter().map(Vec::as_slice).collect();
        let start = Instant::now();
        for _ in 0..reps {
            kl_entropy(&all, &cfg).unwrap();
        }
        let knn = start.elapsed().as_secs_f64() * 1e3 / reps as f64;
        println!("dz={dz:<2} {cmi:7.2} ms, joint k-NN alone {knn:7.2} ms  (I={v:.4})");
    }
}
