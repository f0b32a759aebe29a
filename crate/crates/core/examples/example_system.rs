//! Runs discovery and the Granger baseline on seeded draws of the example
//! system and prints per-seed TPR, FPR and AUC.
//!
//! cargo run --release -p ucn-core --example example_system -- [seeds]

use std::time::Instant;

use ucn_core::eval::{confusion, granger_scores, roc, ScoreTensor};
use ucn_core::synth::{example_network, generate};
use ucn_core::{discover, HceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map_or(Ok(5), |s| s.parse())?;
    let config = HceConfig { parallel: false, ..Default::default() };
    println!("seed   tpr    fpr    auc_hce auc_gc  secs");
    for seed in 0..seeds {
        let (panel, truth) = generate(&example_network(), 2000, seed)?;
        let truth = truth.with_tau_max(config.tau_max)?;
        let start = Instant::now();
        let found = discover(&panel, &HceConfig { seed, ..config })?;
        let secs = start.elapsed().as_secs_f64();
        let c = confusion(&found, &truth)?;
        let hce = roc(&ScoreTensor::from_ucn(&found), &truth, 101)?;
        let gc = roc(&granger_scores(&panel, config.tau_max)?, &truth, 101)?;
        println!(
            "{seed:<6} {:.3}  {:.3}  {:.3}   {:.3}   {secs:.1}",
            c.tpr(),
            c.fpr(),
            hce.auc,
            gc.auc
        );
        if seeds == 1 {
            print!("{}", found.describe());
        }
    }
    Ok(())
}
