//! Fit a four-phase law to synthesised stay durations.
//!
//! cargo run --example phase_type_fit -- [data-set index]

use cscs::harness::{reference_dataset, synth_dataset};
use cscs::{empht_fit, EmOptions};

fn main() -> cscs::Result<()> {
    let index = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let attrs = reference_dataset(index)?;
    let (samples, _) = synth_dataset(&attrs, 42)?;
    println!(
        "{}: {} stays, sample mean {:.2} min, sd {:.2} min",
        attrs.name,
        samples.count(),
        samples.mean(),
        samples.std_dev()
    );

    let fit = empht_fit(&samples, &EmOptions::default())?;
    let d = &fit.distribution;
    println!("status {:?} after {} iterations, log-likelihood {:.4}", fit.status, fit.iterations(), fit.log_likelihood());
    for w in &fit.warnings {
        println!("warning: {w:?}");
    }
    println!("alpha = {:.4}", d.alpha().transpose());
    println!("R = {:.5}", d.rate_matrix());
    let sd = (d.second_moment() - d.mean().powi(2)).sqrt();
    println!("fitted mean {:.2} min, sd {:.2} min", d.mean(), sd);
    for x in [15.0, 30.0, 60.0, 120.0, 240.0] {
        println!("  P(stay <= {x:>5.0} min) = {:.4}", d.cdf(x)?);
    }
    Ok(())
}
