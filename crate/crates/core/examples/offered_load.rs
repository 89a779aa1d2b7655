//! Offered load and adequacy of a day with a morning rush.

use cscs::harness::reference_dataset;
use cscs::queue::DEFAULT_QUAD_TOL;
use cscs::{concurrency_cdf, offered_load, AdequacyProfile, ArrivalProfile, ConcurrencyModel, CountBound, PhaseTypeDist};

fn main() -> cscs::Result<()> {
    let attrs = reference_dataset(5)?;
    let profile = ArrivalProfile::new(attrs.slot_length_min, attrs.rates.clone())?;
    // Erlang-4 with a one-hour mean stands in for a fitted law.
    let service = PhaseTypeDist::erlang(4, 4.0 / 60.0)?;
    let model = ConcurrencyModel::new(profile, service);

    println!("{:>6} {:>10} {:>12}", "t/min", "v(t)", "P(N <= 10)");
    for hour in 0..=8 {
        let t = 60.0 * hour as f64;
        let v = offered_load(&model, t, DEFAULT_QUAD_TOL)?;
        println!("{t:>6.0} {v:>10.4} {:>12.4}", concurrency_cdf(v, 10)?);
    }

    let adequacy = AdequacyProfile::new(&model, DEFAULT_QUAD_TOL)?;
    println!("peak offered load {:.3}", adequacy.peak_offered_load());
    for n in [5, 10, 15, 20, 30] {
        println!(
            "E[P({n:>2}, t)] = {:.4} (at most), {:.4} (strictly below)",
            adequacy.mean_adequacy(n, 1.0, CountBound::AtMost)?,
            adequacy.mean_adequacy(n, 1.0, CountBound::Below)?
        );
    }
    Ok(())
}
