//! Monte-Carlo comparison of the two precoding systems.
//!
//! cargo run --release --example bdbf_monte_carlo -- [trials]

use cscs::harness::{compare_systems, run_bdbf_experiment, ScenarioConfig, System};

fn main() -> cscs::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = ScenarioConfig { n_trials: trials, zeta_list: vec![0.25, 1.0, 1.75, 3.0], ..Default::default() };
    let result = run_bdbf_experiment(&cfg)?;
    if result.failure_warning {
        println!("warning: more than 5% of solves failed");
    }

    println!("{:>3} {:>6} {:>6} {:>10} {:>8} {:>12}", "sys", "eps^2", "zeta", "capacity", "se", "interference");
    for c in &result.cells {
        println!(
            "{:>3} {:>6} {:>6} {:>10.3} {:>8.3} {:>12.4}",
            c.system.label(),
            c.eps_sq,
            c.zeta_watts,
            c.mean_capacity_bps,
            c.se_capacity,
            c.mean_interference_w
        );
    }

    println!("\nsystem a against system b at eps^2 = 0");
    for row in compare_systems(&result, Some(0.0))? {
        println!(
            "eps^2 {:>4} zeta {:>4}: {:+8.3} bps (se {:.3}){}",
            row.eps_sq_a,
            row.zeta_watts,
            row.mean_diff_bps,
            row.se_diff,
            if row.flagged { "  flagged" } else { "" }
        );
    }
    let a = result.cell(System::A, 0.1, 1.75).map(|c| c.mean_capacity_bps).unwrap_or(f64::NAN);
    println!("\nsystem a at eps^2 = 0.1, zeta = 1.75 W: {a:.3} bps");
    Ok(())
}
