//! Adequacy curves and antenna selections for the eight reference data sets.

use cscs::harness::{reference_datasets, run_planning_experiment, PlanningOptions};

fn main() {
    let opts = PlanningOptions::default();
    let sets = reference_datasets();
    println!("{:>5} {:>8} {:>8} {:>10} {:>10} {:>8} {:>8}", "set", "mean", "sd", "E[P(10)]", "E[P(20)]", "eta N_U", "gam N_U");
    for (attrs, plan) in sets.iter().zip(run_planning_experiment(&sets, &opts)) {
        match plan {
            Ok(p) => println!(
                "{:>5} {:>8.2} {:>8.2} {:>10.4} {:>10.4} {:>8} {:>8}",
                attrs.name,
                p.sample_mean,
                p.sample_sd,
                p.mean_adequacy(10).unwrap_or(f64::NAN),
                p.mean_adequacy(20).unwrap_or(f64::NAN),
                p.eta_selection.map_or("-".into(), |s| s.n_u.to_string()),
                p.gamma_selection.map_or("-".into(), |s| s.n_u.to_string()),
            ),
            Err(e) => println!("{:>5} failed: {e}", attrs.name),
        }
    }
}
