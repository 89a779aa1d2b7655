//! Size the sojourner and inhabitant access points for one data set.

use cscs::harness::{reference_dataset, synth_dataset};
use cscs::planner::{plan, SelectionRule};
use cscs::{disk_overlap_area, empht_fit, ConcurrencyModel, EmOptions, PlannerConfig};

fn main() -> cscs::Result<()> {
    let attrs = reference_dataset(1)?;
    let (samples, profile) = synth_dataset(&attrs, 7)?;
    let fit = empht_fit(&samples, &EmOptions::default())?;
    let model = ConcurrencyModel::new(profile, fit.distribution);

    // Sojourner cell of radius 20 m whose centre sits 30 m from a 40 m inhabitant cell.
    let overlap = disk_overlap_area(20.0, 40.0, 30.0)?;
    let ratio = overlap / (std::f64::consts::PI * 20.0 * 20.0);
    println!("overlap area {overlap:.1} m^2, {:.1}% of the sojourner cell", 100.0 * ratio);

    for rule in [SelectionRule::Eta, SelectionRule::Gamma] {
        let cfg = PlannerConfig { rule, overlap_ratio: ratio, n1: 12, ..Default::default() };
        let report = plan(&model, &cfg, 25)?;
        println!(
            "{rule:?}: N_U* = {}, N_ST* = {}, N_IT = {}",
            report.n_u_star, report.n_st_star, report.n_it
        );
    }

    let cfg = PlannerConfig::default();
    let report = plan(&model, &cfg, 25)?;
    println!("{:>4} {:>6} {:>10}", "N_U", "count", "E[P]");
    for (n_u, count, p) in report.table.iter().step_by(3) {
        println!("{n_u:>4} {count:>6} {p:>10.4}");
    }
    Ok(())
}
