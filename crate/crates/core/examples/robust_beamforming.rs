//! Auxiliary covariance design under a bounded channel-error ball.

use cscs::linalg::CMat;
use cscs::mimo::{gaussian_matrix, sample_error, stack_rows, PerturbMode};
use cscs::robust::{certificates, SubcarrierProblem};
use cscs::{bd_precoder, interference, solve_p2, RobustBfProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cscs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps_sq = 0.5;
    let sojourners: Vec<CMat> = (0..2).map(|_| gaussian_matrix(2, 8, &mut rng)).collect();
    let estimates: Vec<CMat> = (0..2).map(|_| gaussian_matrix(2, 8, &mut rng)).collect();
    let bd = (0..2)
        .map(|i| {
            let mut blocks = vec![&sojourners[1 - i]];
            blocks.extend(estimates.iter());
            bd_precoder(&stack_rows(&blocks)?, &sojourners[i])
        })
        .collect::<cscs::Result<Vec<_>>>()?;
    let sub = SubcarrierProblem {
        sigmas: bd.iter().map(|b| b.sigma.clone()).collect(),
        precoders: bd.iter().map(|b| b.w.clone()).collect(),
        victims: estimates.clone(),
    };

    println!("{:>6} {:>10} {:>10} {:>12}", "zeta", "bits/s/Hz", "status", "worst/zeta");
    for zeta in [0.1, 0.5, 1.0, 2.0, f64::INFINITY] {
        let problem = RobustBfProblem { subcarriers: vec![sub.clone()], eps_sq, zeta, p_sap: 10.0, snr: 25.0, n_st_star: 8 };
        let sol = solve_p2(&problem, 1e-8)?;
        let cert = certificates(&problem, &sol)?;
        assert!(cert.min_q_eigenvalue > -1e-8 && cert.max_power_excess < 1e-6);
        let mut worst = 0.0f64;
        for h in &estimates {
            for _ in 0..2000 {
                let true_h = h + sample_error(2, 8, eps_sq, PerturbMode::Boundary, &mut rng)?;
                for (w, q) in sub.precoders.iter().zip(&sol.q[0]) {
                    worst = worst.max(interference(&true_h, &(w * q * w.adjoint()))?);
                }
            }
        }
        println!("{zeta:>6} {:>10.4} {:>10?} {:>12.4}", sol.objective, sol.status, worst / zeta);
    }
    Ok(())
}
