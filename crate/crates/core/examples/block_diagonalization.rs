//! Block-diagonalization precoders for four users on an eight-antenna array.

use cscs::linalg::{c, frobenius, CMat};
use cscs::{bd_precoder, sample_channel, stack_interfering};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cscs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let users: Vec<CMat> = (0..4).map(|_| sample_channel(2, 8, &mut rng)).collect::<cscs::Result<_>>()?;

    for (i, h) in users.iter().enumerate() {
        let h_tilde = stack_interfering(&users, i)?;
        let bd = bd_precoder(&h_tilde, h)?;
        let leak = frobenius(&(&h_tilde * &bd.w)) / frobenius(&h_tilde);
        let eff = &bd.decoder * h * &bd.w;
        let off = frobenius(&(eff - CMat::from_diagonal(&bd.sigma.map(|s| c(s, 0.0)))));
        println!(
            "user {i}: singular values [{:.4}, {:.4}], leakage {leak:.1e}, off-diagonal {off:.1e}",
            bd.sigma[0], bd.sigma[1]
        );
    }

    let crowded: Vec<CMat> = (0..5).map(|_| sample_channel(2, 8, &mut rng)).collect::<cscs::Result<_>>()?;
    match bd_precoder(&stack_interfering(&crowded, 0)?, &crowded[0]) {
        Err(e) => println!("five users: {e}"),
        Ok(_) => println!("five users: unexpectedly feasible"),
    }
    Ok(())
}
