//! Zero structure of the R factor of the equivalent channel.
//!
//! Anticommuting weight matrices give orthogonal columns of `H_eq`, which
//! shows up as zeros above the diagonal of R.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stbc::channel::{anticommutation_pairs, expected_r_pattern, observed_r_pattern, random_channel, theorem1_check};
use stbc::codes::{CodeName, StbcCode};

fn main() -> stbc::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for name in [CodeName::Proposed2x2, CodeName::Golden, CodeName::Proposed4x2] {
        let code = StbcCode::new(name);
        let observed = observed_r_pattern(&code, 2, 100, 1e-10, &mut rng)?;
        println!("{} ({} anticommuting pairs)", name.as_str(), anticommutation_pairs(&code).len());
        println!("{}", observed.to_ascii());
        if let Some(expected) = expected_r_pattern(name) {
            let block = observed.leading_block(expected.size());
            let missing: Vec<_> = expected.upper_zeros().into_iter().filter(|&(i, j)| !block.is_zero(i, j)).collect();
            println!("expected zeros missing: {missing:?}");
        }
        let h = random_channel(&mut rng, 2, code.n_t());
        println!("orthogonality violation {:.1e}\n", theorem1_check(&code, &h)?.max_violation());
    }
    Ok(())
}
