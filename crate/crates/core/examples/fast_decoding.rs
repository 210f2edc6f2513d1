//! Fast conditional decoding against brute force on a handful of channels.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbc::channel::random_channel;
use stbc::codes::{CodeName, StbcCode};
use stbc::constellation::square_qam;
use stbc::decoders::{complexity_bound, exhaustive_ml, FastDecoder};

fn main() -> stbc::error::Result<()> {
    let c = square_qam(16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for name in [CodeName::Proposed2x2, CodeName::Golden] {
        let code = StbcCode::new(name);
        println!("{} (bound {} vs {} for brute force)", name.as_str(), complexity_bound(name, &c).unwrap(), 16u64.pow(4));
        for sigma in [0.5, 1.5, 3.0] {
            let h = random_channel(&mut rng, 2, 2);
            let x: Vec<Complex64> = (0..4).map(|_| c.points()[rng.random_range(0..16)]).collect();
            let y = &(&h * &code.encode(&x)?) + &random_channel(&mut rng, 2, 2).scale_real(sigma);

            let fast = FastDecoder::new(&code, &h)?.decode(&y, &c)?;
            let ml = exhaustive_ml(&y, &h, &code, &c)?;
            println!(
                "  σ={sigma:.1}  same={}  metric {:.3}  computations {} / {}",
                fast.x_hat == ml.x_hat,
                fast.metric,
                fast.metric_computations,
                ml.metric_computations
            );
        }
    }
    Ok(())
}
