//! Short codeword-error-rate sweep for the proposed code and Golden code.
//!
//! Set `STBC_THREADS` to pin the worker count; the output does not change.

use stbc::codes::CodeName;
use stbc::decoders::DecoderKind;
use stbc::sim::{run_cer_sweep_with_threads, threads_from_env, to_csv, SimConfig, SNR_DEFINITION};

fn main() -> stbc::error::Result<()> {
    println!("# {SNR_DEFINITION}");
    for code in [CodeName::Proposed2x2, CodeName::Golden] {
        let cfg = SimConfig::new(code, DecoderKind::Fast, 16, vec![10.0, 14.0, 18.0, 22.0], 20_000, 1);
        let points = run_cer_sweep_with_threads(&cfg, threads_from_env())?;
        println!("# {}", code.as_str());
        print!("{}", to_csv(&points));
    }
    Ok(())
}
