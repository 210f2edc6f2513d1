//! Square QAM, the 32-point cross and the rotated variants used by the codes.

use stbc::constellation::{cross_qam_32, hard_limit_pam, rotate, square_qam, theta_g};

fn main() -> stbc::error::Result<()> {
    for m in [4, 16, 64] {
        let c = square_qam(m)?;
        println!("{m:>2}-QAM  Es = {:>5.1}  PAM {:?}", c.average_energy(), c.pam_levels());
    }
    let cross = cross_qam_32();
    println!("32-cross Es = {:.1}, {} points", cross.average_energy(), cross.size());

    let q = square_qam(4)?;
    let r = rotate(&q)?;
    println!("\nrotation angle {:.6} rad (tan 2θ = 2)", theta_g());
    for (a, b) in q.points().iter().zip(r.points()) {
        println!("  {a:>8.3} -> {b:.4}");
    }
    println!("\nhard limit of 2.4 onto 16-QAM PAM: {}", hard_limit_pam(2.4, &square_qam(16)?)?);
    Ok(())
}
