//! Encodes the same symbols with every code and checks the linear form.
//!
//! Each codeword is also rebuilt from the generator as `G · x̃` to show the
//! two representations agree.

use num_complex::Complex64;
use stbc::codes::{CodeName, StbcCode};
use stbc::linalg::check_expand;

fn main() -> stbc::error::Result<()> {
    let syms: Vec<Complex64> = [(1.0, 1.0), (-1.0, 3.0), (3.0, -1.0), (-3.0, -3.0), (1.0, -1.0), (-1.0, -1.0), (3.0, 1.0), (1.0, 3.0)]
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();

    for name in CodeName::ALL {
        let code = StbcCode::new(name);
        let x = &syms[..code.k()];
        let s = code.encode(x)?;
        let x_tilde: Vec<f64> = x.iter().flat_map(|z| [z.re, z.im]).collect();
        let via_g = code.encode_linear(&x_tilde);
        println!(
            "{:<12} {}x{} rate {:.2}  |S|² = {:>6.1}  linear-form error {:.1e}",
            name.as_str(),
            code.n_t(),
            code.t(),
            code.rate(),
            s.norm_sqr(),
            s.max_abs_diff(&via_g)
        );
    }

    let s = StbcCode::new(CodeName::Proposed2x2).encode(&syms[..4])?;
    println!("\nproposed2x2 codeword:");
    for i in 0..2 {
        println!("  {:.4}  {:.4}", s[(i, 0)], s[(i, 1)]);
    }
    println!("real expansion is {}x{}", check_expand(&s).rows(), check_expand(&s).cols());
    Ok(())
}
