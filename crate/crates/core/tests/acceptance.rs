//! Runs every acceptance criterion and prints one PASS/FAIL line per
//! criterion. Exits nonzero if any criterion fails.
//!
//! `cargo test --release --test acceptance` runs all of them; pass criterion
//! numbers (`-- 1 5 11`) to run a subset.

use std::io::Write;

fn main() {
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut total = 0;
    let mut print = |r: &stbc::verify::CriterionResult| {
        total += 1;
        failed += usize::from(!r.passed);
        println!("{}", r.line());
        let _ = std::io::stdout().flush();
    };
    if selected.is_empty() {
        stbc::verify::run_all(&mut print);
    } else {
        for id in selected {
            match stbc::verify::run_one(id) {
                Some(r) => print(&r),
                None => eprintln!("no criterion {id}"),
            }
        }
    }
    println!("acceptance: {} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
