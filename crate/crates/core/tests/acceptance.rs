//! Runs the ten verification checks at full scale and prints one line each.
//! Exits non-zero if any fails.

use randcluster::verify::{run_check, VerifyOptions};

fn main() {
    let opts = VerifyOptions::default();
    let mut failed = 0;
    for id in 1..=10u8 {
        let c = run_check(id, &opts);
        println!(
            "criterion {:>2} {:<26} {} ({:.1}s) {}",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.seconds,
            c.detail
        );
        failed += !c.passed as usize;
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
