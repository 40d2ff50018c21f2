//! Scratch probe: oracle-suite error distribution at the acceptance settings.

use reflectkey::estimators::oracle::{gaussian_oracle_suite, OracleSettings};

fn main() {
    let t0 = std::time::Instant::now();
    let settings = OracleSettings::default();
    let cases = gaussian_oracle_suite(&settings).unwrap();
    let mut fails = 0;
    for c in &cases {
        let ratio = if c.estimate.stderr > 0.0 {
            (c.estimate.bits - c.truth_bits).abs() / c.estimate.stderr
        } else {
            f64::INFINITY
        };
        println!(
            "{} case {:>2} d={} err {:+.4} stderr {:.4} |err|/se {:>5.2} {}",
            c.estimate.method.name(),
            c.case,
            c.dim,
            c.estimate.bits - c.truth_bits,
            c.estimate.stderr,
            ratio,
            if c.pass { "" } else { "FAIL" }
        );
        if !c.pass {
            fails += 1;
        }
    }
    println!("fails: {fails}/{} in {:.1?}", cases.len(), t0.elapsed());
}
