//! Action-gap deviation of oracle tables in regular and mapped space.

use loggap::harness::{kappa_scan, KappaStudy};

fn main() -> loggap::Result<()> {
    let study = KappaStudy::parse(
        "task = chain_deterministic\ngamma = 0.1, 0.5, 0.9, 0.99\nkappa_mode = regular, log_plus_only, log_bias\nk = 200\n",
    )?;
    println!("{:>6} {:>14} {:>10}", "gamma", "mode", "kappa");
    for row in kappa_scan(&study)? {
        let kappa = row.kappa.map_or("-".to_string(), |k| format!("{k:.4}"));
        println!("{:>6} {:>14} {:>10}", row.gamma, row.mode.to_string(), kappa);
    }
    Ok(())
}
