//! The logarithmic mapping, its inverse, and the averaging error bound.

use loggap::mapping::{averaging_error_bound, gamma_pow, LogMapping};

fn main() -> loggap::Result<()> {
    let (c, k, gamma) = (1.0, 200.0, 0.9);
    let m = LogMapping::with_init(c, k, gamma, 0.0)?;
    println!("d = {:.6}, gamma^k = {:e}", m.d(), m.gamma_k());
    println!("f^-1(0) = {}", m.inverse(0.0)?);
    println!("f(gamma^k) - f(0) = {:.15} (c ln 2 = {:.15})", m.forward(gamma_pow(gamma, k))? - m.forward(0.0)?, c * 2f64.ln());

    for x in [0.0, 1e-6, 0.5, 1.0, 1e3, 1e6] {
        let y = m.forward(x)?;
        println!("x = {x:>9}: f(x) = {y:>12.6}, f^-1(f(x)) = {}", m.inverse(y)?);
    }

    // small gaps far apart in regular space become comparable in mapped space
    let near = m.difference(1.0, 0.9)?;
    let far = m.difference(gamma.powi(40), gamma.powi(41))?;
    println!("mapped gaps: {near:.4} near the reward, {far:.4} forty steps away");

    let (error, bound) = averaging_error_bound(&m, 3.0, 1.0, 0.1, 0.5)?;
    println!("averaging in mapped space: error {error:.3e}, bound {bound:.3e}");
    Ok(())
}
