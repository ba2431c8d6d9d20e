//! Tile coding over chain positions: overlapping tilings and linear values.

use loggap::features::{build_tilecoder, linear_q};

fn main() -> loggap::Result<()> {
    let coder = build_tilecoder(3, 10)?;
    println!(
        "width {}: {} tilings at offsets {:?}, {} features",
        coder.width(),
        coder.num_tilings(),
        coder.offsets(),
        coder.num_features()
    );
    for pos in 0..coder.num_states() {
        println!("position {pos}: active {:?}", coder.encode(pos)?);
    }

    // one weight per (feature, action); raise feature 0 and read the value it
    // contributes to the positions sharing it
    let mut weights = vec![0.0; coder.num_features() * 2];
    weights[0] = 1.0;
    let values: Vec<f64> = (0..coder.num_states()).map(|p| linear_q(&weights, &coder, p, 0)).collect();
    println!("action-0 values after touching feature 0: {values:?}");
    Ok(())
}
