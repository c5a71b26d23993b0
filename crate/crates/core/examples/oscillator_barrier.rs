//! Linear oscillator hitting a barrier for ten seconds.

use vibroimpact::scenario::OscillatorBarrier;

fn main() -> vibroimpact::Result<()> {
    let outcome = OscillatorBarrier::default().simulate()?;
    let n = outcome.energy_error.len();
    println!("steps           {n}");
    println!("drift over run  {:.3e}", outcome.slope * n as f64);
    println!("error spread    {:.3e}", outcome.spread);
    Ok(())
}
