//! Ideal string against a flat obstacle: the fundamental rises.

use vibroimpact::scenario::ImpededString;

fn main() -> vibroimpact::Result<()> {
    let outcome = ImpededString::default().simulate()?;
    println!("free     {:.3} Hz", outcome.free_frequency);
    println!("impeded  {:.3} Hz", outcome.impeded_frequency);
    println!("ratio    {:.4}", outcome.ratio());
    Ok(())
}
