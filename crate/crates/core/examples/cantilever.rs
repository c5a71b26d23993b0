//! Damped cantilever striking a table edge.

use vibroimpact::scenario::Cantilever;

fn main() -> vibroimpact::Result<()> {
    let outcome = Cantilever {
        duration: 0.1,
        ..Default::default()
    }
    .simulate()?;
    println!("period                   {:.4} s", outcome.period);
    println!("energy increases         {}", outcome.increases.len());
    println!("contacts in first cycle  {}", outcome.first_cycle_episodes.len());
    Ok(())
}
