//! Energy preservation metric over contact exponent and stiffness.

use vibroimpact::scenario::PreservationSweep;

fn main() -> vibroimpact::Result<()> {
    let sweep = PreservationSweep {
        duration: 0.5,
        ..Default::default()
    };
    for p in sweep.simulate()? {
        println!("alpha {:.2}  beta_c {:>8.1e}  P {:.2e}", p.alpha, p.beta_c, p.metric);
    }
    Ok(())
}
