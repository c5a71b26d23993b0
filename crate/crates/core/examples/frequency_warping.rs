//! Measured pitch of the contact-free oscillator against the warped frequency.

use std::f64::consts::TAU;

use vibroimpact::analysis::fundamental_frequency;
use vibroimpact::contact::ContactLaw;
use vibroimpact::lumped::{simulate, warped_frequency, LumpedParams, LumpedState, SchemeKind};

fn main() -> vibroimpact::Result<()> {
    let fs = 44_100.0;
    for f0 in [110.0, 440.0, 2000.0, 8000.0] {
        let omega = TAU * f0;
        let params = LumpedParams::new(1.0, omega * omega, ContactLaw::none(), 0.0, 0.0, 1.0 / fs)?;
        let y = simulate(SchemeKind::Ec, &params, LumpedState::new(1e-3, 0.0), 22_050)?.displacement();
        let measured = fundamental_frequency(&y, fs)?.frequency;
        let predicted = warped_frequency(omega, 1.0 / fs) / TAU;
        println!("{f0:>6} Hz -> measured {measured:9.3} Hz, predicted {predicted:9.3} Hz");
    }
    Ok(())
}
