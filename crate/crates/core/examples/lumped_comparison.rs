//! Mass dropped onto a one-sided barrier, integrated by each scheme.

use vibroimpact::analysis::max_energy_error;
use vibroimpact::contact::ContactLaw;
use vibroimpact::lumped::{simulate, LumpedParams, LumpedState, SchemeKind};

fn main() -> vibroimpact::Result<()> {
    let params = LumpedParams::new(0.1, 0.0, ContactLaw::new(5000.0, 1.0)?, 0.0, 0.0, 1.0 / 44_100.0)?;
    let init = LumpedState::from_momentum(0.1, -0.2, &params);
    for kind in SchemeKind::ALL {
        let traj = simulate(kind, &params, init, 44_100)?;
        let h = traj.total_energy();
        println!(
            "{:>3}: max relative energy error {:.3e}, lowest point {:.4} m",
            kind.label(),
            max_energy_error(&h, h[0])?,
            traj.displacement().iter().copied().fold(f64::INFINITY, f64::min)
        );
    }
    Ok(())
}
