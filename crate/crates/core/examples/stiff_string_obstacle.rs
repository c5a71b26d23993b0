//! Stiff string on a curved obstacle under every pair of end conditions.

use vibroimpact::distributed::BoundaryCondition;
use vibroimpact::scenario::StiffStringObstacle;

fn main() -> vibroimpact::Result<()> {
    for left in BoundaryCondition::ALL {
        for right in BoundaryCondition::ALL {
            let outcome = StiffStringObstacle {
                bc_left: left,
                bc_right: right,
                steps: 10_000,
                snapshot_every: 0,
                ..Default::default()
            }
            .simulate()?;
            let newton = outcome.record.iterations.iter().max().copied().unwrap_or(0);
            println!(
                "{left:>16} / {right:<16} step error {:.2e}, Newton max {newton}",
                outcome.max_step_error
            );
        }
    }
    Ok(())
}
