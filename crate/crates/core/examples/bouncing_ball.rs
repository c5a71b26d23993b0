//! Ball bouncing on a stiff floor; apex heights should not decay.

use vibroimpact::scenario::BouncingBall;

fn main() -> vibroimpact::Result<()> {
    let ball = BouncingBall::default();
    let outcome = ball.simulate()?;
    for (i, (t, h)) in outcome.apexes.iter().enumerate() {
        println!("apex {:>2} at {t:.4} s: {h:.15} m", i + 1);
    }
    Ok(())
}
