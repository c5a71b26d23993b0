//! Plucked tanpura string with and without its bridge.

use vibroimpact::scenario::TanpuraPluck;

fn main() -> vibroimpact::Result<()> {
    let outcome = TanpuraPluck {
        duration: 0.25,
        ..Default::default()
    }
    .simulate()?;
    let open = outcome.open.as_ref().expect("companion run");
    println!("fundamental {:.2} Hz (open {:.2} Hz)", outcome.bridged.fundamental, open.fundamental);
    for t in [0.05, 0.1, 0.15, 0.2] {
        println!(
            "t = {t:.2} s: second harmonic {:6.1} dB bridged, {:6.1} dB open",
            outcome.bridged.second_harmonic_level(t),
            open.second_harmonic_level(t)
        );
    }
    println!("max bridge compression {:.2} um", outcome.bridged.trajectory.max_compression * 1e6);
    Ok(())
}
