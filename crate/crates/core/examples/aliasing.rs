//! Aliased spectral energy of a stiffening oscillator at two sample rates.

use vibroimpact::scenario::AliasingExperiment;

fn main() -> vibroimpact::Result<()> {
    let experiment = AliasingExperiment {
        count: 8,
        ..Default::default()
    };
    let outcome = experiment.simulate(false)?;
    for (i, fs) in experiment.sample_rates.iter().enumerate() {
        println!("{fs:>9} Hz: mean aliased fraction {:.3e}", outcome.aliased[i]);
    }
    println!("reduction {:.1} dB", outcome.reduction_db(1));
    Ok(())
}
