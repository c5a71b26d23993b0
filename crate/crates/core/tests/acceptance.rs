//! Acceptance criteria 1-17, one PASS/FAIL line each.
//!
//! Runs with a plain `main` so every criterion reports even when an earlier
//! one fails. Pass criterion numbers as arguments to run a subset.
//! Criteria listed in `KNOWN_FAILURES` are expected to fail; the target
//! fails if any other criterion fails or if a listed one starts passing.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vibroimpact::analysis::{convergence_order, magnitude_spectrum_with, Window};
use vibroimpact::contact::ContactLaw;
use vibroimpact::distributed::{
    initial_condition, jacobian_vec, residual_vec, BarrierProfile, BoundaryCondition,
    ContactTerm, GridState, InitialShape, StringModel, StringParams,
};
use vibroimpact::lumped::{
    ec_residual_curvature, residual, simulate, solve_step_with, warped_frequency, LumpedParams,
    LumpedState, NewtonOptions, SchemeKind,
};
use vibroimpact::scenario::{
    AliasingExperiment, BouncingBall, Cantilever, ImpededString, LumpedComparison,
    OscillatorBarrier, PluckOutcome, PreservationSweep, StiffStringObstacle, TanpuraPluck,
};
use vibroimpact::tanpura::{simulate_tanpura, Recording, TanpuraConfig};
use vibroimpact::Result;

/// Criteria that cannot be met as stated; see the decisions ledger.
const KNOWN_FAILURES: &[u32] = &[6, 9];

type Check = fn() -> Result<Verdict>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn c1() -> Result<Verdict> {
    let scenario = LumpedComparison {
        schemes: vec![SchemeKind::Ec],
        ..Default::default()
    };
    let start = Instant::now();
    let o = scenario.simulate()?;
    let elapsed = start.elapsed().as_secs_f64();
    let worst = max_abs(&o.errors[0]);
    verdict(
        worst <= 1e-13 && elapsed < 1.0,
        format!("max|e| = {worst:.3e} (<= 1e-13), runtime {elapsed:.3} s (< 1 s)"),
    )
}

fn c2() -> Result<Verdict> {
    let o = LumpedComparison::default().simulate()?;
    let (_, last_contact) = o.contact.expect("the mass reaches the barrier");
    let ec = max_abs(&o.errors[0]);
    let mut pass = true;
    let mut parts = Vec::new();
    for ((kind, _), e) in o.runs.iter().zip(&o.errors).skip(1) {
        let worst = max_abs(e);
        let jump_step = e
            .windows(2)
            .enumerate()
            .max_by(|a, b| (a.1[1] - a.1[0]).abs().total_cmp(&(b.1[1] - b.1[0]).abs()))
            .map(|(n, _)| n)
            .unwrap_or(0);
        let at_release = jump_step.abs_diff(last_contact) <= 1;
        pass &= worst >= 1e3 * ec && at_release;
        parts.push(format!(
            "{} {:.1e}x EC, jump at step {jump_step}",
            kind.label(),
            worst / ec
        ));
    }
    verdict(pass, format!("{}; last contact step {last_contact}", parts.join(", ")))
}

fn c3() -> Result<Verdict> {
    let o = BouncingBall::default().simulate()?;
    let h0 = BouncingBall::default().initial_height;
    let worst = o
        .apexes
        .iter()
        .map(|(_, h)| ((h - h0) / h0).abs())
        .fold(0.0, f64::max);
    let tenth = o.apexes.get(9).map(|a| (a.1 - h0) / h0);
    verdict(
        tenth.is_some_and(|d| d.abs() <= 1e-10),
        format!(
            "{} apexes, 10th apex deviation {:.3e}, worst {worst:.3e} (<= 1e-10)",
            o.apexes.len(),
            tenth.unwrap_or(f64::NAN)
        ),
    )
}

fn c4() -> Result<Verdict> {
    let o = OscillatorBarrier::default().simulate()?;
    let drift = o.slope * o.energy_error.len() as f64;
    verdict(
        drift.abs() <= 1e-13,
        format!(
            "fitted drift over 10 s {drift:.3e} (|.| <= 1e-13), spread {:.3e}, max|e| {:.3e}",
            o.spread,
            max_abs(&o.energy_error)
        ),
    )
}

fn c5() -> Result<Verdict> {
    let points = PreservationSweep::default().simulate()?;
    let worst = points.iter().map(|p| p.metric).fold(0.0, f64::max);
    verdict(
        worst <= 1e-13,
        format!("max P = {worst:.3e} over {} grid points (<= 1e-13)", points.len()),
    )
}

fn random_lumped(rng: &mut ChaCha8Rng) -> Result<(LumpedParams, LumpedState)> {
    let params = LumpedParams::new(
        rng.random_range(0.01..1.0),
        rng.random_range(0.0..1e6),
        ContactLaw::new(10f64.powf(rng.random_range(2.0..10.0)), rng.random_range(1.0..3.5))?,
        0.0,
        rng.random_range(-10.0..10.0),
        1.0 / 44_100.0,
    )?;
    let state = LumpedState::new(rng.random_range(-0.01..0.01), rng.random_range(-1e-3..1e-3));
    Ok((params, state))
}

fn c6() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_slope = f64::INFINITY;
    let mut min_curvature = f64::INFINITY;
    let mut concave = 0;
    for _ in 0..10_000 {
        let (params, state) = random_lumped(&mut rng)?;
        let s = rng.random_range(-0.02..0.02);
        min_slope = min_slope.min(residual(SchemeKind::Ec, s, &state, &params)?.derivative);
        let curvature = ec_residual_curvature(s, &state, &params);
        min_curvature = min_curvature.min(curvature);
        if curvature < -1e-12 {
            concave += 1;
        }
    }
    let opts = NewtonOptions::default();
    let mut spread = 0.0_f64;
    for _ in 0..100 {
        let (params, state) = random_lumped(&mut rng)?;
        let roots: Vec<f64> = (0..100)
            .map(|_| {
                let guess = rng.random_range(-1.0..1.0);
                solve_step_with(SchemeKind::Ec, &state, &params, Some(guess), &opts).map(|r| r.s)
            })
            .collect::<Result<_>>()?;
        let lo = roots.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    verdict(
        min_slope >= 1.0 && concave == 0 && spread <= 1e-12,
        format!(
            "min dF/ds = {min_slope:.6} (>= 1); min d2F/ds2 = {min_curvature:.3e} with \
             {concave}/10000 below -1e-12; multi-start root spread {spread:.3e} (<= 1e-12)"
        ),
    )
}

fn c7() -> Result<Verdict> {
    let fs = 44_100.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for f0 in [440.0, 2000.0, 8000.0] {
        let omega = TAU * f0;
        let params = LumpedParams::new(1.0, omega * omega, ContactLaw::none(), 0.0, 0.0, 1.0 / fs)?;
        let traj = simulate(SchemeKind::Ec, &params, LumpedState::new(1e-3, 0.0), 44_100)?;
        let y = traj.displacement();
        let spec = magnitude_spectrum_with(&y, fs, Window::Hann, y.len())?;
        let (_, measured) = spec.peak();
        let expected = warped_frequency(omega, 1.0 / fs) / TAU;
        let ok = (measured - expected).abs() <= spec.bin_width();
        pass &= ok;
        parts.push(format!("{f0} Hz -> {measured:.1} vs {expected:.2}"));
    }
    verdict(pass, format!("{} (one bin = 1 Hz)", parts.join(", ")))
}

fn c8() -> Result<Verdict> {
    let ladder: Vec<f64> = (0..6).map(|k| 1e-4 / 2f64.powi(k)).collect();
    let terminal = |params: LumpedParams, init: LumpedState, t: f64| -> Result<Vec<f64>> {
        let steps = (t / params.dt).round() as usize;
        let traj = simulate(SchemeKind::Ec, &params, init, steps)?;
        let last = traj.states.last().expect("non-empty");
        Ok(vec![last.y, last.momentum(&params)])
    };
    let omega = TAU * 100.0;
    let linear = convergence_order(&ladder, |dt| {
        let p = LumpedParams::new(1.0, omega * omega, ContactLaw::none(), 0.0, 0.0, dt)?;
        terminal(p, LumpedState::new(1e-3, 0.0), 0.05)
    })?;
    let impact = convergence_order(&ladder, |dt| {
        let p = LumpedParams::new(0.1, 0.0, ContactLaw::new(5000.0, 1.0)?, 0.0, 0.0, dt)?;
        terminal(p, LumpedState::from_momentum(0.1, -0.2, &p), 0.1)
    })?;
    verdict(
        (linear.slope - 2.0).abs() <= 0.2 && (impact.slope - 2.0).abs() <= 0.3,
        format!(
            "linear oscillator slope {:.3} (2 +- 0.2), single impact slope {:.3} (2 +- 0.3)",
            linear.slope, impact.slope
        ),
    )
}

fn c9() -> Result<Verdict> {
    let start = Instant::now();
    let base = ImpededString::default().simulate()?;
    let mut fine_cfg = ImpededString {
        contact_stiffness: 1e9,
        ..Default::default()
    };
    vibroimpact::scenario::Scenario::oversample(&mut fine_cfg, 20.0);
    let fine = fine_cfg.simulate()?;
    let elapsed = start.elapsed().as_secs_f64();
    let dev = |r: f64| (r / 1.5 - 1.0).abs();
    verdict(
        dev(base.ratio()) <= 0.02 && dev(fine.ratio()) <= 0.002 && elapsed < 30.0,
        format!(
            "ratio {:.4} at 44.1 kHz (1.5 +- 2%), {:.4} at 20x with k_c = 1e9 (1.5 +- 0.2%), \
             runtime {elapsed:.1} s",
            base.ratio(),
            fine.ratio()
        ),
    )
}

fn obstacle_run(left: BoundaryCondition, right: BoundaryCondition) -> Result<(f64, usize)> {
    let o = StiffStringObstacle {
        bc_left: left,
        bc_right: right,
        snapshot_every: 0,
        ..Default::default()
    }
    .simulate()?;
    let iterations = o.record.iterations.iter().copied().max().unwrap_or(0);
    Ok((o.max_step_error, iterations))
}

fn c10() -> Result<Verdict> {
    let (worst, iterations) =
        obstacle_run(BoundaryCondition::SimplySupported, BoundaryCondition::SimplySupported)?;
    verdict(
        worst <= 1e-13 && iterations <= 20,
        format!("max per-step change {worst:.3e} (<= 1e-13), max Newton iterations {iterations} (<= 20)"),
    )
}

fn c11() -> Result<Verdict> {
    let combos: Vec<(BoundaryCondition, BoundaryCondition)> = BoundaryCondition::ALL
        .iter()
        .flat_map(|&l| BoundaryCondition::ALL.iter().map(move |&r| (l, r)))
        .collect();
    let results: Vec<(f64, usize)> = combos
        .par_iter()
        .map(|&(l, r)| obstacle_run(l, r))
        .collect::<Result<_>>()?;
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let iterations = results.iter().map(|r| r.1).max().unwrap_or(0);
    let failing: Vec<String> = combos
        .iter()
        .zip(&results)
        .filter(|(_, r)| !(r.0 <= 1e-13 && r.1 <= 20))
        .map(|((l, r), _)| format!("{l}/{r}"))
        .collect();
    verdict(
        failing.is_empty(),
        format!(
            "9 end-condition pairs, worst per-step change {worst:.3e}, max iterations {iterations}{}",
            if failing.is_empty() {
                String::new()
            } else {
                format!(", failing: {}", failing.join(" "))
            }
        ),
    )
}

fn c12() -> Result<Verdict> {
    let o = Cantilever::default().simulate()?;
    verdict(
        o.increases.is_empty() && o.first_cycle_episodes.len() >= 3,
        format!(
            "{} energy increases over 0.5 s (0 allowed), {} contact episodes in the first cycle (>= 3)",
            o.increases.len(),
            o.first_cycle_episodes.len()
        ),
    )
}

/// Largest `|J - J_fd| / max|J|` over the dense matrices.
fn jacobian_mismatch<C: ContactTerm>(model: &StringModel<C>, state: &GridState, s: &[f64]) -> Result<f64> {
    let jac = jacobian_vec(model, state, s)?.to_dense();
    let scale = jac.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let h = 1e-6 * (1e-6 + max_abs(s));
    let mut worst = 0.0_f64;
    for j in 0..s.len() {
        let mut plus = s.to_vec();
        let mut minus = s.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let fp = residual_vec(model, state, &plus)?;
        let fm = residual_vec(model, state, &minus)?;
        for i in 0..s.len() {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            worst = worst.max((jac[i][j] - fd).abs() / scale);
        }
    }
    Ok(worst)
}

fn c13() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let length = 0.7;
    let string = StringParams::new(0.001, 100.0, 0.012, length, length / 33.0, 1.0 / 44_100.0)?;
    let n = string.unknowns();
    let mut worst_string = 0.0_f64;
    for _ in 0..100 {
        let law = ContactLaw::new(10f64.powf(rng.random_range(5.0..9.0)), rng.random_range(1.0..3.0))?;
        let model = StringModel::new(string, BarrierProfile::flat(&string, 0.0, law)?)?;
        let state = GridState {
            y: (0..n).map(|_| rng.random_range(-1e-3..1e-3)).collect(),
            q: (0..n).map(|_| rng.random_range(-1e-4..1e-4)).collect(),
            n: 0,
        };
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-4..1e-4)).collect();
        worst_string = worst_string.max(jacobian_mismatch(&model, &state, &s)?);
    }
    let cfg = TanpuraConfig {
        dx: TanpuraConfig::default().length / 33.0,
        ..Default::default()
    };
    let model = cfg.build()?;
    let m = model.dim();
    assert_eq!(model.params.n, 32);
    let mut worst_bridge = 0.0_f64;
    let mut touching = 0;
    for _ in 0..100 {
        // the bridge lies under the first stencil columns
        let state = GridState {
            y: (0..m)
                .map(|i| if i < 4 { rng.random_range(-3e-5..2e-5) } else { rng.random_range(-1e-3..1e-3) })
                .collect(),
            q: (0..m).map(|_| rng.random_range(-1e-6..1e-6)).collect(),
            n: 0,
        };
        let s: Vec<f64> = (0..m).map(|_| rng.random_range(-1e-5..1e-5)).collect();
        if model.contact.max_compression(&state.y) > 0.0 {
            touching += 1;
        }
        worst_bridge = worst_bridge.max(jacobian_mismatch(&model, &state, &s)?);
    }
    verdict(
        worst_string <= 1e-6 && worst_bridge <= 1e-6 && touching > 0,
        format!(
            "N = 32, 100 states each: obstacle {worst_string:.3e}, bridge {worst_bridge:.3e} \
             ({touching} touching) relative to max|J| (<= 1e-6)"
        ),
    )
}

fn pluck() -> &'static Result<PluckOutcome> {
    static RUN: OnceLock<Result<PluckOutcome>> = OnceLock::new();
    RUN.get_or_init(|| TanpuraPluck::default().simulate())
}

fn c14() -> Result<Verdict> {
    let o = match pluck() {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("run failed: {e}")),
    };
    let open = o.open.as_ref().expect("companion run");
    let without = open.second_harmonic_level(0.2);
    let with = o.bridged.second_harmonic_level(0.2);
    verdict(
        without <= -40.0 && with >= -25.0,
        format!(
            "2f0 at 0.2 s: {without:.1} dB without bridge (<= -40), {with:.1} dB with bridge (>= -25); \
             f0 {:.2} / {:.2} Hz",
            open.fundamental, o.bridged.fundamental
        ),
    )
}

fn c15() -> Result<Verdict> {
    let o = match pluck() {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("run failed: {e}")),
    };
    let c = o.bridged.trajectory.max_compression;
    verdict(
        c <= 3e-6,
        format!("max bridge compression {:.3} um over 1 s (<= 3 um)", c * 1e6),
    )
}

fn c16() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let cfg = TanpuraConfig {
        gamma: 0.0,
        eta: 0.0,
        ..Default::default()
    };
    let model = cfg.build()?;
    let (p, b) = (&model.params, &model.contact);
    let mut adjoint = 0.0_f64;
    for _ in 0..100 {
        let fine: Vec<f64> = (0..b.positions.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coarse: Vec<f64> = (0..p.unknowns()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = b.dx_b * fine.iter().zip(b.upsample(&coarse)).map(|(x, y)| x * y).sum::<f64>();
        let mut down = vec![0.0; p.unknowns()];
        b.add_downsampled(&fine, &mut down);
        let rhs: f64 = p.dx * down.iter().zip(&coarse).map(|(x, y)| x * y).sum::<f64>();
        adjoint = adjoint.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    let init = initial_condition(
        &InitialShape::TrianglePluck {
            amplitude: 0.002,
            peak: 0.5 * cfg.length,
        },
        p,
    )?;
    let steps = (0.1 * cfg.sample_rate) as usize;
    let t = simulate_tanpura(&model, init, steps, Recording::default())?;
    let h0 = t.energy[0];
    let step = t
        .energy
        .windows(2)
        .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs() / h0));
    let iterations = t.iterations.iter().copied().max().unwrap_or(0);
    verdict(
        adjoint <= 1e-13 && step <= 1e-13 && iterations <= 20 && t.max_compression > 0.0,
        format!(
            "adjointness {adjoint:.3e} (<= 1e-13); lossless 0.1 s run: per-step change {step:.3e} \
             (<= 1e-13), max iterations {iterations}, compression {:.2} um",
            t.max_compression * 1e6
        ),
    )
}

fn c17() -> Result<Verdict> {
    let o = AliasingExperiment::default().simulate(false)?;
    let db = o.reduction_db(1);
    verdict(
        db >= 20.0,
        format!(
            "mean aliased fraction {:.3e} at 44.1 kHz, {:.3e} at 176.4 kHz: {db:.1} dB lower (>= 20)",
            o.aliased[0], o.aliased[1]
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, Check); 17] = [
        (1, "lumped EC energy invariance", c1),
        (2, "comparison-scheme energy jumps", c2),
        (3, "bouncing-ball height recovery", c3),
        (4, "oscillator-barrier long run", c4),
        (5, "preservation sweep", c5),
        (6, "uniqueness and convexity", c6),
        (7, "bilinear frequency warping", c7),
        (8, "convergence order", c8),
        (9, "impeded-string frequency ratio", c9),
        (10, "distributed EC conservation", c10),
        (11, "boundary-condition invariance", c11),
        (12, "damped monotonicity and multiple impacts", c12),
        (13, "Jacobian verification", c13),
        (14, "tanpura even harmonics", c14),
        (15, "tanpura compression bound", c15),
        (16, "interpolation adjointness and energy neutrality", c16),
        (17, "aliasing reduction", c17),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (number, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let v = check().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        let known = KNOWN_FAILURES.contains(&number);
        let tag = match (v.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as a known failure)",
            (false, true) => "FAIL (known, see ledger)",
            (false, false) => "FAIL",
        };
        if v.pass == known {
            unexpected.push(number);
        }
        println!(
            "criterion {number:>2} {tag}: {name}: {} [{:.1} s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
    }
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
