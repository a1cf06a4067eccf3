//! Monte Carlo replications on a 100 s slice around the pass peak.

use ntnsim::scenario::{monte_carlo, truth_trajectory, ScenarioConfig};

fn main() -> ntnsim::Result<()> {
    let cfg = ScenarioConfig {
        t0: 368.0,
        t1: 468.0,
        ..ScenarioConfig::default()
    };
    let truth = truth_trajectory(&cfg)?;
    let mc = monte_carlo(&cfg, &truth, 20)?;
    for (i, run) in mc.runs.iter().enumerate().take(5) {
        println!(
            "run {i}: NEES {:.2}, MPE {:?}",
            run.nees_mean.unwrap_or(f64::NAN),
            run.mpe.map(|m| m.map(|v| (v * 1e3).round() / 1e3))
        );
    }
    println!("20 runs: mean NEES {:.3}", mc.nees_mean.unwrap_or(f64::NAN));
    if let Some(m) = mc.mpe_mean {
        println!("mean MPE [%]: {:.3} {:.3} {:.3}", m[0], m[1], m[2]);
    }
    Ok(())
}
