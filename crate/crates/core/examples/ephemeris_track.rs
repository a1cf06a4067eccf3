//! Writes a 1 s ephemeris CSV, reads it back and tracks against it.

use ntnsim::ephemeris::{load_ephemeris, sample_orbit, save_ephemeris, Ephemeris};
use ntnsim::scenario::{run_scenario_on, truth_from_ephemeris, truth_trajectory, ScenarioConfig};

fn main() -> ntnsim::Result<()> {
    let cfg = ScenarioConfig {
        t0: 150.0,
        t1: 250.0,
        ..ScenarioConfig::default()
    };
    let path = std::env::temp_dir().join("ntnsim-example-ephemeris.csv");
    save_ephemeris(
        &path,
        &sample_orbit(&cfg.orbit, &cfg.earth, 100.0, 300.0, 1.0)?,
    )?;
    let eph = Ephemeris::new(load_ephemeris(&path, &cfg.earth)?, &cfg.earth)?;
    println!(
        "{} records, {:.0}..{:.0} s from {}",
        eph.records().len(),
        eph.start(),
        eph.end(),
        path.display()
    );

    let truth = truth_from_ephemeris(&cfg, &eph)?;
    let keplerian = truth_trajectory(&cfg)?;
    let gap = truth
        .states
        .iter()
        .zip(&keplerian.states)
        .map(|(a, b)| (a.sat_pos - b.sat_pos).norm())
        .fold(0.0, f64::max);
    println!("interpolated vs RK4 truth: max {:.1} m", gap * 1e3);

    let r = run_scenario_on(&cfg, &truth, 0)?;
    if let Some(mpe) = r.summary.mpe {
        println!("MPE [%]: {:.3} {:.3} {:.3}", mpe[0], mpe[1], mpe[2]);
    }
    Ok(())
}
