//! Joint satellite/UE EKF over the first 200 s of the nominal pass.

use ntnsim::scenario::{run_scenario, ScenarioConfig};

fn main() -> ntnsim::Result<()> {
    let cfg = ScenarioConfig {
        t1: 200.0,
        ..ScenarioConfig::default()
    };
    let r = run_scenario(&cfg)?;
    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>10}",
        "t_s", "visible", "sat_err_km", "ue_err_km", "nees_sat"
    );
    for rec in r.records.iter().step_by(2000) {
        println!(
            "{:>8.1} {:>8} {:>12.4} {:>12.4} {:>10}",
            rec.time,
            rec.visible,
            (rec.estimate.sat_pos - rec.truth.sat_pos).norm(),
            (rec.estimate.ue_pos - rec.truth.ue_pos).norm(),
            rec.nees.map_or("-".into(), |v| format!("{v:.2}")),
        );
    }
    let s = &r.summary;
    if let Some(mpe) = s.mpe {
        println!(
            "MPE in window [%]: {:.3} {:.3} {:.3}",
            mpe[0], mpe[1], mpe[2]
        );
    }
    if let Some(nees) = s.nees_mean {
        println!(
            "mean satellite NEES over {} epochs: {nees:.2}",
            s.nees_epochs
        );
    }
    Ok(())
}
