//! Timing advance and Doppler over one pass for a static UE at 10.7 and 28 GHz.

use ntnsim::scenario::{geometry_table, truth_trajectory, truth_windows, ScenarioConfig};

fn main() -> ntnsim::Result<()> {
    for f_t in [10.7e9, 28e9] {
        let cfg = ScenarioConfig {
            f_t,
            ue_velocity: Default::default(),
            ..ScenarioConfig::default()
        };
        let truth = truth_trajectory(&cfg)?;
        let w = truth_windows(&cfg, &truth)?[0];
        let rows: Vec<_> = geometry_table(&cfg, &truth)?
            .into_iter()
            .filter(|g| w.contains(g.time))
            .collect();
        println!(
            "f_T = {:.1} GHz, window {:.1}..{:.1} s",
            f_t / 1e9,
            w.t_start,
            w.t_end
        );
        println!(
            "{:>8} {:>9} {:>10} {:>9} {:>12}",
            "t_s", "theta_deg", "range_km", "ta_ms", "doppler_khz"
        );
        for g in rows.iter().step_by(6000) {
            println!(
                "{:>8.1} {:>9.2} {:>10.2} {:>9.4} {:>12.2}",
                g.time,
                g.theta.to_degrees(),
                g.range,
                g.ta * 1e3,
                g.doppler / 1e3
            );
        }
        let peak = rows.iter().map(|g| g.doppler.abs()).fold(0.0, f64::max);
        let ta_min = rows.iter().map(|g| g.ta).fold(f64::INFINITY, f64::min);
        println!(
            "max |doppler| {:.1} kHz, min TA {:.4} ms\n",
            peak / 1e3,
            ta_min * 1e3
        );
    }
    Ok(())
}
