//! Visibility windows over three hours for several elevation masks.

use ntnsim::geo::geodetic_to_ecef;
use ntnsim::link::visibility_windows;
use ntnsim::scenario::ScenarioConfig;

fn main() -> ntnsim::Result<()> {
    let cfg = ScenarioConfig::default();
    let ue = geodetic_to_ecef(&cfg.ue_start, &cfg.earth)?;
    for mask_deg in [0.0, 10.0, 30.0] {
        let windows = visibility_windows(
            &cfg.orbit,
            &cfg.earth,
            |_| ue,
            f64::to_radians(mask_deg),
            0.0,
            10_800.0,
            1.0,
        )?;
        println!("mask {mask_deg} deg: {} window(s)", windows.len());
        for w in windows {
            println!(
                "  {:8.2} .. {:8.2} s ({:6.1} s), peak {:5.2} deg at {:8.2} s",
                w.t_start,
                w.t_end,
                w.duration(),
                w.theta_max.to_degrees(),
                w.t_theta_max
            );
        }
    }
    Ok(())
}
