//! Earth-centred angle, elevation and slant range for a UE in Paris and a
//! satellite at 375 km passing overhead.

use ntnsim::geo::{
    earth_centered_angle, elevation_angle, geodetic_to_ecef, slant_range, slant_range_from_gamma,
    EarthModel, GeodeticPosition,
};

fn main() -> ntnsim::Result<()> {
    let earth = EarthModel::default();
    let paris = GeodeticPosition::from_degrees(48.8323, 2.3364, 0.0)?;
    let ue = geodetic_to_ecef(&paris, &earth)?;
    println!("UE ECEF [km]: {:.3} {:.3} {:.3}", ue.x, ue.y, ue.z);

    println!(
        "{:>10} {:>10} {:>12} {:>12}",
        "lat_deg", "gamma_deg", "theta_deg", "range_km"
    );
    for dlat in [0.0, 2.0, 5.0, 10.0, 15.0, 19.0] {
        let sub = GeodeticPosition::from_degrees(48.8323 + dlat, 2.3364, 375.0)?;
        let sat = geodetic_to_ecef(&sub, &earth)?;
        let gamma = earth_centered_angle(&ue, &sat)?;
        let theta = elevation_angle(&sat, &ue)?;
        let d = slant_range(&sat, &ue);
        // The closed form from gamma agrees with the vector distance.
        let d_gamma = slant_range_from_gamma(gamma, sat.norm(), &earth)?;
        assert!((d - d_gamma).abs() < 1e-6);
        println!(
            "{:>10.1} {:>10.3} {:>12.3} {:>12.3}",
            48.8323 + dlat,
            gamma.to_degrees(),
            theta.to_degrees(),
            d
        );
    }
    Ok(())
}
