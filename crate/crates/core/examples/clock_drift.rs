//! TDoA as timed by an unsynchronised UE clock, and recovery of the drift
//! rate by a straight-line fit.

use ntnsim::link::{
    clock_drift, fit_clock_drift, max_fit_residual, measured_tdoa, tdoa, ClockModel,
    SPEED_OF_LIGHT_KM_S,
};

fn main() -> ntnsim::Result<()> {
    let clk = ClockModel {
        eps1: 2e-7,
        eps2: 5e-7,
    };
    let c = SPEED_OF_LIGHT_KM_S;
    let (d1, d2, spacing) = (1200.0, 1199.93, 0.01);
    let t11 = 10.0 + d1 / c;
    let t12 = 10.0 + spacing + d2 / c;
    let ideal = tdoa(d1, d2, c);
    let measured = measured_tdoa(t11, t12, spacing, &clk);
    println!(
        "ideal tdoa {ideal:.6e} s, measured {measured:.6e} s, drift {:.3e} s",
        clock_drift(t11, t12, &clk)
    );

    // With the first arrival held fixed the drift is affine in the second.
    let samples: Vec<(f64, f64)> = (0..500)
        .map(|k| {
            let t = t11 + 0.01 * (k + 1) as f64;
            (t, clock_drift(t11, t, &clk))
        })
        .collect();
    let (alpha, beta) = fit_clock_drift(&samples)?;
    println!(
        "fit: alpha {alpha:.3e} (eps2 {:.1e}), beta {beta:.3e} s, max residual {:.1e} s",
        clk.eps2,
        max_fit_residual(&samples, alpha, beta)
    );
    Ok(())
}
