//! Quick tour: solve the window conditions for a desk-scale geometry, print
//! the closed forms, check stability, and measure a pulse delay.

use omitlight::model::ParamSource;
use omitlight::timedomain::{measure_pulse_delay, narrowband_sigma, Envelope, IntegrationSpec, Mode, ProbeSpec};
use omitlight::{closed_forms, group_delay, ideal_params, stability_report, Window};

fn main() {
    let (k1, k2, om, gm) = (20.0, 10.0, 50.0, 1.0);
    let mut params = ideal_params(Window::SlowAtPlusOmega, k1, k2, om, gm).unwrap();
    let cf = closed_forms(Window::SlowAtPlusOmega, k1, k2, om, gm).unwrap();
    println!("ideal slow window: beta = {}, J = {}", params.beta, params.j);
    println!("closed forms: K_max = {}, tau_max = {}", cf.k_max, cf.tau_max);

    let report = stability_report(&params);
    println!(
        "exact conditions stable? {} (margin {})",
        report.is_stable, report.margin
    );

    // back off the coupling until the set is stable, then measure a pulse
    params.beta *= 0.97;
    let report = stability_report(&params);
    println!(
        "at 0.97 beta: stable? {} (margin {}), window delay {}",
        report.is_stable,
        report.margin,
        group_delay(&params, om).unwrap()
    );

    let sigma = 1.05 * narrowband_sigma(&params, om).unwrap();
    let probe = ProbeSpec {
        delta: om,
        eps_p: 1.0,
        envelope: Envelope::Gaussian { center: 6.0 * sigma, width: sigma },
    };
    let spec = IntegrationSpec::new(Mode::Linearized, 14.0 * sigma, om);
    let result = measure_pulse_delay(&ParamSource::Effective(params), &probe, &spec).unwrap();
    println!(
        "pulse: measured delay {} (peaks {} -> {})",
        result.measured_delay, result.t_peak_in, result.t_peak_out
    );
}
