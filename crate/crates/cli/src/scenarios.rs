use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;
use wgm_cqed::fields::{
    azimuthal_intensity_contrast, circular_overlap, coupling_vs_distance, longitudinal_ratio, mode_amplitude_vector,
    CouplingProfile, ModePolarization, RefractiveRatio, Sense, Spherical,
};
use wgm_cqed::spectra::{
    averaged_pulsed_spectrum, averaged_spectrum, fit_spectrum, legacy_standing_wave_spectrum, pulsed_probe_spectrum,
    sweep_spectrum, Geometry, SpectrumResult, MHZ,
};
use wgm_cqed::transit::{run_ensemble, to_json_lines, EnsembleSummary, TransmissionCurve};

use crate::config::{RunConfig, Scenario};
use crate::output::Output;
use crate::CliError;

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs the configured scenario and returns the one-line summary.
pub fn run(cfg: &RunConfig, base: &Path, out: &Output) -> Result<String, CliError> {
    match cfg.scenario {
        Scenario::Fields => fields(cfg, out),
        Scenario::Spectrum | Scenario::Averaged | Scenario::Legacy | Scenario::Pulsed => spectrum(cfg, out),
        Scenario::Fit => fit(cfg, base, out),
        Scenario::Transit => transit(cfg, out),
    }
}

fn fields(cfg: &RunConfig, out: &Output) -> Result<String, CliError> {
    let mut modes = String::from("refractive_index,longitudinal_ratio,overlap_sigma_minus,overlap_pi,overlap_sigma_plus,azimuthal_contrast\n");
    for &n in &cfg.fields.indices {
        let r = RefractiveRatio::from_index(n).and_then(|x| longitudinal_ratio(x.value())).map_err(runtime)?;
        let v = mode_amplitude_vector(&ModePolarization::tm(Sense::Plus, r).map_err(runtime)?, true).map_err(runtime)?;
        let o: Vec<f64> = Spherical::ALL.iter().map(|&q| circular_overlap(&v, q)).collect::<Result<_, _>>().map_err(runtime)?;
        let c = azimuthal_intensity_contrast(r, 0.0).map_err(runtime)?;
        writeln!(modes, "{n:.4},{r:.8},{:.8},{:.8},{:.8},{:.8}", o[0], o[1], o[2], c.contrast).expect("string write");
    }
    out.csv("fields_modes.csv", &modes)?;

    let f = &cfg.fields;
    let profile = CouplingProfile::default();
    let mut coupling = String::from("distance_nm,g_MHz\n");
    for k in 0..f.points {
        let d = f.d_min_nm + (f.d_max_nm - f.d_min_nm) * k as f64 / (f.points - 1) as f64;
        let g = coupling_vs_distance(d * 1e-9, &profile).map_err(runtime)?;
        writeln!(coupling, "{d:.3},{:.6}", g / MHZ).expect("string write");
    }
    out.csv("fields_coupling.csv", &coupling)?;
    Ok(format!(
        "fields: {} indices, {} distances -> {}",
        f.indices.len(),
        f.points,
        out.dir().display()
    ))
}

fn add_noise(s: &mut SpectrumResult, sigma: f64, seed: u64) -> Result<(), CliError> {
    if sigma == 0.0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(runtime)?;
    for t in &mut s.transmission {
        *t = (*t + noise.sample(&mut rng)).max(0.0);
    }
    s.warnings.push(format!("synthetic Gaussian noise sigma = {sigma}"));
    Ok(())
}

fn spectrum(cfg: &RunConfig, out: &Output) -> Result<String, CliError> {
    let model = cfg.model_config();
    let d = cfg.detunings();
    let geo = cfg.model.geometry;
    let g = cfg.model.g_mhz * MHZ;
    let mut s = match cfg.scenario {
        Scenario::Spectrum => sweep_spectrum(&model, geo, &d, g),
        Scenario::Averaged => averaged_spectrum(&model, geo, &d, &cfg.distribution()),
        Scenario::Legacy => Ok(legacy_standing_wave_spectrum(&model, &d, g)),
        Scenario::Pulsed => {
            let (model, window) = cfg.pulsed_setup();
            if cfg.pulsed.averaged {
                averaged_pulsed_spectrum(&model, geo, &d, &cfg.distribution(), &window)
            } else {
                pulsed_probe_spectrum(&model, geo, &d, g, &window)
            }
        }
        _ => unreachable!("spectrum scenarios only"),
    }
    .map_err(runtime)?;
    add_noise(&mut s, cfg.sweep.noise, cfg.seed)?;

    let name = cfg.scenario.name();
    out.csv(&format!("{name}.csv"), &s.to_csv(None).map_err(runtime)?)?;
    let minima: Vec<f64> = s.local_minima().iter().map(|&i| s.detunings[i] / MHZ).collect();
    out.json(
        &format!("{name}.json"),
        json!({
            "geometry": s.geometry.tag(),
            "coupling": s.coupling,
            "points": s.len(),
            "minima_MHz": minima,
            "warnings": s.warnings,
        }),
    )?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    let fmt: Vec<String> = minima.iter().map(|m| format!("{m:+.1}")).collect();
    Ok(format!(
        "{name}: {} {} points, minima at [{}] MHz -> {}",
        s.geometry.tag(),
        s.len(),
        fmt.join(", "),
        out.dir().display()
    ))
}

fn fit(cfg: &RunConfig, base: &Path, out: &Output) -> Result<String, CliError> {
    let rel = cfg.fit.data.as_deref().ok_or_else(|| CliError::Config("fit.data is required".into()))?;
    let path = base.join(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let geo = cfg.model.geometry;
    let data = SpectrumResult::from_csv(&text, geo).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let r = fit_spectrum(&data, &cfg.model_config(), geo, &cfg.distribution(), &cfg.fit_options()).map_err(runtime)?;

    out.csv("fit.csv", &data.to_csv(Some(&r.model)).map_err(runtime)?)?;
    let mhz2 = MHZ * MHZ;
    let cov: Vec<Vec<f64>> = r.covariance.iter().map(|row| row.iter().map(|c| c / mhz2).collect()).collect();
    out.json(
        "fit.json",
        json!({
            "geometry": geo.tag(),
            "g_mean_fit_MHz": r.g_mean_fit / MHZ,
            "g_sigma_fit_MHz": r.g_sigma_fit / MHZ,
            "covariance_MHz2": cov,
            "residual_norm": r.residual_norm,
            "iterations": r.iterations,
            "start": r.start,
            "warnings": r.warnings,
        }),
    )?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(format!(
        "fit: {} g_mean = {:.2} ± {:.2} MHz, g_sigma = {:.2} ± {:.2} MHz, residual {:.3e} -> {}",
        geo.tag(),
        r.g_mean_fit / MHZ,
        cov[0][0].sqrt(),
        r.g_sigma_fit / MHZ,
        cov[1][1].sqrt(),
        r.residual_norm,
        out.dir().display()
    ))
}

fn transit(cfg: &RunConfig, out: &Output) -> Result<String, CliError> {
    let params = cfg.transit_params();
    let trigger = cfg.trigger_config();
    let geo: Geometry = cfg.model.geometry.co_partner();
    let g_max = params.g_peak * (1.0 + 4.0 * params.peak_jitter.abs());
    let curve = TransmissionCurve::from_model(&cfg.model_config(), geo, g_max.max(MHZ), cfg.transit.curve_points)
        .map_err(runtime)?;
    let records = run_ensemble(&params, &curve, &trigger, cfg.seed, cfg.transit.runs).map_err(runtime)?;
    let summary = EnsembleSummary::from_records(&records);

    out.json_lines("transit_records.jsonl", &to_json_lines(&records))?;
    out.csv("transit_summary.csv", &format!("{}\n{}\n", EnsembleSummary::csv_header(), summary.csv_row()))?;
    let mut table = String::from("g_MHz,transmission\n");
    for (g, t) in curve.g.iter().zip(&curve.t) {
        writeln!(table, "{:.6},{t:.10}", g / MHZ).expect("string write");
    }
    out.csv("transit_curve.csv", &table)?;
    Ok(format!(
        "transit: {} runs, trigger probability {:.4} ± {:.4}, survived {} -> {}",
        summary.runs,
        summary.trigger_probability,
        summary.trigger_stderr,
        summary.survived,
        out.dir().display()
    ))
}
