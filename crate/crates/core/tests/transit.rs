use proptest::prelude::*;
use wgm_cqed::spectra::{Geometry, LevelSelection, ModelConfig, MHZ};
use wgm_cqed::transit::*;

fn noise_trajectory(duration: f64) -> TransitTrajectory {
    TransitTrajectory { dt: duration, duration, g_of_t: vec![0.0, 0.0] }
}

#[test]
fn noise_trigger_rate_matches_scan_statistic() {
    let cfg = TriggerConfig { residual_transmission: 0.3, ..TriggerConfig::default() };
    let traj = noise_trajectory(12e-6);
    let curve = TransmissionCurve::constant(0.0);
    let runs = 10_000u64;
    let hits = (0..runs)
        .filter(|&s| run_trigger_protocol(&photon_count_stream(&traj, &curve, &cfg, s), &cfg).triggered)
        .count();
    let p_mc = hits as f64 / runs as f64;
    let p = poisson_scan_probability(cfg.eta1, cfg.rate(0.0), cfg.dt1, traj.duration);
    let sigma = (p * (1.0 - p) / runs as f64).sqrt();
    assert!((p_mc - p).abs() < 3.0 * sigma, "MC {p_mc} vs scan statistic {p} (sigma {sigma})");
}

#[test]
fn single_window_trigger_is_poisson_tail() {
    let cfg = TriggerConfig { residual_transmission: 0.5, ..TriggerConfig::default() };
    let traj = noise_trajectory(cfg.dt1);
    let curve = TransmissionCurve::constant(0.0);
    let runs = 10_000u64;
    let hits = (0..runs)
        .filter(|&s| run_trigger_protocol(&photon_count_stream(&traj, &curve, &cfg, s), &cfg).triggered)
        .count();
    let p = poisson_tail(cfg.eta1, cfg.rate(0.0) * cfg.dt1);
    let sigma = (p * (1.0 - p) / runs as f64).sqrt();
    assert!((hits as f64 / runs as f64 - p).abs() < 3.0 * sigma);
}

#[test]
fn replay_is_bit_exact() {
    let params = TransitParams { peak_jitter: 0.2, ..TransitParams::default() };
    let curve = TransmissionCurve { g: vec![0.0, 30.0 * MHZ], t: vec![0.0, 0.9] };
    let cfg = TriggerConfig::default();
    let a = run_ensemble(&params, &curve, &cfg, 42, 200).unwrap();
    let b = run_ensemble(&params, &curve, &cfg, 42, 200).unwrap();
    assert_eq!(to_json_lines(&a), to_json_lines(&b));
    let (_, o1) = simulate_transit(&params, &curve, &cfg, 7).unwrap();
    let (_, o2) = simulate_transit(&params, &curve, &cfg, 7).unwrap();
    let bits = |o: &ProtocolOutcome| o.photon_record.iter().map(|t| t.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&o1), bits(&o2));
    let c = run_ensemble(&params, &curve, &cfg, 43, 200).unwrap();
    assert_ne!(to_json_lines(&a), to_json_lines(&c));
}

#[test]
fn efficiency_scales_counts() {
    let traj = noise_trajectory(2e-6);
    let curve = TransmissionCurve::constant(0.4);
    let lo = TriggerConfig { detector_efficiency: 0.25, residual_transmission: 0.0, ..TriggerConfig::default() };
    let hi = TriggerConfig { detector_efficiency: 0.5, ..lo };
    let n = 5_000u64;
    let count = |cfg: &TriggerConfig| (0..n).map(|s| photon_count_stream(&traj, &curve, cfg, s).len()).sum::<usize>() as f64;
    let (a, b) = (count(&lo), count(&hi));
    // Poisson totals: var(b − 2a) = b̄ + 4ā
    assert!((b - 2.0 * a).abs() < 3.0 * (b + 4.0 * a).sqrt(), "{a} {b}");
}

#[test]
fn trigger_probability_grows_with_peak_coupling() {
    let config = ModelConfig { levels: LevelSelection::Pruned { hops: 2 }, ..ModelConfig::default() };
    let curve = TransmissionCurve::from_model(&config, Geometry::CoTm, 30.0 * MHZ, 31).unwrap();
    assert!(curve.t.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let cfg = TriggerConfig::for_geometry(Geometry::CoTm);
    let mut last = -1.0;
    for g in [0.0, 5.0, 10.0, 15.0, 20.0, 30.0] {
        let params = TransitParams { g_peak: g * MHZ, ..TransitParams::default() };
        let s = EnsembleSummary::from_records(&run_ensemble(&params, &curve, &cfg, 1, 2_000).unwrap());
        assert!(s.trigger_probability >= last, "g = {g}: {} < {last}", s.trigger_probability);
        last = s.trigger_probability;
    }
    assert!(last > 0.9);
}

#[test]
fn summary_csv_shape() {
    let recs = vec![
        TransitRecord { seed: 1, g_peak_mhz: 10.0, triggered: true, trigger_time: Some(1e-6), survived: false, photons: 8 },
        TransitRecord { seed: 2, g_peak_mhz: 10.0, triggered: false, trigger_time: None, survived: false, photons: 0 },
    ];
    let s = EnsembleSummary::from_records(&recs);
    assert_eq!(s.triggered, 1);
    assert_eq!(EnsembleSummary::csv_header().split(',').count(), s.csv_row().split(',').count());
    let line = to_json_lines(&recs[..1]);
    let back: TransitRecord = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(back, recs[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trigger_time_lies_in_stream(seed in any::<u64>(), t in 0.0f64..1.0) {
        let cfg = TriggerConfig::default();
        let traj = noise_trajectory(10e-6);
        let stream = photon_count_stream(&traj, &TransmissionCurve::constant(t), &cfg, seed);
        prop_assert!(stream.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(stream.iter().all(|&x| x > 0.0 && x <= traj.duration));
        let out = run_trigger_protocol(&stream, &cfg);
        if let Some(tt) = out.trigger_time {
            prop_assert!(tt <= traj.duration);
            prop_assert!(stream.contains(&tt));
        }
        prop_assert!(!out.survived || out.triggered);
    }

    #[test]
    fn larger_transmission_never_loses_photons(seed in any::<u64>(), lo in 0.0f64..1.0, extra in 0.0f64..1.0) {
        let cfg = TriggerConfig::default();
        let traj = noise_trajectory(5e-6);
        let hi = (lo + extra).min(1.0);
        let a = photon_count_stream(&traj, &TransmissionCurve::constant(lo), &cfg, seed);
        let b = photon_count_stream(&traj, &TransmissionCurve::constant(hi), &cfg, seed);
        prop_assert!(a.iter().all(|t| b.contains(t)));
    }

    #[test]
    fn trajectory_is_single_peaked(g in 0.0f64..200.0, sigma in 0.5f64..4.0) {
        let p = TransitParams { g_peak: g, sigma_t: sigma * 1e-6, duration: 16e-6, dt: 0.1e-6, peak_jitter: 0.0 };
        let tr = sample_trajectory(&p, 0).unwrap();
        let mid = tr.g_of_t.len() / 2;
        prop_assert!(tr.g_of_t.iter().all(|&x| x >= 0.0));
        prop_assert!(tr.g_of_t[..=mid].windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(tr.g_of_t[mid..].windows(2).all(|w| w[1] <= w[0]));
    }
}
