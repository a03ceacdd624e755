//! Cross-module integration: artifacts survive their JSON interfaces and the
//! reloaded objects drive the same pipeline to the same conclusions.

use ana_core::metrics::{rate_report, reports_to_csv};
use ana_core::network::{
    blind_switch_pattern, build_switching_channels, draw_varying_channels, ExtendedChannelSet,
    NetworkSpec, SchemeVariant,
};
use ana_core::scenario::{run_scenario, ScenarioConfig, ScenarioResult};
use ana_core::scheme::{
    asymptotic_dims, build_asymptotic_ana, build_blind_ana, build_mx2_ana, effective_channels,
    BeamformingPlan, SchemeKind,
};
use ana_core::verify::{check_alignment, AlignmentReport};

fn round_trip_channels(ch: &ExtendedChannelSet) -> ExtendedChannelSet {
    serde_json::from_str(&serde_json::to_string(ch).unwrap()).unwrap()
}

fn round_trip_plan(plan: &BeamformingPlan) -> BeamformingPlan {
    serde_json::from_str(&serde_json::to_string(plan).unwrap()).unwrap()
}

#[test]
fn mx2_pipeline_survives_json() {
    let spec = NetworkSpec::new(4, 2, SchemeVariant::XncmVarying, 4).unwrap();
    let ch = draw_varying_channels(&spec, 99).unwrap();
    let plan = build_mx2_ana(&ch, 4, 99).unwrap();

    let ch2 = round_trip_channels(&ch);
    let plan2 = round_trip_plan(&plan);
    assert_eq!(ch, ch2);
    assert_eq!(plan, plan2);

    let report = check_alignment(&plan2, &ch2).unwrap();
    assert!(report.overall_pass);
    assert_eq!(
        effective_channels(&plan, &ch).unwrap(),
        effective_channels(&plan2, &ch2).unwrap()
    );
}

#[test]
fn asymptotic_pipeline_survives_json() {
    let dims = asymptotic_dims(2, 2, 1, true).unwrap();
    let spec =
        NetworkSpec::new(2, 2, SchemeVariant::XncmExternalEve, dims.extension_len).unwrap();
    let ch = draw_varying_channels(&spec, 5).unwrap();
    let plan = build_asymptotic_ana(&ch, 2, 2, 1, true, 5).unwrap();

    let report = check_alignment(&round_trip_plan(&plan), &round_trip_channels(&ch)).unwrap();
    assert!(report.overall_pass);

    let report_json: AlignmentReport =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report_json.overall_pass, report.overall_pass);
    assert_eq!(report_json.relations.len(), report.relations.len());
}

#[test]
fn blind_pipeline_survives_json() {
    let pattern = blind_switch_pattern(3, 2).unwrap();
    let ch = build_switching_channels(3, 2, &pattern, 77).unwrap();
    let plan = build_blind_ana(&ch, 3, 2, false).unwrap();

    let ch2 = round_trip_channels(&ch);
    let plan2 = round_trip_plan(&plan);
    let report = check_alignment(&plan2, &ch2).unwrap();
    assert!(report.overall_pass);

    let eff = effective_channels(&plan2, &ch2).unwrap();
    let r = rate_report(&eff, &plan2, 1e9, 1.0).unwrap();
    let csv = reports_to_csv(SchemeKind::BlindAna, 3, 2, None, &[(90.0, &r)]);
    assert!(csv.starts_with("scheme,M,K,n,P_db,receiver,rate,leakage,delta\n"));
    assert_eq!(csv.lines().count(), 3);
}

/// Without an eavesdropper every alignment block loses that observer's
/// relations, the extension shrinks accordingly, and the measured network
/// slope tracks the smaller construction's achieved fraction.
#[test]
fn asymptotic_without_eavesdropper_still_aligns_and_rates() {
    let (m, k, n) = (2usize, 3usize, 1usize);
    let dims = asymptotic_dims(m, k, n, false).unwrap();
    // (K-1)(M-1) relations per block; K(n+1)^G + (M-1)n^G slots
    assert_eq!(dims.relations_per_block, 2);
    assert_eq!(dims.extension_len, 13);

    let spec = NetworkSpec::new(m, k, SchemeVariant::XncmVarying, dims.extension_len).unwrap();
    let ch = draw_varying_channels(&spec, 21).unwrap();
    let plan = build_asymptotic_ana(&ch, m, k, n, false, 21).unwrap();
    let report = check_alignment(&plan, &ch).unwrap();
    assert!(report.overall_pass, "{report:?}");
    // K blocks x (K-1)(M-1) relations, receivers only
    assert_eq!(report.relations.len(), k * dims.relations_per_block);

    let eff = effective_channels(&plan, &ch).unwrap();
    assert_eq!(eff.observers.len(), k);
    let powers: Vec<f64> = (0..7).map(|i| 10f64.powf(6.0 + i as f64)).collect();
    let points: Vec<(f64, f64)> = powers
        .iter()
        .map(|&p| {
            let r = rate_report(&eff, &plan, p, 1.0).unwrap();
            (p, r.rates.iter().map(|x| x.sum_rate_bits_per_slot).sum())
        })
        .collect();
    let est = ana_core::metrics::sdof_slope(&points).unwrap();
    let target = (k * (m - 1)) as f64 / dims.extension_len as f64;
    assert!((est.slope - target).abs() < 0.05, "slope {} vs {target}", est.slope);
}

#[test]
fn scenario_results_serialize_with_their_hash() {
    let mut config = ScenarioConfig::new(SchemeKind::Mx2Ana);
    config.trials = 2;
    config.seed = 31;
    let result = run_scenario(&config).unwrap();
    let json = serde_json::to_string_pretty(&result).unwrap();
    let back: ScenarioResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.config_hash, result.config.hash());
    assert_eq!(back.trials.len(), 2);
    assert_eq!(back.trials_passed, 2);
}
