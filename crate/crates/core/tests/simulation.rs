//! Statistical and reproducibility properties of the event simulator.

use ionbsm_core::estimation::{
    background_correct, ml_state_reconstruct, state_metrics, transfer_state_data, transfer_target,
    MlOptions, ModelOptions,
};
use ionbsm_core::montecarlo::{
    exact_counts_table, expected_gated_counts, larmor_bin, simulate_events, simulate_runs,
    EfficiencyChain, Experiment, Models, RunConfig,
};
use ionbsm_core::noise::{GapCalibration, SourceModel};
use ionbsm_core::Passage;

#[test]
fn werner_source_round_trip() {
    let cfg = RunConfig::default();
    let models = Models::default();
    let experiment = Experiment::EntanglementTransfer;
    let sim = simulate_events(&cfg, &models, &experiment).unwrap();
    let expected = expected_gated_counts(&cfg, &models, &experiment).unwrap();
    for (k, passage) in Passage::ALL.into_iter().enumerate() {
        let n = sim.events.iter().filter(|e| e.passage == passage).count() as f64;
        let mean = expected[k].total();
        assert!(
            (n - mean).abs() < 5.0 * mean.sqrt(),
            "{passage}: {n} vs {mean}"
        );
    }
    let table = larmor_bin(&sim.events, cfg.larmor_bins, &experiment).unwrap();
    let data = transfer_state_data(&table, Passage::First, ModelOptions::default()).unwrap();
    let est = ml_state_reconstruct(&data, MlOptions::default()).unwrap();
    let f = state_metrics(&est.state, transfer_target(Passage::First))
        .unwrap()
        .fidelity;
    eprintln!("first-passage events {}, fidelity {f}", data.total());
    assert!((f - 0.9164).abs() < 0.01, "{f}");
}

#[test]
fn streams_do_not_depend_on_thread_count() {
    let cfg = RunConfig {
        n_runs: 40_000_000,
        runs_per_chunk: 1 << 18,
        ..Default::default()
    };
    let models = Models::calibrated(&GapCalibration::default()).unwrap();
    let experiment = Experiment::teleportation();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate_runs(&cfg, &models, &experiment).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| simulate_runs(&cfg, &models, &experiment).unwrap());
    assert!(!single.is_empty());
    assert_eq!(single, many);
    let other_seed = RunConfig { seed: 2, ..cfg };
    assert_ne!(
        simulate_runs(&other_seed, &models, &experiment).unwrap(),
        single
    );
}

#[test]
fn noiseless_frequencies_follow_the_born_rule() {
    let cfg = RunConfig {
        n_runs: 2_000,
        ..Default::default()
    };
    // unit detection and a fully addressable absorber make every run count
    let chain = EfficiencyChain {
        eta_854_a: 1.0,
        eta_854_b: 1.0,
        eta_393: 1.0,
        eta_gate: 1.0,
        eta_abs_first: 0.5 * cfg.emission_prob,
        eta_abs_second: 0.5 * cfg.emission_prob,
    };
    let models = Models {
        source: SourceModel {
            werner_weight: 1.0,
            ..Default::default()
        },
        chain,
        ..Default::default()
    };
    for experiment in [Experiment::EntanglementTransfer, Experiment::mapping()] {
        let sim = simulate_events(&cfg, &models, &experiment).unwrap();
        let observed = larmor_bin(&sim.events, cfg.larmor_bins, &experiment).unwrap();
        let groups = observed.group_totals();
        let probs = exact_counts_table(&cfg, &models, &experiment, 1.0).unwrap();
        let mut checked = 0;
        for (key, p) in probs.iter() {
            let Some(&n_group) = groups.get(&key.group()) else {
                continue;
            };
            let expected = n_group * p;
            let n = observed.get(key);
            let sd = (expected * (1.0 - p)).sqrt();
            assert!(
                (n - expected).abs() <= 5.0 * sd + 2.0,
                "{}: {key:?}: {n} vs {expected}",
                experiment.label()
            );
            checked += 1;
        }
        assert!(checked > 100);
    }
}

#[test]
fn background_correction_recovers_the_accidental_free_fidelity() {
    let cfg = RunConfig::default();
    let experiment = Experiment::EntanglementTransfer;
    let noisy = Models::calibrated(&GapCalibration::default()).unwrap();
    let clean = Models {
        background: Default::default(),
        ..noisy
    };
    let fidelity_of = |table: &ionbsm_core::montecarlo::CountsTable| {
        let data = transfer_state_data(table, Passage::First, ModelOptions::default()).unwrap();
        let est = ml_state_reconstruct(&data, MlOptions::default()).unwrap();
        state_metrics(&est.state, transfer_target(Passage::First))
            .unwrap()
            .fidelity
    };
    let sim = simulate_events(&cfg, &noisy, &experiment).unwrap();
    let truth = sim
        .events
        .iter()
        .filter(|e| e.truth_accidental == Some(true))
        .count() as f64
        / sim.events.len() as f64;
    let estimate = sim.accidental_estimate.unwrap();
    assert!((estimate - truth).abs() < 0.01, "{estimate} vs {truth}");
    let table = larmor_bin(&sim.events, cfg.larmor_bins, &experiment).unwrap();
    let raw = fidelity_of(&table);
    let corrected = fidelity_of(&background_correct(&table, estimate, &experiment));

    let clean_sim = simulate_events(&cfg, &clean, &experiment).unwrap();
    let reference =
        fidelity_of(&larmor_bin(&clean_sim.events, cfg.larmor_bins, &experiment).unwrap());
    assert!(corrected > raw);
    assert!(
        (corrected - reference).abs() < 0.02,
        "{corrected} vs {reference}"
    );
}
