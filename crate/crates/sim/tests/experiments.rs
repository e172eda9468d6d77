use petcode_sim::config::{Delivery, ElectionConfig, TellerMode};
use petcode_sim::election::{default_plans, run_election};
use petcode_sim::experiments::{cai_bound, experiment_cai, experiment_privacy};

fn small() -> ElectionConfig {
    ElectionConfig {
        voters: 4,
        corrupted_voters: 1,
        options: 1,
        code_space: 10,
        code_bits: 4,
        lambda: 2,
        ..Default::default()
    }
}

#[test]
fn small_pool_success_rate_tracks_the_bound() {
    let config = ElectionConfig { seed: "cai-small".into(), ..small() };
    let r = experiment_cai(&config, 300).unwrap();
    assert_eq!(r.bound, cai_bound(10, 4, 1));
    assert_eq!(r.bound, 0.2);
    assert_eq!(r.details["pool_sizes"], serde_json::json!([5]));
    assert!(r.pass, "{r:?}");
    // 300 trials at p = 0.2: the rate lies well inside [0.1, 0.3].
    assert!(r.observed_rate > 0.1 && r.observed_rate < 0.3, "{r:?}");
}

#[test]
fn out_of_band_delivery_defeats_the_platform() {
    let config = ElectionConfig { seed: "cai-oob".into(), delivery: Delivery::OutOfBand, ..small() };
    let r = experiment_cai(&config, 40).unwrap();
    assert_eq!(r.successes, 0);
    assert!(r.pass);
}

#[test]
fn experiments_reject_a_decrypting_coalition() {
    let config = ElectionConfig { corrupted_tellers: vec![1, 2], ..small() };
    assert!(experiment_cai(&config, 1).is_err());
    assert!(experiment_privacy(&config, 1).is_err());
}

#[test]
fn privacy_violators_win_and_honest_distinguishers_do_not() {
    let config = ElectionConfig { seed: "privacy-small".into(), voters: 2, corrupted_voters: 0, ..small() };
    let r = experiment_privacy(&config, 60).unwrap();
    let details = r.details.as_array().unwrap();
    for d in details {
        if d["honest"] == false {
            assert_eq!(d["advantage"], 1.0, "{d}");
        } else {
            assert!(d["advantage"].as_f64().unwrap() < 0.5, "{d}");
        }
    }
}

#[test]
fn active_tellers_are_caught() {
    let config = ElectionConfig {
        seed: "active".into(),
        corrupted_tellers: vec![2],
        teller_mode: TellerMode::Active,
        lambda: 2,
        ..ElectionConfig::default()
    };
    let out = run_election(&config, &default_plans(&config)).unwrap();
    for o in &out.outcomes {
        let reason = o.aborted.as_deref().expect("every cast aborts");
        assert!(reason.contains('2'), "{reason}");
    }
    assert!(out.tally.decryptions.is_empty());
}
