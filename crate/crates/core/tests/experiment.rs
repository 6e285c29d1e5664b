use swipt_core::experiment::{parse_results_csv, write_results, TrialRow};
use swipt_core::{run_experiment, ExperimentConfig, ResultTable, Scheme, Sweep};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        sweep: Sweep::SecrecyTarget(vec![0.25, 0.5, 1.0]),
        trials: 3,
        num_users: 3,
        num_subcarriers: 16,
        ..ExperimentConfig::default()
    }
}

fn csv_bytes(table: &ResultTable) -> Vec<u8> {
    let mut out = Vec::new();
    write_results(table, &mut out).unwrap();
    out
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = small_config();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
}

#[test]
fn rows_cover_every_point_and_are_sorted() {
    let cfg = small_config();
    let t = run_experiment(&cfg).unwrap();
    assert_eq!(t.rows.len(), 3 * 3 * Scheme::ALL.len());
    for w in t.rows.windows(2) {
        let key = |r: &TrialRow| (r.sweep_value, r.scheme, r.trial);
        assert!(key(&w[0]).partial_cmp(&key(&w[1])) == Some(std::cmp::Ordering::Less));
    }
    for r in &t.rows {
        assert_eq!(r.seed, cfg.base_seed + r.trial as u64);
    }
}

#[test]
fn upper_bound_ratio_is_one() {
    let t = run_experiment(&small_config()).unwrap();
    let mut seen = 0;
    for r in t.rows.iter().filter(|r| r.scheme == Scheme::UpperBound) {
        if let Some(d) = r.delta {
            assert_eq!(d, 1.0);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn stepwise_is_non_increasing_in_target() {
    let cfg = ExperimentConfig {
        sweep: Sweep::SecrecyTarget(vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0]),
        schemes: vec![Scheme::Stepwise],
        ..small_config()
    };
    let t = run_experiment(&cfg).unwrap();
    for trial in 0..cfg.trials {
        let e: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r.trial == trial)
            .map(TrialRow::effective_e_sum)
            .collect();
        for w in e.windows(2) {
            assert!(w[1] <= w[0], "trial {trial}: {e:?}");
        }
    }
}

#[test]
fn empty_table_is_header_only() {
    let bytes = csv_bytes(&ResultTable::default());
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("sweep_var,sweep_value,scheme,trial,seed,feasible,E_sum_W,info_power_W,delta,min_slack_bits"));
}

#[test]
fn one_row_is_two_lines() {
    let mut t = run_experiment(&small_config()).unwrap();
    t.rows.truncate(1);
    assert_eq!(String::from_utf8(csv_bytes(&t)).unwrap().lines().count(), 2);
}

#[test]
fn written_table_parses_back() {
    let t = run_experiment(&small_config()).unwrap();
    let parsed = parse_results_csv(csv_bytes(&t).as_slice()).unwrap();
    assert_eq!(parsed.rows.len(), t.rows.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    for (a, b) in t.rows.iter().zip(&parsed.rows) {
        assert_eq!((a.scheme, a.trial, a.seed, a.feasible), (b.scheme, b.trial, b.seed, b.feasible));
        assert!(close(a.sweep_value, b.sweep_value) && close(a.e_sum, b.e_sum) && close(a.info_power, b.info_power));
        assert_eq!(a.delta.is_some(), b.delta.is_some());
        assert_eq!(a.min_slack.is_some(), b.min_slack.is_some());
    }
    // a second trip through the text is exact
    assert_eq!(csv_bytes(&parsed), csv_bytes(&t));
}

#[test]
fn summary_zero_fills_infeasible_trials() {
    let t = run_experiment(&small_config()).unwrap();
    for s in t.summarize() {
        let rows: Vec<&TrialRow> = t
            .rows
            .iter()
            .filter(|r| r.scheme == s.scheme && r.sweep_value == s.sweep_value)
            .collect();
        let mean = rows.iter().map(|r| r.effective_e_sum()).sum::<f64>() / rows.len() as f64;
        assert!((s.mean_e_sum - mean).abs() <= 1e-15 * mean.max(1.0));
        let frac = rows.iter().filter(|r| r.feasible).count() as f64 / rows.len() as f64;
        assert_eq!(s.feasible_fraction, frac);
    }
}

#[test]
fn bad_configs_are_rejected() {
    let bad = ExperimentConfig {
        trials: 0,
        ..small_config()
    };
    assert!(run_experiment(&bad).is_err());
    let bad = ExperimentConfig {
        sweep: Sweep::TransmitPower(vec![]),
        ..small_config()
    };
    assert!(run_experiment(&bad).is_err());
    assert!("trials = 0".parse::<ExperimentConfig>().unwrap().validate().is_err());
    assert!("no_such_key = 1".parse::<ExperimentConfig>().is_err());
}
