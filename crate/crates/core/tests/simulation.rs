use std::f64::consts::LN_2;

use bb84_eve::analysis::intercept_resend;
use bb84_eve::bounds::info_bound;
use bb84_eve::probe::Strategy;
use bb84_eve::simulate::{run, run_with_strategy, ProtocolConfig};

fn cfg(n: u64, seed: u64) -> ProtocolConfig {
    ProtocolConfig { n_signals: n, d: 0.1, attack_enabled: true, seed, workers: 1 }
}

#[test]
fn plugin_information_converges() {
    let target = info_bound(0.1).unwrap();
    let mean_err = |n: u64| {
        (0..8u64).map(|seed| (run(&cfg(n, seed)).unwrap().eve_mi_plugin_nats.unwrap() - target).abs()).sum::<f64>() / 8.0
    };
    let errs: Vec<f64> = [10_000, 100_000, 1_000_000].into_iter().map(mean_err).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.005);
}

#[test]
fn sifting_keeps_about_half() {
    for (n, seed) in [(1_000u64, 1), (100_000, 2), (1_000_000, 3)] {
        let s = run(&cfg(n, seed)).unwrap();
        let frac = s.n_sifted as f64 / n as f64;
        assert!((frac - 0.5).abs() < 1.5 / (n as f64).sqrt(), "n={n}: {frac}");
        assert_eq!(s.per_basis.iter().map(|b| b.n_sifted).sum::<u64>(), s.n_sifted);
    }
}

#[test]
fn reproducible_per_worker_count() {
    for workers in [1, 2, 5] {
        let c = ProtocolConfig { workers, ..cfg(200_000, 17) };
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn rates_stay_in_range() {
    for d in [0.0, 0.25, 0.5] {
        let s = run(&ProtocolConfig { d, ..cfg(20_000, 4) }).unwrap();
        for r in [s.bob_error_rate, s.eve_guess_accuracy.unwrap(), s.eve_mi_plugin_nats.unwrap()] {
            assert!((0.0..=1.0).contains(&r));
        }
        assert!(s.n_sifted <= s.n_signals);
    }
}

#[test]
fn intercept_resend_matches_simulation() {
    let row = intercept_resend();
    assert!((row.d - 0.25).abs() < 1e-12);
    assert!((row.i_eve_nats - 0.5 * LN_2).abs() < 1e-12);
    assert!(row.i_eve_nats < info_bound(0.25).unwrap());

    let n = 1_000_000;
    let s = run_with_strategy(&cfg(n, 8), &Strategy::intercept_resend()).unwrap();
    let sigma = (0.25f64 * 0.75 / s.n_sifted as f64).sqrt();
    assert!((s.bob_error_rate - 0.25).abs() < 3.0 * sigma, "{}", s.bob_error_rate);
    assert!((s.eve_mi_plugin_nats.unwrap() - 0.5 * LN_2).abs() < 0.005);
    assert!((s.eve_guess_accuracy.unwrap() - 0.75).abs() < 0.003);
}
