//! Monte-Carlo oracles for the estimators, tests and forecasts.

use rayon::prelude::*;

use sgarch::forecasting::{self, ForecastConfig, ForecastModel};
use sgarch::inference;
use sgarch::longrun::Boundary;
use sgarch::pipeline::{self, Bandwidth};
use sgarch::qmle::{Order, QmleOptions};
use sgarch::simulation::{self, CellOptions, Dgp, Innovation, PowerSpec, SimSpec, TauShape};

fn dgp2(n: usize, reps: usize, seed: u64) -> SimSpec {
    SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Constant, Innovation::Normal, n, reps, seed)
}

#[test]
fn asd_tracks_esd_for_garch11() {
    let r = simulation::run_cell(&dgp2(2000, 500, 41), &CellOptions::default()).unwrap();
    let s = r.qmle.unwrap();
    let asd = s.asd.unwrap()[0];
    let ratio = asd / s.esd[0];
    assert!((asd - 0.0210).abs() <= 0.25 * 0.0210, "ASD {asd}");
    assert!((0.85..=1.15).contains(&ratio), "ASD/ESD {ratio}");
}

#[test]
fn portmanteau_size_under_correct_specification() {
    let spec = dgp2(2000, 500, 42);
    let order = Order::new(1, 1).unwrap();
    let p: Vec<Option<f64>> = (0..500u64)
        .into_par_iter()
        .map(|rep| {
            let series = simulation::simulate(&spec, rep).ok()?;
            let fit = pipeline::fit_sgarch(
                &series,
                order,
                &Bandwidth::cv_with_pilot(order),
                Boundary::Reflection,
                &QmleOptions::default(),
            )
            .ok()?;
            fit.fit.converged.then_some(())?;
            inference::portmanteau_test(&fit.fit, 6).ok().map(|(r, _)| r.p_value)
        })
        .collect();
    let p: Vec<f64> = p.into_iter().flatten().collect();
    assert!(p.len() >= 475, "only {} usable replications", p.len());
    let rate = p.iter().filter(|v| **v < 0.05).count() as f64 / p.len() as f64;
    assert!((0.03..=0.08).contains(&rate), "Q(6) size {rate}");
}

#[test]
fn power_is_nondecreasing_in_k() {
    let reps = 200;
    let spec = PowerSpec::new(Dgp::Dgp3Sgarch12, 2000, reps, 43, vec![0, 5, 10]);
    let report = simulation::run_power_curves(&spec, &QmleOptions::default()).unwrap();
    let se = |p: f64, n: usize| (p * (1.0 - p) / n as f64).sqrt();
    for w in report.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let tol = |x: f64, y: f64| 2.0 * (se(x, a.n_used).powi(2) + se(y, b.n_used).powi(2)).sqrt();
        assert!(b.lm_rate >= a.lm_rate - tol(a.lm_rate, b.lm_rate), "LM k={} {} then k={} {}", a.k, a.lm_rate, b.k, b.lm_rate);
        let (qa, qb) = (a.q_rates[0], b.q_rates[0]);
        assert!(qb >= qa - tol(qa, qb), "Q6 k={} {qa} then k={} {qb}", a.k, b.k);
    }
}

/// Share of series on which S-GARCH has the lower one-step QLIKE.
fn sgarch_vs_ls_arch(reps: u64, stride: usize) -> f64 {
    let spec = dgp2(3000, reps as usize, 44);
    let cfg = ForecastConfig {
        horizons: vec![1],
        origin_stride: stride,
        models: vec![ForecastModel::Sgarch, ForecastModel::LsArchQ],
        ..ForecastConfig::default()
    };
    let wins: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let series = simulation::simulate(&spec, rep).unwrap();
            let report = forecasting::qlike_report(&series, &cfg).unwrap();
            let s = report.qlike(ForecastModel::Sgarch, 1).unwrap();
            let l = report.qlike(ForecastModel::LsArchQ, 1).unwrap();
            s <= l
        })
        .collect();
    wins.iter().filter(|w| **w).count() as f64 / reps as f64
}

#[test]
fn sgarch_usually_beats_ls_arch_one_step_reduced() {
    let share = sgarch_vs_ls_arch(20, 5);
    assert!(share >= 0.7, "S-GARCH better on {share} of series");
}

#[test]
#[ignore = "about 25 minutes on one core"]
fn sgarch_usually_beats_ls_arch_one_step() {
    let share = sgarch_vs_ls_arch(100, 1);
    assert!(share >= 0.7, "S-GARCH better on {share} of series");
}
