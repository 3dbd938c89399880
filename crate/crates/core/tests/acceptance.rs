//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed.
//! Pass criterion numbers (e.g. `cargo test --test acceptance -- 1 4`) to
//! run a subset.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sgarch::data_io::ReturnSeries;
use sgarch::forecasting::{self, ArchWindowCache};
use sgarch::inference;
use sgarch::kernel::{KernelKind, KernelSpec};
use sgarch::longrun::{self, Boundary, CvConfig};
use sgarch::pipeline::Bandwidth;
use sgarch::qmle::{self, GarchParams, LinearConstraint, Order, QmleOptions};
use sgarch::simulation::{self, CellOptions, CellReport, Dgp, Innovation, PowerReport, PowerSpec, SimSpec, TauShape};

const SEED: u64 = 2017;
const REPS: usize = 500;
const T: usize = 2000;

struct Line {
    pass: bool,
    detail: String,
}

impl Line {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Monte-Carlo runs shared between criteria.
#[derive(Default)]
struct Runs {
    cells: Vec<((TauShape, Innovation), CellReport)>,
    power: Option<PowerReport>,
}

impl Runs {
    fn dgp2(&mut self, tau: TauShape, dist: Innovation) -> &CellReport {
        if let Some(i) = self.cells.iter().position(|(k, _)| *k == (tau, dist)) {
            return &self.cells[i].1;
        }
        let spec = SimSpec::new(Dgp::Dgp2Sgarch11, tau, dist, T, REPS, SEED);
        let opts = CellOptions { variance_targeting: tau == TauShape::Constant, ..CellOptions::default() };
        let r = simulation::run_cell(&spec, &opts).expect("cell runs");
        self.cells.push(((tau, dist), r));
        &self.cells.last().unwrap().1
    }

    fn power(&mut self) -> &PowerReport {
        if self.power.is_none() {
            let spec = PowerSpec::new(Dgp::Dgp3Sgarch12, T, REPS, SEED, vec![0, 10]);
            self.power = Some(simulation::run_power_curves(&spec, &QmleOptions::default()).expect("power runs"));
        }
        self.power.as_ref().unwrap()
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn c1(runs: &mut Runs) -> Line {
    let r = runs.dgp2(TauShape::Constant, Innovation::Normal);
    let s = r.qmle.as_ref().unwrap();
    let asd = s.asd.as_ref().unwrap();
    // β bands: the α bands scaled by the reference ESD ratio 0.0635/0.0202.
    let scale = 0.0635 / 0.0202;
    let checks = [
        s.bias[0].abs() <= 0.01,
        within(s.esd[0], 0.0152, 0.0253),
        within(asd[0], 0.0158, 0.0263),
        s.bias[1].abs() <= 0.01 * scale,
        within(s.esd[1], 0.0635 * 0.75, 0.0635 * 1.25),
        within(asd[1], 0.0562 * 0.75, 0.0562 * 1.25),
    ];
    Line::new(
        checks.iter().all(|c| *c),
        format!(
            "alpha bias {:+.4} esd {:.4} asd {:.4}; beta bias {:+.4} (|.| <= {:.4}) esd {:.4} asd {:.4}; {} of {} reps used",
            s.bias[0], s.esd[0], asd[0], s.bias[1], 0.01 * scale, s.esd[1], asd[1], r.n_used, REPS
        ),
    )
}

fn c2(runs: &mut Runs) -> Line {
    let esd: Vec<f64> = [TauShape::Constant, TauShape::Linear, TauShape::Cyclical]
        .iter()
        .map(|&tau| runs.dgp2(tau, Innovation::Normal).qmle.as_ref().unwrap().esd[0])
        .collect();
    let max = esd.iter().cloned().fold(f64::MIN, f64::max);
    let min = esd.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / min;
    Line::new(
        spread <= 0.15,
        format!(
            "alpha ESD constant {:.4} linear {:.4} cyclical {:.4}; largest pairwise gap {:.1}% of the smaller",
            esd[0], esd[1], esd[2], 100.0 * spread
        ),
    )
}

fn c3(runs: &mut Runs) -> Line {
    let get = |runs: &mut Runs, d| {
        let s = runs.dgp2(TauShape::Constant, d).qmle.clone().unwrap();
        (s.esd[0], s.esd_se[0])
    };
    let (n, n_se) = get(runs, Innovation::Normal);
    let (t10, t10_se) = get(runs, Innovation::St10);
    let (t5, t5_se) = get(runs, Innovation::St5);
    let gap_hi = t5 - t10;
    let gap_lo = t10 - n;
    let se_hi = (t5_se.powi(2) + t10_se.powi(2)).sqrt();
    let se_lo = (t10_se.powi(2) + n_se.powi(2)).sqrt();
    Line::new(
        gap_hi > se_hi && gap_lo > se_lo,
        format!(
            "alpha ESD st5 {t5:.4} > st10 {t10:.4} > normal {n:.4}; gaps {gap_hi:.4} (se {se_hi:.4}), {gap_lo:.4} (se {se_lo:.4})"
        ),
    )
}

fn c4(runs: &mut Runs) -> Line {
    let p = runs.power();
    let row = p.rows.iter().find(|r| r.k == 0).unwrap();
    let rates: Vec<f64> = std::iter::once(row.lm_rate).chain(row.q_rates.iter().copied()).collect();
    Line::new(
        rates.iter().all(|r| within(*r, 0.03, 0.08)),
        format!(
            "k=0 rejection at 5%: LM {:.3}, Q6 {:.3}, Q9 {:.3}, Q12 {:.3}; {} of {} reps used",
            rates[0], rates[1], rates[2], rates[3], row.n_used, REPS
        ),
    )
}

fn c5(runs: &mut Runs) -> Line {
    let p = runs.power();
    let r0 = p.rows.iter().find(|r| r.k == 0).unwrap();
    let r10 = p.rows.iter().find(|r| r.k == 10).unwrap();
    let q6 = r10.q_rates[0];
    Line::new(
        r10.lm_rate > q6 && r10.lm_rate - r0.lm_rate >= 0.3,
        format!(
            "k=10: LM {:.3} vs Q6 {:.3}; LM power gain over k=0 {:.3}",
            r10.lm_rate,
            q6,
            r10.lm_rate - r0.lm_rate
        ),
    )
}

fn c6(runs: &mut Runs) -> Line {
    let r = runs.dgp2(TauShape::Constant, Innovation::Normal);
    let q = r.qmle.as_ref().unwrap();
    let vt = r.vt.as_ref().unwrap();
    let ra = q.esd[0] / vt.esd[0];
    let rb = q.esd[1] / vt.esd[1];
    Line::new(
        within(ra, 0.9, 1.1) && within(rb, 0.9, 1.1),
        format!("ESD ratio two-step/VT: alpha {ra:.3}, beta {rb:.3}"),
    )
}

fn c7() -> Line {
    let spec = SimSpec::new(Dgp::Dgp1Sarch2, TauShape::Constant, Innovation::Normal, T, REPS, SEED);
    let opts = CellOptions { three_step: true, ..CellOptions::default() };
    let r = simulation::run_cell(&spec, &opts).expect("cell runs");
    let q = r.qmle.as_ref().unwrap();
    let c = r.three_step.as_ref().unwrap();
    let ratio: Vec<f64> = (0..2).map(|i| q.esd[i] / c.esd[i]).collect();
    let d: Vec<f64> = (0..2).map(|i| q.bias[i].abs() - c.bias[i].abs()).collect();
    Line::new(
        ratio.iter().all(|x| within(*x, 0.9, 1.15)) && d.iter().all(|x| x.abs() <= 0.005),
        format!(
            "R(alpha1) {:.3}, R(alpha2) {:.3}; d(alpha1) {:+.4}, d(alpha2) {:+.4}; {} of {} reps used",
            ratio[0], ratio[1], d[0], d[1], r.n_used, REPS
        ),
    )
}

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn dgp2_series(tau: TauShape, n: usize, rep: u64) -> ReturnSeries {
    simulation::simulate(&SimSpec::new(Dgp::Dgp2Sgarch11, tau, Innovation::Normal, n, 1, SEED), rep).unwrap()
}

fn c8a() -> (bool, String) {
    let u_sq: Vec<f64> = dgp2_series(TauShape::Constant, 500, 0).squares();
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (p, q) = [(1, 1), (1, 2), (2, 1), (0, 3)][i % 4];
        let order = Order::new(p, q).unwrap();
        let dim = order.dim();
        let budget = rng.random_range(0.3..0.95);
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let theta: Vec<f64> = raw.iter().map(|v| v / sum * budget).collect();
        let p = GarchParams::new(order, theta.clone()).unwrap();
        let (_, grad) = qmle::neg_loglik_grad(&u_sq, &p).unwrap();
        let mut diff = 0.0;
        let mut norm = 0.0;
        for j in 0..dim {
            let step = 1e-6 * (1.0 + theta[j].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += step;
            tm[j] -= step;
            let fp = qmle::neg_loglik_squares(&u_sq, &GarchParams::new(order, tp).unwrap()).unwrap();
            let fm = qmle::neg_loglik_squares(&u_sq, &GarchParams::new(order, tm).unwrap()).unwrap();
            let fd = (fp - fm) / (2.0 * step);
            diff += (grad[j] - fd).powi(2);
            norm += fd * fd;
        }
        worst = worst.max((diff / norm).sqrt());
    }
    (worst < 1e-5, format!("a: gradient rel err {worst:.1e}"))
}

fn c8b() -> (bool, String) {
    let mut worst = 0.0f64;
    for (seed, n) in [(1u64, 50usize), (2, 17), (3, 1)] {
        let u_sq: Vec<f64> = noise(n, seed).iter().map(|v| 2.0 * v * v).collect();
        let (a, b) = (0.12, 0.81);
        let omega = 1.0 - a - b;
        let f = qmle::garch_filter(&u_sq, &GarchParams::new(Order::new(1, 1).unwrap(), vec![a, b]).unwrap()).unwrap();
        for t in 0..n {
            // g_t = ω Σ_{j≤t} β^j + α Σ_{j≤t} β^j u²_{t−1−j} + β^{t+1}, pre-sample values 1.
            let mut g = b.powi(t as i32 + 1);
            for j in 0..=t {
                let lagged = if t > j { u_sq[t - 1 - j] } else { 1.0 };
                g += b.powi(j as i32) * (omega + a * lagged);
            }
            worst = worst.max((f.g[t] - g).abs());
        }
    }
    (worst <= 1e-12, format!("b: filter vs expansion {worst:.1e}"))
}

fn c8c_d() -> (bool, String) {
    let s = dgp2_series(TauShape::Cyclical, 1000, 1);
    let spec = KernelSpec::epanechnikov(0.1).unwrap();
    let refl = longrun::estimate_tau(&s, &spec, Boundary::Reflection).unwrap().tau_hat;
    let inter = longrun::estimate_tau(&s, &spec, Boundary::InteriorOnly).unwrap().tau_hat;
    let m = (1000.0 * 0.1f64).floor() as usize;
    let exact = (m..1000 - m).all(|t| refl[t] == inter[t]);
    let c = 3.7;
    let scaled = ReturnSeries::new(s.values().iter().map(|v| c * v).collect(), "scaled").unwrap();
    let tau_c = longrun::estimate_tau(&scaled, &spec, Boundary::Reflection).unwrap().tau_hat;
    let worst = refl.iter().zip(&tau_c).map(|(a, b)| ((b - c * c * a) / (c * c * a)).abs()).fold(0.0, f64::max);
    (exact && worst <= 1e-12, format!("c: interior agreement {exact}; d: scaling rel err {worst:.1e}"))
}

fn c8e() -> (bool, String) {
    let s = dgp2_series(TauShape::Constant, 1500, 2);
    let order = Order::new(1, 2).unwrap();
    let lr = longrun::estimate_tau(&s, &KernelSpec::epanechnikov(0.15).unwrap(), Boundary::Reflection).unwrap();
    let c = LinearConstraint::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, -0.2]], &[0.0, 0.0]).unwrap();
    let fit = qmle::fit_qmle_constrained(&s, &lr, order, &c, &QmleOptions::default()).unwrap();
    let base = inference::lm_statistic(&fit.filtered, &c).unwrap().statistic;
    let scaled = inference::lm_statistic(&fit.filtered, &c.scale_rows(&[-40.0, 0.003]).unwrap()).unwrap().statistic;
    let lm_err = ((scaled - base) / base.abs().max(1e-300)).abs();

    let fit11 = qmle::fit_qmle(&s, &lr, Order::new(1, 1).unwrap(), None, &QmleOptions::default()).unwrap();
    let internals = inference::portmanteau_internals(&fit11.filtered, 6).unwrap();
    let n = fit11.filtered.len();
    let q_zero = inference::portmanteau_statistic(&[0.0; 6], &internals.sigma_p, n).unwrap().statistic;
    let q_hat = inference::portmanteau_statistic(&internals.rho_hat, &internals.sigma_p, n).unwrap().statistic;
    let mut one = [0.0; 6];
    one[2] = 1e-3;
    let q_one = inference::portmanteau_statistic(&one, &internals.sigma_p, n).unwrap().statistic;
    let ok = lm_err <= 1e-8 && q_zero == 0.0 && q_hat > 0.0 && q_one > 0.0;
    (ok, format!("e: LM rescaling rel err {lm_err:.1e}, Q(0) = {q_zero}, Q(rho) = {q_hat:.3}"))
}

fn c8f(runs: &mut Runs) -> (bool, String) {
    let p = runs.power();
    let row = p.rows.iter().find(|r| r.k == 0).unwrap();
    let lm: Vec<f64> = row.draws.iter().map(|d| d.lm_p).collect();
    let q6: Vec<f64> = row.draws.iter().map(|d| d.q_p[0]).collect();
    let (_, p_lm) = inference::ks_uniform(&lm);
    let (_, p_q) = inference::ks_uniform(&q6);
    (p_lm > 0.01 && p_q > 0.01, format!("f: KS p-value LM {p_lm:.3}, Q6 {p_q:.3}"))
}

fn c8g() -> (bool, String) {
    let s = dgp2_series(TauShape::Linear, 1200, 3);
    let origin = 900;
    let mut shocked = s.values().to_vec();
    for (i, y) in shocked[origin..].iter_mut().enumerate() {
        *y = if i % 2 == 0 { 10.0 * *y } else { 0.0 };
    }
    let shocked = ReturnSeries::new(shocked, "shocked").unwrap();
    let order = Order::new(1, 1).unwrap();
    let bw = Bandwidth::cv_with_pilot(order);
    let opts = QmleOptions::default();
    let a = forecasting::forecast_sgarch(&s, origin, order, &bw, &[1, 5, 22], None, &opts).unwrap();
    let b = forecasting::forecast_sgarch(&shocked, origin, order, &bw, &[1, 5, 22], None, &opts).unwrap();
    let grid = [100, 200, 300];
    let la = forecasting::forecast_ls_arch(&s, origin, 2, &grid, 50, &[1, 5], &mut ArchWindowCache::new()).unwrap();
    let lb = forecasting::forecast_ls_arch(&shocked, origin, 2, &grid, 50, &[1, 5], &mut ArchWindowCache::new()).unwrap();
    let va = forecasting::forecast_vt(&s, origin, order, &[1], &opts).unwrap();
    let vb = forecasting::forecast_vt(&shocked, origin, order, &[1], &opts).unwrap();
    (a == b && la == lb && va == vb, format!("g: forecasts unchanged by post-origin shocks {}", a == b && la == lb && va == vb))
}

fn loo_oracle(y_sq: &[f64], h: f64, t: usize) -> f64 {
    let n = y_sq.len() as i64;
    let m = (n as f64 * h).floor() as i64;
    let mut acc = 0.0;
    for s in (t as i64 - m)..=(t as i64 + m) {
        let src = if s < 0 { -s } else if s >= n { 2 * (n - 1) - s } else { s };
        if src == t as i64 {
            continue;
        }
        acc += KernelKind::Epanechnikov.eval((t as i64 - s) as f64 / (n as f64 * h)) / h * y_sq[src as usize];
    }
    acc / n as f64
}

fn c8h() -> (bool, String) {
    let s = dgp2_series(TauShape::Cyclical, 600, 4);
    let cv = longrun::select_bandwidth_cv(&s, &CvConfig::default()).unwrap();
    let y_sq = s.squares();
    let grid = [0.06, 0.13, 0.31];
    let curve = longrun::cv_curve(&y_sq, &cv.pilot_g, &grid, KernelKind::Epanechnikov);
    let mut worst = 0.0f64;
    for (h, v) in curve {
        let oracle: f64 = (0..y_sq.len())
            .map(|t| (y_sq[t] / (loo_oracle(&y_sq, h, t) * cv.pilot_g[t]) - 1.0).powi(2))
            .sum();
        worst = worst.max(((v - oracle) / oracle).abs());
    }
    (worst <= 1e-10, format!("h: CV vs double loop rel err {worst:.1e}"))
}

fn c8(runs: &mut Runs) -> Line {
    let parts = [c8a(), c8b(), c8c_d(), c8e(), c8f(runs), c8g(), c8h()];
    Line::new(
        parts.iter().all(|p| p.0),
        parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join("; "),
    )
}

fn c9() -> Line {
    let n = 4000;
    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Linear, Innovation::Normal, n, REPS, SEED);
    let h = (n as f64).powf(-2.0 / 7.0);
    let kernel = KernelSpec::epanechnikov(h).unwrap();
    let est: Vec<f64> = (0..REPS as u64)
        .map(|rep| longrun::tau_at(&simulation::simulate(&spec, rep).unwrap(), &kernel, 0.5))
        .collect();
    let mean = est.iter().sum::<f64>() / REPS as f64;
    let sd = (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (REPS as f64 - 1.0)).sqrt();
    let se = sd / (REPS as f64).sqrt();
    let dev = (mean - 2.0).abs();
    Line::new(
        dev <= 3.0 * se,
        format!("mean tau_hat(0.5) {mean:.4} at h {h:.4}; |mean - 2| = {dev:.4}, 3 MC s.e. = {:.4}", 3.0 * se),
    )
}

type Criterion = dyn Fn(&mut Runs) -> Line;

fn main() {
    let wanted: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let mut runs = Runs::default();
    let mut failed = 0;
    let mut ran = 0;
    let criteria: [(u32, &str, &Criterion); 9] = [
        (1, "GARCH(1,1) cell bias/ESD/ASD", &c1),
        (2, "adaptiveness across tau shapes", &c2),
        (3, "heavy-tail ESD ordering", &c3),
        (4, "LM and portmanteau size", &c4),
        (5, "power ordering", &c5),
        (6, "variance-targeting equivalence", &c6),
        (7, "three-step comparison", &|_| c7()),
        (8, "property suite", &c8),
        (9, "linear tau bias vanishing", &|_| c9()),
    ];
    for (k, name, f) in criteria {
        if !run(k) {
            continue;
        }
        let start = Instant::now();
        let line = f(&mut runs);
        ran += 1;
        if !line.pass {
            failed += 1;
        }
        println!(
            "criterion {k} {}: {name}: {} [{:.0}s]",
            if line.pass { "PASS" } else { "FAIL" },
            line.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
