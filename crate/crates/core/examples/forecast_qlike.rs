//! Rolling-origin QLIKE comparison on a simulated series with a cyclical
//! long-run variance.
//!
//! cargo run --release --example forecast_qlike -- [T] [origin_stride]

use std::io;
use std::time::Instant;

use sgarch::forecasting::{self, ForecastConfig, ForecastModel};
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(3000), |s| s.parse())?;
    let stride: usize = args.get(1).map_or(Ok(1), |s| s.parse())?;

    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Cyclical, Innovation::Normal, n, 1, 0);
    let series = simulation::simulate(&spec, 0)?;
    let cfg = ForecastConfig {
        origin_stride: stride,
        ..ForecastConfig::default()
    };
    let mut runs = Vec::new();
    for &m in &cfg.models {
        let start = Instant::now();
        runs.push(forecasting::rolling_forecasts(&series, &cfg, m)?);
        eprintln!("{m}: {:.1}s", start.elapsed().as_secs_f64());
    }
    let report = forecasting::evaluate(&series, &cfg, &runs)?;
    forecasting::write_qlike_csv(&report, io::stdout())?;
    for d in report.dm.iter().filter(|d| d.horizon == 1) {
        eprintln!(
            "t0=1 {} vs {}: DM {:.2} (p = {:.3})",
            d.best, d.other, d.result.statistic, d.result.p_value
        );
    }
    let lsarch = runs.iter().find(|r| r.model == ForecastModel::LsArchQ);
    if let Some(r) = lsarch {
        let w: Vec<usize> = r.windows.iter().flatten().copied().collect();
        if !w.is_empty() {
            eprintln!("mean LS-ARCH window {:.0}", w.iter().sum::<usize>() as f64 / w.len() as f64);
        }
    }
    Ok(())
}
