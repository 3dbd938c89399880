//! Bias / ESD / ASD for one design cell, printed as a CSV row.
//!
//! cargo run --release --example monte_carlo_cell -- [reps] [T] [tau] [dist]

use std::io;

use sgarch::simulation::{self, CellOptions, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps: usize = args.first().map_or(Ok(100), |s| s.parse())?;
    let n_obs: usize = args.get(1).map_or(Ok(2000), |s| s.parse())?;
    let tau: TauShape = args.get(2).map_or(Ok(TauShape::Constant), |s| s.parse())?;
    let dist: Innovation = args.get(3).map_or(Ok(Innovation::Normal), |s| s.parse())?;

    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, tau, dist, n_obs, reps, 0);
    let start = std::time::Instant::now();
    let report = simulation::run_cell(&spec, &CellOptions::default())?;
    simulation::write_cells_csv(std::slice::from_ref(&report), io::stdout())?;
    eprintln!(
        "{} of {} replications used, mean h {:.4}, {:.1}s",
        report.n_used,
        spec.n_reps,
        report.mean_h,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
