//! Size and power of the LM and portmanteau tests against an omitted
//! coefficient, written as CSV.
//!
//! cargo run --release --example power_curves -- [reps] [T] [dgp3|dgp4]

use std::io;

use sgarch::qmle::QmleOptions;
use sgarch::simulation::{self, Dgp, PowerSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps: usize = args.first().map_or(Ok(100), |s| s.parse())?;
    let n: usize = args.get(1).map_or(Ok(2000), |s| s.parse())?;
    let dgp: Dgp = args.get(2).map_or(Ok(Dgp::Dgp3Sgarch12), |s| s.parse())?;

    let spec = PowerSpec::new(dgp, n, reps, 0, (0..=10).step_by(2).collect());
    let report = simulation::run_power_curves(&spec, &QmleOptions::default())?;
    simulation::write_power_csv(&report, io::stdout())?;
    Ok(())
}
