//! Two-step S-GARCH(1,1) fit with sandwich standard errors.
//!
//! cargo run --release --example fit_sgarch -- [returns.csv]
//!
//! Without a file a linear-τ series is simulated.

use std::path::Path;

use sgarch::data_io::{self, ColumnSelector, Transform};
use sgarch::longrun::Boundary;
use sgarch::pipeline::{self, Bandwidth};
use sgarch::qmle::{Order, QmleOptions};
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = match std::env::args().nth(1) {
        Some(p) => data_io::load_series(Path::new(&p), &ColumnSelector::Index(0), Transform::None)?,
        None => {
            let spec = SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Linear, Innovation::St10, 3000, 1, 1);
            simulation::simulate(&spec, 0)?
        }
    };
    let order = Order::new(1, 1)?;
    let fit = pipeline::fit_sgarch(&series, order, &Bandwidth::cv_with_pilot(order), Boundary::Reflection, &QmleOptions::default())?;

    println!("T = {}, h = {:.4}, converged = {}", series.len(), fit.h_used(), fit.fit.converged);
    for ((name, th), se) in order.names().iter().zip(fit.fit.params.theta()).zip(&fit.cov.se) {
        println!("{name:>7} {th:.4} ({se:.4})");
    }
    println!("  omega {:.4}", fit.fit.params.omega());
    println!("  kappa {:.3}", fit.cov.kappa_hat);
    let tau = &fit.fit.longrun.tau_hat;
    println!("tau_hat at start/middle/end: {:.3} {:.3} {:.3}", tau[0], tau[tau.len() / 2], tau[tau.len() - 1]);
    Ok(())
}
