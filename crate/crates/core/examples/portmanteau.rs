//! Portmanteau check on squared standardized residuals, once for a correct
//! S-GARCH(1,1) and once for an S-ARCH(1) that misses the persistence.
//!
//! cargo run --release --example portmanteau -- [T]

use sgarch::inference::{self, DEFAULT_LAGS};
use sgarch::longrun::Boundary;
use sgarch::pipeline::{self, Bandwidth};
use sgarch::qmle::{Order, QmleOptions};
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(3000), |s| s.parse())?;
    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Linear, Innovation::Normal, n, 1, 8);
    let series = simulation::simulate(&spec, 0)?;

    for order in [Order::new(1, 1)?, Order::new(0, 1)?] {
        let fit = pipeline::fit_sgarch(&series, order, &Bandwidth::Fixed(0.15), Boundary::Reflection, &QmleOptions::default())?;
        println!("order (p, q) = ({}, {}), theta {:.3?}", order.p, order.q, fit.fit.params.theta());
        for ell in DEFAULT_LAGS {
            let (report, _) = inference::portmanteau_test(&fit.fit, ell)?;
            println!("  Q({ell:>2}) = {:>8.3}  p = {:.4}", report.statistic, report.p_value);
        }
    }
    Ok(())
}
