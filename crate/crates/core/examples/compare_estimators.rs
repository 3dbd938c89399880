//! Two-step S-GARCH against variance targeting and the three-step update
//! on one constant-τ series.
//!
//! cargo run --release --example compare_estimators -- [T]

use sgarch::alt;
use sgarch::kernel::KernelSpec;
use sgarch::longrun::Boundary;
use sgarch::pipeline::{self, Bandwidth};
use sgarch::qmle::QmleOptions;
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(2000), |s| s.parse())?;
    let dgp = Dgp::Dgp2Sgarch11;
    let spec = SimSpec::new(dgp, TauShape::Constant, Innovation::Normal, n, 1, 4);
    let series = simulation::simulate(&spec, 0)?;
    let order = dgp.order();
    let opts = QmleOptions::default();

    let two = pipeline::fit_sgarch(&series, order, &Bandwidth::cv_with_pilot(order), Boundary::Reflection, &opts)?;
    let vt = alt::fit_vt(&series, order, &opts)?;
    let three = alt::three_step_update(&two.fit, &series, &KernelSpec::epanechnikov(two.h_used())?)?;

    println!("{:>10} {:>9} {:>9} {:>9} {:>9}", "", "truth", "two-step", "VT", "three");
    for (i, name) in order.names().iter().enumerate() {
        println!(
            "{name:>10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            dgp.theta(0)[i],
            two.fit.params.theta()[i],
            vt.params.theta()[i],
            three.theta_check[i]
        );
    }
    println!("{:>10} {:>9} {:>9.4} {:>9.4} {:>9}", "se", "", two.cov.se[0], vt.cov.se[0], "");
    println!("tau_bar = {:.4}; three-step tau fallbacks: {}", vt.tau_bar, three.tau_fallbacks);
    Ok(())
}
