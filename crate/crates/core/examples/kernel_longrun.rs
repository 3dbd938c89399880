//! Kernel estimate of the long-run variance on a simulated series with a
//! cyclical τ, with pointwise 95% intervals.
//!
//! cargo run --release --example kernel_longrun -- [T] [h]

use sgarch::kernel::KernelSpec;
use sgarch::longrun::{self, Boundary};
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(4000), |s| s.parse())?;
    let h: f64 = args.get(1).map_or(Ok(0.08), |s| s.parse())?;

    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, TauShape::Cyclical, Innovation::Normal, n, 1, 11);
    let series = simulation::simulate(&spec, 0)?;
    let kernel = KernelSpec::epanechnikov(h)?;
    let refl = longrun::estimate_tau(&series, &kernel, Boundary::Reflection)?;
    let plain = longrun::estimate_tau(&series, &kernel, Boundary::InteriorOnly)?;

    println!("{:>5} {:>7} {:>10} {:>10} {:>17}", "x", "tau", "reflect", "interior", "95% interval");
    for x in [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        let t = ((x * n as f64).ceil() as usize).clamp(1, n) - 1;
        let ci = longrun::tau_pointwise_ci(&refl, &series, x, 0.95)
            .map(|c| format!("[{:.3}, {:.3}]", c.lower, c.upper))
            .unwrap_or_else(|_| "edge".into());
        println!(
            "{x:>5.2} {:>7.3} {:>10.3} {:>10.3} {ci:>17}",
            TauShape::Cyclical.eval(x),
            refl.tau_hat[t],
            plain.tau_hat[t]
        );
    }
    Ok(())
}
