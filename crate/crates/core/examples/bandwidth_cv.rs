//! Two-step cross-validated bandwidth and the CV curve behind it.
//!
//! cargo run --release --example bandwidth_cv -- [T] [tau: constant|linear|cyclical]

use sgarch::longrun::{self, CvConfig};
use sgarch::simulation::{self, Dgp, Innovation, SimSpec, TauShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(2000), |s| s.parse())?;
    let tau: TauShape = args.get(1).map_or(Ok(TauShape::Cyclical), |s| s.parse())?;

    let spec = SimSpec::new(Dgp::Dgp2Sgarch11, tau, Innovation::Normal, n, 1, 5);
    let series = simulation::simulate(&spec, 0)?;
    let cv = longrun::select_bandwidth_cv(&series, &CvConfig::default())?;

    println!("pilot h0 = {:.4}", cv.pilot_h);
    for (h, v) in &cv.curve {
        let mark = if *h == cv.h_cv { " <" } else { "" };
        println!("{h:.4} {v:.3}{mark}");
    }
    println!("h_cv = {:.4}", cv.h_cv);
    Ok(())
}
