//! Reads a price column from CSV and turns it into percentage log returns.
//!
//! cargo run --example load_csv -- [prices.csv] [column]
//!
//! Without arguments a small price file is written to a temporary directory
//! first.

use std::path::PathBuf;

use sgarch::data_io::{self, ColumnSelector, Transform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::env::temp_dir().join("sgarch-load-csv");
    let path = match args.first() {
        Some(p) => PathBuf::from(p),
        None => {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("prices.csv");
            let mut text = String::from("date,close\n");
            let mut p = 100.0f64;
            for d in 0..300 {
                p *= 1.0 + 0.01 * ((d as f64 * 0.7).sin() + 0.3 * (d as f64 * 2.3).cos());
                text.push_str(&format!("day{d},{p:.4}\n"));
            }
            std::fs::write(&path, text)?;
            path
        }
    };
    let column: ColumnSelector = args.get(1).map_or("close", String::as_str).parse()?;

    let series = data_io::load_series(&path, &column, Transform::LogReturnPct)?;
    let var = data_io::sample_variance(&series)?;
    println!("{}: {} returns from column {column}", path.display(), series.len());
    println!("first five: {:?}", &series.values()[..5.min(series.len())]);
    println!("sample variance {var:.4}");
    Ok(())
}
