//! Execute a JSON run file in-process and write its tables.
//!
//! ```text
//! cargo run --example run_file -- runs/compare_price_path.json out/
//! ```

use std::path::PathBuf;

use qmarket::io::{load_run_spec, run, write_results, IoError};

fn main() -> Result<(), IoError> {
    let mut args = std::env::args().skip(1);
    let spec = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs/compare_price_path.json"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("qmarket_run_file"));

    let spec = load_run_spec(&spec)?;
    let record = run(&spec)?;
    write_results(&record, &out)?;
    println!("{} -> {}", spec.command.kind(), out.display());
    for table in &record.tables {
        println!(
            "  {:<16} {:>4} rows  [{}]",
            table.name,
            table.rows.len(),
            table.columns.join(", ")
        );
    }
    if let Some(v) = record.diagnostics.validity_indicator {
        println!("  validity indicator {v:.3e}");
    }
    Ok(())
}
