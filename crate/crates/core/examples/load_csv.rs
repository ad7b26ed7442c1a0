//! Loads a CSV file, diagnoses separation and prints the fitted mean values.
//!
//! cargo run --example load_csv -- data.csv [response]

use seplogit::bench::scenario::load_csv;
use seplogit::{fit_completion, separation::DetectConfig};

fn main() -> seplogit::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: load_csv <file.csv> [response]");
        std::process::exit(1);
    };
    let response = args.next().unwrap_or_else(|| "y".into());
    let d = load_csv(&path, &response, true)?;
    println!("{} rows, columns {:?}", d.n(), d.names());
    let c = fit_completion(&d, &DetectConfig::default())?;
    println!(
        "separation: {}, problematic rows {:?}",
        c.kind().as_str(),
        c.report.problematic
    );
    for (i, p) in c.mean_values.iter().enumerate() {
        println!("{i:>4} {:>3} {p:.4}", d.y()[i]);
    }
    Ok(())
}
