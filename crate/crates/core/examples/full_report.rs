//! The whole pipeline in one call: the same report the `analyze` command
//! prints, written as JSON plus one CSV per traced arc.
//!
//! `cargo run --example full_report -- builtin:paper-example-1 /tmp/report`

use std::path::PathBuf;

use optcond::report::{run, summary, write_outputs, ProblemSource, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "builtin:paper-example-1".into());
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("optcond-report"));

    let mut config = RunConfig::new(ProblemSource::parse(&source));
    config.json_path = Some(out.join("report.json"));
    config.csv_dir = Some(out.clone());
    let mut report = run(&config)?;
    write_outputs(&mut report, &config)?;
    print!("{}", summary(&report));
    println!("written to {}", out.display());
    Ok(())
}
