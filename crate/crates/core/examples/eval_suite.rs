//! Evaluates the bundled suite and prints the per-task table and metrics.

use std::path::Path;

use vidguide::eval::{run_suite, Suite, SuiteOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = Suite::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("demo/suite.toml"))?;
    let options = SuiteOptions { parallel: 4, ..SuiteOptions::default() };
    let report = run_suite(&suite, &options)?;
    print!("{}", report.table());
    println!("decision accuracy basis: {}", report.da_basis);
    Ok(())
}
