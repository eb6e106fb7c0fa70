//! The harness from library code: parse a configuration, run the study it
//! selects, and inspect the artifacts it writes (diagnostics CSV, legacy
//! VTK snapshots, summary). Equivalent to the `synovia` command line.
//!
//!     cargo run --release --example config_and_studies

use synovia::harness::{parse_config_text, run_study, Config};

fn main() {
    // The canonical dump lists every key with its default.
    let defaults = Config::default().dump();
    println!("--- canonical defaults (first lines) ---");
    for line in defaults.lines().take(8) {
        println!("{line}");
    }
    println!("...\n");

    let text = "\
# quick diffusion sanity run
preset = heat_only
domain.t_final = 0.2
output.points = 20
out = target/example_out
quiet = true
";
    let cfg = parse_config_text(text).expect("config parses");
    println!("parsed config: preset = {}, {} output intervals", cfg.preset, cfg.output_points);

    let report = run_study(&cfg).expect("study runs");
    println!("study passed: {}", report.passed);
    println!("artifacts under {}:", report.out_dir.display());
    let mut entries: Vec<_> = std::fs::read_dir(&report.out_dir)
        .expect("output dir")
        .map(|e| e.expect("entry").file_name().into_string().unwrap())
        .collect();
    entries.sort();
    for e in entries {
        println!("  {e}");
    }
    for check in &report.checks {
        println!("  {} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
}
