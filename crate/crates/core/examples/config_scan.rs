//! Drives a scan from a TOML configuration the same way the command-line
//! tool does, and prints the CSV it would write.

use std::path::Path;

use clap::Parser;
use talbot_lau::cli::{run, Args};

const CONFIG: &str = r#"
[particle]
mass_amu = 1000
static_polarizability_nm3 = 0.1
valence_electrons = 240

[beam]
talbot_ratio = 0.8

[setup]
separation_m = 0.2

[gratings.1]
period_um = 1
open_fraction = 0.3

[gratings.2]
period_um = 1
open_fraction = 0.3

[gratings.3]
period_um = 1
open_fraction = 0.3

[gas]
mass_amu = 40
temperature_k = 300
pressure_mbar = 1e-7
polarizability_nm3 = 1.64
valence_electrons = 8
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("talbot-lau-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("setup.toml");
    std::fs::write(&path, CONFIG)?;

    let args = Args::try_parse_from([
        "talbot-lau",
        "decoherence-scan",
        "--config",
        path_str(&path),
        "--scan",
        "pressure=0:1e-6:6",
    ])?;
    let out = run(&args)?;
    print!("{}", out.csv);
    eprintln!("{}", out.summary);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp path is UTF-8")
}
