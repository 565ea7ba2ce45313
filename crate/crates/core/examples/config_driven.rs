//! Runs the command-line front end in-process on a config string, then
//! reruns it from the footer of its own output.

use arrival::cli::{execute, Cli, ExperimentConfig};
use clap::Parser;

const CONFIG: &str = "\
[detector]
D = 10
T = auto

[packet]
x0 = 4
k = 0
sigma = 1
group = psi

[packet]
x0 = -4
k = 0
sigma = 1
group = phi
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("arrival-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let cfg_path = dir.join("pair.conf");
    std::fs::write(&cfg_path, CONFIG)?;

    let cfg = ExperimentConfig::parse(CONFIG)?;
    println!(
        "config hash {:016x}, window T = {}",
        cfg.hash(),
        cfg.window()?.t_end
    );

    let cli = Cli::parse_from(["arrival", "nogo", "--config", cfg_path.to_str().unwrap()]);
    let first = execute(&cli.command)?;
    print!("{first}");

    let out_path = dir.join("nogo.csv");
    std::fs::write(&out_path, &first)?;
    let again = Cli::parse_from(["arrival", "nogo", "--config", out_path.to_str().unwrap()]);
    println!(
        "rerun from footer identical: {}",
        execute(&again.command)? == first
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
