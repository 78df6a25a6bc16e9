use std::path::PathBuf;
use std::process::ExitCode;

use becprobe_cli::load::{apply_override, read_value, set_path};
use becprobe_cli::presets;
use becprobe_cli::run::{run, RunOptions};
use becprobe_cli::validate::validate_value;
use becprobe_cli::{CliError, EXIT_VALIDATION};
use clap::{Args, Parser, Subcommand};
use toml::Value;

#[derive(Parser)]
#[command(name = "becprobe", version, about = "Simulate continuous imaging of a 1D Bose gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (TOML, a manifest.json, or a preset name).
    Run(Common),
    /// Check a config without running it.
    Validate(Common),
    /// List the shipped presets, or print one.
    Presets {
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(c: &Common) -> Result<Value, CliError> {
    let path = PathBuf::from(&c.config);
    let mut v = if path.exists() {
        read_value(&path)?
    } else {
        presets::preset(&c.config)?
    };
    for o in &c.overrides {
        apply_override(&mut v, o)?;
    }
    if let Some(seed) = c.seed {
        let seed = i64::try_from(seed).map_err(|_| CliError::Config("seed must fit in i64".into()))?;
        set_path(&mut v, "seed", Value::Integer(seed))?;
    }
    if let Some(out) = &c.out {
        set_path(&mut v, "out", Value::String(out.display().to_string()))?;
    }
    Ok(v)
}

fn out_dir(v: &Value) -> PathBuf {
    if let Some(o) = v.get("out").and_then(Value::as_str) {
        return PathBuf::from(o);
    }
    let name = v.get("name").and_then(Value::as_str).unwrap_or("run");
    PathBuf::from("out").join(name)
}

fn init_threads(n: usize) -> usize {
    becprobe::linalg::use_sequential_kernels();
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    rayon::current_num_threads()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Presets { dump: Some(name) } => match presets::preset_text(&name) {
            Some(t) => {
                print!("{t}");
                0
            }
            None => {
                eprintln!("unknown preset '{name}'");
                EXIT_VALIDATION
            }
        },
        Command::Presets { dump: None } => {
            for (name, kind, notes) in presets::table() {
                println!("{name:<8} {kind:<11} {notes}");
            }
            0
        }
        Command::Validate(c) => match load(&c) {
            Ok(v) => {
                let report = validate_value(&v);
                for f in &report.findings {
                    println!("{f}");
                }
                if report.has_errors() {
                    EXIT_VALIDATION
                } else {
                    if report.findings.is_empty() {
                        println!("ok");
                    }
                    0
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Run(c) => {
            let threads = init_threads(c.threads);
            let result = load(&c).and_then(|v| {
                let opts = RunOptions {
                    out: out_dir(&v),
                    threads,
                    command: std::env::args().collect(),
                };
                run(&v, &opts).map(|r| (r, opts.out))
            });
            match result {
                Ok((report, out)) => {
                    for w in &report.manifest.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!(
                        "wrote {} files to {} in {:.1} s",
                        report.manifest.outputs.len() + 1,
                        out.display(),
                        report.manifest.runtime_seconds
                    );
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
