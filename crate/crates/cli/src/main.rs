use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};
use cloak_core::frontend::{parse, print_source, strip_annotations, validate_subset, Diagnostic};
use cloak_core::pipeline::{check_source, compile_checked, Compiled};
use cloak_core::runtime::scenario::{run_scenario, Scenario, ScenarioError};

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Compile annotated contracts into a privacy policy, a service contract and
/// a verifier contract.
#[derive(Debug, Parser)]
#[command(name = "cloak", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Input `.cloak` file.
    #[arg(short = 'i', value_name = "PATH")]
    input: Option<PathBuf>,

    /// Directory for generated files.
    #[arg(short = 'o', value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Ignore annotations and only check the plain Solidity.
    #[arg(short = 's', long = "solc", conflicts_with = "check_only")]
    solc_only: bool,

    /// Only check annotations and print the privacy policy.
    #[arg(short = 't')]
    check_only: bool,

    /// Show per-function timing and artifact hashes.
    #[arg(long)]
    debug: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file against the in-process simulator.
    Demo { scenario: PathBuf },
}

fn usage_error(kind: clap::error::ErrorKind, msg: &str) -> ExitCode {
    let _ = Cli::command().error(kind, msg).print();
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(Command::Demo { scenario }) = &cli.command {
        return demo(scenario);
    }
    let Some(input) = cli.input.as_deref() else {
        return usage_error(clap::error::ErrorKind::MissingRequiredArgument, "-i <PATH> is required");
    };
    if cli.out_dir.is_none() && !cli.check_only && !cli.solc_only {
        return usage_error(clap::error::ErrorKind::MissingRequiredArgument, "-o <DIR> is required unless -t or -s is given");
    }
    let source = match fs::read_to_string(input) {
        Ok(s) => s,
        Err(e) => {
            return usage_error(clap::error::ErrorKind::Io, &format!("cannot read {}: {e}", input.display()));
        }
    };
    let path = input.display().to_string();
    let result = if cli.solc_only {
        solc_only(&cli, &path, &source)
    } else {
        compile(&cli, &path, &source)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(diags)) => {
            for d in &diags {
                eprintln!("{}", d.render(&path, &source));
            }
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
    }
}

enum Failure {
    Diagnostics(Vec<Diagnostic>),
    Io(String),
}

impl From<Vec<Diagnostic>> for Failure {
    fn from(d: Vec<Diagnostic>) -> Self {
        Failure::Diagnostics(d)
    }
}

fn solc_only(cli: &Cli, path: &str, source: &str) -> Result<(), Failure> {
    let file = parse(path, source);
    if !file.diagnostics.is_empty() {
        return Err(file.diagnostics.into());
    }
    let plain = strip_annotations(&file);
    let diags = validate_subset(&plain);
    if !diags.is_empty() {
        return Err(diags.into());
    }
    let text = print_source(&plain);
    match &cli.out_dir {
        Some(dir) => {
            let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("contract");
            write_atomically(dir, &[(&format!("{stem}.sol"), text.as_bytes())])?;
        }
        None => print!("{text}"),
    }
    eprintln!("{path}: plain Solidity check passed");
    Ok(())
}

fn compile(cli: &Cli, path: &str, source: &str) -> Result<(), Failure> {
    let started = Instant::now();
    let checked = check_source(path, source)?;
    let compiled = compile_checked(checked);
    let total = started.elapsed();

    if cli.check_only {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        let _ = out.write_all(&compiled.policy_json);
        let _ = writeln!(out);
        overview(&compiled, cli.debug, total.as_micros(), &mut std::io::stderr());
        return Ok(());
    }

    let dir = cli.out_dir.as_deref().expect("checked in main");
    let summary = compiled.summary().to_json();
    write_atomically(
        dir,
        &[
            ("policy.json", &compiled.policy_json),
            ("service.sol", compiled.artifacts.service_source.as_bytes()),
            ("verifier.sol", compiled.artifacts.verifier_source.as_bytes()),
            ("summary.json", &summary),
        ],
    )?;
    overview(&compiled, cli.debug, total.as_micros(), &mut std::io::stdout());
    Ok(())
}

fn overview(compiled: &Compiled, debug: bool, total_us: u128, out: &mut impl Write) {
    let summary = compiled.summary();
    let _ = writeln!(out, "contract {}", summary.contract);
    for f in &summary.functions {
        let owners = compiled.checked.function_owners.get(&f.name).map(|o| o.to_string()).unwrap_or_default();
        if debug {
            let time = f.check_time_us + f.codegen_time_us;
            let _ = writeln!(out, "function {}: kind={} owners={owners} time={time}", f.name, f.kind);
        } else {
            let _ = writeln!(out, "function {}: kind={} owners={owners}", f.name, f.kind);
        }
    }
    if debug {
        let h = &summary.hashes;
        let _ = writeln!(out, "hash verifier={}", h.verifier);
        let _ = writeln!(out, "hash service={}", h.service);
        let _ = writeln!(out, "hash policy={}", h.policy);
        let _ = writeln!(out, "hash runtime={}", h.runtime);
    }
    let _ = writeln!(out, "compiled in {total_us}us");
}

/// Writes every file to a temporary name in `dir`, then renames them all into place.
fn write_atomically(dir: &Path, files: &[(&str, &[u8])]) -> Result<(), Failure> {
    let io = |what: &str, e: std::io::Error| Failure::Io(format!("{what}: {e}"));
    fs::create_dir_all(dir).map_err(|e| io(&dir.display().to_string(), e))?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(name, e))?;
        tmp.write_all(bytes).map_err(|e| io(name, e))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| io(&target.display().to_string(), e.error))?;
    }
    Ok(())
}

fn demo(path: &Path) -> ExitCode {
    let (scenario, base) = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run_scenario(&scenario, &base) {
        Ok((report, _)) => {
            println!("scenario {}", report.name);
            for step in &report.steps {
                println!("{step}");
            }
            println!("final root {}", report.final_root.as_deref().unwrap_or("-"));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                let failed = report.steps.iter().filter(|s| !s.ok).count();
                eprintln!("{failed} step(s) did not match the scenario");
                ExitCode::from(EXIT_DIAGNOSTICS)
            }
        }
        Err(e @ ScenarioError::Io { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
    }
}
