use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use weboscalc::engine::{Outcome, Policy};
use weboscalc::scenario::{Report, Scenario};

#[derive(Parser)]
#[command(name = "weboscalc", version, about = "Run and check calculus scenarios")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// `det`, `rand:<seed>` or `script:<file>`; overrides the scenario.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Remove finished private instances after each step.
    #[arg(long)]
    gc: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and check its assertions.
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print the step trace and the final network.
    Trace {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare the canonical trace with a golden file.
    Golden {
        file: PathBuf,
        golden: PathBuf,
        #[arg(long)]
        update: bool,
    },
    /// Parse and validate only.
    Check { file: PathBuf },
}

const EXIT_FAIL: u8 = 1;
const EXIT_LOAD: u8 = 2;
const EXIT_LIMIT: u8 = 3;

fn load(file: &PathBuf, flags: Option<&RunFlags>) -> Result<Scenario, ExitCode> {
    let mut sc = Scenario::load(file).map_err(|e| {
        eprintln!("{}: {e}", file.display());
        ExitCode::from(EXIT_LOAD)
    })?;
    if let Some(f) = flags {
        if let Some(p) = &f.policy {
            let policy = match p.strip_prefix("script:") {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {path}: {e}"))
                    .and_then(|t| Policy::parse_script(&t)),
                None => Policy::parse(p),
            };
            sc.policy = policy.map_err(|m| {
                eprintln!("--policy: {m}");
                ExitCode::from(EXIT_LOAD)
            })?;
        }
        if let Some(n) = f.max_steps {
            sc.max_steps = n;
        }
        sc.gc |= f.gc;
    }
    Ok(sc)
}

fn run_scenario(sc: &Scenario, mut on_event: impl FnMut(&weboscalc::engine::TraceEvent)) -> Result<Report, ExitCode> {
    let mut e = sc.engine();
    match e.run_with(&mut on_event) {
        Ok(rep) => Ok(Report::new(sc, &e, rep)),
        Err(err) => {
            eprintln!("engine: {err}");
            Err(ExitCode::from(EXIT_LIMIT))
        }
    }
}

fn status(sc: &Scenario, rep: &Report) -> ExitCode {
    if !rep.passed() {
        ExitCode::from(EXIT_FAIL)
    } else if sc.assertions.is_empty() && rep.outcome == Outcome::MaxStepsExceeded {
        ExitCode::from(EXIT_LIMIT)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(c) | Err(c) => c,
    }
}

fn real_main() -> Result<ExitCode, ExitCode> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { file, flags } => {
            let sc = load(&file, Some(&flags))?;
            let rep = run_scenario(&sc, |_| {})?;
            print!("{}", rep.summary());
            Ok(status(&sc, &rep))
        }
        Cmd::Trace { file, format, flags } => {
            let sc = load(&file, Some(&flags))?;
            let mut out = std::io::stdout().lock();
            let rep = run_scenario(&sc, |ev| {
                let line = match format {
                    Format::Text => ev.line(),
                    Format::Structured => ev.json(),
                };
                // a closed pipe (`| head`) is not an error
                let _ = writeln!(out, "{line}");
            })?;
            let tail = match format {
                Format::Text => format!("outcome: {}\nfinal:\n{}", rep.outcome, rep.final_net),
                Format::Structured => serde_json::json!({
                    "outcome": rep.outcome,
                    "steps": rep.steps,
                    "final": rep.final_net.to_string(),
                    "stuck": rep.stuck.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                })
                .to_string(),
            };
            let _ = writeln!(out, "{tail}");
            Ok(status(&sc, &rep))
        }
        Cmd::Golden {
            file,
            golden,
            update,
        } => {
            let sc = load(&file, None)?;
            let text = run_scenario(&sc, |_| {})?.golden();
            if update {
                std::fs::write(&golden, &text).map_err(|e| {
                    eprintln!("cannot write {}: {e}", golden.display());
                    ExitCode::from(EXIT_LOAD)
                })?;
                println!("updated {}", golden.display());
                return Ok(ExitCode::SUCCESS);
            }
            let want = std::fs::read_to_string(&golden).map_err(|e| {
                eprintln!("cannot read {}: {e}", golden.display());
                ExitCode::from(EXIT_LOAD)
            })?;
            match first_difference(&want, &text) {
                None => {
                    println!("golden ok: {}", golden.display());
                    Ok(ExitCode::SUCCESS)
                }
                Some((line, w, g)) => {
                    println!("golden mismatch at line {line}");
                    println!("- {w}");
                    println!("+ {g}");
                    Ok(ExitCode::from(EXIT_FAIL))
                }
            }
        }
        Cmd::Check { file } => {
            let sc = load(&file, None)?;
            println!(
                "ok: {} ({} resources, {} assertions)",
                if sc.name.is_empty() { file.display().to_string() } else { sc.name.clone() },
                sc.net.items.len(),
                sc.assertions.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn first_difference(want: &str, got: &str) -> Option<(usize, String, String)> {
    let mut w = want.lines();
    let mut g = got.lines();
    let mut n = 0;
    loop {
        n += 1;
        match (w.next(), g.next()) {
            (None, None) => return None,
            (a, b) if a == b => continue,
            (a, b) => {
                let show = |x: Option<&str>| x.unwrap_or("<end of file>").to_string();
                return Some((n, show(a), show(b)));
            }
        }
    }
}
