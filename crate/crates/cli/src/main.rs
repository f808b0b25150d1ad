mod bench;
mod checks;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use relsplit::config::RunDocument;
use relsplit::problems::reference_solution;
use relsplit::{run, Condition, Monitor};

#[derive(Parser)]
#[command(name = "relsplit", version, about = "Relocated variable-stepsize forward-backward splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the coefficient scheme of a config.
    Validate { config: PathBuf },
    /// Run one config and write its trace as CSV.
    Run {
        config: PathBuf,
        /// Trace destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every method of a benchmark spec.
    Bench { spec: PathBuf },
    /// Run a randomized property suite.
    Proptest {
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const FAILED: u8 = 1;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<RunDocument> {
    Ok(RunDocument::from_json(&read(path)?)?)
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let doc = load(path)?;
    let scheme = doc.scheme()?;
    let violations = scheme.validate(doc.tol())?;
    for c in Condition::ALL {
        let hits: Vec<_> = violations.iter().filter(|v| v.condition == c).collect();
        if hits.is_empty() {
            println!("PASS ({}) {}", c.label(), c.describe());
        } else {
            for v in hits {
                println!("FAIL ({}) {}: {}", c.label(), c.describe(), v.detail);
            }
        }
    }
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    })
}

fn cmd_run(path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let doc = load(path)?;
    let mut p = doc.prepare()?;
    p.cfg.keep_iterates = false;
    let reference = if p.run.reference {
        Some(reference_solution(&p.problem, p.cfg.max_iters, p.lasso_split)?)
    } else {
        None
    };
    let problem = &p.problem;
    let objective = |x: &[f64]| problem.objective(x);
    let monitor = Monitor {
        objective: Some(&objective),
        reference: reference.as_ref().map(|r| (r.x.as_slice(), r.phi)),
    };
    let trace = run(&p.split, &p.prob, &p.cfg, &p.z0, &monitor)?;

    let mut summary: Box<dyn Write> = match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            trace.write_csv(&mut w)?;
            w.flush()?;
            Box::new(io::stdout())
        }
        None => {
            trace.write_csv(io::stdout().lock())?;
            Box::new(io::stderr())
        }
    };
    writeln!(summary, "status      {}", trace.status)?;
    writeln!(summary, "iterations  {}", trace.iterations)?;
    writeln!(summary, "fix_res     {:e}", trace.final_fix_res)?;
    writeln!(summary, "consensus   {:e}", trace.final_consensus)?;
    writeln!(summary, "objective   {:e}", problem.objective(&trace.x_final))?;
    writeln!(summary, "sweeps      {}", trace.sweeps)?;
    writeln!(summary, "resolvents  {}", trace.resolvent_evals)?;
    if let (Some(r), Some(last)) = (&reference, trace.last()) {
        writeln!(summary, "rel_err_x   {:e}", last.rel_err_x)?;
        writeln!(summary, "rel_err_f   {:e}", last.rel_err_f)?;
        if r.flagged {
            writeln!(summary, "warning: reference stopped at fix_res {:e}", r.fix_res)?;
        }
    }
    Ok(if trace.status.is_aborted() {
        ExitCode::from(FAILED)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_proptest(suite: &str, trials: usize, seed: u64) -> Result<ExitCode> {
    let suite: checks::Suite = suite.parse()?;
    match checks::run_suite(suite, trials, seed) {
        Ok(summary) => {
            println!("PASS {suite}: {summary}");
            Ok(ExitCode::SUCCESS)
        }
        Err(counterexample) => {
            println!("FAIL {suite}: {counterexample}");
            Ok(ExitCode::from(FAILED))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Run { config, out } => cmd_run(config, out.as_deref()),
        Command::Bench { spec } => bench::cmd_bench(spec),
        Command::Proptest { suite, trials, seed } => cmd_proptest(suite, *trials, *seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
