use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use relsplit::config::{BenchSpec, GraphSpec, MethodSpec};
use relsplit::driver::fmt_f;
use relsplit::problems::{reference_solution, Problem, Reference};
use relsplit::{run, Monitor, RunStatus, Trace};

pub const THREADS_VAR: &str = "REL_SPLIT_THREADS";
pub const SUMMARY_HEADER: &str = "graph,method,status,iterations,rel_err_x,rel_err_f,iters_to_1e-6,sweeps";

struct Job<'a> {
    graph: &'a GraphSpec,
    method: &'a MethodSpec,
    file: String,
}

struct Outcome {
    status: String,
    trace: Option<Trace<f64>>,
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn threads() -> Option<usize> {
    std::env::var(THREADS_VAR).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn status_name(status: &RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::MaxIters => "max-iters",
        RunStatus::Aborted(_) => "aborted",
    }
}

fn run_job(spec: &BenchSpec, job: &Job, problem: &Problem, reference: &Reference, dir: &Path) -> Result<Outcome> {
    let mut p = match spec.run_document(job.graph, job.method).prepare() {
        Ok(p) => p,
        Err(e) => {
            return Ok(Outcome {
                status: format!("error: {e}"),
                trace: None,
            })
        }
    };
    p.cfg.keep_iterates = false;
    let objective = |x: &[f64]| problem.objective(x);
    let monitor = Monitor {
        objective: Some(&objective),
        reference: Some((reference.x.as_slice(), reference.phi)),
    };
    let trace = run(&p.split, &p.prob, &p.cfg, &p.z0, &monitor)?;
    let path = dir.join(&job.file);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(Outcome {
        status: trace.status.to_string(),
        trace: Some(trace),
    })
}

fn summary_row(job: &Job, outcome: &Outcome) -> String {
    let label = job.method.label();
    match &outcome.trace {
        Some(t) => {
            let last = t.last();
            let ex = last.map_or(f64::NAN, |r| r.rel_err_x);
            let ef = last.map_or(f64::NAN, |r| r.rel_err_f);
            let hit = t.first_below_rel_err_f(1e-6).map(|k| k.to_string()).unwrap_or_default();
            format!(
                "{},{},{},{},{},{},{},{}",
                job.graph.label(),
                label,
                status_name(&t.status),
                t.iterations,
                fmt_f(ex),
                fmt_f(ef),
                hit,
                t.sweeps
            )
        }
        None => format!("{},{},error,0,NaN,NaN,,0", job.graph.label(), label),
    }
}

pub fn cmd_bench(path: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let spec = BenchSpec::from_json(&text)?;
    let problem = spec.problem.build()?;
    let graphs = spec.graphs(&problem);
    let dir = PathBuf::from(&spec.out_dir);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut jobs = Vec::new();
    let mut seen = HashSet::new();
    for graph in &graphs {
        for method in &spec.methods {
            let file = format!("{}__{}.csv", file_stem(&graph.label()), file_stem(&method.label()));
            if !seen.insert(file.clone()) {
                bail!("two methods share the output file {file}; give them distinct names");
            }
            jobs.push(Job { graph, method, file });
        }
    }

    let reference = reference_solution(&problem, spec.budget, spec.problem.lasso_split())?;
    if reference.flagged {
        eprintln!("warning: reference stopped at fix_res {:e}", reference.fix_res);
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(&spec, job, &problem, &reference, &dir))
            .collect::<Result<_>>()
    })?;

    let summary_path = dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&summary_path).with_context(|| format!("cannot create {}", summary_path.display()))?);
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        writeln!(w, "{}", summary_row(job, outcome))?;
        println!("{} {}: {}", job.graph.label(), job.method.label(), outcome.status);
    }
    w.flush()?;
    println!("wrote {} traces and {}", outcomes.iter().filter(|o| o.trace.is_some()).count(), summary_path.display());
    Ok(ExitCode::SUCCESS)
}
