mod config;
mod data;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand};
use stencilflow::{
    build_pipeline, enumerate_designs, predict, run_reference, run_reference_batch, FieldData, FieldSet, SimResult,
};

use config::Resolved;
use report::{Check, Delta, ModelDoc, SimCounters, SimulateDoc, VerifyDoc};

/// Performance model, simulator and design-space explorer for streaming
/// stencil accelerators.
#[derive(Parser, Debug)]
#[command(name = "stencilflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Input mesh (STNF binary or text); random inputs are generated otherwise.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Report file (model), output directory (simulate) or CSV file (explore).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for explore.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for generated inputs; overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate the performance model for the configured design.
    Model,
    /// Run the cycle-level simulator and compare it with the model.
    Simulate,
    /// Check the simulator against the reference executor and the model.
    Verify,
    /// Enumerate and rank feasible designs.
    Explore,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// A closed stdout (e.g. piped into `head`) ends the output early; not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>().is_some_and(
                |e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
            )
    })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let Some(path) = &cli.config else {
        bail!("--config is required");
    };
    let resolved = config::resolve(&config::load(path)?)?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    match cli.command {
        Command::Model => cmd_model(cli, &resolved),
        Command::Simulate => cmd_simulate(cli, &resolved),
        Command::Verify => cmd_verify(cli, &resolved),
        Command::Explore => cmd_explore(cli, &resolved),
    }
}

fn seed(cli: &Cli, r: &Resolved) -> u64 {
    cli.seed.or(r.run.seed).unwrap_or(1)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_model(cli: &Cli, r: &Resolved) -> Result<ExitCode> {
    let design = r.design()?;
    let model = predict(&design, &r.pipeline, &r.geometry, &r.profile, r.run.iterations);
    let doc = ModelDoc {
        pipeline: r.pipeline.name().to_string(),
        dims: r.geometry.dims().to_vec(),
        arity: r.geometry.arity(),
        design,
        device: r.profile,
        model,
        warnings: r.warnings.clone(),
    };
    print!("{}", report::model_text(&doc));
    if let Some(out) = &cli.output {
        write_json(out, &doc)?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Inputs for `meshes` meshes: the `--input` file for a single mesh, seeded
/// random fields otherwise. Pointwise fields are always generated.
fn inputs(cli: &Cli, r: &Resolved, meshes: usize) -> Result<Vec<FieldSet>> {
    let npw = r.pipeline.pointwise_fields().len();
    let base = seed(cli, r);
    let mut sets: Vec<FieldSet> = (0..meshes as u64)
        .map(|i| FieldSet::random(r.geometry, npw, base.wrapping_add(i)))
        .collect();
    if let Some(path) = &cli.input {
        ensure!(meshes == 1, "--input holds one mesh but the design batches {meshes}");
        let primary = data::read(path)?;
        ensure!(
            primary.geometry() == &r.geometry,
            "input mesh {:?} (arity {}) does not match the configured {:?} (arity {})",
            primary.geometry().dims(),
            primary.geometry().arity(),
            r.geometry.dims(),
            r.geometry.arity()
        );
        sets[0] = FieldSet::new(primary, sets[0].pointwise.clone())?;
    }
    Ok(sets)
}

fn simulate(r: &Resolved, sets: &[FieldSet]) -> Result<SimResult> {
    let design = r.design()?;
    let sim = build_pipeline(&r.pipeline, &design, &r.geometry)?.with_onchip_memory(r.profile.usable_mem_bytes());
    let n = r.run.iterations;
    Ok(match design.tile {
        Some(t) => sim.simulate_tiled(&sets[0], n, t)?,
        None if design.batch > 1 => sim.simulate_batched(sets, n)?,
        None => sim.simulate(&sets[0], n)?,
    })
}

fn cmd_simulate(cli: &Cli, r: &Resolved) -> Result<ExitCode> {
    let design = r.design()?;
    let sets = inputs(cli, r, design.batch.max(1) as usize)?;
    let result = simulate(r, &sets)?;
    let model = predict(&design, &r.pipeline, &r.geometry, &r.profile, r.run.iterations);
    let counters = SimCounters::from(&result);
    let mut outputs = Vec::new();
    if let Some(dir) = &cli.output {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, field) in result.outputs.iter().enumerate() {
            let name = format!("output_{i}.stnf");
            data::write(&dir.join(&name), field)?;
            outputs.push(name);
        }
    }
    let doc = SimulateDoc {
        pipeline: r.pipeline.name().to_string(),
        dims: r.geometry.dims().to_vec(),
        design,
        meshes: sets.len(),
        delta: Delta::between(&counters, &model),
        simulator: counters,
        model,
        outputs,
        warnings: r.warnings.clone(),
    };
    print!("{}", report::simulate_text(&doc));
    if let Some(dir) = &cli.output {
        write_json(&dir.join("report.json"), &doc)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(name: &str, got: &[FieldData], want: &[FieldData]) -> Check {
    let mismatch = got
        .iter()
        .zip(want)
        .enumerate()
        .find_map(|(b, (g, w))| g.first_mismatch(w).map(|i| (b, i)));
    Check {
        name: name.to_string(),
        pass: mismatch.is_none() && got.len() == want.len(),
        detail: match mismatch {
            None => format!("{} mesh(es) bitwise equal", got.len()),
            Some((b, i)) => format!("mesh {b} differs first at value {i}"),
        },
    }
}

fn cmd_verify(cli: &Cli, r: &Resolved) -> Result<ExitCode> {
    let design = r.design()?;
    let sets = inputs(cli, r, design.batch.max(1) as usize)?;
    let result = simulate(r, &sets)?;
    let want = if sets.len() > 1 {
        run_reference_batch(&r.pipeline, &sets, result.effective_iterations)?
    } else {
        vec![run_reference(&r.pipeline, &sets[0], result.effective_iterations)?]
    };
    let model = predict(&design, &r.pipeline, &r.geometry, &r.profile, r.run.iterations);
    let mut checks = vec![compare("output equals reference", &result.outputs, &want)];
    let counters = [
        ("cycles equal model", result.cycles, model.cycles),
        ("bytes read equal model", result.bytes_read, model.bytes_read),
        ("bytes written equal model", result.bytes_written, model.bytes_written),
    ];
    for (name, sim, predicted) in counters {
        checks.push(Check {
            name: name.to_string(),
            pass: sim == predicted,
            detail: format!("simulated {sim}, predicted {predicted}"),
        });
    }
    let doc = VerifyDoc {
        pipeline: r.pipeline.name().to_string(),
        design,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    print!("{}", report::verify_text(&doc));
    if let Some(out) = &cli.output {
        write_json(out, &doc)?;
    }
    Ok(if doc.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_explore(cli: &Cli, r: &Resolved) -> Result<ExitCode> {
    let mut constraints = r.run.explore.clone().unwrap_or_default();
    constraints.iterations = r.run.iterations;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        ensure!(jobs > 0, "--jobs must be at least 1");
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    let found = pool.install(|| enumerate_designs(&r.profile, &r.pipeline, &r.geometry, &constraints));
    if let Some(binding) = &found.binding {
        eprintln!("no feasible design: binding constraint {binding}");
    }
    match &cli.output {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report::write_explore_csv(file, &found.designs)?;
            eprintln!("{} feasible designs written to {}", found.designs.len(), path.display());
        }
        None => report::write_explore_csv(std::io::stdout().lock(), &found.designs)?,
    }
    Ok(ExitCode::SUCCESS)
}
