use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde_json::json;

use rgc_core::graph::{effective_k, AffinityGraph};
use rgc_core::io::{
    self, load_full_labels, load_graph, load_image_stack, load_partial_labels, save_csv_matrix,
    save_graph, save_history, save_image_stack, save_labels, save_matrix, DatasetSpec, ImageStack,
    Orientation, Source,
};
use rgc_core::learning::{lgc_propagate, spectral_cluster, ClusterScores};
use rgc_core::solver::{solve, Mode, SolveOutcome, SolverConfig};
use rgc_core::Matrix;

use crate::args::{
    Cli, ClusterArgs, Command, InputArgs, LearnGraphArgs, MetricsArgs, RecoverArgs, ReplayArgs,
    SolverArgs, SslArgs,
};
use crate::manifest::{Manifest, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Outputs were written but the solver hit its iteration cap.
    NotConverged,
}

impl From<bool> for Status {
    fn from(converged: bool) -> Self {
        if converged {
            Status::Converged
        } else {
            Status::NotConverged
        }
    }
}

pub fn run(cli: Cli, args: &[String]) -> Result<Status> {
    match cli.command {
        Command::LearnGraph(a) => learn_graph(a, args),
        Command::Cluster(a) => cluster(a, args),
        Command::Ssl(a) => ssl(a, args),
        Command::Recover(a) => recover(a, args),
        Command::Metrics(a) => metrics(a, args),
        Command::Replay(a) => replay(a),
    }
}

struct Loaded {
    x: Matrix,
    images: Option<ImageStack>,
}

fn load_input(input: &InputArgs, run: &mut Run) -> Result<Loaded> {
    let path = input
        .input
        .as_ref()
        .ok_or_else(|| anyhow!("--input is required"))?;
    run.input("data", path);
    let source = Source::infer(path);
    if let Source::ImageDir(dir) = &source {
        let stack = load_image_stack(dir)?;
        return Ok(Loaded {
            x: stack.matrix.clone(),
            images: Some(stack),
        });
    }
    let spec = DatasetSpec {
        source,
        orientation: if input.samples_as_rows {
            Orientation::SamplesAsRows
        } else {
            Orientation::SamplesAsColumns
        },
        labels_path: None,
    };
    let (x, _) = io::load_matrix(&spec)?;
    Ok(Loaded { x, images: None })
}

fn solver_config(
    s: &SolverArgs,
    fixed_graph: Option<&Path>,
    x: &Matrix,
    run: &mut Run,
) -> Result<SolverConfig> {
    let beta = s
        .beta
        .ok_or_else(|| anyhow!("--beta is required; it has no default"))?;
    let mode: Mode = s.mode.into();
    let graph = match (mode, fixed_graph) {
        (Mode::FixedGraph, Some(p)) => {
            run.input("graph", p);
            Some(load_graph(p)?)
        }
        (Mode::FixedGraph, None) => bail!("--mode fixed-graph requires --graph"),
        (_, Some(_)) => bail!("--graph is only used with --mode fixed-graph"),
        (_, None) => None,
    };
    let cfg = SolverConfig {
        alpha: s.alpha,
        beta,
        k: s.k,
        mu: s.mu,
        rho: s.rho,
        tol: s.tol,
        max_iters: s.max_iters,
        mode,
        fixed_graph: graph,
        seed: s.seed,
        ..Default::default()
    };
    let (m, n) = x.shape();
    run.config("m", m);
    run.config("n", n);
    run.config("alpha", cfg.resolved_alpha(m, n));
    run.config("beta", cfg.beta);
    run.config("k", cfg.k);
    if mode == Mode::Rgc {
        run.config("k_effective", effective_k(cfg.k, n));
    }
    run.config("mu", cfg.mu);
    run.config("rho", cfg.rho);
    run.config("tol", cfg.tol);
    run.config("max_iters", cfg.max_iters);
    run.config("mode", mode.to_string());
    run.seed(cfg.seed);
    Ok(cfg)
}

fn record_solve(out: &SolveOutcome, run: &mut Run) {
    run.converged(out.converged);
    run.config("iterations", out.history.len());
    run.config("gamma", out.gamma);
    if let Some(last) = out.final_record() {
        run.config("final_res_x", last.res_x);
        run.config("final_res_z", last.res_z);
    }
}

fn write_decomposition(out: &SolveOutcome, run: &mut Run) -> Result<()> {
    save_matrix(&run.output("D.mtx"), &out.d)?;
    save_matrix(&run.output("E.mtx"), &out.e)?;
    save_history(&run.output("history.csv"), &out.history)?;
    if let Some(s) = &out.s {
        save_graph(&run.output("S.mtx"), s)?;
    }
    Ok(())
}

fn learn_graph(a: LearnGraphArgs, args: &[String]) -> Result<Status> {
    let mut run = Run::start("learn-graph", args, &a.out_dir)?;
    let data = load_input(&a.input, &mut run)?;
    let cfg = solver_config(&a.solver, a.graph.as_deref(), &data.x, &mut run)?;
    let out = solve(&data.x, &cfg)?;
    record_solve(&out, &mut run);
    write_decomposition(&out, &mut run)?;
    run.finish()?;
    Ok(out.converged.into())
}

fn recover(a: RecoverArgs, args: &[String]) -> Result<Status> {
    let mut run = Run::start("recover", args, &a.out_dir)?;
    let data = load_input(&a.input, &mut run)?;
    let cfg = solver_config(&a.solver, a.graph.as_deref(), &data.x, &mut run)?;
    let out = solve(&data.x, &cfg)?;
    record_solve(&out, &mut run);
    write_decomposition(&out, &mut run)?;
    if let Some(stack) = &data.images {
        let d_dir = run.output("D_images");
        save_image_stack(&d_dir, "D", &out.d, stack.width, stack.height, &stack.names)?;
        // Foreground magnitude.
        let e_dir = run.output("E_images");
        save_image_stack(
            &e_dir,
            "E",
            &out.e.abs(),
            stack.width,
            stack.height,
            &stack.names,
        )?;
        run.config("image_width", stack.width);
        run.config("image_height", stack.height);
    }
    run.finish()?;
    Ok(out.converged.into())
}

/// Loads `--graph` or learns one from `--input` with the solver flags.
fn obtain_graph(
    graph: Option<&Path>,
    input: &InputArgs,
    solver: &SolverArgs,
    run: &mut Run,
) -> Result<(AffinityGraph, Status)> {
    if let Some(p) = graph {
        run.input("graph", p);
        return Ok((load_graph(p)?, Status::Converged));
    }
    if input.input.is_none() {
        bail!("either --graph or --input is required");
    }
    if solver.mode != crate::args::ModeArg::Rgc {
        bail!("learning a graph requires --mode rgc; pass a saved graph with --graph instead");
    }
    let data = load_input(input, run)?;
    let cfg = solver_config(solver, None, &data.x, run)?;
    let out = solve(&data.x, &cfg)?;
    record_solve(&out, run);
    let s = out.s.ok_or_else(|| anyhow!("solver returned no graph"))?;
    Ok((s, out.converged.into()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    io::write_atomic(path, |w| writeln!(w, "{text}"))?;
    Ok(())
}

fn scores_json(s: &ClusterScores) -> serde_json::Value {
    json!({ "acc": s.acc, "nmi": s.nmi, "purity": s.purity })
}

fn cluster(a: ClusterArgs, args: &[String]) -> Result<Status> {
    let mut run = Run::start("cluster", args, &a.out_dir)?;
    let (s, status) = obtain_graph(a.graph.as_deref(), &a.input, &a.solver, &mut run)?;
    run.config("clusters", a.clusters);
    run.seed(a.solver.seed);
    let pred = spectral_cluster(&s, a.clusters, a.solver.seed)?;
    save_labels(&run.output("labels.csv"), &pred)?;
    if let Some(t) = &a.truth {
        run.input("truth", t);
        let truth = load_full_labels(t)?;
        let scores = ClusterScores::compute(&pred, &truth)?;
        write_json(&run.output("metrics.json"), &scores_json(&scores))?;
    }
    run.finish()?;
    Ok(status)
}

fn ssl(a: SslArgs, args: &[String]) -> Result<Status> {
    let mut run = Run::start("ssl", args, &a.out_dir)?;
    let (s, status) = obtain_graph(a.graph.as_deref(), &a.input, &a.solver, &mut run)?;
    run.input("labels", &a.labels);
    let partial = load_partial_labels(&a.labels, s.n(), a.classes)?;
    if partial.labeled_count() == 0 {
        bail!("{} labels no samples", a.labels.display());
    }
    run.config("lambda", a.lambda);
    run.config("classes", partial.classes());
    run.config("labeled", partial.labeled_count());

    let soft = lgc_propagate(&s, &partial, a.lambda)?;
    let hard = soft.hard();
    save_labels(&run.output("labels.csv"), &hard)?;
    save_csv_matrix(&run.output("soft_labels.csv"), &soft.scores)?;

    if let Some(t) = &a.truth {
        run.input("truth", t);
        let truth = load_full_labels(t)?;
        if truth.len() != hard.len() {
            bail!(
                "{} has {} labels for {} samples",
                t.display(),
                truth.len(),
                hard.len()
            );
        }
        // Score the samples whose labels were not given; with every sample
        // labeled, score them all.
        let mask = partial.mask();
        let scored: Vec<usize> = if mask.iter().all(|&m| m) {
            (0..hard.len()).collect()
        } else {
            (0..hard.len()).filter(|&i| !mask[i]).collect()
        };
        let correct = scored
            .iter()
            .filter(|&&i| hard.labels()[i] == truth.labels()[i])
            .count();
        let acc = correct as f64 / scored.len() as f64;
        write_json(
            &run.output("metrics.json"),
            &json!({ "acc": acc, "scored": scored.len() }),
        )?;
    }
    run.finish()?;
    Ok(status)
}

fn metrics(a: MetricsArgs, args: &[String]) -> Result<Status> {
    let mut run = Run::start("metrics", args, &a.out_dir)?;
    run.input("pred", &a.pred);
    run.input("truth", &a.truth);
    let pred = load_full_labels(&a.pred)?;
    let truth = load_full_labels(&a.truth)?;
    let scores = ClusterScores::compute(&pred, &truth)?;
    let value = scores_json(&scores);
    write_json(&run.output("metrics.json"), &value)?;
    println!("{}", serde_json::to_string(&value)?);
    run.finish()?;
    Ok(Status::Converged)
}

fn replay(a: ReplayArgs) -> Result<Status> {
    let manifest = Manifest::load(&a.manifest)?;
    let argv = std::iter::once("rgc".to_string()).chain(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(argv)
        .with_context(|| format!("manifest {} holds invalid arguments", a.manifest.display()))?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!("manifest records a replay, nothing to run");
    }
    run(cli, &manifest.args)
}
