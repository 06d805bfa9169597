//! Command-line interface: config-driven pruning runs, oracle comparisons,
//! analytic/wall-clock benchmarks, and plot-data extraction.
//!
//! Exit codes: 0 success, 1 configuration or input-format error, 2 numeric
//! failure, 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use spap_core::{
    analytic_cost, frobenius_error, glu_forward, magnitude_baseline,
    oracle_best_subset_with_guard, penalty_prune, prune_by_correspondence, sequential_prune,
    OneOrMany, PruneOptions, ReportFile, RunConfig, RunRecord, Rng, SparsityPlan, SpapError,
    ToyModel, Variant, WeightContainer, DEFAULT_SUBSET_GUARD,
};

#[derive(Parser)]
#[command(name = "spap", version, about = "Structured pruning of GLU MLP layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pruning pipeline and write pruned weights plus a report.
    Prune {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for containers and the report.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config variant list (full | no-update | gd-only).
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Compare the penalty method, the magnitude baseline, and the
    /// enumeration oracle on every layer.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report analytic cost ratios and wall-clock forward timings for the
    /// dense model and 10/20/30% pruned variants.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit `variant,sparsity,error` CSV rows from a report file.
    PlotData {
        #[arg(long)]
        report: PathBuf,
    },
}

fn exit_code_for(err: &SpapError) -> u8 {
    match err {
        SpapError::Io(_) => 3,
        SpapError::Config(_)
        | SpapError::Format(_)
        | SpapError::CombinatorialGuard { .. }
        | SpapError::InvalidParam { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prune {
            config,
            out,
            seed,
            variant,
        } => cmd_prune(&config, &out, seed, variant),
        Command::OracleCompare { config, seed } => cmd_oracle_compare(&config, seed),
        Command::Bench { config, seed } => cmd_bench(&config, seed),
        Command::PlotData { report } => cmd_plot_data(&report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Loads the config, applies CLI overrides, and materialises the model and
/// calibration activations from the seed.
fn prepare(
    config_path: &Path,
    seed_override: Option<u64>,
    variant_override: Option<Variant>,
) -> Result<(RunConfig, ToyModel, spap_core::Matrix), SpapError> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(v) = variant_override {
        cfg.variant = OneOrMany::One(v);
    }
    let mut rng = Rng::new(cfg.seed);
    let model = match &cfg.model.container {
        Some(path) => {
            let container = WeightContainer::read_from(Path::new(path))?;
            let model = ToyModel::from_container(&container, cfg.model.residual)?;
            let geometry_ok = model.layers().len() == cfg.model.layers
                && model.model_dim() == cfg.model.model_dim
                && model
                    .layers()
                    .iter()
                    .all(|l| l.hidden_dim() == cfg.model.hidden_dim);
            if !geometry_ok {
                return Err(SpapError::Config(format!(
                    "container `{path}` does not match the configured geometry \
                     ({} layers, model_dim {}, hidden_dim {})",
                    cfg.model.layers, cfg.model.model_dim, cfg.model.hidden_dim
                )));
            }
            model
        }
        None => ToyModel::random(
            cfg.model.layers,
            cfg.model.model_dim,
            cfg.model.hidden_dim,
            cfg.model.residual,
            &mut rng,
        )?,
    };
    let calib = rng.normal_matrix(cfg.model.model_dim, cfg.calibration.samples);
    Ok((cfg, model, calib))
}

fn sparsity_label(s: f64) -> String {
    let pct = s * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        format!("{pct}").replace('.', "_")
    }
}

fn cmd_prune(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    variant: Option<Variant>,
) -> Result<(), SpapError> {
    let (cfg, model, calib) = prepare(config_path, seed, variant)?;
    std::fs::create_dir_all(out_dir)?;

    let opts = PruneOptions {
        penalty: cfg.penalty.clone(),
        altmin: cfg.altmin.clone(),
        oracle_gap: cfg.report.oracle_gap,
        oracle_guard: cfg.report.oracle_guard,
    };
    let mut runs = Vec::new();
    for overall in cfg.sparsity.overall.to_vec() {
        let plan = SparsityPlan::uniform(&model, overall, cfg.sparsity.mlp_param_share)?;
        for v in cfg.variant.to_vec() {
            let (pruned, report) = sequential_prune(&model, &calib, &plan, v, &opts)?;
            let name = format!("pruned_s{}_{}.spap", sparsity_label(overall), v.slug());
            pruned.to_container()?.write_to(&out_dir.join(&name))?;
            println!(
                "run variant={} sparsity={:.4}: params {} -> {}, end-to-end error {:.6e} ({})",
                v.slug(),
                overall,
                report.dense_params,
                report.pruned_params,
                report.end_to_end_error,
                name
            );
            runs.push(RunRecord {
                variant: v,
                overall_sparsity: overall,
                report,
            });
        }
    }
    let report = ReportFile { config: cfg, runs };
    let report_path = out_dir.join("report.json");
    report.write_to(&report_path)?;
    println!("wrote {}", report_path.display());
    Ok(())
}

fn cmd_oracle_compare(config_path: &Path, seed: Option<u64>) -> Result<(), SpapError> {
    let (cfg, model, calib) = prepare(config_path, seed, None)?;
    let guard = cfg.report.oracle_guard.unwrap_or(DEFAULT_SUBSET_GUARD);
    println!("layer  lambda  subsets  oracle_obj    penalty_obj   magnitude_obj penalty_gap magnitude_gap");
    for overall in cfg.sparsity.overall.to_vec() {
        let plan = SparsityPlan::uniform(&model, overall, cfg.sparsity.mlp_param_share)?;
        let mut cur = calib.clone();
        for (idx, layer) in model.layers().iter().enumerate() {
            let lambda = plan.per_layer_lambda[idx];
            let act = glu_forward(layer, &cur)?;
            if lambda > 0 {
                let orc =
                    oracle_best_subset_with_guard(&act.intermediate, &act.output, lambda, guard)?;
                let pen = penalty_prune(
                    layer.w_down(),
                    &act.intermediate,
                    &act.output,
                    lambda,
                    &cfg.penalty,
                )?;
                let z_keep = act.intermediate.select_rows(&pen.keep)?;
                let pen_obj = frobenius_error(&pen.w_pruned, &z_keep, &act.output)?;
                let (_, mag_obj) =
                    magnitude_baseline(layer.w_down(), &act.intermediate, &act.output, lambda)?;
                let gap = |obj: f64| (obj - orc.best_objective) / orc.best_objective.max(1e-300);
                println!(
                    "{idx:<6} {lambda:<7} {:<8} {:<13.6e} {:<13.6e} {:<13.6e} {:<11.4} {:<11.4}",
                    orc.evaluated_subsets,
                    orc.best_objective,
                    pen_obj,
                    mag_obj,
                    gap(pen_obj),
                    gap(mag_obj),
                );
            } else {
                println!("{idx:<6} {lambda:<7} -        (layer untouched)");
            }
            let out = glu_forward(layer, &cur)?.output;
            cur = if model.residual() { cur.add(&out)? } else { out };
        }
    }
    Ok(())
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn time_forward(model: &ToyModel, x: &spap_core::Matrix, reps: usize) -> Result<f64, SpapError> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let out = model.forward(x)?;
        let elapsed = start.elapsed().as_secs_f64();
        // Fold the output into the timing sink so the pass cannot be elided.
        times.push(elapsed + out.get(0, 0) * 0.0);
    }
    Ok(median(times))
}

fn cmd_bench(config_path: &Path, seed: Option<u64>) -> Result<(), SpapError> {
    let (cfg, model, _) = prepare(config_path, seed, None)?;
    let mut rng = Rng::new(cfg.seed.wrapping_add(1));
    let x = rng.normal_matrix(model.model_dim(), cfg.bench.seq_len);
    let reps = cfg.bench.repetitions;

    let (dense_flops, dense_bytes) = analytic_cost(&model, cfg.bench.seq_len);
    let dense_time = time_forward(&model, &x, reps)?;
    println!(
        "sparsity=0% flops={dense_flops} bytes={dense_bytes} flops_ratio=1.000 \
         bytes_ratio=1.000 wallclock_ratio=1.000"
    );

    for overall in [0.10, 0.20, 0.30] {
        // Cost and timing depend only on shapes, so slice leading channels.
        let layers = model
            .layers()
            .iter()
            .map(|l| {
                let lambda = spap_core::sparsity_to_lambda(
                    overall,
                    l,
                    cfg.sparsity.mlp_param_share,
                )?;
                let keep: Vec<usize> = (0..l.hidden_dim() - lambda).collect();
                prune_by_correspondence(l, &keep)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pruned = ToyModel::new(layers, model.residual())?;
        let (flops, bytes) = analytic_cost(&pruned, cfg.bench.seq_len);
        let time = time_forward(&pruned, &x, reps)?;
        println!(
            "sparsity={}% flops={flops} bytes={bytes} flops_ratio={:.3} bytes_ratio={:.3} \
             wallclock_ratio={:.3}",
            (overall * 100.0).round() as i64,
            flops as f64 / dense_flops as f64,
            bytes as f64 / dense_bytes as f64,
            time / dense_time,
        );
    }
    println!(
        "note: ratios cover MLP weights only; whole-model ratios sit above these when \
         unpruned blocks (attention, embeddings) are present"
    );
    Ok(())
}

fn cmd_plot_data(report_path: &Path) -> Result<(), SpapError> {
    let report = ReportFile::read_from(report_path)?;
    print!("{}", report.to_plot_csv());
    Ok(())
}
