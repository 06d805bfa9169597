//! End-to-end pruning of a multi-layer toy model: sparsity bookkeeping,
//! sequential layer-wise pruning with activation propagation, the ablation
//! variants, and reporting.

use serde::{Deserialize, Serialize};

use crate::altmin::{altmin_recover, gd_recover, mlp_objective, AltMinConfig};
use crate::container::WeightContainer;
use crate::error::{Result, SpapError};
use crate::glu::{glu_forward, prune_by_correspondence, GluLayer};
use crate::matrix::Matrix;
use crate::oracle::oracle_best_subset_with_guard;
use crate::penalty::{penalty_prune, PenaltyConfig, PenaltyTrace};
use crate::rng::Rng;

/// Stack of GLU layers sharing one model dimension. When `residual` is set
/// each layer adds its input to its output before feeding the next layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    layers: Vec<GluLayer>,
    residual: bool,
}

impl ToyModel {
    pub fn new(layers: Vec<GluLayer>, residual: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(SpapError::InvalidMatrix {
                op: "ToyModel::new",
                reason: "model needs at least one layer".to_string(),
            });
        }
        let m = layers[0].model_dim();
        if layers.iter().any(|l| l.model_dim() != m) {
            return Err(SpapError::InvalidMatrix {
                op: "ToyModel::new",
                reason: "all layers must share the model dimension".to_string(),
            });
        }
        Ok(ToyModel { layers, residual })
    }

    /// Seeded model with fan-in-scaled normal weights.
    pub fn random(
        layers: usize,
        model_dim: usize,
        hidden_dim: usize,
        residual: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        let up_scale = 1.0 / (model_dim as f64).sqrt();
        let down_scale = 1.0 / (hidden_dim as f64).sqrt();
        let mut out = Vec::with_capacity(layers);
        for _ in 0..layers {
            let w_up = rng.normal_matrix(hidden_dim, model_dim).scale(up_scale)?;
            let w_gate = rng.normal_matrix(hidden_dim, model_dim).scale(up_scale)?;
            let w_down = rng.normal_matrix(model_dim, hidden_dim).scale(down_scale)?;
            out.push(GluLayer::new(w_up, w_gate, w_down)?);
        }
        ToyModel::new(out, residual)
    }

    pub fn layers(&self) -> &[GluLayer] {
        &self.layers
    }

    pub fn residual(&self) -> bool {
        self.residual
    }

    pub fn model_dim(&self) -> usize {
        self.layers[0].model_dim()
    }

    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(GluLayer::param_count).sum()
    }

    /// Full forward pass, propagating residuals when enabled.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut cur = x.clone();
        for layer in &self.layers {
            let out = glu_forward(layer, &cur)?.output;
            cur = if self.residual { cur.add(&out)? } else { out };
        }
        Ok(cur)
    }

    /// Serializes layer weights under `layer.{i}.{w_up,w_gate,w_down}`.
    pub fn to_container(&self) -> Result<WeightContainer> {
        let mut c = WeightContainer::new();
        for (i, layer) in self.layers.iter().enumerate() {
            c.insert(format!("layer.{i}.w_up"), layer.w_up().clone())?;
            c.insert(format!("layer.{i}.w_gate"), layer.w_gate().clone())?;
            c.insert(format!("layer.{i}.w_down"), layer.w_down().clone())?;
        }
        Ok(c)
    }

    /// Rebuilds a model from [`ToyModel::to_container`] naming.
    pub fn from_container(container: &WeightContainer, residual: bool) -> Result<Self> {
        let mut layers = Vec::new();
        for i in 0.. {
            let up = container.get(&format!("layer.{i}.w_up"));
            let gate = container.get(&format!("layer.{i}.w_gate"));
            let down = container.get(&format!("layer.{i}.w_down"));
            match (up, gate, down) {
                (Some(u), Some(g), Some(d)) => {
                    layers.push(GluLayer::new(u.clone(), g.clone(), d.clone())?)
                }
                (None, None, None) => break,
                _ => {
                    return Err(SpapError::Format(format!(
                        "container is missing projection matrices for layer {i}"
                    )))
                }
            }
        }
        ToyModel::new(layers, residual)
    }
}

/// Converts an overall-model sparsity target into the per-layer channel
/// count to prune: `lambda = round(n * overall / mlp_share)` clamped to
/// `[1, n-1]`. Pruning `lambda` of `n` channels removes the fraction
/// `lambda / n` of the layer's `3 m n` parameters.
pub fn sparsity_to_lambda(overall: f64, layer: &GluLayer, mlp_share: f64) -> Result<usize> {
    if !(mlp_share > 0.0 && mlp_share <= 1.0) {
        return Err(SpapError::InvalidParam {
            name: "mlp_param_share",
            value: mlp_share,
            constraint: "must lie in (0, 1]",
        });
    }
    if overall <= 0.0 || !overall.is_finite() {
        return Err(SpapError::InvalidParam {
            name: "overall_sparsity",
            value: overall,
            constraint: "must be positive",
        });
    }
    if overall >= mlp_share {
        return Err(SpapError::Config(format!(
            "overall sparsity {overall} is not reachable by MLP-only pruning with \
             mlp_param_share {mlp_share}"
        )));
    }
    let n = layer.hidden_dim();
    let raw = (n as f64 * overall / mlp_share).round() as usize;
    Ok(raw.clamp(1, n - 1))
}

/// Per-layer channel-removal counts for a whole model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityPlan {
    pub overall_sparsity: f64,
    pub mlp_param_share: f64,
    pub per_layer_lambda: Vec<usize>,
}

impl SparsityPlan {
    /// Uniform plan from an overall sparsity target. `overall == 0` is the
    /// degenerate no-pruning plan.
    pub fn uniform(model: &ToyModel, overall: f64, mlp_share: f64) -> Result<Self> {
        if overall == 0.0 {
            return Ok(SparsityPlan {
                overall_sparsity: 0.0,
                mlp_param_share: mlp_share,
                per_layer_lambda: vec![0; model.layers().len()],
            });
        }
        let per_layer_lambda = model
            .layers()
            .iter()
            .map(|l| sparsity_to_lambda(overall, l, mlp_share))
            .collect::<Result<Vec<_>>>()?;
        Ok(SparsityPlan {
            overall_sparsity: overall,
            mlp_param_share: mlp_share,
            per_layer_lambda,
        })
    }

    pub fn validate(&self, model: &ToyModel) -> Result<()> {
        if self.per_layer_lambda.len() != model.layers().len() {
            return Err(SpapError::Config(format!(
                "plan covers {} layers but the model has {}",
                self.per_layer_lambda.len(),
                model.layers().len()
            )));
        }
        for (i, (&lambda, layer)) in self
            .per_layer_lambda
            .iter()
            .zip(model.layers())
            .enumerate()
        {
            if lambda >= layer.hidden_dim() {
                return Err(SpapError::Config(format!(
                    "layer {i}: lambda {lambda} must stay below hidden dim {}",
                    layer.hidden_dim()
                )));
            }
        }
        Ok(())
    }
}

/// Recovery strategy applied after mask selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Penalty method, correspondence pruning, then alternating minimization.
    Full,
    /// Penalty method and correspondence pruning only.
    NoUpdate,
    /// Penalty method, then plain Adam on all three projections.
    GdOnly,
}

impl Variant {
    pub fn slug(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoUpdate => "no-update",
            Variant::GdOnly => "gd-only",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = SpapError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no-update" => Ok(Variant::NoUpdate),
            "gd-only" => Ok(Variant::GdOnly),
            other => Err(SpapError::Config(format!(
                "unknown variant `{other}` (expected full, no-update, or gd-only)"
            ))),
        }
    }
}

/// Solver configuration consumed by [`sequential_prune`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneOptions {
    pub penalty: PenaltyConfig,
    pub altmin: AltMinConfig,
    /// Also run the enumeration oracle per layer and report the gap.
    pub oracle_gap: bool,
    /// Subset guard for the oracle runs; `None` uses the default.
    pub oracle_guard: Option<u64>,
}

/// Per-layer outcome of a sequential prune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub lambda: usize,
    pub keep: Vec<usize>,
    /// Penalty-loop diagnostics (absent for untouched layers).
    pub penalty: Option<PenaltyTrace>,
    /// Recovery objective per iteration (empty for `no-update`).
    pub recovery_objectives: Vec<f64>,
    /// Squared Frobenius reconstruction error of the final layer against
    /// the dense targets on the solve split.
    pub final_reconstruction_error: f64,
    /// Relative gap of the penalty objective to the enumeration optimum,
    /// when requested.
    pub oracle_gap: Option<f64>,
}

/// Model-level outcome of a sequential prune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub layers: Vec<LayerReport>,
    pub dense_params: u64,
    pub pruned_params: u64,
    pub dense_flops: u64,
    pub pruned_flops: u64,
    /// Relative end-to-end output error on the held-out calibration split.
    pub end_to_end_error: f64,
    pub held_out_samples: usize,
}

/// Prunes each layer in order on the already-pruned upstream activations:
/// the dense layer's outputs on those activations are the reconstruction
/// targets. One eighth of the calibration samples is held out for the
/// end-to-end error and never enters a solve.
///
/// Layers with `lambda == 0` pass through untouched.
pub fn sequential_prune(
    model: &ToyModel,
    calib: &Matrix,
    plan: &SparsityPlan,
    variant: Variant,
    opts: &PruneOptions,
) -> Result<(ToyModel, PruneReport)> {
    plan.validate(model)?;
    opts.penalty.validate()?;
    opts.altmin.validate()?;
    if calib.rows() != model.model_dim() {
        return Err(SpapError::shape(
            "sequential_prune",
            (model.model_dim(), 0),
            calib.shape(),
        ));
    }
    let p = calib.cols();
    if p < 8 {
        return Err(SpapError::Config(format!(
            "need at least 8 calibration samples to reserve a held-out split, got {p}"
        )));
    }
    let held_out = p / 8;
    let p_train = p - held_out;
    let max_hidden = model
        .layers()
        .iter()
        .map(GluLayer::hidden_dim)
        .max()
        .unwrap_or(0);
    if p_train < max_hidden {
        return Err(SpapError::Config(format!(
            "solve split has {p_train} samples but the widest layer has {max_hidden} \
             hidden channels"
        )));
    }
    let x_train = calib.slice_cols(0, p_train)?;
    let x_hold = calib.slice_cols(p_train, p)?;

    let mut cur = x_train;
    let mut pruned_layers = Vec::with_capacity(model.layers().len());
    let mut layer_reports = Vec::with_capacity(model.layers().len());

    for (idx, layer) in model.layers().iter().enumerate() {
        let lambda = plan.per_layer_lambda[idx];
        let act = glu_forward(layer, &cur)
            .map_err(|e| layer_failure(idx, "forward pass", e))?;

        let (final_layer, report) = if lambda == 0 {
            let report = LayerReport {
                layer: idx,
                lambda: 0,
                keep: (0..layer.hidden_dim()).collect(),
                penalty: None,
                recovery_objectives: Vec::new(),
                final_reconstruction_error: 0.0,
                oracle_gap: None,
            };
            (layer.clone(), report)
        } else {
            let outcome = penalty_prune(
                layer.w_down(),
                &act.intermediate,
                &act.output,
                lambda,
                &opts.penalty,
            )
            .map_err(|e| layer_failure(idx, "penalty solve", e))?;

            let sliced = prune_by_correspondence(layer, &outcome.keep)
                .map_err(|e| layer_failure(idx, "correspondence pruning", e))?;
            let pruned = sliced
                .with_down(outcome.w_pruned.clone())
                .map_err(|e| layer_failure(idx, "down refit install", e))?;

            let oracle_gap = if opts.oracle_gap {
                let guard = opts
                    .oracle_guard
                    .unwrap_or(crate::oracle::DEFAULT_SUBSET_GUARD);
                let orc =
                    oracle_best_subset_with_guard(&act.intermediate, &act.output, lambda, guard)
                        .map_err(|e| layer_failure(idx, "oracle enumeration", e))?;
                let z_keep = act
                    .intermediate
                    .select_rows(&outcome.keep)
                    .map_err(|e| layer_failure(idx, "oracle gap", e))?;
                let obj =
                    crate::matrix::frobenius_error(&outcome.w_pruned, &z_keep, &act.output)
                        .map_err(|e| layer_failure(idx, "oracle gap", e))?;
                Some((obj - orc.best_objective) / orc.best_objective.max(1e-300))
            } else {
                None
            };

            let (final_layer, recovery_objectives) = match variant {
                Variant::NoUpdate => {
                    let obj = mlp_objective(&pruned, &cur, &act.output)
                        .map_err(|e| layer_failure(idx, "objective", e))?;
                    (pruned, vec![obj])
                }
                Variant::Full => altmin_recover(&pruned, &cur, &act.output, &opts.altmin)
                    .map_err(|e| layer_failure(idx, "alternating recovery", e))?,
                Variant::GdOnly => gd_recover(&pruned, &cur, &act.output, &opts.altmin)
                    .map_err(|e| layer_failure(idx, "gradient recovery", e))?,
            };
            let final_err = mlp_objective(&final_layer, &cur, &act.output)
                .map_err(|e| layer_failure(idx, "objective", e))?;
            let report = LayerReport {
                layer: idx,
                lambda,
                keep: outcome.keep,
                penalty: Some(outcome.trace),
                recovery_objectives,
                final_reconstruction_error: final_err,
                oracle_gap,
            };
            (final_layer, report)
        };

        let out = glu_forward(&final_layer, &cur)
            .map_err(|e| layer_failure(idx, "pruned forward", e))?
            .output;
        cur = if model.residual() { cur.add(&out)? } else { out };
        pruned_layers.push(final_layer);
        layer_reports.push(report);
    }

    let pruned_model = ToyModel::new(pruned_layers, model.residual())?;
    let dense_out = model.forward(&x_hold)?;
    let pruned_out = pruned_model.forward(&x_hold)?;
    let denom = dense_out.frobenius_norm();
    let end_to_end_error =
        pruned_out.sub(&dense_out)?.frobenius_norm() / denom.max(f64::MIN_POSITIVE);

    let (dense_flops, _) = analytic_cost(model, p);
    let (pruned_flops, _) = analytic_cost(&pruned_model, p);
    let report = PruneReport {
        layers: layer_reports,
        dense_params: model.param_count(),
        pruned_params: pruned_model.param_count(),
        dense_flops,
        pruned_flops,
        end_to_end_error,
        held_out_samples: held_out,
    };
    Ok((pruned_model, report))
}

fn layer_failure(layer: usize, stage: &str, err: SpapError) -> SpapError {
    match err {
        SpapError::Io(_) => err,
        other => SpapError::InvalidMatrix {
            op: "sequential_prune",
            reason: format!("layer {layer} failed during {stage}: {other}"),
        },
    }
}

/// Analytic cost model for one forward pass over `seq_len` samples.
///
/// Per layer: the three GEMMs cost `2 * m * n` flops per sample each
/// (`6 m n` total), the swish evaluation is counted as 4 flops and the
/// gating multiply as 1 per intermediate element (`5 n` per sample).
/// Weight bytes are `3 m n` entries at 8 bytes each. Every term scales
/// linearly in the hidden dimension, so pruning a fraction of channels
/// scales both totals by exactly the kept fraction.
pub fn analytic_cost(model: &ToyModel, seq_len: usize) -> (u64, u64) {
    let m = model.model_dim() as u64;
    let l = seq_len as u64;
    let mut flops = 0u64;
    let mut bytes = 0u64;
    for layer in model.layers() {
        let n = layer.hidden_dim() as u64;
        flops += 6 * m * n * l + 5 * n * l;
        bytes += 3 * m * n * 8;
    }
    (flops, bytes)
}
