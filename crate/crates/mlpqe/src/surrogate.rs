//! Principal/auxiliary parameter partitioning and the kernel-ridge surrogate
//! driving the reduced (ML-PQE) loop.
//!
//! Full-space iterations are recorded until the residue norm crosses the
//! limiting threshold (LRNT); parameters are then split by magnitude into a
//! principal subset that keeps being measured and an auxiliary subset whose
//! values are predicted from the principal ones by RBF-kernel ridge
//! regression over standardized features.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzPool;
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::pqe::{
    residue_direct, IterationMode, IterationRecord, IterationTrace, PhaseHooks, PhaseOutcome,
    PqeEngine, ResidueVector, StopRule, DEFAULT_MAX_ITERATIONS, DEFAULT_THRESHOLD,
};
use crate::statevector::Determinant;

pub const DEFAULT_LRNT: f64 = 0.007;
pub const DEFAULT_FRACTION: f64 = 0.20;
pub const DEFAULT_ALPHA: f64 = 1e-10;

/// Hard validity band for the LRNT; outside it training data is either one
/// near-converged point or a useless warm start.
const LRNT_HARD_BAND: (f64, f64) = (1e-4, 0.1);
/// Recommended band; a warning is printed outside it.
const LRNT_SOFT_BAND: (f64, f64) = (0.005, 0.02);

const SCALE_FLOOR: f64 = 1e-12;

pub fn validate_lrnt(lrnt: f64) -> Result<()> {
    if !(lrnt > LRNT_HARD_BAND.0 && lrnt < LRNT_HARD_BAND.1) {
        return Err(Error::Invalid(format!(
            "LRNT {lrnt} outside the valid band ({}, {})",
            LRNT_HARD_BAND.0, LRNT_HARD_BAND.1
        )));
    }
    if !(LRNT_SOFT_BAND.0..=LRNT_SOFT_BAND.1).contains(&lrnt) {
        eprintln!(
            "warning: LRNT {lrnt} outside the recommended band [{}, {}]",
            LRNT_SOFT_BAND.0, LRNT_SOFT_BAND.1
        );
    }
    Ok(())
}

/// Principal (measured) vs auxiliary (predicted) split, each listed in pool
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub principal: Vec<String>,
    pub auxiliary: Vec<String>,
    pub fraction: f64,
    pub principal_idx: Vec<usize>,
    pub auxiliary_idx: Vec<usize>,
}

impl Partition {
    pub fn n_p(&self) -> usize {
        self.principal.len()
    }

    pub fn n_a(&self) -> usize {
        self.auxiliary.len()
    }
}

/// Split by |theta|: the `max(1, round(fraction * N))` largest magnitudes are
/// principal; ties go to the earlier pool position.
pub fn partition(labels: &[String], theta: &[f64], fraction: f64) -> Result<Partition> {
    if labels.len() != theta.len() {
        return Err(Error::Dimension(format!(
            "{} labels vs {} parameters",
            labels.len(),
            theta.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Invalid(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Invalid("cannot partition an empty pool".into()));
    }
    let n_p = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    // stable by construction: equal magnitudes keep ascending pool order
    order.sort_by(|&a, &b| theta[b].abs().partial_cmp(&theta[a].abs()).unwrap());
    let mut principal_idx: Vec<usize> = order[..n_p].to_vec();
    let mut auxiliary_idx: Vec<usize> = order[n_p..].to_vec();
    principal_idx.sort_unstable();
    auxiliary_idx.sort_unstable();
    Ok(Partition {
        principal: principal_idx.iter().map(|&i| labels[i].clone()).collect(),
        auxiliary: auxiliary_idx.iter().map(|&i| labels[i].clone()).collect(),
        fraction,
        principal_idx,
        auxiliary_idx,
    })
}

/// Which feature vector the surrogate sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Principal parameters only (default).
    ThetaP,
    /// Principal parameters concatenated with their change since the
    /// previous iteration; the first recorded iteration is dropped.
    ThetaPPlusDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub samples: Vec<TrainingSample>,
    pub lrnt: f64,
    pub feature_kind: FeatureKind,
}

impl TrainingSet {
    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    pub fn target_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.targets.len())
    }
}

fn gather(theta: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| theta[i]).collect()
}

/// One sample per full-space iteration up to and including the first with
/// `‖r‖ <= lrnt`.
pub fn record_training(
    records: &[IterationRecord],
    part: &Partition,
    lrnt: f64,
    feature_kind: FeatureKind,
) -> Result<TrainingSet> {
    validate_lrnt(lrnt)?;
    let crossing = records
        .iter()
        .position(|r| r.residue_norm <= lrnt)
        .ok_or_else(|| {
            Error::Invalid(format!(
                "residue norm never fell to LRNT = {lrnt} over {} iterations",
                records.len()
            ))
        })?;
    let window = &records[..=crossing];
    let mut samples = Vec::new();
    for (k, rec) in window.iter().enumerate() {
        let theta_p = gather(&rec.theta, &part.principal_idx);
        let features = match feature_kind {
            FeatureKind::ThetaP => theta_p,
            FeatureKind::ThetaPPlusDelta => {
                if k == 0 {
                    continue;
                }
                let prev = gather(&window[k - 1].theta, &part.principal_idx);
                let mut f = theta_p.clone();
                f.extend(theta_p.iter().zip(&prev).map(|(a, b)| a - b));
                f
            }
        };
        samples.push(TrainingSample {
            features,
            targets: gather(&rec.theta, &part.auxiliary_idx),
        });
    }
    if samples.len() < 2 {
        return Err(Error::TrainingInsufficient {
            samples: samples.len(),
            lrnt,
        });
    }
    Ok(TrainingSet {
        samples,
        lrnt,
        feature_kind,
    })
}

/// Per-feature zero-mean unit-variance transform (population standard
/// deviation, floored at 1e-12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let m = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (acc, x) in mean.iter_mut().zip(row) {
                *acc += x;
            }
        }
        for acc in &mut mean {
            *acc /= m;
        }
        let mut var = vec![0.0; d];
        for row in rows {
            for ((acc, x), mu) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (x - mu) * (x - mu);
            }
        }
        let scale = var
            .iter()
            .map(|v| (v / m).sqrt().max(SCALE_FLOOR))
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "feature vector of length {} against standardizer of length {}",
                x.len(),
                self.mean.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, mu), s)| (x - mu) / s)
            .collect())
    }

    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.mean.len() {
            return Err(Error::Dimension("inverse-transform length mismatch".into()));
        }
        Ok(z.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((z, mu), s)| z * s + mu)
            .collect())
    }
}

/// Dual-form RBF kernel ridge model; one coefficient vector per auxiliary
/// target, all sharing a single factorization of `K + alpha I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrModel {
    pub alpha: f64,
    pub gamma: f64,
    /// Standardized training feature rows.
    pub training_features: Vec<Vec<f64>>,
    /// `dual_coefficients[t][m]` weights training row m for target t.
    pub dual_coefficients: Vec<Vec<f64>>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Standardize features, build the RBF kernel, and solve `(K + alpha I) c = y`
/// for every target. `gamma = None` defaults to 1/feature-dimension.
pub fn fit(ts: &TrainingSet, alpha: f64, gamma: Option<f64>) -> Result<(Standardizer, KrrModel)> {
    let m = ts.samples.len();
    if m < 2 {
        return Err(Error::TrainingInsufficient {
            samples: m,
            lrnt: ts.lrnt,
        });
    }
    if alpha <= 0.0 {
        return Err(Error::Fit(format!("alpha must be positive, got {alpha}")));
    }
    let d = ts.feature_dim();
    let t = ts.target_dim();
    if ts
        .samples
        .iter()
        .any(|s| s.features.len() != d || s.targets.len() != t)
    {
        return Err(Error::Dimension("ragged training samples".into()));
    }
    let gamma = gamma.unwrap_or(1.0 / d.max(1) as f64);
    let raw: Vec<Vec<f64>> = ts.samples.iter().map(|s| s.features.clone()).collect();
    let standardizer = Standardizer::fit(&raw);
    let xs: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| standardizer.transform(r))
        .collect::<Result<_>>()?;

    let k = DMatrix::from_fn(m, m, |i, j| (-gamma * dist2(&xs[i], &xs[j])).exp());
    let a = &k + DMatrix::identity(m, m) * alpha;
    let y = DMatrix::from_fn(m, t, |i, j| ts.samples[i].targets[j]);
    let c = match a.clone().cholesky() {
        Some(chol) => chol.solve(&y),
        None => a
            .clone()
            .lu()
            .solve(&y)
            .ok_or_else(|| Error::Fit("singular regularized kernel matrix".into()))?,
    };
    // solve-residual invariant; warn-and-proceed on near-singular designs
    let residual = &a * &c - &y;
    for j in 0..t {
        let r = residual.column(j).norm();
        let yn = y.column(j).norm();
        if r > 1e-8 * yn.max(1e-12) {
            eprintln!(
                "warning: KRR dual solve residual {r:.3e} for target {j} (‖y‖ = {yn:.3e}); \
                 kernel matrix is near-singular, proceeding with the regularized solution"
            );
        }
    }
    let dual_coefficients = (0..t)
        .map(|j| c.column(j).iter().copied().collect())
        .collect();
    Ok((
        standardizer,
        KrrModel {
            alpha,
            gamma,
            training_features: xs,
            dual_coefficients,
        },
    ))
}

/// `theta_A[t] = sum_m c[t][m] exp(-gamma ‖z - x_m‖^2)` at the standardized
/// query `z`.
pub fn predict(model: &KrrModel, standardizer: &Standardizer, features: &[f64]) -> Result<Vec<f64>> {
    let z = standardizer.transform(features)?;
    let kernel: Vec<f64> = model
        .training_features
        .iter()
        .map(|x| (-model.gamma * dist2(&z, x)).exp())
        .collect();
    Ok(model
        .dual_coefficients
        .iter()
        .map(|c| c.iter().zip(&kernel).map(|(c, k)| c * k).sum())
        .collect())
}

/// ML-PQE run controls; defaults follow the reference setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlConfig {
    pub lrnt: f64,
    pub fraction: f64,
    pub alpha: f64,
    /// RBF width; `None` selects 1/feature-dimension.
    pub gamma: Option<f64>,
    pub threshold: f64,
    pub max_iterations: usize,
    pub epsilon_res: f64,
    pub feature_kind: FeatureKind,
}

impl Default for MlConfig {
    fn default() -> Self {
        MlConfig {
            lrnt: DEFAULT_LRNT,
            fraction: DEFAULT_FRACTION,
            alpha: DEFAULT_ALPHA,
            gamma: None,
            threshold: DEFAULT_THRESHOLD,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            epsilon_res: DEFAULT_THRESHOLD,
            feature_kind: FeatureKind::ThetaP,
        }
    }
}

/// Everything a finished ML-PQE run produced.
#[derive(Debug, Clone)]
pub struct MlPqeOutcome {
    pub trace: IterationTrace,
    pub partition: Partition,
    pub standardizer: Standardizer,
    pub model: KrrModel,
    pub training_set: TrainingSet,
    /// Full-space residue norm at the final parameters; evaluated once for
    /// reporting, not part of the convergence test.
    pub full_residue_norm: f64,
}

impl MlPqeOutcome {
    pub fn training_iterations(&self) -> usize {
        self.trace
            .records
            .iter()
            .filter(|r| r.mode == IterationMode::Training)
            .count()
    }

    pub fn reduced_iterations(&self) -> usize {
        self.trace
            .records
            .iter()
            .filter(|r| r.mode == IterationMode::Reduced)
            .count()
    }

    /// JSON dump sufficient to reproduce predictions bit-for-bit.
    pub fn model_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            alpha: f64,
            gamma: f64,
            standardizer: &'a Standardizer,
            training_features: &'a Vec<Vec<f64>>,
            dual_coefficients: &'a Vec<Vec<f64>>,
            partition: &'a Partition,
        }
        serde_json::to_string_pretty(&Dump {
            alpha: self.model.alpha,
            gamma: self.model.gamma,
            standardizer: &self.standardizer,
            training_features: &self.model.training_features,
            dual_coefficients: &self.model.dual_coefficients,
            partition: &self.partition,
        })
        .expect("model dump serialization cannot fail")
    }
}

/// Phase 2: each iteration predicts the auxiliary parameters from the current
/// principal ones, assembles the ansatz, measures principal residues only,
/// then quasi-Newton-updates the principal parameters. `prev_theta_p` seeds
/// the delta features when those are enabled.
#[allow(clippy::too_many_arguments)]
pub fn run_reduced_phase(
    engine: &PqeEngine<'_>,
    part: &Partition,
    standardizer: &Standardizer,
    model: &KrrModel,
    cfg: &MlConfig,
    theta_start: Vec<f64>,
    k0: usize,
    prev_theta_p: Vec<f64>,
    perturb: Option<&mut dyn FnMut(&mut ResidueVector)>,
) -> Result<PhaseOutcome> {
    let mut prev = prev_theta_p;
    let kind = cfg.feature_kind;
    let mut pre = |theta: &mut Vec<f64>| {
        let theta_p = gather(theta, &part.principal_idx);
        let features = match kind {
            FeatureKind::ThetaP => theta_p.clone(),
            FeatureKind::ThetaPPlusDelta => {
                let mut f = theta_p.clone();
                f.extend(theta_p.iter().zip(&prev).map(|(a, b)| a - b));
                f
            }
        };
        let predicted =
            predict(model, standardizer, &features).expect("feature dimension fixed at fit time");
        for (&i, &v) in part.auxiliary_idx.iter().zip(&predicted) {
            theta[i] = v;
        }
        prev = theta_p;
    };
    engine.run_phase(
        theta_start,
        Some(&part.principal_idx),
        IterationMode::Reduced,
        StopRule::NormBelow(cfg.threshold),
        k0,
        cfg.max_iterations,
        PhaseHooks {
            pre_iteration: Some(&mut pre),
            perturb,
        },
    )
}

/// Full ML-PQE: train while `‖r‖ > lrnt`, partition on the last training
/// snapshot, fit, then iterate the reduced loop until the reduced residue
/// norm passes the threshold.
pub fn run_ml_pqe(
    h: &PauliSum,
    pool: &AnsatzPool,
    phi0: Determinant,
    cfg: &MlConfig,
    mut perturb: Option<&mut dyn FnMut(&mut ResidueVector)>,
) -> Result<MlPqeOutcome> {
    validate_lrnt(cfg.lrnt)?;
    let engine = PqeEngine::new(h, pool, phi0, cfg.epsilon_res);
    let phase1 = engine.run_phase(
        pool.theta.clone(),
        None,
        IterationMode::Training,
        StopRule::NormAtMost(cfg.lrnt),
        0,
        cfg.max_iterations,
        PhaseHooks {
            pre_iteration: None,
            perturb: perturb.as_mut().map(|p| &mut **p as _),
        },
    )?;
    if !phase1.stopped_on_rule {
        return Err(Error::Invalid(format!(
            "residue norm never crossed LRNT = {} within {} iterations",
            cfg.lrnt, cfg.max_iterations
        )));
    }
    let last_training = phase1
        .records
        .last()
        .expect("phase 1 records at least one iteration");
    let labels = pool.labels();
    let part = partition(&labels, &last_training.theta, cfg.fraction)?;
    let training_set = record_training(&phase1.records, &part, cfg.lrnt, cfg.feature_kind)?;
    let (standardizer, model) = fit(&training_set, cfg.alpha, cfg.gamma)?;

    let prev_theta_p = gather(&last_training.theta, &part.principal_idx);
    let phase2 = run_reduced_phase(
        &engine,
        &part,
        &standardizer,
        &model,
        cfg,
        phase1.theta_after.clone(),
        phase1.records.len(),
        prev_theta_p,
        perturb.as_mut().map(|p| &mut **p as _),
    )?;

    let mut records = phase1.records;
    records.extend(phase2.records);
    let last = records.last().expect("non-empty trace");
    let final_theta = last.theta.clone();
    let final_energy = last.energy;
    let converged = phase2.stopped_on_rule;

    let full_pool = pool.with_theta(final_theta.clone());
    let full_residue_norm = residue_direct(&full_pool, h, phi0, &labels)?.norm2();

    Ok(MlPqeOutcome {
        trace: IterationTrace {
            records,
            converged,
            final_theta,
            final_energy,
        },
        partition: part,
        standardizer,
        model,
        training_set,
        full_residue_norm,
    })
}
