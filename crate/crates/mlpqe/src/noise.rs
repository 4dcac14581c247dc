//! Gaussian residue noise, replica ensembles, and averaged-parameter
//! training for the noisy study.
//!
//! Every residue entry gets an independent draw from N(0, sigma^2). Draws
//! come from a ChaCha12 stream (portable and seed-reproducible) through the
//! rand_distr Normal sampler; replica i uses seed + i, so adding replicas
//! never changes earlier ones.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzPool;
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::pqe::{
    IterationMode, IterationRecord, IterationTrace, LoopConfig, PhaseHooks, PqeEngine,
    ResidueVector, StopRule, run_conventional,
};
use crate::statevector::Determinant;
use crate::surrogate::{
    fit, partition, run_reduced_phase, FeatureKind, KrrModel, MlConfig, Partition, Standardizer,
    TrainingSample, TrainingSet,
};

pub const DEFAULT_REPLICAS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the residue error, Hartree.
    pub sigma: f64,
    pub seed: u64,
    pub replicas: usize,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64, replicas: usize) -> Result<Self> {
        if sigma < 0.0 {
            return Err(Error::Invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        if replicas == 0 {
            return Err(Error::Invalid("replicas must be >= 1".into()));
        }
        Ok(NoiseSpec {
            sigma,
            seed,
            replicas,
        })
    }
}

/// One replica's deterministic draw stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    sigma: f64,
    rng: ChaCha12Rng,
}

impl NoiseStream {
    pub fn new(sigma: f64, seed: u64) -> Self {
        NoiseStream {
            sigma,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn for_replica(spec: &NoiseSpec, replica: usize) -> Self {
        Self::new(spec.sigma, spec.seed + replica as u64)
    }

    /// Add one independent draw to every entry. `sigma = 0` is bit-exact
    /// identity and consumes no randomness.
    pub fn perturb(&mut self, residues: &mut ResidueVector) {
        if self.sigma == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated non-negative");
        residues.perturb_values(|_, r| r + normal.sample(&mut self.rng));
    }
}

/// Free-function form of [`NoiseStream::perturb`].
pub fn perturb(residues: &mut ResidueVector, stream: &mut NoiseStream) {
    stream.perturb(residues);
}

/// Across-replica mean and spread of the error curves, aligned by iteration;
/// shorter trajectories carry their final value forward.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub iteration: usize,
    pub mean_energy_error: f64,
    pub std_energy_error: f64,
    pub mean_wf_error: f64,
    pub std_wf_error: f64,
}

/// Shared surrogate state of a noisy ML ensemble.
#[derive(Debug, Clone)]
pub struct MlShared {
    pub partition: Partition,
    pub standardizer: Standardizer,
    pub model: KrrModel,
    pub training_set: TrainingSet,
    /// Fixed Phase-1 length, taken from the noiseless LRNT crossing.
    pub n_train: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    pub rows: Vec<EnsembleRow>,
    pub traces: Vec<IterationTrace>,
    pub ml: Option<MlShared>,
}

impl EnsembleOutcome {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("iteration,mean_energy_error,std_energy_error,mean_wf_error,std_wf_error\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.iteration,
                row.mean_energy_error,
                row.std_energy_error,
                row.mean_wf_error,
                row.std_wf_error
            ));
        }
        out
    }

    /// Late-iteration noise floor: the final row's mean energy error.
    pub fn plateau_energy_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.mean_energy_error)
    }
}

/// Which optimization each replica runs.
pub enum NoisyMode<'a> {
    Conventional(&'a LoopConfig),
    Ml(&'a MlConfig),
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn summarize(
    traces: &[IterationTrace],
    e_ref: f64,
    theta_ref: &[f64],
) -> Result<Vec<EnsembleRow>> {
    for trace in traces {
        if let Some(rec) = trace.records.first() {
            if rec.theta.len() != theta_ref.len() {
                return Err(Error::Dimension(format!(
                    "reference parameter vector of length {} against trace with {}",
                    theta_ref.len(),
                    rec.theta.len()
                )));
            }
        }
    }
    let len = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(len);
    for k in 0..len {
        let mut e_errs = Vec::with_capacity(traces.len());
        let mut w_errs = Vec::with_capacity(traces.len());
        for trace in traces {
            // padding: carry the final record when this replica stopped early
            let rec = &trace.records[k.min(trace.records.len() - 1)];
            e_errs.push((rec.energy - e_ref).abs());
            w_errs.push(norm_diff(&rec.theta, theta_ref));
        }
        let stats = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
            (m, var.sqrt())
        };
        let (me, se) = stats(&e_errs);
        let (mw, sw) = stats(&w_errs);
        rows.push(EnsembleRow {
            iteration: k,
            mean_energy_error: me,
            std_energy_error: se,
            mean_wf_error: mw,
            std_wf_error: sw,
        });
    }
    Ok(rows)
}

/// Across-replica mean of the Phase-1 parameter snapshots, one training
/// sample per iteration. All replicas must share the (fixed) Phase-1 length.
pub fn averaged_training(
    replica_records: &[Vec<IterationRecord>],
    part: &Partition,
    lrnt: f64,
    feature_kind: FeatureKind,
) -> Result<TrainingSet> {
    let expected = replica_records
        .first()
        .map(|r| r.len())
        .ok_or_else(|| Error::Invalid("no replicas to average".into()))?;
    for (i, records) in replica_records.iter().enumerate() {
        if records.len() != expected {
            return Err(Error::ReplicaLengthMismatch {
                expected,
                replica: i,
                got: records.len(),
            });
        }
    }
    let averaged = averaged_theta(replica_records);
    let gather = |theta: &[f64], idx: &[usize]| -> Vec<f64> {
        idx.iter().map(|&i| theta[i]).collect()
    };
    let mut samples = Vec::new();
    for k in 0..expected {
        let theta_p = gather(&averaged[k], &part.principal_idx);
        let features = match feature_kind {
            FeatureKind::ThetaP => theta_p,
            FeatureKind::ThetaPPlusDelta => {
                if k == 0 {
                    continue;
                }
                let prev = gather(&averaged[k - 1], &part.principal_idx);
                let mut f = theta_p.clone();
                f.extend(theta_p.iter().zip(&prev).map(|(a, b)| a - b));
                f
            }
        };
        samples.push(TrainingSample {
            features,
            targets: gather(&averaged[k], &part.auxiliary_idx),
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

fn averaged_theta(replica_records: &[Vec<IterationRecord>]) -> Vec<Vec<f64>> {
    let n_rep = replica_records.len() as f64;
    let len = replica_records[0].len();
    (0..len)
        .map(|k| {
            let dim = replica_records[0][k].theta.len();
            let mut mean = vec![0.0; dim];
            for records in replica_records {
                for (acc, x) in mean.iter_mut().zip(&records[k].theta) {
                    *acc += x;
                }
            }
            for acc in &mut mean {
                *acc /= n_rep;
            }
            mean
        })
        .collect()
}

/// Run `spec.replicas` noisy trajectories and reduce them to error curves.
///
/// Conventional replicas are independent end-to-end. ML replicas follow the
/// averaged-training protocol: Phase-1 length is fixed from the noiseless
/// LRNT crossing, the partition and the model are fitted once on the
/// across-replica averaged parameters, and each replica then runs its own
/// reduced loop against the shared model.
pub fn run_replicas(
    h: &PauliSum,
    pool: &AnsatzPool,
    phi0: Determinant,
    mode: NoisyMode<'_>,
    spec: &NoiseSpec,
    e_ref: f64,
    theta_ref: &[f64],
) -> Result<EnsembleOutcome> {
    let (traces, ml) = match mode {
        NoisyMode::Conventional(cfg) => {
            let mut traces = Vec::with_capacity(spec.replicas);
            for i in 0..spec.replicas {
                let mut stream = NoiseStream::for_replica(spec, i);
                let mut hook = |rv: &mut ResidueVector| stream.perturb(rv);
                traces.push(run_conventional(h, pool, phi0, cfg, Some(&mut hook))?);
            }
            (traces, None)
        }
        NoisyMode::Ml(cfg) => run_ml_replicas(h, pool, phi0, cfg, spec)?,
    };
    let rows = summarize(&traces, e_ref, theta_ref)?;
    Ok(EnsembleOutcome { rows, traces, ml })
}

fn run_ml_replicas(
    h: &PauliSum,
    pool: &AnsatzPool,
    phi0: Determinant,
    cfg: &MlConfig,
    spec: &NoiseSpec,
) -> Result<(Vec<IterationTrace>, Option<MlShared>)> {
    let engine = PqeEngine::new(h, pool, phi0, cfg.epsilon_res);

    // Phase-1 length from the noiseless LRNT crossing
    let noiseless = engine.run_phase(
        pool.theta.clone(),
        None,
        IterationMode::Training,
        StopRule::NormAtMost(cfg.lrnt),
        0,
        cfg.max_iterations,
        PhaseHooks::default(),
    )?;
    if !noiseless.stopped_on_rule {
        return Err(Error::Invalid(format!(
            "noiseless residue norm never crossed LRNT = {} within {} iterations",
            cfg.lrnt, cfg.max_iterations
        )));
    }
    let n_train = noiseless.records.len();

    // noisy Phase 1, fixed length
    let mut streams: Vec<NoiseStream> = (0..spec.replicas)
        .map(|i| NoiseStream::for_replica(spec, i))
        .collect();
    let mut phase1 = Vec::with_capacity(spec.replicas);
    for stream in &mut streams {
        let mut hook = |rv: &mut ResidueVector| stream.perturb(rv);
        phase1.push(engine.run_phase(
            pool.theta.clone(),
            None,
            IterationMode::Training,
            StopRule::Iterations(n_train),
            0,
            n_train,
            PhaseHooks {
                pre_iteration: None,
                perturb: Some(&mut hook),
            },
        )?);
    }

    // one partition and one model for the whole ensemble
    let replica_records: Vec<Vec<IterationRecord>> =
        phase1.iter().map(|p| p.records.clone()).collect();
    let averaged = averaged_theta(&replica_records);
    let last_mean = averaged.last().expect("phase 1 non-empty");
    let part = partition(&pool.labels(), last_mean, cfg.fraction)?;
    let training_set = averaged_training(&replica_records, &part, cfg.lrnt, cfg.feature_kind)?;
    let (standardizer, model) = fit(&training_set, cfg.alpha, cfg.gamma)?;

    // each replica continues from its own parameters and noise stream
    let mut traces = Vec::with_capacity(spec.replicas);
    for (p1, stream) in phase1.into_iter().zip(&mut streams) {
        let prev_theta_p: Vec<f64> = part
            .principal_idx
            .iter()
            .map(|&i| p1.records.last().expect("non-empty").theta[i])
            .collect();
        let mut hook = |rv: &mut ResidueVector| stream.perturb(rv);
        let p2 = run_reduced_phase(
            &engine,
            &part,
            &standardizer,
            &model,
            cfg,
            p1.theta_after.clone(),
            n_train,
            prev_theta_p,
            Some(&mut hook),
        )?;
        let mut records = p1.records;
        records.extend(p2.records);
        let last = records.last().expect("non-empty trace");
        traces.push(IterationTrace {
            converged: p2.stopped_on_rule,
            final_theta: last.theta.clone(),
            final_energy: last.energy,
            records,
        });
    }
    Ok((
        traces,
        Some(MlShared {
            partition: part,
            standardizer,
            model,
            training_set,
            n_train,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{generate_pool, init_params_mp2};
    use crate::integrals::{self, mp2_amplitudes};
    use crate::pqe::reference_determinant;
    use crate::statevector::exact_ground_energy;

    fn residues(n: usize) -> ResidueVector {
        ResidueVector::new((0..n).map(|i| (format!("op{i}"), 0.0)).collect())
    }

    #[test]
    fn sigma_zero_is_bit_exact() {
        let mut rv = ResidueVector::new(vec![("a".into(), 0.125), ("b".into(), -3.5)]);
        let before: Vec<f64> = rv.entries().iter().map(|e| e.1).collect();
        let mut stream = NoiseStream::new(0.0, 42);
        stream.perturb(&mut rv);
        for (e, b) in rv.entries().iter().zip(&before) {
            assert_eq!(e.1.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let mut a = residues(8);
        let mut b = residues(8);
        NoiseStream::new(1e-3, 7).perturb(&mut a);
        NoiseStream::new(1e-3, 7).perturb(&mut b);
        assert_eq!(
            a.entries().iter().map(|e| e.1.to_bits()).collect::<Vec<_>>(),
            b.entries().iter().map(|e| e.1.to_bits()).collect::<Vec<_>>()
        );
        let mut c = residues(8);
        NoiseStream::new(1e-3, 8).perturb(&mut c);
        assert_ne!(a.entries()[0].1, c.entries()[0].1);
    }

    #[test]
    fn draw_statistics() {
        let n = 1_000_000;
        let sigma = 1e-3;
        let mut rv = residues(n);
        NoiseStream::new(sigma, 12345).perturb(&mut rv);
        let xs: Vec<f64> = rv.entries().iter().map(|e| e.1).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!((std - sigma).abs() < 0.01 * sigma, "std {std}");
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(-1.0, 0, 1).is_err());
        assert!(NoiseSpec::new(0.0, 0, 0).is_err());
        assert!(NoiseSpec::new(1e-4, 0, DEFAULT_REPLICAS).is_ok());
    }

    #[test]
    fn averaged_training_opposite_thetas_cancel() {
        let part = partition(
            &["a".to_string(), "b".to_string(), "c".to_string()],
            &[0.3, 0.2, 0.1],
            0.34,
        )
        .unwrap();
        let rec = |theta: Vec<f64>, k: usize| IterationRecord {
            k,
            theta,
            residue_norm: 0.01,
            energy: -1.0,
            mode: IterationMode::Training,
            cost: crate::accounting::IterationCost { n_residues: 3, cx: 0 },
            measurement_bound: 0,
        };
        let plus = vec![rec(vec![0.3, 0.2, 0.1], 0), rec(vec![0.4, 0.3, 0.2], 1)];
        let minus = vec![
            rec(vec![-0.3, -0.2, -0.1], 0),
            rec(vec![-0.4, -0.3, -0.2], 1),
        ];
        let ts = averaged_training(&[plus, minus], &part, 0.01, FeatureKind::ThetaP).unwrap();
        for s in &ts.samples {
            assert!(s.features.iter().all(|&x| x == 0.0));
            assert!(s.targets.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn averaged_training_length_mismatch_rejected() {
        let part = partition(&["a".to_string(), "b".to_string()], &[0.2, 0.1], 0.5).unwrap();
        let rec = |k: usize| IterationRecord {
            k,
            theta: vec![0.1, 0.2],
            residue_norm: 0.01,
            energy: -1.0,
            mode: IterationMode::Training,
            cost: crate::accounting::IterationCost { n_residues: 2, cx: 0 },
            measurement_bound: 0,
        };
        let err = averaged_training(
            &[vec![rec(0), rec(1)], vec![rec(0)]],
            &part,
            0.01,
            FeatureKind::ThetaP,
        );
        assert!(matches!(err, Err(Error::ReplicaLengthMismatch { .. })));
    }

    struct System {
        h: PauliSum,
        pool: AnsatzPool,
        phi0: Determinant,
        n_electrons: usize,
    }

    fn load_h4() -> System {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/h4_0.75.fcidump"
        ))
        .unwrap();
        let ints = integrals::parse_fcidump(&text).unwrap();
        let basis = integrals::orbital_energies(&ints).unwrap();
        let h = crate::pauli::hamiltonian_from_integrals(&ints, &basis);
        let pool = generate_pool(&basis, 2).unwrap();
        let t2 = mp2_amplitudes(&basis, &ints).unwrap();
        let pool = init_params_mp2(&pool, &t2);
        System {
            h,
            pool,
            phi0: reference_determinant(ints.n_electrons),
            n_electrons: ints.n_electrons,
        }
    }

    #[test]
    fn sigma_zero_ensemble_reproduces_deterministic_trace() {
        let sys = load_h4();
        let cfg = LoopConfig::default();
        let clean = run_conventional(&sys.h, &sys.pool, sys.phi0, &cfg, None).unwrap();
        let spec = NoiseSpec::new(0.0, 11, 3).unwrap();
        let out = run_replicas(
            &sys.h,
            &sys.pool,
            sys.phi0,
            NoisyMode::Conventional(&cfg),
            &spec,
            clean.final_energy,
            &clean.final_theta,
        )
        .unwrap();
        for trace in &out.traces {
            assert_eq!(trace.records.len(), clean.records.len());
            assert_eq!(
                trace.final_energy.to_bits(),
                clean.final_energy.to_bits()
            );
        }
        assert_eq!(out.rows.last().unwrap().std_energy_error, 0.0);
    }

    #[test]
    fn single_replica_summary_has_zero_std() {
        let sys = load_h4();
        let cfg = LoopConfig {
            max_iterations: 20,
            ..LoopConfig::default()
        };
        let clean = run_conventional(&sys.h, &sys.pool, sys.phi0, &cfg, None).unwrap();
        let spec = NoiseSpec::new(1e-4, 5, 1).unwrap();
        let out = run_replicas(
            &sys.h,
            &sys.pool,
            sys.phi0,
            NoisyMode::Conventional(&cfg),
            &spec,
            clean.final_energy,
            &clean.final_theta,
        )
        .unwrap();
        for row in &out.rows {
            assert_eq!(row.std_energy_error, 0.0);
            assert_eq!(row.std_wf_error, 0.0);
        }
    }

    #[test]
    fn seed_isolation_under_growth() {
        let sys = load_h4();
        let cfg = LoopConfig {
            max_iterations: 10,
            ..LoopConfig::default()
        };
        let run = |replicas: usize| {
            let spec = NoiseSpec::new(1e-4, 99, replicas).unwrap();
            run_replicas(
                &sys.h,
                &sys.pool,
                sys.phi0,
                NoisyMode::Conventional(&cfg),
                &spec,
                0.0,
                &vec![0.0; sys.pool.n_par()],
            )
            .unwrap()
        };
        let two = run(2);
        let three = run(3);
        for (a, b) in two.traces.iter().zip(&three.traces) {
            assert_eq!(a.final_energy.to_bits(), b.final_energy.to_bits());
        }
    }

    #[test]
    fn noisy_ml_ensemble_smoke() {
        let sys = load_h4();
        let clean = run_conventional(
            &sys.h,
            &sys.pool,
            sys.phi0,
            &LoopConfig::default(),
            None,
        )
        .unwrap();
        let fci = exact_ground_energy(&sys.h, sys.n_electrons).unwrap();
        let cfg = MlConfig {
            lrnt: 0.02,
            alpha: 1e-6,
            max_iterations: 60,
            ..MlConfig::default()
        };
        let spec = NoiseSpec::new(1e-4, 3, 4).unwrap();
        let out = run_replicas(
            &sys.h,
            &sys.pool,
            sys.phi0,
            NoisyMode::Ml(&cfg),
            &spec,
            fci,
            &clean.final_theta,
        )
        .unwrap();
        let ml = out.ml.as_ref().unwrap();
        assert!(ml.n_train >= 2);
        assert_eq!(out.traces.len(), 4);
        for trace in &out.traces {
            assert_eq!(
                trace
                    .records
                    .iter()
                    .filter(|r| r.mode == IterationMode::Training)
                    .count(),
                ml.n_train
            );
        }
        // plateau within two orders of magnitude of sigma for this benign case
        let plateau = out.plateau_energy_error();
        assert!(plateau.is_finite() && plateau < 1e-2, "plateau {plateau}");
        let csv = out.to_csv();
        assert!(csv.starts_with("iteration,mean_energy_error"));
        assert_eq!(csv.lines().count(), out.rows.len() + 1);
    }
}
