//! Command-line driver: reproducible PQE / ML-PQE experiments from FCIDUMP
//! fixtures, with CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mlpqe::analysis;
use mlpqe::config::{build_system, RunConfig, RunMode, NoiseSettings, System};
use mlpqe::integrals::hf_energy;
use mlpqe::noise::{run_replicas, NoiseStream, NoisyMode};
use mlpqe::pqe::{run_conventional, IterationTrace, ResidueVector};
use mlpqe::statevector::exact_ground_energy;
use mlpqe::surrogate::{partition, run_ml_pqe, FeatureKind, MlPqeOutcome};

#[derive(Parser)]
#[command(name = "mlpqe", version, about = "Projective quantum eigensolver with a kernel-ridge surrogate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one fixture and write trace/summary artifacts
    Run(RunArgs),
    /// Converged-energy comparison across a list of fixtures
    Compare(CompareArgs),
    /// Replica ensembles over a list of noise levels
    NoiseSweep(NoiseSweepArgs),
    /// Post-hoc diagnostics from a JSON trace with parameter snapshots
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Conventional,
    Ml,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    ThetaP,
    ThetaPPlusDelta,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; every flag below overrides its field
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// 2 / 3 / 4 for SD / SDT / SDTQ
    #[arg(long)]
    max_rank: Option<usize>,
    #[arg(long)]
    mp2_cutoff: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    lrnt: Option<f64>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    features: Option<FeaturesArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl CommonArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let cfg = self.to_config_without_fixture()?;
        if cfg.fcidump_path.as_os_str().is_empty() {
            bail!("no FCIDUMP given: set fcidump_path in the config or pass --fcidump");
        }
        Ok(cfg)
    }

    fn to_config_without_fixture(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.fcidump {
            cfg.fcidump_path = p.clone();
        }
        if let Some(v) = self.max_rank {
            cfg.max_rank = v;
        }
        if let Some(v) = self.mp2_cutoff {
            cfg.mp2_cutoff = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.lrnt {
            cfg.lrnt = v;
        }
        if let Some(v) = self.fraction {
            cfg.fraction = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = Some(v);
        }
        if let Some(v) = self.features {
            cfg.features = match v {
                FeaturesArg::ThetaP => FeatureKind::ThetaP,
                FeaturesArg::ThetaPPlusDelta => FeatureKind::ThetaPPlusDelta,
            };
        }
        if self.sigma.is_some() || self.seed.is_some() || self.replicas.is_some() {
            let mut noise = cfg.noise.unwrap_or_default();
            if let Some(v) = self.sigma {
                noise.sigma = v;
            }
            if let Some(v) = self.seed {
                noise.seed = v;
            }
            if let Some(v) = self.replicas {
                noise.replicas = v;
            }
            cfg.noise = Some(noise);
        }
        if let Some(v) = self.mode {
            cfg.mode = match v {
                ModeArg::Conventional => RunMode::Conventional,
                ModeArg::Ml => RunMode::Ml,
                ModeArg::Both => RunMode::Both,
            };
        }
        if let Some(p) = &self.output_dir {
            cfg.output_dir = p.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write JSON traces with full parameter snapshots
    #[arg(long)]
    dump_theta: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Geometry fixtures to compare (FCIDUMP paths)
    #[arg(long, num_args = 1.., required = true)]
    fcidumps: Vec<PathBuf>,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Noise levels, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    /// Per-sigma ridge strengths for the ML runs (same length as --sigmas)
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON trace produced by `run --dump-theta`
    #[arg(long)]
    trace: PathBuf,
    /// Magnitude fraction for the subset distance matrix
    #[arg(long, default_value_t = 0.20)]
    subset_fraction: f64,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cumulative_costs(trace: &IterationTrace) -> (u64, u128) {
    let cx = trace.records.iter().map(|r| r.cost.cx).sum();
    let bound = trace.records.iter().map(|r| r.measurement_bound).sum();
    (cx, bound)
}

struct SingleRun {
    conventional: Option<IterationTrace>,
    ml: Option<MlPqeOutcome>,
}

/// Conventional and/or ML optimization of one system; a configured noise
/// block turns both into single noisy trajectories at `seed`.
fn optimize(cfg: &RunConfig, sys: &System) -> Result<SingleRun> {
    let noise = cfg.noise.filter(|n| n.sigma > 0.0);
    let make_stream = |n: &NoiseSettings| NoiseStream::new(n.sigma, n.seed);
    let conventional = if cfg.mode != RunMode::Ml {
        let mut stream = noise.as_ref().map(make_stream);
        let mut hook = |rv: &mut ResidueVector| {
            if let Some(s) = stream.as_mut() {
                s.perturb(rv)
            }
        };
        Some(run_conventional(
            &sys.hamiltonian,
            &sys.pool,
            sys.reference,
            &cfg.loop_config(),
            Some(&mut hook),
        )?)
    } else {
        None
    };
    let ml = if cfg.mode != RunMode::Conventional {
        let mut stream = noise.as_ref().map(make_stream);
        let mut hook = |rv: &mut ResidueVector| {
            if let Some(s) = stream.as_mut() {
                s.perturb(rv)
            }
        };
        Some(run_ml_pqe(
            &sys.hamiltonian,
            &sys.pool,
            sys.reference,
            &cfg.ml_config(),
            Some(&mut hook),
        )?)
    } else {
        None
    };
    Ok(SingleRun { conventional, ml })
}

fn trace_summary(trace: &IterationTrace, e_fci: f64) -> serde_json::Value {
    let (cx, bound) = cumulative_costs(trace);
    json!({
        "converged": trace.converged,
        "iterations": trace.records.len(),
        "final_energy": trace.final_energy,
        "error_vs_fci": (trace.final_energy - e_fci).abs(),
        "cx_cumulative": cx,
        "measurements_bound_cumulative": bound.to_string(),
    })
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.common.to_config()?;
    let sys = build_system(&cfg)?;
    let out = cfg.resolved_output_dir();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let e_fci = exact_ground_energy(&sys.hamiltonian, sys.ints.n_electrons)?;
    let run = optimize(&cfg, &sys)?;

    let mut summary = BTreeMap::new();
    summary.insert(
        "system".to_string(),
        json!({
            "fcidump": cfg.fcidump_path,
            "n_qubits": sys.basis.n_spin,
            "n_electrons": sys.ints.n_electrons,
            "n_par": sys.pool.n_par(),
            "e_hf": hf_energy(&sys.ints),
            "e_fci": e_fci,
        }),
    );
    if let Some(trace) = &run.conventional {
        write(&out.join("conventional_trace.csv"), &trace.to_csv())?;
        if args.dump_theta {
            write(
                &out.join("conventional_trace.json"),
                &serde_json::to_string_pretty(trace)?,
            )?;
        }
        summary.insert("conventional".to_string(), trace_summary(trace, e_fci));
    }
    if let Some(ml) = &run.ml {
        write(&out.join("ml_trace.csv"), &ml.trace.to_csv())?;
        write(&out.join("model.json"), &ml.model_json())?;
        if args.dump_theta {
            write(
                &out.join("ml_trace.json"),
                &serde_json::to_string_pretty(&ml.trace)?,
            )?;
        }
        let mut s = trace_summary(&ml.trace, e_fci);
        let obj = s.as_object_mut().expect("summary is an object");
        obj.insert("training_iterations".into(), json!(ml.training_iterations()));
        obj.insert("reduced_iterations".into(), json!(ml.reduced_iterations()));
        obj.insert("training_samples".into(), json!(ml.training_set.samples.len()));
        obj.insert("n_p".into(), json!(ml.partition.n_p()));
        obj.insert("full_residue_norm".into(), json!(ml.full_residue_norm));
        summary.insert("ml".to_string(), s);
    }
    if let (Some(conv), Some(ml)) = (&run.conventional, &run.ml) {
        summary.insert(
            "difference".to_string(),
            json!((ml.trace.final_energy - conv.final_energy).abs()),
        );
    }
    write(
        &out.join("summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    println!("artifacts written to {}", out.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    // --fcidumps supplies the geometries, so the base path may stay empty
    let base = args.common.to_config_without_fixture()?;
    let out = base.resolved_output_dir();
    std::fs::create_dir_all(&out)?;

    let mut csv = String::from(
        "fixture,e_conventional,e_ml,abs_difference,n_training,n_ml_total,n_conventional\n",
    );
    println!("{:<28} {:>16} {:>16} {:>12} {:>8} {:>8} {:>8}",
        "fixture", "E_conv", "E_ml", "|diff|", "train", "ml", "conv");
    for fixture in &args.fcidumps {
        let mut cfg = base.clone();
        cfg.fcidump_path = fixture.clone();
        cfg.mode = RunMode::Both;
        let result = (|| -> Result<(f64, f64, usize, usize, usize)> {
            let sys = build_system(&cfg)?;
            let run = optimize(&cfg, &sys)?;
            let conv = run.conventional.expect("mode=both");
            let ml = run.ml.expect("mode=both");
            Ok((
                conv.final_energy,
                ml.trace.final_energy,
                ml.training_iterations(),
                ml.trace.records.len(),
                conv.records.len(),
            ))
        })();
        let name = fixture
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| fixture.display().to_string());
        match result {
            Ok((e_conv, e_ml, n_train, n_ml, n_conv)) => {
                let diff = (e_ml - e_conv).abs();
                csv.push_str(&format!(
                    "{name},{e_conv:.16e},{e_ml:.16e},{diff:.16e},{n_train},{n_ml},{n_conv}\n"
                ));
                println!(
                    "{name:<28} {e_conv:>16.10} {e_ml:>16.10} {diff:>12.3e} {n_train:>8} {n_ml:>8} {n_conv:>8}"
                );
            }
            Err(e) => {
                eprintln!("error: {name}: {e:#}");
                csv.push_str(&format!("{name},error,error,error,-,-,-\n"));
            }
        }
    }
    write(&out.join("comparison.csv"), &csv)?;
    println!("table written to {}", out.join("comparison.csv").display());
    Ok(())
}

fn cmd_noise_sweep(args: &NoiseSweepArgs) -> Result<()> {
    let cfg = args.common.to_config()?;
    if !args.alphas.is_empty() && args.alphas.len() != args.sigmas.len() {
        bail!(
            "--alphas must match --sigmas in length ({} vs {})",
            args.alphas.len(),
            args.sigmas.len()
        );
    }
    let sys = build_system(&cfg)?;
    let out = cfg.resolved_output_dir();
    std::fs::create_dir_all(&out)?;

    let e_fci = exact_ground_energy(&sys.hamiltonian, sys.ints.n_electrons)?;
    // noiseless conventional run provides the wave-function reference
    let clean = run_conventional(
        &sys.hamiltonian,
        &sys.pool,
        sys.reference,
        &cfg.loop_config(),
        None,
    )?;

    let noise = cfg.noise.unwrap_or_default();
    for (i, &sigma) in args.sigmas.iter().enumerate() {
        let spec = NoiseSettings {
            sigma,
            ..noise
        }
        .spec()?;
        let tag = format!("{sigma:e}");
        if cfg.mode != RunMode::Ml {
            let ensemble = run_replicas(
                &sys.hamiltonian,
                &sys.pool,
                sys.reference,
                NoisyMode::Conventional(&cfg.loop_config()),
                &spec,
                e_fci,
                &clean.final_theta,
            )?;
            write(
                &out.join(format!("conventional_sigma{tag}.csv")),
                &ensemble.to_csv(),
            )?;
        }
        if cfg.mode != RunMode::Conventional {
            let mut ml_cfg = cfg.ml_config();
            if let Some(&alpha) = args.alphas.get(i) {
                ml_cfg.alpha = alpha;
            }
            let ensemble = run_replicas(
                &sys.hamiltonian,
                &sys.pool,
                sys.reference,
                NoisyMode::Ml(&ml_cfg),
                &spec,
                e_fci,
                &clean.final_theta,
            )?;
            write(&out.join(format!("ml_sigma{tag}.csv")), &ensemble.to_csv())?;
        }
        println!("sigma = {sigma:e} done");
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let cfg = args.common.to_config()?;
    let sys = build_system(&cfg)?;
    let out = cfg.resolved_output_dir();
    std::fs::create_dir_all(&out)?;

    let text = std::fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let trace: IterationTrace = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.trace.display()))?;

    let full = analysis::distance_matrix(&trace, &sys.pool, None)?;
    write(&out.join("distance_matrix_full.csv"), &full.to_csv())?;

    let part = partition(&sys.pool.labels(), &trace.final_theta, args.subset_fraction)?;
    let sub = analysis::distance_matrix(&trace, &sys.pool, Some(&part.principal))?;
    write(&out.join("distance_matrix_subset.csv"), &sub.to_csv())?;

    let e_fci = exact_ground_energy(&sys.hamiltonian, sys.ints.n_electrons)?;
    write(
        &out.join("energy_error.csv"),
        &analysis::series_csv(&analysis::energy_error(&trace, e_fci)),
    )?;
    write(
        &out.join("wavefunction_error.csv"),
        &analysis::series_csv(&analysis::wavefunction_error(&trace, &trace.final_theta)?),
    )?;

    let rel = full.relative_frobenius_difference(&sub)?;
    println!(
        "subset {} of {} parameters; relative Frobenius difference {rel:.4}",
        part.n_p(),
        sys.pool.n_par()
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::NoiseSweep(args) => cmd_noise_sweep(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
