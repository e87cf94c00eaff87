//! `btrank`: fit Bradley-Terry rankings from pairwise comparison data and
//! stress-test them under adversarial vote flips.
//!
//! Exit codes: 0 on success, 1 on a domain error (non-identifiable
//! instance, unreachable target, failed run), 2 on usage or input parse
//! errors. Every command accepts `--seed` and is bit-reproducible given it.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use btrank::attacks::{self, AttackAlgorithm, AttackConfig, AttackResult};
use btrank::data::{
    generate_synthetic, load_dataset, parse_ballots, serialize_dataset, IncompletePolicy,
    StrengthLaw, SyntheticSpec,
};
use btrank::exec::with_threads;
use btrank::experiments::{
    budget_sweep, collusion_threshold, emit_results, hyperparameter_sweep, DatasetSource,
    OutputFormat, ResultTable, RunManifest, SuccessCriterion, SweepAxis, SweepError, SweepSpec,
    TargetSpec, ThresholdSpec,
};
use btrank::mle::{self, check_connectivity, FitConfig};
use btrank::model::{aggregate, ranking_from_strengths, ComparisonDataset, Ranking};

#[derive(Parser)]
#[command(
    name = "btrank",
    version,
    about = "Bradley-Terry ranking from pairwise comparisons, with manipulation stress-testing"
)]
struct Cli {
    /// Base RNG seed; all randomness in a run derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic electorate and write it as a dataset file.
    Generate(GenerateArgs),
    /// Fit candidate strengths and print the ranking.
    Fit(FitArgs),
    /// Run one manipulation attack against a dataset.
    Attack(AttackArgs),
    /// Sweep attacks over budgets or hyperparameters, emitting a table.
    Sweep(SweepArgs),
    /// Find the minimal coalition size that forces a target ranking.
    Threshold(ThresholdArgs),
    /// Convert a ranked-ballot file into a pairwise dataset file.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of candidates.
    #[arg(long)]
    m: usize,
    /// Number of voters.
    #[arg(long)]
    voters: usize,
    /// Distinct pairs each voter judges.
    #[arg(long)]
    pairs_per_voter: usize,
    /// Ground-truth strength law: uniform or geometric.
    #[arg(long, default_value = "uniform")]
    law: String,
    /// Decay ratio for the geometric law.
    #[arg(long)]
    rho: Option<f64>,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    /// Optional run-manifest JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FitOpts {
    /// Convergence tolerance on the max parameter change per iteration.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap for the solver.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Pseudo-count added to every off-diagonal count.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

impl FitOpts {
    fn to_config(&self) -> FitConfig {
        FitConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            regularization: self.epsilon,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input dataset file.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    fit: FitOpts,
}

#[derive(Args)]
struct AttackArgs {
    /// Input dataset file.
    #[arg(long)]
    data: PathBuf,
    /// RF, GF, RSA, or ASSA.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: AttackAlgorithm,
    /// Target ranking as comma-separated candidate names, best first.
    #[arg(long)]
    target: String,
    /// Flip budget as an absolute count.
    #[arg(long, conflicts_with = "budget_fraction")]
    budget: Option<usize>,
    /// Flip budget as a fraction of the coalition pool, rounded up.
    #[arg(long)]
    budget_fraction: Option<f64>,
    /// Subsets per partition round (RSA/ASSA).
    #[arg(long, default_value_t = 5)]
    subsets: usize,
    /// Partition/pruning rounds (RSA/ASSA).
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Coalition as comma-separated voter indices (default: all voters).
    #[arg(long, conflicts_with = "coalition_size")]
    coalition: Option<String>,
    /// Random coalition of this size, drawn from the seed.
    #[arg(long)]
    coalition_size: Option<usize>,
    /// Write the manipulated dataset here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional run-manifest JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    fit: FitOpts,
}

#[derive(Args)]
struct SweepArgs {
    /// Input dataset file; omit to sweep per-trial synthetic electorates.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic electorate: number of candidates.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Synthetic electorate: number of voters.
    #[arg(long, default_value_t = 20)]
    voters: usize,
    /// Synthetic electorate: distinct pairs judged per voter.
    #[arg(long, default_value_t = 6)]
    pairs_per_voter: usize,
    /// Synthetic strength law: uniform or geometric.
    #[arg(long, default_value = "geometric")]
    law: String,
    /// Decay ratio for the geometric law.
    #[arg(long, default_value_t = 0.7)]
    rho: f64,
    /// Comma-separated algorithms (RF,GF,RSA,ASSA).
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm, default_value = "RF,GF,RSA,ASSA")]
    algorithms: Vec<AttackAlgorithm>,
    /// Comma-separated budget fractions of the coalition pool.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.2")]
    fractions: Vec<f64>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    subsets: usize,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Fixed target ranking as comma-separated candidate names, best first.
    #[arg(long, conflicts_with = "target_perm")]
    target: Option<String>,
    /// Relative target: a position permutation applied to each trial's
    /// initial fitted ranking, e.g. 1,0,2,3 swaps the top two.
    #[arg(long)]
    target_perm: Option<String>,
    /// Success criterion: exact or improved.
    #[arg(long, default_value = "exact", value_parser = parse_criterion)]
    criterion: SuccessCriterion,
    /// Output format for --out: csv or json.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
    /// Write the machine-readable table here (stdout shows a summary).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional run-manifest JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Sweep a hyperparameter instead of the budget: subsets or iterations.
    #[arg(long, value_parser = parse_axis, requires = "values")]
    axis: Option<SweepAxis>,
    /// Comma-separated values for --axis.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    #[command(flatten)]
    fit: FitOpts,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Input dataset file.
    #[arg(long)]
    data: PathBuf,
    /// RF, GF, RSA, or ASSA.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: AttackAlgorithm,
    /// Target ranking as comma-separated candidate names, best first.
    #[arg(long)]
    target: String,
    /// Sampled coalitions per probed size.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    subsets: usize,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    /// Optional run-manifest JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    fit: FitOpts,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input ranked-ballot file.
    #[arg(long)]
    ballots: PathBuf,
    /// Incomplete-ballot policy: ranked-only or ranked-over-unranked.
    #[arg(long, default_value = "ranked-only", value_parser = parse_policy)]
    policy: IncompletePolicy,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
}

fn parse_algorithm(s: &str) -> Result<AttackAlgorithm, String> {
    s.parse()
}
fn parse_criterion(s: &str) -> Result<SuccessCriterion, String> {
    s.parse()
}
fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}
fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse()
}
fn parse_policy(s: &str) -> Result<IncompletePolicy, String> {
    s.parse()
}

/// Errors carrying their exit code: usage/parse problems exit 2, domain
/// failures exit 1.
enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn domain(msg: impl ToString) -> CliError {
    CliError::Domain(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    let outcome = with_threads(jobs, || run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(cli.seed, args),
        Command::Fit(args) => cmd_fit(args),
        Command::Attack(args) => cmd_attack(cli.seed, args),
        Command::Sweep(args) => cmd_sweep(cli.seed, args),
        Command::Threshold(args) => cmd_threshold(cli.seed, args),
        Command::Convert(args) => cmd_convert(args),
    }
}

fn cmd_generate(seed: u64, args: GenerateArgs) -> Result<(), CliError> {
    let strength_law = parse_law(&args.law, args.rho)?;
    let spec = SyntheticSpec {
        m: args.m,
        n_voters: args.voters,
        comparisons_per_voter: args.pairs_per_voter,
        strength_law,
        seed,
    };
    let (dataset, truth) = generate_synthetic(&spec).map_err(domain)?;
    write_dataset(&dataset, &args.out)?;
    println!(
        "generated {} comparisons from {} voters over {} candidates -> {}",
        dataset.len(),
        dataset.n_voters(),
        dataset.num_candidates(),
        args.out.display()
    );
    let truth_ranking = ranking_from_strengths(&truth);
    println!(
        "ground-truth ranking: {}",
        format_ranking(&truth_ranking, &dataset)
    );
    if let Some(path) = &args.manifest {
        let config = serde_json::json!({
            "m": args.m,
            "voters": args.voters,
            "pairs_per_voter": args.pairs_per_voter,
            "law": args.law,
            "rho": args.rho,
            "out": args.out.display().to_string(),
        });
        write_manifest(path, "generate", config, seed, &[])?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let dataset = read_dataset(&args.data)?;
    let counts = aggregate(&dataset);
    let config = args.fit.to_config();

    let raw_report = check_connectivity(&counts);
    if !raw_report.strongly_connected && config.regularization > 0.0 {
        eprintln!(
            "warning: comparison graph is not strongly connected (components: {:?}); \
             relying on regularization epsilon = {}",
            raw_report.members(),
            config.regularization
        );
    }

    let result = mle::fit(&counts, &config).map_err(domain)?;
    if !result.converged {
        eprintln!(
            "warning: solver hit the iteration cap ({}) before converging",
            config.max_iters
        );
    }
    println!(
        "dataset: {} candidates, {} comparisons from {} voters",
        dataset.num_candidates(),
        dataset.len(),
        dataset.n_voters()
    );
    println!("log-likelihood: {:.6}", result.log_likelihood);
    println!(
        "iterations: {} ({})",
        result.iterations,
        if result.converged {
            "converged"
        } else {
            "not converged"
        }
    );
    println!("strengths:");
    for (i, name) in dataset.candidates().names().iter().enumerate() {
        println!("  {name}  {:.6}", result.strengths.get(i));
    }
    let ranking = ranking_from_strengths(&result.strengths);
    println!("ranking: {}", format_ranking(&ranking, &dataset));
    Ok(())
}

fn cmd_attack(seed: u64, args: AttackArgs) -> Result<(), CliError> {
    let dataset = read_dataset(&args.data)?;
    let target = parse_target(&args.target, &dataset)?;
    let coalition = resolve_coalition(
        &dataset,
        args.coalition.as_deref(),
        args.coalition_size,
        seed,
    )?;
    let pool_len = attacks::coalition_pool(&dataset, &coalition)
        .map_err(domain)?
        .len();
    let budget = match (args.budget, args.budget_fraction) {
        (Some(k), None) => k,
        (None, Some(f)) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(usage(format!(
                    "--budget-fraction must lie in (0, 1], got {f}"
                )));
            }
            (f * pool_len as f64).ceil() as usize
        }
        (None, None) => return Err(usage("one of --budget or --budget-fraction is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let config = AttackConfig {
        target,
        budget,
        coalition,
        seed,
        subsets: args.subsets,
        iterations: args.iterations,
        fit: args.fit.to_config(),
    };
    let result = attacks::run(args.algorithm, &dataset, &config).map_err(domain)?;
    print_attack_report(args.algorithm, &config, &result, pool_len, &dataset);

    if let Some(path) = &args.out {
        write_dataset(&result.manipulated, path)?;
        println!("manipulated dataset written to {}", path.display());
    }
    if let Some(path) = &args.manifest {
        let config_json = serde_json::json!({
            "data": args.data.display().to_string(),
            "algorithm": args.algorithm.to_string(),
            "target": args.target,
            "budget": budget,
            "subsets": args.subsets,
            "iterations": args.iterations,
            "coalition_size": config.coalition.len(),
            "tol": args.fit.tol,
            "max_iters": args.fit.max_iters,
            "epsilon": args.fit.epsilon,
        });
        write_manifest(path, "attack", config_json, seed, &[&args.data])?;
    }
    Ok(())
}

fn print_attack_report(
    algorithm: AttackAlgorithm,
    config: &AttackConfig,
    result: &AttackResult,
    pool_len: usize,
    dataset: &ComparisonDataset,
) {
    println!("algorithm: {algorithm}");
    println!("coalition pool: {pool_len} comparisons");
    println!("target: {}", format_ranking(&config.target, dataset));
    println!("initial distance: {}", result.initial_distance);
    println!("final distance: {}", result.final_distance);
    println!(
        "flips used: {} of budget {}",
        result.flips.len(),
        config.budget
    );
    println!("trajectory (flips, distance):");
    for (flips, distance) in &result.trajectory {
        println!("  {flips:>6}  {distance}");
    }
}

fn cmd_sweep(seed: u64, args: SweepArgs) -> Result<(), CliError> {
    let source = match &args.data {
        Some(path) => DatasetSource::File(path.clone()),
        None => DatasetSource::Synthetic(SyntheticSpec {
            m: args.m,
            n_voters: args.voters,
            comparisons_per_voter: args.pairs_per_voter,
            strength_law: parse_law(&args.law, Some(args.rho))?,
            seed: btrank::experiments::mix_seed(seed, 0x6461_7461),
        }),
    };
    let target = match (&args.target, &args.target_perm) {
        (Some(names), None) => {
            let path = args
                .data
                .as_ref()
                .ok_or_else(|| usage("--target with names requires --data; use --target-perm for synthetic sweeps"))?;
            let dataset = read_dataset(path)?;
            TargetSpec::Fixed(parse_target(names, &dataset)?)
        }
        (None, Some(perm)) => TargetSpec::FromInitial(parse_indices(perm)?),
        (None, None) => return Err(usage("one of --target or --target-perm is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let spec = SweepSpec {
        source,
        algorithms: args.algorithms.clone(),
        budget_fractions: args.fractions.clone(),
        trials: args.trials,
        target,
        subsets: args.subsets,
        iterations: args.iterations,
        coalition: None,
        criterion: args.criterion,
        seed,
        fit: args.fit.to_config(),
    };
    let table = match (args.axis, &args.values) {
        (Some(axis), Some(values)) => {
            hyperparameter_sweep(axis, values, &spec).map_err(sweep_error)?
        }
        _ => budget_sweep(&spec).map_err(sweep_error)?,
    };

    print_table(&table);
    if let Some(path) = &args.out {
        let file = File::create(path)
            .map_err(|e| domain(format!("cannot create {}: {e}", path.display())))?;
        emit_results(&table, args.format, BufWriter::new(file)).map_err(domain)?;
        println!("results written to {}", path.display());
    }
    if let Some(path) = &args.manifest {
        let config_json = serde_json::json!({
            "data": args.data.as_ref().map(|p| p.display().to_string()),
            "m": args.m,
            "voters": args.voters,
            "pairs_per_voter": args.pairs_per_voter,
            "law": args.law,
            "rho": args.rho,
            "algorithms": args.algorithms.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "fractions": args.fractions,
            "trials": args.trials,
            "subsets": args.subsets,
            "iterations": args.iterations,
            "target": args.target,
            "target_perm": args.target_perm,
            "criterion": match args.criterion {
                SuccessCriterion::Exact => "exact",
                SuccessCriterion::Improved => "improved",
            },
            "axis": args.axis.map(|a| format!("{a:?}").to_lowercase()),
            "values": args.values,
        });
        let inputs: Vec<&Path> = args.data.iter().map(PathBuf::as_path).collect();
        write_manifest(path, "sweep", config_json, seed, &inputs)?;
    }
    Ok(())
}

fn cmd_threshold(seed: u64, args: ThresholdArgs) -> Result<(), CliError> {
    let dataset = read_dataset(&args.data)?;
    let target = parse_target(&args.target, &dataset)?;
    let spec = ThresholdSpec {
        subsets: args.subsets,
        iterations: args.iterations,
        fit: args.fit.to_config(),
        seed,
        trials_per_size: args.trials,
    };
    let result =
        collusion_threshold(&dataset, &target, args.algorithm, &spec).map_err(sweep_error)?;
    println!("electorate: {} voters", dataset.n_voters());
    println!("algorithm: {}", args.algorithm);
    println!("target: {}", format_ranking(&target, &dataset));
    println!(
        "collusion threshold: {} voters ({:.1}% of the electorate)",
        result.threshold,
        result.fraction * 100.0
    );
    println!("probed sizes (size, success fraction):");
    for (size, fraction) in &result.probes {
        println!("  {size:>6}  {fraction:.2}");
    }
    if let Some(path) = &args.manifest {
        let config_json = serde_json::json!({
            "data": args.data.display().to_string(),
            "algorithm": args.algorithm.to_string(),
            "target": args.target,
            "trials": args.trials,
            "subsets": args.subsets,
            "iterations": args.iterations,
            "threshold": result.threshold,
            "fraction": result.fraction,
        });
        write_manifest(path, "threshold", config_json, seed, &[&args.data])?;
    }
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<(), CliError> {
    let file = File::open(&args.ballots)
        .map_err(|e| usage(format!("cannot open {}: {e}", args.ballots.display())))?;
    let ballots = parse_ballots(BufReader::new(file)).map_err(|e| usage(e.to_string()))?;
    let dataset = ballots.to_dataset(args.policy).map_err(|e| usage(e.to_string()))?;
    write_dataset(&dataset, &args.out)?;
    println!(
        "converted {} ballots into {} comparisons over {} candidates -> {}",
        ballots.ballots.len(),
        dataset.len(),
        dataset.num_candidates(),
        args.out.display()
    );
    Ok(())
}

fn parse_law(law: &str, rho: Option<f64>) -> Result<StrengthLaw, CliError> {
    match law {
        "uniform" => Ok(StrengthLaw::Uniform),
        "geometric" => {
            let ratio = rho.ok_or_else(|| usage("--law geometric requires --rho"))?;
            Ok(StrengthLaw::Geometric { ratio })
        }
        other => Err(usage(format!(
            "unknown law {other:?}, expected uniform or geometric"
        ))),
    }
}

fn parse_target(names: &str, dataset: &ComparisonDataset) -> Result<Ranking, CliError> {
    let order: Vec<usize> = names
        .split(',')
        .map(|raw| {
            let name = raw.trim();
            dataset
                .candidates()
                .index_of(name)
                .ok_or_else(|| usage(format!("unknown candidate {name:?} in target")))
        })
        .collect::<Result<_, _>>()?;
    Ranking::new(order).map_err(|e| usage(format!("target is not a full ranking: {e}")))
}

fn parse_indices(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("malformed index {x:?}")))
        })
        .collect()
}

fn resolve_coalition(
    dataset: &ComparisonDataset,
    coalition: Option<&str>,
    coalition_size: Option<usize>,
    seed: u64,
) -> Result<BTreeSet<usize>, CliError> {
    match (coalition, coalition_size) {
        (Some(list), None) => Ok(parse_indices(list)?.into_iter().collect()),
        (None, Some(size)) => {
            if size == 0 || size > dataset.n_voters() {
                return Err(usage(format!(
                    "--coalition-size must lie in 1..={}",
                    dataset.n_voters()
                )));
            }
            use btrank::experiments::mix_seed;
            use rand::SeedableRng;
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xC0A1_1710));
            Ok(rand::seq::index::sample(&mut rng, dataset.n_voters(), size)
                .into_iter()
                .collect())
        }
        (None, None) => Ok((0..dataset.n_voters()).collect()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn format_ranking(ranking: &Ranking, dataset: &ComparisonDataset) -> String {
    ranking
        .order()
        .iter()
        .map(|&c| dataset.candidates().name(c))
        .collect::<Vec<_>>()
        .join(" > ")
}

fn print_table(table: &ResultTable) {
    println!(
        "{:<10} {:>16} {:>7} {:>14} {:>15} {:>16} {:>13} {:>11} {:>9}",
        "algorithm",
        table.axis,
        "trials",
        "mean_final_kd",
        "mean_reduction",
        "mean_rank_shift",
        "success_rate",
        "mean_flips",
        "seconds"
    );
    for row in &table.rows {
        println!(
            "{:<10} {:>16} {:>7} {:>14.3} {:>15.3} {:>16.3} {:>13.3} {:>11.2} {:>9.3}",
            row.algorithm.to_string(),
            row.axis_value,
            row.trials,
            row.mean_final_kd,
            row.mean_reduction,
            row.mean_rank_shift,
            row.success_rate,
            row.mean_flips,
            row.seconds
        );
    }
}

fn read_dataset(path: &Path) -> Result<ComparisonDataset, CliError> {
    let file =
        File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    load_dataset(BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_dataset(dataset: &ComparisonDataset, path: &Path) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| domain(format!("cannot create {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    serialize_dataset(dataset, &mut writer).map_err(domain)?;
    writer.flush().map_err(domain)
}

/// Input parse problems exit 2; everything else from a sweep is a domain
/// failure.
fn sweep_error(e: SweepError) -> CliError {
    match &e {
        SweepError::Data(_) | SweepError::Io(_) => usage(e.to_string()),
        _ => domain(e),
    }
}

fn write_manifest(
    path: &Path,
    command: &str,
    config: serde_json::Value,
    seed: u64,
    inputs: &[&Path],
) -> Result<(), CliError> {
    let mut digests = BTreeMap::new();
    for input in inputs {
        let bytes = std::fs::read(input)
            .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
        let digest = Sha256::digest(&bytes);
        digests.insert(
            input.display().to_string(),
            format!("sha256:{}", hex_string(&digest)),
        );
    }
    let manifest = RunManifest {
        command: command.to_string(),
        config,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_digests: digests,
    };
    let file =
        File::create(path).map_err(|e| domain(format!("cannot create {}: {e}", path.display())))?;
    manifest.write(BufWriter::new(file)).map_err(domain)?;
    println!("manifest written to {}", path.display());
    Ok(())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
