use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use netboot::bootstrap::{bootstrap_ci, choose_q, SelectionSize};
use netboot::community::{bethe_hessian_k, ecv_auc_k};
use netboot::generators::{generate_er, generate_sbm, SbmParams};
use netboot::graph::{read_edge_list, write_edge_list, Graph};
use netboot::regression::{
    beta_uncertainty, lambda2_path, stability_selection, CohesionBeta, CohesionData, DroppedNodes,
};
use netboot::statistics::PartialEstimator;
use netboot::subsampling::{pair_sample, SamplingPlan};
use netboot::{Resampler, Scheme, StatisticId, Stream};

use netboot_cli::config::{ExperimentConfig, Task};
use netboot_cli::{
    configure_threads, graph_statistic, read_regression_csv, run_experiment, write_csv,
    HarnessError, Result,
};

#[derive(Parser)]
#[command(
    name = "netboot",
    version,
    about = "Bootstrap confidence intervals for network statistics by subsampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an Erdős–Rényi or block-model graph and write its edge list.
    Generate(GenerateArgs),
    /// Percentile bootstrap interval at one fraction q.
    Ci(CiArgs),
    /// Choose q by the double bootstrap.
    ChooseQ(ChooseQArgs),
    /// Estimate the number of communities.
    Community(CommunityArgs),
    /// Intervals for cohesion-regression coefficients.
    Regress(RegressArgs),
    /// Stability selection for the cohesion lasso.
    Stabsel(StabselArgs),
    /// Run a JSON-configured Monte-Carlo experiment.
    Experiment(ExperimentArgs),
    /// Intervals and size/density regressions for a set of edge lists.
    Realdata(RealdataArgs),
}

#[derive(Args)]
struct GraphInput {
    /// Edge list, one `i j` pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Node ids in the file start at 1.
    #[arg(long)]
    one_based: bool,
}

impl GraphInput {
    fn load(&self) -> Result<Graph> {
        Ok(read_edge_list(&self.graph, self.one_based)?)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "er")]
    model: String,
    /// Node count (Erdős–Rényi).
    #[arg(long)]
    n: Option<usize>,
    /// Community sizes (block model).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    rho: f64,
    /// Within/between probability ratio (block model).
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long, default_value_t = 200)]
    b: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit with status 3 when a run is degenerate.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value = "triangle_density")]
    stat: StatisticId,
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    q: f64,
    #[command(flatten)]
    boot: BootstrapArgs,
    /// Triangle estimator on row and pair samples.
    #[arg(long, default_value = "masked")]
    estimator: PartialEstimator,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// Full run record.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Summary row; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ChooseQArgs {
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, default_value = "triangle_density")]
    stat: StatisticId,
    #[arg(long)]
    scheme: Scheme,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8"
    )]
    candidates: Vec<f64>,
    #[command(flatten)]
    boot: BootstrapArgs,
    /// Inner bootstrap size; `--b` when absent.
    #[arg(long)]
    b_inner: Option<usize>,
    #[arg(long, default_value = "masked")]
    estimator: PartialEstimator,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CommunityArgs {
    #[command(flatten)]
    input: GraphInput,
    /// `bh` or `ecv`.
    #[arg(long, default_value = "bh")]
    method: String,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// Observed pair fraction for edge cross-validation.
    #[arg(long, default_value_t = 0.9)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RegressionInput {
    #[command(flatten)]
    input: GraphInput,
    /// CSV with a header row, then `y, x_1, ..., x_p` per node.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    /// `node`, `row`, `pair` or `naive`.
    #[arg(long)]
    scheme: String,
    /// Fraction q (ignored for `naive`).
    #[arg(long, default_value_t = 0.1)]
    q: f64,
    #[arg(long, default_value = "zero-pad")]
    dropped: String,
}

impl RegressionInput {
    fn resampler(&self) -> Result<Resampler> {
        if self.scheme == "naive" {
            return Ok(Resampler::Naive);
        }
        Ok(Resampler::plan(self.scheme.parse()?, self.q)?)
    }

    fn data(&self) -> Result<(Graph, CohesionData)> {
        let g = self.input.load()?;
        let (x, y) = read_regression_csv(&self.data)?;
        let dropped = match self.dropped.as_str() {
            "zero-pad" => DroppedNodes::ZeroPad,
            "fix-zero" => DroppedNodes::FixZero,
            other => return Err(config_error("dropped", format!("unknown option `{other}`"))),
        };
        Ok((
            g,
            CohesionData::new(x, y, self.lambda1)?.with_dropped(dropped),
        ))
    }
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    reg: RegressionInput,
    #[command(flatten)]
    boot: BootstrapArgs,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Per-coordinate intervals; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct StabselArgs {
    #[command(flatten)]
    reg: RegressionInput,
    /// Explicit λ2 values; a log-spaced path otherwise.
    #[arg(long, value_delimiter = ',')]
    lambda2: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    path_points: usize,
    #[arg(long, default_value_t = 100)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Selection frequencies; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` of the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RealdataArgs {
    /// Edge-list files, one network each.
    #[arg(required = true)]
    graphs: Vec<PathBuf>,
    #[arg(long)]
    one_based: bool,
    #[arg(long, value_delimiter = ',', default_value = "node")]
    schemes: Vec<Scheme>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8"
    )]
    candidates: Vec<f64>,
    #[command(flatten)]
    boot: BootstrapArgs,
    #[arg(long)]
    b_inner: Option<usize>,
    /// Regress on log n instead of n.
    #[arg(long)]
    log_n: bool,
    #[arg(long, default_value = "netboot-out")]
    output_dir: PathBuf,
}

fn config_error(field: &str, message: impl Into<String>) -> HarnessError {
    netboot_cli::ConfigError {
        field: field.into(),
        message: message.into(),
    }
    .into()
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_rows<T: Serialize>(path: Option<&PathBuf>, rows: &[T]) -> Result<()> {
    match path {
        Some(path) => write_csv(path, rows),
        None => {
            let mut writer = csv::Writer::from_writer(std::io::stdout());
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
            Ok(())
        }
    }
}

fn strict_check(strict: bool, degenerate: bool, what: &str) -> Result<()> {
    if degenerate {
        eprintln!("warning: {what} is degenerate (at least half of the replicates undefined)");
        if strict {
            return Err(HarnessError::Degenerate(what.to_string()));
        }
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut rng = Stream::new(args.seed).rng();
    let g = match args.model.as_str() {
        "er" => {
            let n = args
                .n
                .ok_or_else(|| config_error("n", "required for the er model"))?;
            generate_er(n, args.rho, &mut rng)?
        }
        "sbm" => {
            if args.sizes.is_empty() {
                return Err(config_error("sizes", "required for the sbm model"));
            }
            generate_sbm(&SbmParams::new(args.sizes, args.rho, args.t), &mut rng)?
        }
        other => return Err(config_error("model", format!("unknown model `{other}`"))),
    };
    match args.out {
        Some(path) => write_edge_list(&g, std::fs::File::create(path)?)?,
        None => write_edge_list(&g, std::io::stdout().lock())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct CiRow {
    q: f64,
    coordinate: usize,
    lower: f64,
    upper: f64,
    width: f64,
    frac_degenerate: f64,
}

fn ci(args: CiArgs) -> Result<()> {
    let g = args.input.load()?;
    let stat = graph_statistic(args.stat, args.estimator, args.k_max)?;
    let plan = Resampler::plan(args.scheme, args.q)?;
    let run = bootstrap_ci(
        &g,
        stat.as_ref(),
        plan,
        args.boot.b,
        args.boot.alpha,
        Stream::new(args.boot.seed),
    )?;
    if let Some(path) = &args.json {
        write_json(path, &run)?;
    }
    let rows: Vec<CiRow> = run
        .intervals
        .iter()
        .enumerate()
        .map(|(coordinate, iv)| CiRow {
            q: args.q,
            coordinate,
            lower: iv.lower,
            upper: iv.upper,
            width: iv.width(),
            frac_degenerate: run.degenerate_fraction(),
        })
        .collect();
    write_rows(args.csv.as_ref(), &rows)?;
    if run.warning {
        eprintln!(
            "warning: {:.1}% of replicates degenerate",
            100.0 * run.degenerate_fraction()
        );
    }
    strict_check(args.boot.strict, run.degenerate_run, "bootstrap run")
}

#[derive(Serialize)]
struct ChooseRow {
    q: f64,
    width: f64,
    coverage: f64,
    degenerate: bool,
    chosen: bool,
}

fn choose(args: ChooseQArgs) -> Result<()> {
    let g = args.input.load()?;
    let stat = graph_statistic(args.stat, args.estimator, args.k_max)?;
    let size = SelectionSize {
        outer: args.boot.b,
        inner: args.b_inner.unwrap_or(args.boot.b),
    };
    let selection = match choose_q(
        &g,
        stat.as_ref(),
        args.scheme,
        &args.candidates,
        size,
        args.boot.alpha,
        Stream::new(args.boot.seed),
    ) {
        Err(netboot::Error::SelectionFailed) if !args.boot.strict => {
            eprintln!("warning: every candidate produced a degenerate run");
            return Err(netboot::Error::SelectionFailed.into());
        }
        Err(netboot::Error::SelectionFailed) => {
            return Err(HarnessError::Degenerate("every candidate".into()))
        }
        other => other?,
    };
    if let Some(path) = &args.json {
        write_json(path, &selection)?;
    }
    let rows: Vec<ChooseRow> = selection
        .candidates
        .iter()
        .zip(&selection.widths)
        .zip(&selection.coverages)
        .zip(&selection.degenerate)
        .map(|(((&q, &width), &coverage), &degenerate)| ChooseRow {
            q,
            width,
            coverage,
            degenerate,
            chosen: q == selection.chosen,
        })
        .collect();
    write_rows(args.csv.as_ref(), &rows)?;
    let chosen_degenerate = selection.degenerate[selection.chosen_index()];
    strict_check(args.boot.strict, chosen_degenerate, "chosen fraction")
}

fn community(args: CommunityArgs) -> Result<()> {
    let g = args.input.load()?;
    let estimate = match args.method.as_str() {
        "bh" => bethe_hessian_k(&g)?,
        "ecv" => {
            let plan = SamplingPlan::new(Scheme::Pair, args.q)?;
            let pg = pair_sample(&g, &plan, &mut Stream::new(args.seed).rng())?;
            ecv_auc_k(&pg, args.k_max, &g)?
        }
        other => return Err(config_error("method", format!("unknown method `{other}`"))),
    };
    println!("{}", serde_json::to_string_pretty(&estimate)?);
    Ok(())
}

#[derive(Serialize)]
struct BetaRow {
    coordinate: usize,
    estimate: f64,
    lower: f64,
    upper: f64,
    width: f64,
}

fn regress(args: RegressArgs) -> Result<()> {
    let (g, data) = args.reg.data()?;
    let stat = CohesionBeta::new(data);
    let out = beta_uncertainty(
        &g,
        &stat,
        args.reg.resampler()?,
        args.boot.b,
        args.boot.alpha,
        None,
        Stream::new(args.boot.seed),
    )?;
    if let Some(path) = &args.json {
        write_json(path, &out)?;
    }
    let rows: Vec<BetaRow> = out
        .run
        .intervals
        .iter()
        .enumerate()
        .map(|(coordinate, iv)| BetaRow {
            coordinate,
            estimate: out.beta_hat[coordinate],
            lower: iv.lower,
            upper: iv.upper,
            width: iv.width(),
        })
        .collect();
    write_rows(args.csv.as_ref(), &rows)?;
    strict_check(args.boot.strict, out.run.degenerate_run, "bootstrap run")
}

#[derive(Serialize)]
struct FrequencyRow {
    coordinate: usize,
    frequency: f64,
}

fn stabsel(args: StabselArgs) -> Result<()> {
    let (g, data) = args.reg.data()?;
    let lambdas = if args.lambda2.is_empty() {
        lambda2_path(&data.x, &data.y, args.path_points)
    } else {
        args.lambda2.clone()
    };
    let sel = stability_selection(
        &g,
        &data,
        &lambdas,
        args.reg.resampler()?,
        args.b,
        Stream::new(args.seed),
    )?;
    let rows: Vec<FrequencyRow> = sel
        .frequencies
        .iter()
        .enumerate()
        .map(|(coordinate, &frequency)| FrequencyRow {
            coordinate,
            frequency,
        })
        .collect();
    write_rows(args.csv.as_ref(), &rows)
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    let summary = run_experiment(&config)?;
    for file in &summary.files {
        println!("{}", file.display());
    }
    strict_check(
        args.strict,
        summary.degenerate_runs > 0,
        &format!("{} bootstrap run(s)", summary.degenerate_runs),
    )
}

fn realdata(args: RealdataArgs) -> Result<()> {
    let config = ExperimentConfig {
        task: Task::Realdata,
        inputs: args.graphs,
        one_based: args.one_based,
        schemes: args.schemes,
        candidates: args.candidates,
        b: args.boot.b,
        b_inner: args.b_inner,
        alpha: args.boot.alpha,
        seed: args.boot.seed,
        output_dir: args.output_dir,
        log_n: args.log_n,
        ..ExperimentConfig::from_json(r#"{"task": "realdata", "inputs": ["-"]}"#)?
    };
    config.validate()?;
    let summary = run_experiment(&config)?;
    for file in &summary.files {
        println!("{}", file.display());
    }
    strict_check(
        args.boot.strict,
        summary.degenerate_runs > 0,
        "real-data interval",
    )
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Ci(args) => ci(args),
        Command::ChooseQ(args) => choose(args),
        Command::Community(args) => community(args),
        Command::Regress(args) => regress(args),
        Command::Stabsel(args) => stabsel(args),
        Command::Experiment(args) => experiment(args),
        Command::Realdata(args) => realdata(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
