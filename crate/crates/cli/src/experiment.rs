//! Monte-Carlo drivers behind `netboot experiment`.
//!
//! Output files (one per scheme, header row included):
//!
//! | file                          | columns                                                   |
//! |-------------------------------|-----------------------------------------------------------|
//! | `triangle_<scheme>.csv`       | q, mean_width, width_se, coverage, frac_degenerate        |
//! | `communities_<scheme>.csv`    | q, exact_match, coverage, mean_width, frac_degenerate     |
//! | `communities_<scheme>_dist.csv` | q, k, proportion                                        |
//! | `regression_<scheme>.csv`     | q, coverage, max_width, min_width, mse_of_mean, frac_degenerate |
//! | `regression_<scheme>_chosen.csv` | rep, chosen_q                                          |
//! | `stabsel_<scheme>.csv`        | q, mean_auc, se_auc, undefined                            |
//! | `realdata_<scheme>.csv`       | see [`crate::realdata`]                                   |
//!
//! `manifest.json` records the configuration, version, files and wall time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use netboot::bootstrap::{bootstrap_ci, choose_q, coverage_experiment, SelectionSize};
use netboot::community::{auc, BetheHessianK, EcvK};
use netboot::generators::{generate_er, generate_sbm, SbmParams};
use netboot::graph::{read_edge_list, Graph};
use netboot::regression::{
    beta_uncertainty, lambda2_path, stability_selection, CohesionBeta, CohesionData,
};
use netboot::rng::labels;
use netboot::statistics::TriangleDensity;
use netboot::{Resampler, Scheme, Statistic, Stream};

use crate::config::{CommunityMethod, ExperimentConfig, GeneratorConfig, Task};
use crate::realdata::analyze_networks;
use crate::{write_csv, Result};

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Bootstrap runs with at least half of their replicates degenerate.
    pub degenerate_runs: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    task: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    files: Vec<String>,
    degenerate_runs: usize,
    wall_time_seconds: f64,
}

pub fn generate_parent(generator: &GeneratorConfig, stream: Stream) -> netboot::Result<Graph> {
    let mut rng = stream.rng();
    match generator {
        GeneratorConfig::Er { n, rho } => generate_er(*n, *rho, &mut rng),
        GeneratorConfig::Sbm { sizes, rho, t } => {
            generate_sbm(&SbmParams::new(sizes.clone(), *rho, *t), &mut rng)
        }
    }
}

/// Runs the configured task and writes its CSV files and manifest into
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(&config.output_dir)?;
    let summary = match config.task {
        Task::Triangle => triangle_task(config)?,
        Task::Communities => communities_task(config)?,
        Task::Regression => regression_task(config)?,
        Task::Stabsel => stabsel_task(config)?,
        Task::Realdata => realdata_task(config)?,
    };
    let manifest = Manifest {
        tool: "netboot",
        version: env!("CARGO_PKG_VERSION"),
        task: config.task.name(),
        seed: config.seed,
        config,
        files: summary
            .files
            .iter()
            .map(|f| f.display().to_string())
            .collect(),
        degenerate_runs: summary.degenerate_runs,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    std::fs::write(
        config.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(summary)
}

fn output(config: &ExperimentConfig, name: String) -> PathBuf {
    config.output_dir.join(name)
}

#[derive(Serialize)]
struct TriangleRow {
    q: f64,
    mean_width: f64,
    width_se: f64,
    coverage: f64,
    frac_degenerate: f64,
}

fn triangle_task(config: &ExperimentConfig) -> Result<RunSummary> {
    let generator = config.generator.as_ref().expect("validated");
    let stat = TriangleDensity {
        estimator: config.estimator,
    };
    let stream = Stream::new(config.seed);
    let mut summary = RunSummary::default();
    for &scheme in &config.schemes {
        let rows = coverage_experiment(
            |s| generate_parent(generator, s),
            &stat,
            scheme,
            &config.q_grid,
            config.b,
            config.alpha,
            config.reps,
            stream,
        )?;
        summary.degenerate_runs += rows.iter().map(|r| r.degenerate_runs).sum::<usize>();
        let rows: Vec<TriangleRow> = rows
            .into_iter()
            .map(|r| TriangleRow {
                q: r.q,
                mean_width: r.mean_width,
                width_se: r.width_se,
                coverage: r.coverage,
                frac_degenerate: r.frac_degenerate,
            })
            .collect();
        let path = output(config, format!("triangle_{scheme}.csv"));
        write_csv(&path, &rows)?;
        summary.files.push(path);
    }
    Ok(summary)
}

fn community_statistic(
    method: CommunityMethod,
    scheme: Scheme,
    k_max: usize,
    seed: u64,
) -> Box<dyn Statistic> {
    let ecv = match method {
        CommunityMethod::Auto => scheme == Scheme::Pair,
        CommunityMethod::Bh => false,
        CommunityMethod::Ecv => true,
    };
    if ecv {
        Box::new(EcvK {
            seed,
            ..EcvK::new(k_max)
        })
    } else {
        Box::new(BetheHessianK)
    }
}

#[derive(Serialize)]
struct CommunityRow {
    q: f64,
    exact_match: f64,
    coverage: f64,
    mean_width: f64,
    frac_degenerate: f64,
}

#[derive(Serialize)]
struct DistributionRow {
    q: f64,
    k: usize,
    proportion: f64,
}

struct CommunityCell {
    values: Vec<f64>,
    covered: bool,
    width: f64,
    degenerate: f64,
    degenerate_run: bool,
}

fn communities_task(config: &ExperimentConfig) -> Result<RunSummary> {
    let generator = config.generator.as_ref().expect("validated");
    let k_true = generator.k() as f64;
    let stream = Stream::new(config.seed);
    let mut summary = RunSummary::default();
    for &scheme in &config.schemes {
        let stat = community_statistic(config.community_method, scheme, config.k_max, config.seed);
        let cells = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<CommunityCell>> {
                let g = generate_parent(
                    generator,
                    stream.derive(labels::PARENT_GRAPH).derive(rep as u64),
                )?;
                config
                    .q_grid
                    .iter()
                    .map(|&q| {
                        let s = stream
                            .derive(labels::REPLICATE)
                            .derive(rep as u64)
                            .derive(scheme as u64)
                            .derive_f64(q);
                        let run = bootstrap_ci(
                            &g,
                            stat.as_ref(),
                            Resampler::plan(scheme, q)?,
                            config.b,
                            config.alpha,
                            s,
                        )?;
                        Ok(CommunityCell {
                            values: run.replicates.iter().map(|r| r.value()).collect(),
                            covered: run.ci().contains(k_true),
                            width: run.ci().width(),
                            degenerate: run.degenerate_fraction(),
                            degenerate_run: run.degenerate_run,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;

        let reps = config.reps as f64;
        let mut rows = Vec::new();
        let mut dist = Vec::new();
        for (j, &q) in config.q_grid.iter().enumerate() {
            let column: Vec<&CommunityCell> = cells.iter().map(|row| &row[j]).collect();
            let all: Vec<f64> = column
                .iter()
                .flat_map(|c| c.values.iter().copied())
                .collect();
            let total = all.len() as f64;
            rows.push(CommunityRow {
                q,
                exact_match: all.iter().filter(|&&k| k == k_true).count() as f64 / total,
                coverage: column.iter().filter(|c| c.covered).count() as f64 / reps,
                mean_width: column.iter().map(|c| c.width).sum::<f64>() / reps,
                frac_degenerate: column.iter().map(|c| c.degenerate).sum::<f64>() / reps,
            });
            summary.degenerate_runs += column.iter().filter(|c| c.degenerate_run).count();
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &k in &all {
                *counts.entry(k as usize).or_default() += 1;
            }
            dist.extend(counts.into_iter().map(|(k, c)| DistributionRow {
                q,
                k,
                proportion: c as f64 / total,
            }));
        }
        let path = output(config, format!("communities_{scheme}.csv"));
        write_csv(&path, &rows)?;
        summary.files.push(path);
        let path = output(config, format!("communities_{scheme}_dist.csv"));
        write_csv(&path, &dist)?;
        summary.files.push(path);
    }
    Ok(summary)
}

#[derive(Serialize)]
struct RegressionRow {
    q: Option<f64>,
    coverage: f64,
    max_width: f64,
    min_width: f64,
    mse_of_mean: f64,
    frac_degenerate: f64,
}

#[derive(Serialize)]
struct ChosenRow {
    rep: usize,
    chosen_q: f64,
}

struct RegressionCell {
    coverage: f64,
    max_width: f64,
    min_width: f64,
    mse: f64,
    degenerate: f64,
    degenerate_run: bool,
}

fn regression_task(config: &ExperimentConfig) -> Result<RunSummary> {
    let design_config = config.design.as_ref().expect("validated");
    let design = design_config.design();
    let stream = Stream::new(config.seed);
    let mut summary = RunSummary::default();

    let mut arms: Vec<(String, Vec<Option<f64>>, Option<Scheme>)> = config
        .schemes
        .iter()
        .map(|&s| {
            (
                s.name().to_string(),
                config.q_grid.iter().map(|&q| Some(q)).collect(),
                Some(s),
            )
        })
        .collect();
    if config.include_naive {
        arms.push(("naive".to_string(), vec![None], None));
    }

    for (name, grid, scheme) in arms {
        let label = scheme.map_or(u64::MAX, |s| s as u64);
        let per_rep = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<(Vec<RegressionCell>, Option<f64>)> {
                let sample =
                    design.generate(stream.derive(labels::PARENT_GRAPH).derive(rep as u64))?;
                let data =
                    CohesionData::new(sample.x.clone(), sample.y.clone(), design_config.lambda1)?
                        .with_dropped(design_config.dropped);
                let stat = CohesionBeta::new(data);
                let cells = grid
                    .iter()
                    .map(|&q| {
                        let resampler = match (scheme, q) {
                            (Some(s), Some(q)) => Resampler::plan(s, q)?,
                            _ => Resampler::Naive,
                        };
                        let s = stream
                            .derive(labels::REPLICATE)
                            .derive(rep as u64)
                            .derive(label)
                            .derive_f64(q.unwrap_or(1.0));
                        let out = beta_uncertainty(
                            &sample.graph,
                            &stat,
                            resampler,
                            config.b,
                            config.alpha,
                            Some(sample.beta.as_slice()),
                            s,
                        )?;
                        Ok(RegressionCell {
                            coverage: out.coverage.unwrap_or(f64::NAN),
                            max_width: out.max_width,
                            min_width: out.min_width,
                            mse: out.mse_of_mean.unwrap_or(f64::NAN),
                            degenerate: out.run.degenerate_fraction(),
                            degenerate_run: out.run.degenerate_run,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let chosen = match scheme {
                    Some(s) if config.select_q => {
                        let size = SelectionSize {
                            outer: config.b,
                            inner: config.b_inner(),
                        };
                        let sel_stream = stream
                            .derive(labels::SELECTION)
                            .derive(rep as u64)
                            .derive(s as u64);
                        Some(
                            choose_q(
                                &sample.graph,
                                &stat,
                                s,
                                &config.candidates,
                                size,
                                config.alpha,
                                sel_stream,
                            )?
                            .chosen,
                        )
                    }
                    _ => None,
                };
                Ok((cells, chosen))
            })
            .collect::<Result<Vec<_>>>()?;

        let reps = config.reps as f64;
        let rows: Vec<RegressionRow> = grid
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                let mean = |f: &dyn Fn(&RegressionCell) -> f64| {
                    per_rep.iter().map(|(cells, _)| f(&cells[j])).sum::<f64>() / reps
                };
                RegressionRow {
                    q,
                    coverage: mean(&|c| c.coverage),
                    max_width: mean(&|c| c.max_width),
                    min_width: mean(&|c| c.min_width),
                    mse_of_mean: mean(&|c| c.mse),
                    frac_degenerate: mean(&|c| c.degenerate),
                }
            })
            .collect();
        summary.degenerate_runs += per_rep
            .iter()
            .flat_map(|(cells, _)| cells)
            .filter(|c| c.degenerate_run)
            .count();
        let path = output(config, format!("regression_{name}.csv"));
        write_csv(&path, &rows)?;
        summary.files.push(path);
        if config.select_q && scheme.is_some() {
            let chosen: Vec<ChosenRow> = per_rep
                .iter()
                .enumerate()
                .filter_map(|(rep, (_, c))| c.map(|chosen_q| ChosenRow { rep, chosen_q }))
                .collect();
            let path = output(config, format!("regression_{name}_chosen.csv"));
            write_csv(&path, &chosen)?;
            summary.files.push(path);
        }
    }
    Ok(summary)
}

#[derive(Serialize)]
struct StabselRow {
    q: f64,
    mean_auc: f64,
    se_auc: f64,
    /// Reps where the AUC was undefined.
    undefined: usize,
}

fn stabsel_task(config: &ExperimentConfig) -> Result<RunSummary> {
    let design_config = config.design.as_ref().expect("validated");
    let design = design_config.design();
    let support = design.support();
    let stream = Stream::new(config.seed);
    let mut summary = RunSummary::default();
    for &scheme in &config.schemes {
        let per_rep = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<Option<f64>>> {
                let sample =
                    design.generate(stream.derive(labels::PARENT_GRAPH).derive(rep as u64))?;
                let lambdas = lambda2_path(&sample.x, &sample.y, config.path_points);
                let data = CohesionData::new(sample.x, sample.y, design_config.lambda1)?
                    .with_dropped(design_config.dropped);
                config
                    .q_grid
                    .iter()
                    .map(|&q| {
                        let s = stream
                            .derive(labels::REPLICATE)
                            .derive(rep as u64)
                            .derive(scheme as u64)
                            .derive_f64(q);
                        let sel = stability_selection(
                            &sample.graph,
                            &data,
                            &lambdas,
                            Resampler::plan(scheme, q)?,
                            config.b,
                            s,
                        )?;
                        Ok(auc(&sel.frequencies, &support).ok())
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<StabselRow> = config
            .q_grid
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                let values: Vec<f64> = per_rep.iter().filter_map(|row| row[j]).collect();
                let m = values.len() as f64;
                let mean = values.iter().sum::<f64>() / m;
                let se = if values.len() > 1 {
                    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
                } else {
                    f64::NAN
                };
                StabselRow {
                    q,
                    mean_auc: mean,
                    se_auc: se,
                    undefined: config.reps - values.len(),
                }
            })
            .collect();
        let path = output(config, format!("stabsel_{scheme}.csv"));
        write_csv(&path, &rows)?;
        summary.files.push(path);
    }
    Ok(summary)
}

fn network_name(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn realdata_task(config: &ExperimentConfig) -> Result<RunSummary> {
    let graphs = config
        .inputs
        .iter()
        .map(|path| Ok((network_name(path), read_edge_list(path, config.one_based)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = RunSummary::default();
    for &scheme in &config.schemes {
        let report = analyze_networks(
            &graphs,
            scheme,
            config,
            Stream::new(config.seed).derive(scheme as u64),
        )?;
        summary.degenerate_runs += report.degenerate_runs;
        let path = output(config, format!("realdata_{scheme}.csv"));
        report.write(&path)?;
        summary.files.push(path);
        let path = output(config, format!("realdata_{scheme}_ols.csv"));
        report.write_fits(&path)?;
        summary.files.push(path);
    }
    Ok(summary)
}
