use std::path::{Path, PathBuf};

use autoembedder::clustering::{kmeans, KMeansParams};
use autoembedder::data::{self, Dataset};
use autoembedder::embedder::{read_model, write_model};
use autoembedder::metrics::{evaluate, EvalReport};
use autoembedder::numeric::Matrix;
use autoembedder::pipeline::run_experiment;
use autoembedder::siamese::write_loss_history;
use serde::Serialize;

use crate::config::{DatasetArgs, DatasetSpec, Loss, RunConfig, Sampler};
use crate::error::{CliError, CliResult};

pub const MODEL_FILE: &str = "model.aemb";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "config.toml";

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

impl From<&EvalReport> for Scores {
    fn from(r: &EvalReport) -> Self {
        Self {
            acc: r.acc,
            nmi: r.nmi,
            ari: r.ari,
        }
    }
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    dataset: String,
    rows: usize,
    labeled: usize,
    iterations: usize,
    final_loss: f64,
    clusters: usize,
    inertia: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Scores>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    result: TrainSummary,
}

pub fn train(config: &RunConfig) -> CliResult<()> {
    let dataset = config.dataset.load(config.seed)?;
    dataset.require_labels()?;
    log::info!(
        "training on '{}' ({} rows, {} features)",
        dataset.name,
        dataset.len(),
        dataset.dim()
    );
    let run = run_experiment(&dataset, &config.experiment())?;

    create_dir(&config.out)?;
    write_model(&run.embedder(), config.out.join(MODEL_FILE))?;
    write_loss_history(config.out.join(LOSS_FILE), &run.loss_history)?;
    let metrics = run.report.as_ref().map(Scores::from);
    let manifest = Manifest {
        config,
        result: TrainSummary {
            dataset: dataset.name.clone(),
            rows: dataset.len(),
            labeled: run.oracle.len(),
            iterations: run.loss_history.len(),
            final_loss: run.loss_history.last().copied().unwrap_or(f64::NAN),
            clusters: run.clusters.centroids.rows(),
            inertia: run.clusters.inertia,
            metrics,
        },
    };
    write_text(
        &config.out.join(MANIFEST_FILE),
        &toml::to_string(&manifest)?,
    )?;
    write_text(&config.out.join(CONFIG_FILE), &toml::to_string(config)?)?;
    if let Some(m) = metrics {
        println!("ACC {:.2}  NMI {:.4}  ARI {:.4}", m.acc, m.nmi, m.ari);
    }
    println!("wrote {}", config.out.display());
    Ok(())
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    csv::Writer::from_path(path).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn embed(config: &RunConfig, model: &Path, out: &Path) -> CliResult<()> {
    let net = read_model(model)?;
    let dataset = config.dataset.load(config.seed)?;
    if dataset.dim() != net.input_dim() {
        return Err(CliError::Validation(format!(
            "model expects {} features, dataset '{}' has {}",
            net.input_dim(),
            dataset.name,
            dataset.dim()
        )));
    }
    let embeddings = if dataset.is_empty() {
        Matrix::zeros(0, net.embedding_dim())
    } else {
        net.embed(&dataset.features)?
    };
    let mut w = csv_writer(out)?;
    let err = csv_err(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..net.embedding_dim()).map(|i| format!("e{i}")));
    w.write_record(&header).map_err(&err)?;
    for (i, row) in embeddings.iter_rows().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| CliError::io(out, e))?;
    println!(
        "wrote {} embeddings of dimension {} to {}",
        embeddings.rows(),
        net.embedding_dim(),
        out.display()
    );
    Ok(())
}

/// Splits an optional `id` column off a loaded CSV.
fn split_ids(ds: &Dataset) -> CliResult<(Vec<String>, Matrix)> {
    let Some(id_col) = ds.feature_names.iter().position(|n| n == "id") else {
        return Ok((
            (0..ds.len()).map(|i| i.to_string()).collect(),
            ds.features.clone(),
        ));
    };
    let cols = ds.dim() - 1;
    let mut ids = Vec::with_capacity(ds.len());
    let mut data = Vec::with_capacity(ds.len() * cols);
    for row in ds.features.iter_rows() {
        ids.push(row[id_col].to_string());
        data.extend(
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != id_col)
                .map(|(_, v)| *v),
        );
    }
    Ok((ids, Matrix::from_vec(ds.len(), cols, data)?))
}

pub struct ClusterArgs {
    pub embeddings: PathBuf,
    pub clusters: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cluster(args: &ClusterArgs) -> CliResult<()> {
    if args.clusters == 0 {
        return Err(CliError::Validation(
            "number of clusters must be positive".into(),
        ));
    }
    let ds = data::load_csv(&args.embeddings, None)?;
    let (ids, points) = split_ids(&ds)?;
    if points.rows() < args.clusters {
        return Err(CliError::Validation(format!(
            "{} rows cannot form {} clusters",
            points.rows(),
            args.clusters
        )));
    }
    let result = kmeans(&points, &KMeansParams::new(args.clusters, args.seed))?;
    let mut w = csv_writer(&args.out)?;
    let err = csv_err(&args.out);
    w.write_record(["id", "cluster"]).map_err(&err)?;
    for (id, c) in ids.iter().zip(&result.assignments) {
        w.write_record([id.as_str(), &c.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| CliError::io(&args.out, e))?;
    println!(
        "k {}  inertia {}  lloyd iterations {}",
        args.clusters, result.inertia, result.iterations_run
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct MappingEntry {
    cluster: usize,
    label: String,
}

#[derive(Debug, Serialize)]
struct EvalFile {
    rows: usize,
    acc: f64,
    nmi: f64,
    ari: f64,
    mapping: Vec<MappingEntry>,
}

pub struct EvalArgs {
    pub assignments: PathBuf,
    pub labels: PathBuf,
    pub label_column: String,
    pub out: PathBuf,
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let predicted = data::load_csv(&args.assignments, Some("cluster"))?;
    let truth = data::load_csv(&args.labels, Some(&args.label_column))?;
    if predicted.len() != truth.len() {
        return Err(CliError::Validation(format!(
            "{} assignments but {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let report = evaluate(truth.require_labels()?, predicted.require_labels()?)?;
    let names = |ds: &Dataset, id: usize| {
        ds.label_names
            .as_ref()
            .map_or_else(|| id.to_string(), |n| n[id].clone())
    };
    let file = EvalFile {
        rows: truth.len(),
        acc: report.acc,
        nmi: report.nmi,
        ari: report.ari,
        mapping: report
            .mapping
            .iter()
            .map(|&(c, l)| MappingEntry {
                cluster: names(&predicted, c).parse().unwrap_or(c),
                label: names(&truth, l),
            })
            .collect(),
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_text(&args.out, &toml::to_string(&file)?)?;
    println!(
        "ACC {:.2}  NMI {:.4}  ARI {:.4}",
        report.acc, report.nmi, report.ari
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Summary { mean, std }
}

pub struct BenchRow {
    pub cell: String,
    pub acc: Summary,
    pub nmi: Summary,
    pub ari: Summary,
}

fn cell_name(sampler: Sampler, loss: Loss) -> String {
    let s = match sampler {
        Sampler::Balanced => "balanced",
        Sampler::Imbalanced => "imbalanced",
    };
    let l = match loss {
        Loss::Mse => "mse",
        Loss::Contrastive => "contrastive",
    };
    format!("{s}-{l}")
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:<24}{:<18}{:<20}{:<20}\n", "cell", "ACC", "NMI", "ARI");
    for r in rows {
        out.push_str(&format!(
            "{:<24}{:<18}{:<20}{:<20}\n",
            r.cell,
            format!("{:.2}±{:.2}", r.acc.mean, r.acc.std),
            format!("{:.4}±{:.4}", r.nmi.mean, r.nmi.std),
            format!("{:.4}±{:.4}", r.ari.mean, r.ari.std),
        ));
    }
    out
}

/// Runs every sampler × loss cell for `seeds` consecutive seeds starting at
/// the configured seed. Cells run on separate threads.
pub fn bench(config: &RunConfig, seeds: u64) -> CliResult<Vec<BenchRow>> {
    if seeds == 0 {
        return Err(CliError::Validation("--seeds must be at least 1".into()));
    }
    if !matches!(config.dataset, DatasetSpec::Synthetic(_)) {
        log::warn!("bench normally runs on the synthetic benchmark; using the configured dataset");
    }
    let curves = config.out.join("curves");
    create_dir(&curves)?;

    let mut cells = Vec::new();
    for sampler in [Sampler::Balanced, Sampler::Imbalanced] {
        for loss in [Loss::Mse, Loss::Contrastive] {
            cells.push((cell_name(sampler, loss), sampler, loss));
        }
    }
    let results: Vec<CliResult<(String, Vec<Scores>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|(name, sampler, loss)| {
                let curves = &curves;
                scope.spawn(move || {
                    let mut scores = Vec::new();
                    for offset in 0..seeds {
                        let mut c = config.clone();
                        c.seed = config.seed + offset;
                        c.train.sampler = *sampler;
                        c.train.loss = *loss;
                        let dataset = c.dataset.load(c.seed)?;
                        dataset.require_labels()?;
                        let run = run_experiment(&dataset, &c.experiment())?;
                        write_loss_history(
                            curves.join(format!("{name}-seed{}.csv", c.seed)),
                            &run.loss_history,
                        )?;
                        let s = Scores::from(run.report.as_ref().expect("labeled dataset"));
                        log::info!("{name} seed {}: ACC {:.2}", c.seed, s.acc);
                        scores.push(s);
                    }
                    Ok((name.clone(), scores))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    for r in results {
        let (cell, scores) = r?;
        let pick = |f: fn(&Scores) -> f64| summarize(&scores.iter().map(f).collect::<Vec<_>>());
        rows.push(BenchRow {
            cell,
            acc: pick(|s| s.acc),
            nmi: pick(|s| s.nmi),
            ari: pick(|s| s.ari),
        });
    }
    rows.sort_by(|a, b| a.cell.cmp(&b.cell));

    let table = format_table(&rows);
    write_text(&config.out.join("bench_table.txt"), &table)?;
    let path = config.out.join("bench.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record([
        "cell", "acc_mean", "acc_std", "nmi_mean", "nmi_std", "ari_mean", "ari_std",
    ])
    .map_err(&err)?;
    for r in &rows {
        let mut rec = vec![r.cell.clone()];
        for s in [r.acc, r.nmi, r.ari] {
            rec.push(s.mean.to_string());
            rec.push(s.std.to_string());
        }
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    write_text(&config.out.join(CONFIG_FILE), &toml::to_string(config)?)?;
    print!("{table}");
    Ok(rows)
}

/// Builds the dataset portion of a config for `embed`.
pub fn dataset_config(
    config: Option<&Path>,
    seed: Option<u64>,
    dataset: &DatasetArgs,
) -> CliResult<RunConfig> {
    let common = crate::config::CommonArgs {
        config: config.map(Path::to_path_buf),
        seed,
        dataset: dataset.clone(),
        ..Default::default()
    };
    common.resolve()
}
