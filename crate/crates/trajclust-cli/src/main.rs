//! Command line for the trajectory clustering pipeline.
//!
//! Every subcommand resolves one [`RunConfig`] (defaults, then `--config`,
//! then `--set` overrides, then shorthand flags), runs a pipeline stage,
//! and writes its outputs plus a manifest into the output directory. The
//! manifest holds the resolved config and the command, and is itself a
//! valid `--config` file, so any run can be replayed bit-identically.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use trajclust::autoencoder::{encode, AutoencoderModel};
use trajclust::baselines::{
    agglomerative_fit, gbtm_fit, kmeans_fit, kml_fit, select_k_by_ch, Partition,
};
use trajclust::evaluation::{adjusted_rand_index, gaussian_membership, membership_correlation};
use trajclust::io;
use trajclust::io::config::RunConfig;
use trajclust::io::svg::{render_svg, SvgData};
use trajclust::optimizer::train;
use trajclust::simulation::simulate_qol;
use trajclust::TrajectoryDataset;

#[derive(Parser)]
#[command(
    name = "trajclust",
    version,
    about = "Cluster longitudinal trajectories with a recurrent autoencoder and classical baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file. A manifest from a previous run also works.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding out.dir.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one config key, e.g. --set train.epochs=50. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the two-group quality-of-life benchmark dataset.
    Simulate,

    /// Train the autoencoder on a trajectory CSV.
    Train {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        /// Shorthand for --set train.epochs=N.
        #[arg(long)]
        epochs: Option<usize>,
    },

    /// Embed every trajectory with a trained model.
    Embed {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        /// Model file [default: <out>/model.json].
        #[arg(long)]
        model: Option<PathBuf>,
    },

    /// Cluster an embedding with k-means or an agglomerative linkage.
    Cluster {
        /// Embedding CSV [default: <out>/embedding.csv].
        embedding: Option<PathBuf>,
        /// Shorthand for --set cluster.k=K.
        #[arg(long)]
        k: Option<usize>,
        /// Shorthand for --set cluster.method=METHOD.
        #[arg(long)]
        method: Option<String>,
    },

    /// Longitudinal k-means over raw trajectories, sweeping k by the
    /// Calinski-Harabasz index unless --k pins a single value.
    Kml {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        /// Fit exactly this k instead of sweeping kml.k_min..=kml.k_max.
        #[arg(long)]
        k: Option<usize>,
        /// Shorthand for --set kml.metric=METRIC.
        #[arg(long)]
        metric: Option<String>,
    },

    /// Fit a mixture of polynomial trajectory classes by EM.
    Gbtm {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        /// Shorthand for --set cluster.k=K.
        #[arg(long)]
        k: Option<usize>,
        /// Shorthand for --set gbtm.order=P.
        #[arg(long)]
        order: Option<usize>,
    },

    /// Evaluation utilities.
    Evaluate {
        #[command(subcommand)]
        what: EvaluateCommand,
    },

    /// Render an SVG figure.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },

    /// Chain the full simulated benchmark: simulate, kml sweep, train,
    /// embed, cluster, score both partitions, and render all figures.
    ReproduceSim,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Calinski-Harabasz sweep of longitudinal k-means over the k range.
    ChSweep {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
    },
    /// Adjusted Rand index between two partition or label files.
    Ari {
        /// First file [default: <out>/partition.csv].
        a: Option<PathBuf>,
        /// Second file [default: <out>/labels.csv].
        b: Option<PathBuf>,
    },
    /// Cross-method membership correlation over name=path membership CSVs.
    Coherence {
        /// At least two entries such as ae=out/membership.csv.
        #[arg(num_args = 2.., value_name = "NAME=PATH")]
        memberships: Vec<String>,
    },
}

#[derive(Subcommand)]
enum PlotKind {
    /// One polyline per subject, colored by partition or labels if given.
    Trajectories {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Scatter of the first two embedding components.
    Embedding {
        /// Embedding CSV [default: <out>/embedding.csv].
        embedding: Option<PathBuf>,
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// One bar per k of a Calinski-Harabasz sweep.
    ChBars {
        /// Sweep scores [default: <out>/ch_scores.csv].
        scores: Option<PathBuf>,
    },
    /// Per-cluster mean trajectories.
    MeanCurves {
        /// Input trajectories [default: <out>/trajectories.csv].
        data: Option<PathBuf>,
        /// Partition CSV [default: <out>/partition.csv].
        #[arg(long)]
        partition: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let config = resolve_config(&cli)?;
    let out = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory `{}`", out.display()))?;

    match &cli.command {
        Command::Simulate => run_simulate(&config, &out),
        Command::Train { data, .. } => run_train(&config, &out, data.as_deref()),
        Command::Embed { data, model } => run_embed(&config, &out, data.as_deref(), model.as_deref()),
        Command::Cluster { embedding, .. } => run_cluster(&config, &out, embedding.as_deref()),
        Command::Kml { data, k, .. } => run_kml(&config, &out, data.as_deref(), *k),
        Command::Gbtm { data, .. } => run_gbtm(&config, &out, data.as_deref()),
        Command::Evaluate { what } => match what {
            EvaluateCommand::ChSweep { data } => run_ch_sweep(&config, &out, data.as_deref()),
            EvaluateCommand::Ari { a, b } => run_ari(&config, &out, a.as_deref(), b.as_deref()),
            EvaluateCommand::Coherence { memberships } => {
                run_coherence(&config, &out, memberships)
            }
        },
        Command::Plot { kind } => run_plot(&config, &out, kind),
        Command::ReproduceSim => run_reproduce_sim(&config, &out),
    }
}

/// Defaults, then the config file, then --set pairs, then shorthand
/// flags, then --seed and --out. Later layers win.
fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for pair in &cli.set {
        let (key, value) = pair
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{pair}`"))?;
        config.set(key.trim(), value.trim())?;
    }
    apply_shorthands(&cli.command, &mut config)?;
    if let Some(seed) = cli.seed {
        config.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }
    config.validate()?;
    Ok(config)
}

fn apply_shorthands(command: &Command, config: &mut RunConfig) -> Result<()> {
    match command {
        Command::Train { epochs: Some(epochs), .. } => {
            config.set("train.epochs", &epochs.to_string())?;
        }
        Command::Cluster { k, method, .. } => {
            if let Some(k) = k {
                config.set("cluster.k", &k.to_string())?;
            }
            if let Some(method) = method {
                config.set("cluster.method", method)?;
            }
        }
        Command::Kml { metric: Some(metric), .. } => {
            config.set("kml.metric", metric)?;
        }
        Command::Gbtm { k, order, .. } => {
            if let Some(k) = k {
                config.set("cluster.k", &k.to_string())?;
            }
            if let Some(order) = order {
                config.set("gbtm.order", &order.to_string())?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn write_manifest(out: &Path, name: &str, config: &RunConfig, command: &str) -> Result<()> {
    let path = out.join(format!("manifest_{name}.txt"));
    std::fs::write(&path, config.to_manifest(command))
        .with_context(|| format!("cannot write `{}`", path.display()))
}

fn default_path(out: &Path, given: Option<&Path>, name: &str) -> PathBuf {
    given.map(Path::to_path_buf).unwrap_or_else(|| out.join(name))
}

fn load_dataset(path: &Path) -> Result<TrajectoryDataset> {
    io::load_trajectories(path).with_context(|| format!("cannot load `{}`", path.display()))
}

fn run_simulate(config: &RunConfig, out: &Path) -> Result<()> {
    let dataset = simulate_qol(&config.sim)?;
    io::write_trajectories(&out.join("trajectories.csv"), &dataset)?;
    let labels = dataset.labels().expect("simulated datasets carry group labels");
    io::write_labels(&out.join("labels.csv"), dataset.subject_ids(), labels)?;
    write_manifest(out, "simulate", config, &format!("trajclust simulate --out {}", config.out_dir))?;
    println!(
        "wrote {}/trajectories.csv and labels.csv ({} subjects, T = {})",
        config.out_dir,
        dataset.n_subjects(),
        dataset.seq_len()
    );
    Ok(())
}

fn run_train(config: &RunConfig, out: &Path, data: Option<&Path>) -> Result<()> {
    let data = default_path(out, data, "trajectories.csv");
    let dataset = load_dataset(&data)?;
    let mut arch = config.arch.clone();
    arch.input_size = 1;
    let (model, history) = train(&dataset, &arch, &config.train)?;
    model.save(&out.join("model.json"))?;
    io::write_loss_history(&out.join("loss_history.csv"), &history)?;
    write_manifest(
        out,
        "train",
        config,
        &format!("trajclust train {} --out {}", data.display(), config.out_dir),
    )?;
    println!(
        "trained {} epochs on {} subjects; final loss {:.6}; wrote {}/model.json",
        history.len(),
        dataset.n_subjects(),
        history.last().copied().unwrap_or(f64::NAN),
        config.out_dir
    );
    Ok(())
}

fn run_embed(
    config: &RunConfig,
    out: &Path,
    data: Option<&Path>,
    model: Option<&Path>,
) -> Result<()> {
    let data = default_path(out, data, "trajectories.csv");
    let model_path = default_path(out, model, "model.json");
    let dataset = load_dataset(&data)?;
    let model = AutoencoderModel::load(&model_path)
        .with_context(|| format!("cannot load `{}`", model_path.display()))?;
    let normalized = dataset.normalized_with(model.norm);
    let mut points = Vec::with_capacity(normalized.n_subjects());
    for row in normalized.values() {
        points.push(encode(&model, row)?);
    }
    io::write_embedding(&out.join("embedding.csv"), dataset.subject_ids(), &points)?;
    write_manifest(
        out,
        "embed",
        config,
        &format!(
            "trajclust embed {} --model {} --out {}",
            data.display(),
            model_path.display(),
            config.out_dir
        ),
    )?;
    println!(
        "wrote {}/embedding.csv ({} points, d = {})",
        config.out_dir,
        points.len(),
        model.dims.embed_dim
    );
    Ok(())
}

fn run_cluster(config: &RunConfig, out: &Path, embedding: Option<&Path>) -> Result<()> {
    let embedding = default_path(out, embedding, "embedding.csv");
    let (ids, points) = io::load_embedding(&embedding)
        .with_context(|| format!("cannot load `{}`", embedding.display()))?;
    let partition = match config.cluster_method.linkage() {
        None => kmeans_fit(&points, config.cluster_k, config.cluster_restarts, config.seed)?,
        Some(linkage) => agglomerative_fit(&points, config.cluster_k, linkage)?,
    };
    io::write_partition(&out.join("partition.csv"), &ids, &partition)?;
    let membership = gaussian_membership(&points, &partition)?;
    io::write_membership(&out.join("membership.csv"), &ids, &membership)?;
    write_manifest(
        out,
        "cluster",
        config,
        &format!("trajclust cluster {} --out {}", embedding.display(), config.out_dir),
    )?;
    println!(
        "{} clustering, k = {}: cluster sizes {:?}",
        config.cluster_method,
        partition.k,
        partition.cluster_sizes()
    );
    Ok(())
}

fn run_kml(config: &RunConfig, out: &Path, data: Option<&Path>, single_k: Option<usize>) -> Result<()> {
    let data = default_path(out, data, "trajectories.csv");
    let dataset = load_dataset(&data)?;
    let partition = match single_k {
        Some(k) => {
            let partition =
                kml_fit(&dataset, k, config.kml_metric, config.kml_restarts, config.seed)?;
            println!("kml ({}), k = {}: cluster sizes {:?}", config.kml_metric, k, partition.cluster_sizes());
            partition
        }
        None => {
            let sweep = select_k_by_ch(
                &dataset,
                config.kml_k_min,
                config.kml_k_max,
                config.kml_metric,
                config.kml_restarts,
                config.seed,
            )?;
            io::write_ch_scores(&out.join("ch_scores.csv"), &sweep.scores)?;
            for (k, score) in &sweep.scores {
                println!("k = {k}: CH = {score:.3}");
            }
            println!("kml ({}) selected k = {}", config.kml_metric, sweep.best_k);
            sweep.best
        }
    };
    io::write_partition(&out.join("kml_partition.csv"), dataset.subject_ids(), &partition)?;
    let membership = gaussian_membership(dataset.values(), &partition)?;
    io::write_membership(&out.join("kml_membership.csv"), dataset.subject_ids(), &membership)?;
    let command = match single_k {
        Some(k) => format!("trajclust kml {} --k {k} --out {}", data.display(), config.out_dir),
        None => format!("trajclust kml {} --out {}", data.display(), config.out_dir),
    };
    write_manifest(out, "kml", config, &command)?;
    Ok(())
}

fn run_gbtm(config: &RunConfig, out: &Path, data: Option<&Path>) -> Result<()> {
    let data = default_path(out, data, "trajectories.csv");
    let dataset = load_dataset(&data)?;
    let (model, membership, history) = gbtm_fit(
        &dataset,
        config.cluster_k,
        config.gbtm_order,
        config.seed,
        config.gbtm_max_iters,
    )?;
    let partition = Partition::from_assignments(membership.hard_labels(), membership.k())?;
    io::write_partition(&out.join("gbtm_partition.csv"), dataset.subject_ids(), &partition)?;
    io::write_membership(&out.join("gbtm_membership.csv"), dataset.subject_ids(), &membership)?;
    write_manifest(
        out,
        "gbtm",
        config,
        &format!("trajclust gbtm {} --out {}", data.display(), config.out_dir),
    )?;
    println!(
        "gbtm k = {}, order = {}: converged in {} iterations, log-likelihood {:.4}",
        config.cluster_k,
        config.gbtm_order,
        history.len(),
        history.last().copied().unwrap_or(f64::NAN)
    );
    println!("mixing weights {:?}", model.weights);
    Ok(())
}

fn run_ch_sweep(config: &RunConfig, out: &Path, data: Option<&Path>) -> Result<()> {
    let data = default_path(out, data, "trajectories.csv");
    let dataset = load_dataset(&data)?;
    let sweep = select_k_by_ch(
        &dataset,
        config.kml_k_min,
        config.kml_k_max,
        config.kml_metric,
        config.kml_restarts,
        config.seed,
    )?;
    io::write_ch_scores(&out.join("ch_scores.csv"), &sweep.scores)?;
    write_manifest(
        out,
        "evaluate-ch-sweep",
        config,
        &format!("trajclust evaluate ch-sweep {} --out {}", data.display(), config.out_dir),
    )?;
    for (k, score) in &sweep.scores {
        println!("k = {k}: CH = {score:.3}");
    }
    println!("best k = {}", sweep.best_k);
    Ok(())
}

/// Load `subject_id,cluster` or `subject_id,label` rows as cluster indices;
/// textual labels are numbered by first appearance.
fn load_assignments(path: &Path) -> Result<Vec<(String, usize)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    let header = text.lines().next().unwrap_or("").trim_end_matches('\r');
    match header {
        "subject_id,cluster" => {
            let (ids, partition) = io::load_partition(path)?;
            Ok(ids.into_iter().zip(partition.assignments).collect())
        }
        "subject_id,label" => {
            let pairs = io::load_labels(path)?;
            let mut indices: HashMap<String, usize> = HashMap::new();
            let mut next = 0usize;
            Ok(pairs
                .into_iter()
                .map(|(id, label)| {
                    let index = *indices.entry(label).or_insert_with(|| {
                        let i = next;
                        next += 1;
                        i
                    });
                    (id, index)
                })
                .collect())
        }
        other => bail!(
            "`{}` is neither a partition nor a labels file (header `{other}`)",
            path.display()
        ),
    }
}

fn ari_between(a: &[(String, usize)], b: &[(String, usize)]) -> Result<f64> {
    if a.len() != b.len() {
        bail!("the files cover {} vs {} subjects", a.len(), b.len());
    }
    let map: HashMap<&str, usize> = b.iter().map(|(id, c)| (id.as_str(), *c)).collect();
    let mut first = Vec::with_capacity(a.len());
    let mut second = Vec::with_capacity(a.len());
    for (id, cluster) in a {
        let other = map
            .get(id.as_str())
            .with_context(|| format!("subject `{id}` is missing from the second file"))?;
        first.push(*cluster);
        second.push(*other);
    }
    let k1 = first.iter().max().map(|m| m + 1).unwrap_or(0);
    let k2 = second.iter().max().map(|m| m + 1).unwrap_or(0);
    let p1 = Partition::from_assignments(first, k1)?;
    let p2 = Partition::from_assignments(second, k2)?;
    Ok(adjusted_rand_index(&p1, &p2)?)
}

fn run_ari(config: &RunConfig, out: &Path, a: Option<&Path>, b: Option<&Path>) -> Result<()> {
    let a = default_path(out, a, "partition.csv");
    let b = default_path(out, b, "labels.csv");
    let ari = ari_between(&load_assignments(&a)?, &load_assignments(&b)?)?;
    std::fs::write(out.join("ari.csv"), format!("ari\n{ari}\n"))
        .with_context(|| format!("cannot write `{}/ari.csv`", out.display()))?;
    write_manifest(
        out,
        "evaluate-ari",
        config,
        &format!(
            "trajclust evaluate ari {} {} --out {}",
            a.display(),
            b.display(),
            config.out_dir
        ),
    )?;
    println!("ari = {ari:.6}");
    Ok(())
}

fn run_coherence(config: &RunConfig, out: &Path, memberships: &[String]) -> Result<()> {
    let mut matrices = Vec::new();
    let mut command = String::from("trajclust evaluate coherence");
    for entry in memberships {
        let (name, path) = entry
            .split_once('=')
            .with_context(|| format!("expected NAME=PATH, got `{entry}`"))?;
        let (_, membership) = io::load_membership(Path::new(path), name)
            .with_context(|| format!("cannot load `{path}`"))?;
        matrices.push(membership);
        command.push_str(&format!(" {entry}"));
    }
    command.push_str(&format!(" --out {}", config.out_dir));
    let report = membership_correlation(&matrices)?;
    io::write_coherence_matrix(&out.join("coherence.csv"), &report)?;
    io::write_matched_pairs(&out.join("matched_pairs.csv"), &report)?;
    write_manifest(out, "evaluate-coherence", config, &command)?;
    for pair in &report.matched {
        println!(
            "{}:{} ~ {}:{}  r = {:.4}",
            pair.method_a, pair.cluster_a, pair.method_b, pair.cluster_b, pair.correlation
        );
    }
    println!("mean matched correlation = {:.6}", report.mean_matched);
    Ok(())
}

/// Cluster assignments for `ids`, joined from a partition file by id.
fn assignments_for(ids: &[String], path: &Path) -> Result<Vec<usize>> {
    let pairs = load_assignments(path)?;
    let map: HashMap<&str, usize> = pairs.iter().map(|(id, c)| (id.as_str(), *c)).collect();
    ids.iter()
        .map(|id| {
            map.get(id.as_str())
                .copied()
                .with_context(|| format!("subject `{id}` is missing from `{}`", path.display()))
        })
        .collect()
}

fn cluster_means(values: &[Vec<f64>], assignments: &[usize]) -> Result<Vec<Vec<f64>>> {
    let k = assignments.iter().max().map(|m| m + 1).unwrap_or(0);
    let t = values.first().map(|r| r.len()).unwrap_or(0);
    let mut sums = vec![vec![0.0; t]; k];
    let mut counts = vec![0usize; k];
    for (row, &c) in values.iter().zip(assignments) {
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
        counts[c] += 1;
    }
    for (c, count) in counts.iter().enumerate() {
        if *count == 0 {
            bail!("cluster {c} has no members");
        }
        for s in &mut sums[c] {
            *s /= *count as f64;
        }
    }
    Ok(sums)
}

fn run_plot(config: &RunConfig, out: &Path, kind: &PlotKind) -> Result<()> {
    let (name, path) = match kind {
        PlotKind::Trajectories { data, partition, labels } => {
            let data = default_path(out, data.as_deref(), "trajectories.csv");
            let dataset = load_dataset(&data)?;
            let clusters = match (partition, labels) {
                (Some(p), _) => Some(assignments_for(dataset.subject_ids(), p)?),
                (None, Some(l)) => Some(assignments_for(dataset.subject_ids(), l)?),
                (None, None) => None,
            };
            let svg_path = out.join("trajectories.svg");
            render_svg(
                &SvgData::Trajectories { rows: dataset.values(), clusters: clusters.as_deref() },
                &svg_path,
            )?;
            ("plot-trajectories", format!("trajclust plot trajectories {} --out {}", data.display(), config.out_dir))
        }
        PlotKind::Embedding { embedding, partition } => {
            let embedding = default_path(out, embedding.as_deref(), "embedding.csv");
            let (ids, rows) = io::load_embedding(&embedding)?;
            if rows.first().map(|r| r.len()).unwrap_or(0) < 2 {
                bail!("embedding needs at least two components to scatter");
            }
            let points: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let clusters = match partition {
                Some(p) => Some(assignments_for(&ids, p)?),
                None => None,
            };
            render_svg(
                &SvgData::EmbeddingScatter { points: &points, clusters: clusters.as_deref() },
                &out.join("embedding.svg"),
            )?;
            ("plot-embedding", format!("trajclust plot embedding {} --out {}", embedding.display(), config.out_dir))
        }
        PlotKind::ChBars { scores } => {
            let scores_path = default_path(out, scores.as_deref(), "ch_scores.csv");
            let scores = io::load_ch_scores(&scores_path)?;
            render_svg(&SvgData::ChBars { scores: &scores }, &out.join("ch_bars.svg"))?;
            ("plot-ch-bars", format!("trajclust plot ch-bars {} --out {}", scores_path.display(), config.out_dir))
        }
        PlotKind::MeanCurves { data, partition } => {
            let data = default_path(out, data.as_deref(), "trajectories.csv");
            let partition = default_path(out, partition.as_deref(), "partition.csv");
            let dataset = load_dataset(&data)?;
            let assignments = assignments_for(dataset.subject_ids(), &partition)?;
            let curves = cluster_means(dataset.values(), &assignments)?;
            render_svg(&SvgData::MeanCurves { curves: &curves }, &out.join("mean_curves.svg"))?;
            (
                "plot-mean-curves",
                format!(
                    "trajclust plot mean-curves {} --partition {} --out {}",
                    data.display(),
                    partition.display(),
                    config.out_dir
                ),
            )
        }
    };
    write_manifest(out, name, config, &path)?;
    println!("wrote {}/{}.svg", config.out_dir, name.trim_start_matches("plot-").replace('-', "_"));
    Ok(())
}

fn run_reproduce_sim(config: &RunConfig, out: &Path) -> Result<()> {
    println!("[1/6] simulating the two-group benchmark");
    let dataset = simulate_qol(&config.sim)?;
    io::write_trajectories(&out.join("trajectories.csv"), &dataset)?;
    let labels = dataset.labels().expect("simulated datasets carry group labels");
    io::write_labels(&out.join("labels.csv"), dataset.subject_ids(), labels)?;
    let label_indices: Vec<usize> = labels.iter().map(|l| usize::from(l == "B")).collect();
    render_svg(
        &SvgData::Trajectories { rows: dataset.values(), clusters: Some(&label_indices) },
        &out.join("trajectories.svg"),
    )?;

    println!(
        "[2/6] longitudinal k-means ({}) sweep, k = {}..={}",
        config.kml_metric, config.kml_k_min, config.kml_k_max
    );
    let sweep = select_k_by_ch(
        &dataset,
        config.kml_k_min,
        config.kml_k_max,
        config.kml_metric,
        config.kml_restarts,
        config.seed,
    )?;
    io::write_ch_scores(&out.join("ch_scores.csv"), &sweep.scores)?;
    io::write_partition(&out.join("kml_partition.csv"), dataset.subject_ids(), &sweep.best)?;
    let kml_membership = gaussian_membership(dataset.values(), &sweep.best)?;
    io::write_membership(&out.join("kml_membership.csv"), dataset.subject_ids(), &kml_membership)?;
    render_svg(&SvgData::ChBars { scores: &sweep.scores }, &out.join("ch_bars.svg"))?;
    let kml_means = cluster_means(dataset.values(), &sweep.best.assignments)?;
    render_svg(&SvgData::MeanCurves { curves: &kml_means }, &out.join("mean_curves.svg"))?;
    println!("      CH selects k = {}", sweep.best_k);

    println!("[3/6] training the autoencoder ({} epochs)", config.train.epochs);
    let mut arch = config.arch.clone();
    arch.input_size = 1;
    let (model, history) = train(&dataset, &arch, &config.train)?;
    model.save(&out.join("model.json"))?;
    io::write_loss_history(&out.join("loss_history.csv"), &history)?;
    println!("      final loss {:.6}", history.last().copied().unwrap_or(f64::NAN));

    println!("[4/6] embedding all trajectories");
    let normalized = dataset.normalized_with(model.norm);
    let mut points = Vec::with_capacity(normalized.n_subjects());
    for row in normalized.values() {
        points.push(encode(&model, row)?);
    }
    io::write_embedding(&out.join("embedding.csv"), dataset.subject_ids(), &points)?;

    println!(
        "[5/6] clustering the embedding ({}, k = {})",
        config.cluster_method, config.cluster_k
    );
    let partition = match config.cluster_method.linkage() {
        None => kmeans_fit(&points, config.cluster_k, config.cluster_restarts, config.seed)?,
        Some(linkage) => agglomerative_fit(&points, config.cluster_k, linkage)?,
    };
    io::write_partition(&out.join("partition.csv"), dataset.subject_ids(), &partition)?;
    let membership = gaussian_membership(&points, &partition)?;
    io::write_membership(&out.join("membership.csv"), dataset.subject_ids(), &membership)?;
    if model.dims.embed_dim >= 2 {
        let scatter: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
        render_svg(
            &SvgData::EmbeddingScatter { points: &scatter, clusters: Some(&partition.assignments) },
            &out.join("embedding.svg"),
        )?;
    }

    println!("[6/6] scoring both partitions against the true groups");
    let truth = Partition::from_assignments(label_indices, 2)?;
    let ae_ari = adjusted_rand_index(&partition, &truth)?;
    let kml_ari = adjusted_rand_index(&sweep.best, &truth)?;
    std::fs::write(
        out.join("ari_summary.csv"),
        format!("method,ari\nae,{ae_ari}\nkml,{kml_ari}\n"),
    )
    .with_context(|| format!("cannot write `{}/ari_summary.csv`", out.display()))?;
    println!("      autoencoder pipeline ARI = {ae_ari:.4}");
    println!("      kml (k = {}) ARI = {kml_ari:.4}", sweep.best_k);

    write_manifest(
        out,
        "reproduce-sim",
        config,
        &format!("trajclust reproduce-sim --out {}", config.out_dir),
    )?;
    Ok(())
}
