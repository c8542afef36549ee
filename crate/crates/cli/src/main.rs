//! `cgnp` — hashtag virality prediction pipeline over a follower graph.
//!
//! Subcommands cover the whole experiment loop: corpus simulation, event
//! ingestion, feature extraction at an early prediction threshold, virality
//! labeling, feature ranking, random-forest training, cross-validated
//! evaluation, threshold sweeps, per-geography runs, and plot-data dumps.
//! Exit codes: 0 success, 2 invalid configuration/arguments, 3 data error.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cgnp_core::features::{FeatureSpec, FEATURE_NAMES};
use cgnp_core::graph::degree_stats;
use cgnp_core::labeling::{label, Label, LabelMode, TaskConfig};
use cgnp_core::ml::dataset::{format_value, Dataset, E1Definition, FeatureCombo};
use cgnp_core::ml::eval::{evaluate_cv, feature_set_experiment, undersample, CvConfig};
use cgnp_core::ml::forest::{train_forest, ForestParams};
use cgnp_core::ml::info_gain::rank_features;
use cgnp_core::ml::spearman::spearman_vs_growth;
use cgnp_core::simgen::{generate_corpus, SimConfig};
use cgnp_core::tracker::run_to_threshold;
use cgnp_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cgnp_core::pipeline::*;
use config::{resolve, FileConfig};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "cgnp", version, about = "Hashtag virality prediction pipeline")]
struct Cli {
    /// TOML config file (or set CGNP_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CorpusArgs {
    /// Follower edge file, one `u v` line per edge (v follows u).
    #[arg(long)]
    edges: PathBuf,
    /// Geography file, one `node_id geo_name` line per node.
    #[arg(long)]
    geo: PathBuf,
    /// Event log (JSONL, or CSV by extension).
    #[arg(long)]
    events: PathBuf,
    /// Abort on the first malformed event instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Fresh-hashtag filter window, hours.
    #[arg(long)]
    window_hours: Option<i64>,
    /// Maximum tweets inside the window before a hashtag is considered
    /// pre-existing and dropped.
    #[arg(long)]
    max_early: Option<u64>,
}

#[derive(Args)]
struct TaskArgs {
    /// Prediction threshold: features are frozen after this many tweets.
    #[arg(long)]
    n: Option<usize>,
    /// Virality threshold (absolute mode): total tweets for a viral label.
    #[arg(long)]
    m: Option<u64>,
    /// Labeling mode: absolute | percentile.
    #[arg(long)]
    mode: Option<String>,
    /// Top-k percent cut for percentile mode.
    #[arg(long)]
    percentile_k: Option<f64>,
}

#[derive(Args)]
struct MlArgs {
    /// Master seed (required: evaluation must be reproducible).
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Majority-class keep rate on training folds.
    #[arg(long)]
    undersample: Option<f64>,
    /// Feature combos, e.g. `E1,E,E+C,E+N+G+C`.
    #[arg(long)]
    combos: Option<String>,
    /// E1 baseline definition: adopters-time | adopters-rt.
    #[arg(long)]
    e1: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus (graph, events, ground-truth labels).
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        hashtags: Option<usize>,
        #[arg(long)]
        geographies: Option<usize>,
        #[arg(long)]
        viral_fraction: Option<f64>,
        #[arg(long)]
        mean_degree: Option<f64>,
        #[arg(long)]
        exponent: Option<f64>,
        #[arg(long)]
        homophily: Option<f64>,
        /// Full simulation config as TOML (overridden by the flags above).
        #[arg(long)]
        sim_config: Option<PathBuf>,
    },
    /// Parse and filter an event log; report per-hashtag stream stats.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the labeled feature snapshot at the prediction threshold.
    Extract {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also dump each eligible hashtag's conductance series.
        #[arg(long)]
        dump_conductance: bool,
    },
    /// Label every hashtag from its total tweet count.
    Label {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank features by information gain; optionally trace Spearman
    /// correlation against final growth over tweet-count checkpoints.
    Rank {
        /// features.csv produced by `extract`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Tweet-count checkpoints for the correlation trace, e.g.
        /// `200,500,1000,2000`; requires --edges/--geo/--events.
        #[arg(long)]
        checkpoints: Option<String>,
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        geo: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a random forest on a feature CSV and save the model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        ml: MlArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated evaluation per feature combo.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        ml: MlArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// AUC versus prediction threshold over a list of n values.
    #[command(name = "sweep-n")]
    SweepN {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        ml: MlArgs,
        /// Ascending thresholds, e.g. `250,500,1000,1500`.
        #[arg(long)]
        n_values: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the pipeline restricted to one geography (M fixed at 10n,
    /// geography features excluded).
    Geo {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Geography name as it appears in the geo file.
        #[arg(long)]
        geo_name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also run cross-validated evaluation (needs --seed).
        #[arg(long)]
        evaluate: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        undersample: Option<f64>,
    },
    /// Follower-count distribution of the graph.
    Stats {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        geo: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time taken to reach the prediction threshold, per hashtag, with CDF.
    Ttp {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) => 2,
                _ => 3,
            }
        }
    };
    std::process::exit(code);
}

fn parse_mode(s: &str) -> Result<LabelMode> {
    match s {
        "absolute" => Ok(LabelMode::Absolute),
        "percentile" => Ok(LabelMode::Percentile),
        other => Err(Error::validation(format!(
            "mode `{other}` is not absolute|percentile"
        ))),
    }
}

fn parse_e1(s: &str) -> Result<E1Definition> {
    match s {
        "adopters-time" => Ok(E1Definition::AdoptersTime),
        "adopters-rt" => Ok(E1Definition::AdoptersRetweets),
        other => Err(Error::validation(format!(
            "e1 `{other}` is not adopters-time|adopters-rt"
        ))),
    }
}

fn parse_combos(s: &str) -> Result<Vec<FeatureCombo>> {
    s.split(',')
        .map(|c| FeatureCombo::parse(c.trim()))
        .collect()
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::validation(format!("bad count `{p}`")))
        })
        .collect()
}

struct ResolvedTask {
    task: TaskConfig,
    window_hours: i64,
    max_early: u64,
    strict: bool,
}

fn resolve_task(corpus: &CorpusArgs, task: &TaskArgs, file: &FileConfig) -> Result<ResolvedTask> {
    let defaults = TaskConfig::default();
    let mode = match (&task.mode, &file.mode) {
        (Some(m), _) => parse_mode(m)?,
        (None, Some(m)) => parse_mode(m)?,
        _ => defaults.mode,
    };
    let cfg = TaskConfig {
        n: resolve(task.n, file.n, defaults.n),
        m: resolve(task.m, file.m, defaults.m),
        mode,
        percentile_k: resolve(task.percentile_k, file.percentile_k, defaults.percentile_k),
    };
    cfg.validate()?;
    Ok(ResolvedTask {
        task: cfg,
        window_hours: resolve(corpus.window_hours, file.window_hours, 12),
        max_early: resolve(corpus.max_early, file.max_early, 5),
        strict: corpus.strict || file.strict.unwrap_or(false),
    })
}

fn resolve_cv(ml: &MlArgs, file: &FileConfig) -> CvConfig {
    CvConfig {
        folds: resolve(ml.folds, file.folds, 10),
        seed: ml.seed,
        undersample_rate: resolve(ml.undersample, file.undersample, 0.3),
        forest: ForestParams {
            trees: resolve(ml.trees, file.trees, 500),
            ..ForestParams::default()
        },
    }
}

fn load_corpus_args(corpus: &CorpusArgs, rt: &ResolvedTask) -> Result<LoadedCorpus> {
    load_corpus(
        &corpus.edges,
        &corpus.geo,
        &corpus.events,
        rt.strict,
        rt.window_hours,
        rt.max_early,
    )
}

fn corpus_inputs(corpus: &CorpusArgs) -> Vec<&Path> {
    vec![&corpus.edges, &corpus.geo, &corpus.events]
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Simulate {
            out,
            seed,
            nodes,
            hashtags,
            geographies,
            viral_fraction,
            mean_degree,
            exponent,
            homophily,
            sim_config,
        } => {
            let mut cfg = match sim_config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    toml::from_str::<SimConfig>(&text).map_err(|e| {
                        Error::validation(format!("sim config {}: {e}", path.display()))
                    })?
                }
                None => SimConfig::default(),
            };
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = nodes {
                cfg.nodes = v;
            }
            if let Some(v) = hashtags {
                cfg.hashtags = v;
            }
            if let Some(v) = geographies {
                cfg.geographies = v;
            }
            if let Some(v) = viral_fraction {
                cfg.viral_fraction = v;
            }
            if let Some(v) = mean_degree {
                cfg.mean_degree = v;
            }
            if let Some(v) = exponent {
                cfg.exponent = v;
            }
            if let Some(v) = homophily {
                cfg.homophily = v;
            }
            let summary = generate_corpus(&cfg, &out)?;
            RunManifest::new("simulate", &cfg, &[])?.write(&out)?;
            println!(
                "wrote {} events for {} hashtags ({} viral by construction) under {}",
                summary.events,
                summary.hashtags,
                summary.viral_truth,
                out.display()
            );
            Ok(())
        }

        Cmd::Ingest { corpus, out } => {
            let rt = resolve_task(&corpus, &TaskArgs { n: None, m: None, mode: None, percentile_k: None }, &file)?;
            let loaded = load_corpus_args(&corpus, &rt)?;
            std::fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("hashtags.csv"))?);
            writeln!(w, "hashtag,total_tweets,first_ts,last_ts")?;
            for (tag, stream) in &loaded.streams {
                writeln!(
                    w,
                    "{tag},{},{},{}",
                    stream.len(),
                    stream.first_ts().unwrap_or(0),
                    stream.last_ts().unwrap_or(0)
                )?;
            }
            w.flush()?;
            let stats = json!({
                "hashtags_total": loaded.total_hashtags,
                "hashtags_kept": loaded.streams.len(),
                "hashtags_excluded_early": loaded.excluded_hashtags,
                "dropped_unknown_user": loaded.stats.dropped_unknown_user,
                "malformed_skipped": loaded.stats.malformed_skipped,
                "reordered": loaded.stats.reordered,
            });
            std::fs::write(
                out.join("stats.json"),
                serde_json::to_string_pretty(&stats).map_err(|e| Error::Data(e.to_string()))?,
            )?;
            let cfg = json!({"window_hours": rt.window_hours, "max_early": rt.max_early, "strict": rt.strict});
            RunManifest::new("ingest", &cfg, &corpus_inputs(&corpus))?.write(&out)?;
            println!(
                "kept {} of {} hashtags ({} excluded by the freshness filter)",
                loaded.streams.len(),
                loaded.total_hashtags,
                loaded.excluded_hashtags
            );
            Ok(())
        }

        Cmd::Extract {
            corpus,
            task,
            out,
            dump_conductance,
        } => {
            let rt = resolve_task(&corpus, &task, &file)?;
            let loaded = load_corpus_args(&corpus, &rt)?;
            let spec = FeatureSpec::default();
            let extraction = extract_features(&loaded.graph, &loaded.streams, rt.task.n, &spec)?;
            let totals = stream_totals(&loaded.streams);
            let labels = label(&totals, &rt.task)?;
            let names: Vec<&str> = FEATURE_NAMES.to_vec();
            let columns: Vec<usize> = (0..names.len()).collect();
            write_extraction(&out, &extraction, &labels, rt.task.n, &names, &columns)?;
            write_labels_csv(&out.join("labels.csv"), &totals, &labels)?;
            if dump_conductance {
                let dir = out.join("conductance");
                std::fs::create_dir_all(&dir)?;
                for (tag, _, _) in &extraction.eligible {
                    let state = run_to_threshold(&loaded.streams[tag], rt.task.n, &loaded.graph)?;
                    let mut w =
                        BufWriter::new(File::create(dir.join(format!("{tag}.csv")))?);
                    writeln!(w, "i,t_i,c_i")?;
                    for (i, (&t, &c)) in state
                        .timestamps
                        .iter()
                        .zip(&state.conductance_series)
                        .enumerate()
                    {
                        writeln!(w, "{},{},{}", i + 1, t, format_value(c))?;
                    }
                    w.flush()?;
                }
            }
            RunManifest::new("extract", &rt.task, &corpus_inputs(&corpus))?.write(&out)?;
            println!(
                "extracted {} eligible hashtags ({} below n={})",
                extraction.eligible.len(),
                extraction.ineligible.len(),
                rt.task.n
            );
            Ok(())
        }

        Cmd::Label { corpus, task, out } => {
            let rt = resolve_task(&corpus, &task, &file)?;
            let loaded = load_corpus_args(&corpus, &rt)?;
            let totals = stream_totals(&loaded.streams);
            let labels = label(&totals, &rt.task)?;
            std::fs::create_dir_all(&out)?;
            write_labels_csv(&out.join("labels.csv"), &totals, &labels)?;
            let viral = labels.values().filter(|&&l| l == Label::Viral).count();
            let eligible = labels.values().filter(|&&l| l != Label::Ineligible).count();
            RunManifest::new("label", &rt.task, &corpus_inputs(&corpus))?.write(&out)?;
            println!("{viral} viral of {eligible} eligible hashtags");
            Ok(())
        }

        Cmd::Rank {
            features,
            bins,
            out,
            checkpoints,
            edges,
            geo,
            events,
            seed,
        } => {
            let ds = Dataset::from_feature_csv(&features)?;
            let bins = resolve(bins, file.bins, 10);
            let ranked = rank_features(&ds, bins)?;
            std::fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("gains.csv"))?);
            writeln!(w, "rank,feature,gain_bits")?;
            for (i, (name, gain)) in ranked.iter().enumerate() {
                writeln!(w, "{},{},{}", i + 1, name, format_value(*gain))?;
            }
            w.flush()?;
            let mut inputs: Vec<&Path> = vec![&features];

            if let Some(cp) = &checkpoints {
                let (Some(edges), Some(geo), Some(events)) = (&edges, &geo, &events) else {
                    return Err(Error::validation(
                        "--checkpoints needs --edges, --geo and --events",
                    ));
                };
                let cps = parse_counts(cp)?;
                let loaded = load_corpus(edges, geo, events, false, 12, 5)?;
                let streams: Vec<_> = loaded.streams.values().cloned().collect();
                let series = spearman_vs_growth(
                    &streams,
                    &loaded.graph,
                    &cps,
                    &FeatureSpec::default(),
                    seed.unwrap_or(0),
                )?;
                let mut w = BufWriter::new(File::create(out.join("spearman.csv"))?);
                writeln!(w, "feature,checkpoint,rho,ci_low,ci_high,hashtags")?;
                for (name, points) in &series {
                    for p in points {
                        writeln!(
                            w,
                            "{},{},{},{},{},{}",
                            name,
                            p.checkpoint,
                            format_value(p.rho),
                            format_value(p.ci_low),
                            format_value(p.ci_high),
                            p.hashtags
                        )?;
                    }
                }
                w.flush()?;
                inputs.extend([edges.as_path(), geo.as_path(), events.as_path()]);
            }
            let cfg = json!({"bins": bins, "checkpoints": checkpoints});
            RunManifest::new("rank", &cfg, &inputs)?.write(&out)?;
            println!(
                "top feature: {} (gain {:.5} bits)",
                ranked[0].0, ranked[0].1
            );
            Ok(())
        }

        Cmd::Train { features, ml, out } => {
            let ds = Dataset::from_feature_csv(&features)?;
            let e1 = parse_e1(ml.e1.as_deref().or(file.e1.as_deref()).unwrap_or("adopters-rt"))?;
            let cv = resolve_cv(&ml, &file);
            let (cols, combo_name) = match &ml.combos {
                Some(s) => {
                    let combos = parse_combos(s)?;
                    if combos.len() != 1 {
                        return Err(Error::validation("train takes exactly one combo"));
                    }
                    (ds.combo_columns(&combos[0], e1)?, combos[0].name())
                }
                None => ((0..ds.n_features()).collect(), "all".to_string()),
            };
            let sub = ds.select_columns(&cols);
            let all: Vec<usize> = (0..sub.len()).collect();
            let train_rows = undersample(&all, &sub.labels, cv.undersample_rate, ml.seed)?;
            let train_ds = sub.select_rows(&train_rows);
            let model = train_forest(&train_ds.rows, &train_ds.labels, &cv.forest, ml.seed)?;
            std::fs::create_dir_all(&out)?;
            model.save(&out.join("model.bin"))?;
            let cfg = json!({
                "seed": ml.seed, "trees": cv.forest.trees, "combo": combo_name,
                "undersample": cv.undersample_rate, "e1": format!("{e1:?}"),
                "rows_total": sub.len(), "rows_trained": train_ds.len(),
                "positives": train_ds.positives(),
            });
            RunManifest::new("train", &cfg, &[features.as_path()])?.write(&out)?;
            println!(
                "trained {} trees on {} rows ({} positive)",
                cv.forest.trees,
                train_ds.len(),
                train_ds.positives()
            );
            Ok(())
        }

        Cmd::Evaluate { features, ml, out } => {
            let ds = Dataset::from_feature_csv(&features)?;
            let e1 = parse_e1(ml.e1.as_deref().or(file.e1.as_deref()).unwrap_or("adopters-rt"))?;
            let cv = resolve_cv(&ml, &file);
            let combos = parse_combos(
                ml.combos
                    .as_deref()
                    .unwrap_or("E1,E,E+C,E+N+G,E+N+G+C"),
            )?;
            let reports = feature_set_experiment(&ds, &combos, e1, &cv)?;
            write_eval_reports(&out, &reports)?;
            let cfg = json!({
                "seed": ml.seed, "trees": cv.forest.trees, "folds": cv.folds,
                "undersample": cv.undersample_rate, "e1": format!("{e1:?}"),
                "combos": reports.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
                "rows": ds.len(), "positives": ds.positives(),
            });
            RunManifest::new("evaluate", &cfg, &[features.as_path()])?.write(&out)?;
            for (name, r) in &reports {
                println!(
                    "{name}: P {:.2} R {:.2} F {:.2} AUC {:.2} (percent)",
                    r.precision * 100.0,
                    r.recall * 100.0,
                    r.f_measure * 100.0,
                    r.auc_pr * 100.0
                );
            }
            Ok(())
        }

        Cmd::SweepN {
            corpus,
            mut task,
            ml,
            n_values,
            out,
        } => {
            let ns = parse_counts(&n_values)?;
            if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation("--n-values must be strictly ascending"));
            }
            // validate the base task at the smallest threshold; each row
            // below re-validates at its own n
            task.n = Some(ns[0]);
            let rt = resolve_task(&corpus, &task, &file)?;
            let e1 = parse_e1(ml.e1.as_deref().or(file.e1.as_deref()).unwrap_or("adopters-rt"))?;
            let cv = resolve_cv(&ml, &file);
            let combos = parse_combos(ml.combos.as_deref().unwrap_or("E,E+C,E+N+G+C"))?;
            let loaded = load_corpus_args(&corpus, &rt)?;
            let totals = stream_totals(&loaded.streams);
            let names: Vec<&str> = FEATURE_NAMES.to_vec();
            let columns: Vec<usize> = (0..names.len()).collect();
            let spec = FeatureSpec::default();
            std::fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("auc_vs_n.csv"))?);
            writeln!(w, "n,features,auc_pr,precision,recall,f_measure,rows,positives")?;
            for &n in &ns {
                let task_n = TaskConfig { n, ..rt.task };
                task_n.validate()?;
                let labels = label(&totals, &task_n)?;
                let extraction = extract_features(&loaded.graph, &loaded.streams, n, &spec)?;
                let ds = dataset_from_extraction(&extraction, &labels, &names, &columns)?;
                let reports = feature_set_experiment(&ds, &combos, e1, &cv)?;
                for (name, r) in &reports {
                    writeln!(
                        w,
                        "{n},{name},{},{},{},{},{},{}",
                        format_value(r.auc_pr),
                        format_value(r.precision),
                        format_value(r.recall),
                        format_value(r.f_measure),
                        ds.len(),
                        ds.positives()
                    )?;
                }
            }
            w.flush()?;
            let cfg = json!({
                "n_values": ns, "m": rt.task.m, "seed": ml.seed,
                "trees": cv.forest.trees, "folds": cv.folds,
                "undersample": cv.undersample_rate,
            });
            RunManifest::new("sweep-n", &cfg, &corpus_inputs(&corpus))?.write(&out)?;
            println!("wrote {}", out.join("auc_vs_n.csv").display());
            Ok(())
        }

        Cmd::Geo {
            corpus,
            geo_name,
            n,
            out,
            evaluate: do_eval,
            seed,
            trees,
            folds,
            undersample: under,
        } => {
            let task_args = TaskArgs { n, m: None, mode: None, percentile_k: None };
            let rt = resolve_task(&corpus, &task_args, &file)?;
            let n = rt.task.n;
            // the restricted experiment fixes M at ten times the threshold
            let task = TaskConfig {
                n,
                m: 10 * n as u64,
                mode: LabelMode::Absolute,
                percentile_k: rt.task.percentile_k,
            };
            let loaded = load_corpus_args(&corpus, &rt)?;
            let gid = loaded
                .graph
                .geo_table()
                .id_of(&geo_name)
                .ok_or_else(|| Error::data(format!("unknown geography `{geo_name}`")))?;
            let sub = loaded.graph.restrict_to_geo(gid)?;
            // keep only events whose user lies inside the geography, and
            // re-index streams against the restricted graph
            let mut streams = BTreeMap::new();
            for (tag, stream) in &loaded.streams {
                let mut events = Vec::new();
                for ev in &stream.events {
                    let ext = loaded.graph.external_id(ev.user);
                    if let Some(user) = sub.resolve(ext) {
                        let mut ev = ev.clone();
                        ev.user = user;
                        ev.rt_source = ev
                            .rt_source
                            .and_then(|s| sub.resolve(loaded.graph.external_id(s)));
                        ev.mention_targets = ev
                            .mention_targets
                            .iter()
                            .filter_map(|&m| sub.resolve(loaded.graph.external_id(m)))
                            .collect();
                        events.push(ev);
                    }
                }
                if !events.is_empty() {
                    streams.insert(
                        tag.clone(),
                        cgnp_core::ingest::HashtagStream {
                            hashtag: tag.clone(),
                            events,
                        },
                    );
                }
            }
            let spec = FeatureSpec::default();
            let extraction = extract_features(&sub, &streams, n, &spec)?;
            let totals = stream_totals(&streams);
            let labels = label(&totals, &task)?;
            let (names, columns) = non_geo_columns();
            write_extraction(&out, &extraction, &labels, n, &names, &columns)?;
            write_labels_csv(&out.join("labels.csv"), &totals, &labels)?;
            if do_eval {
                let seed = seed.ok_or_else(|| {
                    Error::validation("--evaluate needs --seed for reproducibility")
                })?;
                let ml = MlArgs {
                    seed,
                    trees,
                    folds,
                    undersample: under,
                    combos: None,
                    e1: None,
                };
                let cv = resolve_cv(&ml, &file);
                let ds = dataset_from_extraction(&extraction, &labels, &names, &columns)?;
                let report = evaluate_cv(&ds, &cv)?;
                write_eval_reports(&out, &[("E+N+C".to_string(), report)])?;
            }
            let cfg = json!({
                "geography": geo_name, "n": n, "m": task.m,
                "nodes": sub.node_count(), "evaluate": do_eval, "seed": seed,
            });
            RunManifest::new("geo", &cfg, &corpus_inputs(&corpus))?.write(&out)?;
            println!(
                "geography `{geo_name}`: {} nodes, {} eligible hashtags (n={n}, M={})",
                sub.node_count(),
                extraction.eligible.len(),
                task.m
            );
            Ok(())
        }

        Cmd::Stats { edges, geo, out } => {
            let g = cgnp_core::graph::load_graph(&edges, &geo)?;
            let s = degree_stats(&g);
            std::fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("degrees.csv"))?);
            writeln!(w, "followers,node_count")?;
            for (d, c) in &s.histogram {
                writeln!(w, "{d},{c}")?;
            }
            w.flush()?;
            let cfg = json!({
                "nodes": g.node_count(), "edges": g.edge_count(),
                "geographies": g.geo_table().len() - 1,
                "mean_followers": s.mean, "max_followers": s.max,
                "duplicate_edges": g.load_stats().duplicate_edges,
                "self_loops": g.load_stats().self_loops,
            });
            std::fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&cfg).map_err(|e| Error::Data(e.to_string()))?,
            )?;
            RunManifest::new("stats", &cfg, &[edges.as_path(), geo.as_path()])?.write(&out)?;
            println!(
                "{} nodes, {} edges, mean followers {:.2}, max {}",
                g.node_count(),
                g.edge_count(),
                s.mean,
                s.max
            );
            Ok(())
        }

        Cmd::Ttp { corpus, task, out } => {
            let rt = resolve_task(&corpus, &task, &file)?;
            let n = rt.task.n;
            let loaded = load_corpus_args(&corpus, &rt)?;
            let mut times: Vec<(String, i64)> = Vec::new();
            for (tag, stream) in &loaded.streams {
                if stream.len() >= n {
                    let t = stream.events[n - 1].ts - stream.events[0].ts;
                    times.push((tag.clone(), t));
                }
            }
            if times.is_empty() {
                return Err(Error::data(format!("no hashtag reaches n={n} tweets")));
            }
            std::fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("ttp.csv"))?);
            writeln!(w, "hashtag,seconds_to_threshold")?;
            for (tag, t) in &times {
                writeln!(w, "{tag},{t}")?;
            }
            w.flush()?;
            let mut sorted: Vec<i64> = times.iter().map(|&(_, t)| t).collect();
            sorted.sort_unstable();
            let mut w = BufWriter::new(File::create(out.join("ttp_cdf.csv"))?);
            writeln!(w, "seconds,cumulative_fraction")?;
            for (i, t) in sorted.iter().enumerate() {
                writeln!(
                    w,
                    "{t},{}",
                    format_value((i + 1) as f64 / sorted.len() as f64)
                )?;
            }
            w.flush()?;
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 1 {
                sorted[mid] as f64
            } else {
                (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
            };
            let cfg = json!({"n": n, "hashtags": sorted.len(), "median_seconds": median});
            std::fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&cfg).map_err(|e| Error::Data(e.to_string()))?,
            )?;
            RunManifest::new("ttp", &cfg, &corpus_inputs(&corpus))?.write(&out)?;
            println!("median time to n={n}: {median} seconds over {} hashtags", sorted.len());
            Ok(())
        }
    }
}
