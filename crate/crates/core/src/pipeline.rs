//! Shared pipeline plumbing used by several subcommands: load graph and
//! events, extract the feature snapshot per hashtag (parallel across
//! hashtags), attach labels, and write the CSV artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::features::{assemble, category_of, Category, FeatureSpec, FeatureVector, FEATURE_NAMES};
use crate::graph::{load_graph, FollowerGraph};
use crate::ingest::{
    filter_fresh_hashtags, parse_events, split_by_hashtag, EventFormat, HashtagStream, IngestStats,
};
use crate::labeling::Label;
use crate::ml::dataset::{format_value, write_feature_csv, FeatureRow};
use crate::ml::eval::EvalReport;
use crate::tracker::run_to_threshold;
use crate::error::Result;
use rayon::prelude::*;

pub struct LoadedCorpus {
    pub graph: FollowerGraph,
    pub streams: BTreeMap<String, HashtagStream>,
    pub stats: IngestStats,
    pub total_hashtags: usize,
    pub excluded_hashtags: usize,
}

pub fn load_corpus(
    edges: &Path,
    geo: &Path,
    events: &Path,
    strict: bool,
    window_hours: i64,
    max_early: u64,
) -> Result<LoadedCorpus> {
    let graph = load_graph(edges, geo)?;
    let (evs, stats) = parse_events(events, &graph, EventFormat::from_path(events), strict)?;
    let keep = filter_fresh_hashtags(&evs, window_hours * 3600, max_early);
    let total_hashtags = evs
        .iter()
        .map(|e| e.hashtag.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let excluded_hashtags = total_hashtags - keep.len();
    let streams = split_by_hashtag(&evs, &keep);
    Ok(LoadedCorpus {
        graph,
        streams,
        stats,
        total_hashtags,
        excluded_hashtags,
    })
}

pub struct Extraction {
    /// (hashtag, total tweets, features at the threshold), sorted by hashtag.
    pub eligible: Vec<(String, u64, FeatureVector)>,
    /// (hashtag, total tweets) of streams shorter than the threshold.
    pub ineligible: Vec<(String, u64)>,
}

/// Replay every eligible stream to the threshold and assemble its feature
/// snapshot. Streams are independent, so this runs in parallel.
pub fn extract_features(
    g: &FollowerGraph,
    streams: &BTreeMap<String, HashtagStream>,
    n: usize,
    spec: &FeatureSpec,
) -> Result<Extraction> {
    let mut ineligible = Vec::new();
    let mut runnable: Vec<&HashtagStream> = Vec::new();
    for (tag, stream) in streams {
        if stream.len() < n {
            ineligible.push((tag.clone(), stream.len() as u64));
        } else {
            runnable.push(stream);
        }
    }
    let eligible: Result<Vec<(String, u64, FeatureVector)>> = runnable
        .par_iter()
        .map(|stream| {
            let state = run_to_threshold(stream, n, g)?;
            let fv = assemble(&state, g, spec)?;
            Ok((stream.hashtag.clone(), stream.len() as u64, fv))
        })
        .collect();
    Ok(Extraction {
        eligible: eligible?,
        ineligible,
    })
}

pub fn stream_totals(streams: &BTreeMap<String, HashtagStream>) -> BTreeMap<String, u64> {
    streams
        .iter()
        .map(|(tag, s)| (tag.clone(), s.len() as u64))
        .collect()
}

/// Canonical feature columns minus the geography category, for
/// geography-restricted runs.
pub fn non_geo_columns() -> (Vec<&'static str>, Vec<usize>) {
    let mut names = Vec::new();
    let mut idx = Vec::new();
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        if category_of(i) != Category::Geography {
            names.push(*name);
            idx.push(i);
        }
    }
    (names, idx)
}

/// Write features.csv (labeled, eligible hashtags only appear with their
/// label; ineligible streams never reach this file) and the ineligible
/// sidecar. `columns` selects and orders the exported feature indices.
pub fn write_extraction(
    out_dir: &Path,
    extraction: &Extraction,
    labels: &BTreeMap<String, Label>,
    n: usize,
    names: &[&str],
    columns: &[usize],
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let subsets: Vec<Vec<f64>> = extraction
        .eligible
        .iter()
        .map(|(_, _, fv)| columns.iter().map(|&c| fv.values[c]).collect())
        .collect();
    let rows: Vec<FeatureRow<'_>> = extraction
        .eligible
        .iter()
        .zip(&subsets)
        .map(|((tag, _, _), values)| FeatureRow {
            hashtag: tag,
            n,
            label: labels.get(tag).copied().unwrap_or(Label::Ineligible),
            values,
        })
        .collect();
    let w = BufWriter::new(File::create(out_dir.join("features.csv"))?);
    write_feature_csv(w, names, &rows)?;

    let mut side = BufWriter::new(File::create(out_dir.join("ineligible.csv"))?);
    writeln!(side, "hashtag,total_tweets")?;
    for (tag, total) in &extraction.ineligible {
        writeln!(side, "{tag},{total}")?;
    }
    side.flush()?;
    Ok(())
}

/// Labeled in-memory dataset over the extracted snapshots (ineligible rows
/// are dropped), with the given column selection.
pub fn dataset_from_extraction(
    extraction: &Extraction,
    labels: &BTreeMap<String, Label>,
    names: &[&str],
    columns: &[usize],
) -> Result<crate::ml::Dataset> {
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut keys = Vec::new();
    for (tag, _, fv) in &extraction.eligible {
        let y = match labels.get(tag) {
            Some(Label::Viral) => true,
            Some(Label::NonViral) => false,
            _ => continue,
        };
        rows.push(columns.iter().map(|&c| fv.values[c]).collect());
        ys.push(y);
        keys.push(tag.clone());
    }
    crate::ml::Dataset::new(
        names.iter().map(|s| s.to_string()).collect(),
        rows,
        ys,
        keys,
    )
}

pub fn write_labels_csv(
    path: &Path,
    totals: &BTreeMap<String, u64>,
    labels: &BTreeMap<String, Label>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "hashtag,total_tweets,label")?;
    for (tag, total) in totals {
        let label = labels.get(tag).copied().unwrap_or(Label::Ineligible);
        writeln!(w, "{tag},{total},{}", label.as_str())?;
    }
    w.flush()?;
    Ok(())
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Evaluation table (metrics as percentages) plus a per-combo PR curve
/// and a human-readable summary.
pub fn write_eval_reports(out_dir: &Path, reports: &[(String, EvalReport)]) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(File::create(out_dir.join("report.csv"))?);
    writeln!(
        w,
        "features,precision,recall,f_measure,auc_pr,best_f,best_f_theta,folds_used,folds_skipped"
    )?;
    for (name, r) in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            name,
            pct(r.precision),
            pct(r.recall),
            pct(r.f_measure),
            pct(r.auc_pr),
            pct(r.best_f),
            format_value(r.best_f_theta),
            r.folds_used,
            r.folds_skipped
        )?;
    }
    w.flush()?;

    for (name, r) in reports {
        let fname = format!("pr_curve_{}.csv", name.replace('+', "_"));
        let mut w = BufWriter::new(File::create(out_dir.join(fname))?);
        writeln!(w, "theta,precision,recall")?;
        for p in &r.pr_curve {
            writeln!(
                w,
                "{},{},{}",
                format_value(p.theta),
                format_value(p.precision),
                format_value(p.recall)
            )?;
        }
        w.flush()?;
    }

    let mut w = BufWriter::new(File::create(out_dir.join("report.txt"))?);
    writeln!(
        w,
        "{:<12} {:>10} {:>10} {:>10} {:>10}   (percent, threshold 0.5)",
        "features", "precision", "recall", "f-measure", "auc-pr"
    )?;
    for (name, r) in reports {
        writeln!(
            w,
            "{:<12} {:>10} {:>10} {:>10} {:>10}",
            name,
            pct(r.precision),
            pct(r.recall),
            pct(r.f_measure),
            pct(r.auc_pr)
        )?;
    }
    w.flush()?;
    Ok(())
}
