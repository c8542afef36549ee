//! Spearman rank correlation between early feature values and final hashtag
//! growth, traced over checkpoints with bootstrap confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{assemble, FeatureSpec, FEATURE_COUNT, FEATURE_NAMES};
use crate::graph::FollowerGraph;
use crate::ingest::HashtagStream;
use crate::tracker::DiffusionState;

const BOOTSTRAP_REPS: usize = 1000;

/// Average ranks (ties share the mean of the positions they occupy).
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Tie-corrected Spearman rank correlation (Pearson on average ranks).
/// Errors on mismatched lengths, fewer than 3 points, or a constant side.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::validation("correlation inputs differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::data("need at least 3 points for rank correlation"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite value in correlation input"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry).ok_or_else(|| Error::data("constant input has no rank correlation"))
}

/// One correlation measurement at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub checkpoint: usize,
    pub rho: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hashtags: usize,
}

/// Spearman rho with a percentile bootstrap 95% CI over hashtag resamples.
pub fn spearman_with_ci(
    feature: &[f64],
    growth: &[f64],
    checkpoint: usize,
    seed: u64,
) -> Result<CorrelationPoint> {
    let rho = spearman(feature, growth)?;
    let n = feature.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(BOOTSTRAP_REPS);
    let mut fx = vec![0.0; n];
    let mut gx = vec![0.0; n];
    for _ in 0..BOOTSTRAP_REPS {
        for k in 0..n {
            let i = rng.random_range(0..n);
            fx[k] = feature[i];
            gx[k] = growth[i];
        }
        // a degenerate resample (constant side) carries no rank information
        if let Ok(r) = spearman(&fx, &gx) {
            samples.push(r);
        }
    }
    let (ci_low, ci_high) = if samples.is_empty() {
        (rho, rho)
    } else {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = ((samples.len() as f64) * 0.025).floor() as usize;
        let hi = (((samples.len() as f64) * 0.975).ceil() as usize).min(samples.len()) - 1;
        (samples[lo], samples[hi])
    };
    Ok(CorrelationPoint {
        checkpoint,
        rho,
        ci_low,
        ci_high,
        hashtags: n,
    })
}

/// For every feature, Spearman rho between its value after `checkpoint`
/// tweets and the hashtag's final adopter count, at each checkpoint. Only
/// streams long enough for the largest checkpoint participate.
pub fn spearman_vs_growth(
    streams: &[HashtagStream],
    g: &FollowerGraph,
    checkpoints: &[usize],
    spec: &FeatureSpec,
    seed: u64,
) -> Result<Vec<(String, Vec<CorrelationPoint>)>> {
    if checkpoints.is_empty() || checkpoints.contains(&0) {
        return Err(Error::validation("checkpoints must be positive"));
    }
    let mut sorted_cp: Vec<usize> = checkpoints.to_vec();
    sorted_cp.sort_unstable();
    sorted_cp.dedup();
    let max_cp = *sorted_cp.last().unwrap();
    let eligible: Vec<&HashtagStream> =
        streams.iter().filter(|s| s.len() >= max_cp).collect();
    if eligible.len() < 3 {
        return Err(Error::data(format!(
            "{} hashtags reach {} tweets; need at least 3",
            eligible.len(),
            max_cp
        )));
    }
    // snapshots[cp_idx][feature] per hashtag, from a single replay per stream
    let mut growth: Vec<f64> = Vec::with_capacity(eligible.len());
    let mut snapshots: Vec<Vec<[f64; FEATURE_COUNT]>> =
        vec![Vec::with_capacity(eligible.len()); sorted_cp.len()];
    for stream in &eligible {
        let mut state = DiffusionState::new(stream.hashtag.clone());
        let mut next_cp = 0;
        for (i, ev) in stream.events.iter().enumerate() {
            state.apply_event(ev, g)?;
            if next_cp < sorted_cp.len() && i + 1 == sorted_cp[next_cp] {
                let fv = assemble(&state, g, spec)?;
                snapshots[next_cp].push(fv.values);
                next_cp += 1;
            }
        }
        growth.push(state.adopter_count() as f64);
    }
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    for (f, name) in FEATURE_NAMES.iter().enumerate() {
        let mut series = Vec::with_capacity(sorted_cp.len());
        for (c, &cp) in sorted_cp.iter().enumerate() {
            let column: Vec<f64> = snapshots[c].iter().map(|v| v[f]).collect();
            let point = match spearman_with_ci(
                &column,
                &growth,
                cp,
                seed ^ ((f as u64) << 32 | c as u64),
            ) {
                Ok(p) => p,
                // a feature constant across hashtags at this checkpoint
                Err(_) => CorrelationPoint {
                    checkpoint: cp,
                    rho: 0.0,
                    ci_low: 0.0,
                    ci_high: 0.0,
                    hashtags: column.len(),
                },
            };
            series.push(point);
        }
        out.push((name.to_string(), series));
    }
    Ok(out)
}
