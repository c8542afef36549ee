//! Synthetic corpus generator: a power-law follower graph with geography
//! communities, plus labeled diffusion traces. The two regimes share their
//! timing and repeat-tweet dynamics and differ only in *where* new adopters
//! come from: the viral regime spreads along follow edges and saturates
//! communities (so conductance falls), the non-viral regime adopts scattered
//! nodes exogenously (so conductance stays high and flat).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FollowerGraph, GeographyTable};
use crate::ingest::{HashtagStream, TweetEvent};

/// Cascade parameters of one diffusion regime.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeParams {
    /// Initial self-initiated adopters.
    pub seeds: usize,
    /// Probability an exposed follower accepts a neighbor-driven adoption.
    pub adoption_prob: f64,
    /// Probability a new adoption is exogenous rather than neighbor-driven.
    pub exogenous_rate: f64,
    /// Median of the lognormal total-tweet stop size.
    pub stop_size_median: f64,
    /// Lognormal sigma of the stop size (0 = deterministic).
    pub stop_size_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Viral,
    NonViral,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Viral => "viral",
            Regime::NonViral => "nonviral",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub nodes: usize,
    /// Power-law exponent of the follower-count distribution.
    pub exponent: f64,
    pub mean_degree: f64,
    pub geographies: usize,
    /// Zipf skew of geography sizes (0 = equal sizes).
    pub geo_skew: f64,
    /// Probability mass of intra-geography follow edges.
    pub homophily: f64,
    /// Multiplier on the adoption probability when the candidate follower
    /// sits in a different geography than the tweeting adopter. Values below
    /// 1 make cascades saturate a community before escaping it.
    pub cross_geo_damping: f64,
    pub hashtags: usize,
    pub viral_fraction: f64,
    /// Probability an event attempts a new adoption (shared across regimes
    /// so evolution features carry little signal).
    pub adopt_event_frac: f64,
    /// Probability a repeat tweet is a retweet of an earlier adopter.
    pub retweet_prob: f64,
    /// Probability any tweet mentions a random adopter.
    pub mention_prob: f64,
    /// Mean of the exponential inter-event clock, seconds.
    pub mean_gap_secs: f64,
    /// Hashtag start offsets are uniform in [0, horizon_secs].
    pub horizon_secs: i64,
    pub viral: RegimeParams,
    pub nonviral: RegimeParams,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 10_000,
            exponent: 2.3,
            mean_degree: 15.0,
            geographies: 20,
            geo_skew: 0.5,
            homophily: 0.8,
            cross_geo_damping: 0.08,
            hashtags: 500,
            viral_fraction: 0.063,
            adopt_event_frac: 0.5,
            retweet_prob: 0.25,
            mention_prob: 0.2,
            mean_gap_secs: 240.0,
            horizon_secs: 90 * 86_400,
            viral: RegimeParams {
                seeds: 1,
                adoption_prob: 0.9,
                exogenous_rate: 0.02,
                stop_size_median: 25_000.0,
                stop_size_sigma: 0.15,
            },
            nonviral: RegimeParams {
                seeds: 5,
                adoption_prob: 0.2,
                exogenous_rate: 0.85,
                stop_size_median: 2_200.0,
                stop_size_sigma: 0.2,
            },
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn regime_params(&self, regime: Regime) -> &RegimeParams {
        match regime {
            Regime::Viral => &self.viral,
            Regime::NonViral => &self.nonviral,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("homophily", self.homophily),
            ("cross_geo_damping", self.cross_geo_damping),
            ("viral_fraction", self.viral_fraction),
            ("adopt_event_frac", self.adopt_event_frac),
            ("retweet_prob", self.retweet_prob),
            ("mention_prob", self.mention_prob),
            ("viral adoption_prob", self.viral.adoption_prob),
            ("viral exogenous_rate", self.viral.exogenous_rate),
            ("nonviral adoption_prob", self.nonviral.adoption_prob),
            ("nonviral exogenous_rate", self.nonviral.exogenous_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.nodes < self.geographies || self.geographies == 0 {
            return Err(Error::validation(format!(
                "{} nodes cannot host {} geographies",
                self.nodes, self.geographies
            )));
        }
        if self.nodes == 0 {
            return Err(Error::validation("node count must be positive"));
        }
        if !(self.mean_gap_secs > 0.0) || self.horizon_secs < 0 {
            return Err(Error::validation("invalid timing parameters"));
        }
        pareto_minimum(self.exponent, self.mean_degree, self.nodes)?;
        Ok(())
    }
}

/// Lower cutoff of a Pareto distribution with the requested exponent and
/// mean. Errors when the combination is unachievable.
fn pareto_minimum(exponent: f64, mean_degree: f64, nodes: usize) -> Result<f64> {
    if exponent <= 2.0 {
        return Err(Error::validation(format!(
            "power-law exponent {exponent} has no finite mean degree"
        )));
    }
    if mean_degree >= nodes as f64 {
        return Err(Error::validation(format!(
            "mean degree {mean_degree} unachievable with {nodes} nodes"
        )));
    }
    let x_min = mean_degree * (exponent - 2.0) / (exponent - 1.0);
    if x_min < 0.5 {
        return Err(Error::validation(format!(
            "mean degree {mean_degree} too low for exponent {exponent}"
        )));
    }
    Ok(x_min)
}

fn lognormal(rng: &mut ChaCha8Rng, median: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return median;
    }
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    (median.ln() + sigma * z).exp()
}

fn exponential_gap(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    -mean * u.ln()
}

/// Geography assignment with Zipf-skewed sizes: geography k gets mass
/// proportional to 1/(k+1)^skew. Every geography receives at least one node.
fn assign_geographies(nodes: usize, geos: usize, skew: f64) -> Vec<u16> {
    let weights: Vec<f64> = (0..geos).map(|k| 1.0 / ((k + 1) as f64).powf(skew)).collect();
    let total: f64 = weights.iter().sum();
    let mut sizes: Vec<usize> = weights
        .iter()
        .map(|w| ((w / total) * nodes as f64).floor().max(1.0) as usize)
        .collect();
    // distribute the rounding remainder to the largest geography
    let assigned: usize = sizes.iter().sum();
    if assigned < nodes {
        sizes[0] += nodes - assigned;
    } else {
        let mut excess = assigned - nodes;
        for s in sizes.iter_mut() {
            let take = excess.min(s.saturating_sub(1));
            *s -= take;
            excess -= take;
            if excess == 0 {
                break;
            }
        }
    }
    let mut geo = Vec::with_capacity(nodes);
    for (k, &s) in sizes.iter().enumerate() {
        geo.extend(std::iter::repeat(k as u16 + 1).take(s));
    }
    geo.truncate(nodes);
    geo
}

/// Power-law follower graph with homophilous geography communities.
pub fn generate_graph(cfg: &SimConfig) -> Result<FollowerGraph> {
    cfg.validate()?;
    let x_min = pareto_minimum(cfg.exponent, cfg.mean_degree, cfg.nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let geo = assign_geographies(cfg.nodes, cfg.geographies, cfg.geo_skew);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); cfg.geographies + 1];
    for (node, &g) in geo.iter().enumerate() {
        members[g as usize].push(node as u32);
    }

    // Pareto follower counts, rescaled multiplicatively to the mean target
    // (a monotone rescale, so the log-log slope is preserved).
    let alpha = cfg.exponent - 1.0;
    let mut raw: Vec<f64> = (0..cfg.nodes)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            x_min * u.powf(-1.0 / alpha)
        })
        .collect();
    let mean_raw = raw.iter().sum::<f64>() / cfg.nodes as f64;
    let scale = cfg.mean_degree / mean_raw;
    for d in raw.iter_mut() {
        *d *= scale;
    }

    let mut edges: Vec<(u32, u32)> = Vec::new();
    for u in 0..cfg.nodes as u32 {
        let same = &members[geo[u as usize] as usize];
        let local_cap = same.len().saturating_sub(1);
        let cap = if cfg.homophily >= 1.0 {
            local_cap
        } else {
            cfg.nodes - 1
        };
        let want = (raw[u as usize].round() as usize).min(cap);
        let mut chosen: HashSet<u32> = HashSet::with_capacity(want * 2);
        let mut attempts = 0usize;
        let max_attempts = want * 30 + 100;
        while chosen.len() < want && attempts < max_attempts {
            attempts += 1;
            let intra = cfg.homophily >= 1.0
                || (local_cap > 0 && rng.random::<f64>() < cfg.homophily);
            let v = if intra {
                same[rng.random_range(0..same.len())]
            } else {
                rng.random_range(0..cfg.nodes as u32)
            };
            if v != u {
                chosen.insert(v);
            }
        }
        for v in chosen {
            edges.push((u, v));
        }
    }

    let mut table = GeographyTable::new();
    let width = (cfg.geographies.max(1) as f64).log10().floor() as usize + 1;
    for k in 0..cfg.geographies {
        table.intern(&format!("geo{:0width$}", k + 1));
    }
    FollowerGraph::from_parts(cfg.nodes, edges, geo, table)
}

/// Write the graph in the plain-text interchange formats (`u v` edge lines,
/// `node geo_name` lines).
pub fn write_graph_files(g: &FollowerGraph, edge_path: &Path, geo_path: &Path) -> Result<()> {
    let mut ew = BufWriter::new(File::create(edge_path)?);
    for u in 0..g.node_count() as u32 {
        for &v in g.out_neighbors(u) {
            writeln!(ew, "{} {}", g.external_id(u), g.external_id(v))?;
        }
    }
    ew.flush()?;
    let mut gw = BufWriter::new(File::create(geo_path)?);
    for u in 0..g.node_count() as u32 {
        let name = g.geo_table().name_of(g.geo_of(u)).unwrap_or("unknown");
        writeln!(gw, "{} {}", g.external_id(u), name)?;
    }
    gw.flush()?;
    Ok(())
}

fn pick_unadopted_uniform(
    rng: &mut ChaCha8Rng,
    adopted: &[bool],
    nodes: usize,
) -> Option<u32> {
    for _ in 0..200 {
        let v = rng.random_range(0..nodes as u32);
        if !adopted[v as usize] {
            return Some(v);
        }
    }
    None
}

fn simulate_with(
    g: &FollowerGraph,
    regime: Regime,
    cfg: &SimConfig,
    seed: u64,
    hashtag: &str,
    start_ts: i64,
) -> Result<HashtagStream> {
    cfg.validate()?;
    let params = cfg.regime_params(regime);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = g.node_count();
    let stop = lognormal(&mut rng, params.stop_size_median, params.stop_size_sigma)
        .round()
        .max(1.0) as usize;

    let mut adopted = vec![false; nodes];
    let mut adopters: Vec<u32> = Vec::new();
    let mut events: Vec<TweetEvent> = Vec::with_capacity(stop);
    let mut clock = start_ts as f64;

    let emit = |rng: &mut ChaCha8Rng,
                    events: &mut Vec<TweetEvent>,
                    adopters: &[u32],
                    clock: f64,
                    user: u32,
                    allow_rt: bool| {
        let mut is_retweet = false;
        let mut rt_source = None;
        if allow_rt && adopters.len() > 1 && rng.random::<f64>() < cfg.retweet_prob {
            let src = adopters[rng.random_range(0..adopters.len())];
            if src != user {
                is_retweet = true;
                rt_source = Some(src);
            }
        }
        let mut mention_targets = Vec::new();
        if !adopters.is_empty() && rng.random::<f64>() < cfg.mention_prob {
            let m = adopters[rng.random_range(0..adopters.len())];
            if m != user {
                mention_targets.push(m);
            }
        }
        let mention_raw = mention_targets.len() as u32;
        events.push(TweetEvent {
            ts: clock as i64,
            user,
            hashtag: hashtag.to_string(),
            is_retweet,
            rt_source,
            mention_targets,
            mention_raw,
        });
    };

    for _ in 0..params.seeds.min(nodes) {
        if let Some(v) = pick_unadopted_uniform(&mut rng, &adopted, nodes) {
            adopted[v as usize] = true;
            emit(&mut rng, &mut events, &adopters, clock, v, false);
            adopters.push(v);
            clock += exponential_gap(&mut rng, cfg.mean_gap_secs);
        }
    }

    while events.len() < stop {
        let mut new_adopter: Option<u32> = None;
        let room = adopters.len() < nodes;
        if room && !adopters.is_empty() && rng.random::<f64>() < cfg.adopt_event_frac {
            if rng.random::<f64>() < params.exogenous_rate {
                new_adopter = pick_unadopted_uniform(&mut rng, &adopted, nodes);
            } else {
                // spread along follow edges: an adopter's tweet reaches a
                // random follower, who accepts with the regime's probability
                for _ in 0..30 {
                    let a = adopters[rng.random_range(0..adopters.len())];
                    let followers = g.out_neighbors(a);
                    if followers.is_empty() {
                        continue;
                    }
                    let v = followers[rng.random_range(0..followers.len())];
                    let mut accept = params.adoption_prob;
                    if g.geo_of(v) != g.geo_of(a) {
                        accept *= cfg.cross_geo_damping;
                    }
                    if !adopted[v as usize] && rng.random::<f64>() < accept {
                        new_adopter = Some(v);
                        break;
                    }
                }
            }
        }
        match new_adopter {
            Some(v) => {
                adopted[v as usize] = true;
                emit(&mut rng, &mut events, &adopters, clock, v, false);
                adopters.push(v);
            }
            None => {
                if adopters.is_empty() {
                    break;
                }
                let user = adopters[rng.random_range(0..adopters.len())];
                emit(&mut rng, &mut events, &adopters, clock, user, true);
            }
        }
        clock += exponential_gap(&mut rng, cfg.mean_gap_secs);
    }

    Ok(HashtagStream {
        hashtag: hashtag.to_string(),
        events,
    })
}

/// Simulate one hashtag's diffusion trace under a regime.
pub fn simulate_hashtag(
    g: &FollowerGraph,
    regime: Regime,
    cfg: &SimConfig,
    seed: u64,
) -> Result<HashtagStream> {
    simulate_with(g, regime, cfg, seed, &format!("h{seed}"), 0)
}

#[derive(Debug, Serialize)]
struct JsonlEvent<'a> {
    ts: i64,
    user: u64,
    tag: &'a str,
    rt: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    rt_src: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mentions: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CorpusSummary {
    pub hashtags: usize,
    pub viral_truth: usize,
    pub events: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// Generate the full corpus under `dir`: `edges.txt`, `geo.txt`,
/// `events.jsonl` (globally time-ordered, ingest format) and
/// `labels_truth.csv` with the planted regime per hashtag. Byte-identical
/// under the same config and master seed.
pub fn generate_corpus(cfg: &SimConfig, dir: &Path) -> Result<CorpusSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let g = generate_graph(cfg)?;
    write_graph_files(&g, &dir.join("edges.txt"), &dir.join("geo.txt"))?;

    let mut corpus_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xC0FF_EE00_D15E_A5E5);
    let width = (cfg.hashtags.max(1) as f64).log10().floor() as usize + 1;
    let mut all_events: Vec<TweetEvent> = Vec::new();
    let mut truth: Vec<(String, Regime, usize)> = Vec::with_capacity(cfg.hashtags);
    let mut viral_truth = 0usize;
    for i in 0..cfg.hashtags {
        let regime = if corpus_rng.random::<f64>() < cfg.viral_fraction {
            Regime::Viral
        } else {
            Regime::NonViral
        };
        let start = corpus_rng.random_range(0..=cfg.horizon_secs);
        let tag = format!("h{:0width$}", i);
        let seed = cfg
            .seed
            .wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let stream = simulate_with(&g, regime, cfg, seed, &tag, start)?;
        if regime == Regime::Viral {
            viral_truth += 1;
        }
        truth.push((tag, regime, stream.events.len()));
        all_events.extend(stream.events);
    }
    all_events.sort_by_key(|e| e.ts);

    let mut ew = BufWriter::new(File::create(dir.join("events.jsonl"))?);
    for ev in &all_events {
        let line = JsonlEvent {
            ts: ev.ts,
            user: g.external_id(ev.user),
            tag: &ev.hashtag,
            rt: ev.is_retweet,
            rt_src: ev.rt_source.map(|s| g.external_id(s)),
            mentions: ev
                .mention_targets
                .iter()
                .map(|&m| g.external_id(m))
                .collect(),
        };
        serde_json::to_writer(&mut ew, &line).map_err(|e| Error::Data(e.to_string()))?;
        ew.write_all(b"\n")?;
    }
    ew.flush()?;

    let mut lw = BufWriter::new(File::create(dir.join("labels_truth.csv"))?);
    writeln!(lw, "hashtag,regime,total_tweets")?;
    for (tag, regime, total) in &truth {
        writeln!(lw, "{},{},{}", tag, regime.as_str(), total)?;
    }
    lw.flush()?;

    Ok(CorpusSummary {
        hashtags: cfg.hashtags,
        viral_truth,
        events: all_events.len(),
        nodes: g.node_count(),
        edges: g.edge_count(),
    })
}
