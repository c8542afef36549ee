//! Tweet event log parsing, hashtag freshness filtering and per-hashtag
//! stream splitting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::FollowerGraph;

/// One timestamped (user, hashtag) occurrence, with user ids already
/// resolved to dense graph ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetEvent {
    pub ts: i64,
    pub user: u32,
    pub hashtag: String,
    pub is_retweet: bool,
    /// Original tweeter of a retweet, when known and in-graph.
    pub rt_source: Option<u32>,
    /// Mentioned users that resolve to graph nodes.
    pub mention_targets: Vec<u32>,
    /// Mention count as written, including out-of-graph mentions.
    pub mention_raw: u32,
}

/// Ordered event stream of a single hashtag.
#[derive(Debug, Clone)]
pub struct HashtagStream {
    pub hashtag: String,
    pub events: Vec<TweetEvent>,
}

impl HashtagStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_ts(&self) -> Option<i64> {
        self.events.first().map(|e| e.ts)
    }

    pub fn last_ts(&self) -> Option<i64> {
        self.events.last().map(|e| e.ts)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Events whose user id is not a graph node.
    pub dropped_unknown_user: u64,
    /// 1 if the input violated timestamp order and a stable sort was applied.
    pub reordered: u64,
    /// Malformed records skipped in lenient mode.
    pub malformed_skipped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Jsonl,
    Csv,
}

impl EventFormat {
    pub fn from_path(path: &Path) -> EventFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => EventFormat::Csv,
            _ => EventFormat::Jsonl,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawEvent {
    ts: i64,
    user: u64,
    tag: String,
    #[serde(default)]
    rt: bool,
    #[serde(default)]
    rt_src: Option<u64>,
    #[serde(default)]
    mentions: Vec<u64>,
}

fn resolve_event(raw: RawEvent, g: &FollowerGraph, stats: &mut IngestStats) -> Option<TweetEvent> {
    if raw.ts < 0 {
        return None;
    }
    let user = match g.resolve(raw.user) {
        Some(u) => u,
        None => {
            stats.dropped_unknown_user += 1;
            return None;
        }
    };
    let rt_source = raw.rt_src.and_then(|s| g.resolve(s));
    let mention_raw = raw.mentions.len() as u32;
    let mention_targets = raw.mentions.iter().filter_map(|&m| g.resolve(m)).collect();
    Some(TweetEvent {
        ts: raw.ts,
        user,
        hashtag: raw.tag.to_lowercase(),
        is_retweet: raw.rt,
        rt_source,
        mention_targets,
        mention_raw,
    })
}

fn parse_csv_record(line: &str, lineno: usize) -> Result<RawEvent> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::parse(
            lineno,
            format!("expected 6 CSV fields, got {}", fields.len()),
        ));
    }
    let ts: i64 = fields[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, "bad ts"))?;
    let user: u64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, "bad user"))?;
    let tag = fields[2].trim().to_string();
    let rt = match fields[3].trim() {
        "" | "0" | "false" => false,
        "1" | "true" => true,
        other => return Err(Error::parse(lineno, format!("bad rt flag `{other}`"))),
    };
    let rt_src = match fields[4].trim() {
        "" => None,
        s => Some(s.parse().map_err(|_| Error::parse(lineno, "bad rt_src"))?),
    };
    let mentions = fields[5]
        .trim()
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::parse(lineno, "bad mention")))
        .collect::<Result<Vec<u64>>>()?;
    Ok(RawEvent {
        ts,
        user,
        tag,
        rt,
        rt_src,
        mentions,
    })
}

/// Parse an event log and resolve users against the graph. Events are
/// returned in non-decreasing timestamp order; a stable sort is applied
/// (and counted) if the input violates it. In strict mode a malformed
/// record aborts with its line number; in lenient mode it is skipped.
pub fn parse_events(
    event_file: &Path,
    g: &FollowerGraph,
    format: EventFormat,
    strict: bool,
) -> Result<(Vec<TweetEvent>, IngestStats)> {
    let reader = BufReader::new(File::open(event_file)?);
    let mut stats = IngestStats::default();
    let mut events: Vec<TweetEvent> = Vec::new();
    let mut csv_header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if format == EventFormat::Csv && !csv_header_seen && trimmed.starts_with("ts,") {
            csv_header_seen = true;
            continue;
        }
        let raw = match format {
            EventFormat::Jsonl => serde_json::from_str::<RawEvent>(trimmed)
                .map_err(|e| Error::parse(lineno, e.to_string())),
            EventFormat::Csv => parse_csv_record(trimmed, lineno),
        };
        let raw = match raw {
            Ok(r) => r,
            Err(e) if strict => return Err(e),
            Err(_) => {
                stats.malformed_skipped += 1;
                continue;
            }
        };
        if let Some(ev) = resolve_event(raw, g, &mut stats) {
            events.push(ev);
        }
    }
    let sorted = events.windows(2).all(|w| w[0].ts <= w[1].ts);
    if !sorted {
        events.sort_by_key(|e| e.ts);
        stats.reordered = 1;
    }
    Ok((events, stats))
}

/// Keep only hashtags that do *not* exceed `max_early` tweets within the
/// first `window_secs` of the log (anchored at the log's first timestamp);
/// heavier early presence marks a persistent/generic tag.
pub fn filter_fresh_hashtags(
    events: &[TweetEvent],
    window_secs: i64,
    max_early: u64,
) -> BTreeSet<String> {
    let Some(first_ts) = events.first().map(|e| e.ts) else {
        return BTreeSet::new();
    };
    let mut early: HashMap<&str, u64> = HashMap::new();
    let mut all: BTreeSet<&str> = BTreeSet::new();
    for ev in events {
        all.insert(&ev.hashtag);
        if ev.ts - first_ts < window_secs {
            *early.entry(&ev.hashtag).or_insert(0) += 1;
        }
    }
    all.into_iter()
        .filter(|tag| early.get(tag).copied().unwrap_or(0) <= max_early)
        .map(|t| t.to_string())
        .collect()
}

/// Partition kept events into one time-ordered stream per hashtag.
pub fn split_by_hashtag(
    events: &[TweetEvent],
    keep: &BTreeSet<String>,
) -> BTreeMap<String, HashtagStream> {
    let mut map: BTreeMap<String, HashtagStream> = BTreeMap::new();
    for ev in events {
        if keep.contains(&ev.hashtag) {
            map.entry(ev.hashtag.clone())
                .or_insert_with(|| HashtagStream {
                    hashtag: ev.hashtag.clone(),
                    events: Vec::new(),
                })
                .events
                .push(ev.clone());
        }
    }
    map
}
