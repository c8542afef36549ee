//! Per-hashtag incremental diffusion state: adopter set, exact conductance
//! cut/volume counters, induced-subgraph edge counts, weakly connected
//! components over adopters, self-initiation and geography tallies.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::FollowerGraph;
use crate::ingest::{HashtagStream, TweetEvent};

/// Growable union-find with union by size and path compression, keyed by
/// dense slot indices (one slot per adopter in adoption order).
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    components: usize,
}

impl UnionFind {
    pub fn push(&mut self) -> u32 {
        let slot = self.parent.len() as u32;
        self.parent.push(slot);
        self.size.push(1);
        self.components += 1;
        slot
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.components -= 1;
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// (largest, second largest) component sizes; 0 when absent.
    pub fn top_two_sizes(&mut self) -> (usize, usize) {
        let mut first = 0usize;
        let mut second = 0usize;
        for slot in 0..self.parent.len() as u32 {
            if self.find(slot) == slot {
                let s = self.size[slot as usize] as usize;
                if s > first {
                    second = first;
                    first = s;
                } else if s > second {
                    second = s;
                }
            }
        }
        (first, second)
    }
}

/// Per-geography running tallies.
#[derive(Debug, Clone, Default)]
pub struct GeoCounts {
    pub adopters: BTreeMap<u16, u64>,
    pub tweets: BTreeMap<u16, u64>,
    /// Whether the first adopter seen in each geography was self-initiated.
    pub first_adopter_self_init: BTreeMap<u16, bool>,
}

/// Incrementally maintained diffusion state of one hashtag.
#[derive(Debug, Clone)]
pub struct DiffusionState {
    pub hashtag: String,
    adopters: HashSet<u32>,
    adoption_order: Vec<u32>,
    slot_of: HashMap<u32, u32>,
    pub tweet_count: usize,
    pub timestamps: Vec<i64>,
    /// |{(u -> v): u in S, v not in S}|, the conductance numerator.
    pub cut_edges: u64,
    /// Sum of out-degrees over S, the conductance denominator.
    pub volume: u64,
    /// Directed edges with both endpoints in S.
    pub induced_edges: u64,
    /// Induced edges whose endpoints carry differing geography ids.
    pub cross_geo_edges: u64,
    pub conductance_series: Vec<f64>,
    pub wcc: UnionFind,
    pub self_initiated: HashSet<u32>,
    pub geo: GeoCounts,
    pub rt_count: u64,
    pub mention_count: u64,
    pub intra_geo_rt: u64,
    pub attributable_rt: u64,
    pub intra_geo_mentions: u64,
    pub attributable_mentions: u64,
}

impl DiffusionState {
    pub fn new(hashtag: impl Into<String>) -> Self {
        DiffusionState {
            hashtag: hashtag.into(),
            adopters: HashSet::new(),
            adoption_order: Vec::new(),
            slot_of: HashMap::new(),
            tweet_count: 0,
            timestamps: Vec::new(),
            cut_edges: 0,
            volume: 0,
            induced_edges: 0,
            cross_geo_edges: 0,
            conductance_series: Vec::new(),
            wcc: UnionFind::default(),
            self_initiated: HashSet::new(),
            geo: GeoCounts::default(),
            rt_count: 0,
            mention_count: 0,
            intra_geo_rt: 0,
            attributable_rt: 0,
            intra_geo_mentions: 0,
            attributable_mentions: 0,
        }
    }

    pub fn adopters(&self) -> &HashSet<u32> {
        &self.adopters
    }

    pub fn adopter_count(&self) -> usize {
        self.adopters.len()
    }

    /// Adopters in adoption order.
    pub fn adoption_order(&self) -> &[u32] {
        &self.adoption_order
    }

    /// Current conductance; 0 when the volume is 0 (all adopters have zero
    /// followers) or the set is empty.
    pub fn conductance(&self) -> f64 {
        if self.volume == 0 {
            0.0
        } else {
            self.cut_edges as f64 / self.volume as f64
        }
    }

    pub fn first_ts(&self) -> Option<i64> {
        self.timestamps.first().copied()
    }

    pub fn last_ts(&self) -> Option<i64> {
        self.timestamps.last().copied()
    }

    /// Consume one event. New adopters update the structural counters and
    /// the component forest; repeat tweets only advance the tweet-level
    /// tallies. The conductance series gains one entry either way.
    pub fn apply_event(&mut self, ev: &TweetEvent, g: &FollowerGraph) -> Result<()> {
        if ev.hashtag != self.hashtag {
            return Err(Error::data(format!(
                "event hashtag `{}` does not match state `{}`",
                ev.hashtag, self.hashtag
            )));
        }
        if let Some(&last) = self.timestamps.last() {
            if ev.ts < last {
                return Err(Error::data(format!(
                    "timestamp regression: {} after {}",
                    ev.ts, last
                )));
            }
        }

        if !self.adopters.contains(&ev.user) {
            self.adopt(ev.user, g);
        }

        // tweet-level tallies
        self.tweet_count += 1;
        self.timestamps.push(ev.ts);
        if ev.is_retweet {
            self.rt_count += 1;
            if let Some(src) = ev.rt_source {
                self.attributable_rt += 1;
                if g.geo_of(src) == g.geo_of(ev.user) {
                    self.intra_geo_rt += 1;
                }
            }
        }
        self.mention_count += ev.mention_raw as u64;
        for &m in &ev.mention_targets {
            self.attributable_mentions += 1;
            if g.geo_of(m) == g.geo_of(ev.user) {
                self.intra_geo_mentions += 1;
            }
        }
        *self.geo.tweets.entry(g.geo_of(ev.user)).or_insert(0) += 1;
        self.conductance_series.push(self.conductance());
        Ok(())
    }

    fn adopt(&mut self, user: u32, g: &FollowerGraph) {
        let user_geo = g.geo_of(user);

        // Self-initiation is decided now, before inserting the user: an
        // adopter is self-initiated iff none of its information sources
        // (the users it follows, i.e. in-neighbors under our orientation)
        // is already in S.
        let self_init = !g.in_neighbors(user).iter().any(|n| self.adopters.contains(n));
        if self_init {
            self.self_initiated.insert(user);
        }
        self.geo
            .first_adopter_self_init
            .entry(user_geo)
            .or_insert(self_init);
        *self.geo.adopters.entry(user_geo).or_insert(0) += 1;

        let slot = self.wcc.push();
        self.slot_of.insert(user, slot);

        let mut out_in_s = 0u64;
        for &v in g.out_neighbors(user) {
            if self.adopters.contains(&v) {
                out_in_s += 1;
                let vs = self.slot_of[&v];
                self.wcc.union(slot, vs);
                if g.geo_of(v) != user_geo {
                    self.cross_geo_edges += 1;
                }
            }
        }
        let mut in_in_s = 0u64;
        for &v in g.in_neighbors(user) {
            if self.adopters.contains(&v) {
                in_in_s += 1;
                let vs = self.slot_of[&v];
                self.wcc.union(slot, vs);
                if g.geo_of(v) != user_geo {
                    self.cross_geo_edges += 1;
                }
            }
        }

        let out_deg = g.out_degree(user) as u64;
        // new cut edges from `user` minus edges S -> user that internalize
        self.cut_edges = (self.cut_edges as i64 + (out_deg - out_in_s) as i64 - in_in_s as i64)
            as u64;
        self.volume += out_deg;
        self.induced_edges += out_in_s + in_in_s;
        self.adopters.insert(user);
        self.adoption_order.push(user);
    }
}

/// Replay the first `n` events of a stream.
pub fn run_to_threshold(
    stream: &HashtagStream,
    n: usize,
    g: &FollowerGraph,
) -> Result<DiffusionState> {
    if stream.len() < n {
        return Err(Error::data(format!(
            "stream `{}` has {} events, below threshold {}",
            stream.hashtag,
            stream.len(),
            n
        )));
    }
    let mut state = DiffusionState::new(stream.hashtag.clone());
    for ev in &stream.events[..n] {
        state.apply_event(ev, g)?;
    }
    Ok(state)
}

/// Exact conductance counters, kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutVolume {
    pub cut: u64,
    pub volume: u64,
}

impl CutVolume {
    pub fn value(&self) -> f64 {
        if self.volume == 0 {
            0.0
        } else {
            self.cut as f64 / self.volume as f64
        }
    }
}

/// Brute-force conductance by full out-neighborhood scan. Test oracle for
/// the incremental counters; not used on any hot path.
pub fn conductance_oracle(adopters: &HashSet<u32>, g: &FollowerGraph) -> CutVolume {
    let mut cut = 0u64;
    let mut volume = 0u64;
    for &u in adopters {
        volume += g.out_degree(u) as u64;
        for &v in g.out_neighbors(u) {
            if !adopters.contains(&v) {
                cut += 1;
            }
        }
    }
    CutVolume { cut, volume }
}

/// Brute-force induced edge count (both endpoints adopters).
pub fn induced_edges_oracle(adopters: &HashSet<u32>, g: &FollowerGraph) -> u64 {
    adopters
        .iter()
        .map(|&u| {
            g.out_neighbors(u)
                .iter()
                .filter(|v| adopters.contains(v))
                .count() as u64
        })
        .sum()
}

/// Brute-force WCC stats via BFS over the undirected induced subgraph:
/// (component count, largest, second largest).
pub fn wcc_oracle(adopters: &HashSet<u32>, g: &FollowerGraph) -> (usize, usize, usize) {
    let mut seen: HashSet<u32> = HashSet::new();
    let mut sizes: Vec<usize> = Vec::new();
    for &start in adopters {
        if seen.contains(&start) {
            continue;
        }
        let mut queue = vec![start];
        seen.insert(start);
        let mut size = 0;
        while let Some(u) = queue.pop() {
            size += 1;
            for &v in g.out_neighbors(u).iter().chain(g.in_neighbors(u)) {
                if adopters.contains(&v) && seen.insert(v) {
                    queue.push(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let first = sizes.first().copied().unwrap_or(0);
    let second = sizes.get(1).copied().unwrap_or(0);
    (sizes.len(), first, second)
}
