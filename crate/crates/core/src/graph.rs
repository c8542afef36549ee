//! Immutable directed follower graph with dual CSR adjacency.
//!
//! Edge direction convention: `u -> v` means *v follows u*, i.e. v receives
//! u's tweets. Consequently `out_degree(u)` is u's follower count, and the
//! conductance volume of an adopter set is the sum of out-degrees over it.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

/// Reserved geography id for nodes with no known geography.
pub const UNKNOWN_GEO: u16 = 0;

const CACHE_MAGIC: &[u8; 8] = b"CGNPGRF1";

/// Dense geography id table. Id 0 is always the reserved "unknown" entry.
#[derive(Debug, Clone)]
pub struct GeographyTable {
    names: Vec<String>,
    by_name: HashMap<String, u16>,
}

impl Default for GeographyTable {
    fn default() -> Self {
        Self::new()
    }
}

impl GeographyTable {
    pub fn new() -> Self {
        let mut t = GeographyTable {
            names: Vec::new(),
            by_name: HashMap::new(),
        };
        t.intern("unknown");
        t
    }

    /// Returns the id for `name`, assigning the next dense id if unseen.
    pub fn intern(&mut self, name: &str) -> u16 {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.names.len() as u16;
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn id_of(&self, name: &str) -> Option<u16> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, id: u16) -> Option<&str> {
        self.names.get(id as usize).map(|s| s.as_str())
    }

    /// Number of distinct geographies, including the reserved unknown id.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // id 0 always present
    }
}

/// Counters accumulated while loading / normalizing an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub duplicate_edges: u64,
    pub self_loops: u64,
}

/// Immutable directed follower graph. Both orientations are stored so that
/// out- and in-neighborhood scans are contiguous slices.
#[derive(Debug, Clone)]
pub struct FollowerGraph {
    out_row: Vec<usize>,
    out_col: Vec<u32>,
    in_row: Vec<usize>,
    in_col: Vec<u32>,
    geo: Vec<u16>,
    geo_table: GeographyTable,
    /// Dense id -> external id, as seen in the input files.
    ext_ids: Vec<u64>,
    ext_index: HashMap<u64, u32>,
    load_stats: LoadStats,
}

impl FollowerGraph {
    /// Build a graph from parts with identity external ids. Self-loops are
    /// dropped and duplicate edges deduplicated, with counters kept.
    pub fn from_parts(
        node_count: usize,
        mut edges: Vec<(u32, u32)>,
        geo: Vec<u16>,
        geo_table: GeographyTable,
    ) -> Result<Self> {
        if geo.len() != node_count {
            return Err(Error::validation(format!(
                "geography vector length {} != node count {}",
                geo.len(),
                node_count
            )));
        }
        let mut stats = LoadStats::default();
        for &(u, v) in &edges {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) references node outside 0..{node_count}"
                )));
            }
        }
        let before = edges.len();
        edges.retain(|&(u, v)| u != v);
        stats.self_loops = (before - edges.len()) as u64;
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        stats.duplicate_edges = (before - edges.len()) as u64;

        let (out_row, out_col) = build_csr(node_count, edges.iter().copied());
        let (in_row, in_col) = build_csr(node_count, edges.iter().map(|&(u, v)| (v, u)));

        let ext_ids: Vec<u64> = (0..node_count as u64).collect();
        let ext_index = ext_ids.iter().map(|&e| (e, e as u32)).collect();

        Ok(FollowerGraph {
            out_row,
            out_col,
            in_row,
            in_col,
            geo,
            geo_table,
            ext_ids,
            ext_index,
            load_stats: stats,
        })
    }

    pub fn node_count(&self) -> usize {
        self.geo.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_col.len()
    }

    /// Followers of `u` (targets of edges u -> v).
    pub fn out_neighbors(&self, u: u32) -> &[u32] {
        &self.out_col[self.out_row[u as usize]..self.out_row[u as usize + 1]]
    }

    /// Users that `v` follows (sources of edges u -> v), i.e. v's
    /// information sources.
    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        &self.in_col[self.in_row[v as usize]..self.in_row[v as usize + 1]]
    }

    /// Follower count of `u`.
    pub fn out_degree(&self, u: u32) -> usize {
        self.out_row[u as usize + 1] - self.out_row[u as usize]
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.in_row[v as usize + 1] - self.in_row[v as usize]
    }

    pub fn geo_of(&self, u: u32) -> u16 {
        self.geo[u as usize]
    }

    pub fn geo_table(&self) -> &GeographyTable {
        &self.geo_table
    }

    pub fn load_stats(&self) -> LoadStats {
        self.load_stats
    }

    /// Resolve an external id from the input files to a dense node id.
    pub fn resolve(&self, external: u64) -> Option<u32> {
        self.ext_index.get(&external).copied()
    }

    pub fn external_id(&self, node: u32) -> u64 {
        self.ext_ids[node as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// Structural sanity check: both CSR orientations encode the same edge set.
    pub fn validate(&self) -> Result<()> {
        if self.out_col.len() != self.in_col.len() {
            return Err(Error::validation(format!(
                "out/in edge counts differ: {} vs {}",
                self.out_col.len(),
                self.in_col.len()
            )));
        }
        for v in 0..self.node_count() as u32 {
            for &u in self.in_neighbors(v) {
                if !self.has_edge(u, v) {
                    return Err(Error::validation(format!(
                        "edge {u} -> {v} present in in-CSR but not out-CSR"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Induce the subgraph on the nodes of one geography. Returned graph has
    /// fresh dense ids; external ids are preserved through the remap table.
    /// The single remaining geography keeps its name.
    pub fn restrict_to_geo(&self, geo_id: u16) -> Result<FollowerGraph> {
        let members: Vec<u32> = (0..self.node_count() as u32)
            .filter(|&u| self.geo[u as usize] == geo_id)
            .collect();
        if members.is_empty() {
            return Err(Error::data(format!("geography id {geo_id} has no nodes")));
        }
        let mut remap: HashMap<u32, u32> = HashMap::with_capacity(members.len());
        for (new, &old) in members.iter().enumerate() {
            remap.insert(old, new as u32);
        }
        let mut edges = Vec::new();
        for &u in &members {
            for &v in self.out_neighbors(u) {
                if let Some(&nv) = remap.get(&v) {
                    edges.push((remap[&u], nv));
                }
            }
        }
        let mut table = GeographyTable::new();
        let name = self
            .geo_table
            .name_of(geo_id)
            .unwrap_or("unknown")
            .to_string();
        let new_geo_id = table.intern(&name);
        let n = members.len();
        let mut g = FollowerGraph::from_parts(n, edges, vec![new_geo_id; n], table)?;
        // preserve the original external ids
        g.ext_ids = members
            .iter()
            .map(|&old| self.ext_ids[old as usize])
            .collect();
        g.ext_index = g
            .ext_ids
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i as u32))
            .collect();
        Ok(g)
    }

    /// Write the versioned binary cache for fast reload.
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_u64::<LittleEndian>(self.node_count() as u64)?;
        w.write_u64::<LittleEndian>(self.edge_count() as u64)?;
        for u in 0..self.node_count() as u32 {
            for &v in self.out_neighbors(u) {
                w.write_u32::<LittleEndian>(u)?;
                w.write_u32::<LittleEndian>(v)?;
            }
        }
        for &g in &self.geo {
            w.write_u16::<LittleEndian>(g)?;
        }
        for &e in &self.ext_ids {
            w.write_u64::<LittleEndian>(e)?;
        }
        w.write_u16::<LittleEndian>(self.geo_table.len() as u16)?;
        for id in 0..self.geo_table.len() as u16 {
            let name = self.geo_table.name_of(id).unwrap();
            w.write_u32::<LittleEndian>(name.len() as u32)?;
            w.write_all(name.as_bytes())?;
        }
        Ok(())
    }

    pub fn load_cache(path: &Path) -> Result<FollowerGraph> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::data("bad graph cache header".to_string()));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let m = r.read_u64::<LittleEndian>()? as usize;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let u = r.read_u32::<LittleEndian>()?;
            let v = r.read_u32::<LittleEndian>()?;
            edges.push((u, v));
        }
        let mut geo = Vec::with_capacity(n);
        for _ in 0..n {
            geo.push(r.read_u16::<LittleEndian>()?);
        }
        let mut ext_ids = Vec::with_capacity(n);
        for _ in 0..n {
            ext_ids.push(r.read_u64::<LittleEndian>()?);
        }
        let g_count = r.read_u16::<LittleEndian>()? as usize;
        let mut table = GeographyTable::new();
        for id in 0..g_count {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let name = String::from_utf8(buf)
                .map_err(|_| Error::data("non-utf8 geography name in cache"))?;
            let got = table.intern(&name);
            if got as usize != id {
                return Err(Error::data("geography table out of order in cache"));
            }
        }
        let mut g = FollowerGraph::from_parts(n, edges, geo, table)?;
        g.ext_index = ext_ids
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i as u32))
            .collect();
        g.ext_ids = ext_ids;
        Ok(g)
    }
}

fn build_csr<I: Iterator<Item = (u32, u32)>>(n: usize, edges: I) -> (Vec<usize>, Vec<u32>) {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (u, v) in edges {
        adj[u as usize].push(v);
    }
    let mut row = Vec::with_capacity(n + 1);
    let mut col = Vec::new();
    row.push(0);
    for mut list in adj {
        list.sort_unstable();
        col.extend_from_slice(&list);
        row.push(col.len());
    }
    (row, col)
}

/// Load a follower graph from a text edge file (`u v` per line, u -> v) and
/// a geography file (`node_id geo_name` per line). Node ids are remapped to
/// dense internal ids; geography-file order assigns them first.
pub fn load_graph(edge_file: &Path, geo_file: &Path) -> Result<FollowerGraph> {
    let mut ext_ids: Vec<u64> = Vec::new();
    let mut ext_index: HashMap<u64, u32> = HashMap::new();
    let intern_node = |ext: u64, ids: &mut Vec<u64>, idx: &mut HashMap<u64, u32>| -> u32 {
        *idx.entry(ext).or_insert_with(|| {
            ids.push(ext);
            (ids.len() - 1) as u32
        })
    };

    let mut geo_table = GeographyTable::new();
    let mut geo_pairs: Vec<(u32, u16)> = Vec::new();
    let reader = BufReader::new(File::open(geo_file)?);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_str, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(lineno + 1, "expected `node_id geo_name`"))?;
        let ext: u64 = id_str
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad node id `{id_str}`")))?;
        let node = intern_node(ext, &mut ext_ids, &mut ext_index);
        let gid = geo_table.intern(name.trim());
        geo_pairs.push((node, gid));
    }

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let reader = BufReader::new(File::open(edge_file)?);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::parse(lineno + 1, "expected `u v`")),
        };
        let u: u64 = a
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad node id `{a}`")))?;
        let v: u64 = b
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad node id `{b}`")))?;
        let un = intern_node(u, &mut ext_ids, &mut ext_index);
        let vn = intern_node(v, &mut ext_ids, &mut ext_index);
        edges.push((un, vn));
    }

    let n = ext_ids.len();
    let mut geo = vec![UNKNOWN_GEO; n];
    for (node, gid) in geo_pairs {
        geo[node as usize] = gid;
    }
    let mut g = FollowerGraph::from_parts(n, edges, geo, geo_table)?;
    g.ext_ids = ext_ids;
    g.ext_index = ext_index;
    Ok(g)
}

/// Out-degree (follower count) summary, the data behind the follower
/// distribution plot.
#[derive(Debug, Clone)]
pub struct DegreeSummary {
    pub mean: f64,
    pub max: usize,
    /// (degree, node count), ascending by degree.
    pub histogram: Vec<(usize, u64)>,
}

pub fn degree_stats(g: &FollowerGraph) -> DegreeSummary {
    let mut hist: HashMap<usize, u64> = HashMap::new();
    let mut max = 0;
    let mut total = 0usize;
    for u in 0..g.node_count() as u32 {
        let d = g.out_degree(u);
        *hist.entry(d).or_insert(0) += 1;
        max = max.max(d);
        total += d;
    }
    let mut histogram: Vec<(usize, u64)> = hist.into_iter().collect();
    histogram.sort_unstable();
    DegreeSummary {
        mean: if g.node_count() == 0 {
            0.0
        } else {
            total as f64 / g.node_count() as f64
        },
        max,
        histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn triangle() -> FollowerGraph {
        let edges = write_tmp("0 1\n0 2\n1 2\n");
        let geo = write_tmp("0 east\n1 east\n2 west\n");
        load_graph(edges.path(), geo.path()).unwrap()
    }

    #[test]
    fn three_node_degrees() {
        let g = triangle();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        let outs: Vec<usize> = (0..3).map(|u| g.out_degree(u)).collect();
        let ins: Vec<usize> = (0..3).map(|u| g.in_degree(u)).collect();
        assert_eq!(outs, vec![2, 1, 0]);
        assert_eq!(ins, vec![0, 1, 2]);
        g.validate().unwrap();
    }

    #[test]
    fn empty_edge_file_uses_geo_nodes() {
        let edges = write_tmp("");
        let geo = write_tmp("0 east\n1 west\n");
        let g = load_graph(edges.path(), geo.path()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_edge_counted_once() {
        let edges = write_tmp("0 1\n0 1\n");
        let geo = write_tmp("0 east\n1 east\n");
        let g = load_graph(edges.path(), geo.path()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.load_stats().duplicate_edges, 1);
    }

    #[test]
    fn self_loop_dropped_with_counter() {
        let edges = write_tmp("0 0\n0 1\n");
        let geo = write_tmp("0 east\n1 east\n");
        let g = load_graph(edges.path(), geo.path()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.load_stats().self_loops, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let edges = write_tmp("0 1\nnot an edge line x\n");
        let geo = write_tmp("0 east\n1 east\n");
        let err = load_graph(edges.path(), geo.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn mean_out_degree() {
        let g = triangle();
        let s = degree_stats(&g);
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert_eq!(s.max, 2);
    }

    #[test]
    fn star_graph_stats() {
        let edges: Vec<(u32, u32)> = (1..10).map(|v| (0u32, v)).collect();
        let table = GeographyTable::new();
        let g = FollowerGraph::from_parts(10, edges, vec![0; 10], table).unwrap();
        assert_eq!(g.out_degree(0), 9);
        let s = degree_stats(&g);
        assert!((s.mean - 0.9).abs() < 1e-12);
    }

    #[test]
    fn external_ids_remapped_dense() {
        let edges = write_tmp("1000 42\n42 7\n");
        let geo = write_tmp("42 east\n");
        let g = load_graph(edges.path(), geo.path()).unwrap();
        assert_eq!(g.node_count(), 3);
        let n42 = g.resolve(42).unwrap();
        assert_eq!(g.geo_of(n42), 1);
        assert_eq!(g.external_id(n42), 42);
        assert_eq!(g.geo_of(g.resolve(1000).unwrap()), UNKNOWN_GEO);
    }

    #[test]
    fn cache_round_trip() {
        let g = triangle();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.bin");
        g.save_cache(&path).unwrap();
        let g2 = FollowerGraph::load_cache(&path).unwrap();
        assert_eq!(g2.node_count(), g.node_count());
        assert_eq!(g2.edge_count(), g.edge_count());
        for u in 0..3 {
            assert_eq!(g2.out_neighbors(u), g.out_neighbors(u));
            assert_eq!(g2.geo_of(u), g.geo_of(u));
        }
        assert_eq!(g2.geo_table().name_of(1), Some("east"));
    }
}
