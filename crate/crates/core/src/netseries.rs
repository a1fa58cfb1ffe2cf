//! Time-evolving undirected binary networks: storage, validation, file I/O and
//! transition tallies.
//!
//! A [`NetworkSeries`] holds `T + 1` snapshots `y_0, ..., y_T` over a fixed
//! node set `0..n`. Snapshot 0 is the initial network; snapshots `1..=T` are
//! the modeled transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the unordered dyad `{i, j}` (`i < j`) in row-major upper-triangle order.
#[inline]
pub(crate) fn dyad_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// One undirected simple graph over `0..n`.
///
/// Edges are kept as a sorted list of `(i, j)` with `i < j`, alongside a
/// bitset over all dyads for O(1) membership. Neither structure assumes
/// sparsity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    n: usize,
    edges: Vec<(usize, usize)>,
    bits: Vec<u64>,
}

impl Snapshot {
    pub fn empty(n: usize) -> Self {
        let dyads = n * n.saturating_sub(1) / 2;
        Snapshot {
            n,
            edges: Vec::new(),
            bits: vec![0; dyads.div_ceil(64)],
        }
    }

    /// Builds a snapshot from undirected edges, symmetrizing and deduplicating.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut snap = Snapshot::empty(n);
        for &(i, j) in &set {
            let d = dyad_index(n, i, j);
            snap.bits[d / 64] |= 1 << (d % 64);
        }
        snap.edges = set.into_iter().collect();
        Ok(snap)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Whether `{i, j}` is an edge. The diagonal is always absent.
    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = (i.min(j), i.max(j));
        let d = dyad_index(self.n, a, b);
        self.bits[d / 64] >> (d % 64) & 1 == 1
    }

    /// Inserts `{i, j}` if absent. Returns whether the edge was new.
    pub(crate) fn insert(&mut self, i: usize, j: usize) -> bool {
        debug_assert!(i != j);
        let (a, b) = (i.min(j), i.max(j));
        if self.has_edge(a, b) {
            return false;
        }
        let d = dyad_index(self.n, a, b);
        self.bits[d / 64] |= 1 << (d % 64);
        let pos = self.edges.partition_point(|&e| e < (a, b));
        self.edges.insert(pos, (a, b));
        true
    }
}

/// Observed data `y_0, ..., y_T` on a fixed node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSeries {
    n: usize,
    snapshots: Vec<Snapshot>,
    node_names: Option<Vec<String>>,
}

impl NetworkSeries {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::EmptySeries(snapshots.len()));
        }
        let n = snapshots[0].n();
        if n < 1 {
            return Err(Error::Validation("node count must be positive".into()));
        }
        if let Some(bad) = snapshots.iter().position(|s| s.n() != n) {
            return Err(Error::Validation(format!(
                "snapshot {bad} has {} nodes, expected {n}",
                snapshots[bad].n()
            )));
        }
        Ok(NetworkSeries {
            n,
            snapshots,
            node_names: None,
        })
    }

    /// Builds a series from `(t, i, j)` triples with `t` in `0..=horizon`.
    pub fn from_timed_edges<I>(n: usize, horizon: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        let mut per_t: Vec<Vec<(usize, usize)>> = vec![Vec::new(); horizon + 1];
        for (t, i, j) in edges {
            if t > horizon {
                return Err(Error::Validation(format!(
                    "time index {t} outside 0..={horizon}"
                )));
            }
            per_t[t].push((i, j));
        }
        let snapshots = per_t
            .into_iter()
            .map(|e| Snapshot::from_edges(n, e))
            .collect::<Result<Vec<_>>>()?;
        NetworkSeries::new(snapshots)
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n {
            return Err(Error::Shape(format!(
                "{} node names for {} nodes",
                names.len(),
                self.n
            )));
        }
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of transitions `T` (one less than the number of snapshots).
    pub fn horizon(&self) -> usize {
        self.snapshots.len() - 1
    }

    /// `n (n - 1) / 2`.
    pub fn dyad_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub(crate) fn snapshots_mut(&mut self) -> &mut [Snapshot] {
        &mut self.snapshots
    }
}

/// On-disk layouts understood by [`load_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    /// One `t<TAB>i<TAB>j` line per edge under a header line.
    LongTsv,
    /// A directory of `tNNN.tsv` files, each listing `i<TAB>j` pairs.
    SnapshotDir,
}

/// Overrides for the node count and horizon, which are otherwise inferred
/// from the data (or from a `# nodes=N horizon=T` comment line).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    pub nodes: Option<usize>,
    pub horizon: Option<usize>,
}

fn parse_id(tok: &str, what: &str, location: impl FnOnce() -> String) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::Parse {
        location: location(),
        message: format!("{what} {tok:?} is not a non-negative integer"),
    })
}

/// Reads `# key=value` metadata from a comment line.
fn parse_meta(line: &str, nodes: &mut Option<usize>, horizon: &mut Option<usize>) {
    for tok in line.trim_start_matches('#').split_whitespace() {
        if let Some((key, value)) = tok.split_once('=') {
            match (key, value.parse::<usize>()) {
                ("nodes", Ok(v)) => *nodes = Some(v),
                ("horizon", Ok(v)) => *horizon = Some(v),
                _ => {}
            }
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

pub fn load_series(path: &Path, format: SeriesFormat, opts: LoadOptions) -> Result<NetworkSeries> {
    match format {
        SeriesFormat::LongTsv => load_long_tsv(path, opts),
        SeriesFormat::SnapshotDir => load_snapshot_dir(path, opts),
    }
}

fn load_long_tsv(path: &Path, opts: LoadOptions) -> Result<NetworkSeries> {
    let lines = read_lines(path)?;
    let (mut meta_nodes, mut meta_horizon) = (None, None);
    let mut triples = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            parse_meta(line, &mut meta_nodes, &mut meta_horizon);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks == ["t", "i", "j"] {
            continue;
        }
        let loc = || format!("{}:{}", path.display(), lineno + 1);
        if toks.len() != 3 {
            return Err(Error::Parse {
                location: loc(),
                message: format!("expected 3 fields, found {}", toks.len()),
            });
        }
        let t = parse_id(toks[0], "time index", loc)?;
        let i = parse_id(toks[1], "node id", loc)?;
        let j = parse_id(toks[2], "node id", loc)?;
        triples.push((t, i, j));
    }
    let nodes = opts
        .nodes
        .or(meta_nodes)
        .unwrap_or_else(|| triples.iter().map(|&(_, i, j)| i.max(j) + 1).max().unwrap_or(0));
    let horizon = opts
        .horizon
        .or(meta_horizon)
        .unwrap_or_else(|| triples.iter().map(|&(t, _, _)| t).max().unwrap_or(0));
    if horizon == 0 {
        return Err(Error::EmptySeries(1));
    }
    NetworkSeries::from_timed_edges(nodes, horizon, triples)
}

fn load_snapshot_dir(path: &Path, opts: LoadOptions) -> Result<NetworkSeries> {
    let mut files: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(t) = name
            .strip_prefix('t')
            .and_then(|s| s.strip_suffix(".tsv"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        let file_path = entry.path();
        let mut pairs = Vec::new();
        for (lineno, line) in read_lines(&file_path)?.iter().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks == ["i", "j"] {
                continue;
            }
            let loc = || format!("{}:{}", file_path.display(), lineno + 1);
            if toks.len() != 2 {
                return Err(Error::Parse {
                    location: loc(),
                    message: format!("expected 2 fields, found {}", toks.len()),
                });
            }
            pairs.push((parse_id(toks[0], "node id", loc)?, parse_id(toks[1], "node id", loc)?));
        }
        files.insert(t, pairs);
    }
    let max_t = files.keys().next_back().copied().unwrap_or(0);
    let horizon = opts.horizon.unwrap_or(max_t);
    if max_t > horizon {
        return Err(Error::Validation(format!(
            "snapshot file t{max_t:03}.tsv beyond horizon {horizon}"
        )));
    }
    if let Some(missing) = (0..=max_t).find(|t| !files.contains_key(t)) {
        return Err(Error::Validation(format!(
            "snapshot file for t={missing} is missing from {}",
            path.display()
        )));
    }
    if horizon == 0 {
        return Err(Error::EmptySeries(files.len()));
    }
    let nodes = opts.nodes.unwrap_or_else(|| {
        files
            .values()
            .flatten()
            .map(|&(i, j)| i.max(j) + 1)
            .max()
            .unwrap_or(0)
    });
    NetworkSeries::from_timed_edges(
        nodes,
        horizon,
        files
            .into_iter()
            .flat_map(|(t, pairs)| pairs.into_iter().map(move |(i, j)| (t, i, j))),
    )
}

/// Renders the series as long TSV, preceded by a `# nodes=N horizon=T`
/// comment so that isolated trailing nodes and empty trailing snapshots
/// survive a round trip.
pub fn to_long_tsv(series: &NetworkSeries) -> String {
    let mut out = format!(
        "# nodes={} horizon={}\nt\ti\tj\n",
        series.n(),
        series.horizon()
    );
    for (t, snap) in series.snapshots().iter().enumerate() {
        for &(i, j) in snap.edges() {
            let _ = writeln!(out, "{t}\t{i}\t{j}");
        }
    }
    out
}

pub fn save_long_tsv(series: &NetworkSeries, path: &Path) -> Result<()> {
    fs::write(path, to_long_tsv(series)).map_err(|e| Error::io(path, e))
}

pub fn save_snapshot_dir(series: &NetworkSeries, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, snap) in series.snapshots().iter().enumerate() {
        let mut body = String::from("i\tj\n");
        for &(i, j) in snap.edges() {
            let _ = writeln!(body, "{i}\t{j}");
        }
        let file = dir.join(format!("t{t:03}.tsv"));
        fs::write(&file, body).map_err(|e| Error::io(&file, e))?;
    }
    Ok(())
}

/// Reads a `i<TAB>k` labels file with 1-based communities and returns
/// 0-based labels indexed by node.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let mut by_node = BTreeMap::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks == ["i", "k"] {
            continue;
        }
        let loc = || format!("{}:{}", path.display(), lineno + 1);
        if toks.len() != 2 {
            return Err(Error::Parse {
                location: loc(),
                message: format!("expected 2 fields, found {}", toks.len()),
            });
        }
        let node = parse_id(toks[0], "node id", loc)?;
        let k = parse_id(toks[1], "community", loc)?;
        if k == 0 {
            return Err(Error::Parse {
                location: loc(),
                message: "communities are numbered from 1".into(),
            });
        }
        if by_node.insert(node, k - 1).is_some() {
            return Err(Error::Validation(format!("node {node} labeled twice")));
        }
    }
    let n = by_node.len();
    if let Some((&node, _)) = by_node.iter().find(|(&node, _)| node >= n) {
        return Err(Error::Validation(format!(
            "labels must cover nodes 0..{n} exactly; found node {node}"
        )));
    }
    Ok(by_node.into_values().collect())
}

pub fn labels_to_tsv(labels: &[usize]) -> String {
    let mut out = String::from("i\tk\n");
    for (i, &k) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}", k + 1);
    }
    out
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    fs::write(path, labels_to_tsv(labels)).map_err(|e| Error::io(path, e))
}

pub(crate) fn check_labels(labels: &[usize], n: usize, k: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} nodes", labels.len())));
    }
    if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::LabelOutOfRange { node, label, k });
    }
    Ok(())
}

/// Cell order inside a [`BlockTransitionCounts`] entry: `(y_prev, y_cur)` =
/// `(0,0), (0,1), (1,0), (1,1)`.
#[inline]
pub fn cell(prev: bool, cur: bool) -> usize {
    (prev as usize) << 1 | cur as usize
}

/// Dyad transition counts aggregated by unordered community pair.
///
/// For each pair `k <= l` the entry holds `[n00, n01, n10, n11]`, where
/// `n_ab` counts dyads `i < j` and steps `t` with `{z_i, z_j} = {k, l}`,
/// `y_{t-1,ij} = a` and `y_{t,ij} = b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTransitionCounts {
    k: usize,
    counts: Vec<[u64; 4]>,
}

#[inline]
pub(crate) fn pair_index(k: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    a * k - a * a.saturating_sub(1) / 2 + b - a
}

impl BlockTransitionCounts {
    pub fn zeros(k: usize) -> Self {
        BlockTransitionCounts {
            k,
            counts: vec![[0; 4]; k * (k + 1) / 2],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `[n00, n01, n10, n11]` for the unordered pair `{a, b}`.
    pub fn get(&self, a: usize, b: usize) -> [u64; 4] {
        self.counts[pair_index(self.k, a, b)]
    }

    /// Iterates over `(k, l, counts)` with `k <= l`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, [u64; 4])> + '_ {
        (0..self.k).flat_map(move |a| (a..self.k).map(move |b| (a, b, self.get(a, b))))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn add(&mut self, other: &BlockTransitionCounts) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            for s in 0..4 {
                c[s] += o[s];
            }
        }
    }
}

/// Counts for the single transition `y_{t-1} -> y_t`.
pub fn transition_tallies_at(
    series: &NetworkSeries,
    labels: &[usize],
    k: usize,
    t: usize,
) -> Result<BlockTransitionCounts> {
    check_labels(labels, series.n(), k)?;
    if t == 0 || t > series.horizon() {
        return Err(Error::Shape(format!(
            "transition index {t} outside 1..={}",
            series.horizon()
        )));
    }
    Ok(tally_step(series, labels, k, t))
}

fn tally_step(series: &NetworkSeries, labels: &[usize], k: usize, t: usize) -> BlockTransitionCounts {
    let mut sizes = vec![0u64; k];
    for &z in labels {
        sizes[z] += 1;
    }
    let mut out = BlockTransitionCounts::zeros(k);
    let (prev, cur) = (series.snapshot(t - 1), series.snapshot(t));
    for &(i, j) in cur.edges() {
        let c = if prev.has_edge(i, j) { cell(true, true) } else { cell(false, true) };
        out.counts[pair_index(k, labels[i], labels[j])][c] += 1;
    }
    for &(i, j) in prev.edges() {
        if !cur.has_edge(i, j) {
            out.counts[pair_index(k, labels[i], labels[j])][cell(true, false)] += 1;
        }
    }
    for a in 0..k {
        for b in a..k {
            let dyads = if a == b {
                sizes[a] * sizes[a].saturating_sub(1) / 2
            } else {
                sizes[a] * sizes[b]
            };
            let c = &mut out.counts[pair_index(k, a, b)];
            c[0] = dyads - c[1] - c[2] - c[3];
        }
    }
    out
}

/// Counts over all transitions `t = 1..=T`.
pub fn transition_tallies(
    series: &NetworkSeries,
    labels: &[usize],
    k: usize,
) -> Result<BlockTransitionCounts> {
    check_labels(labels, series.n(), k)?;
    let mut total = BlockTransitionCounts::zeros(k);
    for t in 1..=series.horizon() {
        total.add(&tally_step(series, labels, k, t));
    }
    Ok(total)
}

/// Per-dyad transition counts summed over time, as four symmetric `n x n`
/// matrices (one per `(y_prev, y_cur)` cell, zero diagonal). Entry
/// `(i, j)` of matrix `cell(a, b)` counts steps `t` with
/// `y_{t-1,ij} = a, y_{t,ij} = b`, so the four entries sum to `T` off the
/// diagonal.
#[derive(Debug, Clone)]
pub struct DyadTransitionCounts {
    horizon: usize,
    cells: [DMatrix<f64>; 4],
}

impl DyadTransitionCounts {
    pub fn new(series: &NetworkSeries) -> Self {
        let n = series.n();
        let horizon = series.horizon();
        let mut cells: [DMatrix<f64>; 4] = std::array::from_fn(|_| DMatrix::zeros(n, n));
        for t in 1..=horizon {
            let (prev, cur) = (series.snapshot(t - 1), series.snapshot(t));
            for &(i, j) in cur.edges() {
                let c = cell(prev.has_edge(i, j), true);
                cells[c][(i, j)] += 1.0;
                cells[c][(j, i)] += 1.0;
            }
            for &(i, j) in prev.edges() {
                if !cur.has_edge(i, j) {
                    cells[cell(true, false)][(i, j)] += 1.0;
                    cells[cell(true, false)][(j, i)] += 1.0;
                }
            }
        }
        let [c00, c01, c10, c11] = &mut cells;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c00[(i, j)] = horizon as f64 - c01[(i, j)] - c10[(i, j)] - c11[(i, j)];
                }
            }
        }
        DyadTransitionCounts { horizon, cells }
    }

    pub fn n(&self) -> usize {
        self.cells[0].nrows()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Matrix for cell index `c` (see [`cell`]).
    pub fn cell(&self, c: usize) -> &DMatrix<f64> {
        &self.cells[c]
    }
}
