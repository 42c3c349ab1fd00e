//! Master–worker scheduler around budgeted reverse search.
//!
//! Workers share nothing but a queue of pending work units and the output
//! sink. Each pops a unit, searches below it with the current budget, and
//! pushes back the subtree roots it did not enter. The run ends when the
//! queue is empty and every worker is idle, or, if a stop threshold is set,
//! at the first quiescent moment after it is crossed.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pointconfig::{Permutation, PointConfiguration};
use crate::search::{
    find_root, reverse_search, CacheConfig, CacheCounters, CachedOracle, Oracle, SearchContext, SearchError,
    SearchMode, Visit, WorkUnit,
};
use crate::symmetry::{orbit_size_with_gkz, JboundStats};
use crate::triangulation::{Triangulation, TriangulationError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("checkpoint was written for a different input (digest {found}, expected {expected})")]
    DigestMismatch { expected: String, found: String },
    #[error("checkpoint was written for mode {found}, not {expected}")]
    ModeMismatch { expected: String, found: String },
    #[error("malformed checkpoint, line {line}: {message}")]
    MalformedCheckpoint { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Node quotas handed to work units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetConfig {
    pub small: u64,
    pub large: u64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig { small: 50, large: 5000 }
    }
}

impl BudgetConfig {
    /// The same budget regardless of queue length.
    pub fn fixed(budget: u64) -> Self {
        BudgetConfig { small: budget, large: budget }
    }

    pub fn unlimited() -> Self {
        Self::fixed(u64::MAX)
    }
}

/// Small budgets while the queue is too short to keep every worker busy.
pub fn dynamic_budget(pending: usize, workers: usize, config: &BudgetConfig) -> u64 {
    if workers > 1 && pending < 2 * workers {
        config.small
    } else {
        config.large
    }
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub workers: usize,
    pub budget: BudgetConfig,
    pub cache: CacheConfig,
    /// Count regular nodes (implied when the mode is regular-only).
    pub count_regular: bool,
    /// Sum orbit sizes.
    pub orbit_sizes: bool,
    /// Stop taking work once this many nodes have been visited in total.
    pub stop_after: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: 1,
            budget: BudgetConfig::default(),
            cache: CacheConfig::default(),
            count_regular: false,
            orbit_sizes: false,
            stop_after: None,
        }
    }
}

/// Counters that survive a checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub visited: u64,
    pub regular: Option<u64>,
    pub total: Option<u64>,
    pub max_flips: usize,
    pub max_simplices: usize,
    pub jbound: JboundStats,
}

impl Counts {
    fn merge(&mut self, other: &Counts) {
        self.visited += other.visited;
        add_opt(&mut self.regular, other.regular);
        add_opt(&mut self.total, other.total);
        self.max_flips = self.max_flips.max(other.max_flips);
        self.max_simplices = self.max_simplices.max(other.max_simplices);
        self.jbound.merge(&other.jbound);
    }
}

fn add_opt(a: &mut Option<u64>, b: Option<u64>) {
    if let Some(b) = b {
        *a = Some(a.unwrap_or(0) + b);
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub counts: Counts,
    pub per_worker: Vec<u64>,
    pub cache: [CacheCounters; 3],
    pub wall_time: Duration,
    /// Units left when the run stopped early; empty when it finished.
    pub pending: Vec<WorkUnit>,
}

impl Report {
    pub fn orbits(&self) -> u64 {
        self.counts.visited
    }

    pub fn completed(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Where a run starts.
#[derive(Clone, Debug)]
pub enum Start {
    Root,
    Resume(Checkpoint),
}

struct Queue {
    pending: VecDeque<WorkUnit>,
    active: usize,
    visited: u64,
    stopping: bool,
}

/// Runs the search to completion (or to the stop threshold), calling `sink`
/// on every visited node from whichever worker visits it.
pub fn run(
    ctx: &SearchContext,
    config: &EngineConfig,
    start: Start,
    sink: &(dyn Fn(&Visit<'_>) + Sync),
) -> Result<Report, EngineError> {
    let started = Instant::now();
    let workers = config.workers.max(1);
    let (pending, mut counts) = match start {
        Start::Root => {
            let mut oracle = CachedOracle::new(ctx, CacheConfig::disabled());
            let root = find_root(ctx, &mut oracle)?;
            (vec![WorkUnit { node: root, depth: 0 }], Counts::default())
        }
        Start::Resume(cp) => {
            let units = cp.units.iter().map(|(d, t)| WorkUnit { node: ctx.node(t.clone()), depth: *d }).collect();
            (units, cp.counts)
        }
    };
    let count_regular = config.count_regular || ctx.mode.regular_only;
    if count_regular && counts.regular.is_none() {
        counts.regular = Some(0);
    }
    if config.orbit_sizes && counts.total.is_none() {
        counts.total = Some(0);
    }
    let queue = Mutex::new(Queue { pending: pending.into(), active: 0, visited: counts.visited, stopping: false });
    let cond = Condvar::new();
    let results: Vec<(Counts, [CacheCounters; 3])> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| scope.spawn(|| worker(ctx, config, workers, count_regular, &queue, &cond, sink)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut per_worker = Vec::with_capacity(workers);
    let mut cache = [CacheCounters::default(); 3];
    for (c, k) in &results {
        per_worker.push(c.visited);
        counts.merge(c);
        for (a, b) in cache.iter_mut().zip(k) {
            a.hits += b.hits;
            a.misses += b.misses;
        }
    }
    let mut pending: Vec<WorkUnit> = queue.into_inner().expect("queue lock").pending.into();
    pending.sort_by(|a, b| b.node.cmp(&a.node).then(a.depth.cmp(&b.depth)));
    Ok(Report { counts, per_worker, cache, wall_time: started.elapsed(), pending })
}

fn worker(
    ctx: &SearchContext,
    config: &EngineConfig,
    workers: usize,
    count_regular: bool,
    queue: &Mutex<Queue>,
    cond: &Condvar,
    sink: &(dyn Fn(&Visit<'_>) + Sync),
) -> (Counts, [CacheCounters; 3]) {
    let mut oracle = CachedOracle::new(ctx, config.cache);
    let mut local =
        Counts { regular: count_regular.then_some(0), total: config.orbit_sizes.then_some(0), ..Counts::default() };
    loop {
        let (unit, budget) = {
            let mut q = queue.lock().expect("queue lock");
            loop {
                if !q.stopping {
                    if let Some(u) = q.pending.pop_back() {
                        q.active += 1;
                        let b = dynamic_budget(q.pending.len() + 1, workers, &config.budget);
                        break (u, b);
                    }
                }
                if q.active == 0 {
                    cond.notify_all();
                    return (local, oracle.counters);
                }
                q = cond.wait(q).expect("queue lock");
            }
        };
        let budget = (budget != u64::MAX).then_some(budget.max(1));
        let check_regular = count_regular && !ctx.mode.regular_only;
        let mut to_check: Vec<Triangulation> = Vec::new();
        let outcome = reverse_search(ctx, &mut oracle, unit, budget, &mut |v| {
            local.max_flips = local.max_flips.max(v.flips);
            local.max_simplices = local.max_simplices.max(v.node.rep.len());
            local.jbound.record(&v.node.gkz);
            if let Some(total) = local.total.as_mut() {
                *total += orbit_size_with_gkz(&v.node.rep, &v.node.gkz, &ctx.group);
            }
            if check_regular {
                to_check.push(v.node.rep.clone());
            }
            sink(&v);
        });
        local.visited += outcome.visited;
        if let Some(r) = local.regular.as_mut() {
            *r += if check_regular {
                to_check.iter().filter(|t| oracle.is_regular(t)).count() as u64
            } else {
                outcome.visited
            };
        }
        let mut q = queue.lock().expect("queue lock");
        q.active -= 1;
        q.visited += outcome.visited;
        q.pending.extend(outcome.unexplored);
        if config.stop_after.is_some_and(|s| q.visited >= s) {
            q.stopping = true;
        }
        cond.notify_all();
    }
}

/// SHA-256 over the working-order rows and generators.
pub fn input_digest(cfg: &PointConfiguration, generators: &[Permutation]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "n={} d={}", cfg.len(), cfg.dim());
    for row in cfg.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(text, "{}", cells.join(","));
    }
    text.push_str("generators\n");
    for g in generators {
        let cells: Vec<String> = g.to_vec().iter().map(|x| x.to_string()).collect();
        let _ = writeln!(text, "{}", cells.join(","));
    }
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A quiescent snapshot: counts so far and the units still to explore.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub digest: String,
    pub mode: SearchMode,
    pub counts: Counts,
    pub units: Vec<(u32, Triangulation)>,
}

const MAGIC: &str = "secenum-checkpoint v1";

fn mode_line(m: &SearchMode) -> String {
    format!("regular={} full={} symmetric={}", u8::from(m.regular_only), u8::from(m.full_only), u8::from(m.symmetric))
}

impl Checkpoint {
    pub fn from_report(digest: String, mode: SearchMode, report: &Report) -> Self {
        Checkpoint {
            digest,
            mode,
            counts: report.counts.clone(),
            units: report.pending.iter().map(|u| (u.depth, u.node.rep.clone())).collect(),
        }
    }

    pub fn render(&self) -> String {
        let c = &self.counts;
        let mut out = format!("{MAGIC}\n{}\n{}\nvisited={}", self.digest, mode_line(&self.mode), c.visited);
        if let Some(r) = c.regular {
            let _ = write!(out, " regular={r}");
        }
        if let Some(t) = c.total {
            let _ = write!(out, " total={t}");
        }
        let _ = write!(out, " dmax={} smax={}", c.max_flips, c.max_simplices);
        let hist: Vec<String> = c.jbound.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        let _ = writeln!(out, " jbar={}", hist.join(","));
        for (d, t) in &self.units {
            let _ = writeln!(out, "depth={d} T={t}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let bad = |line: usize, message: &str| EngineError::MalformedCheckpoint { line, message: message.to_string() };
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad(1, "missing header"));
        }
        let digest = lines.next().ok_or_else(|| bad(2, "missing digest"))?.trim().to_string();
        if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad(2, "digest is not 64 hex digits"));
        }
        let mode_text = lines.next().ok_or_else(|| bad(3, "missing mode"))?;
        let mut mode = SearchMode::default();
        let mut seen = 0;
        for tok in mode_text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(3, "expected key=value"))?;
            let flag = match v {
                "0" => false,
                "1" => true,
                _ => return Err(bad(3, "mode flags are 0 or 1")),
            };
            match k {
                "regular" => mode.regular_only = flag,
                "full" => mode.full_only = flag,
                "symmetric" => mode.symmetric = flag,
                _ => return Err(bad(3, "unknown mode flag")),
            }
            seen += 1;
        }
        if seen != 3 {
            return Err(bad(3, "expected three mode flags"));
        }
        let counts_text = lines.next().ok_or_else(|| bad(4, "missing counts"))?;
        let mut counts = Counts::default();
        let mut has_visited = false;
        for tok in counts_text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(4, "expected key=value"))?;
            let num = |v: &str| u64::from_str(v).map_err(|_| bad(4, "bad number"));
            match k {
                "visited" => {
                    counts.visited = num(v)?;
                    has_visited = true;
                }
                "regular" => counts.regular = Some(num(v)?),
                "total" => counts.total = Some(num(v)?),
                "dmax" => counts.max_flips = num(v)? as usize,
                "smax" => counts.max_simplices = num(v)? as usize,
                "jbar" => {
                    let mut hist = BTreeMap::new();
                    for entry in v.split(',').filter(|e| !e.is_empty()) {
                        let (a, b) = entry.split_once(':').ok_or_else(|| bad(4, "bad jbar entry"))?;
                        hist.insert(num(a)? as usize, num(b)?);
                    }
                    counts.jbound = JboundStats { histogram: hist };
                }
                _ => {}
            }
        }
        if !has_visited {
            return Err(bad(4, "missing visited="));
        }
        let mut units = Vec::new();
        for (k, line) in lines.enumerate() {
            let n = k + 5;
            if line.trim().is_empty() {
                continue;
            }
            let rest = line.strip_prefix("depth=").ok_or_else(|| bad(n, "expected depth="))?;
            let (d, t) = rest.split_once(" T=").ok_or_else(|| bad(n, "expected T="))?;
            let d = u32::from_str(d).map_err(|_| bad(n, "bad depth"))?;
            let t = Triangulation::from_str(t).map_err(|e: TriangulationError| bad(n, &e.to_string()))?;
            units.push((d, t));
        }
        Ok(Checkpoint { digest, mode, counts, units })
    }

    /// Checks that this checkpoint belongs to the given input and mode.
    pub fn check(&self, digest: &str, mode: SearchMode) -> Result<(), EngineError> {
        if self.digest != digest {
            return Err(EngineError::DigestMismatch { expected: digest.to_string(), found: self.digest.clone() });
        }
        if self.mode != mode {
            return Err(EngineError::ModeMismatch { expected: mode_line(&mode), found: mode_line(&self.mode) });
        }
        Ok(())
    }

    /// Writes through a temporary file so a crash never leaves half a checkpoint.
    pub fn write(&self, path: &std::path::Path) -> Result<(), EngineError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.render())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self, EngineError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
