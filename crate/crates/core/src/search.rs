//! Down-flip reverse search over triangulations or their orbits.
//!
//! The tree is rooted at the optimal triangulation (the maximum of the total
//! order). A node's parent is the best triangulation reachable by one up-flip,
//! canonicalized when symmetry is in use; children are discovered by down-flips
//! and accepted only when their parent is the current node.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::pointconfig::PointConfiguration;
use crate::regularity::is_regular;
use crate::symmetry::{canonical_bruteforce, Canonicalizer, PermGroup, SwitchTable};
use crate::triangulation::{
    apply_flip, carrier_flip, compare_chi, find_flips, gkz_vector, is_full, placing_triangulation, Flip, Gkz,
    Triangulation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("node {0} is missing from its parent's neighbour list")]
    InconsistentOracle(String),
    #[error("could not build a regular seed for the requested mode")]
    SeedNotRegular,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SearchMode {
    pub regular_only: bool,
    pub full_only: bool,
    pub symmetric: bool,
}

impl SearchMode {
    pub fn all() -> Self {
        SearchMode::default()
    }

    pub fn symmetric() -> Self {
        SearchMode { symmetric: true, ..Self::default() }
    }
}

/// A triangulation (a canonical representative when searching orbits) with
/// its GKZ vector and the mode's leading score.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub rep: Triangulation,
    pub gkz: Gkz,
    /// Zero unless full-only mode weights the order; see [`SearchContext::node`].
    pub score: i128,
}

impl Node {
    /// A node ordered by GKZ vector and tie-break only.
    pub fn new(cfg: &PointConfiguration, rep: Triangulation) -> Self {
        let gkz = gkz_vector(cfg, &rep);
        Node { rep, gkz, score: 0 }
    }

    fn cmp_total(&self, other: &Node) -> Ordering {
        self.score
            .cmp(&other.score)
            .then_with(|| self.gkz.cmp(&other.gkz))
            .then_with(|| compare_chi(&self.rep, &other.rep))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The total order: score, then GKZ vectors lexicographically, then the simplex-list tie-break.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_total(other)
    }
}

/// A subtree root and its depth in the search tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkUnit {
    pub node: Node,
    pub depth: u32,
}

/// Immutable data shared by every traversal.
#[derive(Clone, Debug)]
pub struct SearchContext {
    pub cfg: PointConfiguration,
    pub group: PermGroup,
    pub mode: SearchMode,
    canonicalizer: Canonicalizer,
    weights: Option<Vec<i128>>,
}

impl SearchContext {
    pub fn new(cfg: PointConfiguration, group: PermGroup, mode: SearchMode) -> Self {
        let group = if mode.symmetric { group } else { PermGroup::trivial(cfg.len()) };
        let table = SwitchTable::build(&group, cfg.len());
        let canonicalizer = Canonicalizer::new(&table);
        let weights = mode.full_only.then(|| full_weights(&cfg, &group));
        SearchContext { cfg, group, mode, canonicalizer, weights }
    }

    /// In full-only mode the order first maximizes `-Σ ω_p gkz_p` for a
    /// symmetric strictly convex lifting `ω`. Every point is a lower vertex
    /// under `ω`, so improving flips never have to leave the full
    /// triangulations. Other modes compare GKZ vectors directly.
    pub fn score(&self, gkz: &[u64]) -> i128 {
        match &self.weights {
            None => 0,
            Some(w) => -w.iter().zip(gkz).map(|(&a, &b)| a * b as i128).sum::<i128>(),
        }
    }

    pub fn node(&self, rep: Triangulation) -> Node {
        let gkz = gkz_vector(&self.cfg, &rep);
        let score = self.score(&gkz);
        Node { rep, gkz, score }
    }

    pub fn canonicalizer(&self) -> &Canonicalizer {
        &self.canonicalizer
    }

    fn admits(&self, t: &Triangulation, oracle: &mut dyn Oracle) -> bool {
        (!self.mode.full_only || is_full(&self.cfg, t)) && (!self.mode.regular_only || oracle.is_regular(t))
    }
}

/// Paraboloid heights `|y|²/w` of the homogeneous rows `(y, w)`, summed over
/// each point's orbit and scaled to integers.
fn full_weights(cfg: &PointConfiguration, group: &PermGroup) -> Vec<i128> {
    let n = cfg.len();
    let d = cfg.dim();
    let lcm = cfg.rows().iter().fold(BigInt::one(), |acc, r| acc.lcm(&r[d]));
    let lift: Vec<BigInt> =
        cfg.rows().iter().map(|r| r[..d].iter().map(|x| x * x).sum::<BigInt>() * &lcm / &r[d]).collect();
    let mut orbit: Vec<usize> = (0..n).collect();
    fn find(o: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while o[x] != x {
            o[x] = o[o[x]];
            x = o[x];
        }
        x
    }
    for g in group.generators() {
        for p in 0..n {
            let (a, b) = (find(&mut orbit, p), find(&mut orbit, g.image(p)));
            orbit[a.max(b)] = a.min(b);
        }
    }
    let roots: Vec<usize> = (0..n).map(|p| find(&mut orbit, p)).collect();
    let mut sums = vec![BigInt::zero(); n];
    let mut sizes = vec![0u64; n];
    for p in 0..n {
        sums[roots[p]] += &lift[p];
        sizes[roots[p]] += 1;
    }
    let scale = sizes.iter().filter(|&&s| s > 0).fold(1u64, |acc, &s| acc.lcm(&s));
    (0..n)
        .map(|p| {
            let r = roots[p];
            (&sums[r] * BigInt::from(scale / sizes[r])).to_i128().expect("lifting heights fit in i128")
        })
        .collect()
}

/// The three expensive primitives of the search, possibly memoized.
pub trait Oracle {
    fn flips(&mut self, t: &Triangulation) -> Rc<Vec<Flip>>;
    fn canonical(&mut self, t: &Triangulation, gkz: &[u64]) -> (Triangulation, Gkz);
    fn is_regular(&mut self, t: &Triangulation) -> bool;
}

/// Computes everything from scratch.
pub struct DirectOracle<'a> {
    ctx: &'a SearchContext,
}

impl<'a> DirectOracle<'a> {
    pub fn new(ctx: &'a SearchContext) -> Self {
        DirectOracle { ctx }
    }
}

impl Oracle for DirectOracle<'_> {
    fn flips(&mut self, t: &Triangulation) -> Rc<Vec<Flip>> {
        Rc::new(find_flips(&self.ctx.cfg, t))
    }

    fn canonical(&mut self, t: &Triangulation, gkz: &[u64]) -> (Triangulation, Gkz) {
        self.ctx.canonicalizer.canonical(t, gkz)
    }

    fn is_regular(&mut self, t: &Triangulation) -> bool {
        is_regular(&self.ctx.cfg, t)
    }
}

/// Per-cache capacities; zero disables a cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheConfig {
    pub flips: usize,
    pub orbits: usize,
    pub regular: usize,
    /// Recompute on every hit and panic on disagreement.
    pub verify: bool,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { flips: 2000, orbits: 2000, regular: 2000, verify: false }
    }
}

impl CacheConfig {
    pub fn disabled() -> Self {
        CacheConfig { flips: 0, orbits: 0, regular: 0, verify: false }
    }
}

/// Hit and miss counts of one cache.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheCounters {
    pub hits: u64,
    pub misses: u64,
}

/// LRU-memoized oracle, private to one worker.
pub struct CachedOracle<'a> {
    direct: DirectOracle<'a>,
    flips: Option<LruCache<Triangulation, Rc<Vec<Flip>>>>,
    orbits: Option<LruCache<Triangulation, (Triangulation, Gkz)>>,
    regular: Option<LruCache<Triangulation, bool>>,
    verify: bool,
    pub counters: [CacheCounters; 3],
}

impl<'a> CachedOracle<'a> {
    pub fn new(ctx: &'a SearchContext, config: CacheConfig) -> Self {
        fn make<V>(cap: usize) -> Option<LruCache<Triangulation, V>> {
            NonZeroUsize::new(cap).map(LruCache::new)
        }
        CachedOracle {
            direct: DirectOracle::new(ctx),
            flips: make(config.flips),
            orbits: make(config.orbits),
            regular: make(config.regular),
            verify: config.verify,
            counters: [CacheCounters::default(); 3],
        }
    }
}

fn lookup<V: Clone + PartialEq + std::fmt::Debug>(
    cache: &mut Option<LruCache<Triangulation, V>>,
    counter: &mut CacheCounters,
    verify: bool,
    key: &Triangulation,
    compute: impl FnOnce() -> V,
) -> V {
    let Some(cache) = cache else {
        counter.misses += 1;
        return compute();
    };
    if let Some(v) = cache.get(key) {
        counter.hits += 1;
        let v = v.clone();
        if verify {
            assert_eq!(v, compute(), "cache entry disagrees with recomputation for {key}");
        }
        return v;
    }
    counter.misses += 1;
    let v = compute();
    cache.put(key.clone(), v.clone());
    v
}

impl Oracle for CachedOracle<'_> {
    fn flips(&mut self, t: &Triangulation) -> Rc<Vec<Flip>> {
        let direct = &mut self.direct;
        lookup(&mut self.flips, &mut self.counters[0], self.verify, t, || direct.flips(t))
    }

    fn canonical(&mut self, t: &Triangulation, gkz: &[u64]) -> (Triangulation, Gkz) {
        let direct = &mut self.direct;
        lookup(&mut self.orbits, &mut self.counters[1], self.verify, t, || direct.canonical(t, gkz))
    }

    fn is_regular(&mut self, t: &Triangulation) -> bool {
        let direct = &mut self.direct;
        lookup(&mut self.regular, &mut self.counters[2], self.verify, t, || direct.is_regular(t))
    }
}

/// Flip targets of `node.rep` strictly on one side of it, unsorted.
fn targets(ctx: &SearchContext, node: &Node, flips: &[Flip], want: Ordering) -> Vec<Node> {
    let mut out = Vec::new();
    for f in flips {
        let gkz = f.target_gkz(&ctx.cfg, &node.gkz);
        let score = ctx.score(&gkz);
        let ord = score.cmp(&node.score).then_with(|| gkz.cmp(&node.gkz));
        if ord != want && ord != Ordering::Equal {
            continue;
        }
        let t = apply_flip(&node.rep, f).expect("flip found on this triangulation");
        if ord == Ordering::Equal && compare_chi(&t, &node.rep) != want {
            continue;
        }
        out.push(Node { rep: t, gkz, score });
    }
    out
}

fn canonical_node(ctx: &SearchContext, oracle: &mut dyn Oracle, n: Node) -> Node {
    if !ctx.mode.symmetric || ctx.canonicalizer.is_trivial() {
        return n;
    }
    let (rep, gkz) = oracle.canonical(&n.rep, &n.gkz);
    debug_assert_eq!(ctx.score(&gkz), n.score);
    Node { rep, gkz, score: n.score }
}

/// `Adj(v, ·)` as a list: mode-admissible down-flip targets, canonicalized,
/// deduplicated, largest first.
pub fn down_neighbors(ctx: &SearchContext, oracle: &mut dyn Oracle, node: &Node) -> Vec<Node> {
    let flips = oracle.flips(&node.rep);
    down_neighbors_with(ctx, oracle, node, &flips)
}

fn down_neighbors_with(ctx: &SearchContext, oracle: &mut dyn Oracle, node: &Node, flips: &[Flip]) -> Vec<Node> {
    let mut out: Vec<Node> = Vec::new();
    let mut cands = targets(ctx, node, flips, Ordering::Less);
    if ctx.mode.full_only {
        cands.retain(|c| is_full(&ctx.cfg, &c.rep));
    }
    for c in cands {
        let c = canonical_node(ctx, oracle, c);
        // A representative at or above the node can never name it as parent.
        if c < *node {
            out.push(c);
        }
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out.dedup();
    if ctx.mode.regular_only {
        out.retain(|c| oracle.is_regular(&c.rep));
    }
    out
}

/// Best mode-admissible up-flip target, before canonicalization.
fn best_up_target(ctx: &SearchContext, oracle: &mut dyn Oracle, node: &Node, flips: &[Flip]) -> Option<Node> {
    let mut ups = targets(ctx, node, flips, Ordering::Greater);
    if ctx.mode.full_only {
        ups.retain(|c| is_full(&ctx.cfg, &c.rep));
    }
    if !ctx.mode.regular_only {
        return ups.into_iter().max();
    }
    ups.sort_unstable_by(|a, b| b.cmp(a));
    ups.into_iter().find(|u| oracle.is_regular(&u.rep))
}

/// `π(v)`: the canonicalized best up-flip target, or `None` at the root.
pub fn predecessor_node(ctx: &SearchContext, oracle: &mut dyn Oracle, node: &Node) -> Option<Node> {
    let flips = oracle.flips(&node.rep);
    best_up_target(ctx, oracle, node, &flips).map(|u| canonical_node(ctx, oracle, u))
}

/// `π(v)` together with the position of `v` in its parent's neighbour list.
pub fn predecessor(
    ctx: &SearchContext,
    oracle: &mut dyn Oracle,
    node: &Node,
) -> Result<Option<(Node, usize)>, SearchError> {
    let Some(parent) = predecessor_node(ctx, oracle, node) else { return Ok(None) };
    let list = down_neighbors(ctx, oracle, &parent);
    match list.binary_search_by(|x| node.cmp(x)) {
        Ok(j) => Ok(Some((parent, j))),
        Err(_) => Err(SearchError::InconsistentOracle(node.rep.to_string())),
    }
}

/// `π(child) = parent`, with cheap rejections before canonicalizing.
fn is_child(ctx: &SearchContext, oracle: &mut dyn Oracle, child: &Node, parent: &Node) -> bool {
    let flips = oracle.flips(&child.rep);
    let Some(up) = best_up_target(ctx, oracle, child, &flips) else { return false };
    if !ctx.mode.symmetric || ctx.canonicalizer.is_trivial() {
        return up == *parent;
    }
    // ρ(up) = parent forces up ≤ parent and equal GKZ multisets.
    if up > *parent {
        return false;
    }
    let mut a = up.gkz.clone();
    let mut b = parent.gkz.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return false;
    }
    canonical_node(ctx, oracle, up) == *parent
}

/// Inserts each unused point into the current triangulation (a pulling
/// refinement), yielding a full triangulation.
fn full_refinement(ctx: &SearchContext, t: &Triangulation) -> Option<Triangulation> {
    let mut t = t.clone();
    for p in 0..ctx.cfg.len() {
        if t.vertices_used() & (1u64 << p) != 0 {
            continue;
        }
        let f = carrier_flip(&ctx.cfg, &t, p)?;
        t = apply_flip(&t, &f).ok()?;
    }
    Some(t)
}

/// Regular seed for the mode, lifted to the optimal node by repeated `π`.
pub fn find_root(ctx: &SearchContext, oracle: &mut dyn Oracle) -> Result<Node, SearchError> {
    let mut seed = placing_triangulation(&ctx.cfg);
    if ctx.mode.full_only && !is_full(&ctx.cfg, &seed) {
        seed = full_refinement(ctx, &seed).ok_or(SearchError::SeedNotRegular)?;
        if !is_regular(&ctx.cfg, &seed) {
            return Err(SearchError::SeedNotRegular);
        }
    }
    let mut node = ctx.node(seed);
    loop {
        let flips = oracle.flips(&node.rep);
        match best_up_target(ctx, oracle, &node, &flips) {
            Some(up) => node = up,
            None => break,
        }
    }
    Ok(canonical_node(ctx, oracle, node))
}

/// What a traversal reports to its visitor for each node.
#[derive(Clone, Copy, Debug)]
pub struct Visit<'a> {
    pub node: &'a Node,
    pub depth: u32,
    /// Number of flips of the node, mode filters aside.
    pub flips: usize,
    pub parent: Option<&'a Node>,
}

/// Result of one budgeted traversal.
#[derive(Clone, Debug, Default)]
pub struct SearchOutcome {
    pub visited: u64,
    pub unexplored: Vec<WorkUnit>,
}

struct Frame {
    node: Node,
    depth: u32,
    children: Vec<Node>,
    next: usize,
}

fn expand(ctx: &SearchContext, oracle: &mut dyn Oracle, node: Node, depth: u32) -> (Frame, usize) {
    let flips = oracle.flips(&node.rep);
    let children = down_neighbors_with(ctx, oracle, &node, &flips);
    (Frame { node, depth, children, next: 0 }, flips.len())
}

/// Depth-first reverse search below `unit`, visiting at most `budget` nodes.
///
/// The path from the unit root is kept on a stack. When the budget runs out,
/// every child not yet entered along that path is returned as a work unit.
pub fn reverse_search(
    ctx: &SearchContext,
    oracle: &mut dyn Oracle,
    unit: WorkUnit,
    budget: Option<u64>,
    visitor: &mut dyn FnMut(Visit<'_>),
) -> SearchOutcome {
    let mut outcome = SearchOutcome::default();
    let (frame, nflips) = expand(ctx, oracle, unit.node, unit.depth);
    visitor(Visit { node: &frame.node, depth: frame.depth, flips: nflips, parent: None });
    outcome.visited += 1;
    let mut stack = vec![frame];
    let exhausted = |v: u64| budget.is_some_and(|b| v >= b);
    if exhausted(outcome.visited) {
        outcome.unexplored = pending_units(ctx, oracle, &mut stack);
        return outcome;
    }
    while let Some(top) = stack.last_mut() {
        if top.next == top.children.len() {
            stack.pop();
            continue;
        }
        let child = top.children[top.next].clone();
        top.next += 1;
        if !is_child(ctx, oracle, &child, &top.node) {
            continue;
        }
        let depth = top.depth + 1;
        let (frame, nflips) = expand(ctx, oracle, child, depth);
        let parent = &stack.last().expect("nonempty stack").node;
        visitor(Visit { node: &frame.node, depth, flips: nflips, parent: Some(parent) });
        outcome.visited += 1;
        stack.push(frame);
        if exhausted(outcome.visited) {
            outcome.unexplored = pending_units(ctx, oracle, &mut stack);
            return outcome;
        }
    }
    outcome
}

fn pending_units(ctx: &SearchContext, oracle: &mut dyn Oracle, stack: &mut [Frame]) -> Vec<WorkUnit> {
    let mut units = Vec::new();
    for frame in stack.iter_mut().rev() {
        for child in &frame.children[frame.next..] {
            if is_child(ctx, oracle, child, &frame.node) {
                units.push(WorkUnit { node: child.clone(), depth: frame.depth + 1 });
            }
        }
        frame.next = frame.children.len();
    }
    units
}

/// The memoryless form: backtracking recomputes `π` and the child's index
/// instead of keeping the path. Visits the same nodes in the same order.
pub fn reverse_search_memoryless(
    ctx: &SearchContext,
    oracle: &mut dyn Oracle,
    root: &Node,
    visitor: &mut dyn FnMut(&Node, u32),
) -> Result<u64, SearchError> {
    let mut v = root.clone();
    let mut depth = 0u32;
    let mut j = 0usize;
    let mut visited = 1u64;
    visitor(&v, depth);
    loop {
        let adj = down_neighbors(ctx, oracle, &v);
        let mut descended = false;
        while j < adj.len() {
            let next = adj[j].clone();
            j += 1;
            if is_child(ctx, oracle, &next, &v) {
                v = next;
                depth += 1;
                j = 0;
                visited += 1;
                visitor(&v, depth);
                descended = true;
                break;
            }
        }
        if descended {
            continue;
        }
        if v == *root {
            return Ok(visited);
        }
        let (parent, idx) =
            predecessor(ctx, oracle, &v)?.ok_or_else(|| SearchError::InconsistentOracle(v.rep.to_string()))?;
        v = parent;
        depth -= 1;
        j = idx + 1;
    }
}

/// Nodes reached by breadth-first search over mode-admissible flips from the
/// mode's seed, as canonical representatives when symmetric. Used as an
/// independent oracle: it relies on neither the total order nor the switch
/// table.
#[derive(Clone, Debug)]
pub struct BfsResult {
    pub reps: Vec<Triangulation>,
    pub regular: usize,
}

/// Breadth-first enumeration of the flip-graph component of the seed,
/// canonicalizing by brute force over the group.
pub fn enumerate_bfs(cfg: &PointConfiguration, group: &PermGroup, mode: SearchMode) -> Result<BfsResult, SearchError> {
    let group = if mode.symmetric { group.clone() } else { PermGroup::trivial(cfg.len()) };
    let ctx = SearchContext::new(cfg.clone(), PermGroup::trivial(cfg.len()), SearchMode { symmetric: false, ..mode });
    let mut seed = placing_triangulation(cfg);
    if mode.full_only && !is_full(cfg, &seed) {
        seed = full_refinement(&ctx, &seed).ok_or(SearchError::SeedNotRegular)?;
    }
    let mut oracle = DirectOracle::new(&ctx);
    let start = canonical_bruteforce(cfg, &seed, &group);
    let mut seen: FxHashSet<Triangulation> = FxHashSet::default();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    let mut reps = Vec::new();
    let mut regular = 0;
    while let Some(t) = queue.pop_front() {
        let reg = is_regular(cfg, &t);
        regular += usize::from(reg);
        for f in find_flips(cfg, &t) {
            let u = apply_flip(&t, &f).expect("flip found on this triangulation");
            if !ctx.admits(&u, &mut oracle) {
                continue;
            }
            let c = canonical_bruteforce(cfg, &u, &group);
            if seen.insert(c.clone()) {
                queue.push_back(c);
            }
        }
        reps.push(t);
    }
    Ok(BfsResult { reps, regular })
}
