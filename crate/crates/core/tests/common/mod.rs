#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secenum::pointconfig::{generate_family, FamilySpec, Permutation, PointConfiguration};
use secenum::search::{find_root, reverse_search, WorkUnit};
use secenum::search::{CacheConfig, CachedOracle, SearchContext, SearchMode};
use secenum::symmetry::PermGroup;
use secenum::triangulation::{apply_flip, find_flips, placing_triangulation, Triangulation};

#[derive(Clone)]
pub struct Fixture {
    pub name: String,
    pub cfg: PointConfiguration,
    pub gens: Vec<Permutation>,
    pub group: PermGroup,
}

pub fn family(name: &str, params: &[&str]) -> Fixture {
    let spec = FamilySpec::parse(name, params).expect("known family");
    let (cfg, gens) = generate_family(&spec).expect("family generates");
    let group = PermGroup::enumerate(cfg.len(), &gens).expect("group fits");
    Fixture { name: spec.to_string(), cfg, gens, group }
}

pub fn moae() -> Fixture {
    family("moae", &[])
}

pub fn cube(d: usize) -> Fixture {
    family("cube", &[&d.to_string()])
}

pub fn product(p: usize, q: usize) -> Fixture {
    family("simplex_product", &[&p.to_string(), &q.to_string()])
}

pub fn dilated(k: usize, d: usize) -> Fixture {
    family("dilated_simplex", &[&k.to_string(), &d.to_string()])
}

/// End point of a random flip walk from the placing triangulation.
pub fn random_walk(cfg: &PointConfiguration, steps: usize, rng: &mut ChaCha8Rng) -> Triangulation {
    let mut t = placing_triangulation(cfg);
    for _ in 0..steps {
        let flips = find_flips(cfg, &t);
        let Some(f) = flips.choose(rng) else { break };
        t = apply_flip(&t, f).expect("flip of this triangulation");
    }
    t
}

/// `count` walk end points with lengths up to `max_steps`.
pub fn random_corpus(cfg: &PointConfiguration, count: usize, max_steps: usize, seed: u64) -> Vec<Triangulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let steps = rng.gen_range(0..=max_steps);
            random_walk(cfg, steps, &mut rng)
        })
        .collect()
}

/// Representatives found by a single unbudgeted reverse search.
pub fn rs_reps(fx: &Fixture, mode: SearchMode) -> Vec<Triangulation> {
    let ctx = SearchContext::new(fx.cfg.clone(), fx.group.clone(), mode);
    let mut oracle = CachedOracle::new(&ctx, CacheConfig::default());
    let root = find_root(&ctx, &mut oracle).expect("root");
    let mut out = Vec::new();
    reverse_search(&ctx, &mut oracle, WorkUnit { node: root, depth: 0 }, None, &mut |v| out.push(v.node.rep.clone()));
    out
}

pub fn mode(regular_only: bool, full_only: bool, symmetric: bool) -> SearchMode {
    SearchMode { regular_only, full_only, symmetric }
}
