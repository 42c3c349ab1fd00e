//! Browser bindings for a planar triangulation viewer.
//!
//! Every export takes the secenum input text (points, then generators) and
//! returns a JSON string; failures come back as `{"error": "..."}`.

use std::str::FromStr;
use std::sync::Mutex;

use num_traits::ToPrimitive;
use secenum::cli::parse_input;
use secenum::engine::{run, BudgetConfig, EngineConfig, Start};
use secenum::pointconfig::{Permutation, PointConfiguration};
use secenum::regularity::is_regular;
use secenum::search::{CacheConfig, SearchContext, SearchMode};
use secenum::symmetry::{orbit_size, PermGroup};
use secenum::triangulation::{apply_flip, compare_total, find_flips, gkz_vector, is_valid, Triangulation};
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Serialize)]
struct Shown {
    tri: String,
    triangles: Vec<Vec<usize>>,
    gkz: Vec<u64>,
    regular: bool,
}

#[derive(Serialize)]
struct Enumerated {
    points: Vec<[f64; 2]>,
    orbits: u64,
    triangulations: Vec<Shown>,
}

#[derive(Serialize)]
struct Neighbor {
    #[serde(flatten)]
    shown: Shown,
    up: bool,
}

#[derive(Serialize)]
struct Canonical {
    #[serde(flatten)]
    shown: Shown,
    orbit_size: u64,
}

fn planar(input: &str) -> Result<(PointConfiguration, Vec<Permutation>), String> {
    let (cfg, gens) = parse_input(input, false).map_err(|e| e.to_string())?;
    if cfg.dim() != 2 {
        return Err(format!("the viewer draws planar configurations; this one has dimension {}", cfg.dim()));
    }
    Ok((cfg, gens))
}

fn coordinates(cfg: &PointConfiguration) -> Vec<[f64; 2]> {
    cfg.rows()
        .iter()
        .map(|r| {
            let w = r[2].to_f64().unwrap_or(1.0);
            [r[0].to_f64().unwrap_or(0.0) / w, r[1].to_f64().unwrap_or(0.0) / w]
        })
        .collect()
}

fn show(cfg: &PointConfiguration, t: &Triangulation) -> Shown {
    Shown {
        tri: t.to_string(),
        triangles: t.simplices().iter().map(|s| s.vertices()).collect(),
        gkz: gkz_vector(cfg, t),
        regular: is_regular(cfg, t),
    }
}

fn parse_tri(cfg: &PointConfiguration, text: &str) -> Result<Triangulation, String> {
    let t = Triangulation::from_str(text.trim()).map_err(|e| e.to_string())?;
    if !is_valid(cfg, &t) {
        return Err(format!("{t} is not a triangulation of these points"));
    }
    Ok(t)
}

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn enumerate_inner(input: &str, regular: bool, symmetric: bool, limit: usize) -> Result<Enumerated, String> {
    let (cfg, gens) = planar(input)?;
    let group = if symmetric {
        PermGroup::enumerate(cfg.len(), &gens).map_err(|e| e.to_string())?
    } else {
        PermGroup::trivial(cfg.len())
    };
    let mode = SearchMode { regular_only: regular, full_only: false, symmetric };
    let ctx = SearchContext::new(cfg.clone(), group, mode);
    let found = Mutex::new(Vec::new());
    let config =
        EngineConfig { budget: BudgetConfig::unlimited(), cache: CacheConfig::default(), ..EngineConfig::default() };
    let report = run(&ctx, &config, Start::Root, &|v| {
        let mut f = found.lock().expect("collector lock");
        if f.len() < limit {
            f.push(v.node.rep.clone());
        }
    })
    .map_err(|e| e.to_string())?;
    let mut reps = found.into_inner().expect("collector lock");
    reps.sort_by(|a, b| compare_total(&cfg, b, a));
    Ok(Enumerated {
        points: coordinates(&cfg),
        orbits: report.orbits(),
        triangulations: reps.iter().map(|t| show(&cfg, t)).collect(),
    })
}

fn neighbors_inner(input: &str, tri: &str) -> Result<Vec<Neighbor>, String> {
    let (cfg, _) = planar(input)?;
    let t = parse_tri(&cfg, tri)?;
    let mut out: Vec<Neighbor> = find_flips(&cfg, &t)
        .iter()
        .map(|f| {
            let u = apply_flip(&t, f).expect("flip of this triangulation");
            let up = compare_total(&cfg, &u, &t).is_gt();
            Neighbor { shown: show(&cfg, &u), up }
        })
        .collect();
    out.sort_by(|a, b| b.shown.gkz.cmp(&a.shown.gkz));
    Ok(out)
}

fn canonicalize_inner(input: &str, tri: &str) -> Result<Canonical, String> {
    let (cfg, gens) = planar(input)?;
    let t = parse_tri(&cfg, tri)?;
    let group = PermGroup::enumerate(cfg.len(), &gens).map_err(|e| e.to_string())?;
    let ctx = SearchContext::new(cfg.clone(), group.clone(), SearchMode::symmetric());
    let (rep, _) = ctx.canonicalizer().canonical(&t, &gkz_vector(&cfg, &t));
    Ok(Canonical { orbit_size: orbit_size(&cfg, &rep, &group), shown: show(&cfg, &rep) })
}

/// Representatives (at most `limit`) of all triangulations or orbits.
#[wasm_bindgen]
pub fn enumerate(input: &str, regular: bool, symmetric: bool, limit: u32) -> String {
    reply(enumerate_inner(input, regular, symmetric, limit as usize))
}

/// Every triangulation one flip away, marked up or down in the total order.
#[wasm_bindgen]
pub fn flip_neighbors(input: &str, tri: &str) -> String {
    reply(neighbors_inner(input, tri))
}

/// The canonical representative of the triangulation's orbit.
#[wasm_bindgen]
pub fn canonicalize(input: &str, tri: &str) -> String {
    reply(canonicalize_inner(input, tri))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const MOAE: &str = "[[0,0],[4,0],[0,4],[1,1],[2,1],[1,2]] [[1,2,0,4,5,3],[0,2,1,3,5,4]]";

    #[test]
    fn enumerate_moae() {
        let v: Value = serde_json::from_str(&enumerate(MOAE, false, true, 100)).unwrap();
        assert_eq!(v["orbits"], 5);
        assert_eq!(v["triangulations"].as_array().unwrap().len(), 5);
        assert_eq!(v["points"].as_array().unwrap().len(), 6);
        let v: Value = serde_json::from_str(&enumerate(MOAE, true, false, 3)).unwrap();
        assert_eq!(v["orbits"], 16);
        assert_eq!(v["triangulations"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn flip_then_canonicalize() {
        let v: Value = serde_json::from_str(&enumerate(MOAE, false, false, 1)).unwrap();
        let root = v["triangulations"][0]["tri"].as_str().unwrap().to_string();
        let n: Value = serde_json::from_str(&flip_neighbors(MOAE, &root)).unwrap();
        let list = n.as_array().unwrap();
        assert!(!list.is_empty());
        assert!(list.iter().all(|x| x["up"] == false));
        let child = list[0]["tri"].as_str().unwrap();
        let c: Value = serde_json::from_str(&canonicalize(MOAE, child)).unwrap();
        assert!(c["orbit_size"].as_u64().unwrap() >= 1);
    }

    #[test]
    fn errors_are_json() {
        let v: Value = serde_json::from_str(&enumerate("[[0],[1]] []", false, false, 1)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("planar"));
        let v: Value = serde_json::from_str(&flip_neighbors(MOAE, "{{0,1,3}}")).unwrap();
        assert!(v["error"].is_string());
    }
}
