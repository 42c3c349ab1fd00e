//! Enumeration of triangulations of point configurations up to symmetry.
//!
//! ```
//! use secenum::engine::{run, EngineConfig, Start};
//! use secenum::pointconfig::{generate_family, FamilySpec};
//! use secenum::search::{SearchContext, SearchMode};
//! use secenum::symmetry::PermGroup;
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let (cfg, gens) = generate_family(&FamilySpec::SimplexProduct(2, 3))?;
//! let group = PermGroup::enumerate(cfg.len(), &gens)?;
//! let ctx = SearchContext::new(cfg, group, SearchMode::symmetric());
//! let report = run(&ctx, &EngineConfig::default(), Start::Root, &|_| {})?;
//! assert_eq!(report.orbits(), 35);
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod engine;
pub mod exact;
pub mod pointconfig;
pub mod regularity;
pub mod search;
pub mod symmetry;
pub mod triangulation;
