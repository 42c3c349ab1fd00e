//! Command-line front end: input documents, flags, output formatting.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{input_digest, run, BudgetConfig, Checkpoint, EngineConfig, EngineError, Report, Start};
use crate::pointconfig::{generate_family, FamilySpec, GeometryError, Permutation, PointConfiguration};
use crate::search::{enumerate_bfs, predecessor_node, CacheConfig, DirectOracle, SearchContext, SearchMode};
use crate::symmetry::{PermGroup, SymmetryError};
use crate::triangulation::{Triangulation, TriangulationError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    /// 1 for bad input, 2 for internal inconsistencies.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(EngineError::Search(_)) | CliError::Verify(_) => 2,
            _ => 1,
        }
    }
}

/// The text form of an input: points (affine unless homogeneous) and generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputDocument {
    pub points: Vec<Vec<BigRational>>,
    pub generators: Vec<Vec<usize>>,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn new(text: &str) -> Self {
        Lexer { chars: text.chars().collect(), pos: 0, line: 1, column: 1 }
    }

    fn error(&self, message: impl Into<String>) -> CliError {
        CliError::Parse { line: self.line, column: self.column, message: message.into() }
    }

    fn bump(&mut self) -> Option<char> {
        let c = *self.chars.get(self.pos)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.get(self.pos) {
            if c == '#' {
                while self.chars.get(self.pos).is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_blank();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, want: char) -> Result<(), CliError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn integer(&mut self) -> Result<BigInt, CliError> {
        self.skip_blank();
        let mut s = String::new();
        if matches!(self.chars.get(self.pos), Some('-') | Some('+')) {
            s.push(self.bump().expect("sign"));
        }
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            s.push(self.bump().expect("digit"));
        }
        BigInt::from_str(&s).map_err(|_| self.error("expected an integer"))
    }

    fn rational(&mut self) -> Result<BigRational, CliError> {
        let num = self.integer()?;
        if self.chars.get(self.pos) == Some(&'/') {
            self.bump();
            let (line, column) = (self.line, self.column);
            let den = self.integer()?;
            if !den.is_positive() {
                return Err(CliError::Parse { line, column, message: "denominator must be positive".into() });
            }
            return Ok(BigRational::new(num, den));
        }
        Ok(BigRational::from_integer(num))
    }

    /// `[ [x, ...], ... ]`, with `item` reading one entry.
    fn nested<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, CliError>) -> Result<Vec<Vec<T>>, CliError> {
        self.expect('[')?;
        let mut out = Vec::new();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(out);
        }
        loop {
            self.expect('[')?;
            let mut row = Vec::new();
            if self.peek() != Some(']') {
                loop {
                    row.push(item(self)?);
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                        }
                        Some(']') => break,
                        Some(c) => return Err(self.error(format!("expected ',' or ']', found '{c}'"))),
                        None => return Err(self.error("unexpected end of input")),
                    }
                }
            }
            self.bump();
            out.push(row);
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(']') => {
                    self.bump();
                    return Ok(out);
                }
                Some(c) => return Err(self.error(format!("expected ',' or ']', found '{c}'"))),
                None => return Err(self.error("unexpected end of input")),
            }
        }
    }
}

/// Reads the points block and the (possibly empty, possibly absent) generators block.
pub fn parse_document(text: &str) -> Result<InputDocument, CliError> {
    let mut lx = Lexer::new(text);
    let points = lx.nested(|lx| lx.rational())?;
    let generators = if lx.peek().is_some() {
        lx.nested(|lx| {
            let (line, column) = (lx.line, lx.column);
            let v = lx.integer()?;
            usize::try_from(&v).map_err(|_| CliError::Parse { line, column, message: "negative point index".into() })
        })?
    } else {
        Vec::new()
    };
    if lx.peek().is_some() {
        return Err(lx.error("trailing input after the generators block"));
    }
    Ok(InputDocument { points, generators })
}

/// Writes a document that [`parse_document`] reads back unchanged.
pub fn render_document(doc: &InputDocument) -> String {
    let rows: Vec<String> = doc
        .points
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    let gens: Vec<String> = doc
        .generators
        .iter()
        .map(|g| format!("[{}]", g.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]\n[{}]\n", rows.join(",\n "), gens.join(",\n "))
}

/// Builds the configuration and checks every generator.
pub fn build_input(doc: &InputDocument, homogeneous: bool) -> Result<(PointConfiguration, Vec<Permutation>), CliError> {
    let cfg = if homogeneous {
        if doc.points.iter().flatten().any(|q| !q.is_integer()) {
            return Err(CliError::Parse { line: 1, column: 1, message: "homogeneous input must be integral".into() });
        }
        let rows = doc.points.iter().map(|r| r.iter().map(|q| q.to_integer()).collect()).collect();
        PointConfiguration::from_homogeneous(rows)?
    } else {
        PointConfiguration::homogenize(&doc.points)?
    };
    let mut gens = Vec::new();
    for g in &doc.generators {
        if g.len() != cfg.len() {
            return Err(GeometryError::BadPermutation(format!(
                "{g:?} has {} entries, expected {}",
                g.len(),
                cfg.len()
            ))
            .into());
        }
        let p = Permutation::new(g.clone())?;
        cfg.validate_symmetry(&p)?;
        if !p.is_identity() {
            gens.push(p);
        }
    }
    Ok((cfg, gens))
}

pub fn parse_input(text: &str, homogeneous: bool) -> Result<(PointConfiguration, Vec<Permutation>), CliError> {
    build_input(&parse_document(text)?, homogeneous)
}

/// The document for a configuration built from affine rows.
pub fn document_of(cfg: &PointConfiguration, generators: &[Permutation]) -> InputDocument {
    let d = cfg.dim();
    let points =
        cfg.rows().iter().map(|r| r[..d].iter().map(|x| BigRational::new(x.clone(), r[d].clone())).collect()).collect();
    InputDocument { points, generators: generators.iter().map(|g| g.to_vec()).collect() }
}

pub fn dump_triangulation(t: &Triangulation) -> String {
    t.to_string()
}

pub fn parse_triangulation(text: &str) -> Result<Triangulation, TriangulationError> {
    Triangulation::from_str(text.trim())
}

/// Reorders points with a seeded shuffle; generators are conjugated to match.
pub fn reorder(
    cfg: &PointConfiguration,
    gens: &[Permutation],
    seed: u64,
) -> Result<(PointConfiguration, Vec<Permutation>), CliError> {
    let mut order: Vec<usize> = (0..cfg.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let relabelled = cfg.relabel(&order)?;
    let mut position = vec![0; order.len()];
    for (k, &p) in order.iter().enumerate() {
        position[p] = k;
    }
    let gens = gens
        .iter()
        .map(|g| Permutation::new(order.iter().map(|&p| position[g.image(p)]).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((relabelled, gens))
}

/// A triangulation in the input's original labels.
pub fn original_labels(cfg: &PointConfiguration, t: &Triangulation) -> Triangulation {
    let images: Vec<u8> = cfg.ordering().iter().map(|&p| p as u8).collect();
    t.permuted(&images)
}

#[derive(Parser, Debug)]
#[command(name = "secenum", version, about = "Enumerate triangulations of a point configuration up to symmetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the input document of a benchmark family: cube D, simplex_product P Q, dilated_simplex K D, moae.
    Gen { family: String, params: Vec<String> },
    /// Enumerate with reverse search and with the breadth-first oracle, and compare.
    Verify,
}

#[derive(Args, Debug, Clone)]
pub struct RunOptions {
    /// Input file (standard input when absent or "-").
    #[arg(global = true, long, short = 'i')]
    pub input: Option<PathBuf>,
    /// Rows are already homogeneous (last coordinate positive).
    #[arg(global = true, long)]
    pub homogeneous: bool,
    /// Only regular triangulations.
    #[arg(global = true, long)]
    pub regular: bool,
    /// Only triangulations using every point.
    #[arg(global = true, long)]
    pub full: bool,
    /// Ignore the generators and enumerate triangulations, not orbits.
    #[arg(global = true, long)]
    pub no_symmetry: bool,
    #[arg(global = true, long, default_value_t = 1)]
    pub workers: usize,
    #[arg(global = true, long, default_value_t = 50)]
    pub budget_small: u64,
    #[arg(global = true, long, default_value_t = 5000)]
    pub budget_large: u64,
    #[arg(global = true, long, default_value_t = 2000)]
    pub cache_flips: usize,
    #[arg(global = true, long, default_value_t = 2000)]
    pub cache_orbits: usize,
    #[arg(global = true, long, default_value_t = 2000)]
    pub cache_regular: usize,
    /// Recompute every cache hit and abort on disagreement.
    #[arg(global = true, long)]
    pub verify_caches: bool,
    /// Write a checkpoint here when the run stops early.
    #[arg(global = true, long)]
    pub checkpoint: Option<PathBuf>,
    /// Stop at the first quiescent point after this many nodes.
    #[arg(global = true, long)]
    pub stop_after: Option<u64>,
    /// Resume from a checkpoint.
    #[arg(global = true, long)]
    pub restore: Option<PathBuf>,
    /// Write every representative, one per line ("-" for standard output).
    #[arg(global = true, long)]
    pub dump_triangs: Option<PathBuf>,
    /// Print only the orbit count.
    #[arg(global = true, long)]
    pub count_only: bool,
    /// Also report regular count, Σ orbit sizes, δmax, smax and the J̄ histogram.
    #[arg(global = true, long)]
    pub stats: bool,
    /// Sort dumped representatives.
    #[arg(global = true, long)]
    pub sorted: bool,
    /// Shuffle the point order with this seed before searching.
    #[arg(global = true, long)]
    pub seed: Option<u64>,
    /// Write the search tree as a DOT digraph.
    #[arg(global = true, long)]
    pub tree_dot: Option<PathBuf>,
}

impl RunOptions {
    pub fn mode(&self) -> SearchMode {
        SearchMode { regular_only: self.regular, full_only: self.full, symmetric: !self.no_symmetry }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            workers: self.workers.max(1),
            budget: BudgetConfig { small: self.budget_small.max(1), large: self.budget_large.max(1) },
            cache: CacheConfig {
                flips: self.cache_flips,
                orbits: self.cache_orbits,
                regular: self.cache_regular,
                verify: self.verify_caches,
            },
            count_regular: self.stats && !self.count_only,
            orbit_sizes: self.stats && !self.count_only,
            stop_after: self.stop_after,
        }
    }
}

fn read_input(path: &Option<PathBuf>, stdin: &mut dyn Read) -> Result<String, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(std::fs::read_to_string(p)?),
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn main_with(args: &[String], stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 1;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match execute(&cli, stdin, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(
    cli: &Cli,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if let Some(Command::Gen { family, params }) = &cli.command {
        let params: Vec<&str> = params.iter().map(String::as_str).collect();
        let spec = FamilySpec::parse(family, &params)?;
        let (cfg, gens) = generate_family(&spec)?;
        write!(stdout, "# {spec}\n{}", render_document(&document_of(&cfg, &gens)))?;
        return Ok(());
    }
    let opts = &cli.opts;
    let text = read_input(&opts.input, stdin)?;
    let (cfg, gens) = parse_input(&text, opts.homogeneous)?;
    let (cfg, gens) = match opts.seed {
        Some(s) => reorder(&cfg, &gens, s)?,
        None => (cfg, gens),
    };
    let mode = opts.mode();
    let group = if mode.symmetric { PermGroup::enumerate(cfg.len(), &gens)? } else { PermGroup::trivial(cfg.len()) };
    let ctx = SearchContext::new(cfg.clone(), group.clone(), mode);
    if let Some(Command::Verify) = &cli.command {
        return verify(&ctx, opts, stdout);
    }
    log::info!("n={} d={} |G|={} mode={:?}", cfg.len(), cfg.dim(), group.order(), mode);

    let digest = input_digest(&cfg, if mode.symmetric { &gens } else { &[] });
    let start = match &opts.restore {
        Some(p) => {
            let cp = Checkpoint::read(p)?;
            cp.check(&digest, mode)?;
            Start::Resume(cp)
        }
        None => Start::Root,
    };

    let want_dump = opts.dump_triangs.is_some() && !opts.count_only;
    let want_tree = opts.tree_dot.is_some() && !opts.count_only;
    let collected: Mutex<Vec<(Triangulation, Option<Triangulation>, u32)>> = Mutex::new(Vec::new());
    let dump_stdout = want_dump && opts.dump_triangs.as_ref().is_some_and(|p| p.as_os_str() == "-");
    let streamed: Mutex<Option<std::io::BufWriter<std::fs::File>>> = Mutex::new(None);
    if want_dump && !opts.sorted && !dump_stdout && !want_tree {
        let f = std::fs::File::create(opts.dump_triangs.as_ref().expect("dump path"))?;
        *streamed.lock().expect("dump lock") = Some(std::io::BufWriter::new(f));
    }
    let sink = |v: &crate::search::Visit<'_>| {
        if !(want_dump || want_tree) {
            return;
        }
        let mut w = streamed.lock().expect("dump lock");
        if let Some(w) = w.as_mut() {
            let _ = writeln!(w, "{}", original_labels(&cfg, &v.node.rep));
            return;
        }
        drop(w);
        collected.lock().expect("collect lock").push((v.node.rep.clone(), v.parent.map(|p| p.rep.clone()), v.depth));
    };
    let report = run(&ctx, &opts.engine_config(), start, &sink)?;
    if let Some(w) = streamed.lock().expect("dump lock").as_mut() {
        w.flush()?;
    }
    let mut collected = collected.into_inner().expect("collect lock");

    if !report.completed() {
        let cp = Checkpoint::from_report(digest.clone(), mode, &report);
        match &opts.checkpoint {
            Some(p) => {
                cp.write(p)?;
                writeln!(stderr, "stopped after {} nodes; checkpoint written to {}", report.orbits(), p.display())?;
            }
            None => writeln!(
                stderr,
                "stopped after {} nodes with {} pending units; no --checkpoint given",
                report.orbits(),
                cp.units.len()
            )?,
        }
    }

    if want_tree {
        let mut oracle = DirectOracle::new(&ctx);
        let mut dot = String::from("digraph reverse_search {\n");
        for (t, parent, depth) in &collected {
            let parent = match parent {
                Some(p) => Some(p.clone()),
                None if *depth > 0 => predecessor_node(&ctx, &mut oracle, &ctx.node(t.clone())).map(|n| n.rep),
                None => None,
            };
            let child = original_labels(&cfg, t);
            match parent {
                Some(p) => {
                    let _ = writeln!(dot, "  \"{}\" -> \"{}\";", original_labels(&cfg, &p), child);
                }
                None => {
                    let _ = writeln!(dot, "  \"{child}\";");
                }
            }
        }
        dot.push_str("}\n");
        std::fs::write(opts.tree_dot.as_ref().expect("tree path"), dot)?;
    }
    if want_dump && streamed.lock().expect("dump lock").is_none() {
        let mut lines: Vec<String> =
            collected.drain(..).map(|(t, _, _)| original_labels(&cfg, &t).to_string()).collect();
        if opts.sorted {
            lines.sort();
        }
        let body: String = lines.iter().map(|l| format!("{l}\n")).collect();
        if dump_stdout {
            write!(stdout, "{body}")?;
        } else {
            std::fs::write(opts.dump_triangs.as_ref().expect("dump path"), body)?;
        }
    }
    print_summary(&report, opts, stdout, stderr)?;
    Ok(())
}

fn print_summary(
    report: &Report,
    opts: &RunOptions,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let c = &report.counts;
    writeln!(stdout, "orbits: {}", report.orbits())?;
    if opts.count_only {
        return Ok(());
    }
    if let (Some(r), false) = (c.regular, opts.regular) {
        writeln!(stdout, "regular: {r}")?;
    }
    if let Some(t) = c.total {
        writeln!(stdout, "total: {t}")?;
    }
    if opts.stats {
        writeln!(stdout, "max-flips: {}", c.max_flips)?;
        writeln!(stdout, "max-simplices: {}", c.max_simplices)?;
        let hist: Vec<String> = c.jbound.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        writeln!(stdout, "jbar: {}", hist.join(" "))?;
        writeln!(stdout, "jbar-mean: {:.4}", c.jbound.mean())?;
        let names = ["flips", "orbits", "regular"];
        for (name, k) in names.iter().zip(&report.cache) {
            writeln!(stderr, "cache {name}: {} hits, {} misses", k.hits, k.misses)?;
        }
    }
    let per: Vec<String> = report.per_worker.iter().map(|x| x.to_string()).collect();
    writeln!(stderr, "workers: {} ({})", report.per_worker.len(), per.join(" "))?;
    writeln!(stderr, "time: {:.3}s", report.wall_time.as_secs_f64())?;
    Ok(())
}

fn verify(ctx: &SearchContext, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    let reps: Mutex<BTreeSet<String>> = Mutex::new(BTreeSet::new());
    let config = EngineConfig { stop_after: None, ..opts.engine_config() };
    let report = run(ctx, &config, Start::Root, &|v| {
        reps.lock().expect("reps lock").insert(v.node.rep.to_string());
    })?;
    let reps = reps.into_inner().expect("reps lock");
    let bfs = enumerate_bfs(&ctx.cfg, &ctx.group, ctx.mode).map_err(EngineError::from)?;
    let oracle: BTreeSet<String> = bfs.reps.iter().map(|t| t.to_string()).collect();
    writeln!(stdout, "reverse-search: {}", report.orbits())?;
    writeln!(stdout, "bfs: {}", oracle.len())?;
    if report.orbits() as usize != reps.len() {
        return Err(CliError::Verify(format!(
            "{} visits but {} distinct representatives",
            report.orbits(),
            reps.len()
        )));
    }
    if reps != oracle {
        let only_rs = reps.difference(&oracle).count();
        let only_bfs = oracle.difference(&reps).count();
        return Err(CliError::Verify(format!("{only_rs} only in reverse search, {only_bfs} only in bfs")));
    }
    writeln!(stdout, "verify: ok")?;
    Ok(())
}
