//! The `secenum` binary end to end.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use secenum::cli::{parse_input, parse_triangulation};
use secenum::symmetry::{canonical_bruteforce, PermGroup};
use secenum::triangulation::is_valid;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn secenum(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_secenum"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn gen(family: &[&str]) -> String {
    let mut args = vec!["gen"];
    args.extend(family);
    let out = secenum(&args, "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    out.stdout
}

fn value(out: &str, key: &str) -> Option<u64> {
    out.lines().find_map(|l| l.strip_prefix(&format!("{key}: ")).map(|v| v.trim().parse().unwrap()))
}

#[test]
fn moae_summary() {
    let input = gen(&["moae"]);
    let out = secenum(&["--stats"], &input);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(value(&out.stdout, "orbits"), Some(5));
    assert_eq!(value(&out.stdout, "total"), Some(18));
    assert_eq!(value(&out.stdout, "regular"), Some(4));
    assert!(out.stderr.contains("time:"));
    let plain = secenum(&["--no-symmetry"], &input);
    assert_eq!(value(&plain.stdout, "orbits"), Some(18));
    assert_eq!(value(&plain.stdout, "regular"), None);
    let plain = secenum(&["--no-symmetry", "--stats"], &input);
    assert_eq!(value(&plain.stdout, "regular"), Some(16));
    let regular = secenum(&["--no-symmetry", "--regular", "--stats"], &input);
    assert_eq!(value(&regular.stdout, "orbits"), Some(16));
    assert_eq!(value(&regular.stdout, "regular"), None);
    let counted = secenum(&["--count-only", "--stats"], &input);
    assert_eq!(counted.stdout, "orbits: 5\n");
}

#[test]
fn dilated_simplex_counts() {
    let input = gen(&["dilated_simplex", "2", "3"]);
    assert_eq!(value(&secenum(&[], &input).stdout, "orbits"), Some(59));
    assert_eq!(value(&secenum(&["--regular", "--full"], &input).stdout, "orbits"), Some(15));
}

#[test]
fn input_from_file_and_comments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moae.txt");
    std::fs::write(
        &path,
        "# three outer, three inner\n[[0,0],[4,0],[0,4],\n [1,1],[2,1],[1,2]]\n[[1,2,0,4,5,3]] # rotation\n",
    )
    .unwrap();
    let out = secenum(&["-i", path.to_str().unwrap()], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    // Rotation only: 18 triangulations fall into more orbits than under the full group.
    let orbits = value(&out.stdout, "orbits").unwrap();
    assert!(orbits > 5 && orbits <= 18, "{orbits}");
}

#[test]
fn input_errors_exit_with_one() {
    for bad in [
        "[[0,0],[1,x]]",
        "[[0,0],[4,0],[0,4],[1,1],[2,1],[1,2]] [[1,2,0,5,3,4]]",
        "[[0],[1]] [[0,2]]",
        "[[0,0],[1,1],[2,2]]",
    ] {
        let out = secenum(&[], bad);
        assert_eq!(out.code, 1, "{bad}: {}", out.stdout);
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(secenum(&["gen", "nonsense"], "").code, 1);
}

#[test]
fn verify_subcommand() {
    let input = gen(&["simplex_product", "2", "3"]);
    let out = secenum(&["verify"], &input);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("reverse-search: 35"));
    assert!(out.stdout.contains("bfs: 35"));
    assert!(out.stdout.contains("verify: ok"));
    let out = secenum(&["verify", "--regular", "--no-symmetry"], &gen(&["moae"]));
    assert!(out.stdout.contains("verify: ok"), "{}", out.stdout);
}

/// Canonical forms, in the input's labels, of every dumped triangulation.
fn dumped_orbits(input: &str, dump: &Path) -> BTreeSet<String> {
    let (cfg, gens) = parse_input(input, false).unwrap();
    let group = PermGroup::enumerate(cfg.len(), &gens).unwrap();
    std::fs::read_to_string(dump)
        .unwrap()
        .lines()
        .map(|l| {
            let t = parse_triangulation(l).unwrap();
            assert!(is_valid(&cfg, &t), "{l}");
            canonical_bruteforce(&cfg, &t, &group).to_string()
        })
        .collect()
}

#[test]
fn seeds_change_the_tree_not_the_orbits() {
    for family in [&["simplex_product", "2", "3"][..], &["dilated_simplex", "2", "3"], &["cube", "3"]] {
        let input = gen(family);
        let dir = tempfile::tempdir().unwrap();
        let mut sets = Vec::new();
        for seed in [None, Some("1"), Some("7"), Some("2024")] {
            let dump = dir.path().join(format!("dump-{}", seed.unwrap_or("none")));
            let mut args = vec!["--sorted", "--dump-triangs", dump.to_str().unwrap()];
            if let Some(s) = seed {
                args.extend(["--seed", s]);
            }
            let out = secenum(&args, &input);
            assert_eq!(out.code, 0, "{}", out.stderr);
            let orbits = value(&out.stdout, "orbits").unwrap();
            let set = dumped_orbits(&input, &dump);
            assert_eq!(set.len() as u64, orbits, "{family:?} seed {seed:?}");
            sets.push(set);
        }
        assert!(sets.windows(2).all(|w| w[0] == w[1]), "{family:?}");
    }
}

#[test]
fn dump_to_stdout_is_sorted_and_parses() {
    let input = gen(&["moae"]);
    let out = secenum(&["--no-symmetry", "--sorted", "--dump-triangs", "-"], &input);
    let lines: Vec<&str> = out.stdout.lines().filter(|l| l.starts_with('{')).collect();
    assert_eq!(lines.len(), 18);
    assert!(lines.windows(2).all(|w| w[0] < w[1]));
    for l in lines {
        assert_eq!(parse_triangulation(l).unwrap().to_string(), l);
    }
}

#[test]
fn tree_dot_has_one_edge_per_non_root_node() {
    let input = gen(&["simplex_product", "2", "3"]);
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("tree.dot");
    let out = secenum(&["--tree-dot", dot.to_str().unwrap(), "--budget-small", "3", "--budget-large", "3"], &input);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    let edges = text.lines().filter(|l| l.contains("->")).count();
    assert_eq!(edges as u64 + 1, value(&out.stdout, "orbits").unwrap());
    let children: BTreeSet<&str> = text.lines().filter_map(|l| l.split("-> ").nth(1)).collect();
    assert_eq!(children.len(), edges);
}

#[test]
fn checkpoint_and_restore() {
    let input = gen(&["simplex_product", "2", "4"]);
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("run.cp");
    let cp_str = cp.to_str().unwrap();
    let common = ["--stats", "--budget-small", "20", "--budget-large", "20", "--workers", "2"];
    let mut args = common.to_vec();
    args.extend(["--stop-after", "100", "--checkpoint", cp_str]);
    let first = secenum(&args, &input);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert!(first.stderr.contains("checkpoint written"));
    assert!(value(&first.stdout, "orbits").unwrap() < 530);
    assert!(std::fs::read_to_string(&cp).unwrap().starts_with("secenum-checkpoint v1\n"));
    // A second interruption, then completion.
    let mut args = common.to_vec();
    args.extend(["--restore", cp_str, "--stop-after", "300", "--checkpoint", cp_str]);
    let second = secenum(&args, &input);
    assert_eq!(second.code, 0, "{}", second.stderr);
    let mut args = common.to_vec();
    args.extend(["--restore", cp_str]);
    let last = secenum(&args, &input);
    assert_eq!(last.code, 0, "{}", last.stderr);
    let straight = secenum(&common, &input);
    assert_eq!(value(&last.stdout, "orbits"), Some(530));
    assert_eq!(last.stdout, straight.stdout);

    let wrong_mode = secenum(&["--regular", "--restore", cp_str], &input);
    assert_eq!(wrong_mode.code, 1);
    assert!(wrong_mode.stderr.contains("mode"), "{}", wrong_mode.stderr);
    let wrong_input = secenum(&["--restore", cp_str], &gen(&["simplex_product", "2", "3"]));
    assert_eq!(wrong_input.code, 1);
    assert!(wrong_input.stderr.contains("digest"), "{}", wrong_input.stderr);
}
