//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use depcompat::graph::reduce_multigraph;
use depcompat::report::render_stats_table;
use depcompat::{
    agpl_impact, agpl_incompatibilities, direct_incompatibilities, license_frequencies, pagerank,
    CompatibilityMatrix, DependencyEdge, DependencyGraph, Ecosystem, EcosystemStats, Fraction,
    LicenseExpr, LicenseId, OutputFormat, PackageNode, PageRankConfig, StatsCounts, VersionEdge,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const POOL: [&str; 6] = [
    "MIT",
    "Apache-2.0",
    "GPL-2.0",
    "GPL-3.0",
    "AGPL-3.0",
    "LGPL-2.1",
];

fn id(s: &str) -> LicenseId {
    LicenseId::new(s).unwrap()
}

fn golden_graph() -> DependencyGraph {
    let nodes = ["a", "b", "c", "d", "e", "f", "g", "i"].map(|k| {
        let license = if k == "i" { "AGPL-3.0" } else { "MIT" };
        PackageNode::new(k, k, Ecosystem::Npm, LicenseExpr::parse(license))
    });
    let edges = [
        ("a", "b"),
        ("b", "e"),
        ("c", "e"),
        ("d", "c"),
        ("e", "i"),
        ("e", "f"),
        ("f", "g"),
        ("d", "g"),
    ]
    .map(|(u, v)| DependencyEdge::new(u, v));
    DependencyGraph::build(nodes, edges).unwrap()
}

fn golden_network() -> Check {
    let started = Instant::now();
    let graph = golden_graph();
    let matrix = CompatibilityMatrix::seed();

    let freq = license_frequencies(&graph);
    ensure(freq.share("MIT").percent(1) == "87.5%", || {
        "MIT share".into()
    })?;
    ensure(freq.share("AGPL-3.0").percent(1) == "12.5%", || {
        "AGPL-3.0 share".into()
    })?;
    let direct = direct_incompatibilities(&graph, &matrix);
    ensure(
        direct.len() == 1 && direct.ratio() == Fraction::new(1, 8),
        || format!("direct = {}/{}", direct.len(), direct.total_links),
    )?;
    let agpl = agpl_incompatibilities(&graph, &matrix);
    ensure(
        agpl.len() == 1 && agpl.ratio().percent(1) == "12.5%",
        || "agpl".into(),
    )?;
    let impact = agpl_impact(&graph, &matrix);
    let expected: BTreeSet<&str> = ["a", "b", "c", "d"].into();
    let got: BTreeSet<&str> = impact.affected.iter().map(|k| k.as_str()).collect();
    ensure(got == expected, || format!("affected = {got:?}"))?;
    ensure(impact.affected_share().percent(1) == "50.0%", || {
        "affected share".into()
    })?;

    let dir = TempDir::new().unwrap();
    let data = golden_data(dir.path());
    let d = data.to_str().unwrap();
    let checks = [
        (vec!["licenses", "--data", d], "87.5%"),
        (vec!["direct", "--data", d], "1 incompatibility, 12.5%"),
        (
            vec!["agpl", "--data", d],
            "AGPL incompatibilities: 1 (12.50%)",
        ),
        (vec!["impact", "--data", d], "affected: 4 (50.0%)"),
    ];
    for (args, needle) in checks {
        let out = run(&args);
        ensure(
            out.status.success() && stdout(&out).contains(needle),
            || format!("`{}` lacks {needle:?}: {}", args[0], stdout(&out)),
        )?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "library and binary agree, {} ms",
        elapsed.as_millis()
    ))
}

fn table_arithmetic() -> Check {
    let row = |eco: &str, packages, dependencies, incompat, agpl, affected| {
        EcosystemStats::new(
            eco,
            StatsCounts {
                packages,
                dependencies,
                disconnected: 0,
                connected: packages,
                incompatibilities: incompat,
                agpl_incompatibilities: agpl,
                affected,
            },
        )
    };
    let rows = [
        row("Cargo", 35_000, 19_968, 453, 0, 0),
        row("Maven", 184_871, 426_804, 39_002, 148, 12_236),
        row("NPM", 1_275_011, 4_000_000, 0, 0, 30_377),
        row("PyPI", 100_000, 152_779, 31_816, 0, 0),
    ];
    let table = render_stats_table(&rows, OutputFormat::Text).map_err(|e| e.to_string())?;
    let cells: BTreeMap<&str, Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split_whitespace().collect();
            (cells[0], cells)
        })
        .collect();
    let expect = [
        ("Cargo", 6, "2.3%"),
        ("Maven", 6, "9.1%"),
        ("PyPI", 6, "20.8%"),
        ("Maven", 8, "0.03%"),
        ("Maven", 10, "6.62%"),
        ("NPM", 10, "2.38%"),
    ];
    for (eco, col, want) in expect {
        let got = cells.get(eco).and_then(|c| c.get(col)).copied();
        ensure(got == Some(want), || {
            format!("{eco} column {col}: {got:?} != {want}")
        })?;
    }
    Ok("six printed shares match".into())
}

struct Instance {
    licenses: Vec<String>,
    version_edges: Vec<(usize, usize, &'static str)>,
    facts: Vec<(String, String)>,
}

fn random_license(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0 => "None".into(),
        1 | 2 => {
            let mut picks: Vec<&str> = POOL.choose_multiple(rng, 2).copied().collect();
            picks.sort();
            picks.join(",")
        }
        _ => POOL.choose(rng).unwrap().to_string(),
    }
}

fn random_facts(rng: &mut ChaCha8Rng, count: usize) -> Vec<(String, String)> {
    let mut facts = BTreeSet::new();
    while facts.len() < count {
        facts.insert((
            POOL.choose(rng).unwrap().to_string(),
            POOL.choose(rng).unwrap().to_string(),
        ));
    }
    facts.into_iter().collect()
}

fn matrix_of(facts: &[(String, String)]) -> CompatibilityMatrix {
    let mut m = CompatibilityMatrix::new();
    for (d, p) in facts {
        m.insert(id(d), id(p));
    }
    m
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    const KINDS: [&str; 5] = ["runtime", "compile", "Development", "test", ""];
    let n = rng.gen_range(1..=50);
    let licenses = (0..n).map(|_| random_license(rng)).collect();
    let m = rng.gen_range(0..=200);
    let version_edges = (0..m)
        .map(|_| {
            (
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                *KINDS.choose(rng).unwrap(),
            )
        })
        .collect();
    Instance {
        licenses,
        version_edges,
        facts: random_facts(rng, 20),
    }
}

/// Incompatible iff both sides are licensed and every pairing is a fact.
fn oracle_incompatible(facts: &[(String, String)], dependency: &str, dependent: &str) -> bool {
    let alts = |s: &str| -> Vec<String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != "None")
            .map(String::from)
            .collect()
    };
    let (ds, ps) = (alts(dependency), alts(dependent));
    if ds.is_empty() || ps.is_empty() {
        return false;
    }
    ds.iter().all(|d| {
        ps.iter()
            .all(|p| facts.iter().any(|(fd, fp)| fd == d && fp == p))
    })
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    const GRAPHS: usize = 250;
    for round in 0..GRAPHS {
        let inst = random_instance(&mut rng);
        let n = inst.licenses.len();
        let nodes = (0..n).map(|i| {
            PackageNode::new(
                format!("p{i}"),
                format!("p{i}"),
                Ecosystem::PyPI,
                LicenseExpr::parse(&inst.licenses[i]),
            )
        });
        let kept = depcompat::DependencyKinds::default();
        let edges = depcompat::graph::filter_edges_by_kind(
            inst.version_edges
                .iter()
                .map(|&(u, v, k)| VersionEdge::new(format!("p{u}"), format!("p{v}"), k)),
            &kept,
        );
        let graph = DependencyGraph::build(nodes, reduce_multigraph(edges)).unwrap();
        let matrix = matrix_of(&inst.facts);

        let mut links: Vec<(usize, usize)> = Vec::new();
        for &(u, v, k) in &inst.version_edges {
            if matches!(k, "runtime" | "compile" | "") && !links.contains(&(u, v)) {
                links.push((u, v));
            }
        }
        let expected: BTreeSet<(usize, usize)> = links
            .iter()
            .copied()
            .filter(|&(u, v)| {
                oracle_incompatible(&inst.facts, &inst.licenses[v], &inst.licenses[u])
            })
            .collect();
        let direct = direct_incompatibilities(&graph, &matrix);
        let got: BTreeSet<(usize, usize)> = direct
            .records
            .iter()
            .map(|r| {
                (
                    r.dependent.as_str()[1..].parse().unwrap(),
                    r.dependency.as_str()[1..].parse().unwrap(),
                )
            })
            .collect();
        ensure(got == expected && direct.total_links == links.len(), || {
            format!("round {round}: direct {got:?} != {expected:?}")
        })?;

        // Boolean transitive closure: reach[u][v] iff a path of length >= 1.
        let mut reach = vec![vec![false; n]; n];
        for &(u, v) in &links {
            reach[u][v] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        let violators: BTreeSet<usize> = expected
            .iter()
            .filter(|&&(_, v)| {
                inst.licenses[v]
                    .split(',')
                    .any(|t| t.trim().starts_with("AGPL-"))
            })
            .map(|&(u, _)| u)
            .collect();
        let expected_affected: BTreeSet<usize> = (0..n)
            .filter(|&u| violators.iter().any(|&v| u != v && reach[u][v]))
            .collect();
        let impact = agpl_impact(&graph, &matrix);
        let got_affected: BTreeSet<usize> = impact
            .affected
            .iter()
            .map(|k| k.as_str()[1..].parse().unwrap())
            .collect();
        ensure(got_affected == expected_affected, || {
            format!("round {round}: affected {got_affected:?} != {expected_affected:?}")
        })?;
        for &v in &violators {
            let count = (0..n).filter(|&u| u != v && reach[u][v]).count();
            let got = impact
                .per_violator_affected
                .get(format!("p{v}").as_str())
                .copied();
            ensure(got == Some(count), || {
                format!("round {round}: p{v} affects {got:?}, want {count}")
            })?;
        }
    }
    Ok(format!("{GRAPHS} random networks, zero mismatches"))
}

fn disjunction_semantics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0004);
    const CASES: usize = 1000;
    let expr = |rng: &mut ChaCha8Rng| -> Vec<&'static str> {
        let k = rng.gen_range(0..=3);
        POOL.choose_multiple(rng, k).copied().collect()
    };
    for case in 0..CASES {
        let count = rng.gen_range(0..=30);
        let facts = random_facts(&mut rng, count);
        let matrix = matrix_of(&facts);
        let (d, p) = (expr(&mut rng), expr(&mut rng));
        let (dl, pl) = (d.join(","), p.join(","));
        let got = matrix.is_expr_incompatible(&LicenseExpr::parse(&dl), &LicenseExpr::parse(&pl));
        let want = oracle_incompatible(&facts, &dl, &pl);
        ensure(got == want, || {
            format!("case {case}: {dl:?} vs {pl:?}: {got} != {want}")
        })?;
        // An empty field means "no license", not a disjunction to extend.
        if !got && !(d.is_empty() && p.is_empty()) {
            let extra = *POOL.choose(&mut rng).unwrap();
            let (d2, p2) = if p.is_empty() || (!d.is_empty() && rng.gen()) {
                (format!("{dl},{extra}"), pl.clone())
            } else {
                (dl.clone(), format!("{pl},{extra}"))
            };
            let after =
                matrix.is_expr_incompatible(&LicenseExpr::parse(&d2), &LicenseExpr::parse(&p2));
            ensure(!after, || {
                format!("case {case}: adding {extra} flipped {dl:?}/{pl:?} to incompatible")
            })?;
        }
    }
    Ok(format!("{CASES} instances, zero violations"))
}

fn multigraph_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0005);
    const STREAMS: usize = 1000;
    const KINDS: [&str; 4] = ["runtime", "compile", "Development", "optional"];
    for case in 0..STREAMS {
        let len = rng.gen_range(0..120);
        let ids = rng.gen_range(1..12);
        let stream: Vec<VersionEdge> = (0..len)
            .map(|_| {
                VersionEdge::new(
                    format!("n{}", rng.gen_range(0..ids)),
                    format!("n{}", rng.gen_range(0..ids)),
                    *KINDS.choose(&mut rng).unwrap(),
                )
            })
            .collect();
        let once = reduce_multigraph(stream.clone());
        let again = reduce_multigraph(
            once.iter()
                .map(|e| VersionEdge::new(e.dependent.clone(), e.dependency.clone(), "runtime")),
        );
        ensure(once == again, || format!("case {case}: not idempotent"))?;
        ensure(once.len() <= stream.len(), || format!("case {case}: grew"))?;
        let input_pairs: BTreeSet<(&str, &str)> = stream
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str()))
            .collect();
        let output_pairs: Vec<(&str, &str)> = once
            .iter()
            .map(|e| (e.dependent.as_str(), e.dependency.as_str()))
            .collect();
        let unique: HashSet<_> = output_pairs.iter().collect();
        ensure(unique.len() == output_pairs.len(), || {
            format!("case {case}: duplicate output link")
        })?;
        ensure(
            output_pairs.iter().copied().collect::<BTreeSet<_>>() == input_pairs,
            || format!("case {case}: link set changed"),
        )?;
    }
    let across_kinds = reduce_multigraph([
        VersionEdge::new("x", "y", "runtime"),
        VersionEdge::new("x", "y", "compile"),
        VersionEdge::new("x", "y", "Development"),
    ]);
    ensure(across_kinds == [DependencyEdge::new("x", "y")], || {
        "kinds not merged".into()
    })?;
    Ok(format!("{STREAMS} streams; links merged across kinds"))
}

fn pagerank_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0006);
    let config = PageRankConfig::default();
    let graph_of = |n: usize, edges: &[(usize, usize)]| {
        DependencyGraph::build(
            (0..n).map(|i| {
                PackageNode::new(
                    format!("v{i}"),
                    "",
                    Ecosystem::Maven,
                    LicenseExpr::NoLicense,
                )
            }),
            edges
                .iter()
                .map(|&(u, v)| DependencyEdge::new(format!("v{u}"), format!("v{v}"))),
        )
        .unwrap()
    };
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.gen_range(1..=60);
        let m = rng.gen_range(0..=4 * n);
        let edges: Vec<(usize, usize)> = (0..m)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let pr = pagerank(&graph_of(n, &edges), &config).map_err(|e| e.to_string())?;
        let drift = (pr.scores.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(drift);
        ensure(drift <= 1e-9, || {
            format!("case {case}: sum off by {drift:e}")
        })?;
    }
    // a -> b with b dangling: a = (1-d)/2 + d*b/2, a + b = 1 gives a = 20/57.
    let two = pagerank(&graph_of(2, &[(0, 1)]), &config).map_err(|e| e.to_string())?;
    ensure(
        (two.scores[0] - 20.0 / 57.0).abs() <= 1e-9 && (two.scores[1] - 37.0 / 57.0).abs() <= 1e-9,
        || format!("2-node scores {:?}", two.scores),
    )?;
    let cycle = pagerank(&graph_of(2, &[(0, 1), (1, 0)]), &config).map_err(|e| e.to_string())?;
    ensure(cycle.scores.iter().all(|s| (s - 0.5).abs() <= 1e-9), || {
        format!("2-cycle scores {:?}", cycle.scores)
    })?;
    Ok(format!(
        "100 random graphs (worst drift {worst:.1e}); 2-node and 2-cycle exact"
    ))
}

fn peak_child_rss_kb() -> i64 {
    let mut usage = std::mem::MaybeUninit::<libc::rusage>::zeroed();
    // SAFETY: getrusage fills the struct it is handed.
    let usage = unsafe {
        libc::getrusage(libc::RUSAGE_CHILDREN, usage.as_mut_ptr());
        usage.assume_init()
    };
    usage.ru_maxrss
}

fn ingest_scale() -> Check {
    const ROWS: usize = 1_000_000;
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let projects = dir.path().join("projects.csv");
    let deps = dir.path().join("dependencies.csv");
    {
        let mut w = BufWriter::new(File::create(&projects).unwrap());
        writeln!(w, "Platform,ID,Name,Licenses").unwrap();
        for i in 0..50_000 {
            let platform = ["NPM", "Maven", "PyPI"][i % 3];
            writeln!(w, "{platform},{i},pkg-{i},{}", POOL[i % POOL.len()]).unwrap();
        }
        let mut w = BufWriter::new(File::create(&deps).unwrap());
        writeln!(w, "ID,Platform,Project Name,Project ID,Version Number,Dependency Name,Dependency Kind,Dependency Project ID").unwrap();
        for i in 0..ROWS {
            let platform = ["NPM", "Maven", "PyPI", "Go"][i % 4];
            let kind = ["runtime", "Development", "compile", "test"][rng.gen_range(0..4)];
            writeln!(
                w,
                "{i},{platform},pkg,{},1.0.{},dep,{kind},{}",
                rng.gen_range(0..50_000),
                i % 7,
                rng.gen_range(0..50_000)
            )
            .unwrap();
        }
    }
    let out_dir = dir.path().join("out");
    let started = Instant::now();
    let out = run(&[
        "filter",
        "--projects",
        projects.to_str().unwrap(),
        "--deps",
        deps.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let elapsed = started.elapsed();
    ensure(out.status.success(), || {
        format!("filter failed: {}", stderr(&out))
    })?;
    let text = stdout(&out);
    ensure(
        text.contains(&format!("dependencies: {ROWS} rows read")),
        || text.clone(),
    )?;
    let rss_mb = peak_child_rss_kb() / 1024;
    ensure(elapsed <= Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    ensure(rss_mb <= 512, || format!("peak RSS {rss_mb} MB"))?;
    Ok(format!(
        "{ROWS} rows in {:.1} s, peak child RSS {rss_mb} MB",
        elapsed.as_secs_f64()
    ))
}

fn determinism() -> Check {
    let dir = TempDir::new().unwrap();
    let projects = format!(
        "{GOLDEN_PROJECTS}{}",
        PERMISSIVE_PROJECTS.split_once('\n').unwrap().1
    );
    let deps = format!(
        "{GOLDEN_DEPENDENCIES}{}",
        PERMISSIVE_DEPENDENCIES.split_once('\n').unwrap().1
    );
    let (p, d) = write_dumps(dir.path(), &projects, &deps);
    let mut filtered = Vec::new();
    for run_no in 0..2 {
        let out_dir = dir.path().join(format!("out{run_no}"));
        let out = run(&[
            "filter",
            "--projects",
            p.to_str().unwrap(),
            "--deps",
            d.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        ensure(out.status.success(), || stderr(&out))?;
        let files: Vec<Vec<u8>> = Ecosystem::ALL
            .iter()
            .flat_map(|&e| {
                [
                    depcompat::ingest::packages_file_name(e),
                    depcompat::ingest::dependencies_file_name(e),
                ]
            })
            .map(|f| fs::read(out_dir.join(f)).unwrap())
            .collect();
        filtered.push((out.stdout, files));
    }
    ensure(filtered[0] == filtered[1], || {
        "filter output differs".into()
    })?;

    let data = dir.path().join("out0");
    let data = data.to_str().unwrap();
    let mut checked = 1;
    for cmd in ["licenses", "direct", "agpl", "impact"] {
        for format in ["text", "csv", "json"] {
            let args = [cmd, "--data", data, "--format", format, "--threshold", "0"];
            let args = if cmd == "impact" {
                &args[..]
            } else {
                &args[..5]
            };
            let dots: Vec<String> = (0..2)
                .map(|i| {
                    dir.path()
                        .join(format!("{cmd}{format}{i}.dot"))
                        .display()
                        .to_string()
                })
                .collect();
            let mut outputs = Vec::new();
            for dot in &dots {
                let mut full = args.to_vec();
                if cmd == "impact" {
                    full.extend(["--dot", dot]);
                }
                let out = run(&full);
                ensure(out.status.success(), || stderr(&out))?;
                outputs.push(out.stdout);
            }
            ensure(outputs[0] == outputs[1], || {
                format!("{cmd} --format {format} differs")
            })?;
            checked += 1;
        }
    }
    for slug in ["cargo", "npm"] {
        let read =
            |i: usize| fs::read(dir.path().join(format!("impacttext{i}-{slug}.dot"))).unwrap();
        ensure(read(0) == read(1), || format!("{slug} DOT differs"))?;
    }
    Ok(format!(
        "{checked} invocations byte-identical across two runs"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden network", golden_network),
        ("table ratio arithmetic", table_arithmetic),
        ("oracle equivalence on random networks", oracle_equivalence),
        ("disjunction semantics", disjunction_semantics),
        ("multigraph reduction", multigraph_reduction),
        ("pagerank", pagerank_checks),
        ("ingest scale", ingest_scale),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
