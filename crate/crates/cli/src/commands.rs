use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use depcompat::analysis::PageRankConfig;
use depcompat::ingest::{self, IngestConfig, IngestError};
use depcompat::license::NormalizationReport;
use depcompat::report::{self, frequency_chart_entries};
use depcompat::{
    agpl_impact, agpl_incompatibilities, direct_incompatibilities, license_frequencies, pagerank,
    top_impact_violators, CompatibilityMatrix, DependencyGraph, DependencyKinds, Ecosystem,
    EcosystemStats, ImpactResult, OutputFormat, PackageKey, RulesError, ViolationRecord,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{elapsed_ms, RunManifest, StageRecord};
use crate::{DataArgs, FilterArgs, ImpactArgs, LicensesArgs, ViolationArgs, WORKERS_ENV};

const TEXT_LIMIT: usize = 20;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(anyhow::Error),
    Rules(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Input(_) => 3,
            Self::Rules(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) => f.write_str(msg),
            Self::Input(e) | Self::Rules(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Config(msg) => Self::Usage(msg),
            other => Self::Input(other.into()),
        }
    }
}

fn input_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn worker_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "{WORKERS_ENV} must be a positive integer, got {v:?}"
                ))
            })?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {threads} workers: {e}")))
}

/// Runs one job per ecosystem on the worker pool; results keep input order.
fn run_jobs<T: Send>(
    ecosystems: &[Ecosystem],
    job: impl Fn(Ecosystem) -> Result<T, Failure> + Sync,
) -> Result<Vec<T>, Failure> {
    let pool = worker_pool()?;
    pool.install(|| ecosystems.par_iter().map(|&e| job(e)).collect())
}

fn write_manifest(manifest: &RunManifest, path: &Path) {
    if let Err(e) = manifest.write(path) {
        eprintln!("warning: cannot write manifest {}: {e}", path.display());
    }
}

pub fn filter(args: &FilterArgs) -> Result<String, Failure> {
    let mut config = IngestConfig::new(&args.projects, &args.deps, &args.out);
    if !args.ecosystems.is_empty() {
        config.ecosystems = args.ecosystems.iter().copied().collect();
    }
    config.kept_kinds = DependencyKinds::new(&args.kinds);
    config.validate()?;

    let mut manifest = RunManifest::new("filter", args);
    for path in [&args.projects, &args.deps] {
        manifest
            .digest_input(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Input)?;
    }
    let started = Instant::now();
    let summary = ingest::run_filter(&config)?;
    manifest.stage(
        "filter",
        started,
        serde_json::to_value(&summary).unwrap_or_default(),
    );

    let mut out = String::new();
    for eco in &config.ecosystems {
        let _ = writeln!(
            out,
            "{eco}: {} packages, {} dependency rows",
            summary.packages.emitted.get(eco).copied().unwrap_or(0),
            summary.dependencies.emitted.get(eco).copied().unwrap_or(0),
        );
    }
    for (label, counts) in [
        ("projects", &summary.packages),
        ("dependencies", &summary.dependencies),
    ] {
        let _ = writeln!(
            out,
            "{label}: {} rows read, {} kept, {} dropped, {} malformed",
            counts.rows_in,
            counts.rows_emitted(),
            counts.dropped,
            counts.malformed
        );
    }
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| args.out.join("manifest-filter.json"));
    write_manifest(&manifest, &manifest_path);
    Ok(out)
}

fn select_ecosystems(data: &DataArgs) -> Result<Vec<Ecosystem>, Failure> {
    if !data.data.is_dir() {
        return Err(input_err(anyhow::anyhow!(
            "data directory {} not found",
            data.data.display()
        )));
    }
    if !data.ecosystems.is_empty() {
        let mut ecos = data.ecosystems.clone();
        ecos.sort();
        ecos.dedup();
        return Ok(ecos);
    }
    let found: Vec<Ecosystem> = Ecosystem::ALL
        .into_iter()
        .filter(|&e| {
            data.data.join(ingest::packages_file_name(e)).is_file()
                && data.data.join(ingest::dependencies_file_name(e)).is_file()
        })
        .collect();
    if found.is_empty() {
        return Err(input_err(anyhow::anyhow!(
            "no packages-<ecosystem>.csv / dependencies-<ecosystem>.csv pairs in {}",
            data.data.display()
        )));
    }
    Ok(found)
}

fn input_files(data: &DataArgs, ecosystems: &[Ecosystem]) -> Vec<PathBuf> {
    ecosystems
        .iter()
        .flat_map(|&e| {
            [
                data.data.join(ingest::packages_file_name(e)),
                data.data.join(ingest::dependencies_file_name(e)),
            ]
        })
        .collect()
}

fn start_manifest(
    command: &'static str,
    args: &impl Serialize,
    files: &[PathBuf],
) -> Result<RunManifest, Failure> {
    let mut manifest = RunManifest::new(command, args);
    for path in files {
        manifest
            .digest_input(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Input)?;
    }
    Ok(manifest)
}

fn manifest_path(data: &DataArgs, command: &str) -> PathBuf {
    data.manifest
        .clone()
        .unwrap_or_else(|| data.data.join(format!("manifest-{command}.json")))
}

struct Loaded {
    graph: DependencyGraph,
    stage: StageRecord,
}

fn load(data: &DataArgs, eco: Ecosystem) -> Result<Loaded, Failure> {
    let started = Instant::now();
    let graph = ingest::load_graph(&data.data, eco, &DependencyKinds::new(&data.kinds))?;
    let stage = StageRecord {
        name: format!("load:{}", eco.slug()),
        counts: json!({
            "packages": graph.node_count(),
            "dependencies": graph.edge_count(),
            "dangling_edges": graph.dangling_edges(),
        }),
        wall_ms: elapsed_ms(started),
    };
    Ok(Loaded { graph, stage })
}

pub fn licenses(args: &LicensesArgs) -> Result<String, Failure> {
    let data = &args.data;
    let ecosystems = select_ecosystems(data)?;
    let mut manifest = start_manifest("licenses", args, &input_files(data, &ecosystems))?;
    let top = usize::try_from(args.top).unwrap_or(usize::MAX);

    let tables = run_jobs(&ecosystems, |eco| {
        let loaded = load(data, eco)?;
        Ok((eco, license_frequencies(&loaded.graph), loaded.stage))
    })?;

    let format = OutputFormat::from(data.format);
    let mut out = String::new();
    match format {
        OutputFormat::Text => {
            for (eco, table, _) in &tables {
                let _ = writeln!(out, "== {eco} ({} packages)", table.total);
                out.push_str(
                    &report::render_frequency_chart_data(table, top, format).map_err(input_err)?,
                );
            }
        }
        OutputFormat::Csv => {
            let mut w = csv_writer();
            w.write_record(["ecosystem", "label", "count", "share"])
                .map_err(input_err)?;
            for (eco, table, _) in &tables {
                for e in frequency_chart_entries(table, top) {
                    w.write_record([
                        eco.name(),
                        &e.label,
                        &e.count.to_string(),
                        &e.share.to_string(),
                    ])
                    .map_err(input_err)?;
                }
            }
            out = csv_finish(w)?;
        }
        OutputFormat::Json => {
            let doc: Vec<_> = tables
                .iter()
                .map(|(eco, table, _)| {
                    json!({
                        "ecosystem": eco.name(),
                        "packages": table.total,
                        "licenses": frequency_chart_entries(table, top),
                    })
                })
                .collect();
            out = serde_json::to_string_pretty(&doc).map_err(input_err)? + "\n";
        }
    }
    for (_, _, stage) in tables {
        manifest.push_stage(stage);
    }
    write_manifest(&manifest, &manifest_path(data, "licenses"));
    Ok(out)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> Result<String, Failure> {
    let bytes = w.into_inner().map_err(|e| input_err(e.into_error()))?;
    String::from_utf8(bytes).map_err(input_err)
}

fn load_rules(path: Option<&Path>) -> Result<CompatibilityMatrix, Failure> {
    let Some(path) = path else {
        return Ok(CompatibilityMatrix::seed());
    };
    let file = fs::File::open(path)
        .with_context(|| format!("opening rules file {}", path.display()))
        .map_err(Failure::Input)?;
    CompatibilityMatrix::from_reader(io::BufReader::new(file)).map_err(|e| match e {
        RulesError::Io(_) => {
            Failure::Input(anyhow::Error::new(e).context(format!("reading {}", path.display())))
        }
        RulesError::Parse { .. } => {
            Failure::Rules(anyhow::Error::new(e).context(path.display().to_string()))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Direct,
    Agpl,
    Impact,
}

impl Mode {
    fn command(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Agpl => "agpl",
            Self::Impact => "impact",
        }
    }
}

#[derive(Debug, Serialize)]
struct TopViolator {
    package: PackageKey,
    name: String,
    affected: usize,
}

#[derive(Debug, Serialize)]
struct EcosystemReport {
    ecosystem: &'static str,
    summary: String,
    stats: EcosystemStats,
    normalization: NormalizationReport,
    violations_total: usize,
    violations: Vec<ViolationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_violators: Option<Vec<TopViolator>>,
    #[serde(skip)]
    stage: Option<StageRecord>,
}

fn plural(n: usize, one: &'static str, many: &'static str) -> &'static str {
    if n == 1 {
        one
    } else {
        many
    }
}

struct Analysis<'a> {
    data: &'a DataArgs,
    matrix: &'a CompatibilityMatrix,
    mode: Mode,
    limit: Option<usize>,
    threshold: usize,
    dot: Option<&'a Path>,
    multiple: bool,
}

impl Analysis<'_> {
    fn run(&self, eco: Ecosystem) -> Result<EcosystemReport, Failure> {
        let loaded = load(self.data, eco)?;
        let started = Instant::now();
        let graph = &loaded.graph;
        let direct = direct_incompatibilities(graph, self.matrix);
        let agpl = agpl_incompatibilities(graph, self.matrix);
        let impact = agpl_impact(graph, self.matrix);
        let stats = EcosystemStats::from_analysis(eco.name(), graph, &direct, &agpl, &impact);
        let normalization = self
            .matrix
            .normalization_report(graph.nodes().iter().map(|n| &n.license));

        let (summary, records) = match self.mode {
            Mode::Direct => (
                format!(
                    "{} {}, {}",
                    direct.len(),
                    plural(direct.len(), "incompatibility", "incompatibilities"),
                    direct.ratio().percent(1)
                ),
                direct.records,
            ),
            Mode::Agpl => (
                format!(
                    "AGPL incompatibilities: {} ({})",
                    agpl.len(),
                    agpl.ratio().percent(2)
                ),
                agpl.records,
            ),
            Mode::Impact => (
                format!(
                    "affected: {} ({})",
                    impact.affected.len(),
                    impact.affected_share().percent(1)
                ),
                agpl.records,
            ),
        };
        let total = records.len();
        let limit = self.limit.unwrap_or(match self.data.format {
            crate::Format::Text => TEXT_LIMIT,
            _ => usize::MAX,
        });
        let violations: Vec<ViolationRecord> = records.into_iter().take(limit).collect();

        let top_violators = (self.mode == Mode::Impact).then(|| {
            top_impact_violators(&impact, self.threshold)
                .into_iter()
                .map(|(package, affected)| TopViolator {
                    name: graph
                        .get(package.as_str())
                        .map(|n| n.name.clone())
                        .unwrap_or_default(),
                    package,
                    affected,
                })
                .collect()
        });
        if let Some(path) = self.dot {
            self.write_dot(path, eco, graph, &impact)?;
        }

        let mut stage = loaded.stage;
        stage.counts["violations"] = json!(total);
        stage.wall_ms += elapsed_ms(started);
        Ok(EcosystemReport {
            ecosystem: eco.name(),
            summary,
            stats,
            normalization,
            violations_total: total,
            violations,
            top_violators,
            stage: Some(stage),
        })
    }

    fn write_dot(
        &self,
        path: &Path,
        eco: Ecosystem,
        graph: &DependencyGraph,
        impact: &ImpactResult,
    ) -> Result<(), Failure> {
        let scores = pagerank(graph, &PageRankConfig::<f64>::default())
            .map_err(input_err)?
            .by_key(graph);
        let dot = report::export_impact_dot(graph, impact, self.threshold, Some(&scores));
        let target = if self.multiple {
            per_ecosystem_path(path, eco)
        } else {
            path.to_path_buf()
        };
        fs::write(&target, dot)
            .with_context(|| format!("writing {}", target.display()))
            .map_err(Failure::Input)
    }
}

fn per_ecosystem_path(path: &Path, eco: Ecosystem) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{}.{}", eco.slug(), ext.to_string_lossy()),
        None => format!("{stem}-{}", eco.slug()),
    };
    path.with_file_name(name)
}

fn render_reports(reports: &[EcosystemReport], format: OutputFormat) -> Result<String, Failure> {
    let stats: Vec<EcosystemStats> = reports.iter().map(|r| r.stats.clone()).collect();
    match format {
        OutputFormat::Text => {
            let mut out = String::new();
            for r in reports {
                let _ = writeln!(out, "== {}", r.ecosystem);
                if r.violations_total > 0 {
                    let _ = writeln!(
                        out,
                        "violations ({} of {} shown):",
                        r.violations.len(),
                        r.violations_total
                    );
                    for v in &r.violations {
                        let _ = writeln!(
                            out,
                            "  {} [{}] -> {} [{}]",
                            v.dependent, v.dependent_license, v.dependency, v.dependency_license
                        );
                    }
                }
                if let Some(top) = &r.top_violators {
                    let _ = writeln!(out, "top violators: {}", top.len());
                    for t in top {
                        let _ =
                            writeln!(out, "  {} ({}) affects {}", t.package, t.name, t.affected);
                    }
                }
                let _ = writeln!(out, "{}", r.summary);
                let _ = writeln!(
                    out,
                    "packages without license: {}; unrecognized license ids: {}",
                    r.normalization.no_license,
                    r.normalization.unrecognized_total()
                );
            }
            out.push('\n');
            out.push_str(&report::render_stats_table(&stats, format).map_err(input_err)?);
            Ok(out)
        }
        OutputFormat::Csv => report::render_stats_table(&stats, format).map_err(input_err),
        OutputFormat::Json => Ok(serde_json::to_string_pretty(reports).map_err(input_err)? + "\n"),
    }
}

fn analyze(
    args: &impl Serialize,
    violation_args: &ViolationArgs,
    mode: Mode,
    threshold: usize,
    dot: Option<&Path>,
) -> Result<String, Failure> {
    let data = &violation_args.data;
    let ecosystems = select_ecosystems(data)?;
    let mut files = input_files(data, &ecosystems);
    files.extend(violation_args.rules.iter().cloned());
    let matrix = load_rules(violation_args.rules.as_deref())?;
    let mut manifest = start_manifest(mode.command(), args, &files)?;
    manifest.stage("rules", Instant::now(), json!({ "facts": matrix.len() }));

    let analysis = Analysis {
        data,
        matrix: &matrix,
        mode,
        limit: violation_args.limit,
        threshold,
        dot,
        multiple: ecosystems.len() > 1,
    };
    let mut reports = run_jobs(&ecosystems, |eco| analysis.run(eco))?;
    let out = render_reports(&reports, data.format.into())?;
    for r in &mut reports {
        if let Some(stage) = r.stage.take() {
            manifest.push_stage(stage);
        }
    }
    write_manifest(&manifest, &manifest_path(data, mode.command()));
    Ok(out)
}

pub fn violations(args: &ViolationArgs, mode: Mode) -> Result<String, Failure> {
    analyze(args, args, mode, 0, None)
}

pub fn impact(args: &ImpactArgs) -> Result<String, Failure> {
    analyze(
        args,
        &args.violations,
        Mode::Impact,
        args.threshold,
        args.dot.as_deref(),
    )
}
