//! Streaming filters from registry dump CSVs to per-ecosystem intermediates.
//!
//! The projects dump needs `Platform`, `ID`, `Name` and `Licenses` columns;
//! the dependencies dump needs `Platform`, `Project ID`, `Dependency Project ID`
//! and `Dependency Kind`. Header matching ignores case and treats `_`, `-`
//! and spaces alike, so the intermediate column names are accepted too.
//!
//! Both filters read one record at a time and write rows as they go.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    filter_edges_by_kind, normalize_kind, reduce_multigraph, DependencyGraph, DependencyKinds,
    Ecosystem, GraphError, PackageNode, VersionEdge,
};
use crate::license::LicenseExpr;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: missing required column {column:?}")]
    MissingColumn { file: String, column: &'static str },
    #[error("{file}: line {line}: {message}")]
    Malformed {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub ecosystems: BTreeSet<Ecosystem>,
    pub kept_kinds: DependencyKinds,
    pub projects: PathBuf,
    pub dependencies: PathBuf,
    pub out_dir: PathBuf,
}

impl IngestConfig {
    pub fn new(
        projects: impl Into<PathBuf>,
        dependencies: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            ecosystems: Ecosystem::ALL.into_iter().collect(),
            kept_kinds: DependencyKinds::default(),
            projects: projects.into(),
            dependencies: dependencies.into(),
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.ecosystems.is_empty() {
            return Err(IngestError::Config("no ecosystem selected".into()));
        }
        if self.kept_kinds.is_empty() {
            return Err(IngestError::Config("no dependency kind selected".into()));
        }
        for path in [&self.projects, &self.dependencies] {
            if !path.is_file() {
                return Err(IngestError::Io {
                    path: path.display().to_string(),
                    source: io::Error::new(io::ErrorKind::NotFound, "input file not found"),
                });
            }
        }
        Ok(())
    }
}

/// Row accounting for one filter pass. `rows_in` always equals
/// `emitted + dropped + malformed`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterCounts {
    pub rows_in: u64,
    pub emitted: BTreeMap<Ecosystem, u64>,
    pub dropped: u64,
    pub malformed: u64,
}

impl FilterCounts {
    fn new(ecosystems: &BTreeSet<Ecosystem>) -> Self {
        Self {
            emitted: ecosystems.iter().map(|&e| (e, 0)).collect(),
            ..Self::default()
        }
    }

    pub fn rows_emitted(&self) -> u64 {
        self.emitted.values().sum()
    }
}

pub fn packages_file_name(ecosystem: Ecosystem) -> String {
    format!("packages-{}.csv", ecosystem.slug())
}

pub fn dependencies_file_name(ecosystem: Ecosystem) -> String {
    format!("dependencies-{}.csv", ecosystem.slug())
}

fn normalize_header(h: &[u8]) -> String {
    String::from_utf8_lossy(h)
        .trim()
        .chars()
        .map(|c| {
            if c == '_' || c == '-' {
                ' '
            } else {
                c.to_ascii_lowercase()
            }
        })
        .collect()
}

fn find_column(
    headers: &csv::ByteRecord,
    file: &str,
    column: &'static str,
    aliases: &[&str],
) -> Result<usize, IngestError> {
    let normalized: Vec<String> = headers.iter().map(normalize_header).collect();
    aliases
        .iter()
        .find_map(|alias| normalized.iter().position(|h| h == alias))
        .ok_or_else(|| IngestError::MissingColumn {
            file: file.to_owned(),
            column,
        })
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn csv_writer<W: Write>(output: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(output)
}

enum RowOutcome {
    Record,
    Malformed,
    End,
}

fn next_record<R: Read>(
    reader: &mut csv::Reader<R>,
    record: &mut csv::ByteRecord,
    file: &str,
) -> Result<RowOutcome, IngestError> {
    match reader.read_byte_record(record) {
        Ok(true) => Ok(RowOutcome::Record),
        Ok(false) => Ok(RowOutcome::End),
        Err(e) => match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. } => {
                Ok(RowOutcome::Malformed)
            }
            _ => Err(IngestError::Csv {
                file: file.to_owned(),
                source: e,
            }),
        },
    }
}

fn field(record: &csv::ByteRecord, idx: usize) -> Option<&str> {
    record.get(idx).and_then(|b| std::str::from_utf8(b).ok())
}

fn ecosystem_of(platform: &str, selected: &BTreeSet<Ecosystem>) -> Option<Ecosystem> {
    platform
        .parse::<Ecosystem>()
        .ok()
        .filter(|e| selected.contains(e))
}

fn write_err(file: &str, e: csv::Error) -> IngestError {
    IngestError::Csv {
        file: file.to_owned(),
        source: e,
    }
}

/// Filters the projects dump into `id,name,license` rows, one writer per
/// selected ecosystem. Rows of other platforms are dropped; rows with a
/// missing id or undecodable fields are tallied as malformed.
pub fn filter_packages<R: Read, W: Write>(
    input: R,
    ecosystems: &BTreeSet<Ecosystem>,
    outputs: &mut BTreeMap<Ecosystem, W>,
) -> Result<FilterCounts, IngestError> {
    const FILE: &str = "projects";
    let mut reader = csv_reader(input);
    let headers = reader
        .byte_headers()
        .map_err(|e| write_err(FILE, e))?
        .clone();
    let platform = find_column(&headers, FILE, "Platform", &["platform"])?;
    let id = find_column(&headers, FILE, "ID", &["id"])?;
    let name = find_column(&headers, FILE, "Name", &["name"])?;
    let license = find_column(&headers, FILE, "Licenses", &["licenses", "license"])?;

    let mut writers: BTreeMap<Ecosystem, csv::Writer<&mut W>> = outputs
        .iter_mut()
        .filter(|(e, _)| ecosystems.contains(e))
        .map(|(&e, w)| (e, csv_writer(w)))
        .collect();
    for w in writers.values_mut() {
        w.write_record(["id", "name", "license"])
            .map_err(|e| write_err(FILE, e))?;
    }

    let mut counts = FilterCounts::new(ecosystems);
    let mut record = csv::ByteRecord::new();
    loop {
        match next_record(&mut reader, &mut record, FILE)? {
            RowOutcome::End => break,
            RowOutcome::Malformed => {
                counts.rows_in += 1;
                counts.malformed += 1;
                continue;
            }
            RowOutcome::Record => counts.rows_in += 1,
        }
        let Some(platform) = field(&record, platform) else {
            counts.malformed += 1;
            continue;
        };
        let Some(eco) = ecosystem_of(platform, ecosystems) else {
            counts.dropped += 1;
            continue;
        };
        let (Some(id), Some(name), Some(license)) = (
            field(&record, id),
            field(&record, name),
            field(&record, license),
        ) else {
            counts.malformed += 1;
            continue;
        };
        let id = id.trim();
        if id.is_empty() {
            counts.malformed += 1;
            continue;
        }
        match writers.get_mut(&eco) {
            Some(w) => {
                w.write_record([id, name, license])
                    .map_err(|e| write_err(FILE, e))?;
                *counts.emitted.entry(eco).or_default() += 1;
            }
            None => counts.dropped += 1,
        }
    }
    for w in writers.values_mut() {
        w.flush().map_err(|e| IngestError::Io {
            path: FILE.into(),
            source: e,
        })?;
    }
    Ok(counts)
}

/// Filters the dependencies dump into `dependent_id,dependency_id,kind`
/// rows, keeping only selected ecosystems and dependency kinds.
pub fn filter_dependencies<R: Read, W: Write>(
    input: R,
    ecosystems: &BTreeSet<Ecosystem>,
    kept_kinds: &DependencyKinds,
    outputs: &mut BTreeMap<Ecosystem, W>,
) -> Result<FilterCounts, IngestError> {
    const FILE: &str = "dependencies";
    let mut reader = csv_reader(input);
    let headers = reader
        .byte_headers()
        .map_err(|e| write_err(FILE, e))?
        .clone();
    let platform = find_column(&headers, FILE, "Platform", &["platform"])?;
    let dependent = find_column(
        &headers,
        FILE,
        "Project ID",
        &["project id", "dependent id"],
    )?;
    let dependency = find_column(
        &headers,
        FILE,
        "Dependency Project ID",
        &["dependency project id", "dependency id"],
    )?;
    let kind = find_column(
        &headers,
        FILE,
        "Dependency Kind",
        &["dependency kind", "kind"],
    )?;

    let mut writers: BTreeMap<Ecosystem, csv::Writer<&mut W>> = outputs
        .iter_mut()
        .filter(|(e, _)| ecosystems.contains(e))
        .map(|(&e, w)| (e, csv_writer(w)))
        .collect();
    for w in writers.values_mut() {
        w.write_record(["dependent_id", "dependency_id", "kind"])
            .map_err(|e| write_err(FILE, e))?;
    }

    let mut counts = FilterCounts::new(ecosystems);
    let mut record = csv::ByteRecord::new();
    loop {
        match next_record(&mut reader, &mut record, FILE)? {
            RowOutcome::End => break,
            RowOutcome::Malformed => {
                counts.rows_in += 1;
                counts.malformed += 1;
                continue;
            }
            RowOutcome::Record => counts.rows_in += 1,
        }
        let Some(platform) = field(&record, platform) else {
            counts.malformed += 1;
            continue;
        };
        let Some(eco) = ecosystem_of(platform, ecosystems) else {
            counts.dropped += 1;
            continue;
        };
        let (Some(from), Some(to), Some(kind)) = (
            field(&record, dependent),
            field(&record, dependency),
            field(&record, kind),
        ) else {
            counts.malformed += 1;
            continue;
        };
        let (from, to) = (from.trim(), to.trim());
        if from.is_empty() || to.is_empty() {
            counts.malformed += 1;
            continue;
        }
        if !kept_kinds.contains(kind) {
            counts.dropped += 1;
            continue;
        }
        match writers.get_mut(&eco) {
            Some(w) => {
                w.write_record([from, to, normalize_kind(kind).as_str()])
                    .map_err(|e| write_err(FILE, e))?;
                *counts.emitted.entry(eco).or_default() += 1;
            }
            None => counts.dropped += 1,
        }
    }
    for w in writers.values_mut() {
        w.flush().map_err(|e| IngestError::Io {
            path: FILE.into(),
            source: e,
        })?;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterSummary {
    pub packages: FilterCounts,
    pub dependencies: FilterCounts,
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })
}

fn create(path: &Path) -> Result<BufWriter<File>, IngestError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })
}

/// Runs both filters and writes `packages-<eco>.csv` and
/// `dependencies-<eco>.csv` into the output directory.
pub fn run_filter(config: &IngestConfig) -> Result<FilterSummary, IngestError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| IngestError::Io {
        path: config.out_dir.display().to_string(),
        source: e,
    })?;

    let mut outputs = BTreeMap::new();
    for &eco in &config.ecosystems {
        outputs.insert(eco, create(&config.out_dir.join(packages_file_name(eco)))?);
    }
    let packages = filter_packages(open(&config.projects)?, &config.ecosystems, &mut outputs)?;

    let mut outputs = BTreeMap::new();
    for &eco in &config.ecosystems {
        outputs.insert(
            eco,
            create(&config.out_dir.join(dependencies_file_name(eco)))?,
        );
    }
    let dependencies = filter_dependencies(
        open(&config.dependencies)?,
        &config.ecosystems,
        &config.kept_kinds,
        &mut outputs,
    )?;
    Ok(FilterSummary {
        packages,
        dependencies,
    })
}

/// Reads an intermediate packages file. Unlike the dump filters, malformed
/// rows here are errors.
pub fn read_packages<R: Read>(
    input: R,
    ecosystem: Ecosystem,
    file: &str,
) -> Result<Vec<PackageNode>, IngestError> {
    let mut reader = csv_reader(input);
    let headers = reader
        .byte_headers()
        .map_err(|e| write_err(file, e))?
        .clone();
    let id = find_column(&headers, file, "id", &["id"])?;
    let name = find_column(&headers, file, "name", &["name"])?;
    let license = find_column(&headers, file, "license", &["license", "licenses"])?;
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader
        .read_byte_record(&mut record)
        .map_err(|e| write_err(file, e))?
    {
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: &str| IngestError::Malformed {
            file: file.to_owned(),
            line,
            message: message.to_owned(),
        };
        let (Some(id), Some(name), Some(license)) = (
            field(&record, id),
            field(&record, name),
            field(&record, license),
        ) else {
            return Err(malformed("invalid UTF-8"));
        };
        if id.is_empty() {
            return Err(malformed("empty package id"));
        }
        out.push(PackageNode::new(
            id,
            name,
            ecosystem,
            LicenseExpr::parse(license),
        ));
    }
    Ok(out)
}

/// Reads an intermediate dependencies file.
pub fn read_version_edges<R: Read>(input: R, file: &str) -> Result<Vec<VersionEdge>, IngestError> {
    let mut reader = csv_reader(input);
    let headers = reader
        .byte_headers()
        .map_err(|e| write_err(file, e))?
        .clone();
    let from = find_column(
        &headers,
        file,
        "dependent_id",
        &["dependent id", "project id"],
    )?;
    let to = find_column(
        &headers,
        file,
        "dependency_id",
        &["dependency id", "dependency project id"],
    )?;
    let kind = find_column(&headers, file, "kind", &["kind", "dependency kind"])?;
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader
        .read_byte_record(&mut record)
        .map_err(|e| write_err(file, e))?
    {
        let line = record.position().map_or(0, |p| p.line());
        let (Some(from), Some(to), Some(kind)) = (
            field(&record, from),
            field(&record, to),
            field(&record, kind),
        ) else {
            return Err(IngestError::Malformed {
                file: file.to_owned(),
                line,
                message: "invalid UTF-8".into(),
            });
        };
        out.push(VersionEdge::new(from, to, kind));
    }
    Ok(out)
}

/// Loads one ecosystem's intermediates from `dir` into a graph, applying
/// the kind filter and multigraph reduction.
pub fn load_graph(
    dir: &Path,
    ecosystem: Ecosystem,
    kinds: &DependencyKinds,
) -> Result<DependencyGraph, IngestError> {
    let packages_path = dir.join(packages_file_name(ecosystem));
    let deps_path = dir.join(dependencies_file_name(ecosystem));
    let nodes = read_packages(
        open(&packages_path)?,
        ecosystem,
        &packages_path.display().to_string(),
    )?;
    let edges = read_version_edges(open(&deps_path)?, &deps_path.display().to_string())?;
    let logical = reduce_multigraph(filter_edges_by_kind(edges, kinds));
    Ok(DependencyGraph::build(nodes, logical)?)
}
