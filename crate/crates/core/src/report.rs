//! Text, CSV, JSON and DOT renderings of analysis results.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{top_impact_violators, FrequencyTable, ImpactResult, Violations};
use crate::fraction::Fraction;
use crate::graph::{DependencyGraph, PackageKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format {0:?}; expected text, csv or json")]
pub struct UnknownFormat(String);

impl FromStr for OutputFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(UnknownFormat(s.to_owned())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("share {field} is {found}, expected {expected}")]
    InconsistentShare {
        field: &'static str,
        found: Fraction,
        expected: Fraction,
    },
}

/// One row of the per-ecosystem statistics tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcosystemStats {
    pub ecosystem: String,
    pub packages: u64,
    pub dependencies: u64,
    pub disconnected: u64,
    pub connected: u64,
    pub incompatibilities: u64,
    pub incompatibility_share: Fraction,
    pub agpl_incompatibilities: u64,
    pub agpl_share: Fraction,
    pub affected: u64,
    pub affected_share: Fraction,
}

/// Absolute counts from which [`EcosystemStats`] derives its shares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsCounts {
    pub packages: u64,
    pub dependencies: u64,
    pub disconnected: u64,
    pub connected: u64,
    pub incompatibilities: u64,
    pub agpl_incompatibilities: u64,
    pub affected: u64,
}

impl EcosystemStats {
    pub fn new(ecosystem: impl Into<String>, c: StatsCounts) -> Self {
        Self {
            ecosystem: ecosystem.into(),
            packages: c.packages,
            dependencies: c.dependencies,
            disconnected: c.disconnected,
            connected: c.connected,
            incompatibilities: c.incompatibilities,
            incompatibility_share: Fraction::new(c.incompatibilities, c.dependencies),
            agpl_incompatibilities: c.agpl_incompatibilities,
            agpl_share: Fraction::new(c.agpl_incompatibilities, c.dependencies),
            affected: c.affected,
            affected_share: Fraction::new(c.affected, c.packages),
        }
    }

    pub fn from_analysis(
        ecosystem: impl Into<String>,
        graph: &DependencyGraph,
        direct: &Violations,
        agpl: &Violations,
        impact: &ImpactResult,
    ) -> Self {
        let (disconnected, connected) = graph.connectivity_counts();
        Self::new(
            ecosystem,
            StatsCounts {
                packages: graph.node_count() as u64,
                dependencies: graph.edge_count() as u64,
                disconnected: disconnected as u64,
                connected: connected as u64,
                incompatibilities: direct.len() as u64,
                agpl_incompatibilities: agpl.len() as u64,
                affected: impact.affected.len() as u64,
            },
        )
    }

    /// Checks that every stored share equals its count over its denominator.
    pub fn check_shares(&self) -> Result<(), ReportError> {
        let checks = [
            (
                "incompatibility_share",
                self.incompatibility_share,
                Fraction::new(self.incompatibilities, self.dependencies),
            ),
            (
                "agpl_share",
                self.agpl_share,
                Fraction::new(self.agpl_incompatibilities, self.dependencies),
            ),
            (
                "affected_share",
                self.affected_share,
                Fraction::new(self.affected, self.packages),
            ),
        ];
        for (field, found, expected) in checks {
            if found.numerator() != expected.numerator()
                || found.denominator() != expected.denominator()
            {
                return Err(ReportError::InconsistentShare {
                    field,
                    found,
                    expected,
                });
            }
        }
        Ok(())
    }
}

const STATS_HEADER: [&str; 11] = [
    "Ecosystem",
    "Packages",
    "Dependencies",
    "Discon",
    "Con",
    "Incompat",
    "Incompat%",
    "AGPL",
    "AGPL%",
    "Affected",
    "Affected%",
];

/// Renders the statistics rows. Incompatibility shares print with one
/// decimal, AGPL and affected shares with two.
pub fn render_stats_table(
    rows: &[EcosystemStats],
    format: OutputFormat,
) -> Result<String, ReportError> {
    match format {
        OutputFormat::Text => {
            let cells: Vec<[String; 11]> = rows
                .iter()
                .map(|r| {
                    [
                        r.ecosystem.clone(),
                        r.packages.to_string(),
                        r.dependencies.to_string(),
                        r.disconnected.to_string(),
                        r.connected.to_string(),
                        r.incompatibilities.to_string(),
                        r.incompatibility_share.percent(1),
                        r.agpl_incompatibilities.to_string(),
                        r.agpl_share.percent(2),
                        r.affected.to_string(),
                        r.affected_share.percent(2),
                    ]
                })
                .collect();
            let header = STATS_HEADER.map(str::to_owned);
            Ok(render_columns(&header, &cells))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record(STATS_FIELDS)?;
            }
            for row in rows {
                w.serialize(row)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

const STATS_FIELDS: [&str; 11] = [
    "ecosystem",
    "packages",
    "dependencies",
    "disconnected",
    "connected",
    "incompatibilities",
    "incompatibility_share",
    "agpl_incompatibilities",
    "agpl_share",
    "affected",
    "affected_share",
];

pub fn parse_stats_csv(text: &str) -> Result<Vec<EcosystemStats>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        let row: EcosystemStats = row?;
        row.check_shares()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_stats_json(text: &str) -> Result<Vec<EcosystemStats>, ReportError> {
    let rows: Vec<EcosystemStats> = serde_json::from_str(text)?;
    for row in &rows {
        row.check_shares()?;
    }
    Ok(rows)
}

fn render_columns<const N: usize>(header: &[String; N], rows: &[[String; N]]) -> String {
    let mut widths = header.each_ref().map(|h| h.len());
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows) {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i == 0 {
                let _ = write!(line, "{:<width$}", cell, width = widths[0]);
            } else {
                let _ = write!(line, "  {:>width$}", cell, width = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Label of the aggregated remainder bucket in chart data.
pub const OTHER_BUCKET: &str = "other";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub label: String,
    pub count: usize,
    pub share: f64,
}

/// The `top_n` most common license buckets plus an `other` bucket holding
/// the rest. Shares are relative to the package total.
pub fn frequency_chart_entries(table: &FrequencyTable, top_n: usize) -> Vec<ChartEntry> {
    if table.is_empty() {
        return Vec::new();
    }
    let ranked = table.ranked();
    let split = top_n.max(1).min(ranked.len());
    let mut entries: Vec<ChartEntry> = ranked[..split]
        .iter()
        .map(|&(label, count)| ChartEntry {
            label: label.to_owned(),
            count,
            share: Fraction::from_counts(count, table.total).to_float(),
        })
        .collect();
    let rest: usize = ranked[split..].iter().map(|&(_, c)| c).sum();
    entries.push(ChartEntry {
        label: OTHER_BUCKET.to_owned(),
        count: rest,
        share: Fraction::from_counts(rest, table.total).to_float(),
    });
    entries
}

pub fn render_frequency_chart_data(
    table: &FrequencyTable,
    top_n: usize,
    format: OutputFormat,
) -> Result<String, ReportError> {
    let entries = frequency_chart_entries(table, top_n);
    match format {
        OutputFormat::Text => {
            let header = [
                "License".to_owned(),
                "Packages".to_owned(),
                "Share".to_owned(),
            ];
            if entries.is_empty() {
                return Ok(String::new());
            }
            let rows: Vec<[String; 3]> = entries
                .iter()
                .map(|e| {
                    [
                        e.label.clone(),
                        e.count.to_string(),
                        Fraction::from_counts(e.count, table.total).percent(1),
                    ]
                })
                .collect();
            Ok(render_columns(&header, &rows))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["label", "count", "share"])?;
            for e in &entries {
                w.write_record([e.label.as_str(), &e.count.to_string(), &e.share.to_string()])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&entries)? + "\n"),
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT export of the violators affecting more than `threshold` packages and
/// the AGPL packages they depend on. When scores are given, node width
/// scales with the score relative to the highest score shown.
pub fn export_impact_dot(
    graph: &DependencyGraph,
    impact: &ImpactResult,
    threshold: usize,
    scores: Option<&BTreeMap<PackageKey, f64>>,
) -> String {
    let top: BTreeMap<PackageKey, usize> = top_impact_violators(impact, threshold)
        .into_iter()
        .collect();
    let links: Vec<&(PackageKey, PackageKey)> = impact
        .agpl_links
        .iter()
        .filter(|(dependent, _)| top.contains_key(dependent))
        .collect();
    let agpl: BTreeSet<&PackageKey> = links
        .iter()
        .map(|(_, d)| d)
        .filter(|d| !top.contains_key(*d))
        .collect();

    let mut keys: Vec<&PackageKey> = top.keys().chain(agpl.iter().copied()).collect();
    keys.sort();
    let max_score = scores
        .map(|s| {
            keys.iter()
                .filter_map(|k| s.get(*k).copied())
                .fold(0.0_f64, f64::max)
        })
        .unwrap_or(0.0);

    let mut out = String::from("digraph impact {\n");
    for key in &keys {
        let node = graph.get(key.as_str());
        let name = node.map_or(key.as_str(), |n| n.name.as_str());
        let mut attrs = vec![format!("label=\"{}\"", dot_escape(name))];
        if let Some(&count) = top.get(*key) {
            attrs.push("shape=box".into());
            attrs.push(format!("tooltip=\"affects {count} packages\""));
        } else {
            let license = node.map(|n| n.license.label()).unwrap_or_default();
            attrs.push("shape=ellipse".into());
            attrs.push("style=filled".into());
            attrs.push("fillcolor=pink".into());
            attrs.push(format!("tooltip=\"{}\"", dot_escape(&license)));
        }
        if let Some(score) = scores.and_then(|s| s.get(*key)) {
            let width = if max_score > 0.0 {
                0.25 + 2.0 * score / max_score
            } else {
                0.25
            };
            attrs.push(format!("width={width:.4}"));
        }
        let _ = writeln!(
            out,
            "  \"{}\" [{}];",
            dot_escape(key.as_str()),
            attrs.join(", ")
        );
    }
    for (from, to) in links {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\";",
            dot_escape(from.as_str()),
            dot_escape(to.as_str())
        );
    }
    out.push_str("}\n");
    out
}
