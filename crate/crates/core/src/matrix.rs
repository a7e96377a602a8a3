//! Directed license incompatibility facts and their evaluation.
//!
//! A fact `(dependency, dependent)` states that a package licensed
//! `dependent` violates the terms of a dependency licensed `dependency`.
//! Facts are read from a line-oriented rules file:
//!
//! ```text
//! # comment
//! incompatible,AGPL-3.0,LGPL-2.1
//! ```

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use thiserror::Error;

use crate::license::{classify, LicenseCategory, LicenseExpr, LicenseId, NormalizationReport};

/// The rules file shipped with the crate.
pub const SEED_RULES: &str = include_str!("../data/license-rules.csv");

const FACT_DIRECTIVE: &str = "incompatible";

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reading rules: {0}")]
    Io(#[from] std::io::Error),
}

impl RulesError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompatibilityMatrix {
    // dependency license -> dependent licenses that violate it
    facts: HashMap<LicenseId, HashSet<LicenseId>>,
    len: usize,
}

impl CompatibilityMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// The bundled rules.
    pub fn seed() -> Self {
        Self::parse(SEED_RULES).expect("bundled rules file is well formed")
    }

    pub fn parse(text: &str) -> Result<Self, RulesError> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, RulesError> {
        let mut matrix = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0] != FACT_DIRECTIVE {
                return Err(RulesError::parse(
                    line_no,
                    format!("unknown directive {:?}", fields[0]),
                ));
            }
            if fields.len() != 3 {
                return Err(RulesError::parse(
                    line_no,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            let dependency = LicenseId::new(fields[1])
                .map_err(|e| RulesError::parse(line_no, format!("dependency license: {e}")))?;
            let dependent = LicenseId::new(fields[2])
                .map_err(|e| RulesError::parse(line_no, format!("dependent license: {e}")))?;
            matrix.insert(dependency, dependent);
        }
        Ok(matrix)
    }

    /// Adds a fact. Returns false if it was already present.
    pub fn insert(&mut self, dependency: LicenseId, dependent: LicenseId) -> bool {
        let added = self.facts.entry(dependency).or_default().insert(dependent);
        if added {
            self.len += 1;
        }
        added
    }

    pub fn remove(&mut self, dependency: &LicenseId, dependent: &LicenseId) -> bool {
        let Some(set) = self.facts.get_mut(dependency.as_str()) else {
            return false;
        };
        let removed = set.remove(dependent.as_str());
        if removed {
            self.len -= 1;
            if set.is_empty() {
                self.facts.remove(dependency.as_str());
            }
        }
        removed
    }

    /// Number of distinct facts.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All facts as `(dependency, dependent)`, sorted.
    pub fn facts(&self) -> Vec<(&LicenseId, &LicenseId)> {
        let mut out: Vec<_> = self
            .facts
            .iter()
            .flat_map(|(d, ps)| ps.iter().map(move |p| (d, p)))
            .collect();
        out.sort();
        out
    }

    pub fn is_pair_incompatible(&self, dependency: &LicenseId, dependent: &LicenseId) -> bool {
        self.facts
            .get(dependency.as_str())
            .is_some_and(|ps| ps.contains(dependent.as_str()))
    }

    /// True iff every combination of a dependency alternative with a
    /// dependent alternative is incompatible. Expressions without a license
    /// are never incompatible.
    pub fn is_expr_incompatible(&self, dependency: &LicenseExpr, dependent: &LicenseExpr) -> bool {
        match (dependency, dependent) {
            (LicenseExpr::AnyOf(ds), LicenseExpr::AnyOf(ps)) => ds
                .iter()
                .all(|d| ps.iter().all(|p| self.is_pair_incompatible(d, p))),
            _ => false,
        }
    }

    /// Whether the id occurs in at least one fact.
    pub fn mentions(&self, id: &LicenseId) -> bool {
        self.facts.contains_key(id.as_str())
            || self.facts.values().any(|ps| ps.contains(id.as_str()))
    }

    /// Tallies identifiers that are neither classified nor mentioned by any
    /// fact, plus expressions without a license.
    pub fn normalization_report<'a>(
        &self,
        exprs: impl IntoIterator<Item = &'a LicenseExpr>,
    ) -> NormalizationReport {
        let vocabulary: HashSet<&str> = self
            .facts
            .iter()
            .flat_map(|(d, ps)| std::iter::once(d.as_str()).chain(ps.iter().map(LicenseId::as_str)))
            .collect();
        let mut report = NormalizationReport::default();
        for expr in exprs {
            match expr {
                LicenseExpr::NoLicense => report.no_license += 1,
                LicenseExpr::AnyOf(ids) => {
                    for id in ids {
                        if classify(id) == LicenseCategory::Unknown
                            && !vocabulary.contains(id.as_str())
                        {
                            *report.unrecognized.entry(id.to_string()).or_default() += 1;
                        }
                    }
                }
            }
        }
        report
    }
}

pub fn load_matrix(reader: impl BufRead) -> Result<CompatibilityMatrix, RulesError> {
    CompatibilityMatrix::from_reader(reader)
}

pub fn is_pair_incompatible(
    matrix: &CompatibilityMatrix,
    dependency: &LicenseId,
    dependent: &LicenseId,
) -> bool {
    matrix.is_pair_incompatible(dependency, dependent)
}

pub fn is_expr_incompatible(
    matrix: &CompatibilityMatrix,
    dependency: &LicenseExpr,
    dependent: &LicenseExpr,
) -> bool {
    matrix.is_expr_incompatible(dependency, dependent)
}
