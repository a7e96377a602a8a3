//! SPDX license identifiers, comma-list license fields and license categories.
//!
//! A package's license field in registry dumps is either empty, the literal
//! `None`, or a comma separated list of SPDX identifiers. A list is read as a
//! disjunction: the package may be used under any one of the listed licenses.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label used by registry dumps for packages without a license.
pub const NO_LICENSE_LABEL: &str = "None";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LicenseIdError {
    #[error("license identifier is empty")]
    Empty,
    #[error("license identifier {0:?} has surrounding whitespace")]
    Whitespace(String),
    #[error("license identifier {0:?} contains a comma")]
    Comma(String),
    #[error("{NO_LICENSE_LABEL:?} is the no-license marker, not an identifier")]
    NoLicenseMarker,
}

/// A single license identifier, e.g. `MIT` or `AGPL-3.0-only`.
///
/// Identifiers are compared by exact string equality; case is preserved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LicenseId(String);

impl LicenseId {
    pub fn new(id: impl Into<String>) -> Result<Self, LicenseIdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(LicenseIdError::Empty);
        }
        if id.trim() != id {
            return Err(LicenseIdError::Whitespace(id));
        }
        if id.contains(',') {
            return Err(LicenseIdError::Comma(id));
        }
        if id == NO_LICENSE_LABEL {
            return Err(LicenseIdError::NoLicenseMarker);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether this identifier belongs to the AGPL family (`AGPL-1.0`,
    /// `AGPL-3.0-or-later`, ...).
    pub fn is_agpl_family(&self) -> bool {
        self.0.starts_with("AGPL-")
    }

    pub fn category(&self) -> LicenseCategory {
        classify(self)
    }
}

impl fmt::Display for LicenseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for LicenseId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for LicenseId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LicenseId {
    type Error = LicenseIdError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl TryFrom<&str> for LicenseId {
    type Error = LicenseIdError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<LicenseId> for String {
    fn from(id: LicenseId) -> Self {
        id.0
    }
}

/// A package's license field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LicenseExpr {
    /// No license was declared.
    NoLicense,
    /// Any one of these licenses may be chosen. Never empty, no duplicates,
    /// kept in order of first appearance.
    AnyOf(Vec<LicenseId>),
}

impl LicenseExpr {
    /// Parses a raw comma-list license field. Never fails.
    ///
    /// Tokens are trimmed, empty tokens and `None` tokens are dropped and
    /// duplicates keep their first position. If nothing remains the field
    /// is [`LicenseExpr::NoLicense`].
    pub fn parse(raw: &str) -> Self {
        let mut seen = HashSet::new();
        let mut alternatives = Vec::new();
        for token in raw.split(',').map(str::trim) {
            if token.is_empty() || token == NO_LICENSE_LABEL {
                continue;
            }
            if seen.insert(token) {
                // trimmed, non-empty, comma-free: always a valid id
                alternatives.push(LicenseId(token.to_owned()));
            }
        }
        if alternatives.is_empty() {
            Self::NoLicense
        } else {
            Self::AnyOf(alternatives)
        }
    }

    /// Builds an expression from identifiers, dropping duplicates.
    /// An empty input gives [`LicenseExpr::NoLicense`].
    pub fn any_of(ids: impl IntoIterator<Item = LicenseId>) -> Self {
        let mut alternatives: Vec<LicenseId> = Vec::new();
        for id in ids {
            if !alternatives.contains(&id) {
                alternatives.push(id);
            }
        }
        if alternatives.is_empty() {
            Self::NoLicense
        } else {
            Self::AnyOf(alternatives)
        }
    }

    pub fn single(id: LicenseId) -> Self {
        Self::AnyOf(vec![id])
    }

    pub fn is_no_license(&self) -> bool {
        matches!(self, Self::NoLicense)
    }

    pub fn alternatives(&self) -> &[LicenseId] {
        match self {
            Self::NoLicense => &[],
            Self::AnyOf(ids) => ids,
        }
    }

    pub fn has_agpl_alternative(&self) -> bool {
        self.alternatives().iter().any(LicenseId::is_agpl_family)
    }

    /// Canonical label: the comma-joined alternatives, or `None`.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn categories(&self) -> BTreeSet<LicenseCategory> {
        match self {
            Self::NoLicense => BTreeSet::from([LicenseCategory::NoLicense]),
            Self::AnyOf(ids) => ids.iter().map(classify).collect(),
        }
    }
}

impl fmt::Display for LicenseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoLicense => f.write_str(NO_LICENSE_LABEL),
            Self::AnyOf(ids) => {
                for (i, id) in ids.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(id.as_str())?;
                }
                Ok(())
            }
        }
    }
}

/// Parses a raw license field. See [`LicenseExpr::parse`].
pub fn parse_license_field(raw: &str) -> LicenseExpr {
    LicenseExpr::parse(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LicenseCategory {
    Permissive,
    WeaklyProtective,
    StronglyProtective,
    Unknown,
    NoLicense,
}

impl fmt::Display for LicenseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Permissive => "permissive",
            Self::WeaklyProtective => "weakly protective",
            Self::StronglyProtective => "strongly protective",
            Self::Unknown => "unknown",
            Self::NoLicense => "no license",
        })
    }
}

const PERMISSIVE: &[&str] = &[
    "MIT",
    "MIT-0",
    "Apache-2.0",
    "BSD-2-Clause",
    "BSD-3-Clause",
    "ISC",
    "Unlicense",
    "CC0-1.0",
    "0BSD",
];

pub fn classify(id: &LicenseId) -> LicenseCategory {
    let id = id.as_str();
    if PERMISSIVE.contains(&id) {
        LicenseCategory::Permissive
    } else if id.starts_with("LGPL-") || id.starts_with("MPL-") {
        LicenseCategory::WeaklyProtective
    } else if id.starts_with("GPL-") || id.starts_with("AGPL-") {
        LicenseCategory::StronglyProtective
    } else {
        LicenseCategory::Unknown
    }
}

pub fn is_agpl_family(id: &LicenseId) -> bool {
    id.is_agpl_family()
}

/// Tally of identifiers that neither the classification table nor the rules
/// matrix knows about. Such ids are kept verbatim and never match a rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NormalizationReport {
    pub unrecognized: BTreeMap<String, usize>,
    pub no_license: usize,
}

impl NormalizationReport {
    pub fn unrecognized_total(&self) -> usize {
        self.unrecognized.values().sum()
    }
}
