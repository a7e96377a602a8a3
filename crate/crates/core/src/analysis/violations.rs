use serde::Serialize;

use crate::fraction::Fraction;
use crate::graph::{DependencyGraph, PackageKey};
use crate::license::LicenseExpr;
use crate::matrix::CompatibilityMatrix;

/// A dependency edge whose dependent license violates the dependency license.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationRecord {
    pub dependent: PackageKey,
    pub dependency: PackageKey,
    #[serde(serialize_with = "serialize_label")]
    pub dependent_license: LicenseExpr,
    #[serde(serialize_with = "serialize_label")]
    pub dependency_license: LicenseExpr,
    /// The dependency offers an AGPL-family license.
    pub agpl_caused: bool,
}

fn serialize_label<S: serde::Serializer>(expr: &LicenseExpr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(expr)
}

/// Violations found on a graph, together with the number of logical links
/// scanned.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    pub records: Vec<ViolationRecord>,
    pub total_links: usize,
}

impl Violations {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Violations over all logical links.
    pub fn ratio(&self) -> Fraction {
        Fraction::from_counts(self.records.len(), self.total_links)
    }
}

/// Scans every logical link and records those whose licenses are
/// incompatible, in graph edge order.
pub fn direct_incompatibilities(
    graph: &DependencyGraph,
    matrix: &CompatibilityMatrix,
) -> Violations {
    let records = graph
        .edges()
        .filter(|(dependent, dependency)| {
            matrix.is_expr_incompatible(&dependency.license, &dependent.license)
        })
        .map(|(dependent, dependency)| ViolationRecord {
            dependent: dependent.id.clone(),
            dependency: dependency.id.clone(),
            dependent_license: dependent.license.clone(),
            dependency_license: dependency.license.clone(),
            agpl_caused: dependency.license.has_agpl_alternative(),
        })
        .collect();
    Violations {
        records,
        total_links: graph.edge_count(),
    }
}

/// The direct violations whose dependency carries an AGPL-family license.
/// The ratio still counts all links.
pub fn agpl_incompatibilities(graph: &DependencyGraph, matrix: &CompatibilityMatrix) -> Violations {
    let mut all = direct_incompatibilities(graph, matrix);
    all.records.retain(|r| r.agpl_caused);
    all
}
