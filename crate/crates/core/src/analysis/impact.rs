use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::fraction::Fraction;
use crate::graph::{DependencyGraph, PackageKey};
use crate::matrix::CompatibilityMatrix;

use super::violations::agpl_incompatibilities;

/// Transitive reach of AGPL-caused violations.
///
/// A package is affected when it depends, directly or indirectly, on a
/// package that itself has an AGPL-caused violation. Each violating
/// dependent is excluded from its own ancestor set but still counts as
/// affected when it reaches a different violator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ImpactResult {
    pub violating_dependents: BTreeSet<PackageKey>,
    pub affected: BTreeSet<PackageKey>,
    pub per_violator_affected: BTreeMap<PackageKey, usize>,
    /// `(violating dependent, AGPL dependency)` links, sorted.
    pub agpl_links: Vec<(PackageKey, PackageKey)>,
    pub total_packages: usize,
}

impl ImpactResult {
    pub fn affected_share(&self) -> Fraction {
        Fraction::from_counts(self.affected.len(), self.total_packages)
    }

    pub fn is_empty(&self) -> bool {
        self.violating_dependents.is_empty()
    }
}

pub fn agpl_impact(graph: &DependencyGraph, matrix: &CompatibilityMatrix) -> ImpactResult {
    let violations = agpl_incompatibilities(graph, matrix);
    let mut result = ImpactResult {
        total_packages: graph.node_count(),
        ..ImpactResult::default()
    };
    let mut violators = BTreeSet::new();
    for record in &violations.records {
        result
            .agpl_links
            .push((record.dependent.clone(), record.dependency.clone()));
        if let Some(idx) = graph.index_of(record.dependent.as_str()) {
            violators.insert(idx);
        }
    }
    result.agpl_links.sort();
    result.agpl_links.dedup();

    let mut affected = vec![false; graph.node_count()];
    for &v in &violators {
        let ancestors = graph.ancestor_indices(v);
        for &u in &ancestors {
            affected[u] = true;
        }
        let key = graph.node(v).id.clone();
        result
            .per_violator_affected
            .insert(key.clone(), ancestors.len());
        result.violating_dependents.insert(key);
    }
    result.affected = affected
        .iter()
        .enumerate()
        .filter(|(_, &hit)| hit)
        .map(|(i, _)| graph.node(i).id.clone())
        .collect();
    result
}

/// Violators whose ancestor count exceeds `threshold`, largest first, ties
/// by key.
pub fn top_impact_violators(impact: &ImpactResult, threshold: usize) -> Vec<(PackageKey, usize)> {
    let mut out: Vec<(PackageKey, usize)> = impact
        .per_violator_affected
        .iter()
        .filter(|(_, &n)| n > threshold)
        .map(|(k, &n)| (k.clone(), n))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
