use std::collections::BTreeMap;

use serde::Serialize;

use crate::fraction::Fraction;
use crate::graph::{DependencyGraph, Ecosystem};

/// License usage counts. Every package lands in exactly one bucket, keyed
/// by its full license label (`MIT`, `MIT,Apache-2.0`, `None`, ...).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub ecosystem: Option<Ecosystem>,
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
}

impl FrequencyTable {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, label: &str) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn share(&self, label: &str) -> Fraction {
        Fraction::from_counts(self.count(label), self.total)
    }

    /// Buckets ordered by count descending, then label ascending.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut entries: Vec<(&str, usize)> =
            self.counts.iter().map(|(l, &c)| (l.as_str(), c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }
}

pub fn license_frequencies(graph: &DependencyGraph) -> FrequencyTable {
    let mut table = FrequencyTable {
        ecosystem: graph.nodes().first().map(|n| n.ecosystem),
        total: graph.node_count(),
        counts: BTreeMap::new(),
    };
    for node in graph.nodes() {
        *table.counts.entry(node.license.label()).or_default() += 1;
    }
    table
}
