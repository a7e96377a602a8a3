//! Package-level dependency networks.
//!
//! Registry dumps record dependencies between package *versions*, so the raw
//! input is a multigraph. [`reduce_multigraph`] collapses it into logical
//! edges: one edge per ordered package pair. Edges always point from the
//! dependent to its dependency.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::license::LicenseExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate package key {0:?}")]
    DuplicateNode(String),
    #[error("unknown package key {0:?}")]
    UnknownNode(String),
}

/// The seven registries the analysis targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ecosystem {
    Cargo,
    Maven,
    #[serde(rename = "NPM")]
    Npm,
    NuGet,
    Packagist,
    PyPI,
    Rubygems,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown ecosystem {given:?}; expected one of: cargo, maven, npm, nuget, packagist, pypi, rubygems")]
pub struct UnknownEcosystem {
    pub given: String,
}

impl Ecosystem {
    pub const ALL: [Ecosystem; 7] = [
        Ecosystem::Cargo,
        Ecosystem::Maven,
        Ecosystem::Npm,
        Ecosystem::NuGet,
        Ecosystem::Packagist,
        Ecosystem::PyPI,
        Ecosystem::Rubygems,
    ];

    /// Display name as used in registry dumps.
    pub fn name(self) -> &'static str {
        match self {
            Self::Cargo => "Cargo",
            Self::Maven => "Maven",
            Self::Npm => "NPM",
            Self::NuGet => "NuGet",
            Self::Packagist => "Packagist",
            Self::PyPI => "PyPI",
            Self::Rubygems => "Rubygems",
        }
    }

    /// Lower-case tag used in file names and on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            Self::Cargo => "cargo",
            Self::Maven => "maven",
            Self::Npm => "npm",
            Self::NuGet => "nuget",
            Self::Packagist => "packagist",
            Self::PyPI => "pypi",
            Self::Rubygems => "rubygems",
        }
    }
}

impl fmt::Display for Ecosystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ecosystem {
    type Err = UnknownEcosystem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim();
        Self::ALL
            .into_iter()
            .find(|e| e.slug().eq_ignore_ascii_case(needle))
            .ok_or_else(|| UnknownEcosystem {
                given: s.to_owned(),
            })
    }
}

/// Opaque package identifier, unique within one ecosystem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PackageKey(String);

impl PackageKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PackageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for PackageKey {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PackageKey {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for PackageKey {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageNode {
    pub id: PackageKey,
    pub name: String,
    pub ecosystem: Ecosystem,
    pub license: LicenseExpr,
}

impl PackageNode {
    pub fn new(
        id: impl Into<PackageKey>,
        name: impl Into<String>,
        ecosystem: Ecosystem,
        license: LicenseExpr,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            ecosystem,
            license,
        }
    }
}

/// One raw version-level dependency record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VersionEdge {
    pub from: PackageKey,
    pub to: PackageKey,
    pub kind: String,
}

impl VersionEdge {
    pub fn new(
        from: impl Into<PackageKey>,
        to: impl Into<PackageKey>,
        kind: impl Into<String>,
    ) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind: kind.into(),
        }
    }
}

/// A logical package-level edge, dependent -> dependency.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DependencyEdge {
    pub dependent: PackageKey,
    pub dependency: PackageKey,
}

impl DependencyEdge {
    pub fn new(dependent: impl Into<PackageKey>, dependency: impl Into<PackageKey>) -> Self {
        Self {
            dependent: dependent.into(),
            dependency: dependency.into(),
        }
    }
}

/// Set of dependency kinds to keep. Matching is case-insensitive and an
/// empty kind counts as `runtime`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyKinds(BTreeSet<String>);

impl DependencyKinds {
    pub fn new<I, S>(kinds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            kinds
                .into_iter()
                .map(|k| normalize_kind(k.as_ref()))
                .collect(),
        )
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.0.contains(&normalize_kind(kind))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for DependencyKinds {
    fn default() -> Self {
        Self::new(["runtime", "compile"])
    }
}

pub fn normalize_kind(kind: &str) -> String {
    let kind = kind.trim();
    if kind.is_empty() {
        "runtime".to_owned()
    } else {
        kind.to_ascii_lowercase()
    }
}

/// Keeps the edges whose kind is in `kept`, preserving order.
pub fn filter_edges_by_kind<'a, I>(
    edges: I,
    kept: &'a DependencyKinds,
) -> impl Iterator<Item = VersionEdge> + 'a
where
    I: IntoIterator<Item = VersionEdge>,
    I::IntoIter: 'a,
{
    edges.into_iter().filter(move |e| kept.contains(&e.kind))
}

/// Collapses version edges into logical edges, in order of first occurrence.
pub fn reduce_multigraph(edges: impl IntoIterator<Item = VersionEdge>) -> Vec<DependencyEdge> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for edge in edges {
        if seen.insert((edge.from.clone(), edge.to.clone())) {
            out.push(DependencyEdge {
                dependent: edge.from,
                dependency: edge.to,
            });
        }
    }
    out
}

/// Immutable dependency network of one ecosystem with forward and reverse
/// adjacency.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    nodes: Vec<PackageNode>,
    index: HashMap<PackageKey, usize>,
    edges: Vec<(usize, usize)>,
    forward: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
    dangling: usize,
}

impl DependencyGraph {
    /// Builds the graph. Edges whose endpoints are not in `nodes` are left
    /// out and counted in [`DependencyGraph::dangling_edges`]; repeated
    /// edges are kept once.
    pub fn build(
        nodes: impl IntoIterator<Item = PackageNode>,
        edges: impl IntoIterator<Item = DependencyEdge>,
    ) -> Result<Self, GraphError> {
        let mut graph = Self::default();
        for node in nodes {
            if graph.index.contains_key(&node.id) {
                return Err(GraphError::DuplicateNode(node.id.0));
            }
            graph.index.insert(node.id.clone(), graph.nodes.len());
            graph.nodes.push(node);
        }
        let n = graph.nodes.len();
        graph.forward = vec![Vec::new(); n];
        graph.reverse = vec![Vec::new(); n];

        let mut seen = HashSet::new();
        for edge in edges {
            let (Some(&u), Some(&v)) = (
                graph.index.get(edge.dependent.as_str()),
                graph.index.get(edge.dependency.as_str()),
            ) else {
                graph.dangling += 1;
                continue;
            };
            if seen.insert((u, v)) {
                graph.edges.push((u, v));
                graph.forward[u].push(v);
                graph.reverse[v].push(u);
            }
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges dropped at build time because an endpoint was missing.
    pub fn dangling_edges(&self) -> usize {
        self.dangling
    }

    pub fn nodes(&self) -> &[PackageNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &PackageNode {
        &self.nodes[idx]
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn get(&self, key: &str) -> Option<&PackageNode> {
        self.index_of(key).map(|i| &self.nodes[i])
    }

    /// Edges as `(dependent, dependency)` node indices, in insertion order.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (&PackageNode, &PackageNode)> + '_ {
        self.edges
            .iter()
            .map(|&(u, v)| (&self.nodes[u], &self.nodes[v]))
    }

    /// Direct dependencies of a node.
    pub fn dependencies_of(&self, idx: usize) -> &[usize] {
        &self.forward[idx]
    }

    /// Direct dependents of a node.
    pub fn dependents_of(&self, idx: usize) -> &[usize] {
        &self.reverse[idx]
    }

    /// `(disconnected, connected)`: nodes without any incident edge versus
    /// nodes with at least one.
    pub fn connectivity_counts(&self) -> (usize, usize) {
        let disconnected = (0..self.nodes.len())
            .filter(|&i| self.forward[i].is_empty() && self.reverse[i].is_empty())
            .count();
        (disconnected, self.nodes.len() - disconnected)
    }

    /// Indices of every node with a directed path to `start`, excluding
    /// `start` itself. Self-loops are ignored. Sorted ascending.
    pub fn ancestor_indices(&self, start: usize) -> Vec<usize> {
        let mut visited = vec![false; self.nodes.len()];
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            for &u in &self.reverse[v] {
                if !visited[u] {
                    visited[u] = true;
                    out.push(u);
                    queue.push_back(u);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn ancestors(&self, start: &str) -> Result<BTreeSet<PackageKey>, GraphError> {
        let idx = self
            .index_of(start)
            .ok_or_else(|| GraphError::UnknownNode(start.to_owned()))?;
        Ok(self
            .ancestor_indices(idx)
            .into_iter()
            .map(|i| self.nodes[i].id.clone())
            .collect())
    }
}

pub fn build_graph(
    nodes: impl IntoIterator<Item = PackageNode>,
    edges: impl IntoIterator<Item = DependencyEdge>,
) -> Result<DependencyGraph, GraphError> {
    DependencyGraph::build(nodes, edges)
}

pub fn connectivity_counts(graph: &DependencyGraph) -> (usize, usize) {
    graph.connectivity_counts()
}

pub fn ancestors(graph: &DependencyGraph, start: &str) -> Result<BTreeSet<PackageKey>, GraphError> {
    graph.ancestors(start)
}
