//! PageRank by power iteration.
//!
//! Every dependent passes its rank along its outgoing edges to the packages
//! it depends on, so heavily depended-upon packages score high. Packages
//! without dependencies spread their rank uniformly over all nodes.

use std::collections::BTreeMap;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

use crate::graph::{DependencyGraph, PackageKey};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PageRankError {
    #[error("damping factor must lie strictly between 0 and 1, got {0}")]
    InvalidDamping(f64),
    #[error("tolerance must be non-negative, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig<F> {
    pub damping: F,
    pub max_iterations: usize,
    /// Stop once the L1 change between iterates drops to this value.
    pub tolerance: F,
}

impl<F: Float + FromPrimitive> Default for PageRankConfig<F> {
    fn default() -> Self {
        Self {
            damping: F::from_f64(0.85).unwrap(),
            max_iterations: 100,
            tolerance: F::from_f64(1e-9).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank<F> {
    /// Scores indexed like [`DependencyGraph::nodes`].
    pub scores: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 change of the last iteration.
    pub residual: F,
}

impl<F: Float> PageRank<F> {
    pub fn by_key(&self, graph: &DependencyGraph) -> BTreeMap<PackageKey, F> {
        graph
            .nodes()
            .iter()
            .zip(&self.scores)
            .map(|(n, &s)| (n.id.clone(), s))
            .collect()
    }

    /// 1-based rank positions, highest score first; ties by node order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
    }
}

/// Runs power iteration from the uniform vector. When `max_iterations` is
/// reached first, the last iterate is returned with `converged == false`.
pub fn pagerank<F>(
    graph: &DependencyGraph,
    config: &PageRankConfig<F>,
) -> Result<PageRank<F>, PageRankError>
where
    F: Float + FromPrimitive + Sum,
{
    let damping = config.damping;
    if !(damping > F::zero() && damping < F::one()) {
        return Err(PageRankError::InvalidDamping(
            damping.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if config.tolerance.is_nan() || config.tolerance < F::zero() {
        return Err(PageRankError::InvalidTolerance(
            config.tolerance.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(PageRank {
            scores: Vec::new(),
            iterations: 0,
            converged: true,
            residual: F::zero(),
        });
    }

    let size = F::from_usize(n).unwrap();
    let teleport = (F::one() - damping) / size;
    let out_share: Vec<F> = (0..n)
        .map(|u| match graph.dependencies_of(u).len() {
            0 => F::zero(),
            d => damping / F::from_usize(d).unwrap(),
        })
        .collect();

    let mut current = vec![F::one() / size; n];
    let mut next = vec![F::zero(); n];
    let mut residual = F::infinity();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let dangling: F = (0..n)
            .filter(|&u| graph.dependencies_of(u).is_empty())
            .map(|u| current[u])
            .sum();
        let base = teleport + damping * dangling / size;
        next.iter_mut().for_each(|x| *x = base);
        for &(u, v) in graph.edge_indices() {
            next[v] = next[v] + current[u] * out_share[u];
        }
        residual = current
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut current, &mut next);
        if residual <= config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(PageRank {
        scores: current,
        iterations,
        converged,
        residual,
    })
}
