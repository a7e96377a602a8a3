//! License incompatibility analysis for package-registry dependency networks.
//!
//! The pipeline: [`ingest`] filters registry dumps into per-ecosystem CSV
//! intermediates, [`graph`] collapses version-level dependencies into a
//! logical dependency network, [`analysis`] finds license violations along
//! its edges and measures how far AGPL-caused ones reach, and [`report`]
//! renders the results.
//!
//! ```
//! use depcompat::{
//!     direct_incompatibilities, CompatibilityMatrix, DependencyEdge, DependencyGraph, Ecosystem,
//!     LicenseExpr, PackageNode,
//! };
//!
//! let graph = DependencyGraph::build(
//!     [
//!         PackageNode::new("app", "app", Ecosystem::Npm, LicenseExpr::parse("MIT")),
//!         PackageNode::new("lib", "lib", Ecosystem::Npm, LicenseExpr::parse("AGPL-3.0")),
//!     ],
//!     [DependencyEdge::new("app", "lib")],
//! )
//! .unwrap();
//! let violations = direct_incompatibilities(&graph, &CompatibilityMatrix::seed());
//! assert_eq!(violations.len(), 1);
//! assert_eq!(violations.ratio().percent(1), "100.0%");
//! ```

pub mod analysis;
pub mod fraction;
pub mod graph;
pub mod ingest;
pub mod license;
pub mod matrix;
pub mod report;

pub use analysis::{
    agpl_impact, agpl_incompatibilities, direct_incompatibilities, license_frequencies, pagerank,
    top_impact_violators, FrequencyTable, ImpactResult, ViolationRecord, Violations,
};
pub use fraction::Fraction;
pub use graph::{
    DependencyEdge, DependencyGraph, DependencyKinds, Ecosystem, GraphError, PackageKey,
    PackageNode, VersionEdge,
};
pub use license::{
    classify, is_agpl_family, parse_license_field, LicenseCategory, LicenseExpr, LicenseId,
};
pub use matrix::{CompatibilityMatrix, RulesError};
pub use report::{EcosystemStats, OutputFormat, StatsCounts};

/// PageRank settings in double precision.
pub type PageRankConfig = analysis::PageRankConfig<f64>;
/// PageRank settings in single precision.
pub type PageRankConfig32 = analysis::PageRankConfig<f32>;
/// PageRank result in double precision.
pub type PageRank = analysis::PageRank<f64>;
/// PageRank result in single precision.
pub type PageRank32 = analysis::PageRank<f32>;
