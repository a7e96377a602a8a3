//! Analysis engines over one ecosystem's dependency network: license
//! frequencies, direct and AGPL-caused incompatibilities, transitive impact
//! of AGPL violations, and PageRank centrality.

mod frequencies;
mod impact;
mod pagerank;
mod violations;

pub use frequencies::{license_frequencies, FrequencyTable};
pub use impact::{agpl_impact, top_impact_violators, ImpactResult};
pub use pagerank::{pagerank, PageRank, PageRankConfig, PageRankError};
pub use violations::{
    agpl_incompatibilities, direct_incompatibilities, ViolationRecord, Violations,
};
