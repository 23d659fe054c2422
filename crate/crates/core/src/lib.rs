//! Embedding nearly-spanning bounded-degree trees in expanding sparse graphs.
//!
//! The crate turns a constructive embedding argument into runnable code:
//!
//! * [`graph`], [`vertex_set`]: simple undirected graphs and vertex subsets;
//! * [`tree`], [`cut`]: rooted bounded-degree trees, random and special
//!   families, and cutting a tree into ordered pieces of controlled size;
//! * [`spectral`]: second eigenvalue of regular graphs and the expander
//!   mixing bound;
//! * [`expansion`]: exact and sampled `(α, c)`-expansion checks;
//! * [`splitter`]: splitting the vertex set into classes that every vertex
//!   sees many neighbors of;
//! * [`embed`]: rooted tree embedding by backtracking, and validation;
//! * [`pipeline`]: the piece-by-piece nearly-spanning embedding, core
//!   extraction for random graphs, and premise calculators;
//! * [`generators`], [`harness`]: random hosts and seeded experiments.
//!
//! ```
//! use treespan::{embed_nearly_spanning, gnp, random_bounded_degree_tree, verify_embedding};
//! use treespan::{EmbedBudget, RngStream};
//!
//! let g = gnp(500, 30.0 / 500.0, RngStream::new(1, 0)).unwrap();
//! let t = random_bounded_degree_tree(300, 3, 1).unwrap();
//! let run = embed_nearly_spanning(&g, &t, 0.4, 1, &EmbedBudget::default()).unwrap();
//! let e = run.embedding.expect("dense enough to succeed");
//! assert!(verify_embedding(&g, &t, &e).valid);
//! ```

pub mod cut;
pub mod embed;
pub mod error;
pub mod expansion;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod pipeline;
pub mod rng;
pub mod spectral;
pub mod splitter;
pub mod tree;
pub mod vertex_set;

pub use cut::{cut_once, partition_tree, TreeCut, TreePartition, TreePiece};
pub use embed::{embed_rooted_tree, verify_embedding, CandidateRule, EmbedBudget, Embedding, NodeOrder};
pub use error::{Error, Result};
pub use expansion::{fp_condition_exact, refute_expander_sampled, verify_expander_exact, ExpansionVerdict, Verdict};
pub use generators::{gnp, random_regular};
pub use graph::{Graph, InducedSubgraph};
pub use harness::{run_experiment, sweep, ExperimentConfig, HostModel, TrialReport};
pub use pipeline::{check_th1_premises, embed_nearly_spanning, extract_core, theorem1_edge_density, PipelineRun};
pub use rng::RngStream;
pub use spectral::{mixing_bound_audit, second_eigenvalue, SpectralOptions, SpectralProfile};
pub use splitter::{check_l44_premise, split_degrees, DegreeSplit};
pub use tree::{make_special_tree, random_bounded_degree_tree, RootedTree, TreeKind};
pub use vertex_set::VertexSet;

// The guide's code blocks compile and run as doc tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/splitting.md")]
    mod splitting {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
