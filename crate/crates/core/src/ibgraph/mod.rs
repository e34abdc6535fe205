//! Encoder/decoder graph specifications compiled into variational
//! bottleneck losses.

mod compile;
mod dynamics;
mod parse;
mod terms;
mod train;

pub use compile::{compile_loss, ArchConfig, CompiledLoss, LossValues, NodeData};
pub use dynamics::{run_dynamics, DynamicsConfig, DynamicsReport, DYNAMICS_GRAPH};
pub use parse::{parse_graph, Edge, LossGraphSpec, NodeKind};
pub use terms::{classify_terms, term_multiset, LossTerm, TermKind};
pub use train::{evaluate_split, select_rows, train_composite, CompositeConfig, CompositeRecord, EpochStats, COLLAPSE_THRESHOLD};
