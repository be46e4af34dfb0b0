//! Tree-structured neural machine translation with a top-down, left-to-right
//! dependency decoder.
//!
//! The crate is organized around the pipeline:
//!
//! - [`deptree`]: dependency-tree data model, projectivity validation and
//!   corpus file I/O.
//! - [`transition`]: the tree ↔ action-sequence transition machine (oracle,
//!   executor, stack updates, output legality).
//! - [`vocab`]: a single joint symbol table over subwords, PoS tags, empty
//!   symbols and specials, enabling three-way weight tying.
//! - [`nncore`]: dense tensors with reverse-mode differentiation, LSTM cells
//!   with per-gate layer normalization and variational dropout, and additive
//!   multi-head attention.
//! - [`encoder`], [`decoder_topdown`], [`decoder_baseline`]: the bidirectional
//!   encoder and the two decoder arms (tree-generating and plain sequence).
//! - [`training`]: label-smoothed loss, Adam with warmup schedule, delayed
//!   update and checkpointing.
//! - [`evalx`]: tokenized corpus BLEU, binned reports, synthetic corpora and
//!   the length-generalization comparison harness.

pub mod decoder_baseline;
pub mod decoder_topdown;
pub mod deptree;
pub mod encoder;
pub mod evalx;
pub mod nncore;
pub mod training;
pub mod transition;
pub mod vocab;

pub use deptree::{DepTree, SentencePair, Token};
pub use transition::{ActionKind, ActionStack, Executor, Symbol, TransitionSequence, TransitionStep};
pub use vocab::JointVocab;
