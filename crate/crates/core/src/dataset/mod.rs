//! Interaction ingestion, Gram matrix construction and strong-generalization splits.

mod gram;
mod interactions;
mod io;
mod split;

pub use gram::{gram, GramMatrix};
pub use interactions::InteractionMatrix;
pub use io::{
    load_interactions, read_manifest, read_split_dir, write_interactions, write_split_dir, IdIndex, IdMap,
    InputFormat, MANIFEST_FILE, SPLIT_PARTS,
};
pub use split::{split_strong_generalization, EvalSplit, HeldOutSet, SplitSpec};
