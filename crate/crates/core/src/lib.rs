//! Sparse candidate generation for late-interaction retrieval.
//!
//! A small residual adapter maps frozen token embeddings to vocabulary
//! logits. Max pooling and top-k pruning turn those into sparse vectors that
//! an impact-ordered inverted index serves with block-max WAND or MaxScore.
//! The candidates are re-ranked exactly with MaxSim, which also acts as the
//! teacher the adapter is distilled from.
//!
//! The guide in `book/` walks through each stage; its snippets run as doc
//! tests of this crate.

pub mod codec;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod formats;
pub mod head;
pub mod index;
pub mod late_interaction;
pub mod numerics;
pub mod ranking;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/adapter.md")]
    mod adapter {}
    #[doc = include_str!("../../../book/src/pooling.md")]
    mod pooling {}
    #[doc = include_str!("../../../book/src/index.md")]
    mod index {}
    #[doc = include_str!("../../../book/src/late_interaction.md")]
    mod late_interaction {}
    #[doc = include_str!("../../../book/src/distillation.md")]
    mod distillation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
