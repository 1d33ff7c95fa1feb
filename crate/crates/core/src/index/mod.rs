//! Impact-quantized inverted index over sparse document vectors, with an
//! exhaustive scorer and two safe dynamic-pruning top-k algorithms
//! (block-max WAND and MaxScore).
//!
//! Documents get internal ordinals in ascending external-id order, so the
//! ordinal order and the external tie order agree. Scores are accumulated as
//! integers (`query impact × document impact`) and decoded only for
//! reporting, which makes all three algorithms agree exactly.

mod bmw;
mod cursor;
mod exhaustive;
mod format;
mod maxscore;
mod topk;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use bmw::retrieve_bmw;
pub use exhaustive::retrieve_exhaustive;
pub use maxscore::retrieve_maxscore;

use crate::error::{Error, Result};
use crate::head::SparseVector;
use crate::ranking::RankedList;

pub const DEFAULT_QUANTIZATION_BITS: u8 = 8;
pub const DEFAULT_BLOCK_LENGTH: usize = 64;

/// Index-wide parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexMeta {
    pub vocab_size: u32,
    pub num_docs: u32,
    pub quantization_bits: u8,
    /// Real weight represented by one quantization step.
    pub global_scale: f64,
    pub block_length: u32,
}

impl IndexMeta {
    pub fn levels(&self) -> u32 {
        quantization_levels(self.quantization_bits)
    }
}

/// Per-block summary used for skipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMax {
    pub last_doc: u32,
    pub max_impact: u16,
}

/// Postings of one term: ascending doc ordinals with quantized impacts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PostingsList {
    term: u32,
    docs: Vec<u32>,
    impacts: Vec<u16>,
    max_impact: u16,
    blocks: Vec<BlockMax>,
}

impl PostingsList {
    fn new(term: u32, docs: Vec<u32>, impacts: Vec<u16>, block_length: usize) -> Self {
        let max_impact = impacts.iter().copied().max().unwrap_or(0);
        let blocks = docs
            .chunks(block_length)
            .zip(impacts.chunks(block_length))
            .map(|(d, i)| BlockMax {
                last_doc: *d.last().expect("non-empty chunk"),
                max_impact: i.iter().copied().max().expect("non-empty chunk"),
            })
            .collect();
        PostingsList {
            term,
            docs,
            impacts,
            max_impact,
            blocks,
        }
    }

    pub fn term(&self) -> u32 {
        self.term
    }

    pub fn docs(&self) -> &[u32] {
        &self.docs
    }

    pub fn impacts(&self) -> &[u16] {
        &self.impacts
    }

    pub fn max_impact(&self) -> u16 {
        self.max_impact
    }

    pub fn blocks(&self) -> &[BlockMax] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Counters reported by every retrieval algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RetrievalStats {
    /// Postings in the lists of the query's terms; what exhaustive scoring reads.
    pub postings_total: usize,
    /// Postings whose impact was actually read and accumulated.
    pub postings_scored: usize,
    /// Documents fully or partially scored.
    pub docs_scored: usize,
}

impl RetrievalStats {
    pub fn postings_skipped(&self) -> usize {
        self.postings_total - self.postings_scored
    }
}

/// Top-k strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    Exhaustive,
    #[default]
    BlockMaxWand,
    MaxScore,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Algorithm::Exhaustive),
            "bmw" => Ok(Algorithm::BlockMaxWand),
            "maxscore" => Ok(Algorithm::MaxScore),
            other => Err(Error::Usage(format!(
                "unknown algorithm {other:?}; expected exhaustive, bmw or maxscore"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::BlockMaxWand => "bmw",
            Algorithm::MaxScore => "maxscore",
        })
    }
}

pub fn quantization_levels(bits: u8) -> u32 {
    (1u32 << bits) - 1
}

/// Linear quantization `ceil(weight / scale)`, clamped to `[1, levels]`.
pub fn quantize(weight: f64, scale: f64, levels: u32) -> u16 {
    let q = (weight / scale).ceil();
    q.clamp(1.0, f64::from(levels)) as u16
}

/// A query quantized with its own scale, using the same scheme as the index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedQuery {
    pub terms: Vec<(u32, u16)>,
    pub scale: f64,
}

impl QuantizedQuery {
    pub fn new(query: &SparseVector, bits: u8) -> Self {
        let max = query.max_weight();
        if max <= 0.0 {
            return QuantizedQuery {
                terms: Vec::new(),
                scale: 1.0,
            };
        }
        let levels = quantization_levels(bits);
        let scale = max / f64::from(levels);
        QuantizedQuery {
            terms: query
                .entries()
                .iter()
                .map(|&(t, w)| (t, quantize(w, scale, levels)))
                .collect(),
            scale,
        }
    }
}

/// Build options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub quantization_bits: u8,
    pub block_length: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            quantization_bits: DEFAULT_QUANTIZATION_BITS,
            block_length: DEFAULT_BLOCK_LENGTH,
        }
    }
}

/// Immutable inverted index.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    meta: IndexMeta,
    doc_ids: Vec<u64>,
    lists: Vec<PostingsList>,
}

impl InvertedIndex {
    /// Quantizes and inverts `docs`. The scale is `max_weight / (2^bits − 1)`.
    pub fn build(
        docs: &BTreeMap<u64, SparseVector>,
        vocab_size: usize,
        options: BuildOptions,
    ) -> Result<Self> {
        let BuildOptions {
            quantization_bits: bits,
            block_length,
        } = options;
        if !(1..=16).contains(&bits) {
            return Err(Error::validation("quantization bits must be in [1, 16]"));
        }
        if block_length == 0 || block_length > u32::MAX as usize {
            return Err(Error::validation("block length must be positive"));
        }
        if docs.is_empty() {
            return Err(Error::validation("cannot index an empty corpus"));
        }
        if docs.len() >= u32::MAX as usize || vocab_size > u32::MAX as usize {
            return Err(Error::validation("corpus or vocabulary too large"));
        }
        let max_weight = docs
            .values()
            .map(SparseVector::max_weight)
            .fold(0.0, f64::max);
        if max_weight <= 0.0 {
            return Err(Error::validation(
                "every document vector is empty (max weight is zero)",
            ));
        }
        let levels = quantization_levels(bits);
        let global_scale = max_weight / f64::from(levels);

        let mut postings: Vec<(Vec<u32>, Vec<u16>)> = vec![Default::default(); vocab_size];
        for (ordinal, vector) in docs.values().enumerate() {
            for &(term, w) in vector.entries() {
                let slot = postings.get_mut(term as usize).ok_or_else(|| {
                    Error::validation(format!(
                        "term {term} out of range for vocabulary of {vocab_size}"
                    ))
                })?;
                slot.0.push(ordinal as u32);
                slot.1.push(quantize(w, global_scale, levels));
            }
        }
        let lists = postings
            .into_iter()
            .enumerate()
            .map(|(t, (d, i))| PostingsList::new(t as u32, d, i, block_length))
            .collect();
        Ok(InvertedIndex {
            meta: IndexMeta {
                vocab_size: vocab_size as u32,
                num_docs: docs.len() as u32,
                quantization_bits: bits,
                global_scale,
                block_length: block_length as u32,
            },
            doc_ids: docs.keys().copied().collect(),
            lists,
        })
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// External ids by ordinal.
    pub fn doc_ids(&self) -> &[u64] {
        &self.doc_ids
    }

    pub fn postings(&self, term: u32) -> Option<&PostingsList> {
        self.lists.get(term as usize).filter(|l| !l.is_empty())
    }

    pub fn lists(&self) -> impl Iterator<Item = &PostingsList> {
        self.lists.iter().filter(|l| !l.is_empty())
    }

    pub fn total_postings(&self) -> usize {
        self.lists.iter().map(PostingsList::len).sum()
    }

    /// Dequantized weights of one document, for inspection and tests.
    pub fn decoded_document(&self, ordinal: u32) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        for list in self.lists() {
            if let Ok(pos) = list.docs.binary_search(&ordinal) {
                out.push((
                    list.term,
                    f64::from(list.impacts[pos]) * self.meta.global_scale,
                ));
            }
        }
        out
    }

    pub fn quantize_query(&self, query: &SparseVector) -> QuantizedQuery {
        QuantizedQuery::new(query, self.meta.quantization_bits)
    }

    /// Converts accumulated `(ordinal, integer score)` pairs into a ranked
    /// list with decoded scores.
    fn finish(&self, mut hits: Vec<(u32, u64)>, query: &QuantizedQuery) -> RankedList {
        hits.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let factor = query.scale * self.meta.global_scale;
        let entries = hits
            .into_iter()
            .map(|(ord, s)| (self.doc_ids[ord as usize], s as f64 * factor))
            .collect();
        RankedList::new(entries).expect("integer scores sort consistently")
    }

    /// Top-`k` documents for `query` with the chosen strategy.
    pub fn retrieve(
        &self,
        query: &SparseVector,
        k: usize,
        algorithm: Algorithm,
    ) -> (RankedList, RetrievalStats) {
        match algorithm {
            Algorithm::Exhaustive => retrieve_exhaustive(self, query, k),
            Algorithm::BlockMaxWand => retrieve_bmw(self, query, k),
            Algorithm::MaxScore => retrieve_maxscore(self, query, k),
        }
    }
}

/// Convenience wrapper around [`InvertedIndex::build`].
pub fn build_index(
    docs: &BTreeMap<u64, SparseVector>,
    vocab_size: usize,
    bits: u8,
    block_length: usize,
) -> Result<InvertedIndex> {
    InvertedIndex::build(
        docs,
        vocab_size,
        BuildOptions {
            quantization_bits: bits,
            block_length,
        },
    )
}
