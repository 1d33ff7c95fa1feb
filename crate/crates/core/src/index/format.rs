//! On-disk layout (all integers little-endian):
//!
//! ```text
//! "SPIX"            4 bytes magic
//! version           u32 (= 1)
//! vocab_size        u32
//! num_docs          u32
//! quantization_bits u32
//! global_scale      f64
//! block_length      u32
//! doc ids           num_docs × u64, by ordinal
//! num_lists         u32, non-empty lists only
//! per list, ascending term:
//!   term            u32
//!   count           u32
//!   max_impact      u16
//!   gap_bytes       u32
//!   gaps            gap_bytes bytes: first ordinal, then gaps, variable-byte
//!   impacts         count × u8 when bits <= 8, else count × u16
//!   num_blocks      u32
//!   blocks          num_blocks × (last_doc u32, max_impact u16)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BlockMax, IndexMeta, InvertedIndex, PostingsList};
use crate::codec::{self, read_f64, read_u16, read_u32, read_u64, read_u8};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPIX";
const VERSION: u32 = 1;
const KIND: &str = "index";

fn bad(message: impl Into<String>) -> Error {
    Error::format(KIND, message)
}

impl InvertedIndex {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let m = &self.meta;
        codec::write_header(w, MAGIC, VERSION)?;
        codec::write_u32(w, m.vocab_size)?;
        codec::write_u32(w, m.num_docs)?;
        codec::write_u32(w, u32::from(m.quantization_bits))?;
        codec::write_f64(w, m.global_scale)?;
        codec::write_u32(w, m.block_length)?;
        for &id in &self.doc_ids {
            codec::write_u64(w, id)?;
        }
        codec::write_u32(w, self.lists().count() as u32)?;
        let narrow = m.quantization_bits <= 8;
        for list in self.lists() {
            codec::write_u32(w, list.term)?;
            codec::write_u32(w, list.len() as u32)?;
            codec::write_u16(w, list.max_impact)?;
            let gaps = codec::encode_deltas(&list.docs);
            codec::write_u32(w, gaps.len() as u32)?;
            w.write_all(&gaps)?;
            for &imp in &list.impacts {
                if narrow {
                    w.write_all(&[imp as u8])?;
                } else {
                    codec::write_u16(w, imp)?;
                }
            }
            codec::write_u32(w, list.blocks.len() as u32)?;
            for b in &list.blocks {
                codec::write_u32(w, b.last_doc)?;
                codec::write_u16(w, b.max_impact)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        codec::read_header(r, KIND, MAGIC, VERSION)?;
        let vocab_size = read_u32(r, KIND)?;
        let num_docs = read_u32(r, KIND)?;
        let bits = read_u32(r, KIND)?;
        if !(1..=16).contains(&bits) {
            return Err(bad(format!("quantization bits {bits} out of range")));
        }
        let bits = bits as u8;
        let global_scale = read_f64(r, KIND)?;
        if !(global_scale.is_finite() && global_scale > 0.0) {
            return Err(bad("global scale must be positive"));
        }
        let block_length = read_u32(r, KIND)?;
        if block_length == 0 {
            return Err(bad("block length must be positive"));
        }
        let doc_ids = (0..num_docs)
            .map(|_| read_u64(r, KIND))
            .collect::<Result<Vec<_>>>()?;
        if doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("doc ids must be strictly increasing"));
        }
        let meta = IndexMeta {
            vocab_size,
            num_docs,
            quantization_bits: bits,
            global_scale,
            block_length,
        };
        let levels = meta.levels();

        let mut lists: Vec<PostingsList> = (0..vocab_size)
            .map(|t| PostingsList {
                term: t,
                ..Default::default()
            })
            .collect();
        let num_lists = read_u32(r, KIND)?;
        let mut prev_term: Option<u32> = None;
        for _ in 0..num_lists {
            let term = read_u32(r, KIND)?;
            if term >= vocab_size || prev_term.is_some_and(|p| p >= term) {
                return Err(bad(format!("term {term} out of order or range")));
            }
            prev_term = Some(term);
            let count = read_u32(r, KIND)? as usize;
            if count == 0 {
                return Err(bad("empty postings list stored"));
            }
            let max_impact = read_u16(r, KIND)?;
            let gap_bytes = read_u32(r, KIND)? as usize;
            let mut gaps = vec![0u8; gap_bytes];
            r.read_exact(&mut gaps)
                .map_err(|_| bad("truncated postings"))?;
            let docs = codec::decode_deltas(&gaps, count)?;
            if docs.last().is_some_and(|&d| d >= num_docs) {
                return Err(bad("doc ordinal out of range"));
            }
            let impacts = (0..count)
                .map(|_| {
                    if bits <= 8 {
                        read_u8(r, KIND).map(u16::from)
                    } else {
                        read_u16(r, KIND)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if impacts.iter().any(|&i| i == 0 || u32::from(i) > levels) {
                return Err(bad("impact outside quantization range"));
            }
            let num_blocks = read_u32(r, KIND)? as usize;
            let blocks = (0..num_blocks)
                .map(|_| {
                    Ok(BlockMax {
                        last_doc: read_u32(r, KIND)?,
                        max_impact: read_u16(r, KIND)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let list = PostingsList::new(term, docs, impacts, block_length as usize);
            if list.blocks != blocks || list.max_impact != max_impact {
                return Err(bad(format!(
                    "block-max table of term {term} is inconsistent"
                )));
            }
            lists[term as usize] = list;
        }
        codec::expect_eof(r, KIND)?;
        Ok(InvertedIndex {
            meta,
            doc_ids,
            lists,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let run = || -> Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            self.write_to(&mut w)?;
            w.flush()?;
            Ok(())
        };
        run().map_err(|e| e.at_path(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let run = || -> Result<Self> {
            let mut r = BufReader::new(File::open(path)?);
            InvertedIndex::read_from(&mut r)
        };
        run().map_err(|e| e.at_path(path))
    }
}
