use super::{InvertedIndex, PostingsList, QuantizedQuery};

pub(crate) const END: u32 = u32::MAX;

/// Position in one postings list, weighted by the query impact of its term.
pub(crate) struct Cursor<'a> {
    list: &'a PostingsList,
    block_length: usize,
    pos: usize,
    weight: u64,
    /// `weight × max_impact`, an upper bound on any contribution.
    pub(crate) max_score: u64,
}

impl<'a> Cursor<'a> {
    #[inline]
    pub(crate) fn doc(&self) -> u32 {
        self.list.docs.get(self.pos).copied().unwrap_or(END)
    }

    #[inline]
    pub(crate) fn is_exhausted(&self) -> bool {
        self.pos >= self.list.docs.len()
    }

    /// Contribution of the current posting. Counted as one scored posting.
    #[inline]
    pub(crate) fn score(&self, scored: &mut usize) -> u64 {
        *scored += 1;
        self.weight * u64::from(self.list.impacts[self.pos])
    }

    #[inline]
    pub(crate) fn next(&mut self) {
        self.pos += 1;
    }

    /// Moves to the first posting with doc `>= target`, skipping whole
    /// blocks through the block-max table.
    pub(crate) fn next_geq(&mut self, target: u32) {
        if self.doc() >= target {
            return;
        }
        let first_block = self.pos / self.block_length;
        let blocks = &self.list.blocks[first_block..];
        let b = first_block + blocks.partition_point(|bm| bm.last_doc < target);
        if b >= self.list.blocks.len() {
            self.pos = self.list.docs.len();
            return;
        }
        let start = self.pos.max(b * self.block_length);
        let end = ((b + 1) * self.block_length).min(self.list.docs.len());
        self.pos = start + self.list.docs[start..end].partition_point(|&d| d < target);
    }

    /// Upper bound on the contribution to any doc in `[target, last]`, where
    /// `last` is the end of the block holding the first posting `>= target`.
    /// Does not move the cursor. Returns `(0, END)` past the last block.
    pub(crate) fn block_bound(&self, target: u32) -> (u64, u32) {
        let first_block = (self.pos / self.block_length).min(self.list.blocks.len());
        let blocks = &self.list.blocks[first_block..];
        let b = first_block + blocks.partition_point(|bm| bm.last_doc < target);
        match self.list.blocks.get(b) {
            Some(bm) => (self.weight * u64::from(bm.max_impact), bm.last_doc),
            None => (0, END),
        }
    }
}

/// One cursor per query term that has postings, plus the total postings
/// across those lists.
pub(crate) fn open_cursors<'a>(
    index: &'a InvertedIndex,
    query: &QuantizedQuery,
) -> (Vec<Cursor<'a>>, usize) {
    let block_length = index.meta.block_length as usize;
    let mut total = 0;
    let cursors = query
        .terms
        .iter()
        .filter_map(|&(term, qimp)| {
            let list = index.postings(term)?;
            total += list.len();
            let weight = u64::from(qimp);
            Some(Cursor {
                list,
                block_length,
                pos: 0,
                weight,
                max_score: weight * u64::from(list.max_impact),
            })
        })
        .collect();
    (cursors, total)
}
