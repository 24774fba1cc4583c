use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{ArchiveMap, ChannelStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub block_id: usize,
    pub stream_id: usize,
    pub start_sample: u64,
    pub length: u64,
}

impl Block {
    pub fn end_sample(&self) -> u64 {
        self.start_sample + self.length
    }
}

/// Overlapping blocks over one stream. Starts advance by `block_len - overlap`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub stream_id: usize,
    pub block_len: u64,
    pub overlap: u64,
    pub blocks: Vec<Block>,
}

impl BlockPlan {
    pub fn stride(&self) -> u64 {
        self.block_len - self.overlap
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("overlap {overlap} must be smaller than block length {block_len}")]
    BadGeometry { block_len: u64, overlap: u64 },
}

/// Cuts a stream into blocks of `block_len` samples overlapping by `overlap`.
///
/// A block starts at every multiple of the stride below the stream end;
/// blocks are clamped to the stream, so the last may be short. A stream
/// no longer than one block yields exactly one block.
pub fn plan_blocks(stream: &ChannelStream, block_len: u64, overlap: u64) -> Result<BlockPlan, PlanError> {
    if block_len == 0 || overlap >= block_len {
        return Err(PlanError::BadGeometry { block_len, overlap });
    }
    let total = stream.total_virtual_samples;
    let stride = block_len - overlap;
    let mut blocks = Vec::new();
    if total > 0 && total <= block_len {
        blocks.push(Block { block_id: 0, stream_id: stream.stream_id, start_sample: 0, length: total });
    } else {
        let mut start = 0;
        while start < total {
            let length = block_len.min(total - start);
            blocks.push(Block { block_id: blocks.len(), stream_id: stream.stream_id, start_sample: start, length });
            start += stride;
        }
    }
    Ok(BlockPlan { stream_id: stream.stream_id, block_len, overlap, blocks })
}

/// Plans every stream with lengths given in seconds, numbering blocks
/// densely across the whole archive in stream order.
pub fn plan_archive(map: &ArchiveMap, block_len_s: f64, overlap_s: f64) -> Result<Vec<BlockPlan>, PlanError> {
    let mut next_id = 0;
    let mut plans = Vec::with_capacity(map.streams.len());
    for stream in &map.streams {
        let rate = stream.sample_rate as f64;
        let block_len = (block_len_s * rate).round().max(0.0) as u64;
        let overlap = (overlap_s * rate).round().max(0.0) as u64;
        let mut plan = plan_blocks(stream, block_len, overlap)?;
        for b in &mut plan.blocks {
            b.block_id = next_id;
            next_id += 1;
        }
        plans.push(plan);
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(total: u64) -> ChannelStream {
        let mut s = ChannelStream::empty(0, 1000);
        s.total_virtual_samples = total;
        s
    }

    fn starts(p: &BlockPlan) -> Vec<(u64, u64)> {
        p.blocks.iter().map(|b| (b.start_sample, b.length)).collect()
    }

    #[test]
    fn worked_examples() {
        let p = plan_blocks(&stream(10_000), 4000, 1000).unwrap();
        assert_eq!(starts(&p), vec![(0, 4000), (3000, 4000), (6000, 4000), (9000, 1000)]);
        let p = plan_blocks(&stream(2500), 4000, 1000).unwrap();
        assert_eq!(starts(&p), vec![(0, 2500)]);
        let p = plan_blocks(&stream(8000), 4000, 0).unwrap();
        assert_eq!(starts(&p), vec![(0, 4000), (4000, 4000)]);
        assert!(plan_blocks(&stream(0), 10, 2).unwrap().blocks.is_empty());
    }

    #[test]
    fn bad_geometry() {
        assert_eq!(plan_blocks(&stream(10), 4, 4).unwrap_err(), PlanError::BadGeometry { block_len: 4, overlap: 4 });
        assert!(plan_blocks(&stream(10), 0, 0).is_err());
    }

    #[test]
    fn archive_plan_numbers_blocks_densely() {
        let mut a = stream(5000);
        a.stream_id = 0;
        let mut b = stream(3000);
        b.stream_id = 1;
        let map = ArchiveMap::new("/".into(), vec![a, b], Vec::new());
        let plans = plan_archive(&map, 2.0, 0.5).unwrap();
        let ids: Vec<usize> = plans.iter().flat_map(|p| p.blocks.iter().map(|b| b.block_id)).collect();
        assert_eq!(ids, (0..ids.len()).collect::<Vec<_>>());
        assert_eq!(plans[1].blocks[0].stream_id, 1);
        assert_eq!(plans[0].block_len, 2000);
    }

    proptest! {
        #[test]
        fn coverage_by_brute_force(total in 0u64..3000, block_len in 1u64..500, frac in 0.0f64..1.0) {
            let overlap = ((block_len - 1) as f64 * frac) as u64;
            let p = plan_blocks(&stream(total), block_len, overlap).unwrap();
            let mut count = vec![0u32; total as usize];
            for b in &p.blocks {
                prop_assert!(b.length > 0 && b.end_sample() <= total);
                for c in &mut count[b.start_sample as usize..b.end_sample() as usize] {
                    *c += 1;
                }
            }
            prop_assert!(count.iter().all(|&c| c >= 1));
            for (i, w) in p.blocks.windows(2).enumerate() {
                prop_assert_eq!(w[1].start_sample - w[0].start_sample, block_len - overlap);
                prop_assert_eq!(w[0].block_id, i);
            }
            // With overlap at most half a block, overlap zones are covered exactly twice.
            if 2 * overlap <= block_len && total > block_len {
                for w in p.blocks.windows(2) {
                    let shared = w[1].start_sample..w[0].end_sample();
                    for s in shared {
                        prop_assert_eq!(count[s as usize], 2);
                    }
                }
            }
        }
    }
}
