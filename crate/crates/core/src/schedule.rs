use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Semi-autoregressive partition of the generation span into fixed-size blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    block_size: usize,
    gen_len: usize,
}

impl BlockSchedule {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn gen_len(&self) -> usize {
        self.gen_len
    }

    pub fn len(&self) -> usize {
        self.gen_len.div_ceil(self.block_size)
    }

    pub fn is_empty(&self) -> bool {
        self.gen_len == 0
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.gen_len)
            .step_by(self.block_size)
            .map(|start| start..(start + self.block_size).min(self.gen_len))
    }
}

/// Build the block schedule for a generation of length `gen_len`.
///
/// Zero arguments are clamped to 1; a block size larger than the generation
/// yields a single block.
pub fn make_schedule(gen_len: usize, block_size: usize) -> BlockSchedule {
    BlockSchedule {
        block_size: block_size.max(1),
        gen_len: gen_len.max(1),
    }
}
