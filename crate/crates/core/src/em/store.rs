use crate::treap::Key;

pub type BlockId = u32;

/// One disk block.
///
/// `keys` and `children` form an ordinary B-tree node. A block may also host
/// the keys of a small tier component (`guests`) and links to the root
/// blocks of lower-tier components hanging below it (`glue`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Block {
    pub keys: Vec<Key>,
    pub children: Vec<BlockId>,
    pub guests: Vec<Key>,
    pub glue: Vec<BlockId>,
    pub tier: i32,
}

impl Block {
    pub fn leaf(keys: Vec<Key>, tier: i32) -> Self {
        Block { keys, tier, ..Block::default() }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Keys stored in the block, B-tree keys and guests together.
    pub fn occupancy(&self) -> usize {
        self.keys.len() + self.guests.len()
    }
}

/// Snapshot of a store's I/O counter and occupancy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmReport {
    pub io_touches: u64,
    pub block_count: usize,
    /// `occupancy[k]` is the number of live blocks holding `k` keys.
    pub occupancy: Vec<usize>,
}

/// Arena of blocks with an I/O counter.
///
/// Work is grouped into operations: between [`BlockStore::begin_op`] and
/// [`BlockStore::end_op`] each distinct block touched counts once.
#[derive(Clone, Debug)]
pub struct BlockStore {
    b: usize,
    blocks: Vec<Block>,
    live: Vec<bool>,
    free: Vec<BlockId>,
    stamp: Vec<u64>,
    op: u64,
    op_touches: u64,
    io_touches: u64,
}

impl BlockStore {
    pub fn new(b: usize) -> Self {
        BlockStore {
            b,
            blocks: Vec::new(),
            live: Vec::new(),
            free: Vec::new(),
            stamp: Vec::new(),
            op: 1,
            op_touches: 0,
            io_touches: 0,
        }
    }

    pub fn branching(&self) -> usize {
        self.b
    }

    /// Maximum number of keys a block holds.
    pub fn capacity(&self) -> usize {
        self.b - 1
    }

    pub fn alloc(&mut self, block: Block) -> BlockId {
        debug_assert!(block.occupancy() <= self.capacity());
        if let Some(id) = self.free.pop() {
            self.blocks[id as usize] = block;
            self.live[id as usize] = true;
            id
        } else {
            self.blocks.push(block);
            self.live.push(true);
            self.stamp.push(0);
            (self.blocks.len() - 1) as BlockId
        }
    }

    /// Drops every block but keeps the I/O counter.
    pub fn clear(&mut self) {
        self.blocks.clear();
        self.live.clear();
        self.free.clear();
        self.stamp.clear();
    }

    pub fn release(&mut self, id: BlockId) {
        debug_assert!(self.live[id as usize]);
        self.live[id as usize] = false;
        self.blocks[id as usize] = Block::default();
        self.free.push(id);
    }

    pub fn get(&self, id: BlockId) -> &Block {
        &self.blocks[id as usize]
    }

    pub fn get_mut(&mut self, id: BlockId) -> &mut Block {
        &mut self.blocks[id as usize]
    }

    pub fn is_live(&self, id: BlockId) -> bool {
        self.live.get(id as usize).copied().unwrap_or(false)
    }

    pub fn begin_op(&mut self) {
        self.op += 1;
        self.op_touches = 0;
    }

    /// Charges `id` unless it was already charged in this operation.
    pub fn touch(&mut self, id: BlockId) {
        let s = &mut self.stamp[id as usize];
        if *s != self.op {
            *s = self.op;
            self.op_touches += 1;
            self.io_touches += 1;
        }
    }

    /// Ends the operation and returns its distinct-block count.
    pub fn end_op(&mut self) -> u64 {
        let t = self.op_touches;
        self.op += 1;
        self.op_touches = 0;
        t
    }

    pub fn io_touches(&self) -> u64 {
        self.io_touches
    }

    pub fn reset_io(&mut self) {
        self.io_touches = 0;
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len() - self.free.len()
    }

    pub fn live_ids(&self) -> impl Iterator<Item = BlockId> + '_ {
        (0..self.blocks.len()).filter(|&i| self.live[i]).map(|i| i as BlockId)
    }

    pub fn report(&self) -> EmReport {
        let mut occupancy = vec![0; self.b];
        for id in self.live_ids() {
            let k = self.get(id).occupancy().min(self.b - 1);
            occupancy[k] += 1;
        }
        EmReport { io_touches: self.io_touches, block_count: self.block_count(), occupancy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_store_reports_zeros() {
        let s = BlockStore::new(4);
        let r = s.report();
        assert_eq!((r.io_touches, r.block_count), (0, 0));
        assert!(r.occupancy.iter().all(|&c| c == 0));
    }

    #[test]
    fn touches_count_distinct_blocks_per_op() {
        let mut s = BlockStore::new(4);
        let a = s.alloc(Block::leaf(vec![1], 0));
        let b = s.alloc(Block::leaf(vec![2, 3], 0));
        s.begin_op();
        s.touch(a);
        s.touch(a);
        s.touch(b);
        assert_eq!(s.end_op(), 2);
        s.begin_op();
        s.touch(a);
        assert_eq!(s.end_op(), 1);
        assert_eq!(s.io_touches(), 3);
        let r = s.report();
        assert_eq!(r.occupancy[1], 1);
        assert_eq!(r.occupancy[2], 1);
    }

    #[test]
    fn released_blocks_are_reused() {
        let mut s = BlockStore::new(4);
        let a = s.alloc(Block::leaf(vec![1], 0));
        s.release(a);
        assert_eq!(s.block_count(), 0);
        assert!(!s.is_live(a));
        let b = s.alloc(Block::leaf(vec![5], 1));
        assert_eq!(a, b);
        assert_eq!(s.get(b).tier, 1);
    }
}
