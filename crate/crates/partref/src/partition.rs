//! Refinable partition over states and the compound-block structure.
//!
//! The partition keeps all states in one array, each block owning a
//! contiguous interval; marking swaps an element into the marked prefix of
//! its block. Splitting carves the marked prefix into fresh blocks. All
//! operations are constant time per element touched.
//!
//! On top of the fine partition sits the [`CompoundTracker`]: it groups
//! blocks into compound blocks and keeps a worklist of compounds with at
//! least two subblocks. Selecting a subblock pops a compound, compares two
//! of its subblocks and takes the smaller one, so the selected subblock is
//! never more than half of its compound.

use std::collections::VecDeque;

use crate::grouping::{self, KeyedItem};

pub type StateId = u32;

/// Handle for a block of the fine partition. Handles of retired blocks are
/// never reused within one run, so stale references are detectable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BlockId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CompoundId(pub u32);

#[derive(Clone, Debug)]
struct BlockInfo {
    begin: u32,
    end: u32,
    marked: u32,
}

#[derive(Clone, Debug)]
pub struct RefinablePartition {
    elems: Vec<StateId>,
    location: Vec<u32>,
    block_of: Vec<BlockId>,
    blocks: Vec<BlockInfo>,
}

impl RefinablePartition {
    /// Builds the initial partition: states with equal keys share a block.
    /// Blocks are laid out in ascending key order.
    pub fn from_grouping<K: AsRef<[u8]>>(keys: &[K]) -> Self {
        let n = keys.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            keys[a as usize]
                .as_ref()
                .cmp(keys[b as usize].as_ref())
                .then(a.cmp(&b))
        });

        let mut part = RefinablePartition {
            elems: order,
            location: vec![0; n],
            block_of: vec![BlockId(0); n],
            blocks: Vec::new(),
        };
        let mut start = 0usize;
        for i in 0..n {
            if keys[part.elems[i] as usize].as_ref() != keys[part.elems[start] as usize].as_ref() {
                part.push_block(start as u32, i as u32);
                start = i;
            }
        }
        if n > 0 {
            part.push_block(start as u32, n as u32);
        }
        for (pos, &x) in part.elems.iter().enumerate() {
            part.location[x as usize] = pos as u32;
        }
        part
    }

    fn push_block(&mut self, begin: u32, end: u32) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.push(BlockInfo {
            begin,
            end,
            marked: 0,
        });
        for i in begin..end {
            self.block_of[self.elems[i as usize] as usize] = id;
        }
        id
    }

    pub fn num_states(&self) -> usize {
        self.elems.len()
    }

    /// Total number of block handles ever created (including retired ones).
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, x: StateId) -> BlockId {
        self.block_of[x as usize]
    }

    pub fn size(&self, b: BlockId) -> u32 {
        let info = &self.blocks[b.0 as usize];
        info.end - info.begin
    }

    pub fn is_retired(&self, b: BlockId) -> bool {
        self.size(b) == 0
    }

    pub fn elements(&self, b: BlockId) -> &[StateId] {
        let info = &self.blocks[b.0 as usize];
        &self.elems[info.begin as usize..info.end as usize]
    }

    pub fn marked_count(&self, b: BlockId) -> u32 {
        self.blocks[b.0 as usize].marked
    }

    pub fn is_marked(&self, x: StateId) -> bool {
        let info = &self.blocks[self.block_of[x as usize].0 as usize];
        self.location[x as usize] < info.begin + info.marked
    }

    pub fn live_blocks(&self) -> impl Iterator<Item = BlockId> + '_ {
        (0..self.blocks.len() as u32)
            .map(BlockId)
            .filter(|&b| !self.is_retired(b))
    }

    /// Dense per-state block assignment, for comparisons against other
    /// partition representations.
    pub fn block_assignment(&self) -> Vec<u32> {
        self.block_of.iter().map(|b| b.0).collect()
    }

    /// Swaps `x` into the marked prefix of its block.
    pub fn mark(&mut self, x: StateId) {
        debug_assert!(!self.is_marked(x), "element marked twice");
        let b = self.block_of[x as usize];
        let info = &mut self.blocks[b.0 as usize];
        let target = info.begin + info.marked;
        info.marked += 1;
        let pos = self.location[x as usize];
        let other = self.elems[target as usize];
        self.elems.swap(pos as usize, target as usize);
        self.location[x as usize] = target;
        self.location[other as usize] = pos;
    }

    /// Removes the marked elements of `b` and regroups them into fresh
    /// blocks, one per distinct key. `b` keeps its unmarked leftovers; if it
    /// has none it is retired. Returns the fresh block ids.
    pub fn split_marked_by_key<'k>(
        &mut self,
        b: BlockId,
        key: impl Fn(StateId) -> &'k [u8],
        comparisons: &mut u64,
    ) -> Vec<BlockId> {
        let (begin, marked) = {
            let info = &self.blocks[b.0 as usize];
            (info.begin, info.marked)
        };
        debug_assert!(marked >= 1, "split_marked_by_key on block without marks");

        // Keys were produced by the caller into one buffer per call; rebuild
        // the arena-backed items the grouper wants.
        let mut arena: Vec<u8> = Vec::new();
        let mut items: Vec<KeyedItem> = Vec::with_capacity(marked as usize);
        for i in begin..begin + marked {
            let x = self.elems[i as usize];
            let start = arena.len() as u32;
            arena.extend_from_slice(key(x));
            items.push(KeyedItem {
                id: x,
                key_start: start,
                key_end: arena.len() as u32,
            });
        }
        let groups = grouping::group_by_pmc(&mut items, &arena, comparisons);

        // Lay the regrouped elements back down over the marked prefix.
        for (offset, it) in items.iter().enumerate() {
            let pos = begin + offset as u32;
            self.elems[pos as usize] = it.id;
            self.location[it.id as usize] = pos;
        }
        let mut fresh = Vec::with_capacity(groups.len());
        for g in groups {
            let id = self.push_block(begin + g.start as u32, begin + g.end as u32);
            fresh.push(id);
        }
        let info = &mut self.blocks[b.0 as usize];
        info.begin += marked;
        info.marked = 0;
        fresh
    }

    /// Consistency check used by tests: intervals partition the state array
    /// and the location/block maps agree with it.
    pub fn check_consistent(&self) {
        let n = self.num_states();
        let mut seen = vec![false; n];
        for (pos, &x) in self.elems.iter().enumerate() {
            assert!(!seen[x as usize], "duplicate element");
            seen[x as usize] = true;
            assert_eq!(self.location[x as usize] as usize, pos);
        }
        let mut covered = 0u32;
        for (i, info) in self.blocks.iter().enumerate() {
            assert!(info.begin <= info.end);
            assert!(info.marked <= info.end - info.begin);
            covered += info.end - info.begin;
            for p in info.begin..info.end {
                assert_eq!(self.block_of[self.elems[p as usize] as usize].0, i as u32);
            }
        }
        assert_eq!(covered as usize, n);
    }
}

#[derive(Clone, Debug)]
struct Compound {
    members: Vec<BlockId>,
    size: u32,
    enqueued: bool,
}

/// Groups the blocks of a [`RefinablePartition`] into compound blocks and
/// keeps the worklist of compounds that still have at least two subblocks.
#[derive(Clone, Debug)]
pub struct CompoundTracker {
    compound_of: Vec<CompoundId>,
    member_idx: Vec<u32>,
    compounds: Vec<Compound>,
    worklist: VecDeque<CompoundId>,
}

impl CompoundTracker {
    /// One compound containing every block of the initial partition.
    pub fn new(partition: &RefinablePartition) -> Self {
        let blocks: Vec<BlockId> = partition.live_blocks().collect();
        let mut tracker = CompoundTracker {
            compound_of: vec![CompoundId(0); partition.num_blocks()],
            member_idx: vec![0; partition.num_blocks()],
            compounds: Vec::new(),
            worklist: VecDeque::new(),
        };
        if blocks.is_empty() {
            return tracker;
        }
        let size = blocks.iter().map(|&b| partition.size(b)).sum();
        for (i, &b) in blocks.iter().enumerate() {
            tracker.compound_of[b.0 as usize] = CompoundId(0);
            tracker.member_idx[b.0 as usize] = i as u32;
        }
        let enqueued = blocks.len() >= 2;
        tracker.compounds.push(Compound {
            members: blocks,
            size,
            enqueued,
        });
        if enqueued {
            tracker.worklist.push_back(CompoundId(0));
        }
        tracker
    }

    pub fn compound_of(&self, b: BlockId) -> CompoundId {
        self.compound_of[b.0 as usize]
    }

    pub fn compound_size(&self, c: CompoundId) -> u32 {
        self.compounds[c.0 as usize].size
    }

    pub fn members(&self, c: CompoundId) -> &[BlockId] {
        &self.compounds[c.0 as usize].members
    }

    pub fn num_compounds(&self) -> usize {
        self.compounds.len()
    }

    /// Pops a compound from the worklist and returns a subblock of it with at
    /// most half its size, found by comparing any two of its subblocks.
    /// Returns `None` when every compound has exactly one subblock.
    pub fn select_subblock(
        &mut self,
        partition: &RefinablePartition,
    ) -> Option<(BlockId, CompoundId)> {
        let c = self.worklist.pop_front()?;
        let comp = &mut self.compounds[c.0 as usize];
        comp.enqueued = false;
        debug_assert!(comp.members.len() >= 2, "worklist held a trivial compound");
        let a = comp.members[0];
        let b = comp.members[1];
        let s = if partition.size(a) <= partition.size(b) {
            a
        } else {
            b
        };
        debug_assert!(2 * partition.size(s) <= comp.size);
        Some((s, c))
    }

    /// Splits `s` off into its own compound. The remaining subblocks stay
    /// together and are re-enqueued when they still number at least two.
    pub fn split_compound(&mut self, partition: &RefinablePartition, s: BlockId) {
        let c = self.compound_of[s.0 as usize];
        debug_assert!(
            self.compounds[c.0 as usize].members.len() >= 2,
            "splitting a compound with a sole subblock"
        );
        self.remove_member(c, s);
        self.compounds[c.0 as usize].size -= partition.size(s);

        let fresh = CompoundId(self.compounds.len() as u32);
        self.compounds.push(Compound {
            members: vec![s],
            size: partition.size(s),
            enqueued: false,
        });
        self.compound_of[s.0 as usize] = fresh;
        self.member_idx[s.0 as usize] = 0;

        self.enqueue_if_compound(c);
    }

    /// Adds blocks freshly split off `parent` to `parent`'s compound,
    /// dropping `parent` itself when it was left empty.
    pub fn register_new_blocks(
        &mut self,
        partition: &RefinablePartition,
        parent: BlockId,
        fresh: &[BlockId],
    ) {
        let c = self.compound_of[parent.0 as usize];
        if partition.is_retired(parent) {
            self.remove_member(c, parent);
        }
        for &b in fresh {
            if self.compound_of.len() <= b.0 as usize {
                self.compound_of.resize(b.0 as usize + 1, CompoundId(0));
                self.member_idx.resize(b.0 as usize + 1, 0);
            }
            self.compound_of[b.0 as usize] = c;
            let comp = &mut self.compounds[c.0 as usize];
            self.member_idx[b.0 as usize] = comp.members.len() as u32;
            comp.members.push(b);
        }
        self.enqueue_if_compound(c);
    }

    fn remove_member(&mut self, c: CompoundId, b: BlockId) {
        let comp = &mut self.compounds[c.0 as usize];
        let idx = self.member_idx[b.0 as usize] as usize;
        debug_assert_eq!(comp.members[idx], b);
        comp.members.swap_remove(idx);
        if let Some(&moved) = comp.members.get(idx) {
            self.member_idx[moved.0 as usize] = idx as u32;
        }
    }

    fn enqueue_if_compound(&mut self, c: CompoundId) {
        let comp = &mut self.compounds[c.0 as usize];
        if comp.members.len() >= 2 && !comp.enqueued {
            comp.enqueued = true;
            self.worklist.push_back(c);
        }
    }

    /// Checks the tracker invariants: live blocks are partitioned among the
    /// compounds, sizes add up, and the worklist holds exactly the compounds
    /// with two or more subblocks.
    pub fn check_consistent(&self, partition: &RefinablePartition) {
        let mut owner = vec![None; partition.num_blocks()];
        for (ci, comp) in self.compounds.iter().enumerate() {
            let mut size = 0;
            for (mi, &b) in comp.members.iter().enumerate() {
                assert!(!partition.is_retired(b), "retired block in compound");
                assert_eq!(self.compound_of[b.0 as usize].0 as usize, ci);
                assert_eq!(self.member_idx[b.0 as usize] as usize, mi);
                assert!(owner[b.0 as usize].is_none());
                owner[b.0 as usize] = Some(ci);
                size += partition.size(b);
            }
            assert_eq!(comp.size, size);
            assert_eq!(comp.enqueued, comp.members.len() >= 2);
        }
        for b in partition.live_blocks() {
            assert!(owner[b.0 as usize].is_some(), "live block in no compound");
        }
        let mut listed: Vec<u32> = self.worklist.iter().map(|c| c.0).collect();
        listed.sort_unstable();
        listed.dedup();
        assert_eq!(listed.len(), self.worklist.len(), "worklist duplicate");
        for &c in &self.worklist {
            assert!(self.compounds[c.0 as usize].members.len() >= 2);
        }
    }
}

/// Seeded differential check of the partition structure against a naive
/// list-of-sets model: random mark/split sequences must produce identical
/// block contents, with the tracker invariants holding throughout. Used by
/// the self-check command; returns a description of the first divergence.
pub fn differential_check(seed: u64, rounds: u32) -> Result<(), String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    for round in 0..rounds {
        let n = rng.gen_range(1..24usize);
        let keys: Vec<Vec<u8>> = (0..n).map(|_| vec![rng.gen_range(b'a'..b'd')]).collect();
        let mut p = RefinablePartition::from_grouping(&keys);
        let t = CompoundTracker::new(&p);
        let mut tracker = t;
        let mut model: Vec<Vec<u32>> = p
            .live_blocks()
            .map(|b| {
                let mut v = p.elements(b).to_vec();
                v.sort_unstable();
                v
            })
            .collect();
        model.sort();

        for _ in 0..rng.gen_range(1..10) {
            let blocks: Vec<BlockId> = p.live_blocks().collect();
            let b = blocks[rng.gen_range(0..blocks.len())];
            let elems = p.elements(b).to_vec();
            let mut chosen: Vec<u32> = elems
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.5))
                .collect();
            if chosen.is_empty() {
                chosen.push(elems[0]);
            }
            let mut key_of: std::collections::HashMap<u32, Vec<u8>> = Default::default();
            for &x in &chosen {
                p.mark(x);
                key_of.insert(x, vec![rng.gen_range(b'u'..b'x')]);
            }
            let mut cmp = 0;
            let fresh = p.split_marked_by_key(b, |x| key_of[&x].as_slice(), &mut cmp);
            tracker.register_new_blocks(&p, b, &fresh);
            p.check_consistent();
            tracker.check_consistent(&p);

            let mut groups: std::collections::BTreeMap<Vec<u8>, Vec<u32>> = Default::default();
            for &x in &chosen {
                groups.entry(key_of[&x].clone()).or_default().push(x);
            }
            let pos = model
                .iter()
                .position(|g| g.contains(&elems[0]))
                .expect("model lost a block");
            model[pos].retain(|x| !chosen.contains(x));
            if model[pos].is_empty() {
                model.remove(pos);
            }
            for (_, mut g) in groups {
                g.sort_unstable();
                model.push(g);
            }
            model.sort();

            let mut got: Vec<Vec<u32>> = p
                .live_blocks()
                .map(|b| {
                    let mut v = p.elements(b).to_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            got.sort();
            if got != model {
                return Err(format!(
                    "round {round}: partition diverged from the model: {got:?} vs {model:?}"
                ));
            }
        }
    }
    Ok(())
}
