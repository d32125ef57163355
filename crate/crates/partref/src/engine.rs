//! The refinement engine.
//!
//! Initialization puts one fresh weight cell per state (holding the weight
//! of all its outgoing edges) and groups states by their observation; the
//! coarse partition starts as one compound block. The main loop then selects
//! a subblock of at most half its compound block, splits the compound, and
//! calls [`Engine::split`].
//!
//! `split(S)` runs in two phases over the edges into `S`:
//!
//! - phase (a) walks the predecessors of `S`, collecting the touched blocks
//!   (with the split value of their edge-free members, computed once per
//!   block from a stored weight), marking each source state once, and
//!   gathering its edges into `S`;
//! - phase (b) processes each marked state: one `update` call computes the
//!   weight of its edges into `S` (a fresh cell, re-pointed from those
//!   edges), the weight into `C \ S` (written over the old cell) and its
//!   split value. States whose split value differs from the edge-free one
//!   leave their block and are regrouped by split value.
//!
//! The run maintains four invariants between splits (the gathered edge lists
//! are empty; two edges share a weight cell exactly when they share the
//! source and their targets share a compound; cells hold the weight of the
//! source's edges into the target's compound; and blocks are stable with
//! respect to every compound). Checks for them are compiled into debug
//! builds only and the expensive ones run only on small instances.

use std::time::{Duration, Instant};

use crate::encoding::EncodedCoalgebra;
use crate::interfaces::{Label, Overflow, Weight};
use crate::partition::{BlockId, CompoundTracker, RefinablePartition};

/// Counters reported by a finished run.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    /// De-sorted state count.
    pub states: u64,
    /// De-sorted edge count.
    pub edges: u64,
    /// Number of compound splits (= subblock selections).
    pub splits: u64,
    /// Largest number of selected subblocks any one state appeared in.
    pub max_subblock_memberships: u32,
    /// Total size of the middle blocks over all splits: marked states whose
    /// split value matched neither the edge-free nor the all-inside value.
    pub middle_total: u64,
    /// Key comparisons spent in grouping (initial grouping included).
    pub grouping_comparisons: u64,
    /// Weight cells allocated over the whole run.
    pub weight_cells: u64,
    /// Blocks of the final partition.
    pub blocks: u64,
    pub wall: Duration,
}

impl RunStats {
    pub fn render(&self) -> String {
        format!(
            "n={}\nm={}\nsplits={}\nmax_subblock_memberships={}\nmiddle_total={}\ngrouping_comparisons={}\nweight_cells={}\nblocks={}\nwall_ms={}\n",
            self.states,
            self.edges,
            self.splits,
            self.max_subblock_memberships,
            self.middle_total,
            self.grouping_comparisons,
            self.weight_cells,
            self.blocks,
            self.wall.as_millis(),
        )
    }
}

pub struct Engine<'a> {
    enc: &'a EncodedCoalgebra,
    pub partition: RefinablePartition,
    pub tracker: CompoundTracker,
    /// Per state, its edges into the subblock currently being processed.
    to_sub: Vec<Vec<u32>>,
    /// Per edge, the index of its weight cell.
    last_w: Vec<u32>,
    /// The weight cells.
    deref: Vec<Weight>,
    /// Per block, the marked states with the cell their edges point at.
    marks: Vec<Vec<(u32, u32)>>,
    /// Touched blocks with the split values of edge-free and all-inside
    /// members (the latter only feeds statistics).
    touched: Vec<(BlockId, Vec<u8>, Vec<u8>)>,
    subblock_elems: Vec<u32>,
    key_arena: Vec<u8>,
    key_slot: Vec<(u32, u32)>,
    label_scratch: Vec<Label>,
    h3_scratch: Vec<u8>,
    memberships: Vec<u32>,
    pub stats: RunStats,
}

impl<'a> Engine<'a> {
    /// Builds the initial state: weight cells from `init`, the fine
    /// partition grouped by observation, one compound block.
    pub fn initialize(enc: &'a EncodedCoalgebra) -> Result<Self, Overflow> {
        let n = enc.num_states();
        let mut to_sub: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (eid, e) in enc.edges.iter().enumerate() {
            to_sub[e.src as usize].push(eid as u32);
        }

        let mut last_w = vec![0u32; enc.num_edges()];
        let mut deref = Vec::with_capacity(n);
        let mut labels = Vec::new();
        for x in 0..n {
            labels.clear();
            labels.extend(to_sub[x].iter().map(|&e| enc.edges[e as usize].label));
            let w = enc.iface.init(&enc.h1[x], &labels)?;
            let cell = deref.len() as u32;
            deref.push(w);
            for &e in &to_sub[x] {
                last_w[e as usize] = cell;
            }
            to_sub[x].clear();
        }

        let stats = RunStats {
            states: n as u64,
            edges: enc.num_edges() as u64,
            weight_cells: deref.len() as u64,
            ..RunStats::default()
        };
        let keys = enc.h1_keys();
        let partition = RefinablePartition::from_grouping(&keys);
        let tracker = CompoundTracker::new(&partition);
        let marks = vec![Vec::new(); partition.num_blocks()];

        let engine = Engine {
            enc,
            partition,
            tracker,
            to_sub,
            last_w,
            deref,
            marks,
            touched: Vec::new(),
            subblock_elems: Vec::new(),
            key_arena: Vec::new(),
            key_slot: vec![(u32::MAX, u32::MAX); n],
            label_scratch: Vec::new(),
            h3_scratch: Vec::new(),
            memberships: vec![0; n],
            stats,
        };
        #[cfg(debug_assertions)]
        engine.check_invariants();
        Ok(engine)
    }

    /// Refines the fine partition so it becomes stable for the split of
    /// `S`'s former compound into `S` and the rest. `S` must already sit in
    /// its own compound.
    pub fn split(&mut self, s: BlockId) -> Result<(), Overflow> {
        self.stats.splits += 1;

        // Phase (a): walk the edges into S.
        self.touched.clear();
        self.subblock_elems.clear();
        self.subblock_elems
            .extend_from_slice(self.partition.elements(s));
        for i in 0..self.subblock_elems.len() {
            let y = self.subblock_elems[i];
            self.memberships[y as usize] += 1;
            self.stats.max_subblock_memberships = self
                .stats
                .max_subblock_memberships
                .max(self.memberships[y as usize]);
            for &e in self.enc.pred(y) {
                let x = self.enc.edges[e as usize].src;
                let b = self.partition.block_of(x);
                if self.marks[b.0 as usize].is_empty() {
                    let w_c = &self.deref[self.last_w[e as usize] as usize];
                    let mut v_empty = Vec::with_capacity(16);
                    self.enc.iface.update_into(&[], w_c, &mut v_empty)?;
                    let mut v_full = Vec::with_capacity(16);
                    self.enc.iface.h3_when_all_inside(w_c, &mut v_full);
                    self.touched.push((b, v_empty, v_full));
                }
                if self.to_sub[x as usize].is_empty() {
                    self.marks[b.0 as usize].push((x, self.last_w[e as usize]));
                }
                self.to_sub[x as usize].push(e);
            }
        }

        // Phase (b): per touched block, update the marked states and split
        // off those with a different split value.
        let touched = std::mem::take(&mut self.touched);
        for (b, v_empty, v_full) in &touched {
            let mut marked = std::mem::take(&mut self.marks[b.0 as usize]);
            self.key_arena.clear();
            let mut any_marked = false;
            for &(x, p_c) in &marked {
                self.label_scratch.clear();
                self.label_scratch.extend(
                    self.to_sub[x as usize]
                        .iter()
                        .map(|&e| self.enc.edges[e as usize].label),
                );
                self.h3_scratch.clear();
                let (w_s, w_rest) = self.enc.iface.update_into(
                    &self.label_scratch,
                    &self.deref[p_c as usize],
                    &mut self.h3_scratch,
                )?;
                self.deref[p_c as usize] = w_rest;
                let p_s = self.deref.len() as u32;
                self.deref.push(w_s);
                self.stats.weight_cells += 1;
                for &e in &self.to_sub[x as usize] {
                    self.last_w[e as usize] = p_s;
                }
                self.to_sub[x as usize].clear();

                if self.h3_scratch != *v_empty {
                    self.partition.mark(x);
                    any_marked = true;
                    if self.h3_scratch != *v_full {
                        self.stats.middle_total += 1;
                    }
                    let start = self.key_arena.len() as u32;
                    self.key_arena.extend_from_slice(&self.h3_scratch);
                    self.key_slot[x as usize] = (start, self.key_arena.len() as u32);
                }
            }

            if any_marked {
                let arena = std::mem::take(&mut self.key_arena);
                let slots = &self.key_slot;
                let fresh = self.partition.split_marked_by_key(
                    *b,
                    |x| {
                        let (lo, hi) = slots[x as usize];
                        &arena[lo as usize..hi as usize]
                    },
                    &mut self.stats.grouping_comparisons,
                );
                self.key_arena = arena;
                self.marks.resize(self.partition.num_blocks(), Vec::new());
                self.tracker
                    .register_new_blocks(&self.partition, *b, &fresh);
            }
            // hand the drained list's capacity back
            marked.clear();
            self.marks[b.0 as usize] = marked;
        }
        self.touched = touched;

        #[cfg(debug_assertions)]
        self.check_invariants();
        Ok(())
    }

    pub fn finish(mut self) -> (RefinablePartition, RunStats) {
        self.stats.blocks = self.partition.live_blocks().count() as u64;
        (self.partition, self.stats)
    }

    /// Invariant checks, compiled into debug builds. The structural checks
    /// run on anything small enough not to distort test runtimes; the
    /// semantic ones (weights and stability against reference evaluation)
    /// only on tiny instances.
    #[cfg(debug_assertions)]
    fn check_invariants(&self) {
        use std::collections::HashMap;

        let n = self.enc.num_states();
        if n > 256 {
            return;
        }
        // (1) all gathered edge lists are empty
        assert!(
            self.to_sub.iter().all(Vec::is_empty),
            "toSub not emptied between splits"
        );
        assert!(
            self.marks.iter().all(Vec::is_empty),
            "markings not emptied between splits"
        );
        // (2) cells are shared exactly within (source, target compound)
        let mut cell_of: HashMap<(u32, u32), u32> = HashMap::new();
        let mut owner_of: HashMap<u32, (u32, u32)> = HashMap::new();
        for (eid, e) in self.enc.edges.iter().enumerate() {
            let comp = self.tracker.compound_of(self.partition.block_of(e.tgt));
            let key = (e.src, comp.0);
            let cell = self.last_w[eid];
            match cell_of.entry(key) {
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(cell);
                }
                std::collections::hash_map::Entry::Occupied(o) => {
                    assert_eq!(*o.get(), cell, "edges of one source/compound differ in cell");
                }
            }
            match owner_of.entry(cell) {
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(key);
                }
                std::collections::hash_map::Entry::Occupied(o) => {
                    assert_eq!(*o.get(), key, "cell shared across source/compound pairs");
                }
            }
        }

        if n > 30 {
            return;
        }
        // (3) cells hold the weight of the source's edges into the target's
        // compound, per the reference weight map
        for (eid, e) in self.enc.edges.iter().enumerate() {
            let comp = self.tracker.compound_of(self.partition.block_of(e.tgt));
            let decoded = crate::encoding::decoded_of(self.enc, e.src);
            let base = &self.enc.iface.parts[self.enc.sort_of[e.src as usize] as usize];
            let expect = crate::interfaces::reference::w_ref(base, &decoded, |y| {
                self.tracker.compound_of(self.partition.block_of(y)) == comp
            })
            .expect("reference weight overflow");
            assert_eq!(
                self.deref[self.last_w[eid] as usize].inner, expect,
                "stale weight cell"
            );
        }
        // (4) blocks are stable w.r.t. every compound block
        for c in 0..self.tracker.num_compounds() {
            let c = crate::partition::CompoundId(c as u32);
            for b in self.partition.live_blocks() {
                let mut first: Option<Vec<u8>> = None;
                for &x in self.partition.elements(b) {
                    let decoded = crate::encoding::decoded_of(self.enc, x);
                    let base = &self.enc.iface.parts[self.enc.sort_of[x as usize] as usize];
                    let sig = crate::interfaces::reference::h3_direct(base, &decoded, |y| {
                        (self.tracker.compound_of(self.partition.block_of(y)) == c) as u8
                    })
                    .expect("reference evaluation overflow");
                    match &first {
                        None => first = Some(sig),
                        Some(f) => assert_eq!(f, &sig, "block not stable w.r.t. a compound"),
                    }
                }
            }
        }
    }
}

/// Runs the full refinement loop and returns the final partition (in which
/// fine and coarse partitions coincide) with the run counters.
pub fn run(enc: &EncodedCoalgebra) -> Result<(RefinablePartition, RunStats), Overflow> {
    let start = Instant::now();
    let mut engine = Engine::initialize(enc)?;
    while let Some((s, _)) = engine.tracker.select_subblock(&engine.partition) {
        engine.tracker.split_compound(&engine.partition, s);
        engine.split(s)?;
    }
    debug_assert!(
        (0..engine.tracker.num_compounds()).all(|c| {
            engine
                .tracker
                .members(crate::partition::CompoundId(c as u32))
                .len()
                <= 1
        }),
        "loop ended with a splittable compound"
    );
    let (partition, mut stats) = engine.finish();
    stats.wall = start.elapsed();
    Ok((partition, stats))
}
