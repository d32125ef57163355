//! Brute-force minimizer for differential testing.
//!
//! Starting from the grouping by observation, every round regroups all
//! states by their full one-step signature (observation plus edges with
//! targets replaced by their current block) until nothing changes. Each
//! round only refines the previous partition, the fixpoint is reached within
//! `n` rounds, and it is the same partition the engine computes. This is
//! quadratic-ish and exists only to be obviously correct; harnesses cap the
//! instance size.

use crate::encoding::EncodedCoalgebra;
use crate::grouping::{self, KeyedItem};
use crate::partition::RefinablePartition;

/// Size cap honored by harnesses (and enforced by the CLI's cross-check).
pub const MAX_ORACLE_STATES: usize = 2000;

#[derive(Clone, Debug)]
pub struct NaivePartition {
    /// Dense block index per state.
    pub block_of: Vec<u32>,
    pub num_blocks: u32,
    pub iterations: u32,
}

fn dense_group_by_keys(keys: &[Vec<u8>]) -> (Vec<u32>, u32) {
    let mut arena = Vec::new();
    let mut items = Vec::with_capacity(keys.len());
    for (i, k) in keys.iter().enumerate() {
        let start = arena.len() as u32;
        arena.extend_from_slice(k);
        items.push(KeyedItem {
            id: i as u32,
            key_start: start,
            key_end: arena.len() as u32,
        });
    }
    let mut comparisons = 0;
    let groups = grouping::group_naive(&mut items, &arena, &mut comparisons);
    let mut block_of = vec![0u32; keys.len()];
    // Dense ids in order of each group's smallest member, so equal
    // partitions get equal assignments.
    let mut order: Vec<(u32, usize)> = groups
        .iter()
        .enumerate()
        .map(|(gi, g)| (items[g.clone()].iter().map(|it| it.id).min().unwrap(), gi))
        .collect();
    order.sort_unstable();
    for (dense, &(_, gi)) in order.iter().enumerate() {
        for it in &items[groups[gi].clone()] {
            block_of[it.id as usize] = dense as u32;
        }
    }
    (block_of, groups.len() as u32)
}

/// Minimizes by repeated full-signature refinement.
pub fn naive_minimize(enc: &EncodedCoalgebra) -> Result<NaivePartition, crate::interfaces::Overflow> {
    let n = enc.num_states();
    let (mut block_of, mut num_blocks) = dense_group_by_keys(&enc.h1_keys());
    let mut iterations = 0u32;
    loop {
        let mut sigs: Vec<Vec<u8>> = vec![Vec::new(); n];
        let mut edges_of: Vec<Vec<(crate::interfaces::Label, u32)>> = vec![Vec::new(); n];
        for e in &enc.edges {
            edges_of[e.src as usize].push((e.label, block_of[e.tgt as usize]));
        }
        for x in 0..n {
            sigs[x] = enc.iface.oracle_signature(&enc.h1[x], &edges_of[x])?;
        }
        let (next, next_blocks) = dense_group_by_keys(&sigs);
        debug_assert!(next_blocks >= num_blocks, "refinement merged blocks");
        debug_assert!(
            {
                // every new block sits inside one old block
                let mut owner = vec![u32::MAX; next_blocks as usize];
                (0..n).all(|x| {
                    let nb = next[x] as usize;
                    if owner[nb] == u32::MAX {
                        owner[nb] = block_of[x];
                        true
                    } else {
                        owner[nb] == block_of[x]
                    }
                })
            },
            "signature refinement crossed old blocks"
        );
        iterations += 1;
        let stable = next == block_of;
        block_of = next;
        num_blocks = next_blocks;
        if stable {
            break;
        }
        debug_assert!(iterations as usize <= n + 1, "fixpoint not reached in n rounds");
    }
    Ok(NaivePartition {
        block_of,
        num_blocks,
        iterations,
    })
}

/// True iff two block assignments induce the same equivalence on the given
/// states, compared via renumbering by smallest member.
pub fn assignments_equal(a: &[u32], b: &[u32], restrict_to: impl Iterator<Item = u32> + Clone) -> bool {
    fn reps(assignment: &[u32], restrict: impl Iterator<Item = u32>) -> Vec<(u32, u32)> {
        let mut first: std::collections::HashMap<u32, u32> = Default::default();
        let mut out = Vec::new();
        for x in restrict {
            let rep = *first.entry(assignment[x as usize]).or_insert(x);
            out.push((x, rep));
        }
        out
    }
    reps(a, restrict_to.clone()) == reps(b, restrict_to)
}

/// [`assignments_equal`] for an engine partition against the oracle.
pub fn partitions_equal(
    naive: &NaivePartition,
    refined: &RefinablePartition,
    restrict_to: impl Iterator<Item = u32> + Clone,
) -> bool {
    assignments_equal(&naive.block_of, &refined.block_assignment(), restrict_to)
}
