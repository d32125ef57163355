//! Grouping of keyed items, with the possible-majority-candidate trick.
//!
//! Splitting a block groups its elements by a comparison key. Sorting the
//! whole block every time would break the overall `O((m+n) log n)` bound, so
//! we first extract a possible majority candidate (Boyer-Moore vote), move
//! the items carrying it to the front without comparisons, and sort only the
//! rest. If a majority value exists the candidate is guaranteed to be it, so
//! the number of sorted items is at most twice the non-majority count.

use std::ops::Range;

/// An item to be grouped: an id plus its key, stored as a range into an
/// external byte arena so callers can batch keys without per-item allocation.
#[derive(Clone, Copy, Debug)]
pub struct KeyedItem {
    pub id: u32,
    pub key_start: u32,
    pub key_end: u32,
}

impl KeyedItem {
    pub fn key<'a>(&self, arena: &'a [u8]) -> &'a [u8] {
        &arena[self.key_start as usize..self.key_end as usize]
    }
}

/// Groups `items` in place by key using a possible majority candidate.
///
/// Returns the group boundaries as ranges into the reordered slice. The
/// candidate's group comes first (in input order), the remaining groups
/// follow in ascending key order with ties broken by id. `comparisons` is
/// incremented once per key comparison performed.
pub fn group_by_pmc(
    items: &mut Vec<KeyedItem>,
    arena: &[u8],
    comparisons: &mut u64,
) -> Vec<Range<usize>> {
    if items.is_empty() {
        return Vec::new();
    }

    // Boyer-Moore vote over the keys.
    let mut candidate = items[0];
    let mut vote = 1u32;
    for it in items[1..].iter() {
        *comparisons += 1;
        if it.key(arena) == candidate.key(arena) {
            vote += 1;
        } else if vote == 0 {
            candidate = *it;
            vote = 1;
        } else {
            vote -= 1;
        }
    }

    // Stable partition: candidate-keyed items to the front.
    let mut front: Vec<KeyedItem> = Vec::with_capacity(items.len());
    let mut rest: Vec<KeyedItem> = Vec::new();
    for it in items.iter() {
        *comparisons += 1;
        if it.key(arena) == candidate.key(arena) {
            front.push(*it);
        } else {
            rest.push(*it);
        }
    }
    let pmc_len = front.len();
    sort_keyed(&mut rest, arena, comparisons);
    front.append(&mut rest);
    *items = front;

    let mut groups = vec![0..pmc_len];
    groups.extend(ranges_of_runs(&items[pmc_len..], pmc_len, arena, comparisons));
    groups
}

/// Plain grouping: sort everything by key (ties by id) and cut into runs.
pub fn group_naive(
    items: &mut Vec<KeyedItem>,
    arena: &[u8],
    comparisons: &mut u64,
) -> Vec<Range<usize>> {
    sort_keyed(items, arena, comparisons);
    ranges_of_runs(items, 0, arena, comparisons)
}

fn sort_keyed(items: &mut [KeyedItem], arena: &[u8], comparisons: &mut u64) {
    // The comparator is total: keys first, ids break ties deterministically.
    items.sort_unstable_by(|a, b| {
        *comparisons += 1;
        a.key(arena).cmp(b.key(arena)).then(a.id.cmp(&b.id))
    });
}

fn ranges_of_runs(
    sorted: &[KeyedItem],
    offset: usize,
    arena: &[u8],
    comparisons: &mut u64,
) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0usize;
    for i in 1..sorted.len() {
        *comparisons += 1;
        if sorted[i].key(arena) != sorted[start].key(arena) {
            groups.push(offset + start..offset + i);
            start = i;
        }
    }
    if !sorted.is_empty() {
        groups.push(offset + start..offset + sorted.len());
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(keys: &[&[u8]]) -> (Vec<KeyedItem>, Vec<u8>) {
        let mut arena = Vec::new();
        let mut items = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let start = arena.len() as u32;
            arena.extend_from_slice(k);
            items.push(KeyedItem {
                id: i as u32,
                key_start: start,
                key_end: arena.len() as u32,
            });
        }
        (items, arena)
    }

    fn as_sets(items: &[KeyedItem], groups: &[Range<usize>]) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = groups
            .iter()
            .map(|g| {
                let mut ids: Vec<u32> = items[g.clone()].iter().map(|it| it.id).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn majority_key_sorts_only_minority() {
        let (mut items, arena) = build(&[b"u", b"u", b"u", b"v"]);
        let mut cmp = 0;
        let groups = group_by_pmc(&mut items, &arena, &mut cmp);
        assert_eq!(as_sets(&items, &groups), vec![vec![0, 1, 2], vec![3]]);
        // The candidate group is the majority one, so only one item was sorted.
        assert_eq!(groups[0].len(), 3);
    }

    #[test]
    fn two_distinct_keys() {
        let (mut items, arena) = build(&[b"u", b"v"]);
        let mut cmp = 0;
        let groups = group_by_pmc(&mut items, &arena, &mut cmp);
        assert_eq!(as_sets(&items, &groups), vec![vec![0], vec![1]]);
    }

    #[test]
    fn empty_input() {
        let mut items = Vec::new();
        let mut cmp = 0;
        assert!(group_by_pmc(&mut items, &[], &mut cmp).is_empty());
    }

    #[test]
    fn matches_naive_on_random_multisets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..500 {
            let len = rng.gen_range(0..40);
            let keys: Vec<Vec<u8>> = (0..len)
                .map(|_| vec![rng.gen_range(b'a'..b'f')])
                .collect();
            let refs: Vec<&[u8]> = keys.iter().map(|k| k.as_slice()).collect();
            let (mut a, arena) = build(&refs);
            let mut b = a.clone();
            let mut cmp = 0;
            let ga = group_by_pmc(&mut a, &arena, &mut cmp);
            let gb = group_naive(&mut b, &arena, &mut cmp);
            assert_eq!(as_sets(&a, &ga), as_sets(&b, &gb));
        }
    }
}
