//! Runtime-invariant corpus: drives the engine step by step on small random
//! instances so the debug-build invariant checks (gathered edge lists empty,
//! weight-cell sharing, stored weights, block stability) fire after every
//! split, and asserts the loop-level properties on top: refinement is
//! monotone, every selected subblock is at most half its compound, and the
//! number of compound splits stays below the state count.

use partref::encoding::{encode, text::parse_spec_text};
use partref::engine::Engine;
use partref::gen::{generate, GenParams};
use partref::oracle;

const FAMILIES: [&str; 8] = [
    "P X",
    "B X",
    "D X",
    "Z X",
    "(2 x X^A)",
    "P (A x X)",
    "P (D (A x X))",
    "(D X + P (A x X))",
];

fn refines(fine: &[u32], coarse: &[u32]) -> bool {
    let mut image: std::collections::HashMap<u32, u32> = Default::default();
    fine.iter().zip(coarse).all(|(&f, &c)| {
        *image.entry(f).or_insert(c) == c
    })
}

#[test]
fn stepwise_invariants_on_small_instances() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xEC0);
    for functor in FAMILIES {
        for round in 0..40 {
            // tiny instances keep the de-sorted system within the full
            // semantic-check gate of the debug assertions
            let params = GenParams {
                functor: functor.into(),
                states: rng.gen_range(1..8),
                edges: rng.gen_range(0..16),
                seed: rng.gen(),
                ..Default::default()
            };
            let text = generate(&params).unwrap();
            let spec = parse_spec_text(&text).unwrap();
            let enc = encode(&spec).unwrap();

            let mut engine = Engine::initialize(&enc).unwrap();
            let mut previous = engine.partition.block_assignment();
            let mut splits = 0u64;
            while let Some((s, c)) = engine.tracker.select_subblock(&engine.partition) {
                assert!(
                    2 * engine.partition.size(s) <= engine.tracker.compound_size(c),
                    "{functor} round {round}: selected subblock larger than half"
                );
                engine.tracker.split_compound(&engine.partition, s);
                engine.split(s).unwrap();
                splits += 1;
                let now = engine.partition.block_assignment();
                assert!(
                    refines(&now, &previous),
                    "{functor} round {round}: split coarsened the partition"
                );
                previous = now;
            }
            assert!(
                splits <= enc.num_states().saturating_sub(1) as u64,
                "{functor} round {round}: too many compound splits"
            );

            let naive = oracle::naive_minimize(&enc).unwrap();
            let (partition, _) = engine.finish();
            assert!(
                oracle::assignments_equal(
                    &naive.block_of,
                    &partition.block_assignment(),
                    0..enc.num_states() as u32
                ),
                "{functor} round {round}: engine disagrees with the oracle\n{text}"
            );
        }
    }
}

#[test]
fn structural_invariants_on_mid_sized_instances() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xEC1);
    for functor in FAMILIES {
        for _ in 0..10 {
            let params = GenParams {
                functor: functor.into(),
                states: rng.gen_range(10..40),
                edges: rng.gen_range(20..100),
                seed: rng.gen(),
                ..Default::default()
            };
            let text = generate(&params).unwrap();
            let spec = parse_spec_text(&text).unwrap();
            let enc = encode(&spec).unwrap();
            // debug asserts inside run() cover the structural invariants
            let (partition, stats) = partref::engine::run(&enc).unwrap();
            let naive = oracle::naive_minimize(&enc).unwrap();
            assert!(oracle::partitions_equal(
                &naive,
                &partition,
                0..enc.num_states() as u32
            ));
            assert!(stats.splits <= stats.states.saturating_sub(1));
            assert!(stats.middle_total <= stats.edges);
        }
    }
}
