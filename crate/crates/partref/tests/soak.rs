//! Opt-in heavy differential soak:
//! `cargo test --release --test soak -- --ignored`.

use partref::encoding::{encode, text::parse_spec_text};
use partref::gen::{generate, GenParams};
use partref::{engine, oracle};

#[test]
#[ignore = "heavy; run explicitly"]
fn differential_soak() {
    use rand::{Rng, SeedableRng};
    let families = [
        "P X",
        "B X",
        "D X",
        "Z X",
        "Q X",
        "(2 x X^A)",
        "P (A x X)",
        "P (D (A x X))",
        "P (B X x D (A x X))",
        "(D X + P (A x X))",
        "P (P X)",
        "(2 x P (P X))",
        "B (A x X)",
        "Z (A x X)",
        "D (P X)",
    ];
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x50AC);
    let mut total = 0u64;
    for family in families {
        for i in 0..300 {
            let params = GenParams {
                functor: family.into(),
                states: rng.gen_range(1..120),
                edges: rng.gen_range(0..500),
                seed: rng.gen(),
                weight_range: rng.gen_range(1..12),
                alphabet_sizes: vec![("A".into(), rng.gen_range(1..5))],
            };
            let text = generate(&params).unwrap();
            let spec = parse_spec_text(&text).unwrap();
            let enc = encode(&spec).unwrap();
            if enc.num_states() > oracle::MAX_ORACLE_STATES {
                continue;
            }
            let (partition, stats) = engine::run(&enc).unwrap();
            let naive = oracle::naive_minimize(&enc).unwrap();
            assert!(
                oracle::partitions_equal(&naive, &partition, 0..enc.num_states() as u32),
                "{family} #{i} diverged\n{text}"
            );
            assert!(stats.splits <= stats.states.saturating_sub(1));
            assert!(stats.middle_total <= stats.edges);
            if stats.states > 0 {
                let log2n = 63 - stats.states.leading_zeros() as u64;
                assert!(u64::from(stats.max_subblock_memberships) <= log2n + 1);
            }
            total += 1;
        }
    }
    println!("soak: {total} instances matched the oracle");
    assert!(total > 4000);
}
