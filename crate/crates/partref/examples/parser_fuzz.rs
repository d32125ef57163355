//! Smoke-fuzzes the text parser with random mutations of valid inputs:
//! every mutant must either parse or fail with a proper error, never panic.
//!
//! ```sh
//! cargo run --release --example parser_fuzz [rounds]
//! ```

use partref::encoding::text::parse_spec_text;
use rand::{Rng, SeedableRng};

const SEEDS: [&str; 4] = [
    "functor: P (D (A x X))\nalphabet A: a b\nstate q0: {{(a, q0): 1/2, (b, q1): 1/2}}\nstate q1: {}\n",
    "functor: (2 x X^A)\nalphabet A: l r\nstate s: (0, [l: t, r: s])\nstate t: (1, [l: s, r: t])\n",
    "functor: (D X + P (A x X))\nalphabet A: a\nstate q0: in1({q1: 1})\nstate q1: in2({(a, q0)})\n",
    "functor: Z X\nstate a: {b: -3, a: 2/1}\nstate b: {}\n",
];

fn main() {
    let rounds: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200_000);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xF422);
    let mut parsed = 0u64;
    for _ in 0..rounds {
        let mut bytes = SEEDS[rng.gen_range(0..SEEDS.len())].as_bytes().to_vec();
        for _ in 0..rng.gen_range(1..6) {
            match rng.gen_range(0..3) {
                0 => {
                    let i = rng.gen_range(0..bytes.len());
                    bytes[i] = rng.gen_range(0x20..0x7f);
                }
                1 => {
                    let i = rng.gen_range(0..bytes.len());
                    bytes.remove(i);
                }
                _ => {
                    let i = rng.gen_range(0..=bytes.len());
                    bytes.insert(i, rng.gen_range(0x20..0x7f));
                }
            }
            if bytes.is_empty() {
                break;
            }
        }
        if let Ok(text) = String::from_utf8(bytes) {
            if parse_spec_text(&text).is_ok() {
                parsed += 1;
            }
        }
    }
    println!("{rounds} mutants processed without panics; {parsed} still parsed");
}
