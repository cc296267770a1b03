//! Fixtures shared by the criterion benches.

use phasekey::{generate_key, Key, Matrix};

/// Random key sized like the minimal injective case, `D = 2d - 1`.
pub fn minimal_key(d: usize, seed: u64) -> Key {
    generate_key(d, 2 * d - 1, seed).expect("positive dimensions")
}

/// A `2 x d` configuration with standard normal entries.
pub fn config(d: usize, seed: u64) -> Matrix {
    generate_key(2, d, seed)
        .expect("positive dimensions")
        .matrix()
        .clone()
}
