#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use wildkz::lie_core::{build_type_a, LieAlgebra};
use wildkz::rational::{qf, Q};
use wildkz::singular_module::SingularCharacter;

pub fn algebra(rank: usize) -> Arc<LieAlgebra> {
    Arc::new(build_type_a(rank).unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational in `[-range, range]` with denominator up to `den`, never zero.
pub fn rational(rng: &mut ChaCha8Rng, range: i64, den: i64) -> Q {
    loop {
        let d = rng.gen_range(1..=den);
        let n = rng.gen_range(-range * d..=range * d);
        if n != 0 {
            return qf(n, d);
        }
    }
}

/// Random character with the given tame part; wild parts random.
pub fn character(rng: &mut ChaCha8Rng, depth: usize, lambda: Vec<Q>, kappa: &Q) -> SingularCharacter {
    let rank = lambda.len();
    let wild = (1..depth).map(|_| (0..rank).map(|_| rational(rng, 4, 3)).collect()).collect();
    SingularCharacter::new(depth, lambda, wild, kappa.clone()).unwrap()
}

/// Pairwise distinct random times.
pub fn times(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::new();
    while out.len() < n {
        let t = rational(rng, 5, 4);
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}
