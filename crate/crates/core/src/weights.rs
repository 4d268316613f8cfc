//! Root-lattice multiplicities, weak compositions and weight-space dimensions of singular
//! modules and of their tensor products.

use crate::lie_core::RootSystem;
use crate::rational::binomial_u128;

/// Multiplicities `m_α` indexed like `RootSystem::positive_roots`, with `Σ m_α α = ν`.
pub type MultiplicityVector = Vec<u64>;

/// All ways of writing `ν` as a nonnegative combination of positive roots, in lexicographic
/// order of the multiplicity vectors. Empty when `ν ∉ Q_+`.
pub fn mult_positive_roots(nu: &[i64], rs: &RootSystem) -> Vec<MultiplicityVector> {
    let mut out = Vec::new();
    if nu.len() != rs.rank || nu.iter().any(|&c| c < 0) {
        return out;
    }
    let mut current = vec![0u64; rs.positive_roots.len()];
    let mut remaining = nu.to_vec();
    search(rs, 0, &mut remaining, &mut current, &mut out);
    out
}

fn search(rs: &RootSystem, idx: usize, remaining: &mut [i64], current: &mut [u64], out: &mut Vec<MultiplicityVector>) {
    if idx == rs.positive_roots.len() {
        if remaining.iter().all(|&c| c == 0) {
            out.push(current.to_vec());
        }
        return;
    }
    let root = &rs.positive_roots[idx];
    let max = root
        .iter()
        .zip(remaining.iter())
        .filter(|(&r, _)| r > 0)
        .map(|(&r, &rem)| rem / r)
        .min()
        .unwrap_or(0);
    for k in 0..=max {
        for (x, &r) in remaining.iter_mut().zip(root) {
            *x -= k * r;
        }
        current[idx] = k as u64;
        search(rs, idx + 1, remaining, current, out);
        for (x, &r) in remaining.iter_mut().zip(root) {
            *x += k * r;
        }
    }
    current[idx] = 0;
}

/// All `p`-tuples of nonnegative integers summing to `m`, in decreasing lexicographic order.
pub fn weak_compositions(m: u64, p: usize) -> Vec<Vec<u64>> {
    assert!(p >= 1, "compositions need at least one part");
    if p == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in (0..=m).rev() {
        for mut rest in weak_compositions(m - first, p - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `Σ_{m ∈ Mult(ν)} Π_α C(m_α + p − 1, m_α)`.
pub fn dim_weight_space(nu: &[i64], p: usize, rs: &RootSystem) -> u128 {
    mult_positive_roots(nu, rs)
        .iter()
        .map(|m| m.iter().map(|&k| binomial_u128(k + p as u64 - 1, k)).product::<u128>())
        .sum()
}

/// All lattice points `ν` with `0 ≤ ν ≤ bound` coordinatewise, in lexicographic order.
pub fn lattice_box(bound: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (0..=b.max(-1)).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    if bound.iter().any(|&b| b < 0) {
        out.clear();
    }
    out
}

/// Ordered splittings `(ν_1, …, ν_n)` of `total` into elements of `Q_+`.
pub fn splittings(total: &[i64], parts: usize) -> Vec<Vec<Vec<i64>>> {
    if parts == 0 {
        return if total.iter().all(|&c| c == 0) { vec![Vec::new()] } else { Vec::new() };
    }
    if parts == 1 {
        return if total.iter().all(|&c| c >= 0) { vec![vec![total.to_vec()]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in lattice_box(total) {
        let rest: Vec<i64> = total.iter().zip(&first).map(|(t, f)| t - f).collect();
        for mut tail in splittings(&rest, parts - 1) {
            tail.insert(0, first.clone());
            out.push(tail);
        }
    }
    out
}

/// `Σ_{Σ ν_j = total} Π_j dim_weight_space(ν_j, r_j)`.
pub fn dim_tensor_weight_space(total: &[i64], depths: &[usize], rs: &RootSystem) -> u128 {
    splittings(total, depths.len())
        .iter()
        .map(|split| split.iter().zip(depths).map(|(nu, &r)| dim_weight_space(nu, r, rs)).product::<u128>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{cartan_matrix_type_a, generate_positive_roots};

    #[test]
    fn multiplicities() {
        let a2 = generate_positive_roots(&cartan_matrix_type_a(2)).unwrap();
        assert_eq!(mult_positive_roots(&[0, 0], &a2), vec![vec![0, 0, 0]]);
        assert_eq!(mult_positive_roots(&[1, 0], &a2), vec![vec![1, 0, 0]]);
        assert_eq!(mult_positive_roots(&[1, 1], &a2), vec![vec![0, 0, 1], vec![1, 1, 0]]);
        assert!(mult_positive_roots(&[-1, 2], &a2).is_empty());
    }

    #[test]
    fn compositions() {
        assert_eq!(weak_compositions(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(weak_compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(weak_compositions(5, 1), vec![vec![5]]);
        for m in 0..=8 {
            for p in 1..=5 {
                assert_eq!(weak_compositions(m, p).len() as u128, binomial_u128(m + p as u64 - 1, m));
            }
        }
    }

    #[test]
    fn dimensions() {
        let a1 = generate_positive_roots(&cartan_matrix_type_a(1)).unwrap();
        let a2 = generate_positive_roots(&cartan_matrix_type_a(2)).unwrap();
        assert_eq!(dim_weight_space(&[1, 0], 4, &a2), 4);
        assert_eq!(dim_weight_space(&[1, 1], 2, &a2), 6);
        for m in 0..6 {
            assert_eq!(dim_weight_space(&[m], 3, &a1), binomial_u128(m as u64 + 2, m as u64));
        }
        assert_eq!(dim_tensor_weight_space(&[0, 0], &[2, 3], &a2), 1);
        assert_eq!(dim_tensor_weight_space(&[0, 1], &[2, 3, 1], &a2), 6);
        assert_eq!(dim_tensor_weight_space(&[3], &[2, 1, 2], &a1), binomial_u128(3 + 5 - 1, 3));
    }

    #[test]
    fn depth_one_is_kostant_count() {
        let a2 = generate_positive_roots(&cartan_matrix_type_a(2)).unwrap();
        for nu in lattice_box(&[3, 3]) {
            assert_eq!(dim_weight_space(&nu, 1, &a2), mult_positive_roots(&nu, &a2).len() as u128);
        }
    }
}
