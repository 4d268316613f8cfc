use proptest::prelude::*;
use std::sync::Arc;
use wildkz::current_algebra::{affine_bracket, cocycle, CurrentTensor, DegreeWindow, Gen, WindowMode};
use wildkz::lie_core::{build_type_a, LieAlgebra};
use wildkz::linalg::add_entry;
use wildkz::rational::{q, qf, Q};
use wildkz::singular_module::*;
use wildkz::weights::dim_weight_space;

fn algebra(rank: usize) -> Arc<LieAlgebra> {
    Arc::new(build_type_a(rank).unwrap())
}

fn character(rank: usize, p: usize, seed: i64) -> SingularCharacter {
    let val = |i: i64| qf((seed * 7 + i * 3) % 11 - 5, (seed + i) % 4 + 1);
    let lambda = (0..rank as i64).map(val).collect();
    let wild = (1..p as i64).map(|d| (0..rank as i64).map(|k| val(10 * d + k) + q(d)).collect()).collect();
    SingularCharacter::new(p, lambda, wild, qf(seed % 5 + 1, 3)).unwrap()
}

#[test]
fn weight_dimensions_match_formula() {
    for rank in 1..=2 {
        let g = algebra(rank);
        for p in 1..=3 {
            let m = Arc::new(SingularModule::new(g.clone(), character(rank, p, 1)).unwrap());
            let slice = build_finite_module(m, 4);
            for (nu, idx) in slice.weight_decomposition() {
                assert_eq!(idx.len() as u128, dim_weight_space(&nu, p, &g.root_system));
            }
        }
    }
}

#[test]
fn representation_property_affine() {
    let g = algebra(1);
    let m = Arc::new(SingularModule::new(g.clone(), character(1, 2, 3)).unwrap());
    let slice = build_affine_slice(m.clone(), 1, 1);
    let gens: Vec<Gen> = (0..3).flat_map(|b| (-1..=2).map(move |d| Gen::new(b, d))).collect();
    let window = DegreeWindow { lo: -4, hi: 4 };
    for &x in &gens {
        for &y in &gens {
            let br = affine_bracket(&g, &CurrentTensor::generator(x, window), &CurrentTensor::generator(y, window), WindowMode::Widen);
            assert_eq!(br.central, cocycle(&g, x, y));
            for mono in &slice.basis {
                let v = ModVec::from([(mono.clone(), Q::from_integer(1.into()))]);
                let mut lhs = m.act_vec(x, &m.act_vec(y, &v));
                for (k, c) in m.act_vec(y, &m.act_vec(x, &v)) {
                    add_entry(&mut lhs, k, -c);
                }
                assert_eq!(lhs, m.act_current(&br, &v), "[{x:?},{y:?}] on {mono:?}");
            }
        }
    }
}

#[test]
fn sugawara_commutator_on_affine_slice() {
    let g = algebra(1);
    for p in 1..=2 {
        let m = Arc::new(SingularModule::new(g.clone(), character(1, p, 2)).unwrap());
        let slice = build_affine_slice(m, 2, 1);
        assert!(sugawara_commutator_check(&slice).unwrap());
    }
}

#[test]
fn sugawara_vanishing_above_range() {
    let g = algebra(2);
    for p in 1..=3usize {
        let m = SingularModule::new(g.clone(), character(2, p, 4)).unwrap();
        for n in (p as i64 - 1)..=(2 * p as i64) {
            assert!(sugawara_eigencheck(&m, n).unwrap().pass, "p={p} n={n}");
        }
    }
}

#[test]
fn contragredient_pairing_symmetric() {
    let g = algebra(1);
    let m = Arc::new(SingularModule::new(g, character(1, 2, 5)).unwrap());
    for nu in 0..=2 {
        let (_, s) = shapovalov_block(&m, &[nu]);
        assert_eq!(s, s.transpose());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn sugawara_closed_forms(p in 1usize..=3, lam in -6i64..6, a1 in -6i64..6, a2 in -6i64..6, kn in 1i64..9, kd in 1i64..4) {
        let g = algebra(1);
        let wild: Vec<Vec<Q>> = [a1, a2].iter().take(p - 1).map(|&a| vec![qf(a, 2)]).collect();
        let chi = SingularCharacter::new(p, vec![qf(lam, 3)], wild, qf(kn, kd)).unwrap();
        let m = SingularModule::new(g, chi).unwrap();
        for n in (p as i64 - 1)..=(2 * p as i64 + 1) {
            prop_assert!(sugawara_eigencheck(&m, n).unwrap().pass);
        }
    }

    #[test]
    fn highest_weight_relations(p in 1usize..=3, lam in -6i64..6, a1 in -6i64..6, a2 in -6i64..6) {
        let g = algebra(2);
        let wild: Vec<Vec<Q>> = [a1, a2].iter().take(p - 1).map(|&a| vec![q(a), qf(a, 3)]).collect();
        let chi = SingularCharacter::new(p, vec![q(lam), q(1)], wild, q(1)).unwrap();
        let m = SingularModule::new(g.clone(), chi.clone()).unwrap();
        for d in 0..p as i64 {
            for a in 0..g.num_positive_roots() {
                prop_assert!(m.act_gen(Gen::new(g.raising(a), d), &[]).is_empty());
            }
            for k in 0..2 {
                let image = m.act_gen(Gen::new(g.cartan(k), d), &[]);
                let c = chi.coefficient(d as usize)[k].clone();
                if c == q(0) {
                    prop_assert!(image.is_empty());
                } else {
                    prop_assert_eq!(&*image, &ModVec::from([(vec![], c)]));
                }
            }
        }
    }
}
