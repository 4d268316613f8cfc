mod common;

use common::*;
use nalgebra::DMatrix;
use num::complex::Complex64;
use std::f64::consts::PI;
use wildkz::coinvariants::*;
use wildkz::current_algebra::{embed, omega_ml, SlotEmbedding};
use wildkz::rational::{q, qf, to_f64, Q};
use wildkz::singular_module::{SingularCharacter, Theta};
use wildkz::transport::*;

fn cx(t: &[Q]) -> Vec<Complex64> {
    t.iter().map(|x| Complex64::new(to_f64(x), 0.0)).collect()
}

/// Reduced float connection and its block.
fn reduced(cfg: &MarkedConfiguration, cutoff: usize) -> (BlockSpace, FloatConnection) {
    let block = compute_coinvariants(cfg, cutoff).unwrap();
    let conn = cfg.connection(block.mode, None).unwrap();
    let exact = block.reduce_terms(&ambient_term_matrices(&block, &conn).unwrap()).unwrap();
    (block, FloatConnection::new(&exact))
}

/// Unreduced connection on the total-weight-zero slice including the slot at infinity.
fn full_slice(cfg: &MarkedConfiguration) -> (usize, FloatConnection) {
    let block = compute_block(cfg, 6, BlockMode::FullTensor).unwrap();
    let conn = cfg.connection(BlockMode::FullTensor, None).unwrap();
    let exact = ambient_term_matrices(&block, &conn).unwrap();
    (block.ambient_dim(), FloatConnection::new(&exact))
}

fn two_tame_points(kappa: Q) -> MarkedConfiguration {
    let chars = vec![SingularCharacter::tame(vec![qf(1, 3)], kappa.clone()), SingularCharacter::tame(vec![qf(-5, 2)], kappa.clone())];
    let inf = InfinitySpec::Singular(SingularCharacter::tame(vec![qf(49, 6)], kappa.clone()));
    MarkedConfiguration::new(algebra(1), kappa, vec![q(0), q(1)], chars, inf, true).unwrap()
}

fn wild_three_points() -> MarkedConfiguration {
    let kappa = qf(9, 2);
    let mut r = rng(21);
    let chars = vec![
        character(&mut r, 2, vec![qf(1, 2)], &kappa),
        character(&mut r, 1, vec![qf(-2, 3)], &kappa),
        character(&mut r, 1, vec![qf(5, 4)], &kappa),
    ];
    let total: Q = chars.iter().map(|c| c.lambda[0].clone()).sum();
    // θ0-dual at infinity with Σ ν = 2.
    let inf = InfinitySpec::Dual { character: SingularCharacter::tame(vec![total - q(4)], kappa.clone()), theta: Theta::Dual };
    MarkedConfiguration::new(algebra(1), kappa, vec![q(0), q(3), q(7)], chars, inf, false).unwrap()
}

fn wild_infinity() -> MarkedConfiguration {
    let kappa = qf(9, 2);
    let mut r = rng(22);
    let chars = vec![character(&mut r, 2, vec![qf(1, 2)], &kappa), character(&mut r, 1, vec![qf(-2, 3)], &kappa)];
    let total: Q = chars.iter().map(|c| c.lambda[0].clone()).sum();
    let inf = InfinitySpec::Singular(SingularCharacter::new(2, vec![q(4) - total], vec![vec![qf(3, 5)]], kappa.clone()).unwrap());
    MarkedConfiguration::new(algebra(1), kappa, vec![q(0), q(3)], chars, inf, false).unwrap()
}

fn identity(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

#[test]
fn constant_path_is_identity() {
    let (block, conn) = reduced(&wild_three_points(), 6);
    let path = PathSpec::new(cx(&[q(0), q(3), q(7)]), vec![]);
    let tr = integrate(&path, &conn).unwrap();
    assert_eq!(tr.matrix, identity(block.quotient_dim()));
}

#[test]
fn contractible_loops_return_to_identity() {
    let reduced_case = {
        let cfg = wild_three_points();
        let (block, conn) = reduced(&cfg, 6);
        (cfg, block.quotient_dim(), conn)
    };
    let full_case = {
        let cfg = wild_infinity();
        let (dim, conn) = full_slice(&cfg);
        (cfg, dim, conn)
    };
    for (cfg, dim, conn) in [reduced_case, full_case] {
        assert!(dim > 1);
        let start = cx(&cfg.times);
        let path = PathSpec::new(
            start.clone(),
            vec![
                Segment::Arc { slot: 0, center: [-1.0, 0.0], angle: 2.0 * PI },
                Segment::Linear { to: start.iter().map(|z| [z.re + 0.5, z.im + 0.25]).collect() },
                Segment::Linear { to: start.iter().map(|z| [z.re, z.im]).collect() },
            ],
        );
        let tr = monodromy(&path, &conn).unwrap();
        assert!(max_abs_diff(&tr.matrix, &identity(dim)) <= 1e-8);
    }
}

#[test]
fn tame_monodromy_is_exponential_of_casimir() {
    let kappa = qf(7, 3);
    let cfg = two_tame_points(kappa.clone());
    let (block, conn) = reduced(&cfg, 4);
    assert_eq!(block.quotient_dim(), 4);
    let omega_op = embed(&omega_ml(&cfg.alg, 0, 0), SlotEmbedding { first: 0, second: 1, target_arity: 2 }).unwrap();
    let omega = to_complex(&block.ambient.operator_matrix(&block.tensor, &omega_op).unwrap());
    let scale = Complex64::new(0.0, -2.0 * PI / to_f64(&(&kappa + q(2))));
    let oracle = (omega * scale).exp();
    let path = PathSpec::new(cx(&cfg.times), vec![Segment::Loop { slot: 0, around: 1, turns: 1 }]);
    let tr = monodromy(&path, &conn).unwrap();
    assert!(max_abs_diff(&tr.matrix, &oracle) < 1e-8);
    let summary = tr.summary();
    let det = Complex64::new(summary.det[0], summary.det[1]);
    let trace_oracle = Complex64::new(summary.exp_trace_integral[0], summary.exp_trace_integral[1]);
    assert!((det - trace_oracle).norm() < 1e-8);
}

#[test]
fn homotopic_braiding_loops_agree() {
    let (_, conn) = reduced(&wild_three_points(), 6);
    let start = cx(&[q(0), q(3), q(7)]);
    let a = PathSpec::new(start.clone(), vec![Segment::Arc { slot: 0, center: [3.0, 0.0], angle: 2.0 * PI }]);
    let b = PathSpec::new(start, vec![Segment::Arc { slot: 0, center: [2.5, 0.0], angle: 2.0 * PI }]);
    let ma = monodromy(&a, &conn).unwrap();
    let mb = monodromy(&b, &conn).unwrap();
    assert!(max_abs_diff(&ma.matrix, &mb.matrix) < 1e-6);
    assert!(max_abs_diff(&ma.matrix, &identity(ma.matrix.nrows())) > 1e-3);
}

#[test]
fn reversal_and_concatenation() {
    let (_, conn) = reduced(&wild_three_points(), 6);
    let start = cx(&[q(0), q(3), q(7)]);
    let first = PathSpec::new(start.clone(), vec![Segment::Linear { to: vec![[0.0, 1.0], [3.0, 0.5], [7.0, 0.0]] }]);
    let end: Vec<Point> = first.end().iter().map(|z| [z.re, z.im]).collect();
    let second = PathSpec::new(first.end(), vec![Segment::Arc { slot: 2, center: [6.0, 0.0], angle: 1.0 }]);
    let whole = PathSpec::new(start, vec![first.segments[0].clone(), second.segments[0].clone()]);
    let t1 = integrate(&first, &conn).unwrap().matrix;
    let t2 = integrate(&second, &conn).unwrap().matrix;
    let t12 = integrate(&whole, &conn).unwrap().matrix;
    assert!(max_abs_diff(&(&t2 * &t1), &t12) < 1e-8);
    let back = integrate(&first.reversed(), &conn).unwrap().matrix;
    assert!(max_abs_diff(&(&back * &t1), &identity(t1.nrows())) < 1e-8);
    assert_eq!(first.reversed().start, end);
}

#[test]
fn affine_equivariance_for_tame_points() {
    let cfg = two_tame_points(qf(7, 3));
    let (_, conn) = reduced(&cfg, 4);
    let t = vec![Complex64::new(0.5, 0.0), Complex64::new(-1.0, 0.5)];
    let translation = affine_equivariance_check(&conn, &t, 0.0, Complex64::new(2.0, -1.0), 1e-10).unwrap();
    assert!(translation.residual <= 1e-8, "{translation:?}");
    let dilation = affine_equivariance_check(&conn, &t, 0.1, Complex64::new(0.0, 0.0), 1e-10).unwrap();
    assert!(dilation.residual <= 1e-6, "{dilation:?}");
    let trivial = affine_equivariance_check(&conn, &t, 0.0, Complex64::new(0.0, 0.0), 1e-10).unwrap();
    assert_eq!(trivial.residual, 0.0);
}

#[test]
fn step_halving_shrinks_closed_loop_residual() {
    let (_, conn) = reduced(&wild_three_points(), 6);
    let start = cx(&[q(0), q(3), q(7)]);
    let path = PathSpec::new(start, vec![Segment::Arc { slot: 0, center: [-1.0, 0.5], angle: 2.0 * PI }]);
    let report = order_check(&path, &conn, 8, 3).unwrap();
    for r in &report.ratios {
        assert!(*r >= 4.0, "{report:?}");
    }
}

#[test]
fn coincident_path_is_rejected() {
    let (_, conn) = reduced(&wild_three_points(), 6);
    let path = PathSpec::new(cx(&[q(0), q(3), q(7)]), vec![Segment::Linear { to: vec![[3.0, 0.0], [3.0, 0.0], [7.0, 0.0]] }]);
    assert!(matches!(integrate(&path, &conn), Err(TransportError::CoalescencePenalty { .. })));
}
