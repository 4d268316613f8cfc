//! Floating-point parallel transport for the reduced connection `dv/ds = ϖ(γ(s))[γ'(s)] v`,
//! with adaptive Dormand–Prince stepping, monodromy and affine-equivariance checks.

use crate::connection::{Coefficient, TermMatrices};
use crate::linalg::Matrix;
use crate::rational::to_f64;
use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("path comes within {distance:e} of a diagonal (floor {floor:e}) in segment {segment} at s = {s}")]
    CoalescencePenalty { segment: usize, s: f64, distance: f64, floor: f64 },
    #[error("step size fell below {0:e} in segment {1}")]
    StepUnderflow(f64, usize),
    #[error("path has {found} coordinates, connection has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerances must be positive")]
    InvalidTolerance,
    #[error("loop does not close (gap {0:e})")]
    OpenLoop(f64),
}

/// A point `[re, im]` as it appears in JSON.
pub type Point = [f64; 2];

fn c(p: Point) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Straight line to the given configuration.
    Linear { to: Vec<Point> },
    /// Rotates coordinate `slot` by `angle` radians about `center`; the others stay fixed.
    Arc { slot: usize, center: Point, angle: f64 },
    /// `turns` full counterclockwise circles of `slot` about the current position of `around`.
    Loop { slot: usize, around: usize, turns: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub start: Vec<Point>,
    pub segments: Vec<Segment>,
    #[serde(default = "default_tol")]
    pub atol: f64,
    #[serde(default = "default_tol")]
    pub rtol: f64,
    /// Minimum allowed pairwise distance; defaults to `1e−3 ×` the path diameter.
    #[serde(default)]
    pub distance_floor: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

impl PathSpec {
    pub fn new(start: Vec<Complex64>, segments: Vec<Segment>) -> Self {
        PathSpec {
            start: start.iter().map(|z| [z.re, z.im]).collect(),
            segments,
            atol: default_tol(),
            rtol: default_tol(),
            distance_floor: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.atol = tol;
        self.rtol = tol;
        self
    }

    fn resolve(&self) -> Vec<ResolvedSegment> {
        let mut at: Vec<Complex64> = self.start.iter().copied().map(c).collect();
        let mut out = Vec::new();
        for seg in &self.segments {
            let r = match seg {
                Segment::Linear { to } => ResolvedSegment::Linear { from: at.clone(), to: to.iter().copied().map(c).collect() },
                Segment::Arc { slot, center, angle } => {
                    ResolvedSegment::Arc { base: at.clone(), slot: *slot, center: c(*center), angle: *angle }
                }
                Segment::Loop { slot, around, turns } => ResolvedSegment::Arc {
                    base: at.clone(),
                    slot: *slot,
                    center: at[*around],
                    angle: 2.0 * PI * f64::from(*turns),
                },
            };
            at = r.point(1.0);
            out.push(r);
        }
        out
    }

    pub fn end(&self) -> Vec<Complex64> {
        self.resolve().last().map(|r| r.point(1.0)).unwrap_or_else(|| self.start.iter().copied().map(c).collect())
    }

    /// Largest distance between two coordinates over waypoints and sampled arc points.
    pub fn diameter(&self) -> f64 {
        let mut points: Vec<Complex64> = self.start.iter().copied().map(c).collect();
        for seg in self.resolve() {
            for k in 1..=16 {
                points.extend(seg.point(k as f64 / 16.0));
            }
        }
        let mut d: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn reversed(&self) -> PathSpec {
        let resolved = self.resolve();
        let mut segments = Vec::new();
        for r in resolved.iter().rev() {
            segments.push(match r {
                ResolvedSegment::Linear { from, .. } => Segment::Linear { to: from.iter().map(|z| [z.re, z.im]).collect() },
                ResolvedSegment::Arc { slot, center, angle, .. } => {
                    Segment::Arc { slot: *slot, center: [center.re, center.im], angle: -angle }
                }
            });
        }
        let end = self.end();
        PathSpec { start: end.iter().map(|z| [z.re, z.im]).collect(), segments, ..self.clone() }
    }
}

#[derive(Debug, Clone)]
enum ResolvedSegment {
    Linear { from: Vec<Complex64>, to: Vec<Complex64> },
    Arc { base: Vec<Complex64>, slot: usize, center: Complex64, angle: f64 },
}

impl ResolvedSegment {
    fn point(&self, s: f64) -> Vec<Complex64> {
        match self {
            ResolvedSegment::Linear { from, to } => from.iter().zip(to).map(|(a, b)| a + (b - a) * s).collect(),
            ResolvedSegment::Arc { base, slot, center, angle } => {
                let mut p = base.clone();
                p[*slot] = center + (base[*slot] - center) * Complex64::new(0.0, angle * s).exp();
                p
            }
        }
    }

    fn velocity(&self, s: f64) -> Vec<Complex64> {
        match self {
            ResolvedSegment::Linear { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            ResolvedSegment::Arc { base, slot, center, angle } => {
                let mut v = vec![Complex64::new(0.0, 0.0); base.len()];
                v[*slot] = (base[*slot] - center) * Complex64::new(0.0, *angle) * Complex64::new(0.0, angle * s).exp();
                v
            }
        }
    }
}

pub fn to_complex(m: &Matrix) -> CMatrix {
    CMatrix::from_fn(m.rows, m.cols, |i, j| Complex64::new(to_f64(m.get(i, j)), 0.0))
}

/// Float copies of the (reduced) term matrices; the exact ones stay authoritative.
#[derive(Debug, Clone)]
pub struct FloatConnection {
    pub dim: usize,
    pub hamiltonians: Vec<Vec<(Coefficient, CMatrix)>>,
    pub dilations: Vec<Vec<(Coefficient, CMatrix)>>,
}

impl FloatConnection {
    pub fn new(exact: &TermMatrices) -> Self {
        let convert = |list: &Vec<Vec<(Coefficient, std::sync::Arc<Matrix>)>>| {
            list.iter().map(|terms| terms.iter().map(|(c, m)| (c.clone(), to_complex(m))).collect()).collect()
        };
        FloatConnection { dim: exact.dim, hamiltonians: convert(&exact.hamiltonians), dilations: convert(&exact.dilations) }
    }

    pub fn points(&self) -> usize {
        self.hamiltonians.len()
    }

    fn combine(&self, terms: &[(Coefficient, CMatrix)], t: &[Complex64], weight: Complex64, out: &mut CMatrix) {
        for (coef, m) in terms {
            let x = coef.eval_complex(t) * weight;
            if x != Complex64::new(0.0, 0.0) {
                *out += m * x;
            }
        }
    }

    pub fn hamiltonian(&self, i: usize, t: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.combine(&self.hamiltonians[i], t, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    pub fn dilation(&self, i: usize, t: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.combine(&self.dilations[i], t, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// `ϖ(t)[v] = Σ_i v_i Ĥ_i(t)`.
    pub fn form(&self, t: &[Complex64], velocity: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (i, terms) in self.hamiltonians.iter().enumerate() {
            if velocity[i] != Complex64::new(0.0, 0.0) {
                self.combine(terms, t, velocity[i], &mut out);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Transport {
    /// Fundamental solution: column `k` is the transport of the `k`-th basis vector.
    pub matrix: CMatrix,
    /// `∫ tr ϖ`, so that `det(matrix) ≈ exp(log_det)`.
    pub log_det: Complex64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Sum of accepted local error estimates.
    pub error_estimate: f64,
    pub min_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportSummary {
    pub dim: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub error_estimate: f64,
    pub min_distance: f64,
    pub det: [f64; 2],
    pub exp_trace_integral: [f64; 2],
}

impl Transport {
    pub fn summary(&self) -> TransportSummary {
        let det = self.matrix.determinant();
        let oracle = self.log_det.exp();
        TransportSummary {
            dim: self.matrix.nrows(),
            accepted_steps: self.accepted_steps,
            rejected_steps: self.rejected_steps,
            error_estimate: self.error_estimate,
            min_distance: self.min_distance,
            det: [det.re, det.im],
            exp_trace_integral: [oracle.re, oracle.im],
        }
    }
}

fn min_pairwise(t: &[Complex64]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            d = d.min((t[i] - t[j]).norm());
        }
    }
    d
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct StepResult {
    y: CMatrix,
    log_det: Complex64,
    error: CMatrix,
}

struct Integrator<'a> {
    conn: &'a FloatConnection,
    floor: f64,
    min_distance: f64,
}

impl Integrator<'_> {
    fn generator(&mut self, seg: &ResolvedSegment, index: usize, s: f64) -> Result<CMatrix, TransportError> {
        let t = seg.point(s);
        let d = min_pairwise(&t);
        self.min_distance = self.min_distance.min(d);
        if d < self.floor {
            return Err(TransportError::CoalescencePenalty { segment: index, s, distance: d, floor: self.floor });
        }
        Ok(self.conn.form(&t, &seg.velocity(s)))
    }

    fn step(&mut self, seg: &ResolvedSegment, index: usize, s: f64, h: f64, y: &CMatrix) -> Result<StepResult, TransportError> {
        let mut k: Vec<CMatrix> = Vec::with_capacity(7);
        let mut traces: Vec<Complex64> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[stage][j] != 0.0 {
                    arg += kj * Complex64::new(h * A[stage][j], 0.0);
                }
            }
            let a = self.generator(seg, index, s + C[stage] * h)?;
            traces.push(a.trace());
            k.push(&a * &arg);
        }
        let mut y5 = y.clone();
        let mut error = CMatrix::zeros(y.nrows(), y.ncols());
        let mut log_det = Complex64::new(0.0, 0.0);
        for i in 0..7 {
            y5 += &k[i] * Complex64::new(h * B5[i], 0.0);
            error += &k[i] * Complex64::new(h * (B5[i] - B4[i]), 0.0);
            log_det += traces[i] * (h * B5[i]);
        }
        Ok(StepResult { y: y5, log_det, error })
    }
}

fn error_norm(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, atol: f64, rtol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let scale = atol + rtol * a.norm().max(b.norm());
        worst = worst.max(e.norm() / scale);
    }
    worst
}

fn floor_for(path: &PathSpec) -> f64 {
    path.distance_floor.unwrap_or_else(|| 1e-3 * path.diameter())
}

fn check_path(path: &PathSpec, conn: &FloatConnection) -> Result<(), TransportError> {
    if path.start.len() != conn.points() {
        return Err(TransportError::DimensionMismatch { expected: conn.points(), found: path.start.len() });
    }
    if !(path.atol > 0.0 && path.rtol > 0.0) {
        return Err(TransportError::InvalidTolerance);
    }
    Ok(())
}

/// Adaptive transport of the identity along the path.
pub fn integrate(path: &PathSpec, conn: &FloatConnection) -> Result<Transport, TransportError> {
    check_path(path, conn)?;
    let mut integ = Integrator { conn, floor: floor_for(path), min_distance: f64::INFINITY };
    let mut y = CMatrix::identity(conn.dim, conn.dim);
    let mut log_det = Complex64::new(0.0, 0.0);
    let (mut accepted, mut rejected, mut total_error) = (0usize, 0usize, 0.0f64);
    let h_min = 1e-14;
    for (index, seg) in path.resolve().iter().enumerate() {
        let mut s = 0.0;
        let mut h: f64 = 0.01;
        while s < 1.0 {
            h = h.min(1.0 - s);
            let step = integ.step(seg, index, s, h, &y)?;
            let err = error_norm(&step.error, &y, &step.y, path.atol, path.rtol);
            if err <= 1.0 {
                s += h;
                y = step.y;
                log_det += step.log_det;
                accepted += 1;
                total_error += step.error.iter().map(|e| e.norm()).fold(0.0, f64::max);
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h < h_min && s < 1.0 {
                return Err(TransportError::StepUnderflow(h, index));
            }
        }
    }
    Ok(Transport {
        matrix: y,
        log_det,
        accepted_steps: accepted,
        rejected_steps: rejected,
        error_estimate: total_error,
        min_distance: integ.min_distance,
    })
}

/// Fixed-step Dormand–Prince (fifth-order solution), `steps` steps per segment.
pub fn integrate_fixed(path: &PathSpec, conn: &FloatConnection, steps: usize) -> Result<CMatrix, TransportError> {
    check_path(path, conn)?;
    let mut integ = Integrator { conn, floor: floor_for(path), min_distance: f64::INFINITY };
    let mut y = CMatrix::identity(conn.dim, conn.dim);
    let h = 1.0 / steps as f64;
    for (index, seg) in path.resolve().iter().enumerate() {
        for k in 0..steps {
            y = integ.step(seg, index, k as f64 * h, h, &y)?.y;
        }
    }
    Ok(y)
}

pub fn transport_vector(path: &PathSpec, conn: &FloatConnection, v0: &[Complex64]) -> Result<(Vec<Complex64>, Transport), TransportError> {
    let tr = integrate(path, conn)?;
    let v = &tr.matrix * nalgebra::DVector::from_column_slice(v0);
    Ok((v.iter().copied().collect(), tr))
}

/// Transport around a closed loop.
pub fn monodromy(path: &PathSpec, conn: &FloatConnection) -> Result<Transport, TransportError> {
    let start: Vec<Complex64> = path.start.iter().copied().map(c).collect();
    let gap = path.end().iter().zip(&start).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if gap > 1e-9 * (1.0 + path.diameter()) {
        return Err(TransportError::OpenLoop(gap));
    }
    integrate(path, conn)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineReport {
    pub a: f64,
    pub b: [f64; 2],
    pub residual: f64,
}

/// Transports from `t` to `e^{2a} t + b` along a straight line and compares the result with
/// `Π_i exp(a L_0^{(i)}(t))`; the product formula is exact when the finite points are tame.
pub fn affine_equivariance_check(conn: &FloatConnection, t: &[Complex64], a: f64, b: Complex64, tol: f64) -> Result<AffineReport, TransportError> {
    let scale = (2.0 * a).exp();
    let target: Vec<Point> = t.iter().map(|z| z * scale + b).map(|z| [z.re, z.im]).collect();
    let path = PathSpec::new(t.to_vec(), vec![Segment::Linear { to: target }]).with_tolerance(tol);
    let transport = integrate(&path, conn)?;
    let mut oracle = CMatrix::identity(conn.dim, conn.dim);
    for i in 0..conn.points() {
        oracle = (conn.dilation(i, t) * Complex64::new(a, 0.0)).exp() * oracle;
    }
    Ok(AffineReport { a, b: [b.re, b.im], residual: max_abs_diff(&transport.matrix, &oracle) })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub steps: Vec<usize>,
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Closed-loop residual `‖Y − I‖` under repeated step halving.
pub fn order_check(path: &PathSpec, conn: &FloatConnection, base_steps: usize, levels: usize) -> Result<OrderReport, TransportError> {
    let identity = CMatrix::identity(conn.dim, conn.dim);
    let steps: Vec<usize> = (0..levels).map(|k| base_steps << k).collect();
    let residuals = steps
        .iter()
        .map(|&n| integrate_fixed(path, conn, n).map(|y| max_abs_diff(&y, &identity)))
        .collect::<Result<Vec<_>, _>>()?;
    let ratios = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(OrderReport { steps, residuals, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_connection(residue: f64) -> FloatConnection {
        use crate::connection::TimeFactor;
        use crate::rational::q;
        let coef = Coefficient { scale: q(1), powers: vec![(TimeFactor::Diff(0, 1), -1)] };
        let neg = Coefficient { scale: q(-1), powers: vec![(TimeFactor::Diff(0, 1), -1)] };
        let m = CMatrix::from_element(1, 1, Complex64::new(residue, 0.0));
        FloatConnection { dim: 1, hamiltonians: vec![vec![(coef, m.clone())], vec![(neg, m)]], dilations: vec![vec![], vec![]] }
    }

    #[test]
    fn scalar_loop_gives_exponential_of_residue() {
        let conn = scalar_connection(0.3);
        let start = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let path = PathSpec::new(start, vec![Segment::Loop { slot: 0, around: 1, turns: 1 }]);
        let tr = monodromy(&path, &conn).unwrap();
        let expected = Complex64::new(0.0, 2.0 * PI * 0.3).exp();
        assert!((tr.matrix[(0, 0)] - expected).norm() < 1e-9);
    }

    #[test]
    fn coalescence_is_detected() {
        let conn = scalar_connection(1.0);
        let start = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let path = PathSpec::new(start, vec![Segment::Linear { to: vec![[0.0, 0.0], [0.0, 0.0]] }]);
        assert!(matches!(integrate(&path, &conn), Err(TransportError::CoalescencePenalty { .. })));
    }
}
