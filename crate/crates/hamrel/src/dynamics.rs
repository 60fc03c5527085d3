//! Solution propagation for both systems: single steps, fundamental
//! matrices, the summation identity, variation of constants, and the
//! patched boundary value construction.

use serde::Serialize;

use crate::linalg::{ceye, czeros, solve, solve_mat};
use crate::system::{symplectic_j, CoefficientField, IntegerInterval, SystemSide};
use crate::{C64, CMatrix, CVector, Error, Result};

/// A `C^2n`-valued sequence on the points `[a, b+1]` of an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    interval: IntegerInterval,
    n: usize,
    values: Vec<CVector>,
}

impl Trajectory {
    pub fn zero(n: usize, interval: IntegerInterval) -> Self {
        Self {
            interval,
            n,
            values: vec![CVector::zeros(2 * n); interval.point_count()],
        }
    }

    pub fn from_values(n: usize, interval: IntegerInterval, values: Vec<CVector>) -> Result<Self> {
        if values.len() != interval.point_count() {
            return Err(Error::DimensionMismatch(format!(
                "trajectory needs {} points, got {}",
                interval.point_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.nrows() != 2 * n) {
            return Err(Error::DimensionMismatch("trajectory entries must be 2n-vectors".into()));
        }
        Ok(Self { interval, n, values })
    }

    pub fn interval(&self) -> IntegerInterval {
        self.interval
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, t: i64) -> usize {
        assert!(
            self.interval.contains_point(t),
            "point {t} outside [{}, {}]",
            self.interval.a,
            self.interval.b + 1
        );
        (t - self.interval.a) as usize
    }

    pub fn at(&self, t: i64) -> &CVector {
        &self.values[self.idx(t)]
    }

    pub fn set(&mut self, t: i64, v: CVector) {
        assert_eq!(v.nrows(), 2 * self.n);
        let i = self.idx(t);
        self.values[i] = v;
    }

    /// First `n` entries of `y(t)`.
    pub fn u(&self, t: i64) -> CVector {
        self.at(t).rows(0, self.n).into_owned()
    }

    /// Last `n` entries of `y(t)`.
    pub fn v(&self, t: i64) -> CVector {
        self.at(t).rows(self.n, self.n).into_owned()
    }

    /// Partial right shift `R(y)(t) = (u(t+1); v(t))`, defined on sites.
    pub fn r_at(&self, t: i64) -> CVector {
        assert!(self.interval.contains_site(t), "shift needs a site index");
        let mut r = CVector::zeros(2 * self.n);
        r.rows_mut(0, self.n).copy_from(&self.u(t + 1));
        r.rows_mut(self.n, self.n).copy_from(&self.v(t));
        r
    }

    /// Flatten to one ambient vector of length `2n (b - a + 2)`.
    pub fn to_ambient(&self) -> CVector {
        let mut out = CVector::zeros(2 * self.n * self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            out.rows_mut(2 * self.n * i, 2 * self.n).copy_from(v);
        }
        out
    }

    pub fn from_ambient(n: usize, interval: IntegerInterval, x: &CVector) -> Result<Self> {
        let pts = interval.point_count();
        if x.nrows() != 2 * n * pts {
            return Err(Error::DimensionMismatch(format!(
                "ambient vector has {} entries, expected {}",
                x.nrows(),
                2 * n * pts
            )));
        }
        let values = (0..pts)
            .map(|i| x.rows(2 * n * i, 2 * n).into_owned())
            .collect();
        Self::from_values(n, interval, values)
    }

    pub fn scaled(&self, z: C64) -> Trajectory {
        Trajectory {
            interval: self.interval,
            n: self.n,
            values: self.values.iter().map(|v| v * z).collect(),
        }
    }

    pub fn add(&self, other: &Trajectory) -> Trajectory {
        assert_eq!(self.interval, other.interval);
        Trajectory {
            interval: self.interval,
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Trajectory) -> Trajectory {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Zero-extend onto a containing interval.
    pub fn extend_zero(&self, target: IntegerInterval) -> Result<Trajectory> {
        if !target.contains(&self.interval) {
            return Err(Error::IntervalMismatch(
                "target interval does not contain the trajectory interval".into(),
            ));
        }
        let mut out = Trajectory::zero(self.n, target);
        for t in self.interval.points() {
            out.set(t, self.at(t).clone());
        }
        Ok(out)
    }
}

/// Propagation direction for [`step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// `W(t) R(g)(t)` split into its two `n`-blocks.
fn forcing_blocks(coeffs: &CoefficientField, g: Option<&Trajectory>, t: i64) -> (CVector, CVector) {
    let n = coeffs.n();
    match g {
        None => (CVector::zeros(n), CVector::zeros(n)),
        Some(g) => (coeffs.w1_at(t) * g.u(t + 1), coeffs.w2_at(t) * g.v(t)),
    }
}

fn step_impl(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    t: i64,
    y: &CVector,
    direction: Direction,
    g: Option<&Trajectory>,
) -> Result<CVector> {
    let n = coeffs.n();
    if y.nrows() != 2 * n {
        return Err(Error::DimensionMismatch("state must be a 2n-vector".into()));
    }
    let (ar, br, cr, dr) = coeffs.side_blocks(side, t);
    let id = ceye(n);
    let ia = &id - &ar;
    let idm = &id - &dr;
    let bw = &br + coeffs.w2_at(t) * lambda;
    let cw = &cr - coeffs.w1_at(t) * lambda;
    let (f1, f2) = forcing_blocks(coeffs, g, t);
    let mut out = CVector::zeros(2 * n);
    match direction {
        Direction::Forward => {
            let u = y.rows(0, n).into_owned();
            let v = y.rows(n, n).into_owned();
            let rhs = &u + &bw * &v + &f2;
            let u_next = solve(&ia, &rhs).ok_or(Error::AssumptionA1 {
                site: t,
                what: "I - A",
                cond: crate::linalg::cond2(&ia),
            })?;
            let v_next = &idm * &v + &cw * &u_next - &f1;
            out.rows_mut(0, n).copy_from(&u_next);
            out.rows_mut(n, n).copy_from(&v_next);
        }
        Direction::Backward => {
            let u_next = y.rows(0, n).into_owned();
            let v_next = y.rows(n, n).into_owned();
            let rhs = &v_next - &cw * &u_next + &f1;
            let v = solve(&idm, &rhs).ok_or(Error::AssumptionA1 {
                site: t,
                what: "I - D",
                cond: crate::linalg::cond2(&idm),
            })?;
            let u = &ia * &u_next - &bw * &v - &f2;
            out.rows_mut(0, n).copy_from(&u);
            out.rows_mut(n, n).copy_from(&v);
        }
    }
    Ok(out)
}

/// One homogeneous step of the requested side at site `t`.
///
/// `Forward` maps `y(t)` to `y(t+1)`; `Backward` maps `y(t+1)` to
/// `y(t)` by the algebraic inverse.
pub fn step(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    y: &CVector,
    t: i64,
    direction: Direction,
) -> Result<CVector> {
    step_impl(side, coeffs, lambda, t, y, direction, None)
}

/// Fundamental solution matrix normalized to the identity at `c0`.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub side: SystemSide,
    pub lambda: C64,
    pub c0: i64,
    interval: IntegerInterval,
    n: usize,
    values: Vec<CMatrix>,
}

impl FundamentalMatrix {
    pub fn interval(&self) -> IntegerInterval {
        self.interval
    }

    pub fn at(&self, t: i64) -> &CMatrix {
        assert!(self.interval.contains_point(t));
        &self.values[(t - self.interval.a) as usize]
    }

    /// `R(Y)(t)`: top rows from `Y(t+1)`, bottom rows from `Y(t)`.
    pub fn r_at(&self, t: i64) -> CMatrix {
        assert!(self.interval.contains_site(t));
        let n = self.n;
        let mut r = czeros(2 * n, 2 * n);
        r.view_mut((0, 0), (n, 2 * n))
            .copy_from(&self.at(t + 1).view((0, 0), (n, 2 * n)).into_owned());
        r.view_mut((n, 0), (n, 2 * n))
            .copy_from(&self.at(t).view((n, 0), (n, 2 * n)).into_owned());
        r
    }

    /// Extract column `j` as a trajectory.
    pub fn column(&self, j: usize) -> Trajectory {
        let values = self.values.iter().map(|m| m.column(j).into_owned()).collect();
        Trajectory::from_values(self.n, self.interval, values).expect("consistent shapes")
    }
}

/// Propagate the fundamental matrix of the requested side from `c0`.
pub fn fundamental_matrix(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    c0: i64,
) -> Result<FundamentalMatrix> {
    let iv = coeffs.interval();
    if !iv.contains_point(c0) {
        return Err(Error::IntervalMismatch(format!(
            "c0 = {c0} outside the trajectory range [{}, {}]",
            iv.a,
            iv.b + 1
        )));
    }
    let n = coeffs.n();
    let id = ceye(n);
    let pts = iv.point_count();
    let mut values = vec![czeros(2 * n, 2 * n); pts];
    values[(c0 - iv.a) as usize] = ceye(2 * n);

    let mat_step = |t: i64, m: &CMatrix, dir: Direction| -> Result<CMatrix> {
        let (ar, br, cr, dr) = coeffs.side_blocks(side, t);
        let ia = &id - &ar;
        let idm = &id - &dr;
        let bw = &br + coeffs.w2_at(t) * lambda;
        let cw = &cr - coeffs.w1_at(t) * lambda;
        let mut out = czeros(2 * n, 2 * n);
        match dir {
            Direction::Forward => {
                let u = m.view((0, 0), (n, 2 * n)).into_owned();
                let v = m.view((n, 0), (n, 2 * n)).into_owned();
                let u_next = solve_mat(&ia, &(&u + &bw * &v)).ok_or(Error::AssumptionA1 {
                    site: t,
                    what: "I - A",
                    cond: crate::linalg::cond2(&ia),
                })?;
                let v_next = &idm * &v + &cw * &u_next;
                out.view_mut((0, 0), (n, 2 * n)).copy_from(&u_next);
                out.view_mut((n, 0), (n, 2 * n)).copy_from(&v_next);
            }
            Direction::Backward => {
                let u_next = m.view((0, 0), (n, 2 * n)).into_owned();
                let v_next = m.view((n, 0), (n, 2 * n)).into_owned();
                let v = solve_mat(&idm, &(&v_next - &cw * &u_next)).ok_or(Error::AssumptionA1 {
                    site: t,
                    what: "I - D",
                    cond: crate::linalg::cond2(&idm),
                })?;
                let u = &ia * &u_next - &bw * &v;
                out.view_mut((0, 0), (n, 2 * n)).copy_from(&u);
                out.view_mut((n, 0), (n, 2 * n)).copy_from(&v);
            }
        }
        Ok(out)
    };

    for t in c0..=iv.b {
        let next = mat_step(t, &values[(t - iv.a) as usize], Direction::Forward)?;
        values[(t + 1 - iv.a) as usize] = next;
    }
    for t in (iv.a..c0).rev() {
        let prev = mat_step(t, &values[(t + 1 - iv.a) as usize], Direction::Backward)?;
        values[(t - iv.a) as usize] = prev;
    }
    Ok(FundamentalMatrix {
        side,
        lambda,
        c0,
        interval: iv,
        n,
        values,
    })
}

/// Maximum scaled per-site residual of the forced system
/// `J Δy − P R(y) − λ W R(y) − W R(g)` over the interval.
pub fn forced_residual(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    y: &Trajectory,
    g: Option<&Trajectory>,
) -> f64 {
    let n = coeffs.n();
    let j = symplectic_j(n);
    let mut worst: f64 = 0.0;
    for t in coeffs.interval().sites() {
        let dy = y.at(t + 1) - y.at(t);
        let ry = y.r_at(t);
        let p = coeffs.p_matrix(side, t);
        let w = coeffs.w_matrix(t);
        let mut res = &j * &dy - &p * &ry - &w * &ry * lambda;
        let mut scale = 1.0 + y.at(t).norm() + y.at(t + 1).norm();
        if let Some(g) = g {
            let rg = g.r_at(t);
            res -= &w * &rg;
            scale += rg.norm();
        }
        worst = worst.max(res.norm() / scale);
    }
    worst
}

/// Solve the forced initial value problem
/// `(L_side y)(t) = λ W(t) R(y)(t) + W(t) R(g)(t)`, `y(t0) = y0`,
/// propagating forward and backward from `t0` by the site recursion.
pub fn solve_forced_ivp(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    g: &Trajectory,
    t0: i64,
    y0: &CVector,
) -> Result<Trajectory> {
    let iv = coeffs.interval();
    if g.interval() != iv {
        return Err(Error::IntervalMismatch(
            "forcing must live on the coefficient interval".into(),
        ));
    }
    if !iv.contains_point(t0) {
        return Err(Error::IntervalMismatch(format!("t0 = {t0} outside range")));
    }
    let mut y = Trajectory::zero(coeffs.n(), iv);
    y.set(t0, y0.clone());
    for t in t0..=iv.b {
        let next = step_impl(side, coeffs, lambda, t, y.at(t), Direction::Forward, Some(g))?;
        y.set(t + 1, next);
    }
    for t in (iv.a..t0).rev() {
        let prev = step_impl(side, coeffs, lambda, t, y.at(t + 1), Direction::Backward, Some(g))?;
        y.set(t, prev);
    }
    Ok(y)
}

/// Solve the same forced problem through the closed variation-of-
/// constants formula
///
/// ```text
/// y(t) = Y(t) y0 ∓ Y(t) J Σ R(Y_opp)*(s, conj λ) W(s) R(g)(s)
/// ```
///
/// with the sum over `[c0, t-1]` (minus) for `t > c0` and over
/// `[t, c0-1]` (plus) for `t < c0`.
pub fn solve_voc(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    g: &Trajectory,
    c0: i64,
    y0: &CVector,
) -> Result<Trajectory> {
    let iv = coeffs.interval();
    if g.interval() != iv {
        return Err(Error::IntervalMismatch(
            "forcing must live on the coefficient interval".into(),
        ));
    }
    let n = coeffs.n();
    let j = symplectic_j(n);
    let own = fundamental_matrix(side, coeffs, lambda, c0)?;
    let opp = fundamental_matrix(side.opposite(), coeffs, lambda.conj(), c0)?;
    let term = |s: i64| -> CVector { opp.r_at(s).adjoint() * coeffs.w_matrix(s) * g.r_at(s) };

    let mut y = Trajectory::zero(n, iv);
    y.set(c0, y0.clone());
    let mut acc = CVector::zeros(2 * n);
    for t in (c0 + 1)..=(iv.b + 1) {
        acc += term(t - 1);
        y.set(t, own.at(t) * y0 - own.at(t) * &j * &acc);
    }
    acc = CVector::zeros(2 * n);
    for t in (iv.a..c0).rev() {
        acc += term(t);
        y.set(t, own.at(t) * y0 + own.at(t) * &j * &acc);
    }
    Ok(y)
}

/// Both sides of the summation identity for a forced pair, with their
/// gap: `x` solves side 1 with forcing `f`, `y` solves side 2 with
/// forcing `g`, and
///
/// ```text
/// Σ_{t=s}^{k} [R(y)* W R(f) − R(g)* W R(x)] = (y* J x) |_s^{k+1}.
/// ```
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub gap: f64,
    pub scale: f64,
    pub residual_side1: f64,
    pub residual_side2: f64,
}

impl IdentityReport {
    pub fn scaled_gap(&self) -> f64 {
        self.gap / self.scale
    }
}

/// Evaluate the summation identity on `[s, k]` for a caller-supplied
/// forced pair; the inputs' residuals are re-checked and reported.
#[allow(clippy::too_many_arguments)]
pub fn lagrange_report(
    coeffs: &CoefficientField,
    x: &Trajectory,
    f: &Trajectory,
    y: &Trajectory,
    g: &Trajectory,
    s: i64,
    k: i64,
    residual_tol: f64,
) -> Result<IdentityReport> {
    let iv = coeffs.interval();
    if !(iv.contains_site(s) && iv.contains_site(k) && s <= k) {
        return Err(Error::IntervalMismatch(format!("[{s}, {k}] not inside the interval")));
    }
    let res1 = forced_residual(SystemSide::Side1, coeffs, C64::new(0.0, 0.0), x, Some(f));
    let res2 = forced_residual(SystemSide::Side2, coeffs, C64::new(0.0, 0.0), y, Some(g));
    if res1 > residual_tol || res2 > residual_tol {
        return Err(Error::InvalidInput(format!(
            "inputs do not solve their systems: residuals {res1:.3e}, {res2:.3e} > {residual_tol:.1e}"
        )));
    }
    let mut lhs = C64::new(0.0, 0.0);
    let mut scale = 1.0f64;
    for t in s..=k {
        let w = coeffs.w_matrix(t);
        let a = (y.r_at(t).adjoint() * &w * f.r_at(t))[(0, 0)];
        let b = (g.r_at(t).adjoint() * &w * x.r_at(t))[(0, 0)];
        lhs += a - b;
        scale += a.norm() + b.norm();
    }
    let j = symplectic_j(coeffs.n());
    let hi = (y.at(k + 1).adjoint() * &j * x.at(k + 1))[(0, 0)];
    let lo = (y.at(s).adjoint() * &j * x.at(s))[(0, 0)];
    let rhs = hi - lo;
    scale += hi.norm() + lo.norm();
    Ok(IdentityReport {
        lhs: (lhs.re, lhs.im),
        rhs: (rhs.re, rhs.im),
        gap: (lhs - rhs).norm(),
        scale,
        residual_side1: res1,
        residual_side2: res2,
    })
}

/// Maximum drift of `y2*(t) J y1(t)` across the interval for a
/// homogeneous pair (`y1` side 1 at `λ`, `y2` side 2 at `conj λ`).
pub fn wronskian_drift(coeffs: &CoefficientField, y1: &Trajectory, y2: &Trajectory) -> f64 {
    let j = symplectic_j(coeffs.n());
    let iv = coeffs.interval();
    let base = (y2.at(iv.a).adjoint() * &j * y1.at(iv.a))[(0, 0)];
    let scale = 1.0 + y1.max_norm() * y2.max_norm();
    iv.points()
        .map(|t| ((y2.at(t).adjoint() * &j * y1.at(t))[(0, 0)] - base).norm() / scale)
        .fold(0.0, f64::max)
}

/// Maximum scaled error of `Y2*(t, conj λ) J Y1(t, λ) = J` over the
/// interval, with both fundamental matrices normalized at `c0`.
pub fn fundamental_identity_error(
    coeffs: &CoefficientField,
    lambda: C64,
    c0: i64,
) -> Result<f64> {
    let y1 = fundamental_matrix(SystemSide::Side1, coeffs, lambda, c0)?;
    let y2 = fundamental_matrix(SystemSide::Side2, coeffs, lambda.conj(), c0)?;
    let j = symplectic_j(coeffs.n());
    let mut worst: f64 = 0.0;
    for t in coeffs.interval().points() {
        let lhs = y2.at(t).adjoint() * &j * y1.at(t);
        let scale = 1.0 + y1.at(t).norm() * y2.at(t).norm();
        worst = worst.max((lhs - &j).norm() / scale);
    }
    Ok(worst)
}

/// Maximum scaled defect of the shift identity
/// `R(y)(t) = [[(I−A)⁻¹, (I−A)⁻¹(B+λW2)], [0, I]] y(t)`
/// for a homogeneous solution of the requested side.
pub fn shift_identity_error(
    side: SystemSide,
    coeffs: &CoefficientField,
    lambda: C64,
    y: &Trajectory,
) -> Result<f64> {
    let n = coeffs.n();
    let id = ceye(n);
    let mut worst: f64 = 0.0;
    for t in coeffs.interval().sites() {
        let (ar, br, _, _) = coeffs.side_blocks(side, t);
        let ia = &id - &ar;
        let bw = &br + coeffs.w2_at(t) * lambda;
        let inv_ia = solve_mat(&ia, &id).ok_or(Error::AssumptionA1 {
            site: t,
            what: "I - A",
            cond: crate::linalg::cond2(&ia),
        })?;
        let mut m = czeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&inv_ia);
        m.view_mut((0, n), (n, n)).copy_from(&(&inv_ia * &bw));
        m.view_mut((n, n), (n, n)).copy_from(&id);
        let defect = y.r_at(t) - &m * y.at(t);
        let scale = 1.0 + y.at(t).norm() + y.r_at(t).norm();
        worst = worst.max(defect.norm() / scale);
    }
    Ok(worst)
}

/// Output of [`patch_bvp`]: a forcing `g` and a solution `y` of the
/// requested side on the window with `y(s) = α`, `y(k+1) = β`.
#[derive(Debug, Clone)]
pub struct PatchSolution {
    pub forcing: Trajectory,
    pub solution: Trajectory,
}

/// Construct `(g, y)` with `(L_side y)(t) = W(t) R(g)(t)` on the window
/// `[s, k]`, `y(s) = α` and `y(k+1) = β`.
///
/// The construction runs through the opposite side's homogeneous
/// solutions: with `Φ` their fundamental matrix at spectral value 0,
/// the window Gram `M = Σ R(Φ)* W R(Φ)` is nonsingular exactly when the
/// definiteness surrogate holds on the window, the two coefficient
/// vectors solve `M c1 = Φ(k+1)* J β` and `M c2 = Φ(s)* J α`, and the
/// requested side's forced initial value problems
/// `(L y)(t) = W R(Φ c1)(t), y(s) = 0` and
/// `(L y)(t) = −W R(Φ c2)(t), y(k+1) = 0`
/// hit `β` at `k+1` and `α` at `s` by the summation identity. The
/// returned pair is `g = Φ(c1 − c2)`, `y = u + v`.
pub fn patch_bvp(
    side: SystemSide,
    coeffs: &CoefficientField,
    window: IntegerInterval,
    alpha: &CVector,
    beta: &CVector,
) -> Result<PatchSolution> {
    let n = coeffs.n();
    if alpha.nrows() != 2 * n || beta.nrows() != 2 * n {
        return Err(Error::DimensionMismatch("boundary data must be 2n-vectors".into()));
    }
    let sub = coeffs.restrict(window)?;
    let s = window.a;
    let k = window.b;
    // Normalizing the solution family mid-window keeps the Gram much
    // better conditioned than anchoring at an endpoint.
    let mid = s + (k + 1 - s) / 2;
    let opp = fundamental_matrix(side.opposite(), &sub, C64::new(0.0, 0.0), mid)?;
    let mut gram = czeros(2 * n, 2 * n);
    for t in window.sites() {
        let r = opp.r_at(t);
        gram += r.adjoint() * sub.w_matrix(t) * r;
    }
    let j = symplectic_j(n);
    let rhs1 = opp.at(k + 1).adjoint() * &j * beta;
    let rhs2 = opp.at(s).adjoint() * &j * alpha;
    let lu = gram.clone().lu();
    let mut refined_solve = |rhs: &CVector| -> Result<CVector> {
        let mut x = lu.solve(rhs).ok_or_else(|| {
            Error::Definiteness("window Gram is singular; patch construction unavailable".into())
        })?;
        for _ in 0..2 {
            let resid = rhs - &gram * &x;
            if let Some(dx) = lu.solve(&resid) {
                x += dx;
            }
        }
        Ok(x)
    };
    let c1 = refined_solve(&rhs1)?;
    let c2 = refined_solve(&rhs2)?;

    let psi = |c: &CVector| -> Trajectory {
        let values = window.points().map(|t| opp.at(t) * c).collect();
        Trajectory::from_values(n, window, values).expect("consistent shapes")
    };
    let psi1 = psi(&c1);
    let psi2 = psi(&c2);

    let zero = CVector::zeros(2 * n);
    let u = solve_forced_ivp(side, &sub, C64::new(0.0, 0.0), &psi1, s, &zero)?;
    let v = solve_forced_ivp(
        side,
        &sub,
        C64::new(0.0, 0.0),
        &psi2.scaled(C64::new(-1.0, 0.0)),
        k + 1,
        &zero,
    )?;
    Ok(PatchSolution {
        forcing: psi1.sub(&psi2),
        solution: u.add(&v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_field, random_trajectory, InstanceSpec, WeightKind};
    use crate::tol;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cv(entries: &[C64]) -> CVector {
        CVector::from_column_slice(entries)
    }

    #[test]
    fn zero_system_step_is_identity_at_lambda_zero() {
        let iv = IntegerInterval::new(0, 4).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let y = cv(&[c(0.3, -0.2), c(1.5, 0.7)]);
        let next = step(SystemSide::Side1, &coeffs, c(0.0, 0.0), &y, 2, Direction::Forward).unwrap();
        assert!((next - y).norm() < 1e-15);
    }

    #[test]
    fn free_system_step_hand_value_at_lambda_i() {
        let iv = IntegerInterval::new(0, 4).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let y = cv(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let next = step(SystemSide::Side1, &coeffs, c(0.0, 1.0), &y, 0, Direction::Forward).unwrap();
        assert!((next - cv(&[c(1.0, 0.0), c(0.0, -1.0)])).norm() < 1e-15);
    }

    #[test]
    fn step_round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let iv = IntegerInterval::new(-2, 6).unwrap();
        for hermitian in [false, true] {
            let spec = InstanceSpec {
                n: 3,
                interval: iv,
                rho: 0.7,
                weights: WeightKind::RandomPd,
                hermitian,
            };
            let coeffs = random_field(&mut rng, &spec);
            for side in [SystemSide::Side1, SystemSide::Side2] {
                for _ in 0..10 {
                    let y = crate::instances::random_complex_vector(&mut rng, 6);
                    let lambda = c(0.4, -1.3);
                    let fwd = step(side, &coeffs, lambda, &y, 1, Direction::Forward).unwrap();
                    let back = step(side, &coeffs, lambda, &fwd, 1, Direction::Backward).unwrap();
                    assert!((back - &y).norm() / (1.0 + y.norm()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fundamental_matrix_normalization_and_free_values() {
        let iv = IntegerInterval::new(0, 5).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let fm = fundamental_matrix(SystemSide::Side1, &coeffs, c(0.0, 0.0), 2).unwrap();
        for t in iv.points() {
            assert!((fm.at(t) - ceye(2)).norm() < 1e-14);
        }
        let fm_i = fundamental_matrix(SystemSide::Side1, &coeffs, c(0.0, 1.0), 0).unwrap();
        assert!((fm_i.at(0) - ceye(2)).norm() < 1e-15);
        let expect = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert!((fm_i.at(1) - expect).norm() < 1e-14);
    }

    #[test]
    fn fundamental_matrix_solves_system_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let iv = IntegerInterval::new(0, 7).unwrap();
        let spec = InstanceSpec {
            n: 2,
            interval: iv,
            rho: 0.6,
            weights: WeightKind::RandomPd,
            hermitian: false,
        };
        let coeffs = random_field(&mut rng, &spec);
        let lambda = c(1.0, 1.0);
        for side in [SystemSide::Side1, SystemSide::Side2] {
            let fm = fundamental_matrix(side, &coeffs, lambda, 3).unwrap();
            for j in 0..4 {
                let col = fm.column(j);
                let res = forced_residual(side, &coeffs, lambda, &col, None);
                assert!(res < tol::SYSTEM_RESIDUAL, "column {j} residual {res}");
            }
        }
    }

    #[test]
    fn conservation_identity_hand_value() {
        // Free system at λ = i: M~* J M = J with M = Y1(1, i).
        let iv = IntegerInterval::new(0, 3).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let err = fundamental_identity_error(&coeffs, c(0.0, 1.0), 0).unwrap();
        assert!(err < 1e-14);
    }

    #[test]
    fn forced_recursion_free_ramp() {
        // Zero coefficients, W = I, λ = 0, g ≡ (0, 1), y(0) = 0: u(t) = t.
        let iv = IntegerInterval::new(0, 6).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let mut g = Trajectory::zero(1, iv);
        for t in iv.points() {
            g.set(t, cv(&[c(0.0, 0.0), c(1.0, 0.0)]));
        }
        let y0 = cv(&[c(0.0, 0.0), c(0.0, 0.0)]);
        let y = solve_forced_ivp(SystemSide::Side1, &coeffs, c(0.0, 0.0), &g, 0, &y0).unwrap();
        for t in iv.points() {
            assert!((y.u(t)[0] - c(t as f64, 0.0)).norm() < 1e-13);
            assert!(y.v(t).norm() < 1e-13);
        }
        // And the closed formula reproduces it.
        let via_voc = solve_voc(SystemSide::Side1, &coeffs, c(0.0, 0.0), &g, 0, &y0).unwrap();
        for t in iv.points() {
            assert!((via_voc.at(t) - y.at(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn voc_matches_recursion_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let iv = IntegerInterval::new(-3, 5).unwrap();
        for trial in 0..25 {
            let spec = InstanceSpec {
                n: 1 + trial % 3,
                interval: iv,
                rho: 0.6,
                weights: if trial % 2 == 0 { WeightKind::Identity } else { WeightKind::RandomPd },
                hermitian: trial % 5 == 0,
            };
            let coeffs = random_field(&mut rng, &spec);
            let n = spec.n;
            let g = random_trajectory(&mut rng, n, iv);
            let y0 = crate::instances::random_complex_vector(&mut rng, 2 * n);
            let lambda = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for side in [SystemSide::Side1, SystemSide::Side2] {
                let c0 = if trial % 2 == 0 { iv.a } else { 1 };
                let direct = solve_forced_ivp(side, &coeffs, lambda, &g, c0, &y0).unwrap();
                let closed = solve_voc(side, &coeffs, lambda, &g, c0, &y0).unwrap();
                let scale = 1.0 + direct.max_norm();
                let mut worst: f64 = 0.0;
                for t in iv.points() {
                    worst = worst.max((closed.at(t) - direct.at(t)).norm() / scale);
                }
                assert!(worst < tol::VOC_EQUIV, "trial {trial}: mismatch {worst}");
                let res = forced_residual(side, &coeffs, lambda, &direct, Some(&g));
                assert!(res < tol::SYSTEM_RESIDUAL, "trial {trial}: residual {res}");
            }
        }
    }

    #[test]
    fn lagrange_identity_zero_and_random() {
        let iv = IntegerInterval::new(0, 4).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        // Homogeneous constant solutions of the zero-coefficient system.
        let mut x = Trajectory::zero(1, iv);
        for t in iv.points() {
            x.set(t, cv(&[c(1.0, 0.0), c(2.0, 0.0)]));
        }
        let zero = Trajectory::zero(1, iv);
        let report = lagrange_report(&coeffs, &x, &zero, &x, &zero, 0, 3, 1e-8).unwrap();
        assert!(report.gap < 1e-14);
        assert!(report.lhs.0.abs() < 1e-14 && report.lhs.1.abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for trial in 0..15 {
            let spec = InstanceSpec {
                n: 2,
                interval: iv,
                rho: 0.55,
                weights: WeightKind::RandomPd,
                hermitian: false,
            };
            let coeffs = random_field(&mut rng, &spec);
            let f = random_trajectory(&mut rng, 2, iv);
            let g = random_trajectory(&mut rng, 2, iv);
            let x0 = crate::instances::random_complex_vector(&mut rng, 4);
            let y0 = crate::instances::random_complex_vector(&mut rng, 4);
            let x = solve_forced_ivp(SystemSide::Side1, &coeffs, c(0.0, 0.0), &f, 0, &x0).unwrap();
            let y = solve_forced_ivp(SystemSide::Side2, &coeffs, c(0.0, 0.0), &g, 0, &y0).unwrap();
            let report = lagrange_report(&coeffs, &x, &f, &y, &g, 0, 4, 1e-7).unwrap();
            assert!(
                report.scaled_gap() < tol::IDENTITY_GAP,
                "trial {trial}: gap {}",
                report.scaled_gap()
            );
        }
    }

    #[test]
    fn lagrange_report_rejects_non_solutions() {
        let iv = IntegerInterval::new(0, 3).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let x = random_trajectory(&mut rng, 1, iv);
        let zero = Trajectory::zero(1, iv);
        let err = lagrange_report(&coeffs, &x, &zero, &zero, &zero, 0, 3, 1e-10);
        assert!(err.is_err());
    }

    #[test]
    fn wronskian_constant_and_conservation_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let iv = IntegerInterval::new(0, 9).unwrap();
        for trial in 0..15 {
            let spec = InstanceSpec {
                n: 1 + trial % 2,
                interval: iv,
                rho: 0.6,
                weights: WeightKind::RandomPd,
                hermitian: false,
            };
            let coeffs = random_field(&mut rng, &spec);
            let n = spec.n;
            let lambda = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let err = fundamental_identity_error(&coeffs, lambda, iv.a).unwrap();
            assert!(err < tol::IDENTITY_GAP, "trial {trial}: identity error {err}");

            let fm1 = fundamental_matrix(SystemSide::Side1, &coeffs, lambda, 0).unwrap();
            let fm2 = fundamental_matrix(SystemSide::Side2, &coeffs, lambda.conj(), 0).unwrap();
            let y1 = fm1.column(rng.random_range(0..2 * n));
            let y2 = fm2.column(rng.random_range(0..2 * n));
            let drift = wronskian_drift(&coeffs, &y1, &y2);
            assert!(drift < tol::IDENTITY_GAP, "trial {trial}: drift {drift}");

            for side in [SystemSide::Side1, SystemSide::Side2] {
                let fm = fundamental_matrix(side, &coeffs, lambda, 0).unwrap();
                let yc = fm.column(0);
                let err = shift_identity_error(side, &coeffs, lambda, &yc).unwrap();
                assert!(err < 1e-11, "trial {trial}: shift identity error {err}");
            }
        }
    }

    #[test]
    fn patch_bvp_zero_data_gives_zero() {
        let iv = IntegerInterval::new(0, 5).unwrap();
        let coeffs = CoefficientField::free(2, iv);
        let window = IntegerInterval::new(1, 4).unwrap();
        let zero = CVector::zeros(4);
        let patch = patch_bvp(SystemSide::Side1, &coeffs, window, &zero, &zero).unwrap();
        assert!(patch.solution.max_norm() < 1e-14);
        assert!(patch.forcing.max_norm() < 1e-14);
    }

    #[test]
    fn patch_bvp_hits_boundary_data_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let iv = IntegerInterval::new(-1, 8).unwrap();
        for trial in 0..15 {
            let n = 1 + trial % 3;
            let spec = InstanceSpec {
                n,
                interval: iv,
                rho: 0.55,
                weights: WeightKind::RandomPd,
                hermitian: trial % 4 == 0,
            };
            let coeffs = random_field(&mut rng, &spec);
            let window = IntegerInterval::new(0, 6).unwrap();
            let alpha = crate::instances::random_complex_vector(&mut rng, 2 * n);
            let beta = crate::instances::random_complex_vector(&mut rng, 2 * n);
            for side in [SystemSide::Side1, SystemSide::Side2] {
                let patch = patch_bvp(side, &coeffs, window, &alpha, &beta).unwrap();
                let scale = 1.0 + alpha.norm() + beta.norm();
                assert!(
                    (patch.solution.at(window.a) - &alpha).norm() / scale < tol::BOUNDARY_RESIDUAL,
                    "trial {trial} side {side:?}: left boundary"
                );
                assert!(
                    (patch.solution.at(window.b + 1) - &beta).norm() / scale
                        < tol::BOUNDARY_RESIDUAL,
                    "trial {trial} side {side:?}: right boundary"
                );
                let sub = coeffs.restrict(window).unwrap();
                let res = forced_residual(side, &sub, c(0.0, 0.0), &patch.solution, Some(&patch.forcing));
                assert!(res < tol::SYSTEM_RESIDUAL, "trial {trial}: system residual {res}");
            }
        }
    }
}
