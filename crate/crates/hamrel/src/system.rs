//! Coefficient data for the pair of first-order Hamiltonian difference
//! systems, validation of the standing assumptions, and the window Gram
//! matrices used as the definiteness diagnostic.
//!
//! A system on an integer interval `[a, b]` is written in blocked form
//! with `n x n` coefficient blocks `A, B, C, D` and Hermitian PSD
//! weight blocks `W1, W2`:
//!
//! ```text
//!   Δu(t) = A(t) u(t+1) + (B(t) + λ W2(t)) v(t)
//!   Δv(t) = (C(t) − λ W1(t)) u(t+1) − D(t) v(t)
//! ```
//!
//! The adjoint-side system replaces the coefficient matrix `P` by `P*`,
//! which in block roles reads `A ← D*`, `B ← B*`, `C ← C*`, `D ← A*`.

use serde::Serialize;

use crate::linalg::{ceye, cond2, czeros, herm_eigen};
use crate::{C64, CMatrix, Error, Result};

/// A finite integer interval `[a, b]`.
///
/// Per-site data lives on `t ∈ [a, b]`; trajectories on `t ∈ [a, b+1]`.
/// System intervals require `b ≥ a + 1`; windows may consist of a
/// single site (`b = a`). `truncated` marks intervals that stand in for
/// the half line `[a, ∞)` in truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntegerInterval {
    pub a: i64,
    pub b: i64,
    pub truncated: bool,
}

impl IntegerInterval {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if b < a {
            return Err(Error::InvalidInput(format!(
                "interval [{a}, {b}] needs b >= a"
            )));
        }
        Ok(Self {
            a,
            b,
            truncated: false,
        })
    }

    /// An interval valid as a system domain (`b ≥ a + 1`).
    pub fn system(a: i64, b: i64) -> Result<Self> {
        if b - a < 1 {
            return Err(Error::InvalidInput(format!(
                "system interval [{a}, {b}] needs b - a >= 1"
            )));
        }
        Self::new(a, b)
    }

    pub fn truncation(a: i64, b: i64) -> Result<Self> {
        let mut iv = Self::new(a, b)?;
        iv.truncated = true;
        Ok(iv)
    }

    /// Number of sites `b - a + 1`.
    pub fn site_count(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    /// Number of trajectory points `b - a + 2`.
    pub fn point_count(&self) -> usize {
        (self.b - self.a + 2) as usize
    }

    pub fn contains_site(&self, t: i64) -> bool {
        self.a <= t && t <= self.b
    }

    pub fn contains_point(&self, t: i64) -> bool {
        self.a <= t && t <= self.b + 1
    }

    pub fn contains(&self, other: &IntegerInterval) -> bool {
        self.a <= other.a && other.b <= self.b
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.a..=self.b
    }

    pub fn points(&self) -> impl Iterator<Item = i64> {
        self.a..=(self.b + 1)
    }
}

/// Selects one of the two mutually adjoint systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemSide {
    Side1,
    Side2,
}

impl SystemSide {
    /// The adjoint side; an involution.
    pub fn opposite(self) -> Self {
        match self {
            SystemSide::Side1 => SystemSide::Side2,
            SystemSide::Side2 => SystemSide::Side1,
        }
    }
}

/// The canonical symplectic matrix `J = [[0, -I], [I, 0]]` of size `2n`.
pub fn symplectic_j(n: usize) -> CMatrix {
    let mut j = czeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = C64::new(-1.0, 0.0);
        j[(n + i, i)] = C64::new(1.0, 0.0);
    }
    j
}

/// Per-site block coefficients on an integer interval.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    n: usize,
    interval: IntegerInterval,
    a: Vec<CMatrix>,
    b: Vec<CMatrix>,
    c: Vec<CMatrix>,
    d: Vec<CMatrix>,
    w1: Vec<CMatrix>,
    w2: Vec<CMatrix>,
}

impl CoefficientField {
    /// Build a field from per-site blocks, validating shapes and the
    /// Hermitian PSD requirement on the weights.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        interval: IntegerInterval,
        a: Vec<CMatrix>,
        b: Vec<CMatrix>,
        c: Vec<CMatrix>,
        d: Vec<CMatrix>,
        w1: Vec<CMatrix>,
        w2: Vec<CMatrix>,
    ) -> Result<Self> {
        let m = interval.site_count();
        for (name, blocks) in [
            ("A", &a),
            ("B", &b),
            ("C", &c),
            ("D", &d),
            ("W1", &w1),
            ("W2", &w2),
        ] {
            if blocks.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: {} site blocks, interval has {m} sites",
                    blocks.len()
                )));
            }
            for (i, blk) in blocks.iter().enumerate() {
                if blk.nrows() != n || blk.ncols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} at site {}: {}x{}, expected {n}x{n}",
                        interval.a + i as i64,
                        blk.nrows(),
                        blk.ncols()
                    )));
                }
            }
        }
        for (idx, blocks) in [&w1, &w2].into_iter().enumerate() {
            for (i, w) in blocks.iter().enumerate() {
                let site = interval.a + i as i64;
                let scale = w.norm().max(1.0);
                if (w - w.adjoint()).norm() > 1e-12 * scale {
                    return Err(Error::InvalidWeight {
                        site,
                        detail: format!("W{} is not Hermitian", idx + 1),
                    });
                }
                let (vals, _) = herm_eigen(&((w + w.adjoint()) * C64::new(0.5, 0.0)));
                if let Some(min) = vals.last() {
                    if *min < -1e-12 * scale {
                        return Err(Error::InvalidWeight {
                            site,
                            detail: format!("W{} has eigenvalue {min:.3e} < 0", idx + 1),
                        });
                    }
                }
            }
        }
        Ok(Self {
            n,
            interval,
            a,
            b,
            c,
            d,
            w1,
            w2,
        })
    }

    /// Constant coefficients across the interval.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(
        n: usize,
        interval: IntegerInterval,
        a: CMatrix,
        b: CMatrix,
        c: CMatrix,
        d: CMatrix,
        w1: CMatrix,
        w2: CMatrix,
    ) -> Result<Self> {
        let m = interval.site_count();
        Self::new(
            n,
            interval,
            vec![a; m],
            vec![b; m],
            vec![c; m],
            vec![d; m],
            vec![w1; m],
            vec![w2; m],
        )
    }

    /// The free system: `P ≡ 0`, `W ≡ I`.
    pub fn free(n: usize, interval: IntegerInterval) -> Self {
        let z = czeros(n, n);
        let id = ceye(n);
        Self::constant(n, interval, z.clone(), z.clone(), z.clone(), z, id.clone(), id)
            .expect("free system is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> IntegerInterval {
        self.interval
    }

    fn idx(&self, t: i64) -> usize {
        assert!(
            self.interval.contains_site(t),
            "site {t} outside [{}, {}]",
            self.interval.a,
            self.interval.b
        );
        (t - self.interval.a) as usize
    }

    pub fn a_at(&self, t: i64) -> &CMatrix {
        &self.a[self.idx(t)]
    }

    pub fn b_at(&self, t: i64) -> &CMatrix {
        &self.b[self.idx(t)]
    }

    pub fn c_at(&self, t: i64) -> &CMatrix {
        &self.c[self.idx(t)]
    }

    pub fn d_at(&self, t: i64) -> &CMatrix {
        &self.d[self.idx(t)]
    }

    pub fn w1_at(&self, t: i64) -> &CMatrix {
        &self.w1[self.idx(t)]
    }

    pub fn w2_at(&self, t: i64) -> &CMatrix {
        &self.w2[self.idx(t)]
    }

    /// Block roles `(A, B, C, D)` seen by the requested side at site `t`.
    pub fn side_blocks(&self, side: SystemSide, t: i64) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
        match side {
            SystemSide::Side1 => (
                self.a_at(t).clone(),
                self.b_at(t).clone(),
                self.c_at(t).clone(),
                self.d_at(t).clone(),
            ),
            SystemSide::Side2 => (
                self.d_at(t).adjoint(),
                self.b_at(t).adjoint(),
                self.c_at(t).adjoint(),
                self.a_at(t).adjoint(),
            ),
        }
    }

    /// The `2n x 2n` coefficient matrix of the requested side at `t`,
    /// blocked as `[[-C, D], [A, B]]` in that side's roles.
    pub fn p_matrix(&self, side: SystemSide, t: i64) -> CMatrix {
        let n = self.n;
        let (a, b, c, d) = self.side_blocks(side, t);
        let mut p = czeros(2 * n, 2 * n);
        p.view_mut((0, 0), (n, n)).copy_from(&(-&c));
        p.view_mut((0, n), (n, n)).copy_from(&d);
        p.view_mut((n, 0), (n, n)).copy_from(&a);
        p.view_mut((n, n), (n, n)).copy_from(&b);
        p
    }

    /// The `2n x 2n` weight `W(t) = diag(W1(t), W2(t))`.
    pub fn w_matrix(&self, t: i64) -> CMatrix {
        let n = self.n;
        let mut w = czeros(2 * n, 2 * n);
        w.view_mut((0, 0), (n, n)).copy_from(self.w1_at(t));
        w.view_mut((n, n), (n, n)).copy_from(self.w2_at(t));
        w
    }

    /// The coefficient field whose side-1 system is this field's side-2
    /// system. Applying it twice returns the original field.
    pub fn adjoint_side_coefficients(&self) -> CoefficientField {
        CoefficientField {
            n: self.n,
            interval: self.interval,
            a: self.d.iter().map(|m| m.adjoint()).collect(),
            b: self.b.iter().map(|m| m.adjoint()).collect(),
            c: self.c.iter().map(|m| m.adjoint()).collect(),
            d: self.a.iter().map(|m| m.adjoint()).collect(),
            w1: self.w1.clone(),
            w2: self.w2.clone(),
        }
    }

    /// Whether the coefficient matrix `P` is Hermitian, so the side-2
    /// system coincides with the side-1 system.
    pub fn is_formally_self_adjoint(&self, rel_tol: f64) -> bool {
        self.interval.sites().all(|t| {
            let p = self.p_matrix(SystemSide::Side1, t);
            let scale = p.norm().max(1.0);
            (&p - p.adjoint()).norm() <= rel_tol * scale
        })
    }

    /// Clone of the field restricted to a subinterval.
    pub fn restrict(&self, window: IntegerInterval) -> Result<CoefficientField> {
        if !self.interval.contains(&window) {
            return Err(Error::IntervalMismatch(format!(
                "window [{}, {}] outside field interval [{}, {}]",
                window.a, window.b, self.interval.a, self.interval.b
            )));
        }
        let lo = (window.a - self.interval.a) as usize;
        let hi = (window.b - self.interval.a) as usize + 1;
        Ok(CoefficientField {
            n: self.n,
            interval: window,
            a: self.a[lo..hi].to_vec(),
            b: self.b[lo..hi].to_vec(),
            c: self.c[lo..hi].to_vec(),
            d: self.d[lo..hi].to_vec(),
            w1: self.w1[lo..hi].to_vec(),
            w2: self.w2[lo..hi].to_vec(),
        })
    }
}

/// Per-site invertibility diagnostics for `I - A(t)` and `I - D(t)`.
#[derive(Debug, Clone, Serialize)]
pub struct SiteCheck {
    pub t: i64,
    pub cond_i_minus_a: f64,
    pub cond_i_minus_d: f64,
    pub ok: bool,
}

/// Minimal eigenvalue of the window Gram for one `(side, λ)` sample.
#[derive(Debug, Clone, Serialize)]
pub struct PhiCheck {
    pub side: SystemSide,
    pub lambda: (f64, f64),
    pub min_eig: f64,
    pub max_eig: f64,
    pub rank: usize,
    pub positive_definite: bool,
}

/// Outcome of [`validate_system`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub a1: bool,
    pub per_site: Vec<SiteCheck>,
    pub phi_min_eig: Vec<PhiCheck>,
    pub verdict: String,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.verdict == "pass"
    }
}

/// Check the invertibility assumption on every site and the positive
/// definiteness of the window Grams for the sampled spectral values,
/// on both sides.
///
/// Singular `I - A(t)` or `I - D(t)` is reported as an assumption
/// failure in the returned report, not as an error.
pub fn validate_system(
    coeffs: &CoefficientField,
    window: IntegerInterval,
    lambda_samples: &[C64],
    cond_ceiling: f64,
    rank_rel_tol: f64,
) -> Result<ValidationReport> {
    if !coeffs.interval().contains(&window) {
        return Err(Error::IntervalMismatch(
            "validation window outside the coefficient interval".into(),
        ));
    }
    let n = coeffs.n();
    let id = ceye(n);
    let mut per_site = Vec::new();
    let mut a1 = true;
    for t in coeffs.interval().sites() {
        let ca = cond2(&(&id - coeffs.a_at(t)));
        let cd = cond2(&(&id - coeffs.d_at(t)));
        let ok = ca.is_finite() && cd.is_finite() && ca <= cond_ceiling && cd <= cond_ceiling;
        a1 &= ok;
        per_site.push(SiteCheck {
            t,
            cond_i_minus_a: ca,
            cond_i_minus_d: cd,
            ok,
        });
    }

    let mut phi_min_eig = Vec::new();
    let mut definite = true;
    if a1 {
        let c0 = window.a;
        for side in [SystemSide::Side1, SystemSide::Side2] {
            for &lambda in lambda_samples {
                let phi = gram_window(coeffs, side, lambda, window, c0)?;
                let (vals, _) = herm_eigen(&phi);
                let max_eig = vals.first().copied().unwrap_or(0.0);
                let min_eig = vals.last().copied().unwrap_or(0.0);
                let rank = vals.iter().filter(|&&v| v > rank_rel_tol * max_eig.max(0.0) && v > 0.0).count();
                let pd = min_eig > rank_rel_tol * max_eig && min_eig > 0.0;
                definite &= pd;
                phi_min_eig.push(PhiCheck {
                    side,
                    lambda: (lambda.re, lambda.im),
                    min_eig,
                    max_eig,
                    rank,
                    positive_definite: pd,
                });
            }
        }
    } else {
        definite = false;
    }

    let verdict = if a1 && definite {
        "pass".to_string()
    } else if !a1 {
        "fail: invertibility assumption".to_string()
    } else {
        "fail: definiteness surrogate".to_string()
    };
    Ok(ValidationReport {
        a1,
        per_site,
        phi_min_eig,
        verdict,
    })
}

/// The window Gram `Φ(λ, window) = Σ_t R(Y)*(t) W(t) R(Y)(t)` of the
/// requested side, where `Y` is the fundamental matrix normalized to
/// the identity at `c0`.
pub fn gram_window(
    coeffs: &CoefficientField,
    side: SystemSide,
    lambda: C64,
    window: IntegerInterval,
    c0: i64,
) -> Result<CMatrix> {
    if !window.contains_point(c0) {
        return Err(Error::IntervalMismatch(format!(
            "c0 = {c0} outside window [{}, {}]",
            window.a,
            window.b + 1
        )));
    }
    let restricted = coeffs.restrict(window)?;
    let fm = crate::dynamics::fundamental_matrix(side, &restricted, lambda, c0)?;
    let n = coeffs.n();
    let mut phi = czeros(2 * n, 2 * n);
    for t in window.sites() {
        let r = fm.r_at(t);
        phi += r.adjoint() * restricted.w_matrix(t) * r;
    }
    Ok(phi)
}

/// Smallest prefix window of `interval` on which the definiteness
/// surrogate holds for all sampled `λ` on both sides, if any.
///
/// No minimality over general subintervals is claimed; prefixes are
/// scanned in order.
pub fn smallest_definite_prefix(
    coeffs: &CoefficientField,
    lambda_samples: &[C64],
    rank_rel_tol: f64,
) -> Result<Option<IntegerInterval>> {
    let iv = coeffs.interval();
    for b in (iv.a + 1)..=iv.b {
        let window = IntegerInterval::new(iv.a, b)?;
        let mut ok = true;
        'outer: for side in [SystemSide::Side1, SystemSide::Side2] {
            for &lambda in lambda_samples {
                let phi = gram_window(coeffs, side, lambda, window, window.a)?;
                let (vals, _) = herm_eigen(&phi);
                let max_eig = vals.first().copied().unwrap_or(0.0);
                let min_eig = vals.last().copied().unwrap_or(0.0);
                if !(min_eig > rank_rel_tol * max_eig && min_eig > 0.0) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(Some(window));
        }
    }
    Ok(None)
}

/// Rank of the window Gram under the standard relative cutoff.
pub fn gram_window_rank(
    coeffs: &CoefficientField,
    side: SystemSide,
    lambda: C64,
    window: IntegerInterval,
    c0: i64,
    rank_rel_tol: f64,
) -> Result<usize> {
    let phi = gram_window(coeffs, side, lambda, window, c0)?;
    Ok(crate::linalg::rank(&phi, rank_rel_tol))
}

pub use crate::tol::{COND_CEILING, RANK_REL};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::czeros;
    use crate::tol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    #[test]
    fn free_system_validates() {
        let iv = IntegerInterval::new(0, 5).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let window = IntegerInterval::new(0, 2).unwrap();
        let report = validate_system(
            &coeffs,
            window,
            &[c(0.0, 0.0), c(0.0, 1.0)],
            tol::COND_CEILING,
            tol::RANK_REL,
        )
        .unwrap();
        assert!(report.a1);
        assert!(report.pass());
        assert!(report.phi_min_eig.iter().all(|p| p.positive_definite));
    }

    #[test]
    fn singular_i_minus_a_reported_not_thrown() {
        let iv = IntegerInterval::new(0, 2).unwrap();
        let z = czeros(1, 1);
        let id = ceye(1);
        let mut a = vec![z.clone(); 3];
        a[1] = id.clone(); // I - A = 0 at site 1
        let coeffs = CoefficientField::new(
            1,
            iv,
            a,
            vec![z.clone(); 3],
            vec![z.clone(); 3],
            vec![z.clone(); 3],
            vec![id.clone(); 3],
            vec![id.clone(); 3],
        )
        .unwrap();
        let report =
            validate_system(&coeffs, iv, &[c(0.0, 0.0)], tol::COND_CEILING, tol::RANK_REL)
                .unwrap();
        assert!(!report.a1);
        assert!(!report.pass());
        assert!(!report.per_site[1].ok);
        assert!(report.per_site[0].ok);
    }

    #[test]
    fn zero_weight_fails_definiteness() {
        let iv = IntegerInterval::new(0, 5).unwrap();
        let z = czeros(1, 1);
        let m = iv.site_count();
        let coeffs = CoefficientField::new(
            1,
            iv,
            vec![z.clone(); m],
            vec![z.clone(); m],
            vec![z.clone(); m],
            vec![z.clone(); m],
            vec![z.clone(); m],
            vec![z.clone(); m],
        )
        .unwrap();
        let report =
            validate_system(&coeffs, iv, &[c(0.0, 0.0)], tol::COND_CEILING, tol::RANK_REL)
                .unwrap();
        assert!(report.a1);
        assert!(!report.pass());
        assert_eq!(report.verdict, "fail: definiteness surrogate");
    }

    #[test]
    fn non_hermitian_weight_rejected() {
        let iv = IntegerInterval::new(0, 1).unwrap();
        let bad = scalar(c(0.0, 1.0)); // iI is not Hermitian
        let z = czeros(1, 1);
        let id = ceye(1);
        let err = CoefficientField::new(
            1,
            iv,
            vec![z.clone(); 2],
            vec![z.clone(); 2],
            vec![z.clone(); 2],
            vec![z.clone(); 2],
            vec![bad; 2],
            vec![id; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidWeight { .. }));
    }

    #[test]
    fn adjoint_side_blocks_and_involution() {
        let iv = IntegerInterval::new(0, 3).unwrap();
        let coeffs = CoefficientField::constant(
            1,
            iv,
            scalar(c(0.0, 0.1)),
            scalar(c(0.2, 0.0)),
            scalar(c(0.3, 0.0)),
            scalar(c(0.0, 0.4)),
            ceye(1),
            ceye(1),
        )
        .unwrap();
        let adj = coeffs.adjoint_side_coefficients();
        assert_eq!(adj.a_at(0)[(0, 0)], c(0.0, -0.4));
        assert_eq!(adj.b_at(0)[(0, 0)], c(0.2, 0.0));
        assert_eq!(adj.c_at(0)[(0, 0)], c(0.3, 0.0));
        assert_eq!(adj.d_at(0)[(0, 0)], c(0.0, -0.1));
        let back = adj.adjoint_side_coefficients();
        for t in iv.sites() {
            assert_eq!(back.a_at(t), coeffs.a_at(t));
            assert_eq!(back.b_at(t), coeffs.b_at(t));
            assert_eq!(back.c_at(t), coeffs.c_at(t));
            assert_eq!(back.d_at(t), coeffs.d_at(t));
        }
        // Hermitian P: side-2 field equals side-1 field.
        let herm = CoefficientField::constant(
            1,
            iv,
            scalar(c(0.0, 0.3)),
            scalar(c(0.5, 0.0)),
            scalar(c(0.7, 0.0)),
            scalar(c(0.0, -0.3)),
            ceye(1),
            ceye(1),
        )
        .unwrap();
        assert!(herm.is_formally_self_adjoint(1e-14));
        let adj2 = herm.adjoint_side_coefficients();
        for t in iv.sites() {
            assert!((adj2.p_matrix(SystemSide::Side1, t)
                - herm.p_matrix(SystemSide::Side1, t))
            .norm()
                < 1e-14);
        }
    }

    #[test]
    fn zero_coefficient_gram_is_site_count_times_identity() {
        let iv = IntegerInterval::new(0, 5).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let window = IntegerInterval::new(1, 3).unwrap();
        let phi = gram_window(&coeffs, SystemSide::Side1, c(0.0, 0.0), window, 1).unwrap();
        assert!((phi - ceye(2) * c(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn one_site_gram_hand_value() {
        let iv = IntegerInterval::new(0, 2).unwrap();
        let coeffs = CoefficientField::free(1, iv);
        let window = IntegerInterval::new(0, 0).unwrap();
        let phi = gram_window(&coeffs, SystemSide::Side1, c(0.0, 1.0), window, 0).unwrap();
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        assert!((phi - expect).norm() < 1e-14);
    }
}
