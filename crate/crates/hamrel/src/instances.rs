//! Seeded random instance generation used by the verification sweeps
//! and the command-line driver.
//!
//! Random mode keeps `‖A(t)‖₂ ≤ ρ < 1` and `‖D(t)‖₂ ≤ ρ`, which makes
//! `I − A(t)` and `I − D(t)` invertible by the Neumann bound, so every
//! generated instance satisfies the invertibility assumption.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Trajectory;
use crate::linalg::{ceye, spectral_norm};
use crate::system::{CoefficientField, IntegerInterval};
use crate::{C64, CMatrix, CVector};

/// How the weight blocks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Identity,
    /// Random Hermitian positive definite, well conditioned.
    RandomPd,
    /// Positive definite in the interior but `W2(a) = 0` and
    /// `W1(b) = 0`.
    ///
    /// These edge zeros remove the forcing freedom that otherwise makes
    /// the maximal relation multivalued, so the operator-part
    /// restriction hypotheses of the dual-pair dimension identities
    /// hold on such instances.
    EdgeDegeneratePd,
}

/// Instance shape switches.
#[derive(Debug, Clone, Copy)]
pub struct InstanceSpec {
    pub n: usize,
    pub interval: IntegerInterval,
    /// Bound on `‖A‖₂` and `‖D‖₂`.
    pub rho: f64,
    pub weights: WeightKind,
    /// Force `C = C*`, `B = B*`, `D = A*` so the coefficient matrix is
    /// Hermitian and the two sides coincide.
    pub hermitian: bool,
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_complex_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn scaled_to(m: CMatrix, bound: f64) -> CMatrix {
    let norm = spectral_norm(&m);
    if norm <= bound || norm == 0.0 {
        m
    } else {
        m * C64::new(bound / norm, 0.0)
    }
}

fn hermitian_random(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = random_complex_matrix(rng, n, n);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = random_complex_matrix(rng, n, n);
    let g = &m * m.adjoint();
    let scale = spectral_norm(&g).max(1.0);
    g * C64::new(1.0 / scale, 0.0) + ceye(n) * C64::new(0.1, 0.0)
}

/// Draw a coefficient field per the spec.
pub fn random_field(rng: &mut ChaCha8Rng, spec: &InstanceSpec) -> CoefficientField {
    let n = spec.n;
    let m = spec.interval.site_count();
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    let mut w1 = Vec::with_capacity(m);
    let mut w2 = Vec::with_capacity(m);
    for site in 0..m {
        let at = scaled_to(random_complex_matrix(rng, n, n), spec.rho);
        let dt = if spec.hermitian {
            at.adjoint()
        } else {
            scaled_to(random_complex_matrix(rng, n, n), spec.rho)
        };
        let bt = if spec.hermitian {
            hermitian_random(rng, n)
        } else {
            random_complex_matrix(rng, n, n)
        };
        let ct = if spec.hermitian {
            hermitian_random(rng, n)
        } else {
            random_complex_matrix(rng, n, n)
        };
        let (mut w1t, mut w2t) = match spec.weights {
            WeightKind::Identity => (ceye(n), ceye(n)),
            WeightKind::RandomPd | WeightKind::EdgeDegeneratePd => {
                (random_pd(rng, n), random_pd(rng, n))
            }
        };
        if spec.weights == WeightKind::EdgeDegeneratePd {
            if site == 0 {
                w2t = CMatrix::zeros(n, n);
            }
            if site == m - 1 {
                w1t = CMatrix::zeros(n, n);
            }
        }
        a.push(at);
        b.push(bt);
        c.push(ct);
        d.push(dt);
        w1.push(w1t);
        w2.push(w2t);
    }
    CoefficientField::new(n, spec.interval, a, b, c, d, w1, w2)
        .expect("randomly drawn blocks satisfy the shape and weight requirements")
}

/// Draw a trajectory with independent uniform complex entries.
pub fn random_trajectory(rng: &mut ChaCha8Rng, n: usize, interval: IntegerInterval) -> Trajectory {
    let values = interval
        .points()
        .map(|_| random_complex_vector(rng, 2 * n))
        .collect();
    Trajectory::from_values(n, interval, values).expect("consistent shapes")
}

/// Orthonormal basis of a random subspace of `C^ambient` with the
/// requested dimension.
pub fn random_subspace(rng: &mut ChaCha8Rng, ambient: usize, dim: usize) -> CMatrix {
    assert!(dim <= ambient);
    if dim == 0 {
        return CMatrix::zeros(ambient, 0);
    }
    loop {
        let m = random_complex_matrix(rng, ambient, dim);
        let basis = crate::linalg::column_space(&m, 1e-12);
        if basis.ncols() == dim {
            return basis;
        }
    }
}
