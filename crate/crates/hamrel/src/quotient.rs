//! The weighted space `L²_W([a, b])` realized as a finite-dimensional
//! Hilbert space: the quotient of the trajectory space by the kernel of
//! the semi-inner product `⟨y, z⟩ = Σ_t R(z)*(t) W(t) R(y)(t)`.

use crate::dynamics::Trajectory;
use crate::linalg::herm_eigen;
use crate::system::{CoefficientField, IntegerInterval};
use crate::{C64, CMatrix, CVector, Error, Result};

/// Quotient coordinates for the weighted trajectory space.
///
/// `project` maps ambient trajectory vectors to `C^r` isometrically:
/// class inner products of images equal the weighted semi-inner
/// products of the originals, and semi-norm-zero trajectories map to 0.
#[derive(Debug, Clone)]
pub struct QuotientSpace {
    n: usize,
    interval: IntegerInterval,
    ambient_dim: usize,
    gram: CMatrix,
    rank: usize,
    /// `r x ambient` isometric coordinate map `Λ^{1/2} V*`.
    coord: CMatrix,
    /// `ambient x r` right inverse `V Λ^{-1/2}` of `coord`.
    lift_map: CMatrix,
}

/// Assemble the ambient Gram `Σ_t S_t* W(t) S_t`, where `S_t` selects
/// `R(y)(t)` from the flattened trajectory.
fn ambient_gram(coeffs: &CoefficientField) -> CMatrix {
    let n = coeffs.n();
    let iv = coeffs.interval();
    let pts = iv.point_count();
    let dim = 2 * n * pts;
    let mut gram = CMatrix::zeros(dim, dim);
    for t in iv.sites() {
        let w = coeffs.w_matrix(t);
        // R(y)(t) reads u(t+1) at offset of point t+1 and v(t) at
        // offset of point t.
        let iu = 2 * n * ((t + 1 - iv.a) as usize);
        let iv_off = 2 * n * ((t - iv.a) as usize) + n;
        let offsets: Vec<usize> = (0..n).map(|i| iu + i).chain((0..n).map(|i| iv_off + i)).collect();
        for (bi, &gi) in offsets.iter().enumerate() {
            for (bj, &gj) in offsets.iter().enumerate() {
                gram[(gi, gj)] += w[(bi, bj)];
            }
        }
    }
    gram
}

/// Build the quotient space of a coefficient field on its interval.
///
/// Zero weight yields rank 0, a legal degenerate space.
pub fn build_space(coeffs: &CoefficientField, rank_rel_tol: f64) -> QuotientSpace {
    let n = coeffs.n();
    let interval = coeffs.interval();
    let gram = ambient_gram(coeffs);
    let dim = gram.nrows();
    let (vals, vecs) = herm_eigen(&gram);
    let max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = rank_rel_tol * max;
    let rank = vals.iter().filter(|&&v| v > cut && v > 0.0).count();
    let mut coord = CMatrix::zeros(rank, dim);
    let mut lift_map = CMatrix::zeros(dim, rank);
    for i in 0..rank {
        let s = vals[i].sqrt();
        let vi = vecs.column(i);
        coord.row_mut(i).copy_from(&(vi.adjoint() * C64::new(s, 0.0)));
        lift_map
            .column_mut(i)
            .copy_from(&(vi * C64::new(1.0 / s, 0.0)));
    }
    QuotientSpace {
        n,
        interval,
        ambient_dim: dim,
        gram,
        rank,
        coord,
        lift_map,
    }
}

impl QuotientSpace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> IntegerInterval {
        self.interval
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension `r` of the quotient.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Quotient coordinates of a trajectory.
    pub fn project(&self, y: &Trajectory) -> Result<CVector> {
        if y.interval() != self.interval || y.n() != self.n {
            return Err(Error::IntervalMismatch(
                "trajectory does not live on the space's interval".into(),
            ));
        }
        Ok(&self.coord * y.to_ambient())
    }

    /// Some trajectory in the class with the given coordinates.
    pub fn lift(&self, p: &CVector) -> Result<Trajectory> {
        if p.nrows() != self.rank {
            return Err(Error::DimensionMismatch(format!(
                "coordinates have {} entries, space rank is {}",
                p.nrows(),
                self.rank
            )));
        }
        Trajectory::from_ambient(self.n, self.interval, &(&self.lift_map * p))
    }

    /// Hermitian inner product of quotient coordinates, matching the
    /// weighted semi-inner product of representatives.
    pub fn class_inner(&self, p: &CVector, q: &CVector) -> Result<C64> {
        if p.nrows() != self.rank || q.nrows() != self.rank {
            return Err(Error::DimensionMismatch(
                "coordinates from a different space".into(),
            ));
        }
        Ok((q.adjoint() * p)[(0, 0)])
    }

    /// Direct weighted semi-inner product `Σ_t R(z)* W R(y)`.
    pub fn weighted_inner(&self, y: &Trajectory, z: &Trajectory, coeffs: &CoefficientField) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for t in self.interval.sites() {
            acc += (z.r_at(t).adjoint() * coeffs.w_matrix(t) * y.r_at(t))[(0, 0)];
        }
        acc
    }

    /// Weighted semi-norm of a trajectory.
    pub fn seminorm(&self, y: &Trajectory, coeffs: &CoefficientField) -> f64 {
        self.weighted_inner(y, y, coeffs).re.max(0.0).sqrt()
    }
}
