//! Orthonormal subspaces of `C^m` with the comparison operations the
//! relation calculus is built on.

use crate::linalg::{
    ceye, column_space, complement, containment_angle, czeros, intersection, subspace_gap,
};
use crate::{CMatrix, CVector, Error, Result};

/// A subspace of `C^ambient` carried by an orthonormal basis matrix.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: CMatrix,
}

impl Subspace {
    /// Orthonormalize the columns of `m` (rank decided by `rel_tol`).
    pub fn from_span(m: &CMatrix, rel_tol: f64) -> Self {
        Self {
            ambient: m.nrows(),
            basis: column_space(m, rel_tol),
        }
    }

    /// Like [`Subspace::from_span`] with an absolute scale floor for the
    /// rank cutoff; use floor 1 for spans derived from orthonormal data
    /// so that all-noise spans collapse to the zero subspace.
    pub fn from_span_floor(m: &CMatrix, rel_tol: f64, floor: f64) -> Self {
        Self {
            ambient: m.nrows(),
            basis: crate::linalg::column_space_floor(m, rel_tol, floor),
        }
    }

    /// Wrap an already-orthonormal basis.
    pub fn from_orthonormal(basis: CMatrix) -> Result<Self> {
        let k = basis.ncols();
        if k > 0 {
            let defect = (basis.adjoint() * &basis - ceye(k)).norm();
            if defect > 1e-10 * (k as f64).sqrt() {
                return Err(Error::InvalidInput(format!(
                    "basis is not orthonormal (defect {defect:.3e})"
                )));
            }
        }
        Ok(Self {
            ambient: basis.nrows(),
            basis,
        })
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: czeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: ceye(ambient),
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Orthogonal projection of a vector onto the subspace.
    pub fn project(&self, x: &CVector) -> CVector {
        if self.dim() == 0 {
            return CVector::zeros(self.ambient);
        }
        &self.basis * (self.basis.adjoint() * x)
    }

    /// Distance from `x` to the subspace.
    pub fn residual(&self, x: &CVector) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains_vector(&self, x: &CVector, tol: f64) -> bool {
        self.residual(x) <= tol * (1.0 + x.norm())
    }

    /// Largest principal angle to another subspace of equal dimension;
    /// infinite when dimensions differ.
    pub fn gap(&self, other: &Subspace) -> f64 {
        subspace_gap(&self.basis, &other.basis)
    }

    pub fn equals(&self, other: &Subspace, angle_tol: f64) -> bool {
        self.dim() == other.dim() && self.gap(other) <= angle_tol
    }

    /// Largest angle by which `self` sticks out of `sup`.
    pub fn containment_angle_in(&self, sup: &Subspace) -> f64 {
        containment_angle(&self.basis, &sup.basis)
    }

    pub fn contained_in(&self, sup: &Subspace, angle_tol: f64) -> bool {
        self.containment_angle_in(sup) <= angle_tol
    }

    pub fn orthogonal_complement(&self, rel_tol: f64) -> Subspace {
        Subspace {
            ambient: self.ambient,
            basis: complement(&self.basis, self.ambient, rel_tol),
        }
    }

    pub fn intersect(&self, other: &Subspace, rel_tol: f64) -> Subspace {
        Subspace {
            ambient: self.ambient,
            basis: intersection(&self.basis, &other.basis, rel_tol),
        }
    }

    pub fn sum(&self, other: &Subspace, rel_tol: f64) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let mut stacked = czeros(self.ambient, self.dim() + other.dim());
        stacked
            .view_mut((0, 0), (self.ambient, self.dim()))
            .copy_from(&self.basis);
        stacked
            .view_mut((0, self.dim()), (self.ambient, other.dim()))
            .copy_from(&other.basis);
        Subspace::from_span(&stacked, rel_tol)
    }

    /// `self ⊖ other`: the part of `self` orthogonal to `other`.
    pub fn minus(&self, other: &Subspace, rel_tol: f64) -> Subspace {
        if self.dim() == 0 || other.dim() == 0 {
            return self.clone();
        }
        let proj = &other.basis * (other.basis.adjoint() * &self.basis);
        Subspace::from_span_floor(&(&self.basis - proj), rel_tol, 1.0)
    }

    /// Image under a linear map given by `m` (ambient changes to the
    /// row count of `m`).
    pub fn map(&self, m: &CMatrix, rel_tol: f64) -> Subspace {
        Subspace::from_span(&(m * &self.basis), rel_tol)
    }
}

/// Dimension of `sup / sub` after verifying containment; errors with
/// the worst principal angle when `sub` is not inside `sup`.
pub fn quotient_dim(sub: &Subspace, sup: &Subspace, angle_tol: f64) -> Result<usize> {
    let angle = sub.containment_angle_in(sup);
    if angle > angle_tol {
        return Err(Error::NotContained { angle });
    }
    Ok(sup.dim() - sub.dim())
}
