//! Dense complex linear-algebra helpers shared by the whole crate.
//!
//! Everything here is a thin, deterministic layer over `nalgebra`:
//! rank decisions use one relative singular-value cutoff, eigenvector
//! phases are pinned so repeated runs produce identical bases.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{C64, CMatrix, CVector};

/// `m` as a complex matrix from real entries.
pub fn cmat_from_real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    DMatrix::from_row_slice(rows, cols, data).map(|x| Complex::new(x, 0.0))
}

/// Identity matrix of size `n`.
pub fn ceye(n: usize) -> CMatrix {
    DMatrix::identity(n, n)
}

/// Zero matrix.
pub fn czeros(rows: usize, cols: usize) -> CMatrix {
    DMatrix::zeros(rows, cols)
}

/// Spectral norm (largest singular value); 0 for empty matrices.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// 2-norm condition number; `f64::INFINITY` when numerically singular.
pub fn cond2(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Rank of `m` with cutoff `rel_tol * max(σ_max, floor)`.
///
/// The `floor` guards matrices that *should* be zero but carry rounding
/// noise: pass the natural scale of the data they were derived from
/// (1 for products of orthonormal bases), or 0 for a purely relative
/// decision.
pub fn rank_floor(m: &CMatrix, rel_tol: f64, floor: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let cut = rel_tol * sv.max().max(floor);
    sv.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// Rank of `m` under the relative singular-value cutoff `rel_tol`.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    rank_floor(m, rel_tol, 0.0)
}

/// Orthonormal basis of the column space of `m` (may be empty), with a
/// scale floor as in [`rank_floor`].
pub fn column_space_floor(m: &CMatrix, rel_tol: f64, floor: f64) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return czeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let sv = &svd.singular_values;
    let cut = rel_tol * sv.max().max(floor);
    let r = sv.iter().filter(|&&s| s > cut && s > 0.0).count();
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the column space of `m` (may be empty).
pub fn column_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    column_space_floor(m, rel_tol, 0.0)
}

/// Orthonormal basis of the null space of `m`, with a scale floor as in
/// [`rank_floor`].
///
/// The matrix is padded with zero rows so the decomposition exposes the
/// full right-singular set even for wide inputs.
pub fn null_space_floor(m: &CMatrix, rel_tol: f64, floor: f64) -> CMatrix {
    let (rows, cols) = (m.nrows(), m.ncols());
    if cols == 0 {
        return czeros(0, 0);
    }
    if rows == 0 {
        return ceye(cols);
    }
    let padded = if rows < cols {
        let mut p = czeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let sv = &svd.singular_values;
    let cut = rel_tol * sv.max().max(floor);
    let r = sv.iter().filter(|&&s| s > cut && s > 0.0).count();
    // Rows r.. of V^H span the null space; take their adjoint as columns.
    vt.rows(r, vt.nrows() - r).adjoint()
}

/// Orthonormal basis of the null space of `m`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    null_space_floor(m, rel_tol, 0.0)
}

/// Orthonormal basis of the orthogonal complement of the column space
/// of the (orthonormal or not) matrix `b` inside `C^ambient`.
pub fn complement(b: &CMatrix, ambient: usize, rel_tol: f64) -> CMatrix {
    if b.ncols() == 0 {
        return ceye(ambient);
    }
    assert_eq!(b.nrows(), ambient, "ambient dimension mismatch");
    null_space_floor(&b.adjoint(), rel_tol, 1.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// descending and each eigenvector's phase pinned (largest-magnitude
/// component real positive).
pub fn herm_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    if n == 0 {
        return (vec![], czeros(0, 0));
    }
    let sym = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[j]
            .partial_cmp(&sym.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let mut vals = Vec::with_capacity(n);
    let mut vecs = czeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vals.push(sym.eigenvalues[i]);
        let mut col: CVector = sym.eigenvectors.column(i).into_owned();
        pin_phase(&mut col);
        vecs.set_column(k, &col);
    }
    (vals, vecs)
}

/// Rotate `v` so its largest-magnitude component becomes real positive.
fn pin_phase(v: &mut CVector) {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best] / C64::new(best_mag, 0.0);
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &CMatrix, b: &CVector, rel_tol: f64) -> CVector {
    assert_eq!(a.nrows(), b.nrows(), "shape mismatch");
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let sv = &svd.singular_values;
    let cut = rel_tol * sv.max();
    let mut y = u.adjoint() * b;
    for i in 0..sv.len() {
        if sv[i] > cut && sv[i] > 0.0 {
            y[i] /= C64::new(sv[i], 0.0);
        } else {
            y[i] = C64::new(0.0, 0.0);
        }
    }
    vt.adjoint() * y
}

/// Exact linear solve via LU; `None` when the matrix is singular.
pub fn solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    a.clone().lu().solve(b)
}

/// Columns-wise linear solve via LU; `None` when singular.
pub fn solve_mat(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().solve(b)
}

/// Principal angles (radians, ascending) between the column spaces of
/// two orthonormal bases.
pub fn principal_angles(u: &CMatrix, v: &CMatrix) -> Vec<f64> {
    assert_eq!(u.nrows(), v.nrows(), "ambient mismatch");
    if u.ncols() == 0 || v.ncols() == 0 {
        return vec![];
    }
    let prod = u.adjoint() * v;
    let mut sv: Vec<f64> = prod.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect()
}

/// Largest principal angle between equal-dimensional subspaces, or
/// `f64::INFINITY` when the dimensions differ.
///
/// Computed through projection residuals (the sine of the angle), which
/// stays accurate for tiny angles where `acos` of a singular value
/// loses half the precision.
pub fn subspace_gap(u: &CMatrix, v: &CMatrix) -> f64 {
    if u.ncols() != v.ncols() {
        return f64::INFINITY;
    }
    if u.ncols() == 0 {
        return 0.0;
    }
    containment_angle(u, v).max(containment_angle(v, u))
}

/// Largest angle by which the column space of `sub` (orthonormal)
/// sticks out of the column space of `sup` (orthonormal), computed from
/// the projection residual so it is meaningful for any pair of
/// dimensions: `sin θ = ‖(I − P_sup) sub‖₂`.
pub fn containment_angle(sub: &CMatrix, sup: &CMatrix) -> f64 {
    if sub.ncols() == 0 {
        return 0.0;
    }
    if sup.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let residual = sub - sup * (sup.adjoint() * sub);
    spectral_norm(&residual).clamp(0.0, 1.0).asin()
}

/// Orthonormal basis of the intersection of two column spaces given by
/// orthonormal bases.
pub fn intersection(u: &CMatrix, v: &CMatrix, rel_tol: f64) -> CMatrix {
    assert_eq!(u.nrows(), v.nrows(), "ambient mismatch");
    let ambient = u.nrows();
    if u.ncols() == 0 || v.ncols() == 0 {
        return czeros(ambient, 0);
    }
    // Null vectors (x; y) of [U, -V] give intersection elements U x.
    let mut stacked = czeros(ambient, u.ncols() + v.ncols());
    stacked.view_mut((0, 0), (ambient, u.ncols())).copy_from(u);
    stacked
        .view_mut((0, u.ncols()), (ambient, v.ncols()))
        .copy_from(&(-v));
    let ns = null_space_floor(&stacked, rel_tol, 1.0);
    if ns.ncols() == 0 {
        return czeros(ambient, 0);
    }
    let x = ns.rows(0, u.ncols()).into_owned();
    column_space_floor(&(u * x), rel_tol, 1.0)
}

/// Frobenius norm of the Hermiticity defect `m - m*`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}
