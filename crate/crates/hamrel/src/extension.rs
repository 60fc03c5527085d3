//! The maximal and minimal Hamiltonian relations of a system on a
//! finite interval, unique trajectory representatives, boundary-value
//! maps, boundary-subspace extensions, and the `Q ↦ Q*` adjoint law for
//! half-line boundary conditions emulated by a right-end zero
//! condition.

use serde::Serialize;

use crate::dynamics::{
    fundamental_matrix, patch_bvp, solve_forced_ivp, FundamentalMatrix, Trajectory,
};
use crate::linalg::{czeros, lstsq, null_space_floor, spectral_norm};
use crate::quotient::QuotientSpace;
use crate::relation::LinearRelation;
use crate::subspace::Subspace;
use crate::system::{symplectic_j, CoefficientField, SystemSide};
use crate::{C64, CMatrix, CVector, Error, Result};

/// Recovers the unique trajectory representative of a relation element
/// `(p, q)`: the trajectory `y` with `(L y)(t) = W(t) R(g)(t)` for a
/// lift `g` of `q` and `project(y) = p`.
pub struct RepresentativeSolver {
    side: SystemSide,
    coeffs: CoefficientField,
    space: QuotientSpace,
    fundamental: FundamentalMatrix,
    /// Projections of the fundamental columns, `r x 2n`.
    projected_columns: CMatrix,
}

impl RepresentativeSolver {
    pub fn new(side: SystemSide, coeffs: &CoefficientField, space: &QuotientSpace) -> Result<Self> {
        let iv = coeffs.interval();
        let fundamental = fundamental_matrix(side, coeffs, C64::new(0.0, 0.0), iv.a)?;
        let n = coeffs.n();
        let mut projected_columns = czeros(space.rank(), 2 * n);
        for j in 0..2 * n {
            let col = space.project(&fundamental.column(j))?;
            projected_columns.set_column(j, &col);
        }
        Ok(Self {
            side,
            coeffs: coeffs.clone(),
            space: space.clone(),
            fundamental,
            projected_columns,
        })
    }

    pub fn side(&self) -> SystemSide {
        self.side
    }

    /// The unique representative, with its residual against `p`.
    ///
    /// A residual above `tol` means `(p, q)` is not a member of the
    /// maximal relation.
    pub fn solve(&self, p: &CVector, q: &CVector, tol: f64) -> Result<(Trajectory, f64)> {
        let iv = self.coeffs.interval();
        let n = self.coeffs.n();
        let g = self.space.lift(q)?;
        let zero = CVector::zeros(2 * n);
        let particular =
            solve_forced_ivp(self.side, &self.coeffs, C64::new(0.0, 0.0), &g, iv.a, &zero)?;
        let target = p - self.space.project(&particular)?;
        let xi = lstsq(&self.projected_columns, &target, crate::tol::RANK_REL);
        let residual = (&self.projected_columns * &xi - &target).norm() / (1.0 + p.norm());
        if residual > tol {
            return Err(Error::NotInRelation { residual, tol });
        }
        let mut y = particular;
        for j in 0..2 * n {
            y = y.add(&self.fundamental.column(j).scaled(xi[j]));
        }
        Ok((y, residual))
    }
}

/// Spanning construction of the maximal relation: every ambient
/// forcing-basis element paired with one forced solution, plus the
/// homogeneous solutions (zero forcing).
pub fn build_maximal(
    side: SystemSide,
    coeffs: &CoefficientField,
    space: &QuotientSpace,
    rank_rel_tol: f64,
) -> Result<LinearRelation> {
    let iv = coeffs.interval();
    let n = coeffs.n();
    let r = space.rank();
    let ambient = space.ambient_dim();
    let zero = CVector::zeros(2 * n);
    let mut stacked = czeros(2 * r, ambient + 2 * n);
    for i in 0..ambient {
        let mut e = CVector::zeros(ambient);
        e[i] = C64::new(1.0, 0.0);
        let g = Trajectory::from_ambient(n, iv, &e)?;
        let y = solve_forced_ivp(side, coeffs, C64::new(0.0, 0.0), &g, iv.a, &zero)?;
        let mut col = CVector::zeros(2 * r);
        col.rows_mut(0, r).copy_from(&space.project(&y)?);
        col.rows_mut(r, r).copy_from(&space.project(&g)?);
        stacked.set_column(i, &col);
    }
    let fm = fundamental_matrix(side, coeffs, C64::new(0.0, 0.0), iv.a)?;
    for j in 0..2 * n {
        let mut col = CVector::zeros(2 * r);
        col.rows_mut(0, r).copy_from(&space.project(&fm.column(j))?);
        stacked.set_column(ambient + j, &col);
    }
    LinearRelation::from_stacked(r, &stacked, rank_rel_tol)
}

/// The maximal relation, the minimal relation (its boundary-zero part),
/// and the boundary-value map of one side's system on a finite
/// interval.
pub struct HamiltonianRelationSet {
    side: SystemSide,
    coeffs: CoefficientField,
    space: QuotientSpace,
    maximal: LinearRelation,
    minimal: LinearRelation,
    /// Boundary values `(y(a); y(b+1))` of the representatives of the
    /// maximal relation's orthonormal basis, `4n x dim(maximal)`.
    boundary_map: CMatrix,
    rep_solver: RepresentativeSolver,
}

impl HamiltonianRelationSet {
    pub fn new(
        side: SystemSide,
        coeffs: &CoefficientField,
        space: &QuotientSpace,
        rank_rel_tol: f64,
        representative_tol: f64,
    ) -> Result<Self> {
        let n = coeffs.n();
        let maximal = build_maximal(side, coeffs, space, rank_rel_tol)?;
        let rep_solver = RepresentativeSolver::new(side, coeffs, space)?;
        let r = space.rank();
        let k = maximal.dim();
        let mut boundary_map = czeros(4 * n, k);
        for j in 0..k {
            let p = maximal.basis().column(j).rows(0, r).into_owned();
            let q = maximal.basis().column(j).rows(r, r).into_owned();
            let (y, _) = rep_solver.solve(&p, &q, representative_tol)?;
            let iv = coeffs.interval();
            let mut col = CVector::zeros(4 * n);
            col.rows_mut(0, 2 * n).copy_from(y.at(iv.a));
            col.rows_mut(2 * n, 2 * n).copy_from(y.at(iv.b + 1));
            boundary_map.set_column(j, &col);
        }
        let bscale = spectral_norm(&boundary_map).max(1.0);
        let combos = null_space_floor(&boundary_map, rank_rel_tol, bscale);
        let minimal = LinearRelation::from_stacked(r, &(maximal.basis() * combos), rank_rel_tol)?;
        Ok(Self {
            side,
            coeffs: coeffs.clone(),
            space: space.clone(),
            maximal,
            minimal,
            boundary_map,
            rep_solver,
        })
    }

    pub fn side(&self) -> SystemSide {
        self.side
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn space(&self) -> &QuotientSpace {
        &self.space
    }

    pub fn maximal(&self) -> &LinearRelation {
        &self.maximal
    }

    pub fn minimal(&self) -> &LinearRelation {
        &self.minimal
    }

    pub fn boundary_map(&self) -> &CMatrix {
        &self.boundary_map
    }

    pub fn representative(&self, p: &CVector, q: &CVector, tol: f64) -> Result<(Trajectory, f64)> {
        self.rep_solver.solve(p, q, tol)
    }

    /// Rank of the boundary-value map on the maximal relation.
    pub fn boundary_rank(&self, rank_rel_tol: f64) -> usize {
        crate::linalg::rank_floor(
            &self.boundary_map,
            rank_rel_tol,
            spectral_norm(&self.boundary_map).max(1.0),
        )
    }

    /// The subspace `{(y, g) ∈ H : (y(a); y(b+1)) ∈ Qc}` of the maximal
    /// relation, for a combined boundary subspace `Qc ⊆ C^{4n}`.
    pub fn boundary_extension(&self, qc: &Subspace, rank_rel_tol: f64) -> Result<LinearRelation> {
        let n = self.coeffs.n();
        if qc.ambient() != 4 * n {
            return Err(Error::DimensionMismatch(format!(
                "combined boundary subspace must live in C^{}",
                4 * n
            )));
        }
        let bscale = spectral_norm(&self.boundary_map).max(1.0);
        let constraint =
            &self.boundary_map - qc.basis() * (qc.basis().adjoint() * &self.boundary_map);
        let combos = null_space_floor(&constraint, rank_rel_tol, bscale);
        LinearRelation::from_stacked(
            self.space.rank(),
            &(self.maximal.basis() * combos),
            rank_rel_tol,
        )
    }

    /// The minimal relation rebuilt from patch-constructed
    /// compact-support elements: for each ambient forcing-basis element
    /// `g`, the forced solution from zero initial data is corrected by
    /// a patched solution so that both endpoint values vanish.
    pub fn minimal_via_compact_support(&self, rank_rel_tol: f64) -> Result<LinearRelation> {
        let iv = self.coeffs.interval();
        let n = self.coeffs.n();
        let r = self.space.rank();
        let ambient = self.space.ambient_dim();
        let zero = CVector::zeros(2 * n);
        let mut stacked = czeros(2 * r, ambient);
        for i in 0..ambient {
            let mut e = CVector::zeros(ambient);
            e[i] = C64::new(1.0, 0.0);
            let g = Trajectory::from_ambient(n, iv, &e)?;
            let y = solve_forced_ivp(self.side, &self.coeffs, C64::new(0.0, 0.0), &g, iv.a, &zero)?;
            let beta = y.at(iv.b + 1).clone();
            let patch = patch_bvp(self.side, &self.coeffs, iv, &zero, &beta)?;
            let y0 = y.sub(&patch.solution);
            let g0 = g.sub(&patch.forcing);
            let mut col = CVector::zeros(2 * r);
            col.rows_mut(0, r).copy_from(&self.space.project(&y0)?);
            col.rows_mut(r, r).copy_from(&self.space.project(&g0)?);
            stacked.set_column(i, &col);
        }
        LinearRelation::from_stacked(r, &stacked, rank_rel_tol)
    }
}

/// Both sides' relation sets over one shared quotient space.
pub struct SystemRelations {
    pub space: QuotientSpace,
    pub side1: HamiltonianRelationSet,
    pub side2: HamiltonianRelationSet,
}

impl SystemRelations {
    pub fn build(
        coeffs: &CoefficientField,
        rank_rel_tol: f64,
        representative_tol: f64,
    ) -> Result<Self> {
        let space = crate::quotient::build_space(coeffs, rank_rel_tol);
        let side1 = HamiltonianRelationSet::new(
            SystemSide::Side1,
            coeffs,
            &space,
            rank_rel_tol,
            representative_tol,
        )?;
        let side2 = HamiltonianRelationSet::new(
            SystemSide::Side2,
            coeffs,
            &space,
            rank_rel_tol,
            representative_tol,
        )?;
        Ok(Self {
            space,
            side1,
            side2,
        })
    }

    pub fn side(&self, side: SystemSide) -> &HamiltonianRelationSet {
        match side {
            SystemSide::Side1 => &self.side1,
            SystemSide::Side2 => &self.side2,
        }
    }
}

/// `Q* = C^{2n} ⊖ (J Q)`.
pub fn q_star(q: &Subspace, rank_rel_tol: f64) -> Result<Subspace> {
    if q.ambient() % 2 != 0 {
        return Err(Error::DimensionMismatch(
            "boundary subspace must live in an even-dimensional space".into(),
        ));
    }
    let n = q.ambient() / 2;
    let j = symplectic_j(n);
    Ok(q.map(&j, rank_rel_tol).orthogonal_complement(rank_rel_tol))
}

/// Combined boundary subspace `Q_left × Q_right ⊆ C^{4n}` from left and
/// right pieces in `C^{2n}`.
pub fn combined_boundary(q_left: &Subspace, q_right: &Subspace) -> Subspace {
    let m = q_left.ambient();
    assert_eq!(m, q_right.ambient());
    let mut basis = czeros(2 * m, q_left.dim() + q_right.dim());
    basis
        .view_mut((0, 0), (m, q_left.dim()))
        .copy_from(q_left.basis());
    basis
        .view_mut((m, q_left.dim()), (m, q_right.dim()))
        .copy_from(q_right.basis());
    Subspace::from_orthonormal(basis).expect("block-diagonal stack of orthonormal bases")
}

/// Both evaluations of the boundary form for a side-1/side-2 pair of
/// relation elements: the inner-product form `⟨g1, y2⟩ − ⟨y1, g2⟩` and
/// the endpoint form `(y2* J y1)(b+1) − (y2* J y1)(a)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFormReport {
    pub inner_form: (f64, f64),
    pub endpoint_form: (f64, f64),
    pub gap: f64,
    pub scale: f64,
}

impl BoundaryFormReport {
    pub fn scaled_gap(&self) -> f64 {
        self.gap / self.scale
    }
}

pub fn boundary_form(
    relations: &SystemRelations,
    pair1: (&CVector, &CVector),
    pair2: (&CVector, &CVector),
    membership_tol: f64,
) -> Result<BoundaryFormReport> {
    let space = &relations.space;
    // ⟨g1, y2⟩ − ⟨y1, g2⟩ with the convention ⟨p, q⟩ = q* p.
    let inner = space.class_inner(pair1.1, pair2.0)? - space.class_inner(pair1.0, pair2.1)?;
    let (y1, _) = relations.side1.representative(pair1.0, pair1.1, membership_tol)?;
    let (y2, _) = relations.side2.representative(pair2.0, pair2.1, membership_tol)?;
    let iv = relations.side1.coeffs().interval();
    let j = symplectic_j(relations.side1.coeffs().n());
    let hi = (y2.at(iv.b + 1).adjoint() * &j * y1.at(iv.b + 1))[(0, 0)];
    let lo = (y2.at(iv.a).adjoint() * &j * y1.at(iv.a))[(0, 0)];
    let endpoint = hi - lo;
    let scale = 1.0 + inner.norm() + endpoint.norm() + y1.max_norm() * y2.max_norm();
    Ok(BoundaryFormReport {
        inner_form: (inner.re, inner.im),
        endpoint_form: (endpoint.re, endpoint.im),
        gap: (inner - endpoint).norm(),
        scale,
    })
}

/// Outcome of the `Q*` adjoint law check.
#[derive(Debug, Clone, Serialize)]
pub struct QstarReport {
    pub q_dim: usize,
    pub q_star_dim: usize,
    pub adjoint_dim: usize,
    pub predicted_dim: usize,
    pub gap: f64,
    pub pass: bool,
}

/// Verify `(T1)* = {(y, g) ∈ H2 : y(a) ∈ Q*}` for
/// `T1 = {(y, g) ∈ H1 : y(a) ∈ Q, y(b+1) = 0}`, the finite-interval
/// emulation of the half-line boundary relation in the limit point
/// case.
pub fn verify_qstar_adjoint(
    relations: &SystemRelations,
    q: &Subspace,
    rank_rel_tol: f64,
    angle_tol: f64,
) -> Result<QstarReport> {
    let n = relations.side1.coeffs().n();
    if q.ambient() != 2 * n {
        return Err(Error::DimensionMismatch(format!(
            "Q must live in C^{}",
            2 * n
        )));
    }
    let qs = q_star(q, rank_rel_tol)?;
    let t1 = relations
        .side1
        .boundary_extension(&combined_boundary(q, &Subspace::zero(2 * n)), rank_rel_tol)?;
    let adjoint = t1.adjoint(rank_rel_tol);
    let predicted = relations
        .side2
        .boundary_extension(&combined_boundary(&qs, &Subspace::full(2 * n)), rank_rel_tol)?;
    let gap = adjoint.gap(&predicted);
    Ok(QstarReport {
        q_dim: q.dim(),
        q_star_dim: qs.dim(),
        adjoint_dim: adjoint.dim(),
        predicted_dim: predicted.dim(),
        gap,
        pass: adjoint.dim() == predicted.dim() && gap <= angle_tol,
    })
}
