//! Doubling of the system pair into one formally self-adjoint system
//! of twice the block size, the trajectory packers that realize the
//! correspondence, relation generation across the packing, and the
//! quasi self-adjoint / self-adjoint correspondence report.
//!
//! With `y1 = (u1; v1)` and `y2 = (u2; v2)`, the domain-side packer
//! stacks `(u2; u1; v1; v2)` and the range-side packer stacks
//! `(g1u; g2u; g2v; g1v)`; both are permutations, and under them the
//! pair of mutually adjoint systems becomes a single system whose
//! coefficient matrix is Hermitian by construction.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::extension::{HamiltonianRelationSet, SystemRelations};
use crate::linalg::{czeros, hermiticity_defect};
use crate::quotient::QuotientSpace;
use crate::relation::LinearRelation;
use crate::subspace::Subspace;
use crate::system::{CoefficientField, SystemSide};
use crate::{C64, CMatrix, CVector, Error, Result};

/// The doubled system: a coefficient field of block size `2n` whose
/// side-1 system is formally self-adjoint, plus the two packers.
pub struct DoubledSystem {
    base_n: usize,
    field: CoefficientField,
    e1: CMatrix,
    e2: CMatrix,
}

fn embed(dst: &mut CMatrix, block: &CMatrix, row: usize, col: usize) {
    dst.view_mut((row, col), (block.nrows(), block.ncols()))
        .copy_from(block);
}

/// Build the doubled coefficient field and packers.
pub fn build_doubled(coeffs: &CoefficientField) -> DoubledSystem {
    let n = coeffs.n();
    let iv = coeffs.interval();
    let m = iv.site_count();
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    let mut w1 = Vec::with_capacity(m);
    let mut w2 = Vec::with_capacity(m);
    for t in iv.sites() {
        let (at, bt, ct, dt) = (
            coeffs.a_at(t),
            coeffs.b_at(t),
            coeffs.c_at(t),
            coeffs.d_at(t),
        );
        // Block roles of the doubled system: slot 1 carries the
        // adjoint-side roles, slot 2 the original ones.
        let mut da = czeros(2 * n, 2 * n);
        embed(&mut da, &dt.adjoint(), 0, 0);
        embed(&mut da, at, n, n);
        let mut db = czeros(2 * n, 2 * n);
        embed(&mut db, &bt.adjoint(), 0, n);
        embed(&mut db, bt, n, 0);
        let mut dc = czeros(2 * n, 2 * n);
        embed(&mut dc, ct, 0, n);
        embed(&mut dc, &ct.adjoint(), n, 0);
        let mut dd = czeros(2 * n, 2 * n);
        embed(&mut dd, dt, 0, 0);
        embed(&mut dd, &at.adjoint(), n, n);
        let mut dw1 = czeros(2 * n, 2 * n);
        embed(&mut dw1, coeffs.w1_at(t), 0, 0);
        embed(&mut dw1, coeffs.w1_at(t), n, n);
        let mut dw2 = czeros(2 * n, 2 * n);
        embed(&mut dw2, coeffs.w2_at(t), 0, 0);
        embed(&mut dw2, coeffs.w2_at(t), n, n);
        a.push(da);
        b.push(db);
        c.push(dc);
        d.push(dd);
        w1.push(dw1);
        w2.push(dw2);
    }
    let field = CoefficientField::new(2 * n, iv, a, b, c, d, w1, w2)
        .expect("doubled blocks inherit validity from the base field");

    // Domain-side packer: (y1; y2) -> (u2; u1; v1; v2).
    let id = crate::linalg::ceye(n);
    let mut e1 = czeros(4 * n, 4 * n);
    embed(&mut e1, &id, 0, 2 * n);
    embed(&mut e1, &id, n, 0);
    embed(&mut e1, &id, 2 * n, n);
    embed(&mut e1, &id, 3 * n, 3 * n);
    // Range-side packer: (g1; g2) -> (g1u; g2u; g2v; g1v).
    let mut e2 = czeros(4 * n, 4 * n);
    embed(&mut e2, &id, 0, 0);
    embed(&mut e2, &id, n, 2 * n);
    embed(&mut e2, &id, 2 * n, 3 * n);
    embed(&mut e2, &id, 3 * n, n);
    DoubledSystem {
        base_n: n,
        field,
        e1,
        e2,
    }
}

impl DoubledSystem {
    pub fn base_n(&self) -> usize {
        self.base_n
    }

    /// The doubled coefficient field (block size `2n`).
    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn e1(&self) -> &CMatrix {
        &self.e1
    }

    pub fn e2(&self) -> &CMatrix {
        &self.e2
    }

    /// Hermiticity defect of the doubled coefficient matrix; exactly 0
    /// since the blocks are rearrangements and conjugates.
    pub fn coefficient_hermiticity_defect(&self) -> f64 {
        self.field
            .interval()
            .sites()
            .map(|t| hermiticity_defect(&self.field.p_matrix(SystemSide::Side1, t)))
            .fold(0.0, f64::max)
    }

    fn pack_with(&self, m: &CMatrix, y1: &Trajectory, y2: &Trajectory) -> Result<Trajectory> {
        if y1.interval() != y2.interval() {
            return Err(Error::IntervalMismatch(
                "packing needs matching intervals".into(),
            ));
        }
        let n = self.base_n;
        let iv = y1.interval();
        let values = iv
            .points()
            .map(|t| {
                let mut stacked = CVector::zeros(4 * n);
                stacked.rows_mut(0, 2 * n).copy_from(y1.at(t));
                stacked.rows_mut(2 * n, 2 * n).copy_from(y2.at(t));
                m * stacked
            })
            .collect();
        Trajectory::from_values(2 * n, iv, values)
    }

    fn unpack_with(&self, m: &CMatrix, packed: &Trajectory) -> Result<(Trajectory, Trajectory)> {
        let n = self.base_n;
        let iv = packed.interval();
        let inv = m
            .clone()
            .try_inverse()
            .expect("packers are permutation matrices");
        let mut v1 = Vec::with_capacity(iv.point_count());
        let mut v2 = Vec::with_capacity(iv.point_count());
        for t in iv.points() {
            let stacked = &inv * packed.at(t);
            v1.push(stacked.rows(0, 2 * n).into_owned());
            v2.push(stacked.rows(2 * n, 2 * n).into_owned());
        }
        Ok((
            Trajectory::from_values(n, iv, v1)?,
            Trajectory::from_values(n, iv, v2)?,
        ))
    }

    /// Pack a domain-side pair of trajectories.
    pub fn pack_y(&self, y1: &Trajectory, y2: &Trajectory) -> Result<Trajectory> {
        self.pack_with(&self.e1, y1, y2)
    }

    /// Pack a range-side pair of trajectories.
    pub fn pack_g(&self, g1: &Trajectory, g2: &Trajectory) -> Result<Trajectory> {
        self.pack_with(&self.e2, g1, g2)
    }

    pub fn unpack_y(&self, packed: &Trajectory) -> Result<(Trajectory, Trajectory)> {
        self.unpack_with(&self.e1, packed)
    }

    pub fn unpack_g(&self, packed: &Trajectory) -> Result<(Trajectory, Trajectory)> {
        self.unpack_with(&self.e2, packed)
    }
}

/// Class-level packers between the base quotient space and the doubled
/// quotient space, plus relation generation across them.
pub struct DoubledLab {
    pub system: DoubledSystem,
    pub space: QuotientSpace,
    /// `R x r` maps sending a base class into the doubled class, per
    /// slot and per packer.
    pack_y_slot1: CMatrix,
    pack_y_slot2: CMatrix,
    pack_g_slot1: CMatrix,
    pack_g_slot2: CMatrix,
}

impl DoubledLab {
    pub fn build(
        coeffs: &CoefficientField,
        base_space: &QuotientSpace,
        rank_rel_tol: f64,
    ) -> Result<Self> {
        let system = build_doubled(coeffs);
        let space = crate::quotient::build_space(system.field(), rank_rel_tol);
        let r = base_space.rank();
        let n = coeffs.n();
        let iv = coeffs.interval();
        let zero = Trajectory::zero(n, iv);
        let mut pack_y_slot1 = czeros(space.rank(), r);
        let mut pack_y_slot2 = czeros(space.rank(), r);
        let mut pack_g_slot1 = czeros(space.rank(), r);
        let mut pack_g_slot2 = czeros(space.rank(), r);
        for i in 0..r {
            let mut e = CVector::zeros(r);
            e[i] = C64::new(1.0, 0.0);
            let lifted = base_space.lift(&e)?;
            pack_y_slot1.set_column(i, &space.project(&system.pack_y(&lifted, &zero)?)?);
            pack_y_slot2.set_column(i, &space.project(&system.pack_y(&zero, &lifted)?)?);
            pack_g_slot1.set_column(i, &space.project(&system.pack_g(&lifted, &zero)?)?);
            pack_g_slot2.set_column(i, &space.project(&system.pack_g(&zero, &lifted)?)?);
        }
        Ok(Self {
            system,
            space,
            pack_y_slot1,
            pack_y_slot2,
            pack_g_slot1,
            pack_g_slot2,
        })
    }

    /// The relation generated by a side-1-type relation in slot 1 and a
    /// side-2-type relation in slot 2: packings of all element pairs.
    pub fn generate(
        &self,
        slot1: &LinearRelation,
        slot2: &LinearRelation,
        rank_rel_tol: f64,
    ) -> Result<LinearRelation> {
        let r = self.pack_y_slot1.ncols();
        if slot1.space_dim() != r || slot2.space_dim() != r {
            return Err(Error::DimensionMismatch(
                "generated relations must live on the base quotient space".into(),
            ));
        }
        let big_r = self.space.rank();
        let k1 = slot1.dim();
        let k2 = slot2.dim();
        let mut stacked = czeros(2 * big_r, k1 + k2);
        for j in 0..k1 {
            let p = slot1.x_block().column(j).into_owned();
            let q = slot1.f_block().column(j).into_owned();
            let mut col = CVector::zeros(2 * big_r);
            col.rows_mut(0, big_r).copy_from(&(&self.pack_y_slot1 * p));
            col.rows_mut(big_r, big_r)
                .copy_from(&(&self.pack_g_slot1 * q));
            stacked.set_column(j, &col);
        }
        for j in 0..k2 {
            let p = slot2.x_block().column(j).into_owned();
            let q = slot2.f_block().column(j).into_owned();
            let mut col = CVector::zeros(2 * big_r);
            col.rows_mut(0, big_r).copy_from(&(&self.pack_y_slot2 * p));
            col.rows_mut(big_r, big_r)
                .copy_from(&(&self.pack_g_slot2 * q));
            stacked.set_column(k1 + j, &col);
        }
        LinearRelation::from_stacked(big_r, &stacked, rank_rel_tol)
    }
}

/// Outcome of [`correspondence_check`].
#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    /// Scaled error of `‖packed‖² = ‖y1‖² + ‖y2‖²` over random pairs.
    pub norm_additivity_err: f64,
    /// Scaled residual of packed solutions against the doubled system.
    pub packed_solution_residual: f64,
    /// `dim(H1(0) ∩ N(H2))` and `dim(H2(0) ∩ N(H1))`.
    pub trivial_intersections: (usize, usize),
    /// Domain-quotient dimensions of `T` over `H_{1,0}` and of `T*`
    /// over `H_{2,0}`.
    pub quasi_dims: (usize, usize),
    pub t_quasi_self_adjoint: bool,
    /// Gap between the doubled relation generated by `{T, T*}` and its
    /// adjoint, with the self-adjointness verdict.
    pub bold_t_adjoint_gap: f64,
    pub bold_t_self_adjoint: bool,
    /// `T quasi ⟹ bold T self-adjoint`.
    pub forward_implication: bool,
    /// `T quasi ⟺ bold T self-adjoint`.
    pub biconditional: bool,
    /// Adjoint generation law: the adjoint of `gen{T, T*}` equals the
    /// relation regenerated from `{(T*)*, T*}`.
    pub adjoint_generation_gap: f64,
    /// `H_{1,0}` quasi self-adjoint vs `bold H0` self-adjoint.
    pub h10_quasi: bool,
    pub bold_h0_self_adjoint: bool,
    pub corollary_biconditional: bool,
    /// Generated doubled minimal/maximal equal the ones computed
    /// directly from the doubled field.
    pub generated_minimal_gap: f64,
    pub generated_maximal_gap: f64,
}

/// Quotient dimension of domains `dim(D(sup)/D(sub))`.
fn domain_quotient(
    sub: &LinearRelation,
    sup: &LinearRelation,
    rank_rel_tol: f64,
    angle_tol: f64,
) -> Result<usize> {
    crate::subspace::quotient_dim(
        &sub.domain(rank_rel_tol),
        &sup.domain(rank_rel_tol),
        angle_tol,
    )
}

/// Verify the doubling correspondence for the proper extension of the
/// minimal pair cut out by the combined boundary subspace `qc`.
pub fn correspondence_check(
    relations: &SystemRelations,
    lab: &DoubledLab,
    qc: &Subspace,
    rank_rel_tol: f64,
    angle_tol: f64,
) -> Result<CorrespondenceReport> {
    let coeffs = relations.side1.coeffs();
    let n = coeffs.n();
    let iv = coeffs.interval();

    // Packing diagnostics on seeded data.
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x9e3779b9);
    let mut norm_err: f64 = 0.0;
    let mut packed_res: f64 = 0.0;
    for _ in 0..10 {
        let y1 = crate::instances::random_trajectory(&mut rng, n, iv);
        let y2 = crate::instances::random_trajectory(&mut rng, n, iv);
        let packed = lab.system.pack_y(&y1, &y2)?;
        let nb = lab
            .space
            .weighted_inner(&packed, &packed, lab.system.field())
            .re;
        let n1 = relations.space.weighted_inner(&y1, &y1, coeffs).re;
        let n2 = relations.space.weighted_inner(&y2, &y2, coeffs).re;
        norm_err = norm_err.max((nb - n1 - n2).abs() / (1.0 + nb.abs()));

        // Forced solutions pack to a doubled solution.
        let g1 = crate::instances::random_trajectory(&mut rng, n, iv);
        let g2 = crate::instances::random_trajectory(&mut rng, n, iv);
        let y0 = crate::instances::random_complex_vector(&mut rng, 2 * n);
        let z0 = crate::instances::random_complex_vector(&mut rng, 2 * n);
        let s1 = crate::dynamics::solve_forced_ivp(
            SystemSide::Side1,
            coeffs,
            C64::new(0.0, 0.0),
            &g1,
            iv.a,
            &y0,
        )?;
        let s2 = crate::dynamics::solve_forced_ivp(
            SystemSide::Side2,
            coeffs,
            C64::new(0.0, 0.0),
            &g2,
            iv.a,
            &z0,
        )?;
        let py = lab.system.pack_y(&s1, &s2)?;
        let pg = lab.system.pack_g(&g1, &g2)?;
        packed_res = packed_res.max(crate::dynamics::forced_residual(
            SystemSide::Side1,
            lab.system.field(),
            C64::new(0.0, 0.0),
            &py,
            Some(&pg),
        ));
    }

    // Trivial-intersection hypotheses.
    let h1 = relations.side1.maximal();
    let h2 = relations.side2.maximal();
    let ti1 = h1
        .multivalued(rank_rel_tol)
        .intersect(&h2.null(rank_rel_tol), rank_rel_tol)
        .dim();
    let ti2 = h2
        .multivalued(rank_rel_tol)
        .intersect(&h1.null(rank_rel_tol), rank_rel_tol)
        .dim();

    // The extension and its adjoint.
    let t = relations.side1.boundary_extension(qc, rank_rel_tol)?;
    let t_star = t.adjoint(rank_rel_tol);
    let d1 = domain_quotient(relations.side1.minimal(), &t, rank_rel_tol, angle_tol)?;
    let d2 = domain_quotient(relations.side2.minimal(), &t_star, rank_rel_tol, angle_tol)?;
    let quasi = d1 == d2;

    let bold_t = lab.generate(&t, &t_star, rank_rel_tol)?;
    let bold_t_star = bold_t.adjoint(rank_rel_tol);
    let bold_gap = bold_t.gap(&bold_t_star);
    let bold_sa = bold_t.equals(&bold_t_star, angle_tol);

    // Adjoint generation law on the same pair: the adjoint of
    // gen{T, T*} is regenerated from {(T*)*, T*}.
    let regenerated = lab.generate(&t_star.adjoint(rank_rel_tol), &t_star, rank_rel_tol)?;
    let adjoint_generation_gap = bold_t_star.gap(&regenerated);

    // Corollary data.
    let h10 = relations.side1.minimal();
    let h20 = relations.side2.minimal();
    let e1 = domain_quotient(h10, h10, rank_rel_tol, angle_tol)?;
    let e2 = domain_quotient(h20, &h10.adjoint(rank_rel_tol), rank_rel_tol, angle_tol)?;
    let h10_quasi = e1 == e2;
    let bold_h0 = lab.generate(h10, h20, rank_rel_tol)?;
    let bold_h0_sa = bold_h0.equals(&bold_h0.adjoint(rank_rel_tol), angle_tol);

    // Generated vs direct doubled relations.
    let bold_relations = SystemRelations::build(
        lab.system.field(),
        rank_rel_tol,
        crate::tol::REPRESENTATIVE_RESIDUAL,
    )?;
    let direct_min = bold_relations.side1.minimal();
    let direct_max = bold_relations.side1.maximal();
    let gen_max = lab.generate(h1, h2, rank_rel_tol)?;
    let generated_minimal_gap = bold_h0.gap(direct_min);
    let generated_maximal_gap = gen_max.gap(direct_max);

    Ok(CorrespondenceReport {
        norm_additivity_err: norm_err,
        packed_solution_residual: packed_res,
        trivial_intersections: (ti1, ti2),
        quasi_dims: (d1, d2),
        t_quasi_self_adjoint: quasi,
        bold_t_adjoint_gap: bold_gap,
        bold_t_self_adjoint: bold_sa,
        forward_implication: !quasi || bold_sa,
        biconditional: quasi == bold_sa,
        adjoint_generation_gap,
        h10_quasi,
        bold_h0_self_adjoint: bold_h0_sa,
        corollary_biconditional: h10_quasi == bold_h0_sa,
        generated_minimal_gap,
        generated_maximal_gap,
    })
}

impl HamiltonianRelationSet {
    /// Domain-quotient dimension of the maximal over the minimal
    /// relation, the total boundary-freedom count.
    pub fn domain_defect(&self, rank_rel_tol: f64, angle_tol: f64) -> Result<usize> {
        crate::subspace::quotient_dim(
            &self.minimal().domain(rank_rel_tol),
            &self.maximal().domain(rank_rel_tol),
            angle_tol,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_field, InstanceSpec, WeightKind};
    use crate::system::{symplectic_j, IntegerInterval};
    use crate::tol;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn doubled_coefficient_matrix_is_exactly_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let iv = IntegerInterval::new(0, 4).unwrap();
        let spec = InstanceSpec {
            n: 2,
            interval: iv,
            rho: 0.6,
            weights: WeightKind::RandomPd,
            hermitian: false,
        };
        let coeffs = random_field(&mut rng, &spec);
        let dsys = build_doubled(&coeffs);
        assert_eq!(dsys.coefficient_hermiticity_defect(), 0.0);
        assert!(dsys.field().is_formally_self_adjoint(0.0));
    }

    #[test]
    fn pack_unpack_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let iv = IntegerInterval::new(0, 4).unwrap();
        let coeffs = CoefficientField::free(2, iv);
        let dsys = build_doubled(&coeffs);
        let y1 = crate::instances::random_trajectory(&mut rng, 2, iv);
        let y2 = crate::instances::random_trajectory(&mut rng, 2, iv);
        let packed = dsys.pack_y(&y1, &y2).unwrap();
        let (b1, b2) = dsys.unpack_y(&packed).unwrap();
        for t in iv.points() {
            assert!((b1.at(t) - y1.at(t)).norm() < 1e-14);
            assert!((b2.at(t) - y2.at(t)).norm() < 1e-14);
        }
        let packed_g = dsys.pack_g(&y1, &y2).unwrap();
        let (c1, c2) = dsys.unpack_g(&packed_g).unwrap();
        for t in iv.points() {
            assert!((c1.at(t) - y1.at(t)).norm() < 1e-14);
            assert!((c2.at(t) - y2.at(t)).norm() < 1e-14);
        }
    }

    #[test]
    fn bilinear_identity_under_packing() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let iv = IntegerInterval::new(0, 3).unwrap();
        let n = 2;
        let coeffs = CoefficientField::free(n, iv);
        let dsys = build_doubled(&coeffs);
        let jj = symplectic_j(2 * n);
        let j = symplectic_j(n);
        for _ in 0..10 {
            let y1 = crate::instances::random_trajectory(&mut rng, n, iv);
            let y2 = crate::instances::random_trajectory(&mut rng, n, iv);
            let x1 = crate::instances::random_trajectory(&mut rng, n, iv);
            let x2 = crate::instances::random_trajectory(&mut rng, n, iv);
            let py = dsys.pack_y(&y1, &y2).unwrap();
            let px = dsys.pack_y(&x1, &x2).unwrap();
            for t in iv.points() {
                let lhs = (py.at(t).adjoint() * &jj * px.at(t))[(0, 0)];
                let rhs = (y2.at(t).adjoint() * &j * x1.at(t))[(0, 0)]
                    + (y1.at(t).adjoint() * &j * x2.at(t))[(0, 0)];
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn packed_solutions_solve_doubled_system_and_norms_add() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let iv = IntegerInterval::new(0, 5).unwrap();
        let spec = InstanceSpec {
            n: 1,
            interval: iv,
            rho: 0.5,
            weights: WeightKind::RandomPd,
            hermitian: false,
        };
        let coeffs = random_field(&mut rng, &spec);
        let rel = SystemRelations::build(&coeffs, tol::RANK_REL, tol::REPRESENTATIVE_RESIDUAL)
            .unwrap();
        let lab = DoubledLab::build(&coeffs, &rel.space, tol::RANK_REL).unwrap();
        let qc = Subspace::zero(4);
        let report =
            correspondence_check(&rel, &lab, &qc, tol::RANK_REL, tol::SUBSPACE_ANGLE).unwrap();
        assert!(report.norm_additivity_err < 1e-10);
        assert!(report.packed_solution_residual < tol::SYSTEM_RESIDUAL);
        assert_eq!(report.trivial_intersections, (0, 0));
        assert!(
            report.generated_minimal_gap < tol::SUBSPACE_ANGLE,
            "generated vs direct minimal gap {}",
            report.generated_minimal_gap
        );
        assert!(
            report.generated_maximal_gap < tol::SUBSPACE_ANGLE,
            "generated vs direct maximal gap {}",
            report.generated_maximal_gap
        );
        assert!(report.adjoint_generation_gap < tol::SUBSPACE_ANGLE);
        assert!(report.forward_implication);
    }
}
