//! Linear relations (multivalued operators) in a finite-dimensional
//! Hilbert space `C^r`, carried as orthonormal subspaces of
//! `C^r × C^r`, with the adjoint/closure calculus, the Arens
//! decomposition, deficiency indices, and dual-pair classification.

use serde::Serialize;

use crate::linalg::{czeros, null_space_floor};
use crate::subspace::{quotient_dim, Subspace};
use crate::{C64, CMatrix, CVector, Error, Result};

/// A linear relation in `C^r`: a subspace of pairs `(x, f)`, the first
/// block the domain side and the second the range side.
#[derive(Debug, Clone)]
pub struct LinearRelation {
    space_dim: usize,
    sub: Subspace,
}

impl LinearRelation {
    /// Orthonormalized span of explicit pairs.
    pub fn span(space_dim: usize, pairs: &[(CVector, CVector)], rel_tol: f64) -> Result<Self> {
        let mut m = czeros(2 * space_dim, pairs.len());
        for (j, (x, f)) in pairs.iter().enumerate() {
            if x.nrows() != space_dim || f.nrows() != space_dim {
                return Err(Error::DimensionMismatch(format!(
                    "pair {j}: components must have length {space_dim}"
                )));
            }
            m.view_mut((0, j), (space_dim, 1)).copy_from(x);
            m.view_mut((space_dim, j), (space_dim, 1)).copy_from(f);
        }
        Ok(Self {
            space_dim,
            sub: Subspace::from_span(&m, rel_tol),
        })
    }

    /// Wrap a subspace of the pair space `C^{2r}`.
    pub fn from_subspace(space_dim: usize, sub: Subspace) -> Result<Self> {
        if sub.ambient() != 2 * space_dim {
            return Err(Error::DimensionMismatch(format!(
                "pair-space ambient {} does not match 2r = {}",
                sub.ambient(),
                2 * space_dim
            )));
        }
        Ok(Self { space_dim, sub })
    }

    /// Span of columns of a `2r x k` stacked matrix.
    pub fn from_stacked(space_dim: usize, stacked: &CMatrix, rel_tol: f64) -> Result<Self> {
        if stacked.nrows() != 2 * space_dim {
            return Err(Error::DimensionMismatch(
                "stacked pair matrix must have 2r rows".into(),
            ));
        }
        Ok(Self {
            space_dim,
            sub: Subspace::from_span(stacked, rel_tol),
        })
    }

    pub fn zero(space_dim: usize) -> Self {
        Self {
            space_dim,
            sub: Subspace::zero(2 * space_dim),
        }
    }

    /// Graph of a square matrix acting on `C^r`.
    pub fn graph(m: &CMatrix, rel_tol: f64) -> Self {
        let r = m.nrows();
        assert_eq!(r, m.ncols());
        let mut stacked = czeros(2 * r, r);
        stacked.view_mut((0, 0), (r, r)).copy_from(&crate::linalg::ceye(r));
        stacked.view_mut((r, 0), (r, r)).copy_from(m);
        Self {
            space_dim: r,
            sub: Subspace::from_span(&stacked, rel_tol),
        }
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn dim(&self) -> usize {
        self.sub.dim()
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    pub fn basis(&self) -> &CMatrix {
        self.sub.basis()
    }

    /// Domain-side blocks of the basis (`r x k`).
    pub fn x_block(&self) -> CMatrix {
        self.basis().rows(0, self.space_dim).into_owned()
    }

    /// Range-side blocks of the basis (`r x k`).
    pub fn f_block(&self) -> CMatrix {
        self.basis().rows(self.space_dim, self.space_dim).into_owned()
    }

    /// The domain `D(T) = { x : (x, f) ∈ T }`.
    pub fn domain(&self, rel_tol: f64) -> Subspace {
        Subspace::from_span(&self.x_block(), rel_tol)
    }

    /// The range `R(T) = { f : (x, f) ∈ T }`.
    pub fn range(&self, rel_tol: f64) -> Subspace {
        Subspace::from_span(&self.f_block(), rel_tol)
    }

    /// `N(T) = { x : (x, 0) ∈ T }`.
    pub fn null(&self, rel_tol: f64) -> Subspace {
        let combos = null_space_floor(&self.f_block(), rel_tol, 1.0);
        Subspace::from_span_floor(&(self.x_block() * combos), rel_tol, 1.0)
    }

    /// `T(0) = { g : (0, g) ∈ T }`, the multivalued part's range.
    pub fn multivalued(&self, rel_tol: f64) -> Subspace {
        let combos = null_space_floor(&self.x_block(), rel_tol, 1.0);
        Subspace::from_span_floor(&(self.f_block() * combos), rel_tol, 1.0)
    }

    /// Membership of a single pair, scaled residual test.
    pub fn contains_pair(&self, x: &CVector, f: &CVector, tol: f64) -> bool {
        let mut v = CVector::zeros(2 * self.space_dim);
        v.rows_mut(0, self.space_dim).copy_from(x);
        v.rows_mut(self.space_dim, self.space_dim).copy_from(f);
        self.sub.contains_vector(&v, tol)
    }

    /// The adjoint `T* = {(y, g) : ⟨y, f⟩ = ⟨g, x⟩ ∀ (x, f) ∈ T}`,
    /// computed as the orthogonal complement of `{(f, -x)}`.
    pub fn adjoint(&self, rel_tol: f64) -> LinearRelation {
        let r = self.space_dim;
        let k = self.dim();
        let mut flipped = czeros(2 * r, k);
        flipped
            .view_mut((0, 0), (r, k))
            .copy_from(&self.f_block());
        flipped
            .view_mut((r, 0), (r, k))
            .copy_from(&(-self.x_block()));
        let comp = Subspace::from_span(&flipped, rel_tol).orthogonal_complement(rel_tol);
        LinearRelation {
            space_dim: r,
            sub: comp,
        }
    }

    /// Arens decomposition `T = T_s ⊕ T_∞` with
    /// `T_∞ = {(0, g) ∈ T}` and `T_s = T ⊖ T_∞`.
    pub fn arens_decompose(&self, rel_tol: f64) -> (LinearRelation, LinearRelation) {
        let r = self.space_dim;
        let combos = null_space_floor(&self.x_block(), rel_tol, 1.0);
        let inf_sub = Subspace::from_span_floor(&(self.basis() * combos), rel_tol, 1.0);
        let s_sub = self.sub.minus(&inf_sub, rel_tol);
        (
            LinearRelation {
                space_dim: r,
                sub: s_sub,
            },
            LinearRelation {
                space_dim: r,
                sub: inf_sub,
            },
        )
    }

    /// `dim (R(T - λ))^⊥`.
    pub fn deficiency_index(&self, lambda: C64, rel_tol: f64) -> usize {
        let shifted = self.f_block() - self.x_block() * lambda;
        self.space_dim - crate::linalg::rank_floor(&shifted, rel_tol, 1.0 + lambda.norm())
    }

    pub fn is_contained_in(&self, other: &LinearRelation, angle_tol: f64) -> bool {
        self.sub.contained_in(&other.sub, angle_tol)
    }

    pub fn equals(&self, other: &LinearRelation, angle_tol: f64) -> bool {
        self.sub.equals(&other.sub, angle_tol)
    }

    /// Largest principal angle to another relation of equal dimension.
    pub fn gap(&self, other: &LinearRelation) -> f64 {
        self.sub.gap(&other.sub)
    }

    pub fn is_hermitian(&self, rel_tol: f64, angle_tol: f64) -> bool {
        self.is_contained_in(&self.adjoint(rel_tol), angle_tol)
    }

    pub fn is_self_adjoint(&self, rel_tol: f64, angle_tol: f64) -> bool {
        self.equals(&self.adjoint(rel_tol), angle_tol)
    }

    /// Intersection of two relations on the same space.
    pub fn intersect(&self, other: &LinearRelation, rel_tol: f64) -> LinearRelation {
        LinearRelation {
            space_dim: self.space_dim,
            sub: self.sub.intersect(&other.sub, rel_tol),
        }
    }
}

/// The skew-Hermitian pairing `[(x, f) : (y, g)] = ⟨f, y⟩ − ⟨x, g⟩`.
pub fn bracket(x: &CVector, f: &CVector, y: &CVector, g: &CVector) -> C64 {
    (y.adjoint() * f)[(0, 0)] - (g.adjoint() * x)[(0, 0)]
}

/// Dual-pair hypothesis diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DualPairHypotheses {
    /// `S*(0) ∩ N(T*) = {0}`.
    pub sstar0_cap_null_tstar_trivial: bool,
    /// `T*(0) ∩ N(S*) = {0}`.
    pub tstar0_cap_null_sstar_trivial: bool,
    /// `(T*)_s` restricted to `D(S)` equals `S_s` on the basis of `S`.
    pub operator_restriction_ts: bool,
    /// `(S*)_s` restricted to `D(T)` equals `T_s` on the basis of `T`.
    pub operator_restriction_st: bool,
}

impl DualPairHypotheses {
    pub fn all(&self) -> bool {
        self.sstar0_cap_null_tstar_trivial
            && self.tstar0_cap_null_sstar_trivial
            && self.operator_restriction_ts
            && self.operator_restriction_st
    }
}

/// Dimension bookkeeping for a proper extension `K` of `{T, S}`.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionDims {
    pub k_over_t: usize,
    pub kstar_over_s: usize,
    pub sstar_over_k: usize,
    pub tstar_over_kstar: usize,
}

/// Report of [`classify_pair`].
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub dual_pair: bool,
    pub t_hermitian: bool,
    pub t_self_adjoint: bool,
    pub s_hermitian: bool,
    pub s_self_adjoint: bool,
    pub hypotheses: DualPairHypotheses,
    /// `dim(D(T*)/D(S))` and `dim(D(S*)/D(T))`, when containments hold.
    pub part1_dims: Option<(usize, usize)>,
    pub part1_holds: Option<bool>,
    pub extension_proper: Option<bool>,
    pub extension_dims: Option<ExtensionDims>,
    /// Both decompositions of `dim(D(T*)/D(S))` from the extension.
    pub part2_holds: Option<bool>,
    pub quasi_self_adjoint: Option<bool>,
    /// Evenness of `dim(D(T*)/D(S))` plus the four half-dimension
    /// equalities, evaluated when a quasi self-adjoint `K` is present.
    pub part3_holds: Option<bool>,
    /// Largest angle between `T` and `{(x,f) ∈ S* : [(x,f):T*] = 0}`.
    pub closure_characterization_gap: f64,
    /// `max |[t : t*]|` over basis pairs.
    pub bracket_t_tstar_max: f64,
}

fn operator_restriction_check(
    big: &LinearRelation,
    small: &LinearRelation,
    rel_tol: f64,
    vec_tol: f64,
) -> bool {
    // On each basis pair (y, g) of `small`, the operator parts of `big`
    // and `small` agree iff the multivalued projections of g coincide.
    let mv_big = big.multivalued(rel_tol);
    let mv_small = small.multivalued(rel_tol);
    let g_block = small.f_block();
    for j in 0..g_block.ncols() {
        let g = g_block.column(j).into_owned();
        let d = mv_big.project(&g) - mv_small.project(&g);
        if d.norm() > vec_tol * (1.0 + g.norm()) {
            return false;
        }
    }
    true
}

/// Classify a pair of relations and, optionally, an extension `K`:
/// dual-pair and (self-)adjointness verdicts, dual-pair dimension
/// identities with explicit hypothesis checks, the quasi self-adjoint
/// test for `K`, and the closure characterization
/// `T = {(x, f) ∈ S* : [(x, f) : T*] = 0}`.
pub fn classify_pair(
    t: &LinearRelation,
    s: &LinearRelation,
    k: Option<&LinearRelation>,
    rel_tol: f64,
    angle_tol: f64,
) -> Result<PairReport> {
    if t.space_dim() != s.space_dim() {
        return Err(Error::DimensionMismatch(
            "relations live on different spaces".into(),
        ));
    }
    let r = t.space_dim();
    let t_star = t.adjoint(rel_tol);
    let s_star = s.adjoint(rel_tol);
    let dual_pair = t.is_contained_in(&s_star, angle_tol);

    let hypotheses = DualPairHypotheses {
        sstar0_cap_null_tstar_trivial: s_star
            .multivalued(rel_tol)
            .intersect(&t_star.null(rel_tol), rel_tol)
            .dim()
            == 0,
        tstar0_cap_null_sstar_trivial: t_star
            .multivalued(rel_tol)
            .intersect(&s_star.null(rel_tol), rel_tol)
            .dim()
            == 0,
        operator_restriction_ts: operator_restriction_check(&t_star, s, rel_tol, 1e-8),
        operator_restriction_st: operator_restriction_check(&s_star, t, rel_tol, 1e-8),
    };

    let d_t = t.domain(rel_tol);
    let d_s = s.domain(rel_tol);
    let d_tstar = t_star.domain(rel_tol);
    let d_sstar = s_star.domain(rel_tol);

    let part1_dims = match (
        quotient_dim(&d_s, &d_tstar, angle_tol),
        quotient_dim(&d_t, &d_sstar, angle_tol),
    ) {
        (Ok(a), Ok(b)) => Some((a, b)),
        _ => None,
    };
    let part1_holds = part1_dims.map(|(a, b)| a == b);

    let mut extension_proper = None;
    let mut extension_dims = None;
    let mut part2_holds = None;
    let mut quasi = None;
    let mut part3_holds = None;
    if let Some(k) = k {
        if k.space_dim() != r {
            return Err(Error::DimensionMismatch(
                "extension lives on a different space".into(),
            ));
        }
        let proper = t.is_contained_in(k, angle_tol) && k.is_contained_in(&s_star, angle_tol);
        extension_proper = Some(proper);
        if proper {
            let k_star = k.adjoint(rel_tol);
            let d_k = k.domain(rel_tol);
            let d_kstar = k_star.domain(rel_tol);
            let dims = ExtensionDims {
                k_over_t: quotient_dim(&d_t, &d_k, angle_tol)?,
                kstar_over_s: quotient_dim(&d_s, &d_kstar, angle_tol)?,
                sstar_over_k: quotient_dim(&d_k, &d_sstar, angle_tol)?,
                tstar_over_kstar: quotient_dim(&d_kstar, &d_tstar, angle_tol)?,
            };
            let q = dims.k_over_t == dims.kstar_over_s;
            quasi = Some(q);
            if let Some((n_dim, _)) = part1_dims {
                part2_holds = Some(
                    n_dim == dims.sstar_over_k + dims.tstar_over_kstar
                        && n_dim == dims.k_over_t + dims.kstar_over_s,
                );
                if q {
                    let half = n_dim / 2;
                    part3_holds = Some(
                        n_dim % 2 == 0
                            && dims.k_over_t == half
                            && dims.kstar_over_s == half
                            && dims.sstar_over_k == half
                            && dims.tstar_over_kstar == half,
                    );
                }
            }
            extension_dims = Some(dims);
        }
    }

    // Closure characterization: combos of the S* basis annihilated by
    // the bracket against every T* basis pair.
    let closure_characterization_gap = {
        let kb = s_star.dim();
        let kt = t_star.dim();
        let mut m = czeros(kt, kb);
        for j in 0..kb {
            let xj = s_star.x_block().column(j).into_owned();
            let fj = s_star.f_block().column(j).into_owned();
            for i in 0..kt {
                let yi = t_star.x_block().column(i).into_owned();
                let gi = t_star.f_block().column(i).into_owned();
                m[(i, j)] = bracket(&xj, &fj, &yi, &gi);
            }
        }
        let combos = null_space_floor(&m, rel_tol, 1.0);
        let candidate = Subspace::from_span_floor(&(s_star.basis() * combos), rel_tol, 1.0);
        if candidate.dim() == t.dim() {
            candidate.gap(t.subspace())
        } else {
            f64::INFINITY
        }
    };

    let bracket_t_tstar_max = {
        let mut worst: f64 = 0.0;
        for i in 0..t.dim() {
            let x = t.x_block().column(i).into_owned();
            let f = t.f_block().column(i).into_owned();
            for j in 0..t_star.dim() {
                let y = t_star.x_block().column(j).into_owned();
                let g = t_star.f_block().column(j).into_owned();
                worst = worst.max(bracket(&x, &f, &y, &g).norm());
            }
        }
        worst
    };

    Ok(PairReport {
        dual_pair,
        t_hermitian: t.is_hermitian(rel_tol, angle_tol),
        t_self_adjoint: t.is_self_adjoint(rel_tol, angle_tol),
        s_hermitian: s.is_hermitian(rel_tol, angle_tol),
        s_self_adjoint: s.is_self_adjoint(rel_tol, angle_tol),
        hypotheses,
        part1_dims,
        part1_holds,
        extension_proper,
        extension_dims,
        part2_holds,
        quasi_self_adjoint: quasi,
        part3_holds,
        closure_characterization_gap,
        bracket_t_tstar_max,
    })
}
