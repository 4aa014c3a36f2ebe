//! Pure-case functional model on `𝒬 = H²(D_{T*}) ⊖ Θ_T H²(D_T)`, truncated to degree `N`,
//! and the admissibility test for abstract triples `(G₁, G₂, Θ)`.

use super::charfn::CharTriple;
use crate::error::{Error, Result};
use crate::hardy::{analytic_toeplitz, fiberwise, mult_op, shift, HardyKind, HardyOp, LinearOperator, PencilSymbol};
use crate::linalg::{identity, normalize_phases, op_norm, pencil_sup_norm, projector_gap, range_basis, CMat, RANK_TOL};
use crate::pairs::{asymptotic_limit, CommutingPair};
use crate::report::Check;

/// A degree bound is accepted once `‖T^N‖` is this small.
pub const MODEL_POWER_TOL: f64 = 1e-8;
pub const MAX_MODEL_DEGREE: usize = 256;
/// Singular values of the truncated `T_N(Θ)` above this count toward `Θ H²`.
pub const RANGE_THRESHOLD: f64 = 0.5;
pub const ADMISSIBLE_TOL: f64 = 1e-7;
const PENCIL_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalModel {
    pub n: usize,
    /// `‖T^N‖` at the chosen degree.
    pub power_norm: f64,
    pub q_projector: HardyOp,
    /// Orthonormal basis of the truncated `𝒬`.
    pub q_basis: CMat,
    pub m_phi: HardyOp,
    pub m_psi: HardyOp,
    pub m_z: HardyOp,
    /// Compressions of `(M_Φ, M_Ψ, M_z)` to `𝒬`, in `q_basis` coordinates.
    pub model_triple: [CMat; 3],
}

impl FunctionalModel {
    pub fn q_dim(&self) -> usize {
        self.q_basis.ncols()
    }

    /// Residual budget for statements on `𝒬`: `1e-7 + 10‖T^N‖`.
    pub fn tolerance(&self) -> f64 {
        1e-7 + 10.0 * self.power_norm
    }

    pub fn ops(&self) -> [&HardyOp; 3] {
        [&self.m_phi, &self.m_psi, &self.m_z]
    }
}

fn power_norm(t: &CMat, n: usize) -> f64 {
    let mut p = identity(t.nrows());
    for _ in 0..n {
        p = &p * t;
    }
    op_norm(&p)
}

/// Smallest degree `N ≥ start` with `‖T^N‖ ≤ 1e-8`.
pub fn model_degree(t: &CMat, start: usize) -> Result<usize> {
    let mut p = identity(t.nrows());
    for _ in 0..start {
        p = &p * t;
    }
    let mut n = start.max(2);
    loop {
        let norm = op_norm(&p);
        if norm <= MODEL_POWER_TOL {
            return Ok(n);
        }
        if n >= MAX_MODEL_DEGREE {
            return Err(Error::TailNotConverged { degree: n, tail: norm, tol: MODEL_POWER_TOL });
        }
        p = &p * t;
        n += 1;
    }
}

/// Orthonormal basis of the complement of `Θ H²` in `H²_N(D_{T*})`: left singular vectors of
/// the truncated `T_N(Θ)` whose singular values fall below [`RANGE_THRESHOLD`].
fn theta_complement(coeffs: &[CMat], n: usize) -> CMat {
    let toeplitz = analytic_toeplitz(coeffs, n).to_dense();
    let eig = (&toeplitz * toeplitz.adjoint()).symmetric_eigen();
    let keep: Vec<usize> =
        (0..toeplitz.nrows()).filter(|&j| eig.eigenvalues[j] <= RANGE_THRESHOLD * RANGE_THRESHOLD).collect();
    let mut q = CMat::from_fn(toeplitz.nrows(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    normalize_phases(&mut q);
    q
}

/// Functional model at the smallest admissible degree `N ≥ n`.
pub fn functional_model(triple: &CharTriple, n: usize) -> Result<FunctionalModel> {
    let t = &triple.theta.t;
    if !triple.theta.pure {
        let rank = asymptotic_limit(t, crate::douglas::LIMIT_TOL, crate::douglas::LIMIT_MAX_ITER)?.rank();
        return Err(Error::NotPure { rank });
    }
    let n = model_degree(t, n)?;
    functional_model_at(triple, n)
}

/// Functional model at exactly degree `n`, without the tail criterion.
pub fn functional_model_at(triple: &CharTriple, n: usize) -> Result<FunctionalModel> {
    let t = &triple.theta.t;
    if !triple.theta.pure {
        return Err(Error::NotPure { rank: usize::MAX });
    }
    let (ds, _) = triple.theta.shape();
    let coeffs = triple.theta.taylor(n);
    let q_basis = theta_complement(&coeffs, n);
    let q_projector =
        HardyOp { degree_bound: n, fiber_in: ds, fiber_out: ds, kind: HardyKind::Dense(&q_basis * q_basis.adjoint()) };
    let m_phi = mult_op(&PencilSymbol::new(triple.g1.adjoint(), triple.g2.clone()), n);
    let m_psi = mult_op(&PencilSymbol::new(triple.g2.adjoint(), triple.g1.clone()), n);
    let m_z = shift(n, ds);
    let compress = |op: &HardyOp| q_basis.adjoint() * op.apply(&q_basis);
    let model_triple = [compress(&m_phi), compress(&m_psi), compress(&m_z)];
    Ok(FunctionalModel { n, power_norm: power_norm(t, n), q_projector, q_basis, m_phi, m_psi, m_z, model_triple })
}

/// Observability operator of `T` at degree `n`, in `D_{T*}` coordinates.
pub fn observability_rows(triple: &CharTriple, n: usize) -> CMat {
    let cf = &triple.theta;
    crate::douglas::power_rows(&cf.defect_adj.coords(), &cf.t, n)
}

/// Unitary equivalence of `(T₁, T₂, T)` with the model triple through the observability operator.
///
/// `o` is the observability operator at degree `fm.n` (for instance the Hardy rows of `Π_D`
/// when `T` is pure); see [`observability_rows`].
pub fn verify_model_equivalence(pair: &CommutingPair, fm: &FunctionalModel, o: &CMat) -> Vec<Check> {
    let tol = fm.tolerance();
    let h = pair.dim();
    let oc = fm.q_basis.adjoint() * o;
    let isometry = op_norm(&(o.adjoint() * o - identity(h)));
    let square = fm.q_dim() == h;
    let coisometry = if square { op_norm(&(&oc * oc.adjoint() - identity(fm.q_dim()))) } else { f64::INFINITY };
    let gap = projector_gap(range_basis(o, RANK_TOL).basis(), &fm.q_basis);
    let ts = [pair.t1(), pair.t2(), pair.product()];
    let intertwining = ts
        .iter()
        .zip(fm.model_triple.iter())
        .map(|(t, m)| op_norm(&(&oc * t.adjoint() - m.adjoint() * &oc)))
        .fold(0.0, f64::max);
    vec![
        Check::at_most("q_dim_mismatch", (fm.q_dim() as f64 - h as f64).abs(), 0.0).with_degree(fm.n),
        Check::at_most("observability_isometry", isometry, tol).with_degree(fm.n),
        Check::at_most("observability_unitarity", coisometry, tol).with_degree(fm.n),
        Check::at_most("range_gap", gap, 1e-7).with_degree(fm.n),
        Check::at_most("model_intertwining", intertwining, tol).with_degree(fm.n),
    ]
}

/// Admissibility of `(G₁, G₂, Θ)` at degree `n`: contractive pencils, invariance of `ΘH²`, and
/// the backward relations on its complement.
pub fn admissible_check(g1: &CMat, g2: &CMat, theta_coeffs: &[CMat], n: usize) -> Vec<Check> {
    let phi = pencil_sup_norm(&g1.adjoint(), g2, PENCIL_GRID);
    let psi = pencil_sup_norm(&g2.adjoint(), g1, PENCIL_GRID);
    let ds = g1.nrows();
    let mut coeffs: Vec<CMat> = theta_coeffs.iter().take(n).cloned().collect();
    if coeffs.is_empty() {
        coeffs.push(CMat::zeros(ds, 0));
    }
    let q = theta_complement(&coeffs, n);
    let m_phi = mult_op(&PencilSymbol::new(g1.adjoint(), g2.clone()), n);
    let m_psi = mult_op(&PencilSymbol::new(g2.adjoint(), g1.clone()), n);
    let m_z = shift(n, ds);
    // ‖P_𝒬 M P_{ΘH²}‖ = ‖Qᴴ M (I − QQᴴ)‖, and the backward relations only need M applied to Q
    let leak = |m: &HardyOp| {
        let qm = m.apply_adjoint(&q).adjoint();
        op_norm(&(&qm - &qm * &q * q.adjoint()))
    };
    let invariance = leak(&m_phi).max(leak(&m_psi));
    let backward = |a: &HardyOp, b: &HardyOp| op_norm(&(a.apply_adjoint(&b.apply_adjoint(&q)) - m_z.apply_adjoint(&q)));
    let back1 = backward(&m_phi, &m_psi);
    let back2 = backward(&m_psi, &m_phi);
    vec![
        Check::at_most("pencil_norm_phi", phi, 1.0 + 1e-8),
        Check::at_most("pencil_norm_psi", psi, 1.0 + 1e-8),
        Check::at_most("theta_invariance", invariance, ADMISSIBLE_TOL).with_degree(n),
        Check::at_most("backward_relation_1", back1, ADMISSIBLE_TOL).with_degree(n),
        Check::at_most("backward_relation_2", back2, ADMISSIBLE_TOL).with_degree(n),
    ]
}

/// How far `I ⊗ u_*` is from carrying one functional model onto the other, projector and
/// compressed operators included. Both models must share the degree bound.
pub fn model_transport_residual(a: &FunctionalModel, b: &FunctionalModel, u_star: &CMat) -> f64 {
    assert_eq!(a.n, b.n, "models must share the degree bound");
    let wqa = fiberwise(u_star, &a.q_basis, a.n);
    let mut worst = projector_gap(&wqa, &b.q_basis);
    // on matching ranges, Z = Q_bᴴ(I ⊗ u_*)Q_a carries one set of compressions onto the other
    let z = b.q_basis.adjoint() * &wqa;
    for (ca, cb) in a.model_triple.iter().zip(&b.model_triple) {
        worst = worst.max(op_norm(&(&z * ca * z.adjoint() - cb)));
    }
    worst
}
