//! The Schäffer-model Andô dilation on `H ⊕ H²_N(F)`, the classical Schäffer dilation
//! `V_S` of `T` on `H ⊕ H²_N(D_T)`, the embedding `Π_Λ = I ⊕ (I ⊗ Λ)`, and the compressed
//! pair `(S₁, S₂)`.
//!
//! Block layout: the first `dim H` rows are `H`, followed by `N` coefficient blocks.

use crate::ando::{bcl_coefficients, fund_eq_residuals, AndoTuple, FundamentalPair};
use crate::error::Result;
use crate::hardy::{interior_isometry_residual, interior_rows, mult_op, shift, unit_columns, PencilSymbol};
use crate::linalg::{direct_sum, fro, kron_identity, op_norm, pencil_sup_norm, zeros, CMat};
use crate::pairs::{defect, CommutingPair, DefectData};
use crate::report::Check;

/// θ-grid for the part-(S) pencil norms.
pub const PENCIL_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SchafferDilation {
    pub n: usize,
    pub h_dim: usize,
    pub f_dim: usize,
    pub d_dim: usize,
    pub v1: CMat,
    pub v2: CMat,
    pub v: CMat,
    pub pi_lambda: CMat,
    pub vs: CMat,
}

impl SchafferDilation {
    pub fn space_dim(&self) -> usize {
        self.h_dim + self.n * self.f_dim
    }

    /// Rows of `H ⊕ interior of H²_N(F)`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        0..interior_rows(self.h_dim, self.n, self.f_dim).end
    }
}

/// `[[T, 0], [D x, M]]` on `H ⊕ H²_N`: the common shape of every Schäffer-type block matrix.
fn lower_block(top: &CMat, col: &CMat, hardy: &CMat) -> CMat {
    let h = top.nrows();
    let mut m = direct_sum(top, hardy);
    m.view_mut((h, 0), col.shape()).copy_from(col);
    m
}

fn vs_from(t: &CMat, dt: &DefectData, n: usize) -> CMat {
    lower_block(t, &dt.coords(), &shift(n, dt.dim()).to_dense())
}

/// `V_S = [[T, 0], [D_T, M_z]]` on `H ⊕ H²_N(D_T)`.
pub fn build_vs(t: &CMat, n: usize) -> Result<CMat> {
    let dt = defect(t)?;
    Ok(vs_from(t, &dt, n))
}

pub fn build_schaffer_pair(pair: &CommutingPair, tuple: &AndoTuple, n: usize) -> Result<SchafferDilation> {
    let bcl = bcl_coefficients(tuple);
    let (e1, e2) = (&bcl.e1, &bcl.e2);
    let lambda_dt = &tuple.lambda * tuple.defect.coords();
    let m1 = mult_op(&PencilSymbol::new(e1.clone(), e2.adjoint()), n).to_dense();
    let m2 = mult_op(&PencilSymbol::new(e2.clone(), e1.adjoint()), n).to_dense();
    let v1 = lower_block(pair.t1(), &(e2.adjoint() * &lambda_dt), &m1);
    let v2 = lower_block(pair.t2(), &(e1.adjoint() * &lambda_dt), &m2);
    let v = &v1 * &v2;
    let pi_lambda = direct_sum(&crate::linalg::identity(pair.dim()), &kron_identity(n, &tuple.lambda));
    let vs = vs_from(pair.product(), &tuple.defect, n);
    Ok(SchafferDilation {
        n,
        h_dim: pair.dim(),
        f_dim: tuple.f_dim(),
        d_dim: tuple.defect.dim(),
        v1,
        v2,
        v,
        pi_lambda,
        vs,
    })
}

/// `Sᵢ = Π_Λᴴ Vᵢ Π_Λ`.
pub fn compress_to_s(dil: &SchafferDilation, _fund: &FundamentalPair, _n: usize) -> (CMat, CMat) {
    let ph = dil.pi_lambda.adjoint();
    (&ph * &dil.v1 * &dil.pi_lambda, &ph * &dil.v2 * &dil.pi_lambda)
}

/// `[[T₁,0],[F₂ᴴD_T, M_{F₁+zF₂ᴴ}]]` and its partner, assembled directly from `(F₁, F₂)`.
pub fn direct_s_pair(pair: &CommutingPair, dt: &DefectData, fund: &FundamentalPair, n: usize) -> (CMat, CMat) {
    let c = dt.coords();
    let (f1, f2) = (&fund.f1, &fund.f2);
    let phi = mult_op(&PencilSymbol::new(f1.clone(), f2.adjoint()), n).to_dense();
    let psi = mult_op(&PencilSymbol::new(f2.clone(), f1.adjoint()), n).to_dense();
    (lower_block(pair.t1(), &(f2.adjoint() * &c), &phi), lower_block(pair.t2(), &(f1.adjoint() * &c), &psi))
}

pub fn verify_schaffer(
    pair: &CommutingPair,
    tuple: &AndoTuple,
    dil: &SchafferDilation,
    fund: &FundamentalPair,
) -> Vec<Check> {
    let n = dil.n;
    let h = dil.h_dim;
    let dim = dil.space_dim();
    let interior = dil.interior();
    let j = unit_columns(dim, interior.clone());
    let e_h = unit_columns(dim, 0..h);

    let commutation = fro(&((&dil.v1 * &dil.v2 - &dil.v2 * &dil.v1) * &j));
    let dilation = |v: &CMat, t: &CMat| fro(&(v.adjoint() * &e_h - &e_h * t.adjoint()));
    // (2,1) block of V₁V₂ and of V₂V₁: ΛD_T in the constant coefficient, nothing above it
    let lambda_dt = &tuple.lambda * tuple.defect.coords();
    let mut expected_col = zeros(dim - h, h);
    expected_col.view_mut((0, 0), lambda_dt.shape()).copy_from(&lambda_dt);
    let v21 = &dil.v2 * &dil.v1;
    let block = |m: &CMat| fro(&(m.view((h, 0), (dim - h, h)) - &expected_col));
    let product_block = block(&dil.v).max(block(&v21));
    let product_top = fro(&(dil.v.view((0, 0), (h, h)) - pair.product()));

    let compression_vs = fro(&(dil.pi_lambda.adjoint() * &dil.v * &dil.pi_lambda - &dil.vs));
    let (s1, s2) = compress_to_s(dil, fund, n);
    let (d1, d2) = direct_s_pair(pair, &tuple.defect, fund, n);
    let s_assembly = fro(&(&s1 - d1)).max(fro(&(&s2 - d2)));
    let s_dim = s1.nrows();
    let e_hs = unit_columns(s_dim, 0..h);
    let vs_h = dil.vs.adjoint() * &e_hs;
    let part_s =
        fro(&(&vs_h - s1.adjoint() * s2.adjoint() * &e_hs)).max(fro(&(&vs_h - s2.adjoint() * s1.adjoint() * &e_hs)));
    let s_norm = op_norm(&s1).max(op_norm(&s2));
    let phi = pencil_sup_norm(&fund.f1, &fund.f2.adjoint(), PENCIL_GRID);
    let psi = pencil_sup_norm(&fund.f2, &fund.f1.adjoint(), PENCIL_GRID);
    let (fe1, fe2) = fund_eq_residuals(pair, &tuple.defect, &fund.f1, &fund.f2);
    let vs_iso = interior_isometry_residual(&dil.vs, 0..interior_rows(h, n, dil.d_dim).end);

    vec![
        Check::at_most("isometry_v1", interior_isometry_residual(&dil.v1, interior.clone()), 1e-8).with_degree(n),
        Check::at_most("isometry_v2", interior_isometry_residual(&dil.v2, interior), 1e-8).with_degree(n),
        Check::at_most("commutation", commutation, 1e-8).with_degree(n),
        Check::at_most("dilation_v1", dilation(&dil.v1, pair.t1()), 1e-12).with_degree(n),
        Check::at_most("dilation_v2", dilation(&dil.v2, pair.t2()), 1e-12).with_degree(n),
        Check::at_most("product_block", product_block.max(product_top), 1e-10).with_degree(n),
        Check::at_most("isometry_vs", vs_iso, 1e-10).with_degree(n),
        Check::at_most("compression_vs", compression_vs, 1e-10).with_degree(n),
        Check::at_most("s_assembly", s_assembly, 1e-10).with_degree(n),
        Check::at_most("s_contraction", s_norm, 1.0 + 1e-10).with_degree(n),
        Check::at_most("part_s_relations", part_s, 1e-10).with_degree(n),
        Check::at_most("pencil_norm_phi", phi, 1.0 + 1e-8),
        Check::at_most("pencil_norm_psi", psi, 1.0 + 1e-8),
        Check::at_most("fund_eq_1", fe1, 1e-10),
        Check::at_most("fund_eq_2", fe2, 1e-10),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ando::{build_ando_tuple, fundamental_ops};
    use crate::linalg::{c64, from_real_rows, identity, scalar};
    use crate::pairs::{random_pair, validate_pair, Scheme};

    fn all_pass(checks: &[Check]) {
        for c in checks {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn vs_examples() {
        let vs = build_vs(&scalar(0.0), 3).unwrap();
        let mut expect = zeros(4, 4);
        for i in 0..3 {
            expect[(i + 1, i)] = c64(1.0, 0.0);
        }
        assert_eq!(vs, expect);

        let u = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(build_vs(&u, 5).unwrap(), u);

        let n = 24;
        let vs = build_vs(&scalar(0.5), n).unwrap();
        assert!(interior_isometry_residual(&vs, 0..n) < 1e-14);
    }

    #[test]
    fn zero_scalars_by_hand() {
        let pair = validate_pair(&scalar(0.0), &scalar(0.0), 1e-10).unwrap();
        let tuple = build_ando_tuple(&pair).unwrap();
        let dil = build_schaffer_pair(&pair, &tuple, 4).unwrap();
        assert_eq!(dil.v1.shape(), (9, 9));
        // E₁ = E₂ = [[0,0],[1,0]], Λ = e₂, D_T = 1, so V₁ = V₂
        let mut v = zeros(9, 9);
        let one = c64(1.0, 0.0);
        // column H: E₂ᴴΛ = e₁
        v[(1, 0)] = one;
        for k in 0..4 {
            let r = 1 + 2 * k;
            // constant E₁ maps the first fiber slot to the second
            v[(r + 1, r)] = one;
            if k + 1 < 4 {
                // zE₂ᴴ maps the second slot to the first slot of the next coefficient
                v[(r + 2, r + 1)] = one;
            }
        }
        assert!(fro(&(&dil.v1 - &v)) < 1e-14);
        assert!(fro(&(&dil.v2 - &v)) < 1e-14);
        let vs = build_vs(&scalar(0.0), 4).unwrap();
        assert!(fro(&(dil.pi_lambda.adjoint() * &dil.v * &dil.pi_lambda - vs)) < 1e-15);
    }

    #[test]
    fn identity_factor() {
        let t2 = from_real_rows(&[&[0.3, 0.1], &[0.0, -0.4]]);
        let pair = validate_pair(&identity(2), &t2, 1e-10).unwrap();
        let tuple = build_ando_tuple(&pair).unwrap();
        let dil = build_schaffer_pair(&pair, &tuple, 6).unwrap();
        // V₁ = I ⊕ constant unitary symbol: with P = 0, E₁ = U = I and E₂ = 0
        assert!(fro(&(&dil.v1 - identity(dil.space_dim()))) < 1e-12);
        let vs = build_vs(&t2, 6).unwrap();
        let conj = dil.pi_lambda.adjoint() * &dil.v2 * &dil.pi_lambda;
        assert!(fro(&(conj - vs)) < 1e-12);
    }

    #[test]
    fn half_scalars_pencils() {
        let pair = validate_pair(&scalar(0.5), &scalar(0.5), 1e-10).unwrap();
        let tuple = build_ando_tuple(&pair).unwrap();
        let fund = fundamental_ops(&pair, &tuple);
        let phi = pencil_sup_norm(&fund.f1, &fund.f2.adjoint(), 256);
        assert!((phi - 0.8).abs() < 1e-12);
        let dil = build_schaffer_pair(&pair, &tuple, 12).unwrap();
        all_pass(&verify_schaffer(&pair, &tuple, &dil, &fund));
    }

    #[test]
    fn zero_pair_compresses_to_zero_pencils() {
        let pair = validate_pair(&scalar(0.0), &scalar(0.0), 1e-10).unwrap();
        let tuple = build_ando_tuple(&pair).unwrap();
        let fund = fundamental_ops(&pair, &tuple);
        let dil = build_schaffer_pair(&pair, &tuple, 5).unwrap();
        let (s1, s2) = compress_to_s(&dil, &fund, 5);
        assert!(fro(&s1) < 1e-14 && fro(&s2) < 1e-14);
    }

    #[test]
    fn seeded_batch_passes() {
        for seed in 0..40u64 {
            let pair = random_pair(1 + (seed as usize % 6), seed, Scheme::ALL[(seed / 6) as usize % 2]);
            let tuple = build_ando_tuple(&pair).unwrap();
            let fund = fundamental_ops(&pair, &tuple);
            let dil = build_schaffer_pair(&pair, &tuple, 12).unwrap();
            all_pass(&verify_schaffer(&pair, &tuple, &dil, &fund));
        }
    }
}
