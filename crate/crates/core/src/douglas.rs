//! The Douglas-model Andô dilation on `H²_N(F*) ⊕ R`, with `F* = D_{T₁*} ⊕ D_{T₂*}` and
//! `R = Ran Q`, built from the Andô tuple `(Γ, P′, U′)` of the adjoint pair.
//!
//! Block layout: `N` coefficient blocks of the Hardy part first, then `R` in the
//! coordinates of `Q`'s range basis. On `R` the unitary extensions `Wᵢ` are the `Xᵢ`
//! themselves, since `Ran Q` is finite-dimensional.

use crate::ando::{bcl_identity_residual, build_ando_tuple, fund_eq_residuals, AndoTuple};
use crate::error::{Error, Result};
use crate::hardy::{fiberwise, mult_op, select_columns, shift, HardySum, Layout, LinearOperator, PencilSymbol};
use crate::linalg::{fro, identity, op_norm, pinv, polar_parts, unitarity_residual, vstack, zeros, CMat, RANK_TOL};
use crate::pairs::{asymptotic_limit, defect_adjoint, AsymptoticData, CommutingPair, DefectData};
use crate::report::Check;

/// Target for `‖T^N T*^N − Q²‖` before a degree bound is accepted.
pub const DOUGLAS_TAIL_TOL: f64 = 1e-10;
/// Largest degree bound the adaptive search will try.
pub const MAX_DEGREE: usize = 256;
/// Successive-iterate tolerance for the asymptotic limit.
pub const LIMIT_TOL: f64 = 1e-12;
pub const LIMIT_MAX_ITER: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct DouglasData {
    pub asym: AsymptoticData,
    /// `X₁, X₂, X` on `R`, in `q_basis` coordinates.
    pub x1: CMat,
    pub x2: CMat,
    pub x: CMat,
    /// Largest unitarity residual of the raw least-squares solutions (before any polar repair).
    pub x_raw_residual: f64,
    pub adjoint_tuple: AndoTuple,
    pub h1: CMat,
    pub h2: CMat,
    pub g1: CMat,
    pub g2: CMat,
}

impl DouglasData {
    /// `Γ : D_{T*} → F*`.
    pub fn gamma(&self) -> &CMat {
        &self.adjoint_tuple.lambda
    }

    pub fn defect_adj(&self) -> &DefectData {
        &self.adjoint_tuple.defect
    }

    pub fn r_dim(&self) -> usize {
        self.asym.rank()
    }

    /// `BᴴQ`: `h ↦ Qh` in `R` coordinates.
    pub fn q_coords(&self) -> CMat {
        self.asym.q_basis.basis().adjoint() * &self.asym.q
    }

    /// `Q²` as the square of the stored root, so bookkeeping identities close exactly.
    pub fn q_squared(&self) -> CMat {
        &self.asym.q * &self.asym.q
    }
}

/// Coordinates of `X` on `R` from `XᴴQ = QSᴴ`: `Xᴴ = BᴴQSᴴB·(BᴴQB)⁻¹`.
fn solve_x(q: &CMat, b: &CMat, qr_inv: &CMat, s: &CMat) -> CMat {
    (b.adjoint() * q * s.adjoint() * b * qr_inv).adjoint()
}

pub fn build_douglas_data(pair: &CommutingPair) -> Result<DouglasData> {
    let asym = asymptotic_limit(pair.product(), LIMIT_TOL, LIMIT_MAX_ITER)?;
    let b = asym.q_basis.basis();
    let qr = b.adjoint() * &asym.q * b;
    let qr_inv = qr.clone().try_inverse().unwrap_or_else(|| pinv(&qr, RANK_TOL));
    let mut xs = [pair.t1(), pair.t2(), pair.product()].map(|s| solve_x(&asym.q, b, &qr_inv, s));
    let mut x_raw_residual: f64 = 0.0;
    for x in xs.iter_mut() {
        let r = unitarity_residual(x);
        x_raw_residual = x_raw_residual.max(r);
        if r > 1e-8 {
            return Err(Error::NonUnitaryX { residual: r });
        }
        if r > 1e-10 {
            *x = polar_parts(x).0;
        }
    }
    let [x1, x2, x] = xs;

    let adjoint_tuple = build_ando_tuple(&pair.adjoint())?;
    let h1 = adjoint_tuple.p_perp() * &adjoint_tuple.u;
    let h2 = adjoint_tuple.u.adjoint() * &adjoint_tuple.p;
    let gh = adjoint_tuple.lambda.adjoint();
    let g1 = &gh * &h1 * &adjoint_tuple.lambda;
    let g2 = &gh * &h2 * &adjoint_tuple.lambda;
    Ok(DouglasData { asym, x1, x2, x, x_raw_residual, adjoint_tuple, h1, h2, g1, g2 })
}

/// Rows `c·T*ᵏ`, `k = 0..n−1`, stacked.
pub fn power_rows(c: &CMat, t: &CMat, n: usize) -> CMat {
    let th = t.adjoint();
    let mut out = zeros(n * c.nrows(), c.ncols());
    let mut row = c.clone();
    for k in 0..n {
        out.rows_mut(k * c.nrows(), c.nrows()).copy_from(&row);
        row = &row * &th;
    }
    out
}

/// `h ↦ Σ zᵏ ΓD_{T*}T*ᵏh`, truncated to `n` coefficients, in `F*` coordinates.
/// Pass `Γ = I` for the observability operator itself.
pub fn observability(t: &CMat, gamma: &CMat, n: usize) -> Result<CMat> {
    let ds = defect_adjoint(t)?;
    Ok(fiberwise(gamma, &power_rows(&ds.coords(), t, n), n))
}

/// `Π_D h = O(h) ⊕ Qh` at degree `n`.
pub fn pi_d(pair: &CommutingPair, data: &DouglasData, n: usize) -> CMat {
    let o = power_rows(&data.defect_adj().coords(), pair.product(), n);
    vstack(&[&o, &data.q_coords()])
}

/// `Π̃ = Π_Γ Π_D` at degree `n`.
pub fn pi_tilde(pair: &CommutingPair, data: &DouglasData, n: usize) -> CMat {
    let o = power_rows(&(data.gamma() * data.defect_adj().coords()), pair.product(), n);
    vstack(&[&o, &data.q_coords()])
}

/// `T^N T*^N − Q²`.
pub fn tail_operator(t: &CMat, q_squared: &CMat, n: usize) -> CMat {
    let mut p = identity(t.nrows());
    for _ in 0..n {
        p = &p * t;
    }
    &p * p.adjoint() - q_squared
}

/// Smallest degree in the doubling sequence from `start` whose Douglas tail is below tolerance.
pub fn douglas_degree(pair: &CommutingPair, data: &DouglasData, start: usize) -> Result<usize> {
    let q2 = data.q_squared();
    let mut n = start.max(2);
    loop {
        let tail = op_norm(&tail_operator(pair.product(), &q2, n));
        if tail <= DOUGLAS_TAIL_TOL {
            return Ok(n);
        }
        if n >= MAX_DEGREE {
            return Err(Error::TailNotConverged { degree: n, tail, tol: DOUGLAS_TAIL_TOL });
        }
        n = (2 * n).min(MAX_DEGREE);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DouglasDilation {
    pub n: usize,
    pub h_dim: usize,
    /// `dim F*`.
    pub f_dim: usize,
    /// `dim D_{T*}`.
    pub d_dim: usize,
    pub r_dim: usize,
    /// `M_{H₁ᴴ+zH₂} ⊕ W₁` and `M_{H₂ᴴ+zH₁} ⊕ W₂` on `H²_N(F*) ⊕ R`.
    pub v1d: HardySum,
    pub v2d: HardySum,
    /// `Γ`; `Π_Γ = (I ⊗ Γ) ⊕ I_R` is applied blockwise rather than stored.
    pub gamma: CMat,
    pub pi_d: CMat,
    pub pi_tilde: CMat,
    /// The compressed triple `(M_{G₁ᴴ+zG₂} ⊕ W₁, M_{G₂ᴴ+zG₁} ⊕ W₂, M_z ⊕ W)` on `H²_N(D_{T*}) ⊕ R`.
    pub d1: HardySum,
    pub d2: HardySum,
    pub vd: HardySum,
}

impl DouglasDilation {
    pub fn layout(&self) -> Layout {
        Layout { head: 0, n: self.n, fiber: self.f_dim, tail: self.r_dim }
    }

    pub fn compressed_layout(&self) -> Layout {
        Layout { head: 0, n: self.n, fiber: self.d_dim, tail: self.r_dim }
    }

    /// `Π_Γ x` for `x ∈ H²_N(D_{T*}) ⊕ R`.
    pub fn pi_gamma_apply(&self, x: &CMat) -> CMat {
        let k = self.n * self.d_dim;
        let top = fiberwise(&self.gamma, &x.rows(0, k).into_owned(), self.n);
        vstack(&[&top, &x.rows(k, self.r_dim).into_owned()])
    }

    /// `Π_Γᴴ y` for `y ∈ H²_N(F*) ⊕ R`.
    pub fn pi_gamma_adjoint_apply(&self, y: &CMat) -> CMat {
        let k = self.n * self.f_dim;
        let top = fiberwise(&self.gamma.adjoint(), &y.rows(0, k).into_owned(), self.n);
        vstack(&[&top, &y.rows(k, self.r_dim).into_owned()])
    }
}

fn pencil(a: CMat, b: CMat, n: usize) -> crate::hardy::HardyOp {
    mult_op(&PencilSymbol::new(a, b), n)
}

fn factor_ops(data: &DouglasData, n: usize) -> (HardySum, HardySum) {
    let (h1, h2) = (&data.h1, &data.h2);
    (
        HardySum::new(pencil(h1.adjoint(), h2.clone(), n), data.x1.clone()),
        HardySum::new(pencil(h2.adjoint(), h1.clone(), n), data.x2.clone()),
    )
}

/// Assemble the dilation at degree `n`. `n` must already satisfy the tail criterion.
pub fn build_douglas_pair(pair: &CommutingPair, data: &DouglasData, n: usize) -> Result<DouglasDilation> {
    let tail = op_norm(&tail_operator(pair.product(), &data.q_squared(), n));
    if tail > DOUGLAS_TAIL_TOL {
        return Err(Error::TailNotConverged { degree: n, tail, tol: DOUGLAS_TAIL_TOL });
    }
    let (v1d, v2d) = factor_ops(data, n);
    let (g1, g2) = (&data.g1, &data.g2);
    let d_dim = data.defect_adj().dim();
    Ok(DouglasDilation {
        n,
        h_dim: pair.dim(),
        f_dim: data.adjoint_tuple.f_dim(),
        d_dim,
        r_dim: data.r_dim(),
        v1d,
        v2d,
        gamma: data.gamma().clone(),
        pi_d: pi_d(pair, data, n),
        pi_tilde: pi_tilde(pair, data, n),
        d1: HardySum::new(pencil(g1.adjoint(), g2.clone(), n), data.x1.clone()),
        d2: HardySum::new(pencil(g2.adjoint(), g1.clone(), n), data.x2.clone()),
        vd: HardySum::new(shift(n, d_dim), data.x.clone()),
    })
}

/// Residuals of `ΓD_{T*}T₁ᴴ = H₁ΓD_{T*} + H₂ᴴΓD_{T*}Tᴴ` and of the same with the indices swapped.
pub fn row_recursion_residuals(pair: &CommutingPair, data: &DouglasData) -> (f64, f64) {
    row_recursion_with(pair, data, &data.h1, &data.h2)
}

fn row_recursion_with(pair: &CommutingPair, data: &DouglasData, h1: &CMat, h2: &CMat) -> (f64, f64) {
    let a = data.gamma() * data.defect_adj().coords();
    let th = pair.product().adjoint();
    let r1 = op_norm(&(&a * pair.t1().adjoint() - h1 * &a - h2.adjoint() * &a * &th));
    let r2 = op_norm(&(&a * pair.t2().adjoint() - h2 * &a - h1.adjoint() * &a * &th));
    (r1, r2)
}

/// Checks on the Douglas data alone.
pub fn verify_douglas_data(pair: &CommutingPair, data: &DouglasData) -> Vec<Check> {
    let b = data.asym.q_basis.basis();
    let q = &data.asym.q;
    let relation = |x: &CMat, t: &CMat| fro(&(b * x.adjoint() * b.adjoint() * q - q * t.adjoint()));
    let x_relation =
        relation(&data.x1, pair.t1()).max(relation(&data.x2, pair.t2())).max(relation(&data.x, pair.product()));
    let x_unitarity = unitarity_residual(&data.x1).max(unitarity_residual(&data.x2)).max(unitarity_residual(&data.x));
    let (r1, r2) = row_recursion_residuals(pair, data);
    let (g1, g2) = fund_eq_residuals(&pair.adjoint(), data.defect_adj(), &data.g1, &data.g2);
    vec![
        Check::at_most("x_relation", x_relation, 1e-9),
        Check::at_most("x_unitarity", x_unitarity, 1e-9),
        Check::at_most("x_factorization", fro(&(&data.x1 * &data.x2 - &data.x)), 1e-9),
        Check::at_most("h_bcl_identities", bcl_identity_residual(&data.h1, &data.h2), 1e-10),
        Check::at_most("row_recursion_1", r1, 1e-10),
        Check::at_most("row_recursion_2", r2, 1e-10),
        Check::at_most("g_fund_eq_1", g1, 1e-10),
        Check::at_most("g_fund_eq_2", g2, 1e-10),
    ]
}

/// `Vᵢᴰᴴ Π̃ − Π̃ Tᵢᴴ`, computed with one extra coefficient so the comparison on the first
/// `N` coefficients is exact.
pub fn intertwining_residuals(pair: &CommutingPair, data: &DouglasData, n: usize) -> (f64, f64) {
    let big = pi_tilde(pair, data, n + 1);
    let small = pi_tilde(pair, data, n);
    let f = data.adjoint_tuple.f_dim();
    let r = data.r_dim();
    let keep: Vec<usize> = (0..n * f).chain((n + 1) * f..(n + 1) * f + r).collect();
    let (v1, v2) = factor_ops(data, n + 1);
    let res = |v: &HardySum, t: &CMat| fro(&(v.apply_adjoint(&big).select_rows(keep.iter()) - &small * t.adjoint()));
    (res(&v1, pair.t1()), res(&v2, pair.t2()))
}

/// `Π_Γᴴ V₁ᴰV₂ᴰ Π_Γ − (M_z ⊕ W)`.
pub fn nf_min_residual(dil: &DouglasDilation) -> f64 {
    let dim = dil.n * dil.d_dim + dil.r_dim;
    // the Hardy part is block Toeplitz, so two coefficient columns and R already see every entry;
    // for small spaces probe everything
    let probe = if dim <= 400 {
        identity(dim)
    } else {
        let k = 2.min(dil.n) * dil.d_dim;
        let cols: Vec<usize> = (0..k).chain(dil.n * dil.d_dim..dim).collect();
        select_columns(dim, &cols)
    };
    let lhs = dil.pi_gamma_adjoint_apply(&dil.v1d.apply(&dil.v2d.apply(&dil.pi_gamma_apply(&probe))));
    fro(&(lhs - dil.vd.apply(&probe)))
}

/// `Π_DᴴΠ_D − (I − (T^N T*^N − Q²))`: the exact bookkeeping of the truncated series.
pub fn pi_d_bookkeeping_residual(pair: &CommutingPair, data: &DouglasData, dil: &DouglasDilation) -> f64 {
    let tail = tail_operator(pair.product(), &data.q_squared(), dil.n);
    let gram = dil.pi_d.adjoint() * &dil.pi_d;
    fro(&(gram - (identity(pair.dim()) - tail)))
}

pub fn verify_douglas(pair: &CommutingPair, data: &DouglasData, dil: &DouglasDilation) -> Vec<Check> {
    let n = dil.n;
    let mut checks = verify_douglas_data(pair, data);
    let (i1, i2) = intertwining_residuals(pair, data, n);
    let tilde_vs_d = fro(&(dil.pi_tilde.adjoint() * &dil.pi_tilde - dil.pi_d.adjoint() * &dil.pi_d));
    checks.extend([
        Check::at_most("pi_d_isometry_deficit", pi_d_bookkeeping_residual(pair, data, dil), 1e-12).with_degree(n),
        Check::at_most("pi_tilde_gram", tilde_vs_d, 1e-12).with_degree(n),
        Check::at_most("intertwine_v1", i1, 1e-9).with_degree(n),
        Check::at_most("intertwine_v2", i2, 1e-9).with_degree(n),
        Check::at_most("nf_min", nf_min_residual(dil), 1e-10).with_degree(n),
    ]);
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, direct_sum, from_real_rows, scalar};
    use crate::pairs::{random_pair, random_pure_pair, random_unitary, rng_for, validate_pair, Scheme};

    fn all_pass(checks: &[Check]) {
        for c in checks {
            assert!(c.passed, "{}", c.line());
        }
    }

    fn build(pair: &CommutingPair) -> (DouglasData, DouglasDilation) {
        let data = build_douglas_data(pair).unwrap();
        let n = douglas_degree(pair, &data, 16).unwrap();
        let dil = build_douglas_pair(pair, &data, n).unwrap();
        (data, dil)
    }

    #[test]
    fn nilpotent_pair_lives_on_the_hardy_part() {
        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pair = validate_pair(&j, &j, 1e-10).unwrap();
        let (data, dil) = build(&pair);
        assert_eq!(data.r_dim(), 0);
        assert_eq!(dil.n, 16);
        all_pass(&verify_douglas(&pair, &data, &dil));
        // V₁ᴰV₂ᴰ is the shift on the interior
        let l = dil.layout();
        let j = l.interior_columns();
        let prod = dil.v1d.apply(&dil.v2d.apply(&j));
        let s = shift(dil.n, dil.f_dim).apply(&j);
        assert!(fro(&(prod - s)) < 1e-12);
    }

    #[test]
    fn commuting_unitaries_have_no_hardy_part() {
        let u = random_unitary(3, &mut rng_for(4, 0));
        let v = &u * &u;
        let pair = validate_pair(&u, &v, 1e-10).unwrap();
        let (data, dil) = build(&pair);
        assert_eq!((dil.f_dim, dil.d_dim, dil.r_dim), (0, 0, 3));
        // Q = I, so X is T itself (up to the phase-normalized basis of R)
        let b = data.asym.q_basis.basis();
        assert!(fro(&(b * &data.x1 * b.adjoint() - &u)) < 1e-10);
        assert!(fro(&(b * &data.x * b.adjoint() - &u * &v)) < 1e-10);
        all_pass(&verify_douglas(&pair, &data, &dil));
    }

    #[test]
    fn half_scalars() {
        let pair = validate_pair(&scalar(0.5), &scalar(0.5), 1e-10).unwrap();
        let (data, dil) = build(&pair);
        assert_eq!(data.r_dim(), 0);
        assert!((data.g1[(0, 0)] - c64(0.4, 0.0)).norm() < 1e-12);
        assert!((data.g2[(0, 0)] - c64(0.4, 0.0)).norm() < 1e-12);
        all_pass(&verify_douglas(&pair, &data, &dil));
    }

    #[test]
    fn observability_examples() {
        let o = observability(&scalar(0.0), &scalar(1.0), 4).unwrap();
        assert!(fro(&(o - from_real_rows(&[&[1.0], &[0.0], &[0.0], &[0.0]]))) < 1e-15);

        let n = 10;
        let o = observability(&scalar(0.25), &scalar(1.0), n).unwrap();
        for k in 0..n {
            assert!((o[(k, 0)].re - 0.9682458365518543 * 0.25f64.powi(k as i32)).abs() < 1e-15);
        }
        let sq = o.column(0).norm_squared();
        assert!((sq - (1.0 - 0.0625f64.powi(n as i32))).abs() < 1e-15);

        let u = random_unitary(2, &mut rng_for(1, 1));
        assert_eq!(observability(&u, &zeros(0, 0), 5).unwrap().shape(), (0, 2));
    }

    #[test]
    fn perturbed_h1_breaks_the_row_recursion() {
        let pair = random_pair(3, 21, Scheme::PolyInOneMatrix);
        let data = build_douglas_data(&pair).unwrap();
        let (r1, r2) = row_recursion_residuals(&pair, &data);
        assert!(r1 <= 1e-10 && r2 <= 1e-10);
        let f = data.adjoint_tuple.f_dim();
        let bumped = &data.h1 + identity(f) * c64(0.1, 0.0);
        let (r1, _) = row_recursion_with(&pair, &data, &bumped, &data.h2);
        let a = data.gamma() * data.defect_adj().coords();
        let smin = a.singular_values().min();
        assert!(r1 >= 0.1 * smin - 1e-10 && r1 > 0.0);
    }

    #[test]
    fn isometric_part_carries_over_to_x() {
        let pure = random_pure_pair(2, 5, Scheme::PolyInOneMatrix, 0.8);
        let u = random_unitary(2, &mut rng_for(5, 2));
        let pair = validate_pair(&direct_sum(pure.t1(), &u), &direct_sum(pure.t2(), &u.adjoint()), 1e-10).unwrap();
        let (data, dil) = build(&pair);
        assert_eq!(data.r_dim(), 2);
        let b = data.asym.q_basis.basis();
        // R is the unitary summand, and X₁, X₂ are the unitary blocks there
        let embed = direct_sum(&zeros(2, 2), &identity(2));
        assert!(fro(&(b * b.adjoint() - &embed)) < 1e-9);
        assert!(fro(&(b * &data.x1 * b.adjoint() - direct_sum(&zeros(2, 2), &u))) < 1e-9);
        all_pass(&verify_douglas(&pair, &data, &dil));
    }

    #[test]
    fn seeded_batch_passes() {
        for seed in 0..40u64 {
            let pair = random_pair(1 + (seed as usize % 6), seed, Scheme::ALL[(seed / 6) as usize % 2]);
            let (data, dil) = build(&pair);
            all_pass(&verify_douglas(&pair, &data, &dil));
        }
    }
}
