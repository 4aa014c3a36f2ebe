//! The Andô tuple `(F, Λ, P, U)` of a commuting contraction pair, its BCL coefficients
//! `E₁ = P⊥U`, `E₂ = UᴴP`, and the fundamental operators `F₁`, `F₂`.
//!
//! All operators on `F = D_{T₁} ⊕ D_{T₂}` are written in the concatenated defect bases;
//! operators on `D_T` in the defect basis of `T = T₁T₂`.

use crate::error::{Error, Result};
use crate::linalg::{
    direct_sum, fro, identity, isometry_residual, numerical_radius, op_norm, polar_parts, thin_svd, unitarity_residual,
    unitary_completion_with, vstack, zeros, CMat, SubspaceBasis,
};
use crate::pairs::{defect, CommutingPair, DefectData};

/// θ-grid used for numerical radii of the fundamental operators.
pub const RADIUS_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct AndoTuple {
    pub d1_dim: usize,
    pub d2_dim: usize,
    /// `Λ : D_T → F`, `f_dim × dim D_T`.
    pub lambda: CMat,
    /// `UΛ`, the image isometry `D_T h ↦ D_{T₁}h ⊕ D_{T₂}T₁h`.
    pub lambda_image: CMat,
    pub p: CMat,
    pub u: CMat,
    pub defect: DefectData,
    pub defect1: DefectData,
    pub defect2: DefectData,
}

impl AndoTuple {
    pub fn f_dim(&self) -> usize {
        self.d1_dim + self.d2_dim
    }

    /// `P⊥ = I − P`.
    pub fn p_perp(&self) -> CMat {
        identity(self.f_dim()) - &self.p
    }

    /// `h ↦ D_{T₁}T₂h ⊕ D_{T₂}h` in `F` coordinates.
    pub fn source_map(&self, pair: &CommutingPair) -> CMat {
        vstack(&[&(self.defect1.coords() * pair.t2()), &self.defect2.coords()])
    }

    /// `h ↦ D_{T₁}h ⊕ D_{T₂}T₁h` in `F` coordinates.
    pub fn target_map(&self, pair: &CommutingPair) -> CMat {
        vstack(&[&self.defect1.coords(), &(self.defect2.coords() * pair.t1())])
    }
}

pub fn build_ando_tuple(pair: &CommutingPair) -> Result<AndoTuple> {
    build_ando_tuple_with(pair, None)
}

/// Andô tuple with an explicit unitary between the complements of `Ran Λ` and `Ran UΛ`.
/// `None` selects the canonical completion.
pub fn build_ando_tuple_with(pair: &CommutingPair, complement_map: Option<&CMat>) -> Result<AndoTuple> {
    let defect_t = defect(pair.product())?;
    let defect1 = defect(pair.t1())?;
    let defect2 = defect(pair.t2())?;
    let (d1_dim, d2_dim) = (defect1.dim(), defect2.dim());
    let b = defect_t.basis.basis();

    let source = vstack(&[&(defect1.coords() * pair.t2()), &defect2.coords()]);
    let target = vstack(&[&defect1.coords(), &(defect2.coords() * pair.t1())]);
    // Both maps have Gram matrix D_T², so their polar factors on the defect basis are isometries.
    let (lambda, _) = polar_parts(&(source * b));
    let (lambda_image, _) = polar_parts(&(target * b));
    let d = defect_t.dim();
    for (name, m) in [("Λ", &lambda), ("UΛ", &lambda_image)] {
        let r = isometry_residual(m);
        if r > 1e-8 {
            return Err(Error::Degenerate(format!("{name} is not isometric on D_T (residual {r:.3e})")));
        }
    }
    assert!(d <= d1_dim + d2_dim, "dim D_T exceeds dim F; the defect identities are violated");

    let dom = SubspaceBasis::from_orthonormal(lambda.clone());
    let ran = SubspaceBasis::from_orthonormal(lambda_image.clone());
    let u = unitary_completion_with(&identity(d), &dom, &ran, complement_map)?;
    let p = direct_sum(&identity(d1_dim), &zeros(d2_dim, d2_dim));
    Ok(AndoTuple { d1_dim, d2_dim, lambda, lambda_image, p, u, defect: defect_t, defect1, defect2 })
}

/// Residuals of the tuple laws: Λ isometric, P projection, U unitary, both defining actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleResiduals {
    pub lambda_isometry: f64,
    pub projection: f64,
    pub unitarity: f64,
    pub lambda_action: f64,
    pub u_action: f64,
}

impl TupleResiduals {
    pub fn max(&self) -> f64 {
        [self.lambda_isometry, self.projection, self.unitarity, self.lambda_action, self.u_action]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn tuple_residuals(pair: &CommutingPair, tuple: &AndoTuple) -> TupleResiduals {
    let p = &tuple.p;
    let projection = fro(&(p * p - p)).max(fro(&(p - p.adjoint())));
    // Λ D_T h in F coordinates: Λ · (BᴴD_T) h
    let lambda_dt = &tuple.lambda * tuple.defect.coords();
    TupleResiduals {
        lambda_isometry: isometry_residual(&tuple.lambda),
        projection,
        unitarity: unitarity_residual(&tuple.u),
        lambda_action: fro(&(&lambda_dt - tuple.source_map(pair))),
        u_action: fro(&(&tuple.u * &lambda_dt - tuple.target_map(pair))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BclPair {
    pub e1: CMat,
    pub e2: CMat,
}

impl BclPair {
    /// Max over `E₁E₂`, `E₂E₁`, `E₁E₁ᴴ + E₂ᴴE₂ − I`, `E₁ᴴE₁ + E₂E₂ᴴ − I`.
    pub fn identity_residual(&self) -> f64 {
        bcl_identity_residual(&self.e1, &self.e2)
    }
}

pub fn bcl_identity_residual(e1: &CMat, e2: &CMat) -> f64 {
    let n = e1.nrows();
    let i = identity(n);
    [
        fro(&(e1 * e2)),
        fro(&(e2 * e1)),
        fro(&(e1 * e1.adjoint() + e2.adjoint() * e2 - &i)),
        fro(&(e1.adjoint() * e1 + e2 * e2.adjoint() - &i)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn bcl_coefficients(tuple: &AndoTuple) -> BclPair {
    bcl_from_projection(&tuple.p, &tuple.u)
}

/// `(P⊥U, UᴴP)` for any projection `P` and unitary `U`.
pub fn bcl_from_projection(p: &CMat, u: &CMat) -> BclPair {
    let p_perp = identity(p.nrows()) - p;
    BclPair { e1: p_perp * u, e2: u.adjoint() * p }
}

/// Recover `(P, U)` from BCL coefficients: `P⊥ = E₁E₁ᴴ`, and `Uᴴ` glued from the polar
/// isometries of `E₁ᴴ` (on `Ran E₁`) and `E₂` (on `Ran E₂ᴴ`).
pub fn bcl_from_coefficients(e1: &CMat, e2: &CMat, tol: f64) -> Result<(CMat, CMat)> {
    if !e1.is_square() || e1.shape() != e2.shape() {
        return Err(Error::ShapeMismatch(format!("coefficients have shapes {:?}, {:?}", e1.shape(), e2.shape())));
    }
    let residual = bcl_identity_residual(e1, e2);
    if residual > tol {
        return Err(Error::IdentityViolation { residual });
    }
    let n = e1.nrows();
    let p_perp = e1 * e1.adjoint();
    let p = identity(n) - &p_perp;
    // both coefficients are partial isometries, so only singular values near 1 are real
    let partial = |m: &CMat| {
        let (a, _, b) = thin_svd(m, 0.5);
        a * b.adjoint()
    };
    let u = (partial(&e1.adjoint()) + partial(e2)).adjoint();
    Ok((p, u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPair {
    pub f1: CMat,
    pub f2: CMat,
    pub radii: [f64; 2],
}

/// `F₁ = ΛᴴP⊥UΛ`, `F₂ = ΛᴴUᴴPΛ` on the defect basis of `T`.
pub fn fundamental_ops(_pair: &CommutingPair, tuple: &AndoTuple) -> FundamentalPair {
    let bcl = bcl_coefficients(tuple);
    let lh = tuple.lambda.adjoint();
    let f1 = &lh * &bcl.e1 * &tuple.lambda;
    let f2 = &lh * &bcl.e2 * &tuple.lambda;
    let radii = [numerical_radius(&f1, RADIUS_GRID), numerical_radius(&f2, RADIUS_GRID)];
    FundamentalPair { f1, f2, radii }
}

/// `(‖T₁ − T₂ᴴT − D_TF₁D_T‖, ‖T₂ − T₁ᴴT − D_TF₂D_T‖)` with `F₁, F₂` on the defect basis.
pub fn verify_fund_eqs(pair: &CommutingPair, f1: &CMat, f2: &CMat) -> Result<(f64, f64)> {
    let dt = defect(pair.product())?;
    Ok(fund_eq_residuals(pair, &dt, f1, f2))
}

pub fn fund_eq_residuals(pair: &CommutingPair, dt: &DefectData, f1: &CMat, f2: &CMat) -> (f64, f64) {
    let c = dt.coords();
    let ch = c.adjoint();
    let t = pair.product();
    let r1 = op_norm(&(pair.t1() - pair.t2().adjoint() * t - &ch * f1 * &c));
    let r2 = op_norm(&(pair.t2() - pair.t1().adjoint() * t - &ch * f2 * &c));
    (r1, r2)
}

/// Least-squares solution of `D_TXD_T = rhs` on the defect basis; used to check uniqueness
/// of the fundamental operators.
pub fn solve_fund_eq(dt: &DefectData, rhs: &CMat) -> CMat {
    let dinv = dt.d_in_basis.clone().try_inverse().unwrap_or_else(|| zeros(dt.dim(), dt.dim()));
    let b = dt.basis.basis();
    &dinv * b.adjoint() * rhs * b * &dinv
}
