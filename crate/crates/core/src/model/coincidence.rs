//! Coincidence of characteristic triples: verification against a supplied witness
//! `(u, u_*)`, and a best-effort search for one.

use serde::Serialize;

use super::charfn::{char_eval, interior_grid, CharTriple};
use crate::error::{Error, Result};
use crate::linalg::{identity, kron, op_norm, polar_parts, range_basis, unitarity_residual, unvec, vstack, CMat};
use crate::pairs::{gaussian_complex, rng_for, CommutingPair};

/// Witnesses further than this from unitary are rejected.
pub const WITNESS_TOL: f64 = 1e-8;
/// A searched witness counts as found below this residual.
pub const SEARCH_TOL: f64 = 1e-8;
pub const DEFAULT_ANGLES: usize = 16;

/// `max_z ‖Θ_b(z)u − u_*Θ_a(z)‖` over the interior grid, together with `max_i ‖u_*Gᵢ(a) − Gᵢ(b)u_*‖`.
pub fn check_coincidence(a: &CharTriple, b: &CharTriple, u: &CMat, u_star: &CMat, z_samples: usize) -> Result<f64> {
    let (da_s, da) = a.theta.shape();
    let (db_s, db) = b.theta.shape();
    if u.shape() != (db, da) || u_star.shape() != (db_s, da_s) {
        return Err(Error::ShapeMismatch(format!(
            "witness shapes {:?}, {:?} do not match defect dimensions ({db}, {da}), ({db_s}, {da_s})",
            u.shape(),
            u_star.shape()
        )));
    }
    let residual = unitarity_residual(u).max(unitarity_residual(u_star));
    if residual > WITNESS_TOL {
        return Err(Error::NonUnitaryInput { residual });
    }
    let mut worst: f64 = 0.0;
    for z in interior_grid(z_samples) {
        let ta = char_eval(&a.theta, z)?;
        let tb = char_eval(&b.theta, z)?;
        worst = worst.max(op_norm(&(tb * u - u_star * ta)));
    }
    worst = worst.max(op_norm(&(u_star * &a.g1 - &b.g1 * u_star)));
    worst = worst.max(op_norm(&(u_star * &a.g2 - &b.g2 * u_star)));
    Ok(worst)
}

/// The witness induced by `ω` when `b` is the characteristic triple of `ωTᵢωᴴ`:
/// `ω` restricted to the defect spaces, in each side's defect coordinates.
pub fn conjugation_witness(a: &CharTriple, b: &CharTriple, omega: &CMat) -> (CMat, CMat) {
    let u = b.theta.defect.basis.basis().adjoint() * omega * a.theta.defect.basis.basis();
    let u_star = b.theta.defect_adj.basis.basis().adjoint() * omega * a.theta.defect_adj.basis.basis();
    (u, u_star)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found {
        #[serde(skip)]
        u: CMat,
        #[serde(skip)]
        u_star: CMat,
        residual: f64,
    },
    /// Nothing was found. This is not a proof that the triples fail to coincide.
    NotFound { reason: String },
}

impl SearchOutcome {
    pub fn found(&self) -> bool {
        matches!(self, SearchOutcome::Found { .. })
    }
}

/// Search for `(u, u_*)`: solve the linear intertwining system on Taylor coefficients of `Θ`
/// and on the `G`s, take a seeded generic element of its solution space, move it to the
/// nearest unitaries, and verify.
pub fn search_coincidence(a: &CharTriple, b: &CharTriple, seed: u64) -> SearchOutcome {
    let (ds, d) = a.theta.shape();
    if b.theta.shape() != (ds, d) {
        return SearchOutcome::NotFound { reason: "defect dimensions differ".into() };
    }
    let count = 2 * a.theta.t.nrows().max(b.theta.t.nrows()) + 2;
    let (ca, cb) = (a.theta.taylor(count), b.theta.taylor(count));
    let (id, ids) = (identity(d), identity(ds));
    // unknowns: vec(u) (d², column-major) then vec(u_*) (ds²)
    let mut rows: Vec<CMat> = Vec::new();
    for (ta, tb) in ca.iter().zip(&cb) {
        // Θ_b u − u_* Θ_a = 0
        let left = kron(&id, tb);
        let right = -kron(&ta.transpose(), &ids);
        rows.push(crate::linalg::hstack(&[&left, &right]));
    }
    for (ga, gb) in [(&a.g1, &b.g1), (&a.g2, &b.g2)] {
        // u_* G(a) − G(b) u_* = 0
        let right = kron(&ga.transpose(), &ids) - kron(&ids, gb);
        rows.push(crate::linalg::hstack(&[&CMat::zeros(ds * ds, d * d), &right]));
    }
    let refs: Vec<&CMat> = rows.iter().collect();
    let system = vstack(&refs);
    let null = range_basis(&system.adjoint(), 1e-9).complement();
    if null.dim() == 0 {
        return SearchOutcome::NotFound { reason: "the intertwining system has only the zero solution".into() };
    }
    let mut rng = rng_for(seed, 0xc01c);
    let coeffs = CMat::from_fn(null.dim(), 1, |_, _| gaussian_complex(&mut rng));
    let x = null.basis() * coeffs;
    let flat: Vec<_> = x.iter().copied().collect();
    let u = polar_parts(&unvec(&flat[..d * d], d, d)).0;
    let u_star = polar_parts(&unvec(&flat[d * d..], ds, ds)).0;
    match check_coincidence(a, b, &u, &u_star, DEFAULT_ANGLES) {
        Ok(r) if r <= SEARCH_TOL => SearchOutcome::Found { u, u_star, residual: r },
        Ok(r) => SearchOutcome::NotFound { reason: format!("best candidate leaves residual {r:.3e}") },
        Err(e) => SearchOutcome::NotFound { reason: format!("candidate rejected: {e}") },
    }
}

/// A seeded unitary conjugate of `pair` and the conjugating unitary.
pub fn conjugated(pair: &CommutingPair, seed: u64) -> Result<(CommutingPair, CMat)> {
    let omega = crate::pairs::random_unitary(pair.dim(), &mut rng_for(seed, 0x0e9a));
    Ok((pair.conjugate(&omega)?, omega))
}
