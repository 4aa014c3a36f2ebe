//! Commuting contraction pairs: validation, seeded generation, defect operators and
//! the asymptotic limit `Q² = lim TⁿT*ⁿ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, fro, hermitian_part, identity, op_norm, psd_sqrt_with, range_basis, zeros, CMat, SubspaceBasis, C64, RANK_TOL,
};

/// Contraction slack accepted on input matrices.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Eigenvalues of `I − TᴴT` at or below this are treated as exact zeros.
pub const DEFECT_ZERO_TOL: f64 = 1e-13;
/// Eigenvalues of the limit `Q²` at or below this are treated as exact zeros.
pub const LIMIT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CommutingPair {
    t1: CMat,
    t2: CMat,
    t: CMat,
    pub commutator_residual: f64,
    /// `1 − max(‖T₁‖, ‖T₂‖)`; slightly negative values are tolerated rounding.
    pub contraction_slack: f64,
}

impl CommutingPair {
    pub fn t1(&self) -> &CMat {
        &self.t1
    }

    pub fn t2(&self) -> &CMat {
        &self.t2
    }

    /// The product `T = T₁T₂`.
    pub fn product(&self) -> &CMat {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.t1.nrows()
    }

    pub fn factor(&self, i: usize) -> &CMat {
        match i {
            0 => &self.t1,
            1 => &self.t2,
            _ => panic!("factor index {i} out of range"),
        }
    }

    /// `(T₁ᴴ, T₂ᴴ)`, whose product is taken to be exactly `Tᴴ`.
    pub fn adjoint(&self) -> CommutingPair {
        CommutingPair {
            t1: self.t1.adjoint(),
            t2: self.t2.adjoint(),
            t: self.t.adjoint(),
            commutator_residual: self.commutator_residual,
            contraction_slack: self.contraction_slack,
        }
    }

    /// `(ωT₁ωᴴ, ωT₂ωᴴ)` for a unitary `ω`.
    pub fn conjugate(&self, omega: &CMat) -> Result<CommutingPair> {
        let wh = omega.adjoint();
        validate_pair(&(omega * &self.t1 * &wh), &(omega * &self.t2 * &wh), CONTRACTION_TOL)
    }
}

pub fn validate_pair(t1: &CMat, t2: &CMat, tol: f64) -> Result<CommutingPair> {
    if !t1.is_square() || t1.shape() != t2.shape() {
        return Err(Error::ShapeMismatch(format!("factors have shapes {:?} and {:?}", t1.shape(), t2.shape())));
    }
    if !crate::linalg::is_finite(t1) || !crate::linalg::is_finite(t2) {
        return Err(Error::NonFinite);
    }
    let t = t1 * t2;
    let commutator_residual = op_norm(&(&t - t2 * t1));
    if commutator_residual > tol {
        return Err(Error::NotCommuting { residual: commutator_residual });
    }
    let norm = op_norm(t1).max(op_norm(t2));
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm });
    }
    Ok(CommutingPair { t1: t1.clone(), t2: t2.clone(), t, commutator_residual, contraction_slack: 1.0 - norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectData {
    /// `D_T` on the ambient space.
    pub d: CMat,
    pub basis: SubspaceBasis,
    /// `BᴴD_TB`, the defect operator compressed to its range.
    pub d_in_basis: CMat,
}

impl DefectData {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `BᴴD_T`: the map `h ↦ D_T h` written in defect-basis coordinates.
    pub fn coords(&self) -> CMat {
        self.basis.basis().adjoint() * &self.d
    }
}

/// `D_T = (I − TᴴT)^{1/2}` with its range basis.
pub fn defect(t: &CMat) -> Result<DefectData> {
    if !t.is_square() {
        return Err(Error::ShapeMismatch(format!("defect of a {:?} matrix", t.shape())));
    }
    let norm = op_norm(t);
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::NotContraction { norm });
    }
    let m = hermitian_part(&(identity(t.nrows()) - t.adjoint() * t));
    let d = psd_sqrt_with(&m, 4.0 * CONTRACTION_TOL, DEFECT_ZERO_TOL)?;
    let basis = range_basis(&d, RANK_TOL);
    let d_in_basis = basis.basis().adjoint() * &d * basis.basis();
    Ok(DefectData { d, basis, d_in_basis })
}

/// `D_{T*}`; computed as the defect of `Tᴴ`.
pub fn defect_adjoint(t: &CMat) -> Result<DefectData> {
    defect(&t.adjoint())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticData {
    pub q: CMat,
    /// Basis of `R = Ran Q`.
    pub q_basis: SubspaceBasis,
    /// Number of exponent doublings performed.
    pub iterations: usize,
    /// Exponent `N` of the final iterate `T^N T^{*N}`.
    pub exponent: usize,
    pub tail_residual: f64,
    /// `‖T Q² Tᴴ − Q²‖`.
    pub invariance_residual: f64,
}

impl AsymptoticData {
    pub fn is_pure(&self) -> bool {
        self.q_basis.dim() == 0
    }

    pub fn rank(&self) -> usize {
        self.q_basis.dim()
    }
}

/// Iterate `S₂ₙ = TⁿSₙT*ⁿ` from `S₁ = TTᴴ` until successive iterates agree to `tol`.
pub fn asymptotic_limit(t: &CMat, tol: f64, max_iter: usize) -> Result<AsymptoticData> {
    let mut power = t.clone();
    let mut s = hermitian_part(&(t * t.adjoint()));
    let mut exponent = 1usize;
    let mut iterations = 0;
    let mut diff = f64::INFINITY;
    while iterations < max_iter {
        let next = hermitian_part(&(&power * &s * power.adjoint()));
        diff = fro(&(&next - &s));
        power = &power * &power;
        s = next;
        exponent = exponent.saturating_mul(2);
        iterations += 1;
        if diff <= tol || !diff.is_finite() {
            break;
        }
    }
    if !(diff <= tol) {
        return Err(Error::NoConvergence { iterations, residual: diff });
    }
    let q = psd_sqrt_with(&s, 1e-9, LIMIT_ZERO_TOL)?;
    let q_basis = range_basis(&q, RANK_TOL);
    let q2 = &q * &q;
    let tail_residual = fro(&(&s - &q2));
    let invariance_residual = fro(&(t * &q2 * t.adjoint() - &q2));
    Ok(AsymptoticData { q, q_basis, iterations, exponent, tail_residual, invariance_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(p(A), q(A))` for a random matrix `A` and random quadratics `p`, `q`.
    PolyInOneMatrix,
    /// Commuting diagonals conjugated by one random unitary; some coordinates unimodular.
    DiagonalPlusRotation,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::PolyInOneMatrix, Scheme::DiagonalPlusRotation];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::PolyInOneMatrix => "poly",
            Scheme::DiagonalPlusRotation => "rotation",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Scheme::PolyInOneMatrix => 0x9e37_79b9_7f4a_7c15,
            Scheme::DiagonalPlusRotation => 0xc2b2_ae3d_27d4_eb4f,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly" | "poly_in_one_matrix" => Ok(Scheme::PolyInOneMatrix),
            "rotation" | "diagonal_plus_rotation" => Ok(Scheme::DiagonalPlusRotation),
            other => Err(Error::InvalidConfig(format!("unknown scheme {other:?} (expected poly or rotation)"))),
        }
    }
}

pub fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

pub fn gaussian_complex(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) / std::f64::consts::SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the phase of `diag R` removed.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for x in q.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
    }
    q
}

fn quadratic(a: &CMat, a2: &CMat, rng: &mut impl Rng) -> CMat {
    let p: Vec<C64> = (0..3).map(|_| gaussian_complex(rng)).collect();
    identity(a.nrows()) * p[0] + a * p[1] + a2 * p[2]
}

fn normalized(m: CMat, radius: f64) -> CMat {
    let n = op_norm(&m);
    m * c64(radius / (n + 1e-12), 0.0)
}

/// Seeded commuting contraction pair; identical arguments give bit-identical output.
pub fn random_pair(dim: usize, seed: u64, scheme: Scheme) -> CommutingPair {
    assert!(dim >= 1, "random_pair: dim must be positive");
    let mut rng = rng_for(seed, scheme.salt());
    let (t1, t2) = match scheme {
        Scheme::PolyInOneMatrix => {
            let a = gaussian_matrix(dim, dim, &mut rng) / c64((dim as f64).sqrt(), 0.0);
            let a2 = &a * &a;
            let p = quadratic(&a, &a2, &mut rng);
            let q = quadratic(&a, &a2, &mut rng);
            let r1 = rng.random_range(0.3..=1.0);
            let r2 = rng.random_range(0.3..=1.0);
            (normalized(p, r1), normalized(q, r2))
        }
        Scheme::DiagonalPlusRotation => {
            let w = random_unitary(dim, &mut rng);
            let mut d1 = zeros(dim, dim);
            let mut d2 = zeros(dim, dim);
            for j in 0..dim {
                let unimodular = rng.random::<f64>() < 0.25;
                let (m1, m2) =
                    if unimodular { (1.0, 1.0) } else { (rng.random_range(0.0..0.95), rng.random_range(0.0..0.95)) };
                d1[(j, j)] = C64::from_polar(m1, rng.random_range(0.0..std::f64::consts::TAU));
                d2[(j, j)] = C64::from_polar(m2, rng.random_range(0.0..std::f64::consts::TAU));
            }
            (&w * d1 * w.adjoint(), &w * d2 * w.adjoint())
        }
    };
    validate_pair(&t1, &t2, CONTRACTION_TOL).expect("generated pairs commute and contract")
}

/// Seeded pair whose factors have norm at most `max_norm < 1`, so `T₁T₂` is pure.
pub fn random_pure_pair(dim: usize, seed: u64, scheme: Scheme, max_norm: f64) -> CommutingPair {
    let base = random_pair(dim, seed, scheme);
    let mut rng = rng_for(seed, 0x5151_0000 ^ scheme.salt());
    let shrink = |t: &CMat, rng: &mut ChaCha8Rng| {
        let target = rng.random_range(0.3..=max_norm);
        let n = op_norm(t);
        if n > target {
            t * c64(target / n, 0.0)
        } else {
            t.clone()
        }
    };
    let t1 = shrink(base.t1(), &mut rng);
    let t2 = shrink(base.t2(), &mut rng);
    validate_pair(&t1, &t2, CONTRACTION_TOL).expect("scaling preserves commutation")
}
