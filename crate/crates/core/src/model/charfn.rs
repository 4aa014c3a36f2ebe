//! The characteristic function `Θ_T(z) = [−T + zD_{T*}(I − zT*)⁻¹D_T]|_{D_T}` and the
//! characteristic triple `(G₁, G₂, Θ_T)`.

use crate::douglas::{build_douglas_data, DouglasData};
use crate::error::{Error, Result};
use crate::linalg::{c64, identity, is_finite, op_norm, CMat, C64};
use crate::pairs::{asymptotic_limit, defect, defect_adjoint, CommutingPair, DefectData};

/// Boundary sampling resolution for innerness checks.
pub const BOUNDARY_SAMPLES: usize = 64;
/// Points with `|z|` at least this close to the circle need a pure `T`.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CharFn {
    pub t: CMat,
    pub defect: DefectData,
    pub defect_adj: DefectData,
    /// `T*ⁿ → 0`; only then may `Θ` be evaluated on the circle.
    pub pure: bool,
}

impl CharFn {
    pub fn new(t: &CMat) -> Result<Self> {
        let pure = asymptotic_limit(t, crate::douglas::LIMIT_TOL, crate::douglas::LIMIT_MAX_ITER)?.is_pure();
        Ok(Self { t: t.clone(), defect: defect(t)?, defect_adj: defect_adjoint(t)?, pure })
    }

    /// `(dim D_{T*}, dim D_T)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.defect_adj.dim(), self.defect.dim())
    }

    /// Taylor coefficients `Θ₀ = −T`, `Θₖ = D_{T*}T*ᵏ⁻¹D_T`, in defect coordinates.
    pub fn taylor(&self, count: usize) -> Vec<CMat> {
        let b = self.defect.basis.basis();
        let bs = self.defect_adj.basis.basis();
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(-(bs.adjoint() * &self.t * b));
        let left = self.defect_adj.coords();
        let mut right = &self.defect.d * b;
        let th = self.t.adjoint();
        for _ in 1..count {
            out.push(&left * &right);
            right = &th * right;
        }
        out
    }

    /// `‖TD_T − D_{T*}T‖`, the identity that puts `Θ(z)D_T` inside `D_{T*}`.
    pub fn intertwining_residual(&self) -> f64 {
        op_norm(&(&self.t * &self.defect.d - &self.defect_adj.d * &self.t))
    }
}

pub fn char_eval(cf: &CharFn, z: C64) -> Result<CMat> {
    if z.norm() >= 1.0 - BOUNDARY_MARGIN && !cf.pure {
        return Err(Error::SingularResolvent { re: z.re, im: z.im });
    }
    let n = cf.t.nrows();
    let b = cf.defect.basis.basis();
    let bs = cf.defect_adj.basis.basis();
    let resolvent = identity(n) - cf.t.adjoint() * z;
    let rhs = &cf.defect.d * b;
    let y = resolvent.lu().solve(&rhs).ok_or(Error::SingularResolvent { re: z.re, im: z.im })?;
    let theta = bs.adjoint() * (-(&cf.t * b) + &cf.defect_adj.d * y * z);
    if !is_finite(&theta) {
        return Err(Error::SingularResolvent { re: z.re, im: z.im });
    }
    Ok(theta)
}

/// Smallest singular value of `Θ(e^{iθ})` over `samples` equispaced angles.
pub fn boundary_min_singular_value(cf: &CharFn, samples: usize) -> Result<f64> {
    let mut lo = f64::INFINITY;
    for k in 0..samples {
        let z = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / samples as f64);
        let th = char_eval(cf, z)?;
        let s = if th.is_empty() { 1.0 } else { th.singular_values().min() };
        lo = lo.min(s);
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharTriple {
    /// Fundamental operators of `(T₁*, T₂*)` on `D_{T*}` coordinates.
    pub g1: CMat,
    pub g2: CMat,
    pub theta: CharFn,
}

pub fn char_triple(pair: &CommutingPair) -> Result<CharTriple> {
    let data = build_douglas_data(pair)?;
    char_triple_from(pair, &data)
}

pub fn char_triple_from(pair: &CommutingPair, data: &DouglasData) -> Result<CharTriple> {
    Ok(CharTriple { g1: data.g1.clone(), g2: data.g2.clone(), theta: CharFn::new(pair.product())? })
}

/// Interior sample points: radii 0.5 and 0.9, `angles` equispaced angles each.
pub fn interior_grid(angles: usize) -> Vec<C64> {
    [0.5, 0.9]
        .iter()
        .flat_map(|&r| (0..angles).map(move |k| C64::from_polar(r, std::f64::consts::TAU * k as f64 / angles as f64)))
        .collect()
}

pub fn zero() -> C64 {
    c64(0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, from_real_rows, scalar};
    use crate::pairs::{random_pair, random_pure_pair, random_unitary, rng_for, validate_pair, Scheme};
    use proptest::prelude::*;

    #[test]
    fn zero_contraction_is_z() {
        let cf = CharFn::new(&crate::linalg::zeros(2, 2)).unwrap();
        let z = c64(0.3, -0.2);
        assert!(fro(&(char_eval(&cf, z).unwrap() - identity(2) * z)) < 1e-15);
    }

    #[test]
    fn scalar_blaschke_factor() {
        let cf = CharFn::new(&scalar(0.25)).unwrap();
        assert!((char_eval(&cf, zero()).unwrap()[(0, 0)] - c64(-0.25, 0.0)).norm() < 1e-15);
        assert!(char_eval(&cf, c64(0.25, 0.0)).unwrap()[(0, 0)].norm() < 1e-15);
        let z = c64(0.1, 0.7);
        let closed = (z - 0.25) / (c64(1.0, 0.0) - z * 0.25);
        assert!((char_eval(&cf, z).unwrap()[(0, 0)] - closed).norm() < 1e-14);
    }

    #[test]
    fn half_scalars_triple() {
        let pair = validate_pair(&scalar(0.5), &scalar(0.5), 1e-10).unwrap();
        let tr = char_triple(&pair).unwrap();
        assert!((tr.g1[(0, 0)].re - 0.4).abs() < 1e-12 && (tr.g2[(0, 0)].re - 0.4).abs() < 1e-12);
        let z = c64(-0.4, 0.3);
        let closed = (z - 0.25) / (c64(1.0, 0.0) - z * 0.25);
        assert!((char_eval(&tr.theta, z).unwrap()[(0, 0)] - closed).norm() < 1e-14);
    }

    #[test]
    fn nilpotent_pair_has_inner_polynomial() {
        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pair = validate_pair(&j, &j, 1e-10).unwrap();
        let tr = char_triple(&pair).unwrap();
        assert_eq!(tr.g1.shape(), (2, 2));
        assert!(boundary_min_singular_value(&tr.theta, BOUNDARY_SAMPLES).unwrap() >= 1.0 - 1e-8);
        let coeffs = tr.theta.taylor(4);
        assert!(fro(&coeffs[2]) < 1e-15 && fro(&coeffs[3]) < 1e-15);
    }

    #[test]
    fn boundary_needs_purity() {
        let u = random_unitary(2, &mut rng_for(2, 2));
        let cf = CharFn::new(&u).unwrap();
        assert!(!cf.pure);
        assert!(matches!(char_eval(&cf, c64(1.0, 0.0)), Err(Error::SingularResolvent { .. })));
        assert_eq!(char_eval(&cf, c64(0.5, 0.0)).unwrap().shape(), (0, 0));
    }

    #[test]
    fn taylor_series_sums_to_theta() {
        let pair = random_pair(4, 3, Scheme::PolyInOneMatrix);
        let cf = CharFn::new(pair.product()).unwrap();
        let z = c64(0.2, 0.1);
        let mut acc = CMat::zeros(cf.shape().0, cf.shape().1);
        let mut zk = c64(1.0, 0.0);
        for c in cf.taylor(60) {
            acc += c * zk;
            zk *= z;
        }
        assert!(fro(&(acc - char_eval(&cf, z).unwrap())) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn pure_theta_is_inner_on_the_circle(dim in 1usize..=5, seed in 0u64..10_000, s in 0usize..2) {
            let pair = random_pure_pair(dim, seed, Scheme::ALL[s], 0.9);
            let cf = CharFn::new(pair.product()).unwrap();
            prop_assert!(cf.intertwining_residual() <= 1e-12);
            prop_assert!(boundary_min_singular_value(&cf, BOUNDARY_SAMPLES).unwrap() >= 1.0 - 1e-6);
            let th = char_eval(&cf, C64::from_polar(1.0, 0.7)).unwrap();
            prop_assert!(op_norm(&th) <= 1.0 + 1e-6);
        }

        #[test]
        fn theta_is_contractive_inside(dim in 1usize..=5, seed in 0u64..10_000, s in 0usize..2) {
            let pair = random_pair(dim, seed, Scheme::ALL[s]);
            let cf = CharFn::new(pair.product()).unwrap();
            for z in interior_grid(8) {
                prop_assert!(op_norm(&char_eval(&cf, z).unwrap()) <= 1.0 + 1e-9);
            }
        }
    }
}
