//! Minimal isometric dilations of `T` are unique up to unitary equivalence. Here the
//! Schäffer triple `(S₁, S₂, V_S)` and the compressed Douglas triple `(D₁, D₂, V_D)` are
//! aligned by the unitary that matches their Krylov vectors.

use crate::error::{Error, Result};
use crate::hardy::{Layout, LinearOperator};
use crate::linalg::{fro, hstack, identity, pinv, CMat};
use crate::pairs::CommutingPair;
use crate::report::Check;

pub const GRAM_TOL: f64 = 1e-8;
pub const ALIGN_RANK_TOL: f64 = 1e-10;

/// `[π, Vπ, …, V^{depth−1}π]`.
pub fn krylov(v: &dyn LinearOperator, pi: &CMat, depth: usize) -> CMat {
    let mut blocks = Vec::with_capacity(depth);
    let mut cur = pi.clone();
    for k in 0..depth {
        if k > 0 {
            cur = v.apply(&cur);
        }
        blocks.push(cur.clone());
    }
    let refs: Vec<&CMat> = blocks.iter().collect();
    hstack(&refs)
}

/// The Gram matrix every isometric dilation must produce: block `(m, k)` is `T^{k−m}` for
/// `k ≥ m` and `(T^{m−k})ᴴ` otherwise.
pub fn forced_gram(t: &CMat, depth: usize) -> CMat {
    let h = t.nrows();
    let mut powers = vec![identity(h)];
    for k in 1..depth {
        powers.push(&powers[k - 1] * t);
    }
    let mut g = CMat::zeros(h * depth, h * depth);
    for m in 0..depth {
        for k in 0..depth {
            let block = if k >= m { powers[k - m].clone() } else { powers[m - k].adjoint() };
            g.view_mut((m * h, k * h), (h, h)).copy_from(&block);
        }
    }
    g
}

pub fn gram_forcing_residual(t: &CMat, v: &dyn LinearOperator, pi: &CMat, depth: usize) -> f64 {
    let k = krylov(v, pi, depth);
    fro(&(k.adjoint() * &k - forced_gram(t, depth)))
}

/// A dilation triple `(W₁, W₂, W)` with its embedding of `H`.
pub struct Triple<'a> {
    pub w1: &'a dyn LinearOperator,
    pub w2: &'a dyn LinearOperator,
    pub w: &'a dyn LinearOperator,
    pub pi: &'a CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub omega: CMat,
    pub residual: f64,
    pub gram_residual: f64,
}

/// `ω = K_D K_S⁺` on the Krylov spans of depth `depth`; the residual is measured on the
/// Krylov vectors of depth `< depth − 1`, whose images under `S₁, S₂, V_S` stay in the span.
pub fn align_minimal_dilations(
    _pair: &CommutingPair,
    schaffer: &Triple,
    douglas: &Triple,
    depth: usize,
) -> Result<Alignment> {
    assert!(depth >= 2, "alignment needs Krylov depth at least 2");
    let ks = krylov(schaffer.w, schaffer.pi, depth);
    let kd = krylov(douglas.w, douglas.pi, depth);
    let gram_residual = fro(&(ks.adjoint() * &ks - kd.adjoint() * &kd));
    if gram_residual > GRAM_TOL {
        return Err(Error::GramMismatch { residual: gram_residual });
    }
    let omega = &kd * pinv(&ks, ALIGN_RANK_TOL);
    let h = schaffer.pi.ncols();
    let inner = (depth - 1) * h;
    let (ks_in, kd_in) = (ks.columns(0, inner).into_owned(), kd.columns(0, inner).into_owned());
    let mut residual = fro(&(&omega * &ks - &kd));
    for (s, d) in [(schaffer.w1, douglas.w1), (schaffer.w2, douglas.w2), (schaffer.w, douglas.w)] {
        residual = residual.max(fro(&(&omega * s.apply(&ks_in) - d.apply(&kd_in))));
    }
    Ok(Alignment { omega, residual, gram_residual })
}

/// Numerical rank from the Gram eigenvalues, counting singular values above `1e-6·σ_max`.
/// Rank deficits of non-minimal dilations are structural, so the loose cut loses nothing.
fn krylov_rank(k: &CMat) -> usize {
    if k.is_empty() {
        return 0;
    }
    let eig = (k.adjoint() * k).symmetric_eigenvalues();
    let top = eig.max();
    eig.iter().filter(|&&l| l > 1e-12 * top).count()
}

/// Membership of a triple in the family of minimal dilations of the pair: dilation relations,
/// commutation with `W`, the factorization `W₁ = W₂ᴴW`, and a Krylov rank for minimality.
pub fn verify_ut_membership(triple: &Triple, layout: Layout, pair: &CommutingPair, depth: usize) -> Vec<Check> {
    let rows = layout.interior();
    let j = layout.interior_columns();
    let pi = triple.pi;
    let dilation =
        |w: &dyn LinearOperator, t: &CMat| fro(&(w.apply_adjoint(pi) - pi * t.adjoint()).select_rows(rows.iter()));
    let d = dilation(triple.w1, pair.t1()).max(dilation(triple.w2, pair.t2())).max(dilation(triple.w, pair.product()));
    let commute =
        |a: &dyn LinearOperator, b: &dyn LinearOperator| fro(&(a.apply(&b.apply(&j)) - b.apply(&a.apply(&j))));
    let c = commute(triple.w1, triple.w).max(commute(triple.w2, triple.w));
    let f1 = fro(&(triple.w1.apply(&j) - triple.w2.apply_adjoint(&triple.w.apply(&j))));
    let f2 = fro(&(triple.w2.apply(&j) - triple.w1.apply_adjoint(&triple.w.apply(&j))));
    let rank = krylov_rank(&krylov(triple.w, pi, depth));
    let expected = layout.dim() - layout.fiber.min(layout.dim());
    vec![
        Check::at_most("membership_dilation", d, 1e-9),
        Check::at_most("membership_commutation", c, 1e-9),
        Check::at_most("membership_factorization", f1.max(f2), 1e-9),
        Check::at_least("minimality_rank", rank as f64, expected as f64),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ando::{build_ando_tuple, fundamental_ops};
    use crate::douglas::{build_douglas_data, build_douglas_pair, douglas_degree};
    use crate::hardy::unit_columns;
    use crate::linalg::{from_real_rows, scalar};
    use crate::pairs::{random_pair, validate_pair, Scheme};
    use crate::schaffer::{build_schaffer_pair, compress_to_s};

    struct Models {
        s: (CMat, CMat, CMat, CMat),
        layout_s: Layout,
        dil: crate::douglas::DouglasDilation,
    }

    fn models(pair: &CommutingPair, n: usize) -> Models {
        let tuple = build_ando_tuple(pair).unwrap();
        let fund = fundamental_ops(pair, &tuple);
        let sd = build_schaffer_pair(pair, &tuple, n).unwrap();
        let (s1, s2) = compress_to_s(&sd, &fund, n);
        let pi = unit_columns(s1.nrows(), 0..pair.dim());
        let data = build_douglas_data(pair).unwrap();
        let l = douglas_degree(pair, &data, 16).unwrap();
        let dil = build_douglas_pair(pair, &data, n + 1 + l).unwrap();
        let layout_s = Layout { head: pair.dim(), n, fiber: tuple.defect.dim(), tail: 0 };
        Models { s: (s1, s2, sd.vs.clone(), pi), layout_s, dil }
    }

    fn align(pair: &CommutingPair, n: usize) -> Alignment {
        let m = models(pair, n);
        let st = Triple { w1: &m.s.0, w2: &m.s.1, w: &m.s.2, pi: &m.s.3 };
        let dt = Triple { w1: &m.dil.d1, w2: &m.dil.d2, w: &m.dil.vd, pi: &m.dil.pi_d };
        align_minimal_dilations(pair, &st, &dt, n).unwrap()
    }

    #[test]
    fn forced_gram_examples() {
        let g = forced_gram(&scalar(0.5), 3);
        assert!(fro(&(g - from_real_rows(&[&[1.0, 0.5, 0.25], &[0.5, 1.0, 0.5], &[0.25, 0.5, 1.0]]))) < 1e-15);
    }

    #[test]
    fn half_scalars_align() {
        let pair = validate_pair(&scalar(0.5), &scalar(0.5), 1e-10).unwrap();
        assert!(align(&pair, 16).residual <= 1e-8);
    }

    #[test]
    fn nilpotent_pair_aligns() {
        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pair = validate_pair(&j, &j, 1e-10).unwrap();
        assert!(align(&pair, 16).residual <= 1e-9);
    }

    #[test]
    fn both_models_are_members() {
        for seed in 0..12u64 {
            let pair = random_pair(1 + seed as usize % 4, seed, Scheme::ALL[seed as usize % 2]);
            let n = 12;
            let m = models(&pair, n);
            let st = Triple { w1: &m.s.0, w2: &m.s.1, w: &m.s.2, pi: &m.s.3 };
            for c in verify_ut_membership(&st, m.layout_s, &pair, n) {
                assert!(c.passed, "schaffer seed {seed}: {}", c.line());
            }
            let dt = Triple { w1: &m.dil.d1, w2: &m.dil.d2, w: &m.dil.vd, pi: &m.dil.pi_d };
            let checks = verify_ut_membership(&dt, m.dil.compressed_layout(), &pair, m.dil.n);
            for c in &checks {
                assert!(c.passed, "douglas seed {seed}: {}", c.line());
            }
            assert!(m.s.2.nrows() > 0);
            assert!(gram_forcing_residual(pair.product(), &m.s.2, &m.s.3, n) <= 1e-9);
            assert!(gram_forcing_residual(pair.product(), &m.dil.vd, &m.dil.pi_d, n) <= 1e-9);
        }
    }

    #[test]
    fn full_schaffer_space_is_not_minimal() {
        let pair = random_pair(3, 4, Scheme::PolyInOneMatrix);
        let tuple = build_ando_tuple(&pair).unwrap();
        assert!(tuple.f_dim() > tuple.defect.dim());
        let n = 8;
        let sd = build_schaffer_pair(&pair, &tuple, n).unwrap();
        let pi = unit_columns(sd.space_dim(), 0..pair.dim());
        let layout = Layout { head: pair.dim(), n, fiber: tuple.f_dim(), tail: 0 };
        let st = Triple { w1: &sd.v1, w2: &sd.v2, w: &sd.v, pi: &pi };
        let checks = verify_ut_membership(&st, layout, &pair, n);
        let rank = checks.iter().find(|c| c.name == "minimality_rank").unwrap();
        assert!(!rank.passed);
    }

    #[test]
    fn seeded_alignment_batch() {
        for seed in 0..16u64 {
            let pair = random_pair(1 + seed as usize % 4, seed, Scheme::ALL[(seed / 4) as usize % 2]);
            let a = align(&pair, 16);
            assert!(a.residual <= 1e-7, "seed {seed}: {:.3e}", a.residual);
        }
    }
}
