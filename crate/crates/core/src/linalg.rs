//! Dense complex-matrix kernel.
//!
//! Everything downstream works with [`CMat`] (an `nalgebra` dense matrix of
//! `Complex<f64>`). Orthonormal bases carry a deterministic phase convention
//! so that repeated constructions are bit-identical.

use std::f64::consts::TAU;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Coordinates smaller than this are skipped when fixing the phase of a basis column.
const PHASE_EPS: f64 = 1e-9;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Build a matrix from real rows; handy for fixtures.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn diag_real(d: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| c64(x, 0.0))))
}

pub fn scalar(x: f64) -> CMat {
    CMat::from_element(1, 1, c64(x, 0.0))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Spectral norm (largest singular value). Empty matrices have norm 0.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    g.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Frobenius norm, the cheap upper bound on [`op_norm`] used for residuals.
pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// `‖mᴴm − I‖` in Frobenius norm.
pub fn isometry_residual(m: &CMat) -> f64 {
    fro(&(m.adjoint() * m - identity(m.ncols())))
}

/// Max of the two isometry residuals of a square matrix.
pub fn unitarity_residual(m: &CMat) -> f64 {
    isometry_residual(m).max(isometry_residual(&m.adjoint()))
}

pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column counts differ");
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row counts differ");
        out.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// `I_n ⊗ m`: block diagonal with `n` copies of `m`.
pub fn kron_identity(n: usize, m: &CMat) -> CMat {
    let (r, c) = m.shape();
    let mut out = zeros(n * r, n * c);
    for k in 0..n {
        out.view_mut((k * r, k * c), (r, c)).copy_from(m);
    }
    out
}

/// Column-major `vec`: stacks the columns of `m`.
pub fn vec_of(m: &CMat) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &[C64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Hermitian PSD square root. Eigenvalues in `[−tol, tol]` are treated as zero.
pub fn psd_sqrt(m: &CMat, tol: f64) -> Result<CMat> {
    psd_sqrt_with(m, tol, tol)
}

/// [`psd_sqrt`] with separate windows: eigenvalues below `-neg_tol` are an error, eigenvalues
/// up to `zero_tol` are clamped to zero.
pub fn psd_sqrt_with(m: &CMat, neg_tol: f64, zero_tol: f64) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("psd_sqrt needs a square matrix, got {:?}", m.shape())));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let asym = fro(&(m - m.adjoint()));
    if asym > neg_tol.max(zero_tol) {
        return Err(Error::NotHermitian { residual: asym });
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let lo = eig.eigenvalues.min();
    if lo < -neg_tol {
        return Err(Error::NegativeEigenvalue { value: lo });
    }
    let roots = eig.eigenvalues.map(|l| if l <= zero_tol { 0.0 } else { l.sqrt() });
    Ok(spectral_compose(&eig.eigenvectors, &roots))
}

/// `V diag(w) Vᴴ`.
fn spectral_compose(v: &CMat, w: &DVector<f64>) -> CMat {
    let mut vw = v.clone();
    for (j, &x) in w.iter().enumerate() {
        vw.column_mut(j).scale_mut(x);
    }
    vw * v.adjoint()
}

/// Closed column span of a matrix, with orthonormal phase-normalized basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: CMat,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: identity(ambient_dim) }
    }

    /// Wrap columns that are already orthonormal. No phase normalization is applied.
    pub fn from_orthonormal(basis: CMat) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Canonical orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> SubspaceBasis {
        let p = identity(self.ambient_dim) - self.projector();
        range_basis_abs(&p, 0.5)
    }
}

/// Orthonormal basis of the column span; singular values `> rank_tol·σ_max` count.
pub fn range_basis(m: &CMat, rank_tol: f64) -> SubspaceBasis {
    let smax = op_norm(m);
    if smax == 0.0 || !smax.is_finite() {
        return SubspaceBasis::empty(m.nrows());
    }
    let (mut u, _, _) = thin_svd(m, rank_tol * smax);
    normalize_phases(&mut u);
    SubspaceBasis { ambient_dim: m.nrows(), basis: u }
}

/// Column span counting singular values above an absolute threshold. Used for
/// projector-like inputs whose nonzero singular values sit near 1.
pub fn range_basis_abs(m: &CMat, threshold: f64) -> SubspaceBasis {
    if m.is_empty() {
        return SubspaceBasis::empty(m.nrows());
    }
    // thresholds here are order one, so the Gram eigendecomposition loses nothing
    let eig = (m * m.adjoint()).symmetric_eigen();
    let mut keep: Vec<usize> = (0..m.nrows()).filter(|&j| eig.eigenvalues[j] > threshold * threshold).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = CMat::from_fn(m.nrows(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    normalize_phases(&mut u);
    SubspaceBasis { ambient_dim: m.nrows(), basis: u }
}

/// Singular triples with `σ > threshold`, sorted by decreasing `σ`.
///
/// nalgebra 0.35's complex SVD returns wrong singular vectors for some rank-deficient
/// Hermitian inputs, so this goes through the eigendecomposition of the Hermitian
/// dilation `[[0, m], [mᴴ, 0]]`, whose eigenpairs are `±σ, (u; ±v)/√2`. Tall and wide
/// inputs are first reduced to a square factor by QR.
pub fn thin_svd(m: &CMat, threshold: f64) -> (CMat, Vec<f64>, CMat) {
    let (r, c) = m.shape();
    if m.is_empty() {
        return (zeros(r, 0), vec![], zeros(c, 0));
    }
    if r > 2 * c {
        let qr = m.clone().qr();
        let (u, s, v) = thin_svd(&qr.r(), threshold);
        return (qr.q() * u, s, v);
    }
    if c > 2 * r {
        let (v, s, u) = thin_svd(&m.adjoint(), threshold);
        return (u, s, v);
    }
    let mut h = zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let eig = h.symmetric_eigen();
    let floor = threshold.max(1e-14 * eig.eigenvalues.amax());
    let mut keep: Vec<usize> = (0..r + c).filter(|&j| eig.eigenvalues[j] > floor).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = zeros(r, keep.len());
    let mut v = zeros(c, keep.len());
    let mut s = Vec::with_capacity(keep.len());
    for (k, &j) in keep.iter().enumerate() {
        let col = eig.eigenvectors.column(j);
        let top = col.rows(0, r).into_owned();
        let bot = col.rows(r, c).into_owned();
        u.set_column(k, &(&top / c64(top.norm(), 0.0)));
        v.set_column(k, &(&bot / c64(bot.norm(), 0.0)));
        s.push(eig.eigenvalues[j]);
    }
    (u, s, v)
}

/// Rotate each column so its first non-negligible coordinate is real positive.
pub fn normalize_phases(b: &mut CMat) {
    for mut col in b.column_iter_mut() {
        if let Some(z) = col.iter().find(|z| z.norm() > PHASE_EPS).copied() {
            let phase = z.conj() / z.norm();
            for x in col.iter_mut() {
                *x *= phase;
            }
        }
    }
}

/// Extend the isometry `v` (in basis coordinates, `dom → ran`) to a unitary on the ambient space.
pub fn unitary_completion(v: &CMat, dom: &SubspaceBasis, ran: &SubspaceBasis) -> Result<CMat> {
    unitary_completion_with(v, dom, ran, None)
}

/// As [`unitary_completion`], but the map between the canonical complement bases is
/// `complement_map` instead of the identity.
pub fn unitary_completion_with(
    v: &CMat,
    dom: &SubspaceBasis,
    ran: &SubspaceBasis,
    complement_map: Option<&CMat>,
) -> Result<CMat> {
    if dom.ambient_dim() != ran.ambient_dim() || dom.dim() != ran.dim() {
        return Err(Error::DimensionMismatch(format!(
            "domain {}⊂C^{} vs range {}⊂C^{}",
            dom.dim(),
            dom.ambient_dim(),
            ran.dim(),
            ran.ambient_dim()
        )));
    }
    if v.shape() != (ran.dim(), dom.dim()) {
        return Err(Error::ShapeMismatch(format!("isometry coordinates have shape {:?}", v.shape())));
    }
    let residual = isometry_residual(v);
    if residual > 1e-10 {
        return Err(Error::NotIsometric { residual });
    }
    let dc = dom.complement();
    let rc = ran.complement();
    let z = match complement_map {
        Some(z) => {
            if z.shape() != (rc.dim(), dc.dim()) {
                return Err(Error::ShapeMismatch("complement map has the wrong shape".into()));
            }
            z.clone()
        }
        None => identity(dc.dim()),
    };
    Ok(ran.basis() * v * dom.basis().adjoint() + rc.basis() * z * dc.basis().adjoint())
}

/// Polar decomposition `m = partial · positive`, with `partial` vanishing on `ker m`.
pub fn polar_parts(m: &CMat) -> (CMat, CMat) {
    let (r, c) = m.shape();
    if m.is_empty() {
        return (zeros(r, c), zeros(c, c));
    }
    let (u, s, v) = thin_svd(m, RANK_TOL * op_norm(m));
    let partial = &u * v.adjoint();
    let positive = spectral_compose(&v, &DVector::from_vec(s));
    (partial, positive)
}

/// `‖P_a − P_b‖` for orthonormal bases `a`, `b` of one ambient space. Subspaces of different
/// dimension are at gap 1; otherwise the gap is `‖(I − P_b)a‖`, the largest principal sine.
pub fn projector_gap(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.nrows(), b.nrows(), "projector_gap: bases live in different spaces");
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    op_norm(&(a - b * (b.adjoint() * a)))
}

/// Moore–Penrose pseudoinverse with relative rank threshold.
pub fn pinv(m: &CMat, rank_tol: f64) -> CMat {
    let (r, c) = m.shape();
    if m.is_empty() {
        return zeros(c, r);
    }
    let (u, s, v) = thin_svd(m, rank_tol * op_norm(m));
    let inv = DVector::from_iterator(s.len(), s.iter().map(|x| c64(1.0 / x, 0.0)));
    v * CMat::from_diagonal(&inv) * u.adjoint()
}

fn largest_eigenvalue(h: &CMat) -> f64 {
    h.symmetric_eigenvalues().max()
}

/// Maximize `f` over a uniform θ-grid of `[0, 2π)` and polish the best cell by golden section.
fn grid_max(grid: usize, f: impl Fn(f64) -> f64) -> f64 {
    let grid = grid.max(1);
    let h = TAU / grid as f64;
    let (mut best_t, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..grid {
        let t = k as f64 * h;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_t - h, best_t + h);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    best.max(f1).max(f2)
}

/// Numerical radius `sup |⟨m h, h⟩|` via the rotated Hermitian part.
pub fn numerical_radius(m: &CMat, grid: usize) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let mh = m.adjoint();
    grid_max(grid, |t| {
        let e = C64::from_polar(1.0, t);
        let h = (m * e + &mh * e.conj()) * c64(0.5, 0.0);
        largest_eigenvalue(&h)
    })
    .max(0.0)
}

/// `sup_θ ‖a + e^{iθ} b‖`, the norm of the multiplication operator with symbol `a + z b`.
pub fn pencil_sup_norm(a: &CMat, b: &CMat, grid: usize) -> f64 {
    assert_eq!(a.shape(), b.shape(), "pencil_sup_norm: shapes differ");
    if a.is_empty() {
        return 0.0;
    }
    grid_max(grid, |t| op_norm(&(a + b * C64::from_polar(1.0, t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        a.shape() == b.shape() && fro(&(a - b)) <= tol
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = CMat> {
        proptest::collection::vec(-1.0f64..1.0, 2 * n * n)
            .prop_map(move |v| CMat::from_fn(n, n, |i, j| c64(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])))
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(close(&psd_sqrt(&identity(3), 1e-12).unwrap(), &identity(3), 1e-14));
        assert!(close(&psd_sqrt(&scalar(4.0), 1e-12).unwrap(), &scalar(2.0), 1e-14));
        let s = psd_sqrt(&diag_real(&[0.75, 0.0]), 1e-12).unwrap();
        assert!(close(&s, &diag_real(&[0.8660254037844386, 0.0]), 1e-12));
    }

    #[test]
    fn psd_sqrt_rejects_bad_input() {
        assert!(matches!(psd_sqrt(&diag_real(&[1.0, -0.1]), 1e-12), Err(Error::NegativeEigenvalue { .. })));
        let m = from_real_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(psd_sqrt(&m, 1e-12), Err(Error::NotHermitian { .. })));
        // tiny negative eigenvalues are clamped
        let s = psd_sqrt(&diag_real(&[1.0, -1e-14]), 1e-12).unwrap();
        assert_eq!(s[(1, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn range_basis_examples() {
        let z = range_basis(&zeros(2, 2), RANK_TOL);
        assert_eq!((z.dim(), z.ambient_dim()), (0, 2));
        let b = range_basis(&from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]), RANK_TOL);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(b.basis(), &from_real_rows(&[&[h], &[h]]), 1e-12));
        let f = range_basis(&identity(4), RANK_TOL);
        assert_eq!(f.dim(), 4);
        assert!(close(&f.projector(), &identity(4), 1e-12));
    }

    #[test]
    fn range_basis_phase_convention() {
        let m = from_real_rows(&[&[0.0, 0.0], &[-2.0, 0.0], &[0.0, 3.0]]) * c64(0.0, 1.0);
        let b = range_basis(&m, RANK_TOL);
        for col in b.basis().column_iter() {
            let first = col.iter().find(|z| z.norm() > 1e-9).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn unitary_completion_examples() {
        let full = SubspaceBasis::full(3);
        assert!(close(&unitary_completion(&identity(3), &full, &full).unwrap(), &identity(3), 1e-14));

        let e1 = SubspaceBasis::from_orthonormal(from_real_rows(&[&[1.0], &[0.0]]));
        let e2 = SubspaceBasis::from_orthonormal(from_real_rows(&[&[0.0], &[1.0]]));
        let u = unitary_completion(&identity(1), &e2, &e1).unwrap();
        assert!(close(&u, &from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-14));

        let empty = SubspaceBasis::empty(2);
        assert!(close(&unitary_completion(&zeros(0, 0), &empty, &empty).unwrap(), &identity(2), 1e-14));
    }

    #[test]
    fn unitary_completion_rejects() {
        let e1 = SubspaceBasis::from_orthonormal(from_real_rows(&[&[1.0], &[0.0]]));
        let full = SubspaceBasis::full(2);
        assert!(matches!(unitary_completion(&identity(1), &e1, &full), Err(Error::DimensionMismatch(_))));
        assert!(matches!(unitary_completion(&scalar(0.5), &e1, &e1), Err(Error::NotIsometric { .. })));
    }

    #[test]
    fn numerical_radius_examples() {
        assert_eq!(numerical_radius(&zeros(2, 2), 64), 0.0);
        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((numerical_radius(&j, 64) - 0.5).abs() < 1e-12);
        assert!((numerical_radius(&diag_real(&[0.3, -0.7]), 64) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn pencil_sup_norm_examples() {
        assert!((pencil_sup_norm(&zeros(2, 2), &identity(2), 64) - 1.0).abs() < 1e-12);
        assert!((pencil_sup_norm(&identity(2), &zeros(2, 2), 64) - 1.0).abs() < 1e-12);
        assert!((pencil_sup_norm(&scalar(0.5), &scalar(0.5), 64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_parts_examples() {
        let u = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]) * c64(0.0, 1.0);
        let (w, p) = polar_parts(&u);
        assert!(close(&w, &u, 1e-14) && close(&p, &identity(2), 1e-14));

        let (w, p) = polar_parts(&diag_real(&[2.0, 0.0]));
        assert!(close(&w, &diag_real(&[1.0, 0.0]), 1e-14) && close(&p, &diag_real(&[2.0, 0.0]), 1e-14));

        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let (w, p) = polar_parts(&j);
        assert!(close(&w, &j, 1e-14) && close(&p, &diag_real(&[0.0, 1.0]), 1e-14));
    }

    // a projector on which nalgebra's own complex SVD reconstructs with error 0.17
    #[test]
    fn thin_svd_rank_one_projector() {
        let off = c64(0.31561514462773654, -0.3597981350206817);
        let p =
            CMat::from_row_slice(2, 2, &[c64(0.3553197231228369, 0.0), off, off.conj(), c64(0.6446802768771627, 0.0)]);
        let (u, s, v) = thin_svd(&p, 1e-10);
        assert_eq!(s.len(), 1);
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(fro(&(&u * CMat::from_diagonal_element(1, 1, c64(s[0], 0.0)) * v.adjoint() - &p)) < 1e-12);
        let b = range_basis(&p, RANK_TOL);
        assert!(close(&b.projector(), &p, 1e-12));
        assert!(close(&(b.complement().projector() + &p), &identity(2), 1e-12));
    }

    #[test]
    fn empty_inputs_are_harmless() {
        let e = zeros(0, 0);
        assert_eq!(op_norm(&e), 0.0);
        assert_eq!(psd_sqrt(&e, 1e-12).unwrap().shape(), (0, 0));
        assert_eq!(polar_parts(&zeros(3, 0)).0.shape(), (3, 0));
        assert_eq!(range_basis(&zeros(3, 0), RANK_TOL).dim(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn psd_sqrt_squares_back(a in arb_matrix(4)) {
            let m = a.adjoint() * &a;
            let s = psd_sqrt(&m, 1e-12).unwrap();
            prop_assert!(op_norm(&(&s * &s - &m)) <= 1e-10 * (1.0 + op_norm(&m)));
        }

        #[test]
        fn numerical_radius_brackets_norm(a in arb_matrix(3)) {
            let w = numerical_radius(&a, 128);
            let n = op_norm(&a);
            prop_assert!(w <= n + 1e-10);
            prop_assert!(n <= 2.0 * w + 1e-10);
        }

        #[test]
        fn pencil_norm_dominates_coefficients(a in arb_matrix(3), b in arb_matrix(3)) {
            let s = pencil_sup_norm(&a, &b, 64);
            prop_assert!(s >= op_norm(&a).max(op_norm(&b)) - 1e-8);
        }

        #[test]
        fn completion_is_unitary_and_extends(seed in any::<u64>(), k in 0usize..4) {
            let mut rng = crate::pairs::rng_for(seed, 0);
            let a = crate::pairs::random_unitary(4, &mut rng);
            let b = crate::pairs::random_unitary(4, &mut rng);
            let dom = SubspaceBasis::from_orthonormal(a.columns(0, k).into_owned());
            let ran = SubspaceBasis::from_orthonormal(b.columns(0, k).into_owned());
            let v = identity(k);
            let u = unitary_completion(&v, &dom, &ran).unwrap();
            prop_assert!(unitarity_residual(&u) <= 1e-10);
            prop_assert!(fro(&(&u * dom.basis() - ran.basis())) <= 1e-10);
        }

        #[test]
        fn polar_reconstructs(a in arb_matrix(3)) {
            let (w, p) = polar_parts(&a);
            prop_assert!(fro(&(&w * &p - &a)) <= 1e-10);
            prop_assert!(fro(&(&p - psd_sqrt(&(a.adjoint() * &a), 1e-12).unwrap())) <= 1e-8);
        }

        #[test]
        fn thin_svd_reconstructs(a in arb_matrix(4), b in arb_matrix(4)) {
            let m = &a * b.columns(0, 2).into_owned();
            let (u, s, v) = thin_svd(&m, 0.0);
            let d = DVector::from_iterator(s.len(), s.iter().map(|&x| c64(x, 0.0)));
            prop_assert!(fro(&(&u * CMat::from_diagonal(&d) * v.adjoint() - &m)) <= 1e-10 * (1.0 + fro(&m)));
            prop_assert!(isometry_residual(&u) <= 1e-10 && isometry_residual(&v) <= 1e-10);
            prop_assert!(pinv(&m, RANK_TOL).shape() == (2, 4));
        }

        #[test]
        fn thin_svd_tall_and_wide(seed in 0u64..10_000, rank in 0usize..=3) {
            let mut rng = crate::pairs::rng_for(seed, 5);
            let m = crate::pairs::gaussian_matrix(11, rank, &mut rng) * crate::pairs::gaussian_matrix(rank, 3, &mut rng);
            for x in [m.clone(), m.adjoint()] {
                let (u, s, v) = thin_svd(&x, 1e-9);
                let d = DVector::from_iterator(s.len(), s.iter().map(|&x| c64(x, 0.0)));
                prop_assert_eq!(s.len(), rank);
                prop_assert!(fro(&(&u * CMat::from_diagonal(&d) * v.adjoint() - &x)) <= 1e-10 * (1.0 + fro(&x)));
                prop_assert!(isometry_residual(&u) <= 1e-10 && isometry_residual(&v) <= 1e-10);
            }
        }

        #[test]
        fn projector_gap_matches_dense(a in arb_matrix(4), b in arb_matrix(4), k in 0usize..=4) {
            let pa = range_basis(&a.columns(0, k).into_owned(), RANK_TOL);
            let pb = range_basis(&b.columns(0, k).into_owned(), RANK_TOL);
            let dense = op_norm(&(pa.projector() - pb.projector()));
            prop_assert!((projector_gap(pa.basis(), pb.basis()) - dense).abs() <= 1e-10);
        }

        #[test]
        fn deterministic(a in arb_matrix(3)) {
            prop_assert_eq!(range_basis(&a, RANK_TOL), range_basis(&a, RANK_TOL));
            prop_assert_eq!(numerical_radius(&a, 64).to_bits(), numerical_radius(&a, 64).to_bits());
        }
    }
}
