//! Degree-truncated vector-valued Hardy space `H²_N(F)`.
//!
//! A vector is stored as `N` stacked coefficient blocks `f₀, …, f_{N−1}` of length
//! `dim F`. Analytic multiplication operators are lower block-triangular Toeplitz;
//! truncation drops the overflow past degree `N − 1`. Consequences used throughout:
//!
//! * products of truncated analytic operators equal the truncation of the product,
//! * adjoints (backward-shift structure) are exact on every truncated vector,
//! * forward isometry statements only hold on the interior `{f : f_{N−1} = 0}`.

use std::ops::Range;

use nalgebra::DVector;

use crate::linalg::{fro, identity, range_basis, zeros, CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct HardyVec {
    pub fiber_dim: usize,
    pub coeffs: Vec<DVector<C64>>,
}

impl HardyVec {
    pub fn zeros(fiber_dim: usize, degree_bound: usize) -> Self {
        Self { fiber_dim, coeffs: vec![DVector::zeros(fiber_dim); degree_bound] }
    }

    pub fn from_flat(fiber_dim: usize, flat: &DVector<C64>) -> Self {
        assert!(fiber_dim > 0 && flat.len() % fiber_dim == 0, "flat length is not a multiple of the fiber");
        let coeffs = (0..flat.len() / fiber_dim).map(|k| flat.rows(k * fiber_dim, fiber_dim).into_owned()).collect();
        Self { fiber_dim, coeffs }
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn to_flat(&self) -> DVector<C64> {
        let mut out = DVector::zeros(self.fiber_dim * self.coeffs.len());
        for (k, c) in self.coeffs.iter().enumerate() {
            out.rows_mut(k * self.fiber_dim, self.fiber_dim).copy_from(c);
        }
        out
    }

    /// Parseval norm `(Σ‖fₖ‖²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }
}

/// The one-degree symbol `φ(z) = A + zB`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilSymbol {
    pub a: CMat,
    pub b: CMat,
}

impl PencilSymbol {
    pub fn new(a: CMat, b: CMat) -> Self {
        assert_eq!(a.shape(), b.shape(), "pencil coefficients must share a shape");
        Self { a, b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HardyKind {
    Pencil(PencilSymbol),
    Shift,
    /// Taylor coefficients `Θ₀, …, Θ_K` (each `fiber_out × fiber_in`).
    AnalyticToeplitz(Vec<CMat>),
    Dense(CMat),
}

/// Operator on `H²_N`. Structured kinds are applied blockwise; `to_dense` materializes.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyOp {
    pub degree_bound: usize,
    pub fiber_in: usize,
    pub fiber_out: usize,
    pub kind: HardyKind,
}

/// A linear map given by its action and adjoint action on blocks of column vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &CMat) -> CMat;
    fn apply_adjoint(&self, y: &CMat) -> CMat;
}

impl LinearOperator for CMat {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &CMat) -> CMat {
        self * x
    }
    fn apply_adjoint(&self, y: &CMat) -> CMat {
        self.adjoint() * y
    }
}

impl HardyOp {
    pub fn dim_in(&self) -> usize {
        self.degree_bound * self.fiber_in
    }

    pub fn dim_out(&self) -> usize {
        self.degree_bound * self.fiber_out
    }

    /// Taylor coefficients for the structured kinds.
    pub fn coefficients(&self) -> Option<Vec<CMat>> {
        match &self.kind {
            HardyKind::Pencil(s) => Some(vec![s.a.clone(), s.b.clone()]),
            HardyKind::Shift => Some(vec![zeros(self.fiber_out, self.fiber_in), identity(self.fiber_in)]),
            HardyKind::AnalyticToeplitz(c) => Some(c.clone()),
            HardyKind::Dense(_) => None,
        }
    }

    /// Same symbol at a different degree bound. Dense operators cannot be resized.
    pub fn with_degree(&self, n: usize) -> HardyOp {
        assert!(!matches!(self.kind, HardyKind::Dense(_)), "dense Hardy operators have a fixed degree");
        HardyOp { degree_bound: n, ..self.clone() }
    }

    pub fn to_dense(&self) -> CMat {
        match &self.kind {
            HardyKind::Dense(m) => m.clone(),
            _ => self.apply(&identity(self.dim_in())),
        }
    }

    pub fn adjoint_dense(&self) -> CMat {
        self.to_dense().adjoint()
    }
}

impl LinearOperator for HardyOp {
    fn nrows(&self) -> usize {
        self.dim_out()
    }

    fn ncols(&self) -> usize {
        self.dim_in()
    }

    fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.dim_in(), "Hardy operator applied to a vector of the wrong length");
        let (n, fi, fo) = (self.degree_bound, self.fiber_in, self.fiber_out);
        match &self.kind {
            HardyKind::Dense(m) => m * x,
            HardyKind::Shift => {
                let mut y = zeros(n * fo, x.ncols());
                if n > 1 {
                    y.rows_mut(fo, (n - 1) * fo).copy_from(&x.rows(0, (n - 1) * fi));
                }
                y
            }
            kind => {
                let coeffs = match kind {
                    HardyKind::Pencil(s) => vec![s.a.clone(), s.b.clone()],
                    HardyKind::AnalyticToeplitz(c) => c.clone(),
                    _ => unreachable!(),
                };
                let mut y = zeros(n * fo, x.ncols());
                for k in 0..n {
                    let mut acc = y.rows_mut(k * fo, fo);
                    for (j, c) in coeffs.iter().enumerate().take(k + 1) {
                        acc += c * x.rows((k - j) * fi, fi);
                    }
                }
                y
            }
        }
    }

    fn apply_adjoint(&self, y: &CMat) -> CMat {
        assert_eq!(y.nrows(), self.dim_out(), "Hardy adjoint applied to a vector of the wrong length");
        let (n, fi, fo) = (self.degree_bound, self.fiber_in, self.fiber_out);
        match &self.kind {
            HardyKind::Dense(m) => m.adjoint() * y,
            HardyKind::Shift => {
                let mut x = zeros(n * fi, y.ncols());
                if n > 1 {
                    x.rows_mut(0, (n - 1) * fi).copy_from(&y.rows(fo, (n - 1) * fo));
                }
                x
            }
            kind => {
                let coeffs = match kind {
                    HardyKind::Pencil(s) => vec![s.a.clone(), s.b.clone()],
                    HardyKind::AnalyticToeplitz(c) => c.clone(),
                    _ => unreachable!(),
                };
                let adj: Vec<CMat> = coeffs.iter().map(|c| c.adjoint()).collect();
                let mut x = zeros(n * fi, y.ncols());
                for m in 0..n {
                    let mut acc = x.rows_mut(m * fi, fi);
                    for (j, c) in adj.iter().enumerate() {
                        if m + j >= n {
                            break;
                        }
                        acc += c * y.rows((m + j) * fo, fo);
                    }
                }
                x
            }
        }
    }
}

pub fn mult_op(sym: &PencilSymbol, n: usize) -> HardyOp {
    assert!(sym.a.is_square(), "pencil symbols act on one fiber");
    HardyOp { degree_bound: n, fiber_in: sym.a.ncols(), fiber_out: sym.a.nrows(), kind: HardyKind::Pencil(sym.clone()) }
}

pub fn shift(n: usize, fiber_dim: usize) -> HardyOp {
    HardyOp { degree_bound: n, fiber_in: fiber_dim, fiber_out: fiber_dim, kind: HardyKind::Shift }
}

pub fn analytic_toeplitz(coeffs: &[CMat], n: usize) -> HardyOp {
    assert!(!coeffs.is_empty(), "at least one Taylor coefficient is required");
    let (fo, fi) = coeffs[0].shape();
    assert!(coeffs.iter().all(|c| c.shape() == (fo, fi)), "Taylor coefficients must share a shape");
    HardyOp { degree_bound: n, fiber_in: fi, fiber_out: fo, kind: HardyKind::AnalyticToeplitz(coeffs.to_vec()) }
}

/// Rows of the interior subspace `{f : f_{N−1} = 0}` inside `offset ⊕ H²_N`.
pub fn interior_rows(offset: usize, n: usize, fiber_dim: usize) -> Range<usize> {
    offset..offset + n.saturating_sub(1) * fiber_dim
}

pub fn interior_projector(n: usize, fiber_dim: usize) -> HardyOp {
    let mut m = zeros(n * fiber_dim, n * fiber_dim);
    for i in interior_rows(0, n, fiber_dim) {
        m[(i, i)] = C64::new(1.0, 0.0);
    }
    HardyOp { degree_bound: n, fiber_in: fiber_dim, fiber_out: fiber_dim, kind: HardyKind::Dense(m) }
}

/// Orthogonal projector onto the span of `columns` (a subset of `H²_N(F)`).
pub fn column_space_projector(columns: &CMat, n: usize, fiber_dim: usize, rank_tol: f64) -> HardyOp {
    assert_eq!(columns.nrows(), n * fiber_dim, "columns do not live in H²_N");
    let p = if columns.ncols() == 0 {
        zeros(columns.nrows(), columns.nrows())
    } else {
        range_basis(columns, rank_tol).projector()
    };
    HardyOp { degree_bound: n, fiber_in: fiber_dim, fiber_out: fiber_dim, kind: HardyKind::Dense(p) }
}

/// Apply `I_N ⊗ m` to a stack of `N` coefficient blocks.
pub fn fiberwise(m: &CMat, x: &CMat, n: usize) -> CMat {
    let (r, c) = m.shape();
    assert_eq!(x.nrows(), n * c, "fiberwise: vector length is not N·fiber");
    let mut y = zeros(n * r, x.ncols());
    for k in 0..n {
        y.rows_mut(k * r, r).copy_from(&(m * x.rows(k * c, c)));
    }
    y
}

/// Pad with zero coefficients or drop the tail so the vector has `to` coefficient blocks.
pub fn resize_degree(x: &CMat, fiber_dim: usize, to: usize) -> CMat {
    let mut y = zeros(to * fiber_dim, x.ncols());
    let keep = x.nrows().min(to * fiber_dim);
    y.rows_mut(0, keep).copy_from(&x.rows(0, keep));
    y
}

/// Taylor coefficients of the product of two analytic symbols.
pub fn symbol_product(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    let (r, c) = (a[0].nrows(), b[0].ncols());
    let mut out = vec![zeros(r, c); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `‖JAᴴAJ − J‖` where `J` selects the interior basis vectors.
pub fn interior_isometry_residual(op: &dyn LinearOperator, interior: Range<usize>) -> f64 {
    let dim = op.ncols();
    let mut probe = zeros(dim, interior.len());
    for (j, i) in interior.clone().enumerate() {
        probe[(i, j)] = C64::new(1.0, 0.0);
    }
    let y = op.apply(&probe);
    fro(&(y.adjoint() * y - identity(interior.len())))
}

/// Columns `e_i, i ∈ rows`, of the identity on `C^dim`.
pub fn unit_columns(dim: usize, rows: Range<usize>) -> CMat {
    let mut m = zeros(dim, rows.len());
    for (j, i) in rows.enumerate() {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    m
}

/// `M ⊕ W` on `H²_N(F) ⊕ C^r`, with `W` dense. The Douglas-model operators have this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct HardySum {
    pub hardy: HardyOp,
    pub tail: CMat,
}

impl HardySum {
    pub fn new(hardy: HardyOp, tail: CMat) -> Self {
        assert!(tail.is_square(), "the tail block acts on one space");
        Self { hardy, tail }
    }

    pub fn layout(&self) -> Layout {
        Layout { head: 0, n: self.hardy.degree_bound, fiber: self.hardy.fiber_in, tail: self.tail.nrows() }
    }
}

impl LinearOperator for HardySum {
    fn nrows(&self) -> usize {
        self.hardy.dim_out() + self.tail.nrows()
    }

    fn ncols(&self) -> usize {
        self.hardy.dim_in() + self.tail.ncols()
    }

    fn apply(&self, x: &CMat) -> CMat {
        let k = self.hardy.dim_in();
        let (top, bottom) = (self.hardy.apply(&x.rows(0, k).into_owned()), &self.tail * x.rows(k, self.tail.ncols()));
        crate::linalg::vstack(&[&top, &bottom])
    }

    fn apply_adjoint(&self, y: &CMat) -> CMat {
        let k = self.hardy.dim_out();
        let top = self.hardy.apply_adjoint(&y.rows(0, k).into_owned());
        let bottom = self.tail.adjoint() * y.rows(k, self.tail.nrows());
        crate::linalg::vstack(&[&top, &bottom])
    }
}

/// Row layout `C^head ⊕ H²_N(F) ⊕ C^tail` of a dilation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub head: usize,
    pub n: usize,
    pub fiber: usize,
    pub tail: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.head + self.n * self.fiber + self.tail
    }

    /// Rows of the top coefficient `f_{N−1}`, the only place truncation is visible.
    pub fn top_rows(&self) -> Range<usize> {
        let end = self.head + self.n * self.fiber;
        end - self.fiber.min(end - self.head)..end
    }

    /// Every row except the top coefficient.
    pub fn interior(&self) -> Vec<usize> {
        let top = self.top_rows();
        (0..self.dim()).filter(|i| !top.contains(i)).collect()
    }

    /// Columns of the identity selecting the interior.
    pub fn interior_columns(&self) -> CMat {
        select_columns(self.dim(), &self.interior())
    }
}

/// Columns `e_i, i ∈ rows`, for an arbitrary index list.
pub fn select_columns(dim: usize, rows: &[usize]) -> CMat {
    let mut m = zeros(dim, rows.len());
    for (j, &i) in rows.iter().enumerate() {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    m
}

/// Keep only the listed rows.
pub fn select_rows(m: &CMat, rows: &[usize]) -> CMat {
    m.select_rows(rows.iter())
}
