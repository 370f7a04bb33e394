//! Multi-index combinatorics, symmetric-tensor coordinates and dense subspace
//! algebra over `f64` and `Complex64`.
//!
//! Symmetric tensors in `V ⊙^m R^n` are stored in monomial coordinates: the
//! component `(j, β)` holds the coefficient that multiplies `∂^β` (or `ξ^β`)
//! directly, with no multinomial weights. Components are laid out `j`-major,
//! i.e. `j * |SymIndexSet| + rank(β)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative singular-value threshold for ranks, images and kernels.
pub const RANK_TOL: f64 = 1e-10;

/// A multi-index `α ∈ N^n`.
///
/// Ordering is graded lexicographic: first by `|α|`, then lexicographically
/// with larger leading entries first, so `(2,0) < (1,1) < (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize) -> Self {
        let mut e = vec![0; n];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = α_1 + ... + α_n`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn add_unit(&self, axis: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[axis] += 1;
        MultiIndex(e)
    }

    /// `α - β` if `β ≤ α` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// `Π binom(α_i, β_i)`; zero unless `β ≤ α`.
    pub fn binomial(&self, beta: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(&beta.0)
            .map(|(&a, &b)| binomial(a as usize, b as usize) as f64)
            .product()
    }

    /// Number of axes with a nonzero entry.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    /// Evaluates the monomial `x^α`.
    pub fn monomial<T: ComplexField>(&self, x: &[T]) -> T {
        let mut acc = T::one();
        for (xi, &a) in x.iter().zip(&self.0) {
            for _ in 0..a {
                acc *= xi.clone();
            }
        }
        acc
    }

    /// All `γ ≤ α`, in graded-lex order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.dim()))];
        for &a in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
            for prefix in &out {
                for g in 0..=a {
                    let mut e = prefix.0.clone();
                    e.push(g);
                    next.push(MultiIndex(e));
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// All `α ∈ N^n` with `|α| = m`, in graded-lex order.
///
/// # Panics
/// If `n == 0`.
pub fn multiindex_enumerate(n: usize, m: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "multi-indices need at least one axis");
    let mut out = Vec::with_capacity(binomial(n + m - 1, m) as usize);
    let mut buf = vec![0u32; n];
    fill(&mut buf, 0, m as u32, &mut out);
    out
}

fn fill(buf: &mut Vec<u32>, axis: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if axis + 1 == buf.len() {
        buf[axis] = remaining;
        out.push(MultiIndex(buf.clone()));
        return;
    }
    for first in (0..=remaining).rev() {
        buf[axis] = first;
        fill(buf, axis + 1, remaining - first, out);
    }
}

/// All `α ∈ N^n` with `|α| ≤ d`, in graded-lex order.
pub fn multiindices_up_to(n: usize, d: usize) -> Vec<MultiIndex> {
    (0..=d).flat_map(|m| multiindex_enumerate(n, m)).collect()
}

/// The canonically ordered index set of `⊙^m R^n`, with rank/unrank maps.
#[derive(Clone, Debug)]
pub struct SymIndexSet {
    n: usize,
    m: usize,
    indices: Vec<MultiIndex>,
    ranks: HashMap<MultiIndex, usize>,
}

impl SymIndexSet {
    pub fn new(n: usize, m: usize) -> Self {
        let indices = multiindex_enumerate(n, m);
        let ranks = indices
            .iter()
            .enumerate()
            .map(|(i, b)| (b.clone(), i))
            .collect();
        SymIndexSet {
            n,
            m,
            indices,
            ranks,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn rank(&self, beta: &MultiIndex) -> Option<usize> {
        self.ranks.get(beta).copied()
    }

    pub fn unrank(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }
}

/// `a ⊗^m ν` in monomial coordinates: component `(j, β)` equals `a_j ν^β`.
pub fn sym_power<T: ComplexField>(a: &[T], nu: &[T], m: usize) -> Result<Vec<T>> {
    if nu.is_empty() || nu.iter().all(|x| x.is_zero()) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let set = SymIndexSet::new(nu.len(), m);
    let powers: Vec<T> = set.indices().iter().map(|b| b.monomial(nu)).collect();
    let mut out = Vec::with_capacity(a.len() * set.len());
    for aj in a {
        out.extend(powers.iter().map(|p| aj.clone() * p.clone()));
    }
    Ok(out)
}

pub fn promote(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Left singular vectors, singular values and right singular vectors (as
/// columns). Rows are zero-padded so the right factor is always square.
fn full_svd<T>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = m.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").adjoint();
    let s = svd.singular_values.iter().copied().collect();
    (u, s, v)
}

fn threshold(s: &[f64], rel_tol: f64) -> f64 {
    let smax = s.iter().copied().fold(0.0, f64::max);
    rel_tol * smax
}

/// Numerical rank at relative tolerance [`RANK_TOL`].
pub fn rank<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let tol = threshold(s.as_slice(), RANK_TOL);
    s.iter().filter(|&&x| x > tol && x > 0.0).count()
}

/// Smallest singular value of a `rows × cols` matrix viewed as a map on
/// `cols`-space, i.e. `min_{|v|=1} |M v|` (zero whenever `rows < cols`).
pub fn min_gain<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return f64::INFINITY;
    }
    if rows < cols {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest singular value together with a unit right singular vector.
pub fn min_right_singular<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> (f64, DVector<T>) {
    let (rows, cols) = m.shape();
    let (_, s, v) = full_svd(m);
    let mut best = 0;
    for i in 1..s.len() {
        if s[i] < s[best] {
            best = i;
        }
    }
    let sigma = if rows < cols { 0.0 } else { s[best] };
    (sigma, v.column(best).into_owned())
}

/// A linear subspace given by an orthonormal basis (columns).
#[derive(Clone, Debug)]
pub struct Subspace<T: ComplexField<RealField = f64>> {
    ambient: usize,
    basis: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> Subspace<T> {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    /// Span of the given columns.
    pub fn span(columns: &DMatrix<T>) -> Self {
        subspace_image(columns)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projector `Q Q*`.
    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.adjoint()
    }

    /// `|v - P v|`.
    pub fn residual(&self, v: &DVector<T>) -> f64 {
        let coeffs = self.basis.adjoint() * v;
        (v - &self.basis * coeffs).norm()
    }

    /// Projector into the orthogonal complement, `I - Q Q*`.
    pub fn complement_projector(&self) -> DMatrix<T> {
        DMatrix::identity(self.ambient, self.ambient) - self.projector()
    }

    /// Spectral norm of the projector difference (the gap between subspaces).
    pub fn distance(&self, other: &Self) -> f64 {
        let d = self.projector() - other.projector();
        if d.is_empty() {
            return 0.0;
        }
        d.singular_values().iter().copied().fold(0.0, f64::max)
    }

    /// Largest residual of this subspace's basis vectors against `other`.
    pub fn excess_over(&self, other: &Self) -> f64 {
        (0..self.dim())
            .map(|i| other.residual(&self.basis.column(i).into_owned()))
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the column space.
pub fn subspace_image<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Subspace<T> {
    let rows = m.nrows();
    if m.is_empty() {
        return Subspace::zero(rows);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let s = svd.singular_values.as_slice();
    let tol = threshold(s, RANK_TOL);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > tol && s[i] > 0.0).collect();
    let mut basis = DMatrix::zeros(rows, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    Subspace {
        ambient: rows,
        basis,
    }
}

/// Orthonormal basis of the null space at relative tolerance `rel_tol`.
pub fn kernel_with_tol<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rel_tol: f64) -> Subspace<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Subspace::zero(0);
    }
    if rows == 0 {
        return Subspace::full(cols);
    }
    let (_, s, v) = full_svd(m);
    let tol = threshold(&s, rel_tol);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= tol).collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v.column(i));
    }
    Subspace {
        ambient: cols,
        basis,
    }
}

pub fn kernel<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Subspace<T> {
    kernel_with_tol(m, RANK_TOL)
}

/// Null space over `C`.
pub fn complex_kernel(m: &DMatrix<Complex64>) -> Subspace<Complex64> {
    kernel(m)
}

/// `S1 ∩ S2`, computed as the common kernel of both complement projectors.
pub fn subspace_intersect<T: ComplexField<RealField = f64>>(
    a: &Subspace<T>,
    b: &Subspace<T>,
) -> Result<Subspace<T>> {
    if a.ambient != b.ambient {
        return Err(Error::DimensionMismatch {
            what: "subspace intersection",
            expected: a.ambient,
            found: b.ambient,
        });
    }
    let n = a.ambient;
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&a.complement_projector());
    stacked.view_mut((n, 0), (n, n)).copy_from(&b.complement_projector());
    let (_, s, v) = full_svd(&stacked);
    let tol = threshold(&s, RANK_TOL);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= tol).collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v.column(i));
    }
    Ok(Subspace { ambient: n, basis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_small_cases() {
        assert_eq!(multiindex_enumerate(2, 0), vec![MultiIndex::zeros(2)]);
        let two: Vec<Vec<u32>> = multiindex_enumerate(2, 2)
            .into_iter()
            .map(|a| a.0)
            .collect();
        assert_eq!(two, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        // stars and bars
        for n in 1..5 {
            for m in 0..5 {
                assert_eq!(
                    multiindex_enumerate(n, m).len() as u64,
                    binomial(n + m - 1, m)
                );
            }
        }
        assert_eq!(multiindex_enumerate(3, 2).len(), 6);
    }

    #[test]
    fn enumeration_matches_ordering() {
        let list = multiindices_up_to(3, 4);
        let mut sorted = list.clone();
        sorted.sort();
        assert_eq!(list, sorted);
    }

    #[test]
    fn rank_unrank_bijection() {
        let set = SymIndexSet::new(4, 3);
        for i in 0..set.len() {
            assert_eq!(set.rank(set.unrank(i)), Some(i));
        }
    }

    #[test]
    fn sym_power_examples() {
        let p = sym_power(&[1.0], &[1.0, 0.0], 1).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = sym_power(&[1.0, 0.0], &[s, s], 2).unwrap();
        let set = SymIndexSet::new(2, 2);
        let r = set.rank(&MultiIndex::new(vec![1, 1])).unwrap();
        assert!((p[r] - 0.5).abs() < 1e-15);

        let p = sym_power(&[0.0, 0.0], &[0.3, -0.2], 3).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));

        assert!(sym_power(&[1.0], &[0.0, 0.0], 1).is_err());
    }

    #[test]
    fn image_examples() {
        assert_eq!(subspace_image(&DMatrix::<f64>::identity(3, 3)).dim(), 3);
        assert_eq!(subspace_image(&DMatrix::<f64>::zeros(3, 3)).dim(), 0);
        let mut e = DMatrix::<f64>::zeros(3, 3);
        e[(0, 0)] = 1.0;
        let s = subspace_image(&e);
        assert_eq!(s.dim(), 1);
        assert!((s.basis()[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn intersect_examples() {
        let e = DMatrix::<f64>::identity(3, 3);
        let s12 = Subspace::span(&e.columns(0, 2).into_owned());
        let s23 = Subspace::span(&e.columns(1, 2).into_owned());
        let i = subspace_intersect(&s12, &s23).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.distance(&Subspace::span(&e.columns(1, 1).into_owned())) < 1e-12);
        let ii = subspace_intersect(&s12, &s12).unwrap();
        assert!(ii.distance(&s12) < 1e-12);
        assert!(subspace_intersect(&s12, &Subspace::<f64>::full(4)).is_err());
    }

    #[test]
    fn complex_kernel_examples() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(complex_kernel(&DMatrix::identity(2, 2)).dim(), 0);
        let m = DMatrix::from_row_slice(2, 2, &[one, i, i, -one]);
        let k = complex_kernel(&m);
        assert_eq!(k.dim(), 1);
        let v = k.basis().column(0).into_owned();
        assert!((&m * v).norm() < 1e-12);
        assert_eq!(complex_kernel(&DMatrix::zeros(2, 2)).dim(), 2);
    }

    #[test]
    fn kernel_of_wide_matrix_is_complete() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let k = kernel(&m);
        assert_eq!(k.dim(), 2);
        assert_eq!(rank(&m) + k.dim(), 3);
    }
}
