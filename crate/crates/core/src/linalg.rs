//! Dense complex linear algebra: SVD-backed norms, polar factors, rays,
//! subspaces and density matrices.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const EIGEN_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Builds a matrix from row-major rows of complex entries.
pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if !is_finite(a) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// `a = left · diag(values) · right*`, singular values sorted descending.
/// Thin: `left` is `m × k`, `right` is `n × k` with `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: CMatrix,
    pub values: Vec<f64>,
    pub right: CMatrix,
}

/// Thin SVD by one-sided Jacobi rotations, singular values descending.
///
/// nalgebra's complex SVD misplaces clustered singular values by up to
/// `1e-3` (block-scaled unitaries trigger it); Jacobi keeps high relative
/// accuracy at these sizes.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    ensure_finite(a)?;
    if a.nrows() < a.ncols() {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            left: t.right,
            values: t.values,
            right: t.left,
        });
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut g = a.clone();
    let mut v = identity(n);
    let tol_pair = f64::EPSILON * m as f64;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let mag = gamma.norm();
                if mag <= tol_pair * (alpha * beta).sqrt() || mag == 0.0 {
                    continue;
                }
                rotated = true;
                // Phase-align column q, then a real rotation zeroes the pair.
                let phase = Complex64::new(gamma.re / mag, -gamma.im / mag);
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase;
                        mat[(i, p)] = x * c - y * s;
                        mat[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("SVD did not converge".into()));
    }
    let norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(core::cmp::Ordering::Equal));
    let values: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let right = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    let mut left = CMatrix::zeros(m, n);
    let floor = values[0] * f64::EPSILON * m as f64;
    let mut filled = 0;
    for (c, &i) in order.iter().enumerate() {
        if values[c] <= floor || values[c] == 0.0 {
            break;
        }
        left.set_column(c, &(g.column(i) / real(values[c])));
        filled += 1;
    }
    // Null directions: complete the left factor from the standard basis,
    // each time with the vector least explained by the columns so far.
    while filled < n {
        let mut best = CVector::zeros(m);
        for k in 0..m {
            let mut x = CVector::zeros(m);
            x[k] = real(1.0);
            for _ in 0..2 {
                for c in 0..filled {
                    let col = left.column(c).into_owned();
                    x -= &col * col.dotc(&x);
                }
            }
            if x.norm() > best.norm() {
                best = x;
            }
        }
        let nb = best.norm();
        left.set_column(filled, &(best / real(nb)));
        filled += 1;
    }
    Ok(Svd {
        left,
        values,
        right,
    })
}

/// Operator (spectral) norm.
pub fn op_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.values[0])
}

/// Number of singular values above `rel · σ_max`.
pub fn numerical_rank(values: &[f64], rel: f64) -> usize {
    match values.first() {
        Some(&top) if top > 0.0 => values.iter().filter(|&&s| s > rel * top).count(),
        _ => 0,
    }
}

/// Hermitian eigendecomposition; eigenvalues ascending with matching columns.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    ensure_finite(a)?;
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let h = (a + a.adjoint()) * real(0.5);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Polar decomposition `a = u · p` with `p = √(a*a)` and `u` unitary.
///
/// For singular `a` the unitary factor is completed from the SVD,
/// `u = X·Y*` where `a = X·Σ·Y*`.
pub fn polar_decompose(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let s = svd(a)?;
    let u = &s.left * s.right.adjoint();
    let sigma = CMatrix::from_diagonal(&DVector::from_iterator(
        s.values.len(),
        s.values.iter().map(|&x| real(x)),
    ));
    let p = &s.right * sigma * s.right.adjoint();
    Ok((u, p))
}

/// `‖⋀^p a‖`: the product of the `p` largest singular values.
pub fn wedge_norm(a: &CMatrix, p: usize) -> Result<f64> {
    let k = a.nrows().min(a.ncols());
    if p == 0 || p > k {
        return Err(Error::Domain(format!("wedge order {p} outside 1..={k}")));
    }
    Ok(svd(a)?.values[..p].iter().product())
}

/// `‖x_1 ∧ … ∧ x_p‖ = √det(⟨x_i, x_j⟩)`.
pub fn wedge_of_vectors(vectors: &[CVector]) -> f64 {
    let p = vectors.len();
    if p == 0 {
        return 1.0;
    }
    let gram = CMatrix::from_fn(p, p, |i, j| vectors[i].dotc(&vectors[j]));
    gram.determinant().re.max(0.0).sqrt()
}

/// Distance from a vector to a subspace evaluated as the wedge quotient
/// `‖x ∧ y_1 ∧ … ∧ y_p‖ / ‖y_1 ∧ … ∧ y_p‖` for the basis `y_i`.
pub fn wedge_distance(x: &CVector, q: &Subspace) -> Result<f64> {
    let x = unit(x)?;
    check_dim(q.ambient_dim(), x.len())?;
    let ys: Vec<CVector> = q.basis.column_iter().map(|c| c.into_owned()).collect();
    let mut all = Vec::with_capacity(ys.len() + 1);
    all.push(x);
    all.extend(ys.iter().cloned());
    Ok(wedge_of_vectors(&all) / wedge_of_vectors(&ys))
}

/// `‖x − π_q x‖` for the normalized `x`.
pub fn dist_to_subspace(x: &CVector, q: &Subspace) -> Result<f64> {
    let x = unit(x)?;
    check_dim(q.ambient_dim(), x.len())?;
    let proj = &q.basis * (q.basis.adjoint() * &x);
    Ok((&x - proj).norm())
}

/// Gap metric `‖π_{q1} − π_{q2}‖` between subspaces of one Grassmannian.
pub fn gap_distance(q1: &Subspace, q2: &Subspace) -> Result<f64> {
    check_dim(q1.ambient_dim(), q2.ambient_dim())?;
    check_dim(q1.dim(), q2.dim())?;
    let diff = q1.projector() - q2.projector();
    Ok(op_norm(&diff)?.clamp(0.0, 1.0))
}

/// Fubini–Study distance `√(1 − |⟨x, y⟩|²)`.
pub fn fubini_distance(x: &Ray, y: &Ray) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(fubini_unchecked(x, y))
}

#[inline]
pub(crate) fn fubini_unchecked(x: &Ray, y: &Ray) -> f64 {
    // Rejection norm; `sqrt(1 - |<x,y>|^2)` loses half the digits near 0.
    let ov = x.v.dotc(&y.v);
    (&y.v - &x.v * ov).norm().min(1.0)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

fn unit(x: &CVector) -> Result<CVector> {
    let n = x.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain("zero or non-finite vector".into()));
    }
    Ok(x / real(n))
}

/// Unit vector representing a point of projective space.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    v: CVector,
}

impl Ray {
    /// Normalizes `v`; rejects zero vectors.
    pub fn new(v: CVector) -> Result<Self> {
        Ok(Ray { v: unit(&v)? })
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(entries))
    }

    /// The `k`-th standard basis ray of `ℂ^d`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = CVector::zeros(d);
        v[k] = real(1.0);
        Ray { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.v
    }

    pub fn projector(&self) -> CMatrix {
        &self.v * self.v.adjoint()
    }

    /// `m · x̂`, normalized.
    pub fn map(&self, m: &CMatrix) -> Result<Ray> {
        check_dim(m.ncols(), self.dim())?;
        Ray::new(m * &self.v)
    }

    /// Same ray up to [`tol::RAY_EQ`] in the Fubini metric.
    pub fn same_as(&self, other: &Ray) -> bool {
        self.dim() == other.dim() && fubini_unchecked(self, other) <= tol::RAY_EQ
    }
}

/// Subspace of `ℂ^d` held through an orthonormal basis in canonical form.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    /// Accepts a column-orthonormal `d × k` basis.
    pub fn from_orthonormal(basis: CMatrix) -> Result<Self> {
        ensure_finite(&basis)?;
        let k = basis.ncols();
        let err = (basis.adjoint() * &basis - identity(k)).norm();
        if err > tol::BASIS {
            return Err(Error::Domain(format!(
                "basis not orthonormal (residual {err:e})"
            )));
        }
        Ok(Self::canonical(&basis))
    }

    /// Span of the columns of `vectors`, which must have full column rank
    /// `k` at the relative rank tolerance.
    pub fn span(vectors: &CMatrix) -> Result<Self> {
        let k = vectors.ncols();
        Self::span_top(vectors, k)
    }

    /// Span of the top `k` left singular vectors of `vectors`; fails if the
    /// numerical rank is below `k`.
    pub fn span_top(vectors: &CMatrix, k: usize) -> Result<Self> {
        let s = svd(vectors)?;
        let rank = numerical_rank(&s.values, tol::RANK_REL);
        if rank < k {
            return Err(Error::Rank {
                required: k,
                found: rank,
            });
        }
        Ok(Self::canonical(&s.left.columns(0, k).into_owned()))
    }

    /// Coordinate subspace spanned by `e_i`, `i ∈ indices`.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let mut b = CMatrix::zeros(d, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= d {
                return Err(Error::Domain(format!("index {i} outside dimension {d}")));
            }
            b[(i, c)] = real(1.0);
        }
        Self::from_orthonormal(b)
    }

    pub fn whole(d: usize) -> Self {
        Subspace { basis: identity(d) }
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Image `v · D`, which must keep the dimension of `D`.
    pub fn image(&self, v: &CMatrix) -> Result<Subspace> {
        check_dim(v.ncols(), self.ambient_dim())?;
        Subspace::span(&(v * &self.basis))
    }

    /// Equal within the deduplication threshold of the gap metric.
    pub fn same_as(&self, other: &Subspace, threshold: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && self.dim() == other.dim()
            && gap_distance(self, other).is_ok_and(|g| g <= threshold)
    }

    /// Deterministic basis of the span: pivoted Gram–Schmidt applied to
    /// the projected standard basis vectors. Coordinate subspaces get
    /// their coordinate vectors back.
    fn canonical(basis: &CMatrix) -> Self {
        let d = basis.nrows();
        let k = basis.ncols();
        let p = basis * basis.adjoint();
        let mut chosen: Vec<CVector> = Vec::with_capacity(k);
        let mut used = alloc::vec![false; d];
        for _ in 0..k {
            let mut best: Option<(usize, CVector, f64)> = None;
            for j in 0..d {
                if used[j] {
                    continue;
                }
                let mut r: CVector = p.column(j).into_owned();
                for q in &chosen {
                    let c = q.dotc(&r);
                    r -= q * c;
                }
                let n = r.norm();
                if best.as_ref().is_none_or(|(_, _, bn)| n > *bn + 1e-9) {
                    best = Some((j, r, n));
                }
            }
            let (j, r, n) = best.expect("subspace dimension at most ambient dimension");
            used[j] = true;
            chosen.push(r / real(n));
        }
        let mut b = CMatrix::zeros(d, k);
        for (c, q) in chosen.iter().enumerate() {
            b.set_column(c, q);
        }
        Subspace { basis: b }
    }
}

/// Positive semidefinite unit-trace Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and trace within [`tol::DENSITY`].
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_finite(&m)?;
        check_dim(m.nrows(), m.ncols())?;
        let herm = (&m - m.adjoint()).norm();
        if herm > tol::DENSITY {
            return Err(Error::Domain(format!("not Hermitian ({herm:e})")));
        }
        let tr = m.trace();
        if (tr - real(1.0)).norm() > tol::DENSITY {
            return Err(Error::Domain(format!("trace {} != 1", tr.re)));
        }
        let (ev, _) = hermitian_eigen(&m)?;
        if ev[0] < -tol::DENSITY {
            return Err(Error::Domain(format!("negative eigenvalue {}", ev[0])));
        }
        Ok(DensityMatrix { m })
    }

    /// Hermitizes and rescales a positive matrix to unit trace.
    pub fn normalize(m: CMatrix) -> Result<Self> {
        ensure_finite(&m)?;
        check_dim(m.nrows(), m.ncols())?;
        let h = (&m + m.adjoint()) * real(0.5);
        let tr = h.trace().re;
        if !(tr > 0.0) {
            return Err(Error::Numeric("non-positive trace".into()));
        }
        Ok(DensityMatrix { m: h / real(tr) })
    }

    pub fn pure(x: &Ray) -> Self {
        DensityMatrix { m: x.projector() }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            m: identity(d) / real(d as f64),
        }
    }

    /// `π_D / dim D`.
    pub fn uniform_on(q: &Subspace) -> Self {
        DensityMatrix {
            m: q.projector() / real(q.dim() as f64),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.m)?.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }
}
