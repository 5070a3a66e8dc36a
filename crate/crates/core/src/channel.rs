//! Finite Kraus ensembles and the channel `φ(X) = Σ p_i v_i X v_i*`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, hermitian_eigen, identity, op_norm, real, svd, CMatrix, DensityMatrix, C64};
use crate::tol;

/// One weighted Kraus operator.
#[derive(Debug, Clone)]
pub struct KrausItem {
    pub weight: f64,
    pub matrix: CMatrix,
}

impl KrausItem {
    pub fn new(weight: f64, matrix: CMatrix) -> Self {
        KrausItem { weight, matrix }
    }
}

/// Finite weighted family `{(p_i, v_i)}` standing in for the measure on
/// Kraus operators.
///
/// Construction checks shapes and weights only; stochasticity is checked
/// by [`KrausEnsemble::validate`].
#[derive(Debug, Clone)]
pub struct KrausEnsemble {
    dim: usize,
    items: Vec<KrausItem>,
}

impl KrausEnsemble {
    pub fn new(items: Vec<KrausItem>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Domain("ensemble needs at least one item".into()))?;
        let dim = first.matrix.nrows();
        if dim == 0 {
            return Err(Error::Domain("zero-dimensional Kraus operator".into()));
        }
        for it in &items {
            check_dim(dim, it.matrix.nrows())?;
            check_dim(dim, it.matrix.ncols())?;
            if !(it.weight > 0.0) || !it.weight.is_finite() {
                return Err(Error::Domain(format!("weight {} not positive", it.weight)));
            }
            if !crate::linalg::is_finite(&it.matrix) {
                return Err(Error::Numeric("non-finite Kraus entry".into()));
            }
        }
        Ok(KrausEnsemble { dim, items })
    }

    /// Unit weights.
    pub fn from_matrices(ms: Vec<CMatrix>) -> Result<Self> {
        Self::new(ms.into_iter().map(|m| KrausItem::new(1.0, m)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[KrausItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `Σ p_i v_i* v_i`.
    pub fn gram_sum(&self) -> CMatrix {
        self.items.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, it| {
            acc + it.matrix.adjoint() * &it.matrix * real(it.weight)
        })
    }

    /// `‖Σ p_i v_i* v_i − Id‖` in operator norm.
    pub fn stochasticity_residual(&self) -> Result<f64> {
        op_norm(&(self.gram_sum() - identity(self.dim)))
    }

    /// Passes iff the stochasticity residual is within [`tol::STOCHASTIC`];
    /// returns the residual either way.
    pub fn validate(&self) -> Result<f64> {
        let residual = self.stochasticity_residual()?;
        if residual <= tol::STOCHASTIC {
            Ok(residual)
        } else {
            Err(Error::Stochasticity { residual })
        }
    }

    /// `φ(x) = Σ p_i v_i x v_i*`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, x.nrows())?;
        check_dim(self.dim, x.ncols())?;
        Ok(self.items.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, it| {
            acc + &it.matrix * x * it.matrix.adjoint() * real(it.weight)
        }))
    }

    /// Heisenberg-picture map `a ↦ Σ p_i v_i* a v_i`.
    pub fn apply_dual(&self, a: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, a.nrows())?;
        check_dim(self.dim, a.ncols())?;
        Ok(self.items.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, it| {
            acc + it.matrix.adjoint() * a * &it.matrix * real(it.weight)
        }))
    }

    /// The `d² × d²` matrix of `φ` acting on column-major `vec(X)`:
    /// `Σ p_i conj(v_i) ⊗ v_i`.
    pub fn superoperator(&self) -> CMatrix {
        let d2 = self.dim * self.dim;
        self.items.iter().fold(CMatrix::zeros(d2, d2), |acc, it| {
            acc + it.matrix.map(|z| z.conj()).kronecker(&it.matrix) * real(it.weight)
        })
    }
}

/// Spectral summary of the channel.
#[derive(Debug, Clone)]
pub struct ChannelReport {
    pub fixed_point: DensityMatrix,
    /// Number of superoperator eigenvalues within [`tol::PERIPHERAL`] of 1.
    pub fixed_point_multiplicity: usize,
    pub min_fixed_point_eigenvalue: f64,
    pub is_irreducible: bool,
    /// The smallest eigenvalue of the fixed point falls in
    /// `[1e-10, 1e-8]`, where the full-rank verdict cannot be trusted.
    pub rank_ambiguous: bool,
    /// Peripheral eigenvalue count; only defined for irreducible channels.
    pub period: Option<usize>,
    /// `1 − max |λ|` over the non-peripheral spectrum (1 if there is none).
    pub spectral_gap: f64,
    /// Superoperator eigenvalues sorted by decreasing modulus.
    pub spectrum: Vec<C64>,
}

/// Superoperator eigenvalues sorted by decreasing modulus.
pub fn superoperator_spectrum(e: &KrausEnsemble) -> Result<Vec<C64>> {
    let s = e.superoperator();
    let schur = Schur::try_new(s, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("no eigenvalues from Schur form".into()))?;
    let mut v: Vec<C64> = ev.iter().copied().collect();
    v.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
    Ok(v)
}

/// Fixed point, irreducibility and (for irreducible channels) the period.
pub fn analyze(e: &KrausEnsemble) -> Result<ChannelReport> {
    let d = e.dim();
    let spectrum = superoperator_spectrum(e)?;
    let multiplicity = spectrum
        .iter()
        .filter(|l| (*l - real(1.0)).norm() <= tol::PERIPHERAL)
        .count()
        .max(1);
    let fixed_point = fixed_point_state(e, multiplicity)?;
    let (ev, _) = hermitian_eigen(fixed_point.matrix())?;
    let min_ev = ev[0];
    let is_irreducible = multiplicity == 1 && min_ev > tol::FULL_RANK;
    let rank_ambiguous =
        multiplicity == 1 && (tol::AMBIGUOUS_RANK..=tol::FULL_RANK).contains(&min_ev);
    let peripheral = spectrum
        .iter()
        .filter(|l| l.norm() >= 1.0 - tol::PERIPHERAL)
        .count();
    let spectral_gap = spectrum
        .iter()
        .map(|l| l.norm())
        .find(|&m| m < 1.0 - tol::PERIPHERAL)
        .map_or(1.0, |m| 1.0 - m);
    debug_assert!(d >= 1);
    Ok(ChannelReport {
        fixed_point,
        fixed_point_multiplicity: multiplicity,
        min_fixed_point_eigenvalue: min_ev,
        is_irreducible,
        rank_ambiguous,
        period: is_irreducible.then_some(peripheral),
        spectral_gap,
        spectrum,
    })
}

/// Fixed-point part of [`analyze`].
pub fn fixed_point(e: &KrausEnsemble) -> Result<ChannelReport> {
    analyze(e)
}

/// Size of the peripheral spectrum of an irreducible channel.
pub fn period(e: &KrausEnsemble) -> Result<usize> {
    let report = analyze(e)?;
    report.period.ok_or_else(|| {
        Error::Precondition("period is only defined for irreducible channels".into())
    })
}

/// A fixed state of `φ` from the null space of `S − Id`.
///
/// The combination of null vectors with maximal trace is taken, then its
/// Hermitian positive part (itself fixed for positive trace-preserving
/// maps) is normalized.
fn fixed_point_state(e: &KrausEnsemble, multiplicity: usize) -> Result<DensityMatrix> {
    let d = e.dim();
    let s = e.superoperator() - identity(d * d);
    let dec = svd(&s)?;
    let k = dec.values.len();
    let mut x = crate::linalg::CVector::zeros(d * d);
    for c in (k - multiplicity)..k {
        let col = dec.right.column(c);
        let tr: C64 = (0..d).map(|i| col[i + i * d]).sum();
        x += col * tr.conj();
    }
    let m = CMatrix::from_fn(d, d, |i, j| x[i + j * d]);
    let tr = m.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::Numeric("fixed point has zero trace".into()));
    }
    let m = m / tr;
    let h = (&m + m.adjoint()) * real(0.5);
    let (ev, vecs) = hermitian_eigen(&h)?;
    let mut pos = CMatrix::zeros(d, d);
    for (i, &l) in ev.iter().enumerate() {
        if l > 0.0 {
            let v = vecs.column(i);
            pos += v * v.adjoint() * real(l);
        }
    }
    DensityMatrix::normalize(pos)
}
