//! Dark subspaces: certification through the stabilized span of
//! `{w* w}`, discovery from long trajectories, the induced Markov chain on
//! maximal dark subspaces, its invariant measure and the decay sequence
//! `s(n)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{self, KrausEnsemble};
use crate::error::{Error, Result};
use crate::linalg::{
    check_dim, gap_distance, hermitian_eigen, identity, numerical_rank, real, svd, CMatrix,
    Subspace,
};
use crate::rng::{sample_index, stream};
use crate::tol;
use crate::trajectory::{estimate_dark, sample_chaotic_word, TAU_RANK};

/// Orthonormal (Frobenius) basis of `span_ℝ{w* w : w a finite word}`.
#[derive(Debug, Clone)]
pub struct StabilizedSpan {
    pub basis: Vec<CMatrix>,
    /// Dimension after each closure round, starting with `span{v_i* v_i}`.
    pub history: Vec<usize>,
}

fn frob_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Orthogonalizes `a` against `basis` (two Gram-Schmidt passes) and
/// returns the normalized remainder if it is not negligible.
fn reduce(basis: &[CMatrix], a: CMatrix) -> Option<CMatrix> {
    let scale = a.norm();
    if scale == 0.0 {
        return None;
    }
    let mut r = a;
    for _ in 0..2 {
        for b in basis {
            let c = frob_inner(b, &r);
            r -= b * real(c);
        }
    }
    let n = r.norm();
    (n > tol::BASIS * scale.max(1.0)).then(|| r / real(n))
}

/// Closes `span{v_i* v_i}` under `A ↦ v_i* A v_i`.
pub fn stabilized_span(e: &KrausEnsemble) -> StabilizedSpan {
    let d = e.dim();
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut frontier: Vec<CMatrix> = Vec::new();
    for it in e.items() {
        let g = it.matrix.adjoint() * &it.matrix;
        if let Some(b) = reduce(&basis, (&g + g.adjoint()) * real(0.5)) {
            basis.push(b.clone());
            frontier.push(b);
        }
    }
    let mut history = alloc::vec![basis.len()];
    while !frontier.is_empty() && basis.len() < d * d {
        let mut next = Vec::new();
        for a in &frontier {
            for it in e.items() {
                let m = it.matrix.adjoint() * a * &it.matrix;
                if let Some(b) = reduce(&basis, (&m + m.adjoint()) * real(0.5)) {
                    basis.push(b.clone());
                    next.push(b);
                }
            }
        }
        frontier = next;
        history.push(basis.len());
    }
    StabilizedSpan { basis, history }
}

/// Outcome of a darkness test.
#[derive(Debug, Clone)]
pub struct DarkCertificate {
    pub subspace: Subspace,
    /// `max_A ‖π_D A π_D − tr(π_D A)/r · π_D‖` over the span basis.
    pub residual: f64,
    pub words_tested: usize,
    pub span_dimension_history: Vec<usize>,
    pub certified: bool,
}

/// `‖π_D A π_D − tr(π_D A)/r · π_D‖` for Hermitian `A`.
pub fn compression_residual(q: &Subspace, a: &CMatrix) -> Result<f64> {
    check_dim(q.ambient_dim(), a.nrows())?;
    let b = q.basis();
    let c = b.adjoint() * a * b;
    let r = q.dim();
    let mean = c.trace() / real(r as f64);
    let dev = c - identity(r) * mean;
    let (vals, _) = hermitian_eigen(&dev)?;
    Ok(vals.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Reusable darkness tester for one ensemble.
#[derive(Debug, Clone)]
pub struct DarkTester {
    span: StabilizedSpan,
    dim: usize,
}

impl DarkTester {
    pub fn new(e: &KrausEnsemble) -> Self {
        DarkTester {
            span: stabilized_span(e),
            dim: e.dim(),
        }
    }

    pub fn span(&self) -> &StabilizedSpan {
        &self.span
    }

    pub fn certify(&self, q: &Subspace) -> Result<DarkCertificate> {
        check_dim(self.dim, q.ambient_dim())?;
        let mut residual = 0.0f64;
        for a in &self.span.basis {
            residual = residual.max(compression_residual(q, a)?);
        }
        Ok(DarkCertificate {
            subspace: q.clone(),
            residual,
            words_tested: self.span.basis.len(),
            span_dimension_history: self.span.history.clone(),
            certified: residual <= tol::DARK,
        })
    }
}

pub fn is_dark(q: &Subspace, e: &KrausEnsemble) -> Result<DarkCertificate> {
    DarkTester::new(e).certify(q)
}

/// Certified maximal dark subspaces found by discovery.
#[derive(Debug, Clone)]
pub struct DarkAtlas {
    pub r_m: usize,
    pub representatives: Vec<Subspace>,
    pub discovery_seeds: Vec<u64>,
}

impl DarkAtlas {
    /// Index of the representative within `threshold` of `q`.
    pub fn locate(&self, q: &Subspace, threshold: f64) -> Option<usize> {
        self.representatives.iter().position(|d| d.same_as(q, threshold))
    }
}

/// Default trajectory length for discovery probes.
pub const DEFAULT_CHAIN_LEN: usize = 4000;

/// Runs `n_probes` chaotic-start products of length `chain_len` and keeps
/// the certified estimators `D̂` of maximal dimension.
pub fn discover_maximal_dark(
    e: &KrausEnsemble,
    n_probes: usize,
    chain_len: usize,
    seed: u64,
) -> Result<DarkAtlas> {
    if !channel::analyze(e)?.is_irreducible {
        log::warn!("discovery on a reducible ensemble; maximality is only guaranteed for irreducible ones");
    }
    let tester = DarkTester::new(e);
    let mut found: Vec<Subspace> = Vec::new();
    for k in 0..n_probes {
        let mut rng = stream(seed, k as u64);
        let word = sample_chaotic_word(e, chain_len, &mut rng)?;
        let s = svd(&word.w)?;
        let eig: Vec<f64> = s.values.iter().map(|x| x * x).collect();
        let rank = numerical_rank(&eig, TAU_RANK);
        let (_, d_hat) = estimate_dark(&word.w, rank)?;
        let cert = tester.certify(&d_hat)?;
        log::debug!(
            "probe {k}: rank {rank}, residual {:.3e}",
            cert.residual
        );
        if cert.certified {
            found.push(d_hat);
        }
    }
    let r_m = found
        .iter()
        .map(Subspace::dim)
        .max()
        .ok_or(Error::Discovery { probes: n_probes })?;
    let mut reps: Vec<Subspace> = Vec::new();
    for q in found.into_iter().filter(|q| q.dim() == r_m) {
        if !reps.iter().any(|d| d.same_as(&q, tol::SUBSPACE_DEDUP)) {
            reps.push(q);
        }
    }
    Ok(DarkAtlas {
        r_m,
        representatives: reps,
        discovery_seeds: (0..n_probes as u64).collect(),
    })
}

/// Weights `p_i tr(v_i π_D v_i*) / r` of the dark-chain kernel at `D`.
pub fn dark_kernel_weights(e: &KrausEnsemble, q: &Subspace) -> Result<Vec<f64>> {
    check_dim(e.dim(), q.ambient_dim())?;
    let r = q.dim() as f64;
    Ok(e.items()
        .iter()
        .map(|it| it.weight * (&it.matrix * q.basis()).norm_squared() / r)
        .collect())
}

/// One step of the chain on dark subspaces: `D ↦ v_i D`.
pub fn step_dark_chain<R: Rng + ?Sized>(
    e: &KrausEnsemble,
    q: &Subspace,
    rng: &mut R,
) -> Result<(usize, Subspace)> {
    let w = dark_kernel_weights(e, q)?;
    if w.iter().all(|&x| x < tol::NEGLIGIBLE_WEIGHT) {
        return Err(Error::Numeric("all dark-chain weights vanish".into()));
    }
    let i = sample_index(&w, rng).ok_or_else(|| Error::Numeric("outcome sampling failed".into()))?;
    Ok((i, q.image(&e.items()[i].matrix)?))
}

/// Exact one-step transition matrix of the dark chain restricted to the
/// atlas. `escaped[j]` is the weight leaving row `j` for subspaces outside
/// the atlas.
#[derive(Debug, Clone)]
pub struct AtlasTransitions {
    pub matrix: Vec<Vec<f64>>,
    pub escaped: Vec<f64>,
}

pub fn atlas_transitions(e: &KrausEnsemble, atlas: &DarkAtlas) -> Result<AtlasTransitions> {
    let n = atlas.representatives.len();
    let mut matrix = alloc::vec![alloc::vec![0.0; n]; n];
    let mut escaped = alloc::vec![0.0; n];
    for (j, d) in atlas.representatives.iter().enumerate() {
        let w = dark_kernel_weights(e, d)?;
        for (it, &p) in e.items().iter().zip(&w) {
            if p < tol::NEGLIGIBLE_WEIGHT {
                continue;
            }
            match atlas.locate(&d.image(&it.matrix)?, tol::SUBSPACE_DEDUP) {
                Some(k) => matrix[j][k] += p,
                None => escaped[j] += p,
            }
        }
    }
    Ok(AtlasTransitions { matrix, escaped })
}

/// Finitely supported probability measure on subspaces.
#[derive(Debug, Clone)]
pub struct EmpiricalDarkMeasure {
    pub atoms: Vec<(Subspace, f64)>,
}

impl EmpiricalDarkMeasure {
    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Weight of the atom within `threshold` of `q` (0 if none).
    pub fn weight_of(&self, q: &Subspace, threshold: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(d, _)| d.same_as(q, threshold))
            .map(|a| a.1)
            .sum()
    }
}

/// Accumulates weighted subspaces, merging those within the dedup gap.
/// Projectors are cached; the Frobenius distance bounds the gap from
/// below (`gap ≤ ‖P − Q‖_F ≤ √(2r)·gap`) and prunes most comparisons.
#[derive(Debug, Default)]
pub struct AtomAccumulator {
    subspaces: Vec<Subspace>,
    projectors: Vec<CMatrix>,
    weights: Vec<f64>,
}

impl AtomAccumulator {
    pub fn add(&mut self, q: Subspace, w: f64) -> Result<()> {
        let p = q.projector();
        let bound = (2.0 * q.dim() as f64).sqrt() * tol::SUBSPACE_DEDUP;
        for (k, pk) in self.projectors.iter().enumerate() {
            if (pk - &p).norm() <= bound && gap_distance(&self.subspaces[k], &q)? <= tol::SUBSPACE_DEDUP {
                self.weights[k] += w;
                return Ok(());
            }
        }
        self.subspaces.push(q);
        self.projectors.push(p);
        self.weights.push(w);
        Ok(())
    }

    pub fn finish(self) -> Result<EmpiricalDarkMeasure> {
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric("empirical measure has no mass".into()));
        }
        Ok(EmpiricalDarkMeasure {
            atoms: self
                .subspaces
                .into_iter()
                .zip(self.weights.into_iter().map(|w| w / total))
                .collect(),
        })
    }
}

/// Estimates the invariant measure of the dark chain.
///
/// The chain starts at the first atlas representative and runs `n_burn`
/// unrecorded steps. Over the next `n_keep` steps (rounded down to a
/// multiple of the channel period) each visited `D` contributes its exact
/// one-step law `Σ_i K_i(D) δ_{v_i D}` rather than the single sampled
/// successor.
pub fn estimate_chi_inv(
    e: &KrausEnsemble,
    atlas: &DarkAtlas,
    n_burn: usize,
    n_keep: usize,
    seed: u64,
) -> Result<EmpiricalDarkMeasure> {
    let start = atlas
        .representatives
        .first()
        .ok_or_else(|| Error::Precondition("empty atlas".into()))?;
    let m = match channel::period(e) {
        Ok(m) => m,
        Err(Error::Precondition(_)) => 1,
        Err(err) => return Err(err),
    };
    let keep = (n_keep / m).max(1) * m;
    let mut rng = stream(seed, 0);
    let mut cur = start.clone();
    for _ in 0..n_burn {
        cur = step_dark_chain(e, &cur, &mut rng)?.1;
    }
    let mut acc = AtomAccumulator::default();
    for _ in 0..keep {
        let w = dark_kernel_weights(e, &cur)?;
        for (it, &p) in e.items().iter().zip(&w) {
            if p >= tol::NEGLIGIBLE_WEIGHT {
                acc.add(cur.image(&it.matrix)?, p)?;
            }
        }
        cur = step_dark_chain(e, &cur, &mut rng)?.1;
    }
    acc.finish()
}

/// Pushes a measure one step through the dark-chain kernel.
pub fn push_forward(e: &KrausEnsemble, mu: &EmpiricalDarkMeasure) -> Result<EmpiricalDarkMeasure> {
    let mut acc = AtomAccumulator::default();
    for (q, w) in &mu.atoms {
        let k = dark_kernel_weights(e, q)?;
        for (it, &p) in e.items().iter().zip(&k) {
            if p >= tol::NEGLIGIBLE_WEIGHT {
                acc.add(q.image(&it.matrix)?, w * p)?;
            }
        }
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SMode {
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct SEstimate {
    pub value: f64,
    /// Monte Carlo standard error; 0 in exhaustive mode.
    pub std_error: f64,
}

/// Largest number of words summed in exhaustive mode.
pub const MAX_EXHAUSTIVE_WORDS: usize = 1_000_000;

/// `‖⋀^p w‖^{2/p}`, with singular values below the round-off floor
/// `d·ε·σ_1` taken as exact zeros (the `2/p` power would otherwise turn
/// `1e-17` noise into `1e-11`).
fn wedge_stat(w: &CMatrix, p: usize) -> Result<f64> {
    if p > w.nrows() {
        return Ok(0.0);
    }
    let s = svd(w)?;
    let floor = w.nrows() as f64 * f64::EPSILON * s.values[0];
    if s.values[p - 1] <= floor {
        return Ok(0.0);
    }
    Ok(s.values[..p].iter().product::<f64>().powf(2.0 / p as f64))
}

/// `s(n) = Σ_w weight(w) ‖⋀^{r_m+1} w‖^{2/(r_m+1)}` over words of length `n`.
pub fn s_of_n(
    e: &KrausEnsemble,
    n: usize,
    mode: SMode,
    r_m: usize,
    samples: usize,
    seed: u64,
) -> Result<SEstimate> {
    if r_m == 0 {
        return Err(Error::Domain("r_m must be positive".into()));
    }
    let p = r_m + 1;
    match mode {
        SMode::Exhaustive => {
            let count = (e.len() as f64).powi(n as i32);
            if count > MAX_EXHAUSTIVE_WORDS as f64 {
                return Err(Error::Size(format!(
                    "{count} words exceed the exhaustive limit {MAX_EXHAUSTIVE_WORDS}"
                )));
            }
            let mut total = 0.0;
            exhaustive(e, n, p, 1.0, &identity(e.dim()), &mut total)?;
            Ok(SEstimate {
                value: total,
                std_error: 0.0,
            })
        }
        SMode::MonteCarlo => {
            if samples == 0 {
                return Err(Error::Domain("Monte Carlo mode needs samples".into()));
            }
            let d = e.dim() as f64;
            let (mut sum, mut sum2) = (0.0, 0.0);
            for k in 0..samples {
                let word = sample_chaotic_word(e, n, &mut stream(seed, k as u64))?;
                // Scale-free: ‖⋀^p W‖^{2/p} / tr(W* W).
                let x = wedge_stat(&word.w, p)? / word.w.norm_squared();
                sum += x;
                sum2 += x * x;
            }
            let k = samples as f64;
            let mean = sum / k;
            let var = if samples > 1 {
                ((sum2 - k * mean * mean) / (k - 1.0)).max(0.0)
            } else {
                0.0
            };
            Ok(SEstimate {
                value: d * mean,
                std_error: d * (var / k).sqrt(),
            })
        }
    }
}

fn exhaustive(
    e: &KrausEnsemble,
    left: usize,
    p: usize,
    weight: f64,
    w: &CMatrix,
    total: &mut f64,
) -> Result<()> {
    if left == 0 {
        *total += weight * wedge_stat(w, p)?;
        return Ok(());
    }
    for it in e.items() {
        exhaustive(e, left - 1, p, weight * it.weight, &(&it.matrix * w), total)?;
    }
    Ok(())
}
