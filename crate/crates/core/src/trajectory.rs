//! Seeded quantum trajectories on rays and density matrices, the running
//! products `W_n = V_n ⋯ V_1`, the normalized Gram process
//! `M_n = W_n* W_n / tr(W_n* W_n)` and the dark-subspace estimators.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::KrausEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{
    check_dim, identity, numerical_rank, polar_decompose, real, svd, CMatrix, DensityMatrix, Ray,
    Subspace,
};
use crate::rng::{random_ray, sample_index, stream};
use crate::tol;

/// `W` is renormalized whenever its Frobenius norm leaves this window.
pub const RESCALE_LOW: f64 = 1e-150;
pub const RESCALE_HIGH: f64 = 1e150;

/// Outcome probabilities `p_i ‖v_i x‖²` for a ray.
pub fn ray_probabilities(e: &KrausEnsemble, x: &Ray) -> Result<Vec<f64>> {
    check_dim(e.dim(), x.dim())?;
    Ok(e.items()
        .iter()
        .map(|it| it.weight * (&it.matrix * x.vector()).norm_squared())
        .collect())
}

/// Outcome probabilities `p_i tr(v_i ρ v_i*)` for a state.
pub fn density_probabilities(e: &KrausEnsemble, rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_dim(e.dim(), rho.dim())?;
    Ok(e.items()
        .iter()
        .map(|it| it.weight * (&it.matrix * rho.matrix() * it.matrix.adjoint()).trace().re.max(0.0))
        .collect())
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.iter().all(|&w| w < tol::NEGLIGIBLE_WEIGHT) {
        return Err(Error::Numeric("all outcome weights vanish".into()));
    }
    sample_index(weights, rng).ok_or_else(|| Error::Numeric("outcome sampling failed".into()))
}

/// One step of the ray kernel: pick `i` with probability `p_i ‖v_i x‖²`
/// and move to `v_i · x̂`.
pub fn step_ray<R: Rng + ?Sized>(e: &KrausEnsemble, x: &Ray, rng: &mut R) -> Result<(usize, Ray)> {
    let w = ray_probabilities(e, x)?;
    let i = draw(&w, rng)?;
    Ok((i, x.map(&e.items()[i].matrix)?))
}

/// One step of the state kernel: pick `i` with probability
/// `p_i tr(v_i ρ v_i*)` and move to the normalized conjugation.
pub fn step_density<R: Rng + ?Sized>(
    e: &KrausEnsemble,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<(usize, DensityMatrix)> {
    let w = density_probabilities(e, rho)?;
    let i = draw(&w, rng)?;
    let v = &e.items()[i].matrix;
    Ok((i, DensityMatrix::normalize(v * rho.matrix() * v.adjoint())?))
}

/// Trajectory state space.
#[derive(Debug, Clone)]
pub enum State {
    Ray(Ray),
    Density(DensityMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Ray(x) => x.dim(),
            State::Density(r) => r.dim(),
        }
    }

    /// The state as a density matrix (`π_x` for rays).
    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Ray(x) => DensityMatrix::pure(x),
            State::Density(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub step: usize,
    pub state: State,
    /// Running product `V_n ⋯ V_1` divided by `exp(log_scale)`.
    pub w: CMatrix,
    pub log_scale: f64,
    /// Kraus index applied to reach this state (`None` at step 0).
    pub index: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub states: Vec<TrajectoryState>,
}

impl Trajectory {
    pub fn indices(&self) -> Vec<usize> {
        self.states.iter().filter_map(|s| s.index).collect()
    }

    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory holds its initial state")
    }
}

fn rescale(w: &mut CMatrix, log_scale: &mut f64) -> Result<()> {
    let n = w.norm();
    if !n.is_finite() || n == 0.0 {
        return Err(Error::Numeric("running product degenerated".into()));
    }
    if !(RESCALE_LOW..=RESCALE_HIGH).contains(&n) {
        *w /= real(n);
        *log_scale += n.ln();
    }
    Ok(())
}

/// Simulates `n_steps` steps from `initial`, deterministically in `seed`.
///
/// Starting from the maximally mixed state samples words under the
/// chaotic-state law `P(w) = weight(w) · tr(w* w) / d`.
pub fn run_trajectory(
    e: &KrausEnsemble,
    initial: State,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = stream(seed, 0);
    run_trajectory_with(e, initial, n_steps, seed, &mut rng)
}

pub fn run_trajectory_with<R: Rng + ?Sized>(
    e: &KrausEnsemble,
    initial: State,
    n_steps: usize,
    seed: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_dim(e.dim(), initial.dim())?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut w = identity(e.dim());
    let mut log_scale = 0.0;
    let mut state = initial;
    states.push(TrajectoryState {
        step: 0,
        state: state.clone(),
        w: w.clone(),
        log_scale,
        index: None,
    });
    for n in 1..=n_steps {
        let (i, next) = match &state {
            State::Ray(x) => {
                let (i, y) = step_ray(e, x, rng)?;
                (i, State::Ray(y))
            }
            State::Density(r) => {
                let (i, s) = step_density(e, r, rng)?;
                (i, State::Density(s))
            }
        };
        w = &e.items()[i].matrix * w;
        rescale(&mut w, &mut log_scale)?;
        state = next;
        states.push(TrajectoryState {
            step: n,
            state: state.clone(),
            w: w.clone(),
            log_scale,
            index: Some(i),
        });
    }
    Ok(Trajectory { seed, states })
}

/// A word sampled under the chaotic-state law together with its product.
#[derive(Debug, Clone)]
pub struct ChaoticWord {
    pub indices: Vec<usize>,
    /// `V_n ⋯ V_1` divided by `exp(log_scale)`.
    pub w: CMatrix,
    pub log_scale: f64,
}

/// Samples a length-`n` word with `P(w) = weight(w) · tr(w* w) / d`,
/// keeping only the running product. Equivalent to a density trajectory
/// started at `Id/d` since `ρ_n ∝ W_n W_n*`.
pub fn sample_chaotic_word<R: Rng + ?Sized>(
    e: &KrausEnsemble,
    n: usize,
    rng: &mut R,
) -> Result<ChaoticWord> {
    let mut w = identity(e.dim());
    let mut log_scale = 0.0;
    let mut indices = Vec::with_capacity(n);
    let mut probs = alloc::vec![0.0; e.len()];
    for _ in 0..n {
        for (p, it) in probs.iter_mut().zip(e.items()) {
            *p = it.weight * (&it.matrix * &w).norm_squared();
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numeric("running product degenerated".into()));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        let i = draw(&probs, rng)?;
        w = &e.items()[i].matrix * w;
        rescale(&mut w, &mut log_scale)?;
        indices.push(i);
    }
    Ok(ChaoticWord {
        indices,
        w,
        log_scale,
    })
}

/// Relative threshold on eigenvalues of `M_n` for its numerical rank.
pub const TAU_RANK: f64 = tol::RANK_REL;

#[derive(Debug, Clone)]
pub struct MProcessSample {
    pub step: usize,
    /// `W* W / tr(W* W)`.
    pub m: DensityMatrix,
    /// Unitary polar factor of `W`.
    pub u: CMatrix,
    /// `√tr(W* W)` of the stored (rescaled) product.
    pub scale: f64,
    pub numerical_rank: usize,
}

pub fn m_sample(step: usize, w: &CMatrix) -> Result<MProcessSample> {
    let gram = w.adjoint() * w;
    let tr = gram.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Numeric("tr(W*W) underflowed".into()));
    }
    let (u, _) = polar_decompose(w)?;
    let s = svd(w)?;
    let eig: Vec<f64> = s.values.iter().map(|x| x * x).collect();
    Ok(MProcessSample {
        step,
        m: DensityMatrix::normalize(gram)?,
        u,
        scale: tr.sqrt(),
        numerical_rank: numerical_rank(&eig, TAU_RANK),
    })
}

/// The `M_n` process along a trajectory.
pub fn m_process(traj: &Trajectory) -> Result<Vec<MProcessSample>> {
    traj.states.iter().map(|s| m_sample(s.step, &s.w)).collect()
}

/// Estimators of the dark subspace reached by `w`: `Ê` spanned by the top
/// `r_m` right singular vectors (maximizing `tr(W π_E W*)`) and `D̂ = W Ê`.
pub fn estimate_dark(w: &CMatrix, r_m: usize) -> Result<(Subspace, Subspace)> {
    if r_m == 0 || r_m > w.ncols() {
        return Err(Error::Domain("estimator rank outside 1..=d".into()));
    }
    let s = svd(w)?;
    let eig: Vec<f64> = s.values.iter().map(|x| x * x).collect();
    let rank = numerical_rank(&eig, TAU_RANK);
    if rank < r_m {
        return Err(Error::Rank {
            required: r_m,
            found: rank,
        });
    }
    let e_hat = Subspace::from_orthonormal(s.right.columns(0, r_m).into_owned())?;
    let d_hat = Subspace::from_orthonormal(s.left.columns(0, r_m).into_owned())?;
    Ok((e_hat, d_hat))
}

/// `min_D (1 − tr(π_D ρ))` over the listed subspaces, clamped to `[0, 1]`.
pub fn darkness_gap(rho: &DensityMatrix, dark: &[Subspace]) -> Result<f64> {
    if dark.is_empty() {
        return Err(Error::Precondition("empty dark-subspace list".into()));
    }
    let mut best = f64::INFINITY;
    for d in dark {
        check_dim(d.ambient_dim(), rho.dim())?;
        if d.dim() == d.ambient_dim() {
            return Ok(0.0);
        }
        let b = d.basis();
        let inside = (b.adjoint() * rho.matrix() * b).trace().re;
        best = best.min(1.0 - inside);
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Ray version of [`darkness_gap`]: `min_D ‖x − π_D x‖²`.
pub fn ray_darkness_gap(x: &Ray, dark: &[Subspace]) -> Result<f64> {
    if dark.is_empty() {
        return Err(Error::Precondition("empty dark-subspace list".into()));
    }
    let mut best = f64::INFINITY;
    for d in dark {
        check_dim(d.ambient_dim(), x.dim())?;
        // The whole space, exactly; its stored basis carries round-off.
        if d.dim() == d.ambient_dim() {
            return Ok(0.0);
        }
        let inside = (d.basis().adjoint() * x.vector()).norm_squared();
        best = best.min(1.0 - inside);
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Mean darkness gap of ray trajectories at steps `0..=n_max`, one
/// trajectory per seed, each started at a uniformly random ray.
pub fn mean_darkness_gap_curve(
    e: &KrausEnsemble,
    dark: &[Subspace],
    n_max: usize,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    let mut sums = alloc::vec![0.0; n_max + 1];
    for &seed in seeds {
        let x0 = random_ray(e.dim(), &mut stream(seed, 1));
        let traj = run_trajectory(e, State::Ray(x0), n_max, seed)?;
        for s in &traj.states {
            if let State::Ray(x) = &s.state {
                sums[s.step] += ray_darkness_gap(x, dark)?;
            }
        }
    }
    let k = seeds.len().max(1) as f64;
    Ok(sums.into_iter().map(|s| s / k).collect())
}
