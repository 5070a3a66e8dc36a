//! Finitely supported measures, exact 1-Wasserstein distances, Cesàro
//! convergence curves of the dark chain, Bloch coordinates and a small
//! least-squares helper.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::KrausEnsemble;
use crate::darkspace::{step_dark_chain, AtomAccumulator, EmpiricalDarkMeasure};
use crate::error::{Error, Result};
use crate::linalg::{gap_distance, Ray, Subspace};
use crate::presets::{pauli_x, pauli_y, pauli_z};
use crate::rng::{sample_index, stream};

/// Largest support accepted by [`wasserstein1`].
pub const MAX_ATOMS: usize = 512;

/// Weighted point cloud; weights are normalized on construction.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<T> {
    points: Vec<T>,
    weights: Vec<f64>,
}

impl<T> EmpiricalMeasure<T> {
    pub fn new(points: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("measure has no mass".into()));
        }
        Ok(EmpiricalMeasure {
            points,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(points: Vec<T>) -> Result<Self> {
        let n = points.len();
        Self::new(points, alloc::vec![1.0; n])
    }

    pub fn dirac(point: T) -> Self {
        EmpiricalMeasure {
            points: alloc::vec![point],
            weights: alloc::vec![1.0],
        }
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-15)
    }
}

impl From<&EmpiricalDarkMeasure> for EmpiricalMeasure<Subspace> {
    fn from(m: &EmpiricalDarkMeasure) -> Self {
        let (points, weights) = m.atoms.iter().cloned().unzip();
        EmpiricalMeasure { points, weights }
    }
}

/// Exact `W₁(m1, m2)` for the ground metric `dist`.
///
/// Uniform measures of equal size go through the assignment solver;
/// everything else through a min-cost-flow transportation solver.
pub fn wasserstein1<T, F>(m1: &EmpiricalMeasure<T>, m2: &EmpiricalMeasure<T>, dist: F) -> Result<f64>
where
    F: Fn(&T, &T) -> Result<f64>,
{
    for m in [m1.len(), m2.len()] {
        if m > MAX_ATOMS {
            return Err(Error::Size(format!(
                "{m} atoms exceed the transport limit {MAX_ATOMS}; subsample first"
            )));
        }
    }
    if m1.is_empty() || m2.is_empty() {
        return Err(Error::Domain("empty measure".into()));
    }
    let mut cost = Vec::with_capacity(m1.len());
    for a in m1.points() {
        let mut row = Vec::with_capacity(m2.len());
        for b in m2.points() {
            row.push(dist(a, b)?);
        }
        cost.push(row);
    }
    if m1.len() == m2.len() && m1.is_uniform() && m2.is_uniform() {
        Ok(assignment(&cost) / m1.len() as f64)
    } else {
        Ok(transport(&cost, m1.weights(), m2.weights()))
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm with potentials). Returns the total cost.
pub fn assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    // 1-based potentials; column 0 is a virtual start.
    let mut u = alloc::vec![0.0; n + 1];
    let mut v = alloc::vec![0.0; n + 1];
    let mut owner = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = alloc::vec![f64::INFINITY; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[owner[j] - 1][j - 1]).sum()
}

const FLOW_EPS: f64 = 1e-15;

/// Transportation problem `min Σ c_ij f_ij` with row sums `a` and column
/// sums `b` (equal totals), by successive shortest paths with Dijkstra on
/// reduced costs. Forward arcs are uncapacitated, so each augmentation
/// exhausts a supply, a demand or a backward arc.
pub fn transport(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = alloc::vec![alloc::vec![0.0; m]; n];
    // Nodes 0..n are sources, n..n+m sinks.
    let mut pot = alloc::vec![0.0; n + m];
    let total: f64 = a.iter().sum::<f64>().min(b.iter().sum());
    let mut shipped = 0.0;
    while total - shipped > 1e-13 {
        let mut dist = alloc::vec![f64::INFINITY; n + m];
        let mut prev = alloc::vec![usize::MAX; n + m];
        let mut done = alloc::vec![false; n + m];
        for i in 0..n {
            if supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut x = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..n + m {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    x = k;
                }
            }
            if x == usize::MAX {
                break;
            }
            done[x] = true;
            if x < n {
                for j in 0..m {
                    let y = n + j;
                    let nd = dist[x] + (cost[x][j] + pot[x] - pot[y]).max(0.0);
                    if nd < dist[y] {
                        dist[y] = nd;
                        prev[y] = x;
                    }
                }
            } else {
                let j = x - n;
                for i in 0..n {
                    if flow[i][j] > FLOW_EPS {
                        let nd = dist[x] + (-cost[i][j] + pot[x] - pot[i]).max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = x;
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| demand[j] > FLOW_EPS && dist[n + j].is_finite())
            .min_by(|&x, &y| dist[n + x].partial_cmp(&dist[n + y]).unwrap_or(core::cmp::Ordering::Equal));
        let Some(tj) = target else { break };
        let reach = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
        for k in 0..n + m {
            pot[k] += if dist[k].is_finite() { dist[k] } else { reach };
        }
        // Bottleneck along the path.
        let mut amount = demand[tj];
        let mut y = n + tj;
        while prev[y] != usize::MAX {
            let x = prev[y];
            if x >= n {
                amount = amount.min(flow[y][x - n]);
            }
            y = x;
        }
        amount = amount.min(supply[y]);
        let mut y = n + tj;
        while prev[y] != usize::MAX {
            let x = prev[y];
            if x < n {
                flow[x][y - n] += amount;
            } else {
                flow[y][x - n] -= amount;
            }
            y = x;
        }
        supply[y] -= amount;
        demand[tj] -= amount;
        shipped += amount;
    }
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..m {
            if flow[i][j] > 0.0 {
                c += flow[i][j] * cost[i][j];
            }
        }
    }
    c
}

/// `W₁` between measures on subspaces under the gap metric.
pub fn subspace_w1(m1: &EmpiricalDarkMeasure, m2: &EmpiricalDarkMeasure) -> Result<f64> {
    wasserstein1(&m1.into(), &m2.into(), |a: &Subspace, b: &Subspace| gap_distance(a, b))
}

/// `W₁` between measures on rays under the Fubini-Study metric.
pub fn ray_w1(m1: &EmpiricalMeasure<Ray>, m2: &EmpiricalMeasure<Ray>) -> Result<f64> {
    wasserstein1(m1, m2, |a: &Ray, b: &Ray| crate::linalg::fubini_distance(a, b))
}

/// `W₁((1/m) Σ_{r<m} χ₀ K^{mn+r}, reference)` for `n = 0..=n_max`, with the
/// iterates replaced by the empirical law of `samples` dark-chain paths
/// started from `χ₀`.
pub fn cesaro_convergence_curve(
    e: &KrausEnsemble,
    chi0: &EmpiricalDarkMeasure,
    reference: &EmpiricalDarkMeasure,
    m: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if m == 0 || samples == 0 {
        return Err(Error::Domain("period and sample count must be positive".into()));
    }
    let start_weights: Vec<f64> = chi0.atoms.iter().map(|a| a.1).collect();
    let mut per_n: Vec<AtomAccumulator> = (0..=n_max).map(|_| AtomAccumulator::default()).collect();
    for s in 0..samples {
        let mut rng = stream(seed, s as u64);
        let k = sample_index(&start_weights, &mut rng)
            .ok_or_else(|| Error::Domain("initial measure has no mass".into()))?;
        let mut cur = chi0.atoms[k].0.clone();
        for acc in per_n.iter_mut() {
            for _ in 0..m {
                acc.add(cur.clone(), 1.0)?;
                cur = step_dark_chain(e, &cur, &mut rng)?.1;
            }
        }
    }
    per_n
        .into_iter()
        .enumerate()
        .map(|(n, acc)| Ok((n, subspace_w1(&acc.finish()?, reference)?)))
        .collect()
}

/// `(tr π σ_x, tr π σ_y, tr π σ_z)` for a ray of `ℂ²`.
pub fn bloch_coords(x: &Ray) -> Result<[f64; 3]> {
    crate::linalg::check_dim(2, x.dim())?;
    let p = x.projector();
    Ok([
        (&p * pauli_x()).trace().re,
        (&p * pauli_y()).trace().re,
        (&p * pauli_z()).trace().re,
    ])
}

/// Bloch coordinates of `x` inside the nearest two-dimensional subspace of
/// `spheres`, expressed in that subspace's canonical basis.
pub fn bloch_in_subspaces(x: &Ray, spheres: &[Subspace]) -> Result<(usize, [f64; 3])> {
    let mut best: Option<(usize, f64)> = None;
    for (k, q) in spheres.iter().enumerate() {
        if q.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: q.dim(),
            });
        }
        crate::linalg::check_dim(q.ambient_dim(), x.dim())?;
        let inside = (q.basis().adjoint() * x.vector()).norm_squared();
        if best.is_none_or(|b| inside > b.1) {
            best = Some((k, inside));
        }
    }
    let (k, _) = best.ok_or_else(|| Error::Precondition("no subspaces given".into()))?;
    let local = Ray::new(spheres[k].basis().adjoint() * x.vector())?;
    Ok((k, bloch_coords(&local)?))
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
