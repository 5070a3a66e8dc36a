//! Isometry families `J_D: ℂ^{r_m} → D`, the special unitaries they
//! induce, closed subgroups of `SU(r_m)` generated by them, and sampling
//! of the resulting invariant measures.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::channel::KrausEnsemble;
use crate::darkspace::{dark_kernel_weights, EmpiricalDarkMeasure};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, check_dim, fubini_distance, identity, op_norm, real, svd, CMatrix, DensityMatrix, Ray,
    Subspace, C64,
};
use crate::measures::{ray_w1, EmpiricalMeasure};
use crate::rng::{sample_index, stream};
use crate::tol;
use crate::trajectory::{step_ray, State};

/// Isometries are accepted when `‖J*J − Id‖` stays below this.
const ISOMETRY: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FamilyEntry {
    pub subspace: Subspace,
    /// `d × r_m` column isometry onto `subspace`.
    pub j: CMatrix,
}

#[derive(Debug, Clone)]
pub struct IsometryFamily {
    pub r_m: usize,
    pub entries: Vec<FamilyEntry>,
    pub center_index: Option<usize>,
}

impl IsometryFamily {
    pub fn new(r_m: usize) -> Self {
        IsometryFamily {
            r_m,
            entries: Vec::new(),
            center_index: None,
        }
    }

    /// Adds `J` as the isometry for its range. Replaces nothing: a second
    /// entry for the same subspace is rejected.
    pub fn insert(&mut self, j: CMatrix) -> Result<usize> {
        if j.ncols() != self.r_m {
            return Err(Error::Dimension {
                expected: self.r_m,
                found: j.ncols(),
            });
        }
        let dev = op_norm(&(j.adjoint() * &j - identity(self.r_m)))?;
        if dev > ISOMETRY {
            return Err(Error::Domain(alloc::format!("not an isometry (residual {dev:.2e})")));
        }
        let subspace = Subspace::span(&j)?;
        if self.index_of(&subspace).is_some() {
            return Err(Error::Domain("subspace already has an isometry".into()));
        }
        self.entries.push(FamilyEntry { subspace, j });
        Ok(self.entries.len() - 1)
    }

    pub fn index_of(&self, q: &Subspace) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.subspace.same_as(q, tol::SUBSPACE_DEDUP))
    }

    pub fn lookup(&self, q: &Subspace) -> Result<&CMatrix> {
        self.index_of(q)
            .map(|k| &self.entries[k].j)
            .ok_or(Error::MissingEntry)
    }

    /// Each subspace embedded through its canonical basis.
    pub fn embedding(subspaces: &[Subspace]) -> Result<Self> {
        let r_m = subspaces
            .first()
            .ok_or_else(|| Error::Precondition("no subspaces".into()))?
            .dim();
        let mut fam = IsometryFamily::new(r_m);
        for q in subspaces {
            fam.insert(q.basis().clone())?;
        }
        Ok(fam)
    }

    /// Replaces `J_D` by `J_D · u` for the entry of `q`.
    pub fn twisted(&self, q: &Subspace, u: &CMatrix) -> Result<Self> {
        let k = self.index_of(q).ok_or(Error::MissingEntry)?;
        let mut out = self.clone();
        out.entries[k].j = &out.entries[k].j * u;
        out.center_index = None;
        Ok(out)
    }
}

/// Limits on word searches from the center.
#[derive(Debug, Clone, Copy)]
pub struct WordBudget {
    pub max_len: usize,
    /// Random words sampled by [`check_smart`].
    pub samples: usize,
    /// Distinct subspaces explored by [`build_smart_family`].
    pub max_nodes: usize,
}

impl Default for WordBudget {
    fn default() -> Self {
        WordBudget {
            max_len: 20,
            samples: 10_000,
            max_nodes: 10_000,
        }
    }
}

/// `λ_v(D) = √(tr(v π_D v*)/r)`: the scale of `v` restricted to dark `D`.
fn dark_scale(v: &CMatrix, j: &CMatrix) -> f64 {
    (v * j).norm() / (j.ncols() as f64).sqrt()
}

/// Builds a `center`-smart family covering `targets`.
///
/// Subspaces reachable from the center are explored breadth first, items
/// in ensemble order, so each target gets `J_D = w J_c / λ_w` for a
/// shortest word `w` with `w·center = D`.
pub fn build_smart_family(
    e: &KrausEnsemble,
    targets: &[Subspace],
    center: &Subspace,
    j_center: &CMatrix,
    budget: WordBudget,
) -> Result<IsometryFamily> {
    check_dim(e.dim(), center.ambient_dim())?;
    if !Subspace::span(j_center)?.same_as(center, tol::SUBSPACE_DEDUP) {
        return Err(Error::Precondition("J_center does not map onto the center".into()));
    }
    let r_m = center.dim();
    let mut seen: Vec<(Subspace, CMatrix)> = alloc::vec![(center.clone(), j_center.clone())];
    let mut found: Vec<Option<CMatrix>> = targets
        .iter()
        .map(|t| t.same_as(center, tol::SUBSPACE_DEDUP).then(|| j_center.clone()))
        .collect();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((k, depth)) = queue.pop_front() {
        if found.iter().all(Option::is_some) || depth >= budget.max_len {
            break;
        }
        let (q, j) = seen[k].clone();
        for it in e.items() {
            let lambda = dark_scale(&it.matrix, &j);
            if lambda * lambda < tol::ANNIHILATED {
                continue;
            }
            let j_next = &it.matrix * &j / real(lambda);
            let q_next = q.image(&it.matrix)?;
            if seen.iter().any(|(s, _)| s.same_as(&q_next, tol::SUBSPACE_DEDUP)) {
                continue;
            }
            for (t, slot) in targets.iter().zip(found.iter_mut()) {
                if slot.is_none() && t.same_as(&q_next, tol::SUBSPACE_DEDUP) {
                    *slot = Some(j_next.clone());
                }
            }
            if seen.len() >= budget.max_nodes {
                break;
            }
            seen.push((q_next, j_next));
            queue.push_back((seen.len() - 1, depth + 1));
        }
    }
    let unreached = found.iter().filter(|f| f.is_none()).count();
    if unreached > 0 {
        return Err(Error::Reachability { unreached });
    }
    let mut fam = IsometryFamily::new(r_m);
    let c = fam.insert(j_center.clone())?;
    fam.center_index = Some(c);
    for j in found.into_iter().flatten() {
        if fam.index_of(&Subspace::span(&j)?).is_none() {
            fam.insert(j)?;
        }
    }
    Ok(fam)
}

/// Rescales `u` to unit determinant and picks the `r`-th root of unity
/// that puts the argument of the first nonzero entry (row-major) in
/// `[0, 2π/r)`.
pub fn su_canonical(u: &CMatrix) -> Result<CMatrix> {
    let r = u.nrows();
    let det = u.determinant();
    if det.norm() < tol::ANNIHILATED {
        return Err(Error::Numeric("singular matrix has no SU representative".into()));
    }
    let rf = r as f64;
    let mut out = u * C64::from_polar(det.norm().powf(-1.0 / rf), -det.arg() / rf);
    let first = (0..r * r)
        .map(|k| out[(k / r, k % r)])
        .find(|z| z.norm() > tol::GROUP_DEDUP)
        .expect("unitary matrix has a nonzero entry");
    let sector = 2.0 * PI / rf;
    let arg = first.arg().rem_euclid(2.0 * PI);
    // Entries sitting on a sector boundary up to round-off go to the lower sector.
    let k = ((arg + 1e-12) / sector).floor();
    out *= C64::from_polar(1.0, -k * sector);
    Ok(out)
}

/// `u_{v,D} ∝ J_{vD}* v J_D`, normalized into `SU(r_m)`.
pub fn induced_unitary(fam: &IsometryFamily, v: &CMatrix, q: &Subspace) -> Result<CMatrix> {
    let j = fam.lookup(q)?;
    let lambda = dark_scale(v, j);
    if lambda * lambda <= tol::ANNIHILATED {
        return Err(Error::Precondition("v annihilates D".into()));
    }
    let target = q.image(v)?;
    let j_target = fam.lookup(&target)?;
    let raw = j_target.adjoint() * v * j;
    let top = svd(&raw)?.values[0];
    let u = raw / real(top);
    let residual = op_norm(&(u.adjoint() * &u - identity(fam.r_m)))?;
    if residual > tol::INDUCED_UNITARY {
        return Err(Error::DarknessViolation { residual });
    }
    su_canonical(&u)
}

/// The generators `u_{v_i,D}` for `D` among `atoms` and every item that
/// does not annihilate `D`, deduplicated.
pub fn family_generators(
    fam: &IsometryFamily,
    e: &KrausEnsemble,
    atoms: &[Subspace],
) -> Result<Vec<CMatrix>> {
    let mut gens: Vec<CMatrix> = Vec::new();
    for q in atoms {
        let w = dark_kernel_weights(e, q)?;
        for (it, &p) in e.items().iter().zip(&w) {
            if p < tol::NEGLIGIBLE_WEIGHT {
                continue;
            }
            let u = induced_unitary(fam, &it.matrix, q)?;
            if !gens.iter().any(|g| (g - &u).norm() <= tol::UNITARY) {
                gens.push(u);
            }
        }
    }
    Ok(gens)
}

#[derive(Debug, Clone)]
pub enum GroupKind {
    Finite(Vec<CMatrix>),
    Continuous { lie_dim: usize },
}

#[derive(Debug, Clone)]
pub struct UnitaryGroupClosure {
    pub r_m: usize,
    pub generators: Vec<CMatrix>,
    pub kind: GroupKind,
    pub dedup_tolerance: f64,
}

impl UnitaryGroupClosure {
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Finite(el) => Some(el.len()),
            GroupKind::Continuous { .. } => None,
        }
    }

    pub fn elements(&self) -> Option<&[CMatrix]> {
        match &self.kind {
            GroupKind::Finite(el) => Some(el),
            GroupKind::Continuous { .. } => None,
        }
    }

    /// Index of the listed element within the dedup tolerance of `u`.
    pub fn position(&self, u: &CMatrix) -> Option<usize> {
        self.elements()?
            .iter()
            .position(|g| (g - u).norm() <= self.dedup_tolerance)
    }
}

/// Default element cap before a closure is declared continuous.
pub const DEFAULT_GROUP_CAP: usize = 4096;

/// Element store with trace buckets to prune comparisons.
struct ElementSet {
    elements: Vec<CMatrix>,
    buckets: BTreeMap<i64, Vec<usize>>,
    bucket_width: f64,
}

impl ElementSet {
    fn new() -> Self {
        ElementSet {
            elements: Vec::new(),
            buckets: BTreeMap::new(),
            bucket_width: 1e-3,
        }
    }

    fn key(&self, u: &CMatrix) -> i64 {
        (u.trace().re / self.bucket_width).floor() as i64
    }

    fn contains(&self, u: &CMatrix) -> bool {
        let k = self.key(u);
        let r = u.nrows() as f64;
        (k - 1..=k + 1).any(|b| {
            self.buckets.get(&b).is_some_and(|ids| {
                ids.iter().any(|&i| {
                    let diff = &self.elements[i] - u;
                    diff.norm() <= r.sqrt() * tol::GROUP_DEDUP
                        && op_norm(&diff).is_ok_and(|n| n <= tol::GROUP_DEDUP)
                })
            })
        })
    }

    fn push(&mut self, u: CMatrix) {
        let k = self.key(&u);
        self.buckets.entry(k).or_default().push(self.elements.len());
        self.elements.push(u);
    }
}

/// Breadth-first closure of `⟨generators⟩ ⊂ SU(r)`.
///
/// Elements are identified within `1e-6` in operator norm, with no
/// identification of scalar multiples, so `−Id ≠ Id`. If more than `cap`
/// distinct elements appear, the closure is reported continuous together
/// with the dimension of its Lie algebra.
pub fn group_closure(generators: &[CMatrix], cap: usize) -> Result<UnitaryGroupClosure> {
    let r = generators
        .first()
        .ok_or_else(|| Error::Precondition("no generators".into()))?
        .nrows();
    for g in generators {
        check_dim(r, g.nrows())?;
        let unit = op_norm(&(g.adjoint() * g - identity(r)))?;
        let det = (g.determinant() - real(1.0)).norm();
        if unit > tol::UNITARY || det > tol::UNITARY {
            return Err(Error::Precondition("generators must lie in SU(r)".into()));
        }
    }
    let mut steps: Vec<CMatrix> = generators.to_vec();
    steps.extend(generators.iter().map(|g| g.adjoint()));
    let mut set = ElementSet::new();
    set.push(identity(r));
    let mut queue = VecDeque::from([0usize]);
    let mut overflow = false;
    'bfs: while let Some(k) = queue.pop_front() {
        for s in &steps {
            let h = s * &set.elements[k];
            if !set.contains(&h) {
                if set.elements.len() >= cap {
                    overflow = true;
                    break 'bfs;
                }
                set.push(h);
                queue.push_back(set.elements.len() - 1);
            }
        }
    }
    let kind = if overflow {
        GroupKind::Continuous {
            lie_dim: lie_dimension(&set.elements)?,
        }
    } else {
        GroupKind::Finite(set.elements)
    };
    Ok(UnitaryGroupClosure {
        r_m: r,
        generators: generators.to_vec(),
        kind,
        dedup_tolerance: tol::GROUP_DEDUP,
    })
}

/// `log g` by its power series, valid for `‖g − Id‖ < 1`.
fn log_near_identity(g: &CMatrix) -> CMatrix {
    let r = g.nrows();
    let x = g - identity(r);
    let mut term = x.clone();
    let mut out = x.clone();
    for k in 2..80 {
        term = &term * &x;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        out += &term * real(sign / k as f64);
    }
    out
}

fn as_real_vector(a: &CMatrix) -> Vec<f64> {
    a.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Adds `x` to the orthonormal list if it is independent at `LIE_RANK`.
fn extend_basis(basis: &mut Vec<Vec<f64>>, x: &[f64]) -> bool {
    let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n == 0.0 {
        return false;
    }
    let mut r: Vec<f64> = x.iter().map(|a| a / n).collect();
    for _ in 0..2 {
        for b in basis.iter() {
            let c: f64 = b.iter().zip(&r).map(|(p, q)| p * q).sum();
            r.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
        }
    }
    let m = r.iter().map(|a| a * a).sum::<f64>().sqrt();
    if m > tol::LIE_RANK {
        basis.push(r.into_iter().map(|a| a / m).collect());
        true
    } else {
        false
    }
}

/// Dimension of the real Lie algebra spanned by logarithms of
/// near-identity elements and their iterated commutators.
fn lie_dimension(elements: &[CMatrix]) -> Result<usize> {
    let r = elements.first().map_or(1, |g| g.nrows());
    let id = identity(r);
    let mut near: Vec<CMatrix> = elements
        .iter()
        .filter(|g| {
            let n = (*g - &id).norm();
            n > tol::GROUP_DEDUP && n <= 0.5
        })
        .cloned()
        .collect();
    if near.is_empty() {
        // Pigeonhole: some quotient of two listed elements is close to Id.
        let pool = &elements[..elements.len().min(512)];
        for (a, ga) in pool.iter().enumerate() {
            for gb in &pool[a + 1..] {
                let q = ga.adjoint() * gb;
                let n = (&q - &id).norm();
                if n > tol::GROUP_DEDUP && n <= 0.5 {
                    near.push(q);
                }
            }
        }
    }
    let mut mats: Vec<CMatrix> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in &near {
        let x = log_near_identity(g);
        let x = (&x - x.adjoint()) * real(0.5);
        if extend_basis(&mut basis, &as_real_vector(&x)) {
            mats.push(x);
        }
    }
    let max_dim = r * r - 1;
    let mut start = 0;
    while start < mats.len() && mats.len() < max_dim {
        let end = mats.len();
        for i in 0..end {
            for j in start.max(i + 1)..end {
                let c = &mats[i] * &mats[j] - &mats[j] * &mats[i];
                if extend_basis(&mut basis, &as_real_vector(&c)) {
                    mats.push(c);
                }
            }
        }
        start = end;
    }
    Ok(mats.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transitivity {
    FullSu,
    SymplecticConjugate,
    NotTransitive,
    Undecided,
}

impl Transitivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Transitivity::FullSu => "full_su",
            Transitivity::SymplecticConjugate => "symplectic_conjugate",
            Transitivity::NotTransitive => "not_transitive",
            Transitivity::Undecided => "undecided",
        }
    }

    /// Transitive closures leave exactly one invariant measure.
    pub fn is_transitive(self) -> bool {
        matches!(self, Transitivity::FullSu | Transitivity::SymplecticConjugate)
    }
}

/// Antisymmetric `J` with `uᵀ J u = J` for all generators, if one exists
/// and is nondegenerate.
pub fn invariant_symplectic_form(generators: &[CMatrix]) -> Result<Option<CMatrix>> {
    let Some(r) = generators.first().map(|g| g.nrows()) else {
        return Ok(None);
    };
    if r % 2 == 1 {
        return Ok(None);
    }
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (i + 1..r).map(move |j| (i, j))).collect();
    let unit = |k: usize| {
        let (i, j) = pairs[k];
        let mut m = CMatrix::zeros(r, r);
        m[(i, j)] = real(1.0);
        m[(j, i)] = real(-1.0);
        m
    };
    // Column k holds the vectorized residual map applied to basis form k.
    let rows = generators.len() * r * r;
    let mut a = CMatrix::zeros(rows, pairs.len());
    for k in 0..pairs.len() {
        let jk = unit(k);
        for (g, u) in generators.iter().enumerate() {
            let res = u.transpose() * &jk * u - &jk;
            for (idx, z) in res.iter().enumerate() {
                a[(g * r * r + idx, k)] = *z;
            }
        }
    }
    let s = svd(&a)?;
    let cut = tol::SYMPLECTIC * s.values[0].max(1.0);
    let null: Vec<usize> = (0..pairs.len()).filter(|&k| s.values[k] <= cut).collect();
    if null.is_empty() {
        return Ok(None);
    }
    // A generic combination of null vectors is nondegenerate if any is.
    let mut form = CMatrix::zeros(r, r);
    for (n, &k) in null.iter().enumerate() {
        let w = 1.0 + (n as f64 * 0.618_033_988_75).fract();
        for (i, c) in s.right.column(k).iter().enumerate() {
            form += unit(i) * (*c * w);
        }
    }
    let fs = svd(&form)?;
    let (top, bottom) = (fs.values[0], fs.values[r - 1]);
    if bottom <= 1e-6 * top {
        return Ok(None);
    }
    Ok(Some(form / real(top)))
}

pub fn classify_transitivity(g: &UnitaryGroupClosure) -> Result<Transitivity> {
    let r = g.r_m;
    if r == 1 {
        return Ok(Transitivity::FullSu);
    }
    Ok(match &g.kind {
        // A finite group has finite orbits on the infinite set P(ℂ^r).
        GroupKind::Finite(_) => Transitivity::NotTransitive,
        GroupKind::Continuous { lie_dim } => {
            if *lie_dim == r * r - 1 {
                Transitivity::FullSu
            } else if r % 2 == 0
                && *lie_dim == r * (r + 1) / 2
                && invariant_symplectic_form(&g.generators)?.is_some()
            {
                Transitivity::SymplecticConjugate
            } else {
                Transitivity::Undecided
            }
        }
    })
}

/// Word length for approximate Haar sampling of continuous closures.
pub const HAAR_WORD_LEN: usize = 64;

pub fn haar_sample<R: Rng + ?Sized>(g: &UnitaryGroupClosure, rng: &mut R) -> CMatrix {
    match &g.kind {
        GroupKind::Finite(el) => el[rng.random_range(0..el.len())].clone(),
        GroupKind::Continuous { .. } => {
            let n = g.generators.len();
            let mut u = identity(g.r_m);
            for _ in 0..HAAR_WORD_LEN {
                let k = rng.random_range(0..2 * n);
                let s = &g.generators[k % n];
                u = if k < n { s * u } else { s.adjoint() * u };
            }
            u
        }
    }
}

/// `{u·x̂ : u ∈ G}` for a finite closure, deduplicated at `δ ≤ 1e-9`.
pub fn orbit(x: &Ray, g: &UnitaryGroupClosure) -> Result<Vec<Ray>> {
    check_dim(g.r_m, x.dim())?;
    let el = g
        .elements()
        .ok_or_else(|| Error::Precondition("orbit enumeration needs a finite group".into()))?;
    let mut out: Vec<Ray> = Vec::new();
    for u in el {
        let y = x.map(u)?;
        if !out.iter().any(|z| z.same_as(&y)) {
            out.push(y);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ErgodicSample {
    /// Index of the atom of the dark measure the sample was placed in.
    pub atom: usize,
    pub point: State,
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub center: Ray,
    pub atom: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ErgodicSampleSet {
    pub base: State,
    pub samples: Vec<ErgodicSample>,
    /// Present for ray samples of a finite closure.
    pub clusters: Option<Vec<Cluster>>,
}

impl ErgodicSampleSet {
    pub fn rays(&self) -> Vec<Ray> {
        self.samples
            .iter()
            .filter_map(|s| match &s.point {
                State::Ray(x) => Some(x.clone()),
                State::Density(_) => None,
            })
            .collect()
    }
}

/// Samples `ν_{x̂,J}`: `D ~ χ`, `u ~ Haar(G)`, point `J_D·(u x̂)`; for a
/// density base the point is `J_D u ρ u* J_D*`.
pub fn sample_ergodic_measure(
    fam: &IsometryFamily,
    chi: &EmpiricalDarkMeasure,
    base: &State,
    g: &UnitaryGroupClosure,
    n_samples: usize,
    seed: u64,
) -> Result<ErgodicSampleSet> {
    check_dim(fam.r_m, base.dim())?;
    let weights: Vec<f64> = chi.atoms.iter().map(|a| a.1).collect();
    let js: Vec<&CMatrix> = chi
        .atoms
        .iter()
        .map(|(q, _)| fam.lookup(q))
        .collect::<Result<_>>()?;
    let mut rng = stream(seed, 0);
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let k = sample_index(&weights, &mut rng)
            .ok_or_else(|| Error::Domain("dark measure has no mass".into()))?;
        let u = haar_sample(g, &mut rng);
        let point = match base {
            State::Ray(x) => State::Ray(Ray::new(js[k] * (&u * x.vector()))?),
            State::Density(rho) => {
                let m = js[k] * &u * rho.matrix() * u.adjoint() * js[k].adjoint();
                State::Density(DensityMatrix::normalize(m)?)
            }
        };
        samples.push(ErgodicSample { atom: k, point });
    }
    let clusters = match (base, &g.kind) {
        (State::Ray(_), GroupKind::Finite(_)) => Some(cluster_samples(&samples)?),
        _ => None,
    };
    Ok(ErgodicSampleSet {
        base: base.clone(),
        samples,
        clusters,
    })
}

fn cluster_samples(samples: &[ErgodicSample]) -> Result<Vec<Cluster>> {
    let mut clusters: Vec<Cluster> = Vec::new();
    let unit = 1.0 / samples.len() as f64;
    for s in samples {
        let State::Ray(x) = &s.point else { continue };
        let mut hit = None;
        for (k, c) in clusters.iter().enumerate() {
            if fubini_distance(&c.center, x)? <= tol::CLUSTER {
                hit = Some(k);
                break;
            }
        }
        match hit {
            Some(k) => clusters[k].weight += unit,
            None => clusters.push(Cluster {
                center: x.clone(),
                atom: s.atom,
                weight: unit,
            }),
        }
    }
    Ok(clusters)
}

/// Exact atoms of `ν_{x̂,J}` for a finite closure: each `(D, w)` of `χ`
/// contributes `w/|G|` to `J_D u x̂` for every element `u`.
pub fn exact_ergodic_atoms(
    fam: &IsometryFamily,
    chi: &EmpiricalDarkMeasure,
    x: &Ray,
    g: &UnitaryGroupClosure,
) -> Result<Vec<(Ray, f64)>> {
    let el = g
        .elements()
        .ok_or_else(|| Error::Precondition("exact atoms need a finite group".into()))?;
    let mut atoms: Vec<(Ray, f64)> = Vec::new();
    for (q, w) in &chi.atoms {
        let j = fam.lookup(q)?;
        for u in el {
            let y = Ray::new(j * (u * x.vector()))?;
            let share = w / el.len() as f64;
            match atoms.iter_mut().find(|(z, _)| z.same_as(&y)) {
                Some(a) => a.1 += share,
                None => atoms.push((y, share)),
            }
        }
    }
    Ok(atoms)
}

#[derive(Debug, Clone, Copy)]
pub struct InvarianceResidual {
    /// Mean over replicates of `W₁(ΠA, B) − W₁(A, B)` for disjoint halves.
    pub residual: f64,
    pub std_error: f64,
    pub replicates: usize,
}

/// Largest block compared by one transport solve.
const INVARIANCE_BLOCK: usize = 256;
const INVARIANCE_REPLICATES: usize = 16;
const BOOTSTRAP_ROUNDS: usize = 1000;

/// Statistical test of `Π`-invariance of an empirical ray measure.
///
/// Disjoint blocks `A`, `B` of equal size are drawn from the samples; `A`
/// is advanced one step of the ray chain with fresh randomness. Under
/// invariance `ΠA` and `A` are both samples independent of `B`, so
/// `W₁(ΠA, B) − W₁(A, B)` is centered; its mean and bootstrap standard
/// error are returned. The difference removes the small-sample bias of
/// empirical `W₁`.
pub fn invariance_residual(samples: &[Ray], e: &KrausEnsemble, seed: u64) -> Result<InvarianceResidual> {
    if samples.len() < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let block = INVARIANCE_BLOCK.min(samples.len() / 2);
    let replicates = (samples.len() / (2 * block)).clamp(1, INVARIANCE_REPLICATES);
    let mut rng = stream(seed, 0);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut diffs = Vec::with_capacity(replicates);
    for k in 0..replicates {
        let pick = |off: usize| -> Vec<Ray> {
            order[off..off + block].iter().map(|&i| samples[i].clone()).collect()
        };
        let a = pick(2 * k * block);
        let b = pick((2 * k + 1) * block);
        let mut step_rng = stream(seed, 1 + k as u64);
        let pushed: Vec<Ray> = a
            .iter()
            .map(|x| step_ray(e, x, &mut step_rng).map(|s| s.1))
            .collect::<Result<_>>()?;
        let mb = EmpiricalMeasure::uniform(b)?;
        let moved = ray_w1(&EmpiricalMeasure::uniform(pushed)?, &mb)?;
        let still = ray_w1(&EmpiricalMeasure::uniform(a)?, &mb)?;
        diffs.push(moved - still);
    }
    let n = diffs.len();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let mut boot_rng = stream(seed, u64::MAX);
    let means: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|_| (0..n).map(|_| diffs[boot_rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mb = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mb) * (m - mb)).sum::<f64>() / (means.len() - 1) as f64;
    Ok(InvarianceResidual {
        residual: mean.abs(),
        std_error: var.sqrt(),
        replicates: n,
    })
}

#[derive(Debug, Clone)]
pub struct SmartReport {
    /// Per target: best proportionality residual found, `None` if no
    /// sampled word reached it.
    pub residuals: Vec<Option<f64>>,
    pub certified: bool,
}

/// Checks that every `J_D` is proportional to `w J_c` for some sampled
/// word `w` with `w·D_c = D`.
pub fn check_smart(
    fam: &IsometryFamily,
    e: &KrausEnsemble,
    targets: &[Subspace],
    budget: WordBudget,
    seed: u64,
) -> Result<SmartReport> {
    let c = fam
        .center_index
        .ok_or_else(|| Error::Precondition("family has no center".into()))?;
    let center = &fam.entries[c];
    let js: Vec<&CMatrix> = targets.iter().map(|t| fam.lookup(t)).collect::<Result<_>>()?;
    let projectors: Vec<CMatrix> = targets.iter().map(Subspace::projector).collect();
    let r = fam.r_m as f64;
    let mut best: Vec<Option<f64>> = alloc::vec![None; targets.len()];
    let consider = |p: &CMatrix, best: &mut Vec<Option<f64>>| -> Result<()> {
        let proj = p * p.adjoint();
        for (k, t) in targets.iter().enumerate() {
            if (&proj - &projectors[k]).norm() > (2.0 * r).sqrt() * tol::SUBSPACE_DEDUP {
                continue;
            }
            if !Subspace::span(p)?.same_as(t, tol::SUBSPACE_DEDUP) {
                continue;
            }
            let phase = (p.adjoint() * js[k]).trace();
            let rot = if phase.norm() > 0.0 { phase / phase.norm() } else { c64(1.0, 0.0) };
            let res = (js[k] - p * rot).norm();
            best[k] = Some(best[k].map_or(res, |b: f64| b.min(res)));
        }
        Ok(())
    };
    consider(&center.j, &mut best)?;
    for s in 0..budget.samples {
        let mut rng = stream(seed, s as u64);
        let mut p = center.j.clone();
        let mut q = center.subspace.clone();
        for _ in 0..budget.max_len {
            let w = dark_kernel_weights(e, &q)?;
            let Some(i) = sample_index(&w, &mut rng) else { break };
            let v = &e.items()[i].matrix;
            let lambda = dark_scale(v, &p);
            p = v * p / real(lambda);
            q = q.image(v)?;
            consider(&p, &mut best)?;
        }
    }
    let unreached = best.iter().filter(|b| b.is_none()).count();
    if unreached > 0 {
        return Err(Error::Reachability { unreached });
    }
    let certified = best.iter().all(|b| b.is_some_and(|x| x <= tol::SMART));
    Ok(SmartReport {
        residuals: best,
        certified,
    })
}

/// `Q = J_D* J'_D` relating two families at `D`: `J'_D = J_D Q`.
pub fn family_conjugator(a: &IsometryFamily, b: &IsometryFamily, q: &Subspace) -> Result<CMatrix> {
    Ok(a.lookup(q)?.adjoint() * b.lookup(q)?)
}
