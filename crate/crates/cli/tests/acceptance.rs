//! Acceptance criteria 1–12, one PASS/FAIL line each. Exits nonzero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use darktraj_core::channel::{self, KrausEnsemble};
use darktraj_core::darkspace::{
    atlas_transitions, discover_maximal_dark, estimate_chi_inv, s_of_n, EmpiricalDarkMeasure, SMode,
    DEFAULT_CHAIN_LEN,
};
use darktraj_core::family::{
    build_smart_family, exact_ergodic_atoms, family_generators, group_closure, invariance_residual, sample_ergodic_measure, Cluster,
    GroupKind, IsometryFamily, UnitaryGroupClosure, WordBudget, DEFAULT_GROUP_CAP,
};
use darktraj_core::linalg::{
    c64, dist_to_subspace, gap_distance, hermitian_eigen, identity, op_norm, polar_decompose, real, wedge_distance,
    wedge_norm,
};
use darktraj_core::measures::{linear_fit, ray_w1, EmpiricalMeasure};
use darktraj_core::presets::{self, i_times, pauli_x, pauli_y, pauli_z, Example1Variant};
use darktraj_core::rng::{random_ray, stream};
use darktraj_core::trajectory::{mean_darkness_gap_curve, run_trajectory, State};
use darktraj_core::{CMatrix, DensityMatrix, Ray, Subspace};
use rand::Rng;

type Check = Result<(bool, String), String>;

fn core<T>(r: darktraj_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn ex2_discrete() -> KrausEnsemble {
    presets::example2(PI / 2.0, PI / 4.0).expect("preset")
}

/// Discovery, χ̂ and the smart family centered at the heaviest atom.
struct Stages {
    chi: EmpiricalDarkMeasure,
    atoms: Vec<Subspace>,
    family: IsometryFamily,
    group: UnitaryGroupClosure,
}

fn stages(e: &KrausEnsemble, seed: u64) -> Result<Stages, String> {
    let atlas = core(discover_maximal_dark(e, 16, DEFAULT_CHAIN_LEN, seed))?;
    let chi = core(estimate_chi_inv(e, &atlas, 1000, 10_000, seed))?;
    let atoms: Vec<Subspace> = chi.atoms.iter().map(|a| a.0.clone()).collect();
    let mut c = 0;
    for (k, a) in chi.atoms.iter().enumerate() {
        if a.1 > chi.atoms[c].1 {
            c = k;
        }
    }
    let family = core(build_smart_family(e, &atoms, &atoms[c], atoms[c].basis(), WordBudget::default()))?;
    let gens = core(family_generators(&family, e, &atoms))?;
    let group = core(group_closure(&gens, DEFAULT_GROUP_CAP))?;
    Ok(Stages {
        chi,
        atoms,
        family,
        group,
    })
}

fn criterion_1() -> Check {
    let mut cases: Vec<(&str, KrausEnsemble)> = vec![];
    for v in [Example1Variant::FullGroup, Example1Variant::CircleFlip, Example1Variant::Quaternion] {
        cases.push(("ex1", core(v.ensemble())?));
    }
    cases.push(("ex2", core(presets::example2(0.62, 0.41))?));
    cases.push(("ex2-4b", ex2_discrete()));
    cases.push(("ex3", core(presets::example3(0.3, false))?));
    cases.push(("ex3+v3", core(presets::example3(0.3, true))?));
    let mut worst: f64 = 0.0;
    for (_, e) in &cases {
        worst = worst.max(core(e.validate())?);
    }
    Ok((worst <= 1e-12, format!("{} presets, max residual {worst:.1e}", cases.len())))
}

fn criterion_2() -> Check {
    let e = core(Example1Variant::FullGroup.ensemble())?;
    let atlas = core(discover_maximal_dark(&e, 16, DEFAULT_CHAIN_LEN, 2))?;
    let (da, db) = presets::example1_dark();
    let locate = |q: &Subspace| -> Option<usize> {
        atlas
            .representatives
            .iter()
            .position(|d| gap_distance(d, q).is_ok_and(|g| g <= 1e-8))
    };
    let (Some(ia), Some(ib)) = (locate(&da), locate(&db)) else {
        return Ok((false, format!("atlas of {} misses D_a or D_b", atlas.representatives.len())));
    };
    let tr = core(atlas_transitions(&e, &atlas))?;
    let want = [[0.0, 1.0], [1.0, 0.0]];
    let mut t_err: f64 = 0.0;
    for (i, a) in [ia, ib].into_iter().enumerate() {
        for (j, b) in [ia, ib].into_iter().enumerate() {
            t_err = t_err.max((tr.matrix[a][b] - want[i][j]).abs());
        }
    }
    let chi = core(estimate_chi_inv(&e, &atlas, 1000, 10_000, 2))?;
    let wa = chi.weight_of(&da, 1e-6);
    let wb = chi.weight_of(&db, 1e-6);
    let period = core(channel::period(&e))?;
    let pass = atlas.r_m == 2 && t_err <= 1e-12 && (wa - 0.5).abs() <= 0.01 && (wb - 0.5).abs() <= 0.01 && period == 2;
    Ok((
        pass,
        format!("r_m {}, transition error {t_err:.1e}, chi ({wa:.4}, {wb:.4}), period {period}", atlas.r_m),
    ))
}

fn criterion_3() -> Check {
    let e = core(presets::example2(0.62, 0.41))?;
    let third = 1.0 / 3.0;
    let targets: Vec<CMatrix> = [1.0, -1.0]
        .iter()
        .map(|s| {
            CMatrix::from_fn(3, 3, |i, j| match (i, j) {
                (0, 0) | (1, 1) | (2, 2) => real(third),
                (0, 2) | (2, 0) => real(s * third),
                _ => real(0.0),
            })
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut words = 0usize;
    let mut layer = vec![identity(3)];
    for _ in 1..=10 {
        layer = layer
            .iter()
            .flat_map(|w| e.items().iter().map(move |it| &it.matrix * w))
            .collect();
        for w in &layer {
            let g = w.adjoint() * w;
            let m = &g / g.trace();
            let err = targets.iter().map(|t| (&m - t).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(err);
            words += 1;
        }
    }
    let atlas = core(discover_maximal_dark(&e, 16, DEFAULT_CHAIN_LEN, 3))?;
    let tr = core(atlas_transitions(&e, &atlas))?;
    let t_err = tr
        .matrix
        .iter()
        .flatten()
        .map(|x| (x - 0.5).abs())
        .fold(0.0f64, f64::max);
    let pass = worst <= 1e-12 && tr.matrix.len() == 2 && t_err <= 1e-12;
    Ok((
        pass,
        format!("{words} words, max M_n error {worst:.1e}; {} atlas subspaces, transition error {t_err:.1e}", tr.matrix.len()),
    ))
}

fn quaternions() -> Vec<CMatrix> {
    let mut out = Vec::new();
    for m in [identity(2), i_times(pauli_x()), i_times(pauli_y()), i_times(pauli_z())] {
        out.push(-m.clone());
        out.push(m);
    }
    out
}

fn cluster_check(clusters: &[Cluster], samples: &[(usize, Ray)]) -> Result<f64, String> {
    let mut radius: f64 = 0.0;
    for (_, y) in samples {
        let d = clusters
            .iter()
            .map(|c| core(darktraj_core::linalg::fubini_distance(&c.center, y)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        radius = radius.max(d);
    }
    Ok(radius)
}

fn criterion_4() -> Check {
    let e = core(Example1Variant::Quaternion.ensemble())?;
    let s = stages(&e, 4)?;
    let Some(el) = s.group.elements() else {
        return Ok((false, "closure is not finite".into()));
    };
    let matched = quaternions().iter().all(|q| el.iter().any(|g| (g - q).norm() <= 1e-9));
    let group_ok = el.len() == 8 && matched;

    let x = random_ray(2, &mut stream(4, 100));
    let set = core(sample_ergodic_measure(&s.family, &s.chi, &State::Ray(x), &s.group, 10_000, 4))?;
    let clusters = set.clusters.clone().unwrap_or_default();
    let pts: Vec<(usize, Ray)> = set.samples.iter().zip(set.rays()).map(|(a, r)| (a.atom, r)).collect();
    let radius = cluster_check(&clusters, &pts)?;
    let per_sphere: Vec<usize> = (0..s.atoms.len()).map(|k| clusters.iter().filter(|c| c.atom == k).count()).collect();
    let w_err = clusters.iter().map(|c| (c.weight - 0.125).abs()).fold(0.0f64, f64::max);
    let generic_ok = clusters.len() == 8 && per_sphere.iter().all(|&n| n == 4) && w_err <= 0.01 && radius <= 1e-6;

    let e0 = core(sample_ergodic_measure(&s.family, &s.chi, &State::Ray(Ray::basis(2, 0)), &s.group, 10_000, 5))?;
    let n0 = e0.clusters.map_or(0, |c| c.len());
    Ok((
        group_ok && generic_ok && n0 == 4,
        format!(
            "group order {} (quaternions matched: {matched}); generic {} atoms {:?} per sphere, weight error {w_err:.4}, radius {radius:.1e}; e_0 gives {n0} atoms",
            el.len(),
            clusters.len(),
            per_sphere
        ),
    ))
}

/// Products of all pairs until nothing new appears; exact SU identity.
fn brute_force_closure(gens: &[CMatrix]) -> usize {
    let mut el: Vec<CMatrix> = vec![identity(gens[0].nrows())];
    for g in gens {
        if !el.iter().any(|x| (x - g).norm() < 1e-7) {
            el.push(g.clone());
        }
    }
    loop {
        let snapshot = el.clone();
        let before = el.len();
        for a in &snapshot {
            for b in &snapshot {
                let p = a * b;
                if !el.iter().any(|x| (x - &p).norm() < 1e-7) {
                    el.push(p);
                }
            }
        }
        if el.len() == before || el.len() > 10_000 {
            return el.len();
        }
    }
}

/// Tangency of the two spheres at e_1 ∈ ℂ³, pulled back through J_a: `[0, 1]`.
fn tangent_base_ray(s: &Stages) -> Result<Ray, String> {
    let ja = s.family.lookup(&s.atoms[0]).map_err(|e| e.to_string())?;
    core(Ray::new(ja.adjoint() * Ray::basis(3, 1).vector()))
}

fn criterion_5() -> Check {
    let e = ex2_discrete();
    let s = stages(&e, 5)?;
    let order = s.group.order();
    let brute = brute_force_closure(&s.group.generators);
    let finite = matches!(s.group.kind, GroupKind::Finite(_)) && order == Some(brute);

    let x = random_ray(2, &mut stream(5, 100));
    let set = core(sample_ergodic_measure(&s.family, &s.chi, &State::Ray(x), &s.group, 10_000, 6))?;
    let generic = set.clusters.unwrap_or_default();
    let g_err = generic.iter().map(|c| (c.weight - 1.0 / 16.0).abs()).fold(0.0f64, f64::max);
    let generic_ok = generic.len() == 16 && g_err <= 0.01;

    let tangent_base = tangent_base_ray(&s)?;
    let set = core(sample_ergodic_measure(&s.family, &s.chi, &State::Ray(tangent_base), &s.group, 10_000, 7))?;
    let tangent = set.clusters.unwrap_or_default();
    let e1 = Ray::basis(3, 1);
    let (touch, others): (Vec<&Cluster>, Vec<&Cluster>) = tangent.iter().partition(|c| c.center.same_as(&e1));
    let mean_other = others.iter().map(|c| c.weight).sum::<f64>() / others.len().max(1) as f64;
    let o_err = others.iter().map(|c| (c.weight - 0.125).abs()).fold(0.0f64, f64::max);
    let exact = core(exact_ergodic_atoms(&s.family, &s.chi, &tangent_base_ray(&s)?, &s.group))?;
    let exact_w: Vec<String> = exact.iter().map(|a| format!("{:.4}", a.1)).collect();
    let t_ok = touch.len() == 1 && (touch[0].weight - 2.0 * mean_other).abs() <= 0.01 && o_err <= 0.01;
    Ok((
        finite && generic_ok && t_ok,
        format!(
            "order {order:?} (brute force {brute}); generic {} atoms, weight error {g_err:.4}; tangency {} atoms, tangency weight {:.4} vs others {mean_other:.4} (exact law [{}])",
            generic.len(),
            tangent.len(),
            touch.first().map_or(f64::NAN, |c| c.weight),
            exact_w.join(", ")
        ),
    ))
}

fn criterion_6() -> Check {
    let (e0, e1) = presets::example3_dark();
    let atoms = vec![e0.clone(), e1];
    let pm_x = [identity(2), -identity(2), i_times(pauli_x()), -i_times(pauli_x())];
    let mut detail = Vec::new();
    let mut pass = true;
    for (with_v3, want_smart) in [(false, 4), (true, 8)] {
        let e = core(presets::example3(0.3, with_v3))?;
        let smart = core(build_smart_family(&e, &atoms, &e0, e0.basis(), WordBudget::default()))?;
        let g = core(group_closure(&core(family_generators(&smart, &e, &atoms))?, DEFAULT_GROUP_CAP))?;
        let emb = core(IsometryFamily::embedding(&atoms))?;
        let ge = core(group_closure(&core(family_generators(&emb, &e, &atoms))?, DEFAULT_GROUP_CAP))?;
        let mut ok = g.order() == Some(want_smart) && ge.order() == Some(8);
        if !with_v3 {
            let el = g.elements().unwrap_or(&[]);
            ok &= pm_x.iter().all(|q| el.iter().any(|x| (x - q).norm() <= 1e-9));
        }
        pass &= ok;
        detail.push(format!(
            "v3 {with_v3}: smart {:?}, embedding {:?}",
            g.order(),
            ge.order()
        ));
    }
    Ok((pass, detail.join("; ")))
}

fn criterion_7() -> Check {
    let e = core(Example1Variant::FullGroup.ensemble())?;
    let (da, db) = presets::example1_dark();
    let seeds: Vec<u64> = (0..200).collect();
    let curve = core(mean_darkness_gap_curve(&e, &[da, db], 60, &seeds))?;
    let xs: Vec<f64> = (1..=60).map(|n| n as f64).collect();
    let ys: Vec<f64> = curve[1..].iter().map(|g| g.ln()).collect();
    let fit = core(linear_fit(&xs, &ys))?;
    let at50 = curve[50];
    Ok((
        at50 <= 1e-6 && fit.slope < 0.0 && fit.r_squared >= 0.9,
        format!(
            "mean gap at n=50 is {at50:.4} (needs <= 1e-6); log fit slope {:.5}, R^2 {:.4}",
            fit.slope, fit.r_squared
        ),
    ))
}

fn criterion_8() -> Check {
    let e2 = core(presets::example2(0.62, 0.41))?;
    let mut s2_max: f64 = 0.0;
    for n in 1..=8 {
        s2_max = s2_max.max(core(s_of_n(&e2, n, SMode::Exhaustive, 2, 0, 0))?.value);
    }
    let e1 = core(Example1Variant::FullGroup.ensemble())?;
    let s1: Vec<f64> = (1..=8)
        .map(|n| core(s_of_n(&e1, n, SMode::Exhaustive, 2, 0, 0)).map(|s| s.value))
        .collect::<Result<_, _>>()?;
    let mut sub_excess = f64::NEG_INFINITY;
    for a in 1..=8 {
        for b in 1..=8 - a {
            sub_excess = sub_excess.max(s1[a + b - 1] - s1[a - 1] * s1[b - 1]);
        }
    }
    let decreasing = s1[1..].windows(2).all(|w| w[1].ln() < w[0].ln());
    let shown: Vec<String> = s1.iter().map(|x| format!("{x:.5}")).collect();
    Ok((
        s2_max <= 1e-12 && sub_excess <= 1e-12 && decreasing,
        format!(
            "ex2 max s(n) {s2_max:.1e}; ex1 submultiplicativity excess {sub_excess:.2e}; ex1 s(1..8) = [{}], strictly decreasing from n=2: {decreasing}",
            shown.join(", ")
        ),
    ))
}

fn criterion_9() -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut judge = |name: &str, rays: &[Ray], e: &KrausEnsemble, seed: u64, expect_invariant: bool| -> Result<(), String> {
        let r = core(invariance_residual(rays, e, seed))?;
        let ok = if expect_invariant {
            r.residual <= 3.0 * r.std_error
        } else {
            r.residual > 10.0 * r.std_error
        };
        pass &= ok;
        lines.push(format!(
            "{name} {:.1}xSE",
            r.residual / r.std_error.max(f64::MIN_POSITIVE)
        ));
        Ok(())
    };

    let e1 = core(Example1Variant::FullGroup.ensemble())?;
    let (da, db) = presets::example1_dark();
    let mut rng = stream(9, 0);
    let mut unif = Vec::with_capacity(10_000);
    let mut one = Vec::with_capacity(10_000);
    for k in 0..10_000 {
        let q = if k % 2 == 0 { &da } else { &db };
        unif.push(core(Ray::new(q.basis() * random_ray(2, &mut rng).vector()))?);
        one.push(core(Ray::new(da.basis() * random_ray(2, &mut rng).vector()))?);
    }
    judge("nu_unif", &unif, &e1, 90, true)?;

    for (k, (name, e)) in [
        ("ex1-5c", core(Example1Variant::Quaternion.ensemble())?),
        ("ex1-5b", core(Example1Variant::CircleFlip.ensemble())?),
        ("ex2-4b", ex2_discrete()),
    ]
    .into_iter()
    .enumerate()
    {
        let s = stages(&e, 9 + k as u64)?;
        let x = random_ray(2, &mut stream(9, 1 + k as u64));
        let set = core(sample_ergodic_measure(&s.family, &s.chi, &State::Ray(x), &s.group, 10_000, 91 + k as u64))?;
        judge(name, &set.rays(), &e, 92 + k as u64, true)?;
    }
    judge("one-sphere", &one, &e1, 99, false)?;
    Ok((pass, lines.join(", ")))
}

fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `⋀² a` in the basis `e_i ∧ e_j`, `i < j`: entries are 2×2 minors.
fn exterior_square(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    CMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
        let (i, j) = pairs[r];
        let (k, l) = pairs[c];
        a[(i, k)] * a[(j, l)] - a[(i, l)] * a[(j, k)]
    })
}

fn criterion_10() -> Check {
    let mut rng = stream(10, 0);
    let n = 1000;
    let (mut polar, mut dist, mut wedge, mut tri) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..n {
        let a = random_matrix(&mut rng, 4, 4);
        let (u, p) = core(polar_decompose(&a))?;
        let (ev, _) = core(hermitian_eigen(&p))?;
        polar = polar
            .max((&a - &u * &p).norm())
            .max((u.adjoint() * &u - identity(4)).norm())
            .max((-ev[0]).max(0.0));

        let q = core(Subspace::span(&random_matrix(&mut rng, 4, 2)))?;
        let x = random_matrix(&mut rng, 4, 1).column(0).into_owned();
        dist = dist.max((core(dist_to_subspace(&x, &q))? - core(wedge_distance(&x, &q))?).abs());

        let w = core(wedge_norm(&a, 2))?;
        wedge = wedge.max((w - core(op_norm(&exterior_square(&a)))?).abs());

        let measure = |rng: &mut _| -> Result<EmpiricalMeasure<Ray>, String> {
            let k = 2 + (rand::Rng::random_range(rng, 0..6usize));
            let pts: Vec<Ray> = (0..k).map(|_| random_ray(2, rng)).collect();
            let ws: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(rng, 0.1..1.0)).collect();
            core(EmpiricalMeasure::new(pts, ws))
        };
        let (m1, m2, m3) = (measure(&mut rng)?, measure(&mut rng)?, measure(&mut rng)?);
        let lhs = core(ray_w1(&m1, &m3))?;
        let rhs = core(ray_w1(&m1, &m2))? + core(ray_w1(&m2, &m3))?;
        tri = tri.max(lhs - rhs);
    }
    Ok((
        polar <= 1e-10 && dist <= 1e-10 && wedge <= 1e-9 && tri <= 1e-8,
        format!("{n} instances each: polar {polar:.1e}, distance formulas {dist:.1e}, wedge^2 {wedge:.1e}, W1 triangle excess {tri:.1e}"),
    ))
}

fn criterion_11() -> Check {
    let e = core(Example1Variant::FullGroup.ensemble())?;
    let (da, _) = presets::example1_dark();
    let spectrum = [0.7, 0.3];
    let diag = CMatrix::from_diagonal(&darktraj_core::CVector::from_vec(vec![real(0.7), real(0.3)]));
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let u = random_unitary(&mut stream(11, seed));
        let rho0 = core(DensityMatrix::new(da.basis() * &u * &diag * u.adjoint() * da.basis().adjoint()))?;
        let traj = core(run_trajectory(&e, State::Density(rho0), 100, seed))?;
        for s in &traj.states {
            worst = worst.max(spectrum_error(&s.state.density(), &spectrum)?);
        }
    }
    let s = stages(&e, 11)?;
    let base = core(DensityMatrix::new(diag.clone()))?;
    let set = core(sample_ergodic_measure(&s.family, &s.chi, &State::Density(base), &s.group, 2000, 11))?;
    let mut sample_worst: f64 = 0.0;
    for smp in &set.samples {
        sample_worst = sample_worst.max(spectrum_error(&smp.point.density(), &spectrum)?);
    }
    Ok((
        worst <= 1e-10 && sample_worst <= 1e-10,
        format!("20 trajectories x 100 steps: spectrum error {worst:.1e}; 2000 nu_rho samples: {sample_worst:.1e}"),
    ))
}

fn random_unitary<R: Rng>(rng: &mut R) -> CMatrix {
    let a = random_matrix(rng, 2, 2);
    polar_decompose(&a).expect("square").0
}

/// Sorted spectrum against `want` padded with zeros.
fn spectrum_error(rho: &DensityMatrix, want: &[f64]) -> Result<f64, String> {
    let mut ev = core(rho.spectrum())?;
    ev.reverse();
    Ok(ev
        .iter()
        .enumerate()
        .map(|(k, x)| (x - want.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max))
}

fn criterion_12() -> Check {
    let commands: [&[&str]; 4] = [
        &["validate", "--example", "2"],
        &["dark", "--example", "1"],
        &["pipeline", "--example", "1", "--variant", "5c", "--seed", "12"],
        &["convergence", "--example", "2", "--format", "json"],
    ];
    let mut identical = 0;
    for cmd in commands {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut args: Vec<&str> = vec!["darktraj"];
            args.extend(cmd);
            let d = dir.path().to_str().unwrap().to_string();
            args.extend(["--out", &d]);
            let mut stdout = Vec::new();
            let code = darktraj::run(args, &mut stdout, &mut std::io::sink());
            if code != 0 {
                return Ok((false, format!("{cmd:?} exited {code}")));
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .map_err(|e| e.to_string())?
                .map(|f| {
                    let f = f.expect("entry");
                    (f.file_name().to_string_lossy().into_owned(), std::fs::read(f.path()).expect("read"))
                })
                .collect();
            files.sort();
            outputs.push((stdout, files));
        }
        if outputs[0] == outputs[1] {
            identical += 1;
        }
    }
    Ok((identical == commands.len(), format!("{identical}/{} commands byte-identical on rerun", commands.len())))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Check); 12] = [
        (1, "stochasticity", 1, criterion_1),
        (2, "example 1 structure", 30, criterion_2),
        (3, "example 2 exact M_n", 30, criterion_3),
        (4, "example 1(5c) group and support", 60, criterion_4),
        (5, "example 2(4b) discrete group", 60, criterion_5),
        (6, "example 3 minimality", 30, criterion_6),
        (7, "exponential convergence", 60, criterion_7),
        (8, "s(n) behavior", 30, criterion_8),
        (9, "invariance statistics", 120, criterion_9),
        (10, "metric and oracle suites", 60, criterion_10),
        (11, "spectrum preservation", 30, criterion_11),
        (12, "reproducibility", 10, criterion_12),
    ];
    let mut failed = Vec::new();
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {verdict} [{name}] {detail} ({:.2}s of {budget}s)",
            took.as_secs_f64()
        );
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
