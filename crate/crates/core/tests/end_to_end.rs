use darktraj_core::channel::{self, KrausEnsemble};
use darktraj_core::darkspace::{discover_maximal_dark, estimate_chi_inv, DEFAULT_CHAIN_LEN};
use darktraj_core::family::{
    build_smart_family, classify_transitivity, family_generators, group_closure, invariance_residual,
    sample_ergodic_measure, Transitivity, WordBudget, DEFAULT_GROUP_CAP,
};
use darktraj_core::linalg::{c64, identity, polar_decompose};
use darktraj_core::presets::Example1Variant;
use darktraj_core::rng::random_ray;
use darktraj_core::trajectory::{run_trajectory, State};
use darktraj_core::{CMatrix, Ray, Subspace};
use proptest::prelude::*;

#[test]
fn quaternion_variant_from_discovery_to_invariance() {
    let e = Example1Variant::Quaternion.ensemble().unwrap();
    let atlas = discover_maximal_dark(&e, 16, DEFAULT_CHAIN_LEN, 1).unwrap();
    assert_eq!(atlas.r_m, 2);
    let chi = estimate_chi_inv(&e, &atlas, 1000, 4000, 1).unwrap();
    let atoms: Vec<Subspace> = chi.atoms.iter().map(|a| a.0.clone()).collect();
    let fam = build_smart_family(&e, &atoms, &atoms[0], atoms[0].basis(), WordBudget::default()).unwrap();
    let g = group_closure(&family_generators(&fam, &e, &atoms).unwrap(), DEFAULT_GROUP_CAP).unwrap();
    assert_eq!(g.order(), Some(8));
    assert_eq!(classify_transitivity(&g).unwrap(), Transitivity::NotTransitive);

    let x = random_ray(2, &mut darktraj_core::rng::stream(1, 7));
    let set = sample_ergodic_measure(&fam, &chi, &State::Ray(x), &g, 4000, 1).unwrap();
    let r = invariance_residual(&set.rays(), &e, 1).unwrap();
    assert!(r.residual <= 3.0 * r.std_error, "{r:?}");
}

/// Kraus operators cut from the blocks of a random `k·d × d` isometry.
fn ensemble_from(entries: &[(f64, f64)], d: usize, k: usize) -> KrausEnsemble {
    let a = CMatrix::from_fn(k * d, k * d, |i, j| {
        let (re, im) = entries[i * k * d + j];
        c64(re, im)
    });
    let u = polar_decompose(&a).unwrap().0;
    let v = u.columns(0, d).into_owned();
    let ms = (0..k).map(|b| v.rows(b * d, d).into_owned()).collect();
    KrausEnsemble::from_matrices(ms).unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn isometry_blocks_are_stochastic(es in entries(36)) {
        let e = ensemble_from(&es, 3, 2);
        prop_assert!(e.validate().unwrap() <= 1e-12);
        let rho = identity(3) / c64(3.0, 0.0);
        let out = e.apply(&rho).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-12);
        let fp = channel::fixed_point(&e).unwrap();
        let rho = fp.fixed_point.matrix();
        prop_assert!((e.apply(rho).unwrap() - rho).norm() <= 1e-9);
    }

    #[test]
    fn trajectory_rays_follow_the_running_product(es in entries(36), seed in 0..1000u64) {
        let e = ensemble_from(&es, 3, 2);
        let x0 = Ray::basis(3, 0);
        let traj = run_trajectory(&e, State::Ray(x0.clone()), 25, seed).unwrap();
        for s in &traj.states {
            let y = Ray::new(&s.w * x0.vector()).unwrap();
            let State::Ray(r) = &s.state else { unreachable!() };
            prop_assert!(r.same_as(&y));
            prop_assert!((r.vector().norm() - 1.0).abs() <= 1e-12);
        }
    }
}
