use num_complex::Complex64;
use num_rational::Ratio;
use packlab_core::ffield::{AdditiveCharacter, FieldSpace};
use packlab_core::ffourier::{dft, dft_naive, inverse_dft, m_max, m_star, set_spectrum, spheres_of, trial_rng, PointSet};
use packlab_core::orthgroup::OrthGroup;
use packlab_core::rigidpack::{check_instance, lambda_fourier, lambda_fourier_factored, orbit_union, MotionSet, RigidMotion};
use packlab_core::sampling::SetSampler;
use proptest::prelude::*;
use rand::Rng;

fn small_space() -> impl Strategy<Value = FieldSpace> {
    (prop::sample::select(vec![3u32, 5, 7]), 1usize..=3)
        .prop_filter("keep domains small", |(q, d)| (*q as usize).pow(*d as u32) <= 343)
        .prop_map(|(q, d)| FieldSpace::new(q, d).unwrap())
}

fn random_values(space: FieldSpace, seed: u64) -> Vec<Complex64> {
    let mut rng = trial_rng(seed, 0);
    (0..space.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plancherel(space in small_space(), seed in any::<u64>()) {
        let f = random_values(space, seed);
        let lhs = dft(space, &f).unwrap().energy();
        let rhs = f.iter().map(|v| v.norm_sqr()).sum::<f64>() / space.size() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn round_trip(space in small_space(), seed in any::<u64>()) {
        let f = random_values(space, seed);
        let back = inverse_dft(&dft(space, &f).unwrap());
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn axis_transform_matches_naive(space in small_space(), seed in any::<u64>()) {
        let f = random_values(space, seed);
        let a = dft(space, &f).unwrap();
        let b = dft_naive(space, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() <= 1e-10);
        }
    }

    #[test]
    fn character_sums_vanish_off_zero(space in small_space(), m in any::<prop::sample::Index>()) {
        let chi = AdditiveCharacter::new(space.q()).unwrap();
        let m = m.index(space.size());
        let s: Complex64 = (0..space.size()).map(|x| chi.at(space.dot_at(x, m))).sum();
        let want = if m == 0 { space.size() as f64 } else { 0.0 };
        prop_assert!((s - Complex64::new(want, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn spectrum_modulus_is_translation_invariant(space in small_space(), seed in any::<u64>(), shift in any::<prop::sample::Index>()) {
        let set = SetSampler::Mixed.sample(space, &mut trial_rng(seed, 1)).unwrap();
        let z = shift.index(space.size());
        let moved = PointSet::from_indices(space, set.indices().into_iter().map(|x| space.add_at(x, z))).unwrap();
        let (a, b) = (set_spectrum(&set), set_spectrum(&moved));
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-10);
        }
    }

    #[test]
    fn sphere_masses_sum_to_energy(space in small_space(), seed in any::<u64>()) {
        let set = SetSampler::Mixed.sample(space, &mut trial_rng(seed, 2)).unwrap();
        let fhat = set_spectrum(&set);
        let total: f64 = spheres_of(space).masses(&fhat).iter().sum();
        prop_assert!((total - fhat.energy()).abs() <= 1e-12);
        prop_assert!((fhat.energy() - set.len() as f64 / space.size() as f64).abs() <= 1e-12);
        if space.dim() >= 2 {
            let (star, _) = m_star(&set).unwrap();
            prop_assert!(star <= m_max(&set).unwrap() + 1e-15);
        }
    }
}

fn plane_group(q: u32) -> OrthGroup {
    OrthGroup::enumerate(q, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counting_identities(q in prop::sample::select(vec![3u32, 7, 11]), seed in any::<u64>()) {
        let group = plane_group(q);
        let space = FieldSpace::new(q, 2).unwrap();
        let mut rng = trial_rng(seed, 0);
        let set = SetSampler::Mixed.sample(space, &mut rng).unwrap();
        let k = rng.gen_range(1..=(group.order() * space.size()).min(400));
        let theta = MotionSet::random(&group, k, &mut rng).unwrap();
        let check = check_instance(&theta, &set).unwrap();
        prop_assert_eq!(check.multiplicity.total(), (set.len() * theta.len()) as u128);
        prop_assert_eq!(check.multiplicity.support(), check.union.clone());
        prop_assert!(check.cs_bound <= Ratio::from_integer(check.union.len() as u128));
        prop_assert!(check.lambda_hat_zero_ok);
    }

    #[test]
    fn factored_lambda_hat(q in prop::sample::select(vec![3u32, 7]), seed in any::<u64>()) {
        let group = plane_group(q);
        let space = FieldSpace::new(q, 2).unwrap();
        let mut rng = trial_rng(seed, 0);
        let set = SetSampler::Mixed.sample(space, &mut rng).unwrap();
        let theta = MotionSet::random(&group, rng.gen_range(1..=72), &mut rng).unwrap();
        let a = lambda_fourier(&theta, &set).unwrap();
        let b = lambda_fourier_factored(&theta, &set).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() <= 1e-9);
        }
    }

    #[test]
    fn union_size_is_rigid_invariant(q in prop::sample::select(vec![3u32, 7, 11]), seed in any::<u64>()) {
        let group = plane_group(q);
        let space = FieldSpace::new(q, 2).unwrap();
        let mut rng = trial_rng(seed, 0);
        let set = SetSampler::Mixed.sample(space, &mut rng).unwrap();
        let theta = MotionSet::random(&group, rng.gen_range(1..=60), &mut rng).unwrap();
        let phi = MotionSet::random(&group, 1, &mut rng).unwrap().motions()[0].clone();
        let base = orbit_union(&theta, &set).unwrap();

        // φ(Θ(E)) = (φΘ)(E)
        let outer = MotionSet::new(space, theta.motions().iter().map(|t| phi.compose(t).unwrap())).unwrap();
        let moved = orbit_union(&outer, &set).unwrap();
        prop_assert_eq!(moved.len(), base.len());

        // (Θφ⁻¹)(φE) = Θ(E)
        let image = PointSet::from_vectors(space, &set.indices().into_iter().map(|x| phi.apply(&space.point(x)).unwrap()).collect::<Vec<_>>()).unwrap();
        let inner = theta.precompose(&phi.inverse()).unwrap();
        prop_assert_eq!(orbit_union(&inner, &image).unwrap(), base);
    }

    #[test]
    fn orbit_stabilizer(q in prop::sample::select(vec![3u32, 5, 7, 11, 13]), idx in any::<prop::sample::Index>()) {
        let group = plane_group(q);
        let space = FieldSpace::new(q, 2).unwrap();
        let x = space.point(idx.index(space.size()));
        let orbit = PointSet::from_vectors(space, &group.elements().iter().map(|g| g.apply(&x).unwrap()).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(orbit.len() * group.stabilizer_size(&x).unwrap(), group.order());
    }
}

#[test]
fn identity_motion_has_unit_multiplicity() {
    let space = FieldSpace::new(5, 3).unwrap();
    let theta = MotionSet::new(space, [RigidMotion::identity(5, 3).unwrap()]).unwrap();
    let set = SetSampler::Density { p: 0.3 }.sample(space, &mut trial_rng(9, 0)).unwrap();
    let check = check_instance(&theta, &set).unwrap();
    assert!(check.all_hold());
    assert_eq!(check.union, set);
    assert_eq!(check.multiplicity.second_moment(), set.len() as u128);
}
