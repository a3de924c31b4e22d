use proptest::prelude::*;

use proxsweep::analysis::certificate;
use proxsweep::scenarios::make_example;
use proxsweep::sets::{BProfile, MovingSet};
use proxsweep::sweep::integrate;
use proxsweep::StateVector;

fn ellipse(b: f64) -> MovingSet {
    MovingSet::ellipse_exterior_ball(BProfile::constant(b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ellipse_projection_is_feasible_and_idempotent(b in 1.05f64..3.5, x in -3.0f64..0.5, y in -1.5f64..1.5) {
        let set = ellipse(b);
        let z = StateVector::xy(x, y);
        let p = set.project(0.0, &z).unwrap();
        prop_assert!(set.contains(0.0, &p.point).unwrap());
        prop_assert!((p.distance - z.dist(&p.point)).abs() <= 1e-12);
        let again = set.project(0.0, &p.point).unwrap();
        prop_assert!(again.point.dist(&p.point) <= 1e-9);
    }

    #[test]
    fn ellipse_projection_beats_sampled_members(b in 1.2f64..3.0, x in -2.5f64..0.0, y in -1.0f64..1.0, seed in 0u64..1000) {
        use rand::SeedableRng;
        let set = ellipse(b);
        let z = StateVector::xy(x, y);
        let p = set.project(0.0, &z).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for m in set.sample_members(0.0, 200, &mut rng).unwrap() {
            prop_assert!(p.distance <= z.dist(&m) + 1e-12);
        }
    }

    #[test]
    fn crowd_projection_is_feasible(coords in proptest::collection::vec(-1.0f64..1.0, 6), r in 0.05f64..0.3) {
        let set = MovingSet::crowd(3, r, None).unwrap();
        let z = StateVector::from_slice(&coords);
        let p = set.project(0.0, &z).unwrap();
        prop_assert!(set.contains(0.0, &p.point).unwrap());
        prop_assert!(p.distance <= z.dist(&p.point) + 1e-12);
    }

    #[test]
    fn certificate_sign_matches_inequality(alpha in 0.01f64..5.0, l_c in 0.0f64..1.0, m_f in 0.0f64..5.0, eta in 0.01f64..10.0) {
        let c = certificate(alpha, l_c, m_f, eta).unwrap();
        prop_assert_eq!(c.applicable, c.alpha_bar < 0.0);
        prop_assert_eq!(c.applicable, c.inequality_holds());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scenario_b_stays_feasible(x in -2.45f64..-1.05, y in -0.5f64..0.5) {
        let cfg = make_example(2.1, 0.2, 10.0, 1.0).unwrap();
        let x0 = cfg.set.project(0.0, &StateVector::xy(x, y)).unwrap().point;
        let traj = integrate(&cfg.set, &cfg.field, 0.0, &x0, 3.0, 1e-2).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            prop_assert!(cfg.set.contains(*t, s).unwrap());
        }
    }
}
