mod common;

use colband::clustering::ClusterModel;
use colband::policies::{CoLin, FactorUcb, MLinUcb};
use colband::replay::policy_select_update;
use colband::similarity::SimilarityMatrix;
use colband::synth::collaborative_w;
use common::plain_env;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn colin_on_identity_is_mlinucb(seed in 0u64..10_000, alpha in 0.0f64..2.0) {
        let env = plain_env(4, 3, 5, seed);
        let clusters = ClusterModel::from_centroids(env.centroids().clone());
        let mut a = CoLin::new(alpha, 3, SimilarityMatrix::identity(4));
        let mut b = MLinUcb::new(alpha, 3, 4);
        for ev in env.gen_log(600, seed + 1) {
            let c = clusters.assign(&ev.user_features);
            prop_assert_eq!(policy_select_update(&mut a, c, &ev).unwrap(), policy_select_update(&mut b, c, &ev).unwrap());
        }
        for i in 0..4 {
            prop_assert_eq!(a.effective_theta(i), b.theta(i));
        }
    }

    #[test]
    fn factorucb_without_latent_is_colin(seed in 0u64..10_000, alpha in 0.0f64..2.0) {
        let env = plain_env(4, 3, 5, seed);
        let clusters = ClusterModel::from_centroids(env.centroids().clone());
        let w = collaborative_w(4, 0.3, seed);
        let mut a = FactorUcb::new(alpha, 0.9, 3, 0, w.clone()).with_latent_init(seed, 0.1);
        let mut b = CoLin::new(alpha, 3, w);
        for ev in env.gen_log(600, seed + 1) {
            let c = clusters.assign(&ev.user_features);
            prop_assert_eq!(policy_select_update(&mut a, c, &ev).unwrap(), policy_select_update(&mut b, c, &ev).unwrap());
        }
        prop_assert_eq!(a.theta(), b.theta());
    }
}
