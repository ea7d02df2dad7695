mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadsky::datagen::oracle_skyline;
use quadsky::skyrank::{check_partition, peel, SkylineLevels};

fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=4, 1usize..120, 2u32..12, any::<u64>()).prop_map(|(d, n, steps, seed)| {
        common::grid_vectors(&mut ChaCha8Rng::seed_from_u64(seed), n, d, steps)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn peel_matches_the_oracle(v in vectors()) {
        let p = peel(&v).unwrap();
        prop_assert_eq!(p.assignment(), oracle_skyline(&v));
        prop_assert!(check_partition(&v, &p).is_ok());
    }

    #[test]
    fn streamed_levels_match_peel(v in vectors()) {
        let p = peel(&v).unwrap();
        let streamed: Vec<Vec<usize>> = SkylineLevels::new(&v).unwrap().collect();
        prop_assert_eq!(p.levels(), streamed.as_slice());
    }

    #[test]
    fn strictly_increasing_transforms_keep_levels(v in vectors(), a in 0.1..5.0f64, b in -3.0..3.0f64) {
        let t: Vec<Vec<f64>> = v
            .iter()
            .map(|x| x.iter().enumerate().map(|(j, &y)| if j % 2 == 0 { a * y + b } else { y.powi(3) + y }).collect())
            .collect();
        prop_assert_eq!(peel(&v).unwrap(), peel(&t).unwrap());
    }

    #[test]
    fn input_order_does_not_change_levels(v in vectors(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..v.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| v[i].clone()).collect();
        let (a, b) = (peel(&v).unwrap().assignment(), peel(&shuffled).unwrap().assignment());
        for (pos, &i) in perm.iter().enumerate() {
            prop_assert_eq!(a[i], b[pos]);
        }
    }

    #[test]
    fn equal_vectors_share_a_level(v in vectors()) {
        let a = peel(&v).unwrap().assignment();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i] == v[j] {
                    prop_assert_eq!(a[i], a[j]);
                }
            }
        }
    }
}

#[test]
fn depth_is_bounded_by_distinct_values() {
    // a chain needs a distinct value per level in every dimension
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for steps in 1..8 {
        let v = common::grid_vectors(&mut rng, 300, 3, steps);
        let p = peel(&v).unwrap();
        assert!(p.depth() <= 3 * steps as usize + 1);
    }
}
