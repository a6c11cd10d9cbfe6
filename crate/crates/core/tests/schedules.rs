use mds_towers::construction::{
    derive_schedule_thm1, derive_schedule_thm2, derive_schedule_thm3, RateSequence,
    ScheduleOptions, DENSITY_P0,
};
use mds_towers::tower::gcd;
use proptest::prelude::*;

fn wide() -> ScheduleOptions {
    ScheduleOptions {
        search_cap: 1 << 40,
        ..ScheduleOptions::default()
    }
}

fn all_gcd(heights: &[u64], extra: u64) -> u64 {
    heights.iter().fold(extra, |g, &h| gcd(g, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slab_schedule_postconditions(c in 0.01f64..=0.5, beta in 0.25f64..=1.0) {
        let rate = RateSequence::power_law(c, beta);
        let s = derive_schedule_thm1(&rate, 2, &wide()).unwrap();
        let mut prev = 0;
        for k in 0..2 {
            let n = s.n[k];
            let thr = 2f64.powi(-(k as i32) - 3);
            prop_assert!(n.is_power_of_two() && n > prev);
            prop_assert!(s.a_n[k] <= thr);
            prop_assert_eq!(s.a_n[k], rate.value(n));
            // First dyadic point past the previous one.
            prop_assert!(n / 2 <= prev || rate.value(n / 2) > thr);
            prop_assert_eq!(s.d[k], 2.0 * s.a_n[k]);
            prop_assert!(s.slab_bound(k) >= s.a_n[k]);
            prop_assert!(s.heights[k] >= n);
            // The slab keeps H - n + 1 levels worth exactly d_k.
            let level = s.p[k] / s.heights[k] as f64;
            prop_assert!((level * (s.heights[k] - n + 1) as f64 - s.d[k]).abs() <= 1e-12 * s.d[k]);
            prop_assert!((n * n) as f64 * level < s.rho[k] * s.d[k]);
            prev = n;
        }
        prop_assert!(s.a_n.iter().sum::<f64>() <= 0.25);
        prop_assert!(s.remainder_mass > 0.0);
        prop_assert!((s.p.iter().sum::<f64>() + s.remainder_mass - 1.0).abs() < 1e-12);
        prop_assert!(s.remainder_height >= s.n[1]);
        prop_assert_eq!(all_gcd(&s.heights, s.remainder_height), 1);
    }

    #[test]
    fn mixing_schedule_postconditions(c in 0.01f64..=0.5, beta in 0.25f64..=1.0) {
        let rate = RateSequence::power_law(c, beta);
        let s = derive_schedule_thm3(&rate, 3, &wide()).unwrap();
        let mut free = 1.0;
        for k in 0..3 {
            let n = s.n[k];
            prop_assert!(n.is_power_of_two());
            prop_assert!(k == 0 || n > s.n[k - 1]);
            prop_assert!(s.p[k] >= 4.0 * s.a_n[k]);
            prop_assert!(s.quarter_mass(k) >= s.a_n[k]);
            prop_assert!(s.heights[k] >= 4 * n * n);
            prop_assert!(k == 0 || s.heights[k] > s.heights[k - 1]);
            prop_assert!(s.delta[k] > 0.0 && s.delta[k] < 1.0);
            prop_assert!(k == 0 || s.delta[k] <= s.delta[k - 1] + 1e-15);
            prop_assert!((s.p[k] - (1.0 - s.delta[k]) * free).abs() <= 1e-12);
            prop_assert!((s.eps[k] - 0.1 * 2f64.powi(-(k as i32))).abs() < 1e-15);
            free -= s.p[k];
        }
        prop_assert!(s.remainder_mass > 0.0);
        prop_assert!((s.remainder_mass - free).abs() < 1e-12);
        prop_assert_eq!(all_gcd(&s.heights, s.remainder_height), 1);
    }

    #[test]
    fn density_schedule_postconditions(c in 0.01f64..=0.5, beta in 0.5f64..=1.0) {
        let rate = RateSequence::power_law(c, beta);
        let s = derive_schedule_thm2(&rate, 1.0, 100.0, 4.0, 6, &ScheduleOptions::default()).unwrap();
        let dc = s.density.as_ref().unwrap();
        prop_assert_eq!(s.p[0], DENSITY_P0);
        for k in 0..6 {
            if k + 2 < 6 {
                prop_assert_eq!(s.p[k + 2], s.p[k] / 2.0);
            }
            let l = if k % 2 == 0 { 1.0 } else { 100.0 };
            prop_assert!((s.d[k] * l - s.p[k]).abs() < 1e-15);
            prop_assert!((s.rho[k] - s.d[k] / dc.sigma2.sqrt()).abs() < 1e-15);
            let n = s.n[k];
            prop_assert!(s.a_n[k] <= s.rho[k]);
            prop_assert!(k == 0 || n > s.n[k - 1]);
            let prev = if k == 0 { 0 } else { s.n[k - 1] };
            prop_assert!(n - 1 == prev || rate.value(n - 1) > s.rho[k]);
            prop_assert!(s.heights[k] >= 2 * n);
        }
        prop_assert!(s.remainder_mass > 0.0);
        prop_assert_eq!(all_gcd(&s.heights, s.remainder_height), 1);
        prop_assert!((dc.sigma2 - dc.sigma2_closed).abs() <= dc.variance_tail + dc.variance_remainder + 1e-15);
    }
}

#[test]
fn infeasible_and_bad_inputs_are_errors() {
    let slow = RateSequence::InverseLog { c: 0.5, beta: 0.25 };
    let tight = ScheduleOptions {
        search_cap: 1 << 10,
        ..ScheduleOptions::default()
    };
    assert!(derive_schedule_thm1(&slow, 3, &tight).is_err());
    assert!(derive_schedule_thm3(&RateSequence::power_law(0.5, 0.5), 1, &wide()).is_err());
    assert!(derive_schedule_thm2(&RateSequence::power_law(0.1, 1.0), 1.0, 5.0, 4.0, 4, &wide()).is_err());
    let bad_delta = ScheduleOptions {
        delta: 1.5,
        ..ScheduleOptions::default()
    };
    assert!(derive_schedule_thm3(&RateSequence::power_law(0.25, 0.5), 3, &bad_delta).is_err());
}
