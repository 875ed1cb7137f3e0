use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use entropy_sentry::{
    clamp_visits, count_visits, global_sensitivity, local_sensitivity, location_entropy,
    precompute_smooth_sensitivity, truncate_locations, CheckIn, CheckInLog, LimitedTable, SensitivityParams,
    Timestamp,
};

fn log_strategy() -> impl Strategy<Value = CheckInLog> {
    prop::collection::vec((0u8..12, 0u8..15, 0i64..1_000), 1..300).prop_map(|rows| {
        CheckInLog::from_checkins(rows.into_iter().map(|(u, l, t)| {
            CheckIn::new(format!("u{u}"), format!("l{l}"), Timestamp::from_unix_seconds(t))
        }))
        .unwrap()
    })
}

proptest! {
    #[test]
    fn truncation_keeps_at_most_m_locations_per_user(log in log_strategy(), m in 1u64..6) {
        let cut = truncate_locations(&log, m);
        let mut per_user: HashMap<&str, HashSet<&str>> = HashMap::new();
        for r in cut.iter() {
            per_user.entry(r.user_id).or_default().insert(r.location_id);
        }
        prop_assert!(per_user.values().all(|locs| locs.len() as u64 <= m));
        // Kept locations are visited in full.
        let before = count_visits(&log);
        let after = count_visits(&cut);
        for e in after.iter() {
            let id = after.location_id(e);
            for &(u, c) in e.entries() {
                prop_assert_eq!(before.count(id, after.users().name(u)), Some(c));
            }
        }
    }

    #[test]
    fn clamping_bounds_every_count(log in log_strategy(), c in 1u64..5) {
        let table = clamp_visits(&count_visits(&log), c);
        prop_assert!(table.max_count() <= c);
    }

    #[test]
    fn removing_a_user_moves_limited_entropy_by_at_most_global(log in log_strategy(), pick in any::<prop::sample::Index>()) {
        let (m, c) = (3u64, 4u64);
        let users: Vec<u32> = log.visits().iter().map(|v| v.user).collect();
        let victim = users[pick.index(users.len())];
        let full = LimitedTable::new(&log, m, c);
        let reduced = LimitedTable::new(&log.filter_rows(|_, v| v.user != victim), m, c);
        let mut affected = 0;
        for (i, e) in full.table().iter().enumerate() {
            let id = full.table().location_id(e);
            let h = full.entropies()[i];
            let h2 = reduced.table().get(id).map_or(0.0, |o| o.entropy());
            if reduced.table().get(id) != Some(e) {
                affected += 1;
            }
            prop_assert!((h - h2).abs() <= global_sensitivity(c) + 1e-9);
        }
        prop_assert!(affected as u64 <= m);
    }

    #[test]
    fn local_sensitivity_covers_one_user_changes(
        counts in prop::collection::vec(1u64..=6, 1..25),
        added in 1u64..=6,
        drop in any::<prop::sample::Index>(),
    ) {
        let c = 6;
        let n = counts.len() as u64;
        let h = location_entropy(counts.iter().copied()).unwrap();
        let mut grown = counts.clone();
        grown.push(added);
        let h_add = location_entropy(grown).unwrap();
        prop_assert!((h_add - h).abs() <= local_sensitivity(n, c) + 1e-9);
        if n > 1 {
            let mut shrunk = counts.clone();
            shrunk.remove(drop.index(counts.len()));
            let h_rm = location_entropy(shrunk).unwrap();
            prop_assert!((h_rm - h).abs() <= local_sensitivity(n, c) + 1e-9);
        }
    }

    #[test]
    fn smooth_sensitivity_is_beta_smooth(c in 2u64..40, eps in 0.1f64..10.0) {
        let sp = SensitivityParams::new(c, 300, eps, 1e-8, 1e-3).unwrap();
        let t = precompute_smooth_sensitivity(&sp).unwrap();
        let beta = sp.beta();
        let end = t.floor_from().map_or(300, |f| f - 1);
        for n in 1..end {
            let (a, b) = (t.get(n).unwrap(), t.get(n + 1).unwrap());
            prop_assert!(a <= (beta).exp() * b * (1.0 + 1e-12));
            prop_assert!(b <= (beta).exp() * a * (1.0 + 1e-12));
            prop_assert!(a >= local_sensitivity(n, c));
            prop_assert!(a <= global_sensitivity(c) + 1e-12);
        }
    }
}
