//! Per-user contribution limits.

use crate::model::{CheckInLog, VisitTable};

/// Keeps, for every user, only the check-ins at their first `m` distinct
/// locations. Locations are ordered by the user's earliest visit to them, ties
/// broken by location id. All of a user's visits to a kept location survive.
pub fn truncate_locations(log: &CheckInLog, m: u64) -> CheckInLog {
    let pair_key = |user: u32, location: u32| (u64::from(user) << 32) | u64::from(location);
    let mut first: Vec<(u64, i64)> = log
        .visits()
        .iter()
        .map(|v| (pair_key(v.user, v.location), v.timestamp.as_unix_seconds()))
        .collect();
    first.sort_unstable();
    first.dedup_by_key(|&mut (key, _)| key);

    let mut kept: Vec<u64> = Vec::with_capacity(first.len());
    let mut user_pairs: Vec<(i64, u32)> = Vec::new();
    let mut start = 0;
    while start < first.len() {
        let user = first[start].0 >> 32;
        let end = start + first[start..].partition_point(|&(key, _)| key >> 32 == user);
        if (end - start) as u64 <= m {
            kept.extend(first[start..end].iter().map(|&(key, _)| key));
        } else {
            user_pairs.clear();
            user_pairs.extend(first[start..end].iter().map(|&(key, ts)| (ts, key as u32)));
            user_pairs.sort_unstable();
            let mut chosen: Vec<u64> = user_pairs[..m as usize]
                .iter()
                .map(|&(_, loc)| pair_key(user as u32, loc))
                .collect();
            chosen.sort_unstable();
            kept.extend(chosen);
        }
        start = end;
    }
    drop(first);

    log.filter_rows(|_, v| kept.binary_search(&pair_key(v.user, v.location)).is_ok())
}

/// Caps every per-user visit count at `c`.
pub fn clamp_visits(table: &VisitTable, c: u64) -> VisitTable {
    table.map_entries(|e| e.map_counts(|n| n.min(c)))
}
