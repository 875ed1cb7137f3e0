//! Check-in records, interned check-in logs and per-location visit tables.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::entropy::location_entropy;
use crate::{Error, Nats, Result};

/// Index into an [`IdSpace`] of users.
pub type UserIdx = u32;
/// Index into an [`IdSpace`] of locations.
pub type LocationIdx = u32;

/// A UTC instant with second precision, stored as Unix seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix_seconds(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn as_unix_seconds(self) -> i64 {
        self.0
    }

    /// Parses an RFC 3339 / ISO-8601 instant such as `2010-10-19T23:55:27Z`.
    /// Sub-second digits are truncated.
    pub fn parse(s: &str) -> Option<Self> {
        DateTime::parse_from_rfc3339(s)
            .ok()
            .map(|t| Timestamp(t.with_timezone(&Utc).timestamp()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(t) => f.write_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => write!(f, "@{}", self.0),
        }
    }
}

/// One visit of a user to a location: the raw input row.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckIn {
    pub user_id: String,
    pub location_id: String,
    pub timestamp: Timestamp,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

impl CheckIn {
    pub fn new(user_id: impl Into<String>, location_id: impl Into<String>, timestamp: Timestamp) -> Self {
        CheckIn {
            user_id: user_id.into(),
            location_id: location_id.into(),
            timestamp,
            lat: None,
            lon: None,
        }
    }

    pub fn with_coords(mut self, lat: f64, lon: f64) -> Self {
        self.lat = Some(lat);
        self.lon = Some(lon);
        self
    }

    /// Checks the record invariants, returning a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.user_id.is_empty() {
            return Err("missing user id".into());
        }
        if self.location_id.is_empty() {
            return Err("missing location id".into());
        }
        if let Some(lat) = self.lat {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(format!("latitude {lat} outside [-90, 90]"));
            }
        }
        if let Some(lon) = self.lon {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(format!("longitude {lon} outside [-180, 180]"));
            }
        }
        Ok(())
    }
}

/// Borrowed view of one row of a [`CheckInLog`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckInRef<'a> {
    pub user_id: &'a str,
    pub location_id: &'a str,
    pub timestamp: Timestamp,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

impl CheckInRef<'_> {
    pub fn to_owned(&self) -> CheckIn {
        CheckIn {
            user_id: self.user_id.to_owned(),
            location_id: self.location_id.to_owned(),
            timestamp: self.timestamp,
            lat: self.lat,
            lon: self.lon,
        }
    }
}

/// A sorted set of identifiers. Index order equals ascending identifier order,
/// so iterating by index is iterating by id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdSpace {
    names: Arc<[Box<str>]>,
}

impl IdSpace {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: u32) -> &str {
        &self.names[idx as usize]
    }

    pub fn position(&self, name: &str) -> Option<u32> {
        self.names
            .binary_search_by(|probe| (**probe).cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    /// Sorts `names` and returns the id space plus a map from old to new index.
    fn canonicalize(names: Vec<String>) -> (IdSpace, Vec<u32>) {
        let mut order: Vec<u32> = (0..names.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut remap = vec![0u32; names.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut names: Vec<Option<String>> = names.into_iter().map(Some).collect();
        let sorted: Vec<Box<str>> = order
            .iter()
            .map(|&old| names[old as usize].take().unwrap_or_default().into_boxed_str())
            .collect();
        (IdSpace { names: sorted.into() }, remap)
    }
}

/// A visit with interned ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub user: UserIdx,
    pub location: LocationIdx,
    pub timestamp: Timestamp,
}

/// A sequence of check-ins with interned user and location ids.
///
/// Row order is preserved. Ids are validated on construction, so every row of a
/// log satisfies the [`CheckIn`] invariants.
#[derive(Clone, Debug, Default)]
pub struct CheckInLog {
    users: IdSpace,
    locations: IdSpace,
    visits: Vec<Visit>,
    // Empty when no row carried coordinates.
    coords: Vec<(Option<f64>, Option<f64>)>,
}

impl CheckInLog {
    /// Builds a log from owned rows. A malformed row is rejected with its
    /// zero-based index.
    pub fn from_checkins<I: IntoIterator<Item = CheckIn>>(rows: I) -> Result<Self> {
        let mut builder = CheckInLogBuilder::default();
        for (row, checkin) in rows.into_iter().enumerate() {
            builder
                .push(checkin)
                .map_err(|reason| Error::InvalidRecord { row, reason })?;
        }
        Ok(builder.build())
    }

    /// Builds a log from pre-interned visits. `visits` index into `user_names`
    /// and `location_names`, which must be free of duplicates and empty names.
    /// Names without visits are dropped.
    pub fn from_indexed(
        user_names: Vec<String>,
        location_names: Vec<String>,
        mut visits: Vec<Visit>,
    ) -> Result<Self> {
        for (space, names) in [("user", &user_names), ("location", &location_names)] {
            if names.iter().any(|n| n.is_empty()) {
                return Err(Error::InvalidParameter(format!("empty {space} id")));
            }
        }
        for (row, v) in visits.iter().enumerate() {
            if v.user as usize >= user_names.len() || v.location as usize >= location_names.len() {
                return Err(Error::InvalidRecord {
                    row,
                    reason: "id index out of range".into(),
                });
            }
        }
        let (user_names, user_keep) = retain_used(user_names, visits.iter().map(|v| v.user));
        let (location_names, loc_keep) = retain_used(location_names, visits.iter().map(|v| v.location));
        let (users, user_remap) = IdSpace::canonicalize(user_names);
        let (locations, loc_remap) = IdSpace::canonicalize(location_names);
        for pair in [&users, &locations] {
            if pair.names.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter("duplicate id".into()));
            }
        }
        for v in &mut visits {
            v.user = user_remap[user_keep[v.user as usize] as usize];
            v.location = loc_remap[loc_keep[v.location as usize] as usize];
        }
        Ok(CheckInLog {
            users,
            locations,
            visits,
            coords: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn users(&self) -> &IdSpace {
        &self.users
    }

    pub fn locations(&self) -> &IdSpace {
        &self.locations
    }

    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    pub fn get(&self, row: usize) -> Option<CheckInRef<'_>> {
        let v = self.visits.get(row)?;
        let (lat, lon) = self.coords.get(row).copied().unwrap_or((None, None));
        Some(CheckInRef {
            user_id: self.users.name(v.user),
            location_id: self.locations.name(v.location),
            timestamp: v.timestamp,
            lat,
            lon,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = CheckInRef<'_>> + '_ {
        (0..self.visits.len()).filter_map(move |row| self.get(row))
    }

    pub fn to_checkins(&self) -> Vec<CheckIn> {
        self.iter().map(|r| r.to_owned()).collect()
    }

    /// Keeps the rows for which `keep` returns true, preserving order and id spaces.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize, &Visit) -> bool) -> CheckInLog {
        let mut visits = Vec::new();
        let mut coords = Vec::new();
        for (row, v) in self.visits.iter().enumerate() {
            if keep(row, v) {
                visits.push(*v);
                if let Some(c) = self.coords.get(row) {
                    coords.push(*c);
                }
            }
        }
        CheckInLog {
            users: self.users.clone(),
            locations: self.locations.clone(),
            visits,
            coords,
        }
    }
}

#[derive(Default)]
struct CheckInLogBuilder {
    user_ids: HashMap<String, u32>,
    user_names: Vec<String>,
    location_ids: HashMap<String, u32>,
    location_names: Vec<String>,
    visits: Vec<Visit>,
    coords: Vec<(Option<f64>, Option<f64>)>,
    has_coords: bool,
}

impl CheckInLogBuilder {
    fn push(&mut self, checkin: CheckIn) -> std::result::Result<(), String> {
        checkin.validate()?;
        let user = intern(&mut self.user_ids, &mut self.user_names, checkin.user_id);
        let location = intern(&mut self.location_ids, &mut self.location_names, checkin.location_id);
        self.visits.push(Visit {
            user,
            location,
            timestamp: checkin.timestamp,
        });
        self.has_coords |= checkin.lat.is_some() || checkin.lon.is_some();
        self.coords.push((checkin.lat, checkin.lon));
        Ok(())
    }

    fn build(self) -> CheckInLog {
        let mut log = CheckInLog::from_indexed(self.user_names, self.location_names, self.visits)
            .expect("builder interns unique, validated ids");
        if self.has_coords {
            log.coords = self.coords;
        }
        log
    }
}

fn intern(ids: &mut HashMap<String, u32>, names: &mut Vec<String>, name: String) -> u32 {
    if let Some(&idx) = ids.get(&name) {
        return idx;
    }
    let idx = names.len() as u32;
    names.push(name.clone());
    ids.insert(name, idx);
    idx
}

/// Visit counts of one location, sorted by ascending user id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocationCounts {
    pub location: LocationIdx,
    counts: Vec<(UserIdx, u64)>,
}

impl LocationCounts {
    /// Number of distinct users, `n = |U_l|`.
    pub fn n_users(&self) -> u64 {
        self.counts.len() as u64
    }

    /// Total number of visits, `c_l`.
    pub fn total_visits(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    pub fn entries(&self) -> &[(UserIdx, u64)] {
        &self.counts
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + Clone + '_ {
        self.counts.iter().map(|&(_, c)| c)
    }

    pub fn count_of(&self, user: UserIdx) -> Option<u64> {
        self.counts
            .binary_search_by_key(&user, |&(u, _)| u)
            .ok()
            .map(|i| self.counts[i].1)
    }

    pub fn entropy(&self) -> Nats {
        location_entropy(self.counts()).expect("stored locations have at least one visitor")
    }

    pub(crate) fn map_counts(&self, f: impl Fn(u64) -> u64) -> LocationCounts {
        LocationCounts {
            location: self.location,
            counts: self.counts.iter().map(|&(u, c)| (u, f(c))).collect(),
        }
    }
}

/// Per-location map `user -> c_{l,u}`, every count positive.
///
/// Locations are stored in ascending id order; each location's users likewise.
/// The table is immutable once built.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VisitTable {
    users: IdSpace,
    locations: IdSpace,
    entries: Vec<LocationCounts>,
}

impl VisitTable {
    /// Builds a table from `(location_id, user_id, count)` triples. Repeated
    /// pairs are summed; zero counts are dropped.
    pub fn from_counts<'a, I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut user_ids = HashMap::new();
        let mut user_names = Vec::new();
        let mut location_ids = HashMap::new();
        let mut location_names = Vec::new();
        let mut pairs: Vec<(u32, u32, u64)> = Vec::new();
        for (row, (loc, user, count)) in triples.into_iter().enumerate() {
            if loc.is_empty() || user.is_empty() {
                return Err(Error::InvalidRecord {
                    row,
                    reason: "missing id".into(),
                });
            }
            if count == 0 {
                continue;
            }
            let l = intern(&mut location_ids, &mut location_names, loc.to_owned());
            let u = intern(&mut user_ids, &mut user_names, user.to_owned());
            pairs.push((l, u, count));
        }
        let (users, user_remap) = IdSpace::canonicalize(user_names);
        let (locations, loc_remap) = IdSpace::canonicalize(location_names);
        let mut pairs: Vec<(u32, u32, u64)> = pairs
            .into_iter()
            .map(|(l, u, c)| (loc_remap[l as usize], user_remap[u as usize], c))
            .collect();
        pairs.sort_unstable();

        let mut entries: Vec<LocationCounts> = Vec::new();
        for (location, user, count) in pairs {
            match entries.last_mut() {
                Some(e) if e.location == location => match e.counts.last_mut() {
                    Some(last) if last.0 == user => last.1 += count,
                    _ => e.counts.push((user, count)),
                },
                _ => entries.push(LocationCounts {
                    location,
                    counts: vec![(user, count)],
                }),
            }
        }
        Ok(VisitTable {
            users,
            locations,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn users(&self) -> &IdSpace {
        &self.users
    }

    pub fn locations(&self) -> &IdSpace {
        &self.locations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LocationCounts> {
        self.entries.iter()
    }

    pub fn location_id(&self, entry: &LocationCounts) -> &str {
        self.locations.name(entry.location)
    }

    pub fn get(&self, location_id: &str) -> Option<&LocationCounts> {
        let idx = self.locations.position(location_id)?;
        self.entries
            .binary_search_by_key(&idx, |e| e.location)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Count of `user_id` at `location_id`, if that user visited it.
    pub fn count(&self, location_id: &str, user_id: &str) -> Option<u64> {
        let user = self.users.position(user_id)?;
        self.get(location_id)?.count_of(user)
    }

    /// Largest single `c_{l,u}` in the table (`C_max`), 0 for an empty table.
    pub fn max_count(&self) -> u64 {
        self.entries
            .iter()
            .flat_map(|e| e.counts())
            .max()
            .unwrap_or(0)
    }

    /// Largest number of distinct locations visited by one user (`M_max`).
    pub fn max_locations_per_user(&self) -> u64 {
        let mut per_user = vec![0u64; self.users.len()];
        for e in &self.entries {
            for &(u, _) in &e.counts {
                per_user[u as usize] += 1;
            }
        }
        per_user.into_iter().max().unwrap_or(0)
    }

    pub(crate) fn map_entries(&self, f: impl Fn(&LocationCounts) -> LocationCounts) -> VisitTable {
        VisitTable {
            users: self.users.clone(),
            locations: self.locations.clone(),
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// Drops names no visit refers to. Returns the kept names and a map from old
/// index to position among them.
fn retain_used(names: Vec<String>, refs: impl Iterator<Item = u32>) -> (Vec<String>, Vec<u32>) {
    let mut used = vec![false; names.len()];
    for r in refs {
        used[r as usize] = true;
    }
    let mut remap = vec![u32::MAX; names.len()];
    let mut kept = Vec::new();
    for (i, name) in names.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len() as u32;
            kept.push(name);
        }
    }
    (kept, remap)
}

/// Tallies visits per `(location, user)`. Locations without visits are absent.
pub fn count_visits(log: &CheckInLog) -> VisitTable {
    let mut keys: Vec<u64> = log
        .visits()
        .iter()
        .map(|v| (u64::from(v.location) << 32) | u64::from(v.user))
        .collect();
    keys.sort_unstable();

    let mut entries: Vec<LocationCounts> = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let key = keys[i];
        let mut j = i + 1;
        while j < keys.len() && keys[j] == key {
            j += 1;
        }
        let location = (key >> 32) as LocationIdx;
        let user = key as UserIdx;
        let count = (j - i) as u64;
        match entries.last_mut() {
            Some(e) if e.location == location => e.counts.push((user, count)),
            _ => entries.push(LocationCounts {
                location,
                counts: vec![(user, count)],
            }),
        }
        i = j;
    }

    VisitTable {
        users: log.users().clone(),
        locations: log.locations().clone(),
        entries,
    }
}
