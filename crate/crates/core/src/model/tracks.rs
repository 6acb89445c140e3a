//! Flat and per-target descriptions of a data association and the bijection
//! between them.

use std::cmp::Ordering;

use crate::error::{MttError, Result};
use crate::linalg::{ObsVec, StateVec};

/// Observations per scan (scan `t` is `obs[t - 1]`) with optional ground truth.
#[derive(Clone, Debug, Default)]
pub struct Scene {
    pub obs: Vec<Vec<ObsVec>>,
    pub truth: Option<TrackSet>,
}

impl Scene {
    pub fn new(obs: Vec<Vec<ObsVec>>) -> Self {
        Scene { obs, truth: None }
    }

    pub fn n(&self) -> usize {
        self.obs.len()
    }

    /// Number of observations at scan `t` (1-based).
    pub fn k_y(&self, t: usize) -> usize {
        self.obs[t - 1].len()
    }

    /// Observation `o` (1-based) at scan `t` (1-based).
    pub fn y(&self, t: usize, o: usize) -> &ObsVec {
        &self.obs[t - 1][o - 1]
    }

    pub fn total_obs(&self) -> usize {
        self.obs.iter().map(Vec::len).sum()
    }
}

/// One target: alive on scans `birth..death()`, with one state and one
/// observation index (0 = missed) per scan alive.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub birth: usize,
    pub states: Vec<StateVec>,
    pub obs: Vec<usize>,
}

impl Track {
    pub fn new(birth: usize, states: Vec<StateVec>, obs: Vec<usize>) -> Self {
        Track { birth, states, obs }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// First scan at which the target no longer exists.
    pub fn death(&self) -> usize {
        self.birth + self.obs.len()
    }

    pub fn last_scan(&self) -> usize {
        self.death() - 1
    }

    pub fn alive_at(&self, t: usize) -> bool {
        t >= self.birth && t < self.death()
    }

    pub fn state_at(&self, t: usize) -> &StateVec {
        &self.states[t - self.birth]
    }

    pub fn obs_at(&self, t: usize) -> usize {
        self.obs[t - self.birth]
    }

    pub fn detections(&self) -> usize {
        self.obs.iter().filter(|&&o| o > 0).count()
    }
}

/// Lexicographic total order on states, first component first.
pub fn state_order(a: &StateVec, b: &StateVec) -> Ordering {
    for i in 0..4 {
        match a[i].total_cmp(&b[i]) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Canonical track order: birth time, then the initial state under
/// [`state_order`], with the remaining fields as a deterministic fallback.
pub fn canonical_cmp(a: &Track, b: &Track) -> Ordering {
    a.birth
        .cmp(&b.birth)
        .then_with(|| match (a.states.first(), b.states.first()) {
            (Some(x), Some(y)) => state_order(x, y),
            _ => Ordering::Equal,
        })
        .then_with(|| a.obs.cmp(&b.obs))
        .then_with(|| {
            for (x, y) in a.states.iter().zip(&b.states) {
                let o = state_order(x, y);
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
}

/// Per-target description: tracks in canonical order plus clutter
/// as `(scan, observation index)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackSet {
    pub n: usize,
    pub tracks: Vec<Track>,
    pub clutter: Vec<(usize, usize)>,
}

impl TrackSet {
    /// Builds a set from tracks alone; clutter is every unassigned observation.
    pub fn from_tracks(scene: &Scene, mut tracks: Vec<Track>) -> Result<Self> {
        let owner = occupancy(scene, &tracks)?;
        tracks.sort_by(canonical_cmp);
        let mut clutter = Vec::new();
        for (ti, row) in owner.iter().enumerate() {
            for (oi, taken) in row.iter().enumerate() {
                if !taken {
                    clutter.push((ti + 1, oi + 1));
                }
            }
        }
        Ok(TrackSet { n: scene.n(), tracks, clutter })
    }

    pub fn num_tracks(&self) -> usize {
        self.tracks.len()
    }
}

/// Marks every observation claimed by a track; rejects malformed tracks and
/// double assignments.
pub fn occupancy(scene: &Scene, tracks: &[Track]) -> Result<Vec<Vec<bool>>> {
    let n = scene.n();
    let mut taken: Vec<Vec<bool>> = scene.obs.iter().map(|o| vec![false; o.len()]).collect();
    for (k, tr) in tracks.iter().enumerate() {
        if tr.birth < 1 || tr.is_empty() || tr.death() > n + 1 {
            return Err(MttError::InvalidTracks(format!(
                "track {k} has life span {}..{} outside 1..{}",
                tr.birth,
                tr.death(),
                n + 1
            )));
        }
        if tr.states.len() != tr.obs.len() {
            return Err(MttError::InvalidTracks(format!("track {k} has mismatched state and observation lengths")));
        }
        for (i, &o) in tr.obs.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let t = tr.birth + i;
            let row = &mut taken[t - 1];
            if o > row.len() {
                return Err(MttError::InvalidTracks(format!(
                    "track {k} references observation {o} at scan {t} but only {} exist",
                    row.len()
                )));
            }
            if row[o - 1] {
                return Err(MttError::InvalidTracks(format!("observation {o} at scan {t} assigned twice")));
            }
            row[o - 1] = true;
        }
    }
    Ok(taken)
}

/// Association variables at one scan.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ScanAssoc {
    /// Survival indicator per target alive at the previous scan.
    pub c_s: Vec<bool>,
    pub k_b: usize,
    pub k_f: usize,
    /// Observation index per target alive now (0 = missed).
    pub i_d: Vec<usize>,
}

impl ScanAssoc {
    pub fn k_s(&self) -> usize {
        self.c_s.iter().filter(|&&c| c).count()
    }

    pub fn k_x(&self) -> usize {
        self.k_s() + self.k_b
    }

    pub fn k_d(&self) -> usize {
        self.i_d.iter().filter(|&&o| o > 0).count()
    }

    pub fn k_y(&self) -> usize {
        self.k_d() + self.k_f
    }

    /// 1-based ancestor index of each survivor.
    pub fn i_s(&self) -> Vec<usize> {
        self.c_s.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j + 1).collect()
    }
}

/// Flat association `z_{1:n}`; `scans[t - 1]` holds scan `t`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Association {
    pub scans: Vec<ScanAssoc>,
}

/// Flat states `x_{1:n}`, slot order as implied by the association.
pub type FlatStates = Vec<Vec<StateVec>>;

impl Association {
    pub fn n(&self) -> usize {
        self.scans.len()
    }

    pub fn scan(&self, t: usize) -> &ScanAssoc {
        &self.scans[t - 1]
    }

    pub fn k_x(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            self.scan(t).k_x()
        }
    }

    /// All observations treated as clutter.
    pub fn all_clutter(scene: &Scene) -> Self {
        Association {
            scans: scene
                .obs
                .iter()
                .map(|o| ScanAssoc { c_s: Vec::new(), k_b: 0, k_f: o.len(), i_d: Vec::new() })
                .collect(),
        }
    }

    /// Checks every structural invariant against the scene, naming the first
    /// violation.
    pub fn validate(&self, scene: &Scene) -> Result<()> {
        if self.n() != scene.n() {
            return Err(MttError::Validation(format!(
                "association has {} scans but scene has {}",
                self.n(),
                scene.n()
            )));
        }
        for t in 1..=self.n() {
            let s = self.scan(t);
            let err = |what: String| Err(MttError::InvalidAssociation { t, what });
            if s.c_s.len() != self.k_x(t - 1) {
                return err(format!("c_s has length {} but k_x[t-1] = {}", s.c_s.len(), self.k_x(t - 1)));
            }
            if s.i_d.len() != s.k_x() {
                return err(format!("i_d has length {} but k_x = {}", s.i_d.len(), s.k_x()));
            }
            if s.k_y() != scene.k_y(t) {
                return err(format!("k_y = {} but the scene has {} observations", s.k_y(), scene.k_y(t)));
            }
            let mut seen = vec![false; s.k_y()];
            for &o in &s.i_d {
                if o == 0 {
                    continue;
                }
                if o > s.k_y() {
                    return err(format!("observation index {o} exceeds k_y = {}", s.k_y()));
                }
                if seen[o - 1] {
                    return err(format!("observation index {o} appears twice in i_d"));
                }
                seen[o - 1] = true;
            }
        }
        Ok(())
    }
}

fn check_states(assoc: &Association, states: &FlatStates) -> Result<()> {
    if states.len() != assoc.n() {
        return Err(MttError::Validation(format!(
            "state sequence has {} scans but association has {}",
            states.len(),
            assoc.n()
        )));
    }
    for t in 1..=assoc.n() {
        if states[t - 1].len() != assoc.k_x(t) {
            return Err(MttError::InvalidAssociation {
                t,
                what: format!("{} states but k_x = {}", states[t - 1].len(), assoc.k_x(t)),
            });
        }
    }
    Ok(())
}

/// Flat → per-target description.
pub fn decompose(assoc: &Association, states: &FlatStates, scene: &Scene) -> Result<TrackSet> {
    assoc.validate(scene)?;
    check_states(assoc, states)?;
    let mut tracks: Vec<Track> = Vec::new();
    let mut slots: Vec<usize> = Vec::new();
    let mut clutter = Vec::new();
    for t in 1..=assoc.n() {
        let s = assoc.scan(t);
        let mut next: Vec<usize> = s.c_s.iter().zip(&slots).filter(|(&c, _)| c).map(|(_, &k)| k).collect();
        for _ in 0..s.k_b {
            next.push(tracks.len());
            tracks.push(Track::new(t, Vec::new(), Vec::new()));
        }
        for (j, &k) in next.iter().enumerate() {
            tracks[k].states.push(states[t - 1][j]);
            tracks[k].obs.push(s.i_d[j]);
        }
        let mut used = vec![false; s.k_y()];
        for &o in s.i_d.iter().filter(|&&o| o > 0) {
            used[o - 1] = true;
        }
        clutter.extend(used.iter().enumerate().filter(|(_, &u)| !u).map(|(o, _)| (t, o + 1)));
        slots = next;
    }
    tracks.sort_by(canonical_cmp);
    Ok(TrackSet { n: assoc.n(), tracks, clutter })
}

/// Per-target → flat description, with survivors kept in ancestor order and
/// new-borns in canonical order.
pub fn recompose(set: &TrackSet, scene: &Scene) -> Result<(Association, FlatStates)> {
    if set.n != scene.n() {
        return Err(MttError::Validation(format!("track set has {} scans but scene has {}", set.n, scene.n())));
    }
    let mut taken = occupancy(scene, &set.tracks)?;
    for &(t, o) in &set.clutter {
        if t < 1 || t > scene.n() || o < 1 || o > scene.k_y(t) {
            return Err(MttError::InvalidTracks(format!("clutter entry ({t}, {o}) out of range")));
        }
        if taken[t - 1][o - 1] {
            return Err(MttError::InvalidTracks(format!("observation {o} at scan {t} is both clutter and assigned")));
        }
        taken[t - 1][o - 1] = true;
    }
    for (ti, row) in taken.iter().enumerate() {
        if let Some(o) = row.iter().position(|&u| !u) {
            return Err(MttError::InvalidTracks(format!("observation {} at scan {} is unassigned", o + 1, ti + 1)));
        }
    }
    let mut order: Vec<&Track> = set.tracks.iter().collect();
    order.sort_by(|a, b| canonical_cmp(a, b));
    let mut assoc = Association::default();
    let mut states = FlatStates::new();
    let mut slots: Vec<&Track> = Vec::new();
    let mut next_born = 0;
    for t in 1..=scene.n() {
        let c_s: Vec<bool> = slots.iter().map(|tr| tr.alive_at(t)).collect();
        let mut next: Vec<&Track> = slots.iter().copied().filter(|tr| tr.alive_at(t)).collect();
        let mut k_b = 0;
        while next_born < order.len() && order[next_born].birth == t {
            next.push(order[next_born]);
            next_born += 1;
            k_b += 1;
        }
        let i_d: Vec<usize> = next.iter().map(|tr| tr.obs_at(t)).collect();
        let k_d = i_d.iter().filter(|&&o| o > 0).count();
        states.push(next.iter().map(|tr| *tr.state_at(t)).collect());
        assoc.scans.push(ScanAssoc { c_s, k_b, k_f: scene.k_y(t) - k_d, i_d });
        slots = next;
    }
    Ok((assoc, states))
}
