//! JSON form of a set of tracks, used for ground truth and for sampled
//! associations.
//!
//! ```json
//! { "n_scans": 3,
//!   "tracks": [ { "t_b": 1, "t_d": 3, "states": [[0,1,0,1],[1,1,1,1]], "y_idx": [2, 0] } ],
//!   "clutter": [[1, 1], [3, 1]] }
//! ```
//!
//! `t_d` is the first scan at which the track is no longer alive, `y_idx` the
//! 1-based observation index per alive scan (0 = missed), and `clutter` the
//! `(t, obs_id)` pairs not assigned to any track.

use serde::{Deserialize, Serialize};

use crate::error::{MttError, Result};
use crate::linalg::StateVec;
use crate::model::{Scene, Track, TrackSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub t_b: usize,
    pub t_d: usize,
    pub states: Vec<[f64; 4]>,
    pub y_idx: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSetRecord {
    pub n_scans: usize,
    pub tracks: Vec<TrackRecord>,
    pub clutter: Vec<[usize; 2]>,
}

impl From<&TrackSet> for TrackSetRecord {
    fn from(set: &TrackSet) -> Self {
        TrackSetRecord {
            n_scans: set.n,
            tracks: set
                .tracks
                .iter()
                .map(|tr| TrackRecord {
                    t_b: tr.birth,
                    t_d: tr.death(),
                    states: tr.states.iter().map(|x| [x[0], x[1], x[2], x[3]]).collect(),
                    y_idx: tr.obs.clone(),
                })
                .collect(),
            clutter: set.clutter.iter().map(|&(t, o)| [t, o]).collect(),
        }
    }
}

impl TrackSetRecord {
    /// Validated track set over `scene`; the clutter list must match the
    /// unassigned observations.
    pub fn to_track_set(&self, scene: &Scene) -> Result<TrackSet> {
        if self.n_scans != scene.n() {
            return Err(MttError::Format(format!("record covers {} scans, scene has {}", self.n_scans, scene.n())));
        }
        let mut tracks = Vec::with_capacity(self.tracks.len());
        for (k, r) in self.tracks.iter().enumerate() {
            if r.states.len() != r.y_idx.len() || r.t_b == 0 || r.t_d != r.t_b + r.states.len() {
                return Err(MttError::Format(format!("track {k}: t_b, t_d, states and y_idx are inconsistent")));
            }
            tracks.push(Track::new(r.t_b, r.states.iter().map(|s| StateVec::from_column_slice(s)).collect(), r.y_idx.clone()));
        }
        let set = TrackSet::from_tracks(scene, tracks)?;
        let mut listed: Vec<(usize, usize)> = self.clutter.iter().map(|c| (c[0], c[1])).collect();
        listed.sort_unstable();
        let mut actual = set.clutter.clone();
        actual.sort_unstable();
        if listed != actual {
            return Err(MttError::Format("clutter list disagrees with the tracks".into()));
        }
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
