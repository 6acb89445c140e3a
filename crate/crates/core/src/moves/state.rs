use serde::{Deserialize, Serialize};

use crate::error::{MttError, Result};
use crate::model::density::scene_constant;
use crate::model::tracks::occupancy;
use crate::model::{
    canonical_cmp, recompose, track_log_term, Association, FlatStates, LogParams, ModelParams, Scene, Track, TrackSet,
    TrackingModel,
};

const NONE: usize = usize::MAX;

/// Tunables of the association moves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoveConfig {
    /// Prior probability that a target is detected somewhere in the next block.
    pub p_m: f64,
    /// Candidate gate, as a Mahalanobis radius under the predictive density.
    pub gate_radius: f64,
    /// Half-width of the state-resampling window.
    pub tau: usize,
    /// Selection probabilities of birth, death, extension, reduction, state
    /// and measurement moves.
    pub move_probs: [f64; 6],
}

impl Default for MoveConfig {
    fn default() -> Self {
        MoveConfig { p_m: 0.99, gate_radius: 6.0, tau: 5, move_probs: [1.0 / 6.0; 6] }
    }
}

impl MoveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_m > 0.0 && self.p_m < 1.0) {
            return Err(MttError::InvalidParams(format!("p_m must lie in (0, 1), got {}", self.p_m)));
        }
        if !(self.gate_radius > 0.0) {
            return Err(MttError::InvalidParams("gate_radius must be positive".into()));
        }
        if self.tau < 1 {
            return Err(MttError::InvalidParams("tau must be at least 1".into()));
        }
        let s: f64 = self.move_probs.iter().sum();
        if self.move_probs.iter().any(|p| *p < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(MttError::InvalidParams(format!("move_probs must be non-negative and sum to 1, got sum {s}")));
        }
        Ok(())
    }
}

/// Everything a move needs besides the chain state.
#[derive(Clone, Debug)]
pub struct MoveContext<'a> {
    pub scene: &'a Scene,
    pub params: ModelParams,
    pub model: TrackingModel,
    pub lp: LogParams,
    pub cfg: MoveConfig,
    pub t_m: usize,
}

impl<'a> MoveContext<'a> {
    pub fn new(scene: &'a Scene, params: &ModelParams, cfg: &MoveConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let t_m = crate::moves::compute_tm(params.p_d, cfg.p_m)?;
        Ok(MoveContext {
            scene,
            params: *params,
            model: TrackingModel::new(&params.hmm)?,
            lp: LogParams::new(params),
            cfg: cfg.clone(),
            t_m,
        })
    }

    pub fn n(&self) -> usize {
        self.scene.n()
    }

    pub fn track_term(&self, tr: &Track) -> f64 {
        track_log_term(&self.model, &self.lp, self.n(), self.scene, tr)
    }
}

/// Chain state: tracks in canonical order plus an observation ownership table.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    tracks: Vec<Track>,
    owner: Vec<Vec<usize>>,
}

impl ChainState {
    /// All observations as clutter.
    pub fn empty(scene: &Scene) -> Self {
        ChainState { tracks: Vec::new(), owner: scene.obs.iter().map(|o| vec![NONE; o.len()]).collect() }
    }

    pub fn from_tracks(scene: &Scene, mut tracks: Vec<Track>) -> Result<Self> {
        occupancy(scene, &tracks)?;
        tracks.sort_by(canonical_cmp);
        Ok(Self::build(scene.obs.iter().map(Vec::len).collect(), tracks))
    }

    fn build(k_y: Vec<usize>, tracks: Vec<Track>) -> Self {
        let mut owner: Vec<Vec<usize>> = k_y.iter().map(|&k| vec![NONE; k]).collect();
        for (k, tr) in tracks.iter().enumerate() {
            for (i, &o) in tr.obs.iter().enumerate() {
                if o > 0 {
                    owner[tr.birth + i - 1][o - 1] = k;
                }
            }
        }
        ChainState { tracks, owner }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn num_tracks(&self) -> usize {
        self.tracks.len()
    }

    pub fn n(&self) -> usize {
        self.owner.len()
    }

    /// Track owning observation `o` at scan `t`, if any.
    pub fn owner(&self, t: usize, o: usize) -> Option<usize> {
        let k = self.owner[t - 1][o - 1];
        (k != NONE).then_some(k)
    }

    /// Unassigned observation indices at scan `t`.
    pub fn clutter_at(&self, t: usize) -> Vec<usize> {
        self.owner[t - 1].iter().enumerate().filter(|(_, &k)| k == NONE).map(|(o, _)| o + 1).collect()
    }

    pub fn alive_at(&self, t: usize) -> Vec<usize> {
        self.tracks.iter().enumerate().filter(|(_, tr)| tr.alive_at(t)).map(|(k, _)| k).collect()
    }

    pub fn total_detections(&self) -> usize {
        self.tracks.iter().map(Track::detections).sum()
    }

    /// Removes the tracks at `removed` and inserts `added`, returning the new
    /// state and the position of each added track in it.
    pub fn apply(&self, removed: &[usize], added: Vec<Track>) -> (ChainState, Vec<usize>) {
        let mut tagged: Vec<(Track, Option<usize>)> = self
            .tracks
            .iter()
            .enumerate()
            .filter(|(k, _)| !removed.contains(k))
            .map(|(_, tr)| (tr.clone(), None))
            .collect();
        tagged.extend(added.into_iter().enumerate().map(|(i, tr)| (tr, Some(i))));
        tagged.sort_by(|a, b| canonical_cmp(&a.0, &b.0));
        let mut pos = vec![0; tagged.iter().filter(|t| t.1.is_some()).count()];
        for (k, (_, tag)) in tagged.iter().enumerate() {
            if let Some(i) = tag {
                pos[*i] = k;
            }
        }
        let k_y = self.owner.iter().map(Vec::len).collect();
        (ChainState::build(k_y, tagged.into_iter().map(|t| t.0).collect()), pos)
    }

    /// Replaces every track's states, keeping the association.
    pub fn with_states(&self, states: Vec<Vec<crate::linalg::StateVec>>) -> Result<ChainState> {
        if states.len() != self.tracks.len() {
            return Err(MttError::Validation("one state path per track required".into()));
        }
        let mut tracks = self.tracks.clone();
        for (tr, s) in tracks.iter_mut().zip(states) {
            if s.len() != tr.len() {
                return Err(MttError::Validation("state path length differs from track length".into()));
            }
            tr.states = s;
        }
        tracks.sort_by(canonical_cmp);
        let k_y = self.owner.iter().map(Vec::len).collect();
        Ok(ChainState::build(k_y, tracks))
    }

    pub fn to_track_set(&self, scene: &Scene) -> Result<TrackSet> {
        TrackSet::from_tracks(scene, self.tracks.clone())
    }

    pub fn to_flat(&self, scene: &Scene) -> Result<(Association, FlatStates)> {
        recompose(&self.to_track_set(scene)?, scene)
    }

    /// `log p_θ(z, x, y)` of the state.
    pub fn log_joint(&self, ctx: &MoveContext) -> f64 {
        let lp = &ctx.lp;
        let k = self.tracks.len();
        let n_f = ctx.scene.total_obs() - self.total_detections();
        let mut v = scene_constant(&ctx.params, ctx.scene);
        if k > 0 {
            v += k as f64 * lp.lambda_b;
        }
        if n_f > 0 {
            v += n_f as f64 * lp.clutter;
        }
        v + self.tracks.iter().map(|tr| ctx.track_term(tr)).sum::<f64>()
    }

    /// Checks ownership bookkeeping against the tracks; used by tests and debug builds.
    pub fn check(&self, scene: &Scene) -> Result<()> {
        occupancy(scene, &self.tracks)?;
        if self.tracks.windows(2).any(|w| canonical_cmp(&w[0], &w[1]) == std::cmp::Ordering::Greater) {
            return Err(MttError::InvalidTracks("tracks are not in canonical order".into()));
        }
        let rebuilt = ChainState::build(self.owner.iter().map(Vec::len).collect(), self.tracks.clone());
        if rebuilt.owner != self.owner {
            return Err(MttError::InvalidTracks("ownership table is stale".into()));
        }
        Ok(())
    }
}
