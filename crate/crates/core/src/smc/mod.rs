//! Particle filtering, conditional particle filtering and backward simulation
//! for a single HMM with possibly missing observations.

mod filter;

pub use filter::{backward_simulate, conditional_particle_filter, multinomial_resample, particle_filter};

use nalgebra::{Cholesky, Const, SVector};
use rand::Rng;

use crate::error::Result;
use crate::gaussian::GaussianBelief;
use crate::linalg::{mvn_log_density_chol, mvn_sample, robust_cholesky, ObsVec, StateVec};
use crate::model::TrackingModel;

/// A hidden Markov model with an initial density, a transition kernel and an
/// observation density. `None` observations carry no information.
pub trait StateSpaceModel {
    type State: Clone;
    type Obs;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
    fn sample_transition<R: Rng + ?Sized>(&self, prev: &Self::State, rng: &mut R) -> Self::State;
    fn log_initial(&self, x: &Self::State) -> f64;
    fn log_transition(&self, next: &Self::State, prev: &Self::State) -> f64;
    fn log_likelihood(&self, y: &Self::Obs, x: &Self::State) -> f64;
}

impl StateSpaceModel for TrackingModel {
    type State = StateVec;
    type Obs = ObsVec;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVec {
        self.sample_mu(rng)
    }

    fn sample_transition<R: Rng + ?Sized>(&self, prev: &StateVec, rng: &mut R) -> StateVec {
        self.sample_f(prev, rng)
    }

    fn log_initial(&self, x: &StateVec) -> f64 {
        self.log_mu(x)
    }

    fn log_transition(&self, next: &StateVec, prev: &StateVec) -> f64 {
        self.log_f(next, prev)
    }

    fn log_likelihood(&self, y: &ObsVec, x: &StateVec) -> f64 {
        self.log_g(y, x)
    }
}

/// Importance proposal `q_t(x_t | x_{t-1})`.
pub trait Proposal<M: StateSpaceModel> {
    fn sample<R: Rng + ?Sized>(&self, model: &M, t: usize, prev: Option<&M::State>, rng: &mut R) -> M::State;
    fn log_density(&self, model: &M, t: usize, x: &M::State, prev: Option<&M::State>) -> f64;
    /// True when `q` is the prior kernel, so the weight reduces to the likelihood.
    fn is_bootstrap(&self) -> bool {
        false
    }
}

/// The transition kernel itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bootstrap;

impl<M: StateSpaceModel> Proposal<M> for Bootstrap {
    fn sample<R: Rng + ?Sized>(&self, model: &M, _t: usize, prev: Option<&M::State>, rng: &mut R) -> M::State {
        match prev {
            None => model.sample_initial(rng),
            Some(p) => model.sample_transition(p, rng),
        }
    }

    fn log_density(&self, model: &M, _t: usize, x: &M::State, prev: Option<&M::State>) -> f64 {
        match prev {
            None => model.log_initial(x),
            Some(p) => model.log_transition(x, p),
        }
    }

    fn is_bootstrap(&self) -> bool {
        true
    }
}

/// Independent Gaussian proposals, typically UKF smoothing marginals.
#[derive(Clone, Debug)]
pub struct GaussianProposal<const D: usize> {
    means: Vec<SVector<f64, D>>,
    chols: Vec<Cholesky<f64, Const<D>>>,
}

impl<const D: usize> GaussianProposal<D> {
    pub fn new(beliefs: &[GaussianBelief<D>]) -> Result<Self> {
        let chols = beliefs.iter().map(|b| robust_cholesky(&b.cov)).collect::<Result<Vec<_>>>()?;
        Ok(GaussianProposal { means: beliefs.iter().map(|b| b.mean).collect(), chols })
    }
}

impl<const D: usize, M: StateSpaceModel<State = SVector<f64, D>>> Proposal<M> for GaussianProposal<D> {
    fn sample<R: Rng + ?Sized>(&self, _m: &M, t: usize, _p: Option<&M::State>, rng: &mut R) -> M::State {
        mvn_sample(&self.means[t], &self.chols[t], rng)
    }

    fn log_density(&self, _m: &M, t: usize, x: &M::State, _p: Option<&M::State>) -> f64 {
        mvn_log_density_chol(&(x - self.means[t]), &self.chols[t])
    }
}

/// Weighted particles with their genealogy. All vectors are indexed `[t][k]`
/// with 0-based time and particle indices.
#[derive(Clone, Debug)]
pub struct ParticleSystem<S> {
    pub particles: Vec<Vec<S>>,
    pub weights: Vec<Vec<f64>>,
    pub ancestors: Vec<Vec<usize>>,
    pub log_lik: f64,
}

impl<S> ParticleSystem<S> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn num_particles(&self) -> usize {
        self.particles.first().map_or(0, Vec::len)
    }
}
