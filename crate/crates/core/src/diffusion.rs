//! Forward and reverse dynamics of the mean-reverting diffusion, plus the
//! deterministic random source everything samples from.
//!
//! The forward process relaxes data toward a conditioning grid `mu`: at
//! time `t` the state is Gaussian with mean
//! `(1 - sqrt(gamma(t))) mu + sqrt(gamma(t)) x0` and variance
//! `1 - gamma(t)` per cell, where `gamma(t)` decays from 1 to nearly 0
//! over the unit interval. Generation runs the deterministic reverse flow
//! from a draw of the `t = 1` marginal, `N(mu, I)` up to an exponentially
//! small remainder.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::MelGrid;
use crate::math;
use crate::{Error, Result};

/// Linear noise schedule `beta(t) = beta0 + (beta1 - beta0) t` together
/// with the reverse-step count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSchedule {
    beta0: f64,
    beta1: f64,
    steps: usize,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            beta0: 0.05,
            beta1: 20.0,
            steps: 1000,
        }
    }
}

impl NoiseSchedule {
    pub fn new(beta0: f64, beta1: f64, steps: usize) -> Result<Self> {
        if !(beta0.is_finite() && beta1.is_finite()) || beta0 <= 0.0 || beta1 < beta0 {
            return Err(Error::Invalid(
                "noise schedule needs 0 < beta0 <= beta1, both finite",
            ));
        }
        if steps == 0 {
            return Err(Error::Invalid("noise schedule needs at least one step"));
        }
        Ok(Self {
            beta0,
            beta1,
            steps,
        })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta0 + (self.beta1 - self.beta0) * t
    }

    /// Surviving signal fraction `exp(-(beta0 t + (beta1 - beta0) t^2 / 2))`
    /// for `t` in `[0, 1]`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(Error::Time { t });
        }
        Ok(math::exp(-(self.beta0 * t + (self.beta1 - self.beta0) * t * t / 2.0)))
    }

    /// Mean grid and per-cell variance of the forward marginal at time `t`
    /// given the clean state `x0`.
    pub fn transition_moments(&self, x0: &MelGrid, mu: &MelGrid, t: f64) -> Result<(MelGrid, f64)> {
        if x0.shape() != mu.shape() {
            return Err(Error::Shape {
                expected: mu.shape(),
                found: x0.shape(),
            });
        }
        let gamma = self.gamma(t)?;
        let root = math::sqrt(gamma);
        let mut mean = mu.clone();
        for (m, x) in mean.values_mut().iter_mut().zip(x0.values()) {
            *m = (1.0 - root) * *m + root * *x;
        }
        Ok((mean, 1.0 - gamma))
    }

    /// Draws from the forward marginal at time `t`.
    pub fn forward_diffuse(
        &self,
        x0: &MelGrid,
        mu: &MelGrid,
        t: f64,
        rng: &mut Rng,
    ) -> Result<MelGrid> {
        let (mut mean, var) = self.transition_moments(x0, mu, t)?;
        let sd = math::sqrt(var);
        let (n_freq, n_frames) = mean.shape();
        let eps = rng.standard_normal(n_freq, n_frames)?;
        for (m, e) in mean.values_mut().iter_mut().zip(eps.values()) {
            *m += sd * *e;
        }
        Ok(mean)
    }
}

/// Anything that can evaluate the score `grad_x log p_t(x | mu)`.
pub trait ScoreProvider {
    fn score(&self, x: &MelGrid, mu: &MelGrid, t: f64) -> Result<MelGrid>;
}

impl<F> ScoreProvider for F
where
    F: Fn(&MelGrid, &MelGrid, f64) -> Result<MelGrid>,
{
    fn score(&self, x: &MelGrid, mu: &MelGrid, t: f64) -> Result<MelGrid> {
        self(x, mu, t)
    }
}

/// Draws the generative starting point `x1 ~ N(mu, I)`.
pub fn sample_prior(mu: &MelGrid, rng: &mut Rng) -> Result<MelGrid> {
    let (n_freq, n_frames) = mu.shape();
    let eps = rng.standard_normal(n_freq, n_frames)?;
    mu.add(&eps)
}

/// One deterministic reverse-flow increment,
/// `dx = (beta(t) / (2 steps)) (mu - x - score)`; the caller subtracts it.
pub fn reverse_drift(
    schedule: &NoiseSchedule,
    mu: &MelGrid,
    x: &MelGrid,
    score: &MelGrid,
    t: f64,
) -> Result<MelGrid> {
    if x.shape() != mu.shape() || score.shape() != mu.shape() {
        return Err(Error::Shape {
            expected: mu.shape(),
            found: if x.shape() != mu.shape() {
                x.shape()
            } else {
                score.shape()
            },
        });
    }
    if !t.is_finite() || t <= 0.0 || t > 1.0 {
        return Err(Error::Time { t });
    }
    let c = schedule.beta(t) / (2.0 * schedule.steps() as f64);
    let mut out = mu.clone();
    let (n_freq, n_frames) = mu.shape();
    for tau in 0..n_frames {
        let mu_f = mu.frame(tau);
        let x_f = x.frame(tau);
        let s_f = score.frame(tau);
        let o_f = out.frame_mut(tau);
        for f in 0..n_freq {
            o_f[f] = c * (mu_f[f] - x_f[f] - s_f[f]);
        }
    }
    Ok(out)
}

/// Runs the reverse flow from `x1` down the uniform time grid
/// `t_k = k / steps`, `k = steps .. 1`, and returns the terminal state.
///
/// The update is kept textually identical to the fused loops in the edit
/// module so unedited frames evolve bit-for-bit the same there.
pub fn reverse_integrate<S: ScoreProvider>(
    schedule: &NoiseSchedule,
    mu: &MelGrid,
    x1: &MelGrid,
    provider: &S,
) -> Result<MelGrid> {
    if x1.shape() != mu.shape() {
        return Err(Error::Shape {
            expected: mu.shape(),
            found: x1.shape(),
        });
    }
    let (n_freq, n_frames) = mu.shape();
    let mut x = x1.clone();
    for k in (1..=schedule.steps()).rev() {
        let t = k as f64 / schedule.steps() as f64;
        let s = provider.score(&x, mu, t)?;
        if s.shape() != mu.shape() {
            return Err(Error::Shape {
                expected: mu.shape(),
                found: s.shape(),
            });
        }
        let c = schedule.beta(t) / (2.0 * schedule.steps() as f64);
        for tau in 0..n_frames {
            let mu_f = mu.frame(tau);
            let s_f = s.frame(tau);
            let x_f = x.frame_mut(tau);
            for f in 0..n_freq {
                x_f[f] -= c * (mu_f[f] - x_f[f] - s_f[f]);
            }
        }
    }
    Ok(x)
}

/// Seeded, streamed ChaCha8 source. Equal `(seed, stream)` pairs yield
/// identical draw sequences on every platform; distinct streams of one
/// seed are independent.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Grid of iid standard normal draws, filled frame-major.
    pub fn standard_normal(&mut self, n_freq: usize, n_frames: usize) -> Result<MelGrid> {
        let mut g = MelGrid::zeros(n_freq, n_frames)?;
        for v in g.values_mut() {
            *v = self.normal();
        }
        Ok(g)
    }
}
