//! Synthetic priors and the exactly-known data model behind them.
//!
//! The data distribution is a finite Gaussian mixture around a prior grid
//! `mu`: component `k` has weight `pi_k`, isotropic deviation `sigma_k`,
//! and a fixed offset grid `delta_k`, so `x0 ~ mu + delta_k + sigma_k eps`.
//! Because the forward process is linear-Gaussian, every time marginal is
//! again a mixture with means `mu + sqrt(gamma) delta_k` and per-cell
//! variance `gamma sigma_k^2 + 1 - gamma`, and the score has a closed
//! form. [`AnalyticScore`] evaluates it; there is no learned network
//! anywhere, so every downstream number is reproducible to the bit.

use alloc::vec::Vec;

use crate::diffusion::{NoiseSchedule, Rng, ScoreProvider};
use crate::grid::MelGrid;
use crate::math;
use crate::{Error, Result};

/// One synthetic phoneme: a Gaussian bump in frequency held for a number
/// of frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phoneme {
    pub duration: usize,
    pub center_bin: usize,
    pub bandwidth: f64,
    pub amplitude: f64,
}

/// Recipe for a piecewise-constant prior grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPriorSpec {
    pub n_freq: usize,
    pub baseline: f64,
    pub phonemes: Vec<Phoneme>,
}

/// Renders the prior: each phoneme contributes `duration` identical
/// frames of `baseline + amplitude * exp(-(f - center)^2 / (2 bw^2))`.
pub fn make_toy_prior(spec: &ToyPriorSpec) -> Result<MelGrid> {
    if spec.n_freq == 0 {
        return Err(Error::Invalid("prior needs at least one frequency bin"));
    }
    if spec.phonemes.is_empty() {
        return Err(Error::Invalid("prior needs at least one phoneme"));
    }
    if !spec.baseline.is_finite() {
        return Err(Error::Invalid("prior baseline must be finite"));
    }
    let n_frames: usize = spec.phonemes.iter().map(|p| p.duration).sum();
    let mut grid = MelGrid::zeros(spec.n_freq, n_frames)?;
    let mut tau = 0;
    for p in &spec.phonemes {
        if p.duration == 0 {
            return Err(Error::Invalid("phoneme duration must be at least 1"));
        }
        if p.center_bin >= spec.n_freq {
            return Err(Error::Invalid("phoneme center bin is outside the grid"));
        }
        if !(p.bandwidth.is_finite() && p.bandwidth > 0.0) || !p.amplitude.is_finite() {
            return Err(Error::Invalid("phoneme bandwidth must be positive and finite"));
        }
        let column: Vec<f64> = (0..spec.n_freq)
            .map(|f| {
                let z = (f as f64 - p.center_bin as f64) / p.bandwidth;
                spec.baseline + p.amplitude * math::exp(-0.5 * z * z)
            })
            .collect();
        for _ in 0..p.duration {
            grid.frame_mut(tau).copy_from_slice(&column);
            tau += 1;
        }
    }
    Ok(grid)
}

/// Cosine ridge pattern along the frequency axis,
/// `amp * cos(2 pi (f + phase) / period)`, shared by every frame.
pub fn stripe_profile(n_freq: usize, amp: f64, period: f64, phase: f64) -> Result<Vec<f64>> {
    if !(period.is_finite() && period > 0.0) || !amp.is_finite() || !phase.is_finite() {
        return Err(Error::Invalid("stripe needs a positive finite period"));
    }
    Ok((0..n_freq)
        .map(|f| amp * math::cos(core::f64::consts::TAU * (f as f64 + phase) / period))
        .collect())
}

/// Per-cell displacement of one mixture component from the prior.
#[derive(Debug, Clone, PartialEq)]
pub enum Offset {
    /// Component sits exactly on the prior.
    Zero,
    /// One value per frequency bin, repeated across frames. Survives
    /// re-conditioning on a prior with a different frame count.
    FreqProfile(Vec<f64>),
    /// Fully general per-cell offset; pins the model to one grid shape.
    Grid(MelGrid),
}

impl Offset {
    fn at(&self, f: usize, tau: usize) -> f64 {
        match self {
            Offset::Zero => 0.0,
            Offset::FreqProfile(p) => p[f],
            Offset::Grid(g) => g.get(f, tau),
        }
    }

    fn check_shape(&self, n_freq: usize, n_frames: usize) -> Result<()> {
        match self {
            Offset::Zero => Ok(()),
            Offset::FreqProfile(p) => {
                if p.len() != n_freq {
                    Err(Error::Invalid(
                        "offset profile length must match the frequency axis",
                    ))
                } else if p.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Invalid("offset profile must be finite"))
                }
            }
            Offset::Grid(g) => {
                if g.shape() != (n_freq, n_frames) {
                    Err(Error::Shape {
                        expected: (n_freq, n_frames),
                        found: g.shape(),
                    })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One mixture component. `sigma = 0` gives a point mass at
/// `mu + offset`; density queries then need `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub sigma: f64,
    pub offset: Offset,
}

impl Component {
    pub fn new(weight: f64, sigma: f64, offset: Offset) -> Self {
        Self {
            weight,
            sigma,
            offset,
        }
    }
}

/// Gaussian mixture around a prior grid; the ground truth every edit is
/// judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureDataModel {
    components: Vec<Component>,
    mu: MelGrid,
}

impl GaussianMixtureDataModel {
    pub fn new(components: Vec<Component>, mu: MelGrid) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Invalid("mixture needs at least one component"));
        }
        let mut sum = 0.0;
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::Invalid("component weights must lie in (0, 1]"));
            }
            if !(c.sigma.is_finite() && c.sigma >= 0.0) {
                return Err(Error::Invalid("component sigma must be finite and >= 0"));
            }
            c.offset.check_shape(mu.n_freq(), mu.n_frames())?;
            sum += c.weight;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("component weights must sum to 1"));
        }
        Ok(Self { components, mu })
    }

    /// Same mixture re-centered on a different prior grid.
    pub fn with_mu(&self, mu: MelGrid) -> Result<Self> {
        Self::new(self.components.clone(), mu)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn mu(&self) -> &MelGrid {
        &self.mu
    }

    /// Mean grid, per-cell variance, and weight of each component of the
    /// time-`t` marginal.
    pub fn marginal_moments(
        &self,
        schedule: &NoiseSchedule,
        t: f64,
    ) -> Result<Vec<(MelGrid, f64, f64)>> {
        let gamma = schedule.gamma(t)?;
        let root = math::sqrt(gamma);
        let (n_freq, n_frames) = self.mu.shape();
        self.components
            .iter()
            .map(|c| {
                let mut mean = self.mu.clone();
                for tau in 0..n_frames {
                    let m = mean.frame_mut(tau);
                    for (f, mf) in m.iter_mut().enumerate().take(n_freq) {
                        *mf += root * c.offset.at(f, tau);
                    }
                }
                let var = gamma * c.sigma * c.sigma + (1.0 - gamma);
                Ok((mean, var, c.weight))
            })
            .collect()
    }

    /// Exact log density of the time-`t` marginal at `x`. Errors when a
    /// component variance is zero (point mass, only possible at `t = 0`).
    pub fn log_likelihood(&self, x: &MelGrid, schedule: &NoiseSchedule, t: f64) -> Result<f64> {
        if x.shape() != self.mu.shape() {
            return Err(Error::Shape {
                expected: self.mu.shape(),
                found: x.shape(),
            });
        }
        let n_cells = x.values().len() as f64;
        let moments = self.marginal_moments(schedule, t)?;
        let mut logs = Vec::with_capacity(moments.len());
        for (mean, var, weight) in &moments {
            if *var <= 0.0 {
                return Err(Error::Invalid(
                    "mixture density is degenerate: a component has zero variance",
                ));
            }
            let mut ss = 0.0;
            for (xv, mv) in x.values().iter().zip(mean.values()) {
                let d = xv - mv;
                ss += d * d;
            }
            logs.push(
                math::ln(*weight)
                    - 0.5 * ss / var
                    - 0.5 * n_cells * math::ln(core::f64::consts::TAU * var),
            );
        }
        let max = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if !max.is_finite() {
            return Ok(max);
        }
        let sum: f64 = logs.iter().map(|&l| math::exp(l - max)).sum();
        Ok(max + math::ln(sum))
    }

    /// Draws `x0` from the mixture; also reports which component fired.
    pub fn sample_data(&self, rng: &mut Rng) -> Result<(MelGrid, usize)> {
        let u = rng.uniform();
        let mut cum = 0.0;
        let mut pick = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            cum += c.weight;
            if u < cum {
                pick = k;
                break;
            }
        }
        let c = &self.components[pick];
        let (n_freq, n_frames) = self.mu.shape();
        let eps = rng.standard_normal(n_freq, n_frames)?;
        let mut out = self.mu.clone();
        for tau in 0..n_frames {
            let e = eps.frame(tau);
            let o = out.frame_mut(tau);
            for (f, of) in o.iter_mut().enumerate().take(n_freq) {
                *of += c.offset.at(f, tau) + c.sigma * e[f];
            }
        }
        Ok((out, pick))
    }
}

/// Closed-form score of the mixture marginals, usable wherever a learned
/// score network would sit.
///
/// Responsibilities are computed once per call over the whole grid (the
/// mixture lives in grid space, not per cell), then the score is the
/// responsibility-weighted sum of per-component Gaussian scores. The
/// evaluation re-centers on whatever conditioning grid `mu` the caller
/// passes, so edited priors work without rebuilding the model.
#[derive(Debug, Clone)]
pub struct AnalyticScore {
    components: Vec<Component>,
    schedule: NoiseSchedule,
}

pub fn analytic_score(
    model: &GaussianMixtureDataModel,
    schedule: &NoiseSchedule,
) -> AnalyticScore {
    AnalyticScore {
        components: model.components().to_vec(),
        schedule: *schedule,
    }
}

impl ScoreProvider for AnalyticScore {
    fn score(&self, x: &MelGrid, mu: &MelGrid, t: f64) -> Result<MelGrid> {
        if x.shape() != mu.shape() {
            return Err(Error::Shape {
                expected: mu.shape(),
                found: x.shape(),
            });
        }
        let (n_freq, n_frames) = x.shape();
        for c in &self.components {
            c.offset.check_shape(n_freq, n_frames)?;
        }
        let gamma = self.schedule.gamma(t)?;
        let root = math::sqrt(gamma);
        let n_cells = (n_freq * n_frames) as f64;

        // Pass 1: per-component log joint weights over the whole grid.
        let mut vars = Vec::with_capacity(self.components.len());
        let mut logs = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let var = gamma * c.sigma * c.sigma + (1.0 - gamma);
            if var <= 0.0 {
                return Err(Error::Invalid(
                    "mixture density is degenerate: a component has zero variance",
                ));
            }
            let mut ss = 0.0;
            for tau in 0..n_frames {
                let xf = x.frame(tau);
                let mf = mu.frame(tau);
                for f in 0..n_freq {
                    let d = xf[f] - (mf[f] + root * c.offset.at(f, tau));
                    ss += d * d;
                }
            }
            vars.push(var);
            logs.push(
                math::ln(c.weight)
                    - 0.5 * ss / var
                    - 0.5 * n_cells * math::ln(core::f64::consts::TAU * var),
            );
        }
        let max = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let resp: Vec<f64> = if max.is_finite() {
            let unnorm: Vec<f64> = logs.iter().map(|&l| math::exp(l - max)).collect();
            let total: f64 = unnorm.iter().sum();
            unnorm.iter().map(|&q| q / total).collect()
        } else {
            // Every component underflowed (x astronomically far from all of
            // them); fall back to the prior weights so the pull stays finite.
            self.components.iter().map(|c| c.weight).collect()
        };

        // Pass 2: responsibility-weighted Gaussian scores.
        let mut out = MelGrid::zeros(n_freq, n_frames)?;
        for ((c, &r), &var) in self.components.iter().zip(&resp).zip(&vars) {
            let scale = r / var;
            for tau in 0..n_frames {
                let xf = x.frame(tau);
                let mf = mu.frame(tau);
                let of = out.frame_mut(tau);
                for f in 0..n_freq {
                    of[f] += scale * (mf[f] + root * c.offset.at(f, tau) - xf[f]);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::reverse_integrate;
    use approx::assert_relative_eq;

    fn flat_mu(n_freq: usize, n_frames: usize) -> MelGrid {
        MelGrid::constant(n_freq, n_frames, -1.0).unwrap()
    }

    #[test]
    fn toy_prior_bump_values() {
        let spec = ToyPriorSpec {
            n_freq: 8,
            baseline: -1.0,
            phonemes: vec![
                Phoneme {
                    duration: 2,
                    center_bin: 3,
                    bandwidth: 1.5,
                    amplitude: 2.0,
                },
                Phoneme {
                    duration: 1,
                    center_bin: 6,
                    bandwidth: 1.0,
                    amplitude: 1.0,
                },
            ],
        };
        let mu = make_toy_prior(&spec).unwrap();
        assert_eq!(mu.shape(), (8, 3));
        assert_eq!(mu.frame(0), mu.frame(1));
        assert_eq!(mu.get(3, 0), 1.0);
        assert_relative_eq!(
            mu.get(4, 0),
            -1.0 + 2.0 * math::exp(-0.5 / 2.25),
            max_relative = 1e-15
        );
        assert_eq!(mu.get(6, 2), 0.0);
        // Symmetric around each center.
        assert_eq!(mu.get(2, 0), mu.get(4, 0));
        assert_eq!(mu.get(5, 2), mu.get(7, 2));
    }

    #[test]
    fn toy_prior_validation() {
        let base = ToyPriorSpec {
            n_freq: 8,
            baseline: 0.0,
            phonemes: vec![Phoneme {
                duration: 1,
                center_bin: 3,
                bandwidth: 1.0,
                amplitude: 1.0,
            }],
        };
        assert!(make_toy_prior(&base).is_ok());

        let mut bad = base.clone();
        bad.phonemes[0].center_bin = 8;
        assert!(make_toy_prior(&bad).is_err());

        let mut bad = base.clone();
        bad.phonemes[0].duration = 0;
        assert!(make_toy_prior(&bad).is_err());

        let mut bad = base.clone();
        bad.phonemes[0].bandwidth = 0.0;
        assert!(make_toy_prior(&bad).is_err());

        let mut bad = base;
        bad.phonemes.clear();
        assert!(make_toy_prior(&bad).is_err());
    }

    #[test]
    fn stripe_profile_shape() {
        let p = stripe_profile(12, 0.2, 6.0, 0.0).unwrap();
        assert_eq!(p.len(), 12);
        assert_relative_eq!(p[0], 0.2, max_relative = 1e-15);
        assert_relative_eq!(p[3], 0.2 * math::cos(core::f64::consts::PI), max_relative = 1e-12);
        assert_relative_eq!(p[6], 0.2, epsilon = 1e-15);
        assert!(stripe_profile(12, 0.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn model_validation() {
        let mu = flat_mu(4, 3);
        let ok = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.5, 0.1, Offset::Zero),
                Component::new(0.5, 0.2, Offset::FreqProfile(vec![0.0; 4])),
            ],
            mu.clone(),
        );
        assert!(ok.is_ok());

        assert!(GaussianMixtureDataModel::new(vec![], mu.clone()).is_err());
        assert!(GaussianMixtureDataModel::new(
            vec![Component::new(0.9, 0.1, Offset::Zero)],
            mu.clone()
        )
        .is_err());
        assert!(GaussianMixtureDataModel::new(
            vec![Component::new(1.0, -0.1, Offset::Zero)],
            mu.clone()
        )
        .is_err());
        assert!(GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.1, Offset::FreqProfile(vec![0.0; 3]))],
            mu.clone()
        )
        .is_err());
        assert!(GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.1, Offset::Grid(MelGrid::zeros(4, 2).unwrap()))],
            mu.clone()
        )
        .is_err());

        // sigma = 0 is a valid point mass.
        let point = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.0, Offset::Zero)],
            mu.clone(),
        )
        .unwrap();
        let s = NoiseSchedule::default();
        assert!(point.log_likelihood(&mu, &s, 0.0).is_err());
        assert!(point.log_likelihood(&mu, &s, 0.5).is_ok());
    }

    #[test]
    fn with_mu_rechecks_shape() {
        let mu = flat_mu(4, 3);
        let model = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.1, Offset::Grid(MelGrid::zeros(4, 3).unwrap()))],
            mu,
        )
        .unwrap();
        assert!(model.with_mu(flat_mu(4, 3)).is_ok());
        assert!(model.with_mu(flat_mu(4, 5)).is_err());

        let profile = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.1, Offset::FreqProfile(vec![0.1; 4]))],
            flat_mu(4, 3),
        )
        .unwrap();
        // Frequency profiles survive a change of frame count.
        assert!(profile.with_mu(flat_mu(4, 7)).is_ok());
    }

    #[test]
    fn single_component_score_is_closed_form() {
        let s = NoiseSchedule::default();
        let mu = flat_mu(3, 4);
        let model = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.3, Offset::Zero)],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);

        let mut rng = Rng::new(9);
        let x = rng.standard_normal(3, 4).unwrap();
        for &t in &[0.05, 0.4, 1.0] {
            let gamma = s.gamma(t).unwrap();
            let var = gamma * 0.09 + (1.0 - gamma);
            let score = provider.score(&x, &mu, t).unwrap();
            for (i, sv) in score.values().iter().enumerate() {
                let want = (mu.values()[i] - x.values()[i]) / var;
                assert_relative_eq!(*sv, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_mixture_score_vanishes_at_midpoint() {
        let s = NoiseSchedule::default();
        let mu = MelGrid::zeros(4, 3).unwrap();
        let delta: Vec<f64> = vec![0.3, -0.1, 0.2, 0.05];
        let neg: Vec<f64> = delta.iter().map(|d| -d).collect();
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.5, 0.2, Offset::FreqProfile(delta)),
                Component::new(0.5, 0.2, Offset::FreqProfile(neg)),
            ],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);
        let score = provider.score(&mu, &mu, 0.5).unwrap();
        // With mu = 0 the two pulls are exact IEEE negations.
        assert!(score.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixture_score_matches_direct_density_ratio() {
        // Same quantity along a second route: unnormalized densities in
        // linear space instead of log space.
        let s = NoiseSchedule::default();
        let mu = flat_mu(4, 4);
        let mut rng = Rng::new(21);
        let offsets: Vec<Offset> = vec![
            Offset::Zero,
            Offset::FreqProfile(vec![0.2, -0.2, 0.1, 0.0]),
            Offset::Grid(rng.standard_normal(4, 4).unwrap()),
        ];
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.5, 0.1, offsets[0].clone()),
                Component::new(0.3, 0.3, offsets[1].clone()),
                Component::new(0.2, 0.5, offsets[2].clone()),
            ],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);

        for &t in &[0.2, 0.7] {
            let gamma = s.gamma(t).unwrap();
            let root = math::sqrt(gamma);
            // Stay near mu so the naive product of densities cannot underflow.
            let mut x = mu.clone();
            for v in x.values_mut() {
                *v += 0.3 * rng.normal();
            }

            let mut dens = [0.0; 3];
            let mut pulls = vec![MelGrid::zeros(4, 4).unwrap(); 3];
            for (k, c) in model.components().iter().enumerate() {
                let var = gamma * c.sigma * c.sigma + (1.0 - gamma);
                let mut d = 1.0;
                for tau in 0..4 {
                    for f in 0..4 {
                        let m = mu.get(f, tau) + root * offsets[k].at(f, tau);
                        let diff = x.get(f, tau) - m;
                        d *= math::exp(-0.5 * diff * diff / var)
                            / math::sqrt(core::f64::consts::TAU * var);
                        pulls[k].frame_mut(tau)[f] = (m - x.get(f, tau)) / var;
                    }
                }
                dens[k] = c.weight * d;
            }
            let total: f64 = dens.iter().sum();
            let score = provider.score(&x, &mu, t).unwrap();
            for tau in 0..4 {
                for f in 0..4 {
                    let want: f64 =
                        (0..3).map(|k| dens[k] / total * pulls[k].get(f, tau)).sum();
                    assert_relative_eq!(score.get(f, tau), want, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn score_is_log_density_gradient() {
        let s = NoiseSchedule::default();
        let mu = flat_mu(3, 3);
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.6, 0.2, Offset::FreqProfile(vec![0.3, 0.0, -0.3])),
                Component::new(0.4, 0.4, Offset::Zero),
            ],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);

        let mut rng = Rng::new(33);
        let mut x = mu.clone();
        for v in x.values_mut() {
            *v += 0.5 * rng.normal();
        }
        let t = 0.3;
        let h = 1e-5;
        let score = provider.score(&x, &mu, t).unwrap();
        for cell in [0usize, 4, 8] {
            let mut hi = x.clone();
            hi.values_mut()[cell] += h;
            let mut lo = x.clone();
            lo.values_mut()[cell] -= h;
            let fd = (model.log_likelihood(&hi, &s, t).unwrap()
                - model.log_likelihood(&lo, &s, t).unwrap())
                / (2.0 * h);
            assert_relative_eq!(score.values()[cell], fd, max_relative = 1e-5, epsilon = 1e-7);
        }
    }

    #[test]
    fn unit_sigma_model_freezes_reverse_flow() {
        // sigma = 1 with no offset makes every marginal exactly N(mu, 1),
        // so the probability-flow drift cancels identically and the
        // integrator returns its input bit-for-bit.
        let s = NoiseSchedule::new(0.05, 20.0, 200).unwrap();
        let mu = flat_mu(5, 6);
        let model = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 1.0, Offset::Zero)],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);

        let mut rng = Rng::new(77);
        let x1 = crate::diffusion::sample_prior(&mu, &mut rng).unwrap();
        let out = reverse_integrate(&s, &mu, &x1, &provider).unwrap();
        assert_eq!(out, x1);
    }

    #[test]
    fn sample_data_respects_weights_and_moments() {
        let mu = flat_mu(3, 2);
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.7, 0.0, Offset::FreqProfile(vec![1.0, 0.0, 0.0])),
                Component::new(0.3, 0.0, Offset::FreqProfile(vec![-1.0, 0.0, 0.0])),
            ],
            mu.clone(),
        )
        .unwrap();
        let mut rng = Rng::new(13);
        let n = 4000;
        let mut hits = [0usize; 2];
        for _ in 0..n {
            let (x, k) = model.sample_data(&mut rng).unwrap();
            hits[k] += 1;
            // sigma = 0: the draw is exactly mu + delta_k.
            let want = if k == 0 { 0.0 } else { -2.0 };
            assert_eq!(x.get(0, 0), want);
            assert_eq!(x.get(1, 0), -1.0);
        }
        let p = hits[0] as f64 / n as f64;
        // 3 sigma of a Bernoulli(0.7) mean over 4000 draws is ~0.022.
        assert!((p - 0.7).abs() < 0.025, "component frequency off: {p}");

        let noisy = GaussianMixtureDataModel::new(
            vec![Component::new(1.0, 0.5, Offset::Zero)],
            mu.clone(),
        )
        .unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let m = 2000;
        for _ in 0..m {
            let (x, _) = noisy.sample_data(&mut rng).unwrap();
            for v in x.values() {
                sum += v;
                sum_sq += v * v;
            }
        }
        let cells = (m * 6) as f64;
        let mean = sum / cells;
        let var = sum_sq / cells - mean * mean;
        assert!((mean + 1.0).abs() < 0.02);
        assert!((var - 0.25).abs() < 0.02);
    }

    #[test]
    fn far_field_score_stays_finite() {
        let s = NoiseSchedule::default();
        let mu = flat_mu(3, 3);
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.5, 0.1, Offset::Zero),
                Component::new(0.5, 0.3, Offset::FreqProfile(vec![0.2, 0.0, -0.2])),
            ],
            mu.clone(),
        )
        .unwrap();
        let provider = analytic_score(&model, &s);

        // Far enough that per-component squared distances overflow, which
        // exercises the prior-weight fallback.
        let x = MelGrid::constant(3, 3, 1e200).unwrap();
        let score = provider.score(&x, &mu, 0.5).unwrap();
        assert!(score.values().iter().all(|v| v.is_finite()));
        assert!(score.values().iter().all(|&v| v < 0.0));

        // Merely distant states stay on the logsumexp path and pull back.
        let near = MelGrid::constant(3, 3, 50.0).unwrap();
        let pull = provider.score(&near, &mu, 0.5).unwrap();
        assert!(pull.values().iter().all(|&v| v.is_finite() && v < 0.0));
    }

    #[test]
    fn likelihood_brute_force_small_case() {
        // K = 2 on a 1x1 grid, checked against a hand-written two-term sum.
        let s = NoiseSchedule::default();
        let mu = MelGrid::constant(1, 1, 0.0).unwrap();
        let model = GaussianMixtureDataModel::new(
            vec![
                Component::new(0.6, 0.5, Offset::FreqProfile(vec![1.0])),
                Component::new(0.4, 0.2, Offset::FreqProfile(vec![-1.0])),
            ],
            mu,
        )
        .unwrap();
        let t = 0.25;
        let gamma = s.gamma(t).unwrap();
        let root = math::sqrt(gamma);
        let x = MelGrid::constant(1, 1, 0.3).unwrap();

        let term = |w: f64, sigma: f64, d: f64| {
            let var = gamma * sigma * sigma + (1.0 - gamma);
            let diff: f64 = 0.3 - root * d;
            w * math::exp(-0.5 * diff * diff / var) / math::sqrt(core::f64::consts::TAU * var)
        };
        let want = math::ln(term(0.6, 0.5, 1.0) + term(0.4, 0.2, -1.0));
        let got = model.log_likelihood(&x, &s, t).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }
}
