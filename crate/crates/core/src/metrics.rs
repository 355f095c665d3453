//! Quantitative checks on edit outputs: where the spectral mass sits, how
//! far an edit leaked, how rough a splice seam is, and how plausible a
//! grid is under the known data model.

use alloc::vec::Vec;

use crate::diffusion::NoiseSchedule;
use crate::edit::{mel_shift_ablation, PitchEditResult};
use crate::grid::{
    build_binary_mask, build_gradient_softening_mask, MelGrid, PitchKernel,
};
use crate::math;
use crate::oracle::GaussianMixtureDataModel;
use crate::{Error, Result};

/// Per-frame spectral centroid with softmax weighting: bin `f` weighs
/// `exp(x[f] - max)`, so the centroid tracks where the loud bins are and
/// is insensitive to a common offset.
pub fn freq_centroid(grid: &MelGrid) -> Vec<f64> {
    let n_frames = grid.n_frames();
    (0..n_frames)
        .map(|tau| {
            let col = grid.frame(tau);
            let max = col.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut num = 0.0;
            let mut den = 0.0;
            for (f, &v) in col.iter().enumerate() {
                let w = math::exp(v - max);
                num += f as f64 * w;
                den += w;
            }
            num / den
        })
        .collect()
}

/// Mean centroid movement of the edit branch relative to the plain
/// branch, one value per edit region.
pub fn centroid_shift(run: &PitchEditResult) -> Result<Vec<f64>> {
    run.spec.validate_for(run.x_plain.n_frames())?;
    let plain = freq_centroid(&run.x_plain);
    let edit = freq_centroid(&run.x_edit);
    Ok(run
        .spec
        .regions()
        .iter()
        .map(|r| {
            let sum: f64 = (r.start..r.end).map(|tau| edit[tau] - plain[tau]).sum();
            sum / r.len() as f64
        })
        .collect())
}

/// Largest deviation between the branches on frames the edit was not
/// allowed to touch: outside every region and past the softening ramp.
/// Returns 0 when no such frame exists.
pub fn region_leakage(run: &PitchEditResult) -> Result<f64> {
    let n_frames = run.x_plain.n_frames();
    let binary = build_binary_mask(&run.spec, n_frames)?;
    let s_g = build_gradient_softening_mask(&run.spec, n_frames)?;
    let mut worst = 0.0_f64;
    for tau in 0..n_frames {
        if binary.weight(tau) != 0.0 || s_g.weight(tau) != 0.0 {
            continue;
        }
        let a = run.x_plain.frame(tau);
        let b = run.x_edit.frame(tau);
        for f in 0..a.len() {
            worst = worst.max((a[f] - b[f]).abs());
        }
    }
    Ok(worst)
}

/// Mean squared column jump across the given junctures,
/// `mean_J ||x[., J] - x[., J - 1]||^2 / n_freq`. Junctures must be
/// interior; an empty list scores 0.
pub fn juncture_discontinuity(grid: &MelGrid, junctures: &[usize]) -> Result<f64> {
    if junctures.is_empty() {
        return Ok(0.0);
    }
    let n_frames = grid.n_frames();
    let mut total = 0.0;
    for &j in junctures {
        if j == 0 || j >= n_frames {
            return Err(Error::Range {
                start: j,
                end: j,
                limit: n_frames,
            });
        }
        let a = grid.frame(j - 1);
        let b = grid.frame(j);
        let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        total += ss / grid.n_freq() as f64;
    }
    Ok(total / junctures.len() as f64)
}

/// Negative log likelihood of two grids under the same model's data
/// distribution, returned as `(first, second)`. Lower is more plausible.
pub fn nll_comparison(
    model: &GaussianMixtureDataModel,
    schedule: &NoiseSchedule,
    first: &MelGrid,
    second: &MelGrid,
) -> Result<(f64, f64)> {
    Ok((
        -model.log_likelihood(first, schedule, 0.0)?,
        -model.log_likelihood(second, schedule, 0.0)?,
    ))
}

/// Summary of one pitch edit run against its direct-shift baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct EditReport {
    /// Mean plain-branch centroid per region.
    pub centroid_plain: Vec<f64>,
    /// Mean edit-branch centroid per region.
    pub centroid_edit: Vec<f64>,
    pub region_deltas: Vec<f64>,
    pub leakage: f64,
    /// Seam roughness of the edit branch at region boundaries.
    pub juncture_disc: f64,
    /// NLL of the edit output under the model recentered on the edited
    /// prior.
    pub nll_edit: f64,
    /// NLL of the direct-shift baseline under the same recentered model.
    pub nll_melshift: f64,
}

impl EditReport {
    /// Mean of the per-region centroid movements.
    pub fn mean_delta(&self) -> f64 {
        if self.region_deltas.is_empty() {
            return 0.0;
        }
        self.region_deltas.iter().sum::<f64>() / self.region_deltas.len() as f64
    }

    /// Computes every metric for a finished pitch run. `model` is the
    /// data model around the unedited prior; the NLL comparison recenters
    /// it on the edited prior and needs strictly positive sigmas.
    pub fn from_pitch_run(
        run: &PitchEditResult,
        kernel: &PitchKernel,
        model: &GaussianMixtureDataModel,
        schedule: &NoiseSchedule,
    ) -> Result<EditReport> {
        let n_frames = run.x_plain.n_frames();
        let plain = freq_centroid(&run.x_plain);
        let edit = freq_centroid(&run.x_edit);
        let mean_over = |vals: &[f64], r: &crate::grid::FrameSpan| {
            let sum: f64 = (r.start..r.end).map(|tau| vals[tau]).sum();
            sum / r.len() as f64
        };
        let centroid_plain: Vec<f64> =
            run.spec.regions().iter().map(|r| mean_over(&plain, r)).collect();
        let centroid_edit: Vec<f64> =
            run.spec.regions().iter().map(|r| mean_over(&edit, r)).collect();
        let region_deltas = centroid_plain
            .iter()
            .zip(&centroid_edit)
            .map(|(p, e)| e - p)
            .collect();

        let junctures: Vec<usize> = run
            .spec
            .regions()
            .iter()
            .flat_map(|r| [r.start, r.end])
            .filter(|&j| j > 0 && j < n_frames)
            .collect();

        let melshift = mel_shift_ablation(&run.x_plain, &run.spec, kernel)?;
        let shifted_model = model.with_mu(run.mu_edit.clone())?;
        let (nll_edit, nll_melshift) =
            nll_comparison(&shifted_model, schedule, &run.x_edit, &melshift)?;

        Ok(EditReport {
            centroid_plain,
            centroid_edit,
            region_deltas,
            leakage: region_leakage(run)?,
            juncture_disc: juncture_discontinuity(&run.x_edit, &junctures)?,
            nll_edit,
            nll_melshift,
        })
    }
}
