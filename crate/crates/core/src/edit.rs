//! The two prior-perturbation edits.
//!
//! Both run a pair of coupled reverse flows from shared noise: a plain
//! branch conditioned on the untouched prior and an edit branch
//! conditioned on a perturbed prior, with per-frame drift blending so the
//! edit branch follows its own dynamics inside the edited region, the
//! plain dynamics far away, and a dyadic ramp in between.
//!
//! Frames whose softening weight is exactly 0 receive the plain branch's
//! drift value itself, not a recomputation, so untouched frames match the
//! plain output bit-for-bit.

use alloc::vec::Vec;

use crate::diffusion::{sample_prior, NoiseSchedule, Rng, ScoreProvider};
use crate::grid::{
    apply_masked_blend, build_binary_mask, build_gradient_softening_mask, convolve_pitch_kernel,
    lerp_exact, EditSpec, FrameMask, FrameSpan, MelGrid, PitchKernel,
};
use crate::{Error, Result};

/// Everything produced by one pitch edit run.
#[derive(Debug, Clone)]
pub struct PitchEditResult {
    /// Output of the untouched branch.
    pub x_plain: MelGrid,
    /// Output of the edit branch.
    pub x_edit: MelGrid,
    pub mu: MelGrid,
    pub mu_edit: MelGrid,
    pub spec: EditSpec,
    pub seed: u64,
    pub stream: u64,
}

/// Pitch edit: convolve the prior with `kernel` inside the edit regions,
/// then run both branches from one shared prior draw, blending drifts with
/// the gradient softening mask.
pub fn pitch_shift_edit<S: ScoreProvider>(
    schedule: &NoiseSchedule,
    provider: &S,
    mu: &MelGrid,
    spec: &EditSpec,
    kernel: &PitchKernel,
    rng: &mut Rng,
) -> Result<PitchEditResult> {
    let (n_freq, n_frames) = mu.shape();
    spec.validate_for(n_frames)?;
    let binary = build_binary_mask(spec, n_frames)?;
    let s_g = build_gradient_softening_mask(spec, n_frames)?;
    let shifted = convolve_pitch_kernel(mu, kernel)?;
    let mu_edit = apply_masked_blend(mu, &shifted, &binary)?;

    let seed = rng.seed();
    let stream = rng.stream();
    let mut x_plain = sample_prior(mu, rng)?;
    let mut x_edit = mu_edit.add(&x_plain.sub(mu)?)?;

    let steps = schedule.steps();
    for k in (1..=steps).rev() {
        let t = k as f64 / steps as f64;
        let s1 = provider.score(&x_plain, mu, t)?;
        let s2 = provider.score(&x_edit, &mu_edit, t)?;
        if s1.shape() != mu.shape() || s2.shape() != mu.shape() {
            return Err(Error::Shape {
                expected: mu.shape(),
                found: if s1.shape() != mu.shape() {
                    s1.shape()
                } else {
                    s2.shape()
                },
            });
        }
        let c = schedule.beta(t) / (2.0 * steps as f64);
        for tau in 0..n_frames {
            let w = s_g.weight(tau);
            let mu_f = mu.frame(tau);
            let me_f = mu_edit.frame(tau);
            let s1_f = s1.frame(tau);
            let s2_f = s2.frame(tau);
            let xp = x_plain.frame_mut(tau);
            let xe = x_edit.frame_mut(tau);
            for f in 0..n_freq {
                let d1 = c * (mu_f[f] - xp[f] - s1_f[f]);
                let d2 = c * (me_f[f] - xe[f] - s2_f[f]);
                xp[f] -= d1;
                xe[f] -= lerp_exact(w, d1, d2);
            }
        }
    }

    Ok(PitchEditResult {
        x_plain,
        x_edit,
        mu: mu.clone(),
        mu_edit,
        spec: spec.clone(),
        seed,
        stream,
    })
}

/// Baseline that skips the coupled flow entirely: convolve the finished
/// plain output inside the edit regions and leave the rest alone.
pub fn mel_shift_ablation(
    x_plain: &MelGrid,
    spec: &EditSpec,
    kernel: &PitchKernel,
) -> Result<MelGrid> {
    spec.validate_for(x_plain.n_frames())?;
    let binary = build_binary_mask(spec, x_plain.n_frames())?;
    let shifted = convolve_pitch_kernel(x_plain, kernel)?;
    apply_masked_blend(x_plain, &shifted, &binary)
}

/// Splits a prior around the gap that a replacement will fill; either
/// side may come out empty.
pub fn split_source_prior(mu: &MelGrid, gap: FrameSpan) -> Result<(MelGrid, MelGrid)> {
    gap.validate_within(mu.n_frames())?;
    let left = mu.slice_frames(FrameSpan::new(0, gap.start))?;
    let right = mu.slice_frames(FrameSpan::new(gap.end, mu.n_frames()))?;
    Ok((left, right))
}

/// Copies the chunk of the target prior that will be spliced in.
pub fn extract_target_chunk(mu: &MelGrid, chunk: FrameSpan) -> Result<MelGrid> {
    chunk.validate_within(mu.n_frames())?;
    mu.slice_frames(chunk)
}

fn interior_junctures(parts: &[&MelGrid]) -> Vec<usize> {
    let total: usize = parts.iter().map(|p| p.n_frames()).sum();
    let mut junctures = Vec::new();
    let mut cum = 0;
    for part in &parts[..parts.len() - 1] {
        cum += part.n_frames();
        if cum > 0 && cum < total && junctures.last() != Some(&cum) {
            junctures.push(cum);
        }
    }
    junctures
}

/// Concatenates parts along the frame axis and cross-fades each frame
/// near a juncture toward the pristine boundary column on the other side:
/// a frame at distance `d <= ramp_c` gets weight `(ramp_c + 1 - d) /
/// (ramp_c + 1)` on its neighbor. Ties between junctures go to the
/// earlier one. Returns the smoothed grid and the interior junctures.
pub fn soft_concat(parts: &[&MelGrid], ramp_c: usize) -> Result<(MelGrid, Vec<usize>)> {
    let pristine = MelGrid::concat_frames(parts)?;
    let junctures = interior_junctures(parts);
    let mut out = pristine.clone();
    for tau in 0..out.n_frames() {
        let mut best: Option<(usize, usize)> = None;
        for &j in &junctures {
            let d = if tau < j { j - tau } else { tau - j + 1 };
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        let (d, j) = match best {
            Some(b) if b.0 <= ramp_c => b,
            _ => continue,
        };
        let w = (ramp_c + 1 - d) as f64 / (ramp_c + 1) as f64;
        if w == 0.0 {
            continue;
        }
        let neighbor_tau = if tau < j { j } else { j - 1 };
        let neighbor: Vec<f64> = pristine.frame(neighbor_tau).to_vec();
        let of = out.frame_mut(tau);
        for (f, ov) in of.iter_mut().enumerate() {
            *ov = lerp_exact(w, *ov, neighbor[f]);
        }
    }
    Ok((out, junctures))
}

/// Hard splice with no smoothing and no coupled flow: the source output
/// with its gap replaced by the target output's chunk. Returns the splice
/// and its interior junctures.
pub fn naive_concat(
    x_src: &MelGrid,
    src_gap: FrameSpan,
    x_trg: &MelGrid,
    trg_chunk: FrameSpan,
) -> Result<(MelGrid, Vec<usize>)> {
    if x_src.n_freq() != x_trg.n_freq() {
        return Err(Error::Shape {
            expected: (x_src.n_freq(), x_trg.n_frames()),
            found: x_trg.shape(),
        });
    }
    let (left, right) = split_source_prior(x_src, src_gap)?;
    let chunk = extract_target_chunk(x_trg, trg_chunk)?;
    let parts = [&left, &chunk, &right];
    let junctures = interior_junctures(&parts);
    Ok((MelGrid::concat_frames(&parts)?, junctures))
}

/// Lays the edit branch's per-step drift contribution for a replacement
/// onto the output timeline: zero everywhere except the destination span,
/// where the target-branch drift is aligned frame-by-frame and scaled by
/// the softening weight.
///
/// This is the literal masking step of the replacement update. The full
/// edit in [`content_replace_edit`] additionally extends the alignment
/// over the softening ramp wherever both timelines have frames there, so
/// ramp frames blend two real drifts instead of a drift and a zero.
pub fn slice_and_reshape(
    dx1: &MelGrid,
    trg_chunk: FrameSpan,
    dst: FrameSpan,
    s_g: &FrameMask,
    out_frames: usize,
) -> Result<MelGrid> {
    trg_chunk.validate_within(dx1.n_frames())?;
    dst.validate_within(out_frames)?;
    if trg_chunk.len() != dst.len() {
        return Err(Error::Invalid(
            "replacement chunk and destination must have equal length",
        ));
    }
    if s_g.len() != out_frames {
        return Err(Error::MaskLength {
            expected: out_frames,
            found: s_g.len(),
        });
    }
    let n_freq = dx1.n_freq();
    let mut out = MelGrid::zeros(n_freq, out_frames)?;
    for o in dst.start..dst.end {
        let w = s_g.weight(o);
        let src = dx1.frame(trg_chunk.start + o - dst.start);
        let of = out.frame_mut(o);
        for f in 0..n_freq {
            of[f] = w * src[f];
        }
    }
    Ok(out)
}

/// Which branch's drift the softening weight favors during a replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplaceGradientSource {
    /// Weight 1 follows the target branch; the complement scales the edit
    /// branch. The default.
    Target,
    /// Weight 1 follows the edit branch, mirroring the pitch edit's
    /// convention. Frames the target timeline cannot cover fall back to
    /// the full edit drift so nothing freezes.
    Edited,
}

/// How the edit branch's starting noise relates to the target branch's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePairing {
    /// Fresh noise except on the destination span, which copies the
    /// target draw's chunk columns so the splice tracks the target
    /// realization. The default.
    ChunkShared,
    /// The whole draw is shared; requires equal frame counts.
    FullShared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentEditParams {
    pub ramp_g: usize,
    pub ramp_c: usize,
    pub gradient_source: ReplaceGradientSource,
    pub noise_pairing: NoisePairing,
}

impl Default for ContentEditParams {
    fn default() -> Self {
        Self {
            ramp_g: EditSpec::DEFAULT_RAMP_G,
            ramp_c: EditSpec::DEFAULT_RAMP_C,
            gradient_source: ReplaceGradientSource::Target,
            noise_pairing: NoisePairing::ChunkShared,
        }
    }
}

/// Where the replacement landed on the output timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlacement {
    pub src_gap: FrameSpan,
    pub trg_chunk: FrameSpan,
    /// Span of the output now holding the chunk.
    pub dst: FrameSpan,
    pub junctures: Vec<usize>,
    pub n_out: usize,
}

#[derive(Debug, Clone)]
pub struct ContentEditResult {
    /// The spliced output.
    pub x_edit: MelGrid,
    /// The target branch's own full output.
    pub x_trg: MelGrid,
    pub mu_edit: MelGrid,
    pub placement: ChunkPlacement,
    pub seed: u64,
    pub stream: u64,
}

/// Content replacement: cut `src_gap` out of the source prior, splice in
/// the target prior's `trg_chunk` with juncture cross-fades, then run the
/// target branch and the edit branch together, steering the destination
/// span with the target branch's drift.
#[allow(clippy::too_many_arguments)]
pub fn content_replace_edit<S: ScoreProvider>(
    schedule: &NoiseSchedule,
    provider: &S,
    mu_src: &MelGrid,
    src_gap: FrameSpan,
    mu_trg: &MelGrid,
    trg_chunk: FrameSpan,
    params: &ContentEditParams,
    rng: &mut Rng,
) -> Result<ContentEditResult> {
    if mu_src.n_freq() != mu_trg.n_freq() {
        return Err(Error::Shape {
            expected: (mu_src.n_freq(), mu_trg.n_frames()),
            found: mu_trg.shape(),
        });
    }
    let n_freq = mu_src.n_freq();
    let n_trg = mu_trg.n_frames();
    let (left, right) = split_source_prior(mu_src, src_gap)?;
    let chunk = extract_target_chunk(mu_trg, trg_chunk)?;
    let (mu_edit, junctures) = soft_concat(&[&left, &chunk, &right], params.ramp_c)?;
    let n_out = mu_edit.n_frames();
    let dst = FrameSpan::new(left.n_frames(), left.n_frames() + chunk.n_frames());

    let spec = EditSpec::with_ramps(alloc::vec![dst], params.ramp_g, params.ramp_c)?;
    let s_g = build_gradient_softening_mask(&spec, n_out)?;

    let seed = rng.seed();
    let stream = rng.stream();
    let eps_trg = rng.standard_normal(n_freq, n_trg)?;
    let mut x_trg = mu_trg.add(&eps_trg)?;
    let eps_edit = match params.noise_pairing {
        NoisePairing::FullShared => {
            if n_out != n_trg {
                return Err(Error::Invalid(
                    "shared noise needs output and target of equal length",
                ));
            }
            eps_trg.clone()
        }
        NoisePairing::ChunkShared => {
            let mut eps = rng.standard_normal(n_freq, n_out)?;
            for o in dst.start..dst.end {
                let src = eps_trg.frame(trg_chunk.start + o - dst.start).to_vec();
                eps.frame_mut(o).copy_from_slice(&src);
            }
            eps
        }
    };
    let mut x_edit = mu_edit.add(&eps_edit)?;

    // The target branch can steer ramp frames just outside the
    // destination wherever both timelines actually have them.
    let ext_l = params.ramp_g.min(trg_chunk.start).min(dst.start);
    let ext_r = params
        .ramp_g
        .min(n_trg - trg_chunk.end)
        .min(n_out - dst.end);
    let cov_lo = dst.start - ext_l;
    let cov_hi = dst.end + ext_r;

    let steps = schedule.steps();
    let mut dx1 = MelGrid::zeros(n_freq, n_trg)?;
    for k in (1..=steps).rev() {
        let t = k as f64 / steps as f64;
        let s1 = provider.score(&x_trg, mu_trg, t)?;
        let s2 = provider.score(&x_edit, &mu_edit, t)?;
        if s1.shape() != mu_trg.shape() || s2.shape() != mu_edit.shape() {
            return Err(Error::Shape {
                expected: mu_edit.shape(),
                found: if s1.shape() != mu_trg.shape() {
                    s1.shape()
                } else {
                    s2.shape()
                },
            });
        }
        let c = schedule.beta(t) / (2.0 * steps as f64);

        for tau in 0..n_trg {
            let mu_f = mu_trg.frame(tau);
            let x_f = x_trg.frame(tau);
            let s_f = s1.frame(tau);
            let d_f = dx1.frame_mut(tau);
            for f in 0..n_freq {
                d_f[f] = c * (mu_f[f] - x_f[f] - s_f[f]);
            }
        }

        for o in 0..n_out {
            let w = s_g.weight(o);
            let me_f = mu_edit.frame(o);
            let s2_f = s2.frame(o);
            let xe = x_edit.frame_mut(o);
            if o >= cov_lo && o < cov_hi {
                let d1_f = dx1.frame(trg_chunk.start + o - dst.start);
                for f in 0..n_freq {
                    let d2 = c * (me_f[f] - xe[f] - s2_f[f]);
                    let upd = match params.gradient_source {
                        ReplaceGradientSource::Target => lerp_exact(w, d2, d1_f[f]),
                        ReplaceGradientSource::Edited => lerp_exact(w, d1_f[f], d2),
                    };
                    xe[f] -= upd;
                }
            } else {
                for f in 0..n_freq {
                    let d2 = c * (me_f[f] - xe[f] - s2_f[f]);
                    let upd = match params.gradient_source {
                        ReplaceGradientSource::Target => lerp_exact(w, d2, 0.0),
                        ReplaceGradientSource::Edited => d2,
                    };
                    xe[f] -= upd;
                }
            }
        }

        for tau in 0..n_trg {
            let d_f = dx1.frame(tau);
            let x_f = x_trg.frame_mut(tau);
            for f in 0..n_freq {
                x_f[f] -= d_f[f];
            }
        }
    }

    Ok(ContentEditResult {
        x_edit,
        x_trg,
        mu_edit,
        placement: ChunkPlacement {
            src_gap,
            trg_chunk,
            dst,
            junctures,
            n_out,
        },
        seed,
        stream,
    })
}
