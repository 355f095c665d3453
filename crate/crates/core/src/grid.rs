//! Grid, mask, and kernel primitives.
//!
//! A [`MelGrid`] is a dense `n_freq x n_frames` matrix of finite `f64`
//! values stored frame-major, so per-frame slices are contiguous. Masks
//! carry one weight in `[0, 1]` per frame and broadcast over the frequency
//! axis. All editing operations below are pure and deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Half-open frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpan {
    pub start: usize,
    pub end: usize,
}

impl FrameSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, tau: usize) -> bool {
        self.start <= tau && tau < self.end
    }

    /// Errors unless `start < end <= limit`.
    pub fn validate_within(&self, limit: usize) -> Result<()> {
        if self.start >= self.end || self.end > limit {
            return Err(Error::Range {
                start: self.start,
                end: self.end,
                limit,
            });
        }
        Ok(())
    }
}

/// Dense spectrogram-like grid. `n_freq >= 1`; zero frames is allowed so
/// frame slicing can produce empty pieces. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MelGrid {
    n_freq: usize,
    n_frames: usize,
    /// Frame-major: `values[tau * n_freq + f]`.
    values: Vec<f64>,
}

impl MelGrid {
    /// Builds a grid from frame-major values.
    pub fn new(n_freq: usize, n_frames: usize, values: Vec<f64>) -> Result<Self> {
        if n_freq == 0 {
            return Err(Error::Invalid("grid needs at least one frequency bin"));
        }
        if values.len() != n_freq * n_frames {
            return Err(Error::Invalid("grid value count does not match its shape"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("grid values must be finite"));
        }
        Ok(Self {
            n_freq,
            n_frames,
            values,
        })
    }

    pub fn constant(n_freq: usize, n_frames: usize, value: f64) -> Result<Self> {
        Self::new(n_freq, n_frames, vec![value; n_freq * n_frames])
    }

    pub fn zeros(n_freq: usize, n_frames: usize) -> Result<Self> {
        Self::constant(n_freq, n_frames, 0.0)
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_freq, self.n_frames)
    }

    pub fn get(&self, f: usize, tau: usize) -> f64 {
        self.values[tau * self.n_freq + f]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, tau: usize) -> &[f64] {
        &self.values[tau * self.n_freq..(tau + 1) * self.n_freq]
    }

    pub(crate) fn frame_mut(&mut self, tau: usize) -> &mut [f64] {
        &mut self.values[tau * self.n_freq..(tau + 1) * self.n_freq]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn check_same_shape(&self, other: &MelGrid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &MelGrid) -> Result<MelGrid> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(MelGrid {
            n_freq: self.n_freq,
            n_frames: self.n_frames,
            values,
        })
    }

    pub fn sub(&self, other: &MelGrid) -> Result<MelGrid> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(MelGrid {
            n_freq: self.n_freq,
            n_frames: self.n_frames,
            values,
        })
    }

    pub fn max_abs_diff(&self, other: &MelGrid) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Copies the frames in `span` (which may be empty, `end <= n_frames`).
    pub fn slice_frames(&self, span: FrameSpan) -> Result<MelGrid> {
        if span.start > span.end || span.end > self.n_frames {
            return Err(Error::Range {
                start: span.start,
                end: span.end,
                limit: self.n_frames,
            });
        }
        let values = self.values[span.start * self.n_freq..span.end * self.n_freq].to_vec();
        Ok(MelGrid {
            n_freq: self.n_freq,
            n_frames: span.len(),
            values,
        })
    }

    /// Concatenates parts along the frame axis; all parts must share `n_freq`.
    pub fn concat_frames(parts: &[&MelGrid]) -> Result<MelGrid> {
        let first = parts
            .first()
            .ok_or(Error::Invalid("cannot concatenate zero grids"))?;
        let n_freq = first.n_freq;
        let n_frames = parts.iter().map(|p| p.n_frames).sum();
        let mut values = Vec::with_capacity(n_freq * n_frames);
        for part in parts {
            if part.n_freq != n_freq {
                return Err(Error::Shape {
                    expected: (n_freq, part.n_frames),
                    found: part.shape(),
                });
            }
            values.extend_from_slice(&part.values);
        }
        Ok(MelGrid {
            n_freq,
            n_frames,
            values,
        })
    }
}

/// Which frames an edit touches, plus the widths of the two softening
/// ramps. Regions are half-open, strictly ascending, and non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditSpec {
    regions: Vec<FrameSpan>,
    ramp_g: usize,
    ramp_c: usize,
}

impl EditSpec {
    pub const DEFAULT_RAMP_G: usize = 16;
    pub const DEFAULT_RAMP_C: usize = 9;

    pub fn new(regions: Vec<FrameSpan>) -> Result<Self> {
        Self::with_ramps(regions, Self::DEFAULT_RAMP_G, Self::DEFAULT_RAMP_C)
    }

    pub fn with_ramps(regions: Vec<FrameSpan>, ramp_g: usize, ramp_c: usize) -> Result<Self> {
        for r in &regions {
            if r.start >= r.end {
                return Err(Error::Invalid("edit region must have start < end"));
            }
        }
        if regions.windows(2).any(|w| w[0].end > w[1].start) {
            return Err(Error::Invalid(
                "edit regions must be sorted and non-overlapping",
            ));
        }
        Ok(Self {
            regions,
            ramp_g,
            ramp_c,
        })
    }

    pub fn regions(&self) -> &[FrameSpan] {
        &self.regions
    }

    pub fn ramp_g(&self) -> usize {
        self.ramp_g
    }

    pub fn ramp_c(&self) -> usize {
        self.ramp_c
    }

    /// Bounds check against a concrete grid length.
    pub fn validate_for(&self, n_frames: usize) -> Result<()> {
        for r in &self.regions {
            r.validate_within(n_frames)?;
        }
        Ok(())
    }

    /// Distance from `tau` to the nearest region; 0 when inside one.
    fn region_distance(&self, tau: usize) -> Option<usize> {
        self.regions
            .iter()
            .map(|r| {
                if r.contains(tau) {
                    0
                } else if tau < r.start {
                    r.start - tau
                } else {
                    tau - (r.end - 1)
                }
            })
            .min()
    }
}

/// Per-frame weights in `[0, 1]`, broadcast over the frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMask {
    weights: Vec<f64>,
}

impl FrameMask {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if !weights.iter().all(|w| w.is_finite() && (0.0..=1.0).contains(w)) {
            return Err(Error::Invalid("mask weights must lie in [0, 1]"));
        }
        Ok(Self { weights })
    }

    pub fn zeros(n_frames: usize) -> Self {
        Self {
            weights: vec![0.0; n_frames],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, tau: usize) -> f64 {
        self.weights[tau]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_len(&self, n_frames: usize) -> Result<()> {
        if self.weights.len() != n_frames {
            return Err(Error::MaskLength {
                expected: n_frames,
                found: self.weights.len(),
            });
        }
        Ok(())
    }
}

/// Five-tap frequency-axis kernel. Tap `j` weighs the input bin at offset
/// `j - 2`, so weight on the lower offsets pulls energy upward in
/// frequency. Taps are non-negative and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchKernel {
    weights: [f64; 5],
}

impl PitchKernel {
    pub fn new(weights: [f64; 5]) -> Result<Self> {
        if !weights.iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Error::Invalid("kernel taps must be finite and >= 0"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("kernel taps must sum to 1"));
        }
        Ok(Self { weights })
    }

    pub fn up() -> Self {
        Self {
            weights: [0.2, 0.2, 0.6, 0.0, 0.0],
        }
    }

    pub fn down() -> Self {
        Self {
            weights: [0.0, 0.0, 0.6, 0.2, 0.2],
        }
    }

    pub fn aggressive_up() -> Self {
        Self {
            weights: [0.4, 0.4, 0.2, 0.0, 0.0],
        }
    }

    /// Mirror image of [`PitchKernel::aggressive_up`].
    pub fn aggressive_down() -> Self {
        Self {
            weights: [0.0, 0.0, 0.2, 0.4, 0.4],
        }
    }

    pub fn identity() -> Self {
        Self {
            weights: [0.0, 0.0, 1.0, 0.0, 0.0],
        }
    }

    pub fn weights(&self) -> [f64; 5] {
        self.weights
    }
}

/// `(1 - w) a + w b`, with exact copies at the endpoints and for equal
/// operands. Weights of 0 and 1 never disturb the untouched operand, and
/// blending a value with itself returns it unchanged instead of picking
/// up round-off, so degenerate edits stay bitwise invisible.
pub(crate) fn lerp_exact(w: f64, a: f64, b: f64) -> f64 {
    if w == 0.0 || a == b {
        a
    } else if w == 1.0 {
        b
    } else {
        (1.0 - w) * a + w * b
    }
}

/// 1 on edited frames, 0 elsewhere.
pub fn build_binary_mask(spec: &EditSpec, n_frames: usize) -> Result<FrameMask> {
    spec.validate_for(n_frames)?;
    let mut weights = vec![0.0; n_frames];
    for r in spec.regions() {
        for w in &mut weights[r.start..r.end] {
            *w = 1.0;
        }
    }
    Ok(FrameMask { weights })
}

/// Weight of the gradient softening ramp at distance `i` from the edited
/// region: `(2^(R+1-i) - 1) / (2^(R+1) - 1)` for `R = ramp`, evaluated in
/// the equivalent form `(2^-i - 2^-(R+1)) / (1 - 2^-(R+1))` which stays
/// stable for any ramp width.
fn gradient_ramp_weight(i: usize, ramp: usize) -> f64 {
    if i == 0 {
        return 1.0;
    }
    if i > ramp {
        return 0.0;
    }
    let tail = math::exp2(-((ramp + 1) as f64));
    (math::exp2(-(i as f64)) - tail) / (1.0 - tail)
}

/// Gradient softening mask: 1 inside every region, decaying dyadically
/// over the `ramp_g` nearest frames outside, 0 beyond. Where ramps of two
/// regions overlap the nearer region wins (elementwise maximum).
pub fn build_gradient_softening_mask(spec: &EditSpec, n_frames: usize) -> Result<FrameMask> {
    spec.validate_for(n_frames)?;
    let weights = (0..n_frames)
        .map(|tau| match spec.region_distance(tau) {
            Some(i) => gradient_ramp_weight(i, spec.ramp_g()),
            None => 0.0,
        })
        .collect();
    Ok(FrameMask { weights })
}

/// Distance of frame `tau` from a juncture sitting *between* frames
/// `j - 1` and `j`: both adjacent frames count as distance 1.
fn juncture_distance(tau: usize, juncture: usize) -> usize {
    if tau < juncture {
        juncture - tau
    } else {
        tau - juncture + 1
    }
}

/// Cross-fade weights around chunk junctures: a frame at distance `j` gets
/// `(R + 1 - j) / (R + 1)` for `j <= R = ramp_c`, 0 beyond. With several
/// junctures the nearest one wins.
pub fn build_concat_softening_mask(
    junctures: &[usize],
    n_frames: usize,
    ramp_c: usize,
) -> Result<FrameMask> {
    for &j in junctures {
        if j > n_frames {
            return Err(Error::Range {
                start: j,
                end: j,
                limit: n_frames,
            });
        }
    }
    let weights = (0..n_frames)
        .map(|tau| {
            match junctures.iter().map(|&j| juncture_distance(tau, j)).min() {
                Some(d) if d <= ramp_c => (ramp_c + 1 - d) as f64 / (ramp_c + 1) as f64,
                _ => 0.0,
            }
        })
        .collect();
    Ok(FrameMask { weights })
}

/// Frequency-axis convolution with the five-tap kernel, replicating the
/// edge bins for out-of-range taps. Needs at least 5 frequency bins.
pub fn convolve_pitch_kernel(grid: &MelGrid, kernel: &PitchKernel) -> Result<MelGrid> {
    if grid.n_freq() < 5 {
        return Err(Error::Invalid("pitch kernel needs at least 5 frequency bins"));
    }
    let (n_freq, n_frames) = grid.shape();
    let w = kernel.weights();
    let mut out = MelGrid {
        n_freq,
        n_frames,
        values: vec![0.0; n_freq * n_frames],
    };
    for tau in 0..n_frames {
        let src = grid.frame(tau);
        let dst = out.frame_mut(tau);
        for (f, slot) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate() {
                let idx = (f + j).saturating_sub(2).min(n_freq - 1);
                acc += wj * src[idx];
            }
            *slot = acc;
        }
    }
    Ok(out)
}

/// Per-frame blend `out[., tau] = (1 - m[tau]) a[., tau] + m[tau] b[., tau]`.
/// Frames with weight exactly 0 or 1 are copied bit-for-bit.
pub fn apply_masked_blend(a: &MelGrid, b: &MelGrid, mask: &FrameMask) -> Result<MelGrid> {
    a.check_same_shape(b)?;
    mask.check_len(a.n_frames())?;
    let mut out = a.clone();
    for tau in 0..a.n_frames() {
        let w = mask.weight(tau);
        if w == 0.0 {
            continue;
        }
        let bf = b.frame(tau);
        let of = out.frame_mut(tau);
        for f in 0..of.len() {
            of[f] = lerp_exact(w, of[f], bf[f]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(MelGrid::new(0, 3, vec![]).is_err());
        assert!(MelGrid::new(2, 2, vec![0.0; 3]).is_err());
        assert!(MelGrid::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(MelGrid::new(2, 1, vec![0.0, f64::INFINITY]).is_err());
        assert!(MelGrid::new(2, 0, vec![]).is_ok());
    }

    #[test]
    fn grid_is_frame_major() {
        let g = MelGrid::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        assert_eq!(g.get(1, 0), 1.0);
        assert_eq!(g.get(0, 2), 4.0);
        assert_eq!(g.frame(1), &[2.0, 3.0]);
    }

    #[test]
    fn slice_and_concat_round_trip() {
        let g = MelGrid::new(2, 4, (0..8).map(|v| v as f64).collect()).unwrap();
        let left = g.slice_frames(FrameSpan::new(0, 1)).unwrap();
        let mid = g.slice_frames(FrameSpan::new(1, 3)).unwrap();
        let right = g.slice_frames(FrameSpan::new(3, 4)).unwrap();
        let cat = MelGrid::concat_frames(&[&left, &mid, &right]).unwrap();
        assert_eq!(cat, g);

        let empty = g.slice_frames(FrameSpan::new(2, 2)).unwrap();
        assert_eq!(empty.n_frames(), 0);
        assert!(g.slice_frames(FrameSpan::new(3, 5)).is_err());
    }

    #[test]
    fn edit_spec_validation() {
        let ok = EditSpec::new(vec![FrameSpan::new(2, 4), FrameSpan::new(4, 6)]);
        assert!(ok.is_ok());
        assert!(EditSpec::new(vec![FrameSpan::new(4, 4)]).is_err());
        assert!(EditSpec::new(vec![FrameSpan::new(2, 5), FrameSpan::new(4, 6)]).is_err());
        assert!(EditSpec::new(vec![FrameSpan::new(4, 6), FrameSpan::new(0, 2)]).is_err());
    }

    #[test]
    fn binary_mask_marks_regions() {
        let spec = EditSpec::new(vec![FrameSpan::new(2, 4)]).unwrap();
        let m = build_binary_mask(&spec, 6).unwrap();
        assert_eq!(m.weights(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(build_binary_mask(&spec, 3).is_err());
    }

    // Independent route to the ramp weights: the defining dyadic sums
    // evaluated in integer arithmetic.
    fn ramp_weight_by_sums(i: u32, ramp: u32) -> f64 {
        let num: u64 = (i..=ramp).map(|k| 1u64 << (ramp - k)).sum();
        let den: u64 = (0..=ramp).map(|k| 1u64 << k).sum();
        num as f64 / den as f64
    }

    #[test]
    fn gradient_mask_matches_dyadic_sums() {
        let spec = EditSpec::new(vec![FrameSpan::new(40, 56)]).unwrap();
        let s_g = build_gradient_softening_mask(&spec, 96).unwrap();

        for tau in 40..56 {
            assert_eq!(s_g.weight(tau), 1.0);
        }
        // Frozen values of the dyadic ramp at both ends.
        assert_eq!(s_g.weight(39), 65535.0 / 131071.0);
        assert_eq!(s_g.weight(56), 65535.0 / 131071.0);
        assert_eq!(s_g.weight(24), 1.0 / 131071.0);
        assert_eq!(s_g.weight(71), 1.0 / 131071.0);
        assert_eq!(s_g.weight(23), 0.0);
        assert_eq!(s_g.weight(72), 0.0);

        for i in 1..=16u32 {
            assert_eq!(
                s_g.weight(40 - i as usize),
                ramp_weight_by_sums(i, 16),
                "ramp mismatch at distance {i}"
            );
        }
        // Monotone non-increasing away from the region.
        for tau in 24..39 {
            assert!(s_g.weight(tau) <= s_g.weight(tau + 1));
        }
    }

    #[test]
    fn gradient_mask_overlapping_ramps_take_max() {
        let spec =
            EditSpec::new(vec![FrameSpan::new(2, 4), FrameSpan::new(9, 11)]).unwrap();
        let s_g = build_gradient_softening_mask(&spec, 16).unwrap();
        // Frame 5 is 2 away from the first region and 4 from the second.
        assert_eq!(s_g.weight(5), ramp_weight_by_sums(2, 16));
        // Frame 6 is 3 away from both.
        assert_eq!(s_g.weight(6), ramp_weight_by_sums(3, 16));
    }

    #[test]
    fn gradient_mask_zero_ramp_is_binary() {
        let spec = EditSpec::with_ramps(vec![FrameSpan::new(2, 4)], 0, 0).unwrap();
        let s_g = build_gradient_softening_mask(&spec, 6).unwrap();
        let m = build_binary_mask(&spec, 6).unwrap();
        assert_eq!(s_g.weights(), m.weights());
    }

    #[test]
    fn concat_mask_linear_ramp() {
        let s_c = build_concat_softening_mask(&[36], 96, 9).unwrap();
        // Both frames adjacent to the boundary sit at distance 1.
        assert_eq!(s_c.weight(35), 0.9);
        assert_eq!(s_c.weight(36), 0.9);
        assert_eq!(s_c.weight(27), 0.1);
        assert_eq!(s_c.weight(44), 0.1);
        assert_eq!(s_c.weight(26), 0.0);
        assert_eq!(s_c.weight(45), 0.0);
        for j in 1..=9usize {
            assert_eq!(s_c.weight(36 - j), (10 - j) as f64 / 10.0);
            assert_relative_eq!(s_c.weight(36 - j), 0.1 * (10 - j) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn concat_mask_multiple_junctures_take_nearest() {
        let s_c = build_concat_softening_mask(&[4, 8], 12, 9).unwrap();
        // Frame 5: distance 2 from the juncture at 4, distance 3 from 8.
        assert_eq!(s_c.weight(5), 0.8);
        // Boundary-of-grid junctures are allowed as indices.
        let edge = build_concat_softening_mask(&[0], 4, 9).unwrap();
        assert_eq!(edge.weight(0), 0.9);
        assert!(build_concat_softening_mask(&[5], 4, 9).is_err());
    }

    #[test]
    fn convolution_moves_impulse() {
        let mut values = vec![0.0; 40];
        values[10] = 1.0;
        let g = MelGrid::new(40, 1, values).unwrap();

        let up = convolve_pitch_kernel(&g, &PitchKernel::up()).unwrap();
        assert_eq!(up.get(10, 0), 0.6);
        assert_eq!(up.get(11, 0), 0.2);
        assert_eq!(up.get(12, 0), 0.2);
        assert_eq!(up.get(9, 0), 0.0);

        let down = convolve_pitch_kernel(&g, &PitchKernel::down()).unwrap();
        assert_eq!(down.get(10, 0), 0.6);
        assert_eq!(down.get(9, 0), 0.2);
        assert_eq!(down.get(8, 0), 0.2);
        assert_eq!(down.get(11, 0), 0.0);

        let id = convolve_pitch_kernel(&g, &PitchKernel::identity()).unwrap();
        assert_eq!(id.max_abs_diff(&g).unwrap(), 0.0);
    }

    #[test]
    fn convolution_replicates_edges() {
        // Impulse on the top bin; the down kernel's out-of-range taps read
        // the replicated edge, so mass at the edge is amplified.
        let mut values = vec![0.0; 8];
        values[7] = 1.0;
        let g = MelGrid::new(8, 1, values).unwrap();
        let out = convolve_pitch_kernel(&g, &PitchKernel::down()).unwrap();
        assert_relative_eq!(out.get(7, 0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(out.get(6, 0), 0.4, epsilon = 1e-15);
        assert_relative_eq!(out.get(5, 0), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn convolution_preserves_interior_column_sums() {
        let mut rng = crate::diffusion::Rng::new(11);
        for _ in 0..20 {
            let noise = rng.standard_normal(12, 3).unwrap();
            // Zero the two bins nearest each edge so no mass is clipped.
            let values: Vec<f64> = noise
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let f = i % 12;
                    if (2..10).contains(&f) {
                        *v
                    } else {
                        0.0
                    }
                })
                .collect();
            let g = MelGrid::new(12, 3, values).unwrap();
            let out = convolve_pitch_kernel(&g, &PitchKernel::aggressive_up()).unwrap();
            for tau in 0..3 {
                let a: f64 = g.frame(tau).iter().sum();
                let b: f64 = out.frame(tau).iter().sum();
                assert_relative_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn convolution_needs_five_bins() {
        let g = MelGrid::zeros(4, 2).unwrap();
        assert!(convolve_pitch_kernel(&g, &PitchKernel::up()).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(PitchKernel::new([0.2, 0.2, 0.6, 0.0, 0.0]).is_ok());
        assert!(PitchKernel::new([0.5, 0.2, 0.6, 0.0, 0.0]).is_err());
        assert!(PitchKernel::new([-0.1, 0.3, 0.8, 0.0, 0.0]).is_err());
    }

    #[test]
    fn masked_blend_is_exact_at_endpoints() {
        let a = MelGrid::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = MelGrid::constant(2, 3, -1.0).unwrap();

        let zero = FrameMask::new(vec![0.0; 3]).unwrap();
        assert_eq!(apply_masked_blend(&a, &b, &zero).unwrap(), a);

        let one = FrameMask::new(vec![1.0; 3]).unwrap();
        assert_eq!(apply_masked_blend(&a, &b, &one).unwrap(), b);

        let half = FrameMask::new(vec![0.0, 0.5, 1.0]).unwrap();
        let out = apply_masked_blend(&a, &b, &half).unwrap();
        assert_eq!(out.frame(0), a.frame(0));
        assert_relative_eq!(out.get(0, 1), 1.0, epsilon = 1e-15);
        assert_eq!(out.frame(2), b.frame(2));
    }

    #[test]
    fn mask_validation() {
        assert!(FrameMask::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(FrameMask::new(vec![1.1]).is_err());
        assert!(FrameMask::new(vec![-0.1]).is_err());
        assert!(FrameMask::new(vec![f64::NAN]).is_err());
    }
}
