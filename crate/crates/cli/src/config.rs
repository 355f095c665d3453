//! Run configuration: a line-oriented `key = value` format with bracket
//! section headers, parsed strictly over built-in defaults.
//!
//! `#` starts a comment anywhere. Unknown sections or keys are errors.
//! List-valued keys (`phoneme`, `component`, `region`, `kernel` under
//! `[sweep]`) replace the default list on first occurrence and append
//! afterwards, so a config that names one phoneme gets exactly one.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use meledit_core::diffusion::NoiseSchedule;
use meledit_core::edit::{ContentEditParams, NoisePairing, ReplaceGradientSource};
use meledit_core::oracle::{
    make_toy_prior, stripe_profile, Component, GaussianMixtureDataModel, Offset, Phoneme,
    ToyPriorSpec,
};
use meledit_core::{EditSpec, FrameSpan, MelGrid, PitchKernel};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub beta0: f64,
    pub beta1: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhonemeConfig {
    pub duration: usize,
    pub center_bin: usize,
    pub bandwidth: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    pub n_freq: usize,
    pub baseline: f64,
    pub phonemes: Vec<PhonemeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetConfig {
    /// Component sits on the prior itself.
    Flat,
    /// Cosine ridge pattern along the frequency axis.
    Stripe { amp: f64, period: f64, phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentConfig {
    pub weight: f64,
    pub sigma: f64,
    pub offset: OffsetConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelName {
    Up,
    Down,
    AggressiveUp,
    AggressiveDown,
    Identity,
}

impl KernelName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "up" => Some(Self::Up),
            "down" => Some(Self::Down),
            "aggressive-up" => Some(Self::AggressiveUp),
            "aggressive-down" => Some(Self::AggressiveDown),
            "identity" => Some(Self::Identity),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Up => "up",
            Self::Down => "down",
            Self::AggressiveUp => "aggressive-up",
            Self::AggressiveDown => "aggressive-down",
            Self::Identity => "identity",
        }
    }

    pub fn kernel(&self) -> PitchKernel {
        match self {
            Self::Up => PitchKernel::up(),
            Self::Down => PitchKernel::down(),
            Self::AggressiveUp => PitchKernel::aggressive_up(),
            Self::AggressiveDown => PitchKernel::aggressive_down(),
            Self::Identity => PitchKernel::identity(),
        }
    }
}

/// Kernel selection: a named preset or five explicit weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Named(KernelName),
    Custom([f64; 5]),
}

impl KernelChoice {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Named(n) => n.as_str(),
            Self::Custom(_) => "custom",
        }
    }

    /// Weight validation happens here, not at parse time, so the error
    /// carries the usual config-context prefix from `prepare`.
    pub fn kernel(&self) -> meledit_core::Result<PitchKernel> {
        match self {
            Self::Named(n) => Ok(n.kernel()),
            Self::Custom(w) => PitchKernel::new(*w),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schedule: ScheduleConfig,
    pub prior: PriorConfig,
    pub target_prior: PriorConfig,
    pub components: Vec<ComponentConfig>,
    pub regions: Vec<(usize, usize)>,
    pub ramp_g: usize,
    pub ramp_c: usize,
    pub kernel: KernelChoice,
    pub src_gap: (usize, usize),
    pub trg_chunk: (usize, usize),
    pub gradient_source: ReplaceGradientSource,
    pub noise_pairing: NoisePairing,
    pub seed: u64,
    pub trials: usize,
    pub out: String,
    pub sweep_kernels: Vec<KernelName>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ph = |duration, center_bin, bandwidth, amplitude| PhonemeConfig {
            duration,
            center_bin,
            bandwidth,
            amplitude,
        };
        Self {
            schedule: ScheduleConfig {
                beta0: 0.05,
                beta1: 20.0,
                steps: 1000,
            },
            prior: PriorConfig {
                n_freq: 40,
                baseline: -1.0,
                phonemes: vec![
                    ph(16, 8, 2.5, 2.2),
                    ph(20, 20, 3.0, 2.5),
                    ph(20, 14, 2.5, 2.3),
                    ph(20, 26, 3.0, 2.4),
                    ph(20, 11, 2.5, 2.2),
                ],
            },
            target_prior: PriorConfig {
                n_freq: 40,
                baseline: -1.0,
                phonemes: vec![
                    ph(20, 30, 2.5, 2.4),
                    ph(24, 16, 3.0, 2.6),
                    ph(20, 24, 2.5, 2.3),
                    ph(16, 33, 2.0, 2.2),
                ],
            },
            components: vec![
                ComponentConfig {
                    weight: 0.5,
                    sigma: 0.05,
                    offset: OffsetConfig::Stripe {
                        amp: 0.2,
                        period: 6.0,
                        phase: 0.0,
                    },
                },
                ComponentConfig {
                    weight: 0.25,
                    sigma: 0.05,
                    offset: OffsetConfig::Stripe {
                        amp: -0.2,
                        period: 6.0,
                        phase: 0.0,
                    },
                },
                ComponentConfig {
                    weight: 0.25,
                    sigma: 0.05,
                    offset: OffsetConfig::Stripe {
                        amp: 0.15,
                        period: 4.0,
                        phase: 1.0,
                    },
                },
            ],
            regions: vec![(40, 56)],
            ramp_g: 16,
            ramp_c: 9,
            kernel: KernelChoice::Named(KernelName::Up),
            src_gap: (36, 56),
            trg_chunk: (20, 44),
            gradient_source: ReplaceGradientSource::Target,
            noise_pairing: NoisePairing::ChunkShared,
            seed: 42,
            trials: 8,
            out: "out".into(),
            sweep_kernels: vec![
                KernelName::Up,
                KernelName::AggressiveUp,
                KernelName::Down,
                KernelName::AggressiveDown,
            ],
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("line {line}: {}", msg.into()))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| err(line, format!("{key}: cannot parse {v:?}")))
}

fn parse_pair(line: usize, key: &str, v: &str) -> Result<(usize, usize)> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(err(line, format!("{key}: expected two frame indices")));
    }
    Ok((
        parse_num(line, key, toks[0])?,
        parse_num(line, key, toks[1])?,
    ))
}

fn parse_phoneme(line: usize, v: &str) -> Result<PhonemeConfig> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    if toks.len() != 4 {
        return Err(err(
            line,
            "phoneme: expected `duration center_bin bandwidth amplitude`",
        ));
    }
    Ok(PhonemeConfig {
        duration: parse_num(line, "phoneme", toks[0])?,
        center_bin: parse_num(line, "phoneme", toks[1])?,
        bandwidth: parse_num(line, "phoneme", toks[2])?,
        amplitude: parse_num(line, "phoneme", toks[3])?,
    })
}

fn parse_kernel_choice(line: usize, v: &str) -> Result<KernelChoice> {
    if let Some(name) = KernelName::parse(v) {
        return Ok(KernelChoice::Named(name));
    }
    let toks: Vec<&str> = v.split_whitespace().collect();
    if toks.first() == Some(&"custom") && toks.len() == 6 {
        let mut w = [0.0; 5];
        for (slot, tok) in w.iter_mut().zip(&toks[1..]) {
            *slot = parse_num(line, "kernel", tok)?;
        }
        return Ok(KernelChoice::Custom(w));
    }
    Err(err(
        line,
        format!("kernel: expected a preset name or `custom w0 w1 w2 w3 w4`, got {v:?}"),
    ))
}

fn parse_component(line: usize, v: &str) -> Result<ComponentConfig> {
    let toks: Vec<&str> = v.split_whitespace().collect();
    let usage = "component: expected `weight sigma flat` or `weight sigma stripe amp period phase`";
    if toks.len() < 3 {
        return Err(err(line, usage));
    }
    let weight = parse_num(line, "component", toks[0])?;
    let sigma = parse_num(line, "component", toks[1])?;
    let offset = match (toks[2], toks.len()) {
        ("flat", 3) => OffsetConfig::Flat,
        ("stripe", 6) => OffsetConfig::Stripe {
            amp: parse_num(line, "component", toks[3])?,
            period: parse_num(line, "component", toks[4])?,
            phase: parse_num(line, "component", toks[5])?,
        },
        _ => return Err(err(line, usage)),
    };
    Ok(ComponentConfig {
        weight,
        sigma,
        offset,
    })
}

impl RunConfig {
    /// Parses `text` over the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        // List keys reset their default on first sight, namespaced per
        // section so `[prior]` and `[target_prior]` reset independently.
        let mut reset: HashSet<String> = HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, "unterminated section header"))?
                    .trim();
                match name {
                    "schedule" | "prior" | "target_prior" | "model" | "edit" | "content"
                    | "run" | "sweep" => section = name.to_string(),
                    _ => return Err(err(line_no, format!("unknown section [{name}]"))),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(err(line_no, format!("{key}: empty value")));
            }

            let mut fresh = |tag: &str| reset.insert(tag.to_string());
            match (section.as_str(), key) {
                ("schedule", "beta0") => cfg.schedule.beta0 = parse_num(line_no, key, value)?,
                ("schedule", "beta1") => cfg.schedule.beta1 = parse_num(line_no, key, value)?,
                ("schedule", "steps") => cfg.schedule.steps = parse_num(line_no, key, value)?,
                ("prior", "n_freq") => cfg.prior.n_freq = parse_num(line_no, key, value)?,
                ("prior", "baseline") => cfg.prior.baseline = parse_num(line_no, key, value)?,
                ("prior", "phoneme") => {
                    if fresh("prior.phoneme") {
                        cfg.prior.phonemes.clear();
                    }
                    cfg.prior.phonemes.push(parse_phoneme(line_no, value)?);
                }
                ("target_prior", "n_freq") => {
                    cfg.target_prior.n_freq = parse_num(line_no, key, value)?
                }
                ("target_prior", "baseline") => {
                    cfg.target_prior.baseline = parse_num(line_no, key, value)?
                }
                ("target_prior", "phoneme") => {
                    if fresh("target_prior.phoneme") {
                        cfg.target_prior.phonemes.clear();
                    }
                    cfg.target_prior.phonemes.push(parse_phoneme(line_no, value)?);
                }
                ("model", "component") => {
                    if fresh("model.component") {
                        cfg.components.clear();
                    }
                    cfg.components.push(parse_component(line_no, value)?);
                }
                ("edit", "region") => {
                    if fresh("edit.region") {
                        cfg.regions.clear();
                    }
                    cfg.regions.push(parse_pair(line_no, key, value)?);
                }
                ("edit", "ramp_g") => cfg.ramp_g = parse_num(line_no, key, value)?,
                ("edit", "ramp_c") => cfg.ramp_c = parse_num(line_no, key, value)?,
                ("edit", "kernel") => cfg.kernel = parse_kernel_choice(line_no, value)?,
                ("content", "src_gap") => cfg.src_gap = parse_pair(line_no, key, value)?,
                ("content", "trg_chunk") => cfg.trg_chunk = parse_pair(line_no, key, value)?,
                ("content", "gradient_source") => {
                    cfg.gradient_source = match value {
                        "target" => ReplaceGradientSource::Target,
                        "edited" => ReplaceGradientSource::Edited,
                        _ => {
                            return Err(err(
                                line_no,
                                format!("gradient_source must be target or edited, got {value:?}"),
                            ))
                        }
                    }
                }
                ("content", "noise_pairing") => {
                    cfg.noise_pairing = match value {
                        "chunk" => NoisePairing::ChunkShared,
                        "full" => NoisePairing::FullShared,
                        _ => {
                            return Err(err(
                                line_no,
                                format!("noise_pairing must be chunk or full, got {value:?}"),
                            ))
                        }
                    }
                }
                ("run", "seed") => cfg.seed = parse_num(line_no, key, value)?,
                ("run", "trials") => cfg.trials = parse_num(line_no, key, value)?,
                ("run", "out") => cfg.out = value.to_string(),
                ("sweep", "kernel") => {
                    if fresh("sweep.kernel") {
                        cfg.sweep_kernels.clear();
                    }
                    cfg.sweep_kernels.push(
                        KernelName::parse(value)
                            .ok_or_else(|| err(line_no, format!("unknown kernel {value:?}")))?,
                    );
                }
                ("", _) => return Err(err(line_no, "key outside any [section]")),
                (s, k) => return Err(err(line_no, format!("unknown key {k:?} in [{s}]"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Deterministic full rendering; parsing it back reproduces `self`.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[schedule]");
        let _ = writeln!(s, "beta0 = {}", self.schedule.beta0);
        let _ = writeln!(s, "beta1 = {}", self.schedule.beta1);
        let _ = writeln!(s, "steps = {}", self.schedule.steps);
        for (header, prior) in [("prior", &self.prior), ("target_prior", &self.target_prior)] {
            let _ = writeln!(s, "\n[{header}]");
            let _ = writeln!(s, "n_freq = {}", prior.n_freq);
            let _ = writeln!(s, "baseline = {}", prior.baseline);
            for p in &prior.phonemes {
                let _ = writeln!(
                    s,
                    "phoneme = {} {} {} {}",
                    p.duration, p.center_bin, p.bandwidth, p.amplitude
                );
            }
        }
        let _ = writeln!(s, "\n[model]");
        for c in &self.components {
            match c.offset {
                OffsetConfig::Flat => {
                    let _ = writeln!(s, "component = {} {} flat", c.weight, c.sigma);
                }
                OffsetConfig::Stripe { amp, period, phase } => {
                    let _ = writeln!(
                        s,
                        "component = {} {} stripe {} {} {}",
                        c.weight, c.sigma, amp, period, phase
                    );
                }
            }
        }
        let _ = writeln!(s, "\n[edit]");
        for (a, b) in &self.regions {
            let _ = writeln!(s, "region = {a} {b}");
        }
        let _ = writeln!(s, "ramp_g = {}", self.ramp_g);
        let _ = writeln!(s, "ramp_c = {}", self.ramp_c);
        match self.kernel {
            KernelChoice::Named(n) => {
                let _ = writeln!(s, "kernel = {}", n.as_str());
            }
            KernelChoice::Custom(w) => {
                let _ = writeln!(
                    s,
                    "kernel = custom {} {} {} {} {}",
                    w[0], w[1], w[2], w[3], w[4]
                );
            }
        }
        let _ = writeln!(s, "\n[content]");
        let _ = writeln!(s, "src_gap = {} {}", self.src_gap.0, self.src_gap.1);
        let _ = writeln!(s, "trg_chunk = {} {}", self.trg_chunk.0, self.trg_chunk.1);
        let _ = writeln!(
            s,
            "gradient_source = {}",
            match self.gradient_source {
                ReplaceGradientSource::Target => "target",
                ReplaceGradientSource::Edited => "edited",
            }
        );
        let _ = writeln!(
            s,
            "noise_pairing = {}",
            match self.noise_pairing {
                NoisePairing::ChunkShared => "chunk",
                NoisePairing::FullShared => "full",
            }
        );
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "out = {}", self.out);
        let _ = writeln!(s, "\n[sweep]");
        for k in &self.sweep_kernels {
            let _ = writeln!(s, "kernel = {}", k.as_str());
        }
        s
    }

    /// Hex SHA-256 of the canonical rendering; the run fingerprint.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    pub fn apply_overrides(&mut self, ov: &Overrides) {
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        if let Some(trials) = ov.trials {
            self.trials = trials;
        }
        if let Some(out) = &ov.out {
            self.out = out.clone();
        }
        if let Some(beta0) = ov.beta0 {
            self.schedule.beta0 = beta0;
        }
        if let Some(beta1) = ov.beta1 {
            self.schedule.beta1 = beta1;
        }
        if let Some(steps) = ov.steps {
            self.schedule.steps = steps;
        }
    }

    /// Builds every core object the commands need, mapping validation
    /// failures to config errors.
    pub fn prepare(&self) -> Result<Prepared> {
        let cfg_err = |what: &'static str| {
            move |e: meledit_core::Error| CliError::Config(format!("{what}: {e}"))
        };
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        let schedule =
            NoiseSchedule::new(self.schedule.beta0, self.schedule.beta1, self.schedule.steps)
                .map_err(cfg_err("schedule"))?;
        let mu_src = build_prior(&self.prior).map_err(cfg_err("prior"))?;
        let mu_trg = build_prior(&self.target_prior).map_err(cfg_err("target_prior"))?;
        if mu_src.n_freq() != mu_trg.n_freq() {
            return Err(CliError::Config(
                "prior and target_prior must agree on n_freq".into(),
            ));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let offset = match c.offset {
                    OffsetConfig::Flat => Offset::Zero,
                    OffsetConfig::Stripe { amp, period, phase } => Offset::FreqProfile(
                        stripe_profile(self.prior.n_freq, amp, period, phase)
                            .map_err(cfg_err("component stripe"))?,
                    ),
                };
                Ok(Component::new(c.weight, c.sigma, offset))
            })
            .collect::<Result<Vec<_>>>()?;
        // Fail on bad weights or sigmas now, not at first use.
        GaussianMixtureDataModel::new(components.clone(), mu_src.clone())
            .map_err(cfg_err("model"))?;

        // Structural checks only here; whether regions and chunk spans fit
        // the priors is checked by the command that actually uses them, so
        // a pitch run is not blocked by content settings it ignores.
        let regions = self
            .regions
            .iter()
            .map(|&(a, b)| FrameSpan::new(a, b))
            .collect();
        let spec = EditSpec::with_ramps(regions, self.ramp_g, self.ramp_c)
            .map_err(cfg_err("edit regions"))?;
        let src_gap = FrameSpan::new(self.src_gap.0, self.src_gap.1);
        let trg_chunk = FrameSpan::new(self.trg_chunk.0, self.trg_chunk.1);

        Ok(Prepared {
            schedule,
            mu_src,
            mu_trg,
            components,
            spec,
            kernel: self.kernel.kernel().map_err(cfg_err("kernel"))?,
            src_gap,
            trg_chunk,
            content_params: ContentEditParams {
                ramp_g: self.ramp_g,
                ramp_c: self.ramp_c,
                gradient_source: self.gradient_source,
                noise_pairing: self.noise_pairing,
            },
        })
    }
}

fn build_prior(p: &PriorConfig) -> meledit_core::Result<MelGrid> {
    make_toy_prior(&ToyPriorSpec {
        n_freq: p.n_freq,
        baseline: p.baseline,
        phonemes: p
            .phonemes
            .iter()
            .map(|ph| Phoneme {
                duration: ph.duration,
                center_bin: ph.center_bin,
                bandwidth: ph.bandwidth,
                amplitude: ph.amplitude,
            })
            .collect(),
    })
}

/// Flag-level overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<String>,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub steps: Option<usize>,
}

/// Core objects ready to run, built once per command.
pub struct Prepared {
    pub schedule: NoiseSchedule,
    pub mu_src: MelGrid,
    pub mu_trg: MelGrid,
    pub components: Vec<Component>,
    pub spec: EditSpec,
    pub kernel: PitchKernel,
    pub src_gap: FrameSpan,
    pub trg_chunk: FrameSpan,
    pub content_params: ContentEditParams,
}

impl Prepared {
    /// The mixture recentered on an arbitrary prior grid.
    pub fn model_for(&self, mu: &MelGrid) -> Result<GaussianMixtureDataModel> {
        GaussianMixtureDataModel::new(self.components.clone(), mu.clone())
            .map_err(|e| CliError::Internal(format!("model: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_prepare_cleanly() {
        let cfg = RunConfig::default();
        let p = cfg.prepare().unwrap();
        assert_eq!(p.mu_src.shape(), (40, 96));
        assert_eq!(p.mu_trg.shape(), (40, 80));
        assert_eq!(p.spec.regions().len(), 1);
        assert_eq!(p.components.len(), 3);
        p.model_for(&p.mu_src).unwrap();
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = RunConfig::default();
        let parsed = RunConfig::parse(&cfg.canonical_text()).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.config_hash(), cfg.config_hash());

        let mut other = cfg.clone();
        other.seed = 43;
        assert_ne!(other.config_hash(), cfg.config_hash());
    }

    #[test]
    fn list_keys_reset_then_append() {
        let text = "[edit]\nregion = 10 20\nregion = 30 40\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.regions, vec![(10, 20), (30, 40)]);

        let text = "[prior]\nphoneme = 4 3 1.0 2.0\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.prior.phonemes.len(), 1);
        // Untouched sections keep their defaults.
        assert_eq!(cfg.target_prior.phonemes.len(), 4);
        assert_eq!(cfg.components.len(), 3);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# leading\n[run]\nseed = 7 # trailing\n\ntrials = 2\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trials, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("[run]\nseed = x\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert_eq!(e.exit_code(), 2);

        let e = RunConfig::parse("[nope]\n").unwrap_err();
        assert!(e.to_string().contains("unknown section"), "{e}");

        let e = RunConfig::parse("[run]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("unknown key"), "{e}");

        let e = RunConfig::parse("seed = 1\n").unwrap_err();
        assert!(e.to_string().contains("outside any"), "{e}");

        let e = RunConfig::parse("[model]\ncomponent = 1.0 0.1 wavy\n").unwrap_err();
        assert!(e.to_string().contains("component"), "{e}");

        let e = RunConfig::parse("[edit]\nkernel = sideways\n").unwrap_err();
        assert!(e.to_string().contains("preset name"), "{e}");
    }

    #[test]
    fn custom_kernel_weights_are_parsed_and_validated() {
        let cfg = RunConfig::parse("[edit]\nkernel = custom 0.1 0.2 0.4 0.2 0.1\n").unwrap();
        assert_eq!(cfg.kernel, KernelChoice::Custom([0.1, 0.2, 0.4, 0.2, 0.1]));
        let p = cfg.prepare().unwrap();
        assert_eq!(p.kernel.weights()[2], 0.4);
        let parsed = RunConfig::parse(&cfg.canonical_text()).unwrap();
        assert_eq!(parsed.kernel, cfg.kernel);

        let bad = RunConfig::parse("[edit]\nkernel = custom 0.5 0 0 0 0.4\n").unwrap();
        assert!(matches!(bad.prepare(), Err(CliError::Config(_))));

        let e = RunConfig::parse("[edit]\nkernel = custom 1 2\n").unwrap_err();
        assert!(e.to_string().contains("kernel"), "{e}");
    }

    #[test]
    fn prepare_rejects_inconsistent_configs() {
        let cfg = RunConfig {
            regions: vec![(30, 20)],
            ..RunConfig::default()
        };
        assert!(matches!(cfg.prepare(), Err(CliError::Config(_))));

        let mut cfg = RunConfig::default();
        cfg.components[0].weight = 0.9;
        assert!(matches!(cfg.prepare(), Err(CliError::Config(_))));

        let mut cfg = RunConfig::default();
        cfg.target_prior.n_freq = 32;
        assert!(matches!(cfg.prepare(), Err(CliError::Config(_))));

        let mut cfg = RunConfig::default();
        cfg.schedule.beta0 = 0.0;
        assert!(matches!(cfg.prepare(), Err(CliError::Config(_))));

        let cfg = RunConfig {
            trials: 0,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.prepare(), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides(&Overrides {
            seed: Some(9),
            trials: Some(3),
            out: Some("elsewhere".into()),
            beta0: None,
            beta1: None,
            steps: Some(64),
        });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.out, "elsewhere");
        assert_eq!(cfg.schedule.steps, 64);
        assert_eq!(cfg.schedule.beta0, 0.05);
    }
}
