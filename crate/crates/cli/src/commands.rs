//! Subcommand implementations. Each runs its trials serially in seed
//! order and writes artifacts under the configured output directory;
//! given the same effective config every file comes out byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use meledit_core::diffusion::{reverse_integrate, sample_prior, Rng};
use meledit_core::edit::{
    content_replace_edit, mel_shift_ablation, naive_concat, pitch_shift_edit, ContentEditResult,
    PitchEditResult,
};
use meledit_core::grid::{build_binary_mask, build_gradient_softening_mask};
use meledit_core::metrics::{juncture_discontinuity, EditReport};
use meledit_core::oracle::analytic_score;
use meledit_core::PitchKernel;

use crate::config::{Prepared, RunConfig};
use crate::formats::{mask_to_grid, write_grid, write_pgm};
use crate::{CliError, Result};

pub const PITCH_REPORT_HEADER: &str =
    "seed,region_start,region_end,kernel,centroid_delta,leakage,nll_editts,nll_melshift,juncture_disc";
pub const CONTENT_REPORT_HEADER: &str =
    "seed,src_gap_start,src_gap_end,trg_chunk_start,trg_chunk_end,editts_disc,naive_disc";

fn internal(e: meledit_core::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Common artifacts: the fully resolved config and a manifest holding
/// the run identity (command, config hash, seeding) plus per-command
/// placement lines.
fn write_run_records(dir: &Path, cfg: &RunConfig, command: &str, extra: &[String]) -> Result<()> {
    write_text(&dir.join("effective_config.cfg"), &cfg.canonical_text())?;
    let mut m = String::new();
    let _ = writeln!(m, "command = {command}");
    let _ = writeln!(m, "config_sha256 = {}", cfg.config_hash());
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "trials = {}", cfg.trials);
    let _ = writeln!(m, "out = {}", cfg.out);
    for line in extra {
        let _ = writeln!(m, "{line}");
    }
    write_text(&dir.join("run_manifest.txt"), &m)
}

pub struct PitchTrial {
    pub seed: u64,
    pub run: PitchEditResult,
    pub report: EditReport,
}

/// Runs `trials` pitch edits with seeds `base, base+1, ...` against the
/// prepared source prior. Shared by `edit-pitch` and `sweep`.
pub fn run_pitch_trials(
    cfg: &RunConfig,
    prep: &Prepared,
    kernel: &PitchKernel,
) -> Result<Vec<PitchTrial>> {
    prep.spec
        .validate_for(prep.mu_src.n_frames())
        .map_err(|e| CliError::Config(format!("edit regions: {e}")))?;
    let model = prep.model_for(&prep.mu_src)?;
    let provider = analytic_score(&model, &prep.schedule);
    (0..cfg.trials)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let mut rng = Rng::new(seed);
            let run = pitch_shift_edit(
                &prep.schedule,
                &provider,
                &prep.mu_src,
                &prep.spec,
                kernel,
                &mut rng,
            )
            .map_err(internal)?;
            let report =
                EditReport::from_pitch_run(&run, kernel, &model, &prep.schedule).map_err(internal)?;
            Ok(PitchTrial { seed, run, report })
        })
        .collect()
}

fn pitch_report_csv(trials: &[PitchTrial], kernel_label: &str) -> String {
    let mut csv = String::from(PITCH_REPORT_HEADER);
    csv.push('\n');
    for t in trials {
        for (r, span) in t.run.spec.regions().iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                t.seed,
                span.start,
                span.end,
                kernel_label,
                t.report.region_deltas[r],
                t.report.leakage,
                t.report.nll_edit,
                t.report.nll_melshift,
                t.report.juncture_disc
            );
        }
    }
    csv
}

/// Plain generation: sample the prior latent, integrate the reverse flow,
/// dump prior and output as grids plus a viewable PGM.
pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let prep = cfg.prepare()?;
    let dir = out_dir(cfg)?;
    let model = prep.model_for(&prep.mu_src)?;
    let provider = analytic_score(&model, &prep.schedule);

    let mut rng = Rng::new(cfg.seed);
    let x1 = sample_prior(&prep.mu_src, &mut rng).map_err(internal)?;
    let x0 = reverse_integrate(&prep.schedule, &prep.mu_src, &x1, &provider).map_err(internal)?;

    write_grid(&dir.join("prior.grid"), &prep.mu_src)?;
    write_grid(&dir.join("synth.grid"), &x0)?;
    write_pgm(&dir.join("synth.pgm"), &x0)?;
    write_run_records(&dir, cfg, "synth", &[])
}

/// Pitch edits over seeded trials, with the mel-shift ablation as the
/// comparison arm, reported in `pitch_report.csv`.
pub fn cmd_edit_pitch(cfg: &RunConfig) -> Result<()> {
    let prep = cfg.prepare()?;
    let dir = out_dir(cfg)?;
    let trials = run_pitch_trials(cfg, &prep, &prep.kernel)?;

    let n_frames = prep.mu_src.n_frames();
    let binary = build_binary_mask(&prep.spec, n_frames).map_err(internal)?;
    let s_g = build_gradient_softening_mask(&prep.spec, n_frames).map_err(internal)?;
    write_grid(&dir.join("prior.grid"), &prep.mu_src)?;
    write_grid(&dir.join("prior_edit.grid"), &trials[0].run.mu_edit)?;
    write_grid(&dir.join("mask_binary.grid"), &mask_to_grid(&binary))?;
    write_grid(&dir.join("mask_gradient.grid"), &mask_to_grid(&s_g))?;

    for (i, t) in trials.iter().enumerate() {
        write_grid(&dir.join(format!("trial{i:03}_plain.grid")), &t.run.x_plain)?;
        write_grid(&dir.join(format!("trial{i:03}_edit.grid")), &t.run.x_edit)?;
        let melshift =
            mel_shift_ablation(&t.run.x_plain, &prep.spec, &prep.kernel).map_err(internal)?;
        write_grid(&dir.join(format!("trial{i:03}_melshift.grid")), &melshift)?;
    }
    write_pgm(&dir.join("trial000_plain.pgm"), &trials[0].run.x_plain)?;
    write_pgm(&dir.join("trial000_edit.pgm"), &trials[0].run.x_edit)?;

    write_text(
        &dir.join("pitch_report.csv"),
        &pitch_report_csv(&trials, cfg.kernel.label()),
    )?;

    let mut extra = vec![format!("kernel = {}", cfg.kernel.label())];
    for span in prep.spec.regions() {
        extra.push(format!("region = {} {}", span.start, span.end));
    }
    write_run_records(&dir, cfg, "edit-pitch", &extra)
}

pub struct ContentTrial {
    pub seed: u64,
    pub run: ContentEditResult,
    pub naive: meledit_core::MelGrid,
    pub edit_disc: f64,
    pub naive_disc: f64,
}

/// One content trial: the steered replacement on stream 0 and a hard
/// splice of two independent plain syntheses on stream 1 of the same seed.
pub fn run_content_trial(prep: &Prepared, seed: u64) -> Result<ContentTrial> {
    prep.src_gap
        .validate_within(prep.mu_src.n_frames())
        .map_err(|e| CliError::Config(format!("src_gap: {e}")))?;
    prep.trg_chunk
        .validate_within(prep.mu_trg.n_frames())
        .map_err(|e| CliError::Config(format!("trg_chunk: {e}")))?;
    let model = prep.model_for(&prep.mu_src)?;
    let provider = analytic_score(&model, &prep.schedule);

    let mut rng = Rng::new(seed);
    let run = content_replace_edit(
        &prep.schedule,
        &provider,
        &prep.mu_src,
        prep.src_gap,
        &prep.mu_trg,
        prep.trg_chunk,
        &prep.content_params,
        &mut rng,
    )
    .map_err(internal)?;

    let mut rng = Rng::with_stream(seed, 1);
    let src1 = sample_prior(&prep.mu_src, &mut rng).map_err(internal)?;
    let x_src =
        reverse_integrate(&prep.schedule, &prep.mu_src, &src1, &provider).map_err(internal)?;
    let trg1 = sample_prior(&prep.mu_trg, &mut rng).map_err(internal)?;
    let x_trg =
        reverse_integrate(&prep.schedule, &prep.mu_trg, &trg1, &provider).map_err(internal)?;
    let (naive, naive_junctures) =
        naive_concat(&x_src, prep.src_gap, &x_trg, prep.trg_chunk).map_err(internal)?;

    let edit_disc =
        juncture_discontinuity(&run.x_edit, &run.placement.junctures).map_err(internal)?;
    let naive_disc = juncture_discontinuity(&naive, &naive_junctures).map_err(internal)?;
    Ok(ContentTrial {
        seed,
        run,
        naive,
        edit_disc,
        naive_disc,
    })
}

/// Content replacement over seeded trials against the hard-splice
/// baseline, reported in `content_report.csv`.
pub fn cmd_edit_content(cfg: &RunConfig) -> Result<()> {
    let prep = cfg.prepare()?;
    let dir = out_dir(cfg)?;

    let mut csv = String::from(CONTENT_REPORT_HEADER);
    csv.push('\n');
    let mut first: Option<ContentTrial> = None;
    for i in 0..cfg.trials {
        let seed = cfg.seed.wrapping_add(i as u64);
        let t = run_content_trial(&prep, seed)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            t.seed,
            prep.src_gap.start,
            prep.src_gap.end,
            prep.trg_chunk.start,
            prep.trg_chunk.end,
            t.edit_disc,
            t.naive_disc
        );
        write_grid(&dir.join(format!("trial{i:03}_edit.grid")), &t.run.x_edit)?;
        write_grid(&dir.join(format!("trial{i:03}_target.grid")), &t.run.x_trg)?;
        write_grid(&dir.join(format!("trial{i:03}_naive.grid")), &t.naive)?;
        if first.is_none() {
            first = Some(t);
        }
    }
    let first = first.expect("trials >= 1 enforced by prepare");

    write_grid(&dir.join("prior.grid"), &prep.mu_src)?;
    write_grid(&dir.join("prior_target.grid"), &prep.mu_trg)?;
    write_grid(&dir.join("prior_edit.grid"), &first.run.mu_edit)?;
    write_pgm(&dir.join("trial000_edit.pgm"), &first.run.x_edit)?;
    write_pgm(&dir.join("trial000_naive.pgm"), &first.naive)?;
    write_pgm(&dir.join("trial000_target.pgm"), &first.run.x_trg)?;
    write_text(&dir.join("content_report.csv"), &csv)?;

    let p = &first.run.placement;
    let junctures: Vec<String> = p.junctures.iter().map(|j| j.to_string()).collect();
    let extra = vec![
        format!("src_gap = {} {}", p.src_gap.start, p.src_gap.end),
        format!("trg_chunk = {} {}", p.trg_chunk.start, p.trg_chunk.end),
        format!("dst = {} {}", p.dst.start, p.dst.end),
        format!("junctures = {}", junctures.join(" ")),
        format!("n_out = {}", p.n_out),
    ];
    write_run_records(&dir, cfg, "edit-content", &extra)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs the pitch-edit trial block once per sweep kernel, writing one
/// full report per kernel plus a cross-kernel summary.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let prep = cfg.prepare()?;
    let dir = out_dir(cfg)?;
    if cfg.sweep_kernels.is_empty() {
        return Err(CliError::Config("sweep kernel list is empty".into()));
    }

    let mut summary = String::from(
        "kernel,trials,median_centroid_delta,positive,negative,max_leakage,nll_wins\n",
    );
    for name in &cfg.sweep_kernels {
        let kernel = name.kernel();
        let trials = run_pitch_trials(cfg, &prep, &kernel)?;
        write_text(
            &dir.join(format!("pitch_report_{}.csv", name.as_str())),
            &pitch_report_csv(&trials, name.as_str()),
        )?;

        let mut deltas: Vec<f64> = trials.iter().map(|t| t.report.mean_delta()).collect();
        let positive = deltas.iter().filter(|&&d| d > 0.0).count();
        let negative = deltas.iter().filter(|&&d| d < 0.0).count();
        let max_leakage = trials
            .iter()
            .map(|t| t.report.leakage)
            .fold(0.0_f64, f64::max);
        let nll_wins = trials
            .iter()
            .filter(|t| t.report.nll_edit <= t.report.nll_melshift)
            .count();
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            name.as_str(),
            trials.len(),
            median(&mut deltas),
            positive,
            negative,
            max_leakage,
            nll_wins
        );
    }
    write_text(&dir.join("sweep_summary.csv"), &summary)?;

    let extra: Vec<String> = cfg
        .sweep_kernels
        .iter()
        .map(|k| format!("kernel = {}", k.as_str()))
        .collect();
    write_run_records(&dir, cfg, "sweep", &extra)
}
