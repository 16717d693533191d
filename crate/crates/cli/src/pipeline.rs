//! Command implementations. Every command is a deterministic function of its
//! configuration, seed and input files; reruns produce byte-identical
//! artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use rispec_core::dataset::features::{
    extract_utterance, load_features, save_features, UtteranceFeatures,
};
use rispec_core::dataset::manifest::{load_manifest, ManifestEntry, Split};
use rispec_core::dataset::mix::mix_at_snr;
use rispec_core::dataset::noise::{generate_noise, NoiseKind};
use rispec_core::dataset::norm::{compute_norm_stats, NormStats};
use rispec_core::dataset::pairs::input_features;
use rispec_core::dataset::speech::synth_vowel;
use rispec_core::dataset::TargetKind;
use rispec_core::io::fmt_sig9;
use rispec_core::metrics::{lsd, ssnr, SsnrOptions};
use rispec_core::model::checkpoint::Checkpoint;
use rispec_core::model::train::{fit, infer_frames, TrainData};
use rispec_core::model::{MmlConfig, Network};
use rispec_core::num::scalar;
use rispec_core::phase::{noisy_phase_study, write_mask_pgm};
use rispec_core::rng::Rng;
use rispec_core::spectrum::{combine_magnitude_phase, Grid, RiSpectrogram};
use rispec_core::stft::{dump_spectrogram_csv, istft, stft, StftConfig};
use rispec_core::wave::{read_wav, write_wav, Waveform};

use crate::config::ExperimentConfig;

/// Floor inside the log when extracting log-power features; fixed so that
/// checkpointed models and fresh extractions always agree.
pub const FEATURE_LPS_EPS: f64 = 1e-8;

/// Power floor for the LSD metric.
pub const METRIC_LSD_EPS: f64 = 1e-10;

pub fn features_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("features")
}

pub fn feature_index_path(out_dir: &Path) -> PathBuf {
    out_dir.join("feature_index.csv")
}

pub fn norm_input_path(out_dir: &Path) -> PathBuf {
    out_dir.join("norm_input.nrm")
}

pub fn norm_target_path(out_dir: &Path) -> PathBuf {
    out_dir.join("norm_target.nrm")
}

pub fn checkpoint_path(out_dir: &Path) -> PathBuf {
    out_dir.join("checkpoint.riml")
}

pub fn loss_log_path(out_dir: &Path) -> PathBuf {
    out_dir.join("loss_log.csv")
}

pub fn metrics_path(out_dir: &Path) -> PathBuf {
    out_dir.join("metrics.csv")
}

/// One feature-index row (mirrors the on-disk CSV).
#[derive(Debug, Clone)]
pub struct IndexRow {
    pub utterance_id: String,
    pub path: String,
    pub split: Split,
    pub frames: usize,
    pub snr_db: f64,
    pub noise_kind: NoiseKind,
}

// ---------------------------------------------------------------------------
// prepare

#[derive(Debug)]
pub struct PrepareSummary {
    pub utterances: usize,
    pub train_frames: usize,
    pub input_dim: usize,
    pub target_dim: usize,
}

pub fn cmd_prepare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PrepareSummary> {
    let entries = load_manifest(&cfg.manifest)
        .map_err(|e| anyhow!("loading manifest {}: {e}", cfg.manifest.display()))?;
    if entries.is_empty() {
        bail!("no utterances in manifest {}", cfg.manifest.display());
    }
    let base_dir = manifest_base(&cfg.manifest);
    let stft_cfg = cfg.stft()?;
    let kind = cfg.model.arch.target_kind();
    std::fs::create_dir_all(features_dir(out_dir))?;

    let mut index = Vec::new();
    let mut train_inputs: Vec<Vec<f32>> = Vec::new();
    let mut train_targets: Vec<Vec<f32>> = Vec::new();
    for entry in &entries {
        let feats: UtteranceFeatures<f32> = extract_utterance(
            entry,
            &base_dir,
            &stft_cfg,
            kind,
            cfg.context,
            FEATURE_LPS_EPS,
        )
        .map_err(|e| anyhow!("extracting features for {}: {e}", entry.utterance_id))?;
        let rel_path = format!("features/{}.fst", entry.utterance_id);
        save_features(&feats, out_dir.join(&rel_path))?;
        if entry.split == Split::Train {
            for t in 0..feats.frames {
                train_inputs.push(feats.input_frame(t).to_vec());
                train_targets.push(feats.target_frame(t).to_vec());
            }
        }
        index.push(IndexRow {
            utterance_id: entry.utterance_id.clone(),
            path: rel_path,
            split: entry.split,
            frames: feats.frames,
            snr_db: entry.snr_db,
            noise_kind: entry.noise_kind.clone(),
        });
    }
    if train_inputs.len() < 2 {
        bail!("need at least 2 training frames to compute statistics");
    }
    let input_stats = compute_norm_stats(&train_inputs)?;
    let target_stats = compute_norm_stats(&train_targets)?;
    input_stats.save(norm_input_path(out_dir))?;
    target_stats.save(norm_target_path(out_dir))?;

    let mut csv = String::from("utterance_id,path,split,frames,snr_db,noise_kind\n");
    for row in &index {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.utterance_id,
            row.path,
            row.split.label(),
            row.frames,
            fmt_sig9(row.snr_db),
            row.noise_kind.label()
        )?;
    }
    std::fs::write(feature_index_path(out_dir), csv)?;

    Ok(PrepareSummary {
        utterances: index.len(),
        train_frames: train_inputs.len(),
        input_dim: input_stats.dim(),
        target_dim: target_stats.dim(),
    })
}

pub fn load_feature_index(out_dir: &Path) -> Result<Vec<IndexRow>> {
    let path = feature_index_path(out_dir);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {} (run `prepare` first)", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "utterance_id,path,split,frames,snr_db,noise_kind" {
        bail!("unexpected feature index header: {header}");
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            bail!("malformed feature index row: {line}");
        }
        rows.push(IndexRow {
            utterance_id: f[0].to_string(),
            path: f[1].to_string(),
            split: Split::parse(f[2]).map_err(|e| anyhow!("{e}"))?,
            frames: f[3].parse()?,
            snr_db: f[4].parse()?,
            noise_kind: NoiseKind::parse(f[5]).map_err(|e| anyhow!("{e}"))?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// train

pub struct TrainSummary {
    pub steps: usize,
    pub first_loss: f64,
    pub final_loss: f64,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrainSummary> {
    let stft_cfg = cfg.stft()?;
    let bins = stft_cfg.bins();
    let index = load_feature_index(out_dir)?;
    let input_stats = NormStats::<f32>::load(norm_input_path(out_dir))
        .map_err(|e| anyhow!("loading input stats (run `prepare` first): {e}"))?;
    let target_stats = NormStats::<f32>::load(norm_target_path(out_dir))
        .map_err(|e| anyhow!("loading target stats: {e}"))?;

    let mut inputs: Vec<Vec<f32>> = Vec::new();
    let mut targets: Vec<Vec<f32>> = Vec::new();
    for row in index.iter().filter(|r| r.split == Split::Train) {
        let feats = load_features(&row.utterance_id, out_dir.join(&row.path))?;
        for t in 0..feats.frames {
            let mut input = feats.input_frame(t).to_vec();
            input_stats.normalize_in_place(&mut input);
            inputs.push(input);
            targets.push(feats.target_frame(t).to_vec());
        }
    }
    if inputs.is_empty() {
        bail!("no training frames in feature store");
    }

    let root = Rng::new(cfg.seed);
    let mut init_rng = root.derive("init");
    let mut net = Network::<f32>::build(&cfg.model, bins, cfg.context, &mut init_rng)?;

    let ckpt_dir = out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    let save_epoch = |epoch: usize, net: &Network<f32>| -> rispec_core::Result<()> {
        let ck = Checkpoint::from_network(
            net,
            &stft_cfg,
            cfg.sample_rate,
            cfg.context,
            &input_stats,
            &target_stats,
        );
        ck.save(ckpt_dir.join(format!("epoch_{epoch:03}.riml")))?;
        Ok(())
    };

    let mut loss_csv = String::from("epoch,step,alpha,beta,ri_term,lps_term,total\n");
    let final_ck_path = checkpoint_path(out_dir);

    if cfg.epochs == 0 {
        // No training: the published checkpoint is the initialization.
        let ck = Checkpoint::from_network(
            &net,
            &stft_cfg,
            cfg.sample_rate,
            cfg.context,
            &input_stats,
            &target_stats,
        );
        ck.save(&final_ck_path)?;
        std::fs::write(loss_log_path(out_dir), loss_csv)?;
        return Ok(TrainSummary {
            steps: 0,
            first_loss: f64::NAN,
            final_loss: f64::NAN,
            checkpoint: final_ck_path,
        });
    }

    let data = TrainData {
        inputs,
        targets,
        target_stats: target_stats.clone(),
    };
    let mut train_rng = root.derive("train");
    let records = fit(
        &mut net,
        &data,
        &cfg.mml,
        bins,
        &cfg.train_options(),
        &mut train_rng,
        |epoch, net| save_epoch(epoch, net),
    )
    .map_err(|e| anyhow!("training failed ({e}); last per-epoch checkpoint retained"))?;

    for r in &records {
        writeln!(
            loss_csv,
            "{},{},{},{},{},{},{}",
            r.epoch,
            r.step,
            fmt_sig9(r.alpha),
            fmt_sig9(r.beta),
            fmt_sig9(r.ri_term),
            fmt_sig9(r.lps_term),
            fmt_sig9(r.total)
        )?;
    }
    std::fs::write(loss_log_path(out_dir), loss_csv)?;

    let ck = Checkpoint::from_network(
        &net,
        &stft_cfg,
        cfg.sample_rate,
        cfg.context,
        &input_stats,
        &target_stats,
    );
    ck.save(&final_ck_path)?;

    Ok(TrainSummary {
        steps: records.len(),
        first_loss: records.first().map(|r| r.total).unwrap_or(f64::NAN),
        final_loss: records.last().map(|r| r.total).unwrap_or(f64::NAN),
        checkpoint: final_ck_path,
    })
}

// ---------------------------------------------------------------------------
// enhance

/// Runs the model over a noisy waveform: analyze, normalize, forward,
/// denormalize, resynthesize. Output length is the input truncated to whole
/// frames.
pub fn enhance_waveform(
    ck: &Checkpoint,
    net: &Network<f32>,
    noisy: &Waveform<f32>,
) -> Result<Waveform<f32>> {
    if noisy.sample_rate != ck.sample_rate {
        bail!(
            "sample rate mismatch: checkpoint expects {} Hz, input is {} Hz",
            ck.sample_rate,
            noisy.sample_rate
        );
    }
    let spec = stft(noisy, &ck.stft)?;
    let kind = ck.model.arch.target_kind();
    let mut feats = input_features(&spec, kind, ck.context, scalar(FEATURE_LPS_EPS))?;
    for f in feats.iter_mut() {
        ck.input_stats.normalize_in_place(f);
    }
    let mut outputs = infer_frames(net, &feats)?;
    for out in outputs.iter_mut() {
        ck.target_stats.denormalize_in_place(out);
    }
    let enhanced_spec = match kind {
        TargetKind::Ri => {
            let bins = ck.stft.bins();
            let mut out = RiSpectrogram::<f32>::zeros(spec.frames(), bins);
            for (t, frame) in outputs.iter().enumerate() {
                out.set_frame_stacked(t, frame)?;
            }
            // Model outputs are unconstrained; restore the real-signal
            // invariant before synthesis.
            out.zero_dc_nyquist_imag();
            out
        }
        TargetKind::Lps => {
            // Magnitude from the predicted log power, phase from the input.
            let bins = ck.stft.bins();
            let mut mag = Grid::<f32>::zeros(spec.frames(), bins);
            for (t, frame) in outputs.iter().enumerate() {
                for k in 0..bins {
                    mag.set(t, k, (frame[k] / 2.0).exp());
                }
            }
            let phase = rispec_core::phase::phase_of(&spec);
            combine_magnitude_phase(&mag, &phase.values)?
        }
    };
    Ok(istft(&enhanced_spec, &ck.stft, noisy.sample_rate)?)
}

pub fn cmd_enhance(
    checkpoint: &Path,
    input: &Path,
    output: &Path,
    dump_spectrogram: Option<&Path>,
) -> Result<()> {
    let ck = Checkpoint::load(checkpoint).map_err(|e| anyhow!("loading checkpoint: {e}"))?;
    let net = ck.instantiate()?;
    let noisy: Waveform<f32> = read_wav(input)?;
    let enhanced = enhance_waveform(&ck, &net, &noisy)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_wav(&enhanced, output)?;
    if let Some(dump) = dump_spectrogram {
        let spec = stft(&enhanced, &ck.stft)?;
        let mut buf = Vec::new();
        dump_spectrogram_csv(&spec, &mut buf)?;
        std::fs::write(dump, buf)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Debug, Clone)]
pub struct EvalRow {
    pub utterance_id: String,
    pub snr_db: f64,
    pub noise_kind: String,
    pub model: String,
    pub ssnr_db: f64,
    pub lsd_db: f64,
    pub frames_scored: usize,
}

pub struct EvalSummary {
    pub rows: Vec<EvalRow>,
    pub mean_noisy_ssnr: f64,
    pub mean_enhanced_ssnr: f64,
    pub mean_noisy_lsd: f64,
    pub mean_enhanced_lsd: f64,
}

/// Scores every test-split utterance against the clean reference, both
/// unprocessed ("noisy") and after enhancement. Signals are aligned to whole
/// frames and trimmed by one FFT length at each end before scoring, since
/// overlap-add synthesis tapers the outermost samples.
pub fn evaluate_with<F>(
    manifest_path: &Path,
    stft_cfg: &StftConfig,
    mut enhance: F,
) -> Result<Vec<EvalRow>>
where
    F: FnMut(&Waveform<f32>) -> Result<Waveform<f32>>,
{
    let entries = load_manifest(manifest_path)
        .map_err(|e| anyhow!("loading manifest {}: {e}", manifest_path.display()))?;
    let base_dir = manifest_base(manifest_path);
    let test_entries: Vec<&ManifestEntry> =
        entries.iter().filter(|e| e.split == Split::Test).collect();
    if test_entries.is_empty() {
        bail!("manifest has no test-split utterances");
    }
    let mut rows = Vec::new();
    for entry in test_entries {
        let clean: Waveform<f32> = entry
            .load_clean(&base_dir)
            .map_err(|e| anyhow!("loading clean for {}: {e}", entry.utterance_id))?;
        let noise = entry.load_noise(&base_dir, clean.len())?;
        let mixture = mix_at_snr(&clean, &noise, entry.snr_db, entry.seed)?;
        let enhanced = enhance(&mixture.mix)?;
        let usable = enhanced.len();
        if usable > clean.len() {
            bail!("enhanced output longer than the input");
        }
        let trim = stft_cfg.fft_size;
        if usable <= 2 * trim + 512 {
            bail!(
                "utterance {} too short to evaluate after edge trimming",
                entry.utterance_id
            );
        }
        let window = trim..usable - trim;
        let clean_w = Waveform::new(clean.samples[window.clone()].to_vec(), clean.sample_rate)?;
        let noisy_w = Waveform::new(
            mixture.mix.samples[window.clone()].to_vec(),
            clean.sample_rate,
        )?;
        let enhanced_w = Waveform::new(enhanced.samples[window].to_vec(), clean.sample_rate)?;
        for (model, test) in [("noisy", &noisy_w), ("enhanced", &enhanced_w)] {
            let (ssnr_db, frames_scored) = ssnr(&clean_w, test, &SsnrOptions::default())?;
            if frames_scored == 0 {
                bail!("no scoreable frames in {}", entry.utterance_id);
            }
            let lsd_db = lsd(&clean_w, test, stft_cfg, METRIC_LSD_EPS)?;
            rows.push(EvalRow {
                utterance_id: entry.utterance_id.clone(),
                snr_db: entry.snr_db,
                noise_kind: entry.noise_kind.label(),
                model: model.to_string(),
                ssnr_db,
                lsd_db,
                frames_scored,
            });
        }
    }
    Ok(rows)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Appends per-SNR-level and overall average rows and renders the CSV.
pub fn render_eval_csv(rows: &[EvalRow]) -> String {
    let mut csv = String::from("utterance_id,snr_db,noise_kind,model,ssnr_db,lsd_db\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.utterance_id,
            fmt_sig9(r.snr_db),
            r.noise_kind,
            r.model,
            fmt_sig9(r.ssnr_db),
            fmt_sig9(r.lsd_db)
        ));
    }
    // Per-SNR averages in (snr, model) order, then overall per model.
    let mut levels: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    for level in levels {
        for model in ["enhanced", "noisy"] {
            let sel = rows
                .iter()
                .filter(|r| r.snr_db == level && r.model == model);
            let sel: Vec<&EvalRow> = sel.collect();
            if sel.is_empty() {
                continue;
            }
            let kind = sel[0].noise_kind.clone();
            csv.push_str(&format!(
                "average,{},{},{},{},{}\n",
                fmt_sig9(level),
                kind,
                model,
                fmt_sig9(mean(sel.iter().map(|r| r.ssnr_db))),
                fmt_sig9(mean(sel.iter().map(|r| r.lsd_db)))
            ));
        }
    }
    for model in ["enhanced", "noisy"] {
        csv.push_str(&format!(
            "overall,0.00000000e0,all,{},{},{}\n",
            model,
            fmt_sig9(mean(
                rows.iter().filter(|r| r.model == model).map(|r| r.ssnr_db)
            )),
            fmt_sig9(mean(
                rows.iter().filter(|r| r.model == model).map(|r| r.lsd_db)
            ))
        ));
    }
    csv
}

pub fn cmd_evaluate(
    checkpoint: &Path,
    manifest_path: &Path,
    out_dir: &Path,
) -> Result<EvalSummary> {
    let ck = Checkpoint::load(checkpoint).map_err(|e| anyhow!("loading checkpoint: {e}"))?;
    let net = ck.instantiate()?;
    let stft_cfg = ck.stft.clone();
    let rows = evaluate_with(manifest_path, &stft_cfg, |noisy| {
        enhance_waveform(&ck, &net, noisy)
    })?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(metrics_path(out_dir), render_eval_csv(&rows))?;
    Ok(summarize(rows))
}

pub fn summarize(rows: Vec<EvalRow>) -> EvalSummary {
    let mean_noisy_ssnr = mean(
        rows.iter()
            .filter(|r| r.model == "noisy")
            .map(|r| r.ssnr_db),
    );
    let mean_enhanced_ssnr = mean(
        rows.iter()
            .filter(|r| r.model == "enhanced")
            .map(|r| r.ssnr_db),
    );
    let mean_noisy_lsd = mean(rows.iter().filter(|r| r.model == "noisy").map(|r| r.lsd_db));
    let mean_enhanced_lsd = mean(
        rows.iter()
            .filter(|r| r.model == "enhanced")
            .map(|r| r.lsd_db),
    );
    EvalSummary {
        rows,
        mean_noisy_ssnr,
        mean_enhanced_ssnr,
        mean_noisy_lsd,
        mean_enhanced_lsd,
    }
}

// ---------------------------------------------------------------------------
// beta sweep

pub struct BetaSweepRow {
    pub beta: f64,
    pub ssnr_db: f64,
    pub lsd_db: f64,
}

/// Trains and evaluates once per beta with shared features and seed.
/// The RI weight is fixed at alpha = 1.
pub fn cmd_beta_sweep(
    cfg: &ExperimentConfig,
    betas: &[f64],
    out_dir: &Path,
) -> Result<Vec<BetaSweepRow>> {
    if betas.is_empty() {
        bail!("beta grid is empty");
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        bail!("grid not strictly increasing");
    }
    std::fs::create_dir_all(out_dir)?;
    // Shared data preparation.
    if !feature_index_path(out_dir).exists() {
        cmd_prepare(cfg, out_dir)?;
    }
    let mut rows = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let run_dir = out_dir.join(format!("beta_{i:02}"));
        std::fs::create_dir_all(&run_dir)?;
        // The runs share the prepared features: link the store into the run
        // directory by copying the index and stats (feature files are
        // referenced relatively, so copy those too only once per run dir).
        copy_feature_store(out_dir, &run_dir)?;
        let mut run_cfg = cfg.clone();
        run_cfg.mml = MmlConfig::new(1.0, beta, cfg.mml.eps).map_err(|e| anyhow!("{e}"))?;
        cmd_train(&run_cfg, &run_dir)?;
        let summary = cmd_evaluate(&checkpoint_path(&run_dir), &cfg.manifest, &run_dir)?;
        rows.push(BetaSweepRow {
            beta,
            ssnr_db: summary.mean_enhanced_ssnr,
            lsd_db: summary.mean_enhanced_lsd,
        });
    }
    let mut csv = String::from("beta,ssnr_db,lsd_db\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(r.beta),
            fmt_sig9(r.ssnr_db),
            fmt_sig9(r.lsd_db)
        ));
    }
    std::fs::write(out_dir.join("beta_sweep.csv"), csv)?;
    Ok(rows)
}

fn copy_feature_store(from: &Path, to: &Path) -> Result<()> {
    std::fs::create_dir_all(features_dir(to))?;
    std::fs::copy(feature_index_path(from), feature_index_path(to))?;
    std::fs::copy(norm_input_path(from), norm_input_path(to))?;
    std::fs::copy(norm_target_path(from), norm_target_path(to))?;
    for entry in std::fs::read_dir(features_dir(from))? {
        let entry = entry?;
        std::fs::copy(entry.path(), features_dir(to).join(entry.file_name()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// phase study

pub enum CleanSet {
    /// Every .wav file in a directory, in name order.
    Dir(PathBuf),
    /// `count` utterances from the bundled synthetic generator.
    Synth { count: usize },
}

impl CleanSet {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("synth:") {
            let count: usize = rest
                .parse()
                .map_err(|e| anyhow!("bad synthetic clean-set count '{rest}': {e}"))?;
            if count == 0 {
                bail!("synthetic clean set needs at least one utterance");
            }
            Ok(CleanSet::Synth { count })
        } else {
            Ok(CleanSet::Dir(PathBuf::from(s)))
        }
    }

    pub fn load(&self, sample_rate: u32, seed: u64) -> Result<Vec<Waveform<f64>>> {
        match self {
            CleanSet::Dir(dir) => {
                let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                    .with_context(|| format!("reading clean dir {}", dir.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().map(|e| e == "wav").unwrap_or(false))
                    .collect();
                paths.sort();
                if paths.is_empty() {
                    bail!("no .wav files in {}", dir.display());
                }
                let mut out = Vec::new();
                for p in paths {
                    let w: Waveform<f64> = read_wav(&p)?;
                    if w.sample_rate != sample_rate {
                        bail!(
                            "{}: sample rate {} does not match configured {}",
                            p.display(),
                            w.sample_rate,
                            sample_rate
                        );
                    }
                    out.push(w);
                }
                Ok(out)
            }
            CleanSet::Synth { count } => {
                let base = Rng::new(seed).derive("phase-study-clean");
                Ok((0..*count)
                    .map(|i| {
                        let mut r = base.derive(&format!("utt{i}"));
                        synth_vowel(16_000, sample_rate, r.next_u64())
                    })
                    .collect())
            }
        }
    }
}

pub struct PhaseStudySummary {
    /// (snr_db, mean ssnr_db, mean mask fraction) per level.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Clean-magnitude/noisy-phase study over a clean set, averaged per SNR
/// level. Writes the SSNR table, the mask-fraction table, and one agreement
/// mask image per level (for the first utterance).
pub fn cmd_phase_study(
    clean_set: &CleanSet,
    noise_kind: &NoiseKind,
    snr_levels: &[f64],
    threshold: f64,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<PhaseStudySummary> {
    if snr_levels.is_empty() {
        bail!("snr level list is empty");
    }
    let stft_cfg = cfg.stft()?;
    let cleans = clean_set.load(cfg.sample_rate, cfg.seed)?;
    std::fs::create_dir_all(out_dir)?;

    let mut ssnr_sums = vec![0.0f64; snr_levels.len()];
    let mut frac_sums = vec![0.0f64; snr_levels.len()];
    for (u, clean) in cleans.iter().enumerate() {
        let noise: Waveform<f64> = match noise_kind {
            NoiseKind::File(path) => {
                let w: Waveform<f64> = read_wav(path)?;
                if w.len() < clean.len() {
                    bail!("noise file shorter than clean signal");
                }
                w
            }
            kind => generate_noise(kind.clone(), 2 * clean.len(), cfg.seed ^ ((u as u64) << 8))
                .map_err(|e| anyhow!("{e}"))?,
        };
        let rows = noisy_phase_study(
            clean,
            &noise,
            snr_levels,
            threshold,
            &stft_cfg,
            cfg.seed ^ 0x7068_6173,
        )
        .map_err(|e| anyhow!("{e}"))?;
        for (i, (row, mask)) in rows.iter().enumerate() {
            ssnr_sums[i] += row.ssnr_db;
            frac_sums[i] += row.mask_fraction;
            if u == 0 {
                let mut buf = Vec::new();
                write_mask_pgm(mask, &mut buf)?;
                std::fs::write(
                    out_dir.join(format!("mask_snr_{}.pgm", fmt_level(row.snr_db))),
                    buf,
                )?;
            }
        }
    }
    let n = cleans.len() as f64;
    let rows: Vec<(f64, f64, f64)> = snr_levels
        .iter()
        .enumerate()
        .map(|(i, &snr)| (snr, ssnr_sums[i] / n, frac_sums[i] / n))
        .collect();

    let mut table = String::from("snr_db,ssnr_db\n");
    for &(snr, ssnr_db, _) in &rows {
        table.push_str(&format!("{},{}\n", fmt_sig9(snr), fmt_sig9(ssnr_db)));
    }
    std::fs::write(out_dir.join("phase_table.csv"), table)?;

    let mut fractions = String::from("snr_db,mask_fraction\n");
    for &(snr, _, frac) in &rows {
        fractions.push_str(&format!("{},{}\n", fmt_sig9(snr), fmt_sig9(frac)));
    }
    std::fs::write(out_dir.join("phase_mask_fractions.csv"), fractions)?;

    Ok(PhaseStudySummary { rows })
}

fn fmt_level(snr: f64) -> String {
    // Filename-safe SNR label: -6.5 -> m6p5, 12 -> 12.
    let s = format!("{snr}");
    s.replace('-', "m").replace('.', "p")
}

fn manifest_base(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
