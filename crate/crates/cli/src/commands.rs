use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kforge::error::Error;
use kforge::export::{
    build_records, file_sha256, make_split, read_kfrg, write_kfrg, write_manifest, Arch, DatasetManifest, KfrgFile,
    ManifestEntry, RecordKind, MANIFEST_VERSION,
};
use kforge::figures::emit_figures;
use kforge::metrics::{friedman_nemenyi, read_reports, write_reports, QualityReport};
use kforge::pipeline::{
    acquire_video, list_videos, magnitude_from_kfrg, magnitude_to_kfrg, quality_report, reconstruct, run_parallel,
    sampling_operator, trajectory, Acquisition, Method, PipelineConfig, SamplingKind, DEFAULT_CONFIG_FILE,
};
use kforge::recon::Sampling;
use kforge::series::MagnitudeSeries;
use kforge::traj::{write_mask, write_trajectory, CartesianMask};
use kforge::video::load_frame_sequence;
use serde::{Deserialize, Serialize};

use crate::{Cli, Command};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Missing(_) => 2,
        Error::Numerical(_) => 3,
        _ => 1,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn context(what: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError {
        code: exit_code(&e),
        message: format!("{what}: {e}"),
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None if Path::new(DEFAULT_CONFIG_FILE).exists() => PipelineConfig::load(Path::new(DEFAULT_CONFIG_FILE))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Toy { count, frames, size } => toy(&cfg, *count, *frames, *size),
        Command::Simulate { videos } => simulate(cli, &cfg, videos.as_deref()).map(|_| ()),
        Command::Traj {
            sampling,
            frames,
            video_id,
        } => traj(&cfg, *sampling, frames.unwrap_or(cfg.frames), video_id),
        Command::Recon {
            input,
            method,
            sampling,
        } => {
            let input = input.clone().unwrap_or_else(|| cfg.out_dir.join("sim"));
            recon(cli, &cfg, &input, *method, *sampling).map(|_| ())
        }
        Command::Evaluate { preds, truth, metric } => {
            let preds = preds.iter().map(|p| parse_pred(p)).collect::<Result<Vec<_>>>()?;
            evaluate(&cfg, &preds, truth, metric)
        }
        Command::Export { input, arch } => {
            let input = input.clone().unwrap_or_else(|| cfg.out_dir.join("sim"));
            let arch = if arch.is_empty() {
                Arch::ALL.to_vec()
            } else {
                arch.clone()
            };
            export(cli, &cfg, &input, &arch)
        }
        Command::All { videos } => all(cli, &cfg, videos.as_deref()),
    }
}

fn toy(cfg: &PipelineConfig, count: usize, frames: usize, size: usize) -> Result<()> {
    let dir = cfg.out_dir.clone();
    for i in 0..count {
        let seed = kforge::rng::derive_seed(cfg.seed, i as u64);
        let video = kforge::toy::toy_video(seed, frames, size, size)?;
        video.save_png_frames(&dir.join(format!("video_{i:03}")))?;
    }
    eprintln!("wrote {count} toy videos to {}", dir.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SimEntry {
    video_id: String,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SimManifest {
    config_hash: String,
    seed: u64,
    videos: Vec<SimEntry>,
}

fn simulate(cli: &Cli, cfg: &PipelineConfig, videos: Option<&Path>) -> Result<PathBuf> {
    let video_dir = videos.map(Path::to_path_buf).unwrap_or_else(|| cfg.video_dir.clone());
    let list = list_videos(&video_dir).map_err(context("video directory"))?;
    if list.is_empty() {
        return Err(CliError {
            code: 2,
            message: format!("no video directories in {}", video_dir.display()),
        });
    }
    let out = cfg.out_dir.join("sim");
    create_dir(&out)?;
    let entries = run_parallel(cli.jobs, &list, |(id, dir)| {
        let video = load_frame_sequence::<f32>(dir, cfg.frames)?;
        let acq = acquire_video(&video, id, cfg)?;
        let path = out.join(format!("{id}.kfrg"));
        write_kfrg(&path, &acq.to_kfrg()?)?;
        Ok(SimEntry {
            video_id: id.clone(),
            path: format!("{id}.kfrg"),
            sha256: file_sha256(&path)?,
        })
    })
    .map_err(context("simulate"))?;
    let manifest = SimManifest {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        videos: entries,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!("simulated {} videos into {}", manifest.videos.len(), out.display());
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn traj(cfg: &PipelineConfig, sampling: SamplingKind, frames: usize, video_id: &str) -> Result<()> {
    let out = cfg.out_dir.join("traj");
    create_dir(&out)?;
    let (h, w) = (cfg.height, cfg.width);
    let path = match sampling {
        SamplingKind::Full | SamplingKind::Cartesian => {
            let op = sampling_operator(sampling, cfg, video_id, frames, (h, w), 1)?;
            let Sampling::Cartesian(mask) = op.sampling() else {
                unreachable!("Cartesian operator")
            };
            let per_frame = mask.row(0).iter().filter(|&&m| m).count();
            let cm = CartesianMask {
                mask: mask.clone(),
                n_center: cfg.cartesian.n_center.min(per_frame),
                n_random: per_frame.saturating_sub(cfg.cartesian.n_center),
            };
            let path = out.join(format!("{sampling}-{video_id}.kmsk"));
            write_mask(&path, &cm)?;
            path
        }
        _ => {
            let t = trajectory(sampling, cfg, frames, (h, w))?;
            let path = out.join(format!("{sampling}.ktrj"));
            write_trajectory(&path, &t)?;
            path
        }
    };
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// `.kfrg` files in `dir` keyed by file stem.
fn kfrg_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Missing(dir.to_path_buf()).into());
    }
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "kfrg") {
            let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.insert(stem, path);
        }
    }
    Ok(out)
}

fn recon(cli: &Cli, cfg: &PipelineConfig, input: &Path, method: Method, sampling: SamplingKind) -> Result<PathBuf> {
    let files: Vec<(String, PathBuf)> = kfrg_files(input)?.into_iter().collect();
    if files.is_empty() {
        return Err(CliError {
            code: 2,
            message: format!("no .kfrg files in {}", input.display()),
        });
    }
    let label = format!("{method}-{sampling}");
    let out = cfg.out_dir.join("recon").join(&label);
    create_dir(&out)?;
    let rows = run_parallel(cli.jobs, &files, |(id, path)| {
        let acq = Acquisition::from_kfrg(&read_kfrg(path)?)?;
        let r = reconstruct(&acq, sampling, method, cfg)?;
        let meta = serde_json::json!({
            "video_id": acq.meta.video_id,
            "method": method,
            "sampling": sampling,
            "config_hash": cfg.hash(),
            "objective": r.objective,
        });
        write_kfrg(&out.join(format!("{id}.kfrg")), &magnitude_to_kfrg(&r.image, meta)?)?;
        if cli.emit_figures {
            emit_figures(&r.image, &out.join("figures"), id)?;
        }
        quality_report(id, &label, &r.image, Some(&acq.reference()), &cfg.metrics)
    })
    .map_err(context(&label))?;
    write_reports(&out.join("metrics.csv"), &rows, false)?;
    upsert_reports(&cfg.out_dir.join("metrics.csv"), &rows)?;
    for r in &rows {
        eprintln!(
            "{label} {}: psnr {:.2} dB, ssim {:.4}",
            r.dataset,
            r.psnr_db.unwrap_or(f64::NAN),
            r.ssim.unwrap_or(f64::NAN)
        );
    }
    Ok(out)
}

/// Replace rows with the same dataset and method, keep the rest.
fn upsert_reports(path: &Path, rows: &[QualityReport]) -> Result<()> {
    let mut all = if path.exists() { read_reports(path)? } else { Vec::new() };
    all.retain(|old| !rows.iter().any(|r| r.dataset == old.dataset && r.method == old.method));
    all.extend(rows.iter().cloned());
    write_reports(path, &all, false)?;
    Ok(())
}

fn parse_pred(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((name, dir)) if !name.is_empty() && !dir.is_empty() => Ok((name.to_string(), PathBuf::from(dir))),
        _ => Err(CliError {
            code: 1,
            message: format!("--pred expects NAME=DIR, got '{spec}'"),
        }),
    }
}

fn load_truth(path: &Path) -> std::result::Result<MagnitudeSeries<f32>, Error> {
    let file: KfrgFile = read_kfrg(path)?;
    match file.kind {
        RecordKind::FullKspace => Ok(Acquisition::from_kfrg(&file)?.reference()),
        _ => magnitude_from_kfrg(&file),
    }
}

#[derive(Debug, Serialize)]
struct RankSummary {
    metric: String,
    methods: Vec<String>,
    datasets: usize,
    friedman_statistic: f64,
    friedman_p: f64,
    mean_ranks: Vec<f64>,
    nemenyi_p: Vec<Vec<f64>>,
}

fn evaluate(cfg: &PipelineConfig, preds: &[(String, PathBuf)], truth: &Path, metric: &str) -> Result<()> {
    let pick: fn(&QualityReport) -> Option<f64> = match metric {
        "psnr" => |r| r.psnr_db.map(|v| -v),
        "ssim" => |r| r.ssim.map(|v| -v),
        "mse" => |r| r.mse,
        _ => {
            return Err(CliError {
                code: 1,
                message: format!("unknown metric '{metric}' (expected psnr, ssim or mse)"),
            })
        }
    };
    let truth_files = kfrg_files(truth)?;
    let mut pred_files = Vec::new();
    let mut unpaired = Vec::new();
    for (name, dir) in preds {
        let files = kfrg_files(dir)?;
        for id in files.keys().filter(|k| !truth_files.contains_key(*k)) {
            unpaired.push(format!("{name}/{id}"));
        }
        for id in truth_files.keys().filter(|k| !files.contains_key(*k)) {
            unpaired.push(format!("truth/{id} (no {name} prediction)"));
        }
        pred_files.push((name.clone(), files));
    }
    if !unpaired.is_empty() {
        return Err(CliError {
            code: 1,
            message: format!("unpaired files: {}", unpaired.join(", ")),
        });
    }
    let mut rows = Vec::new();
    let mut table = ndarray::Array2::<f64>::zeros((truth_files.len(), preds.len()));
    for (i, (id, tpath)) in truth_files.iter().enumerate() {
        let reference = load_truth(tpath).map_err(context(id))?;
        for (j, (name, files)) in pred_files.iter().enumerate() {
            let pred = read_kfrg(&files[id])
                .and_then(|f| magnitude_from_kfrg(&f))
                .map_err(context(id))?;
            let row = quality_report(id, name, &pred, Some(&reference), &cfg.metrics).map_err(context(id))?;
            table[[i, j]] = pick(&row).unwrap_or(f64::NAN);
            rows.push(row);
        }
    }
    create_dir(&cfg.out_dir)?;
    write_reports(&cfg.out_dir.join("evaluation.csv"), &rows, false)?;
    eprintln!(
        "wrote {} rows to {}",
        rows.len(),
        cfg.out_dir.join("evaluation.csv").display()
    );
    if preds.len() < 3 || truth_files.len() < 2 {
        eprintln!("rank statistics need at least three methods and two datasets");
    } else {
        let f = friedman_nemenyi(table.view())?;
        let summary = RankSummary {
            metric: metric.to_string(),
            methods: preds.iter().map(|p| p.0.clone()).collect(),
            datasets: truth_files.len(),
            friedman_statistic: f.statistic,
            friedman_p: f.p_value,
            mean_ranks: f.mean_ranks.clone(),
            nemenyi_p: f.nemenyi.outer_iter().map(|r| r.to_vec()).collect(),
        };
        write_json(&cfg.out_dir.join("rank_stats.json"), &summary)?;
        println!(
            "friedman chi2 = {:.4}, p = {:.4e} ({} datasets, {metric})",
            f.statistic,
            f.p_value,
            truth_files.len()
        );
        for (name, r) in summary.methods.iter().zip(&summary.mean_ranks) {
            println!("  mean rank {name}: {r:.3}");
        }
        for a in 0..preds.len() {
            for b in a + 1..preds.len() {
                println!(
                    "  nemenyi {} vs {}: p = {:.4}",
                    summary.methods[a],
                    summary.methods[b],
                    f.nemenyi[[a, b]]
                );
            }
        }
    }
    Ok(())
}

fn export(cli: &Cli, cfg: &PipelineConfig, input: &Path, archs: &[Arch]) -> Result<()> {
    let files: Vec<(String, PathBuf)> = kfrg_files(input)?.into_iter().collect();
    if files.is_empty() {
        return Err(CliError {
            code: 2,
            message: format!("no .kfrg files in {}", input.display()),
        });
    }
    let ids: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    let split = make_split(&ids, cfg.export.split, cfg.seed)?;
    let out = cfg.out_dir.join("dataset");
    for a in archs {
        create_dir(&out.join(a.name()))?;
    }
    let per_video = run_parallel(cli.jobs, &files, |(id, path)| {
        let acq = Acquisition::from_kfrg(&read_kfrg(path)?)?;
        let mut entries = Vec::new();
        for &arch in archs {
            for rec in build_records(&acq, cfg, arch)? {
                let rel = format!("{}/{id}-w{:02}.kfrg", arch.name(), rec.meta.window_index);
                let p = out.join(&rel);
                write_kfrg(&p, &rec.to_kfrg()?)?;
                entries.push(ManifestEntry {
                    path: rel,
                    video_id: id.clone(),
                    arch,
                    window_index: rec.meta.window_index,
                    split: split.split_of(id).expect("every id is split"),
                    sha256: file_sha256(&p)?,
                });
            }
        }
        Ok(entries)
    })
    .map_err(context("export"))?;
    let mut records: Vec<ManifestEntry> = per_video.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.arch, &a.video_id, a.window_index).cmp(&(b.arch, &b.video_id, b.window_index)));
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        split,
        records,
    };
    write_manifest(&out.join("manifest.json"), &manifest)?;
    let (tr, va, te) = manifest.split.sizes();
    eprintln!(
        "exported {} records ({tr}/{va}/{te} videos train/validation/test) into {}",
        manifest.records.len(),
        out.display()
    );
    Ok(())
}

fn all(cli: &Cli, cfg: &PipelineConfig, videos: Option<&Path>) -> Result<()> {
    create_dir(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join(DEFAULT_CONFIG_FILE), cfg.to_toml()?).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let sim = simulate(cli, cfg, videos)?;
    let mut preds = Vec::new();
    for sampling in SamplingKind::UNDERSAMPLED {
        for method in [Method::Zf, Method::Cs] {
            let dir = recon(cli, cfg, &sim, method, sampling)?;
            preds.push((format!("{method}-{sampling}"), dir));
        }
    }
    evaluate(cfg, &preds, &sim, "ssim")?;
    export(cli, cfg, &sim, &Arch::ALL)
}
