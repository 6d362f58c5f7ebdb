mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use pad_core::eval::run_eval;
use pad_core::fixtures::{make_fixture_set, write_fixture_set};
use pad_core::io::{load_image, save_gray, save_image, save_mask};
use pad_core::{analyze, defend, Analysis, Error, ImageBuffer, PipelineConfig, RegionProviderSpec, RunConfig};
use rayon::prelude::*;

use crate::args::{Cli, Command};

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}

fn create_dir(dir: &Path) -> pad_core::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Unwritable {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

fn export_heatmaps(a: &Analysis, dir: &Path, stem: &str) -> pad_core::Result<()> {
    create_dir(dir)?;
    save_gray(&a.h_mi.to_gray(), dir.join(format!("{stem}.h_mi.png")))?;
    save_gray(&a.h_cd.to_gray(), dir.join(format!("{stem}.h_cd.png")))?;
    save_gray(&a.localization.fused.to_gray(), dir.join(format!("{stem}.h_fuse.png")))?;
    save_mask(a.h_p(), dir.join(format!("{stem}.h_p.png")))
}

/// Runs `f` over the inputs on `jobs` threads, keeping input order.
fn for_each_input<T: Send>(
    inputs: &[PathBuf],
    jobs: usize,
    f: impl Fn(&Path) -> pad_core::Result<T> + Sync,
) -> pad_core::Result<Vec<pad_core::Result<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| inputs.par_iter().map(|p| f(p)).collect()))
}

fn cmd_defend(inputs: &[PathBuf], out: &Path, cfg: &RunConfig) -> pad_core::Result<bool> {
    let pipeline = cfg.pipeline()?;
    let provider = cfg.provider_spec()?;
    create_dir(out)?;
    let results = for_each_input(inputs, cfg.jobs, |path| {
        let img = load_image(path)?;
        let stem = stem_of(path);
        let d = defend(&img, &stem, &pipeline, &provider)?;
        save_image(&d.defended, out.join(format!("{stem}.defended.png")))?;
        save_mask(&d.mask, out.join(format!("{stem}.mask.png")))?;
        if let Some(dir) = &cfg.heatmaps_dir {
            export_heatmaps(&d.analysis, dir, &stem)?;
        }
        let mut line = format!(
            "{}: masked {:.2}% ({} proposals, estimated quality {})",
            path.display(),
            d.mask.area_fraction() * 100.0,
            d.proposals,
            d.analysis.estimated_quality
        );
        if d.fell_back {
            line.push_str(", no proposal matched");
        }
        if let Some(why) = &d.provider_degraded {
            line.push_str(&format!(", provider degraded to components: {why}"));
        }
        Ok(line)
    })?;
    report_lines(inputs, results)
}

fn cmd_heatmap(inputs: &[PathBuf], out: &Path, cfg: &RunConfig) -> pad_core::Result<bool> {
    let pipeline: PipelineConfig = cfg.pipeline()?;
    let results = for_each_input(inputs, cfg.jobs, |path| {
        let a = analyze(&load_image(path)?, &pipeline)?;
        export_heatmaps(&a, out, &stem_of(path))?;
        Ok(format!("{}: threshold {:.3}", path.display(), a.localization.threshold))
    })?;
    report_lines(inputs, results)
}

/// Prints one line per input; false when any input failed.
fn report_lines(inputs: &[PathBuf], results: Vec<pad_core::Result<String>>) -> pad_core::Result<bool> {
    let mut ok = true;
    for (path, r) in inputs.iter().zip(results) {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                ok = false;
                eprintln!("error: {}: {e}", path.display());
            }
        }
    }
    Ok(ok)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

/// Expands directories into their image files, sorted by name.
fn collect_bases(paths: &[PathBuf]) -> pad_core::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|source| Error::Unreadable {
                path: p.clone(),
                source,
            })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && is_image(f))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no base images found".into()));
    }
    Ok(out)
}

fn cmd_synth(bases: &[PathBuf], n: usize, out: &Path, cfg: &RunConfig) -> pad_core::Result<bool> {
    let images = collect_bases(bases)?
        .iter()
        .map(load_image)
        .collect::<pad_core::Result<Vec<ImageBuffer>>>()?;
    let fixtures = make_fixture_set(&images, n, cfg.seed)?;
    let manifest = write_fixture_set(&fixtures, out)?;
    println!("wrote {} fixtures to {}", fixtures.len(), manifest.display());
    Ok(true)
}

fn cmd_eval(manifest: &Path, out: &Path, cfg: &RunConfig) -> pad_core::Result<bool> {
    let report = run_eval(manifest, cfg)?;
    let (json, _) = report.write(out)?;
    print!("{}", report.to_table());
    println!("report: {}", json.display());
    if report.failed > 0 {
        eprintln!("error: {} of {} images failed", report.failed, report.images);
    }
    Ok(report.failed == 0)
}

fn run(cli: Cli) -> pad_core::Result<bool> {
    let cfg = RunConfig::resolve(cli.config.config.as_deref(), &cli.config.overrides())?;
    if let RegionProviderSpec::Directory(dir) = cfg.provider_spec()? {
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("mask directory {} does not exist", dir.display())));
        }
    }
    match &cli.command {
        Command::Defend { inputs, out } => cmd_defend(inputs, out, &cfg),
        Command::Heatmap { inputs, out } => cmd_heatmap(inputs, out, &cfg),
        Command::Synth { bases, n, out } => cmd_synth(bases, *n, out, &cfg),
        Command::Eval { manifest, out } => cmd_eval(manifest, out, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
