use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use airway_taper::bench::{
    compare_tapers, run_dose_sweep, run_scale_sweep, write_outputs, SweepConfig, SweepReport,
};
use airway_taper::ctsim::{
    default_angles, measure_tn, rescale_mask, rescale_volume, simulate_dose, uniform_angles, NoiseLevel,
};
use airway_taper::lumen::{write_profiles_csv, MeasureConfig};
use airway_taper::phantom::{make_phantom, PhantomSpec};
use airway_taper::pipeline::{extract_centrelines, measure_centrelines};
use airway_taper::skeleton::DistalPoint;
use airway_taper::taper::{exclude_intervals, read_results_csv, taper_rate, write_results_csv, TaperResult};
use airway_taper::volio::{load_mask, load_volume, save_mask, save_volume};

#[derive(Parser)]
#[command(name = "airtaper", version, about = "Airway taper measurement and reproducibility experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic tube phantoms with analytic ground truth.
    #[command(subcommand)]
    Phantom(PhantomCmd),
    /// Extract carina-to-distal centrelines from a segmentation.
    Skeleton {
        #[arg(long)]
        mask: PathBuf,
        /// JSON list of {"id", "voxel": [i, j, k]}.
        #[arg(long)]
        distal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure lumen areas and taper rates.
    Measure(MeasureArgs),
    /// Dose and voxel-size simulation.
    #[command(subcommand)]
    Ctsim(CtsimCmd),
    /// Reproducibility sweeps and agreement statistics.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Subcommand)]
enum PhantomCmd {
    /// Write ct.mhd, mask.mhd, truth.json and distal.json.
    Make {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    ct: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    distal: PathBuf,
    /// Output directory for profiles.csv and tapers.csv.
    #[arg(long)]
    out: PathBuf,
    /// JSON object mapping airway id to a list of [lo, hi] arclength
    /// intervals to leave out of the regression.
    #[arg(long)]
    exclude: Option<PathBuf>,
    /// JSON file overriding measurement settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CtsimCmd {
    /// Add projection noise at level λ (σ = 10^λ per sinogram bin).
    Dose {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Equally spaced projection angles; default 0° to 179° by 0.1°.
        #[arg(long)]
        angles: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample to a voxel size `scale` times larger.
    Rescale {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
        /// Mask to resample alongside, written to --mask-out.
        #[arg(long, requires = "mask_out")]
        mask: Option<PathBuf>,
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Noise index inside the eroded upper trachea.
    Tn {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        trachea: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Noise sweep over the configured λ values.
    Dose(SweepArgs),
    /// Voxel-size sweep over the configured scales.
    Scale(SweepArgs),
    /// Agreement between two taper CSVs matched by airway id.
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn phantom_make(spec: &Path, out: &Path) -> Result<()> {
    let spec: PhantomSpec = read_json(spec)?;
    let (ct, mask, truth) = make_phantom(&spec)?;
    fs::create_dir_all(out)?;
    save_volume(&ct, out.join("ct.mhd"))?;
    save_mask(&mask, out.join("mask.mhd"))?;
    write_json(&out.join("truth.json"), &truth)?;
    let distal: Vec<DistalPoint> = truth
        .airways
        .iter()
        .map(|a| DistalPoint {
            id: a.id.clone(),
            voxel: a.distal_voxel,
        })
        .collect();
    write_json(&out.join("distal.json"), &distal)?;
    log::info!("phantom {:?} written to {}", ct.dims(), out.display());
    Ok(())
}

fn skeleton(mask: &Path, distal: &Path, out: &Path) -> Result<()> {
    let mask = load_mask(mask)?;
    let distal: Vec<DistalPoint> = read_json(distal)?;
    let (start, centrelines) = extract_centrelines(&mask, &distal)?;
    let airways: Vec<_> = centrelines
        .iter()
        .map(|c| {
            json!({
                "id": c.path.id,
                "voxels": c.path.voxels,
                "length_mm": c.spline.length(),
            })
        })
        .collect();
    write_json(out, &json!({ "trachea_start": start, "airways": airways }))
}

fn measure(args: &MeasureArgs) -> Result<()> {
    let ct = load_volume(&args.ct)?;
    let mask = load_mask(&args.mask)?;
    if !ct.same_grid(&mask) {
        bail!("CT and mask grids differ");
    }
    let distal: Vec<DistalPoint> = read_json(&args.distal)?;
    let cfg: MeasureConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => MeasureConfig::default(),
    };
    let exclude: std::collections::BTreeMap<String, Vec<(f64, f64)>> = match &args.exclude {
        Some(p) => read_json(p)?,
        None => Default::default(),
    };
    let (_, centrelines) = extract_centrelines(&mask, &distal)?;
    let measured = measure_centrelines(&ct, &mask, &centrelines, &cfg)?;
    let mut profiles = Vec::new();
    let mut results: Vec<TaperResult> = Vec::new();
    for m in measured {
        let profile = match exclude.get(&m.id) {
            Some(iv) => exclude_intervals(&m.profile, iv),
            None => m.profile,
        };
        match taper_rate(&profile) {
            Ok(t) => results.push(t),
            Err(e) => log::warn!("{}: {e}", profile.airway_id),
        }
        profiles.push(profile);
    }
    fs::create_dir_all(&args.out)?;
    let mut w = BufWriter::new(File::create(args.out.join("profiles.csv"))?);
    write_profiles_csv(&profiles, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(args.out.join("tapers.csv"))?);
    write_results_csv(&results, &mut w)?;
    w.flush()?;
    for r in &results {
        println!("{}\tT = {:.5} /mm\tN = {}", r.airway_id, r.taper, r.n);
    }
    Ok(())
}

fn ctsim(cmd: &CtsimCmd) -> Result<()> {
    match cmd {
        CtsimCmd::Dose {
            input,
            lambda,
            seed,
            angles,
            out,
        } => {
            let v = load_volume(input)?;
            let angles = angles.map(uniform_angles).unwrap_or_else(default_angles);
            let noisy = simulate_dose(&v, NoiseLevel(*lambda), *seed, &angles)?;
            save_volume(&noisy, out)?;
        }
        CtsimCmd::Rescale {
            input,
            scale,
            out,
            mask,
            mask_out,
        } => {
            save_volume(&rescale_volume(&load_volume(input)?, *scale)?, out)?;
            if let (Some(m), Some(mo)) = (mask, mask_out) {
                save_mask(&rescale_mask(&load_mask(m)?, *scale)?, mo)?;
            }
        }
        CtsimCmd::Tn { input, trachea } => {
            let tn = measure_tn(&load_volume(input)?, &load_mask(trachea)?)?;
            println!("{tn:.3}");
        }
    }
    Ok(())
}

fn sweep(args: &SweepArgs, run: fn(&SweepConfig) -> airway_taper::Result<SweepReport>) -> Result<()> {
    let cfg: SweepConfig = read_json(&args.config)?;
    let dir = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let report = run(&cfg)?;
    let written = write_outputs(&report, &cfg, &dir)?;
    if report.failure_count() > 0 {
        log::warn!("{} sweep points recorded failures", report.failure_count());
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn stats(a: &Path, b: &Path) -> Result<()> {
    let ra = read_results_csv(BufReader::new(File::open(a).with_context(|| a.display().to_string())?))?;
    let rb = read_results_csv(BufReader::new(File::open(b).with_context(|| b.display().to_string())?))?;
    let c = compare_tapers(&ra, &rb)?;
    println!("{}", serde_json::to_string_pretty(&c)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Phantom(PhantomCmd::Make { spec, out }) => phantom_make(spec, out),
        Command::Skeleton { mask, distal, out } => skeleton(mask, distal, out),
        Command::Measure(args) => measure(args),
        Command::Ctsim(cmd) => ctsim(cmd),
        Command::Bench(BenchCmd::Dose(args)) => sweep(args, run_dose_sweep),
        Command::Bench(BenchCmd::Scale(args)) => sweep(args, run_scale_sweep),
        Command::Bench(BenchCmd::Stats { a, b }) => stats(a, b),
    }
}
