//! Command-line front end.
//!
//! Exit status is 0 on success, 2 for invalid input and 3 for numeric or
//! runtime failures. Diagnostics go to stderr; stdout only carries results
//! when `--out` is omitted.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{coefficient_sweep, write_sweep_csv, CoefficientKind, SkippedPoint, SweepGrid};
use crate::channel::{synthesize_cir, ArrayGeometry, FieldPattern, NoiseSpec};
use crate::error::{Error, Result};
use crate::estimation::{estimate_csvs, estimate_dataset, reciprocity_report, report_csvs, EstimationConfig};
use crate::io::{parse_scenario, read_dataset, write_atomic, write_dataset, Link};
use crate::materials::{load_material_db, MaterialDb};

#[derive(Debug, Parser)]
#[command(name = "fdd-reciprocity", version, about = "Dual-polarized multipath channel simulation and FDD UL/DL reciprocity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Material table operations.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
    /// Sweep a coefficient family over materials and angles at two carriers
    /// and write the per-point relative differences as CSV.
    Sweep(SweepArgs),
    /// Synthesize base-station impulse responses for one link of a scenario.
    Synthesize(SynthesizeArgs),
    /// Delay profile, angle spectrum and peaks of one dataset (JSON).
    Estimate(EstimateArgs),
    /// Compare an uplink and a downlink dataset (JSON report plus CSV twins).
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum MaterialsAction {
    /// Print the material table as JSON.
    List {
        #[command(flatten)]
        db: MaterialsArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MaterialsArg {
    /// Material table (JSON array) replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    pub materials: Option<PathBuf>,
}

impl MaterialsArg {
    fn load(&self) -> Result<MaterialDb> {
        match &self.materials {
            None => Ok(MaterialDb::builtin()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                load_material_db(&text)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: CoefficientKind,
    /// Uplink carrier in Hz.
    #[arg(long, default_value_t = 1.8e9)]
    pub f_ul: f64,
    /// Downlink carrier in Hz.
    #[arg(long, default_value_t = 1.99e9)]
    pub f_dl: f64,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file receiving sample and skipped-point counts and the skipped
    /// points themselves.
    #[arg(long, value_name = "FILE")]
    pub meta: Option<PathBuf>,
    /// First incidence angle in degrees (reflection, transmission).
    #[arg(long, default_value_t = 1.0)]
    pub theta_min_deg: f64,
    /// Last incidence angle in degrees (reflection, transmission).
    #[arg(long, default_value_t = 85.0)]
    pub theta_max_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta_step_deg: f64,
    /// Slab thickness for every material; defaults to each material's own.
    #[arg(long)]
    pub thickness_m: Option<f64>,
    /// Wedge exterior-angle factors (diffraction).
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.0])]
    pub wedge_n: Vec<f64>,
    /// Grid step for incidence and diffraction azimuths, degrees.
    #[arg(long, default_value_t = 5.0)]
    pub wedge_step_deg: f64,
    /// Half-width of the band left out around boundary poles, degrees.
    #[arg(long, default_value_t = 1.0)]
    pub pole_band_deg: f64,
    /// Edge-to-observer distance parameter in metres.
    #[arg(long, default_value_t = 5.0)]
    pub wedge_distance_m: f64,
    /// Angle between incident ray and edge, degrees.
    #[arg(long, default_value_t = 90.0)]
    pub beta0_deg: f64,
    /// Polarization basis rotation before the edge, degrees.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub rot_in_deg: f64,
    /// Polarization basis rotation after the edge, degrees.
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    pub rot_out_deg: f64,
    #[command(flatten)]
    pub db: MaterialsArg,
}

impl SweepArgs {
    fn grid(&self) -> Result<SweepGrid> {
        let (lo, hi, step) = (self.theta_min_deg, self.theta_max_deg, self.theta_step_deg);
        if !(step > 0.0 && lo <= hi && lo >= 0.0 && hi < 90.0) {
            return Err(Error::Validation(format!(
                "angle grid {lo}..={hi} step {step} must satisfy 0 <= min <= max < 90, step > 0"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let mut grid = SweepGrid {
            theta_i_deg: (0..=n).map(|i| lo + i as f64 * step).collect(),
            thickness_m: self.thickness_m,
            ..SweepGrid::default()
        };
        if let Some(t) = self.thickness_m {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Range {
                    field: "thickness_m".into(),
                    value: t,
                    expected: "> 0",
                });
            }
        }
        if !(self.wedge_step_deg > 0.0) {
            return Err(Error::Range {
                field: "wedge_step_deg".into(),
                value: self.wedge_step_deg,
                expected: "> 0",
            });
        }
        let w = &mut grid.wedge;
        w.n_values = self.wedge_n.clone();
        w.step_deg = self.wedge_step_deg;
        w.pole_band_deg = self.pole_band_deg;
        w.l_dist = self.wedge_distance_m;
        w.beta0 = self.beta0_deg.to_radians();
        w.rot_in = self.rot_in_deg.to_radians();
        w.rot_out = self.rot_out_deg.to_radians();
        Ok(grid)
    }
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub link: Link,
    /// Dataset output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of snapshots.
    #[arg(long, default_value_t = 10)]
    pub n_tti: usize,
    /// Time between snapshots in seconds.
    #[arg(long, default_value_t = 1e-3)]
    pub tti_spacing_s: f64,
    /// Add white Gaussian noise at this mean per-sample SNR.
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Seed of the noise generator.
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    #[command(flatten)]
    pub db: MaterialsArg,
}

#[derive(Debug, Args)]
pub struct ArrayArgs {
    /// Patches of the base-station ULA.
    #[arg(long, default_value_t = 8)]
    pub n_patches: usize,
    /// Patch spacing in metres.
    #[arg(long, default_value_t = 0.0833)]
    pub spacing_m: f64,
    /// Polarizations per patch; elements are ordered polarization-major.
    #[arg(long, default_value_t = 2)]
    pub n_pol: usize,
}

impl ArrayArgs {
    fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            n_patches: self.n_patches,
            spacing_m: self.spacing_m,
            polarizations: vec![FieldPattern::Isotropic; self.n_pol],
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimationArgs {
    /// Delay-grid refinement by zero padding in frequency.
    #[arg(long, default_value_t = 4)]
    pub interp: usize,
    /// Angle grid step over [0, 180] degrees.
    #[arg(long, default_value_t = 0.5)]
    pub angle_step_deg: f64,
    /// Peaks weaker than the strongest by more than this are dropped, dB.
    #[arg(long, default_value_t = 20.0)]
    pub threshold_db: f64,
    /// First TTI of the averaging window.
    #[arg(long)]
    pub tti_start: Option<usize>,
    /// One past the last TTI of the averaging window.
    #[arg(long)]
    pub tti_end: Option<usize>,
}

impl EstimationArgs {
    fn config(&self) -> Result<EstimationConfig> {
        if !(self.threshold_db >= 0.0) {
            return Err(Error::Range {
                field: "threshold_db".into(),
                value: self.threshold_db,
                expected: ">= 0",
            });
        }
        let window = match (self.tti_start, self.tti_end) {
            (None, None) => None,
            (s, e) => Some(s.unwrap_or(0)..e.unwrap_or(usize::MAX)),
        };
        Ok(EstimationConfig {
            interp: self.interp,
            window,
            angle_step_deg: self.angle_step_deg,
            threshold_db: self.threshold_db,
        })
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSON output; CSV twins are written next to it. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub ul: PathBuf,
    #[arg(long)]
    pub dl: PathBuf,
    /// JSON report; CSV twins are written next to it. Stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)
                .and_then(|_| so.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("report serializes");
    s.push(b'\n');
    s
}

/// `dir/stem_suffix.csv` for each table.
fn write_twins(json_out: &Path, tables: Vec<(&'static str, String)>) -> Result<()> {
    let stem = json_out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    for (suffix, body) in tables {
        write_atomic(&json_out.with_file_name(format!("{stem}_{suffix}.csv")), body.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    kind: CoefficientKind,
    f_ul_hz: f64,
    f_dl_hz: f64,
    n_samples: usize,
    n_skipped: usize,
    skipped: &'a [SkippedPoint],
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let db = args.db.load()?;
    let result = coefficient_sweep(&db, args.kind, args.f_ul, args.f_dl, &args.grid()?)?;
    if !result.skipped.is_empty() {
        eprintln!("skipped {} grid points", result.skipped.len());
    }
    let mut csv = Vec::new();
    write_sweep_csv(&result, &mut csv).map_err(|e| Error::io("<buffer>", e))?;
    if let Some(meta) = &args.meta {
        let m = SweepMeta {
            kind: args.kind,
            f_ul_hz: args.f_ul,
            f_dl_hz: args.f_dl,
            n_samples: result.samples.len(),
            n_skipped: result.skipped.len(),
            skipped: &result.skipped,
        };
        write_atomic(meta, &to_json(&m))?;
    }
    emit(args.out.as_deref(), &csv)
}

fn synthesize(args: &SynthesizeArgs) -> Result<()> {
    let db = args.db.load()?;
    let scenario = parse_scenario(&args.scenario, &db)?;
    let noise = args.snr_db.map(|snr_db| NoiseSpec {
        snr_db,
        seed: args.noise_seed,
    });
    let ds = synthesize_cir(
        &scenario,
        scenario.carrier(args.link),
        args.n_tti,
        args.tti_spacing_s,
        noise,
    )?;
    write_dataset(&ds, &args.out)
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let ds = read_dataset(&args.dataset)?;
    let e = estimate_dataset(&ds, &args.array.geometry(), &args.estimation.config()?)?;
    if let Some(out) = &args.out {
        write_twins(out, estimate_csvs(&e))?;
    }
    emit(args.out.as_deref(), &to_json(&e))
}

fn compare(args: &CompareArgs) -> Result<()> {
    let ul = read_dataset(&args.ul)?;
    let dl = read_dataset(&args.dl)?;
    let r = reciprocity_report(&ul, &dl, &args.array.geometry(), &args.estimation.config()?)?;
    if r.unmatched.delay_s.ul.len() + r.unmatched.delay_s.dl.len() > 0
        || r.unmatched.angle_deg.ul.len() + r.unmatched.angle_deg.dl.len() > 0
    {
        eprintln!("some peaks had no counterpart on the other link; see \"unmatched\"");
    }
    if let Some(out) = &args.out {
        write_twins(out, report_csvs(&r))?;
    }
    emit(args.out.as_deref(), &to_json(&r))
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Materials {
            action: MaterialsAction::List { db, out },
        } => {
            let mut json = db.load()?.to_json().into_bytes();
            json.push(b'\n');
            emit(out.as_deref(), &json)
        }
        Command::Sweep(a) => sweep(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
