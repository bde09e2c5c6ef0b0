use std::fmt::Write as _;
use std::ops::Range;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::analysis::EmpiricalCdf;
use crate::channel::{steering_vector, ArrayGeometry, ChannelDataset};
use crate::error::{Error, Result};

/// Sampled non-negative power over a strictly increasing location grid.
pub trait Profile {
    fn locations(&self) -> &[f64];
    fn powers(&self) -> &[f64];
}

/// Averaged power delay profile; `power` sums to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayProfile {
    pub taus: Vec<f64>,
    pub power: Vec<f64>,
}

impl Profile for DelayProfile {
    fn locations(&self) -> &[f64] {
        &self.taus
    }
    fn powers(&self) -> &[f64] {
        &self.power
    }
}

/// Bartlett power angle spectrum over cone angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSpectrum {
    pub thetas: Vec<f64>,
    pub power: Vec<f64>,
}

impl Profile for AngleSpectrum {
    fn locations(&self) -> &[f64] {
        &self.thetas
    }
    fn powers(&self) -> &[f64] {
        &self.power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub index: usize,
    pub location: f64,
    pub rel_power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.location).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub ul: f64,
    pub dl: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PeakMatching {
    /// In order of ascending distance.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_ul: Vec<f64>,
    pub unmatched_dl: Vec<f64>,
}

impl PeakMatching {
    pub fn deltas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.delta).collect()
    }
}

fn check_window(ds: &ChannelDataset, window: &Range<usize>) -> Result<()> {
    if window.is_empty() || window.end > ds.n_tti() {
        return Err(Error::Validation(format!(
            "TTI window {}..{} must be non-empty and within 0..{}",
            window.start,
            window.end,
            ds.n_tti()
        )));
    }
    Ok(())
}

/// Zero-pads the spectrum of `taps` to `interp` times its length and
/// returns the squared magnitude of the resulting impulse response.
fn interpolated_power(taps: &mut [Complex64], interp: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let k = taps.len();
    if interp == 1 {
        return taps.iter().map(|z| z.norm_sqr()).collect();
    }
    planner.plan_fft_forward(k).process(taps);
    let n = k * interp;
    let mut padded = vec![Complex64::new(0.0, 0.0); n];
    let pos = k.div_ceil(2);
    padded[..pos].copy_from_slice(&taps[..pos]);
    padded[n - (k - pos)..].copy_from_slice(&taps[pos..]);
    planner.plan_fft_inverse(n).process(&mut padded);
    padded.iter().map(|z| z.norm_sqr()).collect()
}

/// Averaged power delay profile over the TTIs in `window`.
///
/// Each antenna's profile is normalized to unit energy before averaging over
/// antennas, then over the window. With `interp > 1` every profile is first
/// resampled on a grid `interp` times finer by zero padding in frequency.
pub fn apdp(ds: &ChannelDataset, window: Range<usize>, interp: usize) -> Result<DelayProfile> {
    check_window(ds, &window)?;
    if interp == 0 {
        return Err(Error::Validation("interpolation factor must be >= 1".into()));
    }
    let (m, k) = (ds.n_ant(), ds.n_taps());
    let n = k * interp;
    let mut planner = FftPlanner::new();
    let mut acc = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for t in window.clone() {
        for a in 0..m {
            for (slot, z) in buf.iter_mut().zip(ds.samples.slice(ndarray::s![t, a, ..])) {
                *slot = Complex64::new(z.re.into(), z.im.into());
            }
            let p = interpolated_power(&mut buf, interp, &mut planner);
            let total: f64 = p.iter().sum();
            if total == 0.0 {
                return Err(Error::AllZeroAntenna { antenna: a });
            }
            for (s, v) in acc.iter_mut().zip(&p) {
                *s += v / total;
            }
        }
    }
    let scale = (m * window.len()) as f64;
    let mut power: Vec<f64> = acc.iter().map(|v| v / scale).collect();
    // remove the residual rounding so the profile is a distribution
    let sum: f64 = power.iter().sum();
    power.iter_mut().for_each(|v| *v /= sum);
    let dt = ds.tap_spacing_s / interp as f64;
    Ok(DelayProfile {
        taus: (0..n).map(|i| i as f64 * dt).collect(),
        power,
    })
}

/// Wideband covariance `(1/S) sum h h^H` over every (TTI, tap) snapshot.
///
/// Accumulation is sequential; the lower triangle is the conjugate of the
/// upper one, so the result is exactly Hermitian.
pub fn sample_covariance(ds: &ChannelDataset) -> Array2<Complex64> {
    let (t_n, m, k) = ds.samples.dim();
    let mut r = Array2::<Complex64>::zeros((m, m));
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    for t in 0..t_n {
        for tap in 0..k {
            for (a, slot) in h.iter_mut().enumerate() {
                let z = ds.samples[[t, a, tap]];
                *slot = Complex64::new(z.re.into(), z.im.into());
            }
            for i in 0..m {
                for j in i..m {
                    r[[i, j]] += h[i] * h[j].conj();
                }
            }
        }
    }
    let s = (t_n * k) as f64;
    for i in 0..m {
        r[[i, i]] = Complex64::new(r[[i, i]].re / s, 0.0);
        for j in i + 1..m {
            let v = r[[i, j]] / s;
            r[[i, j]] = v;
            r[[j, i]] = v.conj();
        }
    }
    r
}

/// Uniform grid over [0, 180] degrees in radians.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0 && step_deg <= 180.0) {
        return Err(Error::Range {
            field: "angle_step_deg".into(),
            value: step_deg,
            expected: "(0, 180]",
        });
    }
    let n = (180.0 / step_deg + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| (i as f64 * step_deg).to_radians()).collect())
}

/// Bartlett spectrum `|a(theta)^H R a(theta)|` on `theta_grid`.
pub fn bpas(r: &Array2<Complex64>, arr: &ArrayGeometry, f_hz: f64, theta_grid: &[f64]) -> Result<AngleSpectrum> {
    arr.validate()?;
    let n = arr.n_elements();
    if r.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{} but the array has {n} elements",
            r.nrows(),
            r.ncols()
        )));
    }
    if theta_grid.is_empty() {
        return Err(Error::EmptyInput("angle grid"));
    }
    if theta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("angle grid must be strictly increasing".into()));
    }
    let power = theta_grid
        .iter()
        .map(|&theta| {
            let a = steering_vector(arr, theta, f_hz);
            let mut q = Complex64::new(0.0, 0.0);
            for (i, ai) in a.iter().enumerate() {
                let row: Complex64 = a.iter().enumerate().map(|(j, aj)| r[[i, j]] * aj).sum();
                q += ai.conj() * row;
            }
            q.norm()
        })
        .collect();
    Ok(AngleSpectrum {
        thetas: theta_grid.to_vec(),
        power,
    })
}

/// Interior local maxima no more than `threshold_db` below the strongest.
///
/// A bin is a maximum when it exceeds its left neighbor and the first
/// differing bin to its right; a plateau is reported at its leftmost bin.
/// The first and last bins are never peaks.
pub fn extract_peaks<P: Profile + ?Sized>(profile: &P, threshold_db: f64) -> PeakSet {
    let p = profile.powers();
    let loc = profile.locations();
    let mut candidates = Vec::new();
    let mut i = 1;
    while i + 1 < p.len() {
        if p[i] > p[i - 1] {
            let mut j = i + 1;
            while j < p.len() && p[j] == p[i] {
                j += 1;
            }
            if j < p.len() && p[j] < p[i] {
                candidates.push(i);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let Some(reference) = candidates.iter().map(|&i| p[i]).reduce(f64::max) else {
        return PeakSet::default();
    };
    let peaks = candidates
        .into_iter()
        .map(|i| Peak {
            index: i,
            location: loc[i],
            rel_power_db: 10.0 * (p[i] / reference).log10(),
        })
        .filter(|pk| pk.rel_power_db >= -threshold_db)
        .collect();
    PeakSet { peaks }
}

/// Greedy one-to-one pairing by ascending location distance.
///
/// Ties are broken by UL index, then DL index.
pub fn match_peaks(ul: &PeakSet, dl: &PeakSet) -> PeakMatching {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(ul.len() * dl.len());
    for (i, u) in ul.peaks.iter().enumerate() {
        for (j, d) in dl.peaks.iter().enumerate() {
            cand.push(((u.location - d.location).abs(), i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_ul = vec![false; ul.len()];
    let mut used_dl = vec![false; dl.len()];
    let mut pairs = Vec::new();
    for (delta, i, j) in cand {
        if !used_ul[i] && !used_dl[j] {
            used_ul[i] = true;
            used_dl[j] = true;
            pairs.push(MatchedPair {
                ul: ul.peaks[i].location,
                dl: dl.peaks[j].location,
                delta,
            });
        }
    }
    let unmatched = |set: &PeakSet, used: &[bool]| {
        set.peaks
            .iter()
            .zip(used)
            .filter(|(_, u)| !**u)
            .map(|(p, _)| p.location)
            .collect()
    };
    PeakMatching {
        unmatched_ul: unmatched(ul, &used_ul),
        unmatched_dl: unmatched(dl, &used_dl),
        pairs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub interp: usize,
    /// `None` averages over every TTI.
    pub window: Option<Range<usize>>,
    pub angle_step_deg: f64,
    pub threshold_db: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            interp: 4,
            window: None,
            angle_step_deg: 0.5,
            threshold_db: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMeta {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tap_spacing_s: f64,
    pub n_tti: usize,
    pub n_ant: usize,
    pub n_taps: usize,
}

impl DatasetMeta {
    fn of(ds: &ChannelDataset) -> Self {
        DatasetMeta {
            carrier_hz: ds.carrier_hz,
            bandwidth_hz: ds.bandwidth_hz,
            tap_spacing_s: ds.tap_spacing_s,
            n_tti: ds.n_tti(),
            n_ant: ds.n_ant(),
            n_taps: ds.n_taps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayPoint {
    pub tau_s: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnglePoint {
    pub theta_deg: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub x: f64,
    pub f: f64,
}

/// Delay peaks in seconds and angle peaks in degrees for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSummary {
    pub delay_s: PeakSet,
    pub angle_deg: PeakSet,
}

/// Estimates for a single dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetEstimate {
    pub meta: DatasetMeta,
    pub apdp: Vec<DelayPoint>,
    pub bpas: Vec<AnglePoint>,
    pub peaks: PeakSummary,
}

pub fn estimate_dataset(ds: &ChannelDataset, arr: &ArrayGeometry, cfg: &EstimationConfig) -> Result<DatasetEstimate> {
    if ds.n_ant() != arr.n_elements() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} antennas but the array has {}",
            ds.n_ant(),
            arr.n_elements()
        )));
    }
    let window = cfg.window.clone().unwrap_or(0..ds.n_tti());
    let delay = apdp(ds, window, cfg.interp)?;
    let r = sample_covariance(ds);
    let angle = bpas(&r, arr, ds.carrier_hz, &angle_grid(cfg.angle_step_deg)?)?;

    let delay_peaks = extract_peaks(&delay, cfg.threshold_db);
    let mut angle_peaks = extract_peaks(&angle, cfg.threshold_db);
    for p in &mut angle_peaks.peaks {
        p.location = p.location.to_degrees();
    }
    Ok(DatasetEstimate {
        meta: DatasetMeta::of(ds),
        apdp: delay
            .taus
            .iter()
            .zip(&delay.power)
            .map(|(&tau_s, &p)| DelayPoint { tau_s, p })
            .collect(),
        bpas: angle
            .thetas
            .iter()
            .zip(&angle.power)
            .map(|(&t, &p)| AnglePoint {
                theta_deg: t.to_degrees(),
                p,
            })
            .collect(),
        peaks: PeakSummary {
            delay_s: delay_peaks,
            angle_deg: angle_peaks,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPair<T> {
    pub ul: T,
    pub dl: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unmatched {
    pub delay_s: LinkPair<Vec<f64>>,
    pub angle_deg: LinkPair<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub n_delay_pairs: usize,
    pub n_angle_pairs: usize,
    pub max_delay_diff_s: Option<f64>,
    pub max_angle_diff_deg: Option<f64>,
}

/// UL/DL comparison of two datasets seen by the same array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReciprocityReport {
    pub ul_meta: DatasetMeta,
    pub dl_meta: DatasetMeta,
    pub apdp: LinkPair<Vec<DelayPoint>>,
    pub bpas: LinkPair<Vec<AnglePoint>>,
    pub peaks: LinkPair<PeakSummary>,
    pub delay_matches: Vec<MatchedPair>,
    pub angle_matches: Vec<MatchedPair>,
    pub delay_diff_cdf: Vec<CdfPoint>,
    pub angle_diff_cdf: Vec<CdfPoint>,
    pub unmatched: Unmatched,
    pub summary: ReportSummary,
}

impl ReciprocityReport {
    pub fn delay_diffs_s(&self) -> Vec<f64> {
        self.delay_matches.iter().map(|m| m.delta).collect()
    }

    pub fn angle_diffs_deg(&self) -> Vec<f64> {
        self.angle_matches.iter().map(|m| m.delta).collect()
    }
}

fn cdf_points(values: Vec<f64>) -> Result<Vec<CdfPoint>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    Ok(EmpiricalCdf::new(values)?
        .points()
        .into_iter()
        .map(|(x, f)| CdfPoint { x, f })
        .collect())
}

/// Runs the estimators on both datasets, each with its own carrier in the
/// steering vector, and matches delay and angle peaks across the links.
pub fn reciprocity_report(
    ul: &ChannelDataset,
    dl: &ChannelDataset,
    arr: &ArrayGeometry,
    cfg: &EstimationConfig,
) -> Result<ReciprocityReport> {
    if ul.n_ant() != dl.n_ant() {
        return Err(Error::DimensionMismatch(format!(
            "UL has {} antennas, DL has {}",
            ul.n_ant(),
            dl.n_ant()
        )));
    }
    let (eu, ed) = rayon::join(|| estimate_dataset(ul, arr, cfg), || estimate_dataset(dl, arr, cfg));
    let (eu, ed) = (eu?, ed?);
    let dm = match_peaks(&eu.peaks.delay_s, &ed.peaks.delay_s);
    let am = match_peaks(&eu.peaks.angle_deg, &ed.peaks.angle_deg);
    let max = |v: Vec<f64>| v.into_iter().reduce(f64::max);
    Ok(ReciprocityReport {
        ul_meta: eu.meta,
        dl_meta: ed.meta,
        apdp: LinkPair { ul: eu.apdp, dl: ed.apdp },
        bpas: LinkPair { ul: eu.bpas, dl: ed.bpas },
        peaks: LinkPair { ul: eu.peaks, dl: ed.peaks },
        delay_diff_cdf: cdf_points(dm.deltas())?,
        angle_diff_cdf: cdf_points(am.deltas())?,
        summary: ReportSummary {
            n_delay_pairs: dm.pairs.len(),
            n_angle_pairs: am.pairs.len(),
            max_delay_diff_s: max(dm.deltas()),
            max_angle_diff_deg: max(am.deltas()),
        },
        unmatched: Unmatched {
            delay_s: LinkPair {
                ul: dm.unmatched_ul,
                dl: dm.unmatched_dl,
            },
            angle_deg: LinkPair {
                ul: am.unmatched_ul,
                dl: am.unmatched_dl,
            },
        },
        delay_matches: dm.pairs,
        angle_matches: am.pairs,
    })
}

fn csv<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn peak_rows(out: &mut Vec<String>, link: &str, peaks: &PeakSummary) {
    for (domain, set) in [("delay_s", &peaks.delay_s), ("angle_deg", &peaks.angle_deg)] {
        for p in &set.peaks {
            out.push(format!("{link},{domain},{},{}", p.location, p.rel_power_db));
        }
    }
}

/// CSV tables of a single-dataset estimate, keyed by file suffix.
pub fn estimate_csvs(e: &DatasetEstimate) -> Vec<(&'static str, String)> {
    let mut peaks = Vec::new();
    peak_rows(&mut peaks, "-", &e.peaks);
    vec![
        ("apdp", csv("tau_s,p", e.apdp.iter().map(|d| format!("{},{}", d.tau_s, d.p)))),
        ("bpas", csv("theta_deg,p", e.bpas.iter().map(|a| format!("{},{}", a.theta_deg, a.p)))),
        ("peaks", csv("link,domain,location,rel_power_db", peaks)),
    ]
}

/// CSV tables of a comparison report, keyed by file suffix.
pub fn report_csvs(r: &ReciprocityReport) -> Vec<(&'static str, String)> {
    let tagged = |link: &'static str, v: &'static str| move |s: String| format!("{link},{s}{v}");
    let apdp = r
        .apdp
        .ul
        .iter()
        .map(|d| format!("{},{}", d.tau_s, d.p))
        .map(tagged("ul", ""))
        .chain(r.apdp.dl.iter().map(|d| format!("{},{}", d.tau_s, d.p)).map(tagged("dl", "")));
    let bpas = r
        .bpas
        .ul
        .iter()
        .map(|a| format!("{},{}", a.theta_deg, a.p))
        .map(tagged("ul", ""))
        .chain(r.bpas.dl.iter().map(|a| format!("{},{}", a.theta_deg, a.p)).map(tagged("dl", "")));
    let mut peaks = Vec::new();
    peak_rows(&mut peaks, "ul", &r.peaks.ul);
    peak_rows(&mut peaks, "dl", &r.peaks.dl);
    let matches = r
        .delay_matches
        .iter()
        .map(|m| ("delay_s", m))
        .chain(r.angle_matches.iter().map(|m| ("angle_deg", m)))
        .map(|(d, m)| format!("{d},{},{},{}", m.ul, m.dl, m.delta));
    let mut unmatched = String::from("domain,link,location\n");
    for (domain, pair) in [("delay_s", &r.unmatched.delay_s), ("angle_deg", &r.unmatched.angle_deg)] {
        for (link, v) in [("ul", &pair.ul), ("dl", &pair.dl)] {
            for x in v {
                let _ = writeln!(unmatched, "{domain},{link},{x}");
            }
        }
    }
    let cdf = |v: &[CdfPoint]| csv("delta,cdf", v.iter().map(|p| format!("{},{}", p.x, p.f)));
    vec![
        ("apdp", csv("link,tau_s,p", apdp)),
        ("bpas", csv("link,theta_deg,p", bpas)),
        ("peaks", csv("link,domain,location,rel_power_db", peaks)),
        ("matches", csv("domain,ul,dl,delta", matches)),
        ("unmatched", unmatched),
        ("delay_diff_cdf", cdf(&r.delay_diff_cdf)),
        ("angle_diff_cdf", cdf(&r.angle_diff_cdf)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FieldPattern;
    use crate::SPEED_OF_LIGHT;
    use ndarray::Array3;
    use num_complex::Complex32;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ds(samples: Array3<Complex32>) -> ChannelDataset {
        ChannelDataset::new(1.8e9, 10e6, samples).unwrap()
    }

    fn c32(re: f32) -> Complex32 {
        Complex32::new(re, 0.0)
    }

    struct Raw(Vec<f64>, Vec<f64>);
    impl Profile for Raw {
        fn locations(&self) -> &[f64] {
            &self.0
        }
        fn powers(&self) -> &[f64] {
            &self.1
        }
    }

    fn raw(p: Vec<f64>) -> Raw {
        Raw((0..p.len()).map(|i| i as f64).collect(), p)
    }

    fn db(x: f64) -> f64 {
        10f64.powf(x / 10.0)
    }

    #[test]
    fn apdp_single_tap() {
        let mut s = Array3::zeros((1, 3, 8));
        for a in 0..3 {
            s[[0, a, 5]] = Complex32::new(0.3, -1.0 * a as f32 - 0.1);
        }
        let p = apdp(&ds(s), 0..1, 1).unwrap();
        assert_eq!(p.power[5], 1.0);
        assert_eq!(p.power.iter().sum::<f64>(), 1.0);
        assert!((p.taus[5] - 5e-7).abs() < 1e-20);
    }

    #[test]
    fn apdp_equal_taps() {
        let mut s = Array3::zeros((1, 1, 2));
        s[[0, 0, 0]] = c32(2f32.sqrt());
        s[[0, 0, 1]] = Complex32::new(0.0, 2f32.sqrt());
        assert_eq!(apdp(&ds(s), 0..1, 1).unwrap().power, vec![0.5, 0.5]);
    }

    #[test]
    fn apdp_normalizes_each_antenna_first() {
        let mut s = Array3::zeros((1, 2, 2));
        s[[0, 0, 0]] = c32(10.0);
        s[[0, 1, 1]] = c32(0.01);
        assert_eq!(apdp(&ds(s), 0..1, 1).unwrap().power, vec![0.5, 0.5]);
    }

    #[test]
    fn apdp_errors() {
        let mut s = Array3::zeros((2, 2, 4));
        s[[0, 0, 0]] = c32(1.0);
        s[[1, 0, 0]] = c32(1.0);
        s[[1, 1, 0]] = c32(1.0);
        let d = ds(s);
        assert!(matches!(apdp(&d, 0..2, 1), Err(Error::AllZeroAntenna { antenna: 1 })));
        assert!(apdp(&d, 1..2, 1).is_ok());
        assert!(apdp(&d, 1..1, 1).is_err());
        assert!(apdp(&d, 0..3, 1).is_err());
        assert!(apdp(&d, 1..2, 0).is_err());
    }

    #[test]
    fn interpolated_apdp_keeps_tap_location() {
        let mut s = Array3::zeros((1, 1, 16));
        s[[0, 0, 3]] = c32(1.0);
        let p = apdp(&ds(s), 0..1, 4).unwrap();
        assert_eq!(p.power.len(), 64);
        let argmax = (0..64).max_by(|&a, &b| p.power[a].total_cmp(&p.power[b])).unwrap();
        assert_eq!(argmax, 12);
        assert!((p.taus[12] - 3e-7).abs() < 1e-18);
        assert!((p.power.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_examples() {
        let v = [Complex32::new(1.0, 2.0), Complex32::new(-0.5, 0.25), Complex32::new(0.0, -1.0)];
        let mut s = Array3::zeros((1, 3, 1));
        for (a, z) in v.iter().enumerate() {
            s[[0, a, 0]] = *z;
        }
        let r = sample_covariance(&ds(s));
        for i in 0..3 {
            for j in 0..3 {
                let want = Complex64::new(v[i].re.into(), v[i].im.into())
                    * Complex64::new(v[j].re.into(), v[j].im.into()).conj();
                assert!((r[[i, j]] - want).norm() < 1e-15);
            }
        }
        // rank one: every 2x2 minor vanishes
        let minor = r[[0, 0]] * r[[1, 1]] - r[[0, 1]] * r[[1, 0]];
        assert!(minor.norm() < 1e-12);

        let mut s = Array3::zeros((1, 4, 2));
        s[[0, 0, 0]] = c32(1.0);
        s[[0, 1, 1]] = c32(1.0);
        let r = sample_covariance(&ds(s));
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && i < 2 { 0.5 } else { 0.0 };
                assert_eq!(r[[i, j]], Complex64::new(want, 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn covariance_is_exactly_hermitian(vals in proptest::collection::vec(-5.0f32..5.0, 2 * 3 * 4 * 2)) {
            let s = Array3::from_shape_fn((2, 4, 3), |(t, a, k)| {
                let i = 2 * (t * 12 + a * 3 + k);
                Complex32::new(vals[i], vals[i + 1])
            });
            let r = sample_covariance(&ds(s));
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert_eq!(r[[i, j]], r[[j, i]].conj());
                }
            }
        }
    }

    fn half_wave(f: f64) -> ArrayGeometry {
        ArrayGeometry {
            n_patches: 8,
            spacing_m: SPEED_OF_LIGHT / f / 2.0,
            polarizations: vec![FieldPattern::Slant(PI / 4.0), FieldPattern::Slant(-PI / 4.0)],
        }
    }

    /// Independent steering model: element `p*8 + m` sees phase
    /// `-pi m cos(theta)` on a half-wave array.
    fn oracle_steer(theta: f64) -> Vec<Complex64> {
        (0..16)
            .map(|e| Complex64::from_polar(1.0, -PI * (e % 8) as f64 * theta.cos()))
            .collect()
    }

    fn outer(vs: &[(f64, Vec<Complex64>)]) -> Array2<Complex64> {
        Array2::from_shape_fn((16, 16), |(i, j)| vs.iter().map(|(w, v)| *w * v[i] * v[j].conj()).sum())
    }

    fn oracle_bpas(r: &Array2<Complex64>, theta: f64) -> f64 {
        let a = oracle_steer(theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                acc += a[i].conj() * r[[i, j]] * a[j];
            }
        }
        acc.norm()
    }

    #[test]
    fn identity_spectrum_is_flat() {
        let f = 1.8e9;
        let r = Array2::from_diag(&ndarray::Array1::from_elem(16, Complex64::new(1.0, 0.0)));
        let s = bpas(&r, &half_wave(f), f, &angle_grid(0.5).unwrap()).unwrap();
        assert_eq!(s.thetas.len(), 361);
        assert!(s.power.iter().all(|p| (p - 16.0).abs() < 1e-9));
    }

    #[test]
    fn single_path_broadside() {
        let f = 1.8e9;
        let r = outer(&[(1.0, oracle_steer(PI / 2.0))]);
        let s = bpas(&r, &half_wave(f), f, &angle_grid(0.5).unwrap()).unwrap();
        let pk = extract_peaks(&s, 20.0);
        assert_eq!(pk.peaks.iter().find(|p| p.rel_power_db == 0.0).unwrap().location, PI / 2.0);
        for (t, p) in s.thetas.iter().zip(&s.power) {
            assert!((p - oracle_bpas(&r, *t)).abs() < 1e-9 * 256.0);
        }
    }

    #[test]
    fn two_separated_paths_resolved() {
        let f = 1.8e9;
        let r = outer(&[
            (1.0, oracle_steer(60f64.to_radians())),
            (1.0, oracle_steer(120f64.to_radians())),
        ]);
        let s = bpas(&r, &half_wave(f), f, &angle_grid(0.5).unwrap()).unwrap();
        let pk = extract_peaks(&s, 3.0);
        let locs: Vec<f64> = pk.peaks.iter().map(|p| p.location.to_degrees()).collect();
        assert_eq!(locs.len(), 2, "{locs:?}");
        assert!((locs[0] - 60.0).abs() <= 1.0);
        assert!((locs[1] - 120.0).abs() <= 1.0);
    }

    #[test]
    fn bpas_dimension_mismatch() {
        let r = Array2::<Complex64>::zeros((4, 4));
        assert!(matches!(
            bpas(&r, &ArrayGeometry::default_bs(), 1.8e9, &[0.0, 1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn bpas_argmax_tracks_single_path(theta0 in 30.0f64..150.0) {
            let f = 1.8e9;
            let r = outer(&[(1.0, oracle_steer(theta0.to_radians()))]);
            let grid = angle_grid(0.5).unwrap();
            let s = bpas(&r, &half_wave(f), f, &grid).unwrap();
            let best = (0..grid.len()).max_by(|&a, &b| s.power[a].total_cmp(&s.power[b])).unwrap();
            let nearest = (theta0 / 0.5).round() as usize;
            prop_assert!(best.abs_diff(nearest) <= 1, "best {} nearest {}", best, nearest);
        }

        #[test]
        fn bpas_argmax_is_scale_invariant(theta0 in 20.0f64..160.0, c in 1e-3f64..1e3) {
            let f = 1.9e9;
            let arr = half_wave(1.8e9);
            let grid = angle_grid(1.0).unwrap();
            let r = outer(&[(1.0, oracle_steer(theta0.to_radians())), (0.3, oracle_steer(0.4))]);
            let a = bpas(&r, &arr, f, &grid).unwrap();
            let b = bpas(&r.mapv(|z| z * c), &arr, f, &grid).unwrap();
            let argmax = |s: &AngleSpectrum| (0..grid.len()).max_by(|&i, &j| s.power[i].total_cmp(&s.power[j])).unwrap();
            prop_assert_eq!(argmax(&a), argmax(&b));
        }
    }

    #[test]
    fn peak_threshold_example() {
        let mut p = vec![1e-6; 40];
        p[10] = 1.0;
        p[20] = db(-15.0);
        p[30] = db(-25.0);
        let pk = extract_peaks(&raw(p), 20.0);
        assert_eq!(pk.peaks.iter().map(|p| p.index).collect::<Vec<_>>(), vec![10, 20]);
        assert_eq!(pk.peaks[0].rel_power_db, 0.0);
        assert!((pk.peaks[1].rel_power_db + 15.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_profile_has_no_peaks() {
        let p: Vec<f64> = (0..50).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert!(extract_peaks(&raw(p), 20.0).is_empty());
        assert!(extract_peaks(&raw(vec![1.0; 5]), 20.0).is_empty());
        assert!(extract_peaks(&raw(vec![]), 20.0).is_empty());
    }

    #[test]
    fn twin_maxima_and_plateaus() {
        let pk = extract_peaks(&raw(vec![0.0, 2.0, 0.0, 2.0, 0.0]), 20.0);
        assert_eq!(pk.peaks.iter().map(|p| (p.index, p.rel_power_db)).collect::<Vec<_>>(), vec![(1, 0.0), (3, 0.0)]);
        let pk = extract_peaks(&raw(vec![0.0, 1.0, 3.0, 3.0, 3.0, 1.0]), 20.0);
        assert_eq!(pk.peaks.iter().map(|p| p.index).collect::<Vec<_>>(), vec![2]);
        // a plateau running into the last bin is a boundary, not a peak
        assert!(extract_peaks(&raw(vec![0.0, 1.0, 3.0, 3.0]), 20.0).is_empty());
    }

    proptest! {
        #[test]
        fn peaks_respect_threshold_and_are_idempotent(
            p in proptest::collection::vec(0.0f64..1.0, 3..80),
            thr in 1.0f64..40.0,
        ) {
            let prof = raw(p.clone());
            let pk = extract_peaks(&prof, thr);
            for x in &pk.peaks {
                prop_assert!(x.rel_power_db >= -thr && x.rel_power_db <= 0.0);
                prop_assert!(x.index > 0 && x.index + 1 < p.len());
            }
            if !pk.is_empty() {
                prop_assert!(pk.peaks.iter().any(|x| x.rel_power_db == 0.0));
            }
            let mut rebuilt = vec![0.0; p.len()];
            for x in &pk.peaks {
                rebuilt[x.index] = p[x.index];
            }
            let again = extract_peaks(&raw(rebuilt), thr);
            prop_assert_eq!(again, pk);
        }
    }

    fn set(locs: &[f64]) -> PeakSet {
        PeakSet {
            peaks: locs
                .iter()
                .enumerate()
                .map(|(index, &location)| Peak {
                    index,
                    location,
                    rel_power_db: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn matching_examples() {
        let a = set(&[1.0, 5.0, 9.0]);
        let m = match_peaks(&a, &a);
        assert!(m.deltas().iter().all(|d| *d == 0.0));
        assert_eq!(m.pairs.len(), 3);
        assert!(m.unmatched_ul.is_empty() && m.unmatched_dl.is_empty());

        let m = match_peaks(&set(&[10e-9]), &set(&[12e-9, 500e-9]));
        assert_eq!(m.pairs.len(), 1);
        assert!((m.pairs[0].delta - 2e-9).abs() < 1e-21);
        assert_eq!(m.unmatched_dl, vec![500e-9]);

        let m = match_peaks(&set(&[]), &set(&[1.0, 2.0]));
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_dl, vec![1.0, 2.0]);
    }

    #[test]
    fn two_element_case_agrees_with_exhaustive_pairing() {
        // every one-to-one assignment of ul {10} into dl {12, 500}
        let (ul, dl): ([f64; 1], [f64; 2]) = ([10e-9], [12e-9, 500e-9]);
        let best = dl
            .iter()
            .map(|d| (ul[0] - d).abs())
            .fold(f64::INFINITY, f64::min);
        let m = match_peaks(&set(&ul), &set(&dl));
        assert_eq!(m.pairs[0].delta, best);
    }

    proptest! {
        #[test]
        fn matching_counts(u in proptest::collection::vec(0.0f64..100.0, 0..8),
                           d in proptest::collection::vec(0.0f64..100.0, 0..8)) {
            let m = match_peaks(&set(&u), &set(&d));
            prop_assert_eq!(m.pairs.len(), u.len().min(d.len()));
            prop_assert_eq!(m.pairs.len() + m.unmatched_ul.len(), u.len());
            prop_assert_eq!(m.pairs.len() + m.unmatched_dl.len(), d.len());
            prop_assert!(m.deltas().iter().all(|x| *x >= 0.0));
            prop_assert!(m.deltas().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    fn two_path_dataset() -> ChannelDataset {
        let arr = ArrayGeometry::default_bs();
        let f = 1.8e9;
        let a1 = steering_vector(&arr, 70f64.to_radians(), f);
        let a2 = steering_vector(&arr, 110f64.to_radians(), f);
        let mut s = Array3::zeros((2, 16, 32));
        for t in 0..2 {
            for m in 0..16 {
                let z1 = a1[m];
                let z2 = a2[m] * 0.5;
                s[[t, m, 3]] = Complex32::new(z1.re as f32, z1.im as f32);
                s[[t, m, 9]] = Complex32::new(z2.re as f32, z2.im as f32);
            }
        }
        ChannelDataset::new(f, 10e6, s).unwrap()
    }

    #[test]
    fn self_comparison_is_all_zero() {
        let d = two_path_dataset();
        let r = reciprocity_report(&d, &d, &ArrayGeometry::default_bs(), &EstimationConfig::default()).unwrap();
        assert!(r.summary.n_delay_pairs >= 2);
        assert!(r.summary.n_angle_pairs >= 2);
        assert!(r.delay_diff_cdf.iter().all(|p| p.x == 0.0));
        assert!(r.angle_diff_cdf.iter().all(|p| p.x == 0.0));
        assert_eq!(r.delay_diff_cdf.last().unwrap().f, 1.0);
        assert_eq!(r.summary.max_delay_diff_s, Some(0.0));
    }

    #[test]
    fn estimate_finds_both_paths() {
        let d = two_path_dataset();
        let e = estimate_dataset(&d, &ArrayGeometry::default_bs(), &EstimationConfig::default()).unwrap();
        let delays = e.peaks.delay_s.locations();
        assert!(delays.iter().any(|t| (t - 3e-7).abs() < 1e-12), "{delays:?}");
        assert!(delays.iter().any(|t| (t - 9e-7).abs() < 1e-12), "{delays:?}");
        let angles = e.peaks.angle_deg.locations();
        assert!(angles.iter().any(|a| (a - 70.0).abs() <= 0.5), "{angles:?}");
        assert!(angles.iter().any(|a| (a - 110.0).abs() <= 0.5), "{angles:?}");
    }

    #[test]
    fn report_rejects_mismatched_arrays() {
        let d = two_path_dataset();
        assert!(matches!(
            estimate_dataset(&d, &ArrayGeometry::single_dipole(), &EstimationConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
        let small = ChannelDataset::new(1.9e9, 10e6, Array3::from_elem((1, 2, 4), c32(1.0))).unwrap();
        assert!(reciprocity_report(&d, &small, &ArrayGeometry::default_bs(), &EstimationConfig::default()).is_err());
    }

    #[test]
    fn csv_twins_have_headers() {
        let d = two_path_dataset();
        let r = reciprocity_report(&d, &d, &ArrayGeometry::default_bs(), &EstimationConfig::default()).unwrap();
        let tables = report_csvs(&r);
        assert_eq!(tables.len(), 7);
        let apdp = &tables[0].1;
        assert!(apdp.starts_with("link,tau_s,p\nul,0,"));
        assert_eq!(apdp.lines().count(), 1 + 2 * 128);
    }
}
