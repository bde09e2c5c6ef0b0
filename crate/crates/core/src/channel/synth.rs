use std::f64::consts::TAU;

use ndarray::{Array2, Array3, Axis};
use num_complex::{Complex32, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::array::ArrayGeometry;
use super::path::{gain_with_matrix, MultipathComponent, PathRecord};
use crate::error::{Error, Result};
use crate::io::Scenario;
use crate::SPEED_OF_LIGHT;

/// Complex channel impulse responses `h(t, m, tau)` at one carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDataset {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tap_spacing_s: f64,
    /// Set when `tap_spacing_s` is not `1 / bandwidth_hz`.
    pub interpolated_grid: bool,
    /// Shape `(n_tti, n_ant, n_taps)`.
    pub samples: Array3<Complex32>,
}

impl ChannelDataset {
    /// Builds a dataset on the native `1 / bandwidth` tap grid.
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, samples: Array3<Complex32>) -> Result<Self> {
        let ds = ChannelDataset {
            carrier_hz,
            bandwidth_hz,
            tap_spacing_s: 1.0 / bandwidth_hz,
            interpolated_grid: false,
            samples,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_tti(&self) -> usize {
        self.samples.dim().0
    }

    pub fn n_ant(&self) -> usize {
        self.samples.dim().1
    }

    pub fn n_taps(&self) -> usize {
        self.samples.dim().2
    }

    pub fn validate(&self) -> Result<()> {
        let (t, m, k) = self.samples.dim();
        if t == 0 || m == 0 || k == 0 {
            return Err(Error::Validation(format!(
                "dataset dimensions must be positive, got {t}x{m}x{k}"
            )));
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tap_spacing_s", self.tap_spacing_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Range {
                    field: name.into(),
                    value: v,
                    expected: "> 0",
                });
            }
        }
        if !self.interpolated_grid {
            let native = 1.0 / self.bandwidth_hz;
            if ((self.tap_spacing_s - native) / native).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "tap spacing {} s differs from 1/bandwidth without the interpolated-grid flag",
                    self.tap_spacing_s
                )));
            }
        }
        if self.samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("dataset samples"));
        }
        Ok(())
    }
}

/// Additive white Gaussian noise at a fixed mean SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Per-element field patterns of an array, evaluated toward `(el, az)`.
fn element_patterns(arr: &ArrayGeometry, el: f64, az: f64) -> Vec<[f64; 2]> {
    arr.polarizations.iter().map(|p| p.evaluate(el, az)).collect()
}

/// Narrowband dual-polarized channel matrix at frequency `f_hz` and time
/// `t_s`, receiver `rx` (rows, angles of arrival) and transmitter `tx`
/// (columns, angles of departure).
pub fn narrowband_channel_matrix(
    paths: &[MultipathComponent],
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    f_hz: f64,
    t_s: f64,
) -> Result<Array2<Complex64>> {
    rx.validate()?;
    tx.validate()?;
    let (m, n) = (rx.n_patches, tx.n_patches);
    let mut h = Array2::<Complex64>::zeros((rx.n_elements(), tx.n_elements()));
    let inv_lambda = f_hz / SPEED_OF_LIGHT;

    for path in paths {
        let a = path.depolarization(f_hz)?;
        let phasor = Complex64::from_polar(1.0, -TAU * f_hz * path.delay_s())
            * Complex64::from_polar(1.0, TAU * inv_lambda * path.doppler_speed_mps * t_s);
        let a_rx = rx.patch_phases(ArrayGeometry::cone_angle(path.aoa_el, path.aoa_az), f_hz);
        let a_tx = tx.patch_phases(ArrayGeometry::cone_angle(path.aod_el, path.aod_az), f_hz);
        let f_rx = element_patterns(rx, path.aoa_el, path.aoa_az);
        let f_tx = element_patterns(tx, path.aod_el, path.aod_az);

        for (p, fr) in f_rx.iter().enumerate() {
            for (q, ft) in f_tx.iter().enumerate() {
                let alpha = gain_with_matrix(&a, *fr, *ft, path.power_scale) * phasor;
                for (i, ar) in a_rx.iter().enumerate() {
                    for (j, at) in a_tx.iter().enumerate() {
                        h[[p * m + i, q * n + j]] += alpha * ar * at;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Carrier-resolved per-path summary.
pub fn path_records(scenario: &Scenario, carrier_hz: f64) -> Result<Vec<PathRecord>> {
    scenario
        .paths
        .iter()
        .map(|p| {
            Ok(PathRecord {
                delay_s: p.delay_s(),
                aoa_az: p.aoa_az,
                aoa_el: p.aoa_el,
                aod_az: p.aod_az,
                aod_el: p.aod_el,
                doppler_speed_mps: p.doppler_speed_mps,
                depolarization: p.depolarization(carrier_hz)?,
            })
        })
        .collect()
}

/// Signed subcarrier index of FFT bin `b` out of `k`.
fn subcarrier_offset(b: usize, k: usize) -> f64 {
    if b < k.div_ceil(2) {
        b as f64
    } else {
        b as f64 - k as f64
    }
}

/// Wideband base-station impulse responses for `n_tti` snapshots.
///
/// The narrowband model is evaluated on `n_taps` subcarriers spanning the
/// scenario bandwidth around `carrier_hz` and transformed to `n_taps` delay
/// taps spaced `1 / bandwidth`. The UE side must be a single element.
pub fn synthesize_cir(
    scenario: &Scenario,
    carrier_hz: f64,
    n_tti: usize,
    tti_spacing_s: f64,
    noise: Option<NoiseSpec>,
) -> Result<ChannelDataset> {
    scenario.validate()?;
    if n_tti == 0 {
        return Err(Error::Validation("n_tti must be >= 1".into()));
    }
    if !(tti_spacing_s >= 0.0 && tti_spacing_s.is_finite()) {
        return Err(Error::Range {
            field: "tti_spacing_s".into(),
            value: tti_spacing_s,
            expected: ">= 0",
        });
    }
    let bs = &scenario.bs_array;
    let ue = &scenario.ue_array;
    if ue.n_elements() != 1 {
        return Err(Error::Validation(
            "wideband synthesis needs a single-element UE antenna".into(),
        ));
    }
    let k = scenario.n_taps;
    let n_ant = bs.n_elements();
    let n_pol = bs.polarizations.len();
    let df = scenario.bandwidth_hz / k as f64;
    let freqs: Vec<f64> = (0..k)
        .map(|b| carrier_hz + subcarrier_offset(b, k) * df)
        .collect();

    // response[l][b][element] with the Doppler term factored out
    let mut responses = Vec::with_capacity(scenario.paths.len());
    for path in &scenario.paths {
        let theta = ArrayGeometry::cone_angle(path.aoa_el, path.aoa_az);
        let f_bs = element_patterns(bs, path.aoa_el, path.aoa_az);
        let f_ue = ue.polarizations[0].evaluate(path.aod_el, path.aod_az);
        let mut per_bin = Vec::with_capacity(k);
        for &f in &freqs {
            let a = path.depolarization(f)?;
            let delay = Complex64::from_polar(1.0, -TAU * f * path.delay_s());
            let steer = bs.patch_phases(theta, f);
            let mut col = Vec::with_capacity(n_ant);
            for fr in &f_bs {
                let alpha = gain_with_matrix(&a, *fr, f_ue, path.power_scale) * delay;
                col.extend(steer.iter().map(|s| alpha * s));
            }
            per_bin.push(col);
        }
        responses.push(per_bin);
    }
    debug_assert_eq!(n_pol * bs.n_patches, n_ant);

    let inv_lambda = carrier_hz / SPEED_OF_LIGHT;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(k);
    let blocks: Vec<Array2<Complex32>> = (0..n_tti)
        .into_par_iter()
        .map(|t| {
            let t_s = t as f64 * tti_spacing_s;
            let doppler: Vec<Complex64> = scenario
                .paths
                .iter()
                .map(|p| Complex64::from_polar(1.0, TAU * inv_lambda * p.doppler_speed_mps * t_s))
                .collect();
            let mut block = Array2::<Complex32>::zeros((n_ant, k));
            let mut buf = vec![Complex64::new(0.0, 0.0); k];
            for m in 0..n_ant {
                for (b, slot) in buf.iter_mut().enumerate() {
                    *slot = responses
                        .iter()
                        .zip(&doppler)
                        .map(|(r, d)| r[b][m] * d)
                        .sum();
                }
                ifft.process(&mut buf);
                for (tap, z) in buf.iter().enumerate() {
                    let z = z / k as f64;
                    block[[m, tap]] = Complex32::new(z.re as f32, z.im as f32);
                }
            }
            block
        })
        .collect();

    let mut samples = Array3::<Complex32>::zeros((n_tti, n_ant, k));
    for (t, block) in blocks.into_iter().enumerate() {
        samples.index_axis_mut(Axis(0), t).assign(&block);
    }

    if let Some(spec) = noise {
        add_noise(&mut samples, spec)?;
    }
    ChannelDataset::new(carrier_hz, scenario.bandwidth_hz, samples)
}

fn add_noise(samples: &mut Array3<Complex32>, spec: NoiseSpec) -> Result<()> {
    if !spec.snr_db.is_finite() {
        return Err(Error::NonFinite("snr_db"));
    }
    let mean_power = samples.iter().map(|z| f64::from(z.norm_sqr())).sum::<f64>()
        / samples.len() as f64;
    let sigma = (mean_power / 10f64.powf(spec.snr_db / 10.0) / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::NonFinite("noise sigma"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for z in samples.iter_mut() {
        z.re += normal.sample(&mut rng) as f32;
        z.im += normal.sample(&mut rng) as f32;
    }
    Ok(())
}
