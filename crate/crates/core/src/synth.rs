//! Forward model: range-compressed complex baseband records for every active
//! measurement channel.
//!
//! A target at delay `tau` on a channel with clock error `dt` contributes
//! `beta * sinc(B (t - tau - dt)) * exp(-j 2 pi f0 (tau + dt))`, the
//! matched-filter output of a flat-spectrum pulse of bandwidth `B`. Noise is
//! circular complex Gaussian with variance `noise_power` per sample, drawn
//! from a stream seeded by the scenario seed and the channel id.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scene::{ImageGrid, Scenario};
use crate::SPEED_OF_LIGHT;

/// Measurement channel: Tx terminal `tx`, Rx terminal `rx` (indices into the
/// scenario's terminal list), Tx element `tx_el` of `tx` and Rx element
/// `rx_el` of `rx`. Displayed as `l-k-n-m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ChannelId {
    pub tx: usize,
    pub rx: usize,
    pub tx_el: usize,
    pub rx_el: usize,
}

impl ChannelId {
    pub const fn new(tx: usize, rx: usize, tx_el: usize, rx_el: usize) -> Self {
        Self { tx, rx, tx_el, rx_el }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.tx, self.rx)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}-{}", self.tx, self.rx, self.tx_el, self.rx_el)
    }
}

/// Uniformly sampled complex record of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub channel: ChannelId,
    /// Time of the first sample, s.
    pub t0: f64,
    /// Complex sampling rate, Hz.
    pub fs: f64,
    pub samples: Vec<Complex64>,
}

impl SignalRecord {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t_end()
    }

    /// Linear interpolation between the two neighbouring samples; `None`
    /// outside the record.
    pub fn interp_linear(&self, t: f64) -> Option<Complex64> {
        if !self.contains(t) {
            return None;
        }
        let pos = (t - self.t0) * self.fs;
        let i = pos.floor() as usize;
        let last = self.samples.len() - 1;
        if i >= last {
            return Some(self.samples[last]);
        }
        let frac = pos - i as f64;
        Some(self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac)
    }

    /// Lanczos-windowed sinc interpolation over `2 * half_taps` samples.
    /// Samples beyond the record ends count as zero.
    pub fn interp_sinc(&self, t: f64, half_taps: usize) -> Option<Complex64> {
        if !self.contains(t) {
            return None;
        }
        let pos = (t - self.t0) * self.fs;
        let base = pos.floor() as i64;
        let a = half_taps.max(1) as f64;
        let n = self.samples.len() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (base - half_taps as i64 + 1)..=(base + half_taps as i64) {
            if i < 0 || i >= n {
                continue;
            }
            let x = pos - i as f64;
            acc += self.samples[i as usize] * (sinc(x) * sinc(x / a));
        }
        Some(acc)
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Compressed pulse shape. Only the band-limited sinc is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PulseModel {
    BandLimitedSinc { bandwidth: f64 },
}

impl PulseModel {
    /// Compressed response at lag `t`, unit peak at `t = 0`.
    pub fn response(&self, t: f64) -> f64 {
        match *self {
            PulseModel::BandLimitedSinc { bandwidth } => sinc(bandwidth * t),
        }
    }

    pub fn bandwidth(&self) -> f64 {
        match *self {
            PulseModel::BandLimitedSinc { bandwidth } => bandwidth,
        }
    }
}

/// Two-way delay Tx element -> target -> Rx element, s.
pub fn bistatic_delay(tx_el: Vec2, rx_el: Vec2, target: Vec2) -> f64 {
    (target.distance(tx_el) + rx_el.distance(target)) / SPEED_OF_LIGHT
}

/// How the scattering amplitude of a channel is derived from the target
/// reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RcsMode {
    /// Geometric losses neglected: the amplitude is the reflectivity.
    #[default]
    Lossless,
    /// Amplitude scaled by `1 / (R_tx R_rx)`.
    PathLoss,
}

pub fn apply_rcs(path_tx: f64, path_rx: f64, reflectivity: Complex64, mode: RcsMode) -> Complex64 {
    match mode {
        RcsMode::Lossless => reflectivity,
        RcsMode::PathLoss => reflectivity / (path_tx * path_rx),
    }
}

/// Acquisition window and sampling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// `(t_min, t_max)`, s.
    pub window: (f64, f64),
    /// Complex sampling rate, Hz.
    pub fs: f64,
    pub rcs: RcsMode,
}

/// Default oversampling factor `fs / B`. Linear interpolation of a sinc
/// sampled at `q` samples per `1/B` loses up to `pi^2 / (24 q^2)` of the
/// amplitude, 0.4% at `q = 10`.
pub const DEFAULT_OVERSAMPLING: f64 = 10.0;

/// Response support kept on each side of a delay, in units of `1/B`.
pub const WINDOW_MARGIN: f64 = 4.0;

impl SynthConfig {
    pub fn new(window: (f64, f64), fs: f64) -> Self {
        Self {
            window,
            fs,
            rcs: RcsMode::Lossless,
        }
    }

    /// Window covering every target delay and every delay of the pixels of
    /// `grid` on the active channels, with the response margin on both sides;
    /// `fs` is the default oversampling of the scenario bandwidth.
    pub fn covering(scenario: &Scenario, grid: Option<&ImageGrid>) -> Self {
        let (lo, hi) = bounding_box(scenario, grid);
        let mut t_min = f64::INFINITY;
        let mut t_max = f64::NEG_INFINITY;
        for (l, k) in scenario.pairing.active_pairs() {
            let dt = scenario.sync_error(l, k);
            for &tx in &scenario.terminals[l].tx_elements {
                for &rx in &scenario.terminals[k].rx_elements {
                    let near = (box_min_distance(tx, lo, hi) + box_min_distance(rx, lo, hi)) / SPEED_OF_LIGHT;
                    let far = (box_max_distance(tx, lo, hi) + box_max_distance(rx, lo, hi)) / SPEED_OF_LIGHT;
                    t_min = t_min.min(near + dt.min(0.0));
                    t_max = t_max.max(far + dt.max(0.0));
                }
            }
        }
        let b = scenario.bandwidth;
        let margin = 2.0 * WINDOW_MARGIN / b;
        if !t_min.is_finite() {
            t_min = 0.0;
            t_max = 0.0;
        }
        let fs = DEFAULT_OVERSAMPLING * b;
        // Anchor the window on the sampling lattice so windows, and hence
        // sample instants, do not depend on the scene extent.
        let t0 = ((t_min - margin).max(0.0) * fs).floor() / fs;
        Self::new((t0, t_max + margin), fs)
    }
}

fn bounding_box(scenario: &Scenario, grid: Option<&ImageGrid>) -> (Vec2, Vec2) {
    let mut pts: Vec<Vec2> = scenario.targets.iter().map(|t| t.position).collect();
    if let Some(g) = grid {
        let (a, b) = g.bounds();
        pts.push(a);
        pts.push(b);
    }
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.is_finite() {
        return (Vec2::ZERO, Vec2::ZERO);
    }
    (lo, hi)
}

fn box_min_distance(p: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    let q = Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
    p.distance(q)
}

fn box_max_distance(p: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    [lo, hi, Vec2::new(lo.x, hi.y), Vec2::new(hi.x, lo.y)]
        .iter()
        .map(|c| p.distance(*c))
        .fold(0.0, f64::max)
}

/// Records for every active channel, in association-matrix order and then
/// Tx element (outer) and Rx element (inner).
pub fn synthesize(scenario: &Scenario, config: &SynthConfig) -> Result<Vec<SignalRecord>> {
    let channels: Vec<ChannelId> = scenario
        .pairing
        .active_pairs()
        .into_iter()
        .flat_map(|(l, k)| pair_channels(scenario, l, k))
        .collect();
    synthesize_channels(scenario, config, &channels)
}

/// Records of the channels of one Tx/Rx terminal pair.
pub fn synthesize_pair(scenario: &Scenario, tx: usize, rx: usize, config: &SynthConfig) -> Result<Vec<SignalRecord>> {
    if !scenario.pairing.get(tx, rx) {
        return Err(Error::InactiveChannel { tx, rx });
    }
    synthesize_channels(scenario, config, &pair_channels(scenario, tx, rx))
}

fn pair_channels(scenario: &Scenario, l: usize, k: usize) -> Vec<ChannelId> {
    let n_tx = scenario.terminals[l].tx_elements.len();
    let n_rx = scenario.terminals[k].rx_elements.len();
    (0..n_tx)
        .flat_map(|n| (0..n_rx).map(move |m| ChannelId::new(l, k, n, m)))
        .collect()
}

fn synthesize_channels(scenario: &Scenario, config: &SynthConfig, channels: &[ChannelId]) -> Result<Vec<SignalRecord>> {
    let (t_min, t_max) = config.window;
    let b = scenario.bandwidth;
    if !(config.fs >= b) || !config.fs.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {} Hz is below the bandwidth {} Hz",
            config.fs, b
        )));
    }
    if !(t_max > t_min) {
        return Err(Error::InvalidArgument("empty acquisition window".into()));
    }
    let n_samples = ((t_max - t_min) * config.fs).floor() as usize + 1;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("window holds fewer than two samples".into()));
    }
    channels
        .par_iter()
        .map(|&ch| synthesize_channel(scenario, config, ch, n_samples))
        .collect()
}

fn synthesize_channel(scenario: &Scenario, config: &SynthConfig, ch: ChannelId, n_samples: usize) -> Result<SignalRecord> {
    let (t_min, t_max) = config.window;
    let tx_t = &scenario.terminals[ch.tx];
    let rx_t = &scenario.terminals[ch.rx];
    let tx = tx_t.tx_elements[ch.tx_el];
    let rx = rx_t.rx_elements[ch.rx_el];
    let dt = scenario.sync_error(ch.tx, ch.rx);
    let b = scenario.bandwidth;
    let pulse = PulseModel::BandLimitedSinc { bandwidth: b };
    let margin = WINDOW_MARGIN / b;
    let mut samples = vec![Complex64::new(0.0, 0.0); n_samples];

    for target in &scenario.targets {
        let delay = bistatic_delay(tx, rx, target.position) + dt;
        if delay - margin < t_min || delay + margin > t_max {
            return Err(Error::WindowTooShort {
                channel: ch,
                delay,
                t_min,
                t_max,
            });
        }
        let beta = apply_rcs(
            target.position.distance(tx_t.phase_center),
            rx_t.phase_center.distance(target.position),
            target.reflectivity,
            config.rcs,
        );
        let amp = beta * Complex64::from_polar(1.0, -2.0 * PI * scenario.f0 * delay);
        for (i, s) in samples.iter_mut().enumerate() {
            let t = t_min + i as f64 / config.fs;
            *s += amp * pulse.response(t - delay);
        }
    }

    if scenario.noise_power > 0.0 {
        let sigma = (scenario.noise_power / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(channel_seed(scenario.seed, ch));
        for s in samples.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    }

    Ok(SignalRecord {
        channel: ch,
        t0: t_min,
        fs: config.fs,
        samples,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise stream seed of a channel.
pub fn channel_seed(seed: u64, ch: ChannelId) -> u64 {
    [ch.tx, ch.rx, ch.tx_el, ch.rx_el]
        .iter()
        .fold(splitmix64(seed), |h, &v| splitmix64(h ^ v as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{AssociationMatrix, PointTarget, Terminal};

    const F0: f64 = 28e9;
    const B: f64 = 500e6;
    const TARGET: Vec2 = Vec2::new(0.0, 20.0);

    fn mono(targets: Vec<PointTarget>) -> Scenario {
        Scenario::new(vec![Terminal::monostatic(0, Vec2::ZERO)], targets, F0, B)
    }

    #[test]
    fn delays() {
        let d = bistatic_delay(Vec2::ZERO, Vec2::ZERO, TARGET);
        assert!((d - 1.3333e-7).abs() < 1e-11);
        assert_eq!(bistatic_delay(TARGET, TARGET, TARGET), 0.0);
        let (a, b) = (Vec2::new(-3.0, 1.0), Vec2::new(5.0, -2.0));
        assert_eq!(bistatic_delay(a, b, TARGET), bistatic_delay(b, a, TARGET));
    }

    #[test]
    fn rcs_modes() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(apply_rcs(20.0, 20.0, one, RcsMode::Lossless), one);
        assert!((apply_rcs(20.0, 20.0, one, RcsMode::PathLoss) - 2.5e-3).norm() < 1e-15);
        assert_eq!(apply_rcs(20.0, 20.0, Complex64::new(0.0, 0.0), RcsMode::PathLoss).norm(), 0.0);
    }

    #[test]
    fn peak_value_and_phase() {
        let s = mono(vec![PointTarget::unit(TARGET)]);
        let tau = bistatic_delay(Vec2::ZERO, Vec2::ZERO, TARGET);
        // Put a sample exactly on tau.
        let fs = 4.0 * B;
        let cfg = SynthConfig::new((tau - 100.0 / fs, tau + 100.0 / fs), fs);
        let rec = &synthesize(&s, &cfg).unwrap()[0];
        let (imax, peak) = rec
            .samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(imax, 100);
        assert!((peak.norm() - 1.0).abs() < 1e-9);
        let expect = Complex64::from_polar(1.0, -2.0 * PI * F0 * tau);
        assert!((peak - expect).norm() < 1e-6);
    }

    #[test]
    fn empty_scene_is_silent() {
        let s = mono(vec![]);
        let cfg = SynthConfig::new((1e-7, 2e-7), 2e9);
        assert!(synthesize(&s, &cfg).unwrap()[0].samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sync_error_shifts_and_rotates() {
        let t0 = Terminal::monostatic(0, Vec2::new(-1.0, 0.0));
        let t1 = Terminal::monostatic(1, Vec2::new(1.0, 0.0));
        let mut s = Scenario::new(vec![t0, t1], vec![PointTarget::unit(TARGET)], F0, B);
        let mut p = AssociationMatrix::zeros(2);
        p.set(0, 1, true);
        s.pairing = p;
        let tau = bistatic_delay(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), TARGET);
        let fs = 1e10;
        let cfg = SynthConfig::new((tau - 200.0 / fs, tau + 200.0 / fs), fs);
        let clean = &synthesize(&s, &cfg).unwrap()[0];
        s.sync_errors[0][1] = 1e-9;
        let late = &synthesize(&s, &cfg).unwrap()[0];
        // 1 ns is exactly 10 samples at 10 GHz.
        let rot = Complex64::from_polar(1.0, -2.0 * PI * F0 * 1e-9);
        for i in 0..300 {
            let expect = clean.samples[i] * rot;
            assert!((late.samples[i + 10] - expect).norm() < 1e-9, "{i}");
        }
    }

    #[test]
    fn short_window_is_rejected() {
        let s = mono(vec![PointTarget::unit(TARGET)]);
        let tau = bistatic_delay(Vec2::ZERO, Vec2::ZERO, TARGET);
        let cfg = SynthConfig::new((tau - 1.0 / B, tau + 10.0 / B), 4.0 * B);
        assert!(matches!(synthesize(&s, &cfg), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn inactive_pair_is_rejected() {
        let s = crate::presets::five_terminal_line(B);
        let cfg = SynthConfig::covering(&s, None);
        assert!(matches!(
            synthesize_pair(&s, 0, 1, &cfg),
            Err(Error::InactiveChannel { tx: 0, rx: 1 })
        ));
    }

    #[test]
    fn linearity() {
        let a = PointTarget::unit(TARGET);
        let b = PointTarget {
            position: Vec2::new(0.4, 20.7),
            reflectivity: Complex64::new(0.3, -0.8),
        };
        let t = Terminal::ula(0, Vec2::ZERO, 2, 3, 0.01, Vec2::new(1.0, 0.0));
        let both = Scenario::new(vec![t.clone()], vec![a, b], F0, B);
        let cfg = SynthConfig::covering(&both, None);
        let ra = synthesize(&both.clone().with_targets(vec![a]), &cfg).unwrap();
        let rb = synthesize(&both.clone().with_targets(vec![b]), &cfg).unwrap();
        let rab = synthesize(&both, &cfg).unwrap();
        for ((x, y), z) in ra.iter().zip(&rb).zip(&rab) {
            for i in 0..z.samples.len() {
                assert!((x.samples[i] + y.samples[i] - z.samples[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_statistics() {
        let mut s = mono(vec![]);
        s.noise_power = 2.5;
        s.seed = 11;
        let cfg = SynthConfig::new((0.0, 20_000.0 / 1e9), 1e9);
        let rec = &synthesize(&s, &cfg).unwrap()[0];
        let n = rec.samples.len() as f64;
        assert!(n >= 1e4);
        let mean: Complex64 = rec.samples.iter().sum::<Complex64>() / n;
        let var = rec.samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        // Standard error of the mean of each component: sqrt(sigma2 / 2 / n).
        let se_mean = (s.noise_power / 2.0 / n).sqrt();
        assert!(mean.re.abs() < 3.0 * se_mean && mean.im.abs() < 3.0 * se_mean, "{mean}");
        // |z|^2 is exponential with variance sigma2^2.
        let se_var = s.noise_power / n.sqrt();
        assert!((var - s.noise_power).abs() < 3.0 * se_var, "{var}");
    }

    #[test]
    fn channels_get_independent_noise_and_runs_repeat() {
        let mut s = Scenario::new(
            vec![Terminal::ula(0, Vec2::ZERO, 1, 2, 0.01, Vec2::new(1.0, 0.0))],
            vec![PointTarget::unit(TARGET)],
            F0,
            B,
        );
        s.noise_power = 1.0;
        s.seed = 3;
        let cfg = SynthConfig::covering(&s, None);
        let r1 = synthesize(&s, &cfg).unwrap();
        let r2 = synthesize(&s, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_ne!(r1[0].samples, r1[1].samples);
        s.seed = 4;
        assert_ne!(synthesize(&s, &cfg).unwrap()[0].samples, r1[0].samples);
    }

    #[test]
    fn channel_display() {
        assert_eq!(ChannelId::new(1, 2, 0, 13).to_string(), "1-2-0-13");
    }

    #[test]
    fn interpolation_accuracy() {
        // Linear interpolation error bound at the default oversampling.
        let s = mono(vec![PointTarget::unit(TARGET)]);
        let cfg = SynthConfig::covering(&s, None);
        let rec = &synthesize(&s, &cfg).unwrap()[0];
        let tau = bistatic_delay(Vec2::ZERO, Vec2::ZERO, TARGET);
        let mut worst_lin = 0.0f64;
        let mut worst_sinc = 0.0f64;
        for j in 0..50 {
            let t = tau + (j as f64 / 50.0) / cfg.fs;
            let truth = Complex64::from_polar(sinc(B * (t - tau)), -2.0 * PI * F0 * tau);
            worst_lin = worst_lin.max((rec.interp_linear(t).unwrap() - truth).norm());
            worst_sinc = worst_sinc.max((rec.interp_sinc(t, 16).unwrap() - truth).norm());
        }
        assert!(worst_lin < 0.005, "{worst_lin}");
        assert!(worst_sinc < 1e-3, "{worst_sinc}");
        assert!(rec.interp_linear(rec.t0 - 1e-12).is_none());
    }
}
