//! Time-domain back-projection of one Tx/Rx pair.
//!
//! Each pixel `p` accumulates, over the pair's channels in record order,
//! `y(tau(p)) * exp(+j 2 pi f0 tau(p))` where `tau(p)` is the channel's
//! bistatic delay to `p`. Clock errors are not compensated.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{fuse_coherent, FusionWeights};
use crate::geom::Vec2;
use crate::scene::{ImageGrid, PointTarget, Scenario};
use crate::synth::{synthesize, SignalRecord, SynthConfig};
use crate::wavenumber::{coverage_region, predicted_resolution};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionKind {
    Incoherent,
    Coherent,
}

/// Where an image came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    /// Back-projection of Tx terminal `tx` and Rx terminal `rx`.
    Pair { tx: usize, rx: usize },
    Fused { mode: FusionKind },
    Synthetic,
}

impl Provenance {
    /// `pair:l-k`, `fused:inc`, `fused:coh` or `synthetic`.
    pub fn label(&self) -> String {
        match self {
            Provenance::Pair { tx, rx } => format!("pair:{tx}-{rx}"),
            Provenance::Fused { mode: FusionKind::Incoherent } => "fused:inc".into(),
            Provenance::Fused { mode: FusionKind::Coherent } => "fused:coh".into(),
            Provenance::Synthetic => "synthetic".into(),
        }
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            Provenance::Pair { tx, rx } => Some((tx, rx)),
            _ => None,
        }
    }
}

/// Complex image; `pixels[[iy, ix]]` is the value at `grid.position(ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    pub grid: ImageGrid,
    pub pixels: Array2<Complex64>,
    pub provenance: Provenance,
}

impl ComplexImage {
    pub fn zeros(grid: ImageGrid, provenance: Provenance) -> Self {
        Self {
            grid,
            pixels: Array2::zeros((grid.ny(), grid.nx())),
            provenance,
        }
    }

    /// Image whose pixel `(ix, iy)` is `f(position)`.
    pub fn from_fn(grid: ImageGrid, provenance: Provenance, mut f: impl FnMut(Vec2) -> Complex64) -> Self {
        let pixels = Array2::from_shape_fn((grid.ny(), grid.nx()), |(iy, ix)| f(grid.position(ix, iy)));
        Self { grid, pixels, provenance }
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.pixels[[iy, ix]]
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.pixels.mapv(|z| z.norm())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            pixels: self.pixels.mapv(|z| z * c),
            provenance: self.provenance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Windowed sinc over `2 * half_taps` samples.
    Sinc { half_taps: usize },
}

impl Interpolation {
    pub const DEFAULT_SINC: Interpolation = Interpolation::Sinc { half_taps: 16 };

    fn eval(&self, rec: &SignalRecord, t: f64) -> Option<Complex64> {
        match *self {
            Interpolation::Linear => rec.interp_linear(t),
            Interpolation::Sinc { half_taps } => rec.interp_sinc(t, half_taps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BackprojectOptions {
    pub interpolation: Interpolation,
    /// Worker threads; `None` uses the global pool. Results do not depend on
    /// this setting.
    pub workers: Option<usize>,
}

/// Back-projects the records of one Tx/Rx pair with linear interpolation.
pub fn backproject(records: &[SignalRecord], scenario: &Scenario, grid: &ImageGrid) -> Result<ComplexImage> {
    backproject_with(records, scenario, grid, &BackprojectOptions::default())
}

pub fn backproject_with(
    records: &[SignalRecord],
    scenario: &Scenario,
    grid: &ImageGrid,
    opts: &BackprojectOptions,
) -> Result<ComplexImage> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let (tx, rx) = first.channel.pair();
    if records.iter().any(|r| r.channel.pair() != (tx, rx)) {
        return Err(Error::MixedPairs);
    }
    let tx_t = scenario
        .terminals
        .get(tx)
        .ok_or_else(|| Error::InvalidArgument(format!("no terminal at index {tx}")))?;
    let rx_t = scenario
        .terminals
        .get(rx)
        .ok_or_else(|| Error::InvalidArgument(format!("no terminal at index {rx}")))?;
    for r in records {
        if r.channel.tx_el >= tx_t.tx_elements.len() || r.channel.rx_el >= rx_t.rx_elements.len() {
            return Err(Error::InvalidArgument(format!("channel {} has no element in the scenario", r.channel)));
        }
    }

    // Distances are shared by all channels using an element; compute each
    // once per pixel.
    let tx_els = &tx_t.tx_elements;
    let rx_els = &rx_t.rx_elements;
    let f0 = scenario.f0;
    let nx = grid.nx();

    let pixel = |idx: usize| -> Result<Complex64> {
        let (ix, iy) = (idx % nx, idx / nx);
        let p = grid.position(ix, iy);
        let d_tx: Vec<f64> = tx_els.iter().map(|&e| p.distance(e)).collect();
        let d_rx: Vec<f64> = rx_els.iter().map(|&e| e.distance(p)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for rec in records {
            let tau = (d_tx[rec.channel.tx_el] + d_rx[rec.channel.rx_el]) / SPEED_OF_LIGHT;
            let y = opts.interpolation.eval(rec, tau).ok_or(Error::DelayOutsideWindow {
                ix,
                iy,
                channel: rec.channel,
                delay: tau,
            })?;
            acc += y * Complex64::from_polar(1.0, 2.0 * PI * f0 * tau);
        }
        Ok(acc)
    };

    let run = || -> Vec<Result<Complex64>> { (0..grid.len()).into_par_iter().map(pixel).collect() };
    let values = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let pixels = Array2::from_shape_vec((grid.ny(), nx), values).expect("pixel count matches grid");
    Ok(ComplexImage {
        grid: *grid,
        pixels,
        provenance: Provenance::Pair { tx, rx },
    })
}

/// One image per active pair, in association-matrix order.
pub fn image_all_pairs(
    records: &[SignalRecord],
    scenario: &Scenario,
    grid: &ImageGrid,
    opts: &BackprojectOptions,
) -> Result<Vec<ComplexImage>> {
    let mut by_pair: BTreeMap<(usize, usize), Vec<SignalRecord>> = BTreeMap::new();
    for r in records {
        by_pair.entry(r.channel.pair()).or_default().push(r.clone());
    }
    scenario
        .pairing
        .active_pairs()
        .into_iter()
        .filter_map(|pair| by_pair.remove(&pair))
        .map(|recs| backproject_with(&recs, scenario, grid, opts))
        .collect()
}

/// Noiseless point-spread response of `scenario`'s active pairs for a unit
/// probe at `target`: synthesis, per-pair back-projection and coherent
/// fusion with uniform weights.
///
/// The scenario's own targets and noise are replaced by the probe.
pub fn point_spread(scenario: &Scenario, target: Vec2, grid: &ImageGrid) -> Result<ComplexImage> {
    point_spread_with(scenario, target, grid, None, &BackprojectOptions::default())
}

/// [`point_spread`] with explicit fusion weights (aligned with the active
/// pairs) and back-projection options.
pub fn point_spread_with(
    scenario: &Scenario,
    target: Vec2,
    grid: &ImageGrid,
    weights: Option<&FusionWeights>,
    opts: &BackprojectOptions,
) -> Result<ComplexImage> {
    let images = pair_point_spreads(scenario, target, grid, opts)?;
    let uniform;
    let w = match weights {
        Some(w) => w,
        None => {
            uniform = FusionWeights::uniform(images.len());
            &uniform
        }
    };
    fuse_coherent(&images, w)
}

/// Per-pair noiseless images of a unit probe at `target`.
pub fn pair_point_spreads(
    scenario: &Scenario,
    target: Vec2,
    grid: &ImageGrid,
    opts: &BackprojectOptions,
) -> Result<Vec<ComplexImage>> {
    let mut probe = scenario.clone().with_targets(vec![PointTarget::unit(target)]);
    probe.noise_power = 0.0;
    let cfg = SynthConfig::covering(&probe, Some(grid));
    let records = synthesize(&probe, &cfg)?;
    image_all_pairs(&records, &probe, grid, opts)
}

/// Grid with spacing `min(rho_x, rho_y) / 4` from the predicted resolution
/// of the scenario, covering the targets' bounding box plus `margin` meters.
pub fn default_grid(scenario: &Scenario, margin: f64) -> Result<ImageGrid> {
    let targets: Vec<Vec2> = scenario.targets.iter().map(|t| t.position).collect();
    if targets.is_empty() {
        return Err(Error::InvalidArgument("scenario has no targets to frame".into()));
    }
    let (mut lo, mut hi) = (targets[0], targets[0]);
    for p in &targets {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let center = (lo + hi) * 0.5;
    let est = predicted_resolution(&coverage_region(scenario, center, 16, false)?);
    let rho = est.rho_x.min(est.rho_y);
    if !rho.is_finite() {
        return Err(Error::InvalidArgument("scenario coverage predicts no resolution".into()));
    }
    let d = rho / 4.0;
    let half = ((hi.x - lo.x) / 2.0 + margin, (hi.y - lo.y) / 2.0 + margin);
    ImageGrid::covering(center, half, (d, d))
}
