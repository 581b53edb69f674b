//! Image-quality measurements: resolution, PSLR, ISLR and peak SNR.
//!
//! Resolution is the -3 dB full width of the cut through the peak divided by
//! 0.886, the -3 dB width of a sinc of unit Rayleigh width, so measured
//! values compare directly with `2 pi / dk` predictions. The mainlobe region
//! used by PSLR and ISLR is the ellipse of semi-axes `1.5 rho` around the
//! peak.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::imaging::ComplexImage;

/// -3 dB width of `|sinc(x / w)|` in units of `w`.
pub const SINC_3DB_WIDTH: f64 = 0.886;
/// Mainlobe ellipse semi-axes in units of the measured resolution.
pub const MAINLOBE_SCALE: f64 = 1.5;
/// Background pixels lie farther than this many resolution cells from the
/// truth position.
pub const BACKGROUND_CELLS: f64 = 10.0;
pub const MIN_BACKGROUND: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Global magnitude maximum with sub-pixel refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub ix: usize,
    pub iy: usize,
    /// Pixel value at the maximum.
    pub value: Complex64,
    /// Position refined by parabolic fits of the log-magnitude.
    pub position: Vec2,
    /// Magnitude refined the same way.
    pub magnitude: f64,
}

/// Parabola through `(-1, a), (0, b), (1, c)`: vertex offset and height.
fn parabola(a: f64, b: f64, c: f64) -> (f64, f64) {
    let den = a - 2.0 * b + c;
    if !(den < 0.0) || !a.is_finite() || !c.is_finite() {
        return (0.0, b);
    }
    let d = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
    (d, b - 0.25 * (a - c) * d)
}

fn db(v: f64) -> f64 {
    20.0 * v.log10()
}

fn refine(cut: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= cut.len() {
        return (0.0, db(cut[i]));
    }
    parabola(db(cut[i - 1]), db(cut[i]), db(cut[i + 1]))
}

fn cut(img: &ComplexImage, axis: Axis, ix: usize, iy: usize) -> Vec<f64> {
    match axis {
        Axis::X => img.pixels.row(iy).iter().map(|z| z.norm()).collect(),
        Axis::Y => img.pixels.column(ix).iter().map(|z| z.norm()).collect(),
    }
}

pub fn find_peak(img: &ComplexImage) -> Result<Peak> {
    let mut best = (0usize, 0usize, -1.0f64);
    for ((iy, ix), z) in img.pixels.indexed_iter() {
        let m = z.norm();
        if !m.is_finite() {
            return Err(Error::InvalidArgument("image holds non-finite pixels".into()));
        }
        if m > best.2 {
            best = (ix, iy, m);
        }
    }
    let (ix, iy, m) = best;
    if !(m > 0.0) {
        return Err(Error::InvalidArgument("image is identically zero".into()));
    }
    let (dx, hx) = refine(&cut(img, Axis::X, ix, iy), ix);
    let (dy, hy) = refine(&cut(img, Axis::Y, ix, iy), iy);
    let p = img.grid.position(ix, iy);
    let peak_db = db(m);
    Ok(Peak {
        ix,
        iy,
        value: img.get(ix, iy),
        position: Vec2::new(p.x + dx * img.grid.spacing.0, p.y + dy * img.grid.spacing.1),
        magnitude: 10f64.powf((peak_db + (hx - peak_db) + (hy - peak_db)) / 20.0),
    })
}

/// Resolution along `axis`, m.
pub fn measure_resolution(img: &ComplexImage, axis: Axis) -> Result<f64> {
    let peak = find_peak(img)?;
    let (i, spacing) = match axis {
        Axis::X => (peak.ix, img.grid.spacing.0),
        Axis::Y => (peak.iy, img.grid.spacing.1),
    };
    let c = cut(img, axis, peak.ix, peak.iy);
    if i == 0 || i + 1 >= c.len() {
        return Err(Error::PeakOnBoundary);
    }
    let (_, ref_db) = refine(&c, i);
    let thr = 10f64.powf(ref_db / 20.0) / 2f64.sqrt();

    let mut lo = i;
    while lo > 0 && c[lo - 1] >= thr {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < c.len() && c[hi + 1] >= thr {
        hi += 1;
    }
    if (lo == 0 && c[0] >= thr) || (hi + 1 == c.len() && c[hi] >= thr) {
        return Err(Error::MainlobeTruncated);
    }
    let above = hi - lo + 1;
    if above < 3 {
        return Err(Error::MainlobeUnresolved { samples: above });
    }
    let left = (lo - 1) as f64 + (thr - c[lo - 1]) / (c[lo] - c[lo - 1]);
    let right = hi as f64 + (c[hi] - thr) / (c[hi] - c[hi + 1]);
    Ok((right - left) * spacing / SINC_3DB_WIDTH)
}

/// Resolution, or `+inf` when the axis has a single pixel or the mainlobe
/// runs off the grid.
fn resolution_or_unbounded(img: &ComplexImage, axis: Axis) -> Result<f64> {
    let n = match axis {
        Axis::X => img.grid.nx(),
        Axis::Y => img.grid.ny(),
    };
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    match measure_resolution(img, axis) {
        Err(Error::MainlobeTruncated) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Whether each pixel (row-major `[iy][ix]`) lies inside the mainlobe
/// ellipse.
/// A mainlobe narrower than the grid resolves to the peak pixel alone.
fn mainlobe_mask(img: &ComplexImage, peak: &Peak) -> Result<Vec<bool>> {
    let semi = |axis| match resolution_or_unbounded(img, axis) {
        Err(Error::MainlobeUnresolved { .. }) => Ok(0.0),
        other => other.map(|r| MAINLOBE_SCALE * r),
    };
    let (ax, ay) = (semi(Axis::X)?, semi(Axis::Y)?);
    let mut mask = Vec::with_capacity(img.grid.len());
    for iy in 0..img.grid.ny() {
        for ix in 0..img.grid.nx() {
            let d = img.grid.position(ix, iy) - peak.position;
            let r = (d.x / ax).powi(2) + (d.y / ay).powi(2);
            mask.push(r <= 1.0 || (ix, iy) == (peak.ix, peak.iy));
        }
    }
    Ok(mask)
}

fn only_peak_nonzero(img: &ComplexImage, peak: &Peak) -> bool {
    img.pixels
        .indexed_iter()
        .all(|((iy, ix), z)| (ix, iy) == (peak.ix, peak.iy) || z.norm() == 0.0)
}

/// Peak-to-sidelobe ratio, dB. `-inf` when nothing but the peak is nonzero.
pub fn pslr(img: &ComplexImage) -> Result<f64> {
    let peak = find_peak(img)?;
    if only_peak_nonzero(img, &peak) {
        return Ok(f64::NEG_INFINITY);
    }
    let mask = mainlobe_mask(img, &peak)?;
    let outside = img
        .pixels
        .iter()
        .zip(&mask)
        .filter(|(_, &inside)| !inside)
        .map(|(z, _)| z.norm())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let side = outside.ok_or(Error::NoSidelobeRegion)?;
    Ok(db(side / peak.value.norm()))
}

/// Integrated sidelobe ratio, dB. `-inf` when nothing but the peak is
/// nonzero.
pub fn islr(img: &ComplexImage) -> Result<f64> {
    let peak = find_peak(img)?;
    if only_peak_nonzero(img, &peak) {
        return Ok(f64::NEG_INFINITY);
    }
    let mask = mainlobe_mask(img, &peak)?;
    if mask.iter().all(|&m| m) {
        return Err(Error::NoSidelobeRegion);
    }
    let (mut e_in, mut e_out) = (0.0, 0.0);
    for (z, &inside) in img.pixels.iter().zip(&mask) {
        if inside {
            e_in += z.norm_sqr();
        } else {
            e_out += z.norm_sqr();
        }
    }
    Ok(10.0 * (e_out / e_in).log10())
}

/// Peak SNR with the resolution cell measured on the image itself.
pub fn peak_snr(noisy: &ComplexImage, truth_pos: Vec2) -> Result<f64> {
    let cell = (
        resolution_or_unbounded(noisy, Axis::X)?,
        resolution_or_unbounded(noisy, Axis::Y)?,
    );
    peak_snr_with_cell(noisy, truth_pos, cell)
}

/// `|I(truth)|^2` over the variance of the pixels outside the ellipse of
/// semi-axes `10 * cell` around the truth, dB. `+inf` when the background is
/// constant.
pub fn peak_snr_with_cell(noisy: &ComplexImage, truth_pos: Vec2, cell: (f64, f64)) -> Result<f64> {
    let (tx, ty) = noisy.grid.nearest(truth_pos).ok_or(Error::OutsideGrid)?;
    let (ax, ay) = (BACKGROUND_CELLS * cell.0, BACKGROUND_CELLS * cell.1);
    let mut bg = Vec::new();
    for ((iy, ix), z) in noisy.pixels.indexed_iter() {
        let d = noisy.grid.position(ix, iy) - truth_pos;
        if (d.x / ax).powi(2) + (d.y / ay).powi(2) > 1.0 {
            bg.push(*z);
        }
    }
    if bg.len() < MIN_BACKGROUND {
        return Err(Error::TooFewBackground {
            found: bg.len(),
            needed: MIN_BACKGROUND,
        });
    }
    let n = bg.len() as f64;
    let mean: Complex64 = bg.iter().sum::<Complex64>() / n;
    let var = bg.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    let signal = noisy.get(tx, ty).norm_sqr();
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / var).log10())
}

/// Quality figures of one image. Unbounded resolutions and infinite dB
/// sentinels serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMetrics {
    pub peak_pos: Vec2,
    #[serde(serialize_with = "ser_complex")]
    pub peak_val: Complex64,
    #[serde(serialize_with = "crate::serde_ext::pos_inf_as_null::serialize")]
    pub rho_x_meas: f64,
    #[serde(serialize_with = "crate::serde_ext::pos_inf_as_null::serialize")]
    pub rho_y_meas: f64,
    #[serde(serialize_with = "crate::serde_ext::db_as_null::serialize")]
    pub pslr_db: f64,
    #[serde(serialize_with = "crate::serde_ext::db_as_null::serialize")]
    pub islr_db: f64,
    #[serde(serialize_with = "ser_opt_db")]
    pub peak_snr_db: Option<f64>,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use crate::serde_ext::round_sig;
    [round_sig(z.re), round_sig(z.im)].serialize(s)
}

fn ser_opt_db<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_finite() => s.serialize_f64(crate::serde_ext::round_sig(*x)),
        _ => s.serialize_none(),
    }
}

impl ImageMetrics {
    /// Measures `img`; the peak SNR is included when `truth_pos` is given.
    pub fn measure(img: &ComplexImage, truth_pos: Option<Vec2>) -> Result<Self> {
        let peak = find_peak(img)?;
        let rho_x_meas = resolution_or_unbounded(img, Axis::X)?;
        let rho_y_meas = resolution_or_unbounded(img, Axis::Y)?;
        let pslr_db = sidelobe_or(pslr(img))?;
        let islr_db = sidelobe_or(islr(img))?;
        let peak_snr_db = match truth_pos {
            Some(p) => Some(peak_snr_with_cell(img, p, (rho_x_meas, rho_y_meas))?),
            None => None,
        };
        Ok(Self {
            peak_pos: peak.position,
            peak_val: peak.value,
            rho_x_meas,
            rho_y_meas,
            pslr_db,
            islr_db,
            peak_snr_db,
        })
    }
}

fn sidelobe_or(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::NoSidelobeRegion) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}
