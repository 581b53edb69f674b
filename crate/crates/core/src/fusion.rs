//! Image fusion: incoherent (magnitude) and coherent (complex) weighted sums,
//! and association-matrix gating.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{convex_contains, convex_hull, Vec2};
use crate::imaging::{ComplexImage, FusionKind, Provenance};
use crate::scene::{AssociationMatrix, Scenario};
use crate::wavenumber::{composite_wavenumber, coverage_region, unit_wavevectors};

/// Non-negative weights, one per fused image in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    pub values: Vec<f64>,
}

impl FusionWeights {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// `1 / n` for each of `n` images.
    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![1.0 / n.max(1) as f64; n],
        }
    }

    pub fn constant(n: usize, w: f64) -> Self {
        Self { values: vec![w; n] }
    }

    /// Weights looked up by each image's pair; images without an entry get 0.
    pub fn from_pair_map(map: &BTreeMap<(usize, usize), f64>, images: &[ComplexImage]) -> Self {
        Self {
            values: images
                .iter()
                .map(|img| img.provenance.pair().and_then(|p| map.get(&p)).copied().unwrap_or(0.0))
                .collect(),
        }
    }

    /// Spectral density compensation for the active pairs of `scenario`.
    ///
    /// A pair's multiplicity is the number of pair coverage hulls (its own
    /// included) that contain its centre wavevector, the composite
    /// wavevector of the phase centres at `f0`. Weights are the inverse
    /// multiplicities, normalized to sum to one, in association-matrix
    /// order, so wavenumbers seen by many pairs are not over-weighted.
    pub fn density_compensated(scenario: &Scenario, target: Vec2, n_freq: usize) -> Result<Self> {
        let region = coverage_region(scenario, target, n_freq, false)?;
        let mut per_pair: BTreeMap<(usize, usize), Vec<Vec2>> = BTreeMap::new();
        for tile in &region.tiles {
            per_pair.entry(tile.channel.pair()).or_default().extend(&tile.samples);
        }
        let order = scenario.pairing.active_pairs();
        let hulls: Vec<Vec<Vec2>> = order.iter().map(|p| convex_hull(&per_pair[p])).collect();
        let scale = region.samples().fold(0.0f64, |m, p| m.max(p.norm()));
        let tol = 1e-9 * scale;
        let mut values = Vec::with_capacity(order.len());
        for &(l, k) in &order {
            let (a, b) = unit_wavevectors(
                scenario.terminals[l].phase_center,
                scenario.terminals[k].phase_center,
                target,
                scenario.f0,
            )?;
            let centre = composite_wavenumber(a, b);
            let count = hulls.iter().filter(|h| convex_contains(h, centre, tol)).count();
            values.push(1.0 / count.max(1) as f64);
        }
        let sum: f64 = values.iter().sum();
        for v in &mut values {
            *v /= sum;
        }
        Ok(Self { values })
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::InvalidWeights(format!("{} weights for {n} images", self.values.len())));
        }
        if self.values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        if !self.values.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

fn check_grids(images: &[ComplexImage]) -> Result<()> {
    let first = images.first().ok_or_else(|| Error::InvalidArgument("no images to fuse".into()))?;
    if images.iter().any(|i| i.grid != first.grid || i.pixels.dim() != first.pixels.dim()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Weighted sum of magnitudes of monostatic images. The result is real.
pub fn fuse_incoherent(images: &[ComplexImage], weights: &FusionWeights) -> Result<ComplexImage> {
    check_grids(images)?;
    weights.check(images.len())?;
    for img in images {
        match img.provenance {
            Provenance::Pair { tx, rx } if tx == rx => {}
            other => return Err(Error::NotMonostatic(other.label())),
        }
    }
    let grid = images[0].grid;
    let mut acc = Array2::<f64>::zeros(images[0].pixels.dim());
    for (img, &w) in images.iter().zip(&weights.values) {
        acc.zip_mut_with(&img.pixels, |a, z| *a += w * z.norm());
    }
    Ok(ComplexImage {
        grid,
        pixels: acc.mapv(|v| Complex64::new(v, 0.0)),
        provenance: Provenance::Fused { mode: FusionKind::Incoherent },
    })
}

/// Weighted complex sum of images of any provenance.
pub fn fuse_coherent(images: &[ComplexImage], weights: &FusionWeights) -> Result<ComplexImage> {
    check_grids(images)?;
    weights.check(images.len())?;
    let grid = images[0].grid;
    let mut acc = Array2::<Complex64>::zeros(images[0].pixels.dim());
    for (img, &w) in images.iter().zip(&weights.values) {
        acc.zip_mut_with(&img.pixels, |a, z| *a += z * w);
    }
    Ok(ComplexImage {
        grid,
        pixels: acc,
        provenance: Provenance::Fused { mode: FusionKind::Coherent },
    })
}

/// Images whose pair is active in `pairing`; fused and synthetic images are
/// dropped.
pub fn select_pairs(pairing: &AssociationMatrix, images: &[ComplexImage]) -> Vec<ComplexImage> {
    images
        .iter()
        .filter(|img| img.provenance.pair().is_some_and(|(l, k)| pairing.get(l, k)))
        .cloned()
        .collect()
}
