//! Wavenumber coverage (spectral support) of Tx/Rx geometries and the image
//! resolution it predicts.
//!
//! Wavevectors follow the range-gradient convention: a sensor at `s` seeing a
//! target at `t` contributes `k = (2 pi f / c) [cos psi, sin psi]`, where
//! `psi` is the angle of `t - s` from the +x axis. For a Tx/Rx pair the
//! composite wavevector is `k* = k_tx - k_rx = (2 pi f / c) (u_tx + u_rx)`
//! with both unit vectors pointing from the sensor towards the target, so a
//! monostatic pair has `|k*| = 4 pi f / c` and a forward-scatter pair has
//! `k* = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, extents, Vec2};
use crate::scene::Scenario;
use crate::synth::ChannelId;
use crate::SPEED_OF_LIGHT;

/// Hull extents at or below this fraction of the largest sample magnitude are
/// treated as zero; they are floating-point residue, not bandwidth.
pub const EXTENT_FLOOR: f64 = 1e-9;

/// Default number of frequency samples per coverage segment.
pub const DEFAULT_N_FREQ: usize = 64;

/// Sampled coverage segment of one measurement channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavenumberTile {
    pub channel: ChannelId,
    /// Composite wavevectors, rad/m, one per frequency.
    pub samples: Vec<Vec2>,
    /// Frequency of each sample, Hz.
    pub freqs: Vec<f64>,
    /// Whether the pair's centre-frequency wavevector has been subtracted.
    pub baseband: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLabel {
    Monostatic,
    Bistatic,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavenumberRegion {
    pub tiles: Vec<WavenumberTile>,
    pub label: RegionLabel,
}

impl WavenumberRegion {
    /// Every sample of every tile.
    pub fn samples(&self) -> impl Iterator<Item = &Vec2> {
        self.tiles.iter().flat_map(|t| &t.samples)
    }

    /// Union of several regions.
    pub fn union(regions: impl IntoIterator<Item = WavenumberRegion>) -> WavenumberRegion {
        let mut tiles = Vec::new();
        let mut labels = Vec::new();
        for r in regions {
            labels.push(r.label);
            tiles.extend(r.tiles);
        }
        let label = match labels.first() {
            Some(&first) if labels.iter().all(|&l| l == first) => first,
            _ => RegionLabel::Fused,
        };
        WavenumberRegion { tiles, label }
    }
}

/// Resolution predicted from the axis-aligned extents of the coverage hull.
///
/// Unbounded resolutions are `f64::INFINITY` and serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionEstimate {
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub rho_x: f64,
    #[serde(with = "crate::serde_ext::pos_inf_as_null")]
    pub rho_y: f64,
    #[serde(serialize_with = "crate::serde_ext::sig9::serialize")]
    pub dk_x: f64,
    #[serde(serialize_with = "crate::serde_ext::sig9::serialize")]
    pub dk_y: f64,
    pub hull: Vec<Vec2>,
}

impl ResolutionEstimate {
    pub fn is_bounded(&self) -> bool {
        self.rho_x.is_finite() || self.rho_y.is_finite()
    }
}

/// Free-space wavenumber `2 pi f / c`, rad/m.
pub fn wavenumber(f: f64) -> f64 {
    2.0 * PI * f / SPEED_OF_LIGHT
}

fn unit_towards(from: Vec2, to: Vec2, what: &str) -> Result<Vec2> {
    let d = to - from;
    let n = d.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateGeometry(format!("{what} coincides with the target")));
    }
    Ok(d * (1.0 / n))
}

/// Plane wavevectors `(k_tx, k_rx)` of a Tx/Rx pair at frequency `f`.
pub fn unit_wavevectors(tx_pos: Vec2, rx_pos: Vec2, target: Vec2, f: f64) -> Result<(Vec2, Vec2)> {
    let k = wavenumber(f);
    let u_tx = unit_towards(tx_pos, target, "transmitter")?;
    let u_rx = unit_towards(rx_pos, target, "receiver")?;
    Ok((u_tx * k, -(u_rx * k)))
}

pub fn composite_wavenumber(k_tx: Vec2, k_rx: Vec2) -> Vec2 {
    k_tx - k_rx
}

/// Observation angle of a sensor: angle of `target - sensor` from +x.
pub fn observation_angle(sensor: Vec2, target: Vec2) -> Result<f64> {
    Ok(unit_towards(sensor, target, "sensor")?.angle())
}

/// Bistatic angle at the target between the directions to Tx and Rx, in
/// `[0, pi]`.
pub fn bistatic_angle(tx_pos: Vec2, rx_pos: Vec2, target: Vec2) -> Result<f64> {
    let a = unit_towards(tx_pos, target, "transmitter")?;
    let b = unit_towards(rx_pos, target, "receiver")?;
    Ok(a.cross(b).atan2(a.dot(b)).abs())
}

/// Coverage segment of one Tx/Rx element pair: `n_freq` frequencies spread
/// uniformly over `[f0 - B/2, f0 + B/2]`.
pub fn coverage_segment(tx_pos: Vec2, rx_pos: Vec2, target: Vec2, f0: f64, bandwidth: f64, n_freq: usize) -> Result<WavenumberTile> {
    if n_freq < 2 {
        return Err(Error::InvalidArgument("n_freq must be at least 2".into()));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    let u = unit_towards(tx_pos, target, "transmitter")? + unit_towards(rx_pos, target, "receiver")?;
    let f_lo = f0 - bandwidth / 2.0;
    let step = bandwidth / (n_freq - 1) as f64;
    let freqs: Vec<f64> = (0..n_freq).map(|i| f_lo + i as f64 * step).collect();
    let samples = freqs.iter().map(|&f| u * wavenumber(f)).collect();
    Ok(WavenumberTile {
        channel: ChannelId::default(),
        samples,
        freqs,
        baseband: false,
    })
}

/// Coverage of every active channel of `scenario` seen from `target`, in
/// association-matrix order (Tx terminal, Rx terminal, Tx element, Rx
/// element).
///
/// With `baseband` each tile is shifted by its pair's centre-frequency
/// composite wavevector, computed from the terminals' phase centres.
pub fn coverage_region(scenario: &Scenario, target: Vec2, n_freq: usize, baseband: bool) -> Result<WavenumberRegion> {
    let pairs = scenario.pairing.active_pairs();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no active pair".into()));
    }
    let mut tiles = Vec::new();
    let (mut mono, mut bi) = (false, false);
    for (l, k) in pairs {
        if l == k {
            mono = true;
        } else {
            bi = true;
        }
        let tx_t = &scenario.terminals[l];
        let rx_t = &scenario.terminals[k];
        let shift = if baseband {
            let (a, b) = unit_wavevectors(tx_t.phase_center, rx_t.phase_center, target, scenario.f0)
                .map_err(|e| channel_err(ChannelId::new(l, k, 0, 0), e))?;
            composite_wavenumber(a, b)
        } else {
            Vec2::ZERO
        };
        for (n, &tx) in tx_t.tx_elements.iter().enumerate() {
            for (m, &rx) in rx_t.rx_elements.iter().enumerate() {
                let channel = ChannelId::new(l, k, n, m);
                let mut tile = coverage_segment(tx, rx, target, scenario.f0, scenario.bandwidth, n_freq)
                    .map_err(|e| channel_err(channel, e))?;
                tile.channel = channel;
                if baseband {
                    tile.baseband = true;
                    for s in &mut tile.samples {
                        *s = *s - shift;
                    }
                }
                tiles.push(tile);
            }
        }
    }
    let label = match (mono, bi) {
        (true, false) => RegionLabel::Monostatic,
        (false, true) => RegionLabel::Bistatic,
        _ => RegionLabel::Fused,
    };
    Ok(WavenumberRegion { tiles, label })
}

fn channel_err(channel: ChannelId, e: Error) -> Error {
    match e {
        Error::DegenerateGeometry(message) => Error::ChannelGeometry { channel, message },
        other => other,
    }
}

/// Convex hull of the region and the resolution `2 pi / dk` per axis.
pub fn predicted_resolution(region: &WavenumberRegion) -> ResolutionEstimate {
    let pts: Vec<Vec2> = region.samples().copied().collect();
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.norm()));
    let floor = EXTENT_FLOOR * scale;
    let (mut dk_x, mut dk_y) = extents(&pts);
    if dk_x <= floor {
        dk_x = 0.0;
    }
    if dk_y <= floor {
        dk_y = 0.0;
    }
    let rho = |dk: f64| if dk > 0.0 { 2.0 * PI / dk } else { f64::INFINITY };
    let hull = if dk_x == 0.0 && dk_y == 0.0 {
        pts.first().map(|&p| vec![p]).unwrap_or_default()
    } else {
        convex_hull(&pts)
    };
    ResolutionEstimate {
        rho_x: rho(dk_x),
        rho_y: rho(dk_y),
        dk_x,
        dk_y,
        hull,
    }
}

/// Aperture length giving cross-range resolution `rho_xr` at range `r` and
/// observation angle `psi`.
pub fn aperture_for_cross_range(r: f64, f0: f64, psi: f64, rho_xr: f64) -> Result<f64> {
    if !(r > 0.0 && f0 > 0.0 && rho_xr > 0.0) {
        return Err(Error::InvalidArgument("range, carrier and resolution must be positive".into()));
    }
    let s = psi.sin();
    if s.abs() < 1e-12 {
        return Err(Error::DegenerateGeometry("endfire observation angle".into()));
    }
    Ok(SPEED_OF_LIGHT * r / (2.0 * f0 * rho_xr * s.abs()))
}

/// Resolution loss factor `1 / cos(alpha / 2)` of a bistatic pair with
/// bistatic angle `alpha`.
pub fn bistatic_loss(alpha: f64) -> Result<f64> {
    if !(0.0..PI).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "bistatic angle {alpha} rad outside [0, pi)"
        )));
    }
    Ok(1.0 / (alpha / 2.0).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::polygon_area;
    use crate::scene::{AssociationMatrix, PointTarget, Terminal};
    use proptest::prelude::*;

    const F0: f64 = 28e9;
    const TARGET: Vec2 = Vec2::new(0.0, 20.0);

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn broadside_wavevector() {
        let (ktx, krx) = unit_wavevectors(Vec2::ZERO, Vec2::ZERO, TARGET, F0).unwrap();
        assert!(close(ktx.y, 586.43, 0.01) && ktx.x == 0.0);
        assert_eq!(ktx, -krx);
        let k = composite_wavenumber(ktx, krx);
        assert!(close(k.norm(), 1172.86, 0.01));
    }

    #[test]
    fn forward_scatter_cancels() {
        let (a, b) = unit_wavevectors(Vec2::ZERO, Vec2::new(0.0, 40.0), TARGET, F0).unwrap();
        assert_eq!(composite_wavenumber(a, b), Vec2::ZERO);
    }

    #[test]
    fn right_angle_pair() {
        let (a, b) = unit_wavevectors(Vec2::new(0.0, 0.0), Vec2::new(-20.0, 20.0), TARGET, F0).unwrap();
        let k = composite_wavenumber(a, b).norm();
        assert!(close(k, wavenumber(F0) * 2f64.sqrt(), 1e-9));
    }

    #[test]
    fn coincident_sensor_is_rejected() {
        assert!(matches!(
            unit_wavevectors(TARGET, Vec2::ZERO, TARGET, F0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn segment_lengths() {
        let seg = coverage_segment(Vec2::ZERO, Vec2::ZERO, TARGET, F0, 500e6, 64).unwrap();
        let len = seg.samples[63].distance(seg.samples[0]);
        assert!(close(len, 20.944, 1e-3), "{len}");
        assert!(seg.samples.iter().all(|s| s.x == 0.0));

        // Tx and Rx 60 degrees either side of broadside: 120 degree separation.
        let tx = TARGET - Vec2::from_angle(PI / 2.0 + PI / 3.0) * 20.0;
        let rx = TARGET - Vec2::from_angle(PI / 2.0 - PI / 3.0) * 20.0;
        let seg = coverage_segment(tx, rx, TARGET, F0, 500e6, 64).unwrap();
        let len = seg.samples[63].distance(seg.samples[0]);
        assert!(close(len, 10.472, 1e-3), "{len}");
    }

    #[test]
    fn monochromatic_segment_is_a_point() {
        let seg = coverage_segment(Vec2::ZERO, Vec2::ZERO, TARGET, F0, 1.0, 2).unwrap();
        assert!(seg.samples[0].distance(seg.samples[1]) < 1e-6);
        let region = WavenumberRegion {
            tiles: vec![seg],
            label: RegionLabel::Monostatic,
        };
        let est = predicted_resolution(&region);
        assert!(est.rho_x.is_infinite() && est.rho_y.is_infinite());
        assert_eq!(est.hull.len(), 1);
        let json = serde_json::to_value(&est).unwrap();
        assert!(json["rho_x"].is_null() && json["rho_y"].is_null());
    }

    #[test]
    fn broadside_range_resolution() {
        for (b, rho) in [(500e6, 0.30), (100e6, 1.5)] {
            let s = Scenario::new(vec![Terminal::monostatic(0, Vec2::ZERO)], vec![], F0, b);
            let est = predicted_resolution(&coverage_region(&s, TARGET, 64, false).unwrap());
            assert!(close(est.rho_y, rho, 1e-9 * rho.max(1.0)), "{}", est.rho_y);
            assert!(est.rho_x.is_infinite());
        }
    }

    fn arc_scenario(dpsi: f64, n: usize, b: f64) -> Scenario {
        let terminals = (0..n)
            .map(|i| {
                let psi = PI / 2.0 - dpsi / 2.0 + dpsi * i as f64 / (n - 1) as f64;
                Terminal::monostatic(i as u32, TARGET - Vec2::from_angle(psi) * 20.0)
            })
            .collect();
        Scenario::new(terminals, vec![PointTarget::unit(TARGET)], F0, b)
    }

    #[test]
    fn sector_area() {
        for deg in [1.0f64, 3.0] {
            let dpsi = deg.to_radians();
            let s = arc_scenario(dpsi, 61, 500e6);
            let est = predicted_resolution(&coverage_region(&s, TARGET, 16, false).unwrap());
            let area = polygon_area(&est.hull);
            let expect = (4.0 * PI / SPEED_OF_LIGHT).powi(2) * F0 * 500e6 * dpsi;
            assert!(((area - expect) / expect).abs() < 0.02, "{deg}: {area} vs {expect}");
        }
    }

    #[test]
    fn region_counts_and_labels() {
        let t0 = Terminal::ula(0, Vec2::new(-1.0, 0.0), 2, 3, 0.01, Vec2::new(1.0, 0.0));
        let t1 = Terminal::ula(1, Vec2::new(1.0, 0.0), 2, 3, 0.01, Vec2::new(1.0, 0.0));
        let s = Scenario::new(vec![t0, t1], vec![], F0, 500e6);
        let mono = coverage_region(&s, TARGET, 8, false).unwrap();
        assert_eq!(mono.tiles.len(), 12);
        assert_eq!(mono.label, RegionLabel::Monostatic);
        let full = coverage_region(&s.clone().with_pairing(AssociationMatrix::full(2)), TARGET, 8, false).unwrap();
        assert_eq!(full.tiles.len(), 4 * 6);
        assert_eq!(full.label, RegionLabel::Fused);
        assert_eq!(full.tiles[7].channel, ChannelId::new(0, 1, 0, 1));

        let single = Scenario::new(vec![Terminal::monostatic(0, Vec2::ZERO)], vec![], F0, 1e8);
        assert_eq!(coverage_region(&single, TARGET, 8, false).unwrap().tiles.len(), 1);
    }

    #[test]
    fn baseband_tiles_straddle_zero() {
        let s = Scenario::new(vec![Terminal::monostatic(0, Vec2::new(3.0, 0.0))], vec![], F0, 500e6);
        let r = coverage_region(&s, TARGET, 65, true).unwrap();
        let t = &r.tiles[0];
        assert!(t.baseband);
        assert!(t.samples[32].norm() < 1e-9);
        assert!(close(t.samples[0].norm(), t.samples[64].norm(), 1e-9));
    }

    #[test]
    fn identity_region_is_union_of_monostatic_regions() {
        let s = crate::presets::five_terminal_line(500e6);
        let all = coverage_region(&s, TARGET, 4, false).unwrap();
        let parts = (0..5).map(|i| {
            let mut p = AssociationMatrix::zeros(5);
            p.set(i, i, true);
            coverage_region(&s.clone().with_pairing(p), TARGET, 4, false).unwrap()
        });
        assert_eq!(WavenumberRegion::union(parts), all);
    }

    #[test]
    fn degenerate_channel_is_identified() {
        let s = Scenario::new(vec![Terminal::monostatic(0, TARGET)], vec![], F0, 1e8);
        match coverage_region(&s, TARGET, 4, false) {
            Err(Error::ChannelGeometry { channel, .. }) => assert_eq!(channel, ChannelId::new(0, 0, 0, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn aperture_sizing() {
        let a = aperture_for_cross_range(20.0, F0, PI / 2.0, 0.30).unwrap();
        assert!(close(a, 0.357, 1e-3));
        assert!(close(aperture_for_cross_range(20.0, F0, PI / 2.0, 0.15).unwrap(), 2.0 * a, 1e-12));
        assert!(close(aperture_for_cross_range(40.0, F0, PI / 2.0, 0.30).unwrap(), 2.0 * a, 1e-12));
        assert!(matches!(
            aperture_for_cross_range(20.0, F0, 0.0, 0.3),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn bistatic_loss_values() {
        assert_eq!(bistatic_loss(0.0).unwrap(), 1.0);
        assert!(close(bistatic_loss(120f64.to_radians()).unwrap(), 2.0, 1e-12));
        assert!(close(bistatic_loss(90f64.to_radians()).unwrap(), std::f64::consts::SQRT_2, 1e-4));
        assert!(bistatic_loss(PI).is_err());
    }

    #[test]
    fn bistatic_angle_symmetric_pair() {
        let tx = TARGET - Vec2::from_angle(PI / 2.0 + PI / 6.0) * 20.0;
        let rx = TARGET - Vec2::from_angle(PI / 2.0 - PI / 6.0) * 20.0;
        assert!(close(bistatic_angle(tx, rx, TARGET).unwrap(), PI / 3.0, 1e-12));
    }

    fn arb_pos() -> impl Strategy<Value = Vec2> {
        (-30.0f64..30.0, -30.0f64..10.0).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #[test]
        fn wavevector_norms(tx in arb_pos(), rx in arb_pos(), f in 1e9f64..1e11) {
            let (a, b) = unit_wavevectors(tx, rx, TARGET, f).unwrap();
            let k = wavenumber(f);
            prop_assert!((a.norm() - k).abs() <= 1e-12 * k);
            prop_assert!((b.norm() - k).abs() <= 1e-12 * k);
        }

        #[test]
        fn sample_magnitudes(tx in arb_pos(), rx in arb_pos(), b in 1e6f64..2e9) {
            let tile = coverage_segment(tx, rx, TARGET, F0, b, 16).unwrap();
            let dpsi = observation_angle(tx, TARGET).unwrap() - observation_angle(rx, TARGET).unwrap();
            let s = (2.0 + 2.0 * dpsi.cos()).max(0.0).sqrt();
            for (p, &f) in tile.samples.iter().zip(&tile.freqs) {
                let expect = wavenumber(f) * s;
                prop_assert!((p.norm() - expect).abs() <= 1e-9 * wavenumber(f) * 2.0);
                let lo = wavenumber(F0 - b / 2.0) * s;
                let hi = wavenumber(F0 + b / 2.0) * s;
                prop_assert!(p.norm() >= lo * (1.0 - 1e-12) - 1e-9 && p.norm() <= hi * (1.0 + 1e-12) + 1e-9);
            }
        }

        #[test]
        fn hull_extents_match_brute_force(pos in prop::collection::vec((arb_pos(), arb_pos()), 1..=3), n_freq in 2usize..=8) {
            let tiles: Vec<WavenumberTile> = pos.iter()
                .map(|&(tx, rx)| coverage_segment(tx, rx, TARGET, F0, 500e6, n_freq).unwrap())
                .collect();
            let region = WavenumberRegion { tiles, label: RegionLabel::Fused };
            let est = predicted_resolution(&region);
            let pts: Vec<Vec2> = region.samples().copied().collect();
            let (mut bx, mut by) = (0.0f64, 0.0f64);
            for a in &pts {
                for b in &pts {
                    bx = bx.max(a.x - b.x);
                    by = by.max(a.y - b.y);
                }
            }
            let floor = EXTENT_FLOOR * pts.iter().fold(0.0f64, |m, p| m.max(p.norm()));
            prop_assert_eq!(est.dk_x, if bx <= floor { 0.0 } else { bx });
            prop_assert_eq!(est.dk_y, if by <= floor { 0.0 } else { by });
        }

        #[test]
        fn adding_tiles_never_shrinks(pos in prop::collection::vec((arb_pos(), arb_pos()), 2..6)) {
            let tiles: Vec<WavenumberTile> = pos.iter()
                .map(|&(tx, rx)| coverage_segment(tx, rx, TARGET, F0, 200e6, 4).unwrap())
                .collect();
            let mut prev = (0.0, 0.0);
            for n in 1..=tiles.len() {
                let est = predicted_resolution(&WavenumberRegion { tiles: tiles[..n].to_vec(), label: RegionLabel::Fused });
                prop_assert!(est.dk_x >= prev.0 && est.dk_y >= prev.1);
                prev = (est.dk_x, est.dk_y);
            }
        }

        #[test]
        fn tile_order_is_irrelevant(pos in prop::collection::vec((arb_pos(), arb_pos()), 2..6), seed in any::<u64>()) {
            let tiles: Vec<WavenumberTile> = pos.iter()
                .map(|&(tx, rx)| coverage_segment(tx, rx, TARGET, F0, 200e6, 4).unwrap())
                .collect();
            let mut shuffled = tiles.clone();
            let n = shuffled.len();
            for i in 0..n {
                let j = ((seed >> (i * 3)) as usize) % n;
                shuffled.swap(i, j);
            }
            let a = predicted_resolution(&WavenumberRegion { tiles, label: RegionLabel::Fused });
            let b = predicted_resolution(&WavenumberRegion { tiles: shuffled, label: RegionLabel::Fused });
            prop_assert_eq!(a.dk_x, b.dk_x);
            prop_assert_eq!(a.dk_y, b.dk_y);
            prop_assert_eq!(a.rho_x, b.rho_x);
        }
    }
}
