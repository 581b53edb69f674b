//! Reference geometries used by the examples, scenario files and tests.

use crate::geom::Vec2;
use crate::scene::{AssociationMatrix, PointTarget, Scenario, Terminal};
use crate::wavenumber::aperture_for_cross_range;
use crate::SPEED_OF_LIGHT;

/// Carrier of the reference geometries, Hz.
pub const F0: f64 = 28e9;
/// Terminal spacing along the lane, m.
pub const LANE_SPACING: f64 = 0.7;
/// Broadside stand-off between the lane and the scene, m.
pub const STAND_OFF: f64 = 20.0;

/// Terminal with one Tx element on `center` and a half-wavelength Rx array
/// along x. The array spans `2 * aperture`, so the Tx/Rx midpoints (the
/// equivalent monostatic positions) span `aperture`.
pub fn virtual_aperture_terminal(id: u32, center: Vec2, f0: f64, aperture: f64) -> Terminal {
    let half_lambda = SPEED_OF_LIGHT / f0 / 2.0;
    let n_rx = (2.0 * aperture / half_lambda).round() as usize + 1;
    let mut t = Terminal::ula(id, center, 1, n_rx, half_lambda, Vec2::new(1.0, 0.0));
    t.tx_elements = vec![center];
    t
}

/// Aperture giving a broadside cross-range resolution equal to the range
/// resolution `c / 2B` at the reference stand-off.
pub fn matched_aperture(f0: f64, bandwidth: f64) -> f64 {
    let rho = SPEED_OF_LIGHT / (2.0 * bandwidth);
    aperture_for_cross_range(STAND_OFF, f0, std::f64::consts::FRAC_PI_2, rho)
        .expect("broadside is not endfire")
}

/// Five terminals on the x axis at 0.7 m spacing looking at a unit target
/// 20 m away, each with an aperture matched to the range resolution.
/// Monostatic-only pairing.
pub fn five_terminal_line(bandwidth: f64) -> Scenario {
    let aperture = matched_aperture(F0, bandwidth);
    let terminals = (0..5)
        .map(|i| {
            let x = (i as f64 - 2.0) * LANE_SPACING;
            virtual_aperture_terminal(i as u32, Vec2::new(x, 0.0), F0, aperture)
        })
        .collect();
    Scenario::new(
        terminals,
        vec![PointTarget::unit(Vec2::new(0.0, STAND_OFF))],
        F0,
        bandwidth,
    )
}

/// Single broadside terminal of [`five_terminal_line`].
pub fn single_terminal(bandwidth: f64) -> Scenario {
    let aperture = matched_aperture(F0, bandwidth);
    Scenario::new(
        vec![virtual_aperture_terminal(0, Vec2::ZERO, F0, aperture)],
        vec![PointTarget::unit(Vec2::new(0.0, STAND_OFF))],
        F0,
        bandwidth,
    )
}

/// Transmitter on the far side of the target (at twice the stand-off) and a
/// receiving terminal on the lane; only the cross pair is active.
pub fn opposite_side(bandwidth: f64) -> Scenario {
    let aperture = matched_aperture(F0, bandwidth);
    let tx = Terminal {
        id: 0,
        phase_center: Vec2::new(0.0, 2.0 * STAND_OFF),
        tx_elements: vec![Vec2::new(0.0, 2.0 * STAND_OFF)],
        rx_elements: vec![],
    };
    let mut rx = virtual_aperture_terminal(1, Vec2::ZERO, F0, aperture);
    rx.tx_elements.clear();
    let mut pairing = AssociationMatrix::zeros(2);
    pairing.set(0, 1, true);
    Scenario::new(
        vec![tx, rx],
        vec![PointTarget::unit(Vec2::new(0.0, STAND_OFF))],
        F0,
        bandwidth,
    )
    .with_pairing(pairing)
}
