//! End-to-end properties of the synthesis -> imaging -> fusion -> metrics
//! chain.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use wavesense::fusion::{fuse_coherent, fuse_incoherent, select_pairs, FusionWeights};
use wavesense::imaging::{
    backproject, backproject_with, image_all_pairs, pair_point_spreads, point_spread, BackprojectOptions,
};
use wavesense::metrics::{find_peak, islr, measure_resolution, peak_snr_with_cell, pslr, Axis};
use wavesense::orchestrate::{plan, tessellated_scenario, tessellation_angles, Objective};
use wavesense::presets::{self, F0};
use wavesense::scene::{AssociationMatrix, ImageGrid, PointTarget, Scenario, Terminal};
use wavesense::synth::{synthesize, SynthConfig};
use wavesense::wavenumber::{coverage_region, predicted_resolution};
use wavesense::Vec2;

const TARGET: Vec2 = Vec2::new(0.0, 20.0);

fn x_cut(half: f64, step: f64) -> ImageGrid {
    let n = 2 * (half / step).round() as usize + 1;
    ImageGrid::centered(TARGET, (step, step), (n, 1)).unwrap()
}

#[test]
fn single_terminal_psf_matches_prediction() {
    let s = presets::single_terminal(500e6);
    let grid = ImageGrid::covering(TARGET, (0.8, 0.8), (0.02, 0.02)).unwrap();
    let img = point_spread(&s, TARGET, &grid).unwrap();
    let est = predicted_resolution(&coverage_region(&s, TARGET, 64, false).unwrap());
    let rx = measure_resolution(&img, Axis::X).unwrap();
    let ry = measure_resolution(&img, Axis::Y).unwrap();
    assert!((rx / est.rho_x - 1.0).abs() < 0.05, "{rx} vs {}", est.rho_x);
    assert!((ry / est.rho_y - 1.0).abs() < 0.05, "{ry} vs {}", est.rho_y);
}

#[test]
fn five_terminal_ladder() {
    let s = presets::five_terminal_line(500e6);
    let grid = x_cut(3.0, 0.0025);
    let mono = point_spread(&s, TARGET, &grid).unwrap();
    let full = point_spread(&s.clone().with_pairing(AssociationMatrix::full(5)), TARGET, &grid).unwrap();
    // Grating lobes of the monostatic comb, reduced by the bistatic pairs.
    let (pm, pf) = (pslr(&mono).unwrap(), pslr(&full).unwrap());
    assert!(pm > -10.0, "{pm}");
    assert!(pf < pm, "{pf} vs {pm}");
    assert!(islr(&full).unwrap() < islr(&mono).unwrap());
    assert!(measure_resolution(&mono, Axis::X).unwrap() < 0.1);
}

#[test]
fn widths_shrink_as_coverage_grows() {
    let s = presets::five_terminal_line(500e6);
    let grid = x_cut(2.0, 0.0025);
    let images = pair_point_spreads(&s, TARGET, &grid, &BackprojectOptions::default()).unwrap();
    let mut last = (0.0, f64::INFINITY);
    for set in [vec![2usize], vec![1, 2, 3], vec![0, 1, 2, 3, 4]] {
        let mut p = AssociationMatrix::zeros(5);
        for &i in &set {
            p.set(i, i, true);
        }
        let dk = predicted_resolution(&coverage_region(&s.clone().with_pairing(p.clone()), TARGET, 16, false).unwrap()).dk_x;
        let chosen = select_pairs(&p, &images);
        let fused = fuse_coherent(&chosen, &FusionWeights::uniform(chosen.len())).unwrap();
        let w = measure_resolution(&fused, Axis::X).unwrap();
        assert!(dk > last.0 && w < last.1, "{set:?}: dk {dk} width {w}");
        last = (dk, w);
    }
}

#[test]
fn tessellated_plan_beats_lane_baseline() {
    let b = 100e6;
    let template = presets::virtual_aperture_terminal(0, Vec2::ZERO, F0, presets::matched_aperture(F0, b));
    let angles = tessellation_angles(PI / 2.0, F0, b, 4).unwrap();
    let s = tessellated_scenario(&template, TARGET, 20.0, F0, b, &angles);
    let p = plan(&s, TARGET, 4, Objective::ExtentY).unwrap();
    let grid = ImageGrid::covering(TARGET, (3.0, 3.0), (0.025, 0.025)).unwrap();
    let fused = point_spread(&s.clone().with_pairing(p.pairing.clone()), TARGET, &grid).unwrap();

    let lane: Vec<Terminal> = (0..4)
        .map(|i| template.translated(Vec2::new((i as f64 - 1.5) * 0.7, 0.0)))
        .collect();
    let baseline = point_spread(&Scenario::new(lane, vec![PointTarget::unit(TARGET)], F0, b), TARGET, &grid).unwrap();

    let mut one = AssociationMatrix::zeros(4);
    one.set(0, 0, true);
    let single = point_spread(&s.clone().with_pairing(one), TARGET, &x_cut_y(4.0, 0.01)).unwrap();
    let fused_y = point_spread(&s.clone().with_pairing(p.pairing), TARGET, &x_cut_y(4.0, 0.01)).unwrap();
    let (r1, r4) = (
        measure_resolution(&single, Axis::Y).unwrap(),
        measure_resolution(&fused_y, Axis::Y).unwrap(),
    );
    assert!(r4 <= 0.3 * r1, "{r4} vs {r1}");
    let (pf, pb) = (pslr(&fused).unwrap(), pslr(&baseline).unwrap());
    assert!(pf < pb, "tessellated {pf} dB vs baseline {pb} dB");
}

fn x_cut_y(half: f64, step: f64) -> ImageGrid {
    let n = 2 * (half / step).round() as usize + 1;
    ImageGrid::centered(TARGET, (step, step), (1, n)).unwrap()
}

fn small_scene(noise: f64, seed: u64) -> Scenario {
    let terminals = (0..5)
        .map(|i| presets::virtual_aperture_terminal(i, Vec2::new((i as f64 - 2.0) * 0.7, 0.0), F0, 0.02))
        .collect();
    let mut s = Scenario::new(terminals, vec![PointTarget::unit(TARGET)], F0, 500e6);
    s.noise_power = noise;
    s.seed = seed;
    s
}

#[test]
fn doubling_noise_costs_three_db() {
    let grid = ImageGrid::covering(TARGET, (4.0, 4.0), (0.15, 0.15)).unwrap();
    let mut mean = [0.0; 2];
    let trials = 100;
    for (i, noise) in [0.5, 1.0].into_iter().enumerate() {
        let base = small_scene(noise, 0).with_pairing({
            let mut p = AssociationMatrix::zeros(5);
            p.set(2, 2, true);
            p
        });
        let cfg = SynthConfig::covering(&base, Some(&grid));
        for t in 0..trials {
            let mut s = base.clone();
            s.seed = 500 + t;
            let recs = synthesize(&s, &cfg).unwrap();
            let img = backproject(&recs, &s, &grid).unwrap();
            mean[i] += peak_snr_with_cell(&img, TARGET, (0.3, 0.3)).unwrap() / trials as f64;
        }
    }
    let drop = mean[0] - mean[1];
    assert!((drop - 3.0).abs() <= 0.5, "{drop}");
}

#[test]
fn incoherent_fusion_of_noisy_images_is_real_and_positive() {
    let s = small_scene(1.0, 9);
    let grid = ImageGrid::covering(TARGET, (1.0, 1.0), (0.1, 0.1)).unwrap();
    let recs = synthesize(&s, &SynthConfig::covering(&s, Some(&grid))).unwrap();
    let images = image_all_pairs(&recs, &s, &grid, &BackprojectOptions::default()).unwrap();
    let fused = fuse_incoherent(&images, &FusionWeights::uniform(5)).unwrap();
    assert!(fused.pixels.iter().all(|z| z.im == 0.0 && z.re >= 0.0));
}

#[test]
fn worker_count_does_not_change_pixels() {
    let s = small_scene(0.3, 4);
    let grid = ImageGrid::covering(TARGET, (0.5, 0.5), (0.03, 0.03)).unwrap();
    let recs = synthesize(&s, &SynthConfig::covering(&s, Some(&grid))).unwrap();
    let pair: Vec<_> = recs.into_iter().filter(|r| r.channel.pair() == (1, 1)).collect();
    let run = |w| {
        backproject_with(&pair, &s, &grid, &BackprojectOptions { workers: Some(w), ..Default::default() }).unwrap()
    };
    let a = run(1);
    for w in [2, 3, 8] {
        let b = run(w);
        assert!(a.pixels.iter().zip(b.pixels.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}

#[test]
fn shift_covariance() {
    let shift = Vec2::new(3.25, -1.5);
    let s = small_scene(0.0, 0);
    let grid = ImageGrid::covering(TARGET, (0.6, 0.6), (0.04, 0.04)).unwrap();
    let mut moved = s.clone();
    for t in &mut moved.terminals {
        *t = t.translated(shift);
    }
    let moved_grid = ImageGrid::new(grid.origin + shift, grid.spacing, grid.size).unwrap();
    let a = point_spread(&s, TARGET, &grid).unwrap();
    let b = point_spread(&moved, TARGET + shift, &moved_grid).unwrap();
    for (x, y) in a.pixels.iter().zip(b.pixels.iter()) {
        assert!((x.norm() - y.norm()).abs() < 1e-6, "{} {}", x.norm(), y.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Sparse pairings produce fringes of nearly equal height, so the grid
    // follows the default sampling rule (a quarter of the predicted
    // resolution) and the target sits on a node.
    #[test]
    fn psf_peak_within_one_pixel(mask in 1u32..(1 << 9), i in -3i32..=3, j in -3i32..=3) {
        let terminals: Vec<Terminal> = (0..3)
            .map(|i| presets::virtual_aperture_terminal(i, Vec2::new((i as f64 - 1.0) * 0.7, 0.0), F0, 0.1))
            .collect();
        let mut p = AssociationMatrix::zeros(3);
        for b in 0..9 {
            if mask >> b & 1 == 1 {
                p.set(b / 3, b % 3, true);
            }
        }
        let s = Scenario::new(terminals, vec![], F0, 500e6).with_pairing(p);
        let est = predicted_resolution(&coverage_region(&s, TARGET, 16, false).unwrap());
        let d = est.rho_x.min(est.rho_y) / 4.0;
        let grid = ImageGrid::covering(TARGET, (0.6, 0.6), (d, d)).unwrap();
        let target = TARGET + Vec2::new(i as f64 * d, j as f64 * d);
        let img = point_spread(&s, target, &grid).unwrap();
        let peak = find_peak(&img).unwrap();
        let at = grid.position(peak.ix, peak.iy);
        prop_assert!((at.x - target.x).abs() <= d * 1.001 && (at.y - target.y).abs() <= d * 1.001, "{:?} vs {:?}", at, target);
    }
}

#[test]
fn coherent_copies_scale_amplitude() {
    let s = small_scene(0.0, 0);
    let grid = ImageGrid::covering(TARGET, (0.3, 0.3), (0.05, 0.05)).unwrap();
    let img = point_spread(&s.clone().with_pairing({
        let mut p = AssociationMatrix::zeros(5);
        p.set(0, 0, true);
        p
    }), TARGET, &grid).unwrap();
    let fused = fuse_coherent(&vec![img.clone(); 5], &FusionWeights::constant(5, 1.0)).unwrap();
    for (a, b) in img.pixels.iter().zip(fused.pixels.iter()) {
        assert!((a * Complex64::new(5.0, 0.0) - b).norm() < 1e-9);
    }
}
