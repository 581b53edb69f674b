//! Acquisition planning: wavenumber tessellation and greedy selection of
//! cooperating terminals.
//!
//! A monostatic terminal observing at angle `psi` covers radial wavenumbers
//! `[4 pi (f0 - B/2) / c, 4 pi (f0 + B/2) / c]`, whose projection on y is
//! scaled by `sin psi`. Choosing
//! `sin psi_l = sin psi_{l-1} (f0 - B/2) / (f0 + B/2)` makes the projected
//! tiles of consecutive terminals abut, so `L` terminals span `L` times the
//! single-terminal extent along y.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scene::{AssociationMatrix, PointTarget, Scenario, Terminal};
use crate::wavenumber::{coverage_region, observation_angle, predicted_resolution, ResolutionEstimate};

/// Frequency samples per segment used when scoring candidate subsets.
const PLAN_N_FREQ: usize = 16;

/// `l` observation angles starting at `psi_0` whose projected tiles abut.
/// Angles stay on the same side of broadside as `psi_0`.
pub fn tessellation_angles(psi_0: f64, f0: f64, bandwidth: f64, l: usize) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0 && f0 > bandwidth / 2.0) {
        return Err(Error::InvalidArgument("need f0 > B/2 > 0".into()));
    }
    if l == 0 {
        return Err(Error::InvalidArgument("at least one angle is required".into()));
    }
    if !psi_0.is_finite() {
        return Err(Error::InvalidArgument("initial angle must be finite".into()));
    }
    let ratio = (f0 - bandwidth / 2.0) / (f0 + bandwidth / 2.0);
    let back = psi_0.cos() < 0.0;
    let mut s = psi_0.sin();
    let mut out = vec![psi_0];
    for _ in 1..l {
        s *= ratio;
        let a = s.asin();
        out.push(if back { std::f64::consts::PI - a } else { a });
    }
    Ok(out)
}

/// Edge-abutment residuals `(sin psi_l (f0 + B/2) - sin psi_{l-1} (f0 - B/2)) / f0`
/// for consecutive angles.
pub fn abutment_residuals(angles: &[f64], f0: f64, bandwidth: f64) -> Vec<f64> {
    angles
        .windows(2)
        .map(|w| (w[1].sin() * (f0 + bandwidth / 2.0) - w[0].sin() * (f0 - bandwidth / 2.0)) / f0)
        .collect()
}

/// Terminal positions at distance `range` from `target` seeing it at the
/// given observation angles: `target - range [cos psi, sin psi]`.
pub fn angles_to_positions(angles: &[f64], target: Vec2, range: f64) -> Vec<Vec2> {
    angles.iter().map(|&psi| target - Vec2::from_angle(psi) * range).collect()
}

/// Copies of `template` placed at the tessellated positions, ids `0..L`,
/// monostatic pairing and a unit target.
pub fn tessellated_scenario(template: &Terminal, target: Vec2, range: f64, f0: f64, bandwidth: f64, angles: &[f64]) -> Scenario {
    let terminals = angles_to_positions(angles, target, range)
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut t = template.translated(p - template.phase_center);
            t.id = i as u32;
            t
        })
        .collect();
    Scenario::new(terminals, vec![PointTarget::unit(target)], f0, bandwidth)
}

/// Hull extent to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ExtentX,
    ExtentY,
    /// The smaller of the two extents.
    MinExtent,
}

impl Objective {
    fn score(&self, est: &ResolutionEstimate) -> f64 {
        match self {
            Objective::ExtentX => est.dk_x,
            Objective::ExtentY => est.dk_y,
            Objective::MinExtent => est.dk_x.min(est.dk_y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrchestrationPlan {
    /// Ids of the selected terminals, ordered by decreasing `sin psi`.
    pub terminals: Vec<u32>,
    /// Observation angles of the selected terminals, rad.
    pub angles: Vec<f64>,
    pub positions: Vec<Vec2>,
    /// Association matrix over all scenario terminals; only pairs among the
    /// selected terminals are active.
    pub pairing: AssociationMatrix,
    pub predicted: ResolutionEstimate,
}

fn restricted(pairing: &AssociationMatrix, selected: &[usize]) -> AssociationMatrix {
    let mut out = AssociationMatrix::zeros(pairing.len());
    for &l in selected {
        for &k in selected {
            if pairing.get(l, k) {
                out.set(l, k, true);
            }
        }
    }
    out
}

/// Greedy selection of `l_active` terminals. Each round adds the terminal
/// whose inclusion maximizes the objective over the coverage of all allowed
/// pairs (per the scenario's association matrix) among the selected set;
/// ties go to the lowest terminal id.
pub fn plan(scenario: &Scenario, target: Vec2, l_active: usize, objective: Objective) -> Result<OrchestrationPlan> {
    let l = scenario.num_terminals();
    if l_active == 0 || l_active > l {
        return Err(Error::InvalidArgument(format!(
            "cannot activate {l_active} of {l} terminals"
        )));
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by_key(|&i| scenario.terminals[i].id);

    let evaluate = |sel: &[usize]| -> Result<Option<(f64, ResolutionEstimate)>> {
        let pairing = restricted(&scenario.pairing, sel);
        if pairing.count_active() == 0 {
            return Ok(None);
        }
        let probe = scenario.clone().with_pairing(pairing);
        let est = predicted_resolution(&coverage_region(&probe, target, PLAN_N_FREQ, false)?);
        Ok(Some((objective.score(&est), est)))
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut best_est = None;
    for round in 0..l_active {
        let candidates: Vec<usize> = order.iter().copied().filter(|c| !selected.contains(c)).collect();
        let mut scored = Vec::with_capacity(candidates.len());
        for &cand in &candidates {
            let mut trial = selected.clone();
            trial.push(cand);
            scored.push((cand, evaluate(&trial)?));
        }
        // When no candidate forms an allowed pair yet, look one terminal
        // ahead so bistatic-only pairings can still be reached.
        let lookahead = round + 1 < l_active && scored.iter().all(|(_, e)| e.is_none());
        let mut best: Option<(usize, f64)> = None;
        for (cand, eval) in &scored {
            let score = match eval {
                Some((s, _)) => *s,
                None if lookahead => {
                    let mut top = f64::NEG_INFINITY;
                    for &next in candidates.iter().filter(|&&c| c != *cand) {
                        let mut trial = selected.clone();
                        trial.extend([*cand, next]);
                        if let Some((s, _)) = evaluate(&trial)? {
                            top = top.max(s);
                        }
                    }
                    top
                }
                None => f64::NEG_INFINITY,
            };
            if best.is_none_or(|b| score > b.1) {
                best = Some((*cand, score));
            }
        }
        let (cand, _) = best.expect("fewer selected terminals than available");
        selected.push(cand);
        best_est = scored.into_iter().find(|(c, _)| *c == cand).and_then(|(_, e)| e).map(|(_, est)| est);
    }
    let predicted = best_est.ok_or_else(|| Error::Infeasible("no allowed pair among the selected terminals".into()))?;
    let pairing = restricted(&scenario.pairing, &selected);

    let mut entries = selected
        .iter()
        .map(|&i| {
            let t = &scenario.terminals[i];
            Ok((t.id, observation_angle(t.phase_center, target)?, t.phase_center))
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.1.sin().total_cmp(&a.1.sin()).then(a.0.cmp(&b.0)));
    Ok(OrchestrationPlan {
        terminals: entries.iter().map(|e| e.0).collect(),
        angles: entries.iter().map(|e| e.1).collect(),
        positions: entries.iter().map(|e| e.2).collect(),
        pairing,
        predicted,
    })
}
