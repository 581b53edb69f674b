//! Scenario description: terminals, point targets, radio parameters and the
//! Tx/Rx association matrix, with validation and JSON ingestion.
//!
//! # JSON schema
//!
//! ```json
//! {
//!   "f0_hz": 28e9,
//!   "bandwidth_hz": 500e6,
//!   "noise_power": 0.0,
//!   "seed": 0,
//!   "terminals": [
//!     { "id": 0, "phase_center": [0, 0],
//!       "tx_elements": [[0, 0]], "rx_elements": [[-0.01, 0], [0.01, 0]] },
//!     { "id": 1, "phase_center": [0.7, 0],
//!       "ula": { "n_tx": 1, "n_rx": 134, "spacing_m": 0.0053571, "axis": [1, 0] } }
//!   ],
//!   "targets": [ { "position": [0, 20], "reflectivity": [1, 0] } ],
//!   "sync_errors_s": [[0, 1e-9], [1e-9, 0]],
//!   "pairing": [[1, 0], [0, 1]]
//! }
//! ```
//!
//! `noise_power`, `seed`, `sync_errors_s` (zeros) and `pairing` (identity)
//! are optional. A terminal lists its elements explicitly or generates them
//! with `ula`: `n_tx` Tx and `n_rx` Rx elements, each group centred on the
//! phase centre along `axis` (default `[1, 0]`). `phase_center` defaults to
//! the centroid of all elements. `reflectivity` defaults to `[1, 0]`.
//!
//! Terminal index `l` in `pairing[l][k]` and `sync_errors_s[l][k]` is the
//! position in the `terminals` array (Tx terminal `l`, Rx terminal `k`).

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub id: u32,
    pub phase_center: Vec2,
    pub tx_elements: Vec<Vec2>,
    pub rx_elements: Vec<Vec2>,
}

impl Terminal {
    /// One colocated Tx/Rx element at `position`.
    pub fn monostatic(id: u32, position: Vec2) -> Self {
        Self {
            id,
            phase_center: position,
            tx_elements: vec![position],
            rx_elements: vec![position],
        }
    }

    /// Uniform linear Tx and Rx arrays, both centred on `center` along the
    /// unit direction of `axis`.
    pub fn ula(id: u32, center: Vec2, n_tx: usize, n_rx: usize, spacing: f64, axis: Vec2) -> Self {
        let dir = axis * (1.0 / axis.norm());
        let line = |n: usize| -> Vec<Vec2> {
            let mid = (n as f64 - 1.0) / 2.0;
            (0..n).map(|i| center + dir * ((i as f64 - mid) * spacing)).collect()
        };
        Self {
            id,
            phase_center: center,
            tx_elements: line(n_tx),
            rx_elements: line(n_rx),
        }
    }

    /// Rigid translation of every element and the phase centre.
    pub fn translated(&self, offset: Vec2) -> Self {
        Self {
            id: self.id,
            phase_center: self.phase_center + offset,
            tx_elements: self.tx_elements.iter().map(|&p| p + offset).collect(),
            rx_elements: self.rx_elements.iter().map(|&p| p + offset).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub position: Vec2,
    pub reflectivity: Complex64,
}

impl PointTarget {
    pub fn unit(position: Vec2) -> Self {
        Self {
            position,
            reflectivity: Complex64::new(1.0, 0.0),
        }
    }
}

/// Binary L x L matrix; entry `(l, k)` pairs Tx terminal `l` with Rx
/// terminal `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMatrix {
    entries: Vec<Vec<bool>>,
}

impl AssociationMatrix {
    /// Monostatic-only pairing.
    pub fn identity(l: usize) -> Self {
        Self {
            entries: (0..l).map(|i| (0..l).map(|j| i == j).collect()).collect(),
        }
    }

    /// Every Tx paired with every Rx.
    pub fn full(l: usize) -> Self {
        Self {
            entries: vec![vec![true; l]; l],
        }
    }

    pub fn zeros(l: usize) -> Self {
        Self {
            entries: vec![vec![false; l]; l],
        }
    }

    pub fn from_rows(entries: Vec<Vec<bool>>) -> Self {
        Self { entries }
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.entries
    }

    pub fn get(&self, tx: usize, rx: usize) -> bool {
        self.entries
            .get(tx)
            .and_then(|r| r.get(rx))
            .copied()
            .unwrap_or(false)
    }

    pub fn set(&mut self, tx: usize, rx: usize, on: bool) {
        self.entries[tx][rx] = on;
    }

    /// Active `(tx, rx)` pairs in row-major order.
    pub fn active_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (l, row) in self.entries.iter().enumerate() {
            for (k, &on) in row.iter().enumerate() {
                if on {
                    out.push((l, k));
                }
            }
        }
        out
    }

    pub fn count_active(&self) -> usize {
        self.entries.iter().flatten().filter(|&&b| b).count()
    }

    fn is_square(&self, l: usize) -> bool {
        self.entries.len() == l && self.entries.iter().all(|r| r.len() == l)
    }
}

impl Serialize for AssociationMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<u8>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&b| u8::from(b)).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AssociationMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<u8>>::deserialize(d)?;
        let mut entries = Vec::with_capacity(rows.len());
        for row in rows {
            let mut out = Vec::with_capacity(row.len());
            for v in row {
                match v {
                    0 => out.push(false),
                    1 => out.push(true),
                    other => {
                        return Err(serde::de::Error::custom(format!(
                            "association entries must be 0 or 1, found {other}"
                        )))
                    }
                }
            }
            entries.push(out);
        }
        Ok(Self { entries })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub terminals: Vec<Terminal>,
    pub targets: Vec<PointTarget>,
    /// Carrier frequency, Hz.
    pub f0: f64,
    /// Pulse bandwidth, Hz.
    pub bandwidth: f64,
    /// Complex noise variance per sample.
    pub noise_power: f64,
    /// Residual clock error per (Tx, Rx) terminal pair, seconds.
    pub sync_errors: Vec<Vec<f64>>,
    pub pairing: AssociationMatrix,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with default noise (none), synchronisation (perfect), seed
    /// (0) and monostatic-only pairing.
    pub fn new(terminals: Vec<Terminal>, targets: Vec<PointTarget>, f0: f64, bandwidth: f64) -> Self {
        let l = terminals.len();
        Self {
            terminals,
            targets,
            f0,
            bandwidth,
            noise_power: 0.0,
            sync_errors: vec![vec![0.0; l]; l],
            pairing: AssociationMatrix::identity(l),
            seed: 0,
        }
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn sync_error(&self, tx: usize, rx: usize) -> f64 {
        self.sync_errors
            .get(tx)
            .and_then(|r| r.get(rx))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn with_pairing(mut self, pairing: AssociationMatrix) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn with_targets(mut self, targets: Vec<PointTarget>) -> Self {
        self.targets = targets;
        self
    }

    /// Carrier wavelength, m.
    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.f0
    }

    /// Serializes to the documented JSON schema with explicit element lists.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioDoc::from(self)).expect("scenario serializes")
    }
}

/// One failed scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every scenario invariant and returns the violations found; an empty
/// list means the scenario is usable.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let l = scenario.terminals.len();

    if !scenario.f0.is_finite() || scenario.f0 <= 0.0 {
        out.push(Violation::new("f0_hz", "carrier frequency must be positive"));
    }
    if !scenario.bandwidth.is_finite() || scenario.bandwidth <= 0.0 {
        out.push(Violation::new("bandwidth_hz", "bandwidth must be positive"));
    } else if scenario.f0.is_finite() && scenario.f0 <= scenario.bandwidth / 2.0 {
        out.push(Violation::new(
            "bandwidth_hz",
            "carrier frequency must exceed half the bandwidth",
        ));
    }
    if !scenario.noise_power.is_finite() || scenario.noise_power < 0.0 {
        out.push(Violation::new("noise_power", "noise power must be finite and non-negative"));
    }

    if l == 0 {
        out.push(Violation::new("terminals", "at least one terminal is required"));
    }
    let mut ids = BTreeSet::new();
    for (i, t) in scenario.terminals.iter().enumerate() {
        let field = format!("terminals[{i}]");
        if !ids.insert(t.id) {
            out.push(Violation::new(&field, format!("duplicate terminal id {}", t.id)));
        }
        if t.tx_elements.is_empty() && t.rx_elements.is_empty() {
            out.push(Violation::new(&field, "terminal has no elements"));
        }
        if !t.phase_center.is_finite()
            || t.tx_elements.iter().chain(&t.rx_elements).any(|p| !p.is_finite())
        {
            out.push(Violation::new(&field, "element positions must be finite"));
        }
    }

    for (i, tgt) in scenario.targets.iter().enumerate() {
        let field = format!("targets[{i}]");
        if !tgt.position.is_finite() {
            out.push(Violation::new(&field, "target position must be finite"));
        }
        let r = tgt.reflectivity;
        if !(r.re.is_finite() && r.im.is_finite()) || r.norm() == 0.0 {
            out.push(Violation::new(&field, "reflectivity must be finite and non-zero"));
        }
    }

    let sync_ok = scenario.sync_errors.len() == l && scenario.sync_errors.iter().all(|r| r.len() == l);
    if !sync_ok {
        out.push(Violation::new("sync_errors_s", format!("must be a {l}x{l} matrix")));
    } else if scenario.sync_errors.iter().flatten().any(|v| !v.is_finite()) {
        out.push(Violation::new("sync_errors_s", "entries must be finite"));
    }

    if !scenario.pairing.is_square(l) {
        out.push(Violation::new("pairing", format!("must be a {l}x{l} matrix")));
    } else {
        if scenario.pairing.count_active() == 0 {
            out.push(Violation::new("pairing", "no active pair"));
        }
        for (tx, rx) in scenario.pairing.active_pairs() {
            if scenario.terminals[tx].tx_elements.is_empty() {
                out.push(Violation::new(
                    format!("pairing[{tx}][{rx}]"),
                    format!("Tx terminal {tx} has no Tx elements"),
                ));
            }
            if scenario.terminals[rx].rx_elements.is_empty() {
                out.push(Violation::new(
                    format!("pairing[{tx}][{rx}]"),
                    format!("Rx terminal {rx} has no Rx elements"),
                ));
            }
        }
    }
    out
}

/// Parses a scenario JSON document and fills the optional fields with their
/// defaults. The result is not validated; call [`validate`] for that.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if inner.classify() == serde_json::error::Category::Data {
            let message = inner.to_string();
            let field = missing_field(&message)
                .map(|name| if path == "." { name.to_string() } else { format!("{path}.{name}") })
                .unwrap_or(path);
            Error::Schema { field, message }
        } else {
            Error::Parse {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        }
    })?;
    doc.into_scenario()
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    terminals: Vec<TerminalDoc>,
    #[serde(default)]
    targets: Vec<TargetDoc>,
    f0_hz: f64,
    bandwidth_hz: f64,
    #[serde(default)]
    noise_power: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sync_errors_s: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairing: Option<AssociationMatrix>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalDoc {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase_center: Option<Vec2>,
    #[serde(default)]
    tx_elements: Vec<Vec2>,
    #[serde(default)]
    rx_elements: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ula: Option<UlaDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UlaDoc {
    n_tx: usize,
    n_rx: usize,
    spacing_m: f64,
    #[serde(default = "default_axis")]
    axis: Vec2,
}

fn default_axis() -> Vec2 {
    Vec2::new(1.0, 0.0)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    position: Vec2,
    #[serde(default = "unit_reflectivity")]
    reflectivity: [f64; 2],
}

fn unit_reflectivity() -> [f64; 2] {
    [1.0, 0.0]
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        let l = self.terminals.len();
        let mut terminals = Vec::with_capacity(l);
        for (i, t) in self.terminals.into_iter().enumerate() {
            terminals.push(t.into_terminal(i)?);
        }
        let targets = self
            .targets
            .into_iter()
            .map(|t| PointTarget {
                position: t.position,
                reflectivity: Complex64::new(t.reflectivity[0], t.reflectivity[1]),
            })
            .collect();
        Ok(Scenario {
            terminals,
            targets,
            f0: self.f0_hz,
            bandwidth: self.bandwidth_hz,
            noise_power: self.noise_power,
            sync_errors: self.sync_errors_s.unwrap_or_else(|| vec![vec![0.0; l]; l]),
            pairing: self.pairing.unwrap_or_else(|| AssociationMatrix::identity(l)),
            seed: self.seed,
        })
    }
}

impl TerminalDoc {
    fn into_terminal(self, index: usize) -> Result<Terminal> {
        let (tx, rx) = match self.ula {
            Some(ula) => {
                if !self.tx_elements.is_empty() || !self.rx_elements.is_empty() {
                    return Err(Error::Schema {
                        field: format!("terminals[{index}].ula"),
                        message: "`ula` conflicts with explicit element lists".into(),
                    });
                }
                if ula.axis.norm() == 0.0 || !ula.axis.is_finite() {
                    return Err(Error::Schema {
                        field: format!("terminals[{index}].ula.axis"),
                        message: "array axis must be a finite non-zero vector".into(),
                    });
                }
                let center = self.phase_center.ok_or_else(|| Error::Schema {
                    field: format!("terminals[{index}].phase_center"),
                    message: "`ula` terminals need an explicit phase_center".into(),
                })?;
                let t = Terminal::ula(self.id, center, ula.n_tx, ula.n_rx, ula.spacing_m, ula.axis);
                (t.tx_elements, t.rx_elements)
            }
            None => (self.tx_elements, self.rx_elements),
        };
        let phase_center = self.phase_center.unwrap_or_else(|| centroid(tx.iter().chain(&rx)));
        Ok(Terminal {
            id: self.id,
            phase_center,
            tx_elements: tx,
            rx_elements: rx,
        })
    }
}

fn centroid<'a>(pts: impl Iterator<Item = &'a Vec2>) -> Vec2 {
    let (mut sum, mut n) = (Vec2::ZERO, 0usize);
    for &p in pts {
        sum += p;
        n += 1;
    }
    if n == 0 {
        Vec2::ZERO
    } else {
        sum * (1.0 / n as f64)
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        Self {
            terminals: s
                .terminals
                .iter()
                .map(|t| TerminalDoc {
                    id: t.id,
                    phase_center: Some(t.phase_center),
                    tx_elements: t.tx_elements.clone(),
                    rx_elements: t.rx_elements.clone(),
                    ula: None,
                })
                .collect(),
            targets: s
                .targets
                .iter()
                .map(|t| TargetDoc {
                    position: t.position,
                    reflectivity: [t.reflectivity.re, t.reflectivity.im],
                })
                .collect(),
            f0_hz: s.f0,
            bandwidth_hz: s.bandwidth,
            noise_power: s.noise_power,
            sync_errors_s: Some(s.sync_errors.clone()),
            pairing: Some(s.pairing.clone()),
            seed: s.seed,
        }
    }
}

/// Regular pixel grid. Pixel `(ix, iy)` sits at
/// `origin + (ix * dx, iy * dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub origin: Vec2,
    pub spacing: (f64, f64),
    pub size: (usize, usize),
}

impl ImageGrid {
    pub fn new(origin: Vec2, spacing: (f64, f64), size: (usize, usize)) -> Result<Self> {
        let g = Self { origin, spacing, size };
        let (dx, dy) = spacing;
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        if size.0 == 0 || size.1 == 0 {
            return Err(Error::InvalidArgument("grid must have at least one pixel per axis".into()));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        Ok(g)
    }

    /// Grid of `size` pixels whose middle pixel sits on `center` (exactly
    /// when both sizes are odd).
    pub fn centered(center: Vec2, spacing: (f64, f64), size: (usize, usize)) -> Result<Self> {
        let origin = Vec2::new(
            center.x - (size.0 as f64 - 1.0) / 2.0 * spacing.0,
            center.y - (size.1 as f64 - 1.0) / 2.0 * spacing.1,
        );
        Self::new(origin, spacing, size)
    }

    /// Odd-sized grid covering `center ± half_extent` at the given spacing.
    pub fn covering(center: Vec2, half_extent: (f64, f64), spacing: (f64, f64)) -> Result<Self> {
        let n = |h: f64, d: f64| 2 * (h / d).ceil().max(0.0) as usize + 1;
        Self::centered(center, spacing, (n(half_extent.0, spacing.0), n(half_extent.1, spacing.1)))
    }

    pub fn nx(&self) -> usize {
        self.size.0
    }

    pub fn ny(&self) -> usize {
        self.size.1
    }

    pub fn len(&self) -> usize {
        self.size.0 * self.size.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + ix as f64 * self.spacing.0,
            self.origin.y + iy as f64 * self.spacing.1,
        )
    }

    /// Nearest pixel to `p`, if `p` lies within half a pixel of the grid.
    pub fn nearest(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.spacing.0).round();
        let fy = ((p.y - self.origin.y) / self.spacing.1).round();
        if fx < 0.0 || fy < 0.0 || fx >= self.size.0 as f64 || fy >= self.size.1 as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Lower-left and upper-right pixel positions.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        (self.origin, self.position(self.size.0 - 1, self.size.1 - 1))
    }
}
