use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use walkdir::WalkDir;
use wavesense::export::{fmt_num, to_json_string, write_coverage_csv, write_hull_csv, write_record_csv};
use wavesense::fusion::{fuse_coherent, fuse_incoherent, FusionWeights};
use wavesense::imaging::{default_grid, image_all_pairs, BackprojectOptions, ComplexImage, Interpolation};
use wavesense::orchestrate::{abutment_residuals, plan, tessellated_scenario, tessellation_angles, Objective};
use wavesense::scene::{load_scenario, validate, AssociationMatrix, ImageGrid, Scenario};
use wavesense::synth::{synthesize, SynthConfig};
use wavesense::wavenumber::{coverage_region, predicted_resolution, DEFAULT_N_FREQ};
use wavesense::{Error, Vec2};

use crate::failure::Failure;
use crate::imageio::{read_images, write_image, write_text};
use crate::{overrides, Cli, Command, CoverageArgs, FuseArgs, GridArgs, ImageArgs, Interp, Mode, OrchestrateArgs, ReportArgs, Weights};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if !g.dyn_range.is_finite() || g.dyn_range <= 0.0 {
        return Err(Failure::validation("usage", "--dyn-range must be positive"));
    }
    match &cli.command {
        Command::Coverage(a) => coverage(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Image(a) => image(cli, a),
        Command::Fuse(a) => fuse(cli, a),
        Command::Orchestrate(a) => orchestrate(cli, a),
        Command::Report(a) => report(cli, a),
    }
}

fn load(cli: &Cli) -> Result<Scenario, Failure> {
    let g = &cli.global;
    let path = g
        .scenario
        .as_ref()
        .ok_or_else(|| Failure::validation("usage", "--scenario is required"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::validation("scenario_unreadable", format!("{}: {e}", path.display())))?;
    let text = if g.overrides.is_empty() {
        text
    } else {
        let mut doc: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => return Err(load_scenario(&text).err().map_or_else(|| Failure::validation("parse", "invalid JSON"), Failure::from)),
        };
        for spec in &g.overrides {
            overrides::apply(&mut doc, spec)?;
        }
        doc.to_string()
    };
    let mut s = load_scenario(&text)?;
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    let violations = validate(&s);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations).into());
    }
    Ok(s)
}

fn out_dir(cli: &Cli, sub: Option<&str>) -> Result<std::path::PathBuf, Failure> {
    let dir = match sub {
        Some(s) => cli.global.out.join(s),
        None => cli.global.out.clone(),
    };
    fs::create_dir_all(&dir).map_err(|e| Failure::runtime("io", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn first_target(s: &Scenario) -> Result<Vec2, Failure> {
    s.targets
        .first()
        .map(|t| t.position)
        .ok_or_else(|| Failure::validation("no_target", "scenario has no targets; pass --target"))
}

fn grid_for(s: &Scenario, a: &GridArgs) -> Result<ImageGrid, Failure> {
    if !(a.margin.is_finite() && a.margin >= 0.0) {
        return Err(Failure::validation("usage", "--margin must be non-negative"));
    }
    let Some(d) = a.spacing else {
        return Ok(default_grid(s, a.margin)?);
    };
    if !(d.is_finite() && d > 0.0) {
        return Err(Failure::validation("usage", "--spacing must be positive"));
    }
    let first = first_target(s)?;
    let (mut lo, mut hi) = (first, first);
    for t in &s.targets {
        lo = Vec2::new(lo.x.min(t.position.x), lo.y.min(t.position.y));
        hi = Vec2::new(hi.x.max(t.position.x), hi.y.max(t.position.y));
    }
    let half = ((hi.x - lo.x) / 2.0 + a.margin, (hi.y - lo.y) / 2.0 + a.margin);
    Ok(ImageGrid::covering((lo + hi) * 0.5, half, (d, d))?)
}

fn options(a: &ImageArgs) -> BackprojectOptions {
    BackprojectOptions {
        interpolation: match a.interp {
            Interp::Linear => Interpolation::Linear,
            Interp::Sinc => Interpolation::DEFAULT_SINC,
        },
        workers: a.workers,
    }
}

fn pair_images(s: &Scenario, a: &ImageArgs) -> Result<Vec<ComplexImage>, Failure> {
    let grid = grid_for(s, &a.grid)?;
    let records = synthesize(s, &SynthConfig::covering(s, Some(&grid)))?;
    Ok(image_all_pairs(&records, s, &grid, &options(a))?)
}

fn coverage(cli: &Cli, a: &CoverageArgs) -> Result<(), Failure> {
    let s = load(cli)?;
    let target = match a.target {
        Some((x, y)) => Vec2::new(x, y),
        None => first_target(&s)?,
    };
    let region = coverage_region(&s, target, a.n_freq, a.baseband)?;
    let est = predicted_resolution(&region);
    let dir = out_dir(cli, None)?;

    let mut buf = Vec::new();
    write_coverage_csv(&region, &mut buf)?;
    fs::write(dir.join("coverage.csv"), buf)?;
    let mut buf = Vec::new();
    write_hull_csv(&est, &mut buf)?;
    fs::write(dir.join("hull.csv"), buf)?;
    let doc = json!({
        "target": target,
        "n_freq": a.n_freq,
        "baseband": a.baseband,
        "active_pairs": s.pairing.count_active(),
        "rho_x": serde_json::to_value(&est)?["rho_x"],
        "rho_y": serde_json::to_value(&est)?["rho_y"],
        "dk_x": est.dk_x,
        "dk_y": est.dk_y,
    });
    write_text(&dir.join("resolution.json"), &to_json_string(&doc)?)
}

fn simulate(cli: &Cli, a: &GridArgs) -> Result<(), Failure> {
    let s = load(cli)?;
    let grid = grid_for(&s, a)?;
    let cfg = SynthConfig::covering(&s, Some(&grid));
    let records = synthesize(&s, &cfg)?;
    let dir = out_dir(cli, Some("records"))?;
    let mut entries = Vec::with_capacity(records.len());
    for r in &records {
        let name = format!("{}.csv", r.channel);
        let mut w = BufWriter::new(fs::File::create(dir.join(&name))?);
        write_record_csv(r, &mut w)?;
        w.flush()?;
        entries.push(json!({
            "channel": r.channel.to_string(),
            "file": format!("records/{name}"),
            "t0": r.t0,
            "samples": r.samples.len(),
        }));
    }
    let manifest = json!({
        "fs": cfg.fs,
        "window": [cfg.window.0, cfg.window.1],
        "grid": grid,
        "seed": s.seed,
        "noise_power": s.noise_power,
        "records": entries,
    });
    write_text(&out_dir(cli, None)?.join("manifest.json"), &to_json_string(&manifest)?)
}

fn image(cli: &Cli, a: &ImageArgs) -> Result<(), Failure> {
    let s = load(cli)?;
    let truth = s.targets.first().map(|t| t.position);
    let images = pair_images(&s, a)?;
    let dir = out_dir(cli, Some("images"))?;
    for img in &images {
        let (l, k) = img.provenance.pair().unwrap_or_default();
        write_image(&dir, &format!("pair_{l}-{k}"), img, truth, cli.global.dyn_range)?;
    }
    Ok(())
}

fn write_metrics(dir: &Path, label: &str, extra: Value, metrics: Value) -> Result<(), Failure> {
    let mut doc = json!({ "label": label });
    for (k, v) in extra.as_object().into_iter().flatten().chain(metrics.as_object().into_iter().flatten()) {
        doc[k] = v.clone();
    }
    write_text(&dir.join("metrics.json"), &to_json_string(&doc)?)?;

    let m = &metrics["metrics"];
    let cell = |v: &Value| v.as_f64().map(fmt_num).unwrap_or_default();
    let row = [
        label.to_string(),
        cell(&m["peak_pos"][0]),
        cell(&m["peak_pos"][1]),
        cell(&m["rho_x_meas"]),
        cell(&m["rho_y_meas"]),
        cell(&m["pslr_db"]),
        cell(&m["islr_db"]),
        cell(&m["peak_snr_db"]),
    ];
    write_text(
        &dir.join("metrics.csv"),
        &format!("{CSV_HEADER}\n{}\n", row.join(",")),
    )
}

const CSV_HEADER: &str = "label,peak_x,peak_y,rho_x_meas,rho_y_meas,pslr_db,islr_db,peak_snr_db";

fn fuse(cli: &Cli, a: &FuseArgs) -> Result<(), Failure> {
    let scenario = match (&a.images, &cli.global.scenario, a.weights) {
        (Some(_), None, Weights::Uniform) => None,
        _ => Some(load(cli)?),
    };
    let images = match &a.images {
        Some(dir) => read_images(dir)?,
        None => pair_images(scenario.as_ref().expect("scenario loaded"), &a.image)?,
    };
    let weights = match a.weights {
        Weights::Uniform => FusionWeights::uniform(images.len()),
        Weights::Density => {
            let s = scenario.as_ref().expect("scenario loaded");
            let w = FusionWeights::density_compensated(s, first_target(s)?, DEFAULT_N_FREQ)?;
            let map: BTreeMap<(usize, usize), f64> =
                s.pairing.active_pairs().into_iter().zip(w.values).collect();
            FusionWeights::from_pair_map(&map, &images)
        }
    };
    let fused = match a.mode {
        Mode::Incoherent => fuse_incoherent(&images, &weights)?,
        Mode::Coherent => fuse_coherent(&images, &weights)?,
    };
    let truth = scenario.as_ref().and_then(|s| s.targets.first()).map(|t| t.position);
    let dir = out_dir(cli, None)?;
    let metrics = write_image(&dir, "fused", &fused, truth, cli.global.dyn_range)?;
    let extra = json!({
        "mode": match a.mode { Mode::Incoherent => "incoherent", Mode::Coherent => "coherent" },
        "weights": match a.weights { Weights::Uniform => "uniform", Weights::Density => "density" },
        "images": images.iter().map(|i| i.provenance.label()).collect::<Vec<_>>(),
        "weight_values": weights.values,
    });
    write_metrics(&dir, &fused.provenance.label(), extra, metrics)
}

fn orchestrate(cli: &Cli, a: &OrchestrateArgs) -> Result<(), Failure> {
    let s = load(cli)?;
    let target = first_target(&s)?;
    let bandwidth = a.b.unwrap_or(s.bandwidth);
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Failure::validation("usage", "--B must be positive"));
    }
    if a.l == 0 {
        return Err(Failure::validation("usage", "--L must be at least 1"));
    }
    let template = &s.terminals[0];
    let range = template.phase_center.distance(target);
    let psi0 = a.psi0_deg.to_radians();
    let angles = tessellation_angles(psi0, s.f0, bandwidth, a.l)?;
    let mut tess = tessellated_scenario(template, target, range, s.f0, bandwidth, &angles);
    tess.targets = s.targets.clone();
    tess.noise_power = s.noise_power;
    tess.seed = s.seed;
    let violations = validate(&tess);
    if !violations.is_empty() {
        return Err(Error::InvalidScenario(violations).into());
    }

    let p = plan(&tess, target, a.l, Objective::ExtentY)?;
    let mut one = AssociationMatrix::zeros(a.l);
    one.set(0, 0, true);
    let single = predicted_resolution(&coverage_region(&tess.clone().with_pairing(one), target, DEFAULT_N_FREQ, false)?);
    let fused_scenario = tess.clone().with_pairing(p.pairing.clone());
    let predicted = predicted_resolution(&coverage_region(&fused_scenario, target, DEFAULT_N_FREQ, false)?);

    let dir = out_dir(cli, None)?;
    let doc = json!({
        "L": a.l,
        "bandwidth_hz": bandwidth,
        "psi0_deg": a.psi0_deg,
        "range_m": range,
        "target": target,
        "terminals": p.terminals,
        "angles_deg": p.angles.iter().map(|x| x.to_degrees()).collect::<Vec<_>>(),
        "positions": p.positions,
        "pairing": p.pairing,
        "abutment_residuals": abutment_residuals(&angles, s.f0, bandwidth),
        "predicted": serde_json::to_value(&predicted)?,
        "single_terminal": serde_json::to_value(&single)?,
        "rho_y_ratio": ratio(single.rho_y, predicted.rho_y),
        "rho_x_ratio": ratio(single.rho_x, predicted.rho_x),
    });
    write_text(&dir.join("plan.json"), &to_json_string(&doc)?)?;
    write_text(&dir.join("scenario.json"), &fused_scenario.to_json())?;

    let images = pair_images(&fused_scenario, &a.image)?;
    let fused = fuse_coherent(&images, &FusionWeights::uniform(images.len()))?;
    let metrics = write_image(&dir, "fused", &fused, Some(target), cli.global.dyn_range)?;
    write_metrics(&dir, &fused.provenance.label(), json!({ "mode": "coherent", "weights": "uniform" }), metrics)
}

fn ratio(a: f64, b: f64) -> Value {
    let r = a / b;
    if r.is_finite() { json!(r) } else { Value::Null }
}

fn report(cli: &Cli, a: &ReportArgs) -> Result<(), Failure> {
    if !a.runs.is_dir() {
        return Err(Failure::validation("usage", format!("{} is not a directory", a.runs.display())));
    }
    let mut runs = Vec::new();
    let mut rows = vec![format!("run,{CSV_HEADER}")];
    for entry in WalkDir::new(&a.runs).sort_by_file_name() {
        let entry = entry.map_err(|e| Failure::runtime("io", e.to_string()))?;
        if entry.file_name() != "metrics.json" || !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().parent().and_then(|p| p.strip_prefix(&a.runs).ok()).unwrap_or(Path::new(""));
        let run: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let run = if run.is_empty() { ".".to_string() } else { run.join("/") };
        let text = fs::read_to_string(entry.path())?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::runtime("json", format!("{}: {e}", entry.path().display())))?;
        if let Ok(csv) = fs::read_to_string(entry.path().with_extension("csv")) {
            if let Some(line) = csv.lines().nth(1) {
                rows.push(format!("{run},{line}"));
            }
        }
        runs.push(json!({ "run": run, "result": v }));
    }
    let dir = out_dir(cli, None)?;
    let doc = json!({ "count": runs.len(), "runs": runs });
    write_text(&dir.join("summary.json"), &to_json_string(&doc)?)?;
    write_text(&dir.join("summary.csv"), &(rows.join("\n") + "\n"))?;
    Ok(())
}
