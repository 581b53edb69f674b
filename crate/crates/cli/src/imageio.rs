//! Image artifacts: `<stem>.csv` pixels, `<stem>.json` sidecar and
//! `<stem>.pgm` raster.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use wavesense::export::{to_json_string, write_image_csv, write_pgm};
use wavesense::imaging::{ComplexImage, Provenance};
use wavesense::metrics::ImageMetrics;
use wavesense::scene::ImageGrid;
use wavesense::{Complex64, Vec2};

use crate::failure::Failure;

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::runtime("io", format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime("io", format!("{}: {e}", path.display())))
}

/// Metrics of `img` as JSON; measurement failures become
/// `{"metrics": null, "metrics_error": kind}`.
pub fn metrics_json(img: &ComplexImage, truth: Option<Vec2>) -> Result<Value, Failure> {
    Ok(match ImageMetrics::measure(img, truth) {
        Ok(m) => json!({ "metrics": serde_json::to_value(m)? }),
        Err(e) => json!({ "metrics": null, "metrics_error": e.kind() }),
    })
}

pub fn write_image(dir: &Path, stem: &str, img: &ComplexImage, truth: Option<Vec2>, dyn_range: f64) -> Result<Value, Failure> {
    let mut w = create(&dir.join(format!("{stem}.csv")))?;
    write_image_csv(img, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}.pgm")))?;
    write_pgm(img, dyn_range, &mut w)?;
    w.flush()?;

    let mut sidecar = json!({
        "label": img.provenance.label(),
        "provenance": img.provenance,
        "grid": img.grid,
    });
    let metrics = metrics_json(img, truth)?;
    for (k, v) in metrics.as_object().into_iter().flatten() {
        sidecar[k] = v.clone();
    }
    write_text(&dir.join(format!("{stem}.json")), &to_json_string(&sidecar)?)?;
    Ok(metrics)
}

/// Reads every `<stem>.json` + `<stem>.csv` pair image in `dir`, sorted by
/// file name.
pub fn read_images(dir: &Path) -> Result<Vec<ComplexImage>, Failure> {
    let bad = |p: &Path, msg: String| Failure::validation("image_input", format!("{}: {msg}", p.display()));
    let mut sidecars: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| bad(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.with_extension("csv").is_file())
        .collect();
    sidecars.sort();

    let mut out = Vec::new();
    for side in sidecars {
        let text = fs::read_to_string(&side).map_err(|e| bad(&side, e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(&side, e.to_string()))?;
        let provenance: Provenance =
            serde_json::from_value(v["provenance"].clone()).map_err(|e| bad(&side, format!("provenance: {e}")))?;
        if provenance.pair().is_none() {
            continue;
        }
        let grid: ImageGrid = serde_json::from_value(v["grid"].clone()).map_err(|e| bad(&side, format!("grid: {e}")))?;
        let grid = ImageGrid::new(grid.origin, grid.spacing, grid.size).map_err(|e| bad(&side, e.to_string()))?;

        let csv = side.with_extension("csv");
        let text = fs::read_to_string(&csv).map_err(|e| bad(&csv, e.to_string()))?;
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(&csv, format!("line {}: {e}", i + 1)));
            if cols.len() != 4 {
                return Err(bad(&csv, format!("line {}: expected 4 columns", i + 1)));
            }
            values.push(Complex64::new(parse(cols[2])?, parse(cols[3])?));
        }
        if values.len() != grid.len() {
            return Err(bad(&csv, format!("{} pixels for a grid of {}", values.len(), grid.len())));
        }
        let mut img = ComplexImage::zeros(grid, provenance);
        for (dst, src) in img.pixels.iter_mut().zip(values) {
            *dst = src;
        }
        out.push(img);
    }
    if out.is_empty() {
        return Err(bad(dir, "no pair images found".into()));
    }
    Ok(out)
}
