//! Text and raster writers. Every number is written with nine significant
//! digits so repeated runs produce identical files.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

use crate::imaging::ComplexImage;
use crate::serde_ext::round_sig;
use crate::synth::SignalRecord;
use crate::wavenumber::{ResolutionEstimate, WavenumberRegion};

/// Nine-significant-digit decimal, in exponent form below `1e-3` and from
/// `1e15` up; non-finite values print as `nan`, `inf` and `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let r = round_sig(x);
        if r == 0.0 {
            "0".into()
        } else if !(1e-3..1e15).contains(&r.abs()) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    }
}

/// `pair_id,k_x,k_y,f` with one row per tile sample.
pub fn write_coverage_csv<W: Write>(region: &WavenumberRegion, mut w: W) -> io::Result<()> {
    writeln!(w, "pair_id,k_x,k_y,f")?;
    for tile in &region.tiles {
        for (k, f) in tile.samples.iter().zip(&tile.freqs) {
            writeln!(w, "{},{},{},{}", tile.channel, fmt_num(k.x), fmt_num(k.y), fmt_num(*f))?;
        }
    }
    Ok(())
}

/// Hull vertices in counter-clockwise order.
pub fn write_hull_csv<W: Write>(est: &ResolutionEstimate, mut w: W) -> io::Result<()> {
    writeln!(w, "k_x,k_y")?;
    for v in &est.hull {
        writeln!(w, "{},{}", fmt_num(v.x), fmt_num(v.y))?;
    }
    Ok(())
}

pub fn write_record_csv<W: Write>(rec: &SignalRecord, mut w: W) -> io::Result<()> {
    writeln!(w, "t,re,im")?;
    for (i, z) in rec.samples.iter().enumerate() {
        writeln!(w, "{},{},{}", fmt_num(rec.time(i)), fmt_num(z.re), fmt_num(z.im))?;
    }
    Ok(())
}

/// `x,y,re,im`, rows ordered by y then x.
pub fn write_image_csv<W: Write>(img: &ComplexImage, mut w: W) -> io::Result<()> {
    writeln!(w, "x,y,re,im")?;
    for ((iy, ix), z) in img.pixels.indexed_iter() {
        let p = img.grid.position(ix, iy);
        writeln!(w, "{},{},{},{}", fmt_num(p.x), fmt_num(p.y), fmt_num(z.re), fmt_num(z.im))?;
    }
    Ok(())
}

/// Binary 8-bit PGM of `20 log10 |I|` relative to the peak, clipped to
/// `dyn_range_db`. The top row is the largest y.
pub fn write_pgm<W: Write>(img: &ComplexImage, dyn_range_db: f64, mut w: W) -> io::Result<()> {
    let (ny, nx) = img.pixels.dim();
    let peak = img.pixels.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let range = dyn_range_db.max(f64::MIN_POSITIVE);
    let mut row = Vec::with_capacity(nx);
    for iy in (0..ny).rev() {
        row.clear();
        for ix in 0..nx {
            let m = img.pixels[[iy, ix]].norm();
            let level = if peak > 0.0 && m > 0.0 {
                (20.0 * (m / peak).log10() + range) / range
            } else {
                0.0
            };
            row.push((level.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Replaces every float in a JSON tree by its nine-digit rounding.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = round_json(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
