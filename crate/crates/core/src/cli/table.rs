//! Result rows and their CSV / JSON encodings.

use std::io::Write;

use serde::Serialize;

/// Column order of every table; bump the version when it changes.
pub const TABLE_VERSION: &str = "gsrisk-table/1";
pub const HEADER: [&str; 8] = [
    "u",
    "eps",
    "base",
    "correction",
    "corrected",
    "mc_mean",
    "mc_half_width",
    "tail_ratio",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Row {
    pub u: f64,
    pub eps: f64,
    pub base: f64,
    pub correction: f64,
    pub corrected: f64,
    pub mc_mean: Option<f64>,
    pub mc_half_width: Option<f64>,
    pub tail_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// `x` with 12 significant digits, trailing zeros removed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.11e}");
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{exp}")
    }
}

fn rounded(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(HEADER)?;
    let opt = |v: Option<f64>| v.map(sig12).unwrap_or_default();
    for r in rows {
        w.write_record([
            sig12(r.u),
            sig12(r.eps),
            sig12(r.base),
            sig12(r.correction),
            sig12(r.corrected),
            opt(r.mc_mean),
            opt(r.mc_half_width),
            opt(r.tail_ratio),
        ])?;
    }
    w.flush()
}

pub fn write_json<W: Write>(rows: &[Row], mut out: W) -> std::io::Result<()> {
    let rounded_rows: Vec<Row> = rows
        .iter()
        .map(|r| Row {
            u: rounded(r.u),
            eps: rounded(r.eps),
            base: rounded(r.base),
            correction: rounded(r.correction),
            corrected: rounded(r.corrected),
            mc_mean: r.mc_mean.map(rounded),
            mc_half_width: r.mc_half_width.map(rounded),
            tail_ratio: r.tail_ratio.map(rounded),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rounded_rows)?;
    writeln!(out)
}

pub fn write(rows: &[Row], format: Format, out: impl Write) -> std::io::Result<()> {
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
}

/// Inclusive `start:stop:step` grid; the end point is kept when it lies
/// within half a step of the last node.
pub fn parse_u_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{p}` in u-grid `{spec}`"))
        })
        .collect::<Result<_, _>>()?;
    match nums[..] {
        [u] if u >= 0.0 && u.is_finite() => Ok(vec![u]),
        [a, b, h] if a >= 0.0 && b >= a && h > 0.0 && b.is_finite() => {
            let n = ((b - a) / h + 0.5).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * h).collect())
        }
        _ => Err(format!(
            "u-grid `{spec}` must be `u` or `start:stop:step` with 0 <= start <= stop, step > 0"
        )),
    }
}

pub fn parse_list(spec: &str) -> Result<Vec<f64>, String> {
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{p}` in list `{spec}`"))
        })
        .collect()
}
