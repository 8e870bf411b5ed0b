//! CSV, JSON and SVG output for result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use super::{Cell, NamedTable, PlotHint, Table};
use crate::error::{ConfigError, EmitError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(ConfigError::InvalidSettings(format!("unknown output format `{other}`"))),
        }
    }
}

/// Shortest rendering of `x` rounded to 12 significant digits, in plain
/// notation for moderate exponents and scientific otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_number(*x),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

pub fn render_csv(table: &Table) -> Result<String, EmitError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    let bytes = w.into_inner().map_err(|e| EmitError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a table written by [`render_csv`]. Cells that parse as numbers
/// become numbers, empty cells become missing.
pub fn read_csv(text: &str) -> Result<Table, EmitError> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut table = Table::new(r.headers()?.iter());
    for record in r.records() {
        let record = record?;
        table.push(
            record
                .iter()
                .map(|s| match s {
                    "" => Cell::Missing,
                    s => s.parse::<f64>().map_or_else(|_| Cell::Text(s.to_string()), Cell::Num),
                })
                .collect(),
        );
    }
    Ok(table)
}

pub fn render_json(table: &Table) -> Result<String, EmitError> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            Value::Array(
                row.iter()
                    .map(|c| match c {
                        Cell::Num(x) => json!(x),
                        Cell::Text(s) => json!(s),
                        Cell::Missing => Value::Null,
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(serde_json::to_string_pretty(&json!({ "columns": table.columns, "rows": rows }))?)
}

/// Writes `table` to `path` in the given format.
pub fn emit(table: &Table, format: Format, path: &Path) -> Result<(), EmitError> {
    let text = match format {
        Format::Csv => render_csv(table)?,
        Format::Json => render_json(table)?,
        Format::Svg => render_svg(table),
    };
    fs::write(path, text).map_err(|source| EmitError::Io { path: path.to_path_buf(), source })
}

/// Writes each table as `<dir>/<name>.<ext>` for every format. SVG is
/// skipped for tables without a plot hint.
pub fn write_tables(tables: &[NamedTable], dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir).map_err(|source| EmitError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for named in tables {
        for &format in formats {
            if format == Format::Svg && named.table.plot == PlotHint::None {
                continue;
            }
            let path = dir.join(format!("{}.{}", named.name, format.extension()));
            emit(&named.table, format, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Draws the table according to its plot hint; an empty frame when there
/// is nothing to draw.
pub fn render_svg(table: &Table) -> String {
    let mut body = String::new();
    match &table.plot {
        PlotHint::Lines { x, y, series, log_x } => lines(table, x, y, series, *log_x, &mut body),
        PlotHint::Heatmap { x, y, z } => heatmap(table, x, y, z, &mut body),
        PlotHint::None => {}
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Affine map from data range to pixels.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, p0, p1 }
    }

    fn px(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0 && span.is_finite()) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else {
        let s = format_number((v * 1e9).round() / 1e9);
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    }
}

type Ticks = Vec<(f64, String)>;

fn scale_ticks(scale: Scale, log: bool) -> Ticks {
    let ticks = if log {
        (scale.lo.ceil() as i64..=scale.hi.floor() as i64).map(|e| e as f64).collect()
    } else {
        nice_ticks(scale.lo, scale.hi)
    };
    ticks.into_iter().map(|t| (scale.px(t), tick_label(t, log))).collect()
}

/// Roughly six ticks at grid positions, labelled with the grid values.
fn index_ticks(values: &[f64], p0: f64, cell: f64) -> Ticks {
    let stride = values.len().div_ceil(6).max(1);
    (0..values.len())
        .step_by(stride)
        .map(|i| {
            let short: f64 = format!("{:.3e}", values[i]).parse().expect("float");
            (p0 + (i as f64 + 0.5) * cell, format_number(short))
        })
        .collect()
}

fn axes(out: &mut String, xticks: Ticks, yticks: Ticks, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for (p, label) in xticks {
        let _ = writeln!(out, "<line x1=\"{p:.2}\" y1=\"{y0}\" x2=\"{p:.2}\" y2=\"{}\" stroke=\"black\"/>", y0 + 5.0);
        let _ = writeln!(out, "<text x=\"{p:.2}\" y=\"{}\" text-anchor=\"middle\">{label}</text>", y0 + 18.0);
    }
    for (p, label) in yticks {
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{p:.2}\" x2=\"{x0}\" y2=\"{p:.2}\" stroke=\"black\"/>", x0 - 5.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>", x0 - 8.0, p + 4.0);
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>",
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn empty_axes(out: &mut String, x: &str, y: &str) {
    let xs = Scale::new(0.0, 1.0, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(0.0, 1.0, HEIGHT - BOTTOM, TOP);
    axes(out, scale_ticks(xs, false), scale_ticks(ys, false), x, y);
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn lines(table: &Table, x: &str, y: &str, series: &[String], log_x: bool, out: &mut String) {
    let (Some(xi), Some(yi)) = (table.column_index(x), table.column_index(y)) else { return };
    let si: Vec<usize> = series.iter().filter_map(|s| table.column_index(s)).collect();
    let tx = |v: f64| {
        if log_x {
            if v > 0.0 {
                v.log10()
            } else {
                f64::NAN
            }
        } else {
            v
        }
    };

    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in &table.rows {
        let key =
            si.iter().map(|&i| format!("{}={}", table.columns[i], cell_text(&row[i]))).collect::<Vec<_>>().join(", ");
        let px = row[xi].as_f64().map_or(f64::NAN, tx);
        let py = row[yi].as_f64().unwrap_or(f64::NAN);
        let g = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push((px, py));
    }
    let points = || groups.iter().flat_map(|g| g.1.iter());
    let (Some((xlo, xhi)), Some((ylo, yhi))) = (range(points().map(|p| p.0)), range(points().map(|p| p.1))) else {
        empty_axes(out, x, y);
        return;
    };
    let xs = Scale::new(xlo, xhi, LEFT, WIDTH - RIGHT);
    let ys = Scale::new(ylo.min(0.0), yhi, HEIGHT - BOTTOM, TOP);
    let xlabel = if log_x { format!("{x} (log)") } else { x.to_string() };
    axes(out, scale_ticks(xs, log_x), scale_ticks(ys, false), &xlabel, y);

    for (k, (name, pts)) in groups.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    segment.join(" ")
                );
            } else if let Some(p) = segment.first() {
                let (cx, cy) = p.split_once(',').expect("point");
                let _ = writeln!(out, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"2\" fill=\"{color}\"/>");
            }
            segment.clear();
        };
        for &(px, py) in pts {
            if px.is_finite() && py.is_finite() {
                segment.push(format!("{:.2},{:.2}", xs.px(px), ys.px(py)));
            } else {
                flush(&mut segment, out);
            }
        }
        flush(&mut segment, out);
        if !name.is_empty() {
            let ly = TOP + 10.0 + 16.0 * k as f64;
            let lx = WIDTH - RIGHT + 10.0;
            let _ = writeln!(
                out,
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                lx + 16.0
            );
            let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", lx + 20.0, ly + 4.0, escape(name));
        }
    }
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Piecewise-linear blue-green-yellow colour ramp.
fn color(f: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let f = if f.is_finite() { f.clamp(0.0, 1.0) } else { 0.0 };
    let pos = f * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let u = pos - i as f64;
    let lerp = |a: f64, b: f64| (a + (b - a) * u).round() as u8;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

fn heatmap(table: &Table, x: &str, y: &str, z: &str, out: &mut String) {
    let (Some(xi), Some(yi), Some(zi)) = (table.column_index(x), table.column_index(y), table.column_index(z)) else {
        return;
    };
    let num = |r: &Vec<Cell>, i: usize| r[i].as_f64().unwrap_or(f64::NAN);
    let xv = sorted_unique(table.rows.iter().map(|r| num(r, xi)));
    let yv = sorted_unique(table.rows.iter().map(|r| num(r, yi)));
    let (zlo, zhi) = range(table.rows.iter().map(|r| num(r, zi))).unwrap_or((0.0, 1.0));
    if xv.is_empty() || yv.is_empty() {
        empty_axes(out, x, y);
        return;
    }
    // Cells are drawn by index so uneven (e.g. logarithmic) grids fill the frame.
    let (nx, ny) = (xv.len() as f64, yv.len() as f64);
    let cw = (WIDTH - RIGHT - LEFT) / nx;
    let ch = (HEIGHT - BOTTOM - TOP) / ny;
    let zspan = if zhi > zlo { zhi - zlo } else { 1.0 };
    for row in &table.rows {
        let (vx, vy, vz) = (num(row, xi), num(row, yi), num(row, zi));
        let (Ok(ix), Ok(iy)) = (xv.binary_search_by(|p| p.total_cmp(&vx)), yv.binary_search_by(|p| p.total_cmp(&vy)))
        else {
            continue;
        };
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            LEFT + ix as f64 * cw,
            HEIGHT - BOTTOM - (iy as f64 + 1.0) * ch,
            cw + 0.05,
            ch + 0.05,
            color((vz - zlo) / zspan)
        );
    }
    axes(out, index_ticks(&xv, LEFT, cw), index_ticks(&yv, HEIGHT - BOTTOM, -ch), x, y);

    let bx = WIDTH - RIGHT + 20.0;
    let steps = 20;
    let bh = (HEIGHT - BOTTOM - TOP) / steps as f64;
    for k in 0..steps {
        let f = k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{bx}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
            HEIGHT - BOTTOM - (k as f64 + 1.0) * bh,
            bh + 0.05,
            color(f)
        );
    }
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", bx + 22.0, HEIGHT - BOTTOM, tick_label(zlo, false));
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", bx + 22.0, TOP + 10.0, tick_label(zhi, false));
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", bx + 22.0, (HEIGHT - BOTTOM + TOP) / 2.0, escape(z));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(1.5e-9), "1.5e-9");
        assert_eq!(format_number(2.0e20), "2e20");
        assert_eq!(format_number(9.9999999999999e-1), "1");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["a", "b"]);
        assert_eq!(render_csv(&t).unwrap(), "a,b\r\n");
    }

    #[test]
    fn csv_quotes_and_round_trips() {
        let mut t = Table::new(["x", "status"]);
        t.push(vec![Cell::Num(0.1), Cell::Text("failed: a, \"b\"".into())]);
        t.push(vec![Cell::Missing, Cell::from("ok")]);
        let text = render_csv(&t).unwrap();
        assert!(text.contains("\"failed: a, \"\"b\"\"\""));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows, t.rows);
    }

    #[test]
    fn json_mirrors_columns() {
        let mut t = Table::new(["x", "y"]);
        t.push(vec![Cell::Num(1.5), Cell::Missing]);
        let v: Value = serde_json::from_str(&render_json(&t).unwrap()).unwrap();
        assert_eq!(v["columns"], json!(["x", "y"]));
        assert_eq!(v["rows"][0], json!([1.5, null]));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(nice_ticks(0.0, 40.0), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn color_ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), "#440154");
    }
}
