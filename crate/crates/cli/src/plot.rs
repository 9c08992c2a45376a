//! Plot data export: gnuplot text data plus a standalone SVG rendering.
//!
//! 1D sweeps give two-column data and a line plot; 2D sweeps give gnuplot's
//! nonuniform matrix format and a heatmap.

use std::fmt::Write as _;

use crate::error::{CliError, Result};
use crate::record::Table;

/// Input columns that can serve as plot axes, in preference order.
const INPUT_COLUMNS: [&str; 7] = ["g1", "g2", "omega0", "Omega", "lambda", "beta", "n_atoms"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    pub x: Option<String>,
    pub y: Option<String>,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub data: String,
    pub svg: String,
}

fn default_value(command: &str) -> Option<&'static str> {
    Some(match command {
        "critical" => "beta_c_closed",
        "spectrum" => "e2_numeric",
        "compare-poles" => "max_discrepancy",
        "exactdiag" => "order_parameter",
        "entropy" => "entropy",
        _ => return None,
    })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Merges tables that share one command and one column layout.
pub fn merge(tables: &[Table]) -> Result<(String, Table)> {
    let first = tables.first().ok_or_else(|| usage("no record files given"))?;
    let mut merged = Table { columns: first.columns.clone(), rows: Vec::new() };
    let mut command: Option<String> = None;
    for t in tables {
        if t.rows.is_empty() {
            continue;
        }
        if t.columns != merged.columns {
            return Err(usage("record files have different columns (mixed commands?)"));
        }
        let c = t.command().ok_or_else(|| usage("records mix several commands"))?;
        match &command {
            Some(prev) if *prev != c => return Err(usage(format!("records mix commands {prev:?} and {c:?}"))),
            _ => command = Some(c),
        }
        merged.rows.extend(t.rows.iter().cloned());
    }
    let command = command.ok_or_else(|| usage("empty record set"))?;
    Ok((command, merged))
}

fn numeric_column(t: &Table, name: &str) -> Result<Vec<f64>> {
    let k = t.column(name).ok_or_else(|| usage(format!("no column {name:?}")))?;
    t.rows
        .iter()
        .map(|r| r[k].num().ok_or_else(|| usage(format!("column {name:?} is not numeric"))))
        .collect()
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Input columns that vary, dropping any that move in lockstep with an
/// earlier one (a `g` sweep moves `g1` and `g2` together).
fn varying_axes(t: &Table) -> Vec<&'static str> {
    let mut picked: Vec<(&'static str, Vec<f64>)> = Vec::new();
    for name in INPUT_COLUMNS {
        let Ok(v) = numeric_column(t, name) else { continue };
        let varies = v.iter().any(|x| x.to_bits() != v[0].to_bits());
        if varies && !picked.iter().any(|(_, w)| same(w, &v)) {
            picked.push((name, v));
        }
    }
    picked.into_iter().map(|(n, _)| n).collect()
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn unique_sorted(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup_by(|a, b| a.to_bits() == b.to_bits());
    u
}

/// Builds the data file and SVG for a merged record set.
pub fn render(tables: &[Table], opts: &PlotOptions) -> Result<PlotFiles> {
    let (command, t) = merge(tables)?;
    let value_name = match &opts.value {
        Some(v) => v.clone(),
        None => default_value(&command).ok_or_else(|| usage(format!("no default value column for {command:?}")))?.into(),
    };
    let values = numeric_column(&t, &value_name)?;
    let auto = varying_axes(&t);
    let x_name = opts.x.clone().or_else(|| auto.first().map(|s| s.to_string()));
    let y_name = opts.y.clone().or_else(|| {
        let x = x_name.as_deref();
        auto.iter().find(|a| Some(**a) != x).map(|s| s.to_string())
    });
    let Some(x_name) = x_name else {
        // A single point: plot against the record index.
        return render_line(&command, "index", &numeric_column(&t, "index")?, &value_name, &values);
    };
    let xs = numeric_column(&t, &x_name)?;
    match y_name {
        None => render_line(&command, &x_name, &xs, &value_name, &values),
        Some(y_name) => {
            let ys = numeric_column(&t, &y_name)?;
            render_map(&command, (&x_name, &xs), (&y_name, &ys), &value_name, &values)
        }
    }
}

fn render_line(command: &str, x_name: &str, xs: &[f64], v_name: &str, vs: &[f64]) -> Result<PlotFiles> {
    let mut data = format!("# {command}: {x_name} {v_name}\n");
    for (x, v) in xs.iter().zip(vs) {
        let _ = writeln!(data, "{} {}", num(*x), num(*v));
    }
    Ok(PlotFiles { data, svg: svg::line(x_name, xs, v_name, vs) })
}

fn render_map(command: &str, x: (&str, &[f64]), y: (&str, &[f64]), v_name: &str, vs: &[f64]) -> Result<PlotFiles> {
    let (ux, uy) = (unique_sorted(x.1), unique_sorted(y.1));
    let pos = |u: &[f64], v: f64| u.iter().position(|w| w.to_bits() == v.to_bits()).unwrap();
    let mut grid = vec![vec![f64::NAN; ux.len()]; uy.len()];
    for ((xv, yv), v) in x.1.iter().zip(y.1).zip(vs) {
        grid[pos(&uy, *yv)][pos(&ux, *xv)] = *v;
    }
    let mut data = format!(
        "# {command}: nonuniform matrix of {v_name}; first row {}, first column {}\n",
        x.0, y.0
    );
    let _ = write!(data, "{}", ux.len());
    for xv in &ux {
        let _ = write!(data, " {}", num(*xv));
    }
    data.push('\n');
    for (yv, row) in uy.iter().zip(&grid) {
        let _ = write!(data, "{}", num(*yv));
        for v in row {
            let _ = write!(data, " {}", num(*v));
        }
        data.push('\n');
    }
    Ok(PlotFiles { data, svg: svg::heatmap(x.0, &ux, y.0, &uy, v_name, &grid) })
}

mod svg {
    use std::fmt::Write as _;

    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 100.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 60.0;

    fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
        let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if lo == hi {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    }

    fn header(out: &mut String) {
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    }

    fn escape(s: &str) -> String {
        s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
    }

    fn axes(out: &mut String, x_name: &str, xr: (f64, f64), y_name: &str, yr: (f64, f64)) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
        let _ = writeln!(
            out,
            "<path d=\"M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}\" fill=\"none\" stroke=\"black\"/>"
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let px = x0 + f * (x1 - x0);
            let py = y0 + f * (y1 - y0);
            let xv = xr.0 + f * (xr.1 - xr.0);
            let yv = yr.0 + f * (yr.1 - yr.0);
            let _ = writeln!(out, "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y0 + 5.0);
            let _ = writeln!(out, "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xv:.4}</text>", y0 + 18.0);
            let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>", x0 - 5.0);
            let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yv:.4}</text>", x0 - 8.0, py + 4.0);
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            0.5 * (x0 + x1),
            H - 15.0,
            escape(x_name)
        );
        let _ = writeln!(
            out,
            "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(y_name)
        );
    }

    fn scale(v: f64, r: (f64, f64), a: f64, b: f64) -> f64 {
        a + (v - r.0) / (r.1 - r.0) * (b - a)
    }

    pub fn line(x_name: &str, xs: &[f64], v_name: &str, vs: &[f64]) -> String {
        let (xr, vr) = (bounds(xs.iter().copied()), bounds(vs.iter().copied()));
        let mut out = String::new();
        header(&mut out);
        axes(&mut out, x_name, xr, v_name, vr);
        // Non-finite values break the curve into segments.
        let mut d = String::new();
        let mut pen_down = false;
        for (x, v) in xs.iter().zip(vs) {
            if !(x.is_finite() && v.is_finite()) {
                pen_down = false;
                continue;
            }
            let px = scale(*x, xr, LEFT, W - RIGHT);
            let py = scale(*v, vr, H - BOTTOM, TOP);
            let _ = write!(d, "{}{px:.2} {py:.2} ", if pen_down { "L" } else { "M" });
            pen_down = true;
        }
        let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>", d.trim_end());
        out.push_str("</svg>\n");
        out
    }

    /// Five-stop approximation of the viridis colormap.
    fn color(t: f64) -> String {
        const STOPS: [(f64, f64, f64); 5] = [
            (68.0, 1.0, 84.0),
            (59.0, 82.0, 139.0),
            (33.0, 145.0, 140.0),
            (94.0, 201.0, 98.0),
            (253.0, 231.0, 37.0),
        ];
        let s = t.clamp(0.0, 1.0) * 4.0;
        let i = (s.floor() as usize).min(3);
        let f = s - i as f64;
        let (a, b) = (STOPS[i], STOPS[i + 1]);
        let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
        format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
    }

    /// Cell edges halfway between neighbouring coordinates.
    fn edges(u: &[f64]) -> Vec<f64> {
        if u.len() == 1 {
            return vec![u[0] - 0.5, u[0] + 0.5];
        }
        let mut e = Vec::with_capacity(u.len() + 1);
        e.push(u[0] - 0.5 * (u[1] - u[0]));
        for w in u.windows(2) {
            e.push(0.5 * (w[0] + w[1]));
        }
        let n = u.len();
        e.push(u[n - 1] + 0.5 * (u[n - 1] - u[n - 2]));
        e
    }

    pub fn heatmap(x_name: &str, ux: &[f64], y_name: &str, uy: &[f64], v_name: &str, grid: &[Vec<f64>]) -> String {
        let (ex, ey) = (edges(ux), edges(uy));
        let xr = (ex[0], ex[ex.len() - 1]);
        let yr = (ey[0], ey[ey.len() - 1]);
        let vr = bounds(grid.iter().flatten().copied());
        let mut out = String::new();
        header(&mut out);
        for (j, row) in grid.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                let px0 = scale(ex[i], xr, LEFT, W - RIGHT);
                let px1 = scale(ex[i + 1], xr, LEFT, W - RIGHT);
                let py0 = scale(ey[j + 1], yr, H - BOTTOM, TOP);
                let py1 = scale(ey[j], yr, H - BOTTOM, TOP);
                let fill = if v.is_finite() { color((v - vr.0) / (vr.1 - vr.0)) } else { "#bbbbbb".into() };
                let _ = writeln!(
                    out,
                    "<rect x=\"{px0:.2}\" y=\"{py0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
                    px1 - px0,
                    py1 - py0
                );
            }
        }
        axes(&mut out, x_name, xr, y_name, yr);
        // Color bar.
        let (bx, bw) = (W - RIGHT + 20.0, 16.0);
        for k in 0..50 {
            let f = k as f64 / 50.0;
            let y = scale(f, (0.0, 1.0), H - BOTTOM, TOP);
            let h = (H - BOTTOM - TOP) / 50.0;
            let _ = writeln!(
                out,
                "<rect x=\"{bx:.2}\" y=\"{:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                y - h,
                h + 0.5,
                color(f + 0.01)
            );
        }
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{:.4}</text>", bx + bw + 4.0, TOP + 10.0, vr.1);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{:.4}</text>", bx + bw + 4.0, H - BOTTOM, vr.0);
        let _ = writeln!(out, "<text x=\"{bx:.2}\" y=\"{:.2}\">{}</text>", TOP - 10.0, escape(v_name));
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Cell;

    fn table(command: &str, cols: &[&str], rows: Vec<Vec<f64>>) -> Table {
        let mut columns = vec!["command".to_string()];
        columns.extend(cols.iter().map(|s| s.to_string()));
        Table {
            columns,
            rows: rows
                .into_iter()
                .map(|r| std::iter::once(Cell::Text(command.into())).chain(r.into_iter().map(Cell::Num)).collect())
                .collect(),
        }
    }

    #[test]
    fn one_dimensional_sweep_gives_two_columns() {
        let t = table("critical", &["index", "g1", "g2", "beta_c_closed"], vec![
            vec![0.0, 1.0, 0.0, f64::NAN],
            vec![1.0, 1.5, 0.0, 2.0],
            vec![2.0, 2.0, 0.0, 1.0],
        ]);
        let f = render(&[t], &PlotOptions::default()).unwrap();
        let lines: Vec<&str> = f.data.lines().collect();
        assert_eq!(lines[0], "# critical: g1 beta_c_closed");
        assert_eq!(lines[1], "1.0000000000000000e0 NaN");
        assert_eq!(lines[3], "2.0000000000000000e0 1.0000000000000000e0");
        assert!(f.svg.starts_with("<svg") && f.svg.contains("<path d=\"M"));
    }

    #[test]
    fn lockstep_couplings_count_as_one_axis() {
        let t = table("exactdiag", &["index", "g1", "g2", "order_parameter"], vec![
            vec![0.0, 0.1, 0.1, 0.0],
            vec![1.0, 0.2, 0.2, 0.5],
        ]);
        let f = render(&[t], &PlotOptions::default()).unwrap();
        assert_eq!(f.data.lines().count(), 3);
    }

    #[test]
    fn two_dimensional_sweep_gives_matrix_and_heatmap() {
        let t = table("critical", &["index", "g1", "g2", "beta_c_closed"], vec![
            vec![0.0, 1.0, 0.5, 3.0],
            vec![1.0, 1.0, 1.0, 2.0],
            vec![2.0, 2.0, 0.5, 1.5],
            vec![3.0, 2.0, 1.0, 1.0],
        ]);
        let f = render(&[t], &PlotOptions::default()).unwrap();
        let lines: Vec<&str> = f.data.lines().collect();
        assert_eq!(lines[1], "2 1.0000000000000000e0 2.0000000000000000e0");
        assert_eq!(lines[2], "5.0000000000000000e-1 3.0000000000000000e0 1.5000000000000000e0");
        assert_eq!(f.svg.matches("<rect").count(), 1 + 4 + 50);
    }

    #[test]
    fn empty_and_mixed_sets_are_rejected() {
        let empty = table("critical", &["index", "g1"], vec![]);
        assert!(matches!(render(&[empty], &PlotOptions::default()), Err(CliError::Usage(_))));
        assert!(matches!(render(&[], &PlotOptions::default()), Err(CliError::Usage(_))));
        let a = table("critical", &["index", "g1"], vec![vec![0.0, 1.0]]);
        let b = table("spectrum", &["index", "g1"], vec![vec![0.0, 1.0]]);
        assert!(matches!(render(&[a, b], &PlotOptions::default()), Err(CliError::Usage(_))));
    }
}
