//! Static SVG regret curves: per-method mean with a ±1 std band.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::results::{mean_std, read_rows, CsvError, CsvRow};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Mean and std of regret per round for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub method: String,
    pub rounds: Vec<u32>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Curve {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }
}

/// Aggregates across seeds, sorted by final mean regret, highest first.
pub fn curves(rows: &[CsvRow]) -> Vec<Curve> {
    let mut by_method: BTreeMap<&str, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        by_method
            .entry(&r.method)
            .or_default()
            .entry(r.round)
            .or_default()
            .push(r.simple_regret);
    }
    let mut out: Vec<Curve> = by_method
        .into_iter()
        .map(|(method, rounds)| {
            let mut c = Curve {
                method: method.to_string(),
                rounds: Vec::new(),
                mean: Vec::new(),
                std: Vec::new(),
            };
            for (round, values) in rounds {
                let (m, s) = mean_std(&values);
                c.rounds.push(round);
                c.mean.push(m);
                c.std.push(s);
            }
            c
        })
        .collect();
    out.sort_by(|a, b| b.final_mean().total_cmp(&a.final_mean()).then(a.method.cmp(&b.method)));
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the curves as a standalone SVG document.
pub fn render_svg(curves: &[Curve]) -> String {
    let r_min = curves.iter().flat_map(|c| c.rounds.first()).min().copied().unwrap_or(0) as f64;
    let r_max = curves.iter().flat_map(|c| c.rounds.last()).max().copied().unwrap_or(1) as f64;
    let r_span = (r_max - r_min).max(1.0);
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m + s))
        .fold(0.0_f64, f64::max);
    let y_min = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m - s))
        .fold(0.0_f64, f64::min);
    let y_span = if y_max - y_min > 0.0 { y_max - y_min } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |r: f64| LEFT + (r - r_min) / r_span * plot_w;
    let y = |v: f64| TOP + (y_min + y_span - v) / y_span * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = y_min + y_span * i as f64 / 5.0;
        let py = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let step = (r_span / 10.0).ceil().max(1.0) as usize;
    for r in (r_min as u32..=r_max as u32).step_by(step) {
        let px = x(r as f64);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{r}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">simple regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band: Vec<String> = c
            .rounds
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .map(|(&r, (m, sd))| format!("{:.2},{:.2}", x(r as f64), y(m + sd)))
            .collect();
        band.extend(
            c.rounds
                .iter()
                .zip(c.mean.iter().zip(&c.std))
                .rev()
                .map(|(&r, (m, sd))| format!("{:.2},{:.2}", x(r as f64), y(m - sd))),
        );
        let line: Vec<String> = c
            .rounds
            .iter()
            .zip(&c.mean)
            .map(|(&r, m)| format!("{:.2},{:.2}", x(r as f64), y(*m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.method)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn cmd_plot(csv_path: &Path, out_svg: &Path) -> Result<(), CliError> {
    let bad = |source: CsvError| CliError::BadCsv {
        path: csv_path.to_path_buf(),
        source,
    };
    let file = fs::File::open(csv_path).map_err(|e| bad(CsvError::Csv(e.into())))?;
    let rows = read_rows(file).map_err(bad)?;
    fs::write(out_svg, render_svg(&curves(&rows))).map_err(|e| CliError::io(out_svg, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, seed: u64, round: u32, regret: f64) -> CsvRow {
        CsvRow {
            method: method.into(),
            seed,
            round,
            n_evals: 0,
            threshold: 0.0,
            best_y: -regret,
            simple_regret: regret,
            batch_mean_u: 0.0,
            final_loss: None,
        }
    }

    #[test]
    fn single_method_has_one_line_and_band() {
        let rows = vec![row("a", 0, 1, 3.0), row("a", 1, 1, 1.0), row("a", 0, 2, 2.0), row("a", 1, 2, 0.0)];
        let c = curves(&rows);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].mean, vec![2.0, 1.0]);
        assert_eq!(c[0].std, vec![1.0, 1.0]);
        let svg = render_svg(&c);
        assert!(svg.contains(r#"viewBox="0 0 800 500""#));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn legend_sorted_by_final_regret_descending() {
        let rows = vec![
            row("low", 0, 1, 4.0),
            row("low", 0, 2, 1.0),
            row("high", 0, 1, 3.0),
            row("high", 0, 2, 2.5),
        ];
        let c = curves(&rows);
        assert_eq!(c[0].method, "high");
        assert_eq!(c[1].method, "low");
        let svg = render_svg(&c);
        assert!(svg.find(">high<").unwrap() < svg.find(">low<").unwrap());
    }
}
