//! Minimal line and bar plots of a table.

use std::fmt::Write as _;

use crate::output::{fmt_float, Cell, Table};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    /// Columns whose distinct values split the rows into series.
    pub group: Vec<String>,
    pub bars: bool,
}

impl Plot {
    pub fn lines(title: &str, x: &str, ys: &[&str]) -> Plot {
        Plot { title: title.into(), x: x.into(), ys: ys.iter().map(|s| s.to_string()).collect(), group: Vec::new(), bars: false }
    }

    pub fn grouped(mut self, columns: &[&str]) -> Plot {
        self.group = columns.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn bars(mut self) -> Plot {
        self.bars = true;
        self
    }

    fn series(&self, table: &Table) -> Vec<(String, Vec<(f64, f64)>)> {
        let col = |name: &str| table.header.iter().position(|h| h == name);
        let value = |c: &Cell| match c {
            Cell::Float(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        };
        let Some(xi) = col(&self.x) else {
            return Vec::new();
        };
        let g: Vec<usize> = self.group.iter().filter_map(|c| col(c)).collect();
        let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for y in &self.ys {
            let Some(yi) = col(y) else { continue };
            for row in &table.rows {
                let mut label = y.clone();
                for gi in &g {
                    label.push_str(&format!(" {}={}", table.header[*gi], short_cell(&row[*gi])));
                }
                let (Some(xv), Some(yv)) = (value(&row[xi]), value(&row[yi])) else { continue };
                if !(xv.is_finite() && yv.is_finite()) {
                    continue;
                }
                match out.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, pts)) => pts.push((xv, yv)),
                    None => out.push((label, vec![(xv, yv)])),
                }
            }
        }
        out
    }

    pub fn render(&self, table: &Table) -> String {
        let series = self.series(table);
        let pts = series.iter().flat_map(|(_, p)| p.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64, 0.0_f64);
        for (x, y) in pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if !(x1 > x0) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if self.bars {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let (ax, ay) = (sx(x0), sy(y0.max(0.0).min(y1)));
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{}" x2="{LEFT}" y2="{TOP}" stroke="black"/>"#, H - BOTTOM);
        let _ = writeln!(s, r#"<line x1="{ax}" y1="{ay}" x2="{}" y2="{ay}" stroke="black"/>"#, W - RIGHT);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, sx(xv), H - BOTTOM + 16.0, short(xv));
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, sy(yv) + 4.0, short(yv));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(&self.x));

        let n = series.len().max(1) as f64;
        let width = (W - LEFT - RIGHT) / (x1 - x0) * 0.8 / n;
        for (j, (label, pts)) in series.iter().enumerate() {
            let c = COLORS[j % COLORS.len()];
            if self.bars {
                for (x, y) in pts {
                    let left = sx(*x) - 0.4 * width * n + j as f64 * width;
                    let (top, bottom) = (sy(y.max(0.0)), sy(y.min(0.0)));
                    let _ = writeln!(s, r#"<rect x="{left:.2}" y="{top:.2}" width="{width:.2}" height="{:.2}" fill="{c}"/>"#, bottom - top);
                }
            } else {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                for (x, y) in pts {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{c}"/>"#, sx(*x), sy(*y));
                }
            }
            let ly = TOP + 14.0 * j as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - RIGHT - 190.0, ly);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT - 175.0, ly + 9.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn short(x: f64) -> String {
    if !x.is_finite() {
        fmt_float(x)
    } else if x == 0.0 || (1e-2..1e4).contains(&x.abs()) {
        format!("{}", (x * 1e3).round() / 1e3)
    } else {
        let full = fmt_float(x);
        let (m, e) = full.split_once('e').unwrap_or((&full, "0"));
        format!("{:.2}e{e}", m.parse::<f64>().unwrap_or(0.0))
    }
}

fn short_cell(c: &Cell) -> String {
    match c {
        Cell::Float(x) => short(*x),
        other => other.render(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
