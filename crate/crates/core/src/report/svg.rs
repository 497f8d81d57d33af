//! Heatmap rendering to standalone SVG 1.1.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{escape, fmt_num};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    /// Magnitudes on a light-to-dark scale.
    AbsoluteSequential,
    /// Signed values; zero is the center color.
    SignedDiverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    fn lerp(self, to: Rgb, t: f64) -> Rgb {
        let ch = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
        Rgb(ch(self.0, to.0), ch(self.1, to.1), ch(self.2, to.2))
    }
}

/// `low` is used for the most negative value in diverging mode and is
/// ignored in absolute mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorStops {
    pub low: Rgb,
    pub mid: Rgb,
    pub high: Rgb,
}

impl ColorStops {
    pub fn sequential() -> Self {
        Self {
            low: Rgb(255, 255, 255),
            mid: Rgb(255, 255, 255),
            high: Rgb(8, 48, 107),
        }
    }

    pub fn diverging() -> Self {
        Self {
            low: Rgb(33, 102, 172),
            mid: Rgb(255, 255, 255),
            high: Rgb(178, 24, 43),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub title: String,
    pub row_labels: Vec<String>,
    pub columns: usize,
    /// Optional column labels; feature-map or dimension indices otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_labels: Option<Vec<String>>,
    pub values: Vec<Vec<f64>>,
    pub mode: ColorMode,
    pub stops: ColorStops,
}

impl HeatmapSpec {
    pub fn new(title: impl Into<String>, row_labels: Vec<String>, values: Vec<Vec<f64>>, mode: ColorMode) -> Self {
        let columns = values.first().map_or(0, Vec::len);
        Self {
            title: title.into(),
            row_labels,
            columns,
            column_labels: None,
            values,
            mode,
            stops: match mode {
                ColorMode::AbsoluteSequential => ColorStops::sequential(),
                ColorMode::SignedDiverging => ColorStops::diverging(),
            },
        }
    }

    pub fn with_column_labels(mut self, labels: Vec<String>) -> Self {
        self.column_labels = Some(labels);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.row_labels.len() {
            return Err(Error::Heatmap(format!(
                "{} value rows but {} row labels",
                self.values.len(),
                self.row_labels.len()
            )));
        }
        if let Some((i, r)) = self.values.iter().enumerate().find(|(_, r)| r.len() != self.columns) {
            return Err(Error::Heatmap(format!(
                "row {i} has {} values, expected {}",
                r.len(),
                self.columns
            )));
        }
        if let Some(l) = &self.column_labels {
            if l.len() != self.columns {
                return Err(Error::Heatmap(format!("{} column labels for {} columns", l.len(), self.columns)));
            }
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Heatmap("values must be finite".into()));
        }
        Ok(())
    }

    /// Largest magnitude in the figure; each figure is scaled by its own.
    pub fn scale(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn color(&self, v: f64) -> Rgb {
        color_for(self.mode, &self.stops, v, self.scale())
    }
}

/// Maps `v` to a color given the figure's max magnitude `scale`.
pub fn color_for(mode: ColorMode, stops: &ColorStops, v: f64, scale: f64) -> Rgb {
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    match mode {
        ColorMode::AbsoluteSequential => stops.mid.lerp(stops.high, t.abs()),
        ColorMode::SignedDiverging if t < 0.0 => stops.mid.lerp(stops.low, -t),
        ColorMode::SignedDiverging => stops.mid.lerp(stops.high, t),
    }
}

const CELL: usize = 18;
const PAD: usize = 10;
const TITLE_H: usize = 24;
const LEGEND_H: usize = 40;
const LEGEND_STEPS: usize = 11;
const CHAR_W: usize = 7;

/// Renders one rect per cell, row labels on the left and a legend below.
/// Identical specs give identical bytes.
pub fn render_svg(spec: &HeatmapSpec) -> Result<String> {
    spec.validate()?;
    let label_w = spec.row_labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) * CHAR_W + PAD;
    let grid_w = spec.columns * CELL;
    let grid_h = spec.values.len() * CELL;
    let width = (PAD + label_w + grid_w + PAD).max(PAD * 2 + LEGEND_STEPS * CELL + 120);
    let height = TITLE_H + grid_h + PAD + LEGEND_H;
    let scale = spec.scale();
    let x0 = PAD + label_w;
    let y0 = TITLE_H;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&spec.title));
    let _ = writeln!(s, r#"<text x="{PAD}" y="16" font-weight="bold">{}</text>"#, escape(&spec.title));
    for (i, (label, row)) in spec.row_labels.iter().zip(&spec.values).enumerate() {
        let y = y0 + i * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            x0 - 4,
            y + CELL - 5,
            escape(label)
        );
        for (j, &v) in row.iter().enumerate() {
            let col = spec.column_labels.as_ref().map_or_else(|| j.to_string(), |l| l[j].clone());
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"><title>{} / {}: {}</title></rect>"#,
                x0 + j * CELL,
                color_for(spec.mode, &spec.stops, v, scale).hex(),
                escape(label),
                escape(&col),
                fmt_num(v)
            );
        }
    }

    // legend: evenly spaced swatches from the scale's minimum to its maximum
    let ly = y0 + grid_h + PAD;
    let lo = match spec.mode {
        ColorMode::AbsoluteSequential => 0.0,
        ColorMode::SignedDiverging => -scale,
    };
    let _ = writeln!(s, r#"<g class="legend">"#);
    for k in 0..LEGEND_STEPS {
        let t = k as f64 / (LEGEND_STEPS - 1) as f64;
        let v = lo + (scale - lo) * t;
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{ly}" width="{CELL}" height="{}" fill="{}" stroke="#999999" stroke-width="0.5"/>"##,
            PAD + k * CELL,
            CELL / 2,
            color_for(spec.mode, &spec.stops, v, scale).hex()
        );
    }
    let ty = ly + CELL / 2 + 14;
    let _ = writeln!(s, r#"<text x="{PAD}" y="{ty}">{}</text>"#, fmt_num(lo));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{ty}" text-anchor="end">{}</text>"#,
        PAD + LEGEND_STEPS * CELL,
        fmt_num(scale)
    );
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
