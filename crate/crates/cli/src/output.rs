//! Records, CSV tables and SVG plots.

use std::fs;
use std::io::Write;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::Operation;

pub const RECORD_SCHEMA: &str = "lyap-record/1";
pub const PAYLOAD_SCHEMA: &str = "lyap-payload/1";
pub const CSV_SCHEMA: &str = "lyap-csv/1";
pub const SVG_SCHEMA: &str = "lyap-svg/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    BudgetExhausted,
    Failed,
}

/// Everything an operation computed. Contains no timings, so it is a pure
/// function of the scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Payload {
    pub schema: &'static str,
    pub operation: Operation,
    pub status: Status,
    pub result: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub schema: &'static str,
    pub scenario_sha256: String,
    pub software: Software,
    pub wall_time_seconds: f64,
    pub payload: Payload,
}

impl RunRecord {
    pub fn new(scenario_sha256: String, wall_time_seconds: f64, payload: Payload) -> Self {
        Self {
            schema: RECORD_SCHEMA,
            scenario_sha256,
            software: Software { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
            wall_time_seconds,
            payload,
        }
    }
}

pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }
}

pub type Series = (String, Vec<(f64, f64)>);

pub enum Plot {
    Lines { name: String, title: String, x_label: String, y_label: String, series: Vec<Series> },
    /// The discriminant with the band intervals shaded.
    Bands { name: String, discriminant: Vec<(f64, f64)>, bands: Vec<(f64, f64)> },
    /// Values on the cells of a `rows × columns` grid.
    Heat { name: String, title: String, x_label: String, y_label: String, x: Vec<f64>, y: Vec<f64>, values: Vec<Vec<f64>> },
}

impl Plot {
    fn name(&self) -> &str {
        match self {
            Plot::Lines { name, .. } | Plot::Bands { name, .. } | Plot::Heat { name, .. } => name,
        }
    }
}

/// JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

pub fn write_csv(dir: &Path, table: &Table) -> Result<(), CliError> {
    let mut file = fs::File::create(dir.join(format!("{}.csv", table.name)))?;
    writeln!(file, "# schema: {CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(file);
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Output(format!("plot: {e}"))
}

fn draw(path: &Path, plot: &Plot) -> Result<(), CliError> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    match plot {
        Plot::Lines { title, x_label, y_label, series, .. } => {
            let (x0, x1) = span(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
            let (y0, y1) = span(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
            let mut chart = ChartBuilder::on(&root)
                .caption(title, ("sans-serif", 20))
                .margin(15)
                .x_label_area_size(40)
                .y_label_area_size(70)
                .build_cartesian_2d(x0..x1, y0..y1)
                .map_err(plot_err)?;
            chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
            for (i, (label, points)) in series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                chart
                    .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))
                    .map_err(plot_err)?
                    .label(label)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
            }
            chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
        }
        Plot::Bands { discriminant, bands, .. } => {
            let (x0, x1) = span(discriminant.iter().map(|p| p.0));
            let (y0, y1) = span(discriminant.iter().map(|p| p.1.clamp(-6.0, 6.0)).chain([-2.5, 2.5]));
            let mut chart = ChartBuilder::on(&root)
                .caption("bands", ("sans-serif", 20))
                .margin(15)
                .x_label_area_size(40)
                .y_label_area_size(50)
                .build_cartesian_2d(x0..x1, y0..y1)
                .map_err(plot_err)?;
            chart.configure_mesh().x_desc("E").y_desc("t(E)").draw().map_err(plot_err)?;
            chart
                .draw_series(bands.iter().map(|&(a, b)| Rectangle::new([(a, -2.0), (b, 2.0)], BLUE.mix(0.2).filled())))
                .map_err(plot_err)?;
            for level in [-2.0, 2.0] {
                chart.draw_series(LineSeries::new([(x0, level), (x1, level)], BLACK.mix(0.5))).map_err(plot_err)?;
            }
            let clipped = discriminant.iter().map(|&(e, t)| (e, t.clamp(y0, y1)));
            chart.draw_series(LineSeries::new(clipped, RED.stroke_width(2))).map_err(plot_err)?;
        }
        Plot::Heat { title, x_label, y_label, x, y, values, .. } => {
            let edges = |g: &[f64]| -> Vec<f64> {
                let h = if g.len() > 1 { g[1] - g[0] } else { 1.0 };
                g.iter().map(|v| v - 0.5 * h).chain(g.last().map(|v| v + 0.5 * h)).collect()
            };
            let (xe, ye) = (edges(x), edges(y));
            let top = values.iter().flatten().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
            let mut chart = ChartBuilder::on(&root)
                .caption(title, ("sans-serif", 20))
                .margin(15)
                .x_label_area_size(40)
                .y_label_area_size(70)
                .build_cartesian_2d(xe[0]..xe[xe.len() - 1], ye[0]..ye[ye.len() - 1])
                .map_err(plot_err)?;
            chart.configure_mesh().disable_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
            let cells = values.iter().enumerate().flat_map(|(i, row)| {
                let (xe, ye) = (&xe, &ye);
                row.iter().enumerate().map(move |(j, &v)| {
                    let r = (v.max(0.0) / top).sqrt();
                    let color = HSLColor(0.66 * (1.0 - r), 0.85, 0.25 + 0.4 * r);
                    Rectangle::new([(xe[i], ye[j]), (xe[i + 1], ye[j + 1])], color.filled())
                })
            });
            chart.draw_series(cells).map_err(plot_err)?;
        }
    }
    root.present().map_err(plot_err)?;
    drop(root);
    let svg = fs::read_to_string(path)?;
    fs::write(path, format!("<!-- schema: {SVG_SCHEMA} -->\n{svg}"))?;
    Ok(())
}

pub fn write_plot(dir: &Path, plot: &Plot) -> Result<(), CliError> {
    draw(&dir.join(format!("{}.svg", plot.name())), plot)
}
