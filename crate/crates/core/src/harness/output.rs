//! Files written by a run: CSV tables, the JSON-lines report, `SCHEMA.md`
//! and optional SVG line plots.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::diagnostics::DiagRecord;
use crate::error::Result;

/// Column name and meaning.
pub type Column = (&'static str, &'static str);

/// Columns of every trajectory CSV.
pub const TRAJECTORY_COLUMNS: [Column; 10] = [
    ("t", "sample time"),
    ("E_s", "energy functional with coefficients frozen at the sampled elevation"),
    ("X_s", "X^s norm of the state"),
    ("mass", "mean of zeta (decoupled runs: mean of v+^lambda)"),
    ("mean_v", "mean of v (decoupled runs: mean of v-^lambda)"),
    ("h1_min", "minimum upper-layer depth 1 - eps zeta"),
    ("h2_min", "minimum lower-layer depth 1/delta + eps zeta"),
    ("q1_min", "minimum of 1 + eps kappa1 zeta"),
    ("q2_min", "minimum of 1 + eps kappa2 zeta"),
    ("solver_iters", "elliptic solver iterations since the previous row"),
];

/// Destination directory plus the registry of every CSV written into it.
pub struct OutputDir {
    dir: PathBuf,
    svg: bool,
    schema: Mutex<BTreeMap<String, (String, Vec<Column>)>>,
}

impl OutputDir {
    pub fn create(dir: &Path, svg: bool) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_owned(),
            svg,
            schema: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn svg_enabled(&self) -> bool {
        self.svg
    }

    /// Opens `name` and writes its header. The file is listed in `SCHEMA.md`.
    pub fn csv(&self, name: &str, description: &str, columns: &[Column]) -> Result<CsvWriter> {
        self.schema
            .lock()
            .expect("schema registry poisoned")
            .insert(name.to_owned(), (description.to_owned(), columns.to_vec()));
        CsvWriter::create(&self.dir.join(name), columns.iter().map(|c| c.0))
    }

    /// A trajectory CSV whose rows are [`DiagRecord`]s.
    pub fn trajectory(&self, name: &str, description: &str) -> Result<CsvWriter> {
        self.csv(name, description, &TRAJECTORY_COLUMNS)
    }

    pub fn write_schema(&self) -> Result<PathBuf> {
        let schema = self.schema.lock().expect("schema registry poisoned");
        let mut md = String::from("# Output schema\n\nAll CSV files have a header row. Floats are written with 17 significant digits.\n");
        for (name, (description, columns)) in schema.iter() {
            md.push_str(&format!("\n## `{name}`\n\n{description}\n\n| column | meaning |\n|---|---|\n"));
            for (col, doc) in columns {
                md.push_str(&format!("| `{col}` | {} |\n", doc.replace('|', "\\|")));
            }
        }
        md.push_str(
            "\n## `report.jsonl`\n\nOne JSON object per line. The first has `\"kind\": \"config\"` and echoes every \
             configuration key with defaults filled in, thresholds included. Each `\"kind\": \"verdict\"` line carries \
             `criterion`, `metric`, `threshold`, `threshold_value`, `bound` (`max` or `min`) and `pass`. The last line \
             has `\"kind\": \"summary\"` with the fitted quantities and the overall `pass`.\n",
        );
        let path = self.dir.join("SCHEMA.md");
        std::fs::write(&path, md)?;
        Ok(path)
    }

    /// Writes a line plot when SVG output is enabled.
    pub fn plot(&self, name: &str, plot: &LinePlot) -> Result<Option<PathBuf>> {
        if !self.svg {
            return Ok(None);
        }
        let path = self.dir.join(name);
        std::fs::write(&path, plot.render())?;
        Ok(Some(path))
    }
}

/// Header-first CSV writer; every row is flushed to the OS buffer as it arrives.
pub struct CsvWriter {
    out: BufWriter<File>,
    width: usize,
}

impl CsvWriter {
    pub fn create<'a>(path: &Path, columns: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let columns: Vec<&str> = columns.into_iter().collect();
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvWriter {
            out,
            width: columns.len(),
        })
    }

    /// Appends a row of preformatted cells.
    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        assert_eq!(cells.len(), self.width, "row width does not match the header");
        writeln!(self.out, "{}", cells.join(","))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn record(&mut self, r: &DiagRecord<f64>) -> Result<()> {
        writeln!(self.out, "{}", r.csv_row())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Formats a float for CSV output.
pub fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal SVG line plot with optional log axes.
#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl LinePlot {
    pub fn render(&self) -> String {
        let (w, h, margin) = (640.0, 420.0, 60.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let points: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|&(x, y)| (tx(x), ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let bounds = |vals: Vec<f64>| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(points.iter().map(|p| p.0).collect());
        let (y0, y1) = bounds(points.iter().map(|p| p.1).collect());
        let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
        let sy = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);

        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <rect x=\"{margin}\" y=\"{margin}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            w - 2.0 * margin,
            h - 2.0 * margin,
            w / 2.0,
            escape(&self.title),
            w / 2.0,
            h - 16.0,
            escape(&self.axis_label(&self.x_label, self.log_x)),
            h / 2.0,
            h / 2.0,
            escape(&self.axis_label(&self.y_label, self.log_y)),
        );
        for (x, anchor, y) in [(x0, "start", h - margin + 16.0), (x1, "end", h - margin + 16.0)] {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{y}\" text-anchor=\"{anchor}\">{:.3e}</text>\n",
                sx(x),
                if self.log_x { 10f64.powf(x) } else { x }
            ));
        }
        for y in [y0, y1] {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3e}</text>\n",
                margin - 4.0,
                sy(y) + 4.0,
                if self.log_y { 10f64.powf(y) } else { y }
            ));
        }
        for (i, (label, pts)) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">{}</text>\n",
                w - margin - 150.0,
                margin + 16.0 * (i as f64 + 1.0),
                escape(label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }

    fn axis_label(&self, label: &str, log: bool) -> String {
        if log {
            format!("{label} (log scale)")
        } else {
            label.to_owned()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
