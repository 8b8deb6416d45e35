use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Single writer for every file of one run.
pub struct Output {
    dir: PathBuf,
    command: String,
    hash: String,
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, command: &str, hash: &str, csv: bool, json: bool, svg: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.into(),
            hash: hash.into(),
            csv,
            json,
            svg,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(name.into());
        Ok(())
    }

    /// CSV body preceded by comment lines naming the config hash and units.
    pub fn csv(&mut self, name: &str, units: &str, body: &str) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let text = format!(
            "# gasgiant {} config_sha256={}\n# units: {units}\n{body}",
            self.command, self.hash
        );
        self.write(name, &text)
    }

    pub fn json(&mut self, name: &str, units: &str, result: Value) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        let doc = json!({
            "command": self.command,
            "config_sha256": self.hash,
            "units": units,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        self.write(name, &text)
    }

    pub fn svg(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        if !self.svg {
            return Ok(());
        }
        self.write(name, contents)
    }

    pub fn finish(mut self, config_path: &str, seed: Option<u64>) -> Result<Vec<String>, CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "command": self.command,
            "config_path": config_path,
            "config_sha256": self.hash,
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": gasgiant_version(),
            "seed": seed,
            "timestamp_unix": timestamp,
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        self.write("manifest.json", &text)?;
        Ok(self.files)
    }
}

fn gasgiant_version() -> &'static str {
    gasgiant::VERSION
}

/// Line chart; `log_y` plots `log10 y` and drops non-positive values.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    pub vertical: Option<(f64, &'a str)>,
    pub log_y: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot<'_> {
    pub fn render(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|(_, s)| {
                s.iter()
                    .filter(|(_, y)| !self.log_y || *y > 0.0)
                    .map(|&(x, y)| (x, if self.log_y { y.log10() } else { y }))
                    .collect()
            })
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, self.title);
        let _ = writeln!(s, r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - m, w - m, h - m);
        let _ = writeln!(s, r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#, h - m);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, self.x_label);
        let y_label = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.to_string() };
        let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{y_label}</text>"#, h / 2.0, h / 2.0);
        for (v, label) in [(x0, x0), (x1, x1)] {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{label:.3}</text>"#, sx(v), h - m + 15.0);
        }
        for v in [y0, y1] {
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, m - 5.0, sy(v) + 4.0);
        }
        if let Some((x, label)) = self.vertical {
            if x >= x0 && x <= x1 {
                let _ = writeln!(s, r#"<line x1="{:.1}" y1="{m}" x2="{:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, sx(x), sx(x), h - m);
                let _ = writeln!(s, r#"<text x="{:.1}" y="{}" fill="gray">{label}</text>"#, sx(x) + 4.0, m + 12.0);
            }
        }
        for (i, ((name, _), p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, w - m - 80.0, m + 14.0 * (i as f64 + 1.0));
        }
        s.push_str("</svg>\n");
        s
    }
}
