//! Relative-error sweeps: empirical error of the quadratic-form estimator
//! against the expectation-level prediction, over a grid of sample sizes.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::estimate_diagonal;
use crate::generate::{gen_gaussian, gen_uniform01};
use crate::matrix::MatrixHandle;
use crate::mmio::read_matrix_market_path;
use crate::oracle::explicit_oracle;
use crate::theory::{predicted_rel_err_elementwise, predicted_rel_err_normwise};

pub const CSV_HEADER: &str = "matrix,selector,N,emp_rel_err_mean,theo_rel_err,repeats,seed";

/// Sample-size grid for the 100 x 100 synthetic matrices.
pub const GRID_SYNTHETIC: [u64; 7] = [10, 50, 100, 250, 500, 750, 1000];
/// Sample-size grid for msc10480.
pub const GRID_MSC10480: [u64; 6] = [100, 1000, 5000, 10000, 50000, 100000];

/// Where the matrix under test comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixSource {
    Gaussian(usize),
    Uniform(usize),
    MatrixMarket(PathBuf),
}

impl FromStr for MatrixSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::invalid(format!(
                "matrix source '{s}' must look like gauss:D, uniform:D or mm:PATH"
            ))
        })?;
        let dim = || -> Result<usize> {
            match arg.parse::<usize>() {
                Ok(d) if d >= 1 => Ok(d),
                _ => Err(Error::invalid(format!("invalid dimension '{arg}' in matrix source"))),
            }
        };
        match kind {
            "gauss" => Ok(Self::Gaussian(dim()?)),
            "uniform" => Ok(Self::Uniform(dim()?)),
            "mm" if !arg.is_empty() => Ok(Self::MatrixMarket(PathBuf::from(arg))),
            "mm" => Err(Error::invalid("mm: source needs a path")),
            other => Err(Error::invalid(format!("unknown matrix source kind '{other}'"))),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian(d) => write!(f, "gauss:{d}"),
            Self::Uniform(d) => write!(f, "uniform:{d}"),
            Self::MatrixMarket(p) => write!(f, "mm:{}", p.display()),
        }
    }
}

impl MatrixSource {
    /// Short identifier for result tables: `gauss:D`, `uniform:D`, or the file stem.
    pub fn id(&self) -> String {
        let raw = match self {
            Self::MatrixMarket(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            other => other.to_string(),
        };
        raw.replace([',', '\n', '\r', '"'], "_")
    }

    /// `matrix_seed` only affects the synthetic generators.
    pub fn load(&self, matrix_seed: u64) -> Result<MatrixHandle> {
        match self {
            Self::Gaussian(d) => gen_gaussian(*d, matrix_seed),
            Self::Uniform(d) => gen_uniform01(*d, matrix_seed),
            Self::MatrixMarket(p) => read_matrix_market_path(p),
        }
    }
}

/// Parses a comma-separated, strictly increasing list of positive sample sizes.
pub fn parse_grid(s: &str) -> Result<Vec<u64>> {
    let grid = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<u64>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(Error::invalid(format!("invalid grid entry '{t}'"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

fn check_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sample-size grid is empty"));
    }
    if grid[0] == 0 {
        return Err(Error::invalid("grid entries must be positive"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Index 1 in file order.
    First,
    /// `argmax_p |a_pp|`, smallest index on ties.
    ArgMax,
    /// `argmin_p |a_pp|`, smallest index on ties.
    ArgMin,
    Normwise,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::First, Selector::ArgMax, Selector::ArgMin, Selector::Normwise];

    pub fn name(self) -> &'static str {
        match self {
            Self::First => "first",
            Self::ArgMax => "argmax",
            Self::ArgMin => "argmin",
            Self::Normwise => "normwise",
        }
    }

    /// 0-based diagonal index, or `None` for the norm-wise selector.
    pub fn index(self, m: &MatrixHandle) -> Option<usize> {
        let diag = m.diag();
        let pick = |better: fn(f64, f64) -> bool| {
            let mut best = 0;
            for (p, v) in diag.iter().enumerate().skip(1) {
                if better(v.abs(), diag[best].abs()) {
                    best = p;
                }
            }
            best
        };
        match self {
            Self::First => Some(0),
            Self::ArgMax => Some(pick(|a, b| a > b)),
            Self::ArgMin => Some(pick(|a, b| a < b)),
            Self::Normwise => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: MatrixSource,
    pub grid: Vec<u64>,
    pub repeats: u64,
    pub seed: u64,
    pub delta: f64,
    pub selectors: Vec<Selector>,
}

impl ExperimentSpec {
    /// All four selectors, 10 repeats, δ = 1.
    pub fn new(source: MatrixSource, grid: Vec<u64>, seed: u64) -> Self {
        Self {
            source,
            grid,
            repeats: 10,
            seed,
            delta: 1.0,
            selectors: Selector::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if self.selectors.is_empty() {
            return Err(Error::invalid("no selectors requested"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub matrix: String,
    pub selector: Selector,
    /// 0-based index the selector resolved to (`None` for norm-wise).
    pub index: Option<usize>,
    pub samples: u64,
    pub emp_rel_err_mean: f64,
    pub theo_rel_err: f64,
    pub repeats: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Selector-major, sample-size-minor.
    pub rows: Vec<ExperimentRow>,
}

fn nan_if_degenerate(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::DegenerateTarget(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// Runs the sweep on an already loaded matrix. For each grid point the
/// estimator runs `repeats` times with seeds `seed + 1 ..= seed + repeats`;
/// every selector reads its error from the same runs.
pub fn run_experiment(spec: &ExperimentSpec, m: &MatrixHandle) -> Result<ExperimentResult> {
    spec.validate()?;
    let diag = m.diag();
    let diag_norm_sq = m.diag_norm_sq();
    let oracle = explicit_oracle(m);
    let indices: Vec<Option<usize>> = spec.selectors.iter().map(|s| s.index(m)).collect();

    // errors[n][selector] = mean over runs
    let mut errors = Vec::with_capacity(spec.grid.len());
    for &n in &spec.grid {
        let runs: Vec<Vec<f64>> = (1..=spec.repeats)
            .into_par_iter()
            .map(|r| estimate_diagonal(&oracle, n, spec.seed.wrapping_add(r)).map(|g| g.values))
            .collect::<Result<_>>()?;
        let per_selector: Vec<f64> = indices
            .iter()
            .map(|idx| {
                let total: f64 = runs
                    .iter()
                    .map(|g| match *idx {
                        Some(p) => (diag[p] - g[p]).powi(2) / diag[p].powi(2),
                        None => g.iter().zip(&diag).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / diag_norm_sq,
                    })
                    .sum();
                total / runs.len() as f64
            })
            .collect();
        errors.push(per_selector);
    }

    let matrix = spec.source.id();
    let mut rows = Vec::with_capacity(spec.selectors.len() * spec.grid.len());
    for (k, (&selector, &index)) in spec.selectors.iter().zip(&indices).enumerate() {
        for (g, &n) in spec.grid.iter().enumerate() {
            let theo = nan_if_degenerate(match index {
                Some(p) => predicted_rel_err_elementwise(m, p, n, spec.delta),
                None => predicted_rel_err_normwise(m, n, spec.delta),
            })?;
            let emp = if theo.is_nan() { f64::NAN } else { errors[g][k] };
            rows.push(ExperimentRow {
                matrix: matrix.clone(),
                selector,
                index,
                samples: n,
                emp_rel_err_mean: emp,
                theo_rel_err: theo,
                repeats: spec.repeats,
                seed: spec.seed,
            });
        }
    }
    Ok(ExperimentResult { rows })
}

impl ExperimentResult {
    pub fn rows_for(&self, selector: Selector) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(move |r| r.selector == selector)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.matrix,
                r.selector.name(),
                r.samples,
                r.emp_rel_err_mean,
                r.theo_rel_err,
                r.repeats,
                r.seed
            );
        }
        s
    }

    /// Writes `results.csv` and one `<matrix>_<selector>.svg` per selector into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv = dir.join("results.csv");
        std::fs::File::create(&csv)?.write_all(self.to_csv().as_bytes())?;
        written.push(csv);
        let mut seen: Vec<Selector> = Vec::new();
        for r in &self.rows {
            if seen.contains(&r.selector) {
                continue;
            }
            seen.push(r.selector);
            let svg = self.render_svg(r.selector);
            let name = format!("{}_{}.svg", file_safe(&r.matrix), r.selector.name());
            let path = dir.join(name);
            std::fs::File::create(&path)?.write_all(svg.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }

    /// Log-log chart of N against the empirical and predicted relative error.
    pub fn render_svg(&self, selector: Selector) -> String {
        let rows: Vec<&ExperimentRow> = self.rows_for(selector).collect();
        let title = match rows.first() {
            Some(r) => match r.index {
                Some(p) => format!("{} {} (p = {})", r.matrix, selector.name(), p + 1),
                None => format!("{} {}", r.matrix, selector.name()),
            },
            None => selector.name().to_string(),
        };
        let emp: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.samples as f64, r.emp_rel_err_mean))
            .filter(|&(_, y)| y.is_finite() && y > 0.0)
            .collect();
        let theo: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.samples as f64, r.theo_rel_err))
            .filter(|&(_, y)| y.is_finite() && y > 0.0)
            .collect();
        svg_loglog(&title, &[("empirical", "#1f77b4", &emp), ("theory", "#d62728", &theo)])
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

type Series<'a> = (&'a str, &'a str, &'a [(f64, f64)]);

fn svg_loglog(title: &str, series: &[Series<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;

    let pts = series.iter().flat_map(|s| s.2.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{L} {T} V{} H{}" fill="none" stroke="black"/>"#,
        H - B,
        W - R
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">N (log scale)</text>"#,
        (L + W - R) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">relative error (log scale)</text>"#,
        (T + H - B) / 2.0,
        (T + H - B) / 2.0
    );

    if !x0.is_finite() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">no finite data</text>"#,
            W / 2.0,
            H / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }
    // Pad degenerate ranges so single points still land inside the plot.
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| L + (x.log10() - x0) / (x1 - x0) * (W - L - R);
    let sy = |y: f64| (H - B) - (y.log10() - y0) / (y1 - y0) * (H - T - B);

    for e in x0.ceil() as i32..=x1.floor() as i32 {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#,
            H - B,
            H - B + 5.0,
            H - B + 18.0
        );
    }
    for e in y0.ceil() as i32..=y1.floor() as i32 {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{L}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            L - 5.0,
            L - 8.0,
            y + 4.0
        );
    }
    for (k, (name, color, data)) in series.iter().enumerate() {
        if !data.is_empty() {
            let path: Vec<String> = data
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { 'M' } else { 'L' }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
            for &(x, y) in data.iter() {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let ly = T + 10.0 + 18.0 * k as f64;
        let lx = W - R - 130.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
