//! Experiment configuration: a flat text file of `key = value` lines with
//! dotted keys and `#` comments.
//!
//! ```text
//! grid.nx = 256
//! grid.ny = 256
//! grid.lx = 2.0
//! grid.ly = 2.0
//! eps = 0.03
//! dt = auto
//! tmax = 0.05
//! multiplier = bb
//! initial = ellipse
//! initial.cx = 1.0
//! initial.cy = 1.0
//! initial.a = 0.35
//! initial.b = 0.25
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::approx::ApproxOrder;
use crate::dynamics::{default_dt, dt_max, MultiplierKind};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

const KEYS: &[&str] = &[
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "eps",
    "dt",
    "tmax",
    "multiplier",
    "initial",
    "initial.cx",
    "initial.cy",
    "initial.r",
    "initial.a",
    "initial.b",
    "initial.path",
    "approx_order",
    "record_stride",
    "snapshot_stride",
    "output_dir",
    "fronttrack.npoints",
    "fronttrack.dt",
    "fronttrack.projection",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Circle { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, a: f64, b: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrackConfig {
    pub npoints: usize,
    /// `None` picks half the stability limit of the initial curve.
    pub dt: Option<f64>,
    pub projection: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub eps: f64,
    pub dt: f64,
    pub tmax: f64,
    pub multiplier: MultiplierKind,
    pub initial: Initial,
    pub approx_order: ApproxOrder,
    pub record_stride: u64,
    pub snapshot_stride: u64,
    pub output_dir: PathBuf,
    pub fronttrack: FrontTrackConfig,
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))))
        .transpose()
}

fn require<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    parse(map, key)?.ok_or_else(|| Error::config(key, "missing required key"))
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse_str(&text)?;
        // Relative snapshot paths are taken from the config's directory.
        if let Initial::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::config(&k, "unknown key"));
            }
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::config(&k, "duplicate key"));
            }
        }
        Self::from_map(&map)
    }

    fn from_map(m: &BTreeMap<String, String>) -> Result<Self> {
        let nx: usize = require(m, "grid.nx")?;
        let ny: usize = require(m, "grid.ny")?;
        let lx: f64 = require(m, "grid.lx")?;
        let ly: f64 = require(m, "grid.ly")?;
        let grid = GridSpec::new(nx, ny, lx, ly).map_err(|e| Error::config("grid", e.to_string()))?;

        let eps: f64 = require(m, "eps")?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::config("eps", format!("must lie in (0, 1), got {eps}")));
        }
        let dt = match m.get("dt").map(String::as_str) {
            None | Some("auto") => default_dt(eps),
            Some(_) => require::<f64>(m, "dt")?,
        };
        if !(dt > 0.0) || dt > dt_max(eps) {
            return Err(Error::config("dt", format!("{dt:e} must be positive and at most 0.2·eps² = {:e}", dt_max(eps))));
        }
        let tmax: f64 = require(m, "tmax")?;
        if !(tmax >= 0.0 && tmax.is_finite()) {
            return Err(Error::config("tmax", format!("must be non-negative, got {tmax}")));
        }
        let multiplier = m
            .get("multiplier")
            .map(|v| v.parse::<MultiplierKind>().map_err(|e| Error::config("multiplier", e.to_string())))
            .transpose()?
            .unwrap_or(MultiplierKind::Bb);

        let kind: String = require(m, "initial")?;
        let initial = match kind.as_str() {
            "circle" => Initial::Circle { cx: require(m, "initial.cx")?, cy: require(m, "initial.cy")?, r: require(m, "initial.r")? },
            "ellipse" => Initial::Ellipse {
                cx: require(m, "initial.cx")?,
                cy: require(m, "initial.cy")?,
                a: require(m, "initial.a")?,
                b: require(m, "initial.b")?,
            },
            "file" => Initial::File { path: PathBuf::from(require::<String>(m, "initial.path")?) },
            other => return Err(Error::config("initial", format!("expected circle|ellipse|file, got `{other}`"))),
        };
        check_geometry(&initial, &grid, eps)?;

        let approx_order = ApproxOrder::from_int(parse(m, "approx_order")?.unwrap_or(2))
            .map_err(|e| Error::config("approx_order", e.to_string()))?;
        let record_stride: u64 = parse(m, "record_stride")?.unwrap_or(10);
        if record_stride == 0 {
            return Err(Error::config("record_stride", "must be at least 1"));
        }
        let snapshot_stride: u64 = parse(m, "snapshot_stride")?.unwrap_or(0);
        let output_dir = PathBuf::from(parse::<String>(m, "output_dir")?.unwrap_or_else(|| "out".into()));

        let npoints: usize = parse(m, "fronttrack.npoints")?.unwrap_or(256);
        if npoints < crate::fronttrack::MIN_POINTS {
            return Err(Error::config("fronttrack.npoints", format!("must be at least {}", crate::fronttrack::MIN_POINTS)));
        }
        let ft_dt = match m.get("fronttrack.dt").map(String::as_str) {
            None | Some("auto") => None,
            Some(_) => Some(require::<f64>(m, "fronttrack.dt")?),
        };
        if ft_dt.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::config("fronttrack.dt", "must be positive"));
        }
        let projection: bool = parse(m, "fronttrack.projection")?.unwrap_or(true);

        Ok(Self {
            grid,
            eps,
            dt,
            tmax,
            multiplier,
            initial,
            approx_order,
            record_stride,
            snapshot_stride,
            output_dir,
            fronttrack: FrontTrackConfig { npoints, dt: ft_dt, projection },
        })
    }

    /// Same configuration at another `ε`, with `dt` reset to `0.1·ε²`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_geometry(&self.initial, &self.grid, eps)?;
        Ok(Self { eps, dt: default_dt(eps), ..self.clone() })
    }
}

/// The initial curve plus the cutoff width `2√ε` must stay inside the box.
fn check_geometry(initial: &Initial, grid: &GridSpec, eps: f64) -> Result<()> {
    let (key, cx, cy, ex, ey) = match *initial {
        Initial::Circle { cx, cy, r } => ("initial.r", cx, cy, r, r),
        Initial::Ellipse { cx, cy, a, b } => ("initial.a", cx, cy, a, b),
        Initial::File { .. } => return Ok(()),
    };
    if !(ex > 0.0 && ey > 0.0) {
        return Err(Error::config(key, "radii must be positive"));
    }
    let w = 2.0 * eps.sqrt() + grid.max_spacing();
    let room_x = cx.min(grid.lx - cx) - ex;
    let room_y = cy.min(grid.ly - cy) - ey;
    if !(w < room_x.min(room_y)) {
        return Err(Error::config(
            key,
            format!("cutoff width {w} does not fit between the curve and the boundary (room {:.6})", room_x.min(room_y)),
        ));
    }
    Ok(())
}
