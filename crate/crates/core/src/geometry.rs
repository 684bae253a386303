//! Closed polygonal curves and the bridges between curves and fields: signed
//! distance, zero-level-set extraction and area measurement.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{integrate, Field, GridSpec};

pub type Point = [f64; 2];

/// Closed polygon; the last vertex connects back to the first. Positive
/// orientation (counter-clockwise) puts the enclosed region on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidCurve(format!("a closed curve needs at least 3 vertices, got {}", points.len())));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCurve("non-finite vertex".into()));
        }
        Ok(Self { points })
    }

    /// Regular `n`-gon inscribed in the circle of radius `r`, counter-clockwise.
    pub fn circle(center: Point, r: f64, n: usize) -> Result<Self> {
        Self::ellipse(center, r, r, n)
    }

    /// Axis-aligned ellipse with semi-axes `a` (along x) and `b`, sampled at
    /// equal arclength, counter-clockwise, first vertex on the positive x axis.
    pub fn ellipse(center: Point, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidCurve(format!("semi-axes must be positive, got {a}, {b}")));
        }
        // Fine parametric sampling, then equal-arclength resampling.
        let fine = 64 * n.max(16);
        let dense: Vec<Point> = (0..fine)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / fine as f64;
                [center[0] + a * t.cos(), center[1] + b * t.sin()]
            })
            .collect();
        if a == b {
            let pts = (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    [center[0] + a * t.cos(), center[1] + a * t.sin()]
                })
                .collect();
            return Self::new(pts);
        }
        Ok(Self::new(dense)?.resample_linear(n))
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Vertex `i`, with indices taken modulo the vertex count.
    pub fn vertex(&self, i: isize) -> Point {
        let n = self.points.len() as isize;
        self.points[i.rem_euclid(n) as usize]
    }

    /// Lengths of the edges `(i, i+1)`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n).map(|i| dist(self.points[i], self.points[(i + 1) % n])).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    /// Same curve with counter-clockwise orientation.
    pub fn oriented_ccw(self) -> Self {
        if enclosed_area(&self) < 0.0 {
            self.reversed()
        } else {
            self
        }
    }

    pub fn translated(&self, by: Point) -> Self {
        Self { points: self.points.iter().map(|p| [p[0] + by[0], p[1] + by[1]]).collect() }
    }

    pub fn scaled_about(&self, center: Point, factor: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [center[0] + factor * (p[0] - center[0]), center[1] + factor * (p[1] - center[1])])
                .collect(),
        }
    }

    /// Area centroid of the enclosed polygon.
    pub fn centroid(&self) -> Point {
        let n = self.points.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            let c = p[0] * q[1] - q[0] * p[1];
            a2 += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }

    /// Mean vertex distance from `center`.
    pub fn mean_radius(&self, center: Point) -> f64 {
        self.points.iter().map(|&p| dist(p, center)).sum::<f64>() / self.points.len() as f64
    }

    /// Resamples to `n` vertices equally spaced in arclength along the
    /// polygon, keeping vertex 0 fixed.
    pub fn resample_linear(&self, n: usize) -> Self {
        let lens = self.edge_lengths();
        let total: f64 = lens.iter().sum();
        let m = self.points.len();
        let mut out = Vec::with_capacity(n);
        let mut edge = 0;
        let mut start = 0.0;
        for k in 0..n {
            let s = total * k as f64 / n as f64;
            while edge + 1 < m && start + lens[edge] < s {
                start += lens[edge];
                edge += 1;
            }
            let t = if lens[edge] > 0.0 { ((s - start) / lens[edge]).clamp(0.0, 1.0) } else { 0.0 };
            out.push(lerp(self.points[edge], self.points[(edge + 1) % m], t));
        }
        Self { points: out }
    }

    /// `true` when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let lo = |i: usize| self.points[i][0].min(self.points[(i + 1) % n][0]);
        let hi = |i: usize| self.points[i][0].max(self.points[(i + 1) % n][0]);
        order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
        let mut active: Vec<usize> = Vec::new();
        for &e in &order {
            let x = lo(e);
            active.retain(|&a| hi(a) >= x);
            for &a in &active {
                let adjacent = (a + 1) % n == e || (e + 1) % n == a || a == e;
                if !adjacent
                    && segments_intersect(
                        self.points[a],
                        self.points[(a + 1) % n],
                        self.points[e],
                        self.points[(e + 1) % n],
                    )
                {
                    return false;
                }
            }
            active.push(e);
        }
        true
    }

    /// Smallest distance from a vertex to the boundary of `[0,lx]×[0,ly]`;
    /// negative when a vertex lies outside.
    pub fn clearance(&self, spec: &GridSpec) -> f64 {
        self.points
            .iter()
            .map(|p| p[0].min(spec.lx - p[0]).min(p[1]).min(spec.ly - p[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `x,y`, one vertex per row; the closing edge is implicit.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{}", p[0], p[1]);
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "x,y" => {}
            _ => return Err(bad("expected header `x,y`".into())),
        }
        let mut points = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (x, y) = line.split_once(',').ok_or_else(|| bad(format!("row {}: expected `x,y`", k + 1)))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", k + 1)));
            points.push([parse(x)?, parse(y)?]);
        }
        Curve::new(points)
    }
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub(crate) fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, p: Point| {
        p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// Closest point of a curve to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    /// Signed distance: negative inside the curve, positive outside.
    pub distance: f64,
    /// Edge `(segment, segment + 1)` carrying the closest point.
    pub segment: usize,
    /// Position along that edge in `[0, 1]`.
    pub t: f64,
}

/// Exact signed distance to the polygon, negative in the enclosed region.
pub fn signed_distance(curve: &Curve, p: Point) -> f64 {
    closest_point(curve, p).distance
}

pub fn closest_point(curve: &Curve, p: Point) -> ClosestPoint {
    let pts = &curve.points;
    let n = pts.len();
    let mut best = f64::INFINITY;
    let mut seg = 0;
    let mut best_t = 0.0;
    let mut inside = false;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 { ((px * ex + py * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let dx = px - t * ex;
        let dy = py - t * ey;
        let d2 = dx * dx + dy * dy;
        if d2 < best {
            best = d2;
            seg = i;
            best_t = t;
        }
        // Crossing-number containment with a half-open rule on y.
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let xc = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * ex;
            if p[0] < xc {
                inside = !inside;
            }
        }
    }
    let d = best.sqrt();
    ClosestPoint { distance: if inside { -d } else { d }, segment: seg, t: best_t }
}

fn check_clearance(curve: &Curve, spec: &GridSpec) -> Result<()> {
    let required = 4.0 * spec.max_spacing();
    let clearance = curve.clearance(spec);
    if clearance < required {
        return Err(Error::CurveTouchesBoundary { clearance, required });
    }
    Ok(())
}

/// Closest curve point for every cell center.
pub fn closest_points(curve: &Curve, spec: &GridSpec) -> Result<Vec<ClosestPoint>> {
    check_clearance(curve, spec)?;
    let mut out = vec![ClosestPoint { distance: 0.0, segment: 0, t: 0.0 }; spec.len()];
    out.par_chunks_mut(spec.nx).enumerate().for_each(|(j, row)| {
        let y = spec.y(j);
        for (i, c) in row.iter_mut().enumerate() {
            *c = closest_point(curve, [spec.x(i), y]);
        }
    });
    Ok(out)
}

/// Signed distance sampled at every cell center.
pub fn distance_field(curve: &Curve, spec: &GridSpec) -> Result<Field> {
    let cps = closest_points(curve, spec)?;
    Field::new(*spec, cps.into_iter().map(|c| c.distance).collect())
}

/// Signed area by the shoelace formula, positive for counter-clockwise
/// vertex order.
pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut a2 = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        a2 += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a2
}

pub fn enclosed_area(c: &Curve) -> f64 {
    polygon_area(&c.points)
}

/// Area of the `u ≈ -1` phase, `∫(1 - u)/2`.
pub fn phase_area(u: &Field) -> f64 {
    integrate(&u.map(|v| 0.5 * (1.0 - v)))
}

/// Closed components of the zero level set of `u`, by marching squares on the
/// lattice of cell centers with linear interpolation along lattice edges.
///
/// Each curve is oriented with the `u < 0` side on its left, so a curve around
/// a negative blob is counter-clockwise. Chains that run into the edge of the
/// lattice are dropped.
pub fn extract_zero_levelset(u: &Field) -> Vec<Curve> {
    let spec = *u.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let val = |i: usize, j: usize| u.get(i, j);
    let neg = |v: f64| v < 0.0;

    // Edge ids: horizontal edge from corner (i,j) to (i+1,j) is 2·(j·nx+i),
    // vertical edge from (i,j) to (i,j+1) is 2·(j·nx+i)+1.
    let h_edge = |i: usize, j: usize| 2 * (j * nx + i);
    let v_edge = |i: usize, j: usize| 2 * (j * nx + i) + 1;
    let crossing = |id: usize| -> Point {
        let cell = id / 2;
        let (i, j) = (cell % nx, cell / nx);
        let (i2, j2) = if id.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (val(i, j), val(i2, j2));
        let t = a / (a - b);
        lerp([spec.x(i), spec.y(j)], [spec.x(i2), spec.y(j2)], t)
    };

    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut link = |a: usize, b: usize| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            let mask = c.iter().enumerate().fold(0u8, |m, (k, &v)| m | ((neg(v) as u8) << k));
            if mask == 0 || mask == 15 {
                continue;
            }
            // Edges in corner order: bottom (0-1), right (1-2), top (3-2), left (0-3).
            let e = [h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1), v_edge(i, j)];
            let cut: Vec<usize> =
                (0..4).filter(|&k| neg(c[k]) != neg(c[(k + 1) % 4])).map(|k| e[k]).collect();
            if cut.len() == 2 {
                link(cut[0], cut[1]);
            } else {
                // Saddle: decide the pairing by the cell-center average.
                let center_neg = neg(0.25 * c.iter().sum::<f64>());
                // cut = [bottom, right, top, left].
                if neg(c[0]) == center_neg {
                    // Corner 0's sign fills the center: separate corners 1 and 3.
                    link(e[0], e[1]);
                    link(e[2], e[3]);
                } else {
                    link(e[0], e[3]);
                    link(e[1], e[2]);
                }
            }
        }
    }

    let mut ids: Vec<usize> = links.keys().copied().collect();
    ids.sort_unstable();
    let mut visited: HashSet<usize> = HashSet::new();
    let step = |prev: usize, cur: usize| -> Option<usize> {
        let nb = &links[&cur];
        match nb.len() {
            1 => (nb[0] != prev).then_some(nb[0]),
            _ => Some(if nb[0] != prev { nb[0] } else { nb[1] }),
        }
    };

    // Open chains start and end at degree-1 crossings on the lattice edge.
    let mut dropped = 0usize;
    for &end in ids.iter().filter(|id| links[id].len() == 1) {
        if !visited.insert(end) {
            continue;
        }
        dropped += 1;
        let (mut prev, mut cur) = (usize::MAX, end);
        while let Some(nb) = step(prev, cur) {
            if !visited.insert(nb) {
                break;
            }
            prev = cur;
            cur = nb;
        }
    }

    let mut curves = Vec::new();
    for &start in &ids {
        if !visited.insert(start) {
            continue;
        }
        let mut chain = vec![start];
        let (mut prev, mut cur) = (usize::MAX, start);
        while let Some(nb) = step(prev, cur) {
            if nb == start || !visited.insert(nb) {
                break;
            }
            chain.push(nb);
            prev = cur;
            cur = nb;
        }
        if chain.len() < 3 {
            continue;
        }
        let mut curve = Curve { points: chain.iter().map(|&id| crossing(id)).collect() };
        if !negative_side_on_left(&curve, u) {
            curve = curve.reversed();
        }
        curves.push(curve);
    }
    if dropped > 0 {
        log::warn!("discarded {dropped} zero-level chain(s) touching the domain boundary");
    }
    curves
}

/// Samples `u` slightly to the left of every edge midpoint and reports whether
/// the majority of samples are negative.
fn negative_side_on_left(c: &Curve, u: &Field) -> bool {
    let spec = u.spec();
    let off = 0.5 * spec.max_spacing();
    let n = c.points.len();
    let mut vote = 0i64;
    for i in 0..n {
        let a = c.points[i];
        let b = c.points[(i + 1) % n];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l = dx.hypot(dy);
        if l == 0.0 {
            continue;
        }
        let m = lerp(a, b, 0.5);
        let left = [m[0] - off * dy / l, m[1] + off * dx / l];
        let right = [m[0] + off * dy / l, m[1] - off * dx / l];
        let (ul, ur) = (sample_bilinear(u, left), sample_bilinear(u, right));
        if ul < ur {
            vote += 1;
        } else if ul > ur {
            vote -= 1;
        }
    }
    vote >= 0
}

/// Bilinear interpolation on the lattice of cell centers, clamped at the edge.
pub fn sample_bilinear(u: &Field, p: Point) -> f64 {
    let s = u.spec();
    let fx = (p[0] / s.hx() - 0.5).clamp(0.0, (s.nx - 1) as f64);
    let fy = (p[1] / s.hy() - 0.5).clamp(0.0, (s.ny - 1) as f64);
    let i = (fx.floor() as usize).min(s.nx - 2);
    let j = (fy.floor() as usize).min(s.ny - 2);
    let (tx, ty) = (fx - i as f64, fy - j as f64);
    let a = u.get(i, j) * (1.0 - tx) + u.get(i + 1, j) * tx;
    let b = u.get(i, j + 1) * (1.0 - tx) + u.get(i + 1, j + 1) * tx;
    a * (1.0 - ty) + b * ty
}

/// The component with the largest absolute enclosed area, with the number of
/// components found.
pub fn largest_component(curves: Vec<Curve>) -> (Option<Curve>, usize) {
    let count = curves.len();
    let best = curves.into_iter().max_by(|a, b| enclosed_area(a).abs().total_cmp(&enclosed_area(b).abs()));
    (best, count)
}
