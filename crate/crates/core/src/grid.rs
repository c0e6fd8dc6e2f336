//! Periodic uniform Cartesian mesh and the fields that live on it.
//!
//! Index conventions, used by every stencil in the crate:
//!
//! * cell `(i, j)` has its center at `(x_min + (i+½)dx, y_min + (j+½)dy)`;
//! * vertex `(i, j)` sits at `(x_min + (i+1)dx, y_min + (j+1)dy)`, i.e. it is
//!   the upper-right corner `(i+½, j+½)` of cell `(i, j)`.
//!
//! Both index sets are `nx × ny` under periodic wrap; the vertex on the line
//! `x = x_max` is identified with the one on `x = x_min`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Total periodic index map.
#[inline]
pub fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2×2 points, got {nx}×{ny}"
            )));
        }
        if !(x.1 > x.0 && y.1 > y.0) || ![x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degenerate domain [{}, {}]×[{}, {}]",
                x.0, x.1, y.0, y.1
            )));
        }
        Ok(Grid2D {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        })
    }

    /// `n × n` grid on `[−1, 1]²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, (-1.0, 1.0), (-1.0, 1.0))
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// `|Ω_c| = |Ω_p| = dx·dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn points(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 0.5) * self.dx(),
            self.y_min + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn vertex(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 1.0) * self.dx(),
            self.y_min + (j as f64 + 1.0) * self.dy(),
        )
    }

    pub fn position(&self, location: Location, i: usize, j: usize) -> (f64, f64) {
        match location {
            Location::Cell => self.cell_center(i, j),
            Location::Vertex => self.vertex(i, j),
        }
    }

    /// Linear index of `(i, j)`, row-major in `j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Linear index of a possibly out-of-range `(i, j)` after periodic wrap.
    #[inline]
    pub fn index_wrapped(&self, i: isize, j: isize) -> usize {
        self.index(wrap(i, self.nx), wrap(j, self.ny))
    }
}

/// Where the degrees of freedom of a field sit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Cell,
    Vertex,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Cell => "cell",
            Location::Vertex => "vertex",
        }
    }

    pub fn dual(self) -> Location {
        match self {
            Location::Cell => Location::Vertex,
            Location::Vertex => Location::Cell,
        }
    }
}

/// Dense scalar (`ncomp = 1`) or vector (`ncomp = 3`) field on cells or vertices.
///
/// Values are stored point by point, components contiguous:
/// `data[(j·nx + i)·ncomp + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid2D,
    pub location: Location,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D, location: Location, ncomp: usize) -> Self {
        assert!(ncomp >= 1, "a field needs at least one component");
        Field {
            grid,
            location,
            ncomp,
            data: vec![0.0; grid.points() * ncomp],
        }
    }

    /// Point samples of a scalar function at the field locations.
    pub fn sample_scalar(grid: Grid2D, location: Location, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Field::zeros(grid, location, 1);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.position(location, i, j);
                out.data[grid.index(i, j)] = f(x, y);
            }
        }
        out
    }

    /// Point samples of a 3-vector function at the field locations.
    pub fn sample_vector(
        grid: Grid2D,
        location: Location,
        f: impl Fn(f64, f64) -> [f64; 3],
    ) -> Self {
        let mut out = Field::zeros(grid, location, 3);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.position(location, i, j);
                let k = 3 * grid.index(i, j);
                out.data[k..k + 3].copy_from_slice(&f(x, y));
            }
        }
        out
    }

    pub fn is_scalar(&self) -> bool {
        self.ncomp == 1
    }

    /// Component `c` at point `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[self.grid.index(i, j) * self.ncomp + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        let k = self.grid.index(i, j) * self.ncomp + c;
        self.data[k] = v;
    }

    /// All components at point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> &[f64] {
        let k = self.grid.index(i, j) * self.ncomp;
        &self.data[k..k + self.ncomp]
    }

    /// Scalar field holding component `c`.
    pub fn component(&self, c: usize) -> Field {
        assert!(c < self.ncomp);
        Field {
            grid: self.grid,
            location: self.location,
            ncomp: 1,
            data: self.data.iter().skip(c).step_by(self.ncomp).copied().collect(),
        }
    }

    /// Field with every point shifted by `(di, dj)` indices under periodic wrap.
    pub fn shifted(&self, di: isize, dj: isize) -> Field {
        let g = self.grid;
        let mut out = Field::zeros(g, self.location, self.ncomp);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let src = g.index_wrapped(i as isize + di, j as isize + dj) * self.ncomp;
                let dst = g.index(i, j) * self.ncomp;
                out.data[dst..dst + self.ncomp].copy_from_slice(&self.data[src..src + self.ncomp]);
            }
        }
        out
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.grid == other.grid && self.location == other.location && self.ncomp == other.ncomp
    }

    fn check_shape(&self, other: &Field) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}×{} {} field with {} components vs {}×{} {} field with {} components",
                self.grid.nx,
                self.grid.ny,
                self.location.as_str(),
                self.ncomp,
                other.grid.nx,
                other.grid.ny,
                other.location.as_str(),
                other.ncomp
            )))
        }
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: f64, x: &Field) {
        debug_assert!(self.same_shape(x));
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.data.iter_mut() {
            *v *= alpha;
        }
    }

    /// `alpha · self + beta · other` as a new field.
    pub fn lincomb(&self, alpha: f64, beta: f64, other: &Field) -> Field {
        debug_assert!(self.same_shape(other));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = alpha * *a + beta * b;
        }
        out
    }

    /// Volume-weighted inner product `Σ dx·dy · u·v`.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert!(self.same_shape(other));
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s * self.grid.cell_area()
    }

    /// `sqrt(Σ dx·dy · |u|²)`.
    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `l2_norm(u − v)`; fails if the fields differ in grid, location or components.
pub fn l2_error(u: &Field, v: &Field) -> Result<f64> {
    u.check_shape(v)?;
    let s: f64 = u
        .data
        .iter()
        .zip(&v.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((s * u.grid.cell_area()).sqrt())
}

/// Field snapshot in the text exchange format.
///
/// ```text
/// # maxglm field snapshot
/// nx = 4
/// ny = 4
/// bounds = -1 1 -1 1
/// location = cell
/// components = 1
/// time = 0
/// <row j = 0: comma-separated values, components of a point contiguous>
/// ...
/// ```
pub fn snapshot_to_string(field: &Field, time: f64) -> String {
    let g = field.grid;
    let mut out = String::new();
    out.push_str("# maxglm field snapshot\n");
    let _ = writeln!(out, "nx = {}", g.nx);
    let _ = writeln!(out, "ny = {}", g.ny);
    let _ = writeln!(out, "bounds = {:e} {:e} {:e} {:e}", g.x_min, g.x_max, g.y_min, g.y_max);
    let _ = writeln!(out, "location = {}", field.location.as_str());
    let _ = writeln!(out, "components = {}", field.ncomp);
    let _ = writeln!(out, "time = {:e}", time);
    let row_len = g.nx * field.ncomp;
    for row in field.data.chunks(row_len) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, field: &Field, time: f64) -> Result<()> {
    fs::write(path, snapshot_to_string(field, time)).map_err(|e| Error::io(path, e))
}

/// Parses a snapshot; returns the field and its time stamp.
pub fn parse_snapshot(text: &str) -> Result<(Field, f64)> {
    let bad = |m: &str| Error::Snapshot(m.to_string());
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = std::collections::HashMap::new();
    for line in lines.by_ref() {
        if line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        header.insert(k.trim().to_string(), v.trim().to_string());
        if k.trim() == "time" {
            break;
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| bad(&format!("missing `{k}`")));
    let parse_usize = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| bad(&format!("bad `{k}`")))
    };
    let nx = parse_usize("nx")?;
    let ny = parse_usize("ny")?;
    let ncomp = parse_usize("components")?;
    let bounds: Vec<f64> = get("bounds")?
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("bad `bounds`"))?;
    if bounds.len() != 4 {
        return Err(bad("`bounds` needs four numbers"));
    }
    let location = match get("location")?.as_str() {
        "cell" => Location::Cell,
        "vertex" => Location::Vertex,
        other => return Err(bad(&format!("unknown location `{other}`"))),
    };
    let time: f64 = get("time")?.parse().map_err(|_| bad("bad `time`"))?;
    let grid = Grid2D::new(nx, ny, (bounds[0], bounds[1]), (bounds[2], bounds[3]))?;
    let mut data = Vec::with_capacity(nx * ny * ncomp);
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("bad value"))?;
        if row.len() != nx * ncomp {
            return Err(bad("row length does not match nx·components"));
        }
        data.extend(row);
    }
    if data.len() != nx * ny * ncomp {
        return Err(bad("row count does not match ny"));
    }
    Ok((
        Field {
            grid,
            location,
            ncomp,
            data,
        },
        time,
    ))
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text)
}
