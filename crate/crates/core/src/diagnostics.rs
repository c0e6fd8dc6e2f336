//! Energy, divergence and error monitors, convergence orders and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Location};
use crate::htc::FvState;
use crate::mimetic::{div_c2v, div_v2c};
use crate::simm::StaggeredState;

pub use crate::simm::total_energy_staggered;

/// `Σ_cells |Ω| 𝓔(q)`.
pub fn total_energy_collocated(s: &FvState) -> f64 {
    let sum: f64 = s.cells.iter().map(|q| s.model.energy_density(q)).sum();
    sum * s.grid.cell_area()
}

/// Which vector field a divergence refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorField {
    B,
    E,
}

/// L² norm of the central-difference divergence of `B` or `E` on the
/// collocated grid. Informational only.
pub fn collocated_divergence(s: &FvState, which: VectorField) -> f64 {
    let g = s.grid;
    let off = match which {
        VectorField::B => 0,
        VectorField::E => 4,
    };
    let (hx, hy) = (0.5 / g.dx(), 0.5 / g.dy());
    let mut sum = 0.0;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let u = |a: isize, b: isize| s.cells[g.index_wrapped(a, b)][off];
            let v = |a: isize, b: isize| s.cells[g.index_wrapped(a, b)][off + 1];
            let d = (u(i + 1, j) - u(i - 1, j)) * hx + (v(i, j + 1) - v(i, j - 1)) * hy;
            sum += d * d;
        }
    }
    (sum * g.cell_area()).sqrt()
}

/// L² norms of `div_c2v B^{n+½}` and `div_v2c E^{n+½}` between two
/// consecutive states.
pub fn staggered_divergences(s: &StaggeredState, next: &StaggeredState) -> (f64, f64) {
    let b_half = s.b.lincomb(0.5, 0.5, &next.b);
    let e_half = s.e.lincomb(0.5, 0.5, &next.e);
    (div_c2v(&b_half).l2_norm(), div_v2c(&e_half).l2_norm())
}

/// L² norms of `div_c2v B` and `div_v2c E` at a single time level.
pub fn staggered_divergences_at(s: &StaggeredState) -> (f64, f64) {
    debug_assert_eq!(s.b.location, Location::Cell);
    (div_c2v(&s.b).l2_norm(), div_v2c(&s.e).l2_norm())
}

/// Observed orders `log(e₁/e₂) / log(N₂/N₁)` between consecutive rows.
pub fn convergence_order(errors: &[(usize, f64)]) -> Result<Vec<f64>> {
    for &(n, e) in errors {
        if !(e > 0.0) {
            return Err(Error::NonPositiveError { n, value: e });
        }
    }
    errors
        .windows(2)
        .map(|w| {
            let ((n1, e1), (n2, e2)) = (w[0], w[1]);
            if n2 <= n1 {
                return Err(Error::InvalidParameter(format!(
                    "resolutions must increase, got {n1} then {n2}"
                )));
            }
            Ok((e1 / e2).ln() / (n2 as f64 / n1 as f64).ln())
        })
        .collect()
}

/// One row of a time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    /// `𝓔ⁿ/𝓔⁰ − 1`, or `𝓔ⁿ` itself when `𝓔⁰ = 0`.
    pub rel_err: f64,
    pub div_b: f64,
    pub div_e: f64,
}

/// Description of the run that produced a series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesMeta {
    pub scheme: String,
    pub nx: usize,
    pub ny: usize,
    pub c0: f64,
    pub ch: f64,
    pub config_hash: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub meta: SeriesMeta,
    pub rows: Vec<SeriesRow>,
}

impl DiagnosticsSeries {
    pub fn new(meta: SeriesMeta) -> Self {
        DiagnosticsSeries { meta, rows: Vec::new() }
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.rows.first().map(|r| r.energy)
    }

    /// Appends a row; the relative error is taken against the first row.
    pub fn push(&mut self, t: f64, energy: f64, div_b: f64, div_e: f64) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(t > last.t) {
                return Err(Error::InvalidParameter(format!(
                    "series times must increase: {t} after {}",
                    last.t
                )));
            }
        }
        let e0 = self.initial_energy().unwrap_or(energy);
        let rel_err = if e0 == 0.0 { energy } else { energy / e0 - 1.0 };
        self.rows.push(SeriesRow {
            t,
            energy,
            rel_err,
            div_b,
            div_e,
        });
        Ok(())
    }

    pub fn max_abs_rel_err(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.rel_err.abs()))
    }

    pub fn max_div_b(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.div_b))
    }

    pub fn max_div_e(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.div_e))
    }

    pub fn energy_csv(&self) -> String {
        let mut out = String::from("t,energy,rel_err\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", num(r.t), num(r.energy), num(r.rel_err));
        }
        out
    }

    pub fn divergence_csv(&self) -> String {
        let mut out = String::from("t,divB,divE\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", num(r.t), num(r.div_b), num(r.div_e));
        }
        out
    }

    /// Writes `energy.csv` and `divergence.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("energy.csv"), &self.energy_csv())?;
        write_file(&dir.join("divergence.csv"), &self.divergence_csv())
    }
}

/// Per-component L² errors on a sequence of grids.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub components: Vec<String>,
    /// `(N, errors per component)`.
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl ErrorTable {
    pub fn column(&self, k: usize) -> Vec<(usize, f64)> {
        self.rows.iter().map(|(n, e)| (*n, e[k])).collect()
    }

    /// Orders per component, one entry per consecutive pair of rows.
    pub fn orders(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.components.len()).map(|k| convergence_order(&self.column(k))).collect()
    }

    /// `N, <components>, order_<components>`; the first row has empty orders.
    pub fn to_csv(&self) -> Result<String> {
        let orders = self.orders()?;
        let mut out = String::from("N");
        for c in &self.components {
            let _ = write!(out, ",{c}");
        }
        for c in &self.components {
            let _ = write!(out, ",order_{c}");
        }
        out.push('\n');
        for (r, (n, errs)) in self.rows.iter().enumerate() {
            let _ = write!(out, "{n}");
            for e in errs {
                let _ = write!(out, ",{}", num(*e));
            }
            for o in &orders {
                match r.checked_sub(1) {
                    Some(k) => {
                        let _ = write!(out, ",{}", num(o[k]));
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv()?)
    }
}

/// Per-component L² errors of a staggered solution against reference fields.
pub fn staggered_errors(s: &StaggeredState, reference: &StaggeredState) -> Result<Vec<f64>> {
    let comp = |f: &Field, r: &Field, c: usize| crate::grid::l2_error(&f.component(c), &r.component(c));
    Ok(vec![
        comp(&s.b, &reference.b, 0)?,
        comp(&s.b, &reference.b, 1)?,
        comp(&s.b, &reference.b, 2)?,
        crate::grid::l2_error(&s.phi, &reference.phi)?,
        comp(&s.e, &reference.e, 0)?,
        comp(&s.e, &reference.e, 1)?,
        crate::grid::l2_error(&s.psi, &reference.psi)?,
    ])
}

/// Component order used by [`staggered_errors`] and [`collocated_errors`];
/// `E₃` stays zero for the planar wave and is omitted.
pub const ERROR_COMPONENTS: [&str; 7] = ["B1", "B2", "B3", "phi", "E1", "E2", "psi"];

/// Same components as [`staggered_errors`] for the collocated scheme.
pub fn collocated_errors(s: &FvState, reference: &FvState) -> Result<Vec<f64>> {
    if s.grid != reference.grid {
        return Err(Error::ShapeMismatch("reference solution lives on another grid".into()));
    }
    let slots = [0, 1, 2, 3, 4, 5, 7];
    Ok(slots
        .iter()
        .map(|&k| {
            let sum: f64 = s
                .cells
                .iter()
                .zip(&reference.cells)
                .map(|(a, b)| (a[k] - b[k]).powi(2))
                .sum();
            (sum * s.grid.cell_area()).sqrt()
        })
        .collect())
}

/// Full double precision: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
