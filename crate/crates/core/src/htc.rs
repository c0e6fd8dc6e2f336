//! Energy-conserving collocated finite volume scheme.
//!
//! Every cell carries a full [`State`]. Across each face the numerical flux
//! is the central average of the physical fluxes corrected along the jump of
//! the main field,
//!
//! ```text
//! f_lr = ½(f_l + f_r)·n − α (p_r − p_l),
//! α    = [ (F_r − F_l)·n + ½(p_r + p_l)·(f_l − f_r)·n ] / |p_r − p_l|²,
//! ```
//!
//! which makes `p_l·(f_lr − f_l·n) + p_r·(f_r·n − f_lr) = (F_r − F_l)·n` hold
//! identically. Summed over a periodic mesh the semi-discrete energy
//! production `Σ |Ω| p·dq/dt` then vanishes; no dissipation is added. For the
//! quadratic energy the correction is zero and the flux is purely central.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{Axis, EnergyModel, ModelParams, State};

/// Below this value of `|p_r − p_l|²` the correction is dropped.
pub const ALPHA_GUARD: f64 = 1e-28;

/// Collocated solution: one state per cell, row-major like [`Grid2D::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct FvState {
    pub grid: Grid2D,
    pub model: EnergyModel,
    pub time: f64,
    pub cells: Vec<State>,
}

impl FvState {
    pub fn new(grid: Grid2D, model: EnergyModel, cells: Vec<State>) -> Self {
        assert_eq!(cells.len(), grid.points(), "one state per cell");
        FvState {
            grid,
            model,
            time: 0.0,
            cells,
        }
    }

    /// Point samples of `q(x, y)` at the cell centers.
    pub fn sample(grid: Grid2D, model: EnergyModel, q: impl Fn(f64, f64) -> State) -> Self {
        let mut cells = Vec::with_capacity(grid.points());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                cells.push(q(x, y));
            }
        }
        Self::new(grid, model, cells)
    }

    pub fn cell(&self, i: usize, j: usize) -> &State {
        &self.cells[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.cells.iter().all(State::is_finite)
    }
}

/// Flux pieces of one state projected on a normal.
#[derive(Clone, Copy, Debug)]
struct Projected {
    p: State,
    f: State,
    energy_flux: f64,
}

fn project(model: &EnergyModel, q: &State, normal: [f64; 2]) -> Projected {
    let p = model.main_field(q);
    let f = normal[0] * model.flux_of_main_field(&p, Axis::X)
        + normal[1] * model.flux_of_main_field(&p, Axis::Y);
    let energy_flux = 0.5 * p.dot(&f);
    Projected { p, f, energy_flux }
}

#[inline]
fn project_axis(model: &EnergyModel, p: State, axis: Axis) -> Projected {
    let f = model.flux_of_main_field(&p, axis);
    let energy_flux = 0.5 * p.dot(&f);
    Projected { p, f, energy_flux }
}

/// Correction factor α; 0 when the main-field jump is below [`ALPHA_GUARD`].
fn correction(l: &Projected, r: &Projected) -> (f64, State) {
    let dp = r.p - l.p;
    let dp2 = dp.norm_sq();
    if dp2 < ALPHA_GUARD {
        return (0.0, dp);
    }
    let num = (r.energy_flux - l.energy_flux) + 0.5 * (r.p + l.p).dot(&(l.f - r.f));
    (num / dp2, dp)
}

#[inline]
fn compatible_flux(l: &Projected, r: &Projected) -> State {
    let (alpha, dp) = correction(l, r);
    0.5 * (l.f + r.f) - alpha * dp
}

/// Thermodynamically compatible flux across a face with unit normal `normal`
/// pointing from `ql` to `qr`.
pub fn abgrall_flux(ql: &State, qr: &State, normal: [f64; 2], model: &EnergyModel) -> State {
    let l = project(model, ql, normal);
    let r = project(model, qr, normal);
    compatible_flux(&l, &r)
}

/// The correction factor α of [`abgrall_flux`].
pub fn abgrall_alpha(ql: &State, qr: &State, normal: [f64; 2], model: &EnergyModel) -> f64 {
    let l = project(model, ql, normal);
    let r = project(model, qr, normal);
    correction(&l, &r).0
}

/// `p_l·(f_lr − f_l·n) + p_r·(f_r·n − f_lr) − (F_r − F_l)·n` for the flux
/// returned by [`abgrall_flux`].
pub fn compatibility_residual(ql: &State, qr: &State, normal: [f64; 2], model: &EnergyModel) -> f64 {
    let l = project(model, ql, normal);
    let r = project(model, qr, normal);
    let f = compatible_flux(&l, &r);
    l.p.dot(&(f - l.f)) + r.p.dot(&(r.f - f)) - (r.energy_flux - l.energy_flux)
}

/// `dq/dt = −(1/|Ω|) Σ_faces |face| f_lr` for every cell on the periodic mesh.
pub fn semidiscrete_rhs(state: &FvState) -> Vec<State> {
    let mut out = vec![State::ZERO; state.cells.len()];
    rhs_into(&state.grid, &state.model, &state.cells, &mut out, &mut Scratch::default());
    out
}

/// Per-cell and per-face buffers of [`rhs_into`].
#[derive(Clone, Debug, Default)]
struct Scratch {
    xs: Vec<Projected>,
    ys: Vec<Projected>,
    /// Flux through the face between cell k and its +x neighbor.
    east: Vec<State>,
    /// Same towards +y.
    north: Vec<State>,
}

fn rhs_into(grid: &Grid2D, model: &EnergyModel, cells: &[State], out: &mut [State], w: &mut Scratch) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (inv_dx, inv_dy) = (1.0 / grid.dx(), 1.0 / grid.dy());
    w.xs.clear();
    w.ys.clear();
    for q in cells {
        let p = model.main_field(q);
        w.xs.push(project_axis(model, p, Axis::X));
        w.ys.push(project_axis(model, p, Axis::Y));
    }
    w.east.resize(cells.len(), State::ZERO);
    w.north.resize(cells.len(), State::ZERO);
    for j in 0..ny {
        let jn = (j + 1) % ny;
        for i in 0..nx {
            let k = j * nx + i;
            w.east[k] = compatible_flux(&w.xs[k], &w.xs[j * nx + (i + 1) % nx]);
            w.north[k] = compatible_flux(&w.ys[k], &w.ys[jn * nx + i]);
        }
    }
    for j in 0..ny {
        let js = (j + ny - 1) % ny;
        for i in 0..nx {
            let k = j * nx + i;
            let west = w.east[j * nx + (i + nx - 1) % nx];
            let south = w.north[js * nx + i];
            out[k] = inv_dx * (west - w.east[k]) + inv_dy * (south - w.north[k]);
        }
    }
}

/// Explicit Runge–Kutta method in Butcher form.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    /// Strictly lower triangular, `a[i][j]` for `j < i`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
}

impl ButcherTableau {
    /// Classical fourth-order method.
    pub fn rk4() -> Self {
        ButcherTableau {
            name: "rk4",
            a: vec![
                vec![],
                vec![0.5],
                vec![0.0, 0.5],
                vec![0.0, 0.0, 1.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
            order: 4,
        }
    }

    /// Fehlberg's 13-stage eighth-order formula (NASA TR R-287, 1968), the
    /// high-order member of the RKF 7(8) pair.
    pub fn fehlberg8() -> Self {
        let a = vec![
            vec![],
            vec![2.0 / 27.0],
            vec![1.0 / 36.0, 1.0 / 12.0],
            vec![1.0 / 24.0, 0.0, 1.0 / 8.0],
            vec![5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
            vec![1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
            vec![-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
            vec![31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
            vec![2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
            vec![
                -91.0 / 108.0,
                0.0,
                0.0,
                23.0 / 108.0,
                -976.0 / 135.0,
                311.0 / 54.0,
                -19.0 / 60.0,
                17.0 / 6.0,
                -1.0 / 12.0,
            ],
            vec![
                2383.0 / 4100.0,
                0.0,
                0.0,
                -341.0 / 164.0,
                4496.0 / 1025.0,
                -301.0 / 82.0,
                2133.0 / 4100.0,
                45.0 / 82.0,
                45.0 / 164.0,
                18.0 / 41.0,
            ],
            vec![
                3.0 / 205.0,
                0.0,
                0.0,
                0.0,
                0.0,
                -6.0 / 41.0,
                -3.0 / 205.0,
                -3.0 / 41.0,
                3.0 / 41.0,
                6.0 / 41.0,
                0.0,
            ],
            vec![
                -1777.0 / 4100.0,
                0.0,
                0.0,
                -341.0 / 164.0,
                4496.0 / 1025.0,
                -289.0 / 82.0,
                2193.0 / 4100.0,
                51.0 / 82.0,
                33.0 / 164.0,
                12.0 / 41.0,
                0.0,
                1.0,
            ],
        ];
        let b = vec![
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            34.0 / 105.0,
            9.0 / 35.0,
            9.0 / 35.0,
            9.0 / 280.0,
            9.0 / 280.0,
            0.0,
            41.0 / 840.0,
            41.0 / 840.0,
        ];
        let c = vec![
            0.0,
            2.0 / 27.0,
            1.0 / 9.0,
            1.0 / 6.0,
            5.0 / 12.0,
            0.5,
            5.0 / 6.0,
            1.0 / 6.0,
            2.0 / 3.0,
            1.0 / 3.0,
            1.0,
            0.0,
            1.0,
        ];
        ButcherTableau {
            name: "fehlberg8",
            a,
            b,
            c,
            order: 8,
        }
    }

    /// The 11-stage seventh-order companion of [`Self::fehlberg8`].
    pub fn fehlberg7() -> Self {
        let mut t = Self::fehlberg8();
        t.a.truncate(11);
        t.c.truncate(11);
        t.b = vec![
            41.0 / 840.0,
            0.0,
            0.0,
            0.0,
            0.0,
            34.0 / 105.0,
            9.0 / 35.0,
            9.0 / 35.0,
            9.0 / 280.0,
            9.0 / 280.0,
            41.0 / 840.0,
        ];
        t.name = "fehlberg7";
        t.order = 7;
        t
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Largest violation of `Σ b = 1`, `c_i = Σ_j a_ij` and explicitness.
    pub fn consistency_defect(&self) -> f64 {
        let s = self.stages();
        let mut worst = (self.b.iter().sum::<f64>() - 1.0).abs();
        if self.a.len() != s || self.c.len() != s {
            return f64::INFINITY;
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() > i {
                return f64::INFINITY;
            }
            worst = worst.max((row.iter().sum::<f64>() - self.c[i]).abs());
        }
        worst
    }

    /// One explicit step `y ← y + dt Σ b_i k_i`.
    pub fn step<V: RkVector>(&self, y: &V, dt: f64, mut rhs: impl FnMut(&V) -> V) -> V {
        let mut k: Vec<V> = Vec::with_capacity(self.stages());
        for row in &self.a {
            let mut stage = y.clone();
            for (aij, kj) in row.iter().zip(&k) {
                if *aij != 0.0 {
                    stage.axpy(dt * aij, kj);
                }
            }
            k.push(rhs(&stage));
        }
        let mut out = y.clone();
        for (bi, ki) in self.b.iter().zip(&k) {
            if *bi != 0.0 {
                out.axpy(dt * bi, ki);
            }
        }
        out
    }
}

/// State containers a Runge–Kutta step can combine.
pub trait RkVector: Clone {
    /// `self += a · x`.
    fn axpy(&mut self, a: f64, x: &Self);
}

impl RkVector for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
}

impl RkVector for Vec<State> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            for (si, vi) in s.0.iter_mut().zip(v.0) {
                *si += a * vi;
            }
        }
    }
}

/// Advances all cells by one explicit RK step of size `dt`.
pub fn rk_step(state: &FvState, dt: f64, tableau: &ButcherTableau) -> FvState {
    let mut next = state.clone();
    HtcStepper::new(tableau.clone()).step(&mut next, dt);
    next
}

/// [`rk_step`] with stage buffers kept between steps. Gives bit-identical
/// results.
#[derive(Clone, Debug)]
pub struct HtcStepper {
    tableau: ButcherTableau,
    k: Vec<Vec<State>>,
    stage: Vec<State>,
    scratch: Scratch,
}

impl HtcStepper {
    pub fn new(tableau: ButcherTableau) -> Self {
        HtcStepper {
            k: vec![Vec::new(); tableau.stages()],
            tableau,
            stage: Vec::new(),
            scratch: Scratch::default(),
        }
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    pub fn step(&mut self, state: &mut FvState, dt: f64) {
        debug_assert!(dt > 0.0);
        let n = state.cells.len();
        for (i, row) in self.tableau.a.iter().enumerate() {
            self.stage.clear();
            self.stage.extend_from_slice(&state.cells);
            for (aij, kj) in row.iter().zip(&self.k) {
                if *aij != 0.0 {
                    self.stage.axpy(dt * aij, kj);
                }
            }
            let mut ki = std::mem::take(&mut self.k[i]);
            ki.resize(n, State::ZERO);
            rhs_into(&state.grid, &state.model, &self.stage, &mut ki, &mut self.scratch);
            self.k[i] = ki;
        }
        for (bi, ki) in self.tableau.b.iter().zip(&self.k) {
            if *bi != 0.0 {
                state.cells.axpy(dt * bi, ki);
            }
        }
        state.time += dt;
    }
}

/// How the explicit time step reacts to the cleaning speed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CflMode {
    /// `Δt = CFL / (c0/Δx + c0/Δy)`.
    #[default]
    LightSpeed,
    /// `Δt = CFL / (s/Δx + s/Δy)` with `s = max(c0, ch)`.
    Strict,
}

pub fn cfl_dt(grid: &Grid2D, params: ModelParams, cfl: f64, mode: CflMode) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidParameter(format!("CFL must lie in (0, 1], got {cfl}")));
    }
    let s = match mode {
        CflMode::LightSpeed => params.c0,
        CflMode::Strict => params.max_signal_speed(),
    };
    Ok(cfl / (s / grid.dx() + s / grid.dy()))
}
