//! Staggered semi-implicit mimetic scheme.
//!
//! `B` and `ψ` live at cell centers, `E` and `φ` at vertices. With half-time
//! averages `u^{n+½} = ½(uⁿ + u^{n+1})` one step reads
//!
//! ```text
//! B^{n+1} = Bⁿ − Δt c0 curl_v2c E^{n+½} − Δt ch grad_v2c φ^{n+½}
//! φ^{n+1} = φⁿ − Δt ch div_c2v B^{n+½}
//! E^{n+1} = Eⁿ + Δt c0 curl_c2v B^{n+½} − Δt ch grad_c2v ψ^{n+½}
//! ψ^{n+1} = ψⁿ − Δt ch div_v2c E^{n+½}
//! ```
//!
//! Eliminating `B` and `ψ` leaves two decoupled wave equations at the
//! vertices, one for `φ` and one for `E`. Both are symmetric positive
//! definite and are solved with conjugate gradients; `B` and `ψ` then follow
//! explicitly. The scheme only covers the quadratic energy.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D, Location};
use crate::mimetic::{curl_c2v, curl_v2c, div_c2v, div_v2c, grad_c2v, grad_v2c};
use crate::model::{ModelParams, State};

/// Solution of the staggered scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredState {
    pub grid: Grid2D,
    pub params: ModelParams,
    pub time: f64,
    /// Cell 3-vector.
    pub b: Field,
    /// Cell scalar.
    pub psi: Field,
    /// Vertex 3-vector.
    pub e: Field,
    /// Vertex scalar.
    pub phi: Field,
}

impl StaggeredState {
    /// Samples `q(x, y)` at the location of each field: `B` and `ψ` at cell
    /// centers, `E` and `φ` at vertices.
    pub fn sample(grid: Grid2D, params: ModelParams, q: impl Fn(f64, f64) -> State) -> Self {
        StaggeredState {
            grid,
            params,
            time: 0.0,
            b: Field::sample_vector(grid, Location::Cell, |x, y| q(x, y).b()),
            psi: Field::sample_scalar(grid, Location::Cell, |x, y| q(x, y).psi()),
            e: Field::sample_vector(grid, Location::Vertex, |x, y| q(x, y).e()),
            phi: Field::sample_scalar(grid, Location::Vertex, |x, y| q(x, y).phi()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.psi.is_finite() && self.e.is_finite() && self.phi.is_finite()
    }

    /// Checks locations and component counts of the four fields.
    pub fn validate(&self) -> Result<()> {
        let want = [
            ("B", &self.b, Location::Cell, 3),
            ("psi", &self.psi, Location::Cell, 1),
            ("E", &self.e, Location::Vertex, 3),
            ("phi", &self.phi, Location::Vertex, 1),
        ];
        for (name, f, loc, nc) in want {
            if f.grid != self.grid || f.location != loc || f.ncomp != nc {
                return Err(Error::ShapeMismatch(format!(
                    "{name} must be a {}-component {} field on the state grid",
                    nc,
                    loc.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// `Σ_c |Ω|(½B² + ½ψ²) + Σ_p |Ω|(½φ² + ½E²)`.
pub fn total_energy_staggered(s: &StaggeredState) -> f64 {
    0.5 * (s.b.dot(&s.b) + s.psi.dot(&s.psi) + s.e.dot(&s.e) + s.phi.dot(&s.phi))
}

/// Conjugate gradient settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgConfig {
    /// Relative residual target `‖Ax − b‖ ≤ tol·‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·nx·ny`.
    pub max_iter: Option<usize>,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-12,
            max_iter: None,
        }
    }
}

impl CgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("CG tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParameter("CG iteration cap must be at least 1".into()));
        }
        Ok(())
    }

    fn cap(&self, grid: &Grid2D) -> usize {
        self.max_iter.unwrap_or(10 * grid.points())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final relative residual (recursive estimate).
    pub residual: f64,
}

/// Solves `apply(x) = rhs` for a symmetric positive definite `apply`,
/// starting from `x0`. Inner products are volume weighted.
pub fn cg_solve(
    apply: impl Fn(&Field) -> Field,
    rhs: &Field,
    x0: &Field,
    cfg: &CgConfig,
) -> Result<(Field, CgReport)> {
    cfg.validate()?;
    if !rhs.same_shape(x0) {
        return Err(Error::ShapeMismatch("CG start vector and right-hand side differ in shape".into()));
    }
    let bnorm = rhs.l2_norm();
    if bnorm == 0.0 {
        return Ok((Field::zeros(rhs.grid, rhs.location, rhs.ncomp), CgReport::default()));
    }
    let target = cfg.tol * bnorm;
    let mut x = x0.clone();
    let mut r = rhs.lincomb(1.0, -1.0, &apply(&x));
    let mut rr = r.dot(&r);
    if rr.sqrt() <= target {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                residual: rr.sqrt() / bnorm,
            },
        ));
    }
    let mut p = r.clone();
    let cap = cfg.cap(&rhs.grid);
    for it in 1..=cap {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: rr.sqrt() / bnorm,
            });
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = r.dot(&r);
        if rr_new.sqrt() <= target {
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    residual: rr_new.sqrt() / bnorm,
                },
            ));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        p = r.lincomb(1.0, beta, &p);
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: rr.sqrt() / bnorm,
    })
}

/// `φ − ¼Δt²ch² div_c2v(grad_v2c φ)` for a vertex scalar.
pub fn apply_phi_operator(params: ModelParams, dt: f64, phi: &Field) -> Field {
    let k = 0.25 * dt * dt * params.ch * params.ch;
    phi.lincomb(1.0, -k, &div_c2v(&grad_v2c(phi)))
}

/// `E + ¼Δt²c0² curl_c2v(curl_v2c E) − ¼Δt²ch² grad_c2v(div_v2c E)` for a
/// vertex 3-vector.
pub fn apply_e_operator(params: ModelParams, dt: f64, e: &Field) -> Field {
    let kc = 0.25 * dt * dt * params.c0 * params.c0;
    let kh = 0.25 * dt * dt * params.ch * params.ch;
    let mut out = e.lincomb(1.0, kc, &curl_c2v(&curl_v2c(e)));
    out.axpy(-kh, &grad_c2v(&div_v2c(e)));
    out
}

/// Iteration counts of the two implicit solves in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub phi: CgReport,
    pub e: CgReport,
}

/// One step of size `dt`.
pub fn simm_step(s: &StaggeredState, dt: f64, cfg: &CgConfig) -> Result<(StaggeredState, StepReport)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let ModelParams { c0, ch } = s.params;
    let params = s.params;
    let k_h = 0.25 * dt * dt * ch * ch;
    let k_0 = 0.25 * dt * dt * c0 * c0;

    // φ: (I − k_h L) φ^{n+1} = φⁿ − Δt ch div Bⁿ + k_h L φⁿ.
    let mut rhs_phi = s.phi.clone();
    rhs_phi.axpy(-dt * ch, &div_c2v(&s.b));
    rhs_phi.axpy(k_h, &div_c2v(&grad_v2c(&s.phi)));
    let (phi_new, rep_phi) = cg_solve(|x| apply_phi_operator(params, dt, x), &rhs_phi, &s.phi, cfg)?;

    // E: (I + k_0 CC − k_h GD) E^{n+1} = Eⁿ + Δt c0 curl Bⁿ − Δt ch grad ψⁿ − k_0 CC Eⁿ + k_h GD Eⁿ.
    let mut rhs_e = s.e.clone();
    rhs_e.axpy(dt * c0, &curl_c2v(&s.b));
    rhs_e.axpy(-dt * ch, &grad_c2v(&s.psi));
    rhs_e.axpy(-k_0, &curl_c2v(&curl_v2c(&s.e)));
    rhs_e.axpy(k_h, &grad_c2v(&div_v2c(&s.e)));
    let (e_new, rep_e) = cg_solve(|x| apply_e_operator(params, dt, x), &rhs_e, &s.e, cfg)?;

    let e_half = s.e.lincomb(0.5, 0.5, &e_new);
    let phi_half = s.phi.lincomb(0.5, 0.5, &phi_new);
    let mut b = s.b.clone();
    b.axpy(-dt * c0, &curl_v2c(&e_half));
    b.axpy(-dt * ch, &grad_v2c(&phi_half));
    let mut psi = s.psi.clone();
    psi.axpy(-dt * ch, &div_v2c(&e_half));

    Ok((
        StaggeredState {
            grid: s.grid,
            params,
            time: s.time + dt,
            b,
            psi,
            e: e_new,
            phi: phi_new,
        },
        StepReport { phi: rep_phi, e: rep_e },
    ))
}
