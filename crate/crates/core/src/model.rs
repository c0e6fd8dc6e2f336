//! The continuous Maxwell-GLM model.
//!
//! The conserved state is the 8-vector `q = (B₁, B₂, B₃, φ, E₁, E₂, E₃, ψ)`,
//! where `E` is the electric field rescaled by the light speed and `φ`, `ψ`
//! are the magnetic and electric cleaning scalars. The system reads
//!
//! ```text
//! ∂t B + c0 ∇×E + ch ∇φ   = 0
//! ∂t φ + ch ∇·B           = 0
//! ∂t E − c0 ∇×B + ch ∇ψ   = 0
//! ∂t ψ + ch ∇·E           = 0
//! ```
//!
//! and is written in symmetric form `∂t q + ∂k (H_k p(q)) = 0`, where
//! `p = ∂𝓔/∂q` is the main field of an energy potential `𝓔`. The same
//! constant symmetric matrices `H_k` serve the quadratic potential (for which
//! `p = q`) and any nonlinear convex potential, so the energy flux
//! `F_k = ½ pᵀ H_k p` satisfies `p · ∂k f_k = ∂k F_k` for every model.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Number of conserved variables.
pub const NVARS: usize = 8;

/// Positions of the variables inside a [`State`].
pub mod var {
    pub const B1: usize = 0;
    pub const B2: usize = 1;
    pub const B3: usize = 2;
    pub const PHI: usize = 3;
    pub const E1: usize = 4;
    pub const E2: usize = 5;
    pub const E3: usize = 6;
    pub const PSI: usize = 7;
}

/// Point value of the conserved variables, ordered `(B, φ, E, ψ)`.
///
/// The same type carries main-field vectors and fluxes, which live in the
/// same 8-dimensional space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State(pub [f64; NVARS]);

impl State {
    pub const ZERO: State = State([0.0; NVARS]);

    pub fn new(b: [f64; 3], phi: f64, e: [f64; 3], psi: f64) -> Self {
        State([b[0], b[1], b[2], phi, e[0], e[1], e[2], psi])
    }

    /// Unit vector in slot `k`.
    pub fn unit(k: usize) -> Self {
        let mut s = State::ZERO;
        s.0[k] = 1.0;
        s
    }

    pub fn b(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn phi(&self) -> f64 {
        self.0[var::PHI]
    }

    pub fn e(&self) -> [f64; 3] {
        [self.0[4], self.0[5], self.0[6]]
    }

    pub fn psi(&self) -> f64 {
        self.0[var::PSI]
    }

    pub fn dot(&self, other: &State) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for State {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl IndexMut<usize> for State {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

impl Add for State {
    type Output = State;
    fn add(mut self, rhs: State) -> State {
        self += rhs;
        self
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, rhs: State) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for State {
    type Output = State;
    fn sub(mut self, rhs: State) -> State {
        self -= rhs;
        self
    }
}

impl SubAssign for State {
    fn sub_assign(&mut self, rhs: State) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, mut rhs: State) -> State {
        for v in rhs.0.iter_mut() {
            *v *= self;
        }
        rhs
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        -1.0 * self
    }
}

/// Spatial direction of a flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Light speed `c0` and cleaning speed `ch`, constant over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub c0: f64,
    pub ch: f64,
}

impl ModelParams {
    pub fn new(c0: f64, ch: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
        }
        if !(ch > 0.0 && ch.is_finite()) {
            return Err(Error::InvalidParameter(format!("ch must be positive, got {ch}")));
        }
        Ok(ModelParams { c0, ch })
    }

    /// `ε = c0 / ch`, the small parameter of the large-cleaning-speed limit.
    pub fn epsilon(&self) -> f64 {
        self.c0 / self.ch
    }

    /// Largest eigenvalue magnitude of the flux matrices.
    pub fn max_signal_speed(&self) -> f64 {
        self.c0.max(self.ch)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { c0: 1.0, ch: 1.0 }
    }
}

/// Flux matrices `H₁, H₂, H₃` and the eigen-decomposition `H₁ R = R Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMatrices {
    pub h: [[[f64; NVARS]; NVARS]; 3],
    /// Right eigenvectors of `H₁`, one per column, ordered like `lambda`.
    pub r: [[f64; NVARS]; NVARS],
    /// Eigenvalues `(−ch, −ch, −c0, −c0, +c0, +c0, +ch, +ch)`.
    pub lambda: [f64; NVARS],
}

/// Builds the flux matrices for the given speeds.
pub fn assemble_matrices(params: ModelParams) -> SystemMatrices {
    let ModelParams { c0, ch } = params;
    let mut h = [[[0.0; NVARS]; NVARS]; 3];
    // (row, col, value) of the upper triangle; the lower one is mirrored.
    let upper: [&[(usize, usize, f64)]; 3] = [
        &[(0, 3, ch), (1, 6, -c0), (2, 5, c0), (4, 7, ch)],
        &[(0, 6, c0), (1, 3, ch), (2, 4, -c0), (5, 7, ch)],
        &[(0, 5, -c0), (1, 4, c0), (2, 3, ch), (6, 7, ch)],
    ];
    for (hk, entries) in h.iter_mut().zip(upper) {
        for &(i, j, v) in entries {
            hk[i][j] = v;
            hk[j][i] = v;
        }
    }

    #[rustfmt::skip]
    let r = [
        [-1.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  1.0],
        [ 0.0,  0.0,  1.0,  0.0,  0.0, -1.0,  0.0,  0.0],
        [ 0.0,  0.0,  0.0, -1.0,  1.0,  0.0,  0.0,  0.0],
        [ 1.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  1.0],
        [ 0.0, -1.0,  0.0,  0.0,  0.0,  0.0,  1.0,  0.0],
        [ 0.0,  0.0,  0.0,  1.0,  1.0,  0.0,  0.0,  0.0],
        [ 0.0,  0.0,  1.0,  0.0,  0.0,  1.0,  0.0,  0.0],
        [ 0.0,  1.0,  0.0,  0.0,  0.0,  0.0,  1.0,  0.0],
    ];
    let lambda = [-ch, -ch, -c0, -c0, c0, c0, ch, ch];
    SystemMatrices { h, r, lambda }
}

impl SystemMatrices {
    /// Dense product `H_k v`.
    pub fn apply(&self, axis: Axis, v: &State) -> State {
        let hk = &self.h[axis.index()];
        let mut out = State::ZERO;
        for (o, row) in out.0.iter_mut().zip(hk) {
            *o = row.iter().zip(&v.0).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `max |H₁R − RΛ|` entrywise.
    pub fn eigen_residual(&self) -> f64 {
        let h1 = &self.h[0];
        let mut worst: f64 = 0.0;
        for i in 0..NVARS {
            for j in 0..NVARS {
                let hr: f64 = (0..NVARS).map(|k| h1[i][k] * self.r[k][j]).sum();
                worst = worst.max((hr - self.r[i][j] * self.lambda[j]).abs());
            }
        }
        worst
    }

    /// `max |H_k − H_kᵀ|` over all three matrices.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for hk in &self.h {
            for i in 0..NVARS {
                for j in 0..NVARS {
                    worst = worst.max((hk[i][j] - hk[j][i]).abs());
                }
            }
        }
        worst
    }
}

/// Every row of every `H_k` has exactly one nonzero entry; this keeps the
/// flux evaluation at 8 multiplies per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SparseFlux {
    rows: [[(usize, f64); NVARS]; 3],
}

impl SparseFlux {
    fn from_matrices(m: &SystemMatrices) -> Self {
        let mut rows = [[(0usize, 0.0); NVARS]; 3];
        for (k, hk) in m.h.iter().enumerate() {
            for (i, row) in hk.iter().enumerate() {
                let mut nz = row.iter().enumerate().filter(|(_, v)| **v != 0.0);
                let (j, &v) = nz.next().expect("flux matrix row without a nonzero");
                debug_assert!(nz.next().is_none());
                rows[k][i] = (j, v);
            }
        }
        SparseFlux { rows }
    }

    #[inline]
    fn apply(&self, k: usize, p: &State) -> State {
        let mut out = State::ZERO;
        for (o, &(j, v)) in out.0.iter_mut().zip(&self.rows[k]) {
            *o = v * p.0[j];
        }
        out
    }
}

/// Shape of the total energy potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnergyKind {
    /// `𝓔 = ½(E² + B²) + ½(ψ² + φ²)`.
    Quadratic,
    /// `𝓔 = c0 e^{½B²} + c0 e^{½E²} + (ch²/c0) e^{½φ²} + (ch²/c0) e^{½ψ²}`.
    Exponential,
}

/// An energy potential together with the flux structure it closes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    pub kind: EnergyKind,
    pub params: ModelParams,
    flux: SparseFlux,
}

impl EnergyModel {
    pub fn new(kind: EnergyKind, params: ModelParams) -> Self {
        let flux = SparseFlux::from_matrices(&assemble_matrices(params));
        EnergyModel { kind, params, flux }
    }

    pub fn quadratic(params: ModelParams) -> Self {
        Self::new(EnergyKind::Quadratic, params)
    }

    pub fn exponential(params: ModelParams) -> Self {
        Self::new(EnergyKind::Exponential, params)
    }

    pub fn energy_density(&self, q: &State) -> f64 {
        match self.kind {
            EnergyKind::Quadratic => 0.5 * q.norm_sq(),
            EnergyKind::Exponential => {
                let ModelParams { c0, ch } = self.params;
                let (b2, e2) = (norm3_sq(q.b()), norm3_sq(q.e()));
                let (phi, psi) = (q.phi(), q.psi());
                let scalar = ch * ch / c0;
                c0 * (0.5 * b2).exp()
                    + c0 * (0.5 * e2).exp()
                    + scalar * (0.5 * phi * phi).exp()
                    + scalar * (0.5 * psi * psi).exp()
            }
        }
    }

    /// Main field `p = ∂𝓔/∂q`.
    pub fn main_field(&self, q: &State) -> State {
        match self.kind {
            EnergyKind::Quadratic => *q,
            EnergyKind::Exponential => {
                let ModelParams { c0, ch } = self.params;
                let scalar = ch * ch / c0;
                let gb = c0 * (0.5 * norm3_sq(q.b())).exp();
                let ge = c0 * (0.5 * norm3_sq(q.e())).exp();
                let (phi, psi) = (q.phi(), q.psi());
                let gphi = scalar * (0.5 * phi * phi).exp();
                let gpsi = scalar * (0.5 * psi * psi).exp();
                let (b, e) = (q.b(), q.e());
                State::new(
                    [gb * b[0], gb * b[1], gb * b[2]],
                    gphi * phi,
                    [ge * e[0], ge * e[1], ge * e[2]],
                    gpsi * psi,
                )
            }
        }
    }

    /// Physical flux `f_k(q) = H_k p(q)`.
    pub fn physical_flux(&self, q: &State, axis: Axis) -> State {
        self.flux_of_main_field(&self.main_field(q), axis)
    }

    /// Energy flux `F_k(q) = ½ p(q)ᵀ H_k p(q)`.
    pub fn energy_flux(&self, q: &State, axis: Axis) -> f64 {
        let p = self.main_field(q);
        0.5 * p.dot(&self.flux_of_main_field(&p, axis))
    }

    /// `H_k p` for an already evaluated main field.
    #[inline]
    pub fn flux_of_main_field(&self, p: &State, axis: Axis) -> State {
        self.flux.apply(axis.index(), p)
    }
}

fn norm3_sq(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

#[cfg(test)]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
