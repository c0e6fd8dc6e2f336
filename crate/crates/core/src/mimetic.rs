//! Dual mimetic nabla operators between cell and vertex fields.
//!
//! The operators that map cell data to vertices (`*_c2v`) use the 2×2 cells
//! around a vertex; the ones mapping vertex data to cells (`*_v2c`) use the
//! 2×2 corners of a cell. Both are built from the same one-sided pair
//! averages
//!
//! ```text
//! Dx u = (u₊₊ + u₊₋ − u₋₊ − u₋₋) / (2dx),    Dy u = (u₊₊ + u₋₊ − u₊₋ − u₋₋) / (2dy)
//! ```
//!
//! so that `curl∘grad = 0` and `div∘curl = 0` hold exactly in both
//! directions, and `grad_c2v` is the negative adjoint of `div_v2c` (and vice
//! versa) in the volume-weighted inner product. Fields are two-dimensional
//! with `∂/∂z = 0`, but vectors keep three components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid2D, Location};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    X,
    Y,
}

/// The 2×2 stencil weights shared by all operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilSpec {
    /// Weights of the (−−, +−, −+, ++) neighbors for `∂x`.
    pub x: [f64; 4],
    /// Same ordering for `∂y`.
    pub y: [f64; 4],
}

impl StencilSpec {
    pub fn new(grid: &Grid2D) -> Self {
        let wx = 1.0 / (2.0 * grid.dx());
        let wy = 1.0 / (2.0 * grid.dy());
        StencilSpec {
            x: [-wx, wx, -wx, wx],
            y: [-wy, -wy, wy, wy],
        }
    }
}

/// `D_dir` of component `comp` of `src`, evaluated on the dual locations.
fn diff(src: &Field, comp: usize, dir: Dir) -> Vec<f64> {
    let g = src.grid;
    let (nx, ny, nc) = (g.nx, g.ny, src.ncomp);
    let w = StencilSpec::new(&g);
    let w = match dir {
        Dir::X => w.x[3],
        Dir::Y => w.y[3],
    };
    // Offsets of the "minus" neighbor along each axis: cells feed vertex (i, j)
    // from {i, i+1}×{j, j+1}, vertices feed cell (i, j) from {i−1, i}×{j−1, j}.
    let (lo, hi): (isize, isize) = match src.location {
        Location::Cell => (0, 1),
        Location::Vertex => (-1, 0),
    };
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let jm = crate::grid::wrap(j as isize + lo, ny);
        let jp = crate::grid::wrap(j as isize + hi, ny);
        for i in 0..nx {
            let im = crate::grid::wrap(i as isize + lo, nx);
            let ip = crate::grid::wrap(i as isize + hi, nx);
            let v = |a: usize, b: usize| src.data[(b * nx + a) * nc + comp];
            // Differences before sums: keeps the composed identities at the
            // roundoff of the inputs rather than of the scaled sums.
            out[j * nx + i] = match dir {
                Dir::X => w * ((v(ip, jm) - v(im, jm)) + (v(ip, jp) - v(im, jp))),
                Dir::Y => w * ((v(im, jp) - v(im, jm)) + (v(ip, jp) - v(ip, jm))),
            };
        }
    }
    out
}

fn scalar_from(grid: Grid2D, location: Location, data: Vec<f64>) -> Field {
    Field {
        grid,
        location,
        ncomp: 1,
        data,
    }
}

fn vector_from(grid: Grid2D, location: Location, c: [Vec<f64>; 3]) -> Field {
    let mut out = Field::zeros(grid, location, 3);
    for (k, chunk) in out.data.chunks_exact_mut(3).enumerate() {
        chunk[0] = c[0][k];
        chunk[1] = c[1][k];
        chunk[2] = c[2][k];
    }
    out
}

fn gradient(phi: &Field) -> Field {
    assert!(phi.is_scalar(), "gradient needs a scalar field");
    let n = phi.grid.points();
    vector_from(
        phi.grid,
        phi.location.dual(),
        [diff(phi, 0, Dir::X), diff(phi, 0, Dir::Y), vec![0.0; n]],
    )
}

fn divergence(a: &Field) -> Field {
    assert_eq!(a.ncomp, 3, "divergence needs a vector field");
    let mut d = diff(a, 0, Dir::X);
    for (v, w) in d.iter_mut().zip(diff(a, 1, Dir::Y)) {
        *v += w;
    }
    scalar_from(a.grid, a.location.dual(), d)
}

fn curl(a: &Field) -> Field {
    assert_eq!(a.ncomp, 3, "curl needs a vector field");
    let c1 = diff(a, 2, Dir::Y);
    let c2: Vec<f64> = diff(a, 2, Dir::X).into_iter().map(|v| -v).collect();
    let mut c3 = diff(a, 1, Dir::X);
    for (v, w) in c3.iter_mut().zip(diff(a, 0, Dir::Y)) {
        *v -= w;
    }
    vector_from(a.grid, a.location.dual(), [c1, c2, c3])
}

/// `∇_p^c φ_c`: gradient of a cell scalar, located at vertices (`z` component 0).
pub fn grad_c2v(phi: &Field) -> Field {
    assert_eq!(phi.location, Location::Cell);
    gradient(phi)
}

/// `∇_p^c · A_c`: divergence of a cell vector at vertices. `A₃` does not enter.
pub fn div_c2v(a: &Field) -> Field {
    assert_eq!(a.location, Location::Cell);
    divergence(a)
}

/// `∇_p^c × A_c`: curl of a cell vector at vertices.
pub fn curl_c2v(a: &Field) -> Field {
    assert_eq!(a.location, Location::Cell);
    curl(a)
}

/// `∇_c^p φ_p`: gradient of a vertex scalar at cell centers.
pub fn grad_v2c(phi: &Field) -> Field {
    assert_eq!(phi.location, Location::Vertex);
    gradient(phi)
}

/// `∇_c^p · A_p`: divergence of a vertex vector at cell centers.
pub fn div_v2c(a: &Field) -> Field {
    assert_eq!(a.location, Location::Vertex);
    divergence(a)
}

/// `∇_c^p × A_p`: curl of a vertex vector at cell centers.
pub fn curl_v2c(a: &Field) -> Field {
    assert_eq!(a.location, Location::Vertex);
    curl(a)
}

/// Fills a field with independent uniform samples in `[−1, 1]`.
pub fn random_field(grid: Grid2D, location: Location, ncomp: usize, rng: &mut impl Rng) -> Field {
    let mut f = Field::zeros(grid, location, ncomp);
    for v in f.data.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    f
}

/// Largest residual of the four discrete identities
/// `curl_v2c∘grad_c2v`, `curl_c2v∘grad_v2c`, `div_v2c∘curl_c2v`,
/// `div_c2v∘curl_v2c` over `trials` random unit-scale fields.
pub fn check_identities(grid: Grid2D, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let phi_c = random_field(grid, Location::Cell, 1, &mut rng);
        let phi_p = random_field(grid, Location::Vertex, 1, &mut rng);
        let a_c = random_field(grid, Location::Cell, 3, &mut rng);
        let a_p = random_field(grid, Location::Vertex, 3, &mut rng);
        worst = worst
            .max(curl_v2c(&grad_c2v(&phi_c)).max_abs())
            .max(curl_c2v(&grad_v2c(&phi_p)).max_abs())
            .max(div_v2c(&curl_c2v(&a_c)).max_abs())
            .max(div_c2v(&curl_v2c(&a_p)).max_abs());
    }
    worst
}

/// Relative summation-by-parts defect of both operator pairs:
/// `Σ_p (grad_c2v φ_c)·A_p + Σ_c φ_c div_v2c A_p` and the dual pair, each
/// divided by the magnitude of its terms.
pub fn adjointness_defect(grid: Grid2D, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let phi_c = random_field(grid, Location::Cell, 1, &mut rng);
        let a_p = random_field(grid, Location::Vertex, 3, &mut rng);
        let lhs = grad_c2v(&phi_c).dot(&a_p);
        let rhs = -phi_c.dot(&div_v2c(&a_p));
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));

        let phi_p = random_field(grid, Location::Vertex, 1, &mut rng);
        let a_c = random_field(grid, Location::Cell, 3, &mut rng);
        let lhs = grad_v2c(&phi_p).dot(&a_c);
        let rhs = -phi_p.dot(&div_c2v(&a_c));
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    worst
}
