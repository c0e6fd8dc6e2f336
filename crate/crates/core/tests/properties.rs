//! Randomized invariants across modules.

use maxglm::grid::{Field, Grid2D, Location};
use maxglm::harness::step_schedule;
use maxglm::htc::{rk_step, semidiscrete_rhs, ButcherTableau, FvState};
use maxglm::mimetic::{curl_c2v, curl_v2c, div_c2v, div_v2c, grad_c2v, grad_v2c, random_field};
use maxglm::model::{EnergyKind, EnergyModel, ModelParams, State};
use maxglm::simm::{simm_step, total_energy_staggered, CgConfig, StaggeredState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Op = fn(&Field) -> Field;

fn ops() -> [(Op, Location, usize); 6] {
    [
        (grad_c2v, Location::Cell, 1),
        (div_c2v, Location::Cell, 3),
        (curl_c2v, Location::Cell, 3),
        (grad_v2c, Location::Vertex, 1),
        (div_v2c, Location::Vertex, 3),
        (curl_v2c, Location::Vertex, 3),
    ]
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.data.iter().zip(&b.data).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operators_commute_with_periodic_shifts(
        nx in 2usize..12, ny in 2usize..12, di in -5isize..6, dj in -5isize..6, seed in any::<u64>(),
    ) {
        let g = Grid2D::new(nx, ny, (-1.0, 1.0), (0.0, 2.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (op, loc, nc) in ops() {
            let f = random_field(g, loc, nc, &mut rng);
            let a = op(&f.shifted(di, dj));
            let b = op(&f).shifted(di, dj);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn operators_are_linear(n in 3usize..10, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let g = Grid2D::square(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (op, loc, nc) in ops() {
            let (u, v) = (random_field(g, loc, nc, &mut rng), random_field(g, loc, nc, &mut rng));
            let lhs = op(&u.lincomb(a, b, &v));
            let rhs = op(&u).lincomb(a, b, &op(&v));
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * (n * n) as f64);
        }
    }

    #[test]
    fn staggered_energy_is_conserved(
        n in 4usize..12, ch in 0.5f64..50.0, dt in 1e-3f64..0.5, seed in any::<u64>(),
    ) {
        let g = Grid2D::square(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ModelParams::new(1.0, ch).unwrap();
        let mut s = StaggeredState::sample(g, p, |_, _| State::ZERO);
        s.b = random_field(g, Location::Cell, 3, &mut rng);
        s.psi = random_field(g, Location::Cell, 1, &mut rng);
        s.e = random_field(g, Location::Vertex, 3, &mut rng);
        s.phi = random_field(g, Location::Vertex, 1, &mut rng);
        let e0 = total_energy_staggered(&s);
        for _ in 0..3 {
            s = simm_step(&s, dt, &CgConfig::default()).unwrap().0;
        }
        let e = total_energy_staggered(&s);
        prop_assert!((e / e0 - 1.0).abs() <= 1e-10, "drift {}", e / e0 - 1.0);
    }

    #[test]
    fn collocated_totals_are_conserved(n in 3usize..10, seed in any::<u64>(), exp in any::<bool>()) {
        let g = Grid2D::new(n, n + 1, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let kind = if exp { EnergyKind::Exponential } else { EnergyKind::Quadratic };
        let m = EnergyModel::new(kind, ModelParams::new(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells: Vec<State> = (0..g.points())
            .map(|_| {
                let mut q = State::ZERO;
                q.0.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
                q
            })
            .collect();
        let s = FvState::new(g, m, cells);
        let next = rk_step(&s, 0.01, &ButcherTableau::rk4());
        let total = |c: &[State]| c.iter().fold(State::ZERO, |a, q| a + *q);
        prop_assert!((total(&next.cells) - total(&s.cells)).max_abs() <= 1e-12);
        let rhs = semidiscrete_rhs(&s);
        let prod: f64 = s.cells.iter().zip(&rhs).map(|(q, d)| m.main_field(q).dot(d)).sum();
        prop_assert!((prod * g.cell_area()).abs() <= 1e-12);
    }

    #[test]
    fn schedules_land_on_t_end(t_end in 1e-3f64..20.0, dt in 1e-3f64..1.0) {
        let s = step_schedule(t_end, dt);
        prop_assert!(!s.is_empty());
        prop_assert!(s.iter().all(|h| *h > 0.0 && *h <= dt * (1.0 + 1e-9)));
        prop_assert!((s.iter().sum::<f64>() - t_end).abs() <= 1e-12 * t_end.max(1.0) * s.len() as f64);
    }
}
