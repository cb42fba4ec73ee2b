use std::collections::BTreeSet;

use proptest::prelude::*;

use multiplier_core::local::{GridView, Local, RandomBox, Recording};
use multiplier_core::problems::*;
use multiplier_core::scheme::*;
use multiplier_core::*;

const EPS: f64 = f64::EPSILON;

fn problem(name: &str) -> Box<dyn MultiplierProblem> {
    instantiate(name, &ParamSet::new()).unwrap()
}

fn random_state<'a>(seed: u64, base: &'a [f64], spread: &'a [f64], tau: f64, h: f64) -> RandomBox<'a> {
    RandomBox {
        seed,
        base,
        spread,
        t: 0.3,
        tau,
        h,
    }
}

/// `max_i |(Lambda r)_i - (D_t psi + D_x Phi)_i|` and the term scale, or
/// `None` off the multiplier branch.
fn identity_defect(p: &dyn MultiplierProblem, at: &dyn Local) -> Option<(f64, f64)> {
    let s = p.info().s;
    let r = match assemble(p, at, 0.0) {
        Ok(r) if r.branch == Branch::Multiplier => r,
        _ => return None,
    };
    let (mut lr, mut cf) = ([0.0; MAX_M], [0.0; MAX_M]);
    apply_multiplier(p, at, r.values(), &mut lr);
    conservative_form_residual(p, at, &mut cf);
    let defect = (0..s).fold(0.0f64, |a, i| a.max((lr[i] - cf[i]).abs()));
    let scale = r.mag.max(r.lambda_norm * r.max_abs());
    Some((defect, scale))
}

macro_rules! algebraic_identity {
    ($($test:ident => $name:expr),* $(,)?) => {$(
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]
            #[test]
            fn $test(seed in any::<u64>(), tau in 1e-3f64..0.5, h in 1e-2f64..0.5) {
                let p = problem($name);
                let base = p.trial_means();
                let spread = vec![p.trial_amplitude(); base.len()];
                let at = random_state(seed, &base, &spread, tau, h);
                if let Some((defect, scale)) = identity_defect(p.as_ref(), &at) {
                    prop_assert!(defect <= 1e3 * EPS * scale, "defect {defect:e}, scale {scale:e}");
                }
            }
        }
    )*};
}

algebraic_identity! {
    identity_pendulum => "pendulum",
    identity_dho => "dho",
    identity_two_body => "two_body",
    identity_lotka_volterra => "lotka_volterra",
    identity_lorenz => "lorenz",
    identity_burgers => "burgers",
    identity_kdv => "kdv",
    identity_shallow_water => "shallow_water",
    identity_factored_oscillator => "factored_oscillator",
    identity_manufactured => "manufactured",
}

#[test]
fn random_states_mostly_take_the_multiplier_branch() {
    for p in all() {
        let base = p.trial_means();
        let spread = vec![p.trial_amplitude(); base.len()];
        let hits = (0..200u64)
            .filter(|&seed| identity_defect(p.as_ref(), &random_state(seed, &base, &spread, 0.1, 0.1)).is_some())
            .count();
        assert!(hits >= 150, "{}: {hits}", p.info().name);
    }
}

proptest! {
    #[test]
    fn burgers_higher_powers_follow_the_identity(seed in any::<u64>(), p in 2usize..6, tau in 1e-3f64..0.5, h in 1e-2f64..0.5) {
        let b = Burgers::new(p);
        let at = random_state(seed, &[1.5], &[0.6], tau, h);
        let (defect, scale) = identity_defect(&b, &at).unwrap();
        prop_assert!(defect <= 1e3 * EPS * scale);
    }

    #[test]
    fn telescoping_on_periodic_grids(
        nx in 1usize..24,
        ny in 1usize..12,
        two_d in any::<bool>(),
        vals in prop::collection::vec(-1e3f64..1e3, 24 * 12),
    ) {
        let extent: Vec<usize> = if two_d { vec![nx, ny] } else { vec![nx] };
        let grid = SpatialGrid::periodic(&extent, 0.0, 1.0).unwrap();
        let np = grid.npoints();
        let phi = &vals[..np];
        let big = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for axis in 0..grid.dim() {
            let mut sum = 0.0;
            for q in 0..np {
                let j = grid.multi(q);
                let back = grid.offset_axis(j, axis, -1).unwrap();
                sum += phi[q] - phi[grid.linear(back)];
            }
            prop_assert!(sum.abs() <= np as f64 * EPS * big);
        }
    }

    #[test]
    fn boundary_and_interior_partition_the_mesh(
        nx in 1usize..9,
        ny in 1usize..9,
        px in any::<bool>(),
        py in any::<bool>(),
    ) {
        let mode = |p: bool| if p { BoundaryMode::Periodic } else { BoundaryMode::Boundary };
        let grid = SpatialGrid::new(0.1, &[nx, ny], &[mode(px), mode(py)], &[0.0, 0.0]).unwrap();
        let b: BTreeSet<_> = grid.boundary_indices().into_iter().map(|(j, _)| j).collect();
        for q in 0..grid.npoints() {
            let j = grid.multi(q);
            prop_assert_eq!(grid.is_boundary(j), b.contains(&j));
        }
        if px && py {
            prop_assert!(b.is_empty());
        }
    }

    #[test]
    fn rotation_is_bit_exact(
        m in 1usize..4,
        np in 1usize..20,
        cap in 1usize..4,
        raw in prop::collection::vec(any::<f64>(), 4 * 3 * 20),
    ) {
        let lv = |k: usize| raw[k * m * np..(k + 1) * m * np].to_vec();
        let mut s = FieldState::new(m, np, cap, lv(0));
        for k in 1..4 {
            s.advance(lv(k));
            for back in 0..s.len() {
                let want = lv(k - back);
                prop_assert!(s.level(back).iter().zip(&want).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
            prop_assert_eq!(s.len(), cap.min(k + 1));
        }
    }

    #[test]
    fn pendulum_zero_compatible_continuity(
        z in -3.0f64..3.0,
        c in -3.0f64..3.0,
        tau in 0.01f64..0.5,
        log_eps in -10.0f64..-4.0,
        sign in prop::sample::select(vec![-1.0, 1.0]),
    ) {
        let p = Pendulum::new(1.0, 1.0);
        let eps = 10f64.powf(log_eps);
        let grid = SpatialGrid::point();
        let limit_at = [[z], [c], [z]];
        let lv: Vec<&[f64]> = limit_at.iter().map(|v| v.as_slice()).collect();
        let view = GridView::new(&lv, 1, 1, &grid, [0, 0], 0.0, tau);
        let limit = assemble(&p, &view, 0.0).unwrap();
        prop_assert_eq!(limit.branch, Branch::ZeroLimit);

        let near = [[z + sign * eps], [c], [z]];
        let lv: Vec<&[f64]> = near.iter().map(|v| v.as_slice()).collect();
        let view = GridView::new(&lv, 1, 1, &grid, [0, 0], 0.0, tau);
        let r = assemble(&p, &view, 0.0).unwrap();
        prop_assert_eq!(r.branch, Branch::Multiplier);
        let bound = (1.0 / (tau * tau) + 1.0) * eps;
        prop_assert!((r.r[0] - limit.r[0]).abs() <= bound, "{:e} > {:e}", (r.r[0] - limit.r[0]).abs(), bound);
    }

    #[test]
    fn rectangular_assembly_reduces_to_square(seed in any::<u64>(), tau in 1e-3f64..0.5, h in 1e-2f64..0.5) {
        for name in ["pendulum", "dho", "two_body", "burgers", "kdv", "shallow_water", "factored_oscillator", "manufactured"] {
            let p = problem(name);
            prop_assert_eq!(p.info().m, p.info().s);
            let base = p.trial_means();
            let spread = vec![p.trial_amplitude(); base.len()];
            let at = random_state(seed, &base, &spread, tau, h);
            let a = assemble_rectangular_residual(p.as_ref(), &at);
            let b = assemble_system_residual(p.as_ref(), &at);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
                }
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }
}

#[test]
fn reads_stay_inside_the_declared_stencil() {
    for p in all() {
        let st = p.stencil();
        let base = p.trial_means();
        let spread = vec![p.trial_amplitude(); base.len()];
        let inner = random_state(7, &base, &spread, 0.1, 0.2);
        let rec = Recording::new(&inner);
        let _ = assemble(p.as_ref(), &rec, 0.0);
        let mut printed = [0.0; MAX_M];
        p.printed_residual(&rec, &mut printed);
        let seen = rec.seen.borrow();
        assert!(!seen.is_empty());
        let lead = st.lead as isize;
        for &(dt, dx) in seen.iter() {
            assert!((-1..=lead).contains(&dt), "{}: time offset {dt}", p.info().name);
            for axis in 0..2 {
                let ok = if axis < p.info().n {
                    dx[axis] >= -(st.back[axis] as isize) && dx[axis] <= st.fwd[axis] as isize
                } else {
                    dx[axis] == 0
                };
                assert!(ok, "{}: offset {dx:?} at dt {dt}", p.info().name);
            }
        }
        assert!(seen.iter().any(|&(dt, _)| dt == lead), "{}", p.info().name);
    }
}

#[test]
fn kdv_reads_the_full_declared_stencil() {
    let p = Kdv::new();
    let st = p.stencil();
    let inner = random_state(3, &[0.5], &[0.3], 0.1, 0.2);
    let rec = Recording::new(&inner);
    assemble(&p, &rec, 0.0).unwrap();
    let xs: BTreeSet<isize> = rec.seen.borrow().iter().filter(|(dt, _)| *dt == 0).map(|(_, d)| d[0]).collect();
    let want: BTreeSet<isize> = (-(st.back[0] as isize)..=st.fwd[0] as isize).collect();
    assert_eq!(xs, want);
}
