mod common;

use common::{q, trace_gap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use razak_core::blocks::{canonical_h, psi_embed, BlockElement, BuildingBlock};
use razak_core::homs::apply_map;
use razak_core::numkernel::GridFunction;
use razak_core::tower::{build_tower, build_tower_with_cap, trace_unique_rate, Tower};
use razak_core::traces::{
    affine_image, eval_trace, eval_trace_complex, oscillation_gap, pushforward_trace, trace_norm,
    trace_norm_extrapolated, Trace,
};

fn seed() -> BuildingBlock {
    BuildingBlock::new(1, 1).unwrap()
}

fn random_trace(block: BuildingBlock, grid: usize, rng: &mut ChaCha8Rng) -> Trace {
    let k = rng.gen_range(1..5);
    let atoms: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            let j = rng.gen_range(0..=grid);
            (j as f64 / grid as f64, rng.gen_range(0.05..1.0))
        })
        .collect();
    Trace::new(block, atoms).unwrap()
}

#[test]
fn pushforward_is_dual_to_the_map() {
    let t = build_tower(seed(), 3, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..50 {
        let (i, j) = [(1, 2), (2, 3), (1, 3)][k % 3];
        let map = t.stage_map(i, j).unwrap();
        let e = BlockElement::random(t.stage(i).unwrap(), t.element_grid(i, j), &mut rng);
        let tau = random_trace(t.stage(j).unwrap(), t.grid_size(), &mut rng);
        let lhs = eval_trace_complex(&tau, &apply_map(&map, &e).unwrap()).unwrap();
        let rhs = eval_trace_complex(&pushforward_trace(&map, &tau).unwrap(), &e).unwrap();
        assert!((lhs - rhs).norm() <= 1e-9, "pair {k}: {lhs} vs {rhs}");
    }
}

#[test]
fn pushforward_preserves_the_norm() {
    let t = build_tower(seed(), 3, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for k in 0..30 {
        let (i, j) = [(1, 2), (2, 3), (1, 3)][k % 3];
        let map = t.stage_map(i, j).unwrap();
        let tau = random_trace(t.stage(j).unwrap(), 16, &mut rng);
        let pushed = pushforward_trace(&map, &tau).unwrap();
        let total: f64 = tau.atoms().iter().map(|a| a.1).sum();
        let pushed_total: f64 = pushed.atoms().iter().map(|a| a.1).sum();
        assert!((total - pushed_total).abs() <= 1e-12);
        assert!((trace_norm(&pushed) - trace_norm(&tau)).abs() <= 1e-6);
        let limit = trace_norm_extrapolated(&pushed, 4096).unwrap();
        assert!((limit - trace_norm(&tau)).abs() <= 1e-3, "{limit}");
    }
}

#[test]
fn point_trace_at_zero_has_norm_a_over_a_plus_one() {
    for a in 1..5 {
        let b = BuildingBlock::new(2, a).unwrap();
        let tau = Trace::point(b, 0.0).unwrap();
        assert!((trace_norm(&tau) - a as f64 / (a as f64 + 1.0)).abs() < 1e-15);
        assert_eq!(trace_norm(&Trace::point(b, 0.25).unwrap()), 1.0);
        assert_eq!(trace_norm(&Trace::zero(b)), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn affine_image_lies_in_the_cone(n in 1usize..=3, a in 1usize..=4, s in any::<u64>()) {
        let b = BuildingBlock::new(n, a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let e = BlockElement::random_self_adjoint(b, 16, &mut rng);
        let g = affine_image(&e).unwrap();
        let ratio = a as f64 / (a as f64 + 1.0);
        prop_assert!((g.first() - ratio * g.last()).abs() <= 1e-12);
        prop_assert!(psi_embed(b, &g).is_ok());
        prop_assert!(affine_image(&BlockElement::random(b, 4, &mut rng)).is_err());
    }
}

fn ratio_to_f64(r: common::Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[test]
fn trace_gap_of_h_matches_oracle() {
    let t = build_tower(seed(), 4, 16).unwrap();
    for j in 2..=4 {
        let h = canonical_h(t.seed(), t.element_grid(1, j));
        let gap = oscillation_gap(&t.stage_map(1, j).unwrap(), &h).unwrap();
        let want = ratio_to_f64(trace_gap(1, j - 1, 16));
        assert!(
            (gap.gap - want).abs() <= 1e-12,
            "j={j}: {} vs {want}",
            gap.gap
        );
    }
    assert_eq!(trace_gap(1, 1, 16), q(5, 24));
}

fn rate_holds(t: &Tower, i: usize, j: usize, rng: &mut ChaCha8Rng) {
    let b = t.stage(i).unwrap();
    let grid = t.element_grid(i, j);
    let elements = [
        canonical_h(b, grid),
        BlockElement::random_self_adjoint(b, grid, rng),
        psi_embed(
            b,
            &GridFunction::tabulate(grid, |x| {
                let a = b.a() as f64;
                a / (a + 1.0) + x / (a + 1.0) + (6.0 * x).sin() * x * (1.0 - x)
            }),
        )
        .unwrap(),
    ];
    for (k, f) in elements.iter().enumerate() {
        let r = trace_unique_rate(t, i, f, j).unwrap();
        assert!(
            r.within_bound,
            "({i},{j}) element {k}: {} > {}",
            r.gap.gap, r.gap.modulus
        );
    }
}

#[test]
fn trace_gap_within_modulus_up_to_four_steps() {
    let t = build_tower(seed(), 4, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for i in 1..=3 {
        for j in i + 1..=4 {
            rate_holds(&t, i, j, &mut rng);
        }
    }
}

#[test]
fn trace_gap_within_modulus_at_four_steps_from_the_seed() {
    // Only branch lists are used, so the dimension cap can be lifted.
    let t = build_tower_with_cap(seed(), 5, 4, usize::MAX).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let b = t.seed();
    let grid = t.element_grid(1, 5);
    let h = canonical_h(b, grid);
    let r = trace_unique_rate(&t, 1, &h, 5).unwrap();
    assert!(r.within_bound);
    let f = BlockElement::random_self_adjoint(b, grid, &mut rng);
    assert!(trace_unique_rate(&t, 1, &f, 5).unwrap().within_bound);
    assert!(eval_trace(&Trace::point(b, 0.5).unwrap(), &h).unwrap() > 0.0);
}
