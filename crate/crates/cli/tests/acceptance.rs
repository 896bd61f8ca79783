//! Acceptance criteria, one PASS/FAIL line each. Criteria listed in
//! `EXPECTED_FAILURES` are known to be unattainable as written; they still
//! print FAIL, and the run fails only on an unexpected result.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::Command;
use std::time::Instant;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use common::{q, spectrum_of_image, trace_gap, witness_depth, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use razak_core::blocks::{
    canonical_h, certify_no_projection, BlockElement, BuildingBlock, ProjectionVerdict, Rejection,
};
use razak_core::homs::{
    apply_map, approx_unit_defect, pair_defects, simplicity_witness, Dyadic, Interval,
};
use razak_core::numkernel::{matrix_function, scalar_calculus, sup_norm, CMatrix, C64};
use razak_core::tower::{
    build_tower, eig_density, sigma_stage, trace_unique_rate, SimpleTensor, TensorTruncation,
};
use razak_core::traces::{eval_trace_complex, pushforward_trace, trace_norm, Trace};

/// `(criterion, reason)`.
const EXPECTED_FAILURES: &[(usize, &str)] = &[(
    4,
    "the required value 1/8 at j=2 contradicts exact enumeration, which gives 5/24",
)];

type Outcome = Result<String, String>;

fn f(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn seed() -> BuildingBlock {
    BuildingBlock::new(1, 1).unwrap()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let t = build_tower(seed(), 3, 256).map_err(|e| e.to_string())?;
    let mut validity = 0.0f64;
    let mut hom = 0.0f64;
    let mut adj = 0.0f64;
    for (i, j) in [(1, 2), (2, 3), (1, 3)] {
        let map = t.stage_map(i, j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 * i as u64 + j as u64);
        let grid = t.element_grid(i, j);
        let pairs: Vec<_> = (0..20)
            .map(|_| {
                let e = BlockElement::random(map.source(), grid, &mut rng);
                let g = BlockElement::random(map.source(), grid, &mut rng);
                (e, g)
            })
            .collect();
        let d = pair_defects(&map, &pairs).map_err(|e| e.to_string())?;
        validity = validity.max(d.boundary);
        hom = hom.max(d.hom);
        adj = adj.max(d.adjoint);
    }
    let mut unitary = 0.0f64;
    for step in t.steps() {
        let path = step.step_path().unwrap();
        for s in 0..=256 {
            unitary = unitary.max(path.at(s as f64 / 256.0).unitary_defect());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        validity <= 1e-9 && hom <= 1e-8 && adj <= 1e-10 && unitary <= 1e-10 && secs <= 60.0,
        format!(
            "validity {validity:.2e}, hom {hom:.2e}, adjoint {adj:.2e}, unitary {unitary:.2e}, {secs:.1} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = build_tower(seed(), 4, 4).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    let mut ok = true;
    for j in 2..=4 {
        let map = t.stage_map(1, j).unwrap();
        ok &= map.oscillation() == Dyadic::new(1, j as u32 - 1) && map.covers();
        seen.push(format!("{}", map.oscillation()));
    }
    check(ok, format!("oscillations {} and covering", seen.join(", ")))
}

fn criterion_3() -> Outcome {
    let t = build_tower(seed(), 3, 4).map_err(|e| e.to_string())?;
    let mut worst = [0.0f64; 2];
    for j in 2..=3 {
        for k in 0..16 {
            let d = eig_density(&t, j, k as f64 / 15.0).unwrap();
            worst[j - 2] = worst[j - 2].max(d.delta);
        }
    }
    let mut oracle = spectrum_of_image(1, 1, q(0, 1));
    oracle.dedup();
    let oracle: Vec<f64> = oracle.into_iter().map(f).collect();
    let got = eig_density(&t, 2, 0.0).unwrap().spectrum;
    let exact = got == oracle && oracle == [0.0, 0.5, 1.0];
    check(
        worst[0] <= 0.5 && worst[1] <= 0.25 && exact,
        format!(
            "max delta {} (j=2), {} (j=3); spectrum at (2, 0) {got:?}",
            worst[0], worst[1]
        ),
    )
}

fn criterion_4() -> Outcome {
    let grid = 16;
    let t = build_tower(seed(), 4, grid).map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = (2..=4)
        .map(|j| {
            let h = canonical_h(t.seed(), t.element_grid(1, j));
            trace_unique_rate(&t, 1, &h, j).unwrap().gap.gap
        })
        .collect();
    let oracle = trace_gap(1, 1, grid as i64);
    let matches_oracle = (gaps[0] - f(oracle)).abs() <= 1e-12;
    let rates = gaps[1] <= 0.25 + 1e-6 && gaps[2] <= 0.125 + 1e-6;
    let literal = (gaps[0] - 0.125).abs() <= 1e-12;
    check(
        literal && rates,
        format!(
            "gap(2) = {:.17} (oracle {oracle}, {}; required 1/8), gap(3) = {:.6}, gap(4) = {:.6}",
            gaps[0],
            if matches_oracle {
                "matches"
            } else {
                "MISMATCH"
            },
            gaps[1],
            gaps[2]
        ),
    )
    .map_err(|m| {
        if matches_oracle && rates {
            m
        } else {
            format!("{m}; oracle or rate check failed too")
        }
    })
}

fn criterion_5() -> Outcome {
    let t = build_tower(seed(), 2, 16).map_err(|e| e.to_string())?;
    let map = t.stage_map(1, 2).unwrap();
    let grid = t.element_grid(1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut elements = vec![canonical_h(seed(), grid)];
    elements.extend((0..5).map(|_| BlockElement::random(seed(), grid, &mut rng)));
    let mut ok = true;
    let mut worst64 = 0.0f64;
    let mut h1 = 0.0;
    for (k, e) in elements.iter().enumerate() {
        let d: Vec<f64> = [1, 2, 4, 8, 16, 32, 64]
            .iter()
            .map(|&n| approx_unit_defect(&map, std::slice::from_ref(e), n).unwrap())
            .collect();
        ok &= d.windows(2).all(|w| w[1] <= w[0]) && d[6] < 0.05;
        worst64 = worst64.max(d[6]);
        if k == 0 {
            h1 = d[0];
        }
    }
    ok &= (h1 - 0.25).abs() <= 1e-9;
    check(
        ok,
        format!("defect(1) for h = {h1:.12}, worst defect(64) = {worst64:.4}"),
    )
}

fn criterion_6() -> Outcome {
    let t = build_tower(seed(), 3, 8).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut duality = 0.0f64;
    let mut norm = 0.0f64;
    for k in 0..50 {
        let (i, j) = [(1, 2), (2, 3), (1, 3)][k % 3];
        let map = t.stage_map(i, j).unwrap();
        let e = BlockElement::random(map.source(), t.element_grid(i, j), &mut rng);
        let atoms: Vec<(f64, f64)> = (0..rng.gen_range(1..5))
            .map(|_| (rng.gen_range(0..=8) as f64 / 8.0, rng.gen_range(0.05..1.0)))
            .collect();
        let tau = Trace::new(map.target(), atoms).unwrap();
        let pushed = pushforward_trace(&map, &tau).unwrap();
        let lhs = eval_trace_complex(&tau, &apply_map(&map, &e).unwrap()).unwrap();
        let rhs = eval_trace_complex(&pushed, &e).unwrap();
        duality = duality.max((lhs - rhs).norm());
        norm = norm.max((trace_norm(&pushed) - trace_norm(&tau)).abs());
    }
    check(
        duality <= 1e-9 && norm <= 1e-6,
        format!("duality {duality:.2e}, norm change {norm:.2e}"),
    )
}

fn sigmoid(k: f64, c: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x| 1.0 / (1.0 + (-k * (x - c)).exp()) - 1.0 / (1.0 + (k * c).exp())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut rejected, mut near, mut worst) = (0, 0, 0.0f64);
    for k in 0..100 {
        let (n, a) = [(1, 1), (2, 1), (1, 3)][rng.gen_range(0..3)];
        let b = BuildingBlock::new(n, a).unwrap();
        let e = if k % 3 == 0 {
            let e = BlockElement::random_self_adjoint(b, 64, &mut rng);
            let s = rng.gen_range(0.005..0.08) / sup_norm(e.samples());
            e.scale(s.into())
        } else {
            let base = if k % 3 == 1 {
                BlockElement::random_self_adjoint(b, 64, &mut rng)
            } else {
                canonical_h(b, 64)
            };
            let g = sigmoid(rng.gen_range(50.0..3000.0), rng.gen_range(-0.9..0.9));
            let samples = scalar_calculus(base.samples(), g, 1e-12).unwrap();
            let c = matrix_function(base.boundary_datum(), g, 1e-12).unwrap();
            BlockElement::from_parts(b, samples, c).unwrap()
        };
        match certify_no_projection(&e, 0.1) {
            ProjectionVerdict::NearZero { bound } => {
                near += 1;
                worst = worst.max(bound);
            }
            ProjectionVerdict::NotAlmostProjection(_) => rejected += 1,
        }
    }
    let h = canonical_h(seed(), 256);
    let centre = 0.5 + 1.0 / 512.0;
    let p = scalar_calculus(
        h.samples(),
        |x| 1.0 / (1.0 + (-4000.0 * (x - centre)).exp()),
        1e-12,
    )
    .unwrap();
    let e = BlockElement::from_parts(seed(), p, CMatrix::identity(1)).unwrap();
    let verdict = certify_no_projection(&e, 0.1);
    let jump = matches!(
        verdict,
        ProjectionVerdict::NotAlmostProjection(Rejection::RankJump {
            r_start: 1,
            r_end: 2,
            r_infinity: 1,
            ..
        })
    );
    check(
        worst <= 0.5 && jump,
        format!("{rejected} rejected, {near} near zero (largest bound {worst:.3}); sigmoid of h: {verdict:?}"),
    )
}

fn criterion_8() -> Outcome {
    let t = build_tower(seed(), 3, 4).map_err(|e| e.to_string())?;
    let a = apply_map(
        &t.stage_map(1, 2).unwrap(),
        &canonical_h(seed(), t.element_grid(1, 2)),
    )
    .unwrap();
    let trunc = TensorTruncation::new(12, vec![3, 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut r = |k: usize| {
        CMatrix::from_fn(k, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let tests: Vec<SimpleTensor> = (0..10)
        .map(|_| SimpleTensor {
            base: r(12),
            factors: vec![r(3), CMatrix::identity(3)],
        })
        .collect();
    let m = sigma_stage(&t, 2, &trunc, 2, &a, &tests, &[2, 3]).unwrap();
    // ev_∞(φ_12(h)) = diag(h(1/2), 1 × a).
    let oracle = (common::trace_of_h(1, q(1, 2)) * 2 + q(1, 1)) / 3;
    let (t2, t3) = (m.trace_match[0].1, m.trace_match[1].1);
    check(
        m.commutator == 0.0 && m.norm_defect <= 1e-9 && t2 == f(oracle) && (t3 - t2).abs() <= 0.5,
        format!(
            "commutator {}, norm defect {:.2e}, trace_match(2) = {t2} (oracle {oracle}), trace_match(3) = {t3:.6}",
            m.commutator, m.norm_defect
        ),
    )
}

fn criterion_9() -> Outcome {
    let h = canonical_h(seed(), 64);
    let mut msg = Vec::new();
    let mut ok = true;
    for ((lo, hi), want_j) in [((q(2, 5), q(3, 5)), 2), ((q(0, 1), q(1, 10)), 5)] {
        let w =
            simplicity_witness(&h, Interval::open(f(lo), f(hi)), 8).map_err(|e| e.to_string())?;
        let oracle = witness_depth(lo, hi, 8).map(|d| d + 1);
        let j = w.depth as usize + 1;
        ok &= Some(j) == oracle && j == want_j && w.min_block_norm > 0.0;
        msg.push(format!(
            "({lo}, {hi}) -> j={j} via {} (oracle {oracle:?})",
            w.branch
        ));
    }
    check(ok, msg.join("; "))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"depth": 3, "grid": 16, "samples": 3, "out": {:?}}}"#,
            dir.path().join("out")
        ),
    )
    .unwrap();
    let mut reports = Vec::new();
    for cmd in [
        ["tower", "verify"],
        ["tower", "verify"],
        ["experiment", "trace-gap"],
        ["experiment", "trace-gap"],
    ] {
        let status = Command::new(env!("CARGO_BIN_EXE_razak"))
            .args(cmd)
            .arg("--config")
            .arg(&cfg)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("{cmd:?} exited with {status}"));
        }
        reports.push(std::fs::read(dir.path().join("out/report.json")).unwrap());
    }
    check(
        reports[0] == reports[1] && reports[2] == reports[3],
        format!(
            "report.json of {} and {} bytes reproduced",
            reports[0].len(),
            reports[2].len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("constructor soundness", criterion_1),
        ("exact oscillation and covering", criterion_2),
        ("eigenvalue density", criterion_3),
        ("unique-trace rate", criterion_4),
        ("approximate unit", criterion_5),
        ("trace duality and norm", criterion_6),
        ("projectionlessness certifier", criterion_7),
        ("central embeddings", criterion_8),
        ("simplicity witness", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut unexpected = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        let expected = EXPECTED_FAILURES.iter().find(|e| e.0 == id);
        let outcome = run();
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("{tag} {id:>2} {name}: {msg}");
        match (outcome.is_ok(), expected) {
            (false, Some((_, why))) => println!("        expected failure: {why}"),
            (true, Some(_)) => {
                println!("        listed as an expected failure but passed");
                unexpected += 1;
            }
            (false, None) => unexpected += 1,
            (true, None) => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected result(s)");
        std::process::exit(1);
    }
}
