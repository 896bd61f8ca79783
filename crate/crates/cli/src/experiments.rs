use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use razak_core::blocks::{canonical_h, BlockElement};
use razak_core::homs::{apply_map, approx_unit_defect, map_metrics, Dyadic, HomError};
use razak_core::numkernel::{CMatrix, C64};
use razak_core::tower::{
    build_tower, eig_density, sigma_stage, tower_to_json, trace_unique_rate, SimpleTensor,
    TensorTruncation, Tower, TowerError, DENSE_DIM_CAP,
};
use serde_json::json;

use crate::config::Config;
use crate::report::{num, write_atomic, Report, Table};

/// Largest target dimension for the approximate-unit experiment.
pub const APPROX_DIM_CAP: usize = 64;

pub const UNIT_POWERS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Resource(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Resource(_) => 3,
            Failure::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Resource(m) => write!(f, "resource limit: {m}"),
            Failure::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<TowerError> for Failure {
    fn from(e: TowerError) -> Self {
        match e {
            TowerError::ResourceLimit { .. } | TowerError::PayloadLimit { .. } => {
                Failure::Resource(e.to_string())
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<HomError> for Failure {
    fn from(e: HomError) -> Self {
        TowerError::from(e).into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Build,
    Verify,
    EigDensity,
    TraceGap,
    ApproxUnit,
    Central,
}

impl Experiment {
    pub fn command(self) -> &'static str {
        match self {
            Experiment::Build => "tower build",
            Experiment::Verify => "tower verify",
            Experiment::EigDensity => "experiment eig-density",
            Experiment::TraceGap => "experiment trace-gap",
            Experiment::ApproxUnit => "experiment approx-unit",
            Experiment::Central => "experiment central",
        }
    }
}

/// Output files besides report.json: `(name, bytes)`.
type Files = Vec<(String, Vec<u8>)>;

pub fn run(exp: Experiment, cfg: &Config) -> Result<Report, Failure> {
    let seed = cfg.seed_block().map_err(Failure::Config)?;
    let tower = build_tower(seed, cfg.depth, cfg.grid)?;
    let mut report = Report::new(exp.command(), cfg);
    let files = match exp {
        Experiment::Build => build(&tower, &mut report)?,
        Experiment::Verify => verify(&tower, cfg, &mut report)?,
        Experiment::EigDensity => density(&tower, cfg, &mut report)?,
        Experiment::TraceGap => trace_gap(&tower, cfg, &mut report)?,
        Experiment::ApproxUnit => approx_unit(&tower, cfg, &mut report)?,
        Experiment::Central => central(&tower, cfg, &mut report)?,
    };
    let io = |e: std::io::Error| Failure::Config(format!("{}: {e}", cfg.out.display()));
    for (name, bytes) in &files {
        write_atomic(&cfg.out, name, bytes).map_err(io)?;
    }
    write_atomic(&cfg.out, "report.json", &report.to_json()).map_err(io)?;
    Ok(report)
}

fn rng_for(cfg: &Config, i: usize, j: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((i as u64) << 32 | j as u64),
    )
}

fn stage_list(tower: &Tower) -> serde_json::Value {
    tower
        .stages()
        .iter()
        .map(|b| json!({"n": b.n(), "n_prime": b.n_prime(), "a": b.a()}))
        .collect()
}

fn build(tower: &Tower, report: &mut Report) -> Result<Files, Failure> {
    let text = tower_to_json(tower)?;
    report.data = json!({"stages": stage_list(tower), "bytes": text.len()});
    Ok(vec![("tower.json".into(), text.into_bytes())])
}

fn verify(tower: &Tower, cfg: &Config, report: &mut Report) -> Result<Files, Failure> {
    let tol = &cfg.tolerances;
    let grid = tower.grid_size();
    for (k, step) in tower.steps().iter().enumerate() {
        let path = step
            .step_path()
            .expect("tower steps have permutation paths");
        if path.dim() > DENSE_DIM_CAP {
            report.notes.push(format!(
                "unitary path of step {} not sampled: dimension {} above {DENSE_DIM_CAP}",
                k + 1,
                path.dim()
            ));
            continue;
        }
        let worst = (0..=grid)
            .map(|s| path.at(s as f64 / grid as f64).unitary_defect())
            .fold(0.0, f64::max);
        report.le(
            format!("unitary_defect[{},{}]", k + 1, k + 2),
            worst,
            tol.unitary,
        );
    }

    let mut table = Table::new(&[
        "i",
        "j",
        "oscillation",
        "covers",
        "hom_defect",
        "adjoint_defect",
        "boundary_defect",
    ]);
    for i in 1..tower.depth() {
        for j in i + 1..=tower.depth() {
            let map = tower.stage_map(i, j)?;
            let osc = map.oscillation();
            let want = Dyadic::new(1, (j - i) as u32);
            report.eq(
                format!("oscillation[{i},{j}]"),
                osc.to_f64(),
                want.to_f64(),
                osc == want,
            );
            let covers = map.covers();
            report.eq(format!("covers[{i},{j}]"), covers as u8 as f64, 1.0, covers);
            let mut row = vec![
                i.to_string(),
                j.to_string(),
                osc.to_string(),
                covers.to_string(),
            ];
            if map.target().n_prime() > cfg.dense_cap {
                report.notes.push(format!(
                    "dense checks of phi[{i},{j}] skipped: target dimension {} above dense_cap {}",
                    map.target().n_prime(),
                    cfg.dense_cap
                ));
                row.extend([String::new(), String::new(), String::new()]);
                table.row(row);
                continue;
            }
            let mut rng = rng_for(cfg, i, j);
            let samples: Vec<BlockElement> = (0..cfg.samples)
                .map(|_| BlockElement::random(map.source(), tower.element_grid(i, j), &mut rng))
                .collect();
            let m = map_metrics(&map, &samples, &[])?;
            report.le(format!("hom_defect[{i},{j}]"), m.hom_defect, tol.hom_defect);
            report.le(
                format!("adjoint_defect[{i},{j}]"),
                m.adjoint_defect,
                tol.adjoint_defect,
            );
            report.le(
                format!("boundary_defect[{i},{j}]"),
                m.boundary_defect,
                tol.boundary,
            );
            row.extend([
                num(m.hom_defect),
                num(m.adjoint_defect),
                num(m.boundary_defect),
            ]);
            table.row(row);
        }
    }
    report.data = json!({"stages": stage_list(tower)});
    Ok(vec![("verify.csv".into(), table.csv())])
}

fn density(tower: &Tower, cfg: &Config, report: &mut Report) -> Result<Files, Failure> {
    let mut table = Table::new(&["j", "x", "delta", "distinct"]);
    for j in 2..=tower.depth() {
        let dim = tower.stage(j)?.n_prime();
        if dim > DENSE_DIM_CAP {
            report.notes.push(format!(
                "stage {j} skipped: dimension {dim} above {DENSE_DIM_CAP}"
            ));
            continue;
        }
        let mut worst = 0.0f64;
        for k in 0..cfg.points {
            let x = k as f64 / (cfg.points - 1) as f64;
            let d = eig_density(tower, j, x)?;
            worst = worst.max(d.delta);
            table.row(vec![
                j.to_string(),
                num(x),
                num(d.delta),
                d.spectrum.len().to_string(),
            ]);
        }
        report.le(format!("delta[{j}]"), worst, 0.5f64.powi(j as i32 - 1));
    }
    Ok(vec![
        ("eig_density.csv".into(), table.csv()),
        ("eig_density.dat".into(), table.dat(&[0, 1, 2])),
    ])
}

fn trace_gap(tower: &Tower, cfg: &Config, report: &mut Report) -> Result<Files, Failure> {
    let slack = cfg.tolerances.rate_slack;
    let mut table = Table::new(&["element", "j", "gap", "modulus"]);
    let mut h_only = Table::new(&["j", "gap"]);
    let seed = tower.seed();
    for j in 2..=tower.depth() {
        let grid = tower.element_grid(1, j);
        let mut rng = rng_for(cfg, 1, j);
        let mut elements = vec![("h".to_string(), canonical_h(seed, grid))];
        for s in 0..cfg.samples {
            elements.push((
                format!("random{s}"),
                BlockElement::random_self_adjoint(seed, grid, &mut rng),
            ));
        }
        for (name, f) in &elements {
            let r = trace_unique_rate(tower, 1, f, j)?;
            let g = &r.gap;
            report.le(format!("gap[{name},{j}]"), g.gap, g.modulus + slack);
            if name == "h" {
                report.le(
                    format!("gap_bound[h,{j}]"),
                    g.gap,
                    0.5f64.powi(j as i32 - 1) + slack,
                );
                h_only.row(vec![j.to_string(), num(g.gap)]);
            }
            table.row(vec![
                name.clone(),
                j.to_string(),
                num(g.gap),
                num(g.modulus),
            ]);
        }
    }
    Ok(vec![
        ("trace_gap.csv".into(), table.csv()),
        ("trace_gap.dat".into(), h_only.dat(&[0, 1])),
    ])
}

fn approx_unit(tower: &Tower, cfg: &Config, report: &mut Report) -> Result<Files, Failure> {
    let mut table = Table::new(&["j", "element", "n", "defect"]);
    let seed = tower.seed();
    for j in 2..=tower.depth() {
        let map = tower.stage_map(1, j)?;
        if map.target().n_prime() > APPROX_DIM_CAP {
            report.notes.push(format!(
                "phi[1,{j}] skipped: target dimension {} above {APPROX_DIM_CAP}",
                map.target().n_prime()
            ));
            continue;
        }
        let grid = tower.element_grid(1, j);
        let mut rng = rng_for(cfg, 1, j);
        let mut elements = vec![("h".to_string(), canonical_h(seed, grid))];
        for s in 0..cfg.samples {
            elements.push((
                format!("random{s}"),
                BlockElement::random(seed, grid, &mut rng),
            ));
        }
        for (name, f) in &elements {
            let d = UNIT_POWERS
                .iter()
                .map(|&n| approx_unit_defect(&map, std::slice::from_ref(f), n))
                .collect::<Result<Vec<f64>, _>>()?;
            let rise = d.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            report.le(format!("monotone[{name},{j}]"), rise, 0.0);
            report.le(
                format!("defect64[{name},{j}]"),
                *d.last().unwrap(),
                cfg.tolerances.approx_unit,
            );
            for (n, v) in UNIT_POWERS.iter().zip(&d) {
                table.row(vec![j.to_string(), name.clone(), n.to_string(), num(*v)]);
            }
        }
    }
    Ok(vec![("approx_unit.csv".into(), table.csv())])
}

fn random_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    use rand::Rng;
    CMatrix::from_fn(dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn central(tower: &Tower, cfg: &Config, report: &mut Report) -> Result<Files, Failure> {
    if tower.depth() < 2 {
        return Err(Failure::Config(
            "experiment central needs depth >= 2".into(),
        ));
    }
    let stage = tower.stage(2)?;
    let a = apply_map(
        &tower.stage_map(1, 2)?,
        &canonical_h(tower.seed(), tower.element_grid(1, 2)),
    )?;
    let q = stage.n();
    let trunc = TensorTruncation::new(stage.n_prime(), vec![q, q]);
    let mut rng = rng_for(cfg, 2, 0);
    let tests: Vec<SimpleTensor> = (0..cfg.samples)
        .map(|_| SimpleTensor {
            base: random_matrix(stage.n_prime(), &mut rng),
            factors: vec![random_matrix(q, &mut rng), CMatrix::identity(q)],
        })
        .collect();
    let later: Vec<usize> = (2..=tower.depth()).collect();
    let m = sigma_stage(tower, 2, &trunc, 2, &a, &tests, &later)?;
    report.le("commutator", m.commutator, 0.0);
    report.le("norm_defect", m.norm_defect, cfg.tolerances.norm_defect);
    for w in m.trace_match.windows(2) {
        let (j, k) = (w[0].0, w[1].0);
        report.le(
            format!("trace_match_step[{j},{k}]"),
            (w[1].1 - w[0].1).abs(),
            0.5f64.powi((k - 2) as i32),
        );
    }
    let mut table = Table::new(&["j", "trace_match", "norm_recovery"]);
    for (t, n) in m.trace_match.iter().zip(&m.norm_recovery) {
        table.row(vec![t.0.to_string(), num(t.1), num(n.1)]);
    }
    Ok(vec![
        ("central.csv".into(), table.csv()),
        ("central.dat".into(), table.dat(&[0, 1, 2])),
    ])
}
