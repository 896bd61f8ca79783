//! JSON form of a tower. Each step stores its branches and the samples of its
//! unitary path at the tower grid, as base64 of little-endian `f64` pairs
//! `(re, im)`, row-major, one matrix per grid point.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::BuildingBlock;
use crate::homs::{permutation_of, BranchMap, ConnectingMap, PermutationPath};
use crate::numkernel::{CMatrix, C64};

use super::{Tower, TowerError};

/// Largest raw unitary payload (bytes, before base64) a document may carry.
pub const SERIAL_BYTE_CAP: usize = 1 << 29;

#[derive(Serialize, Deserialize)]
struct BlockParams {
    n: usize,
    a: usize,
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    branches: Vec<BranchMap>,
    unitary_path: String,
}

#[derive(Serialize, Deserialize)]
struct TowerDoc {
    seed: BlockParams,
    depth: usize,
    grid_size: usize,
    stages: Vec<BlockParams>,
    steps: Vec<StepDoc>,
}

fn params(b: BuildingBlock) -> BlockParams {
    BlockParams { n: b.n(), a: b.a() }
}

fn payload_bytes(tower: &Tower) -> usize {
    tower
        .steps()
        .iter()
        .map(|s| {
            let d = s.target().n_prime();
            d.saturating_mul(d)
                .saturating_mul(16)
                .saturating_mul(tower.grid_size() + 1)
        })
        .fold(0usize, usize::saturating_add)
}

pub fn tower_to_json(tower: &Tower) -> Result<String, TowerError> {
    let bytes = payload_bytes(tower);
    if bytes > SERIAL_BYTE_CAP {
        return Err(TowerError::PayloadLimit {
            bytes,
            cap: SERIAL_BYTE_CAP,
        });
    }
    let grid = tower.grid_size();
    let steps = tower
        .steps()
        .iter()
        .map(|s| {
            let path = s.step_path().expect("tower steps have permutation paths");
            let samples: Vec<Vec<u8>> = (0..=grid)
                .into_par_iter()
                .map(|j| encode_matrix(&path.at(j as f64 / grid as f64)))
                .collect();
            StepDoc {
                branches: s.branches().to_vec(),
                unitary_path: STANDARD.encode(samples.concat()),
            }
        })
        .collect();
    let doc = TowerDoc {
        seed: params(tower.seed()),
        depth: tower.depth(),
        grid_size: grid,
        stages: tower.stages().iter().map(|&b| params(b)).collect(),
        steps,
    };
    serde_json::to_string(&doc).map_err(|e| TowerError::Corrupt(e.to_string()))
}

fn encode_matrix(m: &CMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.as_slice().len() * 16);
    for z in m.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn decode_matrix(dim: usize, bytes: &[u8]) -> CMatrix {
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    CMatrix::from_rows(dim, data).expect("chunk length checked by caller")
}

/// Reads a tower back. The unitary path of each step is rebuilt from its
/// endpoint permutations and every stored sample must agree bit for bit.
pub fn tower_from_json(text: &str) -> Result<Tower, TowerError> {
    let corrupt = |msg: String| TowerError::Corrupt(msg);
    let doc: TowerDoc = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let grid = doc.grid_size;
    if grid < 2 || !grid.is_power_of_two() {
        return Err(TowerError::InvalidGrid(grid));
    }
    if doc.depth == 0 || doc.stages.len() != doc.depth || doc.steps.len() + 1 != doc.depth {
        return Err(corrupt("depth, stages and steps disagree".into()));
    }
    let stages = doc
        .stages
        .iter()
        .map(|p| BuildingBlock::new(p.n, p.a))
        .collect::<Result<Vec<_>, _>>()?;
    if (doc.seed.n, doc.seed.a) != (stages[0].n(), stages[0].a()) {
        return Err(corrupt("seed differs from the first stage".into()));
    }
    let mut steps = Vec::with_capacity(doc.steps.len());
    for (k, step) in doc.steps.into_iter().enumerate() {
        let dim = stages[k + 1].n_prime();
        let bytes = STANDARD
            .decode(step.unitary_path.as_bytes())
            .map_err(|e| corrupt(format!("step {}: {e}", k + 1)))?;
        let per = dim * dim * 16;
        if bytes.len() != per * (grid + 1) {
            return Err(corrupt(format!(
                "step {}: payload of {} bytes, expected {}",
                k + 1,
                bytes.len(),
                per * (grid + 1)
            )));
        }
        let u0 = decode_matrix(dim, &bytes[..per]);
        let u1 = decode_matrix(dim, &bytes[grid * per..]);
        let path = PermutationPath::new(permutation_of(&u0)?, permutation_of(&u1)?)?;
        let mismatch = (0..=grid).into_par_iter().find_any(|&j| {
            encode_matrix(&path.at(j as f64 / grid as f64)) != bytes[j * per..(j + 1) * per]
        });
        if let Some(j) = mismatch {
            return Err(corrupt(format!(
                "step {}: unitary sample {j} is not on the path",
                k + 1
            )));
        }
        steps.push(ConnectingMap::from_step(
            stages[k],
            stages[k + 1],
            step.branches,
            path,
        )?);
    }
    Ok(Tower::from_parts(grid, stages, steps))
}
