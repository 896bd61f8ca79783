use std::path::{Path, PathBuf};

use razak_core::blocks::BuildingBlock;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub n: usize,
    pub a: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub hom_defect: f64,
    pub adjoint_defect: f64,
    pub boundary: f64,
    pub unitary: f64,
    pub rate_slack: f64,
    pub approx_unit: f64,
    pub norm_defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hom_defect: 1e-8,
            adjoint_defect: 1e-10,
            boundary: 1e-9,
            unitary: 1e-10,
            rate_slack: 1e-6,
            approx_unit: 0.05,
            norm_defect: 1e-9,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("hom_defect", self.hom_defect),
            ("adjoint_defect", self.adjoint_defect),
            ("boundary", self.boundary),
            ("unitary", self.unitary),
            ("rate_slack", self.rate_slack),
            ("approx_unit", self.approx_unit),
            ("norm_defect", self.norm_defect),
        ]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub block: BlockSpec,
    pub depth: usize,
    /// Grid of the tower; a power of two.
    pub grid: usize,
    /// Seed for every random sample.
    pub seed: u64,
    /// Random elements per map.
    pub samples: usize,
    /// Equispaced evaluation points for eig-density.
    pub points: usize,
    /// Largest target dimension for the dense homomorphism checks.
    pub dense_cap: usize,
    pub out: PathBuf,
    pub tolerances: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            block: BlockSpec { n: 1, a: 1 },
            depth: 3,
            grid: 16,
            seed: 1,
            samples: 4,
            points: 16,
            dense_cap: 200,
            out: PathBuf::from("out"),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Default)]
pub struct Overrides {
    pub depth: Option<usize>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(path: Option<&Path>, o: Overrides) -> Result<Config, String> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => Config::default(),
        };
        if let Some(d) = o.depth {
            c.depth = d;
        }
        if let Some(g) = o.grid {
            c.grid = g;
        }
        if let Some(p) = o.out {
            c.out = p;
        }
        if let Some(s) = o.seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), String> {
        self.seed_block()?;
        if self.depth == 0 {
            return Err("depth must be at least 1".into());
        }
        if self.grid < 2 || !self.grid.is_power_of_two() {
            return Err(format!("grid {} is not a power of two >= 2", self.grid));
        }
        if self.samples == 0 {
            return Err("samples must be positive".into());
        }
        if self.points < 2 {
            return Err("points must be at least 2".into());
        }
        for (name, v) in self.tolerances.entries() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!(
                    "tolerance {name} = {v} is not a finite nonnegative number"
                ));
            }
        }
        Ok(())
    }

    pub fn seed_block(&self) -> Result<BuildingBlock, String> {
        BuildingBlock::new(self.block.n, self.block.a).map_err(|e| e.to_string())
    }
}
