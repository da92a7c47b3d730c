//! Canonical layouts, ground-truth experts and seeded random terrain.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{build_gridworld, Cell, Environment, Terrain};
use crate::error::{Error, Result};
use crate::maxent::PreferenceWeights;

/// Feature order is Normal, Grass, Rocks, Water.
pub const GRASS_LOVER: [f64; 4] = [0.0, 2.0, -1.0, -1.0];
pub const ROCK_LOVER: [f64; 4] = [0.0, -1.0, 2.0, -1.0];

const PAPER_6X6: &str = "NNWGGN/RGRWNG/RNGNRG/WNWRNN/RNGGNG/NRRNGN";
const COMPARISON_5X5: &str = "NNWGG/RGNWN/RNGNR/WNWRR/RNGRN";

/// A ground-truth demonstrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expert {
    pub name: String,
    pub weights: PreferenceWeights,
    pub count: usize,
}

impl Expert {
    pub fn new(name: impl Into<String>, weights: impl Into<PreferenceWeights>, count: usize) -> Self {
        Self { name: name.into(), weights: weights.into(), count }
    }

    pub fn grass_lover(count: usize) -> Self {
        Self::new("grass-lover", GRASS_LOVER, count)
    }

    pub fn rock_lover(count: usize) -> Self {
        Self::new("rock-lover", ROCK_LOVER, count)
    }
}

/// Grass-Lover and Rock-Lover sharing `total` demonstrations, the odd one
/// going to the Grass-Lover.
pub fn heterogeneous_experts(total: usize) -> Vec<Expert> {
    vec![Expert::grass_lover(total.div_ceil(2)), Expert::rock_lover(total / 2)]
}

/// Horizon as a multiple of the grid side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HorizonRule {
    #[default]
    #[serde(rename = "2N")]
    Short,
    #[serde(rename = "5N")]
    Long,
}

impl HorizonRule {
    pub fn horizon(self, n: usize) -> usize {
        match self {
            Self::Short => 2 * n,
            Self::Long => 5 * n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Short => "2N",
            Self::Long => "5N",
        }
    }
}

impl fmt::Display for HorizonRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HorizonRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2N" | "2n" | "short" => Ok(Self::Short),
            "5N" | "5n" | "long" => Ok(Self::Long),
            _ => Err(Error::Usage(format!("unknown horizon rule {s:?} (expected 2N or 5N)"))),
        }
    }
}

/// Named fixed layouts. Start is the top-left cell, goal the bottom-right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The 6×6 two-expert demonstration world.
    #[serde(rename = "paper-6x6")]
    Paper6x6,
    /// The 5×5 world used for method comparison and the K ablation.
    #[serde(rename = "comparison-5x5")]
    Comparison5x5,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Paper6x6, Preset::Comparison5x5];

    pub fn name(self) -> &'static str {
        match self {
            Self::Paper6x6 => "paper-6x6",
            Self::Comparison5x5 => "comparison-5x5",
        }
    }

    /// Rows separated by `/`, one terrain code per cell.
    pub fn layout(self) -> &'static str {
        match self {
            Self::Paper6x6 => PAPER_6X6,
            Self::Comparison5x5 => COMPARISON_5X5,
        }
    }

    pub fn size(self) -> usize {
        self.layout().split('/').count()
    }

    pub fn terrain(self) -> Vec<Terrain> {
        self.layout()
            .chars()
            .filter(|&c| c != '/')
            .map(|c| Terrain::from_code(c).expect("preset layouts use valid codes"))
            .collect()
    }

    pub fn environment(self, rule: HorizonRule) -> Environment {
        let n = self.size();
        build_gridworld(n, self.terrain(), Cell::new(0, 0), Cell::new(n - 1, n - 1), rule.horizon(n))
            .expect("preset layouts are feasible")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown preset {s:?} (expected paper-6x6 or comparison-5x5)")))
    }
}

/// I.i.d. terrain: each cell other than start and goal is Water, Grass or
/// Rocks with the given probabilities, Normal otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomTerrain {
    pub water_density: f64,
    pub grass_density: f64,
    pub rock_density: f64,
}

impl Default for RandomTerrain {
    fn default() -> Self {
        Self { water_density: 0.15, grass_density: 0.2, rock_density: 0.2 }
    }
}

const MAX_DRAWS: usize = 10_000;

impl RandomTerrain {
    pub fn validate(&self) -> Result<()> {
        let d = [self.water_density, self.grass_density, self.rock_density];
        if d.iter().any(|x| !(0.0..=1.0).contains(x)) || d.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(
                "terrain densities must lie in [0, 1] and sum to at most 1".into(),
            ));
        }
        Ok(())
    }

    /// Draws layouts until one has a feasible horizon. Same seed, same
    /// environment.
    pub fn generate(&self, n: usize, rule: HorizonRule, seed: u64) -> Result<Environment> {
        self.validate()?;
        if n < 2 {
            return Err(Error::InvalidEnvironment("random terrain needs n >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (start, goal) = (0, n * n - 1);
        let mut last = None;
        for _ in 0..MAX_DRAWS {
            let terrain: Vec<Terrain> = (0..n * n)
                .map(|i| {
                    let u: f64 = rng.random();
                    if i == start || i == goal {
                        Terrain::Normal
                    } else if u < self.water_density {
                        Terrain::Water
                    } else if u < self.water_density + self.grass_density {
                        Terrain::Grass
                    } else if u < self.water_density + self.grass_density + self.rock_density {
                        Terrain::Rocks
                    } else {
                        Terrain::Normal
                    }
                })
                .collect();
            match build_gridworld(n, terrain, Cell::new(0, 0), Cell::new(n - 1, n - 1), rule.horizon(n)) {
                Ok(env) => return Ok(env),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::GoalUnreachable))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_square_and_feasible() {
        for p in Preset::ALL {
            let env = p.environment(HorizonRule::Short);
            assert_eq!(env.num_states(), p.size() * p.size());
            assert!(!env.true_constraints().is_empty());
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert_eq!(Preset::Paper6x6.environment(HorizonRule::Long).horizon(), 30);
    }

    #[test]
    fn split_gives_odd_demo_to_grass() {
        let e = heterogeneous_experts(5);
        assert_eq!((e[0].count, e[1].count), (3, 2));
        assert_eq!(heterogeneous_experts(1)[1].count, 0);
    }

    #[test]
    fn random_terrain_is_seeded() {
        let g = RandomTerrain::default();
        let a = g.generate(8, HorizonRule::Short, 3).unwrap();
        let b = g.generate(8, HorizonRule::Short, 3).unwrap();
        assert_eq!(a, b);
        let dry = RandomTerrain { water_density: 0.0, ..g };
        assert!(dry.generate(5, HorizonRule::Short, 1).unwrap().true_constraints().is_empty());
    }

    #[test]
    fn bad_densities_rejected() {
        let g = RandomTerrain { water_density: 0.6, grass_density: 0.6, rock_density: 0.0 };
        assert!(g.generate(5, HorizonRule::Short, 0).is_err());
        assert!("7N".parse::<HorizonRule>().is_err());
    }
}
