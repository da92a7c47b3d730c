//! Environment files.
//!
//! TOML with these keys:
//!
//! ```toml
//! format_version = 1
//! n = 3
//! start = [0, 0]        # [row, col]
//! goal = [2, 2]
//! horizon = 6
//! gamma = 1.0           # optional, defaults to 1.0
//! terrain = [           # n rows of n whitespace-separated cell codes
//!   "N G N",
//!   "N W R",
//!   "N N N",
//! ]
//! ```
//!
//! Cell codes are `N` (Normal), `G` (Grass), `R` (Rocks) and `W` (Water).
//! A cell token must hold exactly one code; a token such as `GR` activates
//! two features and is rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, Environment, Terrain};
use crate::error::{Error, Result};

pub const ENV_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvFile {
    format_version: u32,
    n: usize,
    start: [usize; 2],
    goal: [usize; 2],
    horizon: usize,
    #[serde(default = "default_gamma")]
    gamma: f64,
    terrain: Vec<String>,
}

fn default_gamma() -> f64 {
    1.0
}

pub fn render_env(env: &Environment) -> String {
    let n = env.n();
    let terrain = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| env.terrain_at(r * n + c).code().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let start = env.cell(env.start());
    let goal = env.cell(env.goal());
    let file = EnvFile {
        format_version: ENV_FORMAT_VERSION,
        n,
        start: [start.row, start.col],
        goal: [goal.row, goal.col],
        horizon: env.horizon(),
        gamma: env.gamma(),
        terrain,
    };
    toml::to_string(&file).expect("environment serializes")
}

/// Parses an environment file body. `origin` names the source in errors.
pub fn parse_env(text: &str, origin: &str) -> Result<Environment> {
    crate::files::check_toml_version(text, origin, ENV_FORMAT_VERSION)?;
    let file: EnvFile = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    let n = file.n;
    if file.terrain.len() != n {
        return Err(Error::parse(
            origin,
            format!("field `terrain`: {} rows, expected {n}", file.terrain.len()),
        ));
    }
    let mut terrain = Vec::with_capacity(n * n);
    for (row, line) in file.terrain.iter().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(Error::parse(
                origin,
                format!("field `terrain` row {row}: {} cells, expected {n}", tokens.len()),
            ));
        }
        for (col, token) in tokens.into_iter().enumerate() {
            let mut codes = Vec::new();
            for ch in token.chars() {
                let t = Terrain::from_code(ch).ok_or_else(|| {
                    Error::parse(
                        origin,
                        format!("field `terrain` row {row} col {col}: unknown terrain code '{ch}'"),
                    )
                })?;
                codes.push(t);
            }
            if codes.len() != 1 {
                return Err(Error::NotOneHot { row, col });
            }
            terrain.push(codes[0]);
        }
    }
    Environment::new(
        n,
        terrain,
        Cell::new(file.start[0], file.start[1]),
        Cell::new(file.goal[0], file.goal[1]),
        file.horizon,
        file.gamma,
    )
}

pub fn save_env(env: &Environment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_env(env)).map_err(|e| Error::io(path, e))
}

pub fn load_env(path: impl AsRef<Path>) -> Result<Environment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_env(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
format_version = 1
n = 3
start = [0, 0]
goal = [2, 2]
horizon = 6
terrain = ["N G N", "N W R", "N N N"]
"#;

    #[test]
    fn parses_and_round_trips() {
        let env = parse_env(SMALL, "small").unwrap();
        assert_eq!(env.terrain_at(1), Terrain::Grass);
        assert_eq!(env.true_constraints().to_vec(), vec![4]);
        assert_eq!(env.gamma(), 1.0);
        let again = parse_env(&render_env(&env), "again").unwrap();
        assert_eq!(env, again);
    }

    #[test]
    fn rejects_two_features_on_one_cell() {
        let text = SMALL.replace("\"N G N\"", "\"N GR N\"");
        let err = parse_env(&text, "bad").unwrap_err();
        assert!(matches!(err, Error::NotOneHot { row: 0, col: 1 }));
        assert!(err.to_string().contains("feature map not one-hot"));
    }

    #[test]
    fn rejects_unknown_code() {
        let text = SMALL.replace("\"N W R\"", "\"N X R\"");
        let err = parse_env(&text, "bad").unwrap_err().to_string();
        assert!(err.contains("row 1 col 1"), "{err}");
        assert!(err.contains("'X'"), "{err}");
    }

    #[test]
    fn malformed_toml_reports_location() {
        let text = SMALL.replace("horizon = 6", "horizon = six");
        let err = parse_env(&text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("bad.toml"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let text = format!("{SMALL}\nextra = 1\n");
        assert!(matches!(parse_env(&text, "x"), Err(Error::Parse { .. })));
        let text = SMALL.replace("format_version = 1", "format_version = 9");
        assert!(matches!(parse_env(&text, "x"), Err(Error::FormatVersion { found: 9, .. })));
    }
}
