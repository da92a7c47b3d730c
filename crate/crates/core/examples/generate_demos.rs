//! Sample pooled demonstrations from the Grass-Lover and Rock-Lover and save
//! them with their hidden labels.
//!
//!     cargo run --example generate_demos -- [out-dir]

use std::path::PathBuf;

use moci::demos::{labels_path, load_demos, save_dataset};
use moci::env::save_env;
use moci::{generate_demos, heterogeneous_experts, HorizonRule, Preset, Terrain};

fn main() -> moci::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "moci-out/demos-example".into()));
    std::fs::create_dir_all(&out).map_err(|e| moci::Error::InvalidConfig(e.to_string()))?;

    let env = Preset::Paper6x6.environment(HorizonRule::Short);
    let data = generate_demos(&env, &heterogeneous_experts(20), 42, 0.0)?;

    for (k, expert) in data.experts.iter().enumerate() {
        let mine: Vec<_> = data.trajectories.iter().zip(&data.labels).filter(|(_, &l)| l == k).collect();
        let on = |terrain: Terrain| {
            mine.iter()
                .map(|(t, _)| t.states().iter().filter(|&&s| env.terrain_at(s) == terrain).count())
                .sum::<usize>() as f64
                / (mine.len() * (env.horizon() + 1)) as f64
        };
        println!(
            "{:12} {:2} demos  grass {:.2}  rocks {:.2}",
            expert.name,
            mine.len(),
            on(Terrain::Grass),
            on(Terrain::Rocks)
        );
    }

    save_env(&env, out.join("env.toml"))?;
    let path = out.join("demos.toml");
    save_dataset(&env, &data, &path)?;
    assert_eq!(load_demos(&env, &path)?, data.trajectories);
    println!("wrote {} and {}", path.display(), labels_path(&path).display());
    Ok(())
}
