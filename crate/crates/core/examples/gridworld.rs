//! Build a gridworld, inspect its dynamics and features, and round-trip it
//! through the environment file format.
//!
//!     cargo run --example gridworld

use moci::env::{parse_env, render_env};
use moci::{build_gridworld, Action, Cell, Terrain, Trajectory};

fn main() -> moci::Result<()> {
    use Terrain::*;
    #[rustfmt::skip]
    let terrain = vec![
        Normal, Grass, Normal,
        Normal, Water, Rocks,
        Normal, Normal, Normal,
    ];
    let env = build_gridworld(3, terrain, Cell::new(0, 0), Cell::new(2, 2), 4)?;
    println!("true constraints: {:?}", env.true_constraints().to_vec());
    println!("shortest dry path: {:?}", env.shortest_feasible_path(env.true_constraints()));

    // Moves off the edge stay put; the goal absorbs.
    println!("U from start -> {}", env.step(env.start(), Action::Up));
    println!("L from goal  -> {}", env.step(env.goal(), Action::Left));

    let t = Trajectory::from_actions(&env, &[Action::Right, Action::Right, Action::Down, Action::Down]);
    println!("states {:?}, feature counts {:?}", t.states(), t.feature_counts(&env));

    // Candidates for constraint search are the states no demonstration visits.
    println!("candidates: {:?}", env.candidate_states(std::slice::from_ref(&t)));

    let text = render_env(&env);
    print!("{text}");
    assert_eq!(parse_env(&text, "inline")?, env);

    // Too short a horizon is rejected up front.
    let err = env.with_horizon(3).unwrap_err();
    println!("horizon 3: {err}");
    Ok(())
}
