//! Constrained multi-objective gridworld.
//!
//! States are grid cells indexed row-major (`row * n + col`). Dynamics are
//! deterministic: moving off the grid is a self-transition, `Stay` never
//! moves, and the goal is absorbing. Every cell carries exactly one of four
//! terrain features; Water cells make up the ground-truth constraint set.

mod file;
mod trajectory;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};

pub use file::{load_env, parse_env, render_env, save_env, ENV_FORMAT_VERSION};
pub use trajectory::Trajectory;

/// Number of terrain features (`d`).
pub const NUM_FEATURES: usize = 4;

/// Terrain classes, in feature-vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Normal,
    Grass,
    Rocks,
    Water,
}

impl Terrain {
    pub const ALL: [Terrain; NUM_FEATURES] =
        [Terrain::Normal, Terrain::Grass, Terrain::Rocks, Terrain::Water];

    #[inline]
    pub fn feature_index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> char {
        match self {
            Terrain::Normal => 'N',
            Terrain::Grass => 'G',
            Terrain::Rocks => 'R',
            Terrain::Water => 'W',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'N' => Some(Terrain::Normal),
            'G' => Some(Terrain::Grass),
            'R' => Some(Terrain::Rocks),
            'W' => Some(Terrain::Water),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Terrain::Normal => "normal",
            Terrain::Grass => "grass",
            Terrain::Rocks => "rocks",
            Terrain::Water => "water",
        }
    }

    /// One-hot feature vector.
    pub fn features(self) -> [f64; NUM_FEATURES] {
        let mut phi = [0.0; NUM_FEATURES];
        phi[self.feature_index()] = 1.0;
        phi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

/// Number of actions (`|A|`).
pub const NUM_ACTIONS: usize = 5;

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] =
        [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Stay => (0, 0),
        }
    }

    pub fn code(self) -> char {
        match self {
            Action::Up => 'U',
            Action::Down => 'D',
            Action::Left => 'L',
            Action::Right => 'R',
            Action::Stay => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Action::ALL.into_iter().find(|a| a.code() == c)
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Deterministic tabular gridworld with hard Water constraints.
///
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    n: usize,
    terrain: Vec<Terrain>,
    start: usize,
    goal: usize,
    horizon: usize,
    gamma: f64,
    true_constraints: ConstraintSet,
    successors: Vec<[usize; NUM_ACTIONS]>,
}

/// Builds an `n x n` gridworld whose ground-truth constraints are its Water
/// cells.
///
/// Fails if `start` or `goal` is Water or out of bounds, if they coincide, or
/// if `horizon` is shorter than the shortest Water-avoiding path between them.
pub fn build_gridworld(
    n: usize,
    terrain: Vec<Terrain>,
    start: Cell,
    goal: Cell,
    horizon: usize,
) -> Result<Environment> {
    Environment::new(n, terrain, start, goal, horizon, 1.0)
}

impl Environment {
    pub fn new(
        n: usize,
        terrain: Vec<Terrain>,
        start: Cell,
        goal: Cell,
        horizon: usize,
        gamma: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidEnvironment("grid side must be at least 1".into()));
        }
        if terrain.len() != n * n {
            return Err(Error::InvalidEnvironment(format!(
                "terrain has {} cells, expected {}",
                terrain.len(),
                n * n
            )));
        }
        for (what, cell) in [("start", start), ("goal", goal)] {
            if cell.row >= n || cell.col >= n {
                return Err(Error::InvalidEnvironment(format!("{what} {cell} is outside the grid")));
            }
        }
        if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidEnvironment(format!("gamma {gamma} not in [0, 1]")));
        }
        let start_idx = start.row * n + start.col;
        let goal_idx = goal.row * n + goal.col;
        // A 1x1 grid has no distinct goal; allow start == goal only there.
        if start_idx == goal_idx && n > 1 {
            return Err(Error::InvalidEnvironment("start and goal coincide".into()));
        }
        for (what, idx) in [("start", start_idx), ("goal", goal_idx)] {
            if terrain[idx] == Terrain::Water {
                return Err(Error::InvalidEnvironment(format!("{what} is on a Water cell")));
            }
        }

        let true_constraints = ConstraintSet::from_states(
            n * n,
            terrain.iter().enumerate().filter(|(_, t)| **t == Terrain::Water).map(|(s, _)| s),
        );
        let successors = (0..n * n)
            .map(|s| {
                let mut row = [s; NUM_ACTIONS];
                if s != goal_idx {
                    for a in Action::ALL {
                        row[a.index()] = grid_move(n, s, a);
                    }
                }
                row
            })
            .collect();

        let env = Self {
            n,
            terrain,
            start: start_idx,
            goal: goal_idx,
            horizon,
            gamma,
            true_constraints,
            successors,
        };
        let shortest = env
            .shortest_feasible_path(&env.true_constraints)
            .ok_or(Error::GoalUnreachable)?;
        if horizon < shortest {
            return Err(Error::InfeasibleHorizon { horizon, shortest });
        }
        Ok(env)
    }

    /// Same layout with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.n, self.terrain.clone(), self.cell(self.start), self.cell(self.goal), horizon, self.gamma)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.n * self.n
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Discount factor. Stored for completeness; trajectory likelihoods are
    /// undiscounted finite-horizon sums.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn terrain(&self) -> &[Terrain] {
        &self.terrain
    }

    #[inline]
    pub fn terrain_at(&self, s: usize) -> Terrain {
        self.terrain[s]
    }

    pub fn true_constraints(&self) -> &ConstraintSet {
        &self.true_constraints
    }

    #[inline]
    pub fn features(&self, s: usize) -> [f64; NUM_FEATURES] {
        self.terrain[s].features()
    }

    pub fn cell(&self, s: usize) -> Cell {
        Cell::new(s / self.n, s % self.n)
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.n + cell.col
    }

    /// Deterministic transition.
    #[inline]
    pub fn step(&self, s: usize, a: Action) -> usize {
        self.successors[s][a.index()]
    }

    #[inline]
    pub fn successors(&self, s: usize) -> &[usize; NUM_ACTIONS] {
        &self.successors[s]
    }

    /// Breadth-first shortest path length from start to goal avoiding
    /// `blocked`, or `None` if the goal is cut off.
    pub fn shortest_feasible_path(&self, blocked: &ConstraintSet) -> Option<usize> {
        if blocked.contains(self.start) {
            return None;
        }
        let mut dist = vec![usize::MAX; self.num_states()];
        let mut queue = VecDeque::new();
        dist[self.start] = 0;
        queue.push_back(self.start);
        while let Some(s) = queue.pop_front() {
            if s == self.goal {
                return Some(dist[s]);
            }
            for &next in &self.successors[s] {
                if !blocked.contains(next) && dist[next] == usize::MAX {
                    dist[next] = dist[s] + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// States visited by no trajectory in `demos`, excluding start and goal.
    pub fn candidate_states(&self, demos: &[Trajectory]) -> Vec<usize> {
        let visited = visited_states(self.num_states(), demos);
        (0..self.num_states())
            .filter(|&s| !visited[s] && s != self.start && s != self.goal)
            .collect()
    }

    /// Checks every trajectory against the dynamics, start state and horizon.
    pub fn validate_trajectories(&self, demos: &[Trajectory]) -> Result<()> {
        demos.iter().enumerate().try_for_each(|(i, t)| t.validate(self, i))
    }
}

/// Free-standing form of [`Environment::candidate_states`].
pub fn candidate_states(env: &Environment, demos: &[Trajectory]) -> Vec<usize> {
    env.candidate_states(demos)
}

/// Free-standing form of [`Environment::step`].
pub fn step(env: &Environment, s: usize, a: Action) -> usize {
    env.step(s, a)
}

pub(crate) fn visited_states(num_states: usize, demos: &[Trajectory]) -> Vec<bool> {
    let mut visited = vec![false; num_states];
    for t in demos {
        for &s in t.states() {
            visited[s] = true;
        }
    }
    visited
}

fn grid_move(n: usize, s: usize, a: Action) -> usize {
    let (dr, dc) = a.delta();
    let (row, col) = ((s / n) as isize + dr, (s % n) as isize + dc);
    if row < 0 || col < 0 || row >= n as isize || col >= n as isize {
        s
    } else {
        row as usize * n + col as usize
    }
}
