//! Asynchronous best-response dynamics.
//!
//! Each period one of the `N` agents is drawn uniformly and revises. Under
//! [`Semantics::Exact`] the reviser compares staying with the payoff at the
//! post-move state; under [`Semantics::Figure`] it follows the same-state
//! preference partition. Indifferent revisers stay put.
//!
//! Basins are computed exactly on the transition graph; Monte Carlo is only
//! used to cross-check them.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{preference_profile, relocation_gain, Corner, Grid, Group, Platform, State};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Same-state comparison, as in the preference map.
    Figure,
    /// Post-move comparison, as in a unilateral deviation.
    Exact,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Figure => "figure",
            Semantics::Exact => "exact",
        })
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "figure" => Ok(Semantics::Figure),
            "exact" => Ok(Semantics::Exact),
            other => Err(format!("unknown semantics {other:?} (expected figure or exact)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("not absorbing: {0} is not a rest point of the {1} dynamics")]
    NotAbsorbing(State, Semantics),
    #[error("state {0} outside the grid")]
    StateOutOfRange(State),
}

/// A revising agent's class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mover {
    pub group: Group,
    pub from: Platform,
}

impl fmt::Display for Mover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group, self.from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub to: State,
    pub probability: f64,
    /// `None` for the aggregated self-loop.
    pub mover: Option<Mover>,
}

const CLASSES: [(Group, Platform); 4] = [
    (Group::A, Platform::M),
    (Group::A, Platform::L),
    (Group::B, Platform::M),
    (Group::B, Platform::L),
];

/// Whether a reviser of `group` on `from` relocates. Requires an occupant.
fn relocates(group: Group, from: Platform, state: State, params: &Params, semantics: Semantics) -> bool {
    match semantics {
        Semantics::Exact => relocation_gain(group, from, state, params) == Ordering::Greater,
        Semantics::Figure => preference_profile(state, params).of(group).strictly_prefers(from.other()),
    }
}

fn class_count(group: Group, from: Platform, state: State, params: &Params) -> u32 {
    params.approx().own_count(group, from, state) as u32
}

/// One-step transitions out of `state`: one entry per relocating class plus
/// the aggregated self-loop when it has mass.
pub fn successors(state: State, params: &Params, semantics: Semantics) -> Vec<Transition> {
    let n = params.n() as f64;
    let mut out = Vec::with_capacity(5);
    let mut stay = 0u32;
    for (group, from) in CLASSES {
        let count = class_count(group, from, state, params);
        if count == 0 {
            continue;
        }
        if relocates(group, from, state, params, semantics) {
            out.push(Transition {
                to: state.relocate(group, from),
                probability: count as f64 / n,
                mover: Some(Mover { group, from }),
            });
        } else {
            stay += count;
        }
    }
    if stay > 0 {
        out.push(Transition { to: state, probability: stay as f64 / n, mover: None });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: u64,
    pub state: State,
    /// The reviser drawn in this period (none at `t = 0`).
    pub reviser: Option<Mover>,
    pub moved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: Vec<Step>,
    pub absorbed_at: Option<(u64, State)>,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        self.steps.iter().map(|s| s.state)
    }

    pub fn last(&self) -> State {
        self.steps.last().expect("trajectory has a start").state
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed_at.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasinReport {
    pub equilibrium: State,
    pub semantics: Semantics,
    pub basin: Vec<State>,
    pub tipping: Vec<State>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Basin(State),
    Contested,
}

impl StateLabel {
    /// `ll`/`lm`/`ml`/`mm` for group-symmetric equilibria, `eq:a:b` for any
    /// other rest point, `contested` otherwise.
    pub fn code(&self, params: &Params) -> String {
        match self {
            StateLabel::Basin(s) => match Corner::of_state(*s, params) {
                Some(c) => c.code().to_string(),
                None => format!("eq:{}:{}", s.n_am, s.n_bm),
            },
            StateLabel::Contested => "contested".to_string(),
        }
    }
}

/// The best-response chain on the whole grid.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    semantics: Semantics,
    grid: Grid,
    n_a: u32,
    n_b: u32,
    edges: Vec<Vec<Transition>>,
    /// Per state, whether each class in `CLASSES` relocates when drawn.
    relocating: Vec<[bool; 4]>,
}

impl TransitionGraph {
    pub fn build(params: &Params, semantics: Semantics) -> Self {
        let grid = Grid::of(params);
        let mut edges = Vec::with_capacity(grid.len());
        let mut relocating = Vec::with_capacity(grid.len());
        for state in grid.states() {
            let succ = successors(state, params, semantics);
            let mut flags = [false; 4];
            for (k, (group, from)) in CLASSES.into_iter().enumerate() {
                flags[k] = succ.iter().any(|t| t.mover == Some(Mover { group, from }));
            }
            edges.push(succ);
            relocating.push(flags);
        }
        Self { semantics, grid, n_a: params.n_a(), n_b: params.n_b(), edges, relocating }
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn successors(&self, state: State) -> &[Transition] {
        &self.edges[self.grid.index(state)]
    }

    fn moves_from(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[index]
            .iter()
            .filter(|t| t.mover.is_some())
            .map(|t| self.grid.index(t.to))
    }

    pub fn is_absorbing(&self, state: State) -> bool {
        self.edges[self.grid.index(state)].iter().all(|t| t.mover.is_none())
    }

    pub fn absorbing_states(&self) -> Vec<State> {
        self.grid.states().filter(|&s| self.is_absorbing(s)).collect()
    }

    fn contains(&self, state: State) -> bool {
        state.n_am <= self.n_a && state.n_bm <= self.n_b
    }

    /// Monte Carlo realisation from `start`, deterministic in `seed`.
    pub fn simulate(&self, start: State, seed: u64, max_steps: u64) -> Result<Trajectory, DynamicsError> {
        if !self.contains(start) {
            return Err(DynamicsError::StateOutOfRange(start));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_a + self.n_b;
        let mut state = start;
        let mut steps = vec![Step { t: 0, state, reviser: None, moved: false }];
        let mut absorbed_at = None;
        for t in 0..=max_steps {
            if self.is_absorbing(state) {
                absorbed_at = Some((t, state));
                break;
            }
            if t == max_steps {
                break;
            }
            let draw = rng.gen_range(0..n);
            let class = if draw < state.n_am {
                0
            } else if draw < self.n_a {
                1
            } else if draw < self.n_a + state.n_bm {
                2
            } else {
                3
            };
            let (group, from) = CLASSES[class];
            let moved = self.relocating[self.grid.index(state)][class];
            if moved {
                state = state.relocate(group, from);
            }
            steps.push(Step { t: t + 1, state, reviser: Some(Mover { group, from }), moved });
        }
        Ok(Trajectory { seed, steps, absorbed_at })
    }

    /// Indices that can reach any index in `targets` (targets included).
    fn reverse_reachable(&self, targets: &[usize]) -> Vec<bool> {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.grid.len()];
        for i in 0..self.grid.len() {
            for j in self.moves_from(i) {
                preds[j].push(i);
            }
        }
        let mut seen = vec![false; self.grid.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &t in targets {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &preds[j] {
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen
    }

    /// States from which the chain is absorbed at `equilibrium` with
    /// probability one: those that cannot reach any state from which
    /// `equilibrium` is unreachable.
    fn basin_mask(&self, equilibrium: State) -> Vec<bool> {
        let target = self.grid.index(equilibrium);
        let reaches = self.reverse_reachable(&[target]);
        let bad: Vec<usize> = (0..self.grid.len()).filter(|&i| !reaches[i]).collect();
        let doomed = self.reverse_reachable(&bad);
        doomed.into_iter().map(|d| !d).collect()
    }

    pub fn basin(&self, equilibrium: State) -> Result<BasinReport, DynamicsError> {
        if !self.contains(equilibrium) {
            return Err(DynamicsError::StateOutOfRange(equilibrium));
        }
        if !self.is_absorbing(equilibrium) {
            return Err(DynamicsError::NotAbsorbing(equilibrium, self.semantics));
        }
        let mask = self.basin_mask(equilibrium);
        let basin: Vec<State> = self.grid.states().filter(|&s| mask[self.grid.index(s)]).collect();
        let tipping = tipping_set(&basin, self.n_a, self.n_b);
        Ok(BasinReport { equilibrium, semantics: self.semantics, basin, tipping })
    }

    pub fn classify_all(&self) -> Vec<(State, StateLabel)> {
        let mut labels = vec![StateLabel::Contested; self.grid.len()];
        for eq in self.absorbing_states() {
            for (i, inside) in self.basin_mask(eq).into_iter().enumerate() {
                if inside {
                    labels[i] = StateLabel::Basin(eq);
                }
            }
        }
        self.grid.states().zip(labels).collect()
    }
}

/// Basin members with a grid neighbour (taxicab distance one) outside the basin.
pub fn tipping_set(basin: &[State], n_a: u32, n_b: u32) -> Vec<State> {
    let inside: std::collections::HashSet<State> = basin.iter().copied().collect();
    basin
        .iter()
        .copied()
        .filter(|s| {
            let (a, b) = (s.n_am as i64, s.n_bm as i64);
            [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)].into_iter().any(|(x, y)| {
                x >= 0
                    && y >= 0
                    && x <= n_a as i64
                    && y <= n_b as i64
                    && !inside.contains(&State::new(x as u32, y as u32))
            })
        })
        .collect()
}

pub fn simulate_br(
    start: State,
    params: &Params,
    semantics: Semantics,
    seed: u64,
    max_steps: u64,
) -> Result<Trajectory, DynamicsError> {
    TransitionGraph::build(params, semantics).simulate(start, seed, max_steps)
}

pub fn absorbing_states(params: &Params, semantics: Semantics) -> Vec<State> {
    TransitionGraph::build(params, semantics).absorbing_states()
}

pub fn basin(equilibrium: State, params: &Params, semantics: Semantics) -> Result<BasinReport, DynamicsError> {
    TransitionGraph::build(params, semantics).basin(equilibrium)
}

pub fn classify_all_states(params: &Params, semantics: Semantics) -> Vec<(State, StateLabel)> {
    TransitionGraph::build(params, semantics).classify_all()
}
