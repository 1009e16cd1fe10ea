//! Pure Nash equilibria: brute-force deviation checks over the whole grid and
//! the closed-form conditions for the four group-symmetric states.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{relocation_gain, Corner, Grid, Group, Platform, State};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NashKind {
    NotNash,
    WeakNash,
    StrictNash,
}

impl NashKind {
    pub fn is_nash(self) -> bool {
        self != NashKind::NotNash
    }
}

/// Agent classes present at `state`: (group, platform) pairs with at least one member.
pub fn occupied_classes(state: State, params: &Params) -> impl Iterator<Item = (Group, Platform)> + '_ {
    Group::BOTH
        .into_iter()
        .flat_map(|g| Platform::BOTH.into_iter().map(move |p| (g, p)))
        .filter(move |&(g, p)| params.approx().own_count(g, p, state) > 0)
}

/// Deviation check on every occupied agent class, comparing staying with the
/// payoff at the post-move state.
pub fn is_nash(state: State, params: &Params) -> NashKind {
    let mut all_strict = true;
    for (group, platform) in occupied_classes(state, params) {
        match relocation_gain(group, platform, state, params) {
            Ordering::Greater => return NashKind::NotNash,
            Ordering::Equal => all_strict = false,
            Ordering::Less => {}
        }
    }
    if all_strict {
        NashKind::StrictNash
    } else {
        NashKind::WeakNash
    }
}

/// Which group-symmetric states are equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerFlags {
    pub mm: bool,
    pub ml: bool,
    pub lm: bool,
    pub ll: bool,
}

impl CornerFlags {
    pub fn get(&self, corner: Corner) -> bool {
        match corner {
            Corner::Mm => self.mm,
            Corner::Ml => self.ml,
            Corner::Lm => self.lm,
            Corner::Ll => self.ll,
        }
    }
}

/// Closed-form equilibrium conditions: both segregated states always; the
/// all-on-`m` state iff `γ_K ≥ N^{K'}/(N^K − 1)·δ` for both groups; the
/// all-on-`ℓ` state iff `1 − γ_K ≥ N^{K'}/(N^K − 1)·δ` for both groups.
pub fn classify_theorem1(params: &Params) -> CornerFlags {
    let holds = |group: Group, on_m: bool| {
        let ord = params.sign_by(
            |g| g.integration_margin(group, on_m),
            |g| g.integration_margin(group, on_m),
        );
        ord != Ordering::Less
    };
    CornerFlags {
        mm: holds(Group::A, false) && holds(Group::B, false),
        ml: true,
        lm: true,
        ll: holds(Group::A, true) && holds(Group::B, true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashState {
    pub state: State,
    pub kind: NashKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub nash_states: Vec<NashState>,
    pub group_symmetric: CornerFlags,
}

impl EquilibriumReport {
    pub fn contains(&self, state: State) -> bool {
        self.nash_states.iter().any(|n| n.state == state)
    }

    pub fn kind_of(&self, state: State) -> NashKind {
        self.nash_states
            .iter()
            .find(|n| n.state == state)
            .map_or(NashKind::NotNash, |n| n.kind)
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        self.nash_states.iter().map(|n| n.state)
    }
}

/// Exhaustive scan of the grid.
pub fn enumerate_nash(params: &Params) -> EquilibriumReport {
    let nash_states = Grid::of(params)
        .states()
        .filter_map(|state| {
            let kind = is_nash(state, params);
            kind.is_nash().then_some(NashState { state, kind })
        })
        .collect();
    EquilibriumReport { nash_states, group_symmetric: classify_theorem1(params) }
}
