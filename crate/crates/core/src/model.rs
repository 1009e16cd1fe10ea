//! States, payoffs, the preference partition, thresholds and the potential.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::A, Group::B];

    pub fn other(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::A => "A",
            Group::B => "B",
        })
    }
}

/// `M` is the more desirable platform, `L` the less desirable one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Platform {
    M,
    L,
}

impl Platform {
    pub const BOTH: [Platform; 2] = [Platform::M, Platform::L];

    pub fn other(self) -> Platform {
        match self {
            Platform::M => Platform::L,
            Platform::L => Platform::M,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::M => "m",
            Platform::L => "l",
        })
    }
}

/// Summary state: how many of each group are on platform `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub n_am: u32,
    pub n_bm: u32,
}

impl State {
    pub const fn new(n_am: u32, n_bm: u32) -> Self {
        Self { n_am, n_bm }
    }

    pub fn count(self, group: Group) -> u32 {
        match group {
            Group::A => self.n_am,
            Group::B => self.n_bm,
        }
    }

    pub fn is_valid(self, params: &Params) -> bool {
        self.n_am <= params.n_a() && self.n_bm <= params.n_b()
    }

    /// Moves one agent of `group` off `from`. The caller guarantees occupancy.
    pub fn relocate(self, group: Group, from: Platform) -> State {
        let step = |n: u32| match from {
            Platform::M => n - 1,
            Platform::L => n + 1,
        };
        match group {
            Group::A => State::new(step(self.n_am), self.n_bm),
            Group::B => State::new(self.n_am, step(self.n_bm)),
        }
    }

    /// Taxicab (L1) distance.
    pub fn taxicab(self, other: State) -> u32 {
        self.n_am.abs_diff(other.n_am) + self.n_bm.abs_diff(other.n_bm)
    }

    pub fn transposed(self) -> State {
        State::new(self.n_bm, self.n_am)
    }

    /// Grid neighbours at taxicab distance one.
    pub fn neighbors(self, params: &Params) -> impl Iterator<Item = State> + '_ {
        let (a, b) = (self.n_am as i64, self.n_bm as i64);
        [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)]
            .into_iter()
            .filter(move |&(x, y)| x >= 0 && y >= 0 && x <= params.n_a() as i64 && y <= params.n_b() as i64)
            .map(|(x, y)| State::new(x as u32, y as u32))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n_am, self.n_bm)
    }
}

/// Dense indexing of the state grid, `a * (N^B + 1) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n_a: u32,
    pub n_b: u32,
}

impl Grid {
    pub fn of(params: &Params) -> Self {
        Self { n_a: params.n_a(), n_b: params.n_b() }
    }

    pub fn len(&self) -> usize {
        (self.n_a as usize + 1) * (self.n_b as usize + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, s: State) -> usize {
        s.n_am as usize * (self.n_b as usize + 1) + s.n_bm as usize
    }

    pub fn state(&self, index: usize) -> State {
        let stride = self.n_b as usize + 1;
        State::new((index / stride) as u32, (index % stride) as u32)
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// The four group-symmetric states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    /// `(0, 0)`: everyone on `ℓ`.
    Mm,
    /// `(0, N^B)`: A on `ℓ`, B on `m`.
    Ml,
    /// `(N^A, 0)`: A on `m`, B on `ℓ`.
    Lm,
    /// `(N^A, N^B)`: everyone on `m`.
    Ll,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::Mm, Corner::Ml, Corner::Lm, Corner::Ll];

    pub fn state(self, params: &Params) -> State {
        match self {
            Corner::Mm => State::new(0, 0),
            Corner::Ml => State::new(0, params.n_b()),
            Corner::Lm => State::new(params.n_a(), 0),
            Corner::Ll => State::new(params.n_a(), params.n_b()),
        }
    }

    pub fn of_state(state: State, params: &Params) -> Option<Corner> {
        Corner::ALL.into_iter().find(|c| c.state(params) == state)
    }

    pub fn code(self) -> &'static str {
        match self {
            Corner::Mm => "mm",
            Corner::Ml => "ml",
            Corner::Lm => "lm",
            Corner::Ll => "ll",
        }
    }

    pub fn parse(code: &str) -> Option<Corner> {
        Corner::ALL.into_iter().find(|c| c.code() == code)
    }

    /// The same outcome after exchanging the two groups' labels.
    pub fn swapped(self) -> Corner {
        match self {
            Corner::Ml => Corner::Lm,
            Corner::Lm => Corner::Ml,
            c => c,
        }
    }

    pub fn is_segregated(self) -> bool {
        matches!(self, Corner::Ml | Corner::Lm)
    }

    /// Where `group` sits at this corner.
    pub fn platform_of(self, group: Group) -> Platform {
        let on_m = match (self, group) {
            (Corner::Ll, _) => true,
            (Corner::Mm, _) => false,
            (Corner::Lm, Group::A) | (Corner::Ml, Group::B) => true,
            _ => false,
        };
        if on_m {
            Platform::M
        } else {
            Platform::L
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("state {state} outside the grid")]
    StateOutOfRange { state: State },
    #[error("empty-platform evaluation: no group {group} member on {platform} at {state}")]
    EmptyPlatform { group: Group, platform: Platform, state: State },
    #[error("no such agent: no group {group} member on {platform} at {state}")]
    NoSuchAgent { group: Group, platform: Platform, state: State },
}

fn check_state(state: State, params: &Params) -> Result<(), ModelError> {
    if state.is_valid(params) {
        Ok(())
    } else {
        Err(ModelError::StateOutOfRange { state })
    }
}

/// Payoff of a `group` member on `platform` at `state`, who is counted among
/// that platform's occupants.
pub fn utility(group: Group, platform: Platform, state: State, params: &Params) -> Result<f64, ModelError> {
    check_state(state, params)?;
    if params.approx().own_count(group, platform, state) < 1 {
        return Err(ModelError::EmptyPlatform { group, platform, state });
    }
    Ok(params.approx().utility(group, platform, state))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionValues {
    pub stay: f64,
    pub relocate: f64,
}

/// Stay value at `state` and relocation value at the post-move state for a
/// `group` member currently on `current`.
pub fn decision_utilities(
    group: Group,
    current: Platform,
    state: State,
    params: &Params,
) -> Result<DecisionValues, ModelError> {
    check_state(state, params)?;
    if params.approx().own_count(group, current, state) < 1 {
        return Err(ModelError::NoSuchAgent { group, platform: current, state });
    }
    let (stay, relocate) = params.approx().stay_and_move(group, current, state);
    Ok(DecisionValues { stay, relocate })
}

/// Sign of `relocate - stay`; exact for exact parameters. The caller
/// guarantees an agent of `group` is on `current`.
pub(crate) fn relocation_gain(group: Group, current: Platform, state: State, params: &Params) -> Ordering {
    params.sign_by(
        |g| {
            let (s, m) = g.stay_and_move(group, current, state);
            m - s
        },
        |g| {
            let (s, m) = g.stay_and_move(group, current, state);
            m - s
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    PrefersM,
    PrefersL,
    Indifferent,
}

impl Preference {
    pub fn strictly_prefers(self, platform: Platform) -> bool {
        matches!(
            (self, platform),
            (Preference::PrefersM, Platform::M) | (Preference::PrefersL, Platform::L)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub pref_a: Preference,
    pub pref_b: Preference,
}

impl PreferenceProfile {
    pub fn of(&self, group: Group) -> Preference {
        match group {
            Group::A => self.pref_a,
            Group::B => self.pref_b,
        }
    }
}

/// Same-state comparison of the two payoff lines for each group.
pub fn preference_profile(state: State, params: &Params) -> PreferenceProfile {
    let classify = |group: Group| match params.sign_by(|g| g.preference_gap(group, state), |g| g.preference_gap(group, state)) {
        Ordering::Greater => Preference::PrefersM,
        Ordering::Less => Preference::PrefersL,
        Ordering::Equal => Preference::Indifferent,
    };
    PreferenceProfile { pref_a: classify(Group::A), pref_b: classify(Group::B) }
}

/// Switching counts that bound the preference partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Group A members needed on `m`, with all of B on `m`, for A to prefer `m`.
    pub n_al_star: u32,
    /// Group B members needed on `ℓ`, with all of A on `ℓ`, for A to switch to `m`.
    pub n_bm_star: u32,
    /// Group B members needed on `m`, with all of A on `m`, for B to prefer `m`.
    pub n_bl_star: u32,
    /// Group A members needed on `ℓ`, with all of B on `ℓ`, for B to switch to `m`.
    pub n_am_star: u32,
}

pub fn thresholds(params: &Params) -> Thresholds {
    use crate::exact::{Game, Scalar};

    fn own_side<T: Scalar>(g: &Game<T>, group: Group) -> T {
        let gamma = g.gamma(group);
        let n = T::int(g.size(group));
        let n_other = T::int(g.size(group.other()));
        (T::one() - gamma.clone()) * n + (T::int(2) * gamma - T::one()) + n_other * g.delta.clone()
    }
    fn cross_side<T: Scalar>(g: &Game<T>, group: Group) -> T {
        let gamma = g.gamma(group);
        let n = g.size(group);
        let n_other = T::int(g.size(group.other()));
        T::int(n - 1) * (T::one() - gamma) / (T::int(2) * g.delta.clone()) + n_other / T::int(2)
    }
    let cap = |raw: i64, bound: u32| raw.clamp(0, bound as i64) as u32;

    Thresholds {
        n_al_star: cap(params.ceil_by(|g| own_side(g, Group::A), |g| own_side(g, Group::A)), params.n_a()),
        n_bm_star: cap(params.ceil_by(|g| cross_side(g, Group::A), |g| cross_side(g, Group::A)), params.n_b()),
        n_bl_star: cap(params.ceil_by(|g| own_side(g, Group::B), |g| own_side(g, Group::B)), params.n_b()),
        n_am_star: cap(params.ceil_by(|g| cross_side(g, Group::B), |g| cross_side(g, Group::B)), params.n_a()),
    }
}

/// Global potential: own-group pair benefits plus `δ` per cross-group pair
/// that is split across platforms. A single relocation changes it by exactly
/// the mover's payoff change.
pub fn potential(state: State, params: &Params) -> f64 {
    params.approx().potential(state)
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::from(0u8);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u8);
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn ln_binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Number of strategy profiles summarised by `state`.
pub fn multiplicity(state: State, params: &Params) -> BigUint {
    binomial(params.n_a(), state.n_am) * binomial(params.n_b(), state.n_bm)
}

pub fn ln_multiplicity(state: State, params: &Params) -> f64 {
    ln_binomial(params.n_a(), state.n_am) + ln_binomial(params.n_b(), state.n_bm)
}

/// Sum of every agent's payoff at `state`.
pub fn welfare(state: State, params: &Params) -> f64 {
    let g = params.approx();
    let mut total = 0.0;
    for group in Group::BOTH {
        for platform in Platform::BOTH {
            let count = g.own_count(group, platform, state);
            if count > 0 {
                total += count as f64 * g.utility(group, platform, state);
            }
        }
    }
    total
}

/// Payoff of each member of `group` at a group-symmetric state.
pub fn corner_payoff(corner: Corner, group: Group, params: &Params) -> f64 {
    params.approx().utility(group, corner.platform_of(group), corner.state(params))
}
