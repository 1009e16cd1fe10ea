//! Logit-response dynamics and stochastic stability.
//!
//! The chain lives on the count grid: a uniformly drawn agent picks `m` with
//! probability `1 / (1 + exp(-β (U_m - U_ℓ)))`, where both values are those of
//! the profile the agent would end up in. Its invariant law has the closed form
//! `μ(ω) ∝ C(N^A, a) C(N^B, b) exp(β ρ(ω))`, which [`gibbs`] evaluates and the
//! tests check against the solved chain.
//!
//! Stationary solves use GTH state reduction on the banded kernel in log
//! space, so high β does not underflow transition probabilities to zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{decision_utilities, ln_multiplicity, potential, Corner, Grid, Group, ModelError, Platform, State};
use crate::params::Params;

/// Largest grid solved directly; bigger grids fall back to power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 20_000;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("negative beta: {0}")]
    NegativeBeta(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("chain reducible: state {0} cannot reach lower-indexed states")]
    Reducible(State),
    #[error("stationary residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} ({method})")]
    Residual { residual: f64, method: Method },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearSolve,
    PowerIteration,
    Gibbs,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::LinearSolve => "linear_solve",
            Method::PowerIteration => "power_iteration",
            Method::Gibbs => "gibbs",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

fn check_beta(beta: f64) -> Result<(), StochasticError> {
    if beta >= 0.0 {
        Ok(())
    } else {
        Err(StochasticError::NegativeBeta(beta))
    }
}

fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

/// `β (U_m − U_ℓ)` for a `group` member on `current`.
fn logit_argument(group: Group, current: Platform, state: State, params: &Params, beta: f64) -> Result<f64, StochasticError> {
    let v = decision_utilities(group, current, state, params)?;
    let gap = match current {
        Platform::M => v.stay - v.relocate,
        Platform::L => v.relocate - v.stay,
    };
    Ok(if beta == 0.0 { 0.0 } else { beta * gap })
}

/// Probability that a revising `group` member currently on `current` picks `m`.
pub fn logit_prob(group: Group, current: Platform, state: State, params: &Params, beta: f64) -> Result<f64, StochasticError> {
    check_beta(beta)?;
    Ok(sigmoid(logit_argument(group, current, state, params, beta)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub to: usize,
    pub prob: f64,
    pub ln_prob: f64,
}

/// The lumped logit kernel, stored by rows of at most five entries.
#[derive(Debug, Clone)]
pub struct LogitChain {
    params: Params,
    beta: f64,
    grid: Grid,
    rows: Vec<Vec<Entry>>,
}

impl LogitChain {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn row(&self, state: State) -> &[Entry] {
        &self.rows[self.grid.index(state)]
    }

    pub fn transition(&self, from: State, to: State) -> f64 {
        let j = self.grid.index(to);
        self.row(from).iter().find(|e| e.to == j).map_or(0.0, |e| e.prob)
    }

    /// `μ P` for a row vector `μ`.
    pub fn step(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for e in row {
                out[e.to] += mu[i] * e.prob;
            }
        }
        out
    }

    /// `‖μ P − μ‖₁`.
    pub fn residual(&self, mu: &[f64]) -> f64 {
        self.step(mu).iter().zip(mu).map(|(a, b)| (a - b).abs()).sum()
    }
}

pub fn build_chain(params: &Params, beta: f64) -> Result<LogitChain, StochasticError> {
    check_beta(beta)?;
    let grid = Grid::of(params);
    let ln_n = (params.n() as f64).ln();
    let mut rows = Vec::with_capacity(grid.len());
    for state in grid.states() {
        let mut row = Vec::with_capacity(5);
        let mut ln_stay = f64::NEG_INFINITY;
        for group in Group::BOTH {
            for current in Platform::BOTH {
                let count = params.approx().own_count(group, current, state);
                if count == 0 {
                    continue;
                }
                let x = logit_argument(group, current, state, params, beta)?;
                let (ln_m, ln_l) = (ln_sigmoid(x), ln_sigmoid(-x));
                let (ln_keep, ln_switch) = match current {
                    Platform::M => (ln_m, ln_l),
                    Platform::L => (ln_l, ln_m),
                };
                let ln_w = (count as f64).ln() - ln_n;
                ln_stay = log_add(ln_stay, ln_w + ln_keep);
                let ln_prob = ln_w + ln_switch;
                row.push(Entry { to: grid.index(state.relocate(group, current)), prob: ln_prob.exp(), ln_prob });
            }
        }
        row.push(Entry { to: grid.index(state), prob: ln_stay.exp(), ln_prob: ln_stay });
        rows.push(row);
    }
    Ok(LogitChain { params: params.clone(), beta, grid, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n_a: u32,
    pub n_b: u32,
    pub beta: f64,
    pub method: Method,
    /// Indexed like [`Grid`].
    pub probabilities: Vec<f64>,
}

impl Distribution {
    fn from_logs(grid: Grid, beta: f64, method: Method, logs: &[f64]) -> Self {
        let total = log_sum(logs.iter().copied());
        let probabilities = logs.iter().map(|l| (l - total).exp()).collect();
        Self { n_a: grid.n_a, n_b: grid.n_b, beta, method, probabilities }
    }

    pub fn grid(&self) -> Grid {
        Grid { n_a: self.n_a, n_b: self.n_b }
    }

    pub fn probability(&self, state: State) -> f64 {
        self.probabilities[self.grid().index(state)]
    }

    pub fn argmax(&self) -> State {
        let (i, _) = self
            .probabilities
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        self.grid().state(i)
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        assert_eq!(self.grid(), other.grid(), "distributions on different grids");
        0.5 * self.probabilities.iter().zip(&other.probabilities).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, f64)> + '_ {
        let grid = self.grid();
        self.probabilities.iter().enumerate().map(move |(i, &p)| (grid.state(i), p))
    }
}

/// GTH reduction on the band `|i − j| ≤ N^B + 1`, carried out on log probabilities.
fn gth_log(chain: &LogitChain) -> Result<Vec<f64>, StochasticError> {
    let n = chain.grid.len();
    let bw = chain.grid.n_b as usize + 1;
    let width = 2 * bw + 1;
    let at = |i: usize, j: usize| i * width + j + bw - i;
    let mut lp = vec![f64::NEG_INFINITY; n * width];
    for (i, row) in chain.rows.iter().enumerate() {
        for e in row.iter().filter(|e| e.to != i) {
            lp[at(i, e.to)] = e.ln_prob;
        }
    }
    for k in (1..n).rev() {
        let lo = k.saturating_sub(bw);
        let s = log_sum((lo..k).map(|j| lp[at(k, j)]));
        if s == f64::NEG_INFINITY {
            return Err(StochasticError::Reducible(chain.grid.state(k)));
        }
        for i in lo..k {
            lp[at(i, k)] -= s;
        }
        for i in lo..k {
            let lik = lp[at(i, k)];
            if lik == f64::NEG_INFINITY {
                continue;
            }
            for j in lo..k {
                if j != i {
                    let idx = at(i, j);
                    lp[idx] = log_add(lp[idx], lik + lp[at(k, j)]);
                }
            }
        }
    }
    let mut ln_pi = vec![f64::NEG_INFINITY; n];
    ln_pi[0] = 0.0;
    for k in 1..n {
        let lo = k.saturating_sub(bw);
        ln_pi[k] = log_sum((lo..k).map(|i| ln_pi[i] + lp[at(i, k)]));
    }
    Ok(ln_pi)
}

/// Exact invariant law: direct solve up to [`DIRECT_SOLVE_LIMIT`] states, power
/// iteration beyond. Fails if the residual exceeds [`RESIDUAL_TOLERANCE`].
pub fn stationary(chain: &LogitChain) -> Result<Distribution, StochasticError> {
    let dist = if chain.grid.len() <= DIRECT_SOLVE_LIMIT {
        let logs = gth_log(chain)?;
        Distribution::from_logs(chain.grid, chain.beta, Method::LinearSolve, &logs)
    } else {
        power_iteration(chain, 1e-13, 10_000_000)
    };
    let residual = chain.residual(&dist.probabilities);
    if residual > RESIDUAL_TOLERANCE {
        return Err(StochasticError::Residual { residual, method: dist.method });
    }
    Ok(dist)
}

/// Iterates `μ ← μ P` from the uniform law until successive iterates differ by
/// less than `tol` in ℓ¹, or `max_iter` is reached.
pub fn power_iteration(chain: &LogitChain, tol: f64, max_iter: usize) -> Distribution {
    let n = chain.grid.len();
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let next = chain.step(&mu);
        let diff: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if diff < tol {
            break;
        }
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|p| *p /= total);
    Distribution { n_a: chain.grid.n_a, n_b: chain.grid.n_b, beta: chain.beta, method: Method::PowerIteration, probabilities: mu }
}

/// Closed form `μ(ω) ∝ multiplicity(ω) · exp(β ρ(ω))`.
pub fn gibbs(params: &Params, beta: f64) -> Result<Distribution, StochasticError> {
    check_beta(beta)?;
    let grid = Grid::of(params);
    let logs: Vec<f64> = grid
        .states()
        .map(|s| {
            let tilt = if beta == 0.0 { 0.0 } else { beta * potential(s, params) };
            ln_multiplicity(s, params) + tilt
        })
        .collect();
    Ok(Distribution::from_logs(grid, beta, Method::Gibbs, &logs))
}

/// Occupation frequencies of one simulated path after `burn_in` steps.
pub fn monte_carlo(chain: &LogitChain, start: State, seed: u64, steps: u64, burn_in: u64) -> Distribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; chain.grid.len()];
    let mut i = chain.grid.index(start);
    for t in 0..burn_in + steps {
        let u: f64 = rng.gen();
        let row = &chain.rows[i];
        let mut acc = 0.0;
        let mut next = row.last().expect("row has a self-loop").to;
        for e in row {
            acc += e.prob;
            if u < acc {
                next = e.to;
                break;
            }
        }
        i = next;
        if t >= burn_in {
            counts[i] += 1;
        }
    }
    let total = steps.max(1) as f64;
    Distribution {
        n_a: chain.grid.n_a,
        n_b: chain.grid.n_b,
        beta: chain.beta,
        method: Method::MonteCarlo,
        probabilities: counts.into_iter().map(|c| c as f64 / total).collect(),
    }
}

/// Potential at the four group-symmetric states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerPotentials {
    pub mm: f64,
    pub ml: f64,
    pub lm: f64,
    pub ll: f64,
}

impl CornerPotentials {
    pub fn of(params: &Params) -> Self {
        let rho = |c: Corner| potential(c.state(params), params);
        Self { mm: rho(Corner::Mm), ml: rho(Corner::Ml), lm: rho(Corner::Lm), ll: rho(Corner::Ll) }
    }

    pub fn get(&self, corner: Corner) -> f64 {
        match corner {
            Corner::Mm => self.mm,
            Corner::Ml => self.ml,
            Corner::Lm => self.lm,
            Corner::Ll => self.ll,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Selected by the closed-form inequality systems.
    pub stable_states: Vec<Corner>,
    /// Maximisers of the corner potentials, computed independently.
    pub potential_argmax: Vec<Corner>,
    pub gamma_rho_star_a: f64,
    pub gamma_rho_star_b: f64,
    pub score_a: f64,
    pub score_b: f64,
    pub potentials: CornerPotentials,
}

impl StabilityReport {
    pub fn is_stable(&self, corner: Corner) -> bool {
        self.stable_states.contains(&corner)
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.stable_states.iter().map(|c| c.code()).collect()
    }
}

/// Which group-symmetric states are stochastically stable.
///
/// `lm`: `f_A ≥ f_B` and `γ_B ≤ γ^ρ*_B`. `ml`: `f_B ≥ f_A` and `γ_A ≤ γ^ρ*_A`.
/// `ll`: `γ_A ≥ γ^ρ*_A` and `γ_B ≥ γ^ρ*_B`. `mm`: never.
pub fn classify_stable(params: &Params) -> StabilityReport {
    use std::cmp::Ordering::{Greater, Less};

    let score_gap = params.sign_by(|g| g.score(Group::A) - g.score(Group::B), |g| g.score(Group::A) - g.score(Group::B));
    let above = |group: Group| {
        params.sign_by(
            |g| g.gamma(group) - g.gamma_rho_star(group),
            |g| g.gamma(group) - g.gamma_rho_star(group),
        )
    };
    let (above_a, above_b) = (above(Group::A), above(Group::B));

    let mut stable_states = Vec::new();
    if score_gap != Greater && above_a != Greater {
        stable_states.push(Corner::Ml);
    }
    if score_gap != Less && above_b != Greater {
        stable_states.push(Corner::Lm);
    }
    if above_a != Less && above_b != Less {
        stable_states.push(Corner::Ll);
    }

    let potential_argmax = Corner::ALL
        .into_iter()
        .filter(|&c| {
            Corner::ALL.into_iter().all(|d| {
                let (sc, sd) = (c.state(params), d.state(params));
                params.sign_by(|g| g.potential(sc) - g.potential(sd), |g| g.potential(sc) - g.potential(sd)) != Less
            })
        })
        .collect();

    let g = params.approx();
    StabilityReport {
        stable_states,
        potential_argmax,
        gamma_rho_star_a: g.gamma_rho_star(Group::A),
        gamma_rho_star_b: g.gamma_rho_star(Group::B),
        score_a: g.score(Group::A),
        score_b: g.score(Group::B),
        potentials: CornerPotentials::of(params),
    }
}
