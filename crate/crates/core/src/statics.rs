//! Comparative statics: growing one group, and preference interventions.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{corner_payoff, welfare, Corner, Group};
use crate::params::{Coef, Params, ParamsError};
use crate::sample::random_params;
use crate::stochastic::{classify_stable, CornerPotentials};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticsError {
    #[error("k_max too small: need k_max >= 1, got {0}")]
    KMaxTooSmall(u32),
    #[error("invalid x: {0} (expected 0 <= x < 1)")]
    InvalidX(String),
    #[error("not segregated: stable states are {0:?}")]
    NotSegregated(Vec<Corner>),
    #[error("gamma cap exceeded: (1 + x)·gamma_{group} = {value} >= 1")]
    GammaCapExceeded { group: Group, value: String },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// The growing group's segregated state is stable throughout.
    Constant,
    /// Integration first, then the growing group's segregated state.
    IntegratedThenFlip,
    /// The shrinking side's segregated state flips straight to the growing side's.
    FlipDirect,
    /// The shrinking side's segregated state gives way to integration first.
    ViaIntegration,
}

/// Which condition for the other group's segregated state failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Broken {
    /// The growing group's score overtook the other's.
    Score,
    /// The growing group's γ rose above its integration threshold.
    Gamma,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub n_a: u32,
    pub n_b: u32,
    pub stable_states: Vec<Corner>,
    pub potentials: CornerPotentials,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub base: Params,
    pub group: Group,
    pub rows: Vec<SweepRow>,
    /// First `k` whose stable set differs from the base set.
    pub k_hat: Option<u32>,
    pub pattern: Pattern,
    pub first_broken: Option<Broken>,
    /// No change was seen although the base set is not the growing group's
    /// segregated state, so a change lies beyond `k_max`.
    pub transition_pending: bool,
}

impl SweepReport {
    pub fn stable_at(&self, k: u32) -> &[Corner] {
        &self.rows[k as usize].stable_states
    }
}

/// Segregated state in which `group` holds platform `m`.
pub fn segregated_for(group: Group) -> Corner {
    match group {
        Group::A => Corner::Lm,
        Group::B => Corner::Ml,
    }
}

/// Runs [`classify_stable`] for `N^group + k`, `k = 0..=k_max`.
pub fn sweep_group_size(params: &Params, group: Group, k_max: u32) -> Result<SweepReport, StaticsError> {
    if k_max < 1 {
        return Err(StaticsError::KMaxTooSmall(k_max));
    }
    let grows = segregated_for(group);
    let shrinks = grows.swapped();
    let n0 = params.size(group);
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let p = params.with_size(group, n0 + k)?;
        rows.push(SweepRow {
            k,
            n_a: p.n_a(),
            n_b: p.n_b(),
            stable_states: classify_stable(&p).stable_states,
            potentials: CornerPotentials::of(&p),
        });
    }
    let base_set = rows[0].stable_states.clone();
    let k_hat = rows.iter().find(|r| r.stable_states != base_set).map(|r| r.k);

    let (pattern, first_broken) = match k_hat {
        None => (Pattern::Constant, None),
        Some(k) => {
            let after = &rows[k as usize].stable_states;
            if base_set.contains(&shrinks) {
                let broken = broken_condition(params, group, n0 + k);
                let pattern = if after.contains(&Corner::Ll) && !after.contains(&grows) {
                    Pattern::ViaIntegration
                } else {
                    Pattern::FlipDirect
                };
                (pattern, Some(broken))
            } else if base_set.contains(&Corner::Ll) {
                (Pattern::IntegratedThenFlip, None)
            } else {
                (Pattern::Constant, None)
            }
        }
    };
    let transition_pending = k_hat.is_none() && base_set != [grows];
    Ok(SweepReport { base: params.clone(), group, rows, k_hat, pattern, first_broken, transition_pending })
}

/// Which of the two conditions keeping the shrinking side's segregated state
/// stable fails at `N^group = n`.
fn broken_condition(params: &Params, group: Group, n: u32) -> Broken {
    let p = params.with_size(group, n).expect("sizes only grow");
    let other = group.other();
    let score = p.sign_by(|g| g.score(group) - g.score(other), |g| g.score(group) - g.score(other)) == Ordering::Greater;
    let gamma = p.sign_by(
        |g| g.gamma(group) - g.gamma_rho_star(group),
        |g| g.gamma(group) - g.gamma_rho_star(group),
    ) == Ordering::Greater;
    match (score, gamma) {
        (true, true) => Broken::Both,
        (false, true) => Broken::Gamma,
        _ => Broken::Score,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaOutcome {
    /// The group sitting on `ℓ` whose γ is raised.
    pub group: Group,
    pub gamma: f64,
    pub stable_states: Vec<Corner>,
    pub implication_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub x: f64,
    pub base_stable: Vec<Corner>,
    pub delta: f64,
    pub delta_stable: Vec<Corner>,
    /// One entry per segregated stable state (two on a tie).
    pub gamma_outcomes: Vec<GammaOutcome>,
    /// Reducing δ reaches integration only if raising γ does too.
    pub implication_holds: bool,
}

impl PerturbReport {
    pub fn delta_integrates(&self) -> bool {
        self.delta_stable.contains(&Corner::Ll)
    }
}

/// Compares `δ ↦ (1 − x)δ` with `γ_K ↦ (1 + x)γ_K` for the group `K` on `ℓ`.
pub fn perturb_compare(params: &Params, x: impl Into<Coef>) -> Result<PerturbReport, StaticsError> {
    let x: Coef = x.into();
    if !(x.value() >= 0.0 && x.value() < 1.0) {
        return Err(StaticsError::InvalidX(x.to_string()));
    }
    let base_stable = classify_stable(params).stable_states;
    let on_l: Vec<Group> = base_stable
        .iter()
        .filter_map(|c| match c {
            Corner::Lm => Some(Group::B),
            Corner::Ml => Some(Group::A),
            _ => None,
        })
        .collect();
    if on_l.is_empty() {
        return Err(StaticsError::NotSegregated(base_stable));
    }

    let reduced = params.with_scaled_delta(&x.offset_one(-1))?;
    let delta_stable = classify_stable(&reduced).stable_states;
    let delta_integrates = delta_stable.contains(&Corner::Ll);

    let mut gamma_outcomes = Vec::with_capacity(on_l.len());
    for group in on_l {
        let raised = match params.with_scaled_gamma(group, &x.offset_one(1)) {
            Ok(p) => p,
            Err(ParamsError::GammaOutOfRange { value, .. }) => {
                return Err(StaticsError::GammaCapExceeded { group, value })
            }
            Err(e) => return Err(e.into()),
        };
        let stable_states = classify_stable(&raised).stable_states;
        let implication_holds = !delta_integrates || stable_states.contains(&Corner::Ll);
        gamma_outcomes.push(GammaOutcome { group, gamma: raised.gamma(group).value(), stable_states, implication_holds });
    }
    let implication_holds = gamma_outcomes.iter().all(|g| g.implication_holds);
    Ok(PerturbReport { x: x.value(), base_stable, delta: reduced.delta(), delta_stable, gamma_outcomes, implication_holds })
}

/// Searches random instances for one where raising γ integrates but reducing
/// δ by the same fraction does not.
pub fn search_reverse_witness<R: Rng + ?Sized>(rng: &mut R, max_n: u32, tries: usize) -> Option<(Params, f64, PerturbReport)> {
    for _ in 0..tries {
        let p = random_params(rng, max_n);
        let x = rng.gen_range(0.0..0.3);
        if let Ok(r) = perturb_compare(&p, x) {
            if !r.delta_integrates() && r.gamma_outcomes.iter().any(|g| g.stable_states.contains(&Corner::Ll)) {
                return Some((p, x, r));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerWelfare {
    pub corner: Corner,
    pub payoff_a: f64,
    pub payoff_b: f64,
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareAudit {
    pub corners: Vec<CornerWelfare>,
    pub welfare_maximizers: Vec<Corner>,
    pub stable_states: Vec<Corner>,
    pub stable_maximize_welfare: bool,
    pub stable_pareto_efficient: bool,
}

/// Welfare and Pareto comparison of the four group-symmetric states.
pub fn welfare_audit(params: &Params) -> WelfareAudit {
    let corners: Vec<CornerWelfare> = Corner::ALL
        .into_iter()
        .map(|corner| CornerWelfare {
            corner,
            payoff_a: corner_payoff(corner, Group::A, params),
            payoff_b: corner_payoff(corner, Group::B, params),
            welfare: welfare(corner.state(params), params),
        })
        .collect();
    let best = corners.iter().map(|c| c.welfare).fold(f64::NEG_INFINITY, f64::max);
    let tol = params.tolerance() * best.abs().max(1.0);
    let welfare_maximizers: Vec<Corner> = corners.iter().filter(|c| c.welfare >= best - tol).map(|c| c.corner).collect();
    let dominated = |c: &CornerWelfare| {
        corners.iter().any(|d| {
            d.payoff_a >= c.payoff_a - tol
                && d.payoff_b >= c.payoff_b - tol
                && (d.payoff_a > c.payoff_a + tol || d.payoff_b > c.payoff_b + tol)
        })
    };
    let stable_states = classify_stable(params).stable_states;
    let stable_maximize_welfare = stable_states.iter().all(|s| welfare_maximizers.contains(s));
    let stable_pareto_efficient = stable_states
        .iter()
        .all(|s| !dominated(corners.iter().find(|c| c.corner == *s).expect("every corner listed")));
    WelfareAudit { corners, welfare_maximizers, stable_states, stable_maximize_welfare, stable_pareto_efficient }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growing_the_majority_on_m_changes_nothing() {
        let r = sweep_group_size(&Params::example(), Group::A, 200).unwrap();
        assert_eq!(r.pattern, Pattern::Constant);
        assert!(r.rows.iter().all(|row| row.stable_states == [Corner::Lm]));
        assert!(!r.transition_pending);
        assert_eq!(r.rows[200].n_a, 217);
    }

    #[test]
    fn integration_gives_way_to_segregation() {
        let base = Params::new(10, 10, 0.91, 0.91, 0.05).unwrap();
        assert_eq!(classify_stable(&base).stable_states, vec![Corner::Ll]);
        let r = sweep_group_size(&base, Group::A, 200).unwrap();
        assert_eq!(r.pattern, Pattern::IntegratedThenFlip);
        let k = r.k_hat.unwrap();
        assert!(r.rows[..k as usize].iter().all(|row| row.stable_states == [Corner::Ll]));
        assert!(r.rows[k as usize..].iter().all(|row| row.stable_states == [Corner::Lm]));
    }

    #[test]
    fn minority_side_segregation_exits_through_integration() {
        let base = Params::new(6, 20, 0.85, 0.55, 0.1).unwrap();
        assert_eq!(classify_stable(&base).stable_states, vec![Corner::Ml]);
        let r = sweep_group_size(&base, Group::A, 200).unwrap();
        assert_eq!(r.k_hat, Some(1));
        assert_eq!(r.first_broken, Some(Broken::Gamma));
        assert_eq!(r.pattern, Pattern::ViaIntegration);
        assert_eq!(r.rows[1].stable_states, vec![Corner::Ll]);
        assert_eq!(r.rows[200].stable_states, vec![Corner::Lm]);
    }

    #[test]
    fn minority_side_segregation_can_flip_directly() {
        // High δ keeps integration out of reach while A's score catches up.
        let base = Params::new(5, 8, 0.7, 0.9, 1.0).unwrap();
        assert_eq!(classify_stable(&base).stable_states, vec![Corner::Ml]);
        let r = sweep_group_size(&base, Group::A, 50).unwrap();
        assert_eq!(r.k_hat, Some(7));
        assert_eq!(r.first_broken, Some(Broken::Score));
        assert_eq!(r.pattern, Pattern::FlipDirect);
    }

    #[test]
    fn knife_edge_size_ties_integration_and_segregation() {
        // γ^ρ*_B = (10 + k)·0.05/9 + 1/2 reaches 0.9 at k = 62.
        let base = Params::decimal(10, 10, "0.9", "0.9", "0.05").unwrap();
        let r = sweep_group_size(&base, Group::A, 80).unwrap();
        assert_eq!(r.k_hat, Some(62));
        assert_eq!(r.stable_at(62), [Corner::Lm, Corner::Ll]);
        assert_eq!(r.stable_at(63), [Corner::Lm]);
    }

    #[test]
    fn sweeping_b_mirrors_sweeping_a() {
        let base = Params::new(10, 10, 0.9, 0.9, 0.05).unwrap();
        let a = sweep_group_size(&base, Group::A, 60).unwrap();
        let b = sweep_group_size(&base.swapped(), Group::B, 60).unwrap();
        assert_eq!(a.k_hat, b.k_hat);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let mirrored: Vec<Corner> = rb.stable_states.iter().map(|c| c.swapped()).collect();
            assert_eq!(ra.stable_states, mirrored);
        }
    }

    #[test]
    fn pending_transition_is_flagged() {
        let base = Params::new(10, 10, 0.9, 0.9, 0.05).unwrap();
        let r = sweep_group_size(&base, Group::A, 1).unwrap();
        assert!(r.k_hat.is_none());
        assert!(r.transition_pending);
        assert!(matches!(sweep_group_size(&base, Group::A, 0), Err(StaticsError::KMaxTooSmall(0))));
    }

    #[test]
    fn null_perturbation() {
        let p = Params::example();
        let r = perturb_compare(&p, 0.0).unwrap();
        assert_eq!(r.base_stable, vec![Corner::Lm]);
        assert_eq!(r.delta_stable, r.base_stable);
        assert_eq!(r.gamma_outcomes[0].group, Group::B);
        assert_eq!(r.gamma_outcomes[0].stable_states, r.base_stable);
        assert!(r.implication_holds);
    }

    #[test]
    fn perturbation_guards() {
        let p = Params::example();
        // (1 + 0.06)·0.95 = 1.007
        assert!(matches!(perturb_compare(&p, 0.06), Err(StaticsError::GammaCapExceeded { group: Group::B, .. })));
        assert!(matches!(perturb_compare(&p, 1.0), Err(StaticsError::InvalidX(_))));
        assert!(matches!(perturb_compare(&p, -0.1), Err(StaticsError::InvalidX(_))));
        let integrated = Params::new(10, 10, 0.9, 0.9, 0.05).unwrap();
        assert!(matches!(perturb_compare(&integrated, 0.1), Err(StaticsError::NotSegregated(_))));
    }

    #[test]
    fn exact_perturbation_hits_the_knife_edge() {
        // γ^ρ*_B = 4/3·δ + 1/2; with δ = 0.2 and x = 0.25, δ* = 0.15 puts it at 0.7.
        let p = Params::decimal(4, 4, "0.9", "0.7", "0.2").unwrap();
        assert_eq!(classify_stable(&p).stable_states, vec![Corner::Lm]);
        let r = perturb_compare(&p, Coef::decimal("0.25").unwrap()).unwrap();
        assert_eq!(r.delta, 0.15);
        assert!(r.delta_stable.contains(&Corner::Ll));
        assert!(r.delta_stable.contains(&Corner::Lm));
    }

    #[test]
    fn delta_can_integrate_where_gamma_cannot() {
        // ml is stable and A sits on ℓ. Raising γ_A to 0.8125 only swaps which
        // segregated corner wins, since γ_B = 0.88 stays below γ^ρ*_B = 0.914;
        // cutting δ to 0.1725 clears both conditions.
        let p = Params::decimal(9, 6, "0.65", "0.88", "0.23").unwrap();
        let r = perturb_compare(&p, Coef::decimal("0.25").unwrap()).unwrap();
        assert_eq!(r.base_stable, vec![Corner::Ml]);
        assert_eq!(r.delta_stable, vec![Corner::Ll]);
        assert_eq!(r.gamma_outcomes[0].group, Group::A);
        assert_eq!(r.gamma_outcomes[0].stable_states, vec![Corner::Lm]);
        assert!(!r.implication_holds);
    }

    #[test]
    fn welfare_of_the_example() {
        let audit = welfare_audit(&Params::example());
        assert_eq!(audit.welfare_maximizers, vec![Corner::Lm]);
        let lm = audit.corners.iter().find(|c| c.corner == Corner::Lm).unwrap();
        assert!((lm.welfare - 236.28).abs() < 1e-9);
        assert!(audit.stable_maximize_welfare && audit.stable_pareto_efficient);
    }

    #[test]
    fn integration_threshold_monotonicity() {
        let d = 0.37;
        for n_a in 2..40i64 {
            for n_b in 2..40i64 {
                let t = |a: i64, b: i64| b as f64 / (a - 1) as f64 * d + 0.5;
                let p = Params::new(n_a as u32, n_b as u32, 0.7, 0.7, d).unwrap();
                assert!((p.approx().gamma_rho_star(Group::A) - t(n_a, n_b)).abs() < 1e-12);
                assert!(t(n_a + 1, n_b) < t(n_a, n_b));
                assert!(t(n_a, n_b + 1) > t(n_a, n_b));
            }
        }
    }
}
