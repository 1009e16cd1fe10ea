//! Numeric backends for the payoff formulas.
//!
//! Every formula in the model is written once, generically over [`Scalar`],
//! and evaluated either in `f64` or in exact rationals. Decisions that depend
//! on a sign (preferences, deviations, stability inequalities) go through
//! [`crate::Params::sign_by`], which picks the exact backend when the
//! parameters were supplied as decimal strings.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed};

use crate::model::{Group, Platform, State};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive {
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer is representable")
    }

    fn half() -> Self {
        Self::one() / Self::int(2)
    }
}

impl Scalar for f64 {}
impl Scalar for BigRational {}

/// A game instance viewed through one numeric backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Game<T> {
    pub n_a: i64,
    pub n_b: i64,
    pub gamma_a: T,
    pub gamma_b: T,
    pub delta: T,
}

fn pairs(n: i64) -> i64 {
    n * (n - 1) / 2
}

impl<T: Scalar> Game<T> {
    pub fn size(&self, group: Group) -> i64 {
        match group {
            Group::A => self.n_a,
            Group::B => self.n_b,
        }
    }

    pub fn gamma(&self, group: Group) -> T {
        match group {
            Group::A => self.gamma_a.clone(),
            Group::B => self.gamma_b.clone(),
        }
    }

    /// Own-group count of `group` on `platform`.
    pub fn own_count(&self, group: Group, platform: Platform, state: State) -> i64 {
        let on_m = state.count(group) as i64;
        match platform {
            Platform::M => on_m,
            Platform::L => self.size(group) - on_m,
        }
    }

    /// The payoff line for `group` on `platform`, with no occupancy check.
    pub fn utility(&self, group: Group, platform: Platform, state: State) -> T {
        let other = group.other();
        let own = self.own_count(group, platform, state);
        let foreign = self.own_count(other, platform, state);
        let benefit = match platform {
            Platform::M => self.gamma(group),
            Platform::L => T::one() - self.gamma(group),
        };
        T::int(own - 1) * benefit - T::int(foreign) * self.delta.clone()
    }

    /// Value of staying versus relocating for an agent of `group` currently on
    /// `current`; the relocation is evaluated at the post-move state.
    pub fn stay_and_move(&self, group: Group, current: Platform, state: State) -> (T, T) {
        let stay = self.utility(group, current, state);
        let moved = state.relocate(group, current);
        let mv = self.utility(group, current.other(), moved);
        (stay, mv)
    }

    /// Same-state payoff gap `U(m) - U(ℓ)` used by the preference partition.
    pub fn preference_gap(&self, group: Group, state: State) -> T {
        self.utility(group, Platform::M, state) - self.utility(group, Platform::L, state)
    }

    pub fn potential(&self, state: State) -> T {
        let a = state.n_am as i64;
        let b = state.n_bm as i64;
        let one = T::one();
        T::int(pairs(a)) * self.gamma_a.clone()
            + T::int(pairs(self.n_a - a)) * (one.clone() - self.gamma_a.clone())
            + T::int(pairs(b)) * self.gamma_b.clone()
            + T::int(pairs(self.n_b - b)) * (one - self.gamma_b.clone())
            + T::int(a * (self.n_b - b) + (self.n_a - a) * b) * self.delta.clone()
    }

    /// Slack in the condition for everyone sitting on one platform to be an
    /// equilibrium for `group`: `benefit − N^{K'}/(N^K − 1)·δ`, where the
    /// benefit is `γ_K` on `m` and `1 − γ_K` on `ℓ`.
    pub fn integration_margin(&self, group: Group, on_m: bool) -> T {
        let benefit = if on_m { self.gamma(group) } else { T::one() - self.gamma(group) };
        benefit - T::int(self.size(group.other())) / T::int(self.size(group) - 1) * self.delta.clone()
    }

    /// Threshold `γ^ρ*` above which `group`'s own-coordination gain outweighs
    /// the cross-group distaste at the integrated outcome.
    pub fn gamma_rho_star(&self, group: Group) -> T {
        let own = self.size(group);
        let other = self.size(group.other());
        T::int(other) / T::int(own - 1) * self.delta.clone() + T::half()
    }

    /// Coordination score `C(N, 2)·(2γ − 1)`.
    pub fn score(&self, group: Group) -> T {
        T::int(pairs(self.size(group))) * (T::int(2) * self.gamma(group) - T::one())
    }
}

/// Parses a decimal literal (`"0.84"`, `"-1.5e-3"`) into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let s = text.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(&all_digits, 10).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}
