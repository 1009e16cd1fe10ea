//! Two-group, two-platform online segregation game.
//!
//! Agents from groups A and B each choose platform `m` (more desirable) or
//! `ℓ` (less desirable). The crate covers payoffs and the preference
//! partition ([`model`]), pure Nash equilibria ([`equilibria`]),
//! best-response dynamics with exact basins and tipping sets ([`dynamics`]),
//! logit-response dynamics and stochastic stability ([`stochastic`]), and
//! comparative statics ([`statics`]).

pub mod dynamics;
pub mod equilibria;
pub mod exact;
pub mod export;
pub mod model;
pub mod params;
pub mod sample;
pub mod statics;
pub mod stochastic;

pub use model::{Corner, Group, Platform, State};
pub use params::{validate_params, Coef, Params, ParamsError};
