//! Game parameters `(N^A, N^B, γ_A, γ_B, δ)` and their validation.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::{parse_decimal, Game};
use crate::model::Group;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("gamma out of (1/2,1): gamma_{group} = {value}")]
    GammaOutOfRange { group: Group, value: String },
    #[error("delta non-positive: delta = {0}")]
    DeltaNonPositive(String),
    #[error("group size < 2: n_{group} = {value}")]
    GroupTooSmall { group: Group, value: String },
    #[error("non-integer group size: n_{group} = {value}")]
    NonIntegerGroupSize { group: Group, value: String },
    #[error("invalid decimal literal {0:?}")]
    BadDecimal(String),
    #[error("invalid parameter file: {0}")]
    Json(String),
}

/// One real-valued coefficient. Decimal-string inputs keep their exact value.
#[derive(Debug, Clone)]
pub struct Coef {
    value: f64,
    decimal: Option<(String, BigRational)>,
}

impl Coef {
    pub fn float(value: f64) -> Self {
        Self { value, decimal: None }
    }

    pub fn decimal(text: &str) -> Result<Self, ParamsError> {
        let exact = parse_decimal(text).ok_or_else(|| ParamsError::BadDecimal(text.to_string()))?;
        let value = exact.to_f64().unwrap_or(f64::NAN);
        Ok(Self { value, decimal: Some((text.trim().to_string(), exact)) })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.decimal.as_ref().map(|(_, q)| q)
    }

    /// `1 + sign·self`, exact when `self` is.
    pub fn offset_one(&self, sign: i8) -> Self {
        let s = f64::from(sign);
        match &self.decimal {
            Some((_, q)) => {
                let r = BigRational::from_integer(1.into()) + BigRational::from_integer(sign.into()) * q;
                let value = r.to_f64().unwrap_or(f64::NAN);
                let text = format_rational(&r).unwrap_or_else(|| value.to_string());
                Self { value, decimal: Some((text, r)) }
            }
            None => Self::float(1.0 + s * self.value),
        }
    }

    /// Exact rational value of the stored binary float, or of the decimal.
    fn as_rational(&self) -> Option<BigRational> {
        match &self.decimal {
            Some((_, q)) => Some(q.clone()),
            None => BigRational::from_float(self.value),
        }
    }
}

impl PartialEq for Coef {
    fn eq(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits() && self.exact() == other.exact()
    }
}

impl From<f64> for Coef {
    fn from(value: f64) -> Self {
        Coef::float(value)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.decimal {
            Some((text, _)) => write!(f, "{text}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl Serialize for Coef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.decimal {
            Some((text, _)) => serializer.serialize_str(text),
            None => serializer.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Coef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Coef::float)
                .ok_or_else(|| D::Error::custom("number out of range")),
            serde_json::Value::String(s) => Coef::decimal(&s).map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("expected number or decimal string, got {other}"))),
        }
    }
}

/// A validated game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    n_a: u32,
    n_b: u32,
    gamma_a: Coef,
    gamma_b: Coef,
    delta: Coef,
    tolerance: f64,
    approx: Game<f64>,
    exact: Option<Game<BigRational>>,
}

fn check_size(group: Group, n: u32) -> Result<(), ParamsError> {
    if n < 2 {
        return Err(ParamsError::GroupTooSmall { group, value: n.to_string() });
    }
    Ok(())
}

fn check_gamma(group: Group, g: &Coef) -> Result<(), ParamsError> {
    let ok = match g.exact() {
        Some(q) => {
            let half = BigRational::new(1.into(), 2.into());
            *q > half && *q < BigRational::from_integer(1.into())
        }
        None => g.value > 0.5 && g.value < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(ParamsError::GammaOutOfRange { group, value: g.to_string() })
    }
}

fn check_delta(d: &Coef) -> Result<(), ParamsError> {
    let ok = match d.exact() {
        Some(q) => q.is_positive(),
        None => d.value > 0.0 && d.value.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(ParamsError::DeltaNonPositive(d.to_string()))
    }
}

fn integer_size(group: Group, raw: f64) -> Result<u32, ParamsError> {
    if !raw.is_finite() || raw.fract() != 0.0 {
        return Err(ParamsError::NonIntegerGroupSize { group, value: raw.to_string() });
    }
    if raw < 2.0 {
        return Err(ParamsError::GroupTooSmall { group, value: raw.to_string() });
    }
    if raw > u32::MAX as f64 {
        return Err(ParamsError::NonIntegerGroupSize { group, value: raw.to_string() });
    }
    Ok(raw as u32)
}

/// Validates five raw numbers `(N^A, N^B, γ_A, γ_B, δ)`.
pub fn validate_params(raw: [f64; 5]) -> Result<Params, ParamsError> {
    let n_a = integer_size(Group::A, raw[0])?;
    let n_b = integer_size(Group::B, raw[1])?;
    Params::new(n_a, n_b, raw[2], raw[3], raw[4])
}

impl Params {
    pub fn new(
        n_a: u32,
        n_b: u32,
        gamma_a: impl Into<Coef>,
        gamma_b: impl Into<Coef>,
        delta: impl Into<Coef>,
    ) -> Result<Self, ParamsError> {
        let (gamma_a, gamma_b, delta) = (gamma_a.into(), gamma_b.into(), delta.into());
        check_size(Group::A, n_a)?;
        check_size(Group::B, n_b)?;
        check_gamma(Group::A, &gamma_a)?;
        check_gamma(Group::B, &gamma_b)?;
        check_delta(&delta)?;
        let approx = Game {
            n_a: n_a as i64,
            n_b: n_b as i64,
            gamma_a: gamma_a.value,
            gamma_b: gamma_b.value,
            delta: delta.value,
        };
        let exact = match (gamma_a.exact(), gamma_b.exact(), delta.exact()) {
            (Some(ga), Some(gb), Some(d)) => Some(Game {
                n_a: n_a as i64,
                n_b: n_b as i64,
                gamma_a: ga.clone(),
                gamma_b: gb.clone(),
                delta: d.clone(),
            }),
            _ => None,
        };
        Ok(Self { n_a, n_b, gamma_a, gamma_b, delta, tolerance: DEFAULT_TOLERANCE, approx, exact })
    }

    /// Parses decimal strings exactly, e.g. `Params::decimal(17, 13, "0.84", "0.95", "0.45")`.
    pub fn decimal(n_a: u32, n_b: u32, gamma_a: &str, gamma_b: &str, delta: &str) -> Result<Self, ParamsError> {
        Self::new(n_a, n_b, Coef::decimal(gamma_a)?, Coef::decimal(gamma_b)?, Coef::decimal(delta)?)
    }

    /// The instance used throughout the worked example: `(17, 13, 0.84, 0.95, 0.45)`.
    pub fn example() -> Self {
        Self::new(17, 13, 0.84, 0.95, 0.45).expect("example parameters are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ParamsError> {
        let file: ParamsFile = serde_json::from_str(text).map_err(|e| ParamsError::Json(e.to_string()))?;
        file.into_params()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("params serialize")
    }

    pub fn to_file(&self) -> ParamsFile {
        ParamsFile {
            n_a: serde_json::Value::from(self.n_a),
            n_b: serde_json::Value::from(self.n_b),
            gamma_a: self.gamma_a.clone(),
            gamma_b: self.gamma_b.clone(),
            delta: self.delta.clone(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Same instance with every coefficient promoted to the exact rational
    /// value of its binary float, so comparisons run without tolerance.
    pub fn to_exact(&self) -> Self {
        let promote = |c: &Coef| -> Coef {
            match &c.decimal {
                Some(_) => c.clone(),
                None => {
                    let q = c.as_rational().expect("finite coefficient");
                    let text = format_rational(&q).unwrap_or_else(|| c.value.to_string());
                    Coef { value: c.value, decimal: Some((text, q)) }
                }
            }
        };
        Self::new(self.n_a, self.n_b, promote(&self.gamma_a), promote(&self.gamma_b), promote(&self.delta))
            .expect("already validated")
            .with_tolerance(self.tolerance)
    }

    /// Exchanges the roles of the two groups.
    pub fn swapped(&self) -> Self {
        Self::new(self.n_b, self.n_a, self.gamma_b.clone(), self.gamma_a.clone(), self.delta.clone())
            .expect("already validated")
            .with_tolerance(self.tolerance)
    }

    /// Replaces one group's size, keeping everything else.
    pub fn with_size(&self, group: Group, n: u32) -> Result<Self, ParamsError> {
        let (n_a, n_b) = match group {
            Group::A => (n, self.n_b),
            Group::B => (self.n_a, n),
        };
        Ok(Self::new(n_a, n_b, self.gamma_a.clone(), self.gamma_b.clone(), self.delta.clone())?
            .with_tolerance(self.tolerance))
    }

    /// Scales γ of `group` by `factor` (exactly, when the coefficient is exact).
    pub fn with_scaled_gamma(&self, group: Group, factor: &Coef) -> Result<Self, ParamsError> {
        let scaled = scale(self.gamma(group), factor);
        let (ga, gb) = match group {
            Group::A => (scaled, self.gamma_b.clone()),
            Group::B => (self.gamma_a.clone(), scaled),
        };
        Ok(Self::new(self.n_a, self.n_b, ga, gb, self.delta.clone())?.with_tolerance(self.tolerance))
    }

    pub fn with_scaled_delta(&self, factor: &Coef) -> Result<Self, ParamsError> {
        let d = scale(&self.delta, factor);
        Ok(Self::new(self.n_a, self.n_b, self.gamma_a.clone(), self.gamma_b.clone(), d)?
            .with_tolerance(self.tolerance))
    }

    pub fn n_a(&self) -> u32 {
        self.n_a
    }

    pub fn n_b(&self) -> u32 {
        self.n_b
    }

    pub fn size(&self, group: Group) -> u32 {
        match group {
            Group::A => self.n_a,
            Group::B => self.n_b,
        }
    }

    /// Total population `N`.
    pub fn n(&self) -> u32 {
        self.n_a + self.n_b
    }

    pub fn gamma(&self, group: Group) -> &Coef {
        match group {
            Group::A => &self.gamma_a,
            Group::B => &self.gamma_b,
        }
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a.value
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b.value
    }

    pub fn delta(&self) -> f64 {
        self.delta.value
    }

    pub fn delta_coef(&self) -> &Coef {
        &self.delta
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn approx(&self) -> &Game<f64> {
        &self.approx
    }

    pub fn exact_game(&self) -> Option<&Game<BigRational>> {
        self.exact.as_ref()
    }

    /// Sign of a quantity computed by the same formula in both backends:
    /// exactly when the inputs are exact, otherwise against the tolerance.
    pub fn sign_by(
        &self,
        approx: impl FnOnce(&Game<f64>) -> f64,
        exact: impl FnOnce(&Game<BigRational>) -> BigRational,
    ) -> Ordering {
        match &self.exact {
            Some(game) => exact(game).cmp(&BigRational::zero()),
            None => {
                let v = approx(&self.approx);
                if v > self.tolerance {
                    Ordering::Greater
                } else if v < -self.tolerance {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            }
        }
    }

    /// Smallest integer `n` with `x <= n`; values within tolerance of an
    /// integer snap to it in the float backend.
    pub fn ceil_by(
        &self,
        approx: impl FnOnce(&Game<f64>) -> f64,
        exact: impl FnOnce(&Game<BigRational>) -> BigRational,
    ) -> i64 {
        match &self.exact {
            Some(game) => {
                let q = exact(game);
                let (quot, rem) = q.numer().div_mod_floor(q.denom());
                let floor = quot.to_i64().expect("threshold fits in i64");
                if rem.is_zero() {
                    floor
                } else {
                    floor + 1
                }
            }
            None => {
                let x = approx(&self.approx);
                let nearest = x.round();
                if (x - nearest).abs() <= self.tolerance {
                    nearest as i64
                } else {
                    x.ceil() as i64
                }
            }
        }
    }
}

fn scale(c: &Coef, factor: &Coef) -> Coef {
    match (&c.decimal, &factor.decimal) {
        (Some((_, q)), Some((_, f))) => {
            let product = q * f;
            let value = product.to_f64().unwrap_or(f64::NAN);
            let text = format_rational(&product).unwrap_or_else(|| value.to_string());
            Coef { value, decimal: Some((text, product)) }
        }
        _ => Coef::float(c.value * factor.value),
    }
}

/// Finite decimal expansion of a rational whose denominator has only 2 and 5
/// as prime factors.
fn format_rational(q: &BigRational) -> Option<String> {
    use num_bigint::BigInt;
    let mut denom = q.denom().clone();
    let mut digits = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let ten = BigInt::from(10);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if denom != BigInt::from(1) {
        return None;
    }
    digits += twos.max(fives);
    let scaled = q * BigRational::from_integer(num_traits::pow(ten, digits));
    let n = scaled.to_integer();
    let negative = n.is_negative();
    let mut s = n.abs().to_string();
    if digits > 0 {
        if s.len() <= digits {
            s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
        }
        s.insert(s.len() - digits, '.');
    }
    if negative {
        s.insert(0, '-');
    }
    Some(s)
}

/// On-disk parameter file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub n_a: serde_json::Value,
    pub n_b: serde_json::Value,
    pub gamma_a: Coef,
    pub gamma_b: Coef,
    pub delta: Coef,
}

fn size_from_json(group: Group, v: &serde_json::Value) -> Result<u32, ParamsError> {
    match v {
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(u) if u >= 2 => u32::try_from(u)
                .map_err(|_| ParamsError::NonIntegerGroupSize { group, value: u.to_string() }),
            Some(u) => Err(ParamsError::GroupTooSmall { group, value: u.to_string() }),
            None => integer_size(group, n.as_f64().unwrap_or(f64::NAN)),
        },
        other => Err(ParamsError::NonIntegerGroupSize { group, value: other.to_string() }),
    }
}

impl ParamsFile {
    pub fn into_params(self) -> Result<Params, ParamsError> {
        let n_a = size_from_json(Group::A, &self.n_a)?;
        let n_b = size_from_json(Group::B, &self.n_b)?;
        Params::new(n_a, n_b, self.gamma_a, self.gamma_b, self.delta)
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Params {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        ParamsFile::deserialize(deserializer)?.into_params().map_err(D::Error::custom)
    }
}
