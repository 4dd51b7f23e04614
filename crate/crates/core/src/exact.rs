//! Exact arithmetic for the coefficients of the mean curvature formulas.
//!
//! Every coefficient that occurs is a finite sum `Σ q_k π^k` with rational
//! `q_k`: binomials are rational and the unit-sphere areas `O_m` are single
//! rational multiples of a power of π. [`PiScalar`] is that ring with π kept
//! as a formal indeterminate, so equality is plain coefficient comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary precision rational, always in lowest terms with positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by {0}: divisor must be a single nonzero pi-monomial")]
    NonMonomialDivisor(String),
    #[error("cannot parse {input:?} as a pi-scalar: {reason}")]
    Parse { input: String, reason: String },
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Binomial coefficient `C(n, k)`, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: i64, k: i64) -> Result<Rational, ExactError> {
    if n < 0 {
        return Err(ExactError::Domain(format!("binomial({n}, {k}) requires n >= 0")));
    }
    Ok(Rational::from_integer(binomial_int(n, k)))
}

pub(crate) fn binomial_int(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for step in 0..k {
        acc = acc * BigInt::from(n - step) / BigInt::from(step + 1);
    }
    acc
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// A finite sum `Σ q_k π^k` with rational coefficients.
///
/// No zero coefficient is ever stored, so two values are equal exactly when
/// their term maps are identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PiScalar {
    terms: BTreeMap<u32, Rational>,
}

impl PiScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::monomial(q, 0)
    }

    pub fn from_int(value: i64) -> Self {
        Self::from_rational(int(value))
    }

    /// `q · π^k`.
    pub fn monomial(q: Rational, k: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(k, q);
        }
        Self { terms }
    }

    pub fn pi() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(One::is_one)
    }

    /// Iterates `(k, q_k)` in ascending π-exponent.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.terms.iter().map(|(k, q)| (*k, q))
    }

    pub fn coefficient(&self, k: u32) -> Rational {
        self.terms.get(&k).cloned().unwrap_or_else(Rational::zero)
    }

    /// Returns `(q, k)` when the value is a single nonzero term `q·π^k`.
    pub fn as_monomial(&self) -> Option<(&Rational, u32)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(k, q)| (q, *k))
        } else {
            None
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * q)).collect(),
        }
    }

    /// Division by a single π-monomial; anything else is rejected.
    pub fn checked_div(&self, divisor: &Self) -> Result<Self, ExactError> {
        let (q, k) = divisor
            .as_monomial()
            .ok_or_else(|| ExactError::NonMonomialDivisor(divisor.to_string()))?;
        let mut terms = BTreeMap::new();
        for (exp, c) in &self.terms {
            if *exp < k {
                return Err(ExactError::Domain(format!(
                    "{self} / {divisor} leaves a negative power of pi"
                )));
            }
            terms.insert(exp - k, c / q);
        }
        Ok(Self { terms })
    }

    /// Floating value; π is substituted here and nowhere earlier.
    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, q)| q.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(*k as i32))
            .sum()
    }

    fn insert_add(&mut self, k: u32, q: &Rational) {
        let slot = self.terms.entry(k).or_insert_with(Rational::zero);
        *slot += q;
        if slot.is_zero() {
            self.terms.remove(&k);
        }
    }
}

impl From<Rational> for PiScalar {
    fn from(q: Rational) -> Self {
        Self::from_rational(q)
    }
}

impl From<i64> for PiScalar {
    fn from(v: i64) -> Self {
        Self::from_int(v)
    }
}

impl<'a> Add<&'a PiScalar> for &'a PiScalar {
    type Output = PiScalar;
    fn add(self, rhs: &PiScalar) -> PiScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for PiScalar {
    type Output = PiScalar;
    fn add(mut self, rhs: PiScalar) -> PiScalar {
        self += &rhs;
        self
    }
}

impl AddAssign<&PiScalar> for PiScalar {
    fn add_assign(&mut self, rhs: &PiScalar) {
        for (k, q) in &rhs.terms {
            self.insert_add(*k, q);
        }
    }
}

impl Neg for &PiScalar {
    type Output = PiScalar;
    fn neg(self) -> PiScalar {
        PiScalar {
            terms: self.terms.iter().map(|(k, q)| (*k, -q)).collect(),
        }
    }
}

impl Neg for PiScalar {
    type Output = PiScalar;
    fn neg(self) -> PiScalar {
        -&self
    }
}

impl<'a> Sub<&'a PiScalar> for &'a PiScalar {
    type Output = PiScalar;
    fn sub(self, rhs: &PiScalar) -> PiScalar {
        self + &(-rhs)
    }
}

impl Sub for PiScalar {
    type Output = PiScalar;
    fn sub(self, rhs: PiScalar) -> PiScalar {
        &self - &rhs
    }
}

impl<'a> Mul<&'a PiScalar> for &'a PiScalar {
    type Output = PiScalar;
    fn mul(self, rhs: &PiScalar) -> PiScalar {
        let mut out = PiScalar::zero();
        for (ka, qa) in &self.terms {
            for (kb, qb) in &rhs.terms {
                out.insert_add(ka + kb, &(qa * qb));
            }
        }
        out
    }
}

impl Mul for PiScalar {
    type Output = PiScalar;
    fn mul(self, rhs: PiScalar) -> PiScalar {
        &self * &rhs
    }
}

fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Canonical form `q0 + q1*pi + q2*pi^2`, ascending exponents, unit
/// coefficients on π-powers elided (`pi`, `-pi^2`).
impl fmt::Display for PiScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, q) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let power = match k {
                0 => None,
                1 => Some("pi".to_string()),
                _ => Some(format!("pi^{k}")),
            };
            match power {
                None => f.write_str(&fmt_rational(q))?,
                Some(p) if q.is_one() => f.write_str(&p)?,
                Some(p) if (-q).is_one() => write!(f, "-{p}")?,
                Some(p) => write!(f, "{}*{p}", fmt_rational(q))?,
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.parse::<BigInt>().ok()?, d.parse::<BigInt>().ok()?),
        None => (s.parse::<BigInt>().ok()?, BigInt::one()),
    };
    if den.is_zero() || den.is_negative() {
        return None;
    }
    Some(Rational::new(num, den))
}

impl FromStr for PiScalar {
    type Err = ExactError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ExactError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = input.trim();
        if trimmed == "0" {
            return Ok(Self::zero());
        }
        let mut out = Self::zero();
        for term in trimmed.split(" + ") {
            let term = term.trim();
            let (coef, power) = match term.find("pi") {
                None => (term, None),
                Some(pos) => {
                    let coef = term[..pos].trim_end_matches('*');
                    let exp = match &term[pos + 2..] {
                        "" => 1,
                        rest => rest
                            .strip_prefix('^')
                            .and_then(|e| e.parse::<u32>().ok())
                            .ok_or_else(|| err("bad pi exponent"))?,
                    };
                    (coef, Some(exp))
                }
            };
            let q = match (coef, power) {
                ("", Some(_)) => Rational::one(),
                ("-", Some(_)) => -Rational::one(),
                (c, _) => parse_rational(c).ok_or_else(|| err("bad rational coefficient"))?,
            };
            let k = power.unwrap_or(0);
            if q.is_zero() || out.terms.contains_key(&k) {
                return Err(err("zero or repeated term"));
            }
            if out.terms.last_key_value().is_some_and(|(last, _)| *last >= k) {
                return Err(err("exponents must ascend"));
            }
            out.terms.insert(k, q);
        }
        Ok(out)
    }
}

/// `O_m`, the area of the unit `m`-sphere, as `q·π^{⌈m/2⌉}`.
///
/// Uses `O_m = 2π^{(m+1)/2} / Γ((m+1)/2)` with Γ at integers or half-integers
/// expanded exactly.
pub fn sphere_area(m: i64) -> Result<PiScalar, ExactError> {
    if m < 0 {
        return Err(ExactError::Domain(format!("sphere_area({m}) requires m >= 0")));
    }
    let m = m as u32;
    Ok(if m % 2 == 1 {
        // (m+1)/2 = k is an integer: O_m = 2 π^k / (k-1)!
        let k = (m + 1) / 2;
        PiScalar::monomial(Rational::new(BigInt::from(2), factorial(k - 1)), k)
    } else {
        // (m+1)/2 = k + 1/2, Γ(k+1/2) = (2k)! √π / (4^k k!)
        let k = m / 2;
        let num = BigInt::from(2) * BigInt::from(4).pow(k) * factorial(k);
        PiScalar::monomial(Rational::new(num, factorial(2 * k)), k)
    })
}

/// `O_lo · O_{lo+1} ⋯ O_hi`; the empty product (`hi < lo`) is 1.
pub fn sphere_area_product(lo: i64, hi: i64) -> Result<PiScalar, ExactError> {
    let mut acc = PiScalar::one();
    for m in lo..=hi {
        acc = &acc * &sphere_area(m)?;
    }
    Ok(acc)
}

/// Measure of the Grassmannian of `r`-planes through the origin of `n`-space,
/// `O_{n-1}⋯O_{n-r} / (O_{r-1}⋯O_0)`.
pub fn grassmann_measure(n: i64, r: i64) -> Result<PiScalar, ExactError> {
    if n < 2 || r < 1 || r > n - 1 {
        return Err(ExactError::Domain(format!(
            "grassmann_measure({n}, {r}) requires n >= 2 and 1 <= r <= n-1"
        )));
    }
    sphere_area_product(n - r, n - 1)?.checked_div(&sphere_area_product(0, r - 1)?)
}

/// Volume of the unit `m`-ball, `κ_m = O_{m-1}/m`, with `κ_0 = 1`.
pub fn ball_volume(m: i64) -> Result<PiScalar, ExactError> {
    if m < 0 {
        return Err(ExactError::Domain(format!("ball_volume({m}) requires m >= 0")));
    }
    if m == 0 {
        return Ok(PiScalar::one());
    }
    Ok(sphere_area(m - 1)?.scale(&rat(1, m)))
}

/// Exact rational value of a finite `f64` (every finite double is dyadic).
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pi_pow(q: Rational, k: u32) -> PiScalar {
        PiScalar::monomial(q, k)
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(4, 2).unwrap(), int(6));
        assert_eq!(binomial(7, 0).unwrap(), int(1));
        assert_eq!(binomial(3, 5).unwrap(), int(0));
        assert_eq!(binomial(3, -1).unwrap(), int(0));
        assert!(matches!(binomial(-1, 0), Err(ExactError::Domain(_))));
    }

    #[test]
    fn binomial_matches_pascal_rows() {
        let mut row = vec![BigInt::one()];
        for n in 1..=40i64 {
            let mut next = vec![BigInt::one(); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial_int(n, k), row[k as usize]);
            }
        }
    }

    #[test]
    fn sphere_area_examples() {
        assert_eq!(sphere_area(0).unwrap(), PiScalar::from_int(2));
        assert_eq!(sphere_area(1).unwrap(), pi_pow(int(2), 1));
        assert_eq!(sphere_area(2).unwrap(), pi_pow(int(4), 1));
        assert_eq!(sphere_area(3).unwrap(), pi_pow(int(2), 2));
        assert_eq!(sphere_area(4).unwrap(), pi_pow(rat(8, 3), 2));
        assert_eq!(sphere_area(5).unwrap(), pi_pow(int(1), 3));
        assert!(sphere_area(-1).is_err());
    }

    #[test]
    fn sphere_area_recurrence_and_shape() {
        for m in 0..=30i64 {
            let o = sphere_area(m).unwrap();
            let (_, k) = o.as_monomial().expect("single pi term");
            assert_eq!(k as i64, (m + 1) / 2, "exponent is ceil(m/2)");
            if m >= 2 {
                let rhs = (&pi_pow(int(2), 1) * &sphere_area(m - 2).unwrap()).scale(&rat(1, m - 1));
                assert_eq!(o, rhs, "O_m = 2 pi O_(m-2)/(m-1) at m={m}");
            }
        }
    }

    #[test]
    fn sphere_area_matches_gamma_numerically() {
        fn gamma_half_integer(x2: u32) -> f64 {
            // Γ(x2/2) by downward recurrence to Γ(1) or Γ(1/2).
            let mut x = x2 as f64 / 2.0;
            let mut acc = 1.0;
            while x > 1.0 {
                x -= 1.0;
                acc *= x;
            }
            if (x - 0.5).abs() < 1e-12 {
                acc * std::f64::consts::PI.sqrt()
            } else {
                acc
            }
        }
        for m in 0..=12u32 {
            let expected = 2.0 * std::f64::consts::PI.powf((m as f64 + 1.0) / 2.0) / gamma_half_integer(m + 1);
            let got = sphere_area(m as i64).unwrap().to_f64();
            assert!((got - expected).abs() <= 1e-13 * expected, "m={m}: {got} vs {expected}");
        }
    }

    #[test]
    fn grassmann_measure_examples() {
        assert_eq!(grassmann_measure(3, 1).unwrap(), pi_pow(int(2), 1));
        assert_eq!(grassmann_measure(3, 2).unwrap(), pi_pow(int(2), 1));
        assert_eq!(grassmann_measure(2, 1).unwrap(), PiScalar::pi());
        assert!(grassmann_measure(3, 3).is_err());
        assert!(grassmann_measure(3, 0).is_err());
        assert!(grassmann_measure(1, 1).is_err());
    }

    #[test]
    fn grassmann_measure_symmetry() {
        for n in 2..=10 {
            for r in 1..n {
                assert_eq!(grassmann_measure(n, r).unwrap(), grassmann_measure(n, n - r).unwrap());
            }
        }
    }

    #[test]
    fn division_only_by_monomials() {
        let a = &PiScalar::from_int(3) + &PiScalar::pi();
        let b = pi_pow(int(2), 1);
        assert_eq!(
            (&a * &b).checked_div(&b).unwrap(),
            a
        );
        assert!(matches!(b.checked_div(&a), Err(ExactError::NonMonomialDivisor(_))));
        assert!(b.checked_div(&PiScalar::zero()).is_err());
        assert!(PiScalar::one().checked_div(&b).is_err());
    }

    #[test]
    fn canonical_strings() {
        let x = &(&PiScalar::from_int(-8) + &pi_pow(int(4), 1)) + &pi_pow(rat(-1, 2), 3);
        assert_eq!(x.to_string(), "-8 + 4*pi + -1/2*pi^3");
        assert_eq!(PiScalar::pi().to_string(), "pi");
        assert_eq!((-PiScalar::pi()).to_string(), "-pi");
        assert_eq!(PiScalar::zero().to_string(), "0");
        assert_eq!(pi_pow(int(1), 2).to_string(), "pi^2");
        assert!("pi + 2".parse::<PiScalar>().is_err());
        assert!("2 + 0*pi".parse::<PiScalar>().is_err());
        assert!("2/0".parse::<PiScalar>().is_err());
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(0).unwrap(), PiScalar::one());
        assert_eq!(ball_volume(1).unwrap(), PiScalar::from_int(2));
        assert_eq!(ball_volume(2).unwrap(), PiScalar::pi());
        assert_eq!(ball_volume(3).unwrap(), pi_pow(rat(4, 3), 1));
    }

    fn arb_scalar() -> impl Strategy<Value = PiScalar> {
        proptest::collection::vec((0u32..4, -20i64..20, 1i64..12), 0..4).prop_map(|terms| {
            terms
                .into_iter()
                .fold(PiScalar::zero(), |acc, (k, p, q)| &acc + &pi_pow(rat(p, q), k))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ring_laws(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn canonical_string_round_trips(a in arb_scalar()) {
            let text = a.to_string();
            prop_assert_eq!(text.parse::<PiScalar>().unwrap(), a);
        }
    }
}
