//! Multivariate polynomials with [`PiScalar`] coefficients.
//!
//! Variables are [`Atom`]s: the distance `rho`, the width `h`, and symbols
//! for mean curvature integrals, volumes and quermassintegrals tagged with
//! the dimension of the space they are measured in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::exact::PiScalar;

/// Largest exponent a single atom may carry in a monomial.
pub const MAX_EXPONENT: u32 = 64;

/// A formal variable.
///
/// The derived ordering (variant rank, then indices) is the canonical
/// monomial order; `Width` and `Rho` come last so they print at the tail of
/// each monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `V_r(K'_r)`: volume of the projection inside its `r`-plane.
    VolProj(u32),
    /// `M^{(r)}_i(∂K'_r)`: mean curvature integral of the projection inside its `r`-plane.
    MciProj(u32, u32),
    /// `W^{(r)}_i(K'_r)`.
    QuermassProj(u32, u32),
    /// `M^{(n)}_i(∂K)` of the full body.
    MciBody(u32, u32),
    /// `M^{(n)}_i(∂K'_r)` of the projection regarded as a flattened body of `n`-space.
    MciFlat(u32, u32),
    /// `W^{(n)}_i(K)`.
    Quermass(u32, u32),
    Width,
    Rho,
}

impl Atom {
    /// Index bounds: `i ≤ dim-1` for mean curvature integrals, `i ≤ dim` for quermassintegrals.
    pub fn validate(&self) -> Result<(), SymbolicError> {
        let ok = match *self {
            Atom::VolProj(r) => r >= 1,
            Atom::MciProj(d, i) | Atom::MciBody(d, i) | Atom::MciFlat(d, i) => d >= 1 && i < d,
            Atom::QuermassProj(d, i) | Atom::Quermass(d, i) => d >= 1 && i <= d,
            Atom::Width | Atom::Rho => true,
        };
        if ok {
            Ok(())
        } else {
            Err(SymbolicError::InvalidAtom(self.to_string()))
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::VolProj(r) => write!(f, "V'_{r}"),
            Atom::MciProj(r, i) => write!(f, "M'({r},{i})"),
            Atom::QuermassProj(r, i) => write!(f, "W'({r},{i})"),
            Atom::MciBody(n, i) => write!(f, "M({n},{i})"),
            Atom::MciFlat(n, i) => write!(f, "Mf({n},{i})"),
            Atom::Quermass(n, i) => write!(f, "W({n},{i})"),
            Atom::Width => f.write_str("h"),
            Atom::Rho => f.write_str("rho"),
        }
    }
}

impl FromStr for Atom {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SymbolicError::Parse(format!("unknown atom {s:?}"));
        let pair = |body: &str| -> Result<(u32, u32), SymbolicError> {
            let inner = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')).ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        };
        let atom = match s {
            "h" => Atom::Width,
            "rho" => Atom::Rho,
            _ => {
                if let Some(r) = s.strip_prefix("V'_") {
                    Atom::VolProj(r.parse().map_err(|_| bad())?)
                } else if let Some(rest) = s.strip_prefix("M'") {
                    let (a, b) = pair(rest)?;
                    Atom::MciProj(a, b)
                } else if let Some(rest) = s.strip_prefix("W'") {
                    let (a, b) = pair(rest)?;
                    Atom::QuermassProj(a, b)
                } else if let Some(rest) = s.strip_prefix("Mf") {
                    let (a, b) = pair(rest)?;
                    Atom::MciFlat(a, b)
                } else if let Some(rest) = s.strip_prefix('M') {
                    let (a, b) = pair(rest)?;
                    Atom::MciBody(a, b)
                } else if let Some(rest) = s.strip_prefix('W') {
                    let (a, b) = pair(rest)?;
                    Atom::Quermass(a, b)
                } else {
                    return Err(bad());
                }
            }
        };
        atom.validate()?;
        Ok(atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("unbound atom {0}")]
    UnboundAtom(Atom),
    #[error("cyclic binding: replacement for {0} mentions bound atom {1}")]
    CyclicBinding(Atom, Atom),
    #[error("exponent of {0} exceeds {MAX_EXPONENT}")]
    ExponentOverflow(Atom),
    #[error("invalid atom {0}")]
    InvalidAtom(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Sorted product of atom powers; the empty monomial is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(atom: Atom) -> Self {
        Self(vec![(atom, 1)])
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn degree_of(&self, atom: Atom) -> u32 {
        self.0.iter().find(|(a, _)| *a == atom).map_or(0, |(_, e)| *e)
    }

    fn try_mul(&self, other: &Self) -> Result<Self, SymbolicError> {
        let mut merged: BTreeMap<Atom, u32> = self.0.iter().copied().collect();
        for (atom, exp) in &other.0 {
            let slot = merged.entry(*atom).or_insert(0);
            *slot += exp;
            if *slot > MAX_EXPONENT {
                return Err(SymbolicError::ExponentOverflow(*atom));
            }
        }
        Ok(Self(merged.into_iter().collect()))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (atom, exp) in &self.0 {
            if *exp == 1 {
                write!(f, "*{atom}")?;
            } else {
                write!(f, "*{atom}^{exp}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial `Σ c_m · m` over monomials `m` with nonzero [`PiScalar`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FormulaPoly {
    terms: BTreeMap<Monomial, PiScalar>,
}

impl FormulaPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: PiScalar) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn atom(atom: Atom) -> Self {
        debug_assert!(atom.validate().is_ok(), "invalid atom {atom}");
        Self::term(PiScalar::one(), Monomial::atom(atom))
    }

    pub fn rho() -> Self {
        Self::atom(Atom::Rho)
    }

    pub fn width() -> Self {
        Self::atom(Atom::Width)
    }

    pub fn term(c: PiScalar, monomial: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(monomial, c);
        }
        Self { terms }
    }

    /// Builds a normalized polynomial from an arbitrary list of terms.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (PiScalar, Monomial)>,
    {
        let mut out = Self::zero();
        for (c, m) in terms {
            out.add_term(m, &c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &PiScalar)> {
        self.terms.iter()
    }

    /// The coefficient when the polynomial has no atoms at all.
    pub fn as_constant(&self) -> Option<PiScalar> {
        match self.terms.len() {
            0 => Some(PiScalar::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| *a))
            .collect()
    }

    pub fn scale(&self, c: &PiScalar) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SymbolicError> {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.try_mul(mb)?, &(ca * cb));
            }
        }
        Ok(out)
    }

    pub fn try_pow(&self, exp: u32) -> Result<Self, SymbolicError> {
        let mut acc = Self::constant(PiScalar::one());
        for _ in 0..exp {
            acc = acc.try_mul(self)?;
        }
        Ok(acc)
    }

    fn add_term(&mut self, m: Monomial, c: &PiScalar) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// Simultaneous substitution of atoms by polynomials.
    ///
    /// Identity bindings are ignored. A replacement may not mention any atom
    /// that is itself being replaced.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, FormulaPoly>) -> Result<Self, SymbolicError> {
        let active: BTreeMap<Atom, &FormulaPoly> = bindings
            .iter()
            .filter(|(atom, poly)| **poly != Self::atom(**atom))
            .map(|(a, p)| (*a, p))
            .collect();
        for (atom, poly) in &active {
            if let Some(bad) = poly.atoms().into_iter().find(|a| active.contains_key(a)) {
                return Err(SymbolicError::CyclicBinding(*atom, bad));
            }
        }
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut product = Self::constant(c.clone());
            let mut kept = Monomial::one();
            for (atom, exp) in &m.0 {
                match active.get(atom) {
                    Some(rep) => product = product.try_mul(&rep.try_pow(*exp)?)?,
                    None => kept = kept.try_mul(&Monomial(vec![(*atom, *exp)]))?,
                }
            }
            for (pm, pc) in product.terms {
                out.add_term(pm.try_mul(&kept)?, &pc);
            }
        }
        Ok(out)
    }

    /// Numeric value with every atom bound; π enters only in the last step.
    pub fn eval(&self, bindings: &BTreeMap<Atom, f64>) -> Result<f64, SymbolicError> {
        let mut by_power: BTreeMap<u32, f64> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut value = 1.0;
            for (atom, exp) in &m.0 {
                let x = bindings.get(atom).ok_or(SymbolicError::UnboundAtom(*atom))?;
                value *= x.powi(*exp as i32);
            }
            for (k, q) in c.terms() {
                *by_power.entry(k).or_insert(0.0) += q.to_f64().unwrap_or(f64::NAN) * value;
            }
        }
        Ok(by_power
            .into_iter()
            .map(|(k, s)| s * std::f64::consts::PI.powi(k as i32))
            .sum())
    }

    /// Exact value when every atom is bound to an exact scalar.
    pub fn eval_exact(&self, bindings: &BTreeMap<Atom, PiScalar>) -> Result<PiScalar, SymbolicError> {
        let mut acc = PiScalar::zero();
        for (m, c) in &self.terms {
            let mut value = c.clone();
            for (atom, exp) in &m.0 {
                let x = bindings.get(atom).ok_or(SymbolicError::UnboundAtom(*atom))?;
                for _ in 0..*exp {
                    value = &value * x;
                }
            }
            acc += &value;
        }
        Ok(acc)
    }
}

impl From<PiScalar> for FormulaPoly {
    fn from(c: PiScalar) -> Self {
        Self::constant(c)
    }
}

impl From<Atom> for FormulaPoly {
    fn from(a: Atom) -> Self {
        Self::atom(a)
    }
}

impl<'a> Add<&'a FormulaPoly> for &'a FormulaPoly {
    type Output = FormulaPoly;
    fn add(self, rhs: &FormulaPoly) -> FormulaPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Add for FormulaPoly {
    type Output = FormulaPoly;
    fn add(self, rhs: FormulaPoly) -> FormulaPoly {
        &self + &rhs
    }
}

impl Neg for &FormulaPoly {
    type Output = FormulaPoly;
    fn neg(self) -> FormulaPoly {
        FormulaPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for FormulaPoly {
    type Output = FormulaPoly;
    fn neg(self) -> FormulaPoly {
        -&self
    }
}

impl<'a> Sub<&'a FormulaPoly> for &'a FormulaPoly {
    type Output = FormulaPoly;
    fn sub(self, rhs: &FormulaPoly) -> FormulaPoly {
        self + &(-rhs)
    }
}

impl Sub for FormulaPoly {
    type Output = FormulaPoly;
    fn sub(self, rhs: FormulaPoly) -> FormulaPoly {
        &self - &rhs
    }
}

/// Panics when an exponent exceeds [`MAX_EXPONENT`]; use [`FormulaPoly::try_mul`] to recover.
impl<'a> Mul<&'a FormulaPoly> for &'a FormulaPoly {
    type Output = FormulaPoly;
    fn mul(self, rhs: &FormulaPoly) -> FormulaPoly {
        self.try_mul(rhs).expect("exponent overflow in polynomial product")
    }
}

impl Mul for FormulaPoly {
    type Output = FormulaPoly;
    fn mul(self, rhs: FormulaPoly) -> FormulaPoly {
        &self * &rhs
    }
}

/// Canonical form: `(coef)*atom*atom^e + …` in ascending monomial order.
impl fmt::Display for FormulaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c}){m}")?;
        }
        Ok(())
    }
}

impl FromStr for FormulaPoly {
    type Err = SymbolicError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let input = input.trim();
        if input == "0" {
            return Ok(Self::zero());
        }
        let err = |why: &str| SymbolicError::Parse(format!("{why} in {input:?}"));
        let mut out = Self::zero();
        let mut rest = input;
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(|| err("expected '('"))?;
            let close = body.find(')').ok_or_else(|| err("unclosed coefficient"))?;
            let coef: PiScalar = body[..close]
                .parse()
                .map_err(|e: crate::exact::ExactError| SymbolicError::Parse(e.to_string()))?;
            let tail = &body[close + 1..];
            let (atoms, next) = match tail.find(" + (") {
                Some(pos) => (&tail[..pos], &tail[pos + 3..]),
                None => (tail, ""),
            };
            let mut monomial = Monomial::one();
            if !atoms.is_empty() {
                let atoms = atoms.strip_prefix('*').ok_or_else(|| err("expected '*'"))?;
                for factor in atoms.split('*') {
                    let (name, exp) = match factor.rsplit_once('^') {
                        Some((n, e)) => (n, e.parse::<u32>().map_err(|_| err("bad exponent"))?),
                        None => (factor, 1),
                    };
                    if exp == 0 || exp > MAX_EXPONENT {
                        return Err(err("exponent out of range"));
                    }
                    monomial = monomial.try_mul(&Monomial(vec![(name.parse()?, exp)]))?;
                }
            }
            out.add_term(monomial, &coef);
            rest = next;
        }
        Ok(out)
    }
}
