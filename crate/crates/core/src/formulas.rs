//! Builders for every identity of the mean curvature calculus used here.
//!
//! Each builder returns a [`FormulaPoly`] whose atoms say which space each
//! integral lives in. The theorem evaluators are literal transcriptions; whether
//! they agree with geometry is decided in [`crate::verify`], not here.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::exact::{binomial, sphere_area, sphere_area_product, ExactError, PiScalar, Rational};
use crate::symbolic::{Atom, FormulaPoly, Monomial, SymbolicError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("index out of range: {0}")]
    Domain(String),
    #[error("unknown formula id {0:?}")]
    UnknownId(String),
    #[error("formula {id} needs parameter --{param}")]
    MissingParam { id: &'static str, param: &'static str },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

type Result<T> = std::result::Result<T, FormulaError>;

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(FormulaError::Domain(what()))
    }
}

fn check_nrl(n: i64, r: i64, l: i64) -> Result<()> {
    require(n >= 2 && (1..n).contains(&r) && (0..n).contains(&l), || {
        format!("(n={n}, r={r}, l={l}) needs n >= 2, 1 <= r <= n-1, 0 <= l <= n-1")
    })
}

fn check_nr(n: i64, r: i64) -> Result<()> {
    require(n >= 2 && (1..n).contains(&r), || {
        format!("(n={n}, r={r}) needs n >= 2, 1 <= r <= n-1")
    })
}

fn c(n: i64, k: i64) -> Rational {
    binomial(n.max(0), k).expect("n clamped to >= 0")
}

fn sign(i: i64) -> Rational {
    if i % 2 == 0 {
        Rational::from_integer(1.into())
    } else {
        Rational::from_integer((-1).into())
    }
}

fn o(m: i64) -> PiScalar {
    sphere_area(m).expect("sphere index is non-negative in every builder")
}

/// `q · O-factor · atom^1 · rho^j · h^k` as a one-term polynomial.
fn term(q: Rational, factor: &PiScalar, atom: Option<Atom>, j: i64, k: i64) -> FormulaPoly {
    let mut poly = FormulaPoly::term(factor.scale(&q), Monomial::one());
    if let Some(a) = atom {
        poly = &poly * &FormulaPoly::atom(a);
    }
    if j > 0 {
        poly = &poly * &FormulaPoly::rho().try_pow(j as u32).expect("small degree");
    }
    if k > 0 {
        poly = &poly * &FormulaPoly::width().try_pow(k as u32).expect("small degree");
    }
    poly
}

fn u(x: i64) -> u32 {
    u32::try_from(x).expect("validated non-negative index")
}

/// Steiner polynomial `V(K_ρ) = Σ_i C(n,i) W_i ρ^i`.
pub fn steiner_volume(n: i64) -> Result<FormulaPoly> {
    require(n >= 1, || format!("n={n} needs n >= 1"))?;
    Ok((0..=n).fold(FormulaPoly::zero(), |acc, i| {
        &acc + &term(c(n, i), &PiScalar::one(), Some(Atom::Quermass(u(n), u(i))), i, 0)
    }))
}

/// `W_i(K_ρ) = Σ_j C(n-i,j) W_{i+j}(K) ρ^j`.
pub fn steiner_quermass(n: i64, i: i64) -> Result<FormulaPoly> {
    require(n >= 1 && (0..=n).contains(&i), || format!("(n={n}, i={i}) needs 0 <= i <= n"))?;
    Ok((0..=n - i).fold(FormulaPoly::zero(), |acc, j| {
        &acc + &term(c(n - i, j), &PiScalar::one(), Some(Atom::Quermass(u(n), u(i + j))), j, 0)
    }))
}

/// `M_i(∂K) = n W_{i+1}(K)`.
pub fn mci_from_quermass(n: i64, i: i64) -> Result<FormulaPoly> {
    require(n >= 1 && (0..n).contains(&i), || format!("(n={n}, i={i}) needs 0 <= i <= n-1"))?;
    Ok(term(Rational::from_integer(n.into()), &PiScalar::one(), Some(Atom::Quermass(u(n), u(i + 1))), 0, 0))
}

/// Rewrites `M^{(n)}_q` of a flattened `r`-dimensional body in terms of its
/// intrinsic integrals inside the `r`-plane.
pub fn santalo_project(n: i64, r: i64, q: i64) -> Result<FormulaPoly> {
    require(n >= 2 && (1..n).contains(&r) && (0..n).contains(&q), || {
        format!("(n={n}, r={r}, q={q}) needs 1 <= r <= n-1, 0 <= q <= n-1")
    })?;
    if q >= n - r {
        let qq = q - n + r;
        let ratio = o(q).checked_div(&o(qq))?;
        Ok(term(c(r - 1, qq) / c(n - 1, q), &ratio, Some(Atom::MciProj(u(r), u(qq))), 0, 0))
    } else if q == n - r - 1 {
        Ok(term(Rational::from_integer(1.into()) / c(n - 1, n - r - 1), &o(n - r - 1), Some(Atom::VolProj(u(r))), 0, 0))
    } else {
        Ok(FormulaPoly::zero())
    }
}

/// Bindings `Mf(n,q) ↦ santalo_project(n,r,q)` for every `q`.
pub fn santalo_bindings(n: i64, r: i64) -> Result<BTreeMap<Atom, FormulaPoly>> {
    (0..n)
        .map(|q| Ok((Atom::MciFlat(u(n), u(q)), santalo_project(n, r, q)?)))
        .collect()
}

/// Quermassintegral reduction for a body of constant width `h`:
/// `W_s = Σ_i (-1)^i C(n-s,i) W_{n-i} h^{n-s-i}`.
pub fn constant_width_reduce(n: i64, s: i64) -> Result<FormulaPoly> {
    require(n >= 1 && (0..=n).contains(&s), || format!("(n={n}, s={s}) needs 0 <= s <= n"))?;
    Ok((0..=n - s).fold(FormulaPoly::zero(), |acc, i| {
        &acc + &term(sign(i) * c(n - s, i), &PiScalar::one(), Some(Atom::Quermass(u(n), u(n - i))), 0, n - s - i)
    }))
}

/// `W_l(Φ_ρ)` of the parallel body of a constant width body, expanded as the
/// double sum over `ρ^j h^{n-l-j-i}`.
pub fn parallel_constwidth_quermass(n: i64, l: i64) -> Result<FormulaPoly> {
    require(n >= 1 && (0..=n).contains(&l), || format!("(n={n}, l={l}) needs 0 <= l <= n"))?;
    let mut acc = FormulaPoly::zero();
    for j in 0..=n - l {
        for i in 0..=n - l - j {
            let q = sign(i) * c(n - l, j) * c(n - l - j, i);
            acc = &acc + &term(q, &PiScalar::one(), Some(Atom::Quermass(u(n), u(n - i))), j, n - l - j - i);
        }
    }
    Ok(acc)
}

/// `M_l(∂(Φ'_r)_ρ)` expanded over the flattened integrals `Mf(n, n-i-1)`,
/// before the flattened-body relations are applied.
pub fn wc_expansion(n: i64, r: i64, l: i64) -> Result<FormulaPoly> {
    check_nrl(n, r, l)?;
    let mut acc = FormulaPoly::zero();
    for j in 0..=n - l - 1 {
        for i in 0..=n - l - j - 1 {
            let q = sign(i) * c(n - l - 1, j) * c(n - l - j - 1, i);
            acc = &acc + &term(q, &PiScalar::one(), Some(Atom::MciFlat(u(n), u(n - i - 1))), j, n - l - j - i - 1);
        }
    }
    Ok(acc)
}

/// The two atom families the theorem skeleton is instantiated with.
struct CaseFactors {
    /// Factor and atom standing for `O_{n-i-1}/O_{r-i-1} · M^{(r)}_{r-i-1}` (or its integral).
    mci: Box<dyn Fn(i64) -> (PiScalar, Atom)>,
    /// Factor and atom standing for `O_{n-r-1} · V_r` (or its integral).
    vol: (PiScalar, Atom),
}

fn theorem_cases(n: i64, r: i64, l: i64, f: &CaseFactors) -> FormulaPoly {
    let mci_term = |q: Rational, i: i64, j: i64, k: i64| {
        let (factor, atom) = (f.mci)(i);
        let q = q * c(r - 1, r - i - 1) / c(n - 1, n - i - 1);
        term(q, &factor, Some(atom), j, k)
    };
    let vol_term = |q: Rational, j: i64, k: i64| {
        let q = q / c(n - 1, n - r - 1);
        term(q, &f.vol.0, Some(f.vol.1), j, k)
    };
    let mut acc = FormulaPoly::zero();
    if l >= n - r {
        for j in 0..=n - l - 1 {
            for i in 0..=n - l - j - 1 {
                let q = sign(i) * c(n - l - 1, j) * c(n - l - j - 1, i);
                acc = &acc + &mci_term(q, i, j, n - l - j - i - 1);
            }
        }
    } else if l == n - r - 1 {
        acc = &acc + &vol_term(sign(r), 0, 0);
        for i in 0..=r - 1 {
            acc = &acc + &mci_term(sign(i) * c(r, i), i, 0, r - i);
        }
        for j in 1..=r {
            for i in 0..=r - j {
                acc = &acc + &mci_term(sign(i) * c(r, j) * c(r - j, i), i, j, r - j - i);
            }
        }
    } else {
        for j in 0..=n - r - l - 1 {
            let q = sign(r) * c(n - l - 1, j) * c(n - l - j - 1, r);
            acc = &acc + &vol_term(q, j, n - l - j - r - 1);
        }
        for j in 0..=n - r - l {
            for i in 0..=r - 1 {
                let q = sign(i) * c(n - l - 1, j) * c(n - l - j - 1, i);
                acc = &acc + &mci_term(q, i, j, n - l - j - i - 1);
            }
        }
        for j in n - r - l + 1..=n - l - 1 {
            for i in 0..=n - l - j - 1 {
                let q = sign(i) * c(n - l - 1, j) * c(n - l - j - 1, i);
                acc = &acc + &mci_term(q, i, j, n - l - j - i - 1);
            }
        }
    }
    acc
}

/// `O_{n-2}⋯O_{n-r} / (O_{r-2}⋯O_0)`; both chains are empty (=1) at `r = 1`.
pub fn grassmann_chain(n: i64, r: i64) -> Result<PiScalar> {
    Ok(sphere_area_product(n - r, n - 2)?.checked_div(&sphere_area_product(0, r - 2)?)?)
}

/// Mean curvature integral `M^{(n)}_l` of the `n`-space parallel body of the
/// projection `Φ'_r`, in the projection's own integrals, split into the three
/// cases `l ≥ n-r`, `l = n-r-1`, `l < n-r-1`.
pub fn theorem1(n: i64, r: i64, l: i64) -> Result<FormulaPoly> {
    check_nrl(n, r, l)?;
    let rr = u(r);
    let factors = CaseFactors {
        mci: Box::new(move |i| {
            let ratio = o(n - i - 1).checked_div(&o(r - i - 1)).expect("monomial divisor");
            (ratio, Atom::MciProj(rr, u(r - i - 1)))
        }),
        vol: (o(n - r - 1), Atom::VolProj(rr)),
    };
    Ok(theorem_cases(n, r, l, &factors))
}

/// Integral of [`theorem1`] over the Grassmannian of `r`-planes, in the body's
/// own mean curvature integrals.
pub fn theorem2(n: i64, r: i64, l: i64) -> Result<FormulaPoly> {
    check_nrl(n, r, l)?;
    let chain = grassmann_chain(n, r)?;
    let nn = u(n);
    let mci_chain = chain.clone();
    let factors = CaseFactors {
        mci: Box::new(move |i| {
            let ratio = (&o(n - i - 1) * &mci_chain).checked_div(&o(r - i - 1)).expect("monomial divisor");
            (ratio, Atom::MciBody(nn, u(n - i - 1)))
        }),
        vol: (
            (&o(n - r - 1) * &chain).scale(&(Rational::from_integer(1.into()) / Rational::from_integer(r.into()))),
            Atom::MciBody(nn, u(n - r - 1)),
        ),
    };
    Ok(theorem_cases(n, r, l, &factors))
}

/// `∫ M^{(r)}_t(∂Φ'_r) dL = chain · M^{(n)}_{n-r+t}(∂Φ)`.
pub fn grassmann_mci_transfer(n: i64, r: i64, t: i64) -> Result<FormulaPoly> {
    check_nr(n, r)?;
    require((0..r).contains(&t), || format!("t={t} needs 0 <= t <= r-1"))?;
    Ok(term(
        Rational::from_integer(1.into()),
        &grassmann_chain(n, r)?,
        Some(Atom::MciBody(u(n), u(n - r + t))),
        0,
        0,
    ))
}

/// `∫ V_r(Φ'_r) dL = chain / r · M^{(n)}_{n-r-1}(∂Φ)`.
pub fn projection_volume_integral(n: i64, r: i64) -> Result<FormulaPoly> {
    check_nr(n, r)?;
    Ok(term(
        Rational::new(1.into(), r.into()),
        &grassmann_chain(n, r)?,
        Some(Atom::MciBody(u(n), u(n - r - 1))),
        0,
        0,
    ))
}

/// Bindings replacing projection integrals by their Grassmann integrals.
pub fn transfer_bindings(n: i64, r: i64) -> Result<BTreeMap<Atom, FormulaPoly>> {
    let mut out = BTreeMap::new();
    for t in 0..r {
        out.insert(Atom::MciProj(u(r), u(t)), grassmann_mci_transfer(n, r, t)?);
    }
    out.insert(Atom::VolProj(u(r)), projection_volume_integral(n, r)?);
    Ok(out)
}

/// `theorem1` with every flattened integral of the raw expansion rewritten:
/// the mechanized form of the case analysis.
pub fn theorem1_by_substitution(n: i64, r: i64, l: i64) -> Result<FormulaPoly> {
    Ok(wc_expansion(n, r, l)?.substitute(&santalo_bindings(n, r)?)?)
}

/// `theorem1` integrated term by term with the transfer bindings.
pub fn theorem2_by_transfer(n: i64, r: i64, l: i64) -> Result<FormulaPoly> {
    Ok(theorem1(n, r, l)?.substitute(&transfer_bindings(n, r)?)?)
}

/// Stable ids for every builder, as accepted by the CLI and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    SteinerVolume,
    SteinerQuermass,
    MciBridge,
    SantaloAbove,
    SantaloVolume,
    SantaloZero,
    Santalo,
    ConstantWidth,
    ParallelConstWidth,
    WcExpansion,
    Theorem1,
    Theorem2,
    Theorem2Case2,
    Transfer,
    Theorem2Case2Derived,
    ProjectionVolume,
}

/// Parameters a formula may read; each formula names the ones it needs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FormulaParams {
    pub n: Option<i64>,
    pub r: Option<i64>,
    pub l: Option<i64>,
    pub i: Option<i64>,
    pub s: Option<i64>,
    pub q: Option<i64>,
    pub t: Option<i64>,
}

impl FormulaId {
    pub const ALL: [FormulaId; 16] = [
        FormulaId::SteinerVolume,
        FormulaId::SteinerQuermass,
        FormulaId::MciBridge,
        FormulaId::SantaloAbove,
        FormulaId::SantaloVolume,
        FormulaId::SantaloZero,
        FormulaId::Santalo,
        FormulaId::ConstantWidth,
        FormulaId::ParallelConstWidth,
        FormulaId::WcExpansion,
        FormulaId::Theorem1,
        FormulaId::Theorem2,
        FormulaId::Theorem2Case2,
        FormulaId::Transfer,
        FormulaId::Theorem2Case2Derived,
        FormulaId::ProjectionVolume,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::SteinerVolume => "eq-2.5",
            FormulaId::SteinerQuermass => "eq-2.6",
            FormulaId::MciBridge => "eq-2.7",
            FormulaId::SantaloAbove => "eq-2.8",
            FormulaId::SantaloVolume => "eq-2.9",
            FormulaId::SantaloZero => "eq-2.10",
            FormulaId::Santalo => "lemma-2.1",
            FormulaId::ConstantWidth => "eq-2.11",
            FormulaId::ParallelConstWidth => "eq-3.1",
            FormulaId::WcExpansion => "eq-3.4",
            FormulaId::Theorem1 => "thm-1.1",
            FormulaId::Theorem2 => "thm-1.2",
            FormulaId::Theorem2Case2 => "thm-1.2-case2",
            FormulaId::Transfer => "eq-3.8",
            FormulaId::Theorem2Case2Derived => "eq-3.9",
            FormulaId::ProjectionVolume => "eq-3.10",
        }
    }

    pub fn params(self) -> &'static [&'static str] {
        match self {
            FormulaId::SteinerVolume => &["n"],
            FormulaId::SteinerQuermass | FormulaId::MciBridge => &["n", "i"],
            FormulaId::SantaloAbove | FormulaId::SantaloVolume | FormulaId::SantaloZero | FormulaId::Santalo => {
                &["n", "r", "q"]
            }
            FormulaId::ConstantWidth => &["n", "s"],
            FormulaId::ParallelConstWidth => &["n", "l"],
            FormulaId::WcExpansion
            | FormulaId::Theorem1
            | FormulaId::Theorem2
            | FormulaId::Theorem2Case2 => &["n", "r", "l"],
            FormulaId::Transfer => &["n", "r", "t"],
            FormulaId::Theorem2Case2Derived | FormulaId::ProjectionVolume => &["n", "r"],
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            FormulaId::SteinerVolume => "Steiner polynomial of the parallel body volume",
            FormulaId::SteinerQuermass => "quermassintegral of the parallel body",
            FormulaId::MciBridge => "mean curvature integral as n * quermassintegral",
            FormulaId::SantaloAbove => "flattened-body integral, case q >= n-r",
            FormulaId::SantaloVolume => "flattened-body integral, case q = n-r-1",
            FormulaId::SantaloZero => "flattened-body integral, case q < n-r-1",
            FormulaId::Santalo => "flattened-body integral, all cases",
            FormulaId::ConstantWidth => "quermassintegral reduction for constant width",
            FormulaId::ParallelConstWidth => "quermassintegral of a parallel constant-width body",
            FormulaId::WcExpansion => "raw expansion over flattened integrals",
            FormulaId::Theorem1 => "mean curvature integral of the parallel projection",
            FormulaId::Theorem2 => "Grassmann integral of the parallel projection integral",
            FormulaId::Theorem2Case2 => "Grassmann integral, case l = n-r-1 as stated",
            FormulaId::Transfer => "Grassmann integral of a projection integral",
            FormulaId::Theorem2Case2Derived => "Grassmann integral, case l = n-r-1 as derived",
            FormulaId::ProjectionVolume => "Grassmann integral of the projection volume",
        }
    }

    pub fn build(self, p: &FormulaParams) -> Result<FormulaPoly> {
        let id = self.as_str();
        let get = |name: &'static str, v: Option<i64>| v.ok_or(FormulaError::MissingParam { id, param: name });
        match self {
            FormulaId::SteinerVolume => steiner_volume(get("n", p.n)?),
            FormulaId::SteinerQuermass => steiner_quermass(get("n", p.n)?, get("i", p.i)?),
            FormulaId::MciBridge => mci_from_quermass(get("n", p.n)?, get("i", p.i)?),
            FormulaId::Santalo | FormulaId::SantaloAbove | FormulaId::SantaloVolume | FormulaId::SantaloZero => {
                let (n, r, q) = (get("n", p.n)?, get("r", p.r)?, get("q", p.q)?);
                let applies = match self {
                    FormulaId::SantaloAbove => q >= n - r,
                    FormulaId::SantaloVolume => q == n - r - 1,
                    FormulaId::SantaloZero => q < n - r - 1,
                    _ => true,
                };
                require(applies, || format!("{id} does not cover q={q} for n={n}, r={r}; use lemma-2.1"))?;
                santalo_project(n, r, q)
            }
            FormulaId::ConstantWidth => constant_width_reduce(get("n", p.n)?, get("s", p.s)?),
            FormulaId::ParallelConstWidth => parallel_constwidth_quermass(get("n", p.n)?, get("l", p.l)?),
            FormulaId::WcExpansion => wc_expansion(get("n", p.n)?, get("r", p.r)?, get("l", p.l)?),
            FormulaId::Theorem1 => theorem1(get("n", p.n)?, get("r", p.r)?, get("l", p.l)?),
            FormulaId::Theorem2 => theorem2(get("n", p.n)?, get("r", p.r)?, get("l", p.l)?),
            FormulaId::Theorem2Case2 => {
                let (n, r, l) = (get("n", p.n)?, get("r", p.r)?, get("l", p.l)?);
                require(l == n - r - 1, || format!("{id} needs l = n-r-1 (got l={l}, n-r-1={})", n - r - 1))?;
                theorem2(n, r, l)
            }
            FormulaId::Transfer => grassmann_mci_transfer(get("n", p.n)?, get("r", p.r)?, get("t", p.t)?),
            FormulaId::Theorem2Case2Derived => {
                let (n, r) = (get("n", p.n)?, get("r", p.r)?);
                check_nr(n, r)?;
                require(n - r - 1 >= 0, || "l = n-r-1 must be >= 0".into())?;
                theorem2_by_transfer(n, r, n - r - 1)
            }
            FormulaId::ProjectionVolume => projection_volume_integral(get("n", p.n)?, get("r", p.r)?),
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaId {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| FormulaError::UnknownId(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn parse(s: &str) -> FormulaPoly {
        s.parse().unwrap()
    }

    fn pi(q: Rational, k: u32) -> PiScalar {
        PiScalar::monomial(q, k)
    }

    fn eval(p: &FormulaPoly, b: &[(Atom, f64)]) -> f64 {
        p.eval(&b.iter().copied().collect()).unwrap()
    }

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn steiner_volume_examples() {
        let p = steiner_volume(2).unwrap();
        assert_eq!(p.to_string(), "(1)*W(2,0) + (2)*W(2,1)*rho + (1)*W(2,2)*rho^2");
        let rho = 0.7;
        let ball = eval(&p, &[(Atom::Quermass(2, 0), PI), (Atom::Quermass(2, 1), PI), (Atom::Quermass(2, 2), PI), (Atom::Rho, rho)]);
        assert!((ball - PI * (1.0 + rho).powi(2)).abs() < 1e-13);
        // stadium around a segment of length 2: rectangle 2 x 2ρ plus a disc of radius ρ
        let stadium = eval(&p, &[(Atom::Quermass(2, 0), 0.0), (Atom::Quermass(2, 1), 2.0), (Atom::Quermass(2, 2), PI), (Atom::Rho, rho)]);
        assert!((stadium - (2.0 * 2.0 * rho + PI * rho * rho)).abs() < 1e-13);
        assert!(steiner_volume(0).is_err());
    }

    #[test]
    fn steiner_quermass_examples() {
        assert_eq!(steiner_quermass(2, 1).unwrap(), parse("(1)*W(2,1) + (1)*W(2,2)*rho"));
        assert_eq!(steiner_quermass(5, 5).unwrap(), FormulaPoly::atom(Atom::Quermass(5, 5)));
        // flattened unit disc in 3-space: W1 = 2π/3, W2 = π²/3, W3 = 4π/3
        let p = steiner_quermass(3, 1).unwrap();
        let exact = p
            .substitute(&BTreeMap::from([
                (Atom::Quermass(3, 1), FormulaPoly::constant(pi(rat(2, 3), 1))),
                (Atom::Quermass(3, 2), FormulaPoly::constant(pi(rat(1, 3), 2))),
                (Atom::Quermass(3, 3), FormulaPoly::constant(pi(rat(4, 3), 1))),
            ]))
            .unwrap();
        assert_eq!(exact.to_string(), "(2/3*pi) + (2/3*pi^2)*rho + (4/3*pi)*rho^2");
        assert!(steiner_quermass(2, 3).is_err());
    }

    #[test]
    fn mci_bridge_examples() {
        assert_eq!(mci_from_quermass(3, 0).unwrap().to_string(), "(3)*W(3,1)");
        assert_eq!(mci_from_quermass(3, 2).unwrap().to_string(), "(3)*W(3,3)");
        // W_n = O_{n-1}/n gives the total curvature
        let total = eval(&mci_from_quermass(2, 1).unwrap(), &[(Atom::Quermass(2, 2), PI)]);
        assert!((total - 2.0 * PI).abs() < 1e-15);
        let gb = eval(&mci_from_quermass(3, 2).unwrap(), &[(Atom::Quermass(3, 3), 4.0 * PI / 3.0)]);
        assert!((gb - 4.0 * PI).abs() < 1e-14);
        assert!(mci_from_quermass(3, 3).is_err());
    }

    #[test]
    fn santalo_examples() {
        assert_eq!(santalo_project(3, 2, 2).unwrap().to_string(), "(2)*M'(2,1)");
        assert_eq!(santalo_project(3, 2, 0).unwrap().to_string(), "(2)*V'_2");
        assert!(santalo_project(5, 2, 1).unwrap().is_zero());
        assert_eq!(santalo_project(3, 2, 1).unwrap().to_string(), "(1/2*pi)*M'(2,0)");
        assert!(santalo_project(3, 3, 0).is_err());
        assert!(santalo_project(3, 2, 3).is_err());
    }

    #[test]
    fn constant_width_examples() {
        assert_eq!(
            constant_width_reduce(2, 0).unwrap().to_string(),
            "(1)*W(2,0) + (-2)*W(2,1)*h + (1)*W(2,2)*h^2"
        );
        assert_eq!(constant_width_reduce(4, 4).unwrap(), FormulaPoly::atom(Atom::Quermass(4, 4)));
        assert_eq!(constant_width_reduce(2, 1).unwrap().to_string(), "(-1)*W(2,1) + (1)*W(2,2)*h");
        // ball of radius R: W_i = κ_n R^{n-i}, width 2R
        for n in 1..=7i64 {
            let kappa = crate::exact::ball_volume(n).unwrap();
            let radius = rat(3, 2);
            let mut b = BTreeMap::new();
            for i in 0..=n {
                let mut w = kappa.clone();
                for _ in 0..(n - i) {
                    w = w.scale(&radius);
                }
                b.insert(Atom::Quermass(n as u32, i as u32), w);
            }
            b.insert(Atom::Width, PiScalar::from_rational(rat(3, 1)));
            for s in 0..=n {
                let lhs = constant_width_reduce(n, s).unwrap().eval_exact(&b).unwrap();
                assert_eq!(lhs, b[&Atom::Quermass(n as u32, s as u32)], "n={n} s={s}");
            }
        }
    }

    #[test]
    fn parallel_constwidth_examples() {
        assert_eq!(
            parallel_constwidth_quermass(2, 1).unwrap().to_string(),
            "(-1)*W(2,1) + (1)*W(2,2)*h + (1)*W(2,2)*rho"
        );
        assert_eq!(parallel_constwidth_quermass(3, 3).unwrap(), FormulaPoly::atom(Atom::Quermass(3, 3)));
        // ball R: π·2R − πR + πρ = π(R+ρ)
        let v = eval(
            &parallel_constwidth_quermass(2, 1).unwrap(),
            &[(Atom::Quermass(2, 1), PI * 1.3), (Atom::Quermass(2, 2), PI), (Atom::Width, 2.6), (Atom::Rho, 0.4)],
        );
        assert!((v - PI * 1.7).abs() < 1e-13);
    }

    #[test]
    fn wc_expansion_examples() {
        assert_eq!(
            wc_expansion(2, 1, 0).unwrap().to_string(),
            "(-1)*Mf(2,0) + (1)*Mf(2,1)*h + (1)*Mf(2,1)*rho"
        );
        assert_eq!(wc_expansion(2, 1, 1).unwrap(), FormulaPoly::atom(Atom::MciFlat(2, 1)));
        assert_eq!(wc_expansion(3, 2, 2).unwrap(), FormulaPoly::atom(Atom::MciFlat(3, 2)));
        assert!(wc_expansion(3, 3, 0).is_err());
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1(2, 1, 1).unwrap().to_string(), "(pi)*M'(1,0)");
        assert_eq!(
            theorem1(2, 1, 0).unwrap().to_string(),
            "(-2)*V'_1 + (pi)*M'(1,0)*h + (pi)*M'(1,0)*rho"
        );
        assert_eq!(theorem1(3, 2, 2).unwrap().to_string(), "(2)*M'(2,1)");
        let v = eval(&theorem1(2, 1, 1).unwrap(), &[(Atom::MciProj(1, 0), 2.0)]);
        assert!((v - 2.0 * PI).abs() < 1e-15);
        assert!(theorem1(2, 2, 0).is_err());
        assert!(theorem1(2, 1, 2).is_err());
    }

    #[test]
    fn theorem2_examples() {
        assert_eq!(theorem2(2, 1, 1).unwrap().to_string(), "(pi)*M(2,1)");
        let ball = eval(&theorem2(2, 1, 1).unwrap(), &[(Atom::MciBody(2, 1), 2.0 * PI)]);
        assert!((ball - 2.0 * PI * PI).abs() < 1e-13);
        let p = theorem2(3, 2, 2).unwrap();
        assert_eq!(p.to_string(), "(2*pi)*M(3,2)");
        assert!((eval(&p, &[(Atom::MciBody(3, 2), 4.0 * PI)]) - 8.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(grassmann_mci_transfer(3, 2, 0).unwrap().to_string(), "(pi)*M(3,1)");
        assert_eq!(grassmann_mci_transfer(2, 1, 0).unwrap().to_string(), "(1)*M(2,1)");
        assert_eq!(grassmann_mci_transfer(4, 3, 2).unwrap().to_string(), "(2*pi)*M(4,3)");
        assert!(grassmann_mci_transfer(3, 2, 2).is_err());
        assert_eq!(projection_volume_integral(3, 2).unwrap().to_string(), "(1/2*pi)*M(3,0)");
        assert_eq!(projection_volume_integral(2, 1).unwrap().to_string(), "(1)*M(2,0)");
        assert_eq!(projection_volume_integral(4, 1).unwrap().to_string(), "(1)*M(4,2)");
        assert_eq!(grassmann_chain(4, 3).unwrap(), pi(int(2), 1));
    }

    #[test]
    fn internal_consistency_small_cases() {
        for (n, r, l) in [(2, 1, 0), (3, 1, 0), (4, 2, 1), (5, 2, 0), (6, 3, 1)] {
            assert_eq!(theorem1(n, r, l).unwrap(), theorem1_by_substitution(n, r, l).unwrap(), "({n},{r},{l})");
            assert_eq!(theorem2(n, r, l).unwrap(), theorem2_by_transfer(n, r, l).unwrap(), "({n},{r},{l})");
        }
    }

    #[test]
    fn case_dispatch_covers_every_triple() {
        for n in 2..=8i64 {
            for r in 1..n {
                for l in 0..n {
                    let cases = [l >= n - r, l == n - r - 1, l < n - r - 1];
                    assert_eq!(cases.iter().filter(|c| **c).count(), 1);
                    assert!(!theorem1(n, r, l).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn steiner_composition() {
        // parallel at ρ then at σ equals parallel at ρ+σ; W' are the base body's
        // quermassintegrals, h stands in for σ and V'_1 is a scratch atom.
        let sigma = FormulaPoly::width();
        for n in 1..=6i64 {
            let nn = n as u32;
            let to_base: BTreeMap<Atom, FormulaPoly> = (0..=nn)
                .map(|k| (Atom::Quermass(nn, k), FormulaPoly::atom(Atom::QuermassProj(nn, k))))
                .collect();
            for i in 0..=n {
                let outer = steiner_quermass(n, i)
                    .unwrap()
                    .substitute(&BTreeMap::from([(Atom::Rho, sigma.clone())]))
                    .unwrap();
                let inner: BTreeMap<Atom, FormulaPoly> = (i..=n)
                    .map(|k| {
                        let w = steiner_quermass(n, k).unwrap().substitute(&to_base).unwrap();
                        (Atom::Quermass(nn, k as u32), w)
                    })
                    .collect();
                let twice = outer.substitute(&inner).unwrap();
                let direct = steiner_quermass(n, i)
                    .unwrap()
                    .substitute(&to_base)
                    .unwrap()
                    .substitute(&BTreeMap::from([(Atom::Rho, FormulaPoly::atom(Atom::VolProj(1)))]))
                    .unwrap()
                    .substitute(&BTreeMap::from([(Atom::VolProj(1), &FormulaPoly::rho() + &sigma)]))
                    .unwrap();
                assert_eq!(twice, direct, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn ids_round_trip_and_params() {
        for id in FormulaId::ALL {
            assert_eq!(id.as_str().parse::<FormulaId>().unwrap(), id);
        }
        let p = FormulaParams { n: Some(3), i: Some(2), ..Default::default() };
        assert_eq!(FormulaId::MciBridge.build(&p).unwrap().to_string(), "(3)*W(3,3)");
        assert!(matches!(
            FormulaId::Theorem1.build(&p),
            Err(FormulaError::MissingParam { param: "r", .. })
        ));
        let case2 = FormulaParams { n: Some(4), r: Some(2), l: Some(1), ..Default::default() };
        assert_eq!(
            FormulaId::Theorem2Case2.build(&case2).unwrap(),
            FormulaId::Theorem2Case2Derived.build(&case2).unwrap()
        );
        let wrong = FormulaParams { l: Some(0), ..case2 };
        assert!(FormulaId::Theorem2Case2.build(&wrong).is_err());
        assert!("eq-9.9".parse::<FormulaId>().is_err());
    }
}
