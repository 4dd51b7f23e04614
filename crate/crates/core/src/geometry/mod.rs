//! Convex bodies given by analytic support functions, and the quantities
//! computed from them by spherical quadrature.
//!
//! Every body is evaluated through the 1-homogeneous extension `H` of its
//! support function. At a unit vector `u` the principal radii of curvature are
//! the eigenvalues of `D²H(u)` restricted to `u^⊥`.

mod quadrature;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{sphere_area, PiScalar, Rational};
use crate::formulas::{santalo_project, steiner_quermass, FormulaError};
use crate::grassmann::{mean_and_standard_error, sample_rng, SubspaceFrame};
use crate::symbolic::{Atom, FormulaPoly};

pub use quadrature::{compensated_sum, QuadratureGrid, DEFAULT_CIRCLE_NODES, DEFAULT_SPHERE_ORDER};

/// Largest ambient dimension a body may live in.
pub const MAX_DIM: usize = 4;
/// Smallest admissible principal radius on the validation grid.
pub const EPS_CONVEX: f64 = 1e-8;
/// Odd-harmonic bodies must keep every radius above this margin.
pub const HARMONIC_MARGIN: f64 = 1e-6;
/// Highest harmonic degree accepted in the plane.
pub const MAX_DEGREE_2D: u32 = 31;
/// Tolerance on `|u| = 1` for caller-supplied directions.
pub const UNIT_TOLERANCE: f64 = 1e-10;

pub type Vector = [f64; MAX_DIM];
pub type Matrix = [[f64; MAX_DIM]; MAX_DIM];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("convexity lost at direction {direction:?}: principal radius {radius:e}")]
    Convexity { direction: Vec<f64>, radius: f64 },
    #[error("not supported: {0}")]
    Unsupported(String),
    #[error("body spec: {0}")]
    Parse(String),
    #[error("frame: {0}")]
    Frame(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

type Result<T> = std::result::Result<T, GeometryError>;

/// One planar harmonic `cos·cos(kθ) + sin·sin(kθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic2dSpec {
    pub degree: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// One solid harmonic of odd degree, restricted to the sphere. `order`
/// selects the real harmonic polynomial listed in [`harmonic_polynomial`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic3dSpec {
    pub degree: u32,
    pub order: i32,
    pub coef: f64,
}

/// JSON body description, e.g.
/// `{"family": "odd_harmonic_2d", "halfwidth": 1.0, "harmonics": [{"degree": 3, "cos": 0.1}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum BodySpec {
    #[serde(rename = "ball")]
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    #[serde(rename = "odd_harmonic_2d")]
    OddHarmonic2d { halfwidth: f64, harmonics: Vec<Harmonic2dSpec> },
    #[serde(rename = "odd_harmonic_3d")]
    OddHarmonic3d { halfwidth: f64, harmonics: Vec<Harmonic3dSpec> },
    #[serde(rename = "parallel")]
    Parallel { base: Box<BodySpec>, rho: f64 },
    #[serde(rename = "projected")]
    Projected { base: Box<BodySpec>, frame: Vec<Vec<f64>> },
}

impl BodySpec {
    pub fn ball(radius: f64, dim: usize) -> Self {
        BodySpec::Ball { radius, dim: Some(dim) }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("body spec serializes")
    }

    /// Builds the body; a ball without `dim` takes `default_dim`.
    pub fn build(&self, default_dim: usize) -> Result<SupportBody> {
        SupportBody::from_spec(self, default_dim)
    }
}

/// Monomials `(coefficient, [a, b, c])` of the real harmonic polynomial of
/// the given degree and order: degree 1 gives `z, x, y` for orders `0, 1, -1`;
/// degree 3 gives the seven cubic harmonics.
pub fn harmonic_polynomial(degree: u32, order: i32) -> Option<Vec<(f64, [u32; 3])>> {
    let p = match (degree, order) {
        (1, 0) => vec![(1.0, [0, 0, 1])],
        (1, 1) => vec![(1.0, [1, 0, 0])],
        (1, -1) => vec![(1.0, [0, 1, 0])],
        // z(2z² - 3x² - 3y²)
        (3, 0) => vec![(2.0, [0, 0, 3]), (-3.0, [2, 0, 1]), (-3.0, [0, 2, 1])],
        // x(4z² - x² - y²)
        (3, 1) => vec![(4.0, [1, 0, 2]), (-1.0, [3, 0, 0]), (-1.0, [1, 2, 0])],
        // y(4z² - x² - y²)
        (3, -1) => vec![(4.0, [0, 1, 2]), (-1.0, [2, 1, 0]), (-1.0, [0, 3, 0])],
        // z(x² - y²)
        (3, 2) => vec![(1.0, [2, 0, 1]), (-1.0, [0, 2, 1])],
        // xyz
        (3, -2) => vec![(1.0, [1, 1, 1])],
        // x³ - 3xy²
        (3, 3) => vec![(1.0, [3, 0, 0]), (-3.0, [1, 2, 0])],
        // 3x²y - y³
        (3, -3) => vec![(3.0, [2, 1, 0]), (-1.0, [0, 3, 0])],
        _ => return None,
    };
    Some(p)
}

fn monomial(e: [u32; 3], x: &[f64]) -> f64 {
    (0..3).map(|j| x[j].powi(e[j] as i32)).product()
}

/// `∂/∂x_k` of `x^e` as `(factor, exponents)`; `None` when it vanishes.
fn monomial_derivative(e: [u32; 3], k: usize) -> Option<(f64, [u32; 3])> {
    (e[k] > 0).then(|| {
        let mut d = e;
        d[k] -= 1;
        (e[k] as f64, d)
    })
}

/// Value, gradient and Hessian of a polynomial in three variables.
fn poly_eval(poly: &[(f64, [u32; 3])], x: &[f64]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let mut value = 0.0;
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for &(c, e) in poly {
        value += c * monomial(e, x);
        for a in 0..3 {
            let Some((fa, ea)) = monomial_derivative(e, a) else { continue };
            grad[a] += c * fa * monomial(ea, x);
            for b in 0..3 {
                if let Some((fb, eb)) = monomial_derivative(ea, b) {
                    hess[a][b] += c * fa * fb * monomial(eb, x);
                }
            }
        }
    }
    (value, grad, hess)
}

/// A harmonic term prepared for evaluation.
#[derive(Debug, Clone, PartialEq)]
struct SolidTerm {
    spec: Harmonic3dSpec,
    poly: Vec<(f64, [u32; 3])>,
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Ball { radius: f64 },
    OddHarmonic2d { halfwidth: f64, harmonics: Vec<Harmonic2dSpec> },
    OddHarmonic3d { halfwidth: f64, terms: Vec<SolidTerm> },
    Parallel { base: Box<SupportBody>, rho: f64 },
    Projected { base: Box<SupportBody>, frame: SubspaceFrame },
}

/// Value, gradient and Hessian of the homogeneous support function at a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEval {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

/// An immutable convex body in `dim`-space.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBody {
    dim: usize,
    family: Family,
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(GeometryError::Domain(format!("{what} must be finite, got {x}")))
    }
}

fn check_unit(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(GeometryError::Domain(format!("direction has length {}, body lives in dimension {dim}", u.len())));
    }
    let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(GeometryError::Domain(format!("direction is not a unit vector (norm {norm})")));
    }
    Ok(())
}

/// Orthonormal basis of `u^⊥` for `|u| = 1`.
fn tangent_basis(u: &[f64]) -> Vec<Vector> {
    match u.len() {
        1 => vec![],
        2 => {
            let mut t = [0.0; MAX_DIM];
            t[0] = -u[1];
            t[1] = u[0];
            vec![t]
        }
        d => {
            // Gram–Schmidt on the coordinate axes, starting from the least aligned one.
            let mut axes: Vec<usize> = (0..d).collect();
            axes.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
            let mut basis: Vec<Vector> = Vec::with_capacity(d - 1);
            for &k in &axes {
                if basis.len() == d - 1 {
                    break;
                }
                let mut v = [0.0; MAX_DIM];
                v[k] = 1.0;
                for _ in 0..2 {
                    let p: f64 = (0..d).map(|j| v[j] * u[j]).sum();
                    (0..d).for_each(|j| v[j] -= p * u[j]);
                    for b in &basis {
                        let p: f64 = (0..d).map(|j| v[j] * b[j]).sum();
                        (0..d).for_each(|j| v[j] -= p * b[j]);
                    }
                }
                let norm: f64 = (0..d).map(|j| v[j] * v[j]).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    (0..d).for_each(|j| v[j] /= norm);
                    basis.push(v);
                }
            }
            basis
        }
    }
}

/// Eigenvalues of a symmetric matrix of size ≤ 3, ascending.
fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    match m.len() {
        0 => vec![],
        1 => vec![m[0][0]],
        2 => {
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let dev = (0.5 * (m[0][0] - m[1][1])).hypot(0.5 * (m[0][1] + m[1][0]));
            vec![mean - dev, mean + dev]
        }
        3 => {
            // Trigonometric solution of the characteristic cubic.
            let a = m;
            let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            if p1 == 0.0 {
                let mut e = vec![a[0][0], a[1][1], a[2][2]];
                e.sort_by(f64::total_cmp);
                return e;
            }
            let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
                .collect();
            let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let mut e = vec![e1, 3.0 * q - e1 - e3, e3];
            e.sort_by(f64::total_cmp);
            e
        }
        _ => unreachable!("bodies live in dimension <= 4"),
    }
}

/// Elementary symmetric polynomials `e_0..e_k` of `x`.
fn elementary_symmetric(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (k, &v) in x.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl SupportBody {
    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(GeometryError::Domain(format!("ball dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if !(finite(radius, "radius")? > 0.0) {
            return Err(GeometryError::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { dim, family: Family::Ball { radius } })
    }

    /// Planar body `h(θ) = halfwidth + Σ (cos_k cos kθ + sin_k sin kθ)` over odd `k`.
    pub fn odd_harmonic_2d(halfwidth: f64, harmonics: Vec<Harmonic2dSpec>) -> Result<Self> {
        if !(finite(halfwidth, "halfwidth")? > 0.0) {
            return Err(GeometryError::Domain(format!("halfwidth must be positive, got {halfwidth}")));
        }
        for h in &harmonics {
            if h.degree % 2 == 0 || h.degree > MAX_DEGREE_2D {
                return Err(GeometryError::Domain(format!(
                    "harmonic degree must be odd and <= {MAX_DEGREE_2D}, got {}",
                    h.degree
                )));
            }
            finite(h.cos, "harmonic coefficient")?;
            finite(h.sin, "harmonic coefficient")?;
        }
        let body = Self { dim: 2, family: Family::OddHarmonic2d { halfwidth, harmonics } };
        body.certify(HARMONIC_MARGIN)?;
        Ok(body)
    }

    /// Spatial body `h(u) = halfwidth + Σ coef·P(u)` over harmonics of degree 1 or 3.
    pub fn odd_harmonic_3d(halfwidth: f64, harmonics: Vec<Harmonic3dSpec>) -> Result<Self> {
        if !(finite(halfwidth, "halfwidth")? > 0.0) {
            return Err(GeometryError::Domain(format!("halfwidth must be positive, got {halfwidth}")));
        }
        let terms = harmonics
            .into_iter()
            .map(|spec| {
                finite(spec.coef, "harmonic coefficient")?;
                let poly = harmonic_polynomial(spec.degree, spec.order).ok_or_else(|| {
                    GeometryError::Domain(format!(
                        "unsupported harmonic (degree {}, order {}); degrees 1 and 3 with |order| <= degree",
                        spec.degree, spec.order
                    ))
                })?;
                Ok(SolidTerm { spec, poly })
            })
            .collect::<Result<Vec<_>>>()?;
        let body = Self { dim: 3, family: Family::OddHarmonic3d { halfwidth, terms } };
        body.certify(HARMONIC_MARGIN)?;
        Ok(body)
    }

    /// Outer parallel body at distance `rho ≥ 0`.
    pub fn parallel(&self, rho: f64) -> Result<Self> {
        if !(finite(rho, "rho")? >= 0.0) {
            return Err(GeometryError::Domain(format!("rho must be >= 0, got {rho}")));
        }
        Ok(Self { dim: self.dim, family: Family::Parallel { base: Box::new(self.clone()), rho } })
    }

    /// Orthogonal projection onto the span of `frame`, expressed in frame
    /// coordinates. A full-rank frame rotates the body.
    pub fn project(&self, frame: &SubspaceFrame) -> Result<Self> {
        if frame.ambient_dim() != self.dim {
            return Err(GeometryError::Frame(format!(
                "frame lives in dimension {}, body in {}",
                frame.ambient_dim(),
                self.dim
            )));
        }
        let r = frame.rank();
        match &self.family {
            Family::Ball { radius } => Self::ball(*radius, r),
            Family::Parallel { base, rho } => base.project(frame)?.parallel(*rho),
            Family::Projected { base, frame: inner } => {
                let composed = frame.vectors().iter().map(|v| inner.embed(v)).collect();
                let frame = SubspaceFrame::from_vectors(inner.ambient_dim(), composed)
                    .map_err(|e| GeometryError::Frame(e.to_string()))?;
                Ok(Self { dim: r, family: Family::Projected { base: base.clone(), frame } })
            }
            _ => Ok(Self { dim: r, family: Family::Projected { base: Box::new(self.clone()), frame: frame.clone() } }),
        }
    }

    pub fn from_spec(spec: &BodySpec, default_dim: usize) -> Result<Self> {
        match spec {
            BodySpec::Ball { radius, dim } => Self::ball(*radius, dim.unwrap_or(default_dim)),
            BodySpec::OddHarmonic2d { halfwidth, harmonics } => Self::odd_harmonic_2d(*halfwidth, harmonics.clone()),
            BodySpec::OddHarmonic3d { halfwidth, harmonics } => Self::odd_harmonic_3d(*halfwidth, harmonics.clone()),
            BodySpec::Parallel { base, rho } => Self::from_spec(base, default_dim)?.parallel(*rho),
            BodySpec::Projected { base, frame } => {
                let base = Self::from_spec(base, default_dim)?;
                let frame = SubspaceFrame::from_vectors(base.dim, frame.clone())
                    .map_err(|e| GeometryError::Frame(e.to_string()))?;
                base.project(&frame)
            }
        }
    }

    pub fn to_spec(&self) -> BodySpec {
        match &self.family {
            Family::Ball { radius } => BodySpec::ball(*radius, self.dim),
            Family::OddHarmonic2d { halfwidth, harmonics } => {
                BodySpec::OddHarmonic2d { halfwidth: *halfwidth, harmonics: harmonics.clone() }
            }
            Family::OddHarmonic3d { halfwidth, terms } => BodySpec::OddHarmonic3d {
                halfwidth: *halfwidth,
                harmonics: terms.iter().map(|t| t.spec).collect(),
            },
            Family::Parallel { base, rho } => BodySpec::Parallel { base: Box::new(base.to_spec()), rho: *rho },
            Family::Projected { base, frame } => BodySpec::Projected {
                base: Box::new(base.to_spec()),
                frame: frame.vectors().to_vec(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Some(R)` for a ball of radius `R`, possibly behind parallel layers.
    pub fn as_ball_radius(&self) -> Option<f64> {
        match &self.family {
            Family::Ball { radius } => Some(*radius),
            Family::Parallel { base, rho } => base.as_ball_radius().map(|r| r + rho),
            _ => None,
        }
    }

    fn evaluate_unchecked(&self, u: &[f64]) -> SupportEval {
        let d = self.dim;
        let mut out = SupportEval { value: 0.0, gradient: [0.0; MAX_DIM], hessian: [[0.0; MAX_DIM]; MAX_DIM] };
        // Adds c·|x| and its derivatives.
        let add_norm = |out: &mut SupportEval, c: f64| {
            out.value += c;
            for i in 0..d {
                out.gradient[i] += c * u[i];
                for j in 0..d {
                    out.hessian[i][j] += c * (if i == j { 1.0 } else { 0.0 } - u[i] * u[j]);
                }
            }
        };
        match &self.family {
            Family::Ball { radius } => add_norm(&mut out, *radius),
            Family::Parallel { base, rho } => {
                out = base.evaluate_unchecked(u);
                add_norm(&mut out, *rho);
            }
            Family::OddHarmonic2d { halfwidth, harmonics } => {
                let theta = u[1].atan2(u[0]);
                let (mut h, mut dh, mut d2h) = (*halfwidth, 0.0, 0.0);
                for hm in harmonics {
                    let k = hm.degree as f64;
                    let (s, c) = (k * theta).sin_cos();
                    h += hm.cos * c + hm.sin * s;
                    dh += k * (hm.sin * c - hm.cos * s);
                    d2h -= k * k * (hm.cos * c + hm.sin * s);
                }
                let t = [-u[1], u[0]];
                out.value = h;
                for i in 0..2 {
                    out.gradient[i] = h * u[i] + dh * t[i];
                    for j in 0..2 {
                        out.hessian[i][j] = (h + d2h) * t[i] * t[j];
                    }
                }
            }
            Family::OddHarmonic3d { halfwidth, terms } => {
                add_norm(&mut out, *halfwidth);
                for term in terms {
                    // F = P(x) |x|^p with p = 1 - degree, evaluated at |x| = 1.
                    let p = 1.0 - term.spec.degree as f64;
                    let c = term.spec.coef;
                    let (pv, pg, ph) = poly_eval(&term.poly, u);
                    out.value += c * pv;
                    for i in 0..3 {
                        out.gradient[i] += c * (pg[i] + p * pv * u[i]);
                        for j in 0..3 {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            out.hessian[i][j] += c
                                * (ph[i][j] + p * (pg[i] * u[j] + u[i] * pg[j]) + p * pv * delta
                                    + p * (p - 2.0) * pv * u[i] * u[j]);
                        }
                    }
                }
            }
            Family::Projected { base, frame } => {
                let y = frame.embed(u);
                let e = base.evaluate_unchecked(&y);
                let vs = frame.vectors();
                let n = base.dim;
                out.value = e.value;
                for k in 0..d {
                    out.gradient[k] = (0..n).map(|a| vs[k][a] * e.gradient[a]).sum();
                    for l in 0..d {
                        out.hessian[k][l] = (0..n)
                            .map(|a| vs[k][a] * (0..n).map(|b| e.hessian[a][b] * vs[l][b]).sum::<f64>())
                            .sum();
                    }
                }
            }
        }
        out
    }

    /// Support function with gradient and Hessian at the unit vector `u`.
    pub fn evaluate(&self, u: &[f64]) -> Result<SupportEval> {
        check_unit(u, self.dim)?;
        Ok(self.evaluate_unchecked(u))
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        Ok(self.evaluate(u)?.value)
    }

    /// The boundary point with outer normal `u`.
    pub fn boundary_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(u)?.gradient[..self.dim].to_vec())
    }

    fn radii_unchecked(&self, u: &[f64]) -> Vec<f64> {
        let e = self.evaluate_unchecked(u);
        let basis = tangent_basis(u);
        let d = self.dim;
        let m: Vec<Vec<f64>> = basis
            .iter()
            .map(|a| {
                basis
                    .iter()
                    .map(|b| (0..d).map(|i| a[i] * (0..d).map(|j| e.hessian[i][j] * b[j]).sum::<f64>()).sum())
                    .collect()
            })
            .collect();
        symmetric_eigenvalues(&m)
    }

    /// Principal radii of curvature at the unit normal `u`, ascending.
    pub fn curvature_radii(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_unit(u, self.dim)?;
        let radii = self.radii_unchecked(u);
        match radii.first() {
            Some(&r) if !(r > 0.0) => Err(GeometryError::Convexity { direction: u.to_vec(), radius: r }),
            _ => Ok(radii),
        }
    }

    /// Checks the smallest radius over the validation grid against `margin`.
    fn certify(&self, margin: f64) -> Result<()> {
        let grid = QuadratureGrid::default_for(self.dim)?;
        for u in grid.nodes() {
            if let Some(&r) = self.radii_unchecked(u).first() {
                if !(r >= margin.max(EPS_CONVEX)) {
                    return Err(GeometryError::Convexity { direction: u.to_vec(), radius: r });
                }
            }
        }
        Ok(())
    }

    fn radii_checked(&self, u: &[f64]) -> Result<Vec<f64>> {
        let radii = self.radii_unchecked(u);
        match radii.first() {
            Some(&r) if !(r > 0.0) => Err(GeometryError::Convexity { direction: u.to_vec(), radius: r }),
            _ => Ok(radii),
        }
    }

    fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(GeometryError::Domain(format!(
                "grid dimension {} does not match body dimension {}",
                grid.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `M_i = ∫ s_{dim-1-i}(radii) dω` on the given grid.
    pub fn mean_curvature_integral_on(&self, grid: &QuadratureGrid, i: usize) -> Result<f64> {
        self.check_grid(grid)?;
        if i >= self.dim {
            return Err(GeometryError::Domain(format!("need 0 <= i <= {}, got i={i}", self.dim - 1)));
        }
        let j = self.dim - 1 - i;
        let norm = binomial_f64(self.dim - 1, j);
        grid.integrate(|u| Ok(elementary_symmetric(&self.radii_checked(u)?)[j] / norm))
    }

    pub fn mean_curvature_integral(&self, i: usize) -> Result<f64> {
        self.mean_curvature_integral_on(QuadratureGrid::default_for(self.dim)?, i)
    }

    /// `(1/dim) ∫ h · Π radii dω` on the given grid.
    pub fn volume_on(&self, grid: &QuadratureGrid) -> Result<f64> {
        self.check_grid(grid)?;
        let d = self.dim;
        let integral = grid.integrate(|u| {
            let radii = self.radii_checked(u)?;
            Ok(self.evaluate_unchecked(u).value * radii.iter().product::<f64>())
        })?;
        Ok(integral / d as f64)
    }

    pub fn volume(&self) -> Result<f64> {
        self.volume_on(QuadratureGrid::default_for(self.dim)?)
    }

    /// `h(u) + h(-u)`.
    pub fn width(&self, u: &[f64]) -> Result<f64> {
        check_unit(u, self.dim)?;
        let minus: Vec<f64> = u.iter().map(|x| -x).collect();
        Ok(self.evaluate_unchecked(u).value + self.evaluate_unchecked(&minus).value)
    }

    /// Smallest and largest width over the validation grid.
    pub fn width_range(&self) -> Result<(f64, f64)> {
        let grid = QuadratureGrid::default_for(self.dim)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for u in grid.nodes() {
            let w = self.width(u)?;
            lo = lo.min(w);
            hi = hi.max(w);
        }
        Ok((lo, hi))
    }

    pub fn is_constant_width(&self, tol: f64) -> Result<bool> {
        let (lo, hi) = self.width_range()?;
        Ok(hi - lo <= tol)
    }

    /// The common width when it is constant within `tol`.
    pub fn constant_width(&self, tol: f64) -> Result<Option<f64>> {
        let (lo, hi) = self.width_range()?;
        Ok((hi - lo <= tol).then_some(0.5 * (lo + hi)))
    }

    /// Volume of the parallel body at distance `rho` by hit-or-miss sampling
    /// in a bounding box. Membership uses the default grid's directions.
    pub fn mc_parallel_volume(&self, rho: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
        let grid = QuadratureGrid::default_for(self.dim)?;
        let d = self.dim;
        let dirs: Vec<(Vec<f64>, f64)> = grid
            .nodes()
            .map(|u| (u.to_vec(), self.evaluate_unchecked(u).value))
            .collect();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            hi[k] = self.support(&e)? + rho;
            e[k] = -1.0;
            lo[k] = -(self.support(&e)? + rho);
        }
        let box_volume: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
        let hits: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = sample_rng(seed, s);
                let x: Vec<f64> = (0..d).map(|k| rng.random_range(lo[k]..hi[k])).collect();
                let inside = dirs
                    .iter()
                    .all(|(u, h)| u.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - h <= rho);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let (mean, se) = mean_and_standard_error(&hits);
        Ok((box_volume * mean, box_volume * se))
    }
}

/// Binds every `VolProj`/`MciProj` atom of `poly` to the quadrature value of `proj`.
pub fn projection_bindings(poly: &FormulaPoly, proj: &SupportBody) -> Result<BTreeMap<Atom, f64>> {
    let mut bindings = BTreeMap::new();
    for atom in poly.atoms() {
        match atom {
            Atom::VolProj(_) => {
                bindings.insert(atom, proj.volume()?);
            }
            Atom::MciProj(_, i) => {
                bindings.insert(atom, proj.mean_curvature_integral(i as usize)?);
            }
            _ => {}
        }
    }
    Ok(bindings)
}

/// `M^{(n)}_q` of the `r`-dimensional body `proj` regarded as a flattened body of `n`-space.
pub fn flattened_mci(n: usize, proj: &SupportBody, q: usize) -> Result<f64> {
    let poly = santalo_project(n as i64, proj.dim() as i64, q as i64)?;
    let bindings = projection_bindings(&poly, proj)?;
    Ok(poly.eval(&bindings).map_err(FormulaError::from)?)
}

/// `M^{(n)}_l((K'_r)_ρ) = n W_{l+1}((K'_r)_ρ)`, Steiner-expanded over the
/// flattened quermassintegrals `W_k = M^{(n)}_{k-1}(∂K'_r)/n`, `W_0 = 0`,
/// `W_n = O_{n-1}/n`. Atoms left: `VolProj(r)`, `MciProj(r,·)` and `rho`.
pub fn flattened_oracle_polynomial(n: usize, r: usize, l: usize) -> Result<FormulaPoly> {
    if n < 2 || !(1..n).contains(&r) || l >= n {
        return Err(GeometryError::Domain(format!("(n={n}, r={r}, l={l}) needs 1 <= r <= n-1, 0 <= l <= n-1")));
    }
    let (ni, ri) = (n as i64, r as i64);
    let inv_n = Rational::new(1.into(), ni.into());
    let mut bindings = BTreeMap::new();
    for k in 0..=n {
        let value = if k == 0 {
            FormulaPoly::zero()
        } else if k == n {
            FormulaPoly::constant(sphere_area(ni - 1).map_err(FormulaError::from)?.scale(&inv_n))
        } else {
            santalo_project(ni, ri, k as i64 - 1)?.scale(&PiScalar::from_rational(inv_n.clone()))
        };
        bindings.insert(Atom::Quermass(n as u32, k as u32), value);
    }
    let steiner = steiner_quermass(ni, l as i64 + 1)?.scale(&PiScalar::from_int(ni));
    Ok(steiner.substitute(&bindings).map_err(FormulaError::from)?)
}

/// Numeric value of [`flattened_oracle_polynomial`] for the projection `proj`.
pub fn parallel_flattened_mci_oracle(n: usize, proj: &SupportBody, rho: f64, l: usize) -> Result<f64> {
    if !(finite(rho, "rho")? >= 0.0) {
        return Err(GeometryError::Domain(format!("rho must be >= 0, got {rho}")));
    }
    let poly = flattened_oracle_polynomial(n, proj.dim(), l)?;
    let mut bindings = projection_bindings(&poly, proj)?;
    bindings.insert(Atom::Rho, rho);
    Ok(poly.eval(&bindings).map_err(FormulaError::from)?)
}
