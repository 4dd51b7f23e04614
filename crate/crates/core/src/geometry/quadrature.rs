//! Direction grids on `S^0`, `S^1` and `S^2` with positive weights.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use super::{GeometryError, Vector, MAX_DIM};

/// Nodes per rayon task; keeps small grids on one thread.
const MIN_CHUNK: usize = 256;

/// Default resolution: nodes on the circle, Gauss–Legendre order on the sphere.
pub const DEFAULT_CIRCLE_NODES: usize = 128;
pub const DEFAULT_SPHERE_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<Vector>,
    weights: Vec<f64>,
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl QuadratureGrid {
    /// The two points of `S^0`, weight 1 each.
    pub fn points() -> Self {
        let mut plus = [0.0; MAX_DIM];
        let mut minus = [0.0; MAX_DIM];
        plus[0] = 1.0;
        minus[0] = -1.0;
        Self { dim: 1, resolution: 2, nodes: vec![plus, minus], weights: vec![1.0, 1.0] }
    }

    /// `count` equally spaced directions at angles `2π(k + 1/2)/count`.
    pub fn circle(count: usize) -> Result<Self, GeometryError> {
        if count < 3 {
            return Err(GeometryError::Domain(format!("circle grid needs >= 3 nodes, got {count}")));
        }
        let step = 2.0 * PI / count as f64;
        let nodes = (0..count)
            .map(|k| {
                let theta = step * (k as f64 + 0.5);
                let mut u = [0.0; MAX_DIM];
                u[0] = theta.cos();
                u[1] = theta.sin();
                u
            })
            .collect();
        Ok(Self { dim: 2, resolution: count, nodes, weights: vec![step; count] })
    }

    /// Gauss–Legendre of `order` in the polar cosine times `2·order`
    /// equally spaced azimuths. No node sits on a pole.
    pub fn sphere(order: usize) -> Result<Self, GeometryError> {
        let degree = NonZeroUsize::new(order)
            .filter(|d| d.get() >= 2)
            .ok_or_else(|| GeometryError::Domain(format!("sphere grid needs order >= 2, got {order}")))?;
        let rule = GaussLegendre::new(degree);
        let azimuths = 2 * order;
        let step = 2.0 * PI / azimuths as f64;
        let mut nodes = Vec::with_capacity(order * azimuths);
        let mut weights = Vec::with_capacity(order * azimuths);
        for &(z, w) in rule.iter() {
            let s = (1.0 - z * z).max(0.0).sqrt();
            for k in 0..azimuths {
                let phi = step * (k as f64 + 0.5);
                let mut u = [0.0; MAX_DIM];
                u[0] = s * phi.cos();
                u[1] = s * phi.sin();
                u[2] = z;
                nodes.push(u);
                weights.push(w * step);
            }
        }
        Ok(Self { dim: 3, resolution: order, nodes, weights })
    }

    /// Grid of the given resolution for `dim` (ignored for `dim = 1`).
    pub fn with_resolution(dim: usize, resolution: usize) -> Result<Self, GeometryError> {
        match dim {
            1 => Ok(Self::points()),
            2 => Self::circle(resolution),
            3 => Self::sphere(resolution),
            _ => Err(GeometryError::Unsupported(format!("no quadrature grid in dimension {dim}"))),
        }
    }

    /// Shared default grid for `dim ∈ {1,2,3}`.
    pub fn default_for(dim: usize) -> Result<&'static Self, GeometryError> {
        static POINTS: OnceLock<QuadratureGrid> = OnceLock::new();
        static CIRCLE: OnceLock<QuadratureGrid> = OnceLock::new();
        static SPHERE: OnceLock<QuadratureGrid> = OnceLock::new();
        match dim {
            1 => Ok(POINTS.get_or_init(Self::points)),
            2 => Ok(CIRCLE.get_or_init(|| Self::circle(DEFAULT_CIRCLE_NODES).expect("valid size"))),
            3 => Ok(SPHERE.get_or_init(|| Self::sphere(DEFAULT_SPHERE_ORDER).expect("valid order"))),
            _ => Err(GeometryError::Unsupported(format!("no quadrature grid in dimension {dim}"))),
        }
    }

    /// The same grid with every node mapped through the orthogonal `rotation`
    /// (rows are the images of the coordinate axes).
    pub fn rotated(&self, rotation: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let d = self.dim;
        let ok = rotation.len() == d
            && rotation.iter().all(|row| row.len() == d)
            && (0..d).all(|i| {
                (0..d).all(|j| {
                    let g: f64 = (0..d).map(|k| rotation[i][k] * rotation[j][k]).sum();
                    (g - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-12
                })
            });
        if !ok {
            return Err(GeometryError::Domain("rotation must be an orthogonal dim x dim matrix".into()));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|u| {
                let mut v = [0.0; MAX_DIM];
                for (k, row) in rotation.iter().enumerate() {
                    for j in 0..d {
                        v[j] += u[k] * row[j];
                    }
                }
                v
            })
            .collect();
        Ok(Self { nodes, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        let d = self.dim;
        self.nodes.iter().map(move |u| &u[..d])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_k f(u_k)`: parallel map over nodes, compensated sum in node order.
    pub fn integrate<F>(&self, f: F) -> Result<f64, GeometryError>
    where
        F: Fn(&[f64]) -> Result<f64, GeometryError> + Sync,
    {
        let d = self.dim;
        let values: Vec<f64> = self
            .nodes
            .par_iter()
            .with_min_len(MIN_CHUNK)
            .zip(self.weights.par_iter())
            .map(|(u, w)| f(&u[..d]).map(|v| v * w))
            .collect::<Result<_, _>>()?;
        Ok(compensated_sum(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sphere_area() {
        let cases = [
            (QuadratureGrid::points(), 2.0),
            (QuadratureGrid::circle(7).unwrap(), 2.0 * PI),
            (QuadratureGrid::circle(128).unwrap(), 2.0 * PI),
            (QuadratureGrid::sphere(5).unwrap(), 4.0 * PI),
            (QuadratureGrid::sphere(48).unwrap(), 4.0 * PI),
        ];
        for (grid, area) in cases {
            assert!(grid.weights().iter().all(|&w| w > 0.0));
            let total = compensated_sum(grid.weights().iter().copied());
            assert!((total - area).abs() <= 1e-13 * area, "{total} vs {area}");
        }
    }

    #[test]
    fn nodes_are_unit_and_avoid_poles() {
        let grid = QuadratureGrid::sphere(16).unwrap();
        for u in grid.nodes() {
            let norm: f64 = u.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-14);
            assert!(u[2].abs() < 1.0 - 1e-6);
        }
    }

    #[test]
    fn sphere_grid_integrates_polynomials() {
        // ∫ z^2 = 4π/3, ∫ x^2 y^2 = 4π/15.
        let grid = QuadratureGrid::sphere(8).unwrap();
        let z2 = grid.integrate(|u| Ok(u[2] * u[2])).unwrap();
        let x2y2 = grid.integrate(|u| Ok(u[0] * u[0] * u[1] * u[1])).unwrap();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((x2y2 - 4.0 * PI / 15.0).abs() < 1e-13);
    }

    #[test]
    fn rotation_preserves_integrals() {
        let grid = QuadratureGrid::sphere(12).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = vec![vec![c, 0.0, s], vec![0.0, 1.0, 0.0], vec![-s, 0.0, c]];
        let rotated = grid.rotated(&rot).unwrap();
        let f = |u: &[f64]| Ok(u[0].powi(4) + u[1] * u[2]);
        let a = grid.integrate(f).unwrap();
        let b = rotated.integrate(f).unwrap();
        assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        assert!(grid.rotated(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn compensated_sum_is_accurate() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16, 1.0]), 2.0);
    }

    #[test]
    fn rejects_bad_resolutions() {
        assert!(QuadratureGrid::circle(2).is_err());
        assert!(QuadratureGrid::sphere(1).is_err());
        assert!(QuadratureGrid::default_for(4).is_err());
    }
}
