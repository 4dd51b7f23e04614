//! Uniform random `r`-planes through the origin and Monte Carlo integration
//! over the Grassmannian.
//!
//! Sample `k` of a run with seed `s` is drawn from its own ChaCha8 stream
//! `(s, k)`, and the per-sample values are reduced sequentially in index
//! order. Estimates are therefore bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{grassmann_measure, sphere_area};
use crate::geometry::{compensated_sum, GeometryError, SupportBody};
use crate::report::{errors, CheckReport, Config, ConfigValue, McRecord, Side, Sig17, Verdict};

/// Orthonormality tolerance on the Gram matrix.
pub const GRAM_TOLERANCE: f64 = 1e-12;
/// Redraws allowed for a rank-deficient Gaussian draw.
pub const MAX_REDRAWS: usize = 100;
/// Width of the statistical acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 4.0;
/// Relative floor under the statistical band, covering the quadrature error of
/// a deterministic reference value when the integrand is (nearly) constant.
pub const STAT_FLOOR_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrassmannError {
    #[error("invalid dimensions: {0}")]
    Domain(String),
    #[error("frame is not orthonormal (Gram deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("rank-deficient draw persisted after {MAX_REDRAWS} redraws")]
    Degenerate,
    #[error("non-finite integrand value {value} at frame {frame:?}")]
    NonFinite { value: f64, frame: Vec<Vec<f64>> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An orthonormal `r`-frame in `n`-space, spanning an `r`-plane through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFrame {
    n: usize,
    vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SubspaceFrame {
    /// Accepts `vectors` as given; rejects them if their Gram matrix is off
    /// the identity by more than [`GRAM_TOLERANCE`].
    pub fn from_vectors(n: usize, vectors: Vec<Vec<f64>>) -> Result<Self, GrassmannError> {
        if vectors.is_empty() || vectors.len() > n || vectors.iter().any(|v| v.len() != n) {
            return Err(GrassmannError::Domain(format!(
                "need 1..={n} vectors of length {n}, got {} vectors",
                vectors.len()
            )));
        }
        let frame = Self { n, vectors };
        let dev = frame.gram_deviation();
        if dev > GRAM_TOLERANCE || !dev.is_finite() {
            return Err(GrassmannError::NotOrthonormal(dev));
        }
        Ok(frame)
    }

    /// Modified Gram–Schmidt, applied twice; `None` for a (numerically) rank-deficient input.
    pub fn orthonormalize(n: usize, raw: &[Vec<f64>]) -> Option<Self> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
        for v in raw {
            let mut w = v.clone();
            let norm0 = dot(&w, &w).sqrt();
            for _ in 0..2 {
                for q in &out {
                    let p = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= p * qi);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if !(norm > 1e-10 * norm0.max(1e-300)) {
                return None;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            out.push(w);
        }
        Some(Self { n, vectors: out })
    }

    /// The plane spanned by the first `r` coordinate axes.
    pub fn coordinate(n: usize, r: usize) -> Result<Self, GrassmannError> {
        let vectors = (0..r)
            .map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_vectors(n, vectors)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `Σ_k coords[k] · vectors[k]`.
    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (c, v) in coords.iter().zip(&self.vectors) {
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
        }
        x
    }

    pub fn gram_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }
}

fn check_dims(n: usize, r: usize) -> Result<(), GrassmannError> {
    if n < 2 || r < 1 || r >= n {
        return Err(GrassmannError::Domain(format!("need 1 <= r <= n-1, got n={n}, r={r}")));
    }
    Ok(())
}

/// Rotation-invariant random `r`-plane: `r` standard Gaussian vectors, orthonormalized.
pub fn sample_subspace<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<SubspaceFrame, GrassmannError> {
    check_dims(n, r)?;
    for _ in 0..=MAX_REDRAWS {
        let raw: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        if let Some(frame) = SubspaceFrame::orthonormalize(n, &raw) {
            return Ok(frame);
        }
    }
    Err(GrassmannError::Degenerate)
}

/// The generator for sample `index` of the run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic frame `index` of the sequence with `seed`.
pub fn frame_at(n: usize, r: usize, seed: u64, index: u64) -> Result<SubspaceFrame, GrassmannError> {
    sample_subspace(n, r, &mut sample_rng(seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn record(&self) -> McRecord {
        McRecord {
            seed: self.seed,
            samples: self.samples,
            mean: Sig17(self.mean),
            standard_error: Sig17(self.standard_error),
        }
    }
}

/// Sample mean and standard error of the mean, reduced in index order.
pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / count;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// `∫_{G} f dL` over `r`-planes of `n`-space: `m(G) ×` the sample mean of `f`.
///
/// Runs on the current rayon pool; the result does not depend on its size.
pub fn mc_grassmann_integral<F, E>(
    f: F,
    n: usize,
    r: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, GrassmannError>
where
    F: Fn(&SubspaceFrame) -> Result<f64, E> + Sync,
    E: Into<GrassmannError> + Send,
{
    check_dims(n, r)?;
    if samples < 2 {
        return Err(GrassmannError::Domain(format!("need at least 2 samples, got {samples}")));
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let frame = frame_at(n, r, seed, k)?;
            let value = f(&frame).map_err(Into::into)?;
            if value.is_finite() {
                Ok(value)
            } else {
                Err(GrassmannError::NonFinite { value, frame: frame.vectors.clone() })
            }
        })
        .collect::<Result<_, GrassmannError>>()?;
    let (mean, se) = mean_and_standard_error(&values);
    let measure = grassmann_measure(n as i64, r as i64)
        .expect("dimensions checked")
        .to_f64();
    Ok(McEstimate {
        mean: measure * mean,
        standard_error: measure * se,
        samples,
        seed,
    })
}

/// Half-width of the acceptance band around a reference value.
pub fn statistical_band(standard_error: f64, reference: f64) -> f64 {
    SIGMA_BAND * standard_error + STAT_FLOOR_REL * reference.abs()
}

/// Quermassintegral `W_r` two ways: the mean projection volume onto random
/// `(n-r)`-planes against `M_{r-1}/n` from curvature quadrature.
pub fn kubota_check(body: &SupportBody, r: usize, samples: u64, seed: u64) -> Result<CheckReport, GrassmannError> {
    let n = body.dim();
    check_dims(n, r)?;
    let k = n - r;
    let integral = mc_grassmann_integral(
        |frame| body.project(frame).and_then(|p| p.volume()),
        n,
        k,
        samples,
        seed,
    )?;
    let measure = grassmann_measure(n as i64, k as i64).expect("checked").to_f64();
    // W_r = (n-r) O_{n-1} / (n O_{n-r-1}) · E[V(K'_{n-r})]
    let factor = (n - r) as f64 * sphere_area(n as i64 - 1).expect("n >= 2").to_f64()
        / (n as f64 * sphere_area((n - r) as i64 - 1).expect("n-r >= 1").to_f64());
    let lhs = factor * integral.mean / measure;
    let lhs_se = factor * integral.standard_error / measure;
    let rhs = body.mean_curvature_integral(r - 1)? / n as f64;
    let (abs_error, rel_error) = errors(lhs, rhs);
    let band = statistical_band(lhs_se, rhs);
    Ok(CheckReport {
        check_id: "kubota".into(),
        config: Config::from([
            ("body".to_string(), ConfigValue::Body(body.to_spec())),
            ("n".to_string(), ConfigValue::Int(n as i64)),
            ("r".to_string(), ConfigValue::Int(r as i64)),
            ("samples".to_string(), ConfigValue::Int(samples as i64)),
            ("seed".to_string(), ConfigValue::Int(seed as i64)),
        ]),
        lhs: Side::Real(lhs),
        rhs: Side::Real(rhs),
        abs_error,
        rel_error,
        tolerance: format!("{SIGMA_BAND} sigma + rel {STAT_FLOOR_REL:e}"),
        verdict: if abs_error <= band { Verdict::Pass } else { Verdict::Fail },
        exact_residual: None,
        monte_carlo: Some(McEstimate { mean: lhs, standard_error: lhs_se, ..integral }.record()),
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        for (n, r) in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (6, 4)] {
            for k in 0..200 {
                let f = frame_at(n, r, 7, k).unwrap();
                assert_eq!(f.rank(), r);
                assert!(f.gram_deviation() < GRAM_TOLERANCE, "n={n} r={r} dev={}", f.gram_deviation());
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a: Vec<_> = (0..20).map(|k| frame_at(4, 2, 42, k).unwrap()).collect();
        let b: Vec<_> = (0..20).map(|k| frame_at(4, 2, 42, k).unwrap()).collect();
        assert_eq!(a, b);
        assert_ne!(frame_at(4, 2, 43, 0).unwrap(), a[0]);
    }

    #[test]
    fn squared_projection_has_mean_one_over_n() {
        // E|P a|^2 = r/n for a fixed unit a; r = 1 and r = n-1 cover both ends.
        let samples = 100_000u64;
        for (n, r) in [(3usize, 1usize), (3, 2), (4, 1), (4, 3)] {
            let a: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
            let values: Vec<f64> = (0..samples)
                .map(|k| {
                    let f = frame_at(n, r, 11, k).unwrap();
                    f.vectors().iter().map(|v| dot(v, &a).powi(2)).sum()
                })
                .collect();
            let (mean, se) = mean_and_standard_error(&values);
            let expected = r as f64 / n as f64;
            assert!((mean - expected).abs() <= 4.0 * se, "n={n} r={r}: {mean} vs {expected} (se {se})");
        }
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(matches!(
            SubspaceFrame::from_vectors(3, vec![vec![1.0, 0.0, 0.0], vec![1.0, 1e-6, 0.0]]),
            Err(GrassmannError::NotOrthonormal(_))
        ));
        assert!(SubspaceFrame::from_vectors(3, vec![vec![1.0, 0.0]]).is_err());
        assert!(SubspaceFrame::orthonormalize(3, &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).is_none());
        assert!(frame_at(3, 3, 0, 0).is_err());
    }

    #[test]
    fn constant_integrand_gives_the_measure() {
        let est = mc_grassmann_integral(|_| Ok::<_, GrassmannError>(1.0), 3, 2, 1000, 5).unwrap();
        assert!((est.mean - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(est.standard_error, 0.0);
        assert!(mc_grassmann_integral(|_| Ok::<_, GrassmannError>(1.0), 3, 2, 1, 5).is_err());
    }

    #[test]
    fn non_finite_values_abort_with_the_frame() {
        let err = mc_grassmann_integral(|_| Ok::<_, GrassmannError>(f64::NAN), 3, 1, 10, 0).unwrap_err();
        match err {
            GrassmannError::NonFinite { frame, .. } => assert_eq!(frame.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn estimate_independent_of_worker_count() {
        let f = |frame: &SubspaceFrame| Ok::<_, GrassmannError>(frame.vectors()[0][0].powi(2) + frame.vectors()[1][2]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_grassmann_integral(f, 4, 2, 5000, 99).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(2));
        assert_eq!(one, run(8));
    }
}
