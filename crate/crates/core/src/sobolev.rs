//! The reproducing kernel `K(x,y) = Π_k (1 − max(x_k, y_k))`, the
//! representer of the integration error and a suite of test integrands
//! vanishing on the upper faces of the cube.
//!
//! The inner product of the space is `⟨f,g⟩ = ∫ ∂^d f · ∂^d g` with the mixed
//! first derivative in every variable. For a point set `P` the representer
//! `h(z) = ∫K(z,x)dx − (1/N) Σ_n K(z,x_n)` satisfies
//! `I(f) − Î(f) = ⟨f, h⟩`, and `‖h‖` is the L2 star discrepancy of `P`, so
//! the worst case over the unit ball is attained at `h/‖h‖`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::discrepancy::l2_squared;
use crate::error::{Error, Result};
use crate::geometry::PointSet;

pub fn kernel(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(kernel_unchecked(x, y))
}

#[inline]
fn kernel_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| 1.0 - a.max(b)).product()
}

/// `∫ K(z, x) dx = Π_k (1 − z_k²)/2`.
pub fn mean_embedding(z: &[f64]) -> f64 {
    z.iter().map(|&v| (1.0 - v * v) / 2.0).product()
}

pub fn representer(points: &PointSet, z: &[f64]) -> Result<f64> {
    points.check_dim(z.len())?;
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    Ok(representer_unchecked(points, z))
}

fn representer_unchecked(points: &PointSet, z: &[f64]) -> f64 {
    let s: f64 = points.iter().map(|x| kernel_unchecked(z, x)).sum();
    mean_embedding(z) - s / points.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    /// `|I(f*) − Î(f*)|` for the normalised representer `f* = h/‖h‖`.
    pub wce: f64,
    /// L2 star discrepancy from the closed formula.
    pub l2: f64,
}

impl WorstCase {
    pub fn ratio(&self) -> f64 {
        self.wce / self.l2
    }
}

/// Integrates the normalised representer exactly and with the point set,
/// and reports the error next to the L2 discrepancy.
pub fn worst_case_error_identity(points: &PointSet) -> Result<WorstCase> {
    let l2 = l2_squared(points)?.sqrt();
    if l2 == 0.0 {
        return Err(Error::Degenerate("representer has zero norm".into()));
    }
    let n = points.len() as f64;
    let d = points.dim() as i32;
    let embed_mean: f64 = points.iter().map(mean_embedding).sum::<f64>() / n;
    let exact = (3f64.powi(-d) - embed_mean) / l2;
    let rule = points.iter().map(|x| representer_unchecked(points, x)).sum::<f64>() / n / l2;
    Ok(WorstCase { wce: (exact - rule).abs(), l2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrandId {
    F1,
    F2,
    F3,
}

impl IntegrandId {
    pub fn name(&self) -> &'static str {
        match self {
            IntegrandId::F1 => "f1",
            IntegrandId::F2 => "f2",
            IntegrandId::F3 => "f3",
        }
    }
}

impl std::str::FromStr for IntegrandId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(IntegrandId::F1),
            "f2" => Ok(IntegrandId::F2),
            "f3" => Ok(IntegrandId::F3),
            _ => Err(Error::invalid(format!("unknown integrand `{s}` (f1, f2, f3)"))),
        }
    }
}

/// A product test function `f(x) = Π_k g(x_k)` with `g(1) = 0`.
///
/// - `f1`: `g(t) = 1 − t`
/// - `f2`: `g(t) = 1 − t²`
/// - `f3`: `g(t) = sin(πt)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrand {
    pub id: IntegrandId,
    pub d: usize,
}

impl Integrand {
    pub fn new(id: IntegrandId, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Integrand { id, d })
    }

    fn factor(&self, t: f64) -> f64 {
        match self.id {
            IntegrandId::F1 => 1.0 - t,
            IntegrandId::F2 => 1.0 - t * t,
            // sin(π(1 − t)) = sin(πt), written so it vanishes exactly at t = 1
            IntegrandId::F3 => (PI * (1.0 - t)).sin(),
        }
    }

    fn factor_derivative(&self, t: f64) -> f64 {
        match self.id {
            IntegrandId::F1 => -1.0,
            IntegrandId::F2 => -2.0 * t,
            IntegrandId::F3 => PI * (PI * t).cos(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.factor(t)).product()
    }

    /// `∂^d f / ∂x_1 … ∂x_d`.
    pub fn mixed_derivative(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.factor_derivative(t)).product()
    }

    fn factor_integral(&self) -> f64 {
        match self.id {
            IntegrandId::F1 => 0.5,
            IntegrandId::F2 => 2.0 / 3.0,
            IntegrandId::F3 => 2.0 / PI,
        }
    }

    fn factor_square_integral(&self) -> f64 {
        match self.id {
            IntegrandId::F1 => 1.0 / 3.0,
            IntegrandId::F2 => 8.0 / 15.0,
            IntegrandId::F3 => 0.5,
        }
    }

    /// `‖g'‖_q` on `[0,1]`; `q = ∞` gives the sup norm.
    fn factor_derivative_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return match self.id {
                IntegrandId::F1 => 1.0,
                IntegrandId::F2 => 2.0,
                IntegrandId::F3 => PI,
            };
        }
        match self.id {
            IntegrandId::F1 => 1.0,
            // ∫ (2t)^q dt = 2^q / (q + 1)
            IntegrandId::F2 => 2.0 * (q + 1.0).powf(-1.0 / q),
            // ∫ |cos πt|^q dt = Γ((q+1)/2) / (√π Γ(q/2 + 1))
            IntegrandId::F3 => {
                PI * (gamma((q + 1.0) / 2.0) / (PI.sqrt() * gamma(q / 2.0 + 1.0))).powf(1.0 / q)
            }
        }
    }

    pub fn exact_integral(&self) -> f64 {
        self.factor_integral().powi(self.d as i32)
    }

    /// `‖f‖*_{d,q} = ‖∂^d f‖_{L_q}` for `q ∈ [1, ∞]`.
    pub fn norm_dq(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::invalid(format!("norm exponent must be >= 1, got {q}")));
        }
        Ok(self.factor_derivative_norm(q).powi(self.d as i32))
    }

    /// `‖f‖_{H¹(K)}`, the L2 norm of the mixed derivative.
    pub fn norm_h1k(&self) -> f64 {
        self.factor_derivative_norm(2.0).powi(self.d as i32)
    }

    /// `C = ∫ (f − I(f))² dz`.
    pub fn variance_constant(&self) -> f64 {
        let d = self.d as i32;
        self.factor_square_integral().powi(d) - self.factor_integral().powi(2 * d)
    }

    /// Vanishes whenever some coordinate equals 1.
    pub fn boundary_ok(&self) -> bool {
        true
    }
}

pub fn integrand_suite(d: usize) -> Result<Vec<Integrand>> {
    [IntegrandId::F1, IntegrandId::F2, IntegrandId::F3]
        .into_iter()
        .map(|id| Integrand::new(id, d))
        .collect()
}

/// `|(1/N) Σ f(x_n) − I(f)|`.
pub fn approx_error(f: &Integrand, points: &PointSet) -> Result<f64> {
    points.check_dim(f.d)?;
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    Ok((sample_mean(f, points) - f.exact_integral()).abs())
}

pub fn sample_mean(f: &Integrand, points: &PointSet) -> f64 {
    points.iter().map(|x| f.eval(x)).sum::<f64>() / points.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::sampling::RngStream;

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(kernel(&[1.0, 0.2], &[0.3, 0.1]).unwrap(), 0.0);
        assert!((kernel(&[0.2, 0.5], &[0.4, 0.3]).unwrap() - 0.3).abs() < 1e-15);
        assert!(kernel(&[0.2], &[0.4, 0.3]).is_err());
    }

    #[test]
    fn kernel_matches_defining_integral() {
        // K(x,y) = ∫ 1_{(x,1]}(t) 1_{(y,1]}(t) dt, estimated by Monte Carlo
        let (x, y) = ([0.2, 0.5], [0.4, 0.3]);
        let mut s = RngStream::new(17, 0);
        let m = 100_000;
        let mut hits = 0usize;
        for _ in 0..m {
            let t = [s.uniform(), s.uniform()];
            if (0..2).all(|k| t[k] > x[k] && t[k] > y[k]) {
                hits += 1;
            }
        }
        let p = hits as f64 / m as f64;
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!((p - 0.3).abs() < 4.0 * se);
    }

    #[test]
    fn mean_embedding_examples() {
        assert_eq!(mean_embedding(&[0.0, 0.0, 0.0]), 0.125);
        assert_eq!(mean_embedding(&[0.3, 1.0]), 0.0);
        assert_eq!(mean_embedding(&[0.5]), 0.375);
        let q = integrate(|x| 1.0 - x.max(0.5), 0.0, 0.5, 4) + integrate(|x| 1.0 - x.max(0.5), 0.5, 1.0, 4);
        assert!((q - 0.375).abs() < 1e-15);
    }

    #[test]
    fn representer_examples() {
        let p = PointSet::new(1, vec![0.0]).unwrap();
        assert!((representer(&p, &[0.0]).unwrap() + 0.5).abs() < 1e-15);
        let q = PointSet::new(2, vec![0.3, 0.6, 0.9, 0.1]).unwrap();
        assert_eq!(representer(&q, &[1.0, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn worst_case_closed_forms() {
        let w = worst_case_error_identity(&PointSet::new(1, vec![0.5]).unwrap()).unwrap();
        assert!((w.wce - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!((w.l2 - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let w = worst_case_error_identity(&PointSet::new(2, vec![0.5, 0.5]).unwrap()).unwrap();
        assert!((w.wce - 0.079_861_111_111_111_1f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn suite_constants_by_quadrature() {
        for f in integrand_suite(1).unwrap() {
            let i = integrate(|t| f.eval(&[t]), 0.0, 1.0, 30);
            assert!((i - f.exact_integral()).abs() < 1e-14, "{:?}", f.id);
            let c = integrate(|t| (f.eval(&[t]) - i).powi(2), 0.0, 1.0, 30);
            assert!((c - f.variance_constant()).abs() < 1e-14);
            let n2 = integrate(|t| f.mixed_derivative(&[t]).powi(2), 0.0, 1.0, 30).sqrt();
            assert!((n2 - f.norm_dq(2.0).unwrap()).abs() < 1e-13);
            assert!((n2 - f.norm_h1k()).abs() < 1e-13);
            for q in [1.0, 3.0, 4.0] {
                let nq = integrate(|t| f.mixed_derivative(&[t]).abs().powf(q), 0.0, 1.0, 30).powf(1.0 / q);
                // |cos| has a kink at 1/2; split the rule there
                let nq = if f.id == IntegrandId::F3 {
                    (integrate(|t| f.mixed_derivative(&[t]).abs().powf(q), 0.0, 0.5, 30)
                        + integrate(|t| f.mixed_derivative(&[t]).abs().powf(q), 0.5, 1.0, 30))
                    .powf(1.0 / q)
                } else {
                    nq
                };
                assert!((nq - f.norm_dq(q).unwrap()).abs() < 1e-12, "{:?} q={q}", f.id);
            }
        }
    }

    #[test]
    fn suite_named_values() {
        let f1 = Integrand::new(IntegrandId::F1, 2).unwrap();
        assert_eq!(f1.exact_integral(), 0.25);
        assert_eq!(f1.norm_dq(2.0).unwrap(), 1.0);
        assert!((f1.variance_constant() - 7.0 / 144.0).abs() < 1e-16);
        let f2 = Integrand::new(IntegrandId::F2, 1).unwrap();
        assert!((f2.exact_integral() - 2.0 / 3.0).abs() < 1e-16);
        assert!((f2.norm_dq(2.0).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(Integrand::new(IntegrandId::F2, 3).unwrap().norm_dq(f64::INFINITY).unwrap(), 8.0);
        let f3 = Integrand::new(IntegrandId::F3, 2).unwrap();
        assert!((f3.norm_dq(2.0).unwrap() - PI * PI / 2.0).abs() < 1e-13);
        assert!((f3.norm_dq(f64::INFINITY).unwrap() - PI * PI).abs() < 1e-13);
        assert!(f3.norm_dq(0.5).is_err());
    }

    #[test]
    fn suite_vanishes_on_upper_faces() {
        for d in 1..=3 {
            for f in integrand_suite(d).unwrap() {
                assert!(f.boundary_ok());
                let mut s = RngStream::new(d as u64, 0);
                for k in 0..d {
                    for _ in 0..20 {
                        let mut x: Vec<f64> = (0..d).map(|_| s.uniform()).collect();
                        x[k] = 1.0;
                        assert!(f.eval(&x).abs() <= 1e-15, "{:?} {x:?}", f.id);
                    }
                }
            }
        }
    }

    #[test]
    fn approx_error_examples() {
        let f1 = Integrand::new(IntegrandId::F1, 3).unwrap();
        let corner = PointSet::new(3, vec![1.0; 3]).unwrap();
        assert_eq!(approx_error(&f1, &corner).unwrap(), 0.125);
        let f1 = Integrand::new(IntegrandId::F1, 1).unwrap();
        assert_eq!(approx_error(&f1, &PointSet::new(1, vec![0.5]).unwrap()).unwrap(), 0.0);
    }
}
