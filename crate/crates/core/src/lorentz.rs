//! Decreasing rearrangement and Lorentz quasi-norms for grid functions.
//!
//! A grid function is a simple function with atom measure `1/n^2`, so every
//! Lorentz integral below is segment-exact: for the step function `f*`,
//! `||f||_{p,r}^r = sum_i v_i^r (p/r) (t_i^{r/p} - t_{i-1}^{r/p})`, and for
//! `r = infinity` the sup over a constant segment is attained at its right
//! endpoint. No quadrature error enters the inequality checks.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::PhysicalVectorField;
use crate::norms::Compensated;

/// Decreasing rearrangement of `|f|` as a merged step function: values are
/// strictly decreasing, measures positive and summing to 1.
#[derive(Debug, Clone)]
pub struct RearrangementProfile {
    values: Vec<f64>,
    measures: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RearrangementProfile {
    /// Profile of a scalar grid function; each cell contributes `1/n^2`.
    pub fn from_scalar(f: &Array2<f64>) -> Self {
        let atom = 1.0 / f.len() as f64;
        let mut v: Vec<f64> = f.iter().map(|x| x.abs()).collect();
        v.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite values"));
        let mut values = Vec::new();
        let mut measures = Vec::new();
        for x in v {
            match values.last() {
                // Ties merge into one segment.
                Some(&last) if last == x => *measures.last_mut().unwrap() += atom,
                _ => {
                    values.push(x);
                    measures.push(atom);
                }
            }
        }
        Self::from_parts(values, measures)
    }

    /// Build directly from `(value, measure)` steps; values must be
    /// non-increasing and measures must sum to 1.
    pub fn from_steps(steps: &[(f64, f64)]) -> Self {
        let mut values = Vec::with_capacity(steps.len());
        let mut measures = Vec::with_capacity(steps.len());
        for &(v, mu) in steps {
            assert!(v >= 0.0 && mu > 0.0, "steps need v >= 0 and mu > 0");
            if let Some(&last) = values.last() {
                assert!(v <= last, "values must be non-increasing");
            }
            values.push(v);
            measures.push(mu);
        }
        Self::from_parts(values, measures)
    }

    fn from_parts(values: Vec<f64>, measures: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(measures.len());
        let mut acc = Compensated::new();
        for &mu in &measures {
            acc.add(mu);
            cumulative.push(acc.value());
        }
        let total = cumulative.last().copied().unwrap_or(0.0);
        debug_assert!(
            (total - 1.0).abs() <= 1e-12,
            "measures must tile the torus, got {total}"
        );
        Self {
            values,
            measures,
            cumulative,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Rearrangement preserves the L2 mass: `sum v_i^2 mu_i = ||f||_2^2`.
    pub fn l2_sq(&self) -> f64 {
        let mut acc = Compensated::new();
        for (v, mu) in self.values.iter().zip(&self.measures) {
            acc.add(v * v * mu);
        }
        acc.value()
    }

    /// Segment-exact Lorentz quasi-norm; `r = f64::INFINITY` selects the
    /// weak norm `max_i t_i^{1/p} v_i`.
    pub fn lorentz_norm(&self, p: f64, r: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidFirstExponent(p));
        }
        if !(r >= 1.0) {
            return Err(Error::InvalidSecondExponent(r));
        }
        if r.is_infinite() {
            let mut best = 0.0_f64;
            for (v, t) in self.values.iter().zip(&self.cumulative) {
                best = best.max(t.powf(1.0 / p) * v);
            }
            return Ok(best);
        }
        let mut acc = Compensated::new();
        let mut t_prev = 0.0_f64;
        for (v, &t) in self.values.iter().zip(&self.cumulative) {
            if *v > 0.0 {
                acc.add(v.powf(r) * (p / r) * (t.powf(r / p) - t_prev.powf(r / p)));
            }
            t_prev = t;
        }
        Ok(acc.value().powf(1.0 / r))
    }
}

pub fn decreasing_rearrangement(f: &Array2<f64>) -> RearrangementProfile {
    RearrangementProfile::from_scalar(f)
}

pub fn lorentz_norm(f: &Array2<f64>, p: f64, r: f64) -> Result<f64> {
    RearrangementProfile::from_scalar(f).lorentz_norm(p, r)
}

/// Lorentz norm of a velocity field via its pointwise Euclidean magnitude.
pub fn lorentz_norm_of_vector(v: &PhysicalVectorField, p: f64, r: f64) -> Result<f64> {
    lorentz_norm(&v.magnitude(), p, r)
}

/// Embedding constant in `||f||_{p,r2} <= C ||f||_{p,r1}` for `r1 <= r2` on
/// unit measure: `C = (r1/p)^{(1/r1)(1 - r1/r2)}`. Derived by chaining the
/// weak-norm bound `||f||_{p,inf} <= (r1/p)^{1/r1} ||f||_{p,r1}` through the
/// Hoelder split of the r2-integral.
pub fn embedding_bound(p: f64, r1: f64, r2: f64) -> f64 {
    let tail = if r2.is_infinite() { 1.0 } else { 1.0 - r1 / r2 };
    (r1 / p).powf(tail / r1)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EmbeddingCheck {
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Check `||f||_{2,2} <= (q/2)^{(1/q)(1-q/2)} ||f||_{2,q}` for `q` in (1,2).
pub fn embedding_ratio_check(f: &Array2<f64>, q: f64) -> Result<EmbeddingCheck> {
    if !(q > 1.0 && q < 2.0) {
        return Err(Error::InvalidEmbeddingExponent(q));
    }
    let profile = RearrangementProfile::from_scalar(f);
    let l22 = profile.lorentz_norm(2.0, 2.0)?;
    let l2q = profile.lorentz_norm(2.0, q)?;
    let ratio = if l2q == 0.0 { 0.0 } else { l22 / l2q };
    let bound = embedding_bound(2.0, q, 2.0);
    Ok(EmbeddingCheck {
        ratio,
        bound,
        pass: ratio <= bound * (1.0 + 1e-10),
    })
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ProductCheck {
    /// `||w z||_1`
    pub lhs: f64,
    /// `||w||_{2,1} ||z||_{2,inf}`
    pub rhs_factor: f64,
    /// `lhs / rhs_factor` (zero when both vanish)
    pub ratio: f64,
    /// `||w z||_2`
    pub product_l2: f64,
    /// `||w||_inf ||z||_2`
    pub linf_times_l2: f64,
    /// The elementary estimate `||wz||_2 <= ||w||_inf ||z||_2`, which holds
    /// with no analytic slack; the tolerance covers rounding only.
    pub l2_pass: bool,
}

pub fn product_l1_check(w: &Array2<f64>, z: &Array2<f64>) -> Result<ProductCheck> {
    assert_eq!(w.dim(), z.dim(), "fields must share a grid");
    let product = w * z;
    let lhs = crate::norms::l1_norm(&product);
    let rhs_factor = lorentz_norm(w, 2.0, 1.0)? * lorentz_norm(z, 2.0, f64::INFINITY)?;
    let ratio = if rhs_factor == 0.0 { 0.0 } else { lhs / rhs_factor };
    let product_l2 = crate::norms::l2_norm(&product);
    let linf_times_l2 = crate::norms::linf_norm(w) * crate::norms::l2_norm(z);
    Ok(ProductCheck {
        lhs,
        rhs_factor,
        ratio,
        product_l2,
        linf_times_l2,
        l2_pass: product_l2 <= linf_times_l2 * (1.0 + 1e-13),
    })
}

/// Indicator of the first `cells` grid cells (measure `cells / n^2`).
pub fn indicator_field(n: usize, cells: usize) -> Array2<f64> {
    assert!(cells <= n * n);
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i * n + j < cells {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_profile_is_a_single_step() {
        let f = indicator_field(8, 16);
        let p = RearrangementProfile::from_scalar(&f);
        assert_eq!(p.values(), &[1.0, 0.0]);
        assert!((p.measures()[0] - 0.25).abs() < 1e-15);
        assert!((p.cumulative().last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_profile_is_one_segment() {
        let f = Array2::from_elem((8, 8), -2.0);
        let p = RearrangementProfile::from_scalar(&f);
        assert_eq!(p.values(), &[2.0]);
        assert!((p.measures()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_norms_match_closed_forms() {
        for (n, cells) in [(8, 1), (8, 16), (8, 64)] {
            let a = cells as f64 / (n * n) as f64;
            let f = indicator_field(n, cells);
            for q in [1.0_f64, 1.1, 1.5, 1.9, 2.0] {
                let expected = (2.0 / q).powf(1.0 / q) * a.sqrt();
                let got = lorentz_norm(&f, 2.0, q).unwrap();
                assert!(
                    (got - expected).abs() <= 1e-12 * expected,
                    "q={q} a={a}: {got} vs {expected}"
                );
            }
            let weak = lorentz_norm(&f, 2.0, f64::INFINITY).unwrap();
            assert!((weak - a.sqrt()).abs() <= 1e-12 * a.sqrt());
        }
    }

    #[test]
    fn l22_equals_l2() {
        let f = Array2::from_shape_fn((16, 16), |(i, j)| {
            ((i * 7 + j * 13) as f64).sin() + 0.1
        });
        let l22 = lorentz_norm(&f, 2.0, 2.0).unwrap();
        let l2 = crate::norms::l2_norm(&f);
        assert!((l22 - l2).abs() <= 1e-12 * l2);
        let p = RearrangementProfile::from_scalar(&f);
        assert!((p.l2_sq() - l2 * l2).abs() <= 1e-12 * l2 * l2);
    }

    #[test]
    fn invalid_exponents_are_rejected() {
        let f = indicator_field(4, 4);
        assert!(lorentz_norm(&f, 0.9, 2.0).is_err());
        assert!(lorentz_norm(&f, 2.0, 0.5).is_err());
        assert!(embedding_ratio_check(&f, 1.0).is_err());
        assert!(embedding_ratio_check(&f, 2.0).is_err());
    }

    #[test]
    fn embedding_check_on_indicator() {
        // ratio = (q/2)^{1/q}, strictly below the chained bound.
        for q in [1.1, 1.5, 1.9] {
            let f = indicator_field(8, 16);
            let c = embedding_ratio_check(&f, q).unwrap();
            let expected = (q / 2.0).powf(1.0 / q);
            assert!((c.ratio - expected).abs() < 1e-12);
            assert!(c.ratio < c.bound && c.pass);
            // Constant field = indicator of full measure: same ratio.
            let g = Array2::from_elem((8, 8), 3.0);
            let cg = embedding_ratio_check(&g, q).unwrap();
            assert!((cg.ratio - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_is_harmless() {
        let f = Array2::zeros((8, 8));
        let c = embedding_ratio_check(&f, 1.5).unwrap();
        assert_eq!(c.ratio, 0.0);
        assert!(c.pass);
        let pc = product_l1_check(&f, &f).unwrap();
        assert_eq!(pc.ratio, 0.0);
        assert!(pc.l2_pass);
    }

    #[test]
    fn product_check_on_indicator_pair() {
        // w = z = 1_E, |E| = a: lhs = a, rhs = 2 sqrt(a) * sqrt(a) = 2a.
        let f = indicator_field(8, 16);
        let c = product_l1_check(&f, &f).unwrap();
        assert!((c.lhs - 0.25).abs() < 1e-14);
        assert!((c.rhs_factor - 0.5).abs() < 1e-13);
        assert!((c.ratio - 0.5).abs() < 1e-13);
        assert!(c.l2_pass);
    }

    #[test]
    fn product_check_with_constant_factor() {
        // z constant c: ||wz||_1 = c ||w||_1 and ||z||_{2,inf} = c.
        let w = indicator_field(8, 32);
        let z = Array2::from_elem((8, 8), 3.0);
        let c = product_l1_check(&w, &z).unwrap();
        let a: f64 = 0.5;
        assert!((c.lhs - 3.0 * a).abs() < 1e-13);
        assert!((c.rhs_factor - 2.0 * a.sqrt() * 3.0).abs() < 1e-12);
        assert!((c.ratio - a.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn vector_fields_reduce_via_magnitude() {
        let grid = crate::grid::TorusGrid::new(16).unwrap();
        let v = PhysicalVectorField::from_fn(grid, |_, _| [3.0, 4.0]);
        let norm = lorentz_norm_of_vector(&v, 2.0, 2.0).unwrap();
        assert!((norm - 5.0).abs() < 1e-12);
    }
}
