//! Probabilistic post-processing of `φ̂` fields.
//!
//! The perturbed level set `Γ̂_{ε,p}` collects the cells where
//! `P[|φ| ≤ ε] ≥ p`. The probability is evaluated directly from the gPC
//! polynomial: by real-root isolation when `L = 1`, on a tensor grid otherwise.
//! [`moment_series`] evaluates raw moments of the Galerkin absolute value by
//! the multinomial expansion, which serves as a cross-check.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::algebra::{positivity_certificate, r_inverse, second_moment, GpcVector, SpdCertificate};
use crate::basis::GpcBasis;
use crate::error::{Error, Result};

pub const DEFAULT_N_CDF: usize = 256;

/// Galerkin absolute value `|φ|̂ = R⁻¹(φ̂ ∗ φ̂)` with its positivity verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsPhi {
    pub coeffs: GpcVector,
    pub certificate: SpdCertificate,
}

/// Which polynomial stands in for `|φ|` when evaluating probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Surrogate {
    /// `|Π_K[φ](ξ)|`, defined for every cell.
    #[default]
    Pointwise,
    /// `Π_K[|φ|](ξ)` from [`abs_phi`]; fails near the random interface.
    Galerkin,
}

/// Cells with `P[|φ| ≤ ε] ≥ p`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBand {
    pub epsilon: f64,
    pub p: f64,
    pub mask: Vec<bool>,
    pub cdf: Vec<f64>,
    pub t: f64,
}

impl QuantileBand {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Galerkin absolute value; fails with [`Error::IndefiniteRoot`] unless the
/// result is positive at every quadrature node.
pub fn abs_phi(basis: &GpcBasis, phi: &GpcVector) -> Result<AbsPhi> {
    let coeffs = r_inverse(basis, &second_moment(basis, phi))?;
    let certificate = positivity_certificate(basis, &coeffs);
    if !certificate.positive {
        return Err(Error::IndefiniteRoot {
            min_eigenvalue: certificate.min_eigenvalue,
            min_node_value: certificate.min_node_value(),
        });
    }
    Ok(AbsPhi { coeffs, certificate })
}

/// `E[Π_K[|φ|]^m]` for `m = 0..=m_max` by the multinomial series
/// `Σ_{|ℓ|=m} C_ℓ m!/∏ℓ_j! ∏_j a_j^{ℓ_j}`.
pub fn moment_series(basis: &GpcBasis, abs: &AbsPhi, m_max: usize) -> Vec<f64> {
    let a = abs.coeffs.as_slice();
    let n = a.len();
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut out = vec![1.0];
    for m in 1..=m_max {
        let mut total = 0.0;
        let mut ell = vec![0usize; n];
        for_each_composition(m, 0, &mut ell, &mut |ell| {
            if ell.iter().zip(a).any(|(&l, &c)| l > 0 && c == 0.0) {
                return;
            }
            let exps: Vec<(usize, u32)> = ell
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > 0)
                .map(|(j, &l)| (j, l as u32))
                .collect();
            let c = basis.c_constant(&exps);
            if c == 0.0 {
                return;
            }
            let multinomial = factorial(m) / ell.iter().map(|&l| factorial(l)).product::<f64>();
            let power: f64 = exps.iter().map(|&(j, l)| a[j].powi(l as i32)).product();
            total += c * multinomial * power;
        });
        out.push(total);
    }
    out
}

fn for_each_composition(remaining: usize, pos: usize, ell: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pos + 1 == ell.len() {
        ell[pos] = remaining;
        f(ell);
        ell[pos] = 0;
        return;
    }
    for first in (0..=remaining).rev() {
        ell[pos] = first;
        for_each_composition(remaining - first, pos + 1, ell, f);
    }
    ell[pos] = 0;
}

/// Monomial coefficients (ascending powers) of the normalized Legendre
/// polynomials `φ_0, …, φ_degree`.
pub fn legendre_monomials(degree: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![1.0]];
    if degree == 0 {
        return polys;
    }
    polys.push(vec![0.0, 3f64.sqrt()]);
    for k in 1..degree {
        let kf = k as f64;
        let a = (2.0 * kf + 3.0).sqrt() / (kf + 1.0);
        let b = (2.0 * kf + 1.0).sqrt();
        let c = kf / (2.0 * kf - 1.0).sqrt();
        let mut next = vec![0.0; k + 2];
        for (i, &p) in polys[k].iter().enumerate() {
            next[i + 1] += a * b * p;
        }
        for (i, &p) in polys[k - 1].iter().enumerate() {
            next[i] -= a * c * p;
        }
        polys.push(next);
    }
    polys
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots of a polynomial (ascending coefficients) inside `[-1, 1]`,
/// from the companion matrix with a Newton polish.
pub fn real_roots_in_unit_interval(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let candidates: Vec<f64> = if deg == 1 {
        vec![-coeffs[0] / lead]
    } else {
        let mut comp = DMatrix::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -coeffs[i] / lead;
        }
        comp.complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect()
    };
    let deriv: Vec<f64> = (1..=deg).map(|i| i as f64 * coeffs[i]).collect();
    let poly = &coeffs[..=deg];
    let mut roots: Vec<f64> = candidates
        .into_iter()
        .map(|mut x| {
            for _ in 0..4 {
                let d = horner(&deriv, x);
                if d == 0.0 {
                    break;
                }
                let step = horner(poly, x) / d;
                if !step.is_finite() || step.abs() > 1e-3 {
                    break;
                }
                x -= step;
            }
            x
        })
        .filter(|x| (-1.0 - 1e-12..=1.0 + 1e-12).contains(x))
        .map(|x| x.clamp(-1.0, 1.0))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

/// `P[lo ≤ q(ξ) ≤ hi]` for `ξ ~ U(-1, 1)` and a polynomial `q` in monomial form.
pub fn interval_probability(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let mut pts = vec![-1.0, 1.0];
    for level in [lo, hi] {
        if level.is_finite() {
            let mut shifted = coeffs.to_vec();
            shifted[0] -= level;
            pts.extend(real_roots_in_unit_interval(&shifted));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut measure = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let q = horner(coeffs, 0.5 * (a + b));
        if lo <= q && q <= hi {
            measure += b - a;
        }
    }
    (measure / 2.0).clamp(0.0, 1.0)
}

/// Evaluates `P[|φ| ≤ ε]` for gPC expansions of one basis.
///
/// For `L ≥ 2` the basis is tabulated once on the trapezoid grid.
pub struct CdfEvaluator<'a> {
    basis: &'a GpcBasis,
    surrogate: Surrogate,
    n_cdf: usize,
    monomials: Option<DMatrix<f64>>,
    grid: Option<(DMatrix<f64>, Vec<f64>)>,
}

impl<'a> CdfEvaluator<'a> {
    pub fn new(basis: &'a GpcBasis, surrogate: Surrogate, n_cdf: usize) -> Result<Self> {
        if basis.dim() == 1 {
            let polys = legendre_monomials(basis.degree());
            let k = basis.len();
            let mono = DMatrix::from_fn(k, basis.degree() + 1, |row, col| {
                let deg = basis.index_set().get(row)[0];
                polys[deg].get(col).copied().unwrap_or(0.0)
            });
            return Ok(Self {
                basis,
                surrogate,
                n_cdf,
                monomials: Some(mono),
                grid: None,
            });
        }
        if n_cdf < 2 {
            return Err(Error::InvalidArgument("N_cdf must be at least 2".into()));
        }
        let (nodes, weights) = trapezoid_grid(basis.dim(), n_cdf);
        let mut table = DMatrix::zeros(basis.len(), nodes.len());
        for (q, x) in nodes.iter().enumerate() {
            for (k, v) in basis.eval_all(x).into_iter().enumerate() {
                table[(k, q)] = v;
            }
        }
        Ok(Self {
            basis,
            surrogate,
            n_cdf,
            monomials: None,
            grid: Some((table, weights)),
        })
    }

    pub fn surrogate(&self) -> Surrogate {
        self.surrogate
    }

    pub fn n_cdf(&self) -> usize {
        self.n_cdf
    }

    /// `P[|φ| ≤ ε]` under the configured surrogate.
    pub fn cdf(&self, phi: &GpcVector, epsilon: f64) -> Result<f64> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be nonnegative")));
        }
        let (poly, lo) = match self.surrogate {
            Surrogate::Pointwise => (phi.clone(), -epsilon),
            Surrogate::Galerkin => (abs_phi(self.basis, phi)?.coeffs, f64::NEG_INFINITY),
        };
        Ok(self.probability(&poly, lo, epsilon))
    }

    fn probability(&self, poly: &GpcVector, lo: f64, hi: f64) -> f64 {
        if let Some(mono) = &self.monomials {
            let coeffs = mono.transpose() * poly.coeffs();
            return interval_probability(coeffs.as_slice(), lo, hi);
        }
        let (table, weights) = self.grid.as_ref().expect("grid tables exist for L >= 2");
        let values: DVector<f64> = table.transpose() * poly.coeffs();
        values
            .iter()
            .zip(weights)
            .filter(|(v, _)| lo <= **v && **v <= hi)
            .map(|(_, w)| w)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// `|CDF_pointwise − CDF_Galerkin|`, or `None` where the Galerkin
    /// absolute value does not exist.
    pub fn surrogate_discrepancy(&self, phi: &GpcVector, epsilon: f64) -> Option<f64> {
        let abs = abs_phi(self.basis, phi).ok()?;
        let a = self.probability(phi, -epsilon, epsilon);
        let b = self.probability(&abs.coeffs, f64::NEG_INFINITY, epsilon);
        Some((a - b).abs())
    }

    /// Band `Γ̂_{ε,p}` over a field of `φ̂` expansions.
    pub fn perturbed_level_set(&self, phi_field: &[GpcVector], epsilon: f64, p: f64, t: f64) -> Result<QuantileBand> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("probability {p} outside (0, 1]")));
        }
        let cdf: Vec<f64> = phi_field
            .par_iter()
            .map(|phi| self.cdf(phi, epsilon))
            .collect::<Result<_>>()?;
        let mask = cdf.iter().map(|&c| c >= p).collect();
        Ok(QuantileBand {
            epsilon,
            p,
            mask,
            cdf,
            t,
        })
    }
}

/// Trapezoid nodes and probability weights on `[-1, 1]^dim`.
fn trapezoid_grid(dim: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let h = 2.0 / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
    let w: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.25 * h } else { 0.5 * h })
        .collect();
    let total = n.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut digits = vec![0usize; dim];
    for _ in 0..total {
        nodes.push(digits.iter().map(|&i| x[i]).collect());
        weights.push(digits.iter().map(|&i| w[i]).product());
        for d in (0..dim).rev() {
            digits[d] += 1;
            if digits[d] < n {
                break;
            }
            digits[d] = 0;
        }
    }
    (nodes, weights)
}

/// `P[|Π_K[φ](ξ)| ≤ ε]` with the default settings.
pub fn cdf_at(basis: &GpcBasis, phi: &GpcVector, epsilon: f64) -> Result<f64> {
    CdfEvaluator::new(basis, Surrogate::Pointwise, DEFAULT_N_CDF)?.cdf(phi, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{legendre_eval, QuadratureRule};
    use proptest::prelude::*;

    fn v(c: &[f64]) -> GpcVector {
        GpcVector::new(c.to_vec())
    }

    #[test]
    fn abs_phi_examples() {
        let b = GpcBasis::new(1, 1).unwrap();
        // Truncation drops the φ_2 part of 3ξ², leaving |φ|̂ = 1.
        let a = abs_phi(&b, &v(&[0.0, 1.0])).unwrap();
        assert!((&a.coeffs - &v(&[1.0, 0.0])).max_abs() < 1e-12);
        assert!(matches!(abs_phi(&b, &v(&[0.0, 0.0])), Err(Error::NotSpd { .. })));
        let a = abs_phi(&b, &v(&[2.5, 0.0])).unwrap();
        assert!((&a.coeffs - &v(&[2.5, 0.0])).max_abs() < 1e-12);
        let a = abs_phi(&b, &v(&[-2.5, 0.0])).unwrap();
        assert!((&a.coeffs - &v(&[2.5, 0.0])).max_abs() < 1e-12);
        let a = abs_phi(&b, &v(&[-2.0, 0.4])).unwrap();
        assert!((&a.coeffs - &v(&[2.0, -0.4])).max_abs() < 1e-10);
        assert!(a.certificate.positive);
    }

    #[test]
    fn moment_series_examples() {
        let b = GpcBasis::new(1, 1).unwrap();
        let unit = abs_phi(&b, &v(&[1.0, 0.0])).unwrap();
        let m = moment_series(&b, &unit, 4);
        assert!(m.iter().all(|x| (x - 1.0).abs() < 1e-14));
        let b = GpcBasis::new(1, 2).unwrap();
        let abs = abs_phi(&b, &v(&[2.0, 0.3, -0.2])).unwrap();
        let m = moment_series(&b, &abs, 4);
        assert_eq!(m[0], 1.0);
        assert!((m[1] - abs.coeffs[0]).abs() < 1e-14);
        let parseval: f64 = abs.coeffs.as_slice().iter().map(|c| c * c).sum();
        assert!((m[2] - parseval).abs() < 1e-13);
        let rule = QuadratureRule::tensor_gauss(1, 8);
        let q4 = rule.integrate(|x| b.eval_expansion(abs.coeffs.as_slice(), x).powi(4));
        assert!((m[4] - q4).abs() < 1e-12 * q4.max(1.0));
    }

    #[test]
    fn legendre_monomials_match_recursion() {
        let polys = legendre_monomials(5);
        for (k, p) in polys.iter().enumerate() {
            for &x in &[-0.9, -0.2, 0.0, 0.35, 1.0] {
                assert!((horner(p, x) - legendre_eval(k, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cdf_examples() {
        let b = GpcBasis::new(1, 1).unwrap();
        assert_eq!(cdf_at(&b, &v(&[5.0, 0.0]), 1.0).unwrap(), 0.0);
        assert_eq!(cdf_at(&b, &v(&[5.0, 0.0]), 6.0).unwrap(), 1.0);
        let c = cdf_at(&b, &v(&[0.0, 1.0]), 3f64.sqrt() / 2.0).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        assert!(cdf_at(&b, &v(&[0.0, 1.0]), -1.0).is_err());
    }

    #[test]
    fn cdf_on_tensor_grid() {
        let b = GpcBasis::new(2, 1).unwrap();
        let e = CdfEvaluator::new(&b, Surrogate::Pointwise, 257).unwrap();
        assert_eq!(e.cdf(&v(&[5.0, 0.0, 0.0]), 1.0).unwrap(), 0.0);
        assert!((e.cdf(&v(&[5.0, 0.0, 0.0]), 6.0).unwrap() - 1.0).abs() < 1e-12);
        // |√3 ξ_1| ≤ √3/2 has probability 1/2.
        let c = e.cdf(&v(&[0.0, 1.0, 0.0]), 3f64.sqrt() / 2.0).unwrap();
        assert!((c - 0.5).abs() < 1e-2);
    }

    #[test]
    fn galerkin_surrogate_agrees_on_sign_definite_states() {
        let b = GpcBasis::new(1, 3).unwrap();
        let e = CdfEvaluator::new(&b, Surrogate::Galerkin, DEFAULT_N_CDF).unwrap();
        let phi = v(&[1.5, 0.2, -0.1, 0.05]);
        let pw = cdf_at(&b, &phi, 1.4).unwrap();
        let gk = e.cdf(&phi, 1.4).unwrap();
        assert!((pw - gk).abs() < 1e-9);
        assert!(e.surrogate_discrepancy(&phi, 1.4).unwrap() < 1e-9);
    }

    #[test]
    fn band_examples() {
        let b = GpcBasis::new(1, 1).unwrap();
        let field: Vec<GpcVector> = [-0.3, -0.05, 0.0, 0.04, 0.2]
            .iter()
            .map(|&x| GpcVector::constant(2, x))
            .collect();
        let e = CdfEvaluator::new(&b, Surrogate::Pointwise, DEFAULT_N_CDF).unwrap();
        for p in [0.1, 0.5, 1.0] {
            let band = e.perturbed_level_set(&field, 0.05, p, 0.0).unwrap();
            assert_eq!(band.mask, vec![false, true, true, true, false]);
        }
        assert!(e.perturbed_level_set(&field, 0.05, 0.0, 0.0).is_err());
        let random = vec![v(&[0.0, 1.0]), v(&[3.0, 0.1])];
        let band = e.perturbed_level_set(&random, 0.1, 1e-9, 0.0).unwrap();
        assert_eq!(band.mask, vec![true, false]);
    }

    proptest! {
        #[test]
        fn cdf_matches_fine_grid(
            coeffs in prop::collection::vec(-1.0f64..1.0, 4),
            eps in 0.0f64..1.5,
        ) {
            let b = GpcBasis::new(1, 3).unwrap();
            let phi = v(&coeffs);
            let exact = cdf_at(&b, &phi, eps).unwrap();
            let n = 20_000;
            let hits = (0..n)
                .filter(|i| {
                    let x = -1.0 + (2.0 * *i as f64 + 1.0) / n as f64;
                    b.eval_expansion(phi.as_slice(), &[x]).abs() <= eps
                })
                .count();
            prop_assert!((exact - hits as f64 / n as f64).abs() < 1e-3);
        }

        #[test]
        fn cdf_is_monotone_and_bounded(
            coeffs in prop::collection::vec(-1.0f64..1.0, 3),
            e1 in 0.0f64..2.0,
            e2 in 0.0f64..2.0,
        ) {
            let b = GpcBasis::new(1, 2).unwrap();
            let phi = v(&coeffs);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let (c1, c2) = (cdf_at(&b, &phi, lo).unwrap(), cdf_at(&b, &phi, hi).unwrap());
            prop_assert!(c1 <= c2 + 1e-15);
            let min = (0..=2000)
                .map(|i| b.eval_expansion(phi.as_slice(), &[-1.0 + i as f64 * 1e-3]).abs())
                .fold(f64::INFINITY, f64::min);
            if lo < min - 0.02 {
                prop_assert_eq!(c1, 0.0);
            }
            let bound: f64 = coeffs.iter().map(|c| c.abs()).sum::<f64>() * 5f64.sqrt();
            prop_assert_eq!(cdf_at(&b, &phi, bound + 1.0).unwrap(), 1.0);
        }
    }
}
