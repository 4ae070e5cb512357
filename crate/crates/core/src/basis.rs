//! Orthonormal Legendre chaos bases on `[-1, 1]^L` with the uniform density.
//!
//! A [`GpcBasis`] bundles the total-degree multi-index set, a tensorized
//! Gauss-Legendre rule, the table of basis values at the quadrature nodes and
//! the triple-product tensors `M_k = (E[φ_k φ_i φ_j])_{i,j}` that drive all
//! intrusive arithmetic.

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Normalized Legendre polynomial `φ_k(ξ)`, orthonormal under `U(-1, 1)`.
///
/// Uses the three-term recursion
/// `φ_{k+1} = √(2k+3)/(k+1) · (√(2k+1) ξ φ_k − k/√(2k−1) φ_{k−1})`
/// started from `φ_0 = 1`, `φ_1 = √3 ξ`.
pub fn legendre_eval(k: usize, xi: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 3f64.sqrt() * xi;
    for n in 1..k {
        let nf = n as f64;
        let next = (2.0 * nf + 3.0).sqrt() / (nf + 1.0)
            * ((2.0 * nf + 1.0).sqrt() * xi * cur - nf / (2.0 * nf - 1.0).sqrt() * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`, weights normalized to the
/// uniform probability density (they sum to one).
///
/// Nodes are returned in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on the classical P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_classical(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_classical(n, x);
        if d != 0.0 {
            dp = d;
        }
        // 2/((1-x^2) P_n'(x)^2), halved for the probability measure.
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Classical (unnormalized) Legendre `P_n(x)` and its derivative.
fn legendre_classical(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A family of univariate orthonormal polynomials with its Gauss rule.
///
/// Only [`Legendre`] is provided; the trait keeps the basis builder independent
/// of the family.
pub trait OrthonormalFamily {
    fn eval(&self, k: usize, x: f64) -> f64;
    /// Gauss rule with `n` nodes, probability weights.
    fn gauss_rule(&self, n: usize) -> (Vec<f64>, Vec<f64>);
    /// `true` when `E[φ_a φ_b φ_c]` vanishes by symmetry or degree counting.
    fn triple_vanishes(&self, a: usize, b: usize, c: usize) -> bool;
}

/// Normalized Legendre polynomials for `ξ ~ U(-1, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Legendre;

impl OrthonormalFamily for Legendre {
    fn eval(&self, k: usize, x: f64) -> f64 {
        legendre_eval(k, x)
    }

    fn gauss_rule(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        gauss_legendre(n)
    }

    fn triple_vanishes(&self, a: usize, b: usize, c: usize) -> bool {
        // Parity and triangle selection rules.
        (a + b + c) % 2 == 1 || a > b + c || b > a + c || c > a + b
    }
}

/// Total-degree multi-index set `{k ∈ N_0^L : |k|_1 ≤ K}` in graded
/// lexicographic order.
///
/// Within one total degree the exponent of `ξ_1` decreases first, so for `L = 2`
/// the order is `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn total_degree(dim: usize, degree: usize) -> Self {
        let mut indices = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0; dim];
            push_compositions(d, 0, &mut cur, &mut indices);
        }
        Self {
            dim,
            degree,
            indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, k: usize) -> &[usize] {
        &self.indices[k]
    }

    /// Position of a multi-index in the ordering, if present.
    pub fn position(&self, index: &[usize]) -> Option<usize> {
        self.indices.iter().position(|k| k.as_slice() == index)
    }

    /// Total degree `|k|_1` of the `k`-th basis function.
    pub fn order(&self, k: usize) -> usize {
        self.indices[k].iter().sum()
    }
}

fn push_compositions(remaining: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for first in (0..=remaining).rev() {
        cur[pos] = first;
        push_compositions(remaining - first, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Tensorized Gauss-Legendre rule on `[-1, 1]^L` for the uniform density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Tensor product of the `n`-point rule in each of `dim` coordinates.
    /// The first coordinate varies slowest.
    pub fn tensor_gauss(dim: usize, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
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
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Smallest per-dimension node count that integrates triple products of
/// degree-`K` polynomials exactly.
pub fn min_nodes_per_dim(degree: usize) -> usize {
    ((3 * degree + 1).div_ceil(2)).max(degree + 1).max(1)
}

/// Default node count: `max(K + 2, ⌈(3K + 1)/2⌉)`.
pub fn default_nodes_per_dim(degree: usize) -> usize {
    (degree + 2).max(min_nodes_per_dim(degree))
}

/// Orthonormal chaos basis with precomputed quadrature and triple products.
///
/// Immutable after construction; share it by reference across threads.
#[derive(Debug, Clone)]
pub struct GpcBasis {
    index_set: MultiIndexSet,
    nodes_per_dim: usize,
    quad: QuadratureRule,
    /// `eval_table[(k, q)] = φ_k(ξ^(q))`.
    eval_table: DMatrix<f64>,
    triple_tensors: Vec<DMatrix<f64>>,
}

impl GpcBasis {
    /// Basis with the default quadrature size.
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        build_basis(dim, degree, default_nodes_per_dim(degree))
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    /// `|K|`, the number of basis functions.
    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Stochastic dimension `L`.
    pub fn dim(&self) -> usize {
        self.index_set.dim()
    }

    /// Total degree `K`.
    pub fn degree(&self) -> usize {
        self.index_set.degree()
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn eval_table(&self) -> &DMatrix<f64> {
        &self.eval_table
    }

    /// `M_k` with entries `E[φ_k φ_i φ_j]`.
    pub fn triple_tensor(&self, k: usize) -> &DMatrix<f64> {
        &self.triple_tensors[k]
    }

    pub fn triple_tensors(&self) -> &[DMatrix<f64>] {
        &self.triple_tensors
    }

    /// Values of every basis function at the point `xi`.
    pub fn eval_all(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.dim());
        let degree = self.degree();
        let per_dim: Vec<Vec<f64>> = xi
            .iter()
            .map(|&x| (0..=degree).map(|k| legendre_eval(k, x)).collect())
            .collect();
        self.index_set
            .indices()
            .iter()
            .map(|k| k.iter().enumerate().map(|(d, &kd)| per_dim[d][kd]).product())
            .collect()
    }

    /// Evaluates the expansion `Σ c_k φ_k(ξ)`.
    pub fn eval_expansion(&self, coeffs: &[f64], xi: &[f64]) -> f64 {
        assert_eq!(coeffs.len(), self.len());
        self.eval_all(xi).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// Realizations of an expansion at every quadrature node.
    pub fn node_values(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len());
        (0..self.quad.len())
            .map(|q| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * self.eval_table[(k, q)])
                    .sum()
            })
            .collect()
    }

    /// Quadrature projection `c_k = E[f φ_k]` onto the basis.
    pub fn project(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let values: Vec<f64> = self.quad.nodes.iter().map(|x| f(x)).collect();
        (0..self.len())
            .map(|k| {
                values
                    .iter()
                    .zip(&self.quad.weights)
                    .enumerate()
                    .map(|(q, (v, w))| w * v * self.eval_table[(k, q)])
                    .sum()
            })
            .collect()
    }

    /// `C_ℓ = E[∏_j φ_j^{ℓ_j}]` for a sparse map from basis position to exponent.
    ///
    /// The expectation factorizes over the stochastic coordinates, so each
    /// coordinate is integrated with a 1D Gauss rule just large enough to be
    /// exact for the resulting polynomial degree.
    pub fn c_constant(&self, exponents: &[(usize, u32)]) -> f64 {
        let mut product = 1.0;
        for d in 0..self.dim() {
            let factors: Vec<(usize, u32)> = exponents
                .iter()
                .filter(|(_, e)| *e > 0)
                .map(|&(j, e)| (self.index_set.get(j)[d], e))
                .filter(|(kd, _)| *kd > 0)
                .collect();
            let degree: usize = factors.iter().map(|&(kd, e)| kd * e as usize).sum();
            if degree == 0 {
                continue;
            }
            if degree % 2 == 1 {
                return 0.0;
            }
            let n = (degree + 2).div_ceil(2);
            let (x, w) = gauss_legendre(n);
            let integral: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    wi * factors
                        .iter()
                        .map(|&(kd, e)| legendre_eval(kd, xi).powi(e as i32))
                        .product::<f64>()
                })
                .sum();
            product *= integral;
        }
        product
    }

    /// Writes every nonzero tensor entry as `i j k value`, one per line.
    pub fn dump_tensors<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# triple products E[phi_k phi_i phi_j]; L = {}, K = {}, |K| = {}",
            self.dim(),
            self.degree(),
            self.len()
        )?;
        writeln!(out, "# i j k value")?;
        for (k, m) in self.triple_tensors.iter().enumerate() {
            for i in 0..self.len() {
                for j in 0..self.len() {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        writeln!(out, "{i} {j} {k} {v:.17e}")?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Hex digest of the index ordering and tensor bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        h.update((self.degree() as u64).to_le_bytes());
        h.update((self.nodes_per_dim as u64).to_le_bytes());
        for k in self.index_set.indices() {
            for &kd in k {
                h.update((kd as u64).to_le_bytes());
            }
        }
        for m in &self.triple_tensors {
            for v in m.iter() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Builds the `(L, K)` basis with `nodes_per_dim` Gauss points per coordinate.
///
/// Rejects node counts below `⌈(3K + 1)/2⌉`, for which triple products would
/// not be integrated exactly.
pub fn build_basis(dim: usize, degree: usize, nodes_per_dim: usize) -> Result<GpcBasis> {
    build_basis_with(&Legendre, dim, degree, nodes_per_dim)
}

pub fn build_basis_with<F: OrthonormalFamily>(
    family: &F,
    dim: usize,
    degree: usize,
    nodes_per_dim: usize,
) -> Result<GpcBasis> {
    if dim == 0 {
        return Err(Error::InvalidBasis("stochastic dimension must be at least 1".into()));
    }
    let needed = min_nodes_per_dim(degree);
    if nodes_per_dim < needed {
        return Err(Error::InvalidBasis(format!(
            "nodes_per_dim = {nodes_per_dim} is below the exactness bound {needed} for K = {degree}"
        )));
    }
    let index_set = MultiIndexSet::total_degree(dim, degree);
    let quad = QuadratureRule::tensor_gauss(dim, nodes_per_dim);
    let n = index_set.len();

    let eval_table = DMatrix::from_fn(n, quad.len(), |k, q| {
        index_set
            .get(k)
            .iter()
            .zip(&quad.nodes[q])
            .map(|(&kd, &x)| family.eval(kd, x))
            .product()
    });

    let table = univariate_triples(family, degree, nodes_per_dim);
    let triple = |a: usize, b: usize, c: usize| -> f64 {
        let mut key = [a, b, c];
        key.sort_unstable();
        table[&(key[0], key[1], key[2])]
    };
    let triple_tensors = (0..n)
        .map(|k| {
            let kk = index_set.get(k);
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                let ki = index_set.get(i);
                for j in i..n {
                    let kj = index_set.get(j);
                    let v: f64 = (0..dim).map(|d| triple(kk[d], ki[d], kj[d])).product();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        })
        .collect();

    Ok(GpcBasis {
        index_set,
        nodes_per_dim,
        quad,
        eval_table,
        triple_tensors,
    })
}

/// `E[φ_a φ_b φ_c]` for sorted `a ≤ b ≤ c ≤ K`, by Gauss quadrature with the
/// selection rules and the orthonormality row applied exactly.
fn univariate_triples<F: OrthonormalFamily>(
    family: &F,
    degree: usize,
    n: usize,
) -> HashMap<(usize, usize, usize), f64> {
    let (x, w) = family.gauss_rule(n);
    let vals: Vec<Vec<f64>> = (0..=degree)
        .map(|k| x.iter().map(|&xi| family.eval(k, xi)).collect())
        .collect();
    let mut table = HashMap::new();
    for a in 0..=degree {
        for b in a..=degree {
            for c in b..=degree {
                let v = if a == 0 {
                    if b == c {
                        1.0
                    } else {
                        0.0
                    }
                } else if family.triple_vanishes(a, b, c) {
                    0.0
                } else {
                    (0..n).map(|q| w[q] * vals[a][q] * vals[b][q] * vals[c][q]).sum()
                };
                table.insert((a, b, c), v);
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    // Brute-force E[f] by composite Simpson on [-1, 1] with the uniform density.
    fn simpson_expectation(f: impl Fn(f64) -> f64) -> f64 {
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mut s = f(-1.0) + f(1.0);
        for i in 1..n {
            let x = -1.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0 / 2.0
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_eval(0, 0.7), 1.0);
        assert!((legendre_eval(1, 0.5) - 3f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((legendre_eval(2, 1.0) - 5f64.sqrt()).abs() < 1e-14);
        let second = simpson_expectation(|x| legendre_eval(2, x).powi(2));
        assert!((second - 1.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_matches_closed_form() {
        for &x in &[-1.0, -0.3, 0.0, 0.41, 1.0] {
            let p3 = 7f64.sqrt() * 0.5 * (5.0 * x * x * x - 3.0 * x);
            assert!((legendre_eval(3, x) - p3).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_weights_sum_to_one() {
        for n in 1..40 {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}: {s}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(w.iter().all(|&wi| wi > 0.0));
        }
    }

    #[test]
    fn gauss_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 1.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn index_set_cardinality_and_order() {
        let s = MultiIndexSet::total_degree(2, 2);
        assert_eq!(s.len(), 6);
        assert_eq!(
            s.indices(),
            &[
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        for (l, k, card) in [(1, 4, 5), (3, 3, 20), (4, 2, 15), (2, 5, 21)] {
            assert_eq!(MultiIndexSet::total_degree(l, k).len(), card);
        }
    }

    #[test]
    fn build_basis_examples() {
        assert_eq!(build_basis(2, 2, 4).unwrap().len(), 6);
        let b = build_basis(1, 1, 2).unwrap();
        assert_eq!(b.triple_tensor(1), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let b = build_basis(1, 2, 4).unwrap();
        let v = b.triple_tensor(2)[(1, 1)];
        let oracle = simpson_expectation(|x| legendre_eval(1, x).powi(2) * legendre_eval(2, x));
        assert!((v - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!((oracle - 2.0 / 5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn rejects_too_few_nodes() {
        assert!(build_basis(1, 3, 4).is_err());
        assert!(build_basis(1, 3, 5).is_ok());
        assert!(build_basis(0, 1, 4).is_err());
    }

    #[test]
    fn orthonormality_and_identity_tensor() {
        for (l, k) in [(1, 1), (1, 4), (2, 2), (2, 3), (3, 2)] {
            let b = GpcBasis::new(l, k).unwrap();
            let q = b.quadrature();
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let g: f64 = (0..q.len())
                        .map(|n| q.weights[n] * b.eval_table()[(i, n)] * b.eval_table()[(j, n)])
                        .sum();
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((g - d).abs() < 1e-12);
                }
            }
            assert_eq!(b.triple_tensor(0), &DMatrix::identity(b.len(), b.len()));
            for m in b.triple_tensors() {
                assert!((m - m.transpose()).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn tensors_match_full_quadrature() {
        // Factorized tensors agree with brute-force tensorized quadrature.
        let b = GpcBasis::new(2, 3).unwrap();
        let rule = QuadratureRule::tensor_gauss(2, 8);
        for k in 0..b.len() {
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let v = rule.integrate(|x| {
                        let p = b.eval_all(x);
                        p[k] * p[i] * p[j]
                    });
                    assert!((v - b.triple_tensor(k)[(i, j)]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let b = GpcBasis::new(2, 3).unwrap();
        let f = |x: &[f64]| 0.3 + x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1].powi(3);
        let c = b.project(f);
        for x in &b.quadrature().nodes {
            assert!((b.eval_expansion(&c, x) - f(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn c_constant_examples() {
        let b = GpcBasis::new(1, 2).unwrap();
        assert_eq!(b.c_constant(&[(0, 7)]), 1.0);
        assert_eq!(b.c_constant(&[(1, 3)]), 0.0);
        assert!((b.c_constant(&[(1, 4)]) - 1.8).abs() < 1e-14);
        let oracle = simpson_expectation(|x| legendre_eval(1, x).powi(2) * legendre_eval(2, x).powi(3));
        assert!((b.c_constant(&[(1, 2), (2, 3)]) - oracle).abs() < 1e-9);
    }

    #[test]
    fn deterministic_build() {
        let a = GpcBasis::new(2, 3).unwrap();
        let b = GpcBasis::new(2, 3).unwrap();
        assert_eq!(a.index_set(), b.index_set());
        for (x, y) in a.triple_tensors().iter().zip(b.triple_tensors()) {
            assert!(x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn dump_lists_entries() {
        let b = GpcBasis::new(1, 1).unwrap();
        let mut buf = Vec::new();
        b.dump_tensors(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].starts_with("0 0 0 "));
    }
}
