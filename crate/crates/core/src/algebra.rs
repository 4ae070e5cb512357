//! Intrusive gPC arithmetic.
//!
//! Everything here is expressed through the operator `P(u) = Σ_k u_k M_k`:
//! the Galerkin product is `u ∗ q = P(u) q`, the second moment is
//! `R(u) = P(u)² e_1 = u ∗ u`, and the Galerkin square root `R⁻¹` is the
//! minimizer of the convex objective `e_1ᵀ P(α)³ e_1 / 3 − αᵀ ρ` over states
//! with `P(α)` positive definite.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

use crate::basis::GpcBasis;
use crate::error::{Error, Result};

pub type GpcMatrix = DMatrix<f64>;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-12;
const ACCEPT_TOL: f64 = 1e-10;

/// gPC modes of one random scalar, ordered like the basis index set.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcVector(DVector<f64>);

impl GpcVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(DVector::from_vec(coeffs))
    }

    pub fn from_dvector(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    /// The deterministic constant `c`, i.e. `c e_1`.
    pub fn constant(n: usize, c: f64) -> Self {
        let mut v = DVector::zeros(n);
        v[0] = c;
        Self(v)
    }

    /// `e_1`, the unit of the Galerkin product.
    pub fn unit(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    /// Mode 0, the mean under an orthonormal basis.
    pub fn mean(&self) -> f64 {
        self.0[0]
    }

    pub fn variance(&self) -> f64 {
        self.0.iter().skip(1).map(|c| c * c).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// `true` when every mode beyond the mean is exactly zero.
    pub fn is_deterministic(&self) -> bool {
        self.0.iter().skip(1).all(|&c| c == 0.0)
    }
}

impl Index<usize> for GpcVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl Add for &GpcVector {
    type Output = GpcVector;
    fn add(self, rhs: &GpcVector) -> GpcVector {
        GpcVector(&self.0 + &rhs.0)
    }
}

impl Sub for &GpcVector {
    type Output = GpcVector;
    fn sub(self, rhs: &GpcVector) -> GpcVector {
        GpcVector(&self.0 - &rhs.0)
    }
}

impl Neg for &GpcVector {
    type Output = GpcVector;
    fn neg(self) -> GpcVector {
        GpcVector(-&self.0)
    }
}

impl Mul<f64> for &GpcVector {
    type Output = GpcVector;
    fn mul(self, rhs: f64) -> GpcVector {
        GpcVector(&self.0 * rhs)
    }
}

impl AddAssign<&GpcVector> for GpcVector {
    fn add_assign(&mut self, rhs: &GpcVector) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&GpcVector> for GpcVector {
    fn sub_assign(&mut self, rhs: &GpcVector) {
        self.0 -= &rhs.0;
    }
}

/// Verdict on condition (AI) for one expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdCertificate {
    /// Smallest eigenvalue of `P(u)`.
    pub min_eigenvalue: f64,
    /// `Π_K[u](ξ^(q))` at every quadrature node.
    pub node_values: Vec<f64>,
    pub positive: bool,
    pub tolerance: f64,
}

impl SpdCertificate {
    pub fn min_node_value(&self) -> f64 {
        self.node_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_len(basis: &GpcBasis, u: &GpcVector) -> Result<()> {
    if u.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Positivity tolerance `1e-10 (1 + |u|_∞)`.
pub fn positivity_tolerance(u: &GpcVector) -> f64 {
    1e-10 * (1.0 + u.max_abs())
}

/// `P(u) = Σ_k u_k M_k`.
pub fn p_matrix(basis: &GpcBasis, u: &GpcVector) -> GpcMatrix {
    assert_eq!(u.len(), basis.len(), "gPC vector does not match the basis");
    let n = basis.len();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (k, m) in basis.triple_tensors().iter().enumerate() {
        let c = u[k];
        if c != 0.0 {
            p.zip_apply(m, |a, b| *a += c * b);
        }
    }
    p
}

/// Galerkin product `u ∗ q = P(u) q`.
pub fn galerkin_product(basis: &GpcBasis, u: &GpcVector, q: &GpcVector) -> GpcVector {
    assert_eq!(q.len(), basis.len(), "gPC vector does not match the basis");
    GpcVector(p_matrix(basis, u) * &q.0)
}

/// `R(u) = P(u)² e_1`, the modes of the projected square.
pub fn second_moment(basis: &GpcBasis, u: &GpcVector) -> GpcVector {
    // P(u) e_1 = u because M_k e_1 = e_k.
    galerkin_product(basis, u, u)
}

/// Objective whose minimizer over the SPD cone is `R⁻¹(ρ)`:
/// `e_1ᵀ P(α)³ e_1 / 3 − αᵀ ρ = αᵀ P(α) α / 3 − αᵀ ρ`.
pub fn root_objective(basis: &GpcBasis, alpha: &GpcVector, rho: &GpcVector) -> f64 {
    let pa = p_matrix(basis, alpha) * &alpha.0;
    alpha.0.dot(&pa) / 3.0 - alpha.0.dot(&rho.0)
}

/// Inverse of the second moment on the SPD branch.
///
/// Damped Newton on `R(α) = ρ` with Jacobian `2 P(α)`, started from
/// `(√ρ_0, 0, …, 0)`. A step is accepted only if `P(α)` stays positive definite
/// and the convex objective decreases (or the residual does); otherwise it is
/// halved.
pub fn r_inverse(basis: &GpcBasis, rho: &GpcVector) -> Result<GpcVector> {
    check_len(basis, rho)?;
    let scale = 1.0 + rho.max_abs();
    if !rho.is_finite() || rho[0] <= 1e-14 * scale {
        return Err(Error::NotSpd {
            min_eigenvalue: rho[0].min(0.0),
        });
    }
    let n = basis.len();
    let mut alpha = GpcVector::constant(n, rho[0].sqrt());
    if n == 1 {
        return Ok(alpha);
    }

    let mut residual_vec = &second_moment(basis, &alpha) - rho;
    let mut residual = residual_vec.max_abs();
    let mut iterations = 0;
    while residual > NEWTON_TOL * scale && iterations < NEWTON_MAX_ITER {
        iterations += 1;
        let p = p_matrix(basis, &alpha);
        let Some(chol) = p.cholesky() else { break };
        let step = chol.solve(&residual_vec.0) * -0.5;
        let slope = residual_vec.0.dot(&step);
        let f0 = root_objective(basis, &alpha, rho);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = GpcVector(&alpha.0 + &step * t);
            if p_matrix(basis, &trial).cholesky().is_some() {
                let r = &second_moment(basis, &trial) - rho;
                let res = r.max_abs();
                let f = root_objective(basis, &trial, rho);
                if f <= f0 + 1e-4 * t * slope || res < residual {
                    accepted = Some((trial, r, res));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((a, r, res)) = accepted else { break };
        alpha = a;
        residual_vec = r;
        residual = res;
    }
    // Polish to rounding level; the stopping test above is scale-relative and
    // leaves an error of residual / λ_min(2 P(α)) near the cone boundary.
    if residual <= NEWTON_TOL * scale {
        for _ in 0..3 {
            let Some(chol) = p_matrix(basis, &alpha).cholesky() else { break };
            let trial = GpcVector(&alpha.0 - chol.solve(&residual_vec.0) * 0.5);
            let r = &second_moment(basis, &trial) - rho;
            let res = r.max_abs();
            if !(res < residual) {
                break;
            }
            alpha = trial;
            residual_vec = r;
            residual = res;
        }
    }

    let p = p_matrix(basis, &alpha);
    let min_eig = min_eigenvalue(&p);
    let tol = positivity_tolerance(&alpha);
    if residual > ACCEPT_TOL * scale {
        // Stalling against the boundary of the SPD cone means no positive root.
        if min_eig <= 1e-6 * alpha.max_abs() {
            return Err(Error::IndefiniteRoot {
                min_eigenvalue: min_eig,
                min_node_value: min_of(&basis.node_values(alpha.as_slice())),
            });
        }
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }
    if min_eig <= tol {
        return Err(Error::IndefiniteRoot {
            min_eigenvalue: min_eig,
            min_node_value: min_of(&basis.node_values(alpha.as_slice())),
        });
    }
    Ok(alpha)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Galerkin Euclidean norm `R⁻¹(Σ_i u_i ∗ u_i)`.
pub fn gpc_norm(basis: &GpcBasis, components: &[GpcVector]) -> Result<GpcVector> {
    gpc_norm_with_floor(basis, components, None)
}

/// Like [`gpc_norm`], optionally adding `floor · e_1` to the summed second
/// moments before taking the root. The floor is an exploratory knob and
/// changes the discretized equations.
pub fn gpc_norm_with_floor(
    basis: &GpcBasis,
    components: &[GpcVector],
    floor: Option<f64>,
) -> Result<GpcVector> {
    if components.is_empty() {
        return Err(Error::InvalidArgument("norm of an empty component list".into()));
    }
    let mut rho = GpcVector::zeros(basis.len());
    for u in components {
        check_len(basis, u)?;
        rho += &second_moment(basis, u);
    }
    if let Some(delta) = floor {
        rho.0[0] += delta;
    }
    r_inverse(basis, &rho)
}

/// Evaluates condition (AI) at the quadrature nodes and through `λ_min(P(u))`.
pub fn positivity_certificate(basis: &GpcBasis, u: &GpcVector) -> SpdCertificate {
    let node_values = basis.node_values(u.as_slice());
    let min_eigenvalue = min_eigenvalue(&p_matrix(basis, u));
    let tolerance = positivity_tolerance(u);
    let positive = node_values.iter().all(|&v| v > tolerance);
    SpdCertificate {
        min_eigenvalue,
        node_values,
        positive,
        tolerance,
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().amax()
}

fn spd_function(m: &GpcMatrix, f: impl Fn(f64) -> f64) -> Result<GpcMatrix> {
    let n = m.nrows();
    let scale = 1.0 + m.amax();
    if n != m.ncols() || (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotSpd {
            min_eigenvalue: f64::NAN,
        });
    }
    let (values, vectors) = sym_eigen(m);
    if values[0] <= 1e-10 * scale {
        return Err(Error::NotSpd {
            min_eigenvalue: values[0],
        });
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, values.iter().map(|&l| f(l))));
    let out = &vectors * d * vectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Symmetric square root `S` with `S S = m`.
pub fn spd_sqrt(m: &GpcMatrix) -> Result<GpcMatrix> {
    spd_function(m, f64::sqrt)
}

/// `m^{-1/2}` for a symmetric positive definite `m`.
pub fn spd_inv_sqrt(m: &GpcMatrix) -> Result<GpcMatrix> {
    spd_function(m, |l| 1.0 / l.sqrt())
}

/// `m^{-1}` for a symmetric positive definite `m`.
pub fn spd_inverse(m: &GpcMatrix) -> Result<GpcMatrix> {
    spd_function(m, |l| 1.0 / l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, QuadratureRule};
    use proptest::prelude::*;

    fn v(c: &[f64]) -> GpcVector {
        GpcVector::new(c.to_vec())
    }

    fn k1() -> GpcBasis {
        build_basis(1, 1, 2).unwrap()
    }

    #[test]
    fn p_matrix_examples() {
        let b = k1();
        let p = p_matrix(&b, &v(&[0.7, -0.2]));
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.7, -0.2, -0.2, 0.7]));
        let b3 = GpcBasis::new(2, 2).unwrap();
        assert_eq!(p_matrix(&b3, &GpcVector::unit(6)), DMatrix::identity(6, 6));
        let b2 = build_basis(1, 2, 4).unwrap();
        assert_eq!(&p_matrix(&b2, &v(&[0.0, 0.0, 1.0])), b2.triple_tensor(2));
    }

    #[test]
    fn galerkin_product_examples() {
        let b = k1();
        let q = v(&[0.3, 1.1]);
        assert_eq!(galerkin_product(&b, &GpcVector::unit(2), &q), q);
        let u = v(&[1.5, -0.4]);
        let r = galerkin_product(&b, &u, &u);
        assert!((r[0] - (1.5f64.powi(2) + 0.16)).abs() < 1e-15);
        assert!((r[1] - 2.0 * 1.5 * -0.4).abs() < 1e-15);
    }

    #[test]
    fn galerkin_product_matches_projection_oracle() {
        let b = build_basis(1, 3, 6).unwrap();
        let u = v(&[0.4, -0.7, 0.2, 0.9]);
        let q = v(&[1.1, 0.3, -0.5, 0.05]);
        let prod = galerkin_product(&b, &u, &q);
        // Project the pointwise product with an independent, larger rule.
        let rule = QuadratureRule::tensor_gauss(1, 12);
        for k in 0..4 {
            let c = rule.integrate(|x| {
                let p = b.eval_all(x);
                b.eval_expansion(u.as_slice(), x) * b.eval_expansion(q.as_slice(), x) * p[k]
            });
            assert!((c - prod[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn second_moment_examples() {
        let b = k1();
        assert_eq!(second_moment(&b, &v(&[3.0, 1.0])), v(&[10.0, 6.0]));
        assert_eq!(second_moment(&b, &GpcVector::unit(2)), GpcVector::unit(2));
        assert_eq!(second_moment(&b, &GpcVector::zeros(2)), GpcVector::zeros(2));
    }

    #[test]
    fn r_inverse_examples() {
        let b = k1();
        let a = r_inverse(&b, &v(&[10.0, 6.0])).unwrap();
        assert!((a[0] - 3.0).abs() < 1e-12 && (a[1] - 1.0).abs() < 1e-12);
        let e = r_inverse(&b, &GpcVector::unit(2)).unwrap();
        assert!((&e - &GpcVector::unit(2)).max_abs() < 1e-14);

        let b2 = build_basis(1, 2, 4).unwrap();
        let alpha = v(&[1.0, 0.3, -0.2]);
        assert!(positivity_certificate(&b2, &alpha).positive);
        let back = r_inverse(&b2, &second_moment(&b2, &alpha)).unwrap();
        assert!((&back - &alpha).max_abs() < 1e-10);
    }

    #[test]
    fn r_inverse_picks_spd_branch() {
        let b = k1();
        let a = r_inverse(&b, &second_moment(&b, &v(&[0.0, 1.0]))).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-12 && a[1].abs() < 1e-12);
        let a = r_inverse(&b, &second_moment(&b, &v(&[-2.0, 0.5]))).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-12 && (a[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn r_inverse_rejects_degenerate() {
        let b = k1();
        assert!(matches!(r_inverse(&b, &GpcVector::zeros(2)), Err(Error::NotSpd { .. })));
        assert!(matches!(
            r_inverse(&b, &v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn r_inverse_outside_image_fails() {
        // ρ_0 < |ρ_1| has no root with P(α) ≻ 0 when K = 1.
        let b = k1();
        let err = r_inverse(&b, &v(&[0.89, -0.95])).unwrap_err();
        assert!(matches!(err, Error::IndefiniteRoot { .. } | Error::NonConvergence { .. }));
    }

    #[test]
    fn gpc_norm_examples() {
        let b = k1();
        let n = gpc_norm(&b, &[v(&[3.0, 0.0]), v(&[4.0, 0.0])]).unwrap();
        assert!((n[0] - 5.0).abs() < 1e-12 && n[1].abs() < 1e-12);
        let n = gpc_norm(&b, &[v(&[0.0, 1.0])]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-12 && n[1].abs() < 1e-12);
        let n = gpc_norm(&b, &[v(&[3.0, 1.0])]).unwrap();
        assert!((n[0] - 3.0).abs() < 1e-12 && (n[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_floor_shifts_mean() {
        let b = k1();
        let n = gpc_norm_with_floor(&b, &[v(&[0.0, 0.0])], Some(1e-8)).unwrap();
        assert!((n[0] - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn deterministic_reduction() {
        let b = build_basis(1, 0, 1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(galerkin_product(&b, &v(&[3.0]), &v(&[-2.0])), v(&[-6.0]));
        assert_eq!(second_moment(&b, &v(&[-3.0])), v(&[9.0]));
        assert_eq!(r_inverse(&b, &v(&[9.0])).unwrap(), v(&[3.0]));
        assert_eq!(gpc_norm(&b, &[v(&[-3.0]), v(&[4.0])]).unwrap(), v(&[5.0]));
    }

    #[test]
    fn certificate_examples() {
        let b = k1();
        let c = positivity_certificate(&b, &GpcVector::unit(2));
        assert!(c.positive);
        assert!((c.min_node_value() - 1.0).abs() < 1e-15);
        let c = positivity_certificate(&b, &v(&[0.0, 1.0]));
        assert!(!c.positive);
        assert!(c.node_values.iter().any(|&x| x > 0.0) && c.node_values.iter().any(|&x| x < 0.0));
        let c = positivity_certificate(&b, &v(&[2.0, 1.0]));
        assert!(c.positive);
        for (x, nv) in b.quadrature().nodes.iter().zip(&c.node_values) {
            assert!((nv - (2.0 + 3f64.sqrt() * x[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn spd_sqrt_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((spd_sqrt(&i).unwrap() - &i).amax() < 1e-15);
        let d = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let s = spd_sqrt(&d).unwrap();
        assert!((s - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])).amax() < 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = spd_sqrt(&m).unwrap();
        assert!((&s * &s - &m).amax() < 1e-10 * m.amax());
        assert!((&s - s.transpose()).amax() == 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(spd_sqrt(&bad), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn objective_gradient_and_hessian_by_finite_differences() {
        let b = build_basis(1, 2, 4).unwrap();
        let alpha = v(&[1.2, 0.3, -0.25]);
        let rho = v(&[0.9, 0.1, 0.2]);
        let grad = &second_moment(&b, &alpha) - &rho;
        let hess = p_matrix(&b, &alpha) * 2.0;
        let h = 1e-5;
        for i in 0..3 {
            let mut ap = alpha.clone();
            let mut am = alpha.clone();
            ap.as_mut_slice()[i] += h;
            am.as_mut_slice()[i] -= h;
            let fd = (root_objective(&b, &ap, &rho) - root_objective(&b, &am, &rho)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-8 * (1.0 + grad[i].abs()));
            let gp = &second_moment(&b, &ap) - &rho;
            let gm = &second_moment(&b, &am) - &rho;
            for j in 0..3 {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                assert!((fd - hess[(j, i)]).abs() < 1e-8 * (1.0 + hess[(j, i)].abs()));
            }
        }
    }

    proptest! {
        #[test]
        fn product_is_commutative_and_bilinear(
            u in prop::collection::vec(-2.0f64..2.0, 6),
            q in prop::collection::vec(-2.0f64..2.0, 6),
            w in prop::collection::vec(-2.0f64..2.0, 6),
            s in -3.0f64..3.0,
        ) {
            let b = GpcBasis::new(2, 2).unwrap();
            let (u, q, w) = (v(&u), v(&q), v(&w));
            let uq = galerkin_product(&b, &u, &q);
            let qu = galerkin_product(&b, &q, &u);
            prop_assert!((&uq - &qu).max_abs() < 1e-12);
            let lhs = galerkin_product(&b, &(&(&u * s) + &w), &q);
            let rhs = &(&uq * s) + &galerkin_product(&b, &w, &q);
            prop_assert!((&lhs - &rhs).max_abs() < 1e-11);
        }

        #[test]
        fn root_round_trip(
            mean in 1.0f64..3.0,
            pert in prop::collection::vec(-0.25f64..0.25, 3),
        ) {
            let b = build_basis(1, 3, 6).unwrap();
            let alpha = v(&[mean, pert[0], pert[1], pert[2]]);
            prop_assume!(positivity_certificate(&b, &alpha).positive);
            let root = r_inverse(&b, &second_moment(&b, &alpha)).unwrap();
            prop_assert!((&root - &alpha).max_abs() < 1e-9);
            let lhs = galerkin_product(&b, &root, &root);
            prop_assert!((&lhs - &second_moment(&b, &alpha)).max_abs() < 1e-9);
        }
    }
}
