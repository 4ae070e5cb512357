//! Stochastic Galerkin Hamiltonian, fluxes and their Jacobians.
//!
//! For a gradient state `û = (û_1, û_2)` the Hamiltonian is `Ĥ = v̂ ∗ ‖u‖̂`.
//! In conservative form the axis-`a` flux places `Ĥ` in block `a`; the
//! capacity form uses the same flux with `v̂ = e_1`. The Jacobian in direction
//! `n` is `(n ⊗ A) · [P(û_1) P(û_2)]` with `A = P(v̂) P(‖u‖̂)⁻¹` (conservative) or
//! `A = P(‖u‖̂)⁻¹` (capacity).

use nalgebra::{Complex, DMatrix, DVector};

use crate::algebra::{
    galerkin_product, gpc_norm_with_floor, min_eigenvalue, p_matrix, spd_inv_sqrt, spd_inverse,
    sym_eigen, GpcMatrix, GpcVector,
};
use crate::basis::GpcBasis;
use crate::error::{Error, Result};

/// Smallest `|eigenvalue|` of `P(v̂)` accepted as invertible.
pub const VELOCITY_INVERTIBILITY_TOL: f64 = 1e-10;

/// Cell-local gPC modes of `∇φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradState {
    pub u1: GpcVector,
    /// Absent in 1D.
    pub u2: Option<GpcVector>,
    cached_norm: Option<GpcVector>,
}

impl GradState {
    pub fn new_1d(u1: GpcVector) -> Self {
        Self {
            u1,
            u2: None,
            cached_norm: None,
        }
    }

    pub fn new_2d(u1: GpcVector, u2: GpcVector) -> Self {
        assert_eq!(u1.len(), u2.len(), "gradient components differ in length");
        Self {
            u1,
            u2: Some(u2),
            cached_norm: None,
        }
    }

    /// Builds a state from `dims` component vectors.
    pub fn from_components(mut comps: Vec<GpcVector>) -> Self {
        match comps.len() {
            1 => Self::new_1d(comps.pop().unwrap()),
            2 => {
                let u2 = comps.pop().unwrap();
                Self::new_2d(comps.pop().unwrap(), u2)
            }
            n => panic!("gradient state needs 1 or 2 components, got {n}"),
        }
    }

    pub fn dims(&self) -> usize {
        if self.u2.is_some() {
            2
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    /// Component `a` (0-based).
    pub fn component(&self, a: usize) -> &GpcVector {
        match a {
            0 => &self.u1,
            1 => self.u2.as_ref().expect("1D state has no second component"),
            _ => panic!("axis {a} out of range"),
        }
    }

    pub fn components(&self) -> Vec<GpcVector> {
        let mut c = vec![self.u1.clone()];
        if let Some(u2) = &self.u2 {
            c.push(u2.clone());
        }
        c
    }

    pub fn cached_norm(&self) -> Option<&GpcVector> {
        self.cached_norm.as_ref()
    }

    /// Computes `‖u‖̂` and stores it in the state.
    pub fn with_norm(mut self, basis: &GpcBasis, floor: Option<f64>) -> Result<Self> {
        self.cached_norm = Some(gpc_norm_with_floor(basis, &self.components(), floor)?);
        Ok(self)
    }

    /// `‖u‖̂`, from the cache when present.
    pub fn norm(&self, basis: &GpcBasis) -> Result<GpcVector> {
        match &self.cached_norm {
            Some(n) => Ok(n.clone()),
            None => gpc_norm_with_floor(basis, &self.components(), None),
        }
    }

    /// `n_1 P(û_1) + n_2 P(û_2)`.
    pub fn directional_operator(&self, basis: &GpcBasis, n: &DirectionVector) -> GpcMatrix {
        let mut m = p_matrix(basis, &self.u1) * n.n1;
        if let Some(u2) = &self.u2 {
            m += p_matrix(basis, u2) * n.n2;
        }
        m
    }

    /// Stacked modes `(û_1; û_2)`.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.len();
        let d = self.dims();
        DVector::from_fn(n * d, |i, _| self.component(i / n)[i % n])
    }
}

/// Unit vector `n = (n_1, n_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionVector {
    pub n1: f64,
    pub n2: f64,
}

impl DirectionVector {
    pub fn new(n1: f64, n2: f64) -> Result<Self> {
        if ((n1 * n1 + n2 * n2) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "direction ({n1}, {n2}) is not a unit vector"
            )));
        }
        Ok(Self { n1, n2 })
    }

    /// Unit vector along `axis` (0-based).
    pub fn axis(axis: usize) -> Self {
        match axis {
            0 => Self { n1: 1.0, n2: 0.0 },
            1 => Self { n1: 0.0, n2: 1.0 },
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self {
            n1: theta.cos(),
            n2: theta.sin(),
        }
    }

    pub fn get(&self, a: usize) -> f64 {
        if a == 0 {
            self.n1
        } else {
            self.n2
        }
    }
}

/// Eigenvalues of a flux Jacobian with the matrix they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Real parts, ascending.
    pub eigenvalues: Vec<f64>,
    pub max_abs: f64,
    /// Whether a complete set of eigenvectors was found.
    pub complete: bool,
    /// `λ̃` (capacity), or `λ̂` / `v_0 λ̃` (conservative).
    pub symmetric_similar: GpcMatrix,
    /// Largest imaginary part; nonzero means the conservative system is not
    /// hyperbolic in this direction.
    pub max_imag: f64,
}

impl SpectrumReport {
    pub fn is_hyperbolic(&self) -> bool {
        self.max_imag == 0.0
    }
}

/// `Ĥ = v̂ ∗ ‖u‖̂`.
pub fn hamiltonian(basis: &GpcBasis, u: &GradState, v: &GpcVector) -> Result<GpcVector> {
    Ok(galerkin_product(basis, v, &u.norm(basis)?))
}

/// Conservative flux along `axis` (0-based): `Ĥ` in block `axis`, zeros elsewhere.
pub fn flux_conservative(
    basis: &GpcBasis,
    axis: usize,
    u: &GradState,
    v: &GpcVector,
) -> Result<Vec<GpcVector>> {
    let h = hamiltonian(basis, u, v)?;
    Ok(place_in_block(axis, u.dims(), h))
}

/// Capacity flux along `axis`: `‖u‖̂` in block `axis`.
pub fn flux_capacity(basis: &GpcBasis, axis: usize, u: &GradState) -> Result<Vec<GpcVector>> {
    let h = u.norm(basis)?;
    Ok(place_in_block(axis, u.dims(), h))
}

fn place_in_block(axis: usize, dims: usize, h: GpcVector) -> Vec<GpcVector> {
    assert!(axis < dims, "axis {axis} out of range for a {dims}D state");
    let n = h.len();
    let mut out = vec![GpcVector::zeros(n); dims];
    out[axis] = h;
    out
}

/// Checks `min |eig P(v̂)| > 1e-10`.
pub fn check_velocity_invertible(basis: &GpcBasis, v: &GpcVector) -> Result<()> {
    let p = p_matrix(basis, v);
    let m = if p.nrows() == 1 {
        p[(0, 0)].abs()
    } else {
        p.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, l| a.min(l.abs()))
    };
    if m <= VELOCITY_INVERTIBILITY_TOL {
        return Err(Error::SingularVelocityOperator {
            min_abs_eigenvalue: m,
        });
    }
    Ok(())
}

fn norm_operator(basis: &GpcBasis, u: &GradState) -> Result<GpcMatrix> {
    let p = p_matrix(basis, &u.norm(basis)?);
    let min = min_eigenvalue(&p);
    if min <= 0.0 {
        return Err(Error::NotSpd {
            min_eigenvalue: min,
        });
    }
    Ok(p)
}

fn assemble_jacobian(basis: &GpcBasis, a: &GpcMatrix, u: &GradState, n: &DirectionVector) -> GpcMatrix {
    let k = basis.len();
    let d = u.dims();
    let mut j = DMatrix::zeros(k * d, k * d);
    let ap: Vec<GpcMatrix> = (0..d).map(|b| a * p_matrix(basis, u.component(b))).collect();
    for row in 0..d {
        for (col, block) in ap.iter().enumerate() {
            j.view_mut((row * k, col * k), (k, k)).copy_from(&(block * n.get(row)));
        }
    }
    j
}

/// Conservative Jacobian `(n ⊗ P(v̂)P(‖u‖̂)⁻¹) [P(û_1) P(û_2)]`.
pub fn jacobian_conservative(
    basis: &GpcBasis,
    u: &GradState,
    v: &GpcVector,
    n: &DirectionVector,
) -> Result<GpcMatrix> {
    check_velocity_invertible(basis, v)?;
    let pn_inv = spd_inverse(&norm_operator(basis, u)?)?;
    let a = p_matrix(basis, v) * pn_inv;
    Ok(assemble_jacobian(basis, &a, u, n))
}

/// Capacity Jacobian `(n ⊗ P(‖u‖̂)⁻¹) [P(û_1) P(û_2)]`.
pub fn jacobian_capacity(basis: &GpcBasis, u: &GradState, n: &DirectionVector) -> Result<GpcMatrix> {
    let pn_inv = spd_inverse(&norm_operator(basis, u)?)?;
    Ok(assemble_jacobian(basis, &pn_inv, u, n))
}

/// `λ̃ = P(‖u‖̂)^{-1/2} (n_1 P(û_1) + n_2 P(û_2)) P(‖u‖̂)^{-1/2}`.
pub fn lambda_tilde(basis: &GpcBasis, u: &GradState, n: &DirectionVector) -> Result<GpcMatrix> {
    let w = spd_inv_sqrt(&norm_operator(basis, u)?)?;
    let m = &w * u.directional_operator(basis, n) * &w;
    Ok((&m + m.transpose()) * 0.5)
}

/// Capacity spectrum from the symmetric similar matrix `λ̃`; in 2D the
/// `|K|` zero eigenvalues of the Jacobian are included.
pub fn spectrum_capacity(basis: &GpcBasis, u: &GradState, n: &DirectionVector) -> Result<SpectrumReport> {
    let lt = lambda_tilde(basis, u, n)?;
    let (mut eig, _) = sym_eigen(&lt);
    if u.dims() == 2 {
        eig.extend(std::iter::repeat_n(0.0, basis.len()));
    }
    eig.sort_by(f64::total_cmp);
    let max_abs = eig.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok(SpectrumReport {
        eigenvalues: eig,
        max_abs,
        complete: true,
        symmetric_similar: lt,
        max_imag: 0.0,
    })
}

/// Conservative spectrum.
///
/// For deterministic `v̂ = v_0 e_1` the eigenvalues are `v_0 · eig(λ̃)`. A
/// random `v̂` has no symmetric similar matrix, so the eigenvalues of
/// `λ̂ = P(v̂)P(‖u‖̂)⁻¹(n_1 P(û_1) + n_2 P(û_2))` come from a real Schur
/// decomposition and complex pairs are reported through `max_imag`.
pub fn spectrum_conservative(
    basis: &GpcBasis,
    u: &GradState,
    v: &GpcVector,
    n: &DirectionVector,
) -> Result<SpectrumReport> {
    check_velocity_invertible(basis, v)?;
    if v.is_deterministic() {
        let mut report = spectrum_capacity(basis, u, n)?;
        let v0 = v[0];
        for l in &mut report.eigenvalues {
            *l *= v0;
        }
        report.eigenvalues.sort_by(f64::total_cmp);
        report.max_abs *= v0.abs();
        report.symmetric_similar *= v0;
        return Ok(report);
    }
    let pn_inv = spd_inverse(&norm_operator(basis, u)?)?;
    let lhat = p_matrix(basis, v) * pn_inv * u.directional_operator(basis, n);
    let (values, max_imag) = real_eigenvalues(&lhat);
    let complete = max_imag == 0.0 && eigenvectors_complete(&lhat, &values);
    let mut eig = values;
    if u.dims() == 2 {
        eig.extend(std::iter::repeat_n(0.0, basis.len()));
    }
    eig.sort_by(f64::total_cmp);
    let max_abs = eig.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok(SpectrumReport {
        eigenvalues: eig,
        max_abs,
        complete,
        symmetric_similar: lhat,
        max_imag,
    })
}

/// Real parts of the eigenvalues of a general matrix and the largest
/// imaginary part, zeroed when it is at rounding level.
pub fn real_eigenvalues(m: &DMatrix<f64>) -> (Vec<f64>, f64) {
    if m.nrows() == 1 {
        return (vec![m[(0, 0)]], 0.0);
    }
    let ev: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().copied().collect();
    let scale = 1.0 + ev.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let mut max_imag = ev.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if max_imag <= 1e-9 * scale {
        max_imag = 0.0;
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    (re, max_imag)
}

/// Eigenvector matrix from null spaces of `m − λI`, accepted when every
/// cluster has full geometric multiplicity and its condition number is at
/// most 1e8.
fn eigenvectors_complete(m: &DMatrix<f64>, eigenvalues: &[f64]) -> bool {
    let n = m.nrows();
    let scale = 1.0 + m.amax();
    let tol = 1e-8 * scale;
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut i = 0;
    while i < eigenvalues.len() {
        let mut j = i + 1;
        while j < eigenvalues.len() && eigenvalues[j] - eigenvalues[j - 1] <= tol {
            j += 1;
        }
        let mult = j - i;
        let lambda = eigenvalues[i..j].iter().sum::<f64>() / mult as f64;
        let shifted = m - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let Some(vt) = svd.v_t else { return false };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let null = order
            .iter()
            .take(mult)
            .filter(|&&k| svd.singular_values[k] <= 1e-6 * scale)
            .count();
        if null < mult {
            return false;
        }
        for &k in order.iter().take(mult) {
            columns.push(vt.row(k).transpose());
        }
        i = j;
    }
    let v = DMatrix::from_columns(&columns);
    let sv = v.singular_values();
    let smin = sv.min();
    smin > 0.0 && sv.max() / smin <= 1e8
}

/// Similarity of the capacity Jacobian to `Λ̃ = blockdiag(0, λ̃)`.
///
/// Returns `(V, Λ̃)` with `J̃ V = V Λ̃`. In 2D, `V = [ker C | n ⊗ P(‖u‖̂)^{-1/2}]`
/// with `C = [P(û_1) P(û_2)]`; in 1D, `V = P(‖u‖̂)^{-1/2}` and `Λ̃ = λ̃`.
pub fn capacity_similarity(
    basis: &GpcBasis,
    u: &GradState,
    n: &DirectionVector,
) -> Result<(GpcMatrix, GpcMatrix)> {
    let pn = norm_operator(basis, u)?;
    let s_inv = spd_inv_sqrt(&pn)?;
    let lt = lambda_tilde(basis, u, n)?;
    let k = basis.len();
    if u.dims() == 1 {
        return Ok((s_inv, lt));
    }
    let mut c = DMatrix::zeros(k, 2 * k);
    c.view_mut((0, 0), (k, k)).copy_from(&p_matrix(basis, &u.u1));
    c.view_mut((0, k), (k, k)).copy_from(&p_matrix(basis, u.component(1)));
    let (_, vecs) = sym_eigen(&(c.transpose() * &c));
    let mut v = DMatrix::zeros(2 * k, 2 * k);
    v.view_mut((0, 0), (2 * k, k)).copy_from(&vecs.columns(0, k));
    v.view_mut((0, k), (k, k)).copy_from(&(&s_inv * n.n1));
    v.view_mut((k, k), (k, k)).copy_from(&(&s_inv * n.n2));
    let mut big = DMatrix::zeros(2 * k, 2 * k);
    big.view_mut((k, k), (k, k)).copy_from(&lt);
    Ok((v, big))
}

/// Orthogonal eigendecomposition `P(v̂) = V D Vᵀ`, eigenvalues ascending.
///
/// Each eigenvector is signed so that its first entry above rounding level
/// is positive.
pub fn diagonalize_velocity(basis: &GpcBasis, v: &GpcVector) -> (GpcMatrix, DVector<f64>) {
    let (values, mut vectors) = sym_eigen(&p_matrix(basis, v));
    for mut col in vectors.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    (vectors, DVector::from_vec(values))
}

/// Spectral radius of the axis-`axis` capacity Jacobian, via the symmetric
/// congruence `L⁻¹ P(û_axis) L⁻ᵀ` with `P(‖u‖̂) = L Lᵀ`.
pub fn capacity_radius(basis: &GpcBasis, u_axis: &GpcVector, norm: &GpcVector) -> Result<f64> {
    if basis.len() == 1 {
        if norm[0] <= 0.0 {
            return Err(Error::NotSpd {
                min_eigenvalue: norm[0],
            });
        }
        return Ok(u_axis[0].abs() / norm[0]);
    }
    let pn = p_matrix(basis, norm);
    let Some(chol) = pn.clone().cholesky() else {
        return Err(Error::NotSpd {
            min_eigenvalue: min_eigenvalue(&pn),
        });
    };
    let l = chol.l();
    let pu = p_matrix(basis, u_axis);
    let x = l
        .solve_lower_triangular(&pu)
        .expect("Cholesky factor is nonsingular");
    let y = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor is nonsingular");
    Ok(crate::algebra::spectral_radius_sym(&y))
}

/// Spectral radius of the axis-`axis` conservative Jacobian with face
/// velocity `v`. Errors with `NonHyperbolic` on complex eigenvalues.
pub fn conservative_radius(
    basis: &GpcBasis,
    u_axis: &GpcVector,
    norm: &GpcVector,
    v: &GpcVector,
) -> Result<f64> {
    if v.is_deterministic() {
        return Ok(v[0].abs() * capacity_radius(basis, u_axis, norm)?);
    }
    let pn = p_matrix(basis, norm);
    let Some(chol) = pn.clone().cholesky() else {
        return Err(Error::NotSpd {
            min_eigenvalue: min_eigenvalue(&pn),
        });
    };
    let lhat = p_matrix(basis, v) * chol.solve(&p_matrix(basis, u_axis));
    let (values, max_imag) = real_eigenvalues(&lhat);
    if max_imag > 0.0 {
        return Err(Error::NonHyperbolic { max_imag });
    }
    Ok(values.iter().fold(0.0f64, |a, l| a.max(l.abs())))
}
