//! Spatially varying gPC velocity fields `v̂(x) = (v̂_0(x), …, v̂_{|K|-1}(x))`.

use crate::algebra::GpcVector;
use crate::basis::GpcBasis;

/// Cell-centered samples on a regular grid, interpolated bilinearly and
/// extended by the nearest value outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
    /// Row-major, `values[j * nx + i]`.
    pub values: Vec<f64>,
}

impl Table {
    fn locate(p: f64, origin: f64, h: f64, n: usize) -> (usize, usize, f64) {
        if n == 1 {
            return (0, 0, 0.0);
        }
        let s = ((p - origin) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, i + 1, s - i as f64)
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        let (i0, i1, tx) = Self::locate(p[0], self.origin[0], self.dx, self.nx);
        let (j0, j1, ty) = Self::locate(p[1], self.origin[1], self.dy, self.ny);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        let lo = (1.0 - tx) * at(i0, j0) + tx * at(i1, j0);
        let hi = (1.0 - tx) * at(i0, j1) + tx * at(i1, j1);
        (1.0 - ty) * lo + ty * hi
    }

    /// Central differences of the interpolant with the table spacing.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let gx = (self.value([p[0] + self.dx, p[1]]) - self.value([p[0] - self.dx, p[1]])) / (2.0 * self.dx);
        let gy = if self.ny > 1 {
            (self.value([p[0], p[1] + self.dy]) - self.value([p[0], p[1] - self.dy])) / (2.0 * self.dy)
        } else {
            0.0
        };
        [gx, gy]
    }
}

/// Parametric spatial profile of one velocity mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeFunction {
    Constant(f64),
    /// `c0 + cx x + cy y`.
    Affine { c0: f64, cx: f64, cy: f64 },
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    GaussianBump {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    Tabulated(Table),
}

impl ModeFunction {
    pub fn value(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Affine { c0, cx, cy } => c0 + cx * p[0] + cy * p[1],
            Self::GaussianBump {
                amplitude,
                center,
                width,
            } => {
                let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Self::Tabulated(t) => t.value(p),
        }
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Constant(_) => [0.0, 0.0],
            Self::Affine { cx, cy, .. } => [*cx, *cy],
            Self::GaussianBump { center, width, .. } => {
                let f = self.value(p) / (width * width);
                [-(p[0] - center[0]) * f, -(p[1] - center[1]) * f]
            }
            Self::Tabulated(t) => t.gradient(p),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Self::Constant(c) if *c == 0.0)
    }

    fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }
}

/// gPC velocity, one spatial profile per basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySpec {
    modes: Vec<ModeFunction>,
}

impl VelocitySpec {
    pub fn new(modes: Vec<ModeFunction>) -> Self {
        Self { modes }
    }

    /// Space-independent velocity with the given gPC modes.
    pub fn uniform(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| ModeFunction::Constant(c)).collect())
    }

    /// Deterministic constant velocity `c e_1` for a basis of size `len`.
    pub fn constant(len: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; len];
        coeffs[0] = c;
        Self::uniform(&coeffs)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeFunction] {
        &self.modes
    }

    /// `true` when every mode beyond the mean vanishes identically.
    pub fn is_deterministic(&self) -> bool {
        self.modes.iter().skip(1).all(ModeFunction::is_zero)
    }

    /// `true` when no mode depends on space.
    pub fn is_uniform(&self) -> bool {
        self.modes.iter().all(ModeFunction::is_constant)
    }

    pub fn eval(&self, p: [f64; 2]) -> GpcVector {
        GpcVector::new(self.modes.iter().map(|m| m.value(p)).collect())
    }

    /// `(∂_{x_1} v̂, ∂_{x_2} v̂)` at `p`.
    pub fn gradient(&self, p: [f64; 2]) -> [GpcVector; 2] {
        let g: Vec<[f64; 2]> = self.modes.iter().map(|m| m.gradient(p)).collect();
        [
            GpcVector::new(g.iter().map(|d| d[0]).collect()),
            GpcVector::new(g.iter().map(|d| d[1]).collect()),
        ]
    }

    /// Realization `v(x, ξ) = Σ_k v̂_k(x) φ_k(ξ)`.
    pub fn realize(&self, basis: &GpcBasis, p: [f64; 2], xi: &[f64]) -> f64 {
        basis.eval_expansion(self.eval(p).as_slice(), xi)
    }
}
