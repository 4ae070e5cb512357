//! Named deterministic initial level-set functions.

/// Deterministic `φ_0` with its analytic gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `slope · x + offset`.
    Plane { slope: [f64; 2], offset: f64 },
    /// `radius − |x − center|`, positive inside.
    Circle { center: [f64; 2], radius: f64 },
    /// `offset + slope · x + amplitude · sin(wavenumber · x)`.
    Wave {
        slope: [f64; 2],
        amplitude: f64,
        wavenumber: [f64; 2],
        offset: f64,
    },
}

impl InitialCondition {
    pub fn value(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::Plane { slope, offset } => slope[0] * p[0] + slope[1] * p[1] + offset,
            Self::Circle { center, radius } => radius - (p[0] - center[0]).hypot(p[1] - center[1]),
            Self::Wave {
                slope,
                amplitude,
                wavenumber,
                offset,
            } => {
                offset
                    + slope[0] * p[0]
                    + slope[1] * p[1]
                    + amplitude * (wavenumber[0] * p[0] + wavenumber[1] * p[1]).sin()
            }
        }
    }

    /// `∇φ_0(p)`; zero where it is undefined (the center of a circle).
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Plane { slope, .. } => *slope,
            Self::Circle { center, .. } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = dx.hypot(dy);
                if r == 0.0 {
                    [0.0, 0.0]
                } else {
                    [-dx / r, -dy / r]
                }
            }
            Self::Wave {
                slope,
                amplitude,
                wavenumber,
                ..
            } => {
                let c = amplitude * (wavenumber[0] * p[0] + wavenumber[1] * p[1]).cos();
                [slope[0] + c * wavenumber[0], slope[1] + c * wavenumber[1]]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let cases = [
            InitialCondition::Plane {
                slope: [1.0, -2.0],
                offset: 0.3,
            },
            InitialCondition::Circle {
                center: [0.1, 0.2],
                radius: 0.5,
            },
            InitialCondition::Wave {
                slope: [1.0, 0.0],
                amplitude: 0.2,
                wavenumber: [3.0, 1.0],
                offset: -0.1,
            },
        ];
        let p = [0.37, -0.41];
        let h = 1e-6;
        for ic in &cases {
            let g = ic.gradient(p);
            for a in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                let fd = (ic.value(pp) - ic.value(pm)) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn circle_is_signed_distance() {
        let c = InitialCondition::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(c.value([0.0, 0.0]), 1.0);
        assert_eq!(c.value([2.0, 0.0]), -1.0);
        assert_eq!(c.gradient([0.0, 0.0]), [0.0, 0.0]);
        let g = c.gradient([0.3, 0.4]);
        assert!((g[0].hypot(g[1]) - 1.0).abs() < 1e-15);
    }
}
