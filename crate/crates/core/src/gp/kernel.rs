//! Stationary covariance functions.

use serde::{Deserialize, Serialize};

/// Covariance function of the field prior.
///
/// Both variants are squared-exponential in every input dimension, so they
/// share a Gaussian spectral density. The spatiotemporal variant treats the
/// last input coordinate as time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    SquaredExponential {
        /// One entry for an isotropic kernel, otherwise one per input dimension.
        lengthscales: Vec<f64>,
        variance: f64,
    },
    SpatioTemporal {
        spatial_lengthscale: f64,
        temporal_lengthscale: f64,
        variance: f64,
    },
}

impl Kernel {
    pub fn squared_exponential(lengthscale: f64, variance: f64) -> Self {
        Kernel::SquaredExponential {
            lengthscales: vec![lengthscale],
            variance,
        }
    }

    pub fn spatiotemporal(spatial: f64, temporal: f64, variance: f64) -> Self {
        Kernel::SpatioTemporal {
            spatial_lengthscale: spatial,
            temporal_lengthscale: temporal,
            variance,
        }
    }

    /// Signal variance, i.e. `k(x, x)`.
    pub fn variance(&self) -> f64 {
        match self {
            Kernel::SquaredExponential { variance, .. } | Kernel::SpatioTemporal { variance, .. } => {
                *variance
            }
        }
    }

    pub fn is_spatiotemporal(&self) -> bool {
        matches!(self, Kernel::SpatioTemporal { .. })
    }

    /// Lengthscale along dimension `dim` for inputs of dimension `input_dim`.
    pub fn lengthscale(&self, dim: usize, input_dim: usize) -> f64 {
        match self {
            Kernel::SquaredExponential { lengthscales, .. } => {
                if lengthscales.len() == 1 {
                    lengthscales[0]
                } else {
                    lengthscales[dim]
                }
            }
            Kernel::SpatioTemporal {
                spatial_lengthscale,
                temporal_lengthscale,
                ..
            } => {
                if dim + 1 == input_dim {
                    *temporal_lengthscale
                } else {
                    *spatial_lengthscale
                }
            }
        }
    }

    /// Checks hyperparameters against an input dimension.
    pub fn validate(&self, input_dim: usize) -> Result<(), String> {
        if input_dim == 0 {
            return Err("input dimension must be positive".into());
        }
        if !(self.variance() > 0.0 && self.variance().is_finite()) {
            return Err(format!("signal variance must be positive, got {}", self.variance()));
        }
        match self {
            Kernel::SquaredExponential { lengthscales, .. } => {
                if lengthscales.len() != 1 && lengthscales.len() != input_dim {
                    return Err(format!(
                        "expected 1 or {input_dim} lengthscales, got {}",
                        lengthscales.len()
                    ));
                }
            }
            Kernel::SpatioTemporal { .. } => {
                if input_dim < 2 {
                    return Err("spatiotemporal kernel needs at least one spatial and one time coordinate".into());
                }
            }
        }
        for d in 0..input_dim {
            let l = self.lengthscale(d, input_dim);
            if !(l > 0.0 && l.is_finite()) {
                return Err(format!("lengthscale {d} must be positive, got {l}"));
            }
        }
        Ok(())
    }

    /// Precomputes inverse lengthscales for fast evaluation.
    pub fn compile(&self, input_dim: usize) -> CompiledKernel {
        CompiledKernel {
            variance: self.variance(),
            inv_lengthscales: (0..input_dim)
                .map(|d| 1.0 / self.lengthscale(d, input_dim))
                .collect(),
            spatiotemporal: self.is_spatiotemporal(),
        }
    }
}

/// A kernel bound to an input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledKernel {
    variance: f64,
    inv_lengthscales: Vec<f64>,
    spatiotemporal: bool,
}

impl CompiledKernel {
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn input_dim(&self) -> usize {
        self.inv_lengthscales.len()
    }

    pub fn inv_lengthscales(&self) -> &[f64] {
        &self.inv_lengthscales
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.spatiotemporal {
            let t = self.inv_lengthscales.len() - 1;
            self.spatial(a, b) * self.temporal_correlation(a[t], b[t])
        } else {
            self.variance * (-0.5 * self.scaled_sq_dist(a, b, self.inv_lengthscales.len())).exp()
        }
    }

    /// Spatial factor `σ² exp(-|Δs|²/2l_s²)`; for non-temporal kernels this is the whole kernel.
    #[inline]
    pub fn spatial(&self, a: &[f64], b: &[f64]) -> f64 {
        let dims = if self.spatiotemporal {
            self.inv_lengthscales.len() - 1
        } else {
            self.inv_lengthscales.len()
        };
        self.variance * (-0.5 * self.scaled_sq_dist(a, b, dims)).exp()
    }

    #[inline]
    fn temporal_correlation(&self, ta: f64, tb: f64) -> f64 {
        let dt = ta - tb;
        if dt == 0.0 {
            return 1.0;
        }
        let s = dt * self.inv_lengthscales[self.inv_lengthscales.len() - 1];
        (-0.5 * s * s).exp()
    }

    #[inline]
    fn scaled_sq_dist(&self, a: &[f64], b: &[f64], dims: usize) -> f64 {
        let mut acc = 0.0;
        for d in 0..dims {
            let s = (a[d] - b[d]) * self.inv_lengthscales[d];
            acc += s * s;
        }
        acc
    }
}
