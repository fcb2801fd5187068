use alloc::sync::Arc;

use super::kl::KlModes;

/// Centres of the quadrants `D₁..D₄`.
const QUADRANT_A: [f64; 4] = [-0.5, -0.5, 0.5, 0.5];
const QUADRANT_B: [f64; 4] = [-0.5, 0.5, -0.5, 0.5];

/// Parametric wind `w(x, y) = w₀(x) + Σ y_i w_i(x)`.
///
/// Every variant is the curl `(∂₂ψ, −∂₁ψ)` of a stream function that is
/// affine in `y`, so the field is divergence-free for every `y`.
#[derive(Clone, Debug)]
pub enum WindModel {
    /// Mean recirculation plus one rescaled copy per quadrant, amplitude `σ`.
    FourQuadrant { sigma: f64 },
    /// Mean recirculation plus KL modes of the stream function.
    Kl(Arc<KlModes>),
}

/// The mean stream function `ψ₀ = −(1 − x₁²)(1 − x₂²)`.
pub fn mean_stream(x: [f64; 2]) -> f64 {
    -(1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1])
}

/// The mean wind `w₀ = curl ψ₀`.
pub fn mean_wind(x: [f64; 2]) -> [f64; 2] {
    [2.0 * x[1] * (1.0 - x[0] * x[0]), -2.0 * x[0] * (1.0 - x[1] * x[1])]
}

fn quadrant_local(i: usize, x: [f64; 2]) -> Option<[f64; 2]> {
    let z = [2.0 * (x[0] - QUADRANT_A[i]), 2.0 * (x[1] - QUADRANT_B[i])];
    (z[0].abs() <= 1.0 && z[1].abs() <= 1.0).then_some(z)
}

impl WindModel {
    pub fn dim(&self) -> usize {
        match self {
            Self::FourQuadrant { .. } => 4,
            Self::Kl(kl) => kl.len(),
        }
    }

    /// Wind at `x` for parameter `y`.
    pub fn velocity(&self, x: [f64; 2], y: &[f64]) -> [f64; 2] {
        debug_assert_eq!(y.len(), self.dim());
        let mut w = mean_wind(x);
        match self {
            Self::FourQuadrant { sigma } => {
                // On a shared quadrant edge the first containing quadrant wins.
                if let Some(i) = (0..4).find(|&i| quadrant_local(i, x).is_some()) {
                    let p = mean_wind(quadrant_local(i, x).unwrap());
                    w[0] += sigma * y[i] * p[0];
                    w[1] += sigma * y[i] * p[1];
                }
            }
            Self::Kl(kl) => {
                for (i, yi) in y.iter().enumerate() {
                    let (_, g) = kl.mode(i, x);
                    let s = libm::sqrt(kl.eigenvalues[i]) * yi;
                    w[0] += s * g[1];
                    w[1] -= s * g[0];
                }
            }
        }
        w
    }

    /// Stream-function components at `x`: `out[0] = ψ₀(x)` and `out[1 + i]`
    /// the coefficient of `y_i`.
    pub fn stream_components(&self, x: [f64; 2], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = mean_stream(x);
        match self {
            Self::FourQuadrant { sigma } => {
                for i in 0..4 {
                    if let Some(z) = quadrant_local(i, x) {
                        out[1 + i] = 0.5 * sigma * mean_stream(z);
                    }
                }
            }
            Self::Kl(kl) => {
                for i in 0..kl.len() {
                    out[1 + i] = libm::sqrt(kl.eigenvalues[i]) * kl.mode(i, x).0;
                }
            }
        }
    }

    /// Largest nodal magnitude of the perturbation field multiplying `y_i`
    /// over a uniform `n × n` sample of `D`.
    pub fn perturbation_max_norm(&self, i: usize, n: usize) -> f64 {
        let mut y = alloc::vec![0.0; self.dim()];
        y[i] = 1.0;
        let mut best = 0.0f64;
        for a in 0..=n {
            for b in 0..=n {
                let x = [-1.0 + 2.0 * a as f64 / n as f64, -1.0 + 2.0 * b as f64 / n as f64];
                let w = self.velocity(x, &y);
                let m = mean_wind(x);
                best = best.max(libm::hypot(w[0] - m[0], w[1] - m[1]));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::kl::Covariance;

    #[test]
    fn mean_wind_values() {
        assert_eq!(mean_wind([0.0, 1.0]), [2.0, 0.0]);
        assert_eq!(mean_wind([0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn quadrant_centre_sees_only_mean() {
        let w = WindModel::FourQuadrant { sigma: 0.5 };
        let v = w.velocity([0.5, 0.5], &[0.3, -0.8, 0.9, 1.0]);
        assert_eq!(v, mean_wind([0.5, 0.5]));
    }

    #[test]
    fn stream_components_curl_to_velocity() {
        let kl = Arc::new(KlModes::new(Covariance::default(), 16, 3).unwrap());
        let models = [WindModel::FourQuadrant { sigma: 0.5 }, WindModel::Kl(kl)];
        let e = 1e-6;
        for m in &models {
            let d = m.dim();
            let y: alloc::vec::Vec<f64> = (0..d).map(|i| 0.7 - 0.4 * i as f64).collect();
            let psi = |x: [f64; 2]| {
                let mut c = alloc::vec![0.0; d + 1];
                m.stream_components(x, &mut c);
                c[0] + c[1..].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            };
            for x in [[0.3, 0.2], [-0.6, 0.7], [0.81, -0.33]] {
                let v = m.velocity(x, &y);
                let d2 = (psi([x[0], x[1] + e]) - psi([x[0], x[1] - e])) / (2.0 * e);
                let d1 = (psi([x[0] + e, x[1]]) - psi([x[0] - e, x[1]])) / (2.0 * e);
                assert!((v[0] - d2).abs() < 1e-6 && (v[1] + d1).abs() < 1e-6);
            }
        }
    }
}
