//! Synthetic 2-D distributions for desk-scale GAN experiments.

use alloc::format;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{streams, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyDistribution {
    /// 8 Gaussians on a radius-2 circle at multiples of 45 degrees.
    Ring8,
    /// 25 Gaussians on a 5x5 grid with unit spacing centered at the origin.
    Grid25,
    /// Swiss roll `t (cos t, sin t) / 7.5`, `t` uniform in `[1.5 pi, 4.5 pi]`.
    SwissRoll,
}

impl ToyDistribution {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ring8" => Ok(Self::Ring8),
            "grid25" => Ok(Self::Grid25),
            "swissroll" => Ok(Self::SwissRoll),
            other => Err(Error::Data(format!("unknown toy distribution `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ring8 => "ring8",
            Self::Grid25 => "grid25",
            Self::SwissRoll => "swissroll",
        }
    }

    /// Mixture centers; empty for the swiss roll, which has no discrete modes.
    pub fn centers(self) -> Vec<[f64; 2]> {
        match self {
            Self::Ring8 => (0..8)
                .map(|k| {
                    let a = k as f64 * core::f64::consts::FRAC_PI_4;
                    [2.0 * libm::cos(a), 2.0 * libm::sin(a)]
                })
                .collect(),
            Self::Grid25 => (-2..=2)
                .flat_map(|i| (-2..=2).map(move |j| [f64::from(i), f64::from(j)]))
                .collect(),
            Self::SwissRoll => Vec::new(),
        }
    }

    pub fn sample(self, n: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Data("toy sampler needs n >= 1".into()));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::Data(format!("noise std {noise_std} must be finite and >= 0")));
        }
        let mut rng = RngStream::new(seed, streams::TOY);
        let mut values = Vec::with_capacity(2 * n);
        let centers = self.centers();
        for _ in 0..n {
            let [cx, cy] = match self {
                Self::SwissRoll => {
                    let t = 1.5 * core::f64::consts::PI * (1.0 + 2.0 * rng.uniform());
                    [t * libm::cos(t) / 7.5, t * libm::sin(t) / 7.5]
                }
                _ => centers[rng.below(centers.len())],
            };
            let (dx, dy) = if noise_std > 0.0 {
                (noise_std * rng.normal(), noise_std * rng.normal())
            } else {
                (0.0, 0.0)
            };
            values.push(cx + dx);
            values.push(cy + dy);
        }
        Dataset::unbounded(2, values)
    }
}

/// Draws `n` points from the named toy distribution.
pub fn toy_sampler(name: &str, n: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    ToyDistribution::parse(name)?.sample(n, noise_std, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_ring_hits_centers_exactly() {
        let ds = toy_sampler("ring8", 200, 0.0, 1).unwrap();
        let centers = ToyDistribution::Ring8.centers();
        for i in 0..ds.len() {
            let p = ds.example(i);
            assert!(centers.iter().any(|c| c[0] == p[0] && c[1] == p[1]));
        }
    }

    #[test]
    fn single_sample() {
        assert_eq!(toy_sampler("grid25", 1, 0.05, 3).unwrap().len(), 1);
    }

    #[test]
    fn unknown_name_and_zero_n() {
        assert!(toy_sampler("moons", 10, 0.0, 0).is_err());
        assert!(toy_sampler("ring8", 0, 0.0, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = toy_sampler("swissroll", 50, 0.1, 4).unwrap();
        let b = toy_sampler("swissroll", 50, 0.1, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, toy_sampler("swissroll", 50, 0.1, 5).unwrap());
    }

    #[test]
    fn grid_has_unit_spacing() {
        let c = ToyDistribution::Grid25.centers();
        assert_eq!(c.len(), 25);
        assert_eq!(c[0], [-2.0, -2.0]);
        assert_eq!(c[1], [-2.0, -1.0]);
        assert_eq!(c[24], [2.0, 2.0]);
    }
}
