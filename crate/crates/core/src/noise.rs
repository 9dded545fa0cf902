//! Per-coordinate corruption laws.
//!
//! All zero-mean laws are parameterised by their standard deviation `sigma`,
//! so results at equal `sigma` are comparable across laws:
//!
//! | law      | draw                                   | std |
//! |----------|----------------------------------------|-----|
//! | Gaussian | `mu + sigma * N(0, 1)`                 | σ   |
//! | Uniform  | `U(-σ√3, σ√3)`                         | σ   |
//! | Discrete | one of `{-σ√1.5, 0, σ√1.5}`, equiprobable | σ |
//! | Laplace  | `Laplace(0, σ/√2)`                     | σ   |

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::rng::{self, tag, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSpec {
    Gaussian { sigma: f64, mu: f64 },
    Uniform { sigma: f64 },
    Discrete { sigma: f64 },
    Laplace { sigma: f64 },
}

/// Law names as used in config files and CSV tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseLaw {
    Gaussian,
    Uniform,
    Discrete,
    Laplace,
}

impl NoiseLaw {
    pub const ALL: [NoiseLaw; 4] = [Self::Gaussian, Self::Uniform, Self::Discrete, Self::Laplace];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Uniform => "uniform",
            Self::Discrete => "discrete",
            Self::Laplace => "laplace",
        }
    }

    /// `mu` is only meaningful for the Gaussian law and is rejected otherwise.
    pub fn with(&self, sigma: f64, mu: f64) -> Result<NoiseSpec> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::config("mu", "must be finite"));
        }
        if mu != 0.0 && *self != Self::Gaussian {
            return Err(Error::config("mu", format!("a mean shift is only defined for gaussian noise, not {}", self.name())));
        }
        Ok(match self {
            Self::Gaussian => NoiseSpec::Gaussian { sigma, mu },
            Self::Uniform => NoiseSpec::Uniform { sigma },
            Self::Discrete => NoiseSpec::Discrete { sigma },
            Self::Laplace => NoiseSpec::Laplace { sigma },
        })
    }
}

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::config("noise_law", format!("unknown noise law `{s}`")))
    }
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self::Gaussian { sigma, mu: 0.0 }
    }

    pub fn none() -> Self {
        Self::gaussian(0.0)
    }

    pub fn law(&self) -> NoiseLaw {
        match self {
            Self::Gaussian { .. } => NoiseLaw::Gaussian,
            Self::Uniform { .. } => NoiseLaw::Uniform,
            Self::Discrete { .. } => NoiseLaw::Discrete,
            Self::Laplace { .. } => NoiseLaw::Laplace,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma, .. }
            | Self::Uniform { sigma }
            | Self::Discrete { sigma }
            | Self::Laplace { sigma } => sigma,
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            Self::Gaussian { mu, .. } => mu,
            _ => 0.0,
        }
    }

    /// One scalar perturbation.
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            Self::Gaussian { sigma, mu } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            Self::Uniform { sigma } => {
                let u: f64 = rng.random();
                sigma * 3f64.sqrt() * (2.0 * u - 1.0)
            }
            Self::Discrete { sigma } => {
                let step = sigma * 1.5f64.sqrt();
                match rng.random_range(0..3u32) {
                    0 => -step,
                    1 => 0.0,
                    _ => step,
                }
            }
            Self::Laplace { sigma } => {
                let b = sigma / 2f64.sqrt();
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    fn perturb(&self, p: &Vec3, rng: &mut Rng) -> Vec3 {
        let dx = self.draw(rng);
        let dy = self.draw(rng);
        let dz = self.draw(rng);
        Vec3::new(p.x + dx, p.y + dy, p.z + dz)
    }
}

/// Independently perturbs every coordinate of every point.
///
/// Ordering and cardinality are preserved; normals are dropped because they
/// no longer describe the perturbed samples.
pub fn corrupt(cloud: &PointCloud, spec: &NoiseSpec, seed: u64) -> PointCloud {
    let mut rng = rng::substream(seed, &[tag::CORRUPT]);
    PointCloud::new(cloud.points.iter().map(|p| spec.perturb(p, &mut rng)).collect())
}

/// Two independent corruptions of the same cloud, drawn from the substreams
/// `(seed, 0)` and `(seed, 1)`.
pub fn make_pair(cloud: &PointCloud, spec: &NoiseSpec, seed: u64) -> (PointCloud, PointCloud) {
    let first = corrupt(cloud, spec, rng::derive_seed(seed, &[tag::PAIR, 0]));
    let second = corrupt(cloud, spec, rng::derive_seed(seed, &[tag::PAIR, 1]));
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|i| Vec3::new(i as f64 * 1e-3, (i % 7) as f64 * 0.1, -0.2))
                .collect(),
        )
    }

    fn displacements(clean: &PointCloud, noisy: &PointCloud) -> Vec<f64> {
        clean
            .points
            .iter()
            .zip(&noisy.points)
            .flat_map(|(a, b)| {
                let d = b - a;
                [d.x, d.y, d.z]
            })
            .collect()
    }

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn zero_sigma_is_identity() {
        let c = lattice(100);
        for law in NoiseLaw::ALL {
            let spec = law.with(0.0, 0.0).unwrap();
            assert_eq!(corrupt(&c, &spec, 42).points, c.points, "{law}");
            let (a, b) = make_pair(&c, &spec, 3);
            assert_eq!(a.points, c.points);
            assert_eq!(b.points, c.points);
        }
    }

    #[test]
    fn gaussian_moments() {
        // 333_334 points x 3 axes > 1e6 scalar draws
        let clean = PointCloud::new(vec![Vec3::zeros(); 333_334]);
        let noisy = corrupt(&clean, &NoiseSpec::gaussian(0.01), 1);
        for axis in 0..3 {
            let d: Vec<f64> = clean.points.iter().zip(&noisy.points).map(|(a, b)| b[axis] - a[axis]).collect();
            let (m, s) = mean_std(&d);
            let n = d.len() as f64;
            assert!(m.abs() < 5.0 * 0.01 / n.sqrt(), "axis {axis} mean {m}");
            // per-axis n ~ 3.3e5: relative std error of the std is ~0.12%
            assert!((s - 0.01).abs() < 0.01 * 0.01, "axis {axis} std {s}");
        }
        let all = displacements(&clean, &noisy);
        let (m, s) = mean_std(&all);
        assert!(m.abs() < 5.0 * 0.01 / (all.len() as f64).sqrt());
        assert!((s / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn biased_gaussian_mean() {
        let clean = PointCloud::new(vec![Vec3::zeros(); 100_000]);
        let spec = NoiseLaw::Gaussian.with(0.01, 0.02).unwrap();
        let d = displacements(&clean, &corrupt(&clean, &spec, 9));
        let (m, _) = mean_std(&d);
        assert!((m - 0.02).abs() < 5.0 * 0.01 / (d.len() as f64).sqrt());
    }

    #[test]
    fn discrete_support() {
        let clean = PointCloud::new(vec![Vec3::zeros(); 1000]);
        let spec = NoiseSpec::Discrete { sigma: 0.01 };
        let step = 0.01 * 1.5f64.sqrt();
        for v in displacements(&clean, &corrupt(&clean, &spec, 5)) {
            assert!(v == 0.0 || v == step || v == -step);
        }
    }

    #[test]
    fn uniform_support() {
        let clean = PointCloud::new(vec![Vec3::zeros(); 1000]);
        let a = 0.01 * 3f64.sqrt();
        for v in displacements(&clean, &corrupt(&clean, &NoiseSpec::Uniform { sigma: 0.01 }, 5)) {
            assert!(v.abs() <= a);
        }
    }

    #[test]
    fn pair_is_reproducible_and_decorrelated() {
        let clean = PointCloud::new(vec![Vec3::zeros(); 100_000]);
        let spec = NoiseSpec::gaussian(0.01);
        let (a1, b1) = make_pair(&clean, &spec, 77);
        let (a2, b2) = make_pair(&clean, &spec, 77);
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_ne!(a1, b1);

        for axis in 0..3 {
            let x: Vec<f64> = a1.points.iter().map(|p| p[axis]).collect();
            let y: Vec<f64> = b1.points.iter().map(|p| p[axis]).collect();
            let (mx, sx) = mean_std(&x);
            let (my, sy) = mean_std(&y);
            let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0);
            let rho = cov / (sx * sy);
            assert!(rho.abs() < 0.01, "axis {axis} rho {rho}");
        }
    }

    #[test]
    fn pair_average_converges_to_clean() {
        // mean of (p1 + p2) / 2 over K pairs -> clean point, std sigma / sqrt(2K)
        let clean = lattice(50);
        let sigma = 0.01;
        let k = 400;
        let mut acc = vec![Vec3::zeros(); clean.len()];
        for pair in 0..k {
            let (a, b) = make_pair(&clean, &NoiseSpec::gaussian(sigma), pair as u64);
            for (i, (pa, pb)) in a.points.iter().zip(&b.points).enumerate() {
                acc[i] += (pa + pb) * 0.5;
            }
        }
        for (sum, p) in acc.iter().zip(&clean.points) {
            let mean = sum / k as f64;
            assert!((mean - p).amax() < 3.0 * sigma / (k as f64).sqrt());
        }
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!("Laplace".parse::<NoiseLaw>().unwrap(), NoiseLaw::Laplace);
        assert!("cauchy".parse::<NoiseLaw>().is_err());
        assert!(NoiseLaw::Uniform.with(0.01, 0.01).is_err());
        assert!(NoiseLaw::Gaussian.with(-0.01, 0.0).is_err());
        let s = NoiseLaw::Gaussian.with(0.01, 0.005).unwrap();
        assert_eq!((s.sigma(), s.mu(), s.law()), (0.01, 0.005, NoiseLaw::Gaussian));
    }
}
