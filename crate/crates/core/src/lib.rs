//! Self-supervised denoising of neural signed-distance fields.
//!
//! A per-shape MLP field is fitted to noisy signed-distance targets: the
//! query locations come from one corrupted observation of a point cloud and
//! the regression targets from a frozen point-to-SDF estimator built on a
//! second, independent observation. Because the target error is roughly zero
//! mean, minimising the squared error drives the field towards the clean
//! signed distance.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`geometry`]: analytic ground-truth shapes, point clouds, triangle meshes
//!   and their text formats (XYZ, OBJ).
//! - [`noise`]: per-coordinate corruption laws and paired observations.
//! - [`sampling`]: surface sampling and query-batch construction.
//! - [`field`]: the Fourier-feature MLP, exact backprop and AdamW.
//! - [`target`]: the frozen k-NN plane-fit signed-distance estimator.
//! - [`trainer`]: the paired-noisy loop and its two baselines.
//! - [`extract`]: marching cubes.
//! - [`metrics`]: Chamfer, F-score, normal consistency, mesh normal
//!   consistency and volumetric IoU.
//! - [`experiment`]: config files, the command implementations behind the
//!   `n2n-sdf` binary, and sweep tables.

pub mod error;
pub mod experiment;
pub mod extract;
pub mod field;
pub mod geometry;
pub mod kdtree;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod sampling;
pub mod target;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::{AnalyticSdf, BoundingCube, PointCloud, ScalarField, TriangleMesh, Vec3};

/// Formats a float with nine significant digits, `%.9g` style.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into an extra digit (9.99999999995 -> 10.0000000);
        // the value still round-trips at nine digits so only trailing zeros matter.
        trim_zeros(&s)
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, exponent) = s.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mantissa), exponent)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
