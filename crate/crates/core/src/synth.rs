//! Synthetic benchmark data: four coefficient surfaces on a square grid,
//! standard-normal features, Gaussian noise, and a linear or nonlinear response.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::SpatialDataset;

/// Upper end of every normalized surface.
pub const SURFACE_MAX: f64 = 5.0;

const FEATURE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Linear,
    Circular,
    Cosine,
    Polycentric,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 4] = [
        SurfaceKind::Linear,
        SurfaceKind::Circular,
        SurfaceKind::Cosine,
        SurfaceKind::Polycentric,
    ];

    pub fn column_name(self) -> &'static str {
        match self {
            SurfaceKind::Linear => "beta_linear",
            SurfaceKind::Circular => "beta_circular",
            SurfaceKind::Cosine => "beta_cosine",
            SurfaceKind::Polycentric => "beta_polycentric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseForm {
    /// y = b1 x1 + b2 x2 + b3 x3 + b4 x4 + e
    Linear,
    /// y = b1 x1 + b2 x2 + b3 x3^2 + b4 x4^3 + e
    Nonlinear,
}

impl std::str::FromStr for ResponseForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ResponseForm::Linear),
            "nonlinear" => Ok(ResponseForm::Nonlinear),
            _ => Err(Error::InvalidArgument(format!("unknown response form '{s}'"))),
        }
    }
}

impl std::fmt::Display for ResponseForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResponseForm::Linear => "linear",
            ResponseForm::Nonlinear => "nonlinear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            _ => Err(Error::InvalidArgument(format!("unknown axis '{s}'"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// Generator settings. Grid coordinates are unit-spaced column/row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub grid_side: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub response_form: ResponseForm,
    /// Whether the noise term is added to the nonlinear response too.
    pub noise_in_nonlinear: bool,
    pub cosine_periods: f64,
    pub cosine_axis: Axis,
    /// Polycentric bump centers as fractions of the grid side.
    pub poly_centers: Vec<[f64; 2]>,
    /// Bump spread is `grid_side / poly_sigma_divisor`.
    pub poly_sigma_divisor: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            grid_side: 30,
            seed: 42,
            noise_sd: 0.5,
            response_form: ResponseForm::Linear,
            noise_in_nonlinear: true,
            cosine_periods: 2.0,
            cosine_axis: Axis::X,
            poly_centers: vec![[0.25, 0.25], [0.75, 0.25], [0.5, 0.75]],
            poly_sigma_divisor: 7.5,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_side < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid side must be at least 2, got {}",
                self.grid_side
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        if self.poly_centers.is_empty() || !(self.poly_sigma_divisor > 0.0) {
            return Err(Error::InvalidArgument("invalid polycentric parameters".into()));
        }
        Ok(())
    }

    /// Grid coordinates in row-major order.
    pub fn coords(&self) -> Vec<[f64; 2]> {
        let m = self.grid_side;
        (0..m * m)
            .map(|p| [(p % m) as f64, (p / m) as f64])
            .collect()
    }
}

/// Coefficient surfaces aligned with the generated point order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub names: Vec<String>,
    /// n x 4, columns in `SurfaceKind::ALL` order.
    pub values: Matrix,
}

impl GroundTruth {
    pub fn surface(&self, kind: SurfaceKind) -> Vec<f64> {
        let j = SurfaceKind::ALL.iter().position(|k| *k == kind).unwrap();
        self.values.column(j)
    }
}

fn min_max(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    raw.iter()
        .map(|v| {
            if span > 0.0 {
                ((v - lo) / span * SURFACE_MAX).clamp(0.0, SURFACE_MAX)
            } else {
                0.0
            }
        })
        .collect()
}

/// Raw (unnormalized) surface value at grid position (u, v).
fn raw_surface(kind: SurfaceKind, spec: &SynthSpec, u: f64, v: f64) -> f64 {
    let m = spec.grid_side as f64;
    match kind {
        SurfaceKind::Linear => u + v,
        SurfaceKind::Circular => {
            let c = (m - 1.0) / 2.0;
            -((u - c).powi(2) + (v - c).powi(2)).sqrt()
        }
        SurfaceKind::Cosine => {
            let t = match spec.cosine_axis {
                Axis::X => u,
                Axis::Y => v,
            };
            (2.0 * std::f64::consts::PI * spec.cosine_periods * t / (m - 1.0)).cos()
        }
        SurfaceKind::Polycentric => {
            let sigma = m / spec.poly_sigma_divisor;
            spec.poly_centers
                .iter()
                .map(|c| {
                    let d2 = (u - c[0] * m).powi(2) + (v - c[1] * m).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum()
        }
    }
}

/// Builds the four normalized coefficient surfaces over the grid.
pub fn make_gradients(spec: &SynthSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let coords = spec.coords();
    let n = coords.len();
    let mut values = Matrix::zeros(n, 4);
    for (j, kind) in SurfaceKind::ALL.iter().enumerate() {
        let raw: Vec<f64> = coords
            .iter()
            .map(|c| raw_surface(*kind, spec, c[0], c[1]))
            .collect();
        for (i, v) in min_max(&raw).into_iter().enumerate() {
            values.set(i, j, v);
        }
    }
    Ok(GroundTruth {
        names: SurfaceKind::ALL
            .iter()
            .map(|k| k.column_name().to_string())
            .collect(),
        values,
    })
}

/// Combines coefficients, features and noise into the response.
pub fn compose_response(
    betas: &Matrix,
    features: &Matrix,
    noise: &[f64],
    form: ResponseForm,
    noise_in_nonlinear: bool,
) -> Vec<f64> {
    (0..features.nrows())
        .map(|i| {
            let b = betas.row(i);
            let x = features.row(i);
            match form {
                ResponseForm::Linear => {
                    b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + b[3] * x[3] + noise[i]
                }
                ResponseForm::Nonlinear => {
                    let e = if noise_in_nonlinear { noise[i] } else { 0.0 };
                    b[0] * x[0] + b[1] * x[1] + b[2] * x[2].powi(2) + b[3] * x[3].powi(3) + e
                }
            }
        })
        .collect()
}

/// Draws the standard-normal features and the noise vector.
///
/// Features come from ChaCha8 stream 0 (point-major, x1..x4 per point) and
/// noise from stream 1, so changing `noise_sd` leaves the features untouched.
pub fn draw_inputs(spec: &SynthSpec) -> Result<(Matrix, Vec<f64>)> {
    spec.validate()?;
    let n = spec.grid_side * spec.grid_side;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(FEATURE_STREAM);
    let data: Vec<f64> = (0..n * 4).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(NOISE_STREAM);
    let noise = if spec.noise_sd > 0.0 {
        let dist = Normal::new(0.0, spec.noise_sd)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };
    Ok((Matrix::from_vec(n, 4, data), noise))
}

/// Generates the dataset (ids "0".."n-1", features x1..x4, response y) and its truth.
pub fn generate(spec: &SynthSpec) -> Result<(SpatialDataset, GroundTruth)> {
    let truth = make_gradients(spec)?;
    let (features, noise) = draw_inputs(spec)?;
    let y = compose_response(
        &truth.values,
        &features,
        &noise,
        spec.response_form,
        spec.noise_in_nonlinear,
    );
    let n = features.nrows();
    let ds = SpatialDataset::new(
        (0..n).map(|i| i.to_string()).collect(),
        spec.coords(),
        features,
        (1..=4).map(|j| format!("x{j}")).collect(),
        y,
    )?;
    Ok((ds, truth))
}
