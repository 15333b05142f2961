//! Spatial weight vectors under Gaussian, binary and truncated-Gaussian kernels,
//! with fixed-distance or adaptive nearest-neighbor bandwidths.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spatial::DistanceIndex;

/// Gaussian-binary weights use sigma = radius / 3.
pub const GAUSSIAN_BINARY_SIGMA_DIVISOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Gaussian,
    Binary,
    GaussianBinary,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [
        KernelKind::Gaussian,
        KernelKind::Binary,
        KernelKind::GaussianBinary,
    ];
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Binary => "binary",
            KernelKind::GaussianBinary => "gaussian_binary",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "binary" => Ok(KernelKind::Binary),
            "gaussian_binary" => Ok(KernelKind::GaussianBinary),
            _ => Err(Error::InvalidArgument(format!("unknown kernel kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandwidthMode {
    Fixed,
    Adaptive,
}

impl BandwidthMode {
    pub const ALL: [BandwidthMode; 2] = [BandwidthMode::Adaptive, BandwidthMode::Fixed];
}

impl fmt::Display for BandwidthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandwidthMode::Fixed => "fixed",
            BandwidthMode::Adaptive => "adaptive",
        })
    }
}

impl FromStr for BandwidthMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(BandwidthMode::Fixed),
            "adaptive" => Ok(BandwidthMode::Adaptive),
            _ => Err(Error::InvalidArgument(format!("unknown bandwidth mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Distance radius.
    Fixed(f64),
    /// Neighbor count, the target included.
    Adaptive(usize),
}

impl Bandwidth {
    pub fn mode(&self) -> BandwidthMode {
        match self {
            Bandwidth::Fixed(_) => BandwidthMode::Fixed,
            Bandwidth::Adaptive(_) => BandwidthMode::Adaptive,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Bandwidth::Fixed(b) => b,
            Bandwidth::Adaptive(k) => k as f64,
        }
    }

    /// Builds a bandwidth of the given mode from a numeric grid value.
    pub fn from_value(mode: BandwidthMode, value: f64) -> Result<Self> {
        match mode {
            BandwidthMode::Fixed => Ok(Bandwidth::Fixed(value)),
            BandwidthMode::Adaptive => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "adaptive bandwidth must be a whole neighbor count, got {value}"
                    )));
                }
                Ok(Bandwidth::Adaptive(value as usize))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: Bandwidth,
    /// Scales sigma of the Gaussian kinds. 1.0 by default.
    pub sigma_multiplier: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: Bandwidth) -> Self {
        KernelSpec {
            kind,
            bandwidth,
            sigma_multiplier: 1.0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.bandwidth {
            Bandwidth::Fixed(b) if !(b > 0.0 && b.is_finite()) => Err(Error::InvalidArgument(
                format!("fixed bandwidth must be > 0, got {b}"),
            )),
            Bandwidth::Adaptive(k) if k < 2 || k > n => Err(Error::InvalidArgument(format!(
                "adaptive bandwidth must satisfy 2 <= k <= {n}, got {k}"
            ))),
            _ if !(self.sigma_multiplier > 0.0 && self.sigma_multiplier.is_finite()) => {
                Err(Error::InvalidArgument(format!(
                    "sigma multiplier must be > 0, got {}",
                    self.sigma_multiplier
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}={}",
            self.kind,
            self.bandwidth.mode(),
            self.bandwidth.value()
        )
    }
}

/// Raw (unnormalized) weights of every observation for one target point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub target: usize,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn nonzero_indices(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

fn gaussian(d: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (-(d * d) / (2.0 * sigma * sigma)).exp()
    } else if d == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Computes the weight of every point relative to target `i`.
pub fn weights_for(index: &DistanceIndex, spec: &KernelSpec, i: usize) -> Result<WeightVector> {
    let n = index.len();
    spec.validate(n)?;
    if i >= n {
        return Err(Error::InvalidArgument(format!("point {i} out of range 0..{n}")));
    }
    let dist = index.distances_from(i);

    // membership of the neighbor set and the effective radius
    let (inside, radius): (Vec<bool>, f64) = match spec.bandwidth {
        Bandwidth::Fixed(b) => (dist.iter().map(|&d| d <= b).collect(), b),
        Bandwidth::Adaptive(k) => {
            let mut inside = vec![false; n];
            inside[i] = true;
            let mut radius = 0.0f64;
            let mut taken = 1;
            for &j in index.neighbor_order(i) {
                if taken == k {
                    break;
                }
                let j = j as usize;
                if j == i {
                    continue;
                }
                inside[j] = true;
                radius = radius.max(dist[j]);
                taken += 1;
            }
            (inside, radius)
        }
    };

    let weights: Vec<f64> = match spec.kind {
        KernelKind::Gaussian => {
            let sigma = radius * spec.sigma_multiplier;
            dist.iter().map(|&d| gaussian(d, sigma)).collect()
        }
        KernelKind::Binary => inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        KernelKind::GaussianBinary => {
            let sigma = radius / GAUSSIAN_BINARY_SIGMA_DIVISOR * spec.sigma_multiplier;
            dist.iter()
                .zip(&inside)
                .map(|(&d, &b)| if b { gaussian(d, sigma) } else { 0.0 })
                .collect()
        }
    };
    let wv = WeightVector { target: i, weights };
    let nonzero = wv.nonzero_count();
    if nonzero < 2 {
        return Err(Error::DegenerateNeighborhood { point: i, nonzero });
    }
    Ok(wv)
}
