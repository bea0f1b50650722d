//! Sensing ensembles, the real inverse-DFT dictionary and the forward model
//! `y = ΦΨx + e`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::DenseMatrix;
use crate::math::sqrt;
use crate::recovery::{MeasurementVector, SparseSignal};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ensemble {
    /// i.i.d. N(0, 1/m).
    #[default]
    Gaussian,
    /// ±1/√m with equal probability.
    Rademacher,
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            _ => Err(Error::InvalidConfig("ensemble must be gaussian or rademacher")),
        }
    }
}

/// Sparsifying basis Ψ.
#[derive(Debug, Clone, Copy)]
pub enum Dictionary<'a> {
    Identity,
    Basis(&'a DenseMatrix),
}

/// Random `m × n` sensing matrix.
///
/// Entries are drawn row-major from a single stream, so for a fixed seed the
/// first `m₀` rows of an `m × n` matrix are the rows of the `m₀ × n` matrix
/// rescaled by `√(m₀/m)`.
pub fn build_sensing_matrix(m: usize, n: usize, ensemble: Ensemble, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension("sensing matrix needs m >= 1 and n >= 1"));
    }
    if m > n {
        return Err(Error::InvalidDimension("sensing matrix needs m <= n"));
    }
    let mut rng = seed::rng(seed);
    let scale = 1.0 / sqrt(m as f64);
    let entries: Vec<f64> = match ensemble {
        Ensemble::Gaussian => (0..m * n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g * scale
            })
            .collect(),
        Ensemble::Rademacher => (0..m * n)
            .map(|_| if rng.random::<bool>() { scale } else { -scale })
            .collect(),
    };
    DenseMatrix::new(m, n, entries)
}

/// Real orthonormal `n × n` inverse-DFT basis.
///
/// Column order is the constant vector, then a cosine/sine pair for each
/// frequency `1..⌈n/2⌉`, then the alternating vector when `n` is even.
/// Row index is the sample (time) index.
pub fn build_dft_dictionary(n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("dictionary size must be >= 1"));
    }
    let mut psi = DenseMatrix::zeros(n, n)?;
    let dc = 1.0 / sqrt(n as f64);
    let pair = sqrt(2.0 / n as f64);
    let mut col = 0;
    for i in 0..n {
        psi.set(i, col, dc);
    }
    col += 1;
    for f in 1..n.div_ceil(2) {
        for i in 0..n {
            // Reduce f·i mod n first to keep the trig argument small.
            let angle = 2.0 * PI * ((f * i) % n) as f64 / n as f64;
            psi.set(i, col, pair * crate::math::cos(angle));
            psi.set(i, col + 1, pair * crate::math::sin(angle));
        }
        col += 2;
    }
    if n.is_multiple_of(2) {
        for i in 0..n {
            psi.set(i, col, if i % 2 == 0 { dc } else { -dc });
        }
        col += 1;
    }
    debug_assert_eq!(col, n);
    Ok(psi)
}

/// Effective dictionary `A = ΦΨ`.
pub fn effective_matrix(phi: &DenseMatrix, dictionary: Dictionary<'_>) -> Result<DenseMatrix> {
    match dictionary {
        Dictionary::Identity => Ok(phi.clone()),
        Dictionary::Basis(psi) => {
            if psi.rows() != psi.cols() || phi.cols() != psi.rows() {
                return Err(Error::InvalidDimension("dictionary must be square and match sensing columns"));
            }
            phi.matmul(psi)
        }
    }
}

/// `y = ΦΨx + e` with `e ~ N(0, noise_std²)` i.i.d.
pub fn measure(
    phi: &DenseMatrix,
    dictionary: Dictionary<'_>,
    x: &SparseSignal,
    noise_std: f64,
    seed: u64,
) -> Result<MeasurementVector> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidInput("noise_std must be finite and nonnegative"));
    }
    let signal = match dictionary {
        Dictionary::Identity => {
            if x.len() != phi.cols() {
                return Err(Error::InvalidDimension("signal length must equal sensing columns"));
            }
            x.values().to_vec()
        }
        Dictionary::Basis(psi) => {
            if psi.rows() != psi.cols() || psi.cols() != x.len() || phi.cols() != psi.rows() {
                return Err(Error::InvalidDimension("sensing, dictionary and signal sizes disagree"));
            }
            psi.matvec(x.values())?
        }
    };
    let mut y = phi.matvec(&signal)?;
    if noise_std > 0.0 {
        let mut rng = seed::rng(seed);
        for v in &mut y {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v += noise_std * g;
        }
    }
    Ok(MeasurementVector::new(y))
}
