//! Sparse recovery: orthogonal matching pursuit, weighted iterative
//! shrinkage-thresholding, an exhaustive ℓ0 reference and support detection.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{least_squares, support_residual_norm, DenseMatrix};
use crate::math::{abs, norm2};
use crate::{Error, Result};

/// Largest `n` accepted by [`l0_oracle`].
pub const L0_ORACLE_MAX_N: usize = 20;

/// Headroom on the power-iteration estimate of `‖AᵀA‖₂` under
/// [`StepSizePolicy::InverseSpectralNorm`].
const STEP_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: Vec<f64>,
    declared_support: Option<Vec<usize>>,
}

impl SparseSignal {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n], declared_support: Some(Vec::new()) }
    }

    /// A signal with no declared support.
    pub fn dense(values: Vec<f64>) -> Self {
        Self { values, declared_support: None }
    }

    /// A signal whose entries outside `support` must be exactly zero.
    pub fn with_support(values: Vec<f64>, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.last().is_some_and(|&i| i >= values.len()) {
            return Err(Error::InvalidInput("support index out of range"));
        }
        let mut inside = vec![false; values.len()];
        support.iter().for_each(|&i| inside[i] = true);
        if values.iter().zip(&inside).any(|(&v, &s)| !s && v != 0.0) {
            return Err(Error::InvalidInput("nonzero value outside declared support"));
        }
        Ok(Self { values, declared_support: Some(support) })
    }

    /// Declares the support as the set of nonzero entries.
    pub fn from_nonzeros(values: Vec<f64>) -> Self {
        let support = values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        Self { values, declared_support: Some(support) }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn declared_support(&self) -> Option<&[usize]> {
        self.declared_support.as_deref()
    }

    /// Indices of nonzero entries, ascending.
    pub fn nonzero_support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }

    /// `‖x‖₀`.
    pub fn l0(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-coordinate ℓ1 penalties; all entries positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive and finite"));
        }
        Ok(Self { weights })
    }

    /// All-ones weights: conventional ℓ1.
    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0; n] }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Rescaled so the weights average to one.
    pub fn normalized_mean(&self) -> Self {
        let mean = self.weights.iter().sum::<f64>() / self.weights.len() as f64;
        if self.weights.iter().all(|&w| w == self.weights[0]) {
            return Self::uniform(self.weights.len());
        }
        Self { weights: self.weights.iter().map(|w| w / mean).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizePolicy {
    Fixed(f64),
    /// `0.99 / ‖AᵀA‖₂` with the norm estimated by power iteration.
    InverseSpectralNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    pub max_iterations: usize,
    /// OMP residual-norm stop and ISTA objective-decrease stop.
    pub residual_tolerance: f64,
    pub step_size: StepSizePolicy,
    /// ℓ1 regularization λ.
    pub lambda: f64,
    /// Detection threshold τ; `None` selects `3·noise_std/√m` in the pipeline.
    pub support_threshold: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            residual_tolerance: 1e-10,
            step_size: StepSizePolicy::InverseSpectralNorm,
            lambda: 0.05,
            support_threshold: None,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1"));
        }
        if !(self.residual_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("residual_tolerance must be >= 0"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite and >= 0"));
        }
        if let StepSizePolicy::Fixed(s) = self.step_size {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidConfig("fixed step size must be positive"));
            }
        }
        if self.support_threshold.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::InvalidConfig("support_threshold must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpReport {
    pub signal: SparseSignal,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Orthogonal matching pursuit.
pub fn omp(a: &DenseMatrix, y: &MeasurementVector, sparsity_budget: usize, residual_tolerance: f64) -> Result<SparseSignal> {
    omp_report(a, y, sparsity_budget, residual_tolerance).map(|r| r.signal)
}

/// [`omp`] with iteration count and final residual.
///
/// Each step picks the unselected column with the largest normalized
/// correlation `|aⱼᵀr| / ‖aⱼ‖` (lowest index on ties) and re-fits by least
/// squares on the accumulated support. Stops at `sparsity_budget` columns or
/// when `‖r‖₂ ≤ residual_tolerance`.
pub fn omp_report(
    a: &DenseMatrix,
    y: &MeasurementVector,
    sparsity_budget: usize,
    residual_tolerance: f64,
) -> Result<OmpReport> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::InvalidDimension("measurement length must equal matrix rows"));
    }
    if sparsity_budget > m {
        return Err(Error::InvalidBudget { budget: sparsity_budget, rows: m });
    }
    if !(residual_tolerance >= 0.0) {
        return Err(Error::InvalidConfig("residual_tolerance must be >= 0"));
    }
    let norms: Vec<f64> = a.column_norms_sq().into_iter().map(crate::math::sqrt).collect();
    let budget = sparsity_budget.min(n);
    let mut support: Vec<usize> = Vec::with_capacity(budget);
    let mut selected = vec![false; n];
    let mut coef: Vec<f64> = Vec::new();
    let mut residual = y.values().to_vec();
    let mut residual_norm = norm2(&residual);
    let mut iterations = 0;

    while support.len() < budget && residual_norm > residual_tolerance {
        let corr = a.tr_matvec(&residual)?;
        let mut best: Option<(usize, f64)> = None;
        for (j, (&c, &nj)) in corr.iter().zip(&norms).enumerate() {
            if selected[j] || nj == 0.0 {
                continue;
            }
            let score = abs(c) / nj;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        selected[j] = true;
        support.push(j);
        coef = least_squares(a, &support, y.values())?;
        residual = y.values().to_vec();
        for (&c, &v) in support.iter().zip(&coef) {
            for (r, ri) in residual.iter_mut().enumerate() {
                *ri -= a.get(r, c) * v;
            }
        }
        residual_norm = norm2(&residual);
        iterations += 1;
    }

    let mut values = vec![0.0; n];
    for (&c, &v) in support.iter().zip(&coef) {
        values[c] = v;
    }
    let signal = SparseSignal::with_support(values, support)?;
    Ok(OmpReport { signal, iterations, residual_norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IstaReport {
    pub signal: SparseSignal,
    /// Objective at the start point followed by the value after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub step: f64,
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `½‖y − Ax‖² + Σᵢ (λwᵢ)|xᵢ|`.
pub fn weighted_objective(a: &DenseMatrix, y: &[f64], w: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x).expect("dimensions checked by caller");
    let fit: f64 = y.iter().zip(&ax).map(|(yi, ai)| (yi - ai) * (yi - ai)).sum();
    let penalty: f64 = w.iter().zip(x).map(|(wi, xi)| (lambda * wi) * abs(*xi)).sum();
    0.5 * fit + penalty
}

/// Weighted ℓ1 recovery by iterative shrinkage-thresholding.
pub fn ista_weighted_l1(a: &DenseMatrix, y: &MeasurementVector, w: &WeightVector, config: &RecoveryConfig) -> Result<SparseSignal> {
    ista_weighted_l1_report(a, y, w, config).map(|r| r.signal)
}

/// [`ista_weighted_l1`] with the full objective trace.
///
/// Minimizes `½‖y − Ax‖² + λ Σ wᵢ|xᵢ|` from `x = 0` by a gradient step on the
/// quadratic followed by soft-thresholding coordinate `i` at `λ·wᵢ·step`.
/// Stops once an iteration lowers the objective by less than
/// `config.residual_tolerance`, or after `config.max_iterations`.
pub fn ista_weighted_l1_report(
    a: &DenseMatrix,
    y: &MeasurementVector,
    w: &WeightVector,
    config: &RecoveryConfig,
) -> Result<IstaReport> {
    config.validate()?;
    let n = a.cols();
    if y.len() != a.rows() {
        return Err(Error::InvalidDimension("measurement length must equal matrix rows"));
    }
    if w.len() != n {
        return Err(Error::InvalidDimension("weight length must equal matrix columns"));
    }
    if !a.is_finite() || y.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite entries in matrix or measurements"));
    }
    let step = match config.step_size {
        StepSizePolicy::Fixed(s) => s,
        StepSizePolicy::InverseSpectralNorm => {
            let l = a.spectral_norm_sq();
            if l > 0.0 { STEP_MARGIN / l } else { 1.0 }
        }
    };
    let weights = w.as_slice();
    let yv = y.values();
    let thresholds: Vec<f64> = weights.iter().map(|wi| config.lambda * wi * step).collect();

    let mut x = vec![0.0; n];
    let mut objective = weighted_objective(a, yv, weights, config.lambda, &x);
    let mut trace = Vec::with_capacity(64);
    trace.push(objective);
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let ax = a.matvec(&x)?;
        let residual: Vec<f64> = yv.iter().zip(&ax).map(|(yi, ai)| yi - ai).collect();
        let grad_neg = a.tr_matvec(&residual)?;
        for ((xi, g), t) in x.iter_mut().zip(&grad_neg).zip(&thresholds) {
            *xi = soft_threshold(*xi + step * g, *t);
        }
        iterations += 1;
        let next = weighted_objective(a, yv, weights, config.lambda, &x);
        trace.push(next);
        let decrease = objective - next;
        objective = next;
        if decrease < config.residual_tolerance {
            break;
        }
    }

    Ok(IstaReport { signal: SparseSignal::from_nonzeros(x), objective_trace: trace, iterations, step })
}

/// Exhaustive ℓ0 reference: the support of size ≤ `k` whose least-squares fit
/// minimizes `‖y − Ax‖₂`.
///
/// Supports are visited in lexicographic order and a later support only wins
/// by more than `1e-12·max(‖y‖₂, 1)`, so near-ties go to the lexicographically
/// smallest support. Rank-deficient supports are skipped; their residual is
/// attained by one of their subsets.
pub fn l0_oracle(a: &DenseMatrix, y: &MeasurementVector, k: usize) -> Result<SparseSignal> {
    let (m, n) = (a.rows(), a.cols());
    if n > L0_ORACLE_MAX_N {
        return Err(Error::InstanceTooLarge { n, limit: L0_ORACLE_MAX_N });
    }
    if y.len() != m {
        return Err(Error::InvalidDimension("measurement length must equal matrix rows"));
    }
    if k > m {
        return Err(Error::InvalidBudget { budget: k, rows: m });
    }
    let tie = 1e-12 * norm2(y.values()).max(1.0);
    let mut best = Candidate { support: Vec::new(), coef: Vec::new(), residual: norm2(y.values()) };
    let mut current = Vec::with_capacity(k);
    search(a, y.values(), k.min(n), 0, &mut current, &mut best, tie);

    let mut values = vec![0.0; n];
    for (&c, &v) in best.support.iter().zip(&best.coef) {
        values[c] = v;
    }
    SparseSignal::with_support(values, best.support)
}

struct Candidate {
    support: Vec<usize>,
    coef: Vec<f64>,
    residual: f64,
}

fn search(a: &DenseMatrix, y: &[f64], k: usize, start: usize, current: &mut Vec<usize>, best: &mut Candidate, tie: f64) {
    if current.len() == k {
        return;
    }
    for j in start..a.cols() {
        current.push(j);
        if let Ok(coef) = least_squares(a, current, y) {
            let residual = support_residual_norm(a, current, &coef, y);
            if residual < best.residual - tie {
                *best = Candidate { support: current.clone(), coef, residual };
            }
        }
        search(a, y, k, j + 1, current, best, tie);
        current.pop();
    }
}

/// Band `i` is occupied iff `|x̂ᵢ| > τ`.
pub fn support_detect(estimate: &SparseSignal, threshold: f64) -> Vec<bool> {
    debug_assert!(threshold >= 0.0);
    estimate.values().iter().map(|v| abs(*v) > threshold).collect()
}

/// `‖y − Ax‖₂`.
pub fn residual_norm(a: &DenseMatrix, y: &MeasurementVector, x: &SparseSignal) -> Result<f64> {
    let ax = a.matvec(x.values())?;
    Ok(norm2(&y.values().iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()))
}

/// Largest `|aⱼᵀy|`: the smallest λ for which uniform-weight ℓ1 returns zero.
pub fn lambda_max(a: &DenseMatrix, y: &MeasurementVector) -> Result<f64> {
    Ok(a.tr_matvec(y.values())?.iter().fold(0.0, |acc, v| acc.max(abs(*v))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> DenseMatrix {
        DenseMatrix::identity(n).unwrap()
    }

    #[test]
    fn omp_identity_single_atom() {
        let y = MeasurementVector::new(vec![0.0, 5.0, 0.0, 0.0]);
        let x = omp(&identity(4), &y, 1, 0.0).unwrap();
        assert_eq!(x.values(), &[0.0, 5.0, 0.0, 0.0]);
        assert_eq!(x.declared_support(), Some(&[1usize][..]));
    }

    #[test]
    fn omp_zero_measurements_take_no_iterations() {
        let a = crate::sensing::build_sensing_matrix(4, 9, crate::sensing::Ensemble::Gaussian, 3).unwrap();
        let r = omp_report(&a, &MeasurementVector::new(vec![0.0; 4]), 3, 0.0).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.signal.l0(), 0);
    }

    #[test]
    fn omp_budget_above_rows() {
        let err = omp(&identity(3), &MeasurementVector::new(vec![1.0, 0.0, 0.0]), 4, 0.0).unwrap_err();
        assert_eq!(err, Error::InvalidBudget { budget: 4, rows: 3 });
    }

    #[test]
    fn omp_reports_degenerate_support() {
        // Column 1 duplicates column 0 and y has energy outside their span.
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let y = MeasurementVector::new(vec![1.0, 1.0]);
        assert_eq!(omp(&a, &y, 2, 0.0).unwrap_err(), Error::DegenerateSupport { support: vec![0, 1] });
    }

    #[test]
    fn ista_full_shrinkage() {
        let a = crate::sensing::build_sensing_matrix(5, 12, crate::sensing::Ensemble::Gaussian, 11).unwrap();
        let y = MeasurementVector::new(vec![0.3, -1.0, 2.0, 0.1, 0.7]);
        let cfg = RecoveryConfig { lambda: lambda_max(&a, &y).unwrap(), ..RecoveryConfig::default() };
        let x = ista_weighted_l1(&a, &y, &WeightVector::uniform(12), &cfg).unwrap();
        assert_eq!(x.l0(), 0);
    }

    #[test]
    fn ista_identity_closed_form() {
        let y = vec![3.0, -0.2, 0.5, -2.5, 0.0];
        let lambda = 0.4;
        let cfg = RecoveryConfig { lambda, residual_tolerance: 1e-20, ..RecoveryConfig::default() };
        let x = ista_weighted_l1(&identity(5), &MeasurementVector::new(y.clone()), &WeightVector::uniform(5), &cfg).unwrap();
        for (xi, yi) in x.values().iter().zip(&y) {
            let want = yi.signum() * (yi.abs() - lambda).max(0.0);
            assert!((xi - want).abs() < 1e-8, "{xi} vs {want}");
        }
    }

    #[test]
    fn ista_config_errors() {
        let y = MeasurementVector::new(vec![1.0; 3]);
        let cfg = RecoveryConfig { step_size: StepSizePolicy::Fixed(0.0), ..RecoveryConfig::default() };
        assert!(matches!(
            ista_weighted_l1(&identity(3), &y, &WeightVector::uniform(3), &cfg),
            Err(Error::InvalidConfig(_))
        ));
        let bad = MeasurementVector::new(vec![1.0, f64::NAN, 0.0]);
        assert!(matches!(
            ista_weighted_l1(&identity(3), &bad, &WeightVector::uniform(3), &RecoveryConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(WeightVector::uniform(3).as_slice(), &[1.0, 1.0, 1.0]);
        let w = WeightVector::new(vec![0.2, 0.2, 0.2]).unwrap().normalized_mean();
        assert_eq!(w, WeightVector::uniform(3));
    }

    #[test]
    fn l0_trivial_cases() {
        let x = l0_oracle(&identity(3), &MeasurementVector::new(vec![0.0; 3]), 2).unwrap();
        assert_eq!(x.l0(), 0);
        let x = l0_oracle(&identity(3), &MeasurementVector::new(vec![3.0, 0.0, 0.0]), 1).unwrap();
        assert_eq!(x.values(), &[3.0, 0.0, 0.0]);
        let big = DenseMatrix::zeros(2, 21).unwrap();
        assert_eq!(
            l0_oracle(&big, &MeasurementVector::new(vec![0.0; 2]), 1).unwrap_err(),
            Error::InstanceTooLarge { n: 21, limit: 20 }
        );
    }

    #[test]
    fn detect_is_strict() {
        let x = SparseSignal::dense(vec![0.5, 0.0, 2.0, -1.0]);
        assert_eq!(support_detect(&x, 1.0), vec![false, false, true, false]);
        assert!(support_detect(&SparseSignal::zeros(4), 0.0).iter().all(|b| !b));
    }

    #[test]
    fn with_support_rejects_stray_values() {
        assert!(SparseSignal::with_support(vec![1.0, 2.0], vec![0]).is_err());
        assert!(SparseSignal::with_support(vec![1.0, 0.0], vec![0]).is_ok());
    }
}
