//! Closed-form spectra of the linear operator, the characteristic roots of
//! the per-mode relaxation `eps*u'' + u' + lambda*u = 0`, the boundary
//! projector coefficients, and the spectral gap conditions.
//!
//! Indices in public APIs are 1-based mode numbers (`n = 1` is the lowest
//! eigenvalue), matching the usual way the conditions are stated. Storage is
//! 0-based.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 64;

/// Minimum number of tail modes kept beyond the manifold dimension.
pub const MIN_TAIL_MODES: usize = 8;

/// Tolerance used when verifying that theta solves its defining quadratic.
const THETA_ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorModel {
    /// `-d^2/dx^2` on `(0, length)` with Dirichlet conditions.
    Dirichlet1D { length: f64 },
    /// `-scale * Laplacian` on the flat torus `T^dimension`, zero mode removed.
    Torus { dimension: usize, scale: f64 },
    /// Laplace-Beltrami operator on the unit sphere `S^dimension`, zero mode removed.
    Sphere { dimension: usize },
    Custom { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSequence {
    values: Vec<f64>,
    generator: OperatorModel,
}

impl EigenvalueSequence {
    /// Builds the first `count` eigenvalues of `model`, repeated according to
    /// multiplicity and sorted.
    pub fn new(model: OperatorModel, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::validation(format!(
                "mode count must be at least 2, got {count}"
            )));
        }
        let values = match &model {
            OperatorModel::Dirichlet1D { length } => {
                if !(*length > 0.0 && length.is_finite()) {
                    return Err(Error::validation(format!(
                        "dirichlet1d length must be positive, got {length}"
                    )));
                }
                // pi/length first so that length = pi gives exactly n^2.
                let k = PI / length;
                (1..=count).map(|n| (n as f64 * k).powi(2)).collect()
            }
            OperatorModel::Torus { dimension, scale } => {
                if *dimension == 0 || !(*scale > 0.0) {
                    return Err(Error::validation(format!(
                        "torus needs dimension >= 1 and scale > 0, got ({dimension}, {scale})"
                    )));
                }
                torus_values(*dimension, *scale, count)
            }
            OperatorModel::Sphere { dimension } => {
                if *dimension == 0 {
                    return Err(Error::validation("sphere dimension must be >= 1"));
                }
                sphere_values(*dimension, count)
            }
            OperatorModel::Custom { values } => {
                if values.len() < count {
                    return Err(Error::validation(format!(
                        "custom list has {} values, {count} requested",
                        values.len()
                    )));
                }
                let values = values[..count].to_vec();
                validate_sorted_positive(&values)?;
                values
            }
        };
        Ok(Self {
            values,
            generator: model,
        })
    }

    /// Convenience constructor for a user list, validating positivity and order.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let count = values.len();
        Self::new(OperatorModel::Custom { values }, count)
    }

    pub fn dirichlet(length: f64, count: usize) -> Result<Self> {
        Self::new(OperatorModel::Dirichlet1D { length }, count)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn generator(&self) -> &OperatorModel {
        &self.generator
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// `lambda_n` for the 1-based mode number `n`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    /// True when the eigenfunctions are the Dirichlet sine basis.
    pub fn is_sine_basis(&self) -> bool {
        matches!(self.generator, OperatorModel::Dirichlet1D { .. })
    }

    pub fn dirichlet_length(&self) -> Option<f64> {
        match self.generator {
            OperatorModel::Dirichlet1D { length } => Some(length),
            _ => None,
        }
    }
}

fn validate_sorted_positive(values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::validation(format!(
                "eigenvalue at index {} is not positive: {v}",
                i + 1
            )));
        }
        if i > 0 && values[i - 1] > *v {
            return Err(Error::validation(format!(
                "eigenvalues not sorted at index {}: {} > {v}",
                i + 1,
                values[i - 1]
            )));
        }
    }
    Ok(())
}

fn torus_values(dimension: usize, scale: f64, count: usize) -> Vec<f64> {
    let mut radius: i64 = 1;
    loop {
        let mut norms = Vec::new();
        let side = (2 * radius + 1) as usize;
        let total = side.pow(dimension as u32);
        for idx in 0..total {
            let mut rest = idx;
            let mut sq: i64 = 0;
            for _ in 0..dimension {
                let k = (rest % side) as i64 - radius;
                rest /= side;
                sq += k * k;
            }
            if sq > 0 {
                norms.push(sq);
            }
        }
        norms.sort_unstable();
        // Values up to radius^2 are complete inside the cube [-radius, radius]^d.
        if norms.len() >= count && norms[count - 1] <= radius * radius {
            return norms[..count].iter().map(|&s| scale * s as f64).collect();
        }
        radius *= 2;
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of degree-`k` spherical harmonics on `S^d`.
pub fn sphere_multiplicity(dimension: usize, k: usize) -> usize {
    let d = dimension as u64;
    let k = k as u64;
    let full = binomial(k + d, d);
    let lower = if k >= 2 { binomial(k + d - 2, d) } else { 0 };
    (full - lower) as usize
}

fn sphere_values(dimension: usize, count: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(count);
    let mut k = 1usize;
    while values.len() < count {
        let lambda = (k * (k + dimension - 1)) as f64;
        let mult = sphere_multiplicity(dimension, k);
        for _ in 0..mult {
            if values.len() == count {
                break;
            }
            values.push(lambda);
        }
        k += 1;
    }
    values
}

/// Largest mode with real characteristic roots, or unbounded at eps = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalIndex {
    Unbounded,
    Index(usize),
}

impl CriticalIndex {
    /// True when mode `n` (1-based) has real roots.
    pub fn covers(&self, n: usize) -> bool {
        match self {
            CriticalIndex::Unbounded => true,
            CriticalIndex::Index(k) => n <= *k,
        }
    }
}

pub fn critical_index(seq: &EigenvalueSequence, eps: f64) -> CriticalIndex {
    if eps == 0.0 {
        return CriticalIndex::Unbounded;
    }
    let last = seq
        .values()
        .iter()
        .take_while(|&&l| 4.0 * eps * l <= 1.0)
        .count();
    CriticalIndex::Index(last)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots {
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
    /// `1 - 4*eps*lambda`.
    pub discriminant: f64,
}

impl CharacteristicRoots {
    pub fn is_real(&self) -> bool {
        self.discriminant >= 0.0
    }
}

/// Roots of `eps*mu^2 + mu + lambda = 0` for `eps > 0`.
///
/// `mu+` uses the cancellation-free form `-2*lambda / (1 + sqrt(1 - 4*eps*lambda))`.
pub fn characteristic_roots(lambda: f64, eps: f64) -> Result<CharacteristicRoots> {
    if !(lambda > 0.0) {
        return Err(Error::validation(format!("lambda must be positive, got {lambda}")));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::validation(format!("eps must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Err(Error::ParabolicLimit { mu_plus: -lambda });
    }
    let disc = 1.0 - 4.0 * eps * lambda;
    let (mu_plus, mu_minus) = if disc >= 0.0 {
        let s = disc.sqrt();
        (
            Complex64::new(-2.0 * lambda / (1.0 + s), 0.0),
            Complex64::new(-(1.0 + s) / (2.0 * eps), 0.0),
        )
    } else {
        let re = -1.0 / (2.0 * eps);
        let im = (-disc).sqrt() / (2.0 * eps);
        (Complex64::new(re, im), Complex64::new(re, -im))
    };
    Ok(CharacteristicRoots {
        mu_plus,
        mu_minus,
        discriminant: disc,
    })
}

/// Per-mode roots including the explicit parabolic branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeRoots {
    /// `eps = 0`: only `mu+ = -lambda`; `mu-` is infinitely fast.
    Parabolic { mu_plus: f64 },
    Relaxed(CharacteristicRoots),
}

impl ModeRoots {
    pub fn new(lambda: f64, eps: f64) -> Result<Self> {
        match characteristic_roots(lambda, eps) {
            Ok(r) => Ok(ModeRoots::Relaxed(r)),
            Err(Error::ParabolicLimit { mu_plus }) => Ok(ModeRoots::Parabolic { mu_plus }),
            Err(e) => Err(e),
        }
    }

    pub fn mu_plus(&self) -> Complex64 {
        match self {
            ModeRoots::Parabolic { mu_plus } => Complex64::new(*mu_plus, 0.0),
            ModeRoots::Relaxed(r) => r.mu_plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCoefficients {
    /// Velocity weights (units of time).
    pub a: Vec<f64>,
    /// Position weights.
    pub b: Vec<f64>,
}

impl ProjectorCoefficients {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a_n * v_n + b_n * u_n` for the first N modes.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.a[i] * v[i] + self.b[i] * u[i])
            .collect()
    }
}

/// Coefficients of the boundary operators so that `a*u'(0) + b*u(0)` picks the
/// `mu+` amplitude of each of the first `n` modes.
pub fn projector_coefficients(
    seq: &EigenvalueSequence,
    n: usize,
    eps: f64,
) -> Result<ProjectorCoefficients> {
    if n == 0 || n > seq.count() {
        return Err(Error::validation(format!(
            "N = {n} out of range 1..={}",
            seq.count()
        )));
    }
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 1..=n {
        if eps == 0.0 {
            a.push(0.0);
            b.push(1.0);
            continue;
        }
        let disc = 1.0 - 4.0 * eps * seq.lambda(k);
        if disc <= 0.0 {
            return Err(Error::condition(format!(
                "N exceeds real-root range: 1 - 4*eps*lambda_{k} = {disc:.3e} <= 0"
            )));
        }
        let s = disc.sqrt();
        a.push(eps / s);
        b.push((1.0 + s) / (2.0 * s));
    }
    Ok(ProjectorCoefficients { a, b })
}

/// Exponential weight of the gap at N, or `None` when `1 - 2*eps*(l_N + l_{N+1}) < 0`.
pub fn theta_weight(lambda_n: f64, lambda_n1: f64, eps: f64) -> Option<f64> {
    let sum = lambda_n + lambda_n1;
    let disc = 1.0 - 2.0 * eps * sum;
    if disc < 0.0 {
        return None;
    }
    // Same root as (1 - sqrt(disc)) / (2 eps), written without cancellation.
    Some(sum / (1.0 + disc.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGapReport {
    pub n: usize,
    pub eps: f64,
    pub lipschitz: f64,
    pub lambda_n: f64,
    pub lambda_n1: f64,
    pub gap: f64,
    /// `gap > 2L`, strict.
    pub gap_ok: bool,
    /// `3*lambda_{N+1} + lambda_N <= 1/eps`, non-strict.
    pub eps_ok: bool,
    pub theta: Option<f64>,
    /// `|2*theta*(eps*theta - 1) + lambda_{N+1} + lambda_N|`, scaled by the sum.
    pub theta_residual: Option<f64>,
    /// `2L / gap`.
    pub contraction: f64,
    pub n_cr: CriticalIndex,
    /// Real `mu+_N`; `None` when that root is complex.
    pub mu_plus_n: Option<f64>,
    /// `Re mu+_{N+1}`.
    pub mu_plus_n1_re: f64,
    /// `4*eps*lambda_N < 1 < eps*(3*lambda_{N+1} + lambda_N)`: no weight is
    /// defined for this regime and it is reported as unsupported.
    pub last_gap_regime: bool,
}

impl SpectralGapReport {
    pub fn admissible(&self) -> bool {
        self.gap_ok && self.eps_ok && self.theta.is_some()
    }

    /// Human-readable reasons for a failing verdict.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.gap_ok {
            out.push(format!(
                "gap condition: lambda_{{N+1}} - lambda_N = {} <= 2L = {}",
                self.gap,
                2.0 * self.lipschitz
            ));
        }
        if !self.eps_ok {
            out.push(format!(
                "eps condition: 3*lambda_{{N+1}} + lambda_N = {} > 1/eps = {}",
                3.0 * self.lambda_n1 + self.lambda_n,
                1.0 / self.eps
            ));
        }
        if self.theta.is_none() {
            out.push("theta undefined; eps condition violated".to_string());
        }
        if self.last_gap_regime {
            out.push("last spectral gap regime is unsupported".to_string());
        }
        out
    }
}

pub fn gap_report(
    seq: &EigenvalueSequence,
    n: usize,
    eps: f64,
    lipschitz: f64,
) -> Result<SpectralGapReport> {
    if n == 0 || n + 1 > seq.count() {
        return Err(Error::validation(format!(
            "need 1 <= N and N + 1 <= {} modes, got N = {n}",
            seq.count()
        )));
    }
    if !(lipschitz > 0.0) {
        return Err(Error::validation(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::validation(format!("eps must be >= 0, got {eps}")));
    }
    let lambda_n = seq.lambda(n);
    let lambda_n1 = seq.lambda(n + 1);
    let gap = lambda_n1 - lambda_n;
    let gap_ok = gap > 2.0 * lipschitz;
    let eps_ok = eps == 0.0 || eps * (3.0 * lambda_n1 + lambda_n) <= 1.0;
    let theta = theta_weight(lambda_n, lambda_n1, eps);
    let theta_residual = theta.map(|t| {
        let sum = lambda_n + lambda_n1;
        (2.0 * t * (eps * t - 1.0) + sum).abs() / sum
    });
    if let Some(r) = theta_residual {
        debug_assert!(r <= THETA_ROOT_TOL, "theta residual {r}");
    }
    let mu_n = ModeRoots::new(lambda_n, eps)?.mu_plus();
    let mu_n1 = ModeRoots::new(lambda_n1, eps)?.mu_plus();
    let last_gap_regime = eps > 0.0 && 4.0 * eps * lambda_n < 1.0 && !eps_ok;
    Ok(SpectralGapReport {
        n,
        eps,
        lipschitz,
        lambda_n,
        lambda_n1,
        gap,
        gap_ok,
        eps_ok,
        theta,
        theta_residual,
        contraction: 2.0 * lipschitz / gap,
        n_cr: critical_index(seq, eps),
        mu_plus_n: (mu_n.im == 0.0).then_some(mu_n.re),
        mu_plus_n1_re: mu_n1.re,
        last_gap_regime,
    })
}

/// All admissible N within the truncation, ascending.
pub fn gap_scan(seq: &EigenvalueSequence, lipschitz: f64, eps: f64) -> Result<Vec<SpectralGapReport>> {
    let mut out = Vec::new();
    for n in 1..seq.count() {
        let report = gap_report(seq, n, eps, lipschitz)?;
        if report.admissible() {
            out.push(report);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn squares(count: usize) -> EigenvalueSequence {
        EigenvalueSequence::dirichlet(PI, count).unwrap()
    }

    #[test]
    fn dirichlet_on_pi_is_exact_squares() {
        let seq = squares(40);
        for (i, v) in seq.values().iter().enumerate() {
            assert_eq!(*v, ((i + 1) * (i + 1)) as f64);
        }
        assert_eq!(&squares(4).values()[..], &[1.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn custom_passthrough_and_validation() {
        let seq = EigenvalueSequence::from_values(vec![1.0, 4.0, 9.0]).unwrap();
        assert_eq!(seq.values(), &[1.0, 4.0, 9.0]);
        let err = EigenvalueSequence::from_values(vec![1.0, 0.0, 9.0]).unwrap_err();
        assert!(err.to_string().contains("index 2"), "{err}");
        let err = EigenvalueSequence::from_values(vec![1.0, 5.0, 4.0]).unwrap_err();
        assert!(err.to_string().contains("index 3"), "{err}");
        assert!(EigenvalueSequence::from_values(vec![1.0]).is_err());
    }

    #[test]
    fn sphere_levels_match_brute_force_harmonics() {
        // Oracle: count homogeneous harmonic polynomials of degree k in 4
        // variables as dim P_k - dim P_{k-2}, with dim P_k enumerated by brute force.
        fn monomials(vars: usize, degree: usize) -> usize {
            if vars == 1 {
                return 1;
            }
            (0..=degree).map(|d| monomials(vars - 1, degree - d)).sum()
        }
        for k in 1..8 {
            let brute = monomials(4, k) - if k >= 2 { monomials(4, k - 2) } else { 0 };
            assert_eq!(sphere_multiplicity(3, k), brute);
            assert_eq!(brute, (k + 1) * (k + 1));
        }
        let seq = EigenvalueSequence::new(OperatorModel::Sphere { dimension: 3 }, 4 + 9 + 16).unwrap();
        let mut expected = Vec::new();
        for k in 1..=3usize {
            expected.extend(std::iter::repeat((k * (k + 2)) as f64).take((k + 1) * (k + 1)));
        }
        assert_eq!(seq.values(), &expected[..]);
    }

    #[test]
    fn torus_includes_multiplicities() {
        let seq = EigenvalueSequence::new(
            OperatorModel::Torus {
                dimension: 2,
                scale: 1.0,
            },
            12,
        )
        .unwrap();
        // |k|^2 = 1 (x4), 2 (x4), 4 (x4)
        assert_eq!(
            seq.values(),
            &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 4.0, 4.0, 4.0, 4.0]
        );
    }

    #[test]
    fn critical_index_examples() {
        let seq = squares(10);
        assert_eq!(critical_index(&seq, 0.05), CriticalIndex::Index(2));
        assert_eq!(critical_index(&seq, 0.0), CriticalIndex::Unbounded);
        assert_eq!(critical_index(&seq, 1.0), CriticalIndex::Index(0));
    }

    #[test]
    fn roots_examples() {
        let r = characteristic_roots(1.0, 0.05).unwrap();
        assert_relative_eq!(r.mu_plus.re, -1.0557280900008412, epsilon = 1e-12);
        assert_relative_eq!(r.mu_minus.re, -18.94427190999916, epsilon = 1e-12);
        for mu in [r.mu_plus, r.mu_minus] {
            let q = 0.05 * mu * mu + mu + 1.0;
            assert!(q.norm() < 1e-12);
        }
        let r = characteristic_roots(5.0, 0.1).unwrap();
        assert_relative_eq!(r.discriminant, -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.mu_plus.re, -5.0, epsilon = 1e-12);
        assert_relative_eq!(r.mu_plus.im, 5.0, epsilon = 1e-12);
        assert_relative_eq!(r.mu_minus.im, -5.0, epsilon = 1e-12);
        let r = characteristic_roots(1.0, 1e-8).unwrap();
        assert!((r.mu_plus.re + 1.0).abs() < 1e-7);
        assert!(matches!(
            characteristic_roots(1.0, 0.0),
            Err(Error::ParabolicLimit { mu_plus }) if mu_plus == -1.0
        ));
    }

    #[test]
    fn projector_examples() {
        let seq = squares(6);
        let pc = projector_coefficients(&seq, 3, 0.0).unwrap();
        assert!(pc.a.iter().all(|&a| a == 0.0) && pc.b.iter().all(|&b| b == 1.0));
        let pc = projector_coefficients(&seq, 1, 0.05).unwrap();
        assert_relative_eq!(pc.a[0], 0.05590169943749474, epsilon = 1e-12);
        assert_relative_eq!(pc.b[0], 1.0590169943749475, epsilon = 1e-12);
        let r = characteristic_roots(1.0, 0.05).unwrap();
        assert!((pc.a[0] * r.mu_plus.re + pc.b[0] - 1.0).abs() < 1e-12);
        assert!((pc.a[0] * r.mu_minus.re + pc.b[0]).abs() < 1e-12);
        // lambda_3 = 9 > 5 = 1/(4*0.05)
        assert!(matches!(
            projector_coefficients(&seq, 3, 0.05),
            Err(Error::Condition(_))
        ));
    }

    #[test]
    fn gap_report_reference() {
        let seq = squares(16);
        let r = gap_report(&seq, 1, 0.05, 1.0).unwrap();
        assert_eq!(r.gap, 3.0);
        assert!(r.gap_ok && r.eps_ok && r.admissible());
        assert_relative_eq!(r.theta.unwrap(), (1.0 - 0.5f64.sqrt()) / 0.1, epsilon = 1e-12);
        assert_relative_eq!(r.theta.unwrap(), 2.9289321881345245, epsilon = 1e-12);
        assert_relative_eq!(r.contraction, 2.0 / 3.0, epsilon = 1e-15);
        assert!(r.theta_residual.unwrap() < 1e-12);
        assert_eq!(r.n_cr, CriticalIndex::Index(2));

        let r = gap_report(&seq, 1, 0.05, 2.0).unwrap();
        assert!(!r.gap_ok);
        let r = gap_report(&seq, 1, 0.1, 1.0).unwrap();
        assert!(!r.eps_ok && !r.admissible());
        assert!(r.failures().iter().any(|f| f.starts_with("eps condition")));
    }

    #[test]
    fn theta_undefined_when_discriminant_negative() {
        let seq = squares(16);
        // 1 - 2*0.2*(1+4) = -1
        let r = gap_report(&seq, 1, 0.2, 1.0).unwrap();
        assert!(r.theta.is_none());
        assert!(!r.eps_ok);
    }

    #[test]
    fn parabolic_theta_is_midpoint() {
        let seq = squares(16);
        for n in 1..10 {
            let r = gap_report(&seq, n, 0.0, 0.5).unwrap();
            assert_eq!(r.theta.unwrap(), (seq.lambda(n) + seq.lambda(n + 1)) / 2.0);
        }
    }

    #[test]
    fn gap_scan_examples() {
        let seq = squares(12);
        let ns: Vec<usize> = gap_scan(&seq, 1.0, 0.0).unwrap().iter().map(|r| r.n).collect();
        assert_eq!(ns, (1..12).collect::<Vec<_>>());

        let linear = EigenvalueSequence::from_values((1..=12).map(|n| n as f64).collect()).unwrap();
        assert!(gap_scan(&linear, 1.0, 0.3).unwrap().is_empty());
        assert!(gap_scan(&linear, 1.0, 0.0).unwrap().is_empty());

        // eps = 0.01: admissible iff 3(N+1)^2 + N^2 <= 100, enumerated directly.
        let expected: Vec<usize> = (1..12)
            .filter(|&n| {
                let (a, b) = ((n * n) as f64, ((n + 1) * (n + 1)) as f64);
                b - a > 2.0 && 3.0 * b + a <= 100.0
            })
            .collect();
        assert_eq!(expected, vec![1, 2, 3, 4]);
        let ns: Vec<usize> = gap_scan(&seq, 1.0, 0.01).unwrap().iter().map(|r| r.n).collect();
        assert_eq!(ns, expected);
    }
}
