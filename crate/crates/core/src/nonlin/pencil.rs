//! Linearization at equilibria: the quadratic pencil `eps nu^2 + nu + kappa = 0`
//! with `kappa` the eigenvalues of `A - F'(u0)`, and the separation criterion
//! `0 > Re nu_N > Re nu_{N+1}`.

use std::collections::BTreeSet;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NonlinearityModel;
use crate::error::{Error, Result};
use crate::spectrum::EigenvalueSequence;

/// Relative tolerance for equal real parts.
pub const COLLISION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSpectrum {
    pub point: Vec<f64>,
    /// Diagonal entries of `F'(u0)`.
    pub diag: Vec<f64>,
    /// Eigenvalues of `A - F'(u0)`, in block order.
    pub kappa: Vec<Complex64>,
    /// Sorted by nonincreasing real part.
    pub nu: Vec<Complex64>,
    /// 1-based `n` with `Re nu_n = Re nu_{n+1}` within tolerance.
    pub collisions: Vec<usize>,
    /// Largest `|Re nu_n - Re nu_{n+1}|` among recorded collisions.
    pub collision_spread: f64,
    /// Real roots below `-1/(2 eps)` left out of the ordering.
    pub dropped_fast_roots: usize,
    pub pencil_residual: f64,
    pub equilibrium_residual: f64,
    pub eps: f64,
}

impl EquilibriumSpectrum {
    /// 1-based `N` with `0 > Re nu_N > Re nu_{N+1}`.
    pub fn admissible(&self) -> Vec<usize> {
        let collisions: BTreeSet<usize> = self.collisions.iter().copied().collect();
        (1..self.nu.len())
            .filter(|&n| {
                let (a, b) = (self.nu[n - 1].re, self.nu[n].re);
                a < 0.0 && a > b && !collisions.contains(&n)
            })
            .collect()
    }
}

/// Roots of `eps nu^2 + nu + kappa = 0` (one root at `eps = 0`).
pub fn pencil_roots(kappa: Complex64, eps: f64) -> Vec<Complex64> {
    if eps == 0.0 {
        return vec![-kappa];
    }
    let s = (Complex64::new(1.0, 0.0) - 4.0 * eps * kappa).sqrt();
    let one = Complex64::new(1.0, 0.0);
    vec![-2.0 * kappa / (one + s), -(one + s) / (2.0 * eps)]
}

/// Groups indices coupled by off-diagonal entries; blocks larger than 2 are refused.
fn blocks(j: &Array2<f64>, tol: f64) -> Result<Vec<Vec<usize>>> {
    let m = j.nrows();
    let mut seen = vec![false; m];
    let mut out = Vec::new();
    for start in 0..m {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            let a = comp[i];
            for b in 0..m {
                if !seen[b] && (j[[a, b]].abs() > tol || j[[b, a]].abs() > tol) {
                    seen[b] = true;
                    comp.push(b);
                }
            }
            i += 1;
        }
        if comp.len() > 2 {
            return Err(Error::Unsupported(format!(
                "Jacobian couples modes {:?}; only diagonal or 2x2 blocks are handled",
                comp.iter().map(|k| k + 1).collect::<Vec<_>>()
            )));
        }
        comp.sort_unstable();
        out.push(comp);
    }
    Ok(out)
}

/// Spectrum of the linearization at `u0`, truncated to `count` entries.
pub fn equilibrium_spectrum(
    f: &NonlinearityModel,
    u0: &[f64],
    eps: f64,
    seq: &EigenvalueSequence,
    count: Option<usize>,
) -> Result<EquilibriumSpectrum> {
    let m = f.modes();
    if u0.len() != m || m > seq.count() {
        return Err(Error::validation(format!(
            "equilibrium has {} entries, model {m} modes",
            u0.len()
        )));
    }
    let fu = f.apply(u0);
    let lambdas = &seq.values()[..m];
    let scale = 1.0 + u0.iter().zip(lambdas).map(|(u, l)| (u * l).powi(2)).sum::<f64>().sqrt();
    let eq_res = u0
        .iter()
        .zip(lambdas)
        .zip(&fu)
        .map(|((u, l), v)| (l * u - v).powi(2))
        .sum::<f64>()
        .sqrt();
    if eq_res > 1e-10 * scale {
        return Err(Error::validation(format!(
            "not an equilibrium: |A u0 - F(u0)| = {eq_res:.3e}"
        )));
    }
    let jac = f.jacobian(u0);
    let fd = f.fd_jacobian(u0);
    let jscale = 1.0 + jac.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mismatch = (&jac - &fd).iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if mismatch > 1e-5 * jscale {
        return Err(Error::validation(format!(
            "Jacobian disagrees with directional differences by {mismatch:.3e}"
        )));
    }
    let groups = blocks(&jac, 1e-8 * jscale)?;
    let mut kappa = Vec::with_capacity(m);
    for g in &groups {
        match g.as_slice() {
            [i] => kappa.push(Complex64::new(lambdas[*i] - jac[[*i, *i]], 0.0)),
            [i, k] => {
                let a = lambdas[*i] - jac[[*i, *i]];
                let d = lambdas[*k] - jac[[*k, *k]];
                let b = -jac[[*i, *k]];
                let c = -jac[[*k, *i]];
                let half_tr = 0.5 * (a + d);
                let disc = Complex64::new(0.25 * (a - d) * (a - d) + b * c, 0.0).sqrt();
                kappa.push(half_tr + disc);
                kappa.push(half_tr - disc);
            }
            _ => unreachable!(),
        }
    }
    let mut nu = Vec::with_capacity(2 * m);
    let mut dropped = 0;
    let mut residual: f64 = 0.0;
    for k in &kappa {
        for r in pencil_roots(*k, eps) {
            let q = eps * r * r + r + k;
            residual = residual.max(q.norm() / (1.0 + k.norm()));
            // With eps > 0 infinitely many modes have Re nu = -1/(2 eps); faster
            // real roots come after all of them in the ordering.
            if eps > 0.0 && r.re < -(1.0 + 1e-12) / (2.0 * eps) {
                dropped += 1;
                continue;
            }
            nu.push(r);
        }
    }
    nu.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    if let Some(c) = count {
        nu.truncate(c);
    }
    let mut collisions = Vec::new();
    let mut spread: f64 = 0.0;
    for i in 1..nu.len() {
        let gap = (nu[i - 1].re - nu[i].re).abs();
        if gap <= COLLISION_TOL * (1.0 + nu[i - 1].re.abs()) {
            collisions.push(i);
            spread = spread.max(gap);
        }
    }
    Ok(EquilibriumSpectrum {
        point: u0.to_vec(),
        diag: (0..m).map(|i| jac[[i, i]]).collect(),
        kappa,
        nu,
        collisions,
        collision_spread: spread,
        dropped_fast_roots: dropped,
        pencil_residual: residual,
        equilibrium_residual: eq_res,
        eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityVerdict {
    pub per_equilibrium: Vec<Vec<usize>>,
    pub intersection: Vec<usize>,
    /// True when no N separates the spectrum at every equilibrium.
    pub no_candidate: bool,
}

pub fn normal_hyperbolicity_gaps(spectra: &[EquilibriumSpectrum]) -> HyperbolicityVerdict {
    let per: Vec<Vec<usize>> = spectra.iter().map(|s| s.admissible()).collect();
    let mut inter: Option<BTreeSet<usize>> = None;
    for a in &per {
        let set: BTreeSet<usize> = a.iter().copied().collect();
        inter = Some(match inter {
            None => set,
            Some(prev) => prev.intersection(&set).copied().collect(),
        });
    }
    let intersection: Vec<usize> = inter.unwrap_or_default().into_iter().collect();
    HyperbolicityVerdict {
        no_candidate: intersection.is_empty(),
        per_equilibrium: per,
        intersection,
    }
}
