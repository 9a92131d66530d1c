//! Pointwise maps `u(x) -> f(u(x))` on `(0, length)` in the Dirichlet sine basis.

use ndarray::Array2;

use super::scalar::ScalarFunction;
use crate::error::{Error, Result};
use crate::spectrum::EigenvalueSequence;

/// Midpoint nodes per retained mode.
pub const OVERSAMPLING: usize = 4;

#[derive(Debug, Clone)]
pub struct SineTransform {
    length: f64,
    modes: usize,
    /// `basis[[j, n]] = sqrt(2/length) sin((n+1) pi x_j / length)`.
    basis: Array2<f64>,
    weight: f64,
}

impl SineTransform {
    pub fn new(seq: &EigenvalueSequence, modes: usize) -> Result<Self> {
        let length = seq.dirichlet_length().ok_or_else(|| {
            Error::Unsupported("pointwise nonlinearity needs the Dirichlet sine basis".into())
        })?;
        if modes == 0 || modes > seq.count() {
            return Err(Error::validation(format!("mode count {modes} out of range")));
        }
        let q = OVERSAMPLING * modes;
        let norm = (2.0 / length).sqrt();
        let basis = Array2::from_shape_fn((q, modes), |(j, n)| {
            let x = (j as f64 + 0.5) / q as f64;
            norm * ((n + 1) as f64 * std::f64::consts::PI * x).sin()
        });
        Ok(Self {
            length,
            modes,
            basis,
            weight: length / q as f64,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.basis.nrows()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.length / self.points() as f64
    }

    /// `basis[[j, n]]`: mode `n` at node `j`, normalized in `L^2(0, length)`.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    /// Quadrature weight of each node.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Coefficients to nodal values.
    pub fn synthesize(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = self.basis.row(j);
            *o = u.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
        }
    }

    /// Nodal values to coefficients.
    pub fn analyze(&self, vals: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, v) in vals.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let row = self.basis.row(j);
            for (o, b) in out.iter_mut().zip(row.iter()) {
                *o += v * b;
            }
        }
        out.iter_mut().for_each(|o| *o *= self.weight);
    }

    /// Coefficients of a function given at the nodes.
    pub fn coefficients_of(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let vals: Vec<f64> = (0..self.points()).map(|j| f(self.node(j))).collect();
        let mut out = vec![0.0; self.modes];
        self.analyze(&vals, &mut out);
        out
    }
}

/// `F(u) = P[f(u + G) - f(G)]`, with `G = 0` when no shift is set.
#[derive(Debug, Clone)]
pub struct Nemytskii {
    f: ScalarFunction,
    transform: SineTransform,
    /// Nodal shift values and `f` at them.
    shift: Option<(Vec<f64>, Vec<f64>)>,
    shift_coeffs: Option<Vec<f64>>,
}

impl Nemytskii {
    pub fn new(f: ScalarFunction, seq: &EigenvalueSequence, modes: usize) -> Result<Self> {
        if f.eval(0.0) != 0.0 {
            return Err(Error::validation(format!(
                "pointwise function must vanish at 0, f(0) = {}",
                f.eval(0.0)
            )));
        }
        Ok(Self {
            f,
            transform: SineTransform::new(seq, modes)?,
            shift: None,
            shift_coeffs: None,
        })
    }

    /// Shifted map with `G` given by its sine coefficients.
    pub fn shifted(f: ScalarFunction, g_coeffs: &[f64], seq: &EigenvalueSequence) -> Result<Self> {
        let transform = SineTransform::new(seq, g_coeffs.len())?;
        let mut g = vec![0.0; transform.points()];
        transform.synthesize(g_coeffs, &mut g);
        let fg = g.iter().map(|x| f.eval(*x)).collect();
        Ok(Self {
            f,
            transform,
            shift: Some((g, fg)),
            shift_coeffs: Some(g_coeffs.to_vec()),
        })
    }

    pub fn function(&self) -> &ScalarFunction {
        &self.f
    }

    /// Sine coefficients of the shift profile, if any.
    pub fn shift(&self) -> Option<&[f64]> {
        self.shift_coeffs.as_deref()
    }

    pub fn transform(&self) -> &SineTransform {
        &self.transform
    }

    pub fn modes(&self) -> usize {
        self.transform.modes()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let q = self.transform.points();
        let mut vals = vec![0.0; q];
        self.transform.synthesize(u, &mut vals);
        match &self.shift {
            None => vals.iter_mut().for_each(|x| *x = self.f.eval(*x)),
            Some((g, fg)) => {
                for j in 0..q {
                    vals[j] = self.f.eval(vals[j] + g[j]) - fg[j];
                }
            }
        }
        self.transform.analyze(&vals, out);
    }

    /// `sup |f'|` over the reachable arguments.
    pub fn lipschitz_bound(&self) -> f64 {
        self.f.lipschitz()
    }
}
