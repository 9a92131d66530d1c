//! Exact exponential propagation of small linear systems `y' = M y + b g(t)`
//! on a uniform grid, with the scalar forcing `g` interpolated by local cubics.
//!
//! Over one step the forcing is the cubic through four neighbouring nodes;
//! the integral of `e^{M(dt - tau)} b s^m` is `m! * phi_{m+1}(M dt) b`, and the
//! `phi` functions are read off the exponential of an augmented matrix, which
//! avoids any cancellation for small or stiff `M dt`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};

/// Local node offsets (in steps, relative to the left end of the step) of the
/// three stencils: first step, interior, last step.
const STENCILS: [[f64; 4]; 3] = [
    [0.0, 1.0, 2.0, 3.0],
    [-1.0, 0.0, 1.0, 2.0],
    [-2.0, -1.0, 0.0, 1.0],
];

#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    /// `e^{M dt}`, row-major.
    transition: Vec<f64>,
    /// `weights[stencil][j]` is the `dim`-vector multiplying the j-th stencil value.
    weights: [[Vec<f64>; 4]; 3],
    /// `phi_k(M dt) b` for `k = 1..4`.
    phis: [Vec<f64>; 4],
}

/// Monomial coefficients of the Lagrange basis on `nodes`: `coef[j][m]`.
fn lagrange_monomials(nodes: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        // Multiply out prod_{i != j} (s - x_i) / (x_j - x_i).
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for i in 0..4 {
            if i == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (m, c) in poly.iter().enumerate() {
                next[m + 1] += c;
                next[m] -= c * nodes[i];
            }
            poly = next;
            denom *= nodes[j] - nodes[i];
        }
        for m in 0..4 {
            out[j][m] = poly[m] / denom;
        }
    }
    out
}

/// Returns `e^{Z}` and `[phi_1(Z) b, ..., phi_4(Z) b]`.
fn phi_columns(z: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, [DVector<f64>; 4]) {
    let d = z.nrows();
    let mut aug = DMatrix::<f64>::zeros(d + 4, d + 4);
    aug.view_mut((0, 0), (d, d)).copy_from(z);
    aug.view_mut((0, d), (d, 1)).copy_from(b);
    for i in 0..3 {
        aug[(d + i, d + i + 1)] = 1.0;
    }
    let e = aug.exp();
    let transition = e.view((0, 0), (d, d)).into_owned();
    let cols = std::array::from_fn(|k| e.view((0, d + k), (d, 1)).column(0).into_owned());
    (transition, cols)
}

impl Propagator {
    pub fn new(m: &DMatrix<f64>, b: &DVector<f64>, dt: f64) -> Self {
        let d = m.nrows();
        assert!(m.is_square() && b.len() == d, "propagator shape mismatch");
        let z = m * dt;
        let (transition, phis) = phi_columns(&z, b);
        let factorial = [1.0, 1.0, 2.0, 6.0];
        let weights = std::array::from_fn(|kind| {
            let coef = lagrange_monomials(&STENCILS[kind]);
            std::array::from_fn(|j| {
                let mut w = vec![0.0; d];
                for m in 0..4 {
                    let c = dt * coef[j][m] * factorial[m];
                    for r in 0..d {
                        w[r] += c * phis[m][r];
                    }
                }
                w
            })
        });
        let mut flat = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                flat.push(transition[(r, c)]);
            }
        }
        Self {
            dim: d,
            transition: flat,
            weights,
            phis: std::array::from_fn(|k| phis[k].iter().copied().collect()),
        }
    }

    /// `y' = mu y + g`.
    pub fn scalar(mu: f64, dt: f64) -> Self {
        Self::new(
            &DMatrix::from_element(1, 1, mu),
            &DVector::from_element(1, 1.0),
            dt,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `e^{M dt}` entry.
    pub fn transition(&self, r: usize, c: usize) -> f64 {
        self.transition[r * self.dim + c]
    }

    /// `phi_k(M dt) b`, `k` in `1..=4`.
    pub fn phi_b(&self, k: usize) -> &[f64] {
        &self.phis[k - 1]
    }

    /// Integrates from `y0` at node 0 across all nodes of `g`.
    /// Returns a `(dim, nodes)` array. Needs at least 4 nodes.
    pub fn run(&self, y0: &[f64], g: ArrayView1<'_, f64>) -> Array2<f64> {
        let d = self.dim;
        let nodes = g.len();
        assert!(nodes >= 4, "cubic forcing needs at least 4 nodes");
        let mut out = Array2::zeros((d, nodes));
        let mut y = y0.to_vec();
        let mut next = vec![0.0; d];
        for r in 0..d {
            out[[r, 0]] = y[r];
        }
        let last = nodes - 2;
        for k in 0..=last {
            let (kind, start) = if k == 0 {
                (0, 0)
            } else if k == last {
                (2, k - 2)
            } else {
                (1, k - 1)
            };
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += self.transition[r * d + c] * y[c];
                }
                for j in 0..4 {
                    acc += self.weights[kind][j][r] * g[start + j];
                }
                next[r] = acc;
            }
            std::mem::swap(&mut y, &mut next);
            for r in 0..d {
                out[[r, k + 1]] = y[r];
            }
        }
        out
    }

    /// Solves `y' = mu y + g` with zero data at the last node, integrating
    /// backwards in time. Built from a propagator for `-mu`.
    pub fn run_reversed(&self, g: ArrayView1<'_, f64>) -> Array2<f64> {
        let rev: Vec<f64> = g.iter().rev().map(|x| -x).collect();
        let mut out = self.run(&vec![0.0; self.dim], ArrayView1::from(&rev));
        out.invert_axis(ndarray::Axis(1));
        out
    }
}
