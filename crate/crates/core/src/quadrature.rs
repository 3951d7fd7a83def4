//! Gauss-Hermite rules for expectations over a standard normal variable.

use crate::error::{Error, Result};

/// An `n`-point rule with `E[f(ε)] ≈ Σ weights[i]·f(nodes[i])` for ε ~ N(0, 1).
///
/// Nodes and weights are already rescaled from the physicists' weight
/// `exp(-t²)` (ε = √2·t, weights divided by √π), so the weights sum to one.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Roots of the degree-`n` Hermite polynomial by Newton iteration on the
    /// orthonormal three-term recurrence, seeded with the usual asymptotic
    /// guesses and exploiting symmetry.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter(
                "Gauss-Hermite order must be positive".into(),
            ));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let mut t = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * t[0],
                3 => 1.91 * z - 0.91 * t[1],
                _ => 2.0 * z - t[i - 2],
            };
            let mut converged = false;
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                deriv = (2.0 * nf).sqrt() * p2;
                let step = p1 / deriv;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numeric(format!(
                    "Gauss-Hermite node {i} of {n} did not converge"
                )));
            }
            t[i] = z;
            t[n - 1 - i] = -z;
            w[i] = 2.0 / (deriv * deriv);
            w[n - 1 - i] = w[i];
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut nodes: Vec<f64> = t.iter().map(|x| std::f64::consts::SQRT_2 * x).collect();
        let mut weights: Vec<f64> = w.iter().map(|x| x / sqrt_pi).collect();
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(ε)]` for ε ~ N(0, 1).
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
