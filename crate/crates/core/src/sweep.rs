//! Cumulative exponential-kernel integrals on a panel grid.
//!
//! Forward: `F(x) = int_alpha^x g(t) e^{c (P(x) - P(t))} dt` with `Re c <= 0`.
//! Backward: `B(x) = int_x^T g(t) e^{-r (P(t) - P(x))} dt` with `Re r >= 0`.
//! Each panel integrates the interpolant of `g e^{-c (P - P_a)}` exactly, so the
//! phase cap on the grid controls the error.

use crate::grid::PanelGrid;
use crate::scalar::{cz, lit, Real, C};

/// Per-panel exponentials for one rate.
#[derive(Clone, Debug)]
pub(crate) struct Plan<T: Real> {
    pub forward: bool,
    out: Vec<C<T>>,
    inn: Vec<C<T>>,
    end: Vec<C<T>>,
}

impl<T: Real> Plan<T> {
    pub fn forward(grid: &PanelGrid<T>, c: C<T>) -> Self {
        let q = grid.q();
        let np = grid.panels();
        let (mut out, mut inn) = (Vec::with_capacity(np * q), Vec::with_capacity(np * q));
        let mut end = Vec::with_capacity(np);
        for p in 0..np {
            let a = grid.phase_ends[p];
            for m in 0..q {
                let dp = grid.phase_nodes[p * q + m] - a;
                out.push((c * dp).exp());
                inn.push((-c * dp).exp());
            }
            end.push((c * (grid.phase_ends[p + 1] - a)).exp());
        }
        Self { forward: true, out, inn, end }
    }

    pub fn backward(grid: &PanelGrid<T>, r: C<T>) -> Self {
        let q = grid.q();
        let np = grid.panels();
        let (mut out, mut inn) = (Vec::with_capacity(np * q), Vec::with_capacity(np * q));
        let mut end = Vec::with_capacity(np);
        for p in 0..np {
            let b = grid.phase_ends[p + 1];
            for m in 0..q {
                let dp = grid.phase_nodes[p * q + m] - b;
                out.push((r * dp).exp());
                inn.push((-r * dp).exp());
            }
            end.push((r * (grid.phase_ends[p] - b)).exp());
        }
        Self { forward: false, out, inn, end }
    }

    /// Full sweep with zero initial value; returns values at nodes and at panel ends.
    pub fn run(&self, grid: &PanelGrid<T>, g: &[C<T>]) -> (Vec<C<T>>, Vec<C<T>>) {
        let q = grid.q();
        let np = grid.panels();
        let rule = &grid.rule;
        let mut nodes = vec![cz(); np * q];
        let mut ends = vec![cz(); np + 1];
        let mut gi = vec![cz::<T>(); q];
        let half: T = lit(0.5);
        let panel = |p: usize, acc: C<T>, gi: &mut [C<T>], nodes: &mut [C<T>]| -> C<T> {
            let h = (grid.ends[p + 1] - grid.ends[p]) * half;
            let mut tot = cz::<T>();
            for m in 0..q {
                gi[m] = self.inn[p * q + m] * g[p * q + m];
                tot = tot + gi[m] * rule.weights[m];
            }
            let part = if self.forward { &rule.fwd } else { &rule.bwd };
            for i in 0..q {
                let mut s = cz::<T>();
                for m in 0..q {
                    s = s + gi[m] * part[i][m];
                }
                nodes[p * q + i] = self.out[p * q + i] * (acc + s * h);
            }
            self.end[p] * (acc + tot * h)
        };
        if self.forward {
            let mut f = cz::<T>();
            for p in 0..np {
                f = panel(p, f, &mut gi, &mut nodes);
                ends[p + 1] = f;
            }
        } else {
            let mut b = cz::<T>();
            for p in (0..np).rev() {
                b = panel(p, b, &mut gi, &mut nodes);
                ends[p] = b;
            }
        }
        (nodes, ends)
    }

    /// Forward sweep over panel `p` only, starting from `acc` at its left end;
    /// `g` holds the panel's node values. Node values go to `out`; returns the right-end value.
    pub fn forward_panel(&self, grid: &PanelGrid<T>, p: usize, acc: C<T>, g: &[C<T>], out: &mut [C<T>]) -> C<T> {
        let q = grid.q();
        let rule = &grid.rule;
        let h = (grid.ends[p + 1] - grid.ends[p]) * lit(0.5);
        let mut gi = [cz::<T>(); 16];
        let mut tot = cz::<T>();
        for m in 0..q {
            gi[m] = self.inn[p * q + m] * g[m];
            tot = tot + gi[m] * rule.weights[m];
        }
        for i in 0..q {
            let mut s = cz::<T>();
            for m in 0..q {
                s = s + gi[m] * rule.fwd[i][m];
            }
            out[i] = self.out[p * q + i] * (acc + s * h);
        }
        self.end[p] * (acc + tot * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::WeightFunction;
    use num_complex::Complex64;

    #[test]
    fn sweeps_match_closed_forms() {
        let rho = WeightFunction::constant(1.0).unwrap();
        let lam = Complex64::new(20.0, 35.0);
        let cap = std::f64::consts::FRAC_PI_4 / lam.norm();
        let grid = PanelGrid::build(0.0, 12.0, &[], &rho, 0.125, cap).unwrap();
        let g: Vec<Complex64> = grid.nodes.iter().map(|&t| Complex64::new((-t).exp(), 0.0)).collect();
        // int_0^x e^{-t} e^{-lam (x - t)} dt = (e^{-x} - e^{-lam x}) / (lam - 1)
        let f = Plan::forward(&grid, -lam);
        let (nodes, ends) = f.run(&grid, &g);
        for (i, &x) in grid.nodes.iter().enumerate() {
            let exact = (Complex64::new((-x).exp(), 0.0) - (-lam * x).exp()) / (lam - 1.0);
            assert!((nodes[i] - exact).norm() < 1e-11);
        }
        let x = 12.0;
        let exact = (Complex64::new((-x as f64).exp(), 0.0) - (-lam * x).exp()) / (lam - 1.0);
        assert!((ends.last().unwrap() - exact).norm() < 1e-13);
        // int_x^12 e^{-t} e^{-lam (t - x)} dt
        let b = Plan::backward(&grid, lam);
        let (nodes, ends) = b.run(&grid, &g);
        let ex = |x: f64| (Complex64::new((-x).exp(), 0.0) - (-12.0f64).exp() * (-lam * (12.0 - x)).exp()) / (1.0 + lam);
        for (i, &x) in grid.nodes.iter().enumerate() {
            assert!((nodes[i] - ex(x)).norm() < 1e-11);
        }
        assert!((ends[0] - ex(0.0)).norm() < 1e-13);
    }
}
