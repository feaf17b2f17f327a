//! Panel grids over [alpha, T_cut] and sampled vector functions on them.

use std::sync::Arc;

use crate::coeffs::WeightFunction;
use crate::error::{Error, Result};
use crate::quad::{PanelRule, PANEL_NODES};
use crate::scalar::{cz, lit, Real, C};

/// Gauss-Legendre panels covering `[alpha, t_cut]` with breaks at coefficient knots.
#[derive(Clone, Debug)]
pub struct PanelGrid<T: Real> {
    pub alpha: T,
    pub t_cut: T,
    /// Panel endpoints, ascending; `ends[0] = alpha`, last = `t_cut`.
    pub ends: Vec<T>,
    /// Nodes, `PANEL_NODES` per panel.
    pub nodes: Vec<T>,
    /// `p(x) - p(alpha)` at the endpoints and nodes.
    pub phase_ends: Vec<T>,
    pub phase_nodes: Vec<T>,
    pub rule: Arc<PanelRule<T>>,
}

impl<T: Real> PanelGrid<T> {
    /// Panels have length at most `h_max` and phase increment at most `dphase_max`.
    pub fn build(
        alpha: T,
        t_cut: T,
        knots: &[T],
        rho: &WeightFunction<T>,
        h_max: T,
        dphase_max: T,
    ) -> Result<Self> {
        if !(t_cut > alpha) {
            return Err(Error::OutOfRange(format!("grid [{alpha}, {t_cut}] is empty")));
        }
        let mut breaks = vec![alpha];
        breaks.extend(knots.iter().copied().filter(|&k| k > alpha && k < t_cut));
        breaks.push(t_cut);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let unit = rho.is_unit();
        let p0 = rho.phase(alpha);
        let mut ends = vec![alpha];
        for w in breaks.windows(2) {
            let (u, v) = (w[0], w[1]);
            let (pu, pv) = (rho.phase(u), rho.phase(v));
            let np = ((pv - pu) / dphase_max).ceil().to_usize().unwrap_or(1).max(1);
            let mut seg = vec![u];
            for i in 1..np {
                let y = pu + (pv - pu) * lit(i as f64 / np as f64);
                seg.push(if unit { y } else { rho.phase_inverse(y)? });
            }
            seg.push(v);
            for s in seg.windows(2) {
                let len = s[1] - s[0];
                let nh = (len / h_max).ceil().to_usize().unwrap_or(1).max(1);
                for i in 1..=nh {
                    let x = if i == nh { s[1] } else { s[0] + len * lit(i as f64 / nh as f64) };
                    ends.push(x);
                }
            }
        }
        let rule = Arc::new(PanelRule::new(PANEL_NODES));
        let mut nodes = Vec::with_capacity((ends.len() - 1) * PANEL_NODES);
        for w in ends.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = (b - a) * lit(0.5);
            for &t in &rule.nodes {
                nodes.push(a + h * (t + T::one()));
            }
        }
        let ph = |x: T| if unit { x - alpha } else { rho.phase(x) - p0 };
        let phase_ends = ends.iter().map(|&x| ph(x)).collect();
        let phase_nodes = nodes.iter().map(|&x| ph(x)).collect();
        Ok(Self { alpha, t_cut, ends, nodes, phase_ends, phase_nodes, rule })
    }

    /// Splits every panel into `k` equal sub-panels.
    pub fn refined(&self, k: usize, rho: &WeightFunction<T>) -> Self {
        let mut ends = vec![self.ends[0]];
        for w in self.ends.windows(2) {
            for i in 1..=k {
                ends.push(if i == k { w[1] } else { w[0] + (w[1] - w[0]) * lit(i as f64 / k as f64) });
            }
        }
        let rule = self.rule.clone();
        let mut nodes = Vec::with_capacity((ends.len() - 1) * rule.len());
        for w in ends.windows(2) {
            let h = (w[1] - w[0]) * lit(0.5);
            for &t in &rule.nodes {
                nodes.push(w[0] + h * (t + T::one()));
            }
        }
        let unit = rho.is_unit();
        let p0 = rho.phase(self.alpha);
        let ph = |x: T| if unit { x - self.alpha } else { rho.phase(x) - p0 };
        Self {
            alpha: self.alpha,
            t_cut: self.t_cut,
            phase_ends: ends.iter().map(|&x| ph(x)).collect(),
            phase_nodes: nodes.iter().map(|&x| ph(x)).collect(),
            ends,
            nodes,
            rule,
        }
    }

    pub fn panels(&self) -> usize {
        self.ends.len() - 1
    }

    pub fn q(&self) -> usize {
        self.rule.len()
    }

    /// Panel containing x (clamped to the grid).
    pub fn locate(&self, x: T) -> usize {
        self.ends.partition_point(|&e| e <= x).saturating_sub(1).min(self.panels() - 1)
    }

    /// Local coordinate of x in panel `p`.
    pub fn tau(&self, p: usize, x: T) -> T {
        let (a, b) = (self.ends[p], self.ends[p + 1]);
        (x - a) * lit(2.0) / (b - a) - T::one()
    }
}

/// Vector function sampled on a panel grid at nodes and panel endpoints.
#[derive(Clone, Debug)]
pub struct BcVector<T: Real> {
    pub grid: Arc<PanelGrid<T>>,
    /// `nodes[j][i]`: component j at node i.
    pub nodes: Vec<Vec<C<T>>>,
    /// `ends[j][e]`: component j at endpoint e.
    pub ends: Vec<Vec<C<T>>>,
}

impl<T: Real> BcVector<T> {
    pub fn zeros(grid: Arc<PanelGrid<T>>, n: usize) -> Self {
        let (nn, ne) = (grid.nodes.len(), grid.ends.len());
        Self { grid, nodes: vec![vec![cz(); nn]; n], ends: vec![vec![cz(); ne]; n] }
    }

    /// Samples `f(j, x)`.
    pub fn from_fn(grid: Arc<PanelGrid<T>>, n: usize, f: impl Fn(usize, T) -> C<T>) -> Self {
        let nodes = (0..n).map(|j| grid.nodes.iter().map(|&x| f(j, x)).collect()).collect();
        let ends = (0..n).map(|j| grid.ends.iter().map(|&x| f(j, x)).collect()).collect();
        Self { grid, nodes, ends }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn sup_norm(&self) -> T {
        let mut m = T::zero();
        for j in 0..self.n() {
            for v in self.nodes[j].iter().chain(&self.ends[j]) {
                m = m.max(v.norm());
            }
        }
        m
    }

    pub fn component_sup(&self, j: usize) -> T {
        self.nodes[j].iter().chain(&self.ends[j]).fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn axpy(&self, c: C<T>, other: &Self) -> Self {
        let f = |a: &Vec<Vec<C<T>>>, b: &Vec<Vec<C<T>>>| -> Vec<Vec<C<T>>> {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + c * v).collect()).collect()
        };
        Self { grid: self.grid.clone(), nodes: f(&self.nodes, &other.nodes), ends: f(&self.ends, &other.ends) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(C::new(-T::one(), T::zero()), other)
    }

    /// Interpolated value of component j at x in `[alpha, t_cut]`.
    pub fn eval(&self, j: usize, x: T) -> Result<C<T>> {
        let g = &self.grid;
        let tol = lit::<T>(1e-12) * (T::one() + x.abs());
        if x < g.alpha - tol || x > g.t_cut + tol {
            return Err(Error::OutOfRange(format!("x = {x} outside [{}, {}]", g.alpha, g.t_cut)));
        }
        let p = g.locate(x);
        let w = g.rule.ext_basis_at(g.tau(p, x).max(-T::one()).min(T::one()));
        let q = g.q();
        let mut v = self.ends[j][p] * w[0] + self.ends[j][p + 1] * w[q + 1];
        for m in 0..q {
            v = v + self.nodes[j][p * q + m] * w[m + 1];
        }
        Ok(v)
    }

    /// Values of component j resampled at the nodes and ends of a refinement of this grid.
    pub fn resample(&self, fine: Arc<PanelGrid<T>>) -> Result<Self> {
        let n = self.n();
        let mut out = Self::zeros(fine.clone(), n);
        for j in 0..n {
            for (i, &x) in fine.nodes.iter().enumerate() {
                out.nodes[j][i] = self.eval(j, x)?;
            }
            for (i, &x) in fine.ends.iter().enumerate() {
                out.ends[j][i] = self.eval(j, x)?;
            }
        }
        Ok(out)
    }

    /// Spectral derivative of component j at the nodes (per panel).
    pub fn node_derivative(&self, j: usize) -> Vec<C<T>> {
        let g = &self.grid;
        let q = g.q();
        let mut out = vec![cz(); g.nodes.len()];
        for p in 0..g.panels() {
            let scale = lit::<T>(2.0) / (g.ends[p + 1] - g.ends[p]);
            for i in 0..q {
                let d = &g.rule.ext_diff[i];
                let mut s = self.ends[j][p] * d[0] + self.ends[j][p + 1] * d[q + 1];
                for m in 0..q {
                    s = s + self.nodes[j][p * q + m] * d[m + 1];
                }
                out[p * q + i] = s * scale;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn grid_respects_caps_and_knots() {
        let rho = WeightFunction::constant_plus_exp(1.0, 1.0, 1.0).unwrap();
        let g = PanelGrid::build(0.5, 10.0, &[1.3, 20.0], &rho, 0.125, 0.3).unwrap();
        assert_eq!(g.ends[0], 0.5);
        assert_eq!(*g.ends.last().unwrap(), 10.0);
        assert!(g.ends.contains(&1.3));
        for (w, pw) in g.ends.windows(2).zip(g.phase_ends.windows(2)) {
            assert!(w[1] - w[0] <= 0.125 + 1e-12);
            assert!(pw[1] - pw[0] <= 0.3 + 1e-9);
        }
    }

    #[test]
    fn interpolation_and_derivative() {
        let rho = WeightFunction::constant(1.0).unwrap();
        let g = Arc::new(PanelGrid::build(0.0, 5.0, &[], &rho, 0.25, 0.25).unwrap());
        let f = |x: f64| Complex64::new(0.0, 3.0 * x).exp();
        let v = BcVector::from_fn(g.clone(), 1, |_, x| f(x));
        for &x in &[0.0, 0.01, 1.77, 4.999, 5.0] {
            assert!((v.eval(0, x).unwrap() - f(x)).norm() < 1e-9);
        }
        let d = v.node_derivative(0);
        for (i, &x) in g.nodes.iter().enumerate() {
            assert!((d[i] - Complex64::new(0.0, 3.0) * f(x)).norm() < 1e-6);
        }
        assert!(v.eval(0, 5.1).is_err());
    }
}
