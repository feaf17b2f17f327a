//! Quadrature building blocks: Gauss-Legendre rules, the per-panel Nystrom
//! matrices, and adaptive Gauss-Kronrod for scalar integrals.

use crate::error::{Error, Result};
use crate::scalar::{cz, lit, Real, C};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Number of Gauss-Legendre nodes per panel.
pub const PANEL_NODES: usize = 7;

/// Reference-panel data for Nystrom sweeps on [-1, 1].
#[derive(Clone, Debug)]
pub struct PanelRule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    /// `fwd[i][m]` = integral of the m-th Lagrange basis polynomial over [-1, tau_i].
    pub fwd: Vec<Vec<T>>,
    /// `bwd[i][m]` = integral over [tau_i, 1].
    pub bwd: Vec<Vec<T>>,
    /// `diff[i][m]` = derivative of the m-th basis polynomial at tau_i.
    pub diff: Vec<Vec<T>>,
    /// Derivative at tau_i of the basis on `[-1, nodes.., 1]`.
    pub ext_diff: Vec<Vec<T>>,
    bary: Vec<f64>,
    nodes64: Vec<f64>,
    // nodes plus both endpoints, for interpolation of sampled functions
    ext64: Vec<f64>,
    ext_bary: Vec<f64>,
}

fn lagrange(nodes: &[f64], m: usize, t: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(r, _)| r != m)
        .fold(1.0, |acc, (_, &tr)| acc * (t - tr) / (nodes[m] - tr))
}

impl<T: Real> PanelRule<T> {
    pub fn new(q: usize) -> Self {
        let (x, w) = gauss_legendre(q);
        let mut fwd = vec![vec![T::zero(); q]; q];
        for i in 0..q {
            // [-1, x_i] mapped onto the same rule; exact for degree q-1.
            let half = 0.5 * (x[i] + 1.0);
            for m in 0..q {
                let s: f64 = (0..q).map(|r| w[r] * lagrange(&x, m, -1.0 + half * (x[r] + 1.0))).sum();
                fwd[i][m] = lit(s * half);
            }
        }
        let bwd = (0..q)
            .map(|i| (0..q).map(|m| lit::<T>(w[m]) - fwd[i][m]).collect())
            .collect();
        let bary: Vec<f64> = (0..q)
            .map(|m| 1.0 / (0..q).filter(|&r| r != m).map(|r| x[m] - x[r]).product::<f64>())
            .collect();
        let mut diff = vec![vec![T::zero(); q]; q];
        for i in 0..q {
            let mut diag = 0.0;
            for m in 0..q {
                if m != i {
                    let d = bary[m] / bary[i] / (x[i] - x[m]);
                    diff[i][m] = lit(d);
                    diag -= d;
                }
            }
            diff[i][i] = lit(diag);
        }
        let mut ext64 = vec![-1.0];
        ext64.extend_from_slice(&x);
        ext64.push(1.0);
        let ext_bary: Vec<f64> = (0..ext64.len())
            .map(|m| 1.0 / (0..ext64.len()).filter(|&r| r != m).map(|r| ext64[m] - ext64[r]).product::<f64>())
            .collect();
        let mut ext_diff = vec![vec![T::zero(); q + 2]; q];
        for i in 0..q {
            let ii = i + 1;
            let mut diag = 0.0;
            for m in 0..q + 2 {
                if m != ii {
                    let d = ext_bary[m] / ext_bary[ii] / (ext64[ii] - ext64[m]);
                    ext_diff[i][m] = lit(d);
                    diag -= d;
                }
            }
            ext_diff[i][ii] = lit(diag);
        }
        Self {
            nodes: x.iter().map(|&v| lit(v)).collect(),
            weights: w.iter().map(|&v| lit(v)).collect(),
            fwd,
            bwd,
            diff,
            ext_diff,
            bary,
            nodes64: x,
            ext64,
            ext_bary,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values at `tau` in [-1, 1].
    pub fn basis_at(&self, tau: T) -> Vec<T> {
        let t = tau.to_f64().unwrap();
        if let Some(m) = self.nodes64.iter().position(|&x| x == t) {
            let mut out = vec![T::zero(); self.len()];
            out[m] = T::one();
            return out;
        }
        let terms: Vec<f64> = (0..self.len()).map(|m| self.bary[m] / (t - self.nodes64[m])).collect();
        let l: f64 = self.nodes64.iter().map(|&x| t - x).product();
        terms.iter().map(|&v| lit(v * l)).collect()
    }

    /// Interpolation weights at `tau` for the points `[-1, nodes.., 1]`.
    pub fn ext_basis_at(&self, tau: T) -> Vec<T> {
        let t = tau.to_f64().unwrap();
        let q = self.ext64.len();
        if let Some(m) = self.ext64.iter().position(|&x| x == t) {
            let mut out = vec![T::zero(); q];
            out[m] = T::one();
            return out;
        }
        let terms: Vec<f64> = (0..q).map(|m| self.ext_bary[m] / (t - self.ext64[m])).collect();
        let sum: f64 = terms.iter().sum();
        terms.iter().map(|&v| lit(v / sum)).collect()
    }
}

const GK_XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real, F: FnMut(T) -> C<T>>(f: &mut F, a: T, b: T) -> (C<T>, T) {
    let c = (a + b) * lit(0.5);
    let h = (b - a) * lit(0.5);
    let fc = f(c);
    let mut k = fc * lit::<T>(GK_WGK[7]);
    let mut g = fc * lit::<T>(GK_WG[3]);
    for j in 0..7 {
        let dx = h * lit(GK_XGK[j]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * lit::<T>(GK_WGK[j]);
        if j % 2 == 1 {
            g = g + s * lit::<T>(GK_WG[j / 2]);
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss-Kronrod (7/15) integration of a complex integrand over a finite interval.
/// Returns the value and an error estimate.
pub fn integrate<T: Real, F: FnMut(T) -> C<T>>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Result<(C<T>, T)> {
    if a == b {
        return Ok((cz(), T::zero()));
    }
    let mut parts = vec![(a, b, gk15(&mut f, a, b))];
    loop {
        let total = parts.iter().fold(cz::<T>(), |s, p| s + p.2 .0);
        let err = parts.iter().fold(T::zero(), |s, p| s + p.2 .1);
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok((total, err));
        }
        if parts.len() >= max_intervals {
            if err.is_finite() && err <= lit::<T>(1e3) * abs_tol.max(rel_tol * total.norm()) {
                return Ok((total, err));
            }
            return Err(Error::Quadrature(format!("tolerance not met, error estimate {err:e}")));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let (pa, pb, _) = parts.swap_remove(idx);
        let mid = (pa + pb) * lit(0.5);
        parts.push((pa, mid, gk15(&mut f, pa, mid)));
        parts.push((mid, pb, gk15(&mut f, mid, pb)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..14 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn partial_integrals_match_monomials() {
        let r = PanelRule::<f64>::new(PANEL_NODES);
        // integral of t^3 from -1 to tau_i, reproduced by the fwd matrix
        for i in 0..r.len() {
            let s: f64 = (0..r.len()).map(|m| r.fwd[i][m] * r.nodes[m].powi(3)).sum();
            let exact = (r.nodes[i].powi(4) - 1.0) / 4.0;
            assert!((s - exact).abs() < 1e-14);
            let d: f64 = (0..r.len()).map(|m| r.diff[i][m] * r.nodes[m].powi(3)).sum();
            assert!((d - 3.0 * r.nodes[i].powi(2)).abs() < 1e-12);
        }
        let b = r.basis_at(0.3);
        let v: f64 = (0..r.len()).map(|m| b[m] * r.nodes[m].powi(5)).sum();
        assert!((v - 0.3f64.powi(5)).abs() < 1e-14);
        let e = r.ext_basis_at(-0.77);
        let mut pts = vec![-1.0];
        pts.extend_from_slice(&r.nodes);
        pts.push(1.0);
        let v: f64 = e.iter().zip(&pts).map(|(w, x)| w * x.powi(8)).sum();
        assert!((v - 0.77f64.powi(8)).abs() < 1e-13);
    }

    #[test]
    fn adaptive_gk_handles_oscillation() {
        let (v, _) = integrate(|t: f64| Complex64::new(0.0, 40.0 * t).exp(), 0.0, 3.0, 1e-13, 1e-13, 500).unwrap();
        let exact = (Complex64::new(0.0, 120.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((v - exact).norm() < 1e-12);
    }
}
