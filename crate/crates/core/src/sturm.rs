//! Second-order pencil `-u'' + q u + z p0 u = z^2 u` with `q = sigma'`.
//!
//! With `u^[1] = u' - sigma u`, `lambda = z i`, `v = (u, u^[1] / lambda)` and `y = Theta^{-1} v`
//! the equation becomes a 2x2 system with `b = (1, -1)`, `rho = 1` and a Laurent term of order one.

use serde::Serialize;

use crate::coeffs::{CoefficientFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::kernels::KernelOptions;
use crate::picard::{ThresholdOptions, ThresholdReport};
use crate::scalar::{c1, ci, cz, lit, to_f64, Real, C};
use crate::sectors::compute_sectors;
use crate::solutions::{build_fss, fss_lambda_alpha, SolutionSystem, SolveOptions};
use crate::system::SystemSpec;

#[derive(Clone, Debug)]
pub struct PencilSpec<T: Real> {
    /// Primitive of the distribution potential.
    pub sigma: CoefficientFunction<T>,
    pub p0: CoefficientFunction<T>,
}

impl<T: Real> PencilSpec<T> {
    pub fn new(sigma: CoefficientFunction<T>, p0: CoefficientFunction<T>) -> Result<Self> {
        for (name, f) in [("sigma", &sigma), ("p0", &p0)] {
            let t = f.tail_norms(T::zero())?;
            if !t.l1.is_finite() || !t.l2.is_finite() {
                return Err(Error::InvalidSystem(format!("{name} must lie in L1 and L2")));
            }
        }
        Ok(Self { sigma, p0 })
    }

    /// The problem for `-z` that has the same solutions: `p0 -> -p0`.
    pub fn reflected(&self) -> Self {
        Self { sigma: self.sigma.clone(), p0: self.p0.scale(-c1::<T>()) }
    }
}

/// The equivalent first-order system.
pub fn reduce_pencil<T: Real>(p: &PencilSpec<T>) -> Result<SystemSpec<T>> {
    let half_i = ci::<T>() * lit::<T>(0.5);
    let ip = p.p0.scale(half_i);
    let a = vec![
        ip.scale(-c1::<T>()),
        p.sigma.add(&ip.scale(-c1::<T>())),
        p.sigma.add(&ip),
        ip.clone(),
    ];
    let s2 = p.sigma.mul(&p.sigma).scale(C::new(lit(0.5), T::zero()));
    let c = if s2.is_zero() {
        vec![]
    } else {
        vec![vec![s2.scale(-c1::<T>()), s2.scale(-c1::<T>()), s2.clone(), s2]]
    };
    SystemSpec::new(vec![c1(), -c1::<T>()], a, c, WeightFunction::constant(T::one())?)
}

/// Solutions `u_1, u_2` of the pencil for one `z`.
#[derive(Clone, Debug)]
pub struct PencilSolution<T: Real> {
    /// Spectral parameter as requested.
    pub z: C<T>,
    /// True when `Im z > 0` and the construction ran for `-z` with `-p0`.
    pub reflected: bool,
    /// Pencil actually solved (after reflection).
    pub pencil: PencilSpec<T>,
    /// `lambda = z i` of the solved problem.
    pub lambda: C<T>,
    pub system: SolutionSystem<T>,
}

/// Pointwise data of one column at a grid node.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PencilSample {
    pub x: f64,
    pub u: [f64; 2],
    pub u1: [f64; 2],
    /// `s~_1k`, `s~_2k`.
    pub s1: [f64; 2],
    pub s2: [f64; 2],
    /// Regularized-equation residual divided by the leading exponential.
    pub residual: f64,
    /// `|u' - sigma u - u^[1]|` divided by the leading exponential.
    pub quasi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilReport {
    pub z: [f64; 2],
    pub reflected: bool,
    /// `sup_x |s~_jk|`, indexed `[j][k]`.
    pub s_sup: [[f64; 2]; 2],
    /// Sup of the normalized regularized residual per column.
    pub residual: [f64; 2],
    pub quasi: [f64; 2],
    /// `|det [(u_k, u_k^[1])]|` at `x = alpha`.
    pub det_alpha: f64,
    pub integral_residual: f64,
}

impl<T: Real> PencilSolution<T> {
    pub fn alpha(&self) -> T {
        self.system.alpha
    }

    /// `z` of the solved problem (`-z` when reflected).
    pub fn z_solved(&self) -> C<T> {
        if self.reflected {
            -self.z
        } else {
            self.z
        }
    }

    /// `(u_k, u_k^[1])` at `x`, `k` in 1..=2.
    pub fn eval(&self, k: usize, x: T) -> Result<(C<T>, C<T>)> {
        let y = self.system.columns[k - 1].y_work(x)?;
        Ok((y[0] + y[1], self.lambda * (y[0] - y[1])))
    }

    /// `exp((-1)^k i int_alpha^x p0 / 2)`.
    pub fn phase_factor(&self, k: usize, x: T) -> C<T> {
        let s = if k == 1 { -T::one() } else { T::one() };
        let int = self.pencil.p0.integral(self.alpha(), x);
        (ci::<T>() * int * lit::<T>(0.5) * s).exp()
    }

    fn b(k: usize) -> C<T> {
        if k == 1 {
            c1()
        } else {
            -c1::<T>()
        }
    }

    /// Samples of column `k` at the grid nodes of its solve.
    pub fn samples(&self, k: usize) -> Result<Vec<PencilSample>> {
        let col = &self.system.columns[k - 1];
        let spec = &col.ctx.spec;
        let grid = &col.z.grid;
        let lam = self.lambda;
        let bk = Self::b(k);
        let zs = self.z_solved();
        let dz: Vec<Vec<C<T>>> = (0..2).map(|j| col.z.node_derivative(j)).collect();
        let mut out = Vec::with_capacity(grid.nodes.len());
        for (i, &x) in grid.nodes.iter().enumerate() {
            let (m, _) = col.ctx.prop.eval(x)?;
            let zv = [col.z.nodes[0][i], col.z.nodes[1][i]];
            let zd = [dz[0][i], dz[1][i]];
            // y e^{-lambda b_k (x - alpha)} and its derivative with the same factor removed
            let yh = m.mul_vec(&zv);
            let a = spec.a_eval(x);
            let d = [a[(0, 0)], a[(1, 1)]];
            let mzd = m.mul_vec(&zd);
            let ydh: Vec<C<T>> = (0..2).map(|j| d[j] * yh[j] + mzd[j] + lam * bk * yh[j]).collect();
            let u = yh[0] + yh[1];
            let u1 = lam * (yh[0] - yh[1]);
            let du = ydh[0] + ydh[1];
            let du1 = lam * (ydh[0] - ydh[1]);
            let sg = self.pencil.sigma.eval(x);
            let p0 = self.pencil.p0.eval(x);
            let res = -du1 - sg * u1 - sg * sg * u + zs * p0 * u - zs * zs * u;
            let ph = self.phase_factor(k, x);
            let s1 = u - ph;
            let s2 = u1 / (lam * bk) - ph;
            out.push(PencilSample {
                x: to_f64(x),
                u: [to_f64(u.re), to_f64(u.im)],
                u1: [to_f64(u1.re), to_f64(u1.im)],
                s1: [to_f64(s1.re), to_f64(s1.im)],
                s2: [to_f64(s2.re), to_f64(s2.im)],
                residual: to_f64(res.norm()),
                quasi: to_f64((du - sg * u - u1).norm()),
            });
        }
        Ok(out)
    }

    pub fn report(&self) -> Result<PencilReport> {
        let mut s_sup = [[0.0f64; 2]; 2];
        let mut residual = [0.0f64; 2];
        let mut quasi = [0.0f64; 2];
        for k in 1..=2 {
            for s in self.samples(k)? {
                let h = |v: [f64; 2]| v[0].hypot(v[1]);
                s_sup[0][k - 1] = s_sup[0][k - 1].max(h(s.s1));
                s_sup[1][k - 1] = s_sup[1][k - 1].max(h(s.s2));
                residual[k - 1] = residual[k - 1].max(s.residual);
                quasi[k - 1] = quasi[k - 1].max(s.quasi);
            }
        }
        let a = self.alpha();
        let (u1, d1) = self.eval(1, a)?;
        let (u2, d2) = self.eval(2, a)?;
        Ok(PencilReport {
            z: [to_f64(self.z.re), to_f64(self.z.im)],
            reflected: self.reflected,
            s_sup,
            residual,
            quasi,
            det_alpha: to_f64((u1 * d2 - u2 * d1).norm()),
            integral_residual: self.system.max_residual(),
        })
    }
}

/// Fundamental system of the pencil for `z` in the closed lower half-plane;
/// `Im z > 0` is handled through `z -> -z`, `p0 -> -p0`.
pub fn pencil_fss<T: Real>(p: &PencilSpec<T>, alpha: T, z: C<T>, opts: &SolveOptions) -> Result<PencilSolution<T>> {
    if z == cz() {
        return Err(Error::OutOfRange("z = 0".into()));
    }
    let reflected = z.im > T::zero();
    let pencil = if reflected { p.reflected() } else { p.clone() };
    let zs = if reflected { -z } else { z };
    let lambda = zs * ci::<T>();
    let spec = reduce_pencil(&pencil)?;
    let geom = compute_sectors(spec.b());
    let kappa = geom
        .sectors
        .iter()
        .find(|s| s.permutation[0] == 0 && s.interval.contains(lambda, 1e-12))
        .map(|s| s.kappa)
        .ok_or_else(|| Error::OutsideRegion { lambda: format!("{lambda}"), region: "Re lambda >= 0".into() })?;
    let system = build_fss(&spec, alpha, kappa, lambda, opts)?;
    Ok(PencilSolution { z, reflected, pencil, lambda, system })
}

/// Empirical threshold in `|z|` along rays `arg z` in the closed lower half-plane.
pub fn pencil_lambda_alpha<T: Real>(
    p: &PencilSpec<T>,
    alpha: T,
    z_rays: &[f64],
    kopts: &KernelOptions,
    topts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    let spec = reduce_pencil(p)?;
    let rays: Vec<f64> = z_rays.iter().map(|a| a + std::f64::consts::FRAC_PI_2).collect();
    fss_lambda_alpha(&spec, alpha, &rays, kopts, topts)
}
