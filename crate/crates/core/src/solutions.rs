//! Fundamental systems in sectors, large-sector systems, and their verification.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BcVector, PanelGrid};
use crate::kernels::{cutoff, Discretization, KernelContext, KernelOptions};
use crate::linalg::CMatrix;
use crate::ode::DenseSolution;
use crate::picard::{bound_v2_at, ray_threshold, solve_fixed_point, PicardCertificate, PicardOptions, ThresholdOptions,
    ThresholdReport};
use crate::propagator::{default_ode_options, extend_to_zero, Propagator};
use crate::scalar::{c1, cz, lit, to_f64, Real, C};
use crate::sectors::{compute_sectors, large_sector, odd_even_roots, AngularInterval, LargeSector};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolveOptions {
    pub kernel: KernelOptions,
    pub picard: PicardOptions,
    /// Integral-equation residual above which the grid is refined once.
    pub residual_target: f64,
    /// Build the grid as if `|lambda|` were this value (fixed grid for contour sweeps).
    pub grid_modulus: Option<f64>,
    /// Extend the columns to `[0, alpha]`.
    pub extend: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            kernel: KernelOptions::default(),
            picard: PicardOptions::default(),
            residual_target: 1e-9,
            grid_modulus: None,
            extend: true,
        }
    }
}

/// Free term of `z = w + V z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Forcing<T: Real> {
    /// `e_k`.
    Unit(usize),
    /// `e^{rate (p(x) - p(alpha))} e_k`.
    Exponential { k: usize, rate: C<T> },
}

impl<T: Real> Forcing<T> {
    pub fn value(&self, j: usize, phase: T) -> C<T> {
        match *self {
            Forcing::Unit(k) if k == j => c1(),
            Forcing::Exponential { k, rate } if k == j => (rate * phase).exp(),
            _ => cz(),
        }
    }

    fn sample(&self, ctx: &KernelContext<T>, grid: Arc<PanelGrid<T>>) -> BcVector<T> {
        let n = ctx.n();
        BcVector::from_fn(grid, n, |j, x| self.value(j, ctx.phase(x)))
    }
}

/// Sub-regions of a large sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubRegion {
    Lambda,
    Gamma1,
    GammaSigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RegionTag {
    Sector { kappa: usize },
    LargeSector { m: usize, part: SubRegion },
    Supplemented { m: usize, part: SubRegion },
}

/// One solution column: `y = M z e^{lambda omega (p(x) - p(alpha))}` for `x >= alpha`.
#[derive(Clone, Debug)]
pub struct Column<T: Real> {
    /// 1-based working index of the column.
    pub k: usize,
    /// Working index to original index.
    pub perm: Arc<Vec<usize>>,
    pub omega: C<T>,
    pub forcing: Forcing<T>,
    pub z: BcVector<T>,
    pub cert: PicardCertificate,
    pub ctx: Arc<KernelContext<T>>,
    pub lambda: C<T>,
    /// Solution on `[0, alpha]`, if requested.
    pub extension: Option<DenseSolution<T>>,
    /// Integral-equation residual on a 4x finer grid.
    pub residual: f64,
    pub refined: bool,
}

impl<T: Real> Column<T> {
    /// Original index of `b_k`.
    pub fn label(&self) -> usize {
        self.perm[self.k - 1]
    }

    pub fn alpha(&self) -> T {
        self.ctx.alpha
    }

    pub fn t_cut(&self) -> T {
        self.ctx.t_cut
    }

    /// `z~(x)` for `x` in `[alpha, T_cut]`.
    pub fn z_at(&self, x: T) -> Result<Vec<C<T>>> {
        (0..self.ctx.n()).map(|j| self.z.eval(j, x)).collect()
    }

    /// Column in working numbering at `x` in `[0, T_cut]`.
    pub fn y_work(&self, x: T) -> Result<Vec<C<T>>> {
        let alpha = self.alpha();
        if x < alpha {
            return match &self.extension {
                Some(e) => e.eval(x),
                None => Err(Error::OutOfRange(format!("x = {x} < alpha and no extension was built"))),
            };
        }
        let z = self.z_at(x)?;
        let (m, _) = self.ctx.prop.eval(x)?;
        let e = (self.lambda * self.omega * self.ctx.phase(x)).exp();
        Ok(m.mul_vec(&z).into_iter().map(|v| v * e).collect())
    }

    /// Column in the original numbering.
    pub fn y_original(&self, x: T) -> Result<Vec<C<T>>> {
        let w = self.y_work(x)?;
        let mut out = vec![cz(); w.len()];
        for (i, v) in w.into_iter().enumerate() {
            out[self.perm[i]] = v;
        }
        Ok(out)
    }

    /// Sample points of the column grid.
    pub fn sample_points(&self) -> Vec<T> {
        let g = &self.z.grid;
        let mut xs: Vec<T> = g.nodes.iter().chain(&g.ends).copied().collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs
    }

    /// `sup_x |y_jk e^{-lambda b (p - p(alpha))}|` per component.
    pub fn envelope(&self, b: C<T>) -> Result<Vec<f64>> {
        let n = self.ctx.n();
        let mut out = vec![0.0f64; n];
        let g = &self.z.grid;
        let mut visit = |x: T, zv: Vec<C<T>>| -> Result<()> {
            let (m, _) = self.ctx.prop.eval(x)?;
            let e = (self.lambda * (self.omega - b) * self.ctx.phase(x)).exp();
            for (j, v) in m.mul_vec(&zv).into_iter().enumerate() {
                out[j] = out[j].max(to_f64((v * e).norm()));
            }
            Ok(())
        };
        for (i, &x) in g.nodes.iter().enumerate() {
            visit(x, (0..n).map(|j| self.z.nodes[j][i]).collect())?;
        }
        for (i, &x) in g.ends.iter().enumerate() {
            visit(x, (0..n).map(|j| self.z.ends[j][i]).collect())?;
        }
        Ok(out)
    }
}

/// A system of solution columns for one `(alpha, lambda)`.
#[derive(Clone, Debug)]
pub struct SolutionSystem<T: Real> {
    pub alpha: T,
    pub lambda: C<T>,
    pub region: RegionTag,
    /// Working index to original index.
    pub perm: Arc<Vec<usize>>,
    pub columns: Vec<Column<T>>,
}

impl<T: Real> SolutionSystem<T> {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Matrix of the columns in working numbering at `x`.
    pub fn y_work(&self, x: T) -> Result<CMatrix<T>> {
        let cols: Vec<Vec<C<T>>> = self.columns.iter().map(|c| c.y_work(x)).collect::<Result<_>>()?;
        Ok(CMatrix::from_fn(self.n(), cols.len(), |i, k| cols[k][i]))
    }

    /// Matrix of the columns in original row numbering at `x`.
    pub fn y_original(&self, x: T) -> Result<CMatrix<T>> {
        let cols: Vec<Vec<C<T>>> = self.columns.iter().map(|c| c.y_original(x)).collect::<Result<_>>()?;
        Ok(CMatrix::from_fn(self.n(), cols.len(), |i, k| cols[k][i]))
    }

    /// Determinant at `alpha` (square systems only).
    pub fn det_at_alpha(&self) -> Result<C<T>> {
        if self.columns.len() != self.n() {
            return Err(Error::Unsupported("determinant of a non-square system".into()));
        }
        Ok(self.y_original(self.alpha)?.det())
    }

    pub fn max_residual(&self) -> f64 {
        self.columns.iter().fold(0.0, |m, c| m.max(c.residual))
    }

    pub fn t_cut(&self) -> T {
        self.columns.iter().fold(T::infinity(), |m, c| m.min(c.t_cut()))
    }
}

fn solve_column<T: Real>(
    ctx: Arc<KernelContext<T>>,
    perm: Arc<Vec<usize>>,
    lambda: C<T>,
    k: usize,
    forcing: Forcing<T>,
    opts: &SolveOptions,
) -> Result<Column<T>> {
    ctx.check(lambda)?;
    let modulus = opts.grid_modulus.map(|r| C::new(lit::<T>(r), T::zero())).unwrap_or(lambda);
    let mut cap = ctx.opts.phase_cap;
    let mut refined = false;
    loop {
        let grid = Arc::new(ctx.grid(modulus, cap)?);
        let disc = Discretization::on_grid(&ctx, lambda, grid.clone())?;
        let w = forcing.sample(&ctx, grid);
        let (z, cert) = solve_fixed_point(&ctx, &disc, &w, &opts.picard)?;
        let residual = integral_residual(&ctx, lambda, &forcing, &z)?;
        if residual > opts.residual_target && !refined {
            refined = true;
            cap *= 0.5;
            continue;
        }
        let mut col = Column {
            k: k + 1,
            perm,
            omega: ctx.omega,
            forcing,
            z,
            cert,
            ctx: ctx.clone(),
            lambda,
            extension: None,
            residual,
            refined,
        };
        if opts.extend && ctx.alpha > T::zero() {
            let y0 = col.y_work(ctx.alpha)?;
            col.extension = Some(extend_to_zero(&ctx.spec, lambda, ctx.alpha, &y0, &default_ode_options())?);
        }
        return Ok(col);
    }
}

/// `sup |z - w - V z|` with `V` and `w` re-evaluated on a 4x finer grid and `z` interpolated.
pub fn integral_residual<T: Real>(
    ctx: &KernelContext<T>,
    lambda: C<T>,
    forcing: &Forcing<T>,
    z: &BcVector<T>,
) -> Result<f64> {
    let fine = Arc::new(z.grid.refined(4, ctx.spec.rho()));
    let disc = Discretization::on_grid(ctx, lambda, fine.clone())?;
    let zf = z.resample(fine.clone())?;
    let wf = forcing.sample(ctx, fine);
    let r = zf.sub(&wf).sub(&disc.apply(&zf));
    Ok(to_f64(r.sup_norm()))
}

/// Integral-equation residual of every column.
pub fn verify_integral_residual<T: Real>(sys: &SolutionSystem<T>) -> Result<f64> {
    let mut worst = 0.0f64;
    for c in &sys.columns {
        worst = worst.max(integral_residual(&c.ctx, c.lambda, &c.forcing, &c.z)?);
    }
    Ok(worst)
}

/// Shared propagator for a working spec.
fn propagator<T: Real>(spec: &SystemSpec<T>, alpha: T, opts: &KernelOptions) -> Result<Arc<Propagator<T>>> {
    let t_cut = cutoff(spec, alpha, opts)?;
    Ok(Arc::new(Propagator::solve(spec, alpha, t_cut, &default_ode_options())?))
}

/// Fundamental system in the closed sector `kappa` (1-based).
pub fn build_fss<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    kappa: usize,
    lambda: C<T>,
    opts: &SolveOptions,
) -> Result<SolutionSystem<T>> {
    build_fss_columns(spec, alpha, kappa, lambda, opts, spec.n())
}

/// The first `ncols` columns of the fundamental system in sector `kappa`.
pub fn build_fss_columns<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    kappa: usize,
    lambda: C<T>,
    opts: &SolveOptions,
    ncols: usize,
) -> Result<SolutionSystem<T>> {
    let geom = compute_sectors(spec.b());
    let sector = geom.sector(kappa)?;
    let perm = Arc::new(sector.permutation.clone());
    let wspec = spec.permuted(&perm);
    let prop = propagator(&wspec, alpha, &opts.kernel)?;
    let mut columns = Vec::with_capacity(ncols);
    for k in 0..ncols.min(spec.n()) {
        let ctx = Arc::new(KernelContext::with_propagator(
            wspec.clone(),
            prop.clone(),
            alpha,
            k,
            wspec.b()[k],
            sector.interval,
            opts.kernel,
        )?);
        columns.push(solve_column(ctx, perm.clone(), lambda, k, Forcing::Unit(k), opts)?);
    }
    let sys = SolutionSystem { alpha, lambda, region: RegionTag::Sector { kappa }, perm, columns };
    // y_jk(alpha) = delta_jk for j >= k
    let y = sys.y_work(alpha)?;
    for k in 0..sys.columns.len() {
        for j in k..sys.n() {
            let d = if j == k { c1() } else { cz() };
            if to_f64((y[(j, k)] - d).norm()) > 1e-10 {
                return Err(Error::Numerical(format!("y_{}{}(alpha) = {} violates the normalization", j + 1, k + 1, y[(j, k)])));
            }
        }
    }
    Ok(sys)
}

/// Kernel contexts of every column of the fundamental system in sector `kappa`.
pub fn fss_contexts<T: Real>(spec: &SystemSpec<T>, alpha: T, kappa: usize, opts: &KernelOptions) -> Result<Vec<KernelContext<T>>> {
    let geom = compute_sectors(spec.b());
    let sector = geom.sector(kappa)?;
    let wspec = spec.permuted(&sector.permutation);
    let prop = propagator(&wspec, alpha, opts)?;
    (0..spec.n())
        .map(|k| KernelContext::with_propagator(wspec.clone(), prop.clone(), alpha, k, wspec.b()[k], sector.interval, *opts))
        .collect()
}

/// Sector of the first closed sector containing `lambda`.
pub fn sector_of<T: Real>(spec: &SystemSpec<T>, lambda: C<T>) -> Result<usize> {
    compute_sectors(spec.b())
        .locate(lambda)
        .map(|s| s.kappa)
        .ok_or_else(|| Error::OutsideRegion { lambda: format!("{lambda}"), region: "any sector".into() })
}

/// Residuals `s_jk(x) = y_jk e^{-lambda b_k (p - p(alpha))} - m_jk` of a fundamental system.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// `sup_x |s_jk|` in working numbering, indexed `[j][k]`.
    pub sup: Vec<Vec<f64>>,
    pub max: f64,
}

pub fn extract_residuals<T: Real>(sys: &SolutionSystem<T>) -> Result<ResidualReport> {
    if !matches!(sys.region, RegionTag::Sector { .. }) {
        return Err(Error::Unsupported("residuals are defined for fundamental systems in sectors".into()));
    }
    let n = sys.n();
    let mut sup = vec![vec![0.0f64; sys.columns.len()]; n];
    for (kc, c) in sys.columns.iter().enumerate() {
        let k = c.k - 1;
        for x in c.sample_points() {
            let mut z = c.z_at(x)?;
            z[k] = z[k] - c1::<T>();
            let (m, _) = c.ctx.prop.eval(x)?;
            for (j, v) in m.mul_vec(&z).into_iter().enumerate() {
                sup[j][kc] = sup[j][kc].max(to_f64(v.norm()));
            }
        }
    }
    let max = sup.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    Ok(ResidualReport { sup, max })
}

/// Working numbering of the odd-even roots of unity as a permutation of `spec.b()`.
pub fn odd_even_permutation<T: Real>(spec: &SystemSpec<T>) -> Result<Vec<usize>> {
    if !spec.roots_of_unity() {
        return Err(Error::Unsupported("large sectors need b to be the n-th roots of unity".into()));
    }
    let roots = odd_even_roots::<T>(spec.n());
    roots
        .iter()
        .map(|r| {
            spec.b()
                .iter()
                .position(|b| (*b - *r).norm() < lit(1e-9))
                .ok_or_else(|| Error::InvalidSystem("b is not a permutation of the roots of unity".into()))
        })
        .collect()
}

/// Geometry and exponent of a large-sector sub-region.
pub fn sub_region<T: Real>(ls: &LargeSector, part: SubRegion, b: &[C<T>]) -> (AngularInterval, C<T>) {
    let m = ls.m;
    let n = b.len();
    match part {
        SubRegion::Lambda => (ls.lambda, ls.omega_c()),
        SubRegion::Gamma1 => (ls.gamma1, b[m - 1]),
        SubRegion::GammaSigma => (ls.gamma_sigma, b[m.min(n - 1)]),
    }
}

fn large_geometry(n: usize, m: usize) -> Result<LargeSector> {
    large_sector(n, m, n == 2)
}

/// Solutions `u_jk`, `k = m..n`, analytic in the large sector `Omega_m`.
///
/// `prefer` selects the sub-region when `lambda` lies in several closures; otherwise the
/// first of `Lambda`, `Gamma1`, `GammaSigma` containing `lambda` is used.
pub fn build_large_sector<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    m: usize,
    lambda: C<T>,
    prefer: Option<SubRegion>,
    opts: &SolveOptions,
) -> Result<SolutionSystem<T>> {
    build_large_sector_columns(spec, alpha, m, lambda, prefer, opts, spec.n() + 1 - m)
}

/// The first `ncols` columns (`k = m, m+1, ...`) of [`build_large_sector`].
pub fn build_large_sector_columns<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    m: usize,
    lambda: C<T>,
    prefer: Option<SubRegion>,
    opts: &SolveOptions,
    ncols: usize,
) -> Result<SolutionSystem<T>> {
    let n = spec.n();
    let ls = large_geometry(n, m)?;
    if !ls.omega_m.contains(lambda, 1e-9) {
        return Err(Error::OutsideRegion {
            lambda: format!("{lambda}"),
            region: format!("Omega_{m} = ({:.6}, {:.6})", ls.omega_m.lo.radians, ls.omega_m.hi.radians),
        });
    }
    let perm = Arc::new(odd_even_permutation(spec)?);
    let wspec = spec.permuted(&perm);
    let mut order = vec![SubRegion::Lambda, SubRegion::Gamma1, SubRegion::GammaSigma];
    if let Some(p) = prefer {
        order.retain(|&r| r != p);
        order.insert(0, p);
    }
    let part = order
        .into_iter()
        .find(|&r| sub_region(&ls, r, wspec.b()).0.contains(lambda, 1e-9))
        .ok_or_else(|| Error::OutsideRegion { lambda: format!("{lambda}"), region: "sub-regions".into() })?;
    let (region, omega) = sub_region(&ls, part, wspec.b());
    let prop = propagator(&wspec, alpha, &opts.kernel)?;
    let ctx = Arc::new(KernelContext::with_propagator(
        wspec.clone(),
        prop,
        alpha,
        m - 1,
        omega,
        region,
        opts.kernel,
    )?);
    let mut columns = Vec::new();
    for k in m - 1..(m - 1 + ncols).min(n) {
        let rate = lambda * (wspec.b()[k] - omega);
        let forcing = if rate == cz() { Forcing::Unit(k) } else { Forcing::Exponential { k, rate } };
        columns.push(solve_column(ctx.clone(), perm.clone(), lambda, k, forcing, opts)?);
    }
    let sys = SolutionSystem { alpha, lambda, region: RegionTag::LargeSector { m, part }, perm, columns };
    let y = sys.y_work(alpha)?;
    for (kc, c) in sys.columns.iter().enumerate() {
        for j in m - 1..n {
            let d = if j == c.k - 1 { c1() } else { cz() };
            if to_f64((y[(j, kc)] - d).norm()) > 1e-10 {
                return Err(Error::Numerical(format!("u_{}{}(alpha) violates the normalization", j + 1, c.k)));
            }
        }
    }
    Ok(sys)
}

/// Large-sector solves from two sub-regions compared in the frame of `omega_ref`:
/// `sup |e^{lambda (omega_a - omega_ref) p} z~_a - e^{lambda (omega_b - omega_ref) p} z~_b|`.
pub fn overlap_defect<T: Real>(a: &SolutionSystem<T>, b: &SolutionSystem<T>, omega_ref: C<T>) -> Result<f64> {
    if a.columns.len() != b.columns.len() || a.lambda != b.lambda {
        return Err(Error::InvalidSystem("systems are not comparable".into()));
    }
    let t_max = a.t_cut().min(b.t_cut());
    let mut worst = 0.0f64;
    for (ca, cb) in a.columns.iter().zip(&b.columns) {
        for x in ca.sample_points().into_iter().filter(|&x| x <= t_max) {
            let p = ca.ctx.phase(x);
            let fa = (a.lambda * (ca.omega - omega_ref) * p).exp();
            let fb = (b.lambda * (cb.omega - omega_ref) * p).exp();
            let (za, zb) = (ca.z_at(x)?, cb.z_at(x)?);
            for j in 0..za.len() {
                worst = worst.max(to_f64((za[j] * fa - zb[j] * fb).norm()));
            }
        }
    }
    Ok(worst)
}

/// Completes a large-sector system with the first `m - 1` columns of a fundamental system.
pub fn supplement_fss<T: Real>(large: &SolutionSystem<T>, fss: &SolutionSystem<T>) -> Result<SolutionSystem<T>> {
    let (m, part) = match large.region {
        RegionTag::LargeSector { m, part } => (m, part),
        _ => return Err(Error::InvalidSystem("first argument must be a large-sector system".into())),
    };
    if !matches!(fss.region, RegionTag::Sector { .. }) || fss.lambda != large.lambda || fss.alpha != large.alpha {
        return Err(Error::InvalidSystem("fundamental system for a different (alpha, lambda)".into()));
    }
    if fss.columns.len() < m - 1 {
        return Err(Error::InvalidSystem(format!("need {} fundamental columns", m - 1)));
    }
    let mut columns: Vec<Column<T>> = fss.columns[..m - 1].to_vec();
    columns.extend(large.columns.iter().cloned());
    let sys = SolutionSystem {
        alpha: large.alpha,
        lambda: large.lambda,
        region: RegionTag::Supplemented { m, part },
        perm: large.perm.clone(),
        columns,
    };
    let d = sys.det_at_alpha()?;
    if to_f64(d.norm()) < 1e-10 {
        return Err(Error::Numerical(format!("supplemented system is degenerate at alpha (det = {d})")));
    }
    Ok(sys)
}

/// Cauchy contour test of a function of lambda on a circle.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnalyticityReport {
    /// `|oint f d lambda|`.
    pub contour_integral: f64,
    /// `|f(center) - (1 / 2 pi i) oint f / (lambda - center) d lambda|`.
    pub cauchy_error: f64,
    /// `max |f|` on the contour.
    pub scale: f64,
}

impl AnalyticityReport {
    pub fn passes(&self, rel_tol: f64) -> bool {
        let s = self.scale.max(f64::MIN_POSITIVE);
        self.contour_integral <= rel_tol * s && self.cauchy_error <= rel_tol * s
    }
}

pub fn verify_analyticity<T: Real>(
    f: impl Fn(C<T>) -> Result<C<T>> + Sync,
    center: C<T>,
    radius: T,
    nodes: usize,
) -> Result<AnalyticityReport> {
    let nodes = nodes.max(8);
    let vals: Vec<(C<T>, C<T>)> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            let e = C::new(lit::<T>(th.cos()), lit::<T>(th.sin()));
            f(center + e * radius).map(|v| (v, e))
        })
        .collect::<Result<_>>()?;
    let h = lit::<T>(2.0 * std::f64::consts::PI / nodes as f64);
    let mut integral = cz::<T>();
    let mut mean = cz::<T>();
    let mut scale = 0.0f64;
    for &(v, e) in &vals {
        integral = integral + v * C::new(T::zero(), radius) * e * h;
        mean = mean + v;
        scale = scale.max(to_f64(v.norm()));
    }
    mean = mean / lit::<T>(nodes as f64);
    let fc = f(center)?;
    scale = scale.max(to_f64(fc.norm()));
    Ok(AnalyticityReport {
        contour_integral: to_f64(integral.norm()),
        cauchy_error: to_f64((fc - mean).norm()),
        scale,
    })
}

/// Threshold of the fundamental-system construction: for each ray, the largest
/// per-column threshold in the sector containing the ray.
pub fn fss_lambda_alpha<T: Real>(
    spec: &SystemSpec<T>,
    alpha: T,
    rays: &[f64],
    kopts: &KernelOptions,
    topts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    if rays.is_empty() {
        return Err(Error::OutOfRange("no rays given".into()));
    }
    let geom = compute_sectors(spec.b());
    let per_ray = rays
        .par_iter()
        .map(|&a| -> Result<(f64, f64)> {
            let dir = C::new(lit::<T>(a.cos()), lit::<T>(a.sin()));
            let sector = geom
                .locate(dir)
                .ok_or_else(|| Error::OutsideRegion { lambda: format!("arg {a}"), region: "any sector".into() })?;
            let wspec = spec.permuted(&sector.permutation);
            let prop = propagator(&wspec, alpha, kopts)?;
            if spec.a_off_tail(alpha)? == T::zero() && spec.c_is_zero() {
                return Ok((a, topts.r_floor));
            }
            let mut worst = 0.0f64;
            for k in 0..spec.n() {
                let ctx = KernelContext::with_propagator(
                    wspec.clone(),
                    prop.clone(),
                    alpha,
                    k,
                    wspec.b()[k],
                    sector.interval,
                    *kopts,
                )?;
                worst = worst.max(ray_threshold(|l| bound_v2_at(&ctx, l), a, topts)?);
            }
            Ok((a, worst.max(topts.r_floor)))
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda_alpha = per_ray.iter().fold(0.0f64, |m, r| m.max(r.1));
    Ok(ThresholdReport { lambda_alpha, per_ray, phi: to_f64(spec.phi(alpha)?) })
}

/// Evenly spaced ray angles strictly inside every sector (`per_sector` each).
pub fn interior_rays<T: Real>(spec: &SystemSpec<T>, per_sector: usize) -> Vec<f64> {
    let geom = compute_sectors(spec.b());
    let mut out = Vec::new();
    for s in &geom.sectors {
        let w = s.interval.width();
        for i in 0..per_sector {
            out.push(s.interval.lo.radians + w * (i as f64 + 0.5) / per_sector as f64);
        }
    }
    out
}
