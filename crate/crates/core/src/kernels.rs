//! Kernel integrals `nu_jl`, `kappa_jl`, the suprema `theta_alpha` and `Psi`,
//! and square integrals along rays.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientFunction;
use crate::error::{Error, Result};
use crate::grid::{BcVector, PanelGrid};
use crate::propagator::{default_ode_options, Propagator};
use crate::quad::integrate;
use crate::scalar::{ci, cr, cz, lit, to_f64, Real, C};
use crate::sectors::{check_ordering, AngularInterval, OrderingCheck};
use crate::sweep::Plan;
use crate::system::SystemSpec;

/// Discretization and search parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct KernelOptions {
    /// Maximal panel length.
    pub h_max: f64,
    /// Maximal phase `|lambda| * rate * dp` per panel.
    pub phase_cap: f64,
    /// L1 tail level defining the cutoff `T_cut`.
    pub tail_eps: f64,
    /// `T_cut >= alpha + min_span`.
    pub min_span: f64,
    /// Coarse anchors of the two-dimensional supremum search.
    pub anchors: usize,
    /// Anchors refined by golden-section search.
    pub refine_top: usize,
    pub golden_iters: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            h_max: 0.125,
            phase_cap: std::f64::consts::FRAC_PI_4,
            tail_eps: 1e-9,
            min_span: 10.0,
            anchors: 64,
            refine_top: 5,
            golden_iters: 14,
        }
    }
}

/// Everything fixed by the choice of `(alpha, k, omega, region)`.
///
/// `spec` is in working numbering; `pivot` is `k - 1`, the number of components
/// integrated from infinity.
#[derive(Clone, Debug)]
pub struct KernelContext<T: Real> {
    pub spec: SystemSpec<T>,
    pub prop: Arc<Propagator<T>>,
    pub alpha: T,
    pub pivot: usize,
    pub omega: C<T>,
    pub region: AngularInterval,
    pub t_cut: T,
    pub opts: KernelOptions,
    p_alpha: T,
    /// `mu * sum ||(A - D)_pr||_{L[T_cut, inf)}`, a bound for the neglected tail of every `q_jl`.
    q_tail: T,
}

/// Cutoff for `[alpha, T_cut]`.
pub fn cutoff<T: Real>(spec: &SystemSpec<T>, alpha: T, opts: &KernelOptions) -> Result<T> {
    Ok(spec.tail_cutoff(alpha, lit(opts.tail_eps))?.max(alpha + lit(opts.min_span)))
}

impl<T: Real> KernelContext<T> {
    pub fn new(
        spec: SystemSpec<T>,
        alpha: T,
        pivot: usize,
        omega: C<T>,
        region: AngularInterval,
        opts: KernelOptions,
    ) -> Result<Self> {
        let t_cut = cutoff(&spec, alpha, &opts)?;
        let prop = Arc::new(Propagator::solve(&spec, alpha, t_cut, &default_ode_options())?);
        Self::with_propagator(spec, prop, alpha, pivot, omega, region, opts)
    }

    /// Reuses a propagator solved for the same spec and `alpha`.
    pub fn with_propagator(
        spec: SystemSpec<T>,
        prop: Arc<Propagator<T>>,
        alpha: T,
        pivot: usize,
        omega: C<T>,
        region: AngularInterval,
        opts: KernelOptions,
    ) -> Result<Self> {
        if pivot > spec.n() {
            return Err(Error::OutOfRange(format!("pivot {pivot} exceeds n = {}", spec.n())));
        }
        if prop.alpha() != alpha {
            return Err(Error::InvalidSystem("propagator anchored at a different alpha".into()));
        }
        let t_cut = prop.t_end();
        let mut tail = T::zero();
        for j in 0..spec.n() {
            for l in 0..spec.n() {
                if let Some(f) = spec.a_off(j, l) {
                    tail = tail + f.tail_norms(t_cut)?.l1;
                }
            }
        }
        let p_alpha = spec.rho().phase(alpha);
        let q_tail = prop.mu() * tail;
        Ok(Self { spec, prop, alpha, pivot, omega, region, t_cut, opts, p_alpha, q_tail })
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    /// `p(x) - p(alpha)`.
    pub fn phase(&self, x: T) -> T {
        if self.spec.rho().is_unit() {
            x - self.alpha
        } else {
            self.spec.rho().phase(x) - self.p_alpha
        }
    }

    /// `lambda (b_j - omega)`.
    pub fn rates(&self, lambda: C<T>) -> Vec<C<T>> {
        self.spec.b().iter().map(|&b| lambda * (b - self.omega)).collect()
    }

    /// Ordering precondition at `lambda`.
    pub fn check(&self, lambda: C<T>) -> Result<OrderingCheck> {
        if lambda == cz() {
            return Err(Error::OutOfRange("lambda = 0".into()));
        }
        let c = check_ordering(&self.region, self.spec.b(), Some(self.omega), lambda, self.pivot)?;
        if !c.holds {
            return Err(Error::OutsideRegion {
                lambda: format!("{lambda}"),
                region: format!("ordering with pivot {} (margin {:.3e})", self.pivot, c.margin),
            });
        }
        Ok(c)
    }

    pub fn grid(&self, lambda: C<T>, phase_cap: f64) -> Result<PanelGrid<T>> {
        let rate = self.spec.max_rate(Some(self.omega)) * lambda.norm();
        let dp = if rate > T::zero() { lit::<T>(phase_cap) / rate } else { T::infinity() };
        let mut knots = self.spec.knots();
        knots.extend(self.spec.rho().knots().iter().copied());
        PanelGrid::build(self.alpha, self.t_cut, &knots, self.spec.rho(), lit(self.opts.h_max), dp)
    }

    pub fn discretize(&self, lambda: C<T>) -> Result<Discretization<T>> {
        self.discretize_with_cap(lambda, self.opts.phase_cap)
    }

    pub fn discretize_with_cap(&self, lambda: C<T>, phase_cap: f64) -> Result<Discretization<T>> {
        self.check(lambda)?;
        let grid = Arc::new(self.grid(lambda, phase_cap)?);
        Discretization::on_grid(self, lambda, grid)
    }

    /// `(nu_jl, kappa_jl)(s, x, lambda)` by adaptive quadrature over the interval chosen
    /// by the four-case rule (indices 0-based).
    pub fn eval_nu_kappa(&self, j: usize, l: usize, s: T, x: T, lambda: C<T>) -> Result<(C<T>, C<T>)> {
        self.check(lambda)?;
        if s < self.alpha || x < self.alpha {
            return Err(Error::OutOfRange(format!("s = {s}, x = {x} below alpha = {}", self.alpha)));
        }
        let (t1, t2) = bounds(j, l, self.pivot, s, x, self.alpha, self.t_cut);
        if t1 >= t2 {
            return Ok((cz(), cz()));
        }
        let (aj, al) = (lambda * (self.spec.b()[j] - self.omega), lambda * (self.spec.b()[l] - self.omega));
        let (ps, px) = (self.phase(s), self.phase(x));
        let lg = |t: T| {
            let pt = self.phase(t);
            al * (pt - ps) + aj * (px - pt)
        };
        let tol = lit::<T>(1e-9) * (T::one() + lambda.norm() * (px.abs() + ps.abs() + self.phase(t2)));
        for t in [t1, t2] {
            if lg(t).re > tol {
                return Err(Error::OutsideRegion {
                    lambda: format!("{lambda}"),
                    region: format!("Re(lambda g) = {:.3e} > 0 at t = {t}", to_f64(lg(t).re)),
                });
            }
        }
        let mut cuts = vec![t1];
        let mut knots = self.spec.knots();
        knots.extend(self.spec.rho().knots().iter().copied());
        cuts.extend(knots.into_iter().filter(|&k| k > t1 && k < t2));
        cuts.push(t2);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fail = None;
        let mut nu = cz::<T>();
        let mut kappa = cz::<T>();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            // split so that each piece carries a bounded phase
            let span = lambda.norm() * self.spec.max_rate(Some(self.omega)) * (self.phase(b) - self.phase(a));
            let pieces = (span / lit(4.0)).ceil().to_usize().unwrap_or(1).clamp(1, 4096);
            for i in 0..pieces {
                let u = a + (b - a) * lit(i as f64 / pieces as f64);
                let v = if i + 1 == pieces { b } else { a + (b - a) * lit((i + 1) as f64 / pieces as f64) };
                let mut rv = cz::<T>();
                let f = |t: T| match self.prop.qr_at(&self.spec, t, lambda) {
                    Ok((q, r)) => {
                        let e = lg(t).exp();
                        (q[(j, l)] * e, r[(j, l)] * e)
                    }
                    Err(e) => {
                        fail = Some(e);
                        (cz(), cz())
                    }
                };
                let f = std::cell::RefCell::new(f);
                let (a1, _) = integrate(|t| (f.borrow_mut())(t).0, u, v, lit(1e-15), lit(1e-12), 400)?;
                if !self.spec.c_is_zero() {
                    rv = integrate(|t| (f.borrow_mut())(t).1, u, v, lit(1e-15), lit(1e-12), 400)?.0;
                }
                nu = nu + a1;
                kappa = kappa + rv;
            }
        }
        if let Some(e) = fail {
            return Err(e);
        }
        Ok((nu, kappa))
    }

    /// Estimate of `theta_alpha(lambda)`.
    pub fn theta_sup(&self, lambda: C<T>) -> Result<ThetaEstimate<T>> {
        let d = self.discretize(lambda)?;
        self.theta_on(&d)
    }

    /// `theta_alpha` on an existing discretization.
    pub fn theta_on(&self, d: &Discretization<T>) -> Result<ThetaEstimate<T>> {
        let n = self.n();
        let lambda = d.lambda;
        let grid = &d.grid;
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|j| (0..n).map(move |l| (j, l))).filter(|&(j, l)| d.q_nonzero(j, l)).collect();
        let vals: Vec<Result<T>> = pairs
            .par_iter()
            .map(|&(j, l)| {
                let (aj, al) = (d.rates[j], d.rates[l]);
                let q = d.q(j, l);
                let piv = self.pivot;
                match (j < piv, l < piv) {
                    (true, false) => Ok(sup_samples(&Plan::backward(grid, aj - al).run(grid, q))),
                    (false, true) => Ok(sup_samples(&Plan::forward(grid, aj - al).run(grid, q))),
                    (both_back, _) => {
                        let point = |t: T| self.prop.qr_at(&self.spec, t, lambda).map(|m| m.0[(j, l)]);
                        let phase = |t: T| self.phase(t);
                        let track = Track::new(grid, q, &point, &phase, self.spec.rho().is_unit());
                        if both_back {
                            sup_2d(&track, -al, -aj, &self.opts)
                        } else {
                            sup_2d(&track, aj, al, &self.opts)
                        }
                    }
                }
            })
            .collect();
        let mut grid_value = T::zero();
        for v in vals {
            grid_value = grid_value.max(v?);
        }
        let a = self.spec.a_const()?;
        let cap = a * (a + a).exp();
        if grid_value > cap * lit(1.0 + 1e-6) + lit(1e-12) {
            return Err(Error::Numerical(format!("theta estimate {grid_value} exceeds a e^(2a) = {cap}")));
        }
        Ok(ThetaEstimate { value: grid_value + self.q_tail, grid_value, tail_bound: self.q_tail })
    }
}

fn bounds<T: Real>(j: usize, l: usize, pivot: usize, s: T, x: T, alpha: T, t_cut: T) -> (T, T) {
    match (j < pivot, l < pivot) {
        (true, true) => (x, s),
        (true, false) => (x.max(s), t_cut.max(x.max(s))),
        (false, true) => (alpha, x.min(s)),
        (false, false) => (s, x),
    }
}

/// `theta` estimate: grid supremum plus the tail bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThetaEstimate<T> {
    pub value: T,
    pub grid_value: T,
    pub tail_bound: T,
}

/// Conjugated kernels `q`, `r` sampled on a grid for one `lambda`.
#[derive(Clone, Debug)]
pub struct Discretization<T: Real> {
    pub grid: Arc<PanelGrid<T>>,
    pub lambda: C<T>,
    pub rates: Vec<C<T>>,
    pub pivot: usize,
    n: usize,
    q: Vec<Vec<C<T>>>,
    r: Vec<Vec<C<T>>>,
    plans: Vec<Plan<T>>,
    /// Bound on the neglected `L[T_cut, inf)` mass of `max_l sum |v_jl|`.
    pub tail_mass: T,
}

impl<T: Real> Discretization<T> {
    pub fn on_grid(ctx: &KernelContext<T>, lambda: C<T>, grid: Arc<PanelGrid<T>>) -> Result<Self> {
        let n = ctx.n();
        let nn = grid.nodes.len();
        let mut q = vec![vec![cz(); nn]; n * n];
        let mut r = vec![vec![cz(); nn]; n * n];
        let has_c = !ctx.spec.c_is_zero();
        let rows: Vec<Result<(Vec<C<T>>, Vec<C<T>>)>> = grid
            .nodes
            .par_iter()
            .map(|&x| {
                let (qm, rm) = ctx.prop.qr_at(&ctx.spec, x, lambda)?;
                Ok((qm.as_slice().to_vec(), if has_c { rm.as_slice().to_vec() } else { Vec::new() }))
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            let (qv, rv) = row?;
            for e in 0..n * n {
                q[e][i] = qv[e];
                if has_c {
                    r[e][i] = rv[e];
                }
            }
        }
        // entries with equal b vanish identically
        for j in 0..n {
            for l in 0..n {
                if ctx.spec.b()[j] == ctx.spec.b()[l] {
                    q[j * n + l].iter_mut().for_each(|v| *v = cz());
                }
            }
        }
        let rates = ctx.rates(lambda);
        let plans = rates
            .iter()
            .enumerate()
            .map(|(j, &c)| if j < ctx.pivot { Plan::backward(&grid, c) } else { Plan::forward(&grid, c) })
            .collect();
        let mut r_tail = T::zero();
        if has_c {
            for j in 0..n {
                for l in 0..n {
                    r_tail = r_tail + ctx.spec.c_entry_at(j, l, lambda).tail_norms(ctx.t_cut)?.l1;
                }
            }
            r_tail = r_tail * ctx.prop.mu();
        }
        Ok(Self { grid, lambda, rates, pivot: ctx.pivot, n, q, r, plans, tail_mass: ctx.q_tail + r_tail })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, j: usize, l: usize) -> &[C<T>] {
        &self.q[j * self.n + l]
    }

    pub fn r(&self, j: usize, l: usize) -> &[C<T>] {
        &self.r[j * self.n + l]
    }

    pub fn q_nonzero(&self, j: usize, l: usize) -> bool {
        self.q(j, l).iter().any(|v| *v != cz())
    }

    fn has_r(&self) -> bool {
        self.r.iter().any(|e| e.iter().any(|v| *v != cz()))
    }

    /// The integral operator `V_k(lambda)` applied to samples of `z`.
    pub fn apply(&self, z: &BcVector<T>) -> BcVector<T> {
        let n = self.n;
        let nn = self.grid.nodes.len();
        let has_r = self.has_r();
        let comps: Vec<(Vec<C<T>>, Vec<C<T>>)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut g = vec![cz::<T>(); nn];
                let mut any = false;
                for l in 0..n {
                    let q = self.q(j, l);
                    let zl = &z.nodes[l];
                    let qz = q.iter().any(|v| *v != cz());
                    let rz = has_r && self.r(j, l).iter().any(|v| *v != cz());
                    if !qz && !rz {
                        continue;
                    }
                    any = true;
                    let r = self.r(j, l);
                    for i in 0..nn {
                        let v = if rz { q[i] + r[i] } else { q[i] };
                        g[i] = g[i] + v * zl[i];
                    }
                }
                if !any {
                    return (vec![cz(); nn], vec![cz(); self.grid.ends.len()]);
                }
                let (mut a, mut b) = self.plans[j].run(&self.grid, &g);
                if j < self.pivot {
                    a.iter_mut().for_each(|v| *v = -*v);
                    b.iter_mut().for_each(|v| *v = -*v);
                }
                (a, b)
            })
            .collect();
        let (nodes, ends) = comps.into_iter().unzip();
        BcVector { grid: self.grid.clone(), nodes, ends }
    }

    /// Bound on the truncation error of `apply` for an input of sup-norm `znorm`.
    pub fn truncation_bound(&self, znorm: T) -> T {
        self.tail_mass * znorm
    }
}

fn sup_samples<T: Real>(v: &(Vec<C<T>>, Vec<C<T>>)) -> T {
    v.0.iter().chain(&v.1).fold(T::zero(), |m, z| m.max(z.norm()))
}

type PointFn<'a, T> = &'a (dyn Fn(T) -> Result<C<T>> + Sync);
type PhaseFn<'a, T> = &'a (dyn Fn(T) -> T + Sync);

/// A scalar integrand on a grid, with pointwise access for partial panels.
struct Track<'a, T: Real> {
    grid: &'a PanelGrid<T>,
    q: &'a [C<T>],
    point: PointFn<'a, T>,
    phase: PhaseFn<'a, T>,
    /// `int_{ends[p]}^{T_cut} |q|`.
    massrem: Vec<T>,
    /// Largest node value of `|q|` from panel p on; only used for unit weight.
    qmax: Option<Vec<T>>,
}

impl<'a, T: Real> Track<'a, T> {
    fn new(
        grid: &'a PanelGrid<T>,
        q: &'a [C<T>],
        point: PointFn<'a, T>,
        phase: PhaseFn<'a, T>,
        unit_weight: bool,
    ) -> Self {
        let nq = grid.q();
        let np = grid.panels();
        let mut massrem = vec![T::zero(); np + 1];
        let mut qmax = vec![T::zero(); np + 1];
        for p in (0..np).rev() {
            let h = (grid.ends[p + 1] - grid.ends[p]) * lit(0.5);
            let s = (0..nq).fold(T::zero(), |s, m| s + grid.rule.weights[m] * q[p * nq + m].norm());
            massrem[p] = massrem[p + 1] + s * h;
            qmax[p] = (0..nq).fold(qmax[p + 1], |m, i| m.max(q[p * nq + i].norm()));
        }
        Self { grid, q, point, phase, massrem, qmax: if unit_weight { Some(qmax) } else { None } }
    }

    /// Bound on `int_{ends[p]}^x |q(t)| e^{Re c (P_x - P_t)} dt` over all x.
    fn remaining(&self, p: usize, c: C<T>) -> T {
        match &self.qmax {
            // node maxima slightly underestimate the panel sup
            Some(qm) if c.re < T::zero() => self.massrem[p].min(qm[p] * lit(1.25) / (-c.re)),
            _ => self.massrem[p],
        }
    }

    /// `sup_{x >= a0} |int_{a0}^x q(t) e^{d (P_t - P_a0)} e^{c (P_x - P_t)} dt|` (`Re c, Re d <= 0`).
    fn anchor_sup(&self, plan: &Plan<T>, c: C<T>, d: C<T>, a0: T) -> Result<T> {
        let g = self.grid;
        let nq = g.q();
        let mut p = g.locate(a0);
        let scale = T::one() + a0.abs();
        let tol = lit::<T>(1e-15) * (T::one() + self.massrem[0]);
        let mut sup = T::zero();
        let mut acc = cz::<T>();
        let pa0;
        let mut buf = vec![cz::<T>(); nq];
        let mut gv = vec![cz::<T>(); nq];
        if (a0 - g.ends[p]).abs() <= lit::<T>(1e-14) * scale {
            pa0 = g.phase_ends[p];
        } else if (g.ends[p + 1] - a0).abs() <= lit::<T>(1e-14) * scale {
            p += 1;
            if p >= g.panels() {
                return Ok(T::zero());
            }
            pa0 = g.phase_ends[p];
        } else {
            pa0 = (self.phase)(a0);
            let b = g.ends[p + 1];
            let hh = (b - a0) * lit(0.5);
            let mut tot = cz::<T>();
            let mut gi = vec![cz::<T>(); nq];
            let mut outs = vec![cz::<T>(); nq];
            for m in 0..nq {
                let t = a0 + hh * (g.rule.nodes[m] + T::one());
                let dp = (self.phase)(t) - pa0;
                gi[m] = (self.point)(t)? * (d * dp).exp() * (-c * dp).exp();
                outs[m] = (c * dp).exp();
                tot = tot + gi[m] * g.rule.weights[m];
            }
            for i in 0..nq {
                let mut s = cz::<T>();
                for m in 0..nq {
                    s = s + gi[m] * g.rule.fwd[i][m];
                }
                sup = sup.max((outs[i] * s * hh).norm());
            }
            acc = (c * (g.phase_ends[p + 1] - pa0)).exp() * tot * hh;
            sup = sup.max(acc.norm());
            p += 1;
        }
        for pp in p..g.panels() {
            // |F(x)| <= |F(e)| + e^{Re d (P_e - P_a0)} int_e^x |q| e^{Re c (P_x - P_t)} for x >= e
            let decay = (d.re * (g.phase_ends[pp] - pa0)).exp();
            if acc.norm() + decay * self.remaining(pp, c) <= sup + tol {
                break;
            }
            for m in 0..nq {
                let i = pp * nq + m;
                gv[m] = self.q[i] * (d * (g.phase_nodes[i] - pa0)).exp();
            }
            acc = plan.forward_panel(g, pp, acc, &gv, &mut buf);
            for v in buf.iter().chain(std::iter::once(&acc)) {
                sup = sup.max(v.norm());
            }
        }
        Ok(sup)
    }
}

/// Two-dimensional supremum by coarse anchors plus golden-section refinement.
fn sup_2d<T: Real>(track: &Track<'_, T>, c: C<T>, d: C<T>, opts: &KernelOptions) -> Result<T> {
    let g = track.grid;
    let plan = Plan::forward(g, c);
    let total = *g.phase_ends.last().unwrap();
    let na = opts.anchors.max(2);
    let mut idx: Vec<usize> = (0..na)
        .map(|k| {
            let target = total * lit(k as f64 / (na - 1) as f64);
            g.phase_ends.partition_point(|&p| p < target).min(g.ends.len() - 1)
        })
        .collect();
    idx.dedup();
    let anchors: Vec<T> = idx.iter().map(|&i| g.ends[i]).collect();
    let vals: Vec<T> =
        anchors.par_iter().map(|&a| track.anchor_sup(&plan, c, d, a)).collect::<Result<Vec<T>>>()?;
    let mut best = vals.iter().fold(T::zero(), |m, &v| m.max(v));
    let mut order: Vec<usize> = (0..anchors.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));
    let refined: Vec<Result<T>> = order
        .iter()
        .take(opts.refine_top)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&k| {
            let lo = if k == 0 { anchors[0] } else { anchors[k - 1] };
            let hi = if k + 1 == anchors.len() { anchors[k] } else { anchors[k + 1] };
            golden_max(|x| track.anchor_sup(&plan, c, d, x), lo, hi, opts.golden_iters)
        })
        .collect();
    for r in refined {
        best = best.max(r?);
    }
    Ok(best)
}

fn golden_max<T: Real>(f: impl Fn(T) -> Result<T>, mut a: T, mut b: T, iters: usize) -> Result<T> {
    if b <= a {
        return f(a);
    }
    let r: T = lit(0.618_033_988_749_894_8);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut best = f1.max(f2);
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
            best = best.max(f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
            best = best.max(f2);
        }
    }
    Ok(best)
}

/// `Psi(lambda)` estimate for a density `f` on `[0, inf)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsiEstimate<T> {
    pub value: T,
    pub grid_value: T,
    pub tail_bound: T,
}

/// `Psi(lambda) = sup_{s, x >= 0} |int_{min(s,x)}^{max(s,x)} f(t) e^{i lambda |x - t|} dt|`, `Im lambda >= 0`.
pub fn psi_sup<T: Real>(f: &CoefficientFunction<T>, lambda: C<T>, opts: &KernelOptions) -> Result<PsiEstimate<T>> {
    if lambda.im < -lit::<T>(1e-12) * (T::one() + lambda.norm()) {
        return Err(Error::OutOfRange(format!("Psi needs Im lambda >= 0, got {lambda}")));
    }
    let zero = PsiEstimate { value: T::zero(), grid_value: T::zero(), tail_bound: T::zero() };
    if f.is_zero() {
        return Ok(zero);
    }
    let eps = lit::<T>(opts.tail_eps);
    let t_cut = f.tail_cutoff(eps, T::zero())?.max(lit(opts.min_span));
    let rho = crate::coeffs::WeightFunction::constant(T::one())?;
    let dp = if lambda.norm() > T::zero() { lit::<T>(opts.phase_cap) / lambda.norm() } else { T::infinity() };
    let grid = PanelGrid::build(T::zero(), t_cut, f.knots(), &rho, lit(opts.h_max), dp)?;
    let q: Vec<C<T>> = grid.nodes.iter().map(|&t| f.eval(t)).collect();
    let point = |t: T| Ok(f.eval(t));
    let phase = |t: T| t;
    let track = Track::new(&grid, &q, &point, &phase, true);
    let il = ci::<T>() * lambda;
    let psi1 = sup_2d(&track, il, cz(), opts)?;
    let psi2 = sup_2d(&track, cz(), il, opts)?;
    let grid_value = psi1.max(psi2);
    let l1 = f.tail_norms(T::zero())?.l1;
    if grid_value > l1 * lit(1.0 + 1e-6) + lit(1e-12) {
        return Err(Error::Numerical(format!("Psi estimate {grid_value} exceeds ||f||_1 = {l1}")));
    }
    let tail_bound = f.tail_norms(t_cut)?.l1;
    Ok(PsiEstimate { value: grid_value + tail_bound, grid_value, tail_bound })
}

/// Partial integrals of `g^2` along a ray.
#[derive(Clone, Debug, Serialize)]
pub struct L2Report<T> {
    /// `(R, int_0^R g(origin + r dir)^2 dr)` at `R_max / 4`, `R_max / 2`, `R_max`.
    pub partials: [(T, T); 3],
    /// Relative change of the last doubling.
    pub last_change: T,
    /// Ratio of the last two increments.
    pub increment_ratio: T,
    pub error_estimate: T,
}

impl<T: Real> L2Report<T> {
    pub fn value(&self) -> T {
        self.partials[2].1
    }
}

/// `int_0^{R_max} g(origin + r direction)^2 dr` with convergence diagnostics.
pub fn l2_along_ray<T: Real>(
    g: impl Fn(C<T>) -> Result<T>,
    origin: C<T>,
    direction: C<T>,
    r_max: T,
    rel_tol: T,
) -> Result<L2Report<T>> {
    if !(r_max > T::zero()) || direction.norm() == T::zero() {
        return Err(Error::OutOfRange("ray needs R_max > 0 and a nonzero direction".into()));
    }
    let dir = direction / direction.norm();
    let err = std::cell::RefCell::new(None);
    let f = |r: T| -> C<T> {
        match g(origin + dir * r) {
            Ok(v) if v.is_finite() => cr(v * v),
            Ok(v) => {
                *err.borrow_mut() = Some(Error::Numerical(format!("non-finite sample {v} at r = {r}")));
                cz()
            }
            Err(e) => {
                *err.borrow_mut() = Some(e);
                cz()
            }
        }
    };
    let cuts = [T::zero(), r_max * lit(0.25), r_max * lit(0.5), r_max];
    let mut partials = [(T::zero(), T::zero()); 3];
    let mut acc = T::zero();
    let mut est = T::zero();
    for i in 0..3 {
        let (a, b) = (cuts[i], cuts[i + 1]);
        let (v, e) = integrate(&f, a, b, lit(1e-14), rel_tol, 64)?;
        if let Some(e) = err.borrow_mut().take() {
            return Err(e);
        }
        acc = acc + v.re;
        est = est + e;
        partials[i] = (b, acc);
    }
    let d1 = partials[1].1 - partials[0].1;
    let d2 = partials[2].1 - partials[1].1;
    let last_change = if partials[2].1 > T::zero() { d2 / partials[2].1 } else { T::zero() };
    let increment_ratio = if d1 > T::zero() { d2 / d1 } else { T::zero() };
    Ok(L2Report { partials, last_change, increment_ratio, error_estimate: est })
}
