//! The operator `V_k(lambda)`, its norm bounds, successive approximations and the threshold `lambda_alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BcVector;
use crate::kernels::{Discretization, KernelContext};
use crate::scalar::{lit, to_f64, Real, C};

/// `V_k(lambda) z` on the discretization grid.
pub fn apply_v<T: Real>(disc: &Discretization<T>, z: &BcVector<T>) -> BcVector<T> {
    disc.apply(z)
}

/// The two operator-norm bounds and their ingredients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContractionBound {
    pub bound_v: f64,
    pub bound_v2: f64,
    /// `sup|m| sup|m~|`, used in place of `e^{2a}`.
    pub mu: f64,
    pub a: f64,
    pub gamma: f64,
    pub theta: f64,
    /// `||A - D||_{L[alpha, inf)} + gamma_alpha(lambda)`.
    pub k_alpha: f64,
}

impl ContractionBound {
    /// Geometric-series constant `(1 + bound_v) / (1 - bound_v2) * (1 + bound_v2)`.
    pub fn n_const(&self) -> f64 {
        (1.0 + self.bound_v) / (1.0 - self.bound_v2) * (1.0 + self.bound_v2)
    }
}

/// `bound_V = n mu (gamma + a)` and `bound_V2 = n^2 mu K (mu gamma + theta)`.
pub fn contraction_bound<T: Real>(ctx: &KernelContext<T>, disc: &Discretization<T>) -> Result<ContractionBound> {
    let spec = &ctx.spec;
    let n = spec.n() as f64;
    let lambda = disc.lambda;
    let a = to_f64(spec.a_const()?);
    let mu = to_f64(ctx.prop.mu());
    let gamma = to_f64(spec.gamma(ctx.alpha, lambda)?);
    let off = to_f64(spec.a_off_tail(ctx.alpha)?);
    let theta = if off == 0.0 { 0.0 } else { to_f64(ctx.theta_on(disc)?.value) };
    let k_alpha = off + gamma;
    Ok(ContractionBound {
        bound_v: n * mu * (gamma + a),
        bound_v2: n * n * mu * k_alpha * (mu * gamma + theta),
        mu,
        a,
        gamma,
        theta,
        k_alpha,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PicardOptions {
    /// Stop when the increment is at most `eps_fix * max(1, ||z||)`.
    pub eps_fix: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { eps_fix: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardCertificate {
    pub lambda: (f64, f64),
    /// Column index, 1-based.
    pub k: usize,
    pub omega: (f64, f64),
    pub iterations: usize,
    pub final_increment: f64,
    /// `max_i ||d_{i+2}|| / ||d_i||` over increments above the rounding floor.
    pub observed_ratio: f64,
    pub bound: ContractionBound,
    pub n_const: f64,
    pub w_norm: f64,
    pub z_norm: f64,
    pub vw_norm: f64,
    /// Bound on the error from truncating the integrals at `T_cut`.
    pub truncation: f64,
    pub panels: usize,
}

impl PicardCertificate {
    /// Observed ratio within `slack` of the bound.
    pub fn ratio_consistent(&self, slack: f64) -> bool {
        self.observed_ratio <= self.bound.bound_v2 + slack
    }
}

/// Solves `z = w + V z` by successive approximations.
pub fn solve_fixed_point<T: Real>(
    ctx: &KernelContext<T>,
    disc: &Discretization<T>,
    w: &BcVector<T>,
    opts: &PicardOptions,
) -> Result<(BcVector<T>, PicardCertificate)> {
    solve_from(ctx, disc, w, None, opts)
}

/// As [`solve_fixed_point`], starting the iteration from `start` instead of `w`.
pub fn solve_from<T: Real>(
    ctx: &KernelContext<T>,
    disc: &Discretization<T>,
    w: &BcVector<T>,
    start: Option<&BcVector<T>>,
    opts: &PicardOptions,
) -> Result<(BcVector<T>, PicardCertificate)> {
    let bound = contraction_bound(ctx, disc)?;
    if !(bound.bound_v2 < 0.5) {
        return Err(Error::BelowThreshold { bound: bound.bound_v2, modulus: to_f64(disc.lambda.norm()) });
    }
    let w_norm = to_f64(w.sup_norm());
    let vw = disc.apply(w);
    let vw_norm = to_f64(vw.sup_norm());
    let mut z = match start {
        Some(s) => s.clone(),
        None => w.clone(),
    };
    let one = C::new(T::one(), T::zero());
    let mut incs: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    while iterations < opts.max_iter {
        let next = w.axpy(one, &disc.apply(&z));
        iterations += 1;
        let d = to_f64(next.sub(&z).sup_norm());
        z = next;
        incs.push(d);
        last = d;
        if d <= opts.eps_fix * to_f64(z.sup_norm()).max(1.0) {
            break;
        }
    }
    if !(last <= opts.eps_fix * to_f64(z.sup_norm()).max(1.0)) {
        return Err(Error::NotConverged { iterations, increment: last });
    }
    let floor = 1e-12 * w_norm.max(vw_norm).max(1e-300);
    let mut observed_ratio: f64 = 0.0;
    for i in 0..incs.len().saturating_sub(2) {
        if incs[i] > floor && incs[i + 2] > floor {
            observed_ratio = observed_ratio.max(incs[i + 2] / incs[i]);
        }
    }
    let z_norm = to_f64(z.sup_norm());
    let n_const = bound.n_const();
    let slack = 1e-8 * (1.0 + w_norm);
    let zw = to_f64(z.sub(w).sup_norm());
    if start.is_none() && (z_norm > n_const * w_norm + slack || zw > n_const * vw_norm + slack) {
        return Err(Error::Numerical(format!(
            "solution violates the a priori bound: ||z|| = {z_norm:.6e}, N ||w|| = {:.6e}",
            n_const * w_norm
        )));
    }
    let lam = disc.lambda;
    let cert = PicardCertificate {
        lambda: (to_f64(lam.re), to_f64(lam.im)),
        k: ctx.pivot + 1,
        omega: (to_f64(ctx.omega.re), to_f64(ctx.omega.im)),
        iterations,
        final_increment: last,
        observed_ratio,
        bound,
        n_const,
        w_norm,
        z_norm,
        vw_norm,
        truncation: to_f64(disc.truncation_bound(z.sup_norm())),
        panels: disc.grid.panels(),
    };
    Ok((z, cert))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ThresholdOptions {
    /// Smallest radius considered.
    pub r_floor: f64,
    pub r_search: f64,
    /// Geometric samples per ray before bisection.
    pub samples: usize,
    pub bisections: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { r_floor: 0.05, r_search: 1000.0, samples: 24, bisections: 12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub lambda_alpha: f64,
    /// `(ray angle, threshold radius)`.
    pub per_ray: Vec<(f64, f64)>,
    /// `phi(alpha)`, for comparison.
    pub phi: f64,
}

/// `bound_V2` at one `lambda`.
pub fn bound_v2_at<T: Real>(ctx: &KernelContext<T>, lambda: C<T>) -> Result<f64> {
    let d = ctx.discretize(lambda)?;
    Ok(contraction_bound(ctx, &d)?.bound_v2)
}

/// Smallest radius on one ray beyond which every sampled `bound_V2` is below 1/2.
pub fn ray_threshold<T: Real>(
    bound: impl Fn(C<T>) -> Result<f64>,
    angle: f64,
    opts: &ThresholdOptions,
) -> Result<f64> {
    let dir = C::new(lit::<T>(angle.cos()), lit::<T>(angle.sin()));
    let at = |r: f64| bound(dir * lit::<T>(r));
    let ns = opts.samples.max(2);
    let ratio = (opts.r_search / opts.r_floor).ln() / (ns - 1) as f64;
    let radii: Vec<f64> = (0..ns).map(|i| opts.r_floor * (ratio * i as f64).exp()).collect();
    let mut vals = Vec::with_capacity(ns);
    for &r in &radii {
        vals.push(at(r)?);
    }
    let last_bad = match vals.iter().rposition(|&v| !(v < 0.5)) {
        None => return Ok(opts.r_floor),
        Some(i) if i + 1 == ns => {
            return Err(Error::BelowThreshold { bound: vals[i], modulus: opts.r_search });
        }
        Some(i) => i,
    };
    let (mut lo, mut hi) = (radii[last_bad], radii[last_bad + 1]);
    for _ in 0..opts.bisections {
        let mid = (lo * hi).sqrt();
        if at(mid)? < 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `lambda_alpha` as the largest per-ray threshold over the given ray angles.
pub fn estimate_lambda_alpha<T: Real>(
    ctx: &KernelContext<T>,
    rays: &[f64],
    opts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    if rays.is_empty() {
        return Err(Error::OutOfRange("no rays given".into()));
    }
    let mut per_ray = Vec::with_capacity(rays.len());
    for &a in rays {
        per_ray.push((a, ray_threshold(|l| bound_v2_at(ctx, l), a, opts)?));
    }
    let lambda_alpha = per_ray.iter().fold(0.0f64, |m, r| m.max(r.1));
    Ok(ThresholdReport { lambda_alpha, per_ray, phi: to_f64(ctx.spec.phi(ctx.alpha)?) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientFunction, WeightFunction};
    use crate::kernels::KernelOptions;
    use crate::sectors::{Angle, AngularInterval};
    use crate::system::SystemSpec;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_4;

    fn expdecay() -> SystemSpec<f64> {
        let z = CoefficientFunction::zero();
        let e = |c: f64| CoefficientFunction::exp_decay(Complex64::new(c, 0.0), 1.0).unwrap();
        SystemSpec::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![z.clone(), e(1.0), e(0.5), z],
            vec![],
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap()
    }

    fn ctx(pivot: usize) -> KernelContext<f64> {
        let omega = if pivot == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) };
        let region = AngularInterval::new(Angle::pi_frac(-1, 2), Angle::pi_frac(1, 2));
        KernelContext::new(expdecay(), 0.0, pivot, omega, region, KernelOptions::default()).unwrap()
    }

    #[test]
    fn first_component_of_v_on_unit_vector() {
        let c = ctx(1);
        let d = c.discretize(Complex64::new(1.0, 0.0)).unwrap();
        let e2 = BcVector::from_fn(d.grid.clone(), 2, |j, _| Complex64::new(if j == 1 { 1.0 } else { 0.0 }, 0.0));
        let v = apply_v(&d, &e2);
        for &x in &[0.0, 0.4, 3.3, 9.0] {
            let exact = -(-x as f64).exp() / 3.0;
            assert!((v.eval(0, x).unwrap().re - exact).abs() < 1e-8);
        }
        assert!(v.component_sup(1) < 1e-15);
    }

    #[test]
    fn contraction_at_lambda_ten() {
        for pivot in [0, 1] {
            let c = ctx(pivot);
            let lam = Complex64::from_polar(10.0, FRAC_PI_4);
            let d = c.discretize(lam).unwrap();
            let b = contraction_bound(&c, &d).unwrap();
            assert!(b.bound_v2 < 0.5, "{b:?}");
            let w = BcVector::from_fn(d.grid.clone(), 2, |j, _| Complex64::new((j == pivot) as u8 as f64, 0.0));
            let (z, cert) = solve_fixed_point(&c, &d, &w, &PicardOptions::default()).unwrap();
            assert!(cert.ratio_consistent(0.0), "{cert:?}");
            // another starting point gives the same solution
            let start = BcVector::from_fn(d.grid.clone(), 2, |_, x| Complex64::new(0.3, -x.sin()));
            let (z2, _) = solve_from(&c, &d, &w, Some(&start), &PicardOptions::default()).unwrap();
            assert!(z.sub(&z2).sup_norm() < 1e-8);
        }
    }

    #[test]
    fn refuses_below_threshold() {
        let c = ctx(1);
        let d = c.discretize(Complex64::new(0.5, 0.0)).unwrap();
        let w = BcVector::from_fn(d.grid.clone(), 2, |j, _| Complex64::new(j as f64, 0.0));
        assert!(matches!(solve_fixed_point(&c, &d, &w, &PicardOptions::default()), Err(Error::BelowThreshold { .. })));
    }

    #[test]
    fn threshold_is_finite_and_monotone_in_alpha() {
        let rays = [0.0, FRAC_PI_4];
        let o = ThresholdOptions { r_search: 200.0, ..Default::default() };
        let t0 = estimate_lambda_alpha(&ctx(1), &rays, &o).unwrap().lambda_alpha;
        let region = AngularInterval::new(Angle::pi_frac(-1, 2), Angle::pi_frac(1, 2));
        let c2 =
            KernelContext::new(expdecay(), 2.0, 1, Complex64::new(-1.0, 0.0), region, KernelOptions::default()).unwrap();
        let t2 = estimate_lambda_alpha(&c2, &rays, &o).unwrap().lambda_alpha;
        assert!(t2 <= t0 && t0 < 200.0, "{t0} {t2}");
    }
}
