//! The propagator `M' = D M`, `M(alpha) = I`, its inverse, and the conjugated kernels.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::ode::{dopri5, DenseSolution, OdeOptions};
use crate::scalar::{c1, cz, to_f64, Real, C};
use crate::system::{DiagonalBlockMatrix, SystemSpec};

#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    alpha: T,
    t_end: T,
    n: usize,
    /// None when D vanishes and M is the identity.
    forward: Option<DenseSolution<T>>,
    backward: Option<DenseSolution<T>>,
    sup_m: T,
    sup_minv: T,
}

/// Postcondition report for a computed propagator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropagatorReport {
    pub anchor_is_identity: bool,
    pub min_abs_det: f64,
    pub block_zero_exact: bool,
    pub sup_m: f64,
    pub sup_minv: f64,
    pub exp_a: f64,
    pub commutation: f64,
    pub inverse_defect: f64,
}

fn rhs<T: Real>(d: &DiagonalBlockMatrix<T>, n: usize, x: T, y: &[C<T>], dy: &mut [C<T>]) {
    // y = [M | N] row-major; M' = D M, N' = -N D
    let dm = d.eval(x);
    let (m, nn) = y.split_at(n * n);
    let (dm_out, dn_out) = dy.split_at_mut(n * n);
    for i in 0..n {
        for k in 0..n {
            let mut s = cz::<T>();
            let mut t = cz::<T>();
            for p in 0..n {
                s = s + dm[(i, p)] * m[p * n + k];
                t = t + nn[i * n + p] * dm[(p, k)];
            }
            dm_out[i * n + k] = s;
            dn_out[i * n + k] = -t;
        }
    }
}

impl<T: Real> Propagator<T> {
    /// Solves on `[0, t_end]` anchored at `alpha`.
    pub fn solve(spec: &SystemSpec<T>, alpha: T, t_end: T, opts: &OdeOptions) -> Result<Self> {
        let n = spec.n();
        let d = spec.build_d();
        let t_end = t_end.max(alpha);
        if d.is_zero() {
            return Ok(Self { alpha, t_end, n, forward: None, backward: None, sup_m: T::one(), sup_minv: T::one() });
        }
        let mut y0 = vec![cz::<T>(); 2 * n * n];
        for i in 0..n {
            y0[i * n + i] = c1();
            y0[n * n + i * n + i] = c1();
        }
        let knots = d.knots();
        let f = |x: T, y: &[C<T>], dy: &mut [C<T>]| rhs(&d, n, x, y, dy);
        let forward = dopri5(f, alpha, t_end, &y0, &knots, opts)?;
        let backward = if alpha > T::zero() {
            Some(dopri5(|x: T, y: &[C<T>], dy: &mut [C<T>]| rhs(&d, n, x, y, dy), alpha, T::zero(), &y0, &knots, opts)?)
        } else {
            None
        };
        let (mut sup_m, mut sup_minv) = (T::zero(), T::zero());
        for (_, y) in forward.knots() {
            for i in 0..n * n {
                sup_m = sup_m.max(y[i].norm());
                sup_minv = sup_minv.max(y[n * n + i].norm());
            }
        }
        Ok(Self { alpha, t_end, n, forward: Some(forward), backward, sup_m, sup_minv })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn is_identity(&self) -> bool {
        self.forward.is_none()
    }

    /// `sup_{x >= alpha} |m_jk|` over the integration grid.
    pub fn sup_m(&self) -> T {
        self.sup_m
    }

    pub fn sup_minv(&self) -> T {
        self.sup_minv
    }

    /// Conjugation constant `sup|m| * sup|m~|` (bounded by `e^{2a}`).
    pub fn mu(&self) -> T {
        self.sup_m * self.sup_minv
    }

    /// `(M(x), M(x)^{-1})`; beyond `t_end` the value at `t_end` is returned.
    pub fn eval(&self, x: T) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let n = self.n;
        let sol = if x >= self.alpha { &self.forward } else { &self.backward };
        match sol {
            None => Ok((CMatrix::identity(n), CMatrix::identity(n))),
            Some(s) => {
                let x = x.min(s.t_max());
                let y = s.eval(x)?;
                Ok((
                    CMatrix::from_vec(n, n, y[..n * n].to_vec()),
                    CMatrix::from_vec(n, n, y[n * n..].to_vec()),
                ))
            }
        }
    }

    /// Grid points of the forward integration (for property checks).
    pub fn grid(&self) -> Vec<T> {
        let mut g: Vec<T> = self.forward.as_ref().map(|s| s.knots().map(|(t, _)| t).collect()).unwrap_or_default();
        if let Some(b) = &self.backward {
            g.extend(b.knots().map(|(t, _)| t));
        }
        if g.is_empty() {
            g.push(self.alpha);
        }
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup();
        g
    }

    /// `(Q(x), R(x, lambda)) = (M^{-1}(A - D)M, M^{-1} C M)`.
    pub fn qr_at(&self, spec: &SystemSpec<T>, x: T, lambda: C<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
        if lambda == cz() {
            return Err(Error::OutOfRange("lambda = 0".into()));
        }
        let aod = spec.a_off_eval(x);
        let c = spec.c_eval(x, lambda);
        if self.is_identity() {
            return Ok((aod, c));
        }
        let (m, mi) = self.eval(x)?;
        Ok((mi.mul(&aod).mul(&m), mi.mul(&c).mul(&m)))
    }

    pub fn check(&self, spec: &SystemSpec<T>) -> Result<PropagatorReport> {
        let n = self.n;
        let b = spec.b();
        let (m0, mi0) = self.eval(self.alpha)?;
        let id = CMatrix::<T>::identity(n);
        let anchor_is_identity = m0 == id && mi0 == id;
        let mut min_det = f64::INFINITY;
        let mut block_zero = true;
        let mut comm = 0.0f64;
        let mut inv = 0.0f64;
        for x in self.grid() {
            let (m, mi) = self.eval(x)?;
            min_det = min_det.min(to_f64(m.det().norm()));
            for j in 0..n {
                for k in 0..n {
                    if b[j] != b[k] && (m[(j, k)] != cz() || mi[(j, k)] != cz()) {
                        block_zero = false;
                    }
                    comm = comm.max(to_f64((m[(j, k)] * (b[k] - b[j])).norm()));
                }
            }
            inv = inv.max(to_f64(m.mul(&mi).sub(&id).max_abs()));
        }
        Ok(PropagatorReport {
            anchor_is_identity,
            min_abs_det: min_det,
            block_zero_exact: block_zero,
            sup_m: to_f64(self.sup_m),
            sup_minv: to_f64(self.sup_minv),
            exp_a: to_f64(spec.a_const()?.exp()),
            commutation: comm,
            inverse_defect: inv,
        })
    }
}

/// Integrates the full system backward from `alpha` to 0 starting at `boundary`.
pub fn extend_to_zero<T: Real>(
    spec: &SystemSpec<T>,
    lambda: C<T>,
    alpha: T,
    boundary: &[C<T>],
    opts: &OdeOptions,
) -> Result<DenseSolution<T>> {
    let scale = boundary.iter().fold(T::zero(), |m, v| m.max(v.norm())).max(T::min_positive_value());
    let o = OdeOptions { atol: opts.atol * to_f64(scale), ..*opts };
    let knots = spec.knots();
    let f = |x: T, y: &[C<T>], dy: &mut [C<T>]| {
        let a = spec.full_eval(x, lambda);
        let v = a.mul_vec(y);
        dy.copy_from_slice(&v);
    };
    dopri5(f, alpha, T::zero(), boundary, &knots, &o)
}

/// Default tolerances for the propagator and the extension to [0, alpha].
pub fn default_ode_options() -> OdeOptions {
    OdeOptions { rtol: 1e-12, atol: 1e-14, h_max: 0.25, max_steps: 5_000_000 }
}

/// Largest `|exp(int_alpha^x a_jj)|` deviation of the diagonal from its closed form.
pub fn diagonal_closed_form_defect<T: Real>(p: &Propagator<T>, spec: &SystemSpec<T>) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in p.grid() {
        let (m, _) = p.eval(x)?;
        for j in 0..spec.n() {
            let exact = (spec.a(j, j).integral(p.alpha, x)).exp();
            worst = worst.max(to_f64((m[(j, j)] - exact).norm()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientFunction, WeightFunction};
    use num_complex::Complex64;

    fn e(c: f64) -> CoefficientFunction<f64> {
        CoefficientFunction::exp_decay(Complex64::new(c, 0.0), 1.0).unwrap()
    }

    #[test]
    fn zero_a_gives_identity() {
        let s = SystemSpec::trivial(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap();
        let p = Propagator::solve(&s, 1.0, 20.0, &default_ode_options()).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.eval(3.0).unwrap().0, CMatrix::identity(2));
    }

    #[test]
    fn diagonal_closed_form() {
        let z = CoefficientFunction::zero();
        let s = SystemSpec::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![e(1.0), e(0.3), z, e(1.0)],
            vec![],
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        let p = Propagator::solve(&s, 0.0, 20.0, &default_ode_options()).unwrap();
        let (m, _) = p.eval(1.0).unwrap();
        assert!((m[(0, 0)].re - (1.0 - (-1.0f64).exp()).exp()).abs() < 1e-9);
        assert!((m[(0, 0)].re - 1.8815964).abs() < 1e-6);
        let rep = p.check(&s).unwrap();
        assert!(rep.anchor_is_identity && rep.block_zero_exact);
        assert!(rep.commutation == 0.0 && rep.inverse_defect < 1e-9);
        assert!(diagonal_closed_form_defect(&p, &s).unwrap() < 1e-8);
        // Q picks up the diagonal phases: q12 = m~11 a12 m22
        let (q, _) = p.qr_at(&s, 0.5, Complex64::new(1.0, 0.0)).unwrap();
        let expect = 0.3 * (-0.5f64).exp() * (-(1.0 - (-0.5f64).exp())).exp() * (1.0 - (-0.5f64).exp()).exp();
        assert!((q[(0, 1)].re - expect).abs() < 1e-9);
        assert_eq!(q[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn nilpotent_block() {
        let z = CoefficientFunction::zero();
        let s = SystemSpec::new(
            vec![Complex64::new(1.0, 0.0); 2],
            vec![z.clone(), e(1.0), z.clone(), z],
            vec![],
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        let p = Propagator::solve(&s, 0.0, 20.0, &default_ode_options()).unwrap();
        for &x in &[0.3, 1.0, 4.0] {
            let (m, mi) = p.eval(x).unwrap();
            assert!((m[(0, 1)].re - (1.0 - (-x as f64).exp())).abs() < 1e-9);
            assert!((mi[(0, 1)].re + (1.0 - (-x as f64).exp())).abs() < 1e-9);
            assert_eq!(m[(1, 0)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn backward_branch_and_extension() {
        let s = SystemSpec::trivial(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap();
        let lam = Complex64::new(2.0, 3.0);
        let y = extend_to_zero(&s, lam, 1.5, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], &default_ode_options())
            .unwrap();
        for &x in &[0.0, 0.4, 1.5] {
            let v = y.eval(x).unwrap();
            let exact = (-lam * (x - 1.5)).exp();
            assert!((v[1] - exact).norm() < 1e-10 * exact.norm());
            assert_eq!(v[0], Complex64::new(0.0, 0.0));
        }
    }
}
