//! Dormand-Prince 5(4) with its native continuous extension.

use crate::error::{Error, Result};
use crate::scalar::{cz, lit, Real, C};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_max: 0.25, max_steps: 2_000_000 }
    }
}

/// Dense solution over [t_lo, t_hi], stored in ascending time.
#[derive(Clone, Debug)]
pub struct DenseSolution<T: Real> {
    dim: usize,
    ts: Vec<T>,
    // per step: 5 coefficient vectors of length dim, laid out contiguously
    coeffs: Vec<C<T>>,
    y_end: Vec<Vec<C<T>>>,
    reversed: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<T: Real>(out: &mut [C<T>], y: &[C<T>], h: T, terms: &[(f64, &[C<T>])]) {
    for i in 0..out.len() {
        let mut s = cz::<T>();
        for (c, k) in terms {
            if *c != 0.0 {
                s = s + k[i] * lit::<T>(*c);
            }
        }
        out[i] = y[i] + s * h;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction), restarting at each
/// breakpoint strictly between them.
pub fn dopri5<T: Real, F>(
    mut f: F,
    t0: T,
    t1: T,
    y0: &[C<T>],
    breakpoints: &[T],
    opts: &OdeOptions,
) -> Result<DenseSolution<T>>
where
    F: FnMut(T, &[C<T>], &mut [C<T>]),
{
    let dim = y0.len();
    let dir = if t1 >= t0 { T::one() } else { -T::one() };
    let mut stops: Vec<T> = breakpoints
        .iter()
        .copied()
        .filter(|&b| (b - t0) * dir > T::zero() && (t1 - b) * dir > T::zero())
        .collect();
    stops.sort_by(|a, b| ((*a - t0) * dir).partial_cmp(&((*b - t0) * dir)).unwrap());
    stops.push(t1);

    let mut ts = vec![t0];
    let mut coeffs: Vec<C<T>> = Vec::new();
    let mut y_end = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    let mut t = t0;
    let rtol: T = lit(opts.rtol);
    let atol: T = lit(opts.atol);
    let h_max: T = lit(opts.h_max);
    let mut k: Vec<Vec<C<T>>> = vec![vec![cz(); dim]; 7];
    let mut ytmp = vec![cz::<T>(); dim];
    let mut ynew = vec![cz::<T>(); dim];
    let mut h = h_max.min((t1 - t0).abs()) * lit(0.1);
    if h == T::zero() {
        h = lit(1e-3);
    }
    let mut steps = 0usize;

    for &stop in &stops {
        f(t, &y, &mut k[0]);
        while (stop - t) * dir > T::zero() {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Numerical("ODE step limit exceeded".into()));
            }
            let mut last = false;
            if h >= (stop - t).abs() {
                h = (stop - t).abs();
                last = true;
            }
            let hs = h * dir;
            {
                let (k0, rest) = k.split_at_mut(1);
                axpy(&mut ytmp, &y, hs, &[(A21, &k0[0])]);
                f(t + hs * lit(C2), &ytmp, &mut rest[0]);
            }
            let stage = |k: &mut Vec<Vec<C<T>>>, idx: usize, cc: f64, a: &[f64], ytmp: &mut Vec<C<T>>, f: &mut F| {
                let terms: Vec<(f64, &[C<T>])> = a.iter().enumerate().map(|(j, &c)| (c, &k[j][..])).collect();
                axpy(ytmp, &y, hs, &terms);
                let mut out = vec![cz(); dim];
                f(t + hs * lit(cc), ytmp, &mut out);
                k[idx] = out;
            };
            stage(&mut k, 2, C3, &[A31, A32], &mut ytmp, &mut f);
            stage(&mut k, 3, C4, &[A41, A42, A43], &mut ytmp, &mut f);
            stage(&mut k, 4, C5, &[A51, A52, A53, A54], &mut ytmp, &mut f);
            stage(&mut k, 5, 1.0, &[A61, A62, A63, A64, A65], &mut ytmp, &mut f);
            {
                let terms: Vec<(f64, &[C<T>])> =
                    [A71, 0.0, A73, A74, A75, A76].iter().enumerate().map(|(j, &c)| (c, &k[j][..])).collect();
                axpy(&mut ynew, &y, hs, &terms);
            }
            let mut k7 = vec![cz(); dim];
            f(t + hs, &ynew, &mut k7);
            let mut err = T::zero();
            for i in 0..dim {
                let e = (k[0][i] * lit::<T>(E1)
                    + k[2][i] * lit::<T>(E3)
                    + k[3][i] * lit::<T>(E4)
                    + k[4][i] * lit::<T>(E5)
                    + k[5][i] * lit::<T>(E6)
                    + k7[i] * lit::<T>(E7))
                    * hs;
                let sc = atol + rtol * y[i].norm().max(ynew[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Numerical("non-finite ODE state".into()));
            }
            if err <= T::one() {
                for i in 0..dim {
                    let r1 = y[i];
                    let r2 = ynew[i] - y[i];
                    let r3 = k[0][i] * hs - r2;
                    let r4 = r2 - k7[i] * hs - r3;
                    let r5 = (k[0][i] * lit::<T>(D1)
                        + k[2][i] * lit::<T>(D3)
                        + k[3][i] * lit::<T>(D4)
                        + k[4][i] * lit::<T>(D5)
                        + k[5][i] * lit::<T>(D6)
                        + k7[i] * lit::<T>(D7))
                        * hs;
                    coeffs.extend_from_slice(&[r1, r2, r3, r4, r5]);
                }
                t = if last { stop } else { t + hs };
                y.copy_from_slice(&ynew);
                ts.push(t);
                y_end.push(y.clone());
                k[0] = k7;
            }
            let fac = if err == T::zero() { lit(5.0) } else { (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2)) };
            h = (h * fac).min(h_max);
            if h < lit::<T>(1e-14) * (T::one() + t.abs()) {
                return Err(Error::Numerical("ODE step size underflow".into()));
            }
        }
    }

    let reversed = dir < T::zero();
    if reversed {
        // store ascending in time; steps keep their integration orientation
        ts.reverse();
        y_end.reverse();
    }
    Ok(DenseSolution { dim, ts, coeffs, y_end, reversed })
}

impl<T: Real> DenseSolution<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_min(&self) -> T {
        self.ts[0]
    }

    pub fn t_max(&self) -> T {
        *self.ts.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.ts.len() - 1
    }

    /// State at the grid points, ascending time.
    pub fn knots(&self) -> impl Iterator<Item = (T, &[C<T>])> {
        self.ts.iter().copied().zip(self.y_end.iter().map(|v| &v[..]))
    }

    /// Evaluates the continuous extension at `t` into `out`.
    pub fn eval_into(&self, t: T, out: &mut [C<T>]) -> Result<()> {
        let n = self.ts.len();
        let tol = lit::<T>(1e-12) * (T::one() + t.abs());
        if t < self.ts[0] - tol || t > self.ts[n - 1] + tol {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside [{}, {}]",
                self.ts[0],
                self.ts[n - 1]
            )));
        }
        if n == 1 {
            out.copy_from_slice(&self.y_end[0]);
            return Ok(());
        }
        let mut s = self.ts.partition_point(|&x| x <= t).saturating_sub(1).min(n - 2);
        while s + 1 < n - 1 && self.ts[s + 1] == self.ts[s] {
            s += 1;
        }
        let (ta, tb) = (self.ts[s], self.ts[s + 1]);
        if tb == ta {
            out.copy_from_slice(&self.y_end[s]);
            return Ok(());
        }
        let rev = self.reversed;
        // theta is measured in the integration direction of the step
        let (step, theta) = if rev {
            (self.steps() - 1 - s, (tb - t) / (tb - ta))
        } else {
            (s, (t - ta) / (tb - ta))
        };
        let theta = theta.max(T::zero()).min(T::one());
        let th1 = T::one() - theta;
        for i in 0..self.dim {
            let b = (step * self.dim + i) * 5;
            let c = &self.coeffs[b..b + 5];
            out[i] = c[0] + (c[1] + (c[2] + (c[3] + c[4] * th1) * theta) * th1) * theta;
        }
        Ok(())
    }

    pub fn eval(&self, t: T) -> Result<Vec<C<T>>> {
        let mut out = vec![cz(); self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn complex_exponential_forward_and_back() {
        let lam = Complex64::new(0.3, 4.0);
        let f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = lam * y[0];
        let opts = OdeOptions::default();
        let sol = dopri5(f, 0.0, 3.0, &[Complex64::new(1.0, 0.0)], &[1.5], &opts).unwrap();
        for &t in &[0.0, 0.37, 1.5, 2.2, 3.0] {
            let v = sol.eval(t).unwrap()[0];
            assert!((v - (lam * t).exp()).norm() < 1e-9 * (lam * t).exp().norm(), "t={t}");
        }
        let back = dopri5(f, 2.0, 0.0, &[(lam * 2.0).exp()], &[], &opts).unwrap();
        assert_eq!(back.t_min(), 0.0);
        for &t in &[0.0, 0.11, 0.9, 1.999] {
            let v = back.eval(t).unwrap()[0];
            assert!((v - (lam * t).exp()).norm() < 1e-9, "t={t} {v}");
        }
    }
}
