//! Scalar coefficient functions on [0, inf).
//!
//! Every supported kind is represented as a piecewise exponential-polynomial: on the piece
//! starting at `s_i` the function is `sum c * u^k * exp(-beta * u)` with the local variable
//! `u = x - s_i`. Local variables keep far-out tabulated pieces free of cancellation.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, integrate};
use crate::scalar::{cr, cz, lit, Real, C};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term<T: Real> {
    pub coeff: C<T>,
    pub power: u32,
    pub rate: T,
}

impl<T: Real> Term<T> {
    #[inline]
    fn eval(&self, u: T) -> C<T> {
        let mut v = (-self.rate * u).exp();
        if self.power > 0 {
            v = v * u.powi(self.power as i32);
        }
        self.coeff * v
    }

    #[inline]
    fn deriv(&self, u: T) -> C<T> {
        // d/du u^k e^{-bu} = (k u^{k-1} - b u^k) e^{-bu}
        let e = (-self.rate * u).exp();
        let k = self.power as i32;
        let mut v = -self.rate * u.powi(k) * e;
        if k > 0 {
            v = v + lit::<T>(k as f64) * u.powi(k - 1) * e;
        }
        self.coeff * v
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `G(u) = e^{-bu} sum_{i<=k} k!/i! u^i / b^{k-i+1}`, so that the integral of `u^k e^{-bu}`
/// over `[ua, ub]` is `G(ua) - G(ub)`.
fn upper_gamma_like<T: Real>(k: u32, b: T, u: T) -> T {
    let mut s = T::zero();
    for i in 0..=k {
        s = s + lit::<T>(factorial(k) / factorial(i)) * u.powi(i as i32) / b.powi((k - i + 1) as i32);
    }
    (-b * u).exp() * s
}

/// Integral of `u^k e^{-b u}` over `[ua, ub]`, `ub = None` meaning infinity (requires `b > 0`).
fn monomial_exp_integral<T: Real>(k: u32, b: T, ua: T, ub: Option<T>) -> T {
    match ub {
        None => upper_gamma_like(k, b, ua),
        Some(ub) => {
            if b == T::zero() {
                let kp = lit::<T>(k as f64 + 1.0);
                return (ub.powi(k as i32 + 1) - ua.powi(k as i32 + 1)) / kp;
            }
            if (b * ub).abs() < lit(0.5) {
                // closed form cancels badly here; the integrand is nearly polynomial
                let (x, w) = gauss_legendre(16);
                let h = (ub - ua) * lit(0.5);
                let m = (ub + ua) * lit(0.5);
                return x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| {
                        let u = m + h * lit(xi);
                        lit::<T>(wi) * u.powi(k as i32) * (-b * u).exp()
                    })
                    .fold(T::zero(), |a, v| a + v)
                    * h;
            }
            upper_gamma_like(k, b, ua) - upper_gamma_like(k, b, ub)
        }
    }
}

fn recenter<T: Real>(terms: &[Term<T>], shift: T) -> Vec<Term<T>> {
    // re-express terms in u' = u - shift
    let mut out = Vec::new();
    for t in terms {
        let scale = t.coeff * (-t.rate * shift).exp();
        for i in 0..=t.power {
            let c = scale * lit::<T>(binomial(t.power, i)) * shift.powi((t.power - i) as i32);
            out.push(Term { coeff: c, power: i, rate: t.rate });
        }
    }
    normalize_terms(out)
}

fn normalize_terms<T: Real>(mut terms: Vec<Term<T>>) -> Vec<Term<T>> {
    terms.sort_by(|a, b| {
        a.rate.partial_cmp(&b.rate).unwrap_or(Ordering::Equal).then(a.power.cmp(&b.power))
    });
    let mut out: Vec<Term<T>> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.rate == t.rate && last.power == t.power => last.coeff = last.coeff + t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != cz());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    ExpDecay,
    PiecewisePolynomial,
    Tabulated,
    Composite,
}

/// Piecewise exponential-polynomial; the common representation behind both public types.
#[derive(Clone, Debug, PartialEq)]
struct Pieces<T: Real> {
    starts: Vec<T>,
    terms: Vec<Vec<Term<T>>>,
    cum: Vec<C<T>>,
}

impl<T: Real> Pieces<T> {
    fn new(starts: Vec<T>, terms: Vec<Vec<Term<T>>>) -> Result<Self> {
        if starts.is_empty() || starts[0] != T::zero() || starts.len() != terms.len() {
            return Err(Error::InvalidCoefficient("pieces must start at 0".into()));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCoefficient("knots must be strictly increasing".into()));
        }
        for t in terms.iter().flatten() {
            if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() || !t.rate.is_finite() {
                return Err(Error::InvalidCoefficient("non-finite coefficient data".into()));
            }
            if t.rate < T::zero() {
                return Err(Error::InvalidCoefficient("growing exponential".into()));
            }
        }
        // drop redundant breaks between consecutive zero pieces
        let mut s2 = vec![starts[0]];
        let mut t2 = vec![normalize_terms(terms[0].clone())];
        for i in 1..starts.len() {
            let t = normalize_terms(terms[i].clone());
            if t.is_empty() && t2.last().unwrap().is_empty() {
                continue;
            }
            s2.push(starts[i]);
            t2.push(t);
        }
        let mut p = Self { starts: s2, terms: t2, cum: Vec::new() };
        p.rebuild_cum();
        Ok(p)
    }

    fn zero() -> Self {
        Self { starts: vec![T::zero()], terms: vec![vec![]], cum: vec![cz()] }
    }

    fn rebuild_cum(&mut self) {
        let mut cum = vec![cz::<T>(); self.starts.len()];
        for i in 1..self.starts.len() {
            let w = self.starts[i] - self.starts[i - 1];
            cum[i] = cum[i - 1] + self.piece_integral(i - 1, T::zero(), Some(w));
        }
        self.cum = cum;
    }

    fn locate(&self, x: T) -> usize {
        self.starts.partition_point(|&s| s <= x).saturating_sub(1)
    }

    fn eval(&self, x: T) -> C<T> {
        let i = self.locate(x);
        let u = x - self.starts[i];
        self.terms[i].iter().fold(cz(), |a, t| a + t.eval(u))
    }

    fn deriv(&self, x: T) -> C<T> {
        let i = self.locate(x);
        let u = x - self.starts[i];
        self.terms[i].iter().fold(cz(), |a, t| a + t.deriv(u))
    }

    fn piece_integral(&self, i: usize, ua: T, ub: Option<T>) -> C<T> {
        self.terms[i]
            .iter()
            .fold(cz(), |a, t| a + t.coeff * monomial_exp_integral(t.power, t.rate, ua, ub))
    }

    fn antiderivative(&self, x: T) -> C<T> {
        let i = self.locate(x);
        self.cum[i] + self.piece_integral(i, T::zero(), Some(x - self.starts[i]))
    }

    fn tail_integrable(&self) -> bool {
        self.terms.last().unwrap().iter().all(|t| t.rate > T::zero())
    }

    /// Total integral over [0, inf); None when the tail does not decay.
    fn total(&self) -> Option<C<T>> {
        if !self.tail_integrable() {
            return None;
        }
        let m = self.starts.len() - 1;
        Some(self.cum[m] + self.piece_integral(m, T::zero(), None))
    }

    fn end_of(&self, i: usize) -> Option<T> {
        self.starts.get(i + 1).copied()
    }

    fn refine(&self, starts: &[T]) -> Vec<Vec<Term<T>>> {
        starts
            .iter()
            .map(|&s| {
                let i = self.locate(s);
                recenter(&self.terms[i], s - self.starts[i])
            })
            .collect()
    }

    fn merged_starts(&self, other: &Self) -> Vec<T> {
        let mut s: Vec<T> = self.starts.iter().chain(&other.starts).copied().collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        s
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&[Term<T>], &[Term<T>]) -> Vec<Term<T>>) -> Self {
        let s = self.merged_starts(other);
        let (a, b) = (self.refine(&s), other.refine(&s));
        let terms = a.iter().zip(&b).map(|(x, y)| f(x, y)).collect();
        Self::new(s, terms).expect("combination of valid pieces is valid")
    }

    fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.iter().chain(b).copied().collect())
    }

    fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| {
            let mut out = Vec::with_capacity(a.len() * b.len());
            for x in a {
                for y in b {
                    out.push(Term { coeff: x.coeff * y.coeff, power: x.power + y.power, rate: x.rate + y.rate });
                }
            }
            out
        })
    }

    fn map_coeffs(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|p| p.iter().map(|t| Term { coeff: f(t.coeff), ..*t }).collect())
            .collect();
        Self::new(self.starts.clone(), terms).expect("valid")
    }

    fn shift_left(&self, a: T) -> Self {
        if a <= T::zero() {
            return self.clone();
        }
        let i0 = self.locate(a);
        let mut starts = vec![T::zero()];
        let mut terms = vec![recenter(&self.terms[i0], a - self.starts[i0])];
        for i in i0 + 1..self.starts.len() {
            starts.push(self.starts[i] - a);
            terms.push(self.terms[i].clone());
        }
        Self::new(starts, terms).expect("valid")
    }

    /// L1 norm of one piece restricted to local [ua, ub].
    fn piece_l1(&self, i: usize, ua: T, ub: Option<T>, tol: T) -> Result<(T, T)> {
        let terms = &self.terms[i];
        if terms.is_empty() || ub.map_or(false, |b| b <= ua) {
            return Ok((T::zero(), T::zero()));
        }
        if terms.len() == 1 {
            let t = terms[0];
            return Ok((t.coeff.norm() * monomial_exp_integral(t.power, t.rate, ua, ub), T::zero()));
        }
        let f = |u: T| cr(terms.iter().fold(cz::<T>(), |a, t| a + t.eval(u)).norm());
        let ub = match ub {
            Some(b) => b,
            None => {
                // integrate to X, bound the remainder by the sum of term tails
                let bmin = terms.iter().fold(T::infinity(), |m, t| m.min(t.rate));
                let mut x = ua + T::one() / bmin;
                let bound = |x: T| {
                    terms.iter().fold(T::zero(), |s, t| {
                        s + t.coeff.norm() * monomial_exp_integral(t.power, t.rate, x, None)
                    })
                };
                while bound(x) > tol * lit(0.1) {
                    x = x + T::one() / bmin;
                }
                let (v, e) = self.adaptive_l1(&f, ua, x, tol)?;
                return Ok((v, e + bound(x)));
            }
        };
        self.adaptive_l1(&f, ua, ub, tol)
    }

    fn adaptive_l1(&self, f: &dyn Fn(T) -> C<T>, a: T, b: T, tol: T) -> Result<(T, T)> {
        // chunk to keep the adaptive rule away from global bisection on long ranges
        let chunks = ((b - a).to_f64().unwrap().ceil() as usize).clamp(1, 4096);
        let h = (b - a) / lit(chunks as f64);
        let (mut v, mut e) = (T::zero(), T::zero());
        let ctol = tol / lit(chunks as f64);
        for c in 0..chunks {
            let lo = a + h * lit(c as f64);
            let (vi, ei) = integrate(f, lo, lo + h, ctol, lit(1e-14), 400)?;
            v = v + vi.re;
            e = e + ei;
        }
        Ok((v, e))
    }

    /// L1 norm over [a, b] (b = None for infinity) with an error estimate.
    fn l1_on(&self, a: T, b: Option<T>, tol: T) -> Result<(T, T)> {
        let (mut v, mut e) = (T::zero(), T::zero());
        let first = self.locate(a);
        for i in first..self.starts.len() {
            let s = self.starts[i];
            if let Some(b) = b {
                if s >= b {
                    break;
                }
            }
            let lo = a.max(s) - s;
            let hi = match (self.end_of(i), b) {
                (Some(e1), Some(b)) => Some(e1.min(b) - s),
                (Some(e1), None) => Some(e1 - s),
                (None, Some(b)) => Some(b - s),
                (None, None) => None,
            };
            let (vi, ei) = self.piece_l1(i, lo, hi, tol)?;
            v = v + vi;
            e = e + ei;
        }
        if !v.is_finite() {
            return Err(Error::InvalidCoefficient("non-finite L1 norm".into()));
        }
        Ok((v, e))
    }

    /// Squared L2 norm over [a, inf), exact.
    fn l2_sq_from(&self, a: T) -> T {
        let sq = self.mul(&self.map_coeffs(|c| c.conj()));
        let i0 = sq.locate(a);
        let mut s = T::zero();
        for i in i0..sq.starts.len() {
            let lo = a.max(sq.starts[i]) - sq.starts[i];
            let hi = sq.end_of(i).map(|e| e - sq.starts[i]);
            s = s + sq.piece_integral(i, lo, hi).re;
        }
        s.max(T::zero())
    }
}

/// Summable complex coefficient on [0, inf).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientFunction<T: Real> {
    kind: CoefficientKind,
    p: Pieces<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailNorms<T> {
    pub l1: T,
    pub l2: T,
    /// Error bound on `l1` (zero when computed in closed form).
    pub l1_error: T,
}

impl<T: Real> CoefficientFunction<T> {
    pub fn zero() -> Self {
        Self { kind: CoefficientKind::Composite, p: Pieces::zero() }
    }

    /// `c * x^power * e^{-beta x}`, beta > 0.
    pub fn exp_poly(c: C<T>, power: u32, beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::NotSummable(format!("decay rate {beta} must be positive")));
        }
        let p = Pieces::new(vec![T::zero()], vec![vec![Term { coeff: c, power, rate: beta }]])?;
        Ok(Self { kind: CoefficientKind::ExpDecay, p })
    }

    /// `c * e^{-beta x}`.
    pub fn exp_decay(c: C<T>, beta: T) -> Result<Self> {
        Self::exp_poly(c, 0, beta)
    }

    /// Polynomial pieces on `[knots[i], knots[i+1])`, coefficients in powers of `x - knots[i]`.
    /// Zero outside `[knots[0], knots[last]]`.
    pub fn piecewise_polynomial(knots: &[T], polys: &[Vec<C<T>>]) -> Result<Self> {
        if knots.len() < 2 || polys.len() != knots.len() - 1 {
            return Err(Error::InvalidCoefficient("need m+1 knots for m polynomial pieces".into()));
        }
        if knots[0] < T::zero() {
            return Err(Error::InvalidCoefficient("knots must be nonnegative".into()));
        }
        let mut starts = Vec::new();
        let mut terms = Vec::new();
        if knots[0] > T::zero() {
            starts.push(T::zero());
            terms.push(vec![]);
        }
        for (i, poly) in polys.iter().enumerate() {
            starts.push(knots[i]);
            terms.push(
                poly.iter()
                    .enumerate()
                    .map(|(k, &c)| Term { coeff: c, power: k as u32, rate: T::zero() })
                    .collect(),
            );
        }
        starts.push(*knots.last().unwrap());
        terms.push(vec![]);
        Ok(Self { kind: CoefficientKind::PiecewisePolynomial, p: Pieces::new(starts, terms)? })
    }

    /// Linear interpolation of `(xs, values)`, zero outside `[xs[0], xs[last]]`.
    pub fn tabulated(xs: &[T], values: &[C<T>]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::InvalidCoefficient("tabulated data needs >= 2 matching knots and values".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidCoefficient("non-finite tabulated value".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCoefficient("knots must be strictly increasing".into()));
        }
        let polys: Vec<Vec<C<T>>> = (0..xs.len() - 1)
            .map(|i| vec![values[i], (values[i + 1] - values[i]) / (xs[i + 1] - xs[i])])
            .collect();
        let mut f = Self::piecewise_polynomial(xs, &polys)?;
        f.kind = CoefficientKind::Tabulated;
        Ok(f)
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.p.terms.iter().all(|t| t.is_empty())
    }

    pub fn eval(&self, x: T) -> C<T> {
        self.p.eval(x)
    }

    /// Derivative, one-sided from the right at knots.
    pub fn deriv(&self, x: T) -> C<T> {
        self.p.deriv(x)
    }

    /// Exact `int_0^x f`.
    pub fn antiderivative(&self, x: T) -> C<T> {
        self.p.antiderivative(x)
    }

    pub fn integral(&self, a: T, b: T) -> C<T> {
        self.p.antiderivative(b) - self.p.antiderivative(a)
    }

    /// Breakpoints where the function or its derivatives may jump.
    pub fn knots(&self) -> &[T] {
        &self.p.starts
    }

    pub fn l1_on(&self, a: T, b: Option<T>) -> Result<(T, T)> {
        self.p.l1_on(a, b, lit(1e-12))
    }

    pub fn tail_norms(&self, alpha: T) -> Result<TailNorms<T>> {
        self.tail_norms_tol(alpha, lit(1e-10))
    }

    pub fn tail_norms_tol(&self, alpha: T, tol: T) -> Result<TailNorms<T>> {
        if alpha < T::zero() {
            return Err(Error::OutOfRange(format!("alpha = {alpha} must be nonnegative")));
        }
        let (l1, l1_error) = self.p.l1_on(alpha, None, tol)?;
        let l2 = self.p.l2_sq_from(alpha).sqrt();
        if !l1.is_finite() || !l2.is_finite() {
            return Err(Error::InvalidCoefficient("non-finite tail norm".into()));
        }
        Ok(TailNorms { l1, l2, l1_error })
    }

    /// Smallest (up to bisection tolerance) `T >= lo` with `||f||_{L[T, inf)} < eps`.
    pub fn tail_cutoff(&self, eps: T, lo: T) -> Result<T> {
        if self.tail_norms(lo)?.l1 < eps {
            return Ok(lo);
        }
        let mut hi = lo.max(T::one());
        while self.tail_norms(hi)?.l1 >= eps {
            hi = hi * lit(2.0);
            if hi > lit(1e6) {
                return Err(Error::NotSummable("tail does not fall below tolerance".into()));
            }
        }
        let mut a = lo;
        for _ in 0..60 {
            let m = (a + hi) * lit(0.5);
            if self.tail_norms(m)?.l1 >= eps {
                a = m;
            } else {
                hi = m;
            }
            if hi - a < lit(1e-6) {
                break;
            }
        }
        Ok(hi)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { kind: CoefficientKind::Composite, p: self.p.add(&other.p) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { kind: CoefficientKind::Composite, p: self.p.mul(&other.p) }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self { kind: self.kind, p: self.p.map_coeffs(|x| x * c) }
    }

    pub fn conj(&self) -> Self {
        Self { kind: self.kind, p: self.p.map_coeffs(|x| x.conj()) }
    }

    /// `x -> f(x + a)`.
    pub fn shift_left(&self, a: T) -> Self {
        Self { kind: self.kind, p: self.p.shift_left(a) }
    }
}

/// Positive weight rho; the tail may approach a positive constant.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction<T: Real> {
    p: Pieces<T>,
}

impl<T: Real> WeightFunction<T> {
    fn checked(p: Pieces<T>) -> Result<Self> {
        if p.terms.iter().flatten().any(|t| t.coeff.im != T::zero()) {
            return Err(Error::InvalidCoefficient("weight must be real".into()));
        }
        let w = Self { p };
        // positivity on sample points of each piece and in the tail limit
        for i in 0..w.p.starts.len() {
            let s = w.p.starts[i];
            let len = w.p.end_of(i).map(|e| e - s).unwrap_or(lit(50.0));
            for j in 0..=32 {
                let x = s + len * lit(j as f64 / 32.0);
                let x = if j == 32 && w.p.end_of(i).is_some() { x - len * lit(1e-9) } else { x };
                if !(w.p.eval(x).re > T::zero()) {
                    return Err(Error::InvalidCoefficient(format!("weight not positive at x = {x}")));
                }
            }
        }
        if w.tail_limit() < T::zero() {
            return Err(Error::InvalidCoefficient("weight tail limit negative".into()));
        }
        Ok(w)
    }

    pub fn constant(c: T) -> Result<Self> {
        Self::checked(Pieces::new(vec![T::zero()], vec![vec![Term { coeff: cr(c), power: 0, rate: T::zero() }]])?)
    }

    /// `c0 + c * e^{-beta x}`.
    pub fn constant_plus_exp(c0: T, c: T, beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::InvalidCoefficient("decay rate must be positive".into()));
        }
        Self::checked(Pieces::new(
            vec![T::zero()],
            vec![vec![
                Term { coeff: cr(c0), power: 0, rate: T::zero() },
                Term { coeff: cr(c), power: 0, rate: beta },
            ]],
        )?)
    }

    /// Polynomial pieces (local powers) on `[knots[i], knots[i+1])`, constant `tail` beyond.
    /// `knots[0]` must be 0.
    pub fn piecewise_polynomial(knots: &[T], polys: &[Vec<T>], tail: T) -> Result<Self> {
        if knots.len() < 2 || polys.len() != knots.len() - 1 || knots[0] != T::zero() {
            return Err(Error::InvalidCoefficient("weight pieces must start at 0".into()));
        }
        let mut starts = knots.to_vec();
        let mut terms: Vec<Vec<Term<T>>> = polys
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(k, &c)| Term { coeff: cr(c), power: k as u32, rate: T::zero() })
                    .collect()
            })
            .collect();
        terms.push(vec![Term { coeff: cr(tail), power: 0, rate: T::zero() }]);
        starts.truncate(knots.len());
        Self::checked(Pieces::new(starts, terms)?)
    }

    /// Linear interpolation; constant extension by the last value. `xs[0]` must be 0.
    pub fn tabulated(xs: &[T], values: &[T]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() || xs[0] != T::zero() {
            return Err(Error::InvalidCoefficient("weight table must start at 0".into()));
        }
        let polys: Vec<Vec<T>> = (0..xs.len() - 1)
            .map(|i| vec![values[i], (values[i + 1] - values[i]) / (xs[i + 1] - xs[i])])
            .collect();
        Self::piecewise_polynomial(xs, &polys, *values.last().unwrap())
    }

    pub fn eval(&self, x: T) -> T {
        self.p.eval(x).re
    }

    pub fn knots(&self) -> &[T] {
        &self.p.starts
    }

    /// True when rho is identically 1.
    pub fn is_unit(&self) -> bool {
        self.p.starts.len() == 1
            && self.p.terms[0].len() == 1
            && self.p.terms[0][0].rate == T::zero()
            && self.p.terms[0][0].power == 0
            && self.p.terms[0][0].coeff == cr(T::one())
    }

    fn tail_limit(&self) -> T {
        let last = self.p.terms.last().unwrap();
        last.iter()
            .filter(|t| t.rate == T::zero())
            .fold(T::zero(), |s, t| if t.power == 0 { s + t.coeff.re } else { s + t.coeff.re * T::infinity() })
    }

    /// `p(x) = int_0^x rho`.
    pub fn phase(&self, x: T) -> T {
        self.p.antiderivative(x).re
    }

    /// Total mass of rho, `None` if infinite.
    pub fn total_mass(&self) -> Option<T> {
        self.p.total().map(|c| c.re)
    }

    pub fn phase_inverse(&self, y: T) -> Result<T> {
        if y < T::zero() {
            return Err(Error::OutOfRange(format!("phase value {y} is negative")));
        }
        if let Some(m) = self.total_mass() {
            if y >= m {
                return Err(Error::OutOfRange(format!("phase value {y} beyond total mass {m}")));
            }
        }
        if y == T::zero() {
            return Ok(T::zero());
        }
        // bracket
        let (mut lo, mut hi) = (T::zero(), T::one());
        while self.phase(hi) < y {
            lo = hi;
            hi = hi * lit(2.0);
            if !hi.is_finite() {
                return Err(Error::OutOfRange("phase inverse bracket overflow".into()));
            }
        }
        for _ in 0..200 {
            let m = (lo + hi) * lit(0.5);
            if self.phase(m) < y {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo <= T::epsilon() * lit(8.0) * (T::one() + hi) {
                break;
            }
        }
        let mut x = (lo + hi) * lit(0.5);
        let r = self.eval(x);
        if r > T::zero() {
            let nx = x - (self.phase(x) - y) / r;
            if nx >= lo && nx <= hi {
                x = nx;
            }
        }
        Ok(x)
    }

    /// Sampled essential infimum of rho over [a, inf).
    pub fn essinf_from(&self, a: T) -> T {
        let mut m = T::infinity();
        let i0 = self.p.locate(a);
        for i in i0..self.p.starts.len() {
            let s = self.p.starts[i].max(a);
            let len = self.p.end_of(i).map(|e| e - s).unwrap_or(lit(60.0));
            for j in 0..=256 {
                let x = s + len * lit(j as f64 / 256.0);
                if self.p.end_of(i).map_or(true, |e| x < e) {
                    m = m.min(self.eval(x));
                }
            }
        }
        m.min(if self.tail_limit() > T::zero() { self.tail_limit() } else { m })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    // Composite Simpson on [a, b] as an independent oracle for norms.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn exp_decay_tail_norms() {
        let f = CoefficientFunction::exp_decay(re(1.0), 1.0).unwrap();
        let t0 = f.tail_norms(0.0).unwrap();
        assert!((t0.l1 - 1.0).abs() < 1e-14);
        let t1 = f.tail_norms(1.0).unwrap();
        assert!((t1.l1 - (-1.0f64).exp()).abs() < 1e-14);
        assert!((t1.l2 - (-1.0f64).exp() / 2f64.sqrt()).abs() < 1e-14);
        let s = simpson(|x| (-x).exp(), 1.0, 40.0, 20000);
        assert!((t1.l1 - s).abs() < 1e-10);
    }

    #[test]
    fn zero_tabulated_has_zero_norms() {
        let f = CoefficientFunction::tabulated(&[0.0, 1.0, 2.0], &[re(0.0); 3]).unwrap();
        let t = f.tail_norms(0.5).unwrap();
        assert_eq!((t.l1, t.l2), (0.0, 0.0));
        assert!(f.is_zero());
    }

    #[test]
    fn tabulated_sign_change_l1() {
        let f = CoefficientFunction::tabulated(&[0.0, 2.0, 3.0], &[re(1.0), re(-1.0), re(0.0)]).unwrap();
        // |1 - x| on [0,2] has mass 1, then a triangle of mass 1/2
        let t = f.tail_norms(0.0).unwrap();
        assert!((t.l1 - 1.5).abs() < 1e-9, "{}", t.l1);
        assert_eq!(f.eval(5.0), re(0.0));
        assert!((f.eval(2.5) - re(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn composite_l1_by_quadrature() {
        let f = CoefficientFunction::exp_decay(re(1.0), 1.0)
            .unwrap()
            .add(&CoefficientFunction::exp_decay(re(-3.0), 2.0).unwrap());
        let t = f.tail_norms(0.0).unwrap();
        let s = simpson(|x| ((-x).exp() - 3.0 * (-2.0 * x).exp()).abs(), 0.0, 50.0, 400000);
        assert!((t.l1 - s).abs() < 1e-8, "{} vs {}", t.l1, s);
    }

    #[test]
    fn products_and_shifts() {
        let f = CoefficientFunction::exp_decay(re(2.0), 1.0).unwrap();
        let sq = f.mul(&f);
        assert!((sq.eval(0.7) - re(4.0 * (-1.4f64).exp())).norm() < 1e-14);
        let g = f.shift_left(1.5);
        assert!((g.eval(0.3) - f.eval(1.8)).norm() < 1e-15);
        let pw = CoefficientFunction::piecewise_polynomial(&[1.0, 2.0, 4.0], &[vec![re(1.0), re(1.0)], vec![re(2.0)]])
            .unwrap();
        let h = pw.shift_left(1.5);
        assert!((h.eval(0.2) - re(1.7)).norm() < 1e-14);
        assert!((h.eval(2.0) - re(2.0)).norm() < 1e-14);
        assert_eq!(h.eval(2.6), re(0.0));
        assert!((pw.integral(0.0, 10.0) - re(1.5 + 4.0)).norm() < 1e-14);
    }

    #[test]
    fn phase_examples() {
        let one = WeightFunction::<f64>::constant(1.0).unwrap();
        assert_eq!(one.phase(3.25), 3.25);
        assert!((one.phase_inverse(2.5).unwrap() - 2.5).abs() < 1e-14);
        let two = WeightFunction::constant(2.0).unwrap();
        assert_eq!(two.phase(3.0), 6.0);
        let w = WeightFunction::constant_plus_exp(1.0, 1.0, 1.0).unwrap();
        assert!((w.phase(1.0) - (2.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((w.phase(1.0) - simpson(|x| 1.0 + (-x).exp(), 0.0, 1.0, 100)).abs() < 1e-9);
        assert_eq!(w.essinf_from(0.0), 1.0);
    }

    #[test]
    fn finite_mass_weight_rejects_large_phase() {
        let w = WeightFunction::<f64>::constant_plus_exp(0.0, 1.0, 1.0);
        // zero tail constant is not allowed to drop below zero but stays positive pointwise
        let w = w.unwrap();
        assert!(matches!(w.phase_inverse(1.5), Err(Error::OutOfRange(_))));
        assert!((w.phase(w.phase_inverse(0.5).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CoefficientFunction::exp_decay(re(1.0), 0.0).is_err());
        assert!(CoefficientFunction::tabulated(&[0.0, 0.0], &[re(1.0), re(1.0)]).is_err());
        assert!(CoefficientFunction::tabulated(&[0.0, 1.0], &[re(f64::NAN), re(1.0)]).is_err());
        assert!(WeightFunction::constant(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn tails_are_monotone(a1 in 0.0f64..6.0, d in 0.0f64..6.0, c in -3.0f64..3.0, b in 0.2f64..3.0) {
            let f = CoefficientFunction::exp_decay(re(1.0), 1.0).unwrap()
                .add(&CoefficientFunction::exp_decay(Complex64::new(c, 0.5), b).unwrap())
                .add(&CoefficientFunction::tabulated(&[0.0, 1.0, 3.0], &[re(0.5), re(-2.0), re(1.0)]).unwrap());
            let t1 = f.tail_norms(a1).unwrap();
            let t2 = f.tail_norms(a1 + d).unwrap();
            prop_assert!(t2.l1 <= t1.l1 + 1e-9);
            prop_assert!(t2.l2 <= t1.l2 + 1e-12);
        }

        #[test]
        fn phase_round_trip(x in 0.0f64..50.0) {
            let w = WeightFunction::tabulated(&[0.0, 1.0, 2.5], &[1.0, 3.0, 0.5]).unwrap();
            let y = w.phase(x);
            let back = w.phase_inverse(y).unwrap();
            prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x));
            let w2 = WeightFunction::constant_plus_exp(1.0, 2.0, 0.5).unwrap();
            prop_assert!((w2.phase_inverse(w2.phase(x)).unwrap() - x).abs() <= 1e-9 * (1.0 + x));
        }

        #[test]
        fn phase_strictly_increasing(x in 0.0f64..20.0, d in 1e-3f64..5.0) {
            let w = WeightFunction::constant_plus_exp(1.0, 1.0, 1.0).unwrap();
            prop_assert!(w.phase(x + d) - w.phase(x) >= 1.0 * d - 1e-12);
        }
    }
}
