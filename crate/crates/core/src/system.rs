//! The system `y' = (lambda rho(x) B + A(x) + C(x, lambda)) y` and its derived norms.

use crate::coeffs::{CoefficientFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c1, cr, cz, lit, Real, C};

#[derive(Clone, Debug)]
pub struct SystemSpec<T: Real> {
    n: usize,
    b: Vec<C<T>>,
    a: Vec<CoefficientFunction<T>>,
    /// Laurent coefficients `C_1..C_N`, each row-major n*n.
    c: Vec<Vec<CoefficientFunction<T>>>,
    rho: WeightFunction<T>,
}

/// The block-diagonal part of A: `d_jk = a_jk` if `b_j == b_k`, else 0.
#[derive(Clone, Debug)]
pub struct DiagonalBlockMatrix<T: Real> {
    n: usize,
    entries: Vec<CoefficientFunction<T>>,
}

impl<T: Real> DiagonalBlockMatrix<T> {
    pub fn get(&self, j: usize, k: usize) -> &CoefficientFunction<T> {
        &self.entries[j * self.n + k]
    }

    pub fn eval(&self, x: T) -> CMatrix<T> {
        CMatrix::from_fn(self.n, self.n, |j, k| self.entries[j * self.n + k].eval(x))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn knots(&self) -> Vec<T> {
        collect_knots(&self.entries)
    }
}

/// `(gamma_alpha(lambda), K_alpha, phi(alpha))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaKPhi<T> {
    pub gamma: T,
    pub k: T,
    pub phi: T,
}

pub(crate) fn collect_knots<T: Real>(fs: &[CoefficientFunction<T>]) -> Vec<T> {
    let mut k: Vec<T> = fs.iter().flat_map(|f| f.knots().iter().copied()).collect();
    k.sort_by(|a, b| a.partial_cmp(b).unwrap());
    k.dedup();
    k
}

impl<T: Real> SystemSpec<T> {
    /// `a` is row-major n*n; each element of `c` is one row-major Laurent coefficient.
    pub fn new(
        b: Vec<C<T>>,
        a: Vec<CoefficientFunction<T>>,
        c: Vec<Vec<CoefficientFunction<T>>>,
        rho: WeightFunction<T>,
    ) -> Result<Self> {
        let n = b.len();
        if n < 2 {
            return Err(Error::InvalidSystem(format!("n = {n} must be at least 2")));
        }
        if a.len() != n * n {
            return Err(Error::InvalidSystem(format!("A has {} entries, expected {}", a.len(), n * n)));
        }
        if c.iter().any(|m| m.len() != n * n) {
            return Err(Error::InvalidSystem("Laurent coefficient of wrong size".into()));
        }
        if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSystem("non-finite b".into()));
        }
        Ok(Self { n, b, a, c, rho })
    }

    /// A constant-free system `y' = lambda B y` with rho = 1.
    pub fn trivial(b: Vec<C<T>>) -> Result<Self> {
        let n = b.len();
        Self::new(b, vec![CoefficientFunction::zero(); n * n], vec![], WeightFunction::constant(T::one())?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &[C<T>] {
        &self.b
    }

    pub fn a(&self, j: usize, k: usize) -> &CoefficientFunction<T> {
        &self.a[j * self.n + k]
    }

    pub fn a_entries(&self) -> &[CoefficientFunction<T>] {
        &self.a
    }

    /// Number N of Laurent terms (0 when C vanishes).
    pub fn laurent_order(&self) -> usize {
        self.c.len()
    }

    /// Entry (j, l) of `C_k`, k in 1..=N.
    pub fn c(&self, k: usize, j: usize, l: usize) -> &CoefficientFunction<T> {
        &self.c[k - 1][j * self.n + l]
    }

    pub fn c_is_zero(&self) -> bool {
        self.c.iter().flatten().all(|f| f.is_zero())
    }

    pub fn rho(&self) -> &WeightFunction<T> {
        &self.rho
    }

    pub fn roots_of_unity(&self) -> bool {
        is_roots_of_unity(&self.b)
    }

    /// All coefficient knots (A, C, rho).
    pub fn knots(&self) -> Vec<T> {
        let mut fs = self.a.clone();
        fs.extend(self.c.iter().flatten().cloned());
        let mut k = collect_knots(&fs);
        k.extend(self.rho.knots().iter().copied());
        k.sort_by(|a, b| a.partial_cmp(b).unwrap());
        k.dedup();
        k
    }

    pub fn build_d(&self) -> DiagonalBlockMatrix<T> {
        let n = self.n;
        let entries = (0..n * n)
            .map(|i| {
                let (j, k) = (i / n, i % n);
                if self.b[j] == self.b[k] {
                    self.a[i].clone()
                } else {
                    CoefficientFunction::zero()
                }
            })
            .collect();
        DiagonalBlockMatrix { n, entries }
    }

    /// Entry (j, k) of A - D.
    pub fn a_off(&self, j: usize, k: usize) -> Option<&CoefficientFunction<T>> {
        if self.b[j] == self.b[k] {
            None
        } else {
            Some(self.a(j, k))
        }
    }

    pub fn a_eval(&self, x: T) -> CMatrix<T> {
        CMatrix::from_fn(self.n, self.n, |j, k| self.a(j, k).eval(x))
    }

    pub fn a_off_eval(&self, x: T) -> CMatrix<T> {
        CMatrix::from_fn(self.n, self.n, |j, k| self.a_off(j, k).map_or(cz(), |f| f.eval(x)))
    }

    /// `C(x, lambda) = sum_k C_k(x) lambda^{-k}`.
    pub fn c_eval(&self, x: T, lambda: C<T>) -> CMatrix<T> {
        let mut out = CMatrix::zeros(self.n, self.n);
        let inv = c1::<T>() / lambda;
        let mut pw = inv;
        for ck in &self.c {
            for j in 0..self.n {
                for l in 0..self.n {
                    out[(j, l)] = out[(j, l)] + ck[j * self.n + l].eval(x) * pw;
                }
            }
            pw = pw * inv;
        }
        out
    }

    /// Full coefficient matrix of the system at (x, lambda).
    pub fn full_eval(&self, x: T, lambda: C<T>) -> CMatrix<T> {
        let mut m = self.a_eval(x).add(&self.c_eval(x, lambda));
        let r = self.rho.eval(x);
        for j in 0..self.n {
            m[(j, j)] = m[(j, j)] + lambda * self.b[j] * r;
        }
        m
    }

    /// `a := n * max_jk ||a_jk||_{L[0, inf)}`.
    pub fn a_const(&self) -> Result<T> {
        let mut m = T::zero();
        for f in &self.a {
            m = m.max(f.tail_norms(T::zero())?.l1);
        }
        Ok(lit::<T>(self.n as f64) * m)
    }

    /// `max_jk ||(A - D)_jk||_{L[alpha, inf)}`.
    pub fn a_off_tail(&self, alpha: T) -> Result<T> {
        let mut m = T::zero();
        for j in 0..self.n {
            for k in 0..self.n {
                if let Some(f) = self.a_off(j, k) {
                    m = m.max(f.tail_norms(alpha)?.l1);
                }
            }
        }
        Ok(m)
    }

    /// `max_jk ||(A - D)_jk||_{L2[alpha, inf)}`.
    pub fn a_off_tail_l2(&self, alpha: T) -> Result<T> {
        let mut m = T::zero();
        for j in 0..self.n {
            for k in 0..self.n {
                if let Some(f) = self.a_off(j, k) {
                    m = m.max(f.tail_norms(alpha)?.l2);
                }
            }
        }
        Ok(m)
    }

    /// Entry (j, l) of `C(., lambda)` as a coefficient function.
    pub fn c_entry_at(&self, j: usize, l: usize, lambda: C<T>) -> CoefficientFunction<T> {
        let inv = c1::<T>() / lambda;
        let mut pw = inv;
        let mut f = CoefficientFunction::zero();
        for ck in &self.c {
            f = f.add(&ck[j * self.n + l].scale(pw));
            pw = pw * inv;
        }
        f
    }

    /// `gamma_alpha(lambda) = max_jl ||c_jl(., lambda)||_{L[alpha, inf)}`.
    pub fn gamma(&self, alpha: T, lambda: C<T>) -> Result<T> {
        if lambda == cz() {
            return Err(Error::OutOfRange("lambda = 0".into()));
        }
        let mut g = T::zero();
        for j in 0..self.n {
            for l in 0..self.n {
                let v = if self.c.len() == 1 {
                    self.c[0][j * self.n + l].tail_norms(alpha)?.l1 / lambda.norm()
                } else {
                    self.c_entry_at(j, l, lambda).tail_norms(alpha)?.l1
                };
                g = g.max(v);
            }
        }
        Ok(g)
    }

    /// Laurent mass `K_alpha = sum_k max_jl ||(C_k)_jl||_{L[alpha, inf)}`.
    pub fn laurent_mass(&self, alpha: T) -> Result<T> {
        let mut s = T::zero();
        for ck in &self.c {
            let mut m = T::zero();
            for f in ck {
                m = m.max(f.tail_norms(alpha)?.l1);
            }
            s = s + m;
        }
        Ok(s)
    }

    /// `phi(alpha) = max(1/alpha, K_alpha^{1/(2N)})`, infinite at alpha = 0.
    pub fn phi(&self, alpha: T) -> Result<T> {
        let inv = if alpha == T::zero() { T::infinity() } else { T::one() / alpha };
        if self.c.is_empty() {
            return Ok(inv);
        }
        let k = self.laurent_mass(alpha)?;
        Ok(inv.max(k.powf(T::one() / lit((2 * self.c.len()) as f64))))
    }

    pub fn gamma_k_phi(&self, alpha: T, lambda: C<T>) -> Result<GammaKPhi<T>> {
        if alpha < T::zero() {
            return Err(Error::OutOfRange("alpha must be nonnegative".into()));
        }
        Ok(GammaKPhi { gamma: self.gamma(alpha, lambda)?, k: self.laurent_mass(alpha)?, phi: self.phi(alpha)? })
    }

    /// Cutoff beyond which every A - D and C entry has L1 tail below `eps`.
    pub fn tail_cutoff(&self, alpha: T, eps: T) -> Result<T> {
        let mut t = alpha;
        for j in 0..self.n {
            for k in 0..self.n {
                if let Some(f) = self.a_off(j, k) {
                    if !f.is_zero() {
                        t = t.max(f.tail_cutoff(eps, alpha)?);
                    }
                }
            }
        }
        for f in self.c.iter().flatten() {
            if !f.is_zero() {
                t = t.max(f.tail_cutoff(eps, alpha)?);
            }
        }
        Ok(t)
    }

    /// Reorders indices: working index i refers to original index `p[i]`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        let n = self.n;
        let pm = |m: &[CoefficientFunction<T>]| -> Vec<CoefficientFunction<T>> {
            (0..n * n).map(|i| m[p[i / n] * n + p[i % n]].clone()).collect()
        };
        Self {
            n,
            b: p.iter().map(|&i| self.b[i]).collect(),
            a: pm(&self.a),
            c: self.c.iter().map(|m| pm(m)).collect(),
            rho: self.rho.clone(),
        }
    }

    /// `sup |lambda B rho|`-free part: the largest `|b_j - b_l|` and `|b_j - omega|`.
    pub fn max_rate(&self, omega: Option<C<T>>) -> T {
        let mut r = T::zero();
        for &bj in &self.b {
            for &bl in &self.b {
                r = r.max((bj - bl).norm());
            }
            if let Some(w) = omega {
                r = r.max((bj - w).norm());
            }
        }
        r
    }

    pub fn with_rho(&self, rho: WeightFunction<T>) -> Self {
        Self { rho, ..self.clone() }
    }

    pub fn scaled_a(&self, s: T) -> Self {
        Self { a: self.a.iter().map(|f| f.scale(cr(s))).collect(), ..self.clone() }
    }
}

pub(crate) fn is_roots_of_unity<T: Real>(b: &[C<T>]) -> bool {
    let n = b.len();
    let tol: T = lit(1e-12);
    for (i, &x) in b.iter().enumerate() {
        if (x.powu(n as u32) - c1()).norm() > tol {
            return false;
        }
        if b[..i].iter().any(|&y| (y - x).norm() < lit(1e-6)) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn e(c: f64, beta: f64) -> CoefficientFunction<f64> {
        CoefficientFunction::exp_decay(Complex64::new(c, 0.0), beta).unwrap()
    }

    fn full_a() -> Vec<CoefficientFunction<f64>> {
        vec![e(1.0, 1.0), e(2.0, 1.0), e(3.0, 1.0), e(4.0, 1.0)]
    }

    #[test]
    fn build_d_follows_case_rule() {
        let one = WeightFunction::constant(1.0).unwrap();
        let s = SystemSpec::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], full_a(), vec![], one.clone())
            .unwrap();
        let d = s.build_d();
        assert!(!d.get(0, 0).is_zero() && d.get(0, 1).is_zero() && d.get(1, 0).is_zero());
        let same = SystemSpec::new(vec![Complex64::new(1.0, 0.0); 2], full_a(), vec![], one.clone()).unwrap();
        let d = same.build_d();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(d.get(j, k), same.a(j, k));
                assert!(same.a_off(j, k).is_none());
            }
        }
        let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        let cube = vec![Complex64::new(1.0, 0.0), w, w.conj()];
        let a3: Vec<_> = (0..9).map(|i| e(i as f64 + 1.0, 1.0)).collect();
        let s3 = SystemSpec::new(cube, a3, vec![], one).unwrap();
        assert!(s3.roots_of_unity());
        let d3 = s3.build_d();
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(d3.get(j, k).is_zero(), j != k);
            }
        }
    }

    #[test]
    fn gamma_k_phi_examples() {
        let one = WeightFunction::constant(1.0).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let zero = SystemSpec::trivial(b.clone()).unwrap();
        assert_eq!(zero.gamma(0.0, Complex64::new(0.1, 0.2)).unwrap(), 0.0);
        assert_eq!(zero.phi(2.0).unwrap(), 0.5);
        let c1m = vec![e(1.0, 1.0), e(1.0, 1.0), e(1.0, 1.0), e(1.0, 1.0)];
        let s = SystemSpec::new(b, full_a(), vec![c1m], one).unwrap();
        let g = s.gamma_k_phi(0.0, Complex64::new(2.0, 0.0)).unwrap();
        assert!((g.gamma - 0.5).abs() < 1e-14);
        assert!(g.phi.is_infinite());
        let g1 = s.gamma_k_phi(1.0, Complex64::new(2.0, 0.0)).unwrap();
        assert!((g1.k - (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(g1.phi, 1.0);
        assert!(s.gamma(0.0, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn permutation_reorders_everything() {
        let one = WeightFunction::constant(1.0).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let s = SystemSpec::new(b, full_a(), vec![], one).unwrap();
        let p = s.permuted(&[1, 0]);
        assert_eq!(p.b()[0], Complex64::new(-1.0, 0.0));
        assert!((p.a(0, 1).eval(0.0).re - 3.0).abs() < 1e-15);
        assert!((p.a(1, 1).eval(0.0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn multi_term_laurent_gamma_uses_combined_entry() {
        let one = WeightFunction::constant(1.0).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let z = CoefficientFunction::zero();
        let c1m = vec![e(1.0, 1.0), z.clone(), z.clone(), z.clone()];
        let c2m = vec![e(-2.0, 1.0), z.clone(), z.clone(), z];
        let s = SystemSpec::new(b, full_a(), vec![c1m, c2m], one).unwrap();
        // e^{-x}(1/2 - 2/4) = 0 at lambda = 2
        assert!(s.gamma(0.0, Complex64::new(2.0, 0.0)).unwrap() < 1e-12);
        assert!((s.laurent_mass(0.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((s.phi(1.0).unwrap() - 1.0f64.max(((-1.0f64).exp() * 3.0).powf(0.25))).abs() < 1e-14);
    }
}
