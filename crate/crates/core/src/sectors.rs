//! Sector decomposition of the lambda-plane and the large sectors for roots of unity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real, C};
use crate::system::is_roots_of_unity;

/// Angle tolerance used when merging boundary rays and testing closures.
pub const ANGLE_TOL: f64 = 1e-12;

/// An angle, with its exact value as a rational multiple of pi when one was detected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Angle {
    pub radians: f64,
    /// `(p, q)` with `radians = p/q * pi`, lowest terms, q > 0.
    pub pi_fraction: Option<(i64, i64)>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Angle {
    pub fn pi_frac(p: i64, q: i64) -> Self {
        let g = gcd(p, q).max(1);
        let (p, q) = if q < 0 { (-p / g, -q / g) } else { (p / g, q / g) };
        Self { radians: p as f64 / q as f64 * std::f64::consts::PI, pi_fraction: Some((p, q)) }
    }

    /// Detects small rational multiples of pi (denominators up to 48).
    pub fn detect(radians: f64) -> Self {
        let r = radians / std::f64::consts::PI;
        for q in 1..=48i64 {
            let p = (r * q as f64).round();
            if ((p / q as f64) - r).abs() * std::f64::consts::PI < ANGLE_TOL {
                return Self::pi_frac(p as i64, q);
            }
        }
        Self { radians, pi_fraction: None }
    }

    fn shifted(self, turns: i64) -> Self {
        match self.pi_fraction {
            Some((p, q)) => Self::pi_frac(p + 2 * turns * q, q),
            None => Self { radians: self.radians + 2.0 * std::f64::consts::PI * turns as f64, pi_fraction: None },
        }
    }
}

/// Closed angular interval `[lo, hi]` with `lo < hi <= lo + 2 pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngularInterval {
    pub lo: Angle,
    pub hi: Angle,
}

impl AngularInterval {
    pub fn new(lo: Angle, hi: Angle) -> Self {
        Self { lo, hi }
    }

    pub fn full() -> Self {
        Self { lo: Angle::pi_frac(0, 1), hi: Angle::pi_frac(2, 1) }
    }

    pub fn width(&self) -> f64 {
        self.hi.radians - self.lo.radians
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo.radians + self.hi.radians)
    }

    /// Signed distance-free membership test of `arg` in the closure, within `tol` radians.
    pub fn contains_angle(&self, arg: f64, tol: f64) -> bool {
        if self.width() >= 2.0 * std::f64::consts::PI - tol {
            return true;
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let rel = (arg - self.lo.radians).rem_euclid(two_pi);
        rel <= self.width() + tol || rel >= two_pi - tol
    }

    pub fn contains<T: Real>(&self, lambda: C<T>, tol: f64) -> bool {
        lambda.norm() > T::zero() && self.contains_angle(to_f64(lambda.im).atan2(to_f64(lambda.re)), tol)
    }

    /// Open-interior test with an angular margin.
    pub fn contains_open<T: Real>(&self, lambda: C<T>, margin: f64) -> bool {
        if lambda.norm() == T::zero() {
            return false;
        }
        let arg = to_f64(lambda.im).atan2(to_f64(lambda.re));
        let rel = (arg - self.lo.radians).rem_euclid(2.0 * std::f64::consts::PI);
        rel > margin && rel < self.width() - margin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sector {
    pub kappa: usize,
    pub interval: AngularInterval,
    /// Working index i refers to original index `permutation[i]` (0-based).
    pub permutation: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LargeSector {
    pub m: usize,
    pub omega_m: AngularInterval,
    pub sigma: usize,
    /// The mid-sector exponent `b_m exp((-1)^m pi i / n)`.
    pub omega: (f64, f64),
    pub lambda: AngularInterval,
    pub gamma1: AngularInterval,
    pub gamma_sigma: AngularInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorGeometry {
    pub n: usize,
    pub sectors: Vec<Sector>,
    pub roots_of_unity: bool,
    pub quarter_planes: bool,
}

fn sort_perm<T: Real>(b: &[C<T>], arg: f64) -> Vec<usize> {
    let lam = C::new(lit::<T>(arg.cos()), lit::<T>(arg.sin()));
    let mut idx: Vec<usize> = (0..b.len()).collect();
    // stable: equal b keep original order
    idx.sort_by(|&x, &y| {
        let (rx, ry) = ((lam * b[x]).re, (lam * b[y]).re);
        if b[x] == b[y] {
            std::cmp::Ordering::Equal
        } else {
            ry.partial_cmp(&rx).unwrap()
        }
    });
    idx
}

/// Splits the plane by the lines `Re(lambda b_j) = Re(lambda b_l)`.
pub fn compute_sectors<T: Real>(b: &[C<T>]) -> SectorGeometry {
    compute_sectors_with(b, false)
}

/// As [`compute_sectors`]; for n = 2 roots of unity, `quarter_planes` adds the rays
/// arg = 0, pi so that the four quarter planes act as sectors of opening pi/2.
pub fn compute_sectors_with<T: Real>(b: &[C<T>], quarter_planes: bool) -> SectorGeometry {
    let n = b.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut bounds: Vec<Angle> = Vec::new();
    for j in 0..n {
        for l in j + 1..n {
            if b[j] == b[l] {
                continue;
            }
            let d = b[j] - b[l];
            let ad = to_f64(d.im).atan2(to_f64(d.re));
            for s in [0.5, -0.5] {
                let a = (s * std::f64::consts::PI - ad).rem_euclid(two_pi);
                bounds.push(Angle::detect(a));
            }
        }
    }
    let rou = is_roots_of_unity(b);
    let quarter = quarter_planes && n == 2 && rou;
    if quarter {
        bounds.push(Angle::pi_frac(0, 1));
        bounds.push(Angle::pi_frac(1, 1));
    }
    for a in bounds.iter_mut() {
        if a.radians >= two_pi - ANGLE_TOL {
            *a = Angle::pi_frac(0, 1);
        }
    }
    bounds.sort_by(|a, b| a.radians.partial_cmp(&b.radians).unwrap());
    let mut merged: Vec<Angle> = Vec::new();
    for a in bounds {
        match merged.last() {
            Some(last) if (a.radians - last.radians).abs() <= ANGLE_TOL => {}
            _ => merged.push(a),
        }
    }
    if merged.is_empty() {
        return SectorGeometry {
            n,
            sectors: vec![Sector { kappa: 1, interval: AngularInterval::full(), permutation: (0..n).collect() }],
            roots_of_unity: rou,
            quarter_planes: quarter,
        };
    }
    // sectors between consecutive boundaries; the one containing 0+ comes first
    let k = merged.len();
    let mut ivals: Vec<AngularInterval> = (0..k)
        .map(|i| {
            if i + 1 < k {
                AngularInterval::new(merged[i], merged[i + 1])
            } else {
                AngularInterval::new(merged[k - 1], merged[0].shifted(1))
            }
        })
        .collect();
    let first = if merged[0].radians.abs() <= ANGLE_TOL { 0 } else { k - 1 };
    ivals.rotate_left(first);
    if first != 0 {
        let w = ivals[0];
        ivals[0] = AngularInterval::new(w.lo.shifted(-1), w.hi.shifted(-1));
    }
    let sectors = ivals
        .into_iter()
        .enumerate()
        .map(|(i, iv)| Sector { kappa: i + 1, interval: iv, permutation: sort_perm(b, iv.mid()) })
        .collect();
    SectorGeometry { n, sectors, roots_of_unity: rou, quarter_planes: quarter }
}

impl SectorGeometry {
    pub fn sector(&self, kappa: usize) -> Result<&Sector> {
        self.sectors
            .get(kappa.wrapping_sub(1))
            .ok_or_else(|| Error::OutOfRange(format!("sector {kappa} of {}", self.sectors.len())))
    }

    /// The first sector whose closure contains lambda.
    pub fn locate<T: Real>(&self, lambda: C<T>) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.interval.contains(lambda, ANGLE_TOL))
    }
}

/// The fixed numbering `b_{2s+1} = e^{2 pi i s / n}`, `b_{2p} = e^{-2 pi i p / n}`
/// (0-based position i holds b_{i+1}).
pub fn odd_even_roots<T: Real>(n: usize) -> Vec<C<T>> {
    (1..=n)
        .map(|j| {
            let e = if j % 2 == 1 { ((j - 1) / 2) as f64 } else { -((j / 2) as f64) };
            let a = 2.0 * std::f64::consts::PI * e / n as f64;
            C::new(lit(a.cos()), lit(a.sin()))
        })
        .collect()
}

/// Exact rational angles (multiples of pi/n) of the odd-even numbering.
fn odd_even_angle(n: usize, j: usize) -> (i64, i64) {
    let e = if j % 2 == 1 { ((j - 1) / 2) as i64 } else { -((j / 2) as i64) };
    (2 * e, n as i64)
}

/// Large sector data for `b` in the odd-even numbering of the n-th roots of unity.
/// For n = 2 the quarter-plane convention must be requested explicitly.
pub fn large_sector(n: usize, m: usize, quarter_planes: bool) -> Result<LargeSector> {
    if n < 2 || (n == 2 && !quarter_planes) {
        return Err(Error::Unsupported(
            "large sectors need n > 2, or n = 2 with the quarter-plane convention".into(),
        ));
    }
    if m < 2 || m > n {
        return Err(Error::OutOfRange(format!("m = {m} outside [2, {n}]")));
    }
    let ni = n as i64;
    let sgn: i64 = if (m - 1) % 2 == 0 { 1 } else { -1 };
    let omega_m = AngularInterval::new(Angle::pi_frac(sgn - 1, 2 * ni), Angle::pi_frac(sgn + 3, 2 * ni));
    let sigma = if m % 2 == 0 { 2 * n } else { 2 };
    let (bp, bq) = odd_even_angle(n, m);
    // arg omega = arg b_m + (-1)^m pi/n
    let om = Angle::pi_frac(bp + if m % 2 == 0 { 1 } else { -1 }, bq);
    let omega = (om.radians.cos(), om.radians.sin());
    let lam_lo = Angle::pi_frac(sgn, 2 * ni);
    let lambda = AngularInterval::new(lam_lo, Angle::pi_frac(sgn + 2, 2 * ni));
    let gamma1 = AngularInterval::new(Angle::pi_frac(0, 1), Angle::pi_frac(1, ni));
    let gamma_sigma = if sigma == 2 {
        AngularInterval::new(Angle::pi_frac(1, ni), Angle::pi_frac(2, ni))
    } else {
        AngularInterval::new(Angle::pi_frac(-1, ni), Angle::pi_frac(0, 1))
    };
    Ok(LargeSector { m, omega_m, sigma, omega, lambda, gamma1, gamma_sigma })
}

impl LargeSector {
    pub fn omega_c<T: Real>(&self) -> C<T> {
        C::new(lit(self.omega.0), lit(self.omega.1))
    }
}

/// Result of an ordering check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub holds: bool,
    /// Minimum slack, normalized by |lambda|.
    pub margin: f64,
}

/// Checks `Re(lambda b_j) >= Re(lambda omega) >= Re(lambda b_l)` for j < k <= l
/// (0-based: j < pivot <= l) in working numbering `b`. Without `omega` the full
/// chain `Re(lambda b_1) >= ... >= Re(lambda b_n)` is checked.
pub fn check_ordering<T: Real>(
    region: &AngularInterval,
    b: &[C<T>],
    omega: Option<C<T>>,
    lambda: C<T>,
    pivot: usize,
) -> Result<OrderingCheck> {
    if !region.contains(lambda, 1e-9) {
        return Err(Error::OutsideRegion {
            lambda: format!("{lambda}"),
            region: format!("[{:.6}, {:.6}]", region.lo.radians, region.hi.radians),
        });
    }
    let r = |z: C<T>| to_f64((lambda * z).re) / to_f64(lambda.norm());
    let mut margin = f64::INFINITY;
    match omega {
        Some(w) => {
            let rw = r(w);
            for (j, &bj) in b.iter().enumerate() {
                let s = if j < pivot { r(bj) - rw } else { rw - r(bj) };
                margin = margin.min(s);
            }
        }
        None => {
            for w in b.windows(2) {
                margin = margin.min(r(w[0]) - r(w[1]));
            }
        }
    }
    if b.is_empty() || (omega.is_some() && margin == f64::INFINITY) {
        margin = 0.0;
    }
    Ok(OrderingCheck { holds: margin >= -ANGLE_TOL, margin })
}
