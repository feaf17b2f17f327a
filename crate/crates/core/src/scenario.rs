//! Scenario documents: named coefficient descriptors, a system or pencil built from
//! them, and a sampling plan.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::scalar::{from_c64, lit, Real, C};
use crate::sectors::odd_even_roots;
use crate::sturm::PencilSpec;
use crate::system::SystemSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Complex number as `[re, im]`.
pub type Cx = [f64; 2];

fn cx<T: Real>(v: Cx) -> C<T> {
    from_c64(num_complex::Complex64::new(v[0], v[1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientDescriptor {
    Zero,
    /// `c x^power e^{-beta x}`.
    ExpDecay {
        c: Cx,
        beta: f64,
        #[serde(default)]
        power: u32,
    },
    /// Polynomial pieces on `[knots[i], knots[i+1])`, coefficients in ascending powers of `x - knots[i]`.
    PiecewisePolynomial { knots: Vec<f64>, polys: Vec<Vec<Cx>> },
    /// Linear interpolation, zero beyond the last knot.
    Tabulated { xs: Vec<f64>, values: Vec<Cx> },
    /// Sum of other named descriptors.
    Sum { terms: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightDescriptor {
    Constant { value: f64 },
    /// `c0 + c e^{-beta x}`.
    ConstantPlusExp { c0: f64, c: f64, beta: f64 },
    PiecewisePolynomial { knots: Vec<f64>, polys: Vec<Vec<f64>>, tail: f64 },
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl Default for WeightDescriptor {
    fn default() -> Self {
        WeightDescriptor::Constant { value: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BDescriptor {
    /// The n-th roots of unity in the odd-even numbering.
    Roots { roots: usize },
    List(Vec<Cx>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub b: BDescriptor,
    /// Rows of descriptor names; `null` is zero.
    pub a: Vec<Vec<Option<String>>>,
    /// Laurent coefficients `C_1, C_2, ...`, each as rows of names.
    #[serde(default)]
    pub c: Vec<Vec<Vec<Option<String>>>>,
    #[serde(default)]
    pub rho: WeightDescriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilDescriptor {
    pub sigma: Option<String>,
    pub p0: Option<String>,
}

/// Which lambda (or z) values a run visits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Ray angles in radians.
    pub rays: Vec<f64>,
    pub radii: Vec<f64>,
    /// Explicit lambda values.
    pub lambdas: Vec<Cx>,
    /// Sectors for `fss`; empty means the sector of each sampled lambda.
    pub sectors: Vec<usize>,
    /// Large-sector indices m for `largesector`.
    pub large_sectors: Vec<usize>,
    /// Spectral parameters of the pencil.
    pub z: Vec<Cx>,
    /// Points at which solutions are written.
    pub x: Vec<f64>,
    /// Upper radius for ray integrals.
    pub r_max: Option<f64>,
    pub seed: Option<u64>,
}

impl SamplingPlan {
    /// Ray samples followed by the explicit values, in a fixed order.
    pub fn lambda_points(&self) -> Vec<num_complex::Complex64> {
        let mut out = Vec::new();
        for &a in &self.rays {
            for &r in &self.radii {
                out.push(num_complex::Complex64::from_polar(r, a));
            }
        }
        out.extend(self.lambdas.iter().map(|v| num_complex::Complex64::new(v[0], v[1])));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub coefficients: BTreeMap<String, CoefficientDescriptor>,
    #[serde(default)]
    pub system: Option<SystemDescriptor>,
    #[serde(default)]
    pub pencil: Option<PencilDescriptor>,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub plan: SamplingPlan,
    /// Overrides of named tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Output directory (relative to the working directory).
    #[serde(default)]
    pub output: Option<String>,
}

impl Scenario {
    /// Structural checks that do not build any function.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidSystem(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.system.is_none() && self.pencil.is_none() {
            return Err(Error::InvalidSystem("scenario defines neither a system nor a pencil".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidSystem("alphas must be a nonempty list of nonnegative numbers".into()));
        }
        let p = &self.plan;
        if p.lambda_points().is_empty() && p.z.is_empty() {
            return Err(Error::InvalidSystem("sampling plan is empty".into()));
        }
        let check = |name: &String| -> Result<()> {
            if self.coefficients.contains_key(name) {
                Ok(())
            } else {
                Err(Error::InvalidSystem(format!("unknown coefficient '{name}'")))
            }
        };
        for d in self.coefficients.values() {
            if let CoefficientDescriptor::Sum { terms } = d {
                terms.iter().try_for_each(check)?;
            }
        }
        if let Some(s) = &self.system {
            s.a.iter().chain(s.c.iter().flatten()).flatten().flatten().try_for_each(check)?;
        }
        if let Some(pc) = &self.pencil {
            pc.sigma.iter().chain(&pc.p0).try_for_each(check)?;
        }
        Ok(())
    }

    pub fn coefficient<T: Real>(&self, name: &str) -> Result<CoefficientFunction<T>> {
        self.coefficient_depth(name, 0)
    }

    fn coefficient_depth<T: Real>(&self, name: &str, depth: usize) -> Result<CoefficientFunction<T>> {
        if depth > 16 {
            return Err(Error::InvalidCoefficient(format!("'{name}': sums nested too deeply")));
        }
        let d = self
            .coefficients
            .get(name)
            .ok_or_else(|| Error::InvalidSystem(format!("unknown coefficient '{name}'")))?;
        let f = match d {
            CoefficientDescriptor::Zero => CoefficientFunction::zero(),
            CoefficientDescriptor::ExpDecay { c, beta, power } => {
                CoefficientFunction::exp_poly(cx(*c), *power, lit(*beta))?
            }
            CoefficientDescriptor::PiecewisePolynomial { knots, polys } => {
                let knots: Vec<T> = knots.iter().map(|&v| lit(v)).collect();
                let polys: Vec<Vec<C<T>>> = polys.iter().map(|p| p.iter().map(|&v| cx(v)).collect()).collect();
                CoefficientFunction::piecewise_polynomial(&knots, &polys)?
            }
            CoefficientDescriptor::Tabulated { xs, values } => {
                let xs: Vec<T> = xs.iter().map(|&v| lit(v)).collect();
                let vs: Vec<C<T>> = values.iter().map(|&v| cx(v)).collect();
                CoefficientFunction::tabulated(&xs, &vs)?
            }
            CoefficientDescriptor::Sum { terms } => {
                let mut f = CoefficientFunction::zero();
                for t in terms {
                    f = f.add(&self.coefficient_depth(t, depth + 1)?);
                }
                f
            }
        };
        Ok(f)
    }

    fn entry<T: Real>(&self, name: &Option<String>) -> Result<CoefficientFunction<T>> {
        match name {
            None => Ok(CoefficientFunction::zero()),
            Some(n) => self.coefficient(n),
        }
    }

    fn matrix<T: Real>(&self, rows: &[Vec<Option<String>>], n: usize) -> Result<Vec<CoefficientFunction<T>>> {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSystem(format!("matrix must be {n} x {n}")));
        }
        rows.iter().flatten().map(|e| self.entry(e)).collect()
    }

    /// The system of the scenario; for a pencil, its reduction.
    pub fn system_spec<T: Real>(&self) -> Result<SystemSpec<T>> {
        if let Some(s) = &self.system {
            let b: Vec<C<T>> = match &s.b {
                BDescriptor::Roots { roots } => odd_even_roots(*roots),
                BDescriptor::List(v) => v.iter().map(|&z| cx(z)).collect(),
            };
            let n = b.len();
            let a = self.matrix(&s.a, n)?;
            let c = s.c.iter().map(|m| self.matrix(m, n)).collect::<Result<Vec<_>>>()?;
            let rho = match &s.rho {
                WeightDescriptor::Constant { value } => WeightFunction::constant(lit(*value))?,
                WeightDescriptor::ConstantPlusExp { c0, c, beta } => {
                    WeightFunction::constant_plus_exp(lit(*c0), lit(*c), lit(*beta))?
                }
                WeightDescriptor::PiecewisePolynomial { knots, polys, tail } => {
                    let knots: Vec<T> = knots.iter().map(|&v| lit(v)).collect();
                    let polys: Vec<Vec<T>> = polys.iter().map(|p| p.iter().map(|&v| lit(v)).collect()).collect();
                    WeightFunction::piecewise_polynomial(&knots, &polys, lit(*tail))?
                }
                WeightDescriptor::Tabulated { xs, values } => {
                    let xs: Vec<T> = xs.iter().map(|&v| lit(v)).collect();
                    let vs: Vec<T> = values.iter().map(|&v| lit(v)).collect();
                    WeightFunction::tabulated(&xs, &vs)?
                }
            };
            return SystemSpec::new(b, a, c, rho);
        }
        crate::sturm::reduce_pencil(&self.pencil_spec()?)
    }

    pub fn pencil_spec<T: Real>(&self) -> Result<PencilSpec<T>> {
        let p = self
            .pencil
            .as_ref()
            .ok_or_else(|| Error::InvalidSystem(format!("scenario '{}' has no pencil", self.name)))?;
        PencilSpec::new(self.entry(&p.sigma)?, self.entry(&p.p0)?)
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}
