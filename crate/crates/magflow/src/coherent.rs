//! Scalar models of lowest-band localized states: Laguerre polynomials with
//! exact rational coefficients, Gaussian radial profiles under two scaling
//! conventions, and quadrature diagnostics of their total mass.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::integrate_adaptive;

const MAX_DEGREE: usize = 64;

/// Q_m(t) = (1/m!)(d/dt - 1)^m t^m, the standard Laguerre polynomial;
/// coefficients exact, ascending in the power of t.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaguerreQ {
    pub m: usize,
    pub coefficients: Vec<BigRational>,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Three-term recurrence (m+1) L_{m+1} = (2m+1 - t) L_m - m L_{m-1}.
pub fn laguerre_q(m: usize) -> Result<LaguerreQ> {
    if m > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(format!(
            "rational Laguerre coefficients are capped at degree {MAX_DEGREE}, got {m}"
        )));
    }
    let mut prev = vec![BigRational::one()];
    if m == 0 {
        return Ok(LaguerreQ {
            m,
            coefficients: prev,
        });
    }
    let mut cur = vec![BigRational::one(), -BigRational::one()];
    for n in 1..m {
        let mut next = vec![BigRational::zero(); n + 2];
        let a = big(2 * n as i64 + 1);
        let scale = big(n as i64 + 1);
        for (j, c) in cur.iter().enumerate() {
            next[j] += &a * c;
            next[j + 1] -= c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= big(n as i64) * c;
        }
        for c in &mut next {
            *c /= scale.clone();
        }
        prev = cur;
        cur = next;
    }
    Ok(LaguerreQ {
        m,
        coefficients: cur,
    })
}

/// Literal expansion of (d/dt - 1)^m t^m / m!; oracle for small degrees.
pub fn laguerre_q_symbolic(m: usize) -> Result<LaguerreQ> {
    if m > 8 {
        return Err(Error::UnsupportedDegree(format!(
            "symbolic expansion oracle is for m <= 8, got {m}"
        )));
    }
    // start from t^m, apply (d/dt - 1) m times, divide by m!
    let mut p = vec![BigRational::zero(); m + 1];
    p[m] = BigRational::one();
    for _ in 0..m {
        let mut next = vec![BigRational::zero(); p.len()];
        for (j, c) in p.iter().enumerate() {
            if j > 0 {
                next[j - 1] += big(j as i64) * c;
            }
            next[j] -= c;
        }
        p = next;
    }
    let mut factorial = BigRational::one();
    for j in 1..=m {
        factorial *= big(j as i64);
    }
    for c in &mut p {
        *c = &*c / &factorial;
    }
    while p.len() > 1 && p.last().map(|c| c.is_zero()) == Some(true) {
        p.pop();
    }
    Ok(LaguerreQ {
        m,
        coefficients: p,
    })
}

impl LaguerreQ {
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coefficients.iter().rev() {
            acc = acc * t + c.to_f64().expect("coefficient fits in f64");
        }
        acc
    }

    pub fn at_zero(&self) -> BigRational {
        self.coefficients[0].clone()
    }

    pub fn leading(&self) -> BigRational {
        self.coefficients
            .last()
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }
}

/// The polynomial argument of the radial profile: the bare form uses k r^2,
/// the unit-norm form k r^2 / 2 (the Euclidean Landau kernel scaling, under
/// which the squared profile integrates to k/2pi for every level).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScalingConvention {
    BareArgument,
    UnitNorm,
}

/// amplitude(r) = (k/2pi) exp(-k r^2/4) Q_m(argument)
pub fn profile(k: u64, m: usize, r: f64, convention: ScalingConvention) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    let q = laguerre_q(m)?;
    Ok(profile_with(&q, k, r, convention))
}

fn profile_with(q: &LaguerreQ, k: u64, r: f64, convention: ScalingConvention) -> f64 {
    let kf = k as f64;
    let arg = match convention {
        ScalingConvention::BareArgument => kf * r * r,
        ScalingConvention::UnitNorm => 0.5 * kf * r * r,
    };
    kf / (2.0 * std::f64::consts::PI) * (-0.25 * kf * r * r).exp() * q.evaluate(arg)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormDiagnostic {
    pub k: u64,
    pub m: usize,
    /// 2pi int |profile|^2 r dr under the bare argument
    pub bare_mass: f64,
    /// same under the unit-norm argument
    pub unit_mass: f64,
    /// the reference density k/2pi
    pub reference: f64,
    pub bare_ratio: f64,
    pub unit_ratio: f64,
    /// set when the bare convention misses the reference mass
    pub flagged: bool,
}

/// Total squared mass 2pi int_0^infty |profile|^2 r dr for both conventions.
pub fn norm_diagnostic(k: u64, m: usize) -> Result<NormDiagnostic> {
    if k < 4 {
        return Err(Error::Domain(format!(
            "mass quadrature needs k >= 4, got {k}"
        )));
    }
    let q = laguerre_q(m)?;
    // integrand decays like exp(-k r^2/2) times a polynomial; beyond
    // u = k r^2/2 = 60 + 14 m the tail is below 1e-20
    let r_max = (2.0 * (60.0 + 14.0 * m as f64) / k as f64).sqrt();
    let mass = |conv: ScalingConvention| -> Result<f64> {
        let f = |r: f64| {
            let a = profile_with(&q, k, r, conv);
            2.0 * std::f64::consts::PI * a * a * r
        };
        integrate_adaptive(&f, 0.0, r_max, 1e-12)
    };
    let bare_mass = mass(ScalingConvention::BareArgument)?;
    let unit_mass = mass(ScalingConvention::UnitNorm)?;
    let reference = k as f64 / (2.0 * std::f64::consts::PI);
    let bare_ratio = bare_mass / reference;
    let unit_ratio = unit_mass / reference;
    Ok(NormDiagnostic {
        k,
        m,
        bare_mass,
        unit_mass,
        reference,
        bare_ratio,
        unit_ratio,
        flagged: (bare_ratio - 1.0).abs() > 1e-3,
    })
}
