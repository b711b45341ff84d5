//! Magnetic frame flows on the quotient: right multiplication by the
//! one-parameter subgroup of M(lambda, B) = lambda*X - B*V, with regime
//! classification at the critical energy B^2/2 and exact period checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuchsian::FuchsianGroup;
use crate::sl2::{exp_raw, exp_sl2, mat_mul, mat_scale, AlgebraElement, GroupElement, Mat2};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Regime {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Energy/field data for the magnetic flow at speed lambda = sqrt(2E).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MagneticParams {
    pub field: f64,
    pub energy: f64,
    pub speed: f64,
    pub critical_energy: f64,
    pub regime: Regime,
    /// T_E = (B^2 - 2E)^(-1/2); the orbit closes after time 2*pi*T_E
    pub cyclotron_time: Option<f64>,
    /// sqrt(2E - B^2), the exponential separation rate above critical energy
    pub expansion_rate: Option<f64>,
}

/// Width of the band around the critical energy treated as parabolic.
pub const PARABOLIC_BAND: f64 = 1e-12;

pub fn classify(energy: f64, field: f64) -> Result<MagneticParams> {
    if !(field > 0.0) || !field.is_finite() {
        return Err(Error::Domain(format!("field must be positive, got {field}")));
    }
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(Error::Domain(format!("energy must be nonnegative, got {energy}")));
    }
    let critical = 0.5 * field * field;
    let regime = if (energy - critical).abs() <= PARABOLIC_BAND {
        Regime::Parabolic
    } else if energy < critical {
        Regime::Elliptic
    } else {
        Regime::Hyperbolic
    };
    Ok(MagneticParams {
        field,
        energy,
        speed: (2.0 * energy).sqrt(),
        critical_energy: critical,
        regime,
        cyclotron_time: match regime {
            Regime::Elliptic => Some((field * field - 2.0 * energy).powf(-0.5)),
            _ => None,
        },
        expansion_rate: match regime {
            Regime::Hyperbolic => Some((2.0 * energy - field * field).sqrt()),
            _ => None,
        },
    })
}

impl MagneticParams {
    pub fn generator(&self) -> AlgebraElement {
        magnetic_generator(self.speed, self.field)
    }

    /// Full period 2*pi*T_E of the elliptic flow.
    pub fn flow_period(&self) -> Option<f64> {
        self.cyclotron_time.map(|t| 2.0 * std::f64::consts::PI * t)
    }
}

/// [[lambda/2, -B/2], [B/2, -lambda/2]]; eigenvalues +-sqrt(lambda^2-B^2)/2.
pub fn magnetic_generator(speed: f64, field: f64) -> AlgebraElement {
    AlgebraElement::new(0.5 * speed, -0.5 * field, 0.5 * field)
}

/// Generator of the stable horocyclic flow, the nilpotent [[0,-1],[0,0]].
pub fn horocyclic_generator() -> AlgebraElement {
    AlgebraElement::geodesic_perp().sub(&AlgebraElement::fiber_rotation())
}

/// A point of the frame bundle in reduced form.
#[derive(Clone, Copy, Debug)]
pub struct FramePoint {
    pub rep: GroupElement,
}

impl FramePoint {
    pub fn reduced(group: &FuchsianGroup, g: &GroupElement) -> Result<Self> {
        Ok(FramePoint {
            rep: group.reduce(g)?,
        })
    }
}

/// Advance t time units, reducing every `reduce_every` units so matrix
/// entries stay O(1) along expanding orbits.
pub fn flow(
    group: &FuchsianGroup,
    params: &MagneticParams,
    p: &FramePoint,
    t: f64,
    reduce_every: f64,
) -> Result<FramePoint> {
    if !(reduce_every > 0.0) {
        return Err(Error::InvalidStep(format!(
            "reduce_every must be positive, got {reduce_every}"
        )));
    }
    if t == 0.0 {
        return Ok(*p);
    }
    let gen = params.generator();
    let n = (t.abs() / reduce_every).ceil() as u64;
    let dt = t / n as f64;
    let step = exp_sl2(&gen, dt);
    let mut cur = p.rep;
    for _ in 0..n {
        cur = group.reduce(&cur.compose(&step))?;
    }
    Ok(FramePoint { rep: cur })
}

/// Distance of exp(2*pi*T_E*M) from -I before sign canonicalization; the
/// elliptic orbit closes there in the projective group.
pub fn period_residual(energy: f64, field: f64) -> Result<f64> {
    let params = classify(energy, field)?;
    let t = params
        .flow_period()
        .ok_or_else(|| Error::Regime("period is defined only below critical energy".into()))?;
    let m = exp_raw(&params.generator(), t);
    let mut residual = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { -1.0 } else { 0.0 };
            residual = residual.max((m[i][j] - target).abs());
        }
    }
    Ok(residual)
}

/// Hyperbolic distance between the flow lines of g and g*exp(eps*P) at each
/// time, measured in the cover (no reduction). The conjugated perturbation
/// exp(-tM) exp(eps P) exp(tM) = exp(eps Ad_{exp(-tM)} P) carries the whole
/// separation, so its log is eps times the conjugated algebra element.
/// Conjugating in the algebra avoids the cancellation that forming the
/// near-identity group element and re-extracting its log would cost once
/// the factors reach e^{rate t}.
pub fn separation_curve(
    params: &MagneticParams,
    perturbation: &AlgebraElement,
    eps: f64,
    times: &[f64],
) -> Vec<f64> {
    let gen = params.generator();
    let p = perturbation.mat();
    times
        .iter()
        .map(|&t| {
            let fwd = exp_raw(&gen, t);
            let back = exp_raw(&gen, -t);
            let adp = mat_mul(&mat_mul(&back, &p), &fwd);
            let scaled = mat_scale(&adp, eps);
            (frob_sq_of(&scaled)).sqrt()
        })
        .collect()
}

fn frob_sq_of(m: &Mat2) -> f64 {
    m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]
}
