//! Observables on the frame bundle and the averaging machinery: Liouville
//! references by Monte Carlo, Birkhoff averages along the magnetic flow,
//! decay-exponent fitting at critical energy, and orbit averages below it.

use num::complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{classify, FramePoint, MagneticParams, Regime};
use crate::fuchsian::FuchsianGroup;
use crate::numerics::{gauss_legendre, linear_fit};
use crate::par;
use crate::sl2::{
    exp_raw, exp_sl2, fiber_phase_of, frame_from_disk, mat_det, mat_mul, mat_scale, GroupElement,
    Mat2,
};

/// Terms with exponent beyond this contribute < 1e-13 each and are skipped;
/// the word ball is sorted by displacement, so the scan stops at the first
/// skippable term.
const EXPONENT_CUTOFF: f64 = 30.0;

fn frob_sq(m: &Mat2) -> f64 {
    m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]
}

/// Truncated Poincaré series over a word ball: the term for gamma is
/// exp(-(|gamma g c^-1|_F^2 - 2) / width^2), which is 1 when gamma g = c.
/// |M|_F^2 = 2 cosh d(o, M o) ties the exponent to hyperbolic displacement,
/// giving automorphy up to a super-exponentially small truncation tail.
pub struct PoincareBump {
    center_inv: Mat2,
    width: f64,
    word_len: usize,
    /// (element matrix, displacement), ascending
    ball: Vec<(Mat2, f64)>,
    /// terms beyond displacement D + skip_delta are below the cutoff
    skip_delta: f64,
    base_only: bool,
    center_base: Complex64,
}

impl PoincareBump {
    pub fn new(
        group: &FuchsianGroup,
        center: &GroupElement,
        width: f64,
        word_len: usize,
    ) -> Result<Self> {
        if !(0.05..=2.0).contains(&width) {
            return Err(Error::Domain(format!(
                "bump width must lie in [0.05, 2], got {width}"
            )));
        }
        if word_len > 5 {
            return Err(Error::Domain(format!(
                "word ball length capped at 5, got {word_len}"
            )));
        }
        let ball = group
            .word_ball(word_len)
            .into_iter()
            .map(|b| (*b.element.entries(), b.displacement))
            .collect();
        let identity = GroupElement::identity();
        Ok(PoincareBump {
            center_inv: *center.inverse().entries(),
            width,
            word_len,
            ball,
            skip_delta: (1.0 + 0.5 * EXPONENT_CUTOFF * width * width).acosh(),
            base_only: center.entrywise_distance(&identity) < 1e-14,
            center_base: center.disk_point(),
        })
    }

    /// Series value with each term weighted by the n-th power of its own
    /// relative fiber phase; n = 0 is the plain bump. Centered at the
    /// identity this has exact rotation type n in the fiber.
    fn eval_with_phase(&self, g: &Mat2, n: i32) -> Complex64 {
        let h = mat_mul(g, &self.center_inv);
        let d_here = (0.5 * frob_sq(&h)).max(1.0).acosh();
        let w2 = self.width * self.width;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(gamma, disp) in &self.ball {
            if disp - d_here > self.skip_delta {
                break;
            }
            let m = mat_mul(&gamma, &h);
            let e = (frob_sq(&m) - 2.0) / w2;
            if e > EXPONENT_CUTOFF {
                continue;
            }
            let t = (-e).exp();
            if n == 0 {
                acc.re += t;
            } else {
                acc += t * fiber_phase_of(&m).powi(n);
            }
        }
        acc
    }
}

/// Radial factor of a fiber harmonic: a constant or an identity-centered bump.
pub enum RadialPart {
    Constant(f64),
    Bump(PoincareBump),
}

/// Test functions for the averaging experiments. `Bump` is a Poincaré series
/// on the frame bundle; `FiberHarmonic` carries rotation type n in the fiber,
/// either as a phase-weighted series (bump radial, exactly automorphic up to
/// truncation) or as the bare harmonic on canonical representatives
/// (constant radial: a section function, integrable but coordinate-chosen).
pub enum Observable {
    Bump(PoincareBump),
    FiberHarmonic { n: i32, radial: RadialPart },
}

impl Observable {
    pub fn bump(
        group: &FuchsianGroup,
        center: &GroupElement,
        width: f64,
        word_len: usize,
    ) -> Result<Self> {
        Ok(Observable::Bump(PoincareBump::new(
            group, center, width, word_len,
        )?))
    }

    pub fn harmonic_constant(n: i32, value: f64) -> Self {
        Observable::FiberHarmonic {
            n,
            radial: RadialPart::Constant(value),
        }
    }

    pub fn harmonic_bump(
        group: &FuchsianGroup,
        n: i32,
        width: f64,
        word_len: usize,
    ) -> Result<Self> {
        Ok(Observable::FiberHarmonic {
            n,
            radial: RadialPart::Bump(PoincareBump::new(
                group,
                &GroupElement::identity(),
                width,
                word_len,
            )?),
        })
    }

    pub fn eval(&self, g: &GroupElement) -> Complex64 {
        self.eval_mat(g.entries())
    }

    pub(crate) fn eval_mat(&self, m: &Mat2) -> Complex64 {
        match self {
            Observable::Bump(b) => b.eval_with_phase(m, 0),
            Observable::FiberHarmonic { n, radial } => match radial {
                RadialPart::Constant(v) => {
                    if *n == 0 {
                        Complex64::new(*v, 0.0)
                    } else {
                        *v * fiber_phase_of(m).powi(*n)
                    }
                }
                RadialPart::Bump(b) => b.eval_with_phase(m, *n),
            },
        }
    }

    /// True when the value depends only on the base point; required for
    /// averaged potentials.
    pub fn fiber_free(&self) -> bool {
        match self {
            Observable::Bump(b) => b.base_only,
            Observable::FiberHarmonic { n, .. } => *n == 0,
        }
    }

    /// Fiber integral vanishes identically (rotation type n != 0).
    fn analytic_fiber_zero(&self) -> bool {
        matches!(self, Observable::FiberHarmonic { n, .. } if *n != 0)
    }

    /// Section functions read their value off a chosen representative, so
    /// reducing mid-orbit would make them jump at the domain walls. Orbit
    /// quadrature follows the continuous lift for these instead.
    pub(crate) fn section(&self) -> bool {
        matches!(
            self,
            Observable::FiberHarmonic {
                n,
                radial: RadialPart::Constant(_)
            } if *n != 0
        )
    }

    pub fn is_real(&self) -> bool {
        match self {
            Observable::Bump(_) => true,
            Observable::FiberHarmonic { n, .. } => *n == 0,
        }
    }

    pub fn id(&self) -> String {
        match self {
            Observable::Bump(b) => format!(
                "bump(w={},len={},center={:.4}{:+.4}i)",
                b.width, b.word_len, b.center_base.re, b.center_base.im
            ),
            Observable::FiberHarmonic { n, radial } => match radial {
                RadialPart::Constant(v) => format!("harmonic(n={n},const={v})"),
                RadialPart::Bump(b) => format!("harmonic(n={n},w={},len={})", b.width, b.word_len),
            },
        }
    }
}

/// The five-observable reference suite: two bumps probing the base and three
/// fiber harmonics probing rotation equidistribution.
pub fn standard_suite(group: &FuchsianGroup) -> Result<Vec<Observable>> {
    let off_center = frame_from_disk(Complex64::new(0.35, 0.2), 0.7)?;
    Ok(vec![
        Observable::bump(group, &GroupElement::identity(), 0.6, 4)?,
        Observable::bump(group, &off_center, 0.45, 4)?,
        Observable::harmonic_constant(1, 1.0),
        Observable::harmonic_constant(2, 1.0),
        Observable::harmonic_constant(3, 1.0),
    ])
}

#[derive(Clone, Copy, Debug)]
pub struct LiouvilleEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: u64,
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

fn sample_domain_capped<R: Rng>(group: &FuchsianGroup, rng: &mut R) -> Result<Complex64> {
    let cover = group.cover_radius();
    let span = cover.cosh() - 1.0;
    for _ in 0..10_000 {
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let rho = (1.0 + u * span).acosh();
        let r = (rho * 0.5).tanh();
        let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * v);
        if group.is_in_domain(z) {
            return Ok(z);
        }
    }
    Err(Error::Domain(
        "domain sampler rejected 10000 consecutive draws".into(),
    ))
}

/// Liouville (normalized area x uniform fiber) average by Monte Carlo over
/// the fundamental domain. Deterministic in (seed, n_samples) and identical
/// across thread counts. Harmonics of nonzero rotation type integrate to
/// zero analytically; for those the mean is returned as exactly 0 and the
/// standard error is measured from the radial magnitude.
pub fn liouville_average(
    group: &FuchsianGroup,
    obs: &Observable,
    n_samples: u64,
    seed: u64,
) -> Result<LiouvilleEstimate> {
    if n_samples < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 samples, got {n_samples}"
        )));
    }
    const BATCH: u64 = 1024;
    let n_batches = n_samples.div_ceil(BATCH);
    let analytic_zero = obs.analytic_fiber_zero();
    // per batch: (sum_re, sum_im, sumsq) with sumsq of |f| when the mean is
    // analytically zero, else of the real and imaginary parts
    let partials: Vec<Result<(f64, f64, f64, f64)>> = par::run_indexed(
        n_batches as usize,
        |b| {
            let b = b as u64;
            let count = BATCH.min(n_samples - b * BATCH);
            let mut rng = par::task_rng(seed, par::DOMAIN_LIOUVILLE, b);
            let mut s_re = Kahan::default();
            let mut s_im = Kahan::default();
            let mut s_sq_re = Kahan::default();
            let mut s_sq_im = Kahan::default();
            for _ in 0..count {
                let z = sample_domain_capped(group, &mut rng)?;
                let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let frame = frame_from_disk(z, theta)?;
                let v = obs.eval(&frame);
                if analytic_zero {
                    let m = v.norm();
                    s_re.add(m);
                    s_sq_re.add(m * m);
                } else {
                    s_re.add(v.re);
                    s_im.add(v.im);
                    s_sq_re.add(v.re * v.re);
                    s_sq_im.add(v.im * v.im);
                }
            }
            Ok((s_re.sum, s_im.sum, s_sq_re.sum, s_sq_im.sum))
        },
        false,
    );
    let mut t_re = 0.0;
    let mut t_im = 0.0;
    let mut t_sq = 0.0;
    for p in partials {
        let (re, im, sq_re, sq_im) = p?;
        t_re += re;
        t_im += im;
        t_sq += sq_re + sq_im;
    }
    let n = n_samples as f64;
    if analytic_zero {
        // variance of the modulus estimates the sampling scale
        let var = (t_sq / n - (t_re / n) * (t_re / n)).max(0.0);
        return Ok(LiouvilleEstimate {
            mean: Complex64::new(0.0, 0.0),
            stderr: (var / n).sqrt(),
            samples: n_samples,
        });
    }
    let mean = Complex64::new(t_re / n, t_im / n);
    let var = (t_sq / n - mean.norm_sqr()).max(0.0);
    Ok(LiouvilleEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples: n_samples,
    })
}

/// Deterministic scattered initial frames, one rng stream per start.
pub fn scattered_starts(group: &FuchsianGroup, n: usize, seed: u64) -> Result<Vec<FramePoint>> {
    (0..n)
        .map(|i| {
            let mut rng = par::task_rng(seed, par::DOMAIN_DECAY_STARTS, i as u64);
            let z = sample_domain_capped(group, &mut rng)?;
            let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            FramePoint::reduced(group, &frame_from_disk(z, theta)?)
        })
        .collect()
}

/// Step-by-step orbit walker: exact exponential step, reduction every step,
/// determinant renormalization every 1024 steps.
struct Walker<'g> {
    group: &'g FuchsianGroup,
    cur: Mat2,
    step: Mat2,
    steps: u64,
}

impl<'g> Walker<'g> {
    fn new(group: &'g FuchsianGroup, start: &FramePoint, params: &MagneticParams, dt: f64) -> Self {
        Walker {
            group,
            cur: *start.rep.entries(),
            step: exp_raw(&params.generator(), dt),
            steps: 0,
        }
    }

    fn advance(&mut self) -> Result<()> {
        self.cur = mat_mul(&self.cur, &self.step);
        self.steps += 1;
        if self.steps.is_multiple_of(1024) {
            let d = mat_det(&self.cur);
            if (d - 1.0).abs() > 1e-13 {
                self.cur = mat_scale(&self.cur, d.sqrt().recip());
            }
        }
        self.group.descend_in_place(&mut self.cur)?;
        Ok(())
    }
}

fn check_birkhoff_args(t_final: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(Error::InvalidStep(format!(
            "birkhoff step must lie in (0, 0.05], got {dt}"
        )));
    }
    if !(t_final >= 1.0) {
        return Err(Error::Domain(format!(
            "birkhoff horizon must be >= 1, got {t_final}"
        )));
    }
    Ok(())
}

/// Running trapezoid averages of a whole observable suite along one orbit,
/// snapshotted at the grid times. Returns [observable][grid point].
pub fn birkhoff_curve_suite(
    group: &FuchsianGroup,
    suite: &[Observable],
    start: &FramePoint,
    energy: f64,
    field: f64,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let t_final = *t_grid
        .last()
        .ok_or_else(|| Error::Domain("empty time grid".into()))?;
    check_birkhoff_args(t_final, dt)?;
    for w in t_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
    }
    if t_grid[0] <= 0.0 {
        return Err(Error::Domain("grid times must be positive".into()));
    }
    let params = classify(energy, field)?;
    let n = (t_final / dt).round().max(1.0) as u64;
    let dt_eff = t_final / n as f64;
    let snap: Vec<u64> = t_grid
        .iter()
        .map(|&t| ((t / dt_eff).round() as u64).clamp(1, n))
        .collect();

    let mut walker = Walker::new(group, start, &params, dt_eff);
    let k = suite.len();
    let mut prefix_re = vec![Kahan::default(); k];
    let mut prefix_im = vec![Kahan::default(); k];
    let mut first = vec![Complex64::new(0.0, 0.0); k];
    let mut out = vec![vec![Complex64::new(0.0, 0.0); t_grid.len()]; k];
    let mut snap_cursor = 0usize;
    for j in 0..=n {
        let mut vals = Vec::with_capacity(k);
        for (i, obs) in suite.iter().enumerate() {
            let v = obs.eval_mat(&walker.cur);
            prefix_re[i].add(v.re);
            prefix_im[i].add(v.im);
            if j == 0 {
                first[i] = v;
            }
            vals.push(v);
        }
        while snap_cursor < snap.len() && snap[snap_cursor] == j {
            for i in 0..k {
                let trap = Complex64::new(
                    prefix_re[i].sum - 0.5 * (first[i].re + vals[i].re),
                    prefix_im[i].sum - 0.5 * (first[i].im + vals[i].im),
                );
                out[i][snap_cursor] = trap / j as f64;
            }
            snap_cursor += 1;
        }
        if j < n {
            walker.advance()?;
        }
    }
    Ok(out)
}

/// Trapezoid Birkhoff average (1/T) int_0^T f(orbit(t)) dt with exact
/// exponential stepping.
pub fn birkhoff(
    group: &FuchsianGroup,
    obs: &Observable,
    start: &FramePoint,
    energy: f64,
    field: f64,
    t_final: f64,
    dt: f64,
) -> Result<Complex64> {
    let suite = std::slice::from_ref(obs);
    let curves = birkhoff_curve_suite(group, suite, start, energy, field, &[t_final], dt)?;
    Ok(curves[0][0])
}

/// Per-start Birkhoff averages over a deterministic scattered ensemble.
#[allow(clippy::too_many_arguments)]
pub fn birkhoff_ensemble(
    group: &FuchsianGroup,
    obs: &Observable,
    energy: f64,
    field: f64,
    n_starts: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    birkhoff_ensemble_impl(group, obs, energy, field, n_starts, t_final, dt, seed, false)
}

/// Sequential twin of `birkhoff_ensemble`; bit-identical output.
#[allow(clippy::too_many_arguments)]
pub fn birkhoff_ensemble_sequential(
    group: &FuchsianGroup,
    obs: &Observable,
    energy: f64,
    field: f64,
    n_starts: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    birkhoff_ensemble_impl(group, obs, energy, field, n_starts, t_final, dt, seed, true)
}

#[allow(clippy::too_many_arguments)]
fn birkhoff_ensemble_impl(
    group: &FuchsianGroup,
    obs: &Observable,
    energy: f64,
    field: f64,
    n_starts: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
    force_seq: bool,
) -> Result<Vec<Complex64>> {
    let starts = scattered_starts(group, n_starts, seed)?;
    let results: Vec<Result<Complex64>> = par::run_indexed(
        n_starts,
        |i| birkhoff(group, obs, &starts[i], energy, field, t_final, dt),
        force_seq,
    );
    results.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableDecay {
    pub id: String,
    /// Liouville reference as (re, im)
    pub liouville: [f64; 2],
    pub liouville_stderr: f64,
    /// sup over starts of |Birkhoff(T) - Liouville| per grid time
    pub discrepancy: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub field: f64,
    pub energy: f64,
    pub dt: f64,
    pub n_starts: usize,
    pub t_grid: Vec<f64>,
    pub observables: Vec<ObservableDecay>,
    /// sup over observables and starts per grid time
    pub sup_discrepancy: Vec<f64>,
    /// minus the log-log slope of sup_discrepancy, None if everything is
    /// already at rounding level
    pub theta_hat: Option<f64>,
    /// decay exponent consistent with theta < 1/2 and theta(1-theta) <= lambda1
    pub theta_target: f64,
}

/// theta bound from the spectral gap: the positive branch of
/// theta(1-theta) = lambda1 capped strictly below 1/2.
pub fn theta_target(lambda1: f64) -> f64 {
    let disc = (1.0 - 4.0 * lambda1).max(0.0);
    (0.5 * (1.0 - disc.sqrt())).min(0.5 - 1e-6)
}

/// Equidistribution decay at critical energy: walk each start once to the
/// largest grid time, snapshot running Birkhoff averages, compare with
/// Liouville references, and fit the decay exponent of the sup discrepancy.
#[allow(clippy::too_many_arguments)]
pub fn decay_curve(
    group: &FuchsianGroup,
    suite: &[Observable],
    starts: &[FramePoint],
    field: f64,
    t_grid: &[f64],
    dt: f64,
    ref_samples: u64,
    seed: u64,
    lambda1: f64,
) -> Result<DecayReport> {
    if starts.len() < 5 {
        return Err(Error::Domain(format!(
            "need at least 5 starts, got {}",
            starts.len()
        )));
    }
    if t_grid.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 grid times, got {}",
            t_grid.len()
        )));
    }
    let span = t_grid[t_grid.len() - 1] / t_grid[0];
    if !(span >= 10.0f64.powf(1.5)) {
        return Err(Error::Domain(format!(
            "grid must span at least 1.5 decades, got factor {span}"
        )));
    }
    let energy = 0.5 * field * field;

    let refs: Vec<LiouvilleEstimate> = suite
        .iter()
        .map(|obs| liouville_average(group, obs, ref_samples, seed))
        .collect::<Result<Vec<_>>>()?;

    // [start][observable][grid]
    let walks: Vec<Result<Vec<Vec<Complex64>>>> = par::run_indexed(
        starts.len(),
        |s| birkhoff_curve_suite(group, suite, &starts[s], energy, field, t_grid, dt),
        false,
    );
    let walks = walks.into_iter().collect::<Result<Vec<_>>>()?;

    let mut observables = Vec::with_capacity(suite.len());
    for (i, obs) in suite.iter().enumerate() {
        let mut disc = vec![0.0f64; t_grid.len()];
        for walk in &walks {
            for (ti, d) in disc.iter_mut().enumerate() {
                *d = d.max((walk[i][ti] - refs[i].mean).norm());
            }
        }
        observables.push(ObservableDecay {
            id: obs.id(),
            liouville: [refs[i].mean.re, refs[i].mean.im],
            liouville_stderr: refs[i].stderr,
            discrepancy: disc,
        });
    }
    let sup_discrepancy: Vec<f64> = (0..t_grid.len())
        .map(|ti| {
            observables
                .iter()
                .map(|o| o.discrepancy[ti])
                .fold(0.0, f64::max)
        })
        .collect();

    let theta_hat = if sup_discrepancy.iter().all(|&d| d < 1e-12) {
        None
    } else {
        let log_t: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
        let log_d: Vec<f64> = sup_discrepancy.iter().map(|d| d.max(1e-300).ln()).collect();
        Some(-linear_fit(&log_t, &log_d).0)
    };

    Ok(DecayReport {
        field,
        energy,
        dt,
        n_starts: starts.len(),
        t_grid: t_grid.to_vec(),
        observables,
        sup_discrepancy,
        theta_hat,
        theta_target: theta_target(lambda1),
    })
}

/// Average over one exact cyclotron period by 64-node Gauss-Legendre
/// quadrature; each node is reached by a direct exponential from the start.
pub fn orbit_average(
    group: &FuchsianGroup,
    obs: &Observable,
    start: &FramePoint,
    energy: f64,
    field: f64,
) -> Result<Complex64> {
    orbit_average_n(group, obs, start, energy, field, 64)
}

pub(crate) fn orbit_average_n(
    group: &FuchsianGroup,
    obs: &Observable,
    start: &FramePoint,
    energy: f64,
    field: f64,
    nodes: usize,
) -> Result<Complex64> {
    let params = classify(energy, field)?;
    if params.regime != Regime::Elliptic {
        return Err(Error::Regime(format!(
            "orbit averages need the elliptic regime, energy {energy} >= critical {}",
            params.critical_energy
        )));
    }
    let period = params.flow_period().expect("elliptic flow has a period");
    let gen = params.generator();
    let (xs, ws) = gauss_legendre(nodes);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in xs.iter().zip(&ws) {
        let t = 0.5 * period * (x + 1.0);
        if obs.section() {
            // continuous lift: raw products keep the integrand smooth
            let m = mat_mul(start.rep.entries(), &exp_raw(&gen, t));
            acc += w * obs.eval_mat(&m);
        } else {
            let g = group.reduce(&start.rep.compose(&exp_sl2(&gen, t)))?;
            acc += w * obs.eval(&g);
        }
    }
    // weights sum to 2: averaging absorbs the half-length factor
    Ok(acc / 2.0)
}

/// Orbit average of a base potential (fiber-independent observable); the
/// classical averaged potential.
pub fn averaged_potential(
    group: &FuchsianGroup,
    potential: &Observable,
    start: &FramePoint,
    energy: f64,
    field: f64,
) -> Result<f64> {
    if !potential.fiber_free() {
        return Err(Error::InvalidObservable(
            "averaged potentials require a fiber-independent observable".into(),
        ));
    }
    Ok(orbit_average(group, potential, start, energy, field)?.re)
}

/// |<V>(flow_s z) - <V>(z)|; vanishes up to quadrature error because the
/// average is taken over a full period.
pub fn drift_invariance(
    group: &FuchsianGroup,
    potential: &Observable,
    start: &FramePoint,
    energy: f64,
    field: f64,
    s: f64,
) -> Result<f64> {
    let base = averaged_potential(group, potential, start, energy, field)?;
    let params = classify(energy, field)?;
    let shifted = crate::flows::flow(group, &params, start, s, 1.0)?;
    let moved = averaged_potential(group, potential, &shifted, energy, field)?;
    Ok((moved - base).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bolza() -> FuchsianGroup {
        FuchsianGroup::bolza()
    }

    #[test]
    fn bump_peaks_at_center_and_localizes() {
        let g = bolza();
        let center = frame_from_disk(Complex64::new(0.1, -0.2), 0.4).unwrap();
        let bump = Observable::bump(&g, &center, 0.5, 4).unwrap();
        let at_center = bump.eval(&center);
        // identity term is 1 up to roundoff in the exponent; the rest is a
        // positive tail bounded by the systole
        assert!(at_center.re >= 1.0 - 1e-12);
        assert!(at_center.im == 0.0);

        // narrow bump at hyperbolic distance 1: exponent (2 cosh 1 - 2)/w^2
        let narrow = Observable::bump(&g, &GroupElement::identity(), 0.05, 2).unwrap();
        let far = frame_from_disk(Complex64::new(0.5f64.tanh(), 0.0), 0.0).unwrap();
        assert!(narrow.eval(&far).re < 1e-10);
    }

    #[test]
    fn bump_is_automorphic_up_to_truncation() {
        let g = bolza();
        let center = frame_from_disk(Complex64::new(0.15, 0.1), 0.9).unwrap();
        let suite = [
            Observable::bump(&g, &center, 0.5, 4).unwrap(),
            Observable::harmonic_bump(&g, 2, 0.5, 4).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let z = Complex64::new(rng.gen::<f64>() * 0.8 - 0.4, rng.gen::<f64>() * 0.8 - 0.4);
            let p = frame_from_disk(z, rng.gen::<f64>() * std::f64::consts::TAU).unwrap();
            for obs in &suite {
                let v = obs.eval(&p);
                for gamma in g.generators() {
                    let w = obs.eval(&gamma.compose(&p));
                    assert!(
                        (v - w).norm() <= 1e-6,
                        "invariance defect {} for {}",
                        (v - w).norm(),
                        obs.id()
                    );
                }
            }
        }
    }

    #[test]
    fn liouville_constant_is_exact() {
        let g = bolza();
        let one = Observable::harmonic_constant(0, 1.0);
        let est = liouville_average(&g, &one, 5000, 7).unwrap();
        assert_eq!(est.mean.re, 1.0);
        assert_eq!(est.mean.im, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn liouville_harmonic_is_exactly_zero() {
        let g = bolza();
        let h3 = Observable::harmonic_constant(3, 1.0);
        let est = liouville_average(&g, &h3, 2000, 7).unwrap();
        assert_eq!(est.mean.re, 0.0);
        assert_eq!(est.mean.im, 0.0);
        let hb = Observable::harmonic_bump(&g, 1, 0.6, 3).unwrap();
        let est = liouville_average(&g, &hb, 2000, 7).unwrap();
        assert_eq!(est.mean.norm(), 0.0);
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn liouville_is_deterministic_and_converges() {
        let g = bolza();
        let bump = Observable::bump(&g, &GroupElement::identity(), 0.6, 3).unwrap();
        let a = liouville_average(&g, &bump, 20_000, 11).unwrap();
        let b = liouville_average(&g, &bump, 20_000, 11).unwrap();
        assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
        let wide = liouville_average(&g, &bump, 80_000, 13).unwrap();
        assert!(
            (a.mean.re - wide.mean.re).abs() <= 3.0 * (a.stderr + wide.stderr),
            "MC estimates disagree: {} vs {}",
            a.mean.re,
            wide.mean.re
        );
    }

    #[test]
    fn birkhoff_of_constant_is_one() {
        let g = bolza();
        let one = Observable::harmonic_constant(0, 1.0);
        let start = scattered_starts(&g, 1, 3).unwrap()[0];
        let avg = birkhoff(&g, &one, &start, 0.5, 1.0, 10.0, 0.05).unwrap();
        assert_eq!(avg.re, 1.0);
        assert_eq!(avg.im, 0.0);
    }

    #[test]
    fn birkhoff_halves_average_to_the_whole() {
        let g = bolza();
        let center = frame_from_disk(Complex64::new(0.2, 0.05), 0.3).unwrap();
        let bump = Observable::bump(&g, &center, 0.5, 3).unwrap();
        let start = scattered_starts(&g, 1, 5).unwrap()[0];
        let (energy, field) = (0.5, 1.0);
        let t = 40.0;
        let dt = 0.05;
        let full = birkhoff(&g, &bump, &start, energy, field, 2.0 * t, dt).unwrap();
        let first = birkhoff(&g, &bump, &start, energy, field, t, dt).unwrap();
        let params = classify(energy, field).unwrap();
        let mid = crate::flows::flow(&g, &params, &start, t, dt).unwrap();
        let second = birkhoff(&g, &bump, &mid, energy, field, t, dt).unwrap();
        let recombined = (first + second) / 2.0;
        assert!(
            (full - recombined).norm() < 1e-12,
            "additivity defect {}",
            (full - recombined).norm()
        );
    }

    #[test]
    fn birkhoff_rejects_bad_steps() {
        let g = bolza();
        let one = Observable::harmonic_constant(0, 1.0);
        let start = scattered_starts(&g, 1, 3).unwrap()[0];
        assert!(matches!(
            birkhoff(&g, &one, &start, 0.5, 1.0, 10.0, 0.2),
            Err(Error::InvalidStep(_))
        ));
        assert!(matches!(
            birkhoff(&g, &one, &start, 0.5, 1.0, 0.5, 0.02),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn orbit_average_basics() {
        let g = bolza();
        let start = scattered_starts(&g, 1, 9).unwrap()[0];
        let one = Observable::harmonic_constant(0, 1.0);
        let avg = orbit_average(&g, &one, &start, 0.3, 1.0).unwrap();
        assert!((avg.re - 1.0).abs() < 1e-13);

        assert!(matches!(
            orbit_average(&g, &one, &start, 0.5, 1.0),
            Err(Error::Regime(_))
        ));

        // invariance along the orbit
        let center = frame_from_disk(Complex64::new(0.1, 0.15), 0.0).unwrap();
        let bump = Observable::bump(&g, &center, 0.6, 3).unwrap();
        let base = orbit_average(&g, &bump, &start, 0.3, 1.0).unwrap();
        let params = classify(0.3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let s = rng.gen::<f64>() * 7.0;
            let moved = crate::flows::flow(&g, &params, &start, s, 1.0).unwrap();
            let shifted = orbit_average(&g, &bump, &moved, 0.3, 1.0).unwrap();
            assert!(
                (shifted - base).norm() < 1e-8,
                "orbit average drifted by {}",
                (shifted - base).norm()
            );
        }

        // quadrature refinement oracle
        let coarse = orbit_average_n(&g, &bump, &start, 0.3, 1.0, 64).unwrap();
        let fine = orbit_average_n(&g, &bump, &start, 0.3, 1.0, 640).unwrap();
        assert!((coarse - fine).norm() < 1e-10);

        // harmonic observable through the same quadrature
        let harm = Observable::harmonic_constant(2, 1.0);
        let c = orbit_average_n(&g, &harm, &start, 0.3, 1.0, 64).unwrap();
        let f = orbit_average_n(&g, &harm, &start, 0.3, 1.0, 640).unwrap();
        assert!((c - f).norm() < 1e-10);
    }

    #[test]
    fn averaged_potential_contract() {
        let g = bolza();
        let start = scattered_starts(&g, 1, 21).unwrap()[0];
        let constant = Observable::harmonic_constant(0, 2.5);
        let v = averaged_potential(&g, &constant, &start, 0.2, 1.0).unwrap();
        assert!((v - 2.5).abs() < 1e-12);

        let fiber_dependent = Observable::harmonic_constant(2, 1.0);
        assert!(matches!(
            averaged_potential(&g, &fiber_dependent, &start, 0.2, 1.0),
            Err(Error::InvalidObservable(_))
        ));
        let off_center = frame_from_disk(Complex64::new(0.3, 0.0), 0.5).unwrap();
        let frame_bump = Observable::bump(&g, &off_center, 0.5, 3).unwrap();
        assert!(matches!(
            averaged_potential(&g, &frame_bump, &start, 0.2, 1.0),
            Err(Error::InvalidObservable(_))
        ));

        // mean value property: strictly between orbit min and max
        let potential = Observable::harmonic_bump(&g, 0, 0.7, 3).unwrap();
        let avg = averaged_potential(&g, &potential, &start, 0.2, 1.0).unwrap();
        let params = classify(0.2, 1.0).unwrap();
        let period = params.flow_period().unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..200 {
            let t = period * i as f64 / 200.0;
            let p = crate::flows::flow(&g, &params, &start, t, 1.0).unwrap();
            let v = potential.eval(&p.rep).re;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(avg > lo && avg < hi, "average {avg} outside [{lo}, {hi}]");

        // invariance under drift
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let z = Complex64::new(rng.gen::<f64>() * 0.6 - 0.3, rng.gen::<f64>() * 0.6 - 0.3);
            let p = FramePoint::reduced(&g, &frame_from_disk(z, rng.gen::<f64>() * std::f64::consts::TAU).unwrap())
                .unwrap();
            let s = rng.gen::<f64>() * 9.0;
            let r = drift_invariance(&g, &potential, &p, 0.2, 1.0, s).unwrap();
            assert!(r <= 1e-6, "drift residual {r}");
        }
    }

    #[test]
    fn theta_target_respects_both_bounds() {
        // large gap: capped just under 1/2
        let t = theta_target(3.8388);
        assert!(t < 0.5 && t > 0.49);
        assert!(t * (1.0 - t) <= 3.8388);
        // small gap: the quadratic root branch
        let t = theta_target(0.16);
        assert!((t * (1.0 - t) - 0.16).abs() < 1e-12);
        assert!(t < 0.5);
    }

    #[test]
    fn decay_curve_validates_inputs() {
        let g = bolza();
        let suite = vec![Observable::harmonic_constant(1, 1.0)];
        let starts = scattered_starts(&g, 2, 1).unwrap();
        let grid = [50.0, 100.0, 500.0, 2000.0];
        assert!(matches!(
            decay_curve(&g, &suite, &starts, 1.0, &grid, 0.05, 1000, 1, 3.8388),
            Err(Error::Domain(_))
        ));
        let starts = scattered_starts(&g, 5, 1).unwrap();
        assert!(matches!(
            decay_curve(&g, &suite, &starts, 1.0, &[50.0, 100.0, 150.0], 0.05, 1000, 1, 3.8388),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            decay_curve(&g, &suite, &starts, 1.0, &[50.0, 100.0, 200.0, 400.0], 0.05, 1000, 1, 3.8388),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constant_suite_reports_no_decay_exponent() {
        let g = bolza();
        let suite = vec![Observable::harmonic_constant(0, 1.0)];
        let starts = scattered_starts(&g, 5, 1).unwrap();
        let grid = [2.0, 8.0, 20.0, 80.0];
        let report = decay_curve(&g, &suite, &starts, 1.0, &grid, 0.05, 1000, 1, 3.8388).unwrap();
        assert!(report.theta_hat.is_none());
        assert!(report.sup_discrepancy.iter().all(|&d| d < 1e-12));
    }
}
