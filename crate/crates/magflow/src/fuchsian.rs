//! Cocompact surface groups acting on the unit disk: the genus-2 octagon
//! group, reduction to a Dirichlet fundamental domain, word balls, and a
//! Monte-Carlo check of the Gauss-Bonnet area.

use std::collections::HashMap;

use num::complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::sl2::{
    disk_point_of, hyp_dist, mat_det, mat_mul, mat_scale, mobius_disk, GroupElement, Mat2,
};

/// Side-pairing presentation of a cocompact Fuchsian group, with enough
/// precomputed data to reduce points into the Dirichlet domain centered at
/// the disk origin.
pub struct FuchsianGroup {
    generators: Vec<GroupElement>,
    /// generators plus inverses, deduplicated; the descent candidate set
    candidates: Vec<GroupElement>,
    candidate_mobius: Vec<(Complex64, Complex64)>,
    genus: u32,
    reduction_max_iters: usize,
    cover_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct GroupConfig {
    genus: u32,
    /// row-major entries per generator
    generators: Vec<[f64; 4]>,
}

impl FuchsianGroup {
    pub fn new(generators: Vec<GroupElement>, genus: u32) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Config(format!("genus must be >= 2, got {genus}")));
        }
        if generators.len() != 4 * genus as usize {
            return Err(Error::Config(format!(
                "expected {} side-pairing generators for genus {genus}, got {}",
                4 * genus,
                generators.len()
            )));
        }
        let mut with_inverses = generators.clone();
        with_inverses.extend(generators.iter().map(|g| g.inverse()));
        let mut candidates: Vec<GroupElement> = Vec::new();
        for g in &with_inverses {
            if !candidates
                .iter()
                .any(|c| c.entrywise_distance(g) < 1e-9)
            {
                candidates.push(*g);
            }
        }
        let candidate_mobius = candidates.iter().map(|g| g.disk_form()).collect();
        let mut group = FuchsianGroup {
            generators,
            candidates,
            candidate_mobius,
            genus,
            reduction_max_iters: 10_000,
            cover_radius: 0.0,
        };
        group.cover_radius = group.measure_cover_radius();
        Ok(group)
    }

    /// The genus-2 octagon group: eight hyperbolic side pairings with trace
    /// 2(1+sqrt 2), at phases k*pi/4 around the disk. Generator k+4 is the
    /// inverse of generator k.
    pub fn bolza() -> Self {
        let a = 1.0 + std::f64::consts::SQRT_2;
        let b = (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt();
        let mut gens = Vec::with_capacity(8);
        for k in 0..8 {
            let phi = k as f64 * std::f64::consts::FRAC_PI_4;
            let (s, c) = phi.sin_cos();
            gens.push(
                GroupElement::new([
                    [a + b * c, -b * s],
                    [-b * s, a - b * c],
                ])
                .expect("octagon generator is unimodular"),
            );
        }
        FuchsianGroup::new(gens, 2).expect("octagon data is well formed")
    }

    pub fn from_config_json(text: &str) -> Result<Self> {
        let cfg: GroupConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("bad group config: {e}")))?;
        let gens = cfg
            .generators
            .iter()
            .map(|r| GroupElement::new([[r[0], r[1]], [r[2], r[3]]]))
            .collect::<Result<Vec<_>>>()?;
        FuchsianGroup::new(gens, cfg.genus)
    }

    pub fn to_config_json(&self) -> String {
        let cfg = GroupConfig {
            genus: self.genus,
            generators: self
                .generators
                .iter()
                .map(|g| {
                    let m = g.entries();
                    [m[0][0], m[0][1], m[1][0], m[1][1]]
                })
                .collect(),
        };
        serde_json::to_string_pretty(&cfg).expect("config serializes")
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Hyperbolic radius of a disk around the origin that provably contains
    /// the Dirichlet domain (measured along 256 rays, with margin).
    pub fn cover_radius(&self) -> f64 {
        self.cover_radius
    }

    pub fn gauss_bonnet_area(&self) -> f64 {
        4.0 * std::f64::consts::PI * (self.genus as f64 - 1.0)
    }

    /// True when no single side pairing moves the base point strictly closer
    /// to the origin; this is exactly "reduce leaves the point fixed".
    pub fn is_in_domain(&self, z: Complex64) -> bool {
        let n = z.norm_sqr();
        for &(alpha, beta) in &self.candidate_mobius {
            if mobius_disk(alpha, beta, z).norm_sqr() < n {
                return false;
            }
        }
        true
    }

    /// One greedy descent pass; returns how many generator moves were applied.
    pub(crate) fn descend_in_place(&self, m: &mut Mat2) -> Result<usize> {
        let mut moves = 0usize;
        let mut z = disk_point_of(m);
        let mut cur = z.norm_sqr();
        loop {
            let mut best = usize::MAX;
            let mut best_val = cur;
            for (k, &(alpha, beta)) in self.candidate_mobius.iter().enumerate() {
                let v = mobius_disk(alpha, beta, z).norm_sqr();
                if v < best_val {
                    best_val = v;
                    best = k;
                }
            }
            if best == usize::MAX {
                return Ok(moves);
            }
            *m = mat_mul(self.candidates[best].entries(), m);
            let det = mat_det(m);
            if (det - 1.0).abs() > 1e-13 {
                *m = mat_scale(m, det.sqrt().recip());
            }
            z = disk_point_of(m);
            cur = z.norm_sqr();
            moves += 1;
            if moves > self.reduction_max_iters {
                return Err(Error::ReductionFailed {
                    iters: self.reduction_max_iters,
                });
            }
        }
    }

    /// Replace g by gamma*g with gamma a word in the group, such that no single
    /// side pairing moves the base point closer to the origin. Idempotent and
    /// constant on left cosets up to roundoff.
    pub fn reduce(&self, g: &GroupElement) -> Result<GroupElement> {
        let mut m = *g.entries();
        self.descend_in_place(&mut m)?;
        Ok(GroupElement::from_trusted(m))
    }

    /// All distinct group elements expressible as words of length <= max_len
    /// in the side pairings, sorted by how far they move the origin.
    pub fn word_ball(&self, max_len: usize) -> Vec<BallElement> {
        let origin = Complex64::new(0.0, 0.0);
        let mut seen: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
        let mut out: Vec<BallElement> = Vec::new();

        let push_unique = |out: &mut Vec<BallElement>, seen: &mut HashMap<[i64; 4], Vec<usize>>, g: GroupElement| -> bool {
            let m = g.entries();
            let key = [
                (m[0][0].abs() * 1e3).floor() as i64,
                (m[0][1].abs() * 1e3).floor() as i64,
                (m[1][0].abs() * 1e3).floor() as i64,
                (m[1][1].abs() * 1e3).floor() as i64,
            ];
            // probe neighbor buckets: duplicates reached along different word
            // paths carry roundoff that can straddle a bucket boundary
            for d0 in -1..=1i64 {
                for d1 in -1..=1i64 {
                    for d2 in -1..=1i64 {
                        for d3 in -1..=1i64 {
                            let probe = [key[0] + d0, key[1] + d1, key[2] + d2, key[3] + d3];
                            if let Some(bucket) = seen.get(&probe) {
                                for &idx in bucket {
                                    if out[idx].element.entrywise_distance(&g) < 1e-6 {
                                        return false;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let disp = hyp_dist(origin, g.disk_point()).expect("orbit point in disk");
            out.push(BallElement { element: g, displacement: disp });
            seen.entry(key).or_default().push(out.len() - 1);
            true
        };

        push_unique(&mut out, &mut seen, GroupElement::identity());
        let mut frontier = vec![GroupElement::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for c in &self.candidates {
                    let g = c.compose(w);
                    if push_unique(&mut out, &mut seen, g) {
                        next.push(g);
                    }
                }
            }
            frontier = next;
        }
        out.sort_by(|a, b| a.displacement.total_cmp(&b.displacement));
        out
    }

    /// Monte-Carlo estimate of the fundamental domain's hyperbolic area by
    /// rejection from a covering disk. Deterministic for a fixed seed and
    /// independent of the number of worker threads.
    pub fn area_mc(&self, n_samples: u64, seed: u64) -> AreaEstimate {
        self.area_mc_impl(n_samples, seed, false)
    }

    /// Reference sequential path (also what the crate uses when the parallel
    /// feature is off); bit-identical to `area_mc`.
    pub fn area_mc_sequential(&self, n_samples: u64, seed: u64) -> AreaEstimate {
        self.area_mc_impl(n_samples, seed, true)
    }

    fn area_mc_impl(&self, n_samples: u64, seed: u64, force_seq: bool) -> AreaEstimate {
        const BATCH: u64 = 1 << 16;
        let cover_radius = self.cover_radius;
        let cover_area = 2.0 * std::f64::consts::PI * (cover_radius.cosh() - 1.0);
        let n_batches = n_samples.div_ceil(BATCH);
        let hits: Vec<u64> = par::run_indexed(
            n_batches as usize,
            |b| {
                let b = b as u64;
                let count = BATCH.min(n_samples - b * BATCH);
                let mut rng = par::task_rng(seed, par::DOMAIN_AREA, b);
                let mut h = 0u64;
                for _ in 0..count {
                    let u: f64 = rng.gen();
                    let v: f64 = rng.gen();
                    let rho = (1.0 + u * (cover_radius.cosh() - 1.0)).acosh();
                    let r = (rho * 0.5).tanh();
                    let phi = 2.0 * std::f64::consts::PI * v;
                    let z = Complex64::from_polar(r, phi);
                    if self.is_in_domain(z) {
                        h += 1;
                    }
                }
                h
            },
            force_seq,
        );
        let accepted: u64 = hits.iter().sum();
        let p = accepted as f64 / n_samples as f64;
        AreaEstimate {
            estimate: cover_area * p,
            stderr: cover_area * (p * (1.0 - p) / n_samples as f64).sqrt(),
            samples: n_samples,
            accepted,
            cover_radius,
            cover_area,
        }
    }

    /// Draw a base point uniformly (hyperbolic area) in the fundamental domain.
    pub fn sample_domain_point<R: Rng>(&self, rng: &mut R) -> Complex64 {
        loop {
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            let rho = (1.0 + u * (self.cover_radius.cosh() - 1.0)).acosh();
            let r = (rho * 0.5).tanh();
            let phi = 2.0 * std::f64::consts::PI * v;
            let z = Complex64::from_polar(r, phi);
            if self.is_in_domain(z) {
                return z;
            }
        }
    }

    fn measure_cover_radius(&self) -> f64 {
        // Dirichlet domains are hyperbolically convex, hence star shaped
        // around the center: bisect along rays for the boundary crossing.
        let mut max_rho = 0.0f64;
        for j in 0..256 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
            let dir = Complex64::from_polar(1.0, theta);
            let mut lo = 0.0f64;
            let mut hi = 1.0 - 1e-9;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.is_in_domain(dir * mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let rho = 2.0 * lo.atanh();
            max_rho = max_rho.max(rho);
        }
        max_rho + 0.05
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BallElement {
    pub element: GroupElement,
    /// hyperbolic distance the element moves the disk origin
    pub displacement: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AreaEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub accepted: u64,
    pub cover_radius: f64,
    pub cover_area: f64,
}

/// Line-bundle degree 2*B*(genus-1); errors unless it is an integer to 1e-9.
pub fn degree(field: f64, genus: u32) -> Result<i64> {
    if field <= 0.0 || !field.is_finite() {
        return Err(Error::Domain(format!("field must be positive, got {field}")));
    }
    let d = 2.0 * field * (genus as f64 - 1.0);
    let r = d.round();
    if (d - r).abs() > 1e-9 {
        return Err(Error::Integrality(format!(
            "2*B*(genus-1) = {d} is not an integer (field {field}, genus {genus})"
        )));
    }
    Ok(r as i64)
}
