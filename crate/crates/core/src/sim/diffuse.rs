//! Diffuse-rain ray tracer.
//!
//! Each ray carries two per-band energy components: energy that has only been
//! reflected specularly so far, and energy that has been scattered at least
//! once. At every wall hit the scattered share is sent straight to the
//! receiver sphere, weighted by Lambert's law and the sphere's solid angle.
//! Once scattered, energy stays diffuse, so later hits deposit the full
//! diffuse component. Energy that is deposited leaves the ray, which keeps the
//! per-ray bookkeeping exact.
//!
//! With an image-source order cap `K`, the image method covers specular paths
//! of order up to `K` only. After its `K`-th reflection a ray hands its
//! remaining specular energy over to the diffuse component, so higher-order
//! reflections still reach the receiver (as diffuse rain) and the late decay
//! is not cut short.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Arrival, SimConfig};
use crate::types::{Face, RoomSpec, N_BANDS};

/// Rays per independently seeded block.
pub const RAY_BLOCK: usize = 512;

/// Where the emitted energy went, per band, in units of total emitted energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyLedger {
    pub emitted: [f64; N_BANDS],
    /// Deposited at the receiver inside the time window.
    pub received: [f64; N_BANDS],
    pub absorbed: [f64; N_BANDS],
    pub air: [f64; N_BANDS],
    /// Still travelling (or arriving) when the time window closed.
    pub expired: [f64; N_BANDS],
    /// Dropped by the low-energy cut-off.
    pub dropped: [f64; N_BANDS],
}

impl EnergyLedger {
    pub fn accounted(&self) -> [f64; N_BANDS] {
        let mut out = [0.0; N_BANDS];
        for (b, o) in out.iter_mut().enumerate() {
            *o = self.received[b] + self.absorbed[b] + self.air[b] + self.expired[b] + self.dropped[b];
        }
        out
    }

    fn merge(&mut self, other: &EnergyLedger) {
        for b in 0..N_BANDS {
            self.emitted[b] += other.emitted[b];
            self.received[b] += other.received[b];
            self.absorbed[b] += other.absorbed[b];
            self.air[b] += other.air[b];
            self.expired[b] += other.expired[b];
            self.dropped[b] += other.dropped[b];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseTrace {
    /// Non-empty per-sample energy bins, in the same units as image-source
    /// arrivals (`1/d²` for a unit source).
    pub arrivals: Vec<Arrival>,
    pub ledger: EnergyLedger,
}

fn isotropic(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Cosine-weighted direction around the inward normal of `face`.
fn lambert(rng: &mut ChaCha8Rng, face: Face) -> [f64; 3] {
    let u: f64 = rng.gen();
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let cos_t = u.sqrt();
    let sin_t = (1.0 - u).sqrt();
    let (t1, t2) = (sin_t * phi.cos(), sin_t * phi.sin());
    let n = if face.is_upper() { -cos_t } else { cos_t };
    match face.axis() {
        0 => [n, t1, t2],
        1 => [t1, n, t2],
        _ => [t1, t2, n],
    }
}

struct BlockResult {
    bins: Vec<[f64; N_BANDS]>,
    ledger: EnergyLedger,
}

struct Tracer<'a> {
    spec: &'a RoomSpec,
    dims: [f64; 3],
    air: [f64; N_BANDS],
    c: f64,
    max_time: f64,
    sample_rate: f64,
    receiver_radius: f64,
    initial: f64,
    n_bins: usize,
    /// Reflection count after which specular energy turns diffuse.
    handover: usize,
}

impl Tracer<'_> {
    fn run_block(&self, seed: u64, block: usize, rays: usize) -> BlockResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let mut bins = vec![[0.0; N_BANDS]; self.n_bins];
        let mut ledger = EnergyLedger::default();
        for _ in 0..rays {
            self.trace_ray(&mut rng, &mut bins, &mut ledger);
        }
        BlockResult { bins, ledger }
    }

    fn trace_ray(&self, rng: &mut ChaCha8Rng, bins: &mut [[f64; N_BANDS]], ledger: &mut EnergyLedger) {
        let spec = self.spec;
        let mut pos = spec.source;
        let mut dir = isotropic(rng);
        let mut path = 0.0;
        let mut specular = [self.initial; N_BANDS];
        let mut diffuse = [0.0; N_BANDS];
        let cutoff = self.initial * 1e-6;
        let r2 = self.receiver_radius * self.receiver_radius;
        for b in 0..N_BANDS {
            ledger.emitted[b] += self.initial;
        }
        let mut hits = 0usize;

        loop {
            // Nearest wall along the ray.
            let mut t_hit = f64::INFINITY;
            let mut face = Face::Floor;
            for axis in 0..3 {
                let d = dir[axis];
                if d > 0.0 {
                    let t = (self.dims[axis] - pos[axis]) / d;
                    if t < t_hit {
                        t_hit = t;
                        face = Face::from_axis(axis, true);
                    }
                } else if d < 0.0 {
                    let t = -pos[axis] / d;
                    if t < t_hit {
                        t_hit = t;
                        face = Face::from_axis(axis, false);
                    }
                }
            }
            let t_hit = t_hit.max(0.0);
            if (path + t_hit) / self.c > self.max_time {
                for b in 0..N_BANDS {
                    ledger.expired[b] += specular[b] + diffuse[b];
                }
                return;
            }
            path += t_hit;
            for axis in 0..3 {
                pos[axis] += dir[axis] * t_hit;
            }
            let axis = face.axis();
            pos[axis] = if face.is_upper() { self.dims[axis] } else { 0.0 };

            let surf = spec.surface(face);
            let to_rcv = [0, 1, 2].map(|i| spec.receiver[i] - pos[i]);
            let d_rcv = to_rcv.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cos_r = (to_rcv[axis] * if face.is_upper() { -1.0 } else { 1.0 } / d_rcv).max(0.0);
            let solid = if d_rcv <= self.receiver_radius {
                std::f64::consts::TAU
            } else {
                std::f64::consts::TAU * (1.0 - (1.0 - r2 / (d_rcv * d_rcv)).sqrt())
            };
            let share = (cos_r * solid / std::f64::consts::PI).min(1.0);
            let arrival_time = (path + d_rcv) / self.c;
            let bin = (arrival_time * self.sample_rate).round() as usize;
            let in_window = arrival_time <= self.max_time && bin < self.n_bins;

            hits += 1;
            let handover = hits >= self.handover;
            let mut alive = false;
            for b in 0..N_BANDS {
                let travel = (-self.air[b] * t_hit).exp();
                let (es, ed) = (specular[b] * travel, diffuse[b] * travel);
                ledger.air[b] += (specular[b] - es) + (diffuse[b] - ed);

                let alpha = surf.absorption[b];
                let s = surf.scattering[b];
                ledger.absorbed[b] += alpha * (es + ed);
                let reflected_specular = es * (1.0 - alpha) * (1.0 - s);
                let scattered = ed * (1.0 - alpha) + es * (1.0 - alpha) * s;
                let deposit = scattered * share;
                specular[b] = reflected_specular;
                diffuse[b] = scattered - deposit;
                if handover {
                    diffuse[b] += specular[b];
                    specular[b] = 0.0;
                }

                if deposit > 0.0 {
                    if in_window {
                        let arriving = deposit * (-self.air[b] * d_rcv).exp();
                        ledger.air[b] += deposit - arriving;
                        ledger.received[b] += arriving;
                        bins[bin][b] += arriving;
                    } else {
                        ledger.expired[b] += deposit;
                    }
                }
                alive |= specular[b] + diffuse[b] >= cutoff;
            }
            if !alive {
                for b in 0..N_BANDS {
                    ledger.dropped[b] += specular[b] + diffuse[b];
                }
                return;
            }

            let p_diffuse = surf.scattering.mean();
            if p_diffuse > 0.0 && rng.gen::<f64>() < p_diffuse {
                dir = lambert(rng, face);
            } else {
                dir[axis] = -dir[axis];
            }
        }
    }
}

/// Launches `config.n_rays` rays from the source and collects the diffuse
/// energy reaching the receiver, binned at the output sample rate.
///
/// Rays are processed in blocks of [`RAY_BLOCK`], each with its own stream of
/// the seeded generator, and merged in block order, so the result does not
/// depend on the number of worker threads.
pub fn trace_diffuse_rain(spec: &RoomSpec, config: &SimConfig, seed: u64) -> DiffuseTrace {
    let n_rays = config.n_rays;
    let n_bins = config.n_samples();
    let mut ledger = EnergyLedger::default();
    if n_rays == 0 {
        return DiffuseTrace {
            arrivals: Vec::new(),
            ledger,
        };
    }
    let tracer = Tracer {
        spec,
        dims: spec.geometry.dims(),
        air: config.air_coefficients(),
        c: config.speed_of_sound,
        max_time: config.max_time,
        sample_rate: config.sample_rate,
        receiver_radius: config.receiver_radius,
        initial: 1.0 / n_rays as f64,
        n_bins,
        handover: config.max_image_order.unwrap_or(usize::MAX).max(1),
    };
    let n_blocks = n_rays.div_ceil(RAY_BLOCK);
    let chunk = rayon::current_num_threads().max(1);
    let mut bins = vec![[0.0; N_BANDS]; n_bins];
    let mut block = 0;
    while block < n_blocks {
        let end = (block + chunk).min(n_blocks);
        let results: Vec<BlockResult> = (block..end)
            .into_par_iter()
            .map(|k| {
                let rays = RAY_BLOCK.min(n_rays - k * RAY_BLOCK);
                tracer.run_block(seed, k, rays)
            })
            .collect();
        for r in results {
            for (acc, v) in bins.iter_mut().zip(&r.bins) {
                for b in 0..N_BANDS {
                    acc[b] += v[b];
                }
            }
            ledger.merge(&r.ledger);
        }
        block = end;
    }

    // Receiver-sphere capture to point intensity for a source radiating 4π.
    let scale = 4.0 / (config.receiver_radius * config.receiver_radius);
    let arrivals = bins
        .iter()
        .enumerate()
        .filter(|(_, e)| e.iter().any(|&v| v > 0.0))
        .map(|(n, e)| Arrival {
            time: n as f64 / config.sample_rate,
            energy: e.map(|v| v * scale),
        })
        .collect();
    DiffuseTrace { arrivals, ledger }
}
