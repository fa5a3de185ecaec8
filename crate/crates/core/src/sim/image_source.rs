use rayon::prelude::*;

use super::{Arrival, SimConfig};
use crate::types::{Face, RoomSpec, N_BANDS};

/// One mirror image along a single axis.
struct AxisImage {
    /// Total reflections along this axis, `|m|`.
    order: usize,
    /// Signed distance from the receiver to the image coordinate.
    offset: f64,
    /// Product of per-band specular reflection factors of the walls hit.
    gain: [f64; N_BANDS],
}

fn axis_images(
    spec: &RoomSpec,
    axis: usize,
    max_distance: f64,
    max_order: Option<usize>,
) -> Vec<AxisImage> {
    let len = spec.geometry.dims()[axis];
    let s = spec.source[axis];
    let r = spec.receiver[axis];
    let reflect = |face: Face| -> [f64; N_BANDS] {
        let surf = spec.surface(face);
        let mut g = [0.0; N_BANDS];
        for (b, v) in g.iter_mut().enumerate() {
            *v = (1.0 - surf.absorption[b]) * (1.0 - surf.scattering[b]);
        }
        g
    };
    let lower = reflect(Face::from_axis(axis, false));
    let upper = reflect(Face::from_axis(axis, true));

    let mut bound = (max_distance / len).ceil() as i64 + 2;
    if let Some(n) = max_order {
        bound = bound.min(n as i64);
    }
    let mut out = Vec::new();
    for m in -bound..=bound {
        let coord = if m.rem_euclid(2) == 0 {
            m as f64 * len + s
        } else {
            (m + 1) as f64 * len - s
        };
        let offset = coord - r;
        if offset.abs() > max_distance {
            continue;
        }
        let k = m.unsigned_abs() as i32;
        let (n_upper, n_lower) = if m >= 0 { ((k + 1) / 2, k / 2) } else { (k / 2, (k + 1) / 2) };
        let mut gain = [0.0; N_BANDS];
        for (b, g) in gain.iter_mut().enumerate() {
            *g = upper[b].powi(n_upper) * lower[b].powi(n_lower);
        }
        out.push(AxisImage {
            order: k as usize,
            offset,
            gain,
        });
    }
    out
}

/// Specular arrivals from the shoebox image lattice, including the direct
/// path, sorted by arrival time.
///
/// Energy of an image at distance `d` is `1/d²` times the product over
/// reflections of `(1 - α)(1 - s)` and the air absorption along `d`.
pub fn enumerate_image_sources(spec: &RoomSpec, config: &SimConfig) -> Vec<Arrival> {
    let max_distance = config.max_distance();
    let max_order = config.max_image_order;
    let air = config.air_coefficients();
    let c = config.speed_of_sound;
    let [xs, ys, zs] = [0, 1, 2].map(|a| axis_images(spec, a, max_distance, max_order));
    let r2 = max_distance * max_distance;
    let cap = max_order.unwrap_or(usize::MAX);

    let mut arrivals: Vec<Arrival> = xs
        .par_iter()
        .flat_map_iter(|ix| {
            let mut slab = Vec::new();
            for iy in &ys {
                let dxy = ix.offset * ix.offset + iy.offset * iy.offset;
                if dxy > r2 || ix.order + iy.order > cap {
                    continue;
                }
                for iz in &zs {
                    let d2 = dxy + iz.offset * iz.offset;
                    if d2 > r2 || ix.order + iy.order + iz.order > cap {
                        continue;
                    }
                    let d = d2.sqrt();
                    let mut energy = [0.0; N_BANDS];
                    for (b, e) in energy.iter_mut().enumerate() {
                        *e = ix.gain[b] * iy.gain[b] * iz.gain[b] * (-air[b] * d).exp() / d2;
                    }
                    slab.push(Arrival { time: d / c, energy });
                }
            }
            slab
        })
        .collect();
    arrivals.sort_by(|a, b| a.time.total_cmp(&b.time));
    arrivals
}
