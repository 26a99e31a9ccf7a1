use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Area dominated by `front` and bounded below by `reference`, by a sorted sweep.
///
/// Dominated members of `front` are allowed and contribute nothing.
pub fn hypervolume_2d(front: &[[f64; 2]], reference: [f64; 2]) -> Result<f64> {
    if let Some(p) = front.iter().find(|p| !(p[0] >= reference[0] && p[1] >= reference[1])) {
        return Err(Error::ReferenceNotDominated { point: *p, reference });
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap_or(Ordering::Equal));
    let mut area = 0.0;
    let mut covered = reference[1];
    for p in pts {
        if p[1] > covered {
            area += (p[0] - reference[0]) * (p[1] - covered);
            covered = p[1];
        }
    }
    Ok(area)
}

/// Component-wise minimum minus `margin` times the component range. A zero range falls
/// back to `margin·max(|min|, 1)`.
pub fn reference_point(points: &[[f64; 2]], margin: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let pad = if range > 0.0 {
            margin * range
        } else {
            margin * lo.abs().max(1.0)
        };
        *slot = lo - pad;
    }
    out
}
