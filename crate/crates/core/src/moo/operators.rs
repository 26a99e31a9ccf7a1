//! Real-coded variation operators on genes bounded to `[0, 1]`.

use rand::Rng;

/// Simulated binary crossover with distribution index `eta`. With probability `prob`
/// every gene pair is recombined; children are clipped to `[0, 1]`.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    prob: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(p1.len(), p2.len(), "parents must have the same length");
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if !(rng.random::<f64>() < prob) {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        let (a, b) = (p1[i], p2[i]);
        if (a - b).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let spread = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let mid = 0.5 * (a + b);
        let half = 0.5 * spread * (b - a);
        c1[i] = (mid - half).clamp(0.0, 1.0);
        c2[i] = (mid + half).clamp(0.0, 1.0);
    }
    (c1, c2)
}

/// Bounded polynomial mutation with distribution index `eta`; each gene mutates
/// independently with probability `prob`.
pub fn polynomial_mutation<R: Rng + ?Sized>(genes: &[f64], eta: f64, prob: f64, rng: &mut R) -> Vec<f64> {
    let mut out = genes.to_vec();
    for y in out.iter_mut() {
        if !(rng.random::<f64>() < prob) {
            continue;
        }
        let below = *y;
        let above = 1.0 - *y;
        let u: f64 = rng.random();
        let power = 1.0 / (eta + 1.0);
        let delta = if u < 0.5 {
            let xy = 1.0 - below;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(power) - 1.0
        } else {
            let xy = 1.0 - above;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(power)
        };
        *y = (*y + delta).clamp(0.0, 1.0);
    }
    out
}
