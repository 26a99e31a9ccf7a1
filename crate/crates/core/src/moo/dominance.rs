use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Where an objective point came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: String,
    /// β for RL runs, genome index for NSGA-II.
    pub tag: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub obj_t: f64,
    pub obj_s: f64,
    pub provenance: Provenance,
}

impl ObjectivePoint {
    pub fn new(obj_t: f64, obj_s: f64, algorithm: &str, tag: f64, seed: u64) -> Self {
        Self {
            obj_t,
            obj_s,
            provenance: Provenance {
                algorithm: algorithm.to_string(),
                tag,
                seed,
            },
        }
    }

    pub fn objectives(&self) -> [f64; 2] {
        [self.obj_t, self.obj_s]
    }
}

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

/// Deb's fast non-dominated sort. Returns fronts as index lists, best first; indices
/// within a front are ascending.
pub fn fast_non_dominated_sort(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (indices into `points`), in front order.
///
/// Boundary points get infinity; an objective with zero range contributes nothing.
pub fn crowding_distance(points: &[[f64; 2]], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut distance = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][obj]
                .partial_cmp(&points[front[b]][obj])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let lo = points[front[order[0]]][obj];
        let hi = points[front[order[m - 1]]][obj];
        distance[order[0]] = f64::INFINITY;
        distance[order[m - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..m - 1 {
            let gap = points[front[order[k + 1]]][obj] - points[front[order[k - 1]]][obj];
            distance[order[k]] += gap / range;
        }
    }
    distance
}

/// Non-dominated subset, duplicates collapsed, sorted by `obj_t` ascending (and hence
/// `obj_s` strictly descending).
pub fn extract_pareto(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Best obj_s first among equal obj_t so that the sweep below keeps it.
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pb.obj_t
            .partial_cmp(&pa.obj_t)
            .unwrap_or(Ordering::Equal)
            .then(pb.obj_s.partial_cmp(&pa.obj_s).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    // Sweep from the best obj_t down; a point survives iff its obj_s beats every point
    // with at least its obj_t.
    let mut best_s = f64::NEG_INFINITY;
    let mut front = Vec::new();
    for i in order {
        let p = &points[i];
        if p.obj_s > best_s {
            best_s = p.obj_s;
            front.push(p.clone());
        }
    }
    front.reverse();
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::seeded_rng;
    use rand::Rng;

    /// Repeated peeling with an O(n²) dominance check per layer.
    fn brute_force_fronts(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    fn random_points<R: Rng>(rng: &mut R, n: usize, grid: bool) -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| {
                if grid {
                    [rng.random_range(0..10) as f64, rng.random_range(0..10) as f64]
                } else {
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
                }
            })
            .collect()
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&[2.0, 2.0], &[1.0, 1.0]));
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]));
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(dominates(&[1.0, 2.0], &[1.0, 1.0]));
    }

    #[test]
    fn sort_small_cases() {
        assert_eq!(
            fast_non_dominated_sort(&[[1.0, 1.0], [2.0, 2.0]]),
            vec![vec![1], vec![0]]
        );
        assert_eq!(
            fast_non_dominated_sort(&[[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]]),
            vec![vec![0, 1, 2]]
        );
        assert!(fast_non_dominated_sort(&[]).is_empty());
    }

    #[test]
    fn sort_matches_brute_force() {
        let mut rng = seeded_rng(5, 0);
        for trial in 0..300 {
            let pts = random_points(&mut rng, 200, trial % 2 == 0);
            assert_eq!(fast_non_dominated_sort(&pts), brute_force_fronts(&pts));
        }
    }

    #[test]
    fn crowding_cases() {
        let pts = [[0.0, 2.0], [2.0, 0.0]];
        assert_eq!(crowding_distance(&pts, &[0, 1]), vec![f64::INFINITY; 2]);
        let pts = [[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]];
        let d = crowding_distance(&pts, &[0, 1, 2]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_close!(d[1], 2.0, 1e-15);
        let flat = [[1.0, 1.0]; 4];
        let d = crowding_distance(&flat, &[0, 1, 2, 3]);
        assert_eq!(d.iter().filter(|v| v.is_infinite()).count(), 2);
        assert!(d.iter().filter(|v| v.is_finite()).all(|&v| v == 0.0));
    }

    fn as_points(v: &[[f64; 2]]) -> Vec<ObjectivePoint> {
        v.iter()
            .enumerate()
            .map(|(i, p)| ObjectivePoint::new(p[0], p[1], "test", i as f64, 0))
            .collect()
    }

    #[test]
    fn extract_small_cases() {
        let one = as_points(&[[1.0, 1.0]]);
        assert_eq!(extract_pareto(&one), one);
        let chain = as_points(&[[2.0, 2.0], [1.0, 3.0], [3.0, 1.0]]);
        let f = extract_pareto(&chain);
        assert_eq!(
            f.iter().map(|p| p.objectives()).collect::<Vec<_>>(),
            vec![[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]]
        );
    }

    #[test]
    fn extract_matches_brute_force_filter() {
        let mut rng = seeded_rng(6, 0);
        for trial in 0..50 {
            let raw = random_points(&mut rng, 1_000, trial % 2 == 1);
            let pts = as_points(&raw);
            let got = extract_pareto(&pts);
            let mut want: Vec<[f64; 2]> = raw
                .iter()
                .copied()
                .filter(|p| !raw.iter().any(|q| dominates(q, p)))
                .collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            want.dedup();
            assert_eq!(got.iter().map(|p| p.objectives()).collect::<Vec<_>>(), want);
            for w in got.windows(2) {
                assert!(w[0].obj_t < w[1].obj_t && w[0].obj_s > w[1].obj_s);
            }
            for a in &got {
                for b in &got {
                    assert!(!dominates(&a.objectives(), &b.objectives()));
                }
            }
        }
    }
}
