//! Cheap unconstrained k-median centers by greedy seeding and swap search.

use crate::model::{FacilityIdx, FairInstance};

fn cost(inst: &FairInstance, centers: &[FacilityIdx]) -> f64 {
    inst.clients
        .iter()
        .map(|c| {
            centers
                .iter()
                .map(|&f| inst.metric.dist(c.point, inst.facilities[f]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Up to `k` facilities that locally minimize the plain k-median cost,
/// ignoring fairness. Sorted.
pub fn local_search_centers(inst: &FairInstance) -> Vec<FacilityIdx> {
    let m = inst.facilities.len();
    let target = inst.k.min(m);
    let mut centers: Vec<FacilityIdx> = Vec::new();
    while centers.len() < target {
        let best = (0..m)
            .filter(|f| !centers.contains(f))
            .min_by(|&a, &b| {
                let mut ca = centers.clone();
                ca.push(a);
                let mut cb = centers.clone();
                cb.push(b);
                cost(inst, &ca).total_cmp(&cost(inst, &cb))
            })
            .expect("a facility remains");
        centers.push(best);
    }
    let mut current = cost(inst, &centers);
    let mut improved = true;
    while improved {
        improved = false;
        'swap: for i in 0..centers.len() {
            for f in 0..m {
                if centers.contains(&f) {
                    continue;
                }
                let mut trial = centers.clone();
                trial[i] = f;
                let c = cost(inst, &trial);
                if c < current * (1.0 - 1e-9) {
                    centers = trial;
                    current = c;
                    improved = true;
                    break 'swap;
                }
            }
        }
    }
    centers.sort_unstable();
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    #[test]
    fn t1_uses_both_facilities() {
        assert_eq!(local_search_centers(&t1()), vec![0, 1]);
    }

    #[test]
    fn single_center_is_the_median() {
        let mut inst = t1();
        inst.k = 1;
        let c = local_search_centers(&inst);
        assert_eq!(c.len(), 1);
    }
}
