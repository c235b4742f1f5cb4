use std::collections::BTreeMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Homogeneity, completeness and their harmonic mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v: f64,
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn v_measure<C: Ord + Hash + Clone, K: Ord + Hash + Clone>(classes: &[C], clusters: &[K]) -> Result<VMeasure> {
    if classes.len() != clusters.len() {
        return Err(CoreError::invalid("class and cluster assignments differ in length"));
    }
    if classes.is_empty() {
        return Err(CoreError::invalid("empty labeling"));
    }
    let n = classes.len() as f64;
    let mut joint: BTreeMap<(C, K), usize> = BTreeMap::new();
    let mut by_class: BTreeMap<C, usize> = BTreeMap::new();
    let mut by_cluster: BTreeMap<K, usize> = BTreeMap::new();
    for (c, k) in classes.iter().zip(clusters) {
        *joint.entry((c.clone(), k.clone())).or_insert(0) += 1;
        *by_class.entry(c.clone()).or_insert(0) += 1;
        *by_cluster.entry(k.clone()).or_insert(0) += 1;
    }
    let h_c = entropy(by_class.values().copied(), n);
    let h_k = entropy(by_cluster.values().copied(), n);
    let h_ck: f64 = joint
        .iter()
        .map(|((_, k), &nck)| {
            let p = nck as f64 / n;
            -p * (nck as f64 / by_cluster[k] as f64).ln()
        })
        .sum();
    let h_kc: f64 = joint
        .iter()
        .map(|((c, _), &nck)| {
            let p = nck as f64 / n;
            -p * (nck as f64 / by_class[c] as f64).ln()
        })
        .sum();
    let unit = |x: f64| x.clamp(0.0, 1.0);
    let homogeneity = if h_c == 0.0 { 1.0 } else { unit(1.0 - h_ck / h_c) };
    let completeness = if h_k == 0.0 { 1.0 } else { unit(1.0 - h_kc / h_k) };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_over_two_classes() {
        let m = v_measure(&[0, 0, 1, 1], &[5, 5, 5, 5]).unwrap();
        assert_eq!(m.homogeneity, 0.0);
        assert_eq!(m.completeness, 1.0);
        assert_eq!(m.v, 0.0);
    }

    #[test]
    fn perfect_match_up_to_renaming() {
        let m = v_measure(&[0, 0, 1, 2], &[9, 9, 4, 7]).unwrap();
        assert!((m.v - 1.0).abs() < 1e-12);
    }
}
