//! Accuracy and cost of an edge-inclusion estimate against a known graph.

use crate::error::{Error, Result};
use crate::graph::{all_pairs, Graph};
use crate::inference::EdgeInclusionMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MamseConfig {
    /// Weight on the present-edge term.
    pub alpha: f64,
}

impl Default for MamseConfig {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostMetricConfig {
    /// Allowed distance from the final AUC.
    pub tolerance: f64,
}

impl Default for CostMetricConfig {
    fn default() -> Self {
        Self { tolerance: 0.01 }
    }
}

fn check(p: &EdgeInclusionMatrix, truth: &Graph) -> Result<()> {
    if p.p() != truth.p() {
        return Err(Error::DimensionMismatch { expected: truth.p(), found: p.p() });
    }
    Ok(())
}

/// Split pair scores by truth class.
fn classes(scores: &[f64], truth: &Graph) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (e, &s) in all_pairs(truth.p()).zip(scores) {
        if truth.contains(e) {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    (pos, neg)
}

/// Mann-Whitney AUC on pair-indexed scores, ties counted ½.
pub fn auc_scores(scores: &[f64], truth: &Graph) -> Result<f64> {
    let (pos, mut neg) = classes(scores, truth);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedMetric("AUC needs both edges and non-edges in the true graph".into()));
    }
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for s in &pos {
        let below = neg.partition_point(|x| x < s);
        let upto = neg.partition_point(|x| x <= s);
        wins += below as f64 + 0.5 * (upto - below) as f64;
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

pub fn auc(p: &EdgeInclusionMatrix, truth: &Graph) -> Result<f64> {
    check(p, truth)?;
    auc_scores(p.pair_values(), truth)
}

/// `α Σ_{E*} (1 - p_ij)² / |E*| + (1 - α) Σ_{non-edges} p_ij² / |E⁻*|`.
pub fn mamse(p: &EdgeInclusionMatrix, truth: &Graph, cfg: &MamseConfig) -> Result<f64> {
    check(p, truth)?;
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidParameter(format!("alpha {} outside [0, 1]", cfg.alpha)));
    }
    let (pos, neg) = classes(p.pair_values(), truth);
    let term = |xs: &[f64], weight: f64, f: fn(f64) -> f64, what: &str| -> Result<f64> {
        if weight == 0.0 {
            return Ok(0.0);
        }
        if xs.is_empty() {
            return Err(Error::UndefinedMetric(format!("MAMSE needs at least one {what}")));
        }
        Ok(weight * xs.iter().map(|&x| f(x)).sum::<f64>() / xs.len() as f64)
    };
    Ok(term(&pos, cfg.alpha, |x| (1.0 - x).powi(2), "true edge")?
        + term(&neg, 1.0 - cfg.alpha, |x| x * x, "true non-edge")?)
}

/// Mean of `(p_ij - 1[(i,j) ∈ E*])²` over all pairs.
pub fn mse(p: &EdgeInclusionMatrix, truth: &Graph) -> Result<f64> {
    check(p, truth)?;
    let vals = p.pair_values();
    if vals.is_empty() {
        return Err(Error::Empty("no pairs".into()));
    }
    let sum: f64 = all_pairs(truth.p())
        .zip(vals)
        .map(|(e, &x)| if truth.contains(e) { (1.0 - x).powi(2) } else { x * x })
        .sum();
    Ok(sum / vals.len() as f64)
}

/// Earliest time whose AUC is within tolerance of the last one.
pub fn cost_from_auc_series(times: &[f64], aucs: &[f64], cfg: &CostMetricConfig) -> Result<f64> {
    if times.is_empty() || times.len() != aucs.len() {
        return Err(Error::Empty("cost needs a non-empty series of times and AUCs".into()));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("snapshot times must be strictly increasing".into()));
    }
    let last = *aucs.last().expect("non-empty");
    let k = aucs.iter().position(|a| (a - last).abs() < cfg.tolerance).expect("last entry qualifies");
    Ok(times[k])
}

/// `T = min { t : |AUC(P_t) - AUC(P_final)| < tolerance }` over the snapshots.
pub fn computational_cost(
    snapshots: &[(f64, EdgeInclusionMatrix)],
    truth: &Graph,
    cfg: &CostMetricConfig,
) -> Result<f64> {
    let times: Vec<f64> = snapshots.iter().map(|(t, _)| *t).collect();
    let aucs = snapshots.iter().map(|(_, p)| auc(p, truth)).collect::<Result<Vec<_>>>()?;
    cost_from_auc_series(&times, &aucs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inc(p: usize, v: Vec<f64>) -> EdgeInclusionMatrix {
        EdgeInclusionMatrix::from_pair_values(p, v).unwrap()
    }

    fn truth01() -> Graph {
        Graph::from_pairs(3, [(0, 1)]).unwrap()
    }

    #[test]
    fn auc_examples() {
        let g = truth01();
        assert_eq!(auc(&inc(3, vec![0.9, 0.4, 0.4]), &g).unwrap(), 1.0);
        assert_eq!(auc(&inc(3, vec![0.4, 0.4, 0.4]), &g).unwrap(), 0.5);
        assert_eq!(auc(&inc(3, vec![0.3, 0.3, 0.3]), &g).unwrap(), 0.5);
        assert!(matches!(auc(&inc(3, vec![0.3; 3]), &Graph::new(3)), Err(Error::UndefinedMetric(_))));
        assert!(auc(&inc(3, vec![0.3; 3]), &Graph::complete(3)).is_err());
    }

    #[test]
    fn mamse_examples() {
        let g = truth01();
        let cfg = MamseConfig::default();
        assert_eq!(mamse(&inc(3, vec![1.0, 0.0, 0.0]), &g, &cfg).unwrap(), 0.0);
        assert_eq!(mamse(&inc(3, vec![0.0, 1.0, 1.0]), &g, &cfg).unwrap(), 1.0);
        let m = mamse(&inc(3, vec![0.8, 0.1, 0.3]), &g, &cfg).unwrap();
        assert!((m - 0.045).abs() < 1e-15);
        assert!(mamse(&inc(3, vec![0.5; 3]), &Graph::new(3), &cfg).is_err());
        assert_eq!(mamse(&inc(3, vec![0.5; 3]), &Graph::new(3), &MamseConfig { alpha: 0.0 }).unwrap(), 0.25);
    }

    #[test]
    fn mse_examples() {
        let g = truth01();
        assert_eq!(mse(&inc(3, vec![1.0, 0.0, 0.0]), &g).unwrap(), 0.0);
        assert_eq!(mse(&inc(3, vec![0.5; 3]), &g).unwrap(), 0.25);
    }

    #[test]
    fn cost_examples() {
        let cfg = CostMetricConfig::default();
        let times = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(cost_from_auc_series(&times, &[0.5, 0.7, 0.88, 0.9, 0.905], &cfg).unwrap(), 4.0);
        assert_eq!(cost_from_auc_series(&[2.5], &[0.7], &cfg).unwrap(), 2.5);
        assert_eq!(cost_from_auc_series(&times, &[0.9, 0.9, 0.9, 0.9, 0.9], &cfg).unwrap(), 1.0);
        assert!(cost_from_auc_series(&[], &[], &cfg).is_err());
        assert!(cost_from_auc_series(&[1.0, 1.0], &[0.5, 0.5], &cfg).is_err());

        let g = truth01();
        let snaps = vec![(0.1, inc(3, vec![0.2, 0.4, 0.4])), (0.2, inc(3, vec![0.9, 0.4, 0.4]))];
        assert_eq!(computational_cost(&snaps, &g, &cfg).unwrap(), 0.2);
    }

    /// Trapezoidal area under the ROC curve traced by every distinct threshold.
    fn trapezoid_auc(scores: &[f64], truth: &Graph) -> f64 {
        let labels: Vec<bool> = all_pairs(truth.p()).map(|e| truth.contains(e)).collect();
        let np = labels.iter().filter(|&&l| l).count() as f64;
        let nn = labels.len() as f64 - np;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut points = vec![(0.0, 0.0)];
        for t in thresholds {
            let tp = scores.iter().zip(&labels).filter(|(s, l)| **l && **s >= t).count() as f64;
            let fp = scores.iter().zip(&labels).filter(|(s, l)| !**l && **s >= t).count() as f64;
            points.push((fp / nn, tp / np));
        }
        points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
    }

    fn instance() -> impl Strategy<Value = (usize, Vec<f64>, Vec<bool>)> {
        (3usize..=6).prop_flat_map(|p| {
            let m = p * (p - 1) / 2;
            // Coarse scores so ties occur.
            (Just(p), prop::collection::vec((0u8..6).prop_map(|x| x as f64 / 5.0), m), prop::collection::vec(any::<bool>(), m))
        })
    }

    proptest! {
        #[test]
        fn auc_matches_trapezoid((p, scores, labels) in instance()) {
            let mut g = Graph::new(p);
            for (e, l) in all_pairs(p).zip(&labels) {
                if *l { g.insert(e); }
            }
            prop_assume!(g.edge_count() > 0 && g.edge_count() < labels.len());
            let a = auc(&inc(p, scores.clone()), &g).unwrap();
            prop_assert!((a - trapezoid_auc(&scores, &g)).abs() < 1e-12);
            let squashed: Vec<f64> = scores.iter().map(|x| (3.0 * x).exp() / 30.0).collect();
            prop_assert!((a - auc_scores(&squashed, &g).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn mamse_identities((p, scores, labels) in instance(), alpha in 0.0f64..=1.0) {
            let mut g = Graph::new(p);
            for (e, l) in all_pairs(p).zip(&labels) {
                if *l { g.insert(e); }
            }
            let (ne, nn) = (g.edge_count() as f64, (labels.len() - g.edge_count()) as f64);
            prop_assume!(ne > 0.0 && nn > 0.0);
            let pm = inc(p, scores.clone());
            // Complementary 0/1 predictions always sum to 1.
            let hard: Vec<f64> = scores.iter().map(|x| x.round()).collect();
            let flipped = inc(p, hard.iter().map(|x| 1.0 - x).collect());
            let cfg = MamseConfig { alpha };
            let total = mamse(&inc(p, hard), &g, &cfg).unwrap() + mamse(&flipped, &g, &cfg).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let at = |a: f64| mamse(&pm, &g, &MamseConfig { alpha: a }).unwrap();
            prop_assert!((at(alpha) - ((1.0 - alpha) * at(0.0) + alpha * at(1.0))).abs() < 1e-12);
            let balanced = MamseConfig { alpha: ne / (ne + nn) };
            prop_assert!((mamse(&pm, &g, &balanced).unwrap() - mse(&pm, &g).unwrap()).abs() < 1e-12);
        }
    }
}
