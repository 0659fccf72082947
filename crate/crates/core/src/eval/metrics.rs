use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clause-level precision, recall and F1 over the positive (cause) class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub proposed: usize,
    pub annotated: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(proposed: usize, annotated: usize, correct: usize) -> Result<Self> {
        if correct > proposed.min(annotated) {
            return Err(Error::Argument(format!(
                "correct ({correct}) exceeds proposed ({proposed}) or annotated ({annotated})"
            )));
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, proposed);
        let recall = ratio(correct, annotated);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Ok(Self { proposed, annotated, correct, precision, recall, f1 })
    }
}

pub fn compute_metrics(predicted: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<Metrics> {
    if predicted.len() != gold.len() {
        return Err(Error::Argument(format!(
            "{} predicted documents vs {} gold documents",
            predicted.len(),
            gold.len()
        )));
    }
    let (mut proposed, mut annotated, mut correct) = (0, 0, 0);
    for (k, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::Argument(format!(
                "document {k}: {} predictions vs {} gold labels",
                p.len(),
                g.len()
            )));
        }
        for (&p, &g) in p.iter().zip(g) {
            proposed += usize::from(p);
            annotated += usize::from(g);
            correct += usize::from(p && g);
        }
    }
    Metrics::from_counts(proposed, annotated, correct)
}

/// Share of documents by number of positive labels: 0, 1, 2 and 3 or more.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CauseCountHistogram {
    pub shares: [f64; 4],
}

impl CauseCountHistogram {
    pub fn share(&self, count: usize) -> f64 {
        self.shares[count.min(3)]
    }

    pub fn zero(&self) -> f64 {
        self.shares[0]
    }

    pub fn at_least_two(&self) -> f64 {
        self.shares[2] + self.shares[3]
    }
}

pub fn cause_count_histogram(labels: &[Vec<bool>]) -> Result<CauseCountHistogram> {
    if labels.is_empty() {
        return Err(Error::Argument("histogram of an empty prediction set".into()));
    }
    let mut counts = [0usize; 4];
    for doc in labels {
        counts[doc.iter().filter(|&&b| b).count().min(3)] += 1;
    }
    let n = labels.len() as f64;
    Ok(CauseCountHistogram { shares: counts.map(|c| c as f64 / n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let m = Metrics::from_counts(4, 5, 3).unwrap();
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_counts() {
        let m = compute_metrics(&[vec![false, false]], &[vec![true, false]]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let g = vec![vec![true, false], vec![false, false, true]];
        let m = compute_metrics(&g, &g).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert!(Metrics::from_counts(1, 5, 2).is_err());
    }

    #[test]
    fn shape_mismatch() {
        assert!(compute_metrics(&[vec![true]], &[vec![true, false]]).is_err());
        assert!(compute_metrics(&[vec![true]], &[]).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = cause_count_histogram(&[vec![true, false], vec![false, true]]).unwrap();
        assert_eq!(h.shares, [0.0, 1.0, 0.0, 0.0]);
        let h = cause_count_histogram(&[vec![false], vec![true]]).unwrap();
        assert_eq!(h.shares, [0.5, 0.5, 0.0, 0.0]);
        let h = cause_count_histogram(&[vec![true; 5]]).unwrap();
        assert_eq!(h.share(7), 1.0);
        assert!(cause_count_histogram(&[]).is_err());
    }

    fn label_sets() -> impl Strategy<Value = Vec<(Vec<bool>, Vec<bool>)>> {
        prop::collection::vec(
            (1usize..12).prop_flat_map(|n| {
                (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n))
            }),
            1..20,
        )
    }

    proptest! {
        #[test]
        fn f_is_zero_iff_nothing_correct(set in label_sets()) {
            let (p, g): (Vec<_>, Vec<_>) = set.into_iter().unzip();
            let m = compute_metrics(&p, &g).unwrap();
            prop_assert_eq!(m.f1 == 0.0, m.correct == 0);
            // with nothing annotated and nothing proposed F is 0 by convention
            let exact = m.annotated > 0 && m.proposed == m.correct && m.annotated == m.correct;
            prop_assert_eq!(m.f1 == 1.0, exact);
        }

        #[test]
        fn document_order_does_not_matter(set in label_sets()) {
            let (p, g): (Vec<_>, Vec<_>) = set.into_iter().unzip();
            let a = compute_metrics(&p, &g).unwrap();
            let rp: Vec<_> = p.iter().rev().cloned().collect();
            let rg: Vec<_> = g.iter().rev().cloned().collect();
            prop_assert_eq!(a, compute_metrics(&rp, &rg).unwrap());
        }
    }
}
