//! ROC AUC, accuracy and the quantized/reference AUC ratio.
//!
//! AUC is the Mann-Whitney statistic: the fraction of (positive, negative)
//! pairs where the positive scores higher, ties counting one half. It is
//! computed from midranks in `O(n log n)`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("degenerate labels: both classes must be present")]
    DegenerateLabels,
    #[error("length mismatch: {scores} scores, {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("score sets differ: {0}")]
    Mismatch(String),
    #[error("reference AUC is zero for class {0}")]
    ZeroReference(usize),
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("empty input")]
    Empty,
}

/// Scores `[n x k]` with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl ScoredDataset {
    pub fn new(scores: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, MetricsError> {
        if scores.len() != labels.len() {
            return Err(MetricsError::Length {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        let k = scores.first().map_or(0, Vec::len);
        if scores.iter().any(|r| r.len() != k) {
            return Err(MetricsError::Mismatch("ragged score rows".into()));
        }
        // A single output column scores the positive class of a binary task.
        let classes = k.max(2);
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(MetricsError::Label { label, classes });
        }
        Ok(Self { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    /// AUC per class: one entry for a single-output binary model, one-vs-rest
    /// per column otherwise.
    pub fn class_aucs(&self) -> Result<Vec<f64>, MetricsError> {
        let k = self.num_outputs();
        if k == 0 {
            return Err(MetricsError::Empty);
        }
        if k == 1 {
            let s: Vec<f64> = self.scores.iter().map(|r| r[0]).collect();
            let y: Vec<bool> = self.labels.iter().map(|&l| l == 1).collect();
            return Ok(vec![roc_auc(&s, &y)?]);
        }
        (0..k)
            .map(|c| {
                let s: Vec<f64> = self.scores.iter().map(|r| r[c]).collect();
                let y: Vec<bool> = self.labels.iter().map(|&l| l == c).collect();
                roc_auc(&s, &y)
            })
            .collect()
    }

    /// Fraction of rows whose predicted class matches the label. A single
    /// output is thresholded at 0.5.
    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        if self.is_empty() {
            return Err(MetricsError::Empty);
        }
        let hits = self
            .scores
            .iter()
            .zip(&self.labels)
            .filter(|(s, &l)| predicted_class(s) == l)
            .count();
        Ok(hits as f64 / self.len() as f64)
    }
}

fn predicted_class(scores: &[f64]) -> usize {
    if scores.len() == 1 {
        return usize::from(scores[0] >= 0.5);
    }
    // First maximum wins.
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Binary ROC AUC with midrank ties.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of positives, so midranks stay integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the midrank (i + 1 + j) / 2.
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += pos_in_group * (i + 1 + j) as u128;
        i = j;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    // U = R_pos - p(p+1)/2, doubled.
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * q) as f64)
}

/// Per-class `AUC(quantized) / AUC(reference)`.
pub fn auc_ratio(quantized: &ScoredDataset, reference: &ScoredDataset) -> Result<Vec<f64>, MetricsError> {
    if quantized.labels != reference.labels {
        return Err(MetricsError::Mismatch("labels differ".into()));
    }
    if quantized.num_outputs() != reference.num_outputs() {
        return Err(MetricsError::Mismatch(format!(
            "{} vs {} outputs",
            quantized.num_outputs(),
            reference.num_outputs()
        )));
    }
    let reference = reference.class_aucs()?;
    ratio_against(quantized, &reference)
}

/// Ratios against precomputed reference AUCs.
pub fn ratio_against(quantized: &ScoredDataset, reference_aucs: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let q = quantized.class_aucs()?;
    if q.len() != reference_aucs.len() {
        return Err(MetricsError::Mismatch(format!(
            "{} vs {} classes",
            q.len(),
            reference_aucs.len()
        )));
    }
    q.iter()
        .zip(reference_aucs)
        .enumerate()
        .map(|(c, (a, r))| {
            if *r == 0.0 {
                Err(MetricsError::ZeroReference(c))
            } else {
                Ok(a / r)
            }
        })
        .collect()
}

pub fn accuracy(scores: &ScoredDataset) -> Result<f64, MetricsError> {
    scores.accuracy()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        let y = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &y).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0.0, 0.1, 0.5, 0.9], &y).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 4], &y).unwrap(), 0.5);
        assert_eq!(roc_auc(&[1.0, 2.0], &[true, true]), Err(MetricsError::DegenerateLabels));
        assert!(MetricsError::DegenerateLabels.to_string().contains("degenerate labels"));
    }

    #[test]
    fn ratio_identity_and_perturbation() {
        let labels = vec![0, 0, 1, 1];
        let r = ScoredDataset::new(vec![vec![0.1], vec![0.4], vec![0.35], vec![0.8]], labels.clone()).unwrap();
        assert_eq!(auc_ratio(&r, &r).unwrap(), vec![1.0]);
        // Lifting 0.35 above 0.4 separates the classes: 1.0 / 0.75.
        let q = ScoredDataset::new(vec![vec![0.1], vec![0.4], vec![0.45], vec![0.8]], labels.clone()).unwrap();
        assert_eq!(auc_ratio(&q, &r).unwrap(), vec![4.0 / 3.0]);
        let flat = ScoredDataset::new(vec![vec![0.5]; 4], labels.clone()).unwrap();
        assert_eq!(auc_ratio(&q, &flat).unwrap(), vec![2.0]);
        let zero = ScoredDataset::new(vec![vec![0.9], vec![0.8], vec![0.1], vec![0.0]], labels).unwrap();
        assert_eq!(auc_ratio(&q, &zero), Err(MetricsError::ZeroReference(0)));
    }

    #[test]
    fn one_vs_rest() {
        let s = ScoredDataset::new(
            vec![
                vec![0.8, 0.1, 0.1],
                vec![0.2, 0.7, 0.1],
                vec![0.1, 0.2, 0.7],
                vec![0.5, 0.3, 0.2],
            ],
            vec![0, 1, 2, 1],
        )
        .unwrap();
        let aucs = s.class_aucs().unwrap();
        assert_eq!(aucs.len(), 3);
        assert_eq!(aucs[2], 1.0);
        assert_eq!(s.accuracy().unwrap(), 0.75);
    }

    #[test]
    fn binary_accuracy_thresholds_at_half() {
        let s = ScoredDataset::new(vec![vec![0.2], vec![0.5], vec![0.9]], vec![0, 1, 0]).unwrap();
        assert_eq!(s.accuracy().unwrap(), 2.0 / 3.0);
        assert!(ScoredDataset::new(vec![vec![0.2]], vec![2]).is_err());
    }
}
