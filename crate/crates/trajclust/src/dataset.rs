//! Longitudinal dataset container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global z-score statistics of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub sd: f64,
}

/// N subjects, each measured at the same T timesteps.
///
/// Rows are rectangular, values finite, subject ids unique; all enforced
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    subject_ids: Vec<String>,
    values: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
    norm: Option<NormStats>,
}

impl TrajectoryDataset {
    pub fn new(
        subject_ids: Vec<String>,
        values: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if subject_ids.len() != values.len() {
            return Err(Error::SizeMismatch { a: subject_ids.len(), b: values.len() });
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(Error::SizeMismatch { a: labels.len(), b: values.len() });
            }
        }
        let t = values.first().map(|row| row.len()).unwrap_or(0);
        for (id, row) in subject_ids.iter().zip(&values) {
            if row.len() != t {
                return Err(Error::RaggedRows {
                    subject_id: id.clone(),
                    expected: t,
                    got: row.len(),
                });
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { subject_id: id.clone(), col });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for id in &subject_ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(TrajectoryDataset { subject_ids, values, labels, norm: None })
    }

    pub fn n_subjects(&self) -> usize {
        self.values.len()
    }

    /// Number of timesteps T (0 for an empty dataset).
    pub fn seq_len(&self) -> usize {
        self.values.first().map(|row| row.len()).unwrap_or(0)
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Normalization statistics, present only on normalized copies.
    pub fn norm(&self) -> Option<NormStats> {
        self.norm
    }

    /// Global mean and sample standard deviation over all N*T values.
    ///
    /// A constant dataset gets sd = 1 so normalization stays defined.
    pub fn norm_stats(&self) -> NormStats {
        let n = (self.n_subjects() * self.seq_len()).max(1) as f64;
        let mean = self.values.iter().flatten().sum::<f64>() / n;
        let ss: f64 = self
            .values
            .iter()
            .flatten()
            .map(|v| (v - mean) * (v - mean))
            .sum();
        let sd = if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        NormStats { mean, sd: if sd > 0.0 { sd } else { 1.0 } }
    }

    /// Z-score normalized copy using the given statistics.
    pub fn normalized_with(&self, stats: NormStats) -> TrajectoryDataset {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| (v - stats.mean) / stats.sd).collect())
            .collect();
        TrajectoryDataset {
            subject_ids: self.subject_ids.clone(),
            values,
            labels: self.labels.clone(),
            norm: Some(stats),
        }
    }

    /// Z-score normalized copy using this dataset's own statistics.
    pub fn normalized(&self) -> TrajectoryDataset {
        self.normalized_with(self.norm_stats())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows_naming_the_subject() {
        let err = TrajectoryDataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![1.0]],
            None,
        )
        .unwrap_err();
        match err {
            Error::RaggedRows { subject_id, expected, got } => {
                assert_eq!(subject_id, "b");
                assert_eq!((expected, got), (2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_non_finite_values() {
        assert!(matches!(
            TrajectoryDataset::new(
                vec!["a".into(), "a".into()],
                vec![vec![1.0], vec![2.0]],
                None,
            ),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(
            TrajectoryDataset::new(vec!["a".into()], vec![vec![f64::INFINITY]], None),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn normalization_round_trips() {
        let ds = TrajectoryDataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 2.0], vec![4.0, 6.0]],
            None,
        )
        .unwrap();
        let stats = ds.norm_stats();
        assert_eq!(stats.mean, 3.0);
        let normed = ds.normalized();
        assert_eq!(normed.norm(), Some(stats));
        let mean_after: f64 =
            normed.values().iter().flatten().sum::<f64>() / 4.0;
        assert!(mean_after.abs() < 1e-15);
    }

    #[test]
    fn constant_dataset_gets_unit_sd() {
        let ds = TrajectoryDataset::new(vec!["a".into()], vec![vec![5.0, 5.0]], None).unwrap();
        assert_eq!(ds.norm_stats().sd, 1.0);
    }
}
