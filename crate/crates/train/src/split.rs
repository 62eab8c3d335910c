//! Scenario splits: seen-domain stratified 60/20/20 and unseen-domain
//! holdout.

use ecgdk_core::io::FeaturedSegment;
use ecgdk_nn::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Stratified-by-class 60/20/20 split across all domains.
    SeenDomain,
    /// All segments of the holdout domain go to test; the remainder splits
    /// 75/25 into train/val.
    UnseenDomain,
}

#[derive(Debug, Clone)]
pub struct SplitSets {
    pub train: Vec<FeaturedSegment>,
    pub val: Vec<FeaturedSegment>,
    pub test: Vec<FeaturedSegment>,
}

/// Deterministic scenario split. Unlabeled segments are excluded (they
/// cannot be scored); unusable ones stay in their subset so evaluation can
/// count them.
pub fn scenario_split(
    segments: &[FeaturedSegment],
    mode: ScenarioMode,
    holdout_domain: Option<&str>,
    seed: u64,
) -> Result<SplitSets, TrainError> {
    let labeled: Vec<&FeaturedSegment> =
        segments.iter().filter(|s| s.segment.label.is_some()).collect();
    if labeled.is_empty() {
        return Err(TrainError::Data("no labeled segments to split".into()));
    }
    match mode {
        ScenarioMode::SeenDomain => {
            let mut train = Vec::new();
            let mut val = Vec::new();
            let mut test = Vec::new();
            for class in ecgdk_core::Class::ALL {
                let mut group: Vec<&FeaturedSegment> = labeled
                    .iter()
                    .copied()
                    .filter(|s| s.segment.label == Some(class))
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let mut rng = Rng::new(seed, 30 + class.index() as u64);
                rng.shuffle(&mut group);
                let n = group.len();
                let n_train = ((n as f64) * 0.6).round() as usize;
                let n_val = (((n as f64) * 0.2).round() as usize).min(n - n_train);
                for (i, s) in group.into_iter().enumerate() {
                    if i < n_train {
                        train.push(s.clone());
                    } else if i < n_train + n_val {
                        val.push(s.clone());
                    } else {
                        test.push(s.clone());
                    }
                }
            }
            Ok(SplitSets { train, val, test })
        }
        ScenarioMode::UnseenDomain => {
            let holdout = holdout_domain.ok_or_else(|| {
                TrainError::Data("unseen-domain split needs a holdout domain".into())
            })?;
            let test: Vec<FeaturedSegment> = labeled
                .iter()
                .filter(|s| s.segment.domain_id == holdout)
                .map(|s| (*s).clone())
                .collect();
            if test.is_empty() {
                return Err(TrainError::Data(format!(
                    "holdout domain {holdout:?} not present in the data"
                )));
            }
            let mut rest: Vec<&FeaturedSegment> = labeled
                .iter()
                .copied()
                .filter(|s| s.segment.domain_id != holdout)
                .collect();
            if rest.is_empty() {
                return Err(TrainError::Data(
                    "no segments left outside the holdout domain".into(),
                ));
            }
            let mut rng = Rng::new(seed, 35);
            rng.shuffle(&mut rest);
            let n_train = ((rest.len() as f64) * 0.75).round() as usize;
            let (train, val) = rest.split_at(n_train.min(rest.len()));
            Ok(SplitSets {
                train: train.iter().map(|s| (*s).clone()).collect(),
                val: val.iter().map(|s| (*s).clone()).collect(),
                test,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecgdk_core::{Class, HrvFeatures, Segment, SEGMENT_LEN};

    fn item(class: Class, domain: &str, i: usize) -> FeaturedSegment {
        FeaturedSegment {
            segment: Segment {
                samples: vec![0.0; SEGMENT_LEN],
                label: Some(class),
                domain_id: domain.into(),
                source_record: format!("r{i}"),
                start_index: 0,
            },
            features: Some(HrvFeatures::from_vector([1.0; 7])),
        }
    }

    fn dataset() -> Vec<FeaturedSegment> {
        let mut v = Vec::new();
        let mut i = 0;
        for class in Class::ALL {
            for domain in ["a", "b", "wearable"] {
                for _ in 0..40 {
                    v.push(item(class, domain, i));
                    i += 1;
                }
            }
        }
        v
    }

    #[test]
    fn seen_domain_ratios() {
        let data = dataset();
        let s = scenario_split(&data, ScenarioMode::SeenDomain, None, 1).unwrap();
        let total = data.len();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), total);
        assert!((s.train.len() as f64 / total as f64 - 0.6).abs() < 0.02);
        assert!((s.val.len() as f64 / total as f64 - 0.2).abs() < 0.02);
        // Stratification: every class appears in every subset.
        for class in Class::ALL {
            for subset in [&s.train, &s.val, &s.test] {
                assert!(subset.iter().any(|x| x.segment.label == Some(class)));
            }
        }
    }

    #[test]
    fn unseen_domain_exclusion() {
        let data = dataset();
        let s = scenario_split(&data, ScenarioMode::UnseenDomain, Some("wearable"), 2).unwrap();
        assert!(s.test.iter().all(|x| x.segment.domain_id == "wearable"));
        assert!(s.train.iter().all(|x| x.segment.domain_id != "wearable"));
        assert!(s.val.iter().all(|x| x.segment.domain_id != "wearable"));
        assert_eq!(s.test.len(), 120);
        let rest = s.train.len() + s.val.len();
        assert!((s.train.len() as f64 / rest as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_membership() {
        let data = dataset();
        let a = scenario_split(&data, ScenarioMode::SeenDomain, None, 7).unwrap();
        let b = scenario_split(&data, ScenarioMode::SeenDomain, None, 7).unwrap();
        let ids = |v: &[FeaturedSegment]| -> Vec<String> {
            v.iter().map(|s| s.segment.source_record.clone()).collect()
        };
        assert_eq!(ids(&a.train), ids(&b.train));
        assert_eq!(ids(&a.val), ids(&b.val));
        assert_eq!(ids(&a.test), ids(&b.test));
    }

    #[test]
    fn missing_holdout_is_error() {
        let data = dataset();
        assert!(scenario_split(&data, ScenarioMode::UnseenDomain, Some("nope"), 0).is_err());
        assert!(scenario_split(&data, ScenarioMode::UnseenDomain, None, 0).is_err());
    }
}
