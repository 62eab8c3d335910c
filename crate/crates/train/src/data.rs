//! Dataset assembly: joining segments with features and building batch
//! tensors for the model.

use ecgdk_core::io::FeaturedSegment;
use ecgdk_core::{features_for_segment, Class, Segment};
use ecgdk_nn::Tensor;

use crate::error::TrainError;

/// Runs per-segment feature extraction over a list of segments.
pub fn attach_features(segments: Vec<Segment>) -> Vec<FeaturedSegment> {
    segments
        .into_iter()
        .map(|segment| {
            let features = features_for_segment(&segment).usable();
            FeaturedSegment { segment, features }
        })
        .collect()
}

/// Joins a segment file with a feature file by line order, checking that the
/// identities line up.
pub fn join_segments_features(
    segments: Vec<Segment>,
    features: Vec<FeaturedSegment>,
) -> Result<Vec<FeaturedSegment>, TrainError> {
    if segments.len() != features.len() {
        return Err(TrainError::Data(format!(
            "segment file has {} entries, feature file has {}",
            segments.len(),
            features.len()
        )));
    }
    for (s, f) in segments.iter().zip(&features) {
        if s.source_record != f.segment.source_record || s.start_index != f.segment.start_index {
            return Err(TrainError::Data(format!(
                "feature row {}@{} does not match segment {}@{}",
                f.segment.source_record, f.segment.start_index, s.source_record, s.start_index
            )));
        }
    }
    Ok(features)
}

/// Usable, labeled examples (the trainable subset).
pub fn trainable(set: &[FeaturedSegment]) -> Vec<&FeaturedSegment> {
    set.iter()
        .filter(|e| e.features.is_some() && e.segment.label.is_some())
        .collect()
}

/// Usable examples regardless of label (MMD target batches).
pub fn usable(set: &[FeaturedSegment]) -> Vec<&FeaturedSegment> {
    set.iter().filter(|e| e.features.is_some()).collect()
}

/// Distinct classes present among usable labeled examples.
pub fn classes_present(set: &[FeaturedSegment]) -> Vec<Class> {
    let mut present = [false; 3];
    for e in set {
        if e.features.is_some() {
            if let Some(c) = e.segment.label {
                present[c.index()] = true;
            }
        }
    }
    Class::ALL
        .into_iter()
        .filter(|c| present[c.index()])
        .collect()
}

/// Builds `[n, 1, len]` ECG and `[n, 1, 7]` feature tensors plus the target
/// indices for a batch of examples. Examples must be usable; labels are
/// optional (returned only for labeled rows, in order).
pub fn batch_tensors(
    batch: &[&FeaturedSegment],
    with_features: bool,
) -> (Tensor, Option<Tensor>, Vec<usize>) {
    let n = batch.len();
    let len = batch[0].segment.samples.len();
    let mut ecg = Vec::with_capacity(n * len);
    let mut feats = Vec::with_capacity(n * 7);
    let mut targets = Vec::new();
    for e in batch {
        ecg.extend_from_slice(&e.segment.samples);
        if with_features {
            let f = e
                .features
                .expect("batch_tensors: unusable example in batch")
                .to_vector();
            feats.extend_from_slice(&f);
        }
        if let Some(c) = e.segment.label {
            targets.push(c.index());
        }
    }
    let ecg = Tensor::from_vec(&[n, 1, len], ecg, false);
    let feats = with_features.then(|| Tensor::from_vec(&[n, 1, 7], feats, false));
    (ecg, feats, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecgdk_core::{HrvFeatures, SEGMENT_LEN};

    fn seg(label: Option<Class>, domain: &str, start: usize) -> Segment {
        Segment {
            samples: vec![0.1; SEGMENT_LEN],
            label,
            domain_id: domain.into(),
            source_record: "r".into(),
            start_index: start,
        }
    }

    fn feat(label: Option<Class>, usable: bool) -> FeaturedSegment {
        FeaturedSegment {
            segment: seg(label, "d", 0),
            features: usable.then(|| HrvFeatures::from_vector([1.0, 0.1, 0.5, 0.2, 0.2, 0.1, 0.1])),
        }
    }

    #[test]
    fn trainable_filters_unusable_and_unlabeled() {
        let set = vec![
            feat(Some(Class::Normal), true),
            feat(Some(Class::Af), false),
            feat(None, true),
        ];
        assert_eq!(trainable(&set).len(), 1);
        assert_eq!(usable(&set).len(), 2);
        assert_eq!(classes_present(&set), vec![Class::Normal]);
    }

    #[test]
    fn join_validates_alignment() {
        let segs = vec![seg(Some(Class::Normal), "d", 0)];
        let feats = vec![feat(Some(Class::Normal), true)];
        assert!(join_segments_features(segs.clone(), feats).is_ok());

        let mut wrong = vec![feat(Some(Class::Normal), true)];
        wrong[0].segment.start_index = 1000;
        assert!(join_segments_features(segs, wrong).is_err());
    }

    #[test]
    fn batch_shapes() {
        let set = vec![feat(Some(Class::Pvc), true), feat(Some(Class::Af), true)];
        let refs: Vec<&FeaturedSegment> = set.iter().collect();
        let (ecg, feats, targets) = batch_tensors(&refs, true);
        assert_eq!(ecg.shape(), &[2, 1, SEGMENT_LEN]);
        assert_eq!(feats.unwrap().shape(), &[2, 1, 7]);
        assert_eq!(targets, vec![2, 1]);
    }
}
