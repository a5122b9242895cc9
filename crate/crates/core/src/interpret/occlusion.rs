use serde::{Deserialize, Serialize};

use super::{check_input, AttributionVector, Explainable};
use crate::error::{Error, Result};

/// Predicted-class probability as top-ranked features are replaced by the
/// baseline one at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionCurve {
    pub ranking: Vec<usize>,
    pub class: usize,
    /// `probabilities[k]` after occluding the first `k` ranked features.
    pub probabilities: Vec<f64>,
}

impl OcclusionCurve {
    /// Probability drop caused by each occlusion step.
    pub fn drops(&self) -> Vec<f64> {
        self.probabilities.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Mean probability over the curve; lower means a sharper decline.
    pub fn area(&self) -> f64 {
        self.probabilities.iter().sum::<f64>() / self.probabilities.len() as f64
    }
}

/// Feature indices by descending `|score|`, ties by ascending index.
pub fn rank_features(attribution: &AttributionVector) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..attribution.scores.len()).collect();
    idx.sort_by(|&a, &b| {
        attribution.scores[b]
            .abs()
            .total_cmp(&attribution.scores[a].abs())
            .then(a.cmp(&b))
    });
    idx
}

/// `baseline` defaults to zero, the standardized feature mean.
pub fn occlusion_curve<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    ranking: &[usize],
    baseline: Option<&[f64]>,
) -> Result<OcclusionCurve> {
    check_input(model, x)?;
    let d = x.len();
    let mut seen = vec![false; d];
    if ranking.len() != d || ranking.iter().any(|&j| j >= d || std::mem::replace(&mut seen[j], true)) {
        return Err(Error::Parameter(format!(
            "ranking {ranking:?} is not a permutation of 0..{d}"
        )));
    }
    let zero = vec![0.0; d];
    let baseline = baseline.unwrap_or(&zero);
    if baseline.len() != d {
        return Err(Error::Shape(format!("baseline has {} features, input has {d}", baseline.len())));
    }
    let p0 = model.probabilities(x)?;
    let class = crate::model::argmax(&p0);
    let mut probabilities = Vec::with_capacity(d + 1);
    probabilities.push(p0[class]);
    let mut occluded = x.to_vec();
    for &j in ranking {
        occluded[j] = baseline[j];
        probabilities.push(model.probabilities(&occluded)?[class]);
    }
    Ok(OcclusionCurve {
        ranking: ranking.to_vec(),
        class,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::{saliency, AffineModel};
    use crate::numerics::Matrix;

    fn dominant() -> AffineModel {
        AffineModel::new(
            Matrix::from_rows(&[[4.0, 0.2, -0.1, 0.3], [-4.0, -0.2, 0.1, -0.3]]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn ranking_is_stable() {
        let a = AttributionVector {
            instance: None,
            class: 0,
            method: "gradient".into(),
            scores: vec![0.5, -2.0, 0.5, 2.0, 0.0],
        };
        assert_eq!(rank_features(&a), vec![1, 3, 0, 2, 4]);
    }

    #[test]
    fn curve_endpoints() {
        let m = dominant();
        let x = [1.0, 0.5, -1.0, 0.7];
        let curve = occlusion_curve(&m, &x, &[3, 2, 1, 0], None).unwrap();
        assert_eq!(curve.probabilities[0], m.probabilities(&x).unwrap()[curve.class]);
        assert_eq!(curve.probabilities[4], m.probabilities(&[0.0; 4]).unwrap()[curve.class]);
        assert!(curve.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn dominant_feature_gives_largest_first_drop() {
        let m = dominant();
        let x = [1.0, 0.5, -1.0, 0.7];
        let ranking = rank_features(&saliency(&m, &x, 0).unwrap());
        assert_eq!(ranking[0], 0);
        let drops = occlusion_curve(&m, &x, &ranking, None).unwrap().drops();
        assert!(drops[1..].iter().all(|&d| d < drops[0]));
    }

    #[test]
    fn rejects_non_permutations() {
        let m = dominant();
        let x = [0.0; 4];
        for bad in [&[0, 1, 2][..], &[0, 1, 2, 2], &[0, 1, 2, 4]] {
            assert!(matches!(occlusion_curve(&m, &x, bad, None), Err(Error::Parameter(_))));
        }
    }
}
