use serde::Serialize;

use super::{DirectionKind, PredictiveDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SslAdvice {
    TheoreticallyFutile,
    MayHelp,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationAdvice {
    Suitable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Advisory {
    pub ssl: SslAdvice,
    pub ssl_rationale: String,
    pub augmentation: AugmentationAdvice,
    pub augmentation_note: String,
    pub caveats: Vec<String>,
}

/// Semi-supervised learning and augmentation advice; depends only on the
/// predictive direction.
pub fn advise_learning_strategies(direction: &PredictiveDirection) -> Advisory {
    let mut caveats = Vec::new();
    let (ssl, ssl_rationale) = match direction.kind {
        DirectionKind::Causal => (
            SslAdvice::TheoreticallyFutile,
            "the image causes the target, so the image distribution P(X) carries no information about \
             the mechanism P(Y|X); unlabelled images cannot improve the predictor in principle, apart \
             from regularisation side effects",
        ),
        DirectionKind::Anticausal | DirectionKind::Confounded => (
            SslAdvice::MayHelp,
            "the target causes the image, so P(X) and P(Y|X) can share information; unlabelled images \
             may improve the predictor",
        ),
        DirectionKind::Unrelated => (
            SslAdvice::Indeterminate,
            "image and target are not causally connected in the diagram; no direction-based advice",
        ),
    };
    match direction.kind {
        DirectionKind::Anticausal => caveats.push(
            "labelled and unlabelled sets must share the target distribution; a prevalence mismatch \
             between them can hurt performance"
                .to_string(),
        ),
        DirectionKind::Confounded => {
            caveats.push(
                "image and target only share a common cause; advice follows the anticausal case by analogy \
                 and is not guaranteed"
                    .to_string(),
            );
            caveats.push(
                "labelled and unlabelled sets must share the target distribution".to_string(),
            );
        }
        _ => {}
    }
    let augmentation_note = match direction.kind {
        DirectionKind::Causal => {
            "suitable: when the target is derived from the image (e.g. a segmentation), apply spatial \
             transforms equivariantly to image and target; intensity transforms act as invariances"
        }
        _ => {
            "suitable: for image-level targets use transforms the label is invariant to; for dense \
             targets apply spatial transforms equivariantly to image and target"
        }
    };
    Advisory {
        ssl,
        ssl_rationale: ssl_rationale.to_string(),
        augmentation: AugmentationAdvice::Suitable,
        augmentation_note: augmentation_note.to_string(),
        caveats,
    }
}
