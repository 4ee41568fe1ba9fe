use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::camera::{localize, synthesize_bbox, CameraModel};
use super::embedding::{EmbeddingProvider, FeatureVec, Observation};
use super::recognize::{encode_text, recognize, similarity_scores, DescriptionSet};
use super::PerceptionError;
use crate::msgbus::{topics, Bus, BusError, Message};
use crate::world_sim::{SceneObject, SensorSnapshot};

/// Position error below which a correctly labeled detection counts as correct.
pub const DEFAULT_CORRECT_TOLERANCE: f64 = 0.5;

/// A recognized object with its world position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub score: f64,
    pub x: f64,
    pub y: f64,
    pub stamp: f64,
}

/// A detection paired with the ground-truth object it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDetection {
    pub detection: Detection,
    pub truth: SceneObject,
    pub position_error: f64,
    pub correct: bool,
}

/// Correct when the label matches and the position error is under `tol`.
pub fn detection_correct(det: &Detection, truth: &SceneObject, tol: f64) -> bool {
    det.label == truth.label && (det.x - truth.x).hypot(det.y - truth.y) < tol
}

pub struct PerceptionNode {
    provider: Arc<dyn EmbeddingProvider>,
    set: DescriptionSet,
    texts: Vec<FeatureVec>,
    pub camera: CameraModel,
    pub noise_sigma: f64,
    pub tolerance: f64,
    rng: ChaCha8Rng,
}

impl PerceptionNode {
    pub fn new(
        provider: Arc<dyn EmbeddingProvider>,
        set: DescriptionSet,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self, PerceptionError> {
        let texts = encode_text(provider.as_ref(), &set)?;
        Ok(Self {
            provider,
            set,
            texts,
            camera: CameraModel::default(),
            noise_sigma,
            tolerance: DEFAULT_CORRECT_TOLERANCE,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn descriptions(&self) -> &DescriptionSet {
        &self.set
    }

    /// Recognize and localize every visible object in the snapshot.
    pub fn perceive(&mut self, snapshot: &SensorSnapshot) -> Vec<ScoredDetection> {
        let mut out = Vec::with_capacity(snapshot.visible.len());
        for vis in &snapshot.visible {
            match self.detect_one(snapshot, vis) {
                Ok(det) => {
                    let position_error = (det.x - vis.object.x).hypot(det.y - vis.object.y);
                    let correct = detection_correct(&det, &vis.object, self.tolerance);
                    out.push(ScoredDetection {
                        detection: det,
                        truth: vis.object.clone(),
                        position_error,
                        correct,
                    });
                }
                Err(e) => log::warn!("skipping '{}': {e}", vis.object.label),
            }
        }
        out
    }

    fn detect_one(
        &mut self,
        snapshot: &SensorSnapshot,
        vis: &crate::world_sim::VisibleObject,
    ) -> Result<Detection, PerceptionError> {
        let obs = Observation::SimulatedCrop {
            label: vis.object.label.clone(),
            noise_sigma: self.noise_sigma,
        };
        let image = self.provider.encode_image(&obs, &mut self.rng)?;
        let scores = similarity_scores(&image, &self.texts)?;
        let (label, score) = recognize(&scores, &self.set)?;
        let bbox = synthesize_bbox(vis, &self.camera).ok_or(PerceptionError::BBoxOutsideImage)?;
        let (x, y) = localize(&bbox, snapshot, &self.camera)?;
        Ok(Detection {
            label,
            score,
            x,
            y,
            stamp: snapshot.stamp,
        })
    }

    /// Perceive and publish the full detection list on `detections`, even
    /// when empty.
    pub fn perceive_and_publish(
        &mut self,
        snapshot: &SensorSnapshot,
        bus: &Bus,
    ) -> Result<Vec<ScoredDetection>, BusError> {
        let scored = self.perceive(snapshot);
        let dets = scored.iter().map(|s| s.detection.clone()).collect();
        bus.publish(topics::DETECTIONS, Message::Detections(dets))?;
        Ok(scored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2;
    use crate::perception::MockProvider;
    use crate::world_sim::{NoiseConfig, OccupancyGrid, WorldModel};

    fn world(objects: Vec<SceneObject>) -> WorldModel {
        let grid = OccupancyGrid::new(100, 100, 0.1, (0.0, 0.0));
        let mut w = WorldModel::new("t", grid, Pose2::new(1.0, 5.0, 0.0));
        w.objects = objects;
        w
    }

    fn obj(label: &str, x: f64, y: f64) -> SceneObject {
        SceneObject {
            label: label.into(),
            x,
            y,
            radius: 0.2,
        }
    }

    fn node(sigma: f64) -> PerceptionNode {
        let set = DescriptionSet::new(&["table", "chair", "person", "trash_bin"]).unwrap();
        PerceptionNode::new(Arc::new(MockProvider::default()), set, sigma, 1).unwrap()
    }

    #[test]
    fn empty_view_publishes_empty_list() {
        let bus = Bus::new();
        let sub = bus.subscribe(topics::DETECTIONS).unwrap();
        let w = world(vec![]);
        let snap = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let out = node(0.0).perceive_and_publish(&snap, &bus).unwrap();
        assert!(out.is_empty());
        let env = sub.try_recv().unwrap();
        assert_eq!(*env.payload, Message::Detections(vec![]));
    }

    #[test]
    fn noiseless_person_is_exact() {
        let w = world(vec![obj("person", 4.0, 6.0)]);
        let snap = w.sense(&NoiseConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let out = node(0.0).perceive(&snap);
        assert_eq!(out.len(), 1);
        let d = &out[0].detection;
        assert_eq!(d.label, "person");
        assert!((d.x - 4.0).abs() < 1e-6 && (d.y - 6.0).abs() < 1e-6);
        assert!(out[0].correct);
        assert!((d.score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn correctness_needs_label_and_position() {
        let truth = obj("chair", 1.0, 1.0);
        let mut d = Detection {
            label: "chair".into(),
            score: 0.9,
            x: 1.3,
            y: 1.0,
            stamp: 0.0,
        };
        assert!(detection_correct(&d, &truth, 0.5));
        d.x = 1.5;
        assert!(!detection_correct(&d, &truth, 0.5));
        d.x = 1.0;
        d.label = "table".into();
        assert!(!detection_correct(&d, &truth, 0.5));
    }
}
