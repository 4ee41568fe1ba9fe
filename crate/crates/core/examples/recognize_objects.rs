//! Zero-shot recognition: image features scored against text descriptions,
//! argmax wins. Noise on the image features lowers accuracy.
//!
//! `cargo run --example recognize_objects`

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convo_robot::geometry::Pose2;
use convo_robot::perception::{
    encode_text, recognize, similarity_scores, DescriptionSet, EmbeddingProvider, MockProvider, Observation,
    PerceptionNode,
};
use convo_robot::world_sim::{NoiseConfig, OccupancyGrid, SceneObject, WorldModel};

fn main() {
    let provider = Arc::new(MockProvider::default());
    let set = DescriptionSet::new(&["table", "chair", "person", "potted_plant"]).unwrap();
    let texts = encode_text(provider.as_ref(), &set).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let crop = Observation::SimulatedCrop {
        label: "chair".into(),
        noise_sigma: 0.1,
    };
    let image = provider.encode_image(&crop, &mut rng).unwrap();
    let scores = similarity_scores(&image, &texts).unwrap();
    let (label, score) = recognize(&scores, &set).unwrap();
    println!("scores {scores:.3?} -> {label} ({score:.3})");

    let mut world = WorldModel::new(
        "demo",
        OccupancyGrid::new(100, 100, 0.1, (0.0, 0.0)),
        Pose2::new(1.0, 5.0, 0.0),
    );
    world.objects = vec![
        SceneObject {
            label: "table".into(),
            x: 4.0,
            y: 5.0,
            radius: 0.3,
        },
        SceneObject {
            label: "person".into(),
            x: 5.0,
            y: 3.5,
            radius: 0.2,
        },
        SceneObject {
            label: "potted_plant".into(),
            x: 5.0,
            y: 6.5,
            radius: 0.2,
        },
    ];
    for sigma in [0.0, 0.5, 1.5] {
        let mut node = PerceptionNode::new(provider.clone(), set.clone(), sigma, 7).unwrap();
        let (mut right, mut total) = (0, 0);
        for _ in 0..200 {
            let snap = world.sense(&NoiseConfig::default(), &mut rng);
            for d in node.perceive(&snap) {
                total += 1;
                right += usize::from(d.correct);
            }
        }
        println!("sigma {sigma:.1}: {right}/{total} detections correct");
    }
}
