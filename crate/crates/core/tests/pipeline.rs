use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rirabs::baselines::{estimate_alpha_classical, Method};
use rirabs::dataset::{self, Dataset, DatasetMeta};
use rirabs::nn::{self, ModelSpec, OutputHead, TrainConfig};
use rirabs::sampler::SamplingStrategy;
use rirabs::{simulate, BandProfile, RoomGeometry, RoomSpec, SimConfig};

#[test]
fn eyring_recovers_a_diffuse_room() {
    let room = RoomSpec::uniform(
        RoomGeometry::new(4.0, 4.5, 3.0).unwrap(),
        BandProfile::flat(0.12),
        BandProfile::flat(0.8),
        [1.0, 1.2, 1.4],
        [2.9, 3.1, 1.6],
    )
    .unwrap();
    let config = SimConfig {
        n_rays: 5000,
        max_time: 2.0,
        max_image_order: Some(30),
        air: None,
        ..SimConfig::fast()
    };
    let rir = simulate(&room, &config, 9).unwrap();
    let est = estimate_alpha_classical(&rir, &room.geometry, 30.0, Method::Eyring).unwrap();
    for b in 1..5 {
        let a = est.alpha(b).unwrap();
        assert!((a - 0.12).abs() < 0.04, "band {b}: {a}");
    }
}

#[test]
fn generate_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let meta = |name: &str, seed| DatasetMeta {
        name: name.into(),
        seed,
        strategy: "rb".into(),
        sim_config: SimConfig {
            n_rays: 500,
            ..SimConfig::fast()
        },
        snr_db: Some(30.0),
    };
    let strategy = SamplingStrategy::rb();
    let train = dataset::generate(&dir.path().join("t"), &meta("t", 1), &strategy, 8, &|_| {}).unwrap();
    dataset::generate(&dir.path().join("d"), &meta("d", 2), &strategy, 4, &|_| {}).unwrap();
    let t = Dataset::open(&dir.path().join("t")).unwrap().load_examples().unwrap();
    let d = Dataset::open(&dir.path().join("d")).unwrap().load_examples().unwrap();
    let config = TrainConfig {
        batch_size: 4,
        epochs: 3,
        ..TrainConfig::default()
    };
    let (model, curve) = nn::train(&ModelSpec::mlp(OutputHead::Alpha), &t, &d, &config, &train.fingerprint, |_| {}).unwrap();
    assert_eq!(curve.epochs.len(), 3);
    assert_eq!(model.provenance.dataset_fingerprint, train.fingerprint);

    let path = dir.path().join("m.absk");
    nn::save_model(&model, &path).unwrap();
    let loaded = nn::load_model(&path).unwrap();
    let rir = simulate(&Dataset::open(&dir.path().join("d")).unwrap().rooms().unwrap()[0], &SimConfig::fast(), 0).unwrap();
    let x: Vec<f32> = rirabs::dsp::preprocess(&rir, 30.0, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap()
        .into_iter()
        .map(|v| v as f32)
        .collect();
    assert_eq!(nn::predict(&model, &x).unwrap(), nn::predict(&loaded, &x).unwrap());
}
