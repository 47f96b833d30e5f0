use supgnet::dataset::{
    generate_dataset, metadata_path, read_csv, split, write_csv, write_metadata, DatasetConfig,
    NormalizationStats, TRAINING_PROBLEM,
};
use supgnet::fem::{build_mesh, build_space};
use supgnet::tau_search::TauObjective;

fn small_config(seed: u64) -> DatasetConfig {
    DatasetConfig {
        m: 8,
        n_set: vec![10],
        seed,
        ..DatasetConfig::default()
    }
}

#[test]
fn records_are_replayable() {
    let data = generate_dataset(&small_config(11)).unwrap();
    assert_eq!(data.records.len() + data.dropped.len(), 8);
    for rec in &data.records {
        let problem = TRAINING_PROBLEM.build(rec.mu, rec.theta).unwrap();
        let space = build_space(build_mesh(2, rec.subdivisions()).unwrap(), rec.r).unwrap();
        let e = TauObjective::with_exact(&problem, &space).unwrap().eval(rec.tau_star).unwrap();
        assert!((e - rec.e_at_star).abs() <= 1e-10 * rec.e_at_star.max(1.0));
    }
}

#[test]
fn generation_is_deterministic_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(5);
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let data = generate_dataset(&config).unwrap();
        write_csv(&path, &data.records).unwrap();
        write_metadata(&metadata_path(&path), &config, &data).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert!(!bytes[0].contains(&b'\r'));
    let back = read_csv(&dir.path().join("a.csv")).unwrap();
    assert_eq!(back, generate_dataset(&config).unwrap().records);

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["sampling"], "log-uniform");
}

#[test]
fn different_seeds_draw_different_samples() {
    let a = generate_dataset(&small_config(1)).unwrap();
    let b = generate_dataset(&small_config(2)).unwrap();
    assert_ne!(a.records, b.records);
}

#[test]
fn statistics_come_from_the_training_split_only() {
    let data = generate_dataset(&small_config(3)).unwrap();
    let (train, val) = split(&data.records, 0.75, 9).unwrap();
    let from_train = NormalizationStats::from_records(&train).unwrap();
    let from_all = NormalizationStats::from_records(&data.records).unwrap();
    assert_eq!(train.len() + val.len(), data.records.len());
    assert_ne!(from_train, from_all);
}
