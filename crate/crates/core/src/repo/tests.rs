use super::*;
use crate::calib::{vectorize, CalibrationSnapshot};
use crate::compress::CompressConfig;
use crate::qcore::{Gate, GateKind, ParamCircuit};
use crate::qnn::{Dataset, EncodingSpec, QnnModel};

fn toy() -> (QnnModel, Dataset) {
    let c = ParamCircuit::new(
        2,
        vec![
            Gate::slot(GateKind::RY, &[0], 0),
            Gate::slot(GateKind::CRY, &[0, 1], 1),
            Gate::slot(GateKind::RY, &[1], 2),
        ],
        [(0, 1)],
    )
    .unwrap();
    let data = Dataset::new(
        (0..8).map(|i| vec![i as f64 * 0.4]).collect(),
        (0..8).map(|i| usize::from(i >= 4)).collect(),
        2,
    )
    .unwrap();
    let model = QnnModel::new(c, vec![0.4, 0.3, 0.2], EncodingSpec::round_robin(1, 2), vec![0, 1]).unwrap();
    (model, data)
}

fn day(i: usize, tq: f64) -> CalibrationSnapshot {
    let mut s = CalibrationSnapshot::zero(&format!("day{i:04}"), 2, [(0, 1)]);
    s.sq_error.insert(0, 0.001);
    s.sq_error.insert(1, 0.002 + 0.0001 * (i % 3) as f64);
    s.tq_error.insert((0, 1), tq);
    s.ro_error.insert(0, (0.01, 0.02));
    s.ro_error.insert(1, (0.01, 0.02));
    s
}

fn history() -> (Vec<CalibrationSnapshot>, Vec<f64>) {
    let tq = [0.01, 0.012, 0.011, 0.2, 0.21, 0.19, 0.013, 0.22];
    let days: Vec<_> = tq.iter().enumerate().map(|(i, &t)| day(i, t)).collect();
    let acc = tq.iter().map(|t| 0.9 - 2.0 * t).collect();
    (days, acc)
}

fn cheap() -> RepoConfig {
    RepoConfig {
        k: 2,
        acc_requirement: 0.5,
        seed: 1,
        compress: CompressConfig {
            rounds: 1,
            inner_epochs: 1,
            finetune_epochs: 1,
            batch_size: 8,
            ..CompressConfig::default()
        },
    }
}

#[test]
fn two_regimes_two_entries() {
    let (model, data) = toy();
    let (days, acc) = history();
    let repo = build_repository(&model, &days, &acc, &data, None, &cheap()).unwrap();
    assert_eq!(repo.entries.len(), 2);
    let mut members: Vec<Vec<usize>> = repo.entries.iter().map(|e| e.members.clone()).collect();
    members.sort();
    assert_eq!(members, vec![vec![0, 1, 2, 6], vec![3, 4, 5, 7]]);
    let max = repo.entries.iter().map(|e| e.mean_dist).fold(0.0, f64::max);
    assert_eq!(repo.th_w, max);
    for e in &repo.entries {
        let expect: f64 = e.members.iter().map(|&i| acc[i]).sum::<f64>() / e.members.len() as f64;
        assert!((e.mean_acc - expect).abs() < 1e-12);
        assert_eq!(e.invalid, e.mean_acc < 0.5);
        assert!(days.iter().any(|d| d.date == e.model.snapshot_id));
    }
}

#[test]
fn single_cluster_threshold() {
    let (model, data) = toy();
    let (days, acc) = history();
    let cfg = RepoConfig { k: 1, ..cheap() };
    let repo = build_repository(&model, &days, &acc, &data, None, &cfg).unwrap();
    assert_eq!(repo.entries.len(), 1);
    let schema = days[0].schema();
    let mean: f64 = days
        .iter()
        .map(|d| weighted_distance(&vectorize(d, &schema).unwrap(), &repo.entries[0].centroid, &repo.weights).unwrap())
        .sum::<f64>()
        / days.len() as f64;
    assert!((repo.th_w - mean).abs() < 1e-12);
}

#[test]
fn identical_days_collapse() {
    let (model, data) = toy();
    let days = vec![day(0, 0.05); 5];
    let acc = vec![0.7; 5];
    let cfg = RepoConfig { k: 3, ..cheap() };
    let repo = build_repository(&model, &days, &acc, &data, None, &cfg).unwrap();
    assert_eq!(repo.entries.len(), 1);
    assert_eq!(repo.th_w, 0.0);
}

#[test]
fn guidance_paths() {
    let (model, data) = toy();
    let (days, acc) = history();
    let mut repo = build_repository(&model, &days, &acc, &data, None, &cheap()).unwrap();
    let ctx = OnlineContext {
        model: &model,
        train: &data,
        val: None,
    };
    let rep = days
        .iter()
        .find(|d| d.date == repo.entries[0].model.snapshot_id)
        .unwrap()
        .clone();
    // reuse at distance 0, idempotent
    repo.entries[0].invalid = false;
    let a = match_online(&mut repo, &rep, &ctx).unwrap();
    let b = match_online(&mut repo, &rep, &ctx).unwrap();
    assert_eq!(a.decision, Decision::Reuse { entry: 0 });
    assert_eq!(a.distance, 0.0);
    assert_eq!(a, b);

    // invalid entry within th_w
    repo.entries[0].invalid = true;
    let f = match_online(&mut repo, &rep, &ctx).unwrap();
    assert!(matches!(f.decision, Decision::Fail { entry: 0, .. }));
    assert_eq!(repo.entries.len(), 2);

    // far from everything
    let far = day(99, 0.45);
    let before = repo.entries.clone();
    let n = match_online(&mut repo, &far, &ctx).unwrap();
    assert_eq!(n.decision, Decision::CompressNew { entry: 2 });
    assert!(n.distance > repo.th_w);
    assert_eq!(repo.entries.len(), 3);
    assert_eq!(&repo.entries[..2], &before[..]);
    assert_eq!(repo.entries[2].source, Source::Online);
    let again = match_online(&mut repo, &far, &ctx).unwrap();
    assert_eq!(again.decision, Decision::Reuse { entry: 2 });
}

#[test]
fn empty_repository_errors() {
    let (model, data) = toy();
    let (days, acc) = history();
    let mut repo = build_repository(&model, &days, &acc, &data, None, &cheap()).unwrap();
    repo.entries.clear();
    let ctx = OnlineContext {
        model: &model,
        train: &data,
        val: None,
    };
    assert!(match_online(&mut repo, &days[0], &ctx).is_err());
}

#[test]
fn weight_scaling_keeps_match() {
    let (model, data) = toy();
    let (days, acc) = history();
    let mut repo = build_repository(&model, &days, &acc, &data, None, &cheap()).unwrap();
    let schema = repo.schema.clone();
    let targets: Vec<_> = days.iter().map(|d| vectorize(d, &schema).unwrap()).collect();
    let before: Vec<usize> = targets.iter().map(|t| repo.nearest(t).unwrap().0).collect();
    repo.weights.w.iter_mut().for_each(|w| *w *= 7.5);
    let after: Vec<usize> = targets.iter().map(|t| repo.nearest(t).unwrap().0).collect();
    assert_eq!(before, after);
}

#[test]
fn save_load_roundtrip() {
    let (model, data) = toy();
    let (days, acc) = history();
    let repo = build_repository(&model, &days, &acc, &data, None, &cheap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("repo.json");
    repo.save(&path).unwrap();
    let back = Repository::load(&path).unwrap();
    assert_eq!(back, repo);
}
