//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use qucad::calib::{
    build_noise_model, synth_timeseries, synth_timeseries_detailed, vectorize, CalibrationSnapshot,
    DriftConfig, Label,
};
use qucad::compress::{
    admm_compress, make_mask, nearest_level, project_z, CompressConfig, CompressionTable, PriorityMode,
};
use qucad::harness::{
    initial_model, run_timeline, scan_loss_surface, toy_dataset, toy_model, toy_snapshot, Experiment,
    ExperimentConfig, Strategy, TimelineResult,
};
use qucad::qcore::{
    simulate_noiseless, simulate_noisy, DensityMatrix, Gate, GateCostModel, GateKind, NoiseModel,
    ParamCircuit, StateVector,
};
use qucad::qnn::{
    build_vqc, evaluate_accuracy, grad_parameter_shift, init_theta, mean_loss, train, Dataset,
    EncodingSpec, QnnModel, Splits, TrainConfig,
};
use qucad::repo::{
    build_repository, correlation_weights, kmedians, match_online, weighted_kmeans, Decision,
    OnlineContext, RepoConfig,
};
use rand::Rng;

use common::{all_pairs, random_circuit, rng};

type Outcome = (bool, String);

const MASTER_SEED: u64 = 7;
const OFFLINE_DAYS: usize = 243;
const ONLINE_DAYS: usize = 60;

fn ring(n: usize) -> BTreeSet<(usize, usize)> {
    (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect()
}

fn c1_simulator() -> Outcome {
    let data = Dataset::iris();
    let batch = data.subset(&[0, 60, 120]);
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let circuit = build_vqc(4, 2, &ring(4)).unwrap();
        let theta = init_theta(circuit.n_params, seed);
        let model = QnnModel::new(circuit, theta.clone(), EncodingSpec::fitted(4, &data), vec![0, 1, 2]).unwrap();
        let (_, g) = grad_parameter_shift(&model, &theta, &batch, None, None).unwrap();
        let h = 1e-4;
        for i in 0..theta.len() {
            let at = |d: f64| {
                let mut m = model.clone();
                m.theta[i] += d;
                mean_loss(&m, &batch, None).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs());
        }
    }
    let mut bad_state = None;
    for seed in 0..40u64 {
        let mut r = rng(1000 + seed);
        let n = 2 + (seed as usize % 3);
        let (c, theta) = random_circuit(&mut r, n, 12);
        let mut noise = NoiseModel::zero(n, all_pairs(n));
        noise.one_q = (0..n).map(|_| r.random_range(0.0..0.1)).collect();
        for v in noise.two_q.values_mut() {
            *v = r.random_range(0.0..0.4);
        }
        for k in 1..=c.gates.len() {
            let prefix = ParamCircuit { gates: c.gates[..k].to_vec(), ..c.clone() };
            let rho = simulate_noisy(&prefix, &theta, &noise, &noise.cost, &DensityMatrix::zero_state(n)).unwrap();
            if let Err(e) = rho.check_invariants(1e-8, 1e-8, 1e-8) {
                bad_state = Some(format!("seed {seed} gate {k}: {e}"));
            }
        }
    }
    (
        worst < 1e-5 && bad_state.is_none(),
        format!("max |shift - fd| = {worst:.2e}; state invariants: {}", bad_state.as_deref().unwrap_or("ok")),
    )
}

fn c2_zero_noise() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut r = rng(2000 + seed);
        let n = 2 + (seed as usize % 3);
        let (c, theta) = random_circuit(&mut r, n, 30);
        let psi = simulate_noiseless(&c, &theta, &StateVector::zero(n)).unwrap();
        let rho = simulate_noisy(
            &c,
            &theta,
            &NoiseModel::zero(n, all_pairs(n)),
            &GateCostModel::default(),
            &DensityMatrix::zero_state(n),
        )
        .unwrap();
        // outer product built here rather than via the library
        let dim = 1usize << n;
        for r_ in 0..dim {
            for c_ in 0..dim {
                let want = psi.amps[r_] * psi.amps[c_].conj();
                worst = worst.max((rho.get(r_, c_) - want).norm());
            }
        }
    }
    (worst < 1e-10, format!("max |rho - psi psi^dag| = {worst:.2e}"))
}

fn c3_projection() -> Outcome {
    let table = CompressionTable::default();
    let grid: Vec<f64> = (0..10_000).map(|k| TAU * k as f64 / 10_000.0).collect();
    let resolution = TAU / 10_000.0;
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut r = rng(3000 + seed);
        let len = r.random_range(1..12);
        let rho: f64 = r.random_range(0.001..10.0);
        let v: Vec<f64> = (0..len).map(|_| r.random_range(0.0..TAU)).collect();
        let mask: Vec<bool> = (0..len).map(|_| r.random_bool(0.5)).collect();
        let t: Vec<f64> = (0..len).map(|_| table.levels[r.random_range(0..table.levels.len())]).collect();
        let z = project_z(&v, &mask, &t);
        for i in 0..len {
            // s_i is the indicator of {T_i} for masked entries and 0 otherwise
            let objective = |zz: f64| {
                let s = if !mask[i] || zz == t[i] { 0.0 } else { f64::INFINITY };
                s + 0.5 * rho * (v[i] - zz).powi(2)
            };
            let best = grid
                .iter()
                .chain(std::iter::once(&t[i]))
                .copied()
                .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
                .unwrap();
            if mask[i] {
                if z[i] != best {
                    mismatches += 1;
                }
            } else {
                worst = worst.max((z[i] - best).abs());
            }
        }
    }
    (
        mismatches == 0 && worst <= resolution,
        format!("constrained mismatches {mismatches}; free max gap {worst:.2e} (grid step {resolution:.2e})"),
    )
}

fn c4_mask_and_levels() -> Outcome {
    let values = [0.0, 0.5, 1.0, 2.0, f64::INFINITY];
    let thresholds = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, f64::INFINITY];
    let mut cases = 0;
    let mut wrong = 0;
    for len in 0..=4u32 {
        for code in 0..values.len().pow(len) {
            let p: Vec<f64> = (0..len).map(|i| values[code / values.len().pow(i) % values.len()]).collect();
            let mut prev: Option<Vec<bool>> = None;
            for &thr in &thresholds {
                let m = make_mask(&p, thr);
                cases += 1;
                if m.iter().zip(&p).any(|(&mi, &pi)| mi == (pi < thr)) {
                    wrong += 1;
                }
                if let Some(pm) = &prev {
                    if m.iter().zip(pm).any(|(&now, &before)| now && !before) {
                        wrong += 1;
                    }
                }
                prev = Some(m);
            }
        }
    }
    let table = CompressionTable::default();
    let circ = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let mut level_wrong = 0;
    let mut r = rng(4000);
    for _ in 0..10_000 {
        let x: f64 = r.random_range(-4.0 * PI..4.0 * PI);
        let brute = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0]
            .into_iter()
            .map(|l| (circ(x, l), l))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        let (level, d) = nearest_level(x, &table);
        if (level - brute.1).abs() > 1e-12 || (d - brute.0).abs() > 1e-12 {
            level_wrong += 1;
        }
    }
    (
        wrong == 0 && level_wrong == 0,
        format!("{cases} mask cases, {wrong} wrong; nearest_level disagreements {level_wrong}/10000"),
    )
}

fn two_blobs(seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(5000 + seed);
    let centers = [[r.random_range(0.0..1.0), r.random_range(0.0..1.0)], [r.random_range(3.0..4.0), r.random_range(3.0..4.0)]];
    (0..8)
        .map(|i| {
            let c = centers[i % 2];
            vec![c[0] + r.random_range(-0.5..0.5), c[1] + r.random_range(-0.5..0.5)]
        })
        .collect()
}

fn brute_two_partition(points: &[Vec<f64>]) -> f64 {
    let cost = |idx: &[usize]| -> f64 {
        (0..2)
            .map(|j| {
                let mut v: Vec<f64> = idx.iter().map(|&i| points[i][j]).collect();
                v.sort_by(f64::total_cmp);
                let med = if v.len() % 2 == 1 { v[v.len() / 2] } else { 0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2]) };
                v.iter().map(|x| (x - med).abs()).sum::<f64>()
            })
            .sum()
    };
    let n = points.len();
    (1..(1u32 << (n - 1)))
        .map(|bits| {
            let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| bits >> i & 1 == 1);
            cost(&a) + cost(&b)
        })
        .fold(f64::INFINITY, f64::min)
}

fn c5_clustering() -> Outcome {
    let mut increases = 0;
    for seed in 0..100u64 {
        let mut r = rng(5500 + seed);
        let days: Vec<CalibrationSnapshot> = (0..30)
            .map(|d| {
                let mut s = CalibrationSnapshot::zero(&format!("d{d}"), 3, [(0, 1), (1, 2)]);
                for q in 0..3 {
                    s.sq_error.insert(q, r.random_range(1e-4..1e-2));
                    s.ro_error.insert(q, (r.random_range(0.0..0.1), r.random_range(0.0..0.1)));
                }
                s.tq_error.insert((0, 1), r.random_range(0.0..0.2));
                s.tq_error.insert((1, 2), r.random_range(0.0..0.2));
                s
            })
            .collect();
        let schema = days[0].schema();
        let vectors: Vec<_> = days.iter().map(|d| vectorize(d, &schema).unwrap()).collect();
        let p: Vec<f64> = days.iter().map(|d| 0.9 - d.tq_error[&(0, 1)] + r.random_range(-0.02..0.02)).collect();
        let cm = weighted_kmeans(&vectors, &p, 1 + (seed as usize % 5), seed).unwrap();
        if cm.wsae_trace.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            increases += 1;
        }
    }
    let mut optimal = 0;
    for seed in 0..100u64 {
        let pts = two_blobs(seed);
        let km = kmedians(&pts, &[1.0, 1.0], 2, seed).unwrap();
        if (km.wsae() - brute_two_partition(&pts)).abs() < 1e-9 {
            optimal += 1;
        }
    }
    let p = vec![0.1, 0.4, 0.35, 0.8, 0.6];
    let c: Vec<Vec<f64>> = p.iter().map(|&y| vec![y, -2.0 * y, 0.25]).collect();
    let w = correlation_weights(&c, &p).unwrap().w;
    let exact = w == vec![1.0, 1.0, 0.0];
    (
        increases == 0 && optimal >= 95 && exact,
        format!("WSAE increases in {increases}/100 runs; optimal 2-partition {optimal}/100; weights {w:?}"),
    )
}

/// Acceptance drift scenario: one persistently noisy coupled pair, uneven
/// readout asymmetry and spikes on every field.
fn scenario(n_days: usize, seed: u64) -> DriftConfig {
    DriftConfig::ring4_uneven(n_days, seed)
}

struct MainRun {
    results: Vec<TimelineResult>,
    seconds: f64,
}

fn main_run() -> MainRun {
    let start = Instant::now();
    let days = synth_timeseries(&scenario(OFFLINE_DAYS + ONLINE_DAYS, MASTER_SEED)).unwrap();
    let (offline, online) = days.split_at(OFFLINE_DAYS);
    let config = ExperimentConfig { seed: MASTER_SEED, ..ExperimentConfig::default() };
    let exp = Experiment::new(&Dataset::iris(), offline.to_vec(), online.to_vec(), config).unwrap();
    let results = Strategy::ALL.iter().map(|&s| run_timeline(s, &exp).unwrap()).collect();
    MainRun { results, seconds: start.elapsed().as_secs_f64() }
}

fn find(run: &MainRun, s: Strategy) -> &TimelineResult {
    run.results.iter().find(|r| r.strategy == s).unwrap()
}

fn c6_compression_benefit(run: &MainRun) -> Outcome {
    let order = [
        Strategy::Qucad,
        Strategy::QucadNoOffline,
        Strategy::OneTimeCompression,
        Strategy::NoiseAwareTrainEveryday,
        Strategy::Baseline,
    ];
    let means: Vec<f64> = order.iter().map(|&s| find(run, s).mean_accuracy()).collect();
    let ordered = means.windows(2).all(|w| w[0] >= w[1] - 0.02);
    let gain = means[0] - means[4];
    let listing: Vec<String> = order.iter().zip(&means).map(|(s, m)| format!("{s} {m:.4}")).collect();
    (
        ordered && gain >= 0.10,
        format!("{}; QuCAD - Baseline = {gain:.4}; run took {:.0}s", listing.join(", "), run.seconds),
    )
}

fn c7_reuse_efficiency(run: &MainRun) -> Outcome {
    let q = find(run, Strategy::Qucad);
    let every = find(run, Strategy::CompressEveryday);
    let ratio = q.wall_time_s / every.wall_time_s;
    (
        q.online_optimizations as f64 <= 0.25 * ONLINE_DAYS as f64 && ratio <= 0.20,
        format!(
            "QuCAD compressions {}/{ONLINE_DAYS}; online time {:.1}s vs {:.1}s ({:.1}%)",
            q.online_optimizations,
            q.wall_time_s,
            every.wall_time_s,
            100.0 * ratio
        ),
    )
}

fn c8_upper_bound(run: &MainRun) -> Outcome {
    let gap = find(run, Strategy::CompressEveryday).mean_accuracy() - find(run, Strategy::Qucad).mean_accuracy();
    (gap <= 0.03, format!("CompressEveryday - QuCAD = {gap:.4}"))
}

fn c9_noise_aware_priority() -> Outcome {
    let data = Dataset::iris();
    let hot = Label::Tq(1, 2);
    let (mut aware, mut agnostic) = (0.0, 0.0);
    for seed in 0..10u64 {
        let mut drift = DriftConfig::ring4(60, 900 + seed);
        drift.spike_targets = vec![hot];
        drift.spike_prob = 0.3;
        drift.spike_min = 0.15;
        drift.spike_max = 0.3;
        let series = synth_timeseries_detailed(&drift).unwrap();
        let d = (0..series.days.len())
            .find(|&d| series.spiked[d].contains(&hot))
            .unwrap_or_else(|| {
                (0..series.days.len())
                    .max_by(|&a, &b| series.days[a].tq_error[&(1, 2)].total_cmp(&series.days[b].tq_error[&(1, 2)]))
                    .unwrap()
            });
        let day = &series.days[d];
        let s = Splits::new(&data, 0.6, 0.1, seed);
        let init = initial_model(&s.train, &day.coupling(), 4, 3, seed).unwrap();
        let (model, _) = train(&init, &s.train, Some(&s.val), &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
        let noise = build_noise_model(day).unwrap();
        let run = |mode| {
            let cfg = CompressConfig { priority: mode, seed, ..CompressConfig::default() };
            let m = admm_compress(&model, &s.train, Some(&s.val), day, &cfg).unwrap().model;
            evaluate_accuracy(&m, &s.test, Some(&noise)).unwrap()
        };
        aware += run(PriorityMode::NoiseAware) / 10.0;
        agnostic += run(PriorityMode::NoiseAgnostic) / 10.0;
    }
    (aware >= agnostic, format!("noise-aware {aware:.4} vs noise-agnostic {agnostic:.4} (mean of 10 seeds)"))
}

fn guidance_once() -> Vec<(Decision, f64)> {
    let circuit = ParamCircuit::new(
        2,
        vec![
            Gate::slot(GateKind::RY, &[0], 0),
            Gate::slot(GateKind::CRY, &[0, 1], 1),
            Gate::slot(GateKind::RY, &[1], 2),
        ],
        [(0, 1)],
    )
    .unwrap();
    let model = QnnModel::new(circuit, vec![0.4, 0.3, 0.2], EncodingSpec::round_robin(1, 2), vec![0, 1]).unwrap();
    let data = Dataset::new((0..8).map(|i| vec![i as f64 * 0.4]).collect(), (0..8).map(|i| usize::from(i >= 4)).collect(), 2).unwrap();
    let day = |i: usize, tq: f64| {
        let mut s = CalibrationSnapshot::zero(&format!("day{i:03}"), 2, [(0, 1)]);
        s.sq_error.insert(0, 0.001);
        s.sq_error.insert(1, 0.002 + 0.0001 * (i % 3) as f64);
        s.tq_error.insert((0, 1), tq);
        s.ro_error.insert(0, (0.01, 0.02));
        s.ro_error.insert(1, (0.01, 0.02));
        s
    };
    let tq = [0.01, 0.012, 0.011, 0.2, 0.21, 0.19, 0.013, 0.22];
    let history: Vec<_> = tq.iter().enumerate().map(|(i, &t)| day(i, t)).collect();
    // the high-noise regime falls below the accuracy requirement
    let acc: Vec<f64> = tq.iter().map(|t| if *t > 0.1 { 0.3 } else { 0.9 }).collect();
    let cfg = RepoConfig {
        k: 2,
        acc_requirement: 0.5,
        seed: 1,
        compress: CompressConfig { rounds: 1, inner_epochs: 1, finetune_epochs: 1, batch_size: 8, ..CompressConfig::default() },
    };
    let mut repo = build_repository(&model, &history, &acc, &data, None, &cfg).unwrap();
    let ctx = OnlineContext { model: &model, train: &data, val: None };
    let rep = |repo: &qucad::repo::Repository, invalid: bool| {
        let e = repo.entries.iter().find(|e| e.invalid == invalid).unwrap();
        history.iter().find(|d| d.date == e.model.snapshot_id).unwrap().clone()
    };
    let good = rep(&repo, false);
    let bad = rep(&repo, true);
    let mut out = Vec::new();
    for today in [good, bad, day(99, 0.45)] {
        let d = match_online(&mut repo, &today, &ctx).unwrap();
        out.push((d.decision, d.distance));
    }
    out.push((Decision::Reuse { entry: usize::MAX }, repo.th_w));
    out
}

fn c10_guidance() -> Outcome {
    let a = guidance_once();
    let b = guidance_once();
    let th_w = a[3].1;
    let reuse = matches!(a[0].0, Decision::Reuse { .. }) && a[0].1 == 0.0;
    let fail = matches!(a[1].0, Decision::Fail { .. }) && a[1].1 <= th_w;
    let new = matches!(a[2].0, Decision::CompressNew { entry: 2 }) && a[2].1 > th_w;
    let decisions: Vec<_> = a[..3].iter().map(|(d, x)| format!("{d:?}@{x:.4}")).collect();
    (
        reuse && fail && new && a == b,
        format!("{}; th_w {th_w:.4}; deterministic {}", decisions.join(", "), a == b),
    )
}

fn c11_breakpoint() -> Outcome {
    let noise = build_noise_model(&toy_snapshot(0.1)).unwrap();
    let s = scan_loss_surface(&toy_model(), 0, 1, 64, &toy_dataset(), Some(&noise)).unwrap();
    let diff = s.difference().unwrap();
    let n = diff.len() as f64;
    let overall = diff.iter().flatten().map(|v| v.abs()).sum::<f64>() / (n * n);
    // the noisy gate is the CRY on slot 1; its θ = 0 line is column 0
    let column = diff.iter().map(|r| r[0].abs()).sum::<f64>() / n;
    (column < overall, format!("mean |diff| on theta_cry = 0: {column:.5}; grid mean {overall:.5}"))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    report(1, &c1_simulator);
    report(2, &c2_zero_noise);
    report(3, &c3_projection);
    report(4, &c4_mask_and_levels);
    report(5, &c5_clustering);
    let run = main_run();
    report(6, &|| c6_compression_benefit(&run));
    report(7, &|| c7_reuse_efficiency(&run));
    report(8, &|| c8_upper_bound(&run));
    report(9, &c9_noise_aware_priority);
    report(10, &c10_guidance);
    report(11, &c11_breakpoint);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
