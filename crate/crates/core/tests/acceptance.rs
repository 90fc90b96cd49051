//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use boolcd::batch::{fit_batch, fit_best_of, FitConfig, Ranks, TuckerModel};
use boolcd::bench::{
    core_size_sweep, density_sweep, means, time_sweep, worker_pool, BenchOptions, Method,
};
use boolcd::incremental::{bootstrap, covariance_of, StreamConfig, TimeWeight};
use boolcd::io::{
    load_model, load_slot_csv, load_tensor_btt, save_model, save_slot_csv, save_tensor_btt,
};
use boolcd::reports::{
    class_proportions, feature_variance, gain_loss, model_feature_variance, FrameSpec,
};
use boolcd::rng::{SeededRng, Stream};
use boolcd::synth::{exhaustive_oracle, generate_planted, Drift, PlantedSpec};
use boolcd::tensor::hamming_error;
use boolcd::{BoolMatrix, BoolTensor3, Dims, Mode};
use ndarray::{array, Array2};

/// Share of oracle instances where best-of-20 reaches the global optimum,
/// as first measured (50 of 50).
const ORACLE_MATCH_FLOOR: f64 = 1.0;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn c1_monotone() -> Outcome {
    let (mut pairs, mut bad) = (0, 0);
    for seed in 0..50u64 {
        let mut rng = SeededRng::new(seed, Stream::Reseed);
        let dims = Dims::new(5 + rng.below(26), 3 + rng.below(13), 2 + rng.below(19));
        let r = |n: usize, rng: &mut SeededRng| 1 + rng.below(n.min(4));
        let ranks = Ranks::new(
            r(dims.o, &mut rng),
            r(dims.f, &mut rng),
            r(dims.t, &mut rng),
        );
        let spec = PlantedSpec {
            noise: 0.05,
            ..PlantedSpec::uniform(dims, ranks, 0.3, seed)
        };
        let x = generate_planted(&spec).unwrap().tensor();
        let cfg = FitConfig {
            error_threshold: 0.0,
            seed,
            ..FitConfig::new(ranks)
        };
        let (_, trace) = fit_batch(&x, &cfg).unwrap();
        for w in trace.records.windows(2) {
            pairs += 1;
            if w[1].mismatches > w[0].mismatches {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("{bad} increases over {pairs} sweep transitions in 50 fits"),
    )
}

fn c2_oracle() -> Outcome {
    let (mut matched, mut beaten) = (0, 0);
    for seed in 0..50u64 {
        let mut rng = SeededRng::new(seed, Stream::Noise);
        let p = 0.2 + 0.15 * (seed % 5) as f64;
        let x = BoolTensor3::from_fn(Dims::new(3, 3, 2), |_, _, _| rng.bernoulli(p));
        let (opt, _) = exhaustive_oracle(&x, Ranks::new(1, 1, 1)).unwrap();
        let cfg = FitConfig {
            error_threshold: 0.0,
            seed,
            ..FitConfig::new(Ranks::new(1, 1, 1))
        };
        let (_, trace) = fit_best_of(&x, &cfg, 20).unwrap();
        let e = trace.last().unwrap().mismatches;
        if e < opt {
            beaten += 1;
        }
        if e == opt {
            matched += 1;
        }
    }
    let frac = matched as f64 / 50.0;
    outcome(
        beaten == 0 && frac >= ORACLE_MATCH_FLOOR,
        format!("oracle beaten {beaten} times; optimum matched {matched}/50 (floor {ORACLE_MATCH_FLOOR})"),
    )
}

fn c3_planted() -> Outcome {
    let spec = PlantedSpec::uniform(Dims::new(20, 10, 15), Ranks::new(2, 2, 2), 0.3, 0);
    let cfg = FitConfig {
        error_threshold: 0.0,
        ..FitConfig::new(Ranks::new(2, 2, 2))
    };
    let clean = generate_planted(&spec).unwrap().tensor();
    let (_, trace) = fit_best_of(&clean, &cfg, 20).unwrap();
    let clean_err = trace.last().unwrap().mismatches;
    let noisy = generate_planted(&PlantedSpec {
        noise: 0.05,
        ..spec
    })
    .unwrap();
    let xn = noisy.tensor();
    let noise = hamming_error(&xn, &noisy.truth.reconstruct())
        .unwrap()
        .mismatches;
    let (_, trace) = fit_best_of(&xn, &cfg, 20).unwrap();
    let noisy_err = trace.last().unwrap().mismatches;
    outcome(
        clean_err == 0 && noisy_err as f64 <= 1.5 * noise as f64,
        format!("noise-free {clean_err} mismatches; noisy {noisy_err} vs bound 1.5*{noise}"),
    )
}

fn c4_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for lambda in [0.5, 0.9] {
        for window in [4, 12] {
            for seed in 0..5u64 {
                let spec = PlantedSpec {
                    noise: 0.02,
                    ..PlantedSpec::uniform(Dims::new(15, 8, 10), Ranks::new(2, 2, 2), 0.3, seed)
                };
                let slots = generate_planted(&spec).unwrap().slots;
                let cfg = StreamConfig {
                    window_w: window,
                    time_weight: TimeWeight::ExponentialDecay(lambda),
                    seed,
                    ..StreamConfig::new(Ranks::new(2, 2, 2))
                };
                let mut st = bootstrap(&slots[0], &slots[1], &cfg).unwrap();
                let per_slot =
                    |m: &TuckerModel| Mode::ALL.map(|md| covariance_of(m.factor(md)).unwrap());
                let mut recorded = vec![per_slot(&st.model)];
                for s in &slots[2..] {
                    st.ingest(s).unwrap();
                    recorded.push(per_slot(&st.model));
                }
                let n = recorded.len();
                let got = [&st.cov.ca, &st.cov.cb, &st.cov.cc];
                for (m, acc) in got.iter().enumerate() {
                    let mut want = Array2::<f64>::zeros(acc.dim());
                    for (s, c) in recorded.iter().enumerate() {
                        want = want + &c[m] * lambda.powi((n - 1 - s) as i32);
                    }
                    let diff = (&want - *acc).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    worst = worst.max(diff);
                }
                runs += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max deviation {worst:.3e} over {runs} streams"),
    )
}

fn c5_bounded() -> Outcome {
    let spec = PlantedSpec {
        drift: Drift::Stationary,
        noise: 0.02,
        ..PlantedSpec::uniform(Dims::new(30, 12, 50), Ranks::new(2, 2, 2), 0.3, 3)
    };
    let slots = generate_planted(&spec).unwrap().slots;
    let mut st = bootstrap(
        &slots[0],
        &slots[1],
        &StreamConfig::new(Ranks::new(2, 2, 2)),
    )
    .unwrap();
    let mut at5 = 0;
    for (k, s) in slots.iter().enumerate().skip(2) {
        st.ingest(s).unwrap();
        if k == 4 {
            at5 = st.retained_bytes();
        }
    }
    let at50 = st.retained_bytes();
    outcome(
        at5 == at50,
        format!("{at5} bytes after slot 5, {at50} after slot 50"),
    )
}

fn c6_density() -> Outcome {
    let pool = worker_pool().unwrap();
    let densities = [0.1, 0.2, 0.3, 0.4, 0.5];
    let ranks = Ranks::new(3, 3, 3);
    let curve = |seeds: Vec<u64>| {
        let opts = BenchOptions {
            seeds,
            ..BenchOptions::new(Dims::new(30, 15, 10))
        };
        let rows = density_sweep(&opts, ranks, ranks, &densities, &pool).unwrap();
        let m = means(&rows);
        let pick = |method| {
            m.iter()
                .filter(|r| r.first.method == method)
                .map(|r| r.relative)
                .collect::<Vec<_>>()
        };
        (pick(Method::Batch), pick(Method::Incremental))
    };
    let (batch5, inc5) = curve((0..5).collect());
    let (_, inc40) = curve((0..40).collect());
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|e| format!("{e:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        non_decreasing(&batch5) && non_decreasing(&inc40),
        format!(
            "batch 5 seeds [{}]; incremental 40 seeds [{}]; incremental 5 seeds [{}] {}",
            fmt(&batch5),
            fmt(&inc40),
            fmt(&inc5),
            if non_decreasing(&inc5) {
                "non-decreasing"
            } else {
                "not monotone"
            }
        ),
    )
}

fn c7_time() -> Outcome {
    let opts = BenchOptions {
        repeats: 5,
        ..BenchOptions::new(Dims::new(50, 10, 30))
    };
    let rows = time_sweep(&opts, Ranks::new(2, 2, 2), 12).unwrap();
    let m = means(&rows);
    let steps = |method| {
        m.iter()
            .filter(|r| r.first.method == method)
            .map(|r| r.wall_millis)
            .collect::<Vec<_>>()
    };
    let (inc, bat) = (steps(Method::Incremental), steps(Method::Batch));
    let (inc_total, bat_total): (f64, f64) = (inc.iter().sum(), bat.iter().sum());
    // inc[0] is the step from the first slot to the second (the bootstrap).
    let steepest_first = inc[1..].iter().all(|&v| v < inc[0]);
    outcome(
        inc_total < bat_total && steepest_first,
        format!(
            "cumulative incremental {inc_total:.2} ms vs batch refit {bat_total:.2} ms; bootstrap step {:.3} ms, largest later step {:.3} ms",
            inc[0],
            inc[1..].iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn c8_core_size() -> Outcome {
    let opts = BenchOptions::new(Dims::new(20, 10, 15));
    let list = [
        Ranks::new(1, 1, 1),
        Ranks::new(2, 2, 2),
        Ranks::new(3, 2, 2),
        Ranks::new(2, 3, 3),
        Ranks::new(3, 3, 3),
    ];
    let rows = core_size_sweep(&opts, Ranks::new(2, 2, 2), &list, &worker_pool().unwrap()).unwrap();
    let m = means(&rows);
    let mut pass = true;
    let mut detail = Vec::new();
    for method in [Method::Batch, Method::Incremental] {
        let errs: Vec<f64> = m
            .iter()
            .filter(|r| r.first.method == method)
            .map(|r| r.relative)
            .collect();
        pass &= errs[1..].iter().all(|&e| e <= errs[0]);
        detail.push(format!(
            "{method} [{}]",
            errs.iter()
                .map(|e| format!("{e:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    outcome(
        pass,
        format!("{} for ranks 111,222,322,233,333", detail.join("; ")),
    )
}

fn c9_reports() -> Outcome {
    let base = PlantedSpec {
        drift: Drift::Stationary,
        ..PlantedSpec::uniform(Dims::new(10, 6, 20), Ranks::new(2, 2, 1), 0.3, 0)
    };
    let clean = generate_planted(&base).unwrap().truth.reconstruct();
    let (obj, feat) = (0..10)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .find(|&(i, j)| !clean.get(i, j, 0))
        .unwrap();
    let toggled = generate_planted(&PlantedSpec {
        drift: Drift::Toggle {
            object: obj,
            feature: feat,
        },
        ..base
    })
    .unwrap();
    let x = toggled.tensor();
    let cfg = FitConfig {
        error_threshold: 0.0,
        ..FitConfig::new(Ranks::new(3, 3, 2))
    };
    let (model, _) = fit_best_of(&x, &cfg, 20).unwrap();
    let frames = FrameSpec::new(4);
    let marks_only_toggle = |v: &ndarray::Array3<f64>| {
        v.indexed_iter().all(|((i, j, _), &val)| {
            if (i, j) == (obj, feat) {
                val >= 0.9
            } else {
                val == 0.0
            }
        })
    };
    let data_ok = marks_only_toggle(&feature_variance(&x, &frames).unwrap().values);
    let model_ok = marks_only_toggle(&model_feature_variance(&model, &frames).unwrap().values);

    let mut core = BoolTensor3::zeros(Dims::new(2, 1, 1));
    core.set(0, 0, 0, true);
    core.set(1, 0, 0, true);
    let a = BoolMatrix::from_rows(&[[1u8, 1], [0, 1]]);
    let two_one =
        TuckerModel::new(core, a, BoolMatrix::ones(1, 1), BoolMatrix::ones(4, 1)).unwrap();
    let props = class_proportions(&two_one, &FrameSpec::new(2))
        .unwrap()
        .proportions;
    let props_ok = props
        .outer_iter()
        .zip([2.0 / 3.0, 1.0 / 3.0])
        .all(|(row, want)| row.iter().all(|v| (v - want).abs() <= 1e-9));

    let mut report = class_proportions(&two_one, &FrameSpec::new(2)).unwrap();
    report.proportions = array![[0.4, 0.2], [0.6, 0.8]];
    let gl = gain_loss(&report).unwrap();
    let loss_ok = gl.rows[0].loss_pct == 50.0 && gl.rows[0].gain_pct == Some(0.0);

    outcome(
        data_ok && model_ok && props_ok && loss_ok,
        format!(
            "toggle ({obj},{feat}) data {data_ok} model {model_ok}; 2:1 proportions {props_ok}; 0.4->0.2 loss {}%",
            gl.rows[0].loss_pct
        ),
    )
}

fn strip_last_column(text: &str) -> String {
    text.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) if !l.starts_with('#') => head,
            _ => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// File contents keyed by name; wall-clock columns and the timing chart dropped.
fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "time.svg")
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = fs::read_to_string(&p).unwrap();
            let timed = matches!(name.as_str(), "trace.csv" | "bench.csv" | "bench_mean.csv");
            (
                name,
                if timed {
                    strip_last_column(&text)
                } else {
                    text
                },
            )
        })
        .collect();
    files.sort();
    files
}

fn c10_roundtrip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut io_ok = 0;
    for seed in 0..20u64 {
        let mut rng = SeededRng::new(seed, Stream::Noise);
        let dims = Dims::new(1 + rng.below(9), 1 + rng.below(9), 1 + rng.below(5));
        let x = BoolTensor3::from_fn(dims, |_, _, _| rng.bernoulli(0.4));
        let path = d.join(format!("t{seed}.btt"));
        save_tensor_btt(&x, &path).unwrap();
        let slot = x.slices().remove(0);
        let csv = d.join(format!("s{seed}.csv"));
        save_slot_csv(&slot, &csv).unwrap();
        let spec = PlantedSpec::uniform(dims, Ranks::new(1, 1, 1), 0.5, seed);
        let model = generate_planted(&spec).unwrap().truth;
        let mdir = d.join(format!("m{seed}"));
        save_model(&model, &mdir).unwrap();
        if load_tensor_btt(&path).unwrap() == x
            && load_slot_csv(&csv).unwrap() == slot
            && load_model(&mdir).unwrap() == model
        {
            io_ok += 1;
        }
    }

    let bin = env!("CARGO_BIN_EXE_boolcd");
    let spec = PlantedSpec {
        drift: Drift::Toggle {
            object: 1,
            feature: 1,
        },
        noise: 0.02,
        ..PlantedSpec::uniform(Dims::new(12, 6, 8), Ranks::new(2, 2, 2), 0.3, 5)
    };
    let planted = generate_planted(&spec).unwrap();
    let input = d.join("x.btt");
    save_tensor_btt(&planted.tensor(), &input).unwrap();
    let slots = d.join("slots");
    fs::create_dir_all(&slots).unwrap();
    for (k, s) in planted.slots.iter().enumerate() {
        save_slot_csv(s, slots.join(format!("{k:02}.csv"))).unwrap();
    }
    let run = |tag: &str| -> Vec<Vec<(String, String)>> {
        let out = |name: &str| d.join(format!("{tag}_{name}"));
        let invocations: Vec<(Vec<String>, std::path::PathBuf)> = vec![
            (
                vec![
                    "factorize".into(),
                    "--input".into(),
                    input.display().to_string(),
                    "--ranks".into(),
                    "2,2,2".into(),
                    "--restarts".into(),
                    "3".into(),
                    "--seed".into(),
                    "9".into(),
                ],
                out("fit"),
            ),
            (
                vec![
                    "stream".into(),
                    "--slots".into(),
                    slots.display().to_string(),
                    "--ranks".into(),
                    "2,2,2".into(),
                    "--window".into(),
                    "4".into(),
                    "--seed".into(),
                    "9".into(),
                ],
                out("stream"),
            ),
            (
                vec![
                    "bench".into(),
                    "core-size".into(),
                    "--ranks-list".into(),
                    "1,1,1".into(),
                    "2,2,2".into(),
                    "--dims".into(),
                    "10,6,4".into(),
                    "--seeds".into(),
                    "0,1".into(),
                ],
                out("core"),
            ),
            (
                vec![
                    "bench".into(),
                    "time".into(),
                    "--slots-count".into(),
                    "4".into(),
                    "--dims".into(),
                    "10,6,4".into(),
                    "--seeds".into(),
                    "0".into(),
                    "--window".into(),
                    "3".into(),
                ],
                out("time"),
            ),
        ];
        let mut snaps = Vec::new();
        for (args, o) in invocations {
            let status = Command::new(bin)
                .args(&args)
                .arg("--out")
                .arg(&o)
                .output()
                .unwrap();
            assert!(
                status.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            snaps.push(snapshot(&o));
        }
        let report = out("report");
        let status = Command::new(bin)
            .args(["report", "--model"])
            .arg(out("fit"))
            .args(["--frames", "2", "--out"])
            .arg(&report)
            .output()
            .unwrap();
        assert!(status.status.success());
        snaps.push(snapshot(&report));
        snaps
    };
    let (first, second) = (run("a"), run("b"));
    let files: usize = first.iter().map(Vec::len).sum();
    let same = first == second;
    outcome(
        io_ok == 20 && same,
        format!("{io_ok}/20 artifacts round-trip; {files} CLI output files identical across runs: {same}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("batch error never increases across sweeps", c1_monotone),
        ("best-of-20 never beats the exhaustive optimum", c2_oracle),
        (
            "planted recovery exact, noisy within 1.5x noise",
            c3_planted,
        ),
        ("decayed accumulators match the closed form", c4_closed_form),
        ("retained stream state does not grow", c5_bounded),
        ("error rises with factor density", c6_density),
        ("incremental beats batch refit, bootstrap steepest", c7_time),
        (
            "fitting at >= planted ranks is no worse than rank 1",
            c8_core_size,
        ),
        ("change reports on constructed cases", c9_reports),
        ("round-trips and deterministic CLI output", c10_roundtrip),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = check();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {:>2} {name}: {} ({secs:.1}s)",
            if r.pass { "PASS" } else { "FAIL" },
            n + 1,
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
