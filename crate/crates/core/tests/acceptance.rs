//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Run with `cargo test -p fannet-core --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use common::*;
use fannet_core::analysis::{bias_report, sensitivity_report, CounterexampleStore};
use fannet_core::bounds::{propagate_bounds, BoundsVector, Interval};
use fannet_core::smv::{cross_validate, emit_smv, run_checker, Property};
use fannet_core::verify::{brute_force_check_counted, verify_noise_level_with_stats, SearchOptions};
use fannet_core::{
    apply_noise, brute_force_check, extract_adversarial_vectors, per_sample_tolerance,
    verify_noise_level, Label, NoiseSpec, NoiseVector, Sample, SearchMode, Split,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Instance {
    net: fannet_core::Network,
    sample: Sample,
}

/// The 200 seeded random instances shared by criteria 1 and 3.
fn random_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..200)
        .map(|_| {
            let input = rng.random_range(1..=3);
            let hidden = rng.random_range(1..=4);
            let outputs = rng.random_range(2..=3);
            let net = random_net(&mut rng, input, hidden, outputs);
            // the narrowest-margin of a few random samples, so that small
            // deltas falsify a fair share of instances
            let sample = (0..8)
                .map(|_| random_correct_sample(&mut rng, &net))
                .min_by(|a, b| margin(&net, a).total_cmp(&margin(&net, b)))
                .unwrap();
            Instance { net, sample }
        })
        .collect()
}

fn margin(net: &fannet_core::Network, s: &Sample) -> f64 {
    let y = oracle_forward(net, &s.features);
    let top = y[s.true_label.0];
    let rest = y
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != s.true_label.0)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    top - rest
}

fn oracle_equivalence(instances: &[Instance]) -> Outcome {
    let mut checks = 0;
    let mut falsified = 0;
    for (i, inst) in instances.iter().enumerate() {
        for delta in 0..=5u32 {
            let spec = NoiseSpec::symmetric(delta, inst.net.input_dim);
            let engine = verify_noise_level(&inst.net, &inst.sample, &spec).map_err(|e| e.to_string())?;
            let brute = brute_force_check(&inst.net, &inst.sample, &spec).map_err(|e| e.to_string())?;
            ensure!(engine == brute, "instance {i}, delta {delta}: {engine:?} vs {brute:?}");
            let scan = oracle_scan(&inst.net, &inst.sample, &symmetric(delta as i32, inst.net.input_dim));
            ensure!(
                engine.witness().map(|w| w.0.clone()) == scan.first().cloned(),
                "instance {i}, delta {delta}: witness differs from exhaustive scan"
            );
            checks += 1;
            falsified += usize::from(!engine.is_verified());
        }
    }
    Ok(format!("{checks} instances (200 nets x delta 0..=5), {falsified} falsified, verdict and witness identical"))
}

fn t1_landmark() -> Outcome {
    let net = net("t1.json");
    let s = Sample::new(0, vec![2.0, 1.0], Label(0));
    let mut lines = Vec::new();
    for mode in [SearchMode::LinearDescent, SearchMode::BinarySearch] {
        let e = per_sample_tolerance(&net, &s, 50, mode).map_err(|e| e.to_string())?;
        ensure!(e.tolerance == Some(33), "{mode:?}: tolerance {:?}", e.tolerance);
        ensure!(e.first_failing_delta == Some(34), "{mode:?}: first failing {:?}", e.first_failing_delta);
        lines.push(e.witness.clone());
    }
    ensure!(lines[0] == lines[1], "modes disagree on the witness");
    let spec34 = NoiseSpec::symmetric(34, 2);
    let brute = brute_force_check(&net, &s, &spec34).map_err(|e| e.to_string())?;
    ensure!(brute.witness() == lines[0].as_ref(), "witness {:?} is not the brute-force minimum {brute:?}", lines[0]);
    ensure!(
        brute_force_check(&net, &s, &NoiseSpec::symmetric(33, 2)).map_err(|e| e.to_string())?.is_verified(),
        "brute force falsifies at 33"
    );
    // [-34, +34] is a counterexample but [-34, +32] precedes it lexicographically
    let all = extract_adversarial_vectors(&net, &s, &spec34, usize::MAX).map_err(|e| e.to_string())?;
    ensure!(all.iter().any(|a| a.nv == NoiseVector(vec![-34, 34])), "[-34, +34] is not a counterexample");
    Ok(format!(
        "tolerance 33 in both modes; first failing witness {} (brute-force lexicographic minimum; [-34, +34] also falsifies)",
        lines[0].as_ref().unwrap()
    ))
}

fn monotonicity(instances: &[Instance]) -> Outcome {
    let mut pairs = 0;
    for (i, inst) in instances.iter().enumerate() {
        for delta in 0..=5u32 {
            let dim = inst.net.input_dim;
            let v = verify_noise_level(&inst.net, &inst.sample, &NoiseSpec::symmetric(delta, dim)).unwrap();
            if !v.is_verified() {
                let next = verify_noise_level(&inst.net, &inst.sample, &NoiseSpec::symmetric(delta + 1, dim)).unwrap();
                ensure!(!next.is_verified(), "instance {i}: falsified at {delta} but verified at {}", delta + 1);
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} falsified (instance, delta) pairs stay falsified at delta + 1"))
}

fn ibp_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut points = 0u64;
    for pair in 0..10_000 {
        let input = rng.random_range(1..=4);
        let hidden = rng.random_range(1..=6);
        let outputs = rng.random_range(2..=4);
        let net = random_net(&mut rng, input, hidden, outputs);
        let ivs: Vec<Interval> = (0..input)
            .map(|_| {
                let a: f64 = rng.random_range(-5.0..5.0);
                let w: f64 = rng.random_range(0.0..2.0);
                Interval::new(a, a + w)
            })
            .collect();
        let b = propagate_bounds(&net, &BoundsVector(ivs.clone())).map_err(|e| e.to_string())?;
        for k in 0..100 {
            let x: Vec<f64> = ivs
                .iter()
                .map(|iv| match k {
                    0 => iv.lo,
                    1 => iv.hi,
                    _ => rng.random_range(iv.lo..=iv.hi),
                })
                .collect();
            let y = oracle_forward(&net, &x);
            ensure!(b.contains(&y), "pair {pair}: output {y:?} escapes {b:?}");
            points += 1;
        }
    }
    Ok(format!("10000 (box, net) pairs, {points} points, zero violations"))
}

fn sensitivity_flag() -> Outcome {
    let net = net("g.json");
    let ds = data(&net, "g.csv", Split::Test);
    let spec = NoiseSpec::symmetric(10, 3);
    let mut store = CounterexampleStore::new();
    for s in &ds.samples {
        let found = extract_adversarial_vectors(&net, s, &spec, usize::MAX).map_err(|e| e.to_string())?;
        let want = oracle_scan(&net, s, &symmetric(10, 3));
        ensure!(found.len() == want.len(), "sample {}: extraction is not exhaustive", s.id);
        store.extend_from(s, &spec, found).map_err(|e| e.to_string())?;
    }
    ensure!(!store.is_empty(), "no counterexamples at +-10%");
    let rep = sensitivity_report(&store, Some(&ds));
    let n0 = &rep.nodes[0];
    ensure!(n0.pos_ce_count == 0 && n0.no_positive_ce, "node 0: {n0:?}");
    ensure!(!n0.noise_inert, "node 0 flagged inert");
    Ok(format!(
        "{} counterexamples; node 0: pos_ce_count 0, neg_ce_count {}, no_positive_ce set",
        rep.total_ce, n0.neg_ce_count
    ))
}

fn bias_pipeline() -> Outcome {
    let net = net("f5.json");
    let train = data(&net, "leukemia_train.csv", Split::Train);
    let test = data(&net, "leukemia_test.csv", Split::Test);
    let spec = NoiseSpec::symmetric(8, 5);
    let mut store = CounterexampleStore::new();
    for s in &test.samples {
        if !net.classify(&s.features).unwrap().is(s.true_label) {
            continue;
        }
        let found = extract_adversarial_vectors(&net, s, &spec, 200).map_err(|e| e.to_string())?;
        store.extend_from(s, &spec, found).map_err(|e| e.to_string())?;
    }
    let rep = bias_report(&store, &train, &test, &net, 1000);
    let major = rep.majority_label.ok_or("no majority label")?;
    let share = rep.training_class_balance.iter().find(|c| c.label == major).unwrap();
    ensure!((share.fraction - 0.70).abs() <= 0.03, "majority share {}", share.fraction);

    let replay = |net: &fannet_core::Network, flipped: &Sample, kept: &Sample, nv: &NoiseVector| {
        let f = net.classify(&apply_noise(&flipped.features, nv).unwrap()).unwrap();
        let k = net.classify(&apply_noise(&kept.features, nv).unwrap()).unwrap();
        !f.is(flipped.true_label) && k.is(kept.true_label)
    };
    ensure!(!rep.bias_witness_pairs.is_empty(), "no witness pairs on F5");
    for w in &rep.bias_witness_pairs {
        let ok = replay(&net, test.get(w.flipped_sample).unwrap(), test.get(w.kept_sample).unwrap(), &w.nv);
        ensure!(ok, "pair {w:?} does not replay");
    }

    // the two-sample T1 pair
    let t1 = net_t1();
    let t1_data = data(&t1, "t1.csv", Split::Test);
    let s34 = NoiseSpec::symmetric(34, 2);
    let mut t1_store = CounterexampleStore::new();
    for s in &t1_data.samples {
        let found = extract_adversarial_vectors(&t1, s, &s34, usize::MAX).unwrap();
        t1_store.extend_from(s, &s34, found).unwrap();
    }
    let t1_rep = bias_report(&t1_store, &t1_data, &t1_data, &t1, usize::MAX);
    let pair = t1_rep
        .bias_witness_pairs
        .iter()
        .find(|w| w.flipped_sample == 0 && w.kept_sample == 1 && w.nv == NoiseVector(vec![-34, 34]));
    ensure!(pair.is_some(), "T1 pair (0, 1, [-34, +34]) missing");
    for w in &t1_rep.bias_witness_pairs {
        let ok = replay(&t1, t1_data.get(w.flipped_sample).unwrap(), t1_data.get(w.kept_sample).unwrap(), &w.nv);
        ensure!(ok, "T1 pair {w:?} does not replay");
    }
    Ok(format!(
        "training majority {} = {}/{} = {:.4}; {} F5 + {} T1 witness pairs replay (100%)",
        share.name,
        share.count,
        train.len(),
        share.fraction,
        rep.bias_witness_pairs.len(),
        t1_rep.bias_witness_pairs.len()
    ))
}

fn net_t1() -> fannet_core::Network {
    net("t1.json")
}

fn grid_scale() -> Outcome {
    let net = net("f5.json");
    let test = data(&net, "leukemia_test.csv", Split::Test);
    let spec = NoiseSpec::symmetric(5, 5);
    // the least tolerant test sample that still holds at +-5%: brute force
    // has to cover the whole grid, and pruning is hardest near the boundary
    let s = test
        .samples
        .iter()
        .filter(|s| net.classify(&s.features).unwrap().is(s.true_label))
        .filter_map(|s| {
            let e = per_sample_tolerance(&net, s, 50, SearchMode::BinarySearch).ok()?;
            e.tolerance.filter(|&t| t >= 5).map(|t| (t, s))
        })
        .min_by_key(|&(t, s)| (t, s.id))
        .map(|(_, s)| s)
        .ok_or("no F5 sample holds at +-5%")?;
    let t = Instant::now();
    let (brute, evals) = brute_force_check_counted(&net, s, &spec, u64::MAX).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(evals == 161_051, "brute force made {evals} evaluations");
    ensure!(elapsed < Duration::from_secs(5), "brute force took {elapsed:?}");
    let (v, stats) = verify_noise_level_with_stats(&net, s, &spec, SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure!(v == brute, "verdicts differ");
    let ratio = stats.exact_evals as f64 / evals as f64;
    ensure!(ratio <= 0.25, "branch-and-bound evaluated {} points ({:.1}%)", stats.exact_evals, ratio * 100.0);
    Ok(format!(
        "sample {}: brute force {evals} evals in {:.2?}; branch-and-bound {} exact evals ({:.2}%), {} boxes split, {} pruned",
        s.id,
        elapsed,
        stats.exact_evals,
        ratio * 100.0,
        stats.boxes_split,
        stats.boxes_pruned
    ))
}

fn smv_cross_validation() -> Outcome {
    let Some(bin) = std::env::var_os("FANNET_NUXMV") else {
        // without a checker, emission must still be byte-identical to the goldens
        let t1 = net_t1();
        let s = Sample::new(0, vec![2.0, 1.0], Label(0));
        let spec = NoiseSpec::symmetric(34, 2);
        for (p, file) in [(Property::P2, "t1_p2.smv"), (Property::P1, "t1_p1.smv")] {
            let text = emit_smv(&t1, &s, &spec, p).map_err(|e| e.to_string())?.text;
            let want = std::fs::read_to_string(fixture("golden").join(file)).unwrap();
            ensure!(text == want, "{file} differs from emission");
        }
        let g = net("g.json");
        let gs = data(&g, "g.csv", Split::Test);
        let text = emit_smv(&g, gs.get(1).unwrap(), &NoiseSpec::parse_ranges("-10:0,0:10,-5:5").unwrap(), Property::P2)
            .unwrap()
            .text;
        ensure!(text == std::fs::read_to_string(fixture("golden/g_p2_ranges.smv")).unwrap(), "g_p2_ranges.smv differs");
        let f5 = net("f5.json");
        let fs = data(&f5, "leukemia_test.csv", Split::Test);
        let text = emit_smv(&f5, fs.get(0).unwrap(), &NoiseSpec::symmetric(5, 5), Property::P2).unwrap().text;
        ensure!(text == std::fs::read_to_string(fixture("golden/f5_p2.smv")).unwrap(), "f5_p2.smv differs");
        return Ok("FANNET_NUXMV not set; 4 golden emissions byte-identical (checker comparison skipped)".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut agree = 0;
    for i in 0..20 {
        let net = random_net(&mut rng, 2, 3, 2);
        let s = random_correct_sample(&mut rng, &net);
        let spec = NoiseSpec::symmetric(rng.random_range(1..=15), 2);
        let model = emit_smv(&net, &s, &spec, Property::P2).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().unwrap();
        let out = run_checker(std::path::Path::new(&bin), &model, dir.path()).map_err(|e| e.to_string())?;
        let rep = cross_validate(&net, &s, &spec, &model, &out).map_err(|e| e.to_string())?;
        ensure!(rep.agree, "instance {i}: checker {:?}, engine {:?}", rep.checker, rep.engine);
        ensure!(rep.witness_replays != Some(false), "instance {i}: checker witness does not replay");
        agree += 1;
    }
    Ok(format!("{agree}/20 instances agree with the external checker; witnesses replay"))
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = cli_matrix(a.path(), 1);
    let four = cli_matrix(b.path(), 4);
    ensure!(
        one.keys().eq(four.keys()),
        "different file sets: {:?} vs {:?}",
        one.keys().collect::<Vec<_>>(),
        four.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &one {
        ensure!(bytes == &four[name], "{name} differs between 1 and 4 threads");
    }
    Ok(format!("{} report files byte-identical with --threads 1 and --threads 4", one.len()))
}

fn main() {
    let instances = random_instances();
    let criteria: Vec<Criterion> = vec![
        ("oracle equivalence", Box::new(|| oracle_equivalence(&instances))),
        ("T1 tolerance landmark", Box::new(t1_landmark)),
        ("monotonicity", Box::new(|| monotonicity(&instances))),
        ("IBP soundness", Box::new(ibp_soundness)),
        ("sensitivity flag on G", Box::new(sensitivity_flag)),
        ("bias pipeline", Box::new(bias_pipeline)),
        ("grid-scale performance", Box::new(grid_scale)),
        ("SMV cross-validation", Box::new(smv_cross_validation)),
        ("CLI determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.2}s] - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.2}s] - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
