//! End-to-end acceptance checks. Run with `cargo test --test acceptance`.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::io::BufReader;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entropy_sentry::dataio::{generate_synthetic, GeneratorConfig};
use entropy_sentry::sensitivity::{bound_curve, read_curve, write_curve};
use entropy_sentry::{
    brute_force_local_sensitivity, count_visits, evaluate, global_sensitivity, laplace_sample,
    local_sensitivity, location_entropy, precompute_smooth_sensitivity, publish, run_sweep, CheckInLog,
    LimitedTable, Mechanism, MetricMode, NoiseSource, PrivacyParams, SensitivityParams, SweepParam,
    SweepSpec,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Global sensitivity against 50-digit mpmath evaluations.
fn closed_forms() -> Outcome {
    check(global_sensitivity(1) == std::f64::consts::LN_2, || "GS(1) != ln 2".into())?;
    let expected = [
        (2u64, 0.693_147_180_559_945_309_42),
        (10, 0.693_147_180_559_945_309_42),
        (100, 2.077_990_560_180_190_258_8),
        (1000, 3.975_110_545_066_071_560_9),
    ];
    let mut worst: f64 = 0.0;
    for (c, want) in expected {
        let err = (global_sensitivity(c) - want).abs();
        check(err <= 1e-12, || format!("GS({c}) = {} differs from {want} by {err:e}", global_sensitivity(c)))?;
        worst = worst.max(err);
    }
    Ok(format!("max abs error {worst:.1e}"))
}

/// Exhaustive enumeration never exceeds the closed form; the removal change at
/// `{1, ..., 1, C}` equals the first closed-form term.
fn brute_force_bound() -> Outcome {
    let mut tight = 0;
    for n in 1..=6u64 {
        for c in 1..=5u64 {
            let brute = brute_force_local_sensitivity(n, c).map_err(|e| e.to_string())?;
            let ls = local_sensitivity(n, c);
            check(brute <= ls + 1e-9, || format!("n = {n}, C = {c}: brute {brute} > closed form {ls}"))?;
            if (ls - brute).abs() < 1e-12 {
                tight += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for n in 2..=6u64 {
        for c in 2..=5u64 {
            let mut counts = vec![1u64; n as usize - 1];
            counts.push(c);
            let before = location_entropy(counts.iter().copied()).unwrap();
            let after = location_entropy(counts[..counts.len() - 1].iter().copied()).unwrap();
            let (nf, cf) = (n as f64, c as f64);
            let term = ((nf - 1.0) / (nf - 1.0 + cf)).ln() + cf / (nf - 1.0 + cf) * cf.ln();
            // signed: the change is negative when the C-visit user dominates
            let err = ((after - before) - term).abs();
            check(err <= 1e-9, || format!("n = {n}, C = {c}: removal change differs from term by {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("30 (n, C) pairs bounded, {tight} tight; removal term max error {worst:.1e}"))
}

/// The precomputation with early exits equals a scan over every k.
fn smooth_equivalence() -> Outcome {
    let n_max = 2000u64;
    for c in [5u64, 20] {
        let params = SensitivityParams::new(c, n_max, 5.0, 1e-8, 1e-3).unwrap();
        let table = precompute_smooth_sensitivity(&params).map_err(|e| e.to_string())?;
        let beta = params.beta();
        let ls: Vec<f64> = (0..=2 * n_max).map(|m| if m == 0 { 0.0 } else { local_sensitivity(m, c) }).collect();
        let end = table.floor_from().map_or(n_max, |f| f - 1);
        for n in 1..=end {
            let mut naive = ls[n as usize];
            for k in 1..=n_max {
                let up = ls[(n + k) as usize];
                let down = if k < n { ls[(n - k) as usize] } else { 0.0 };
                naive = naive.max((-(k as f64) * beta).exp() * up.max(down));
            }
            let got = table.get(n).unwrap();
            check(got == naive, || format!("C = {c}, n = {n}: table {got} != naive {naive}"))?;
        }
        for n in end + 1..=n_max {
            check(table.get(n).unwrap() == params.xi, || format!("C = {c}, n = {n}: floor entry is not xi"))?;
        }
    }
    Ok(format!("C = 5 and 20 match exactly for n = 1..={n_max}"))
}

/// Removing one user changes at most M truncated locations, each by at most GS(C).
fn dp_audit() -> Outcome {
    let (c, m) = (5u64, 5u64);
    let gs = global_sensitivity(c);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_delta: f64 = 0.0;
    let mut worst_affected = 0;
    for pair in 0..200 {
        let log = generate_synthetic(&GeneratorConfig {
            num_locations: rng.gen_range(5..60),
            num_users: rng.gen_range(5..200),
            total_visits: rng.gen_range(50..4000),
            seed: rng.gen(),
        })
        .unwrap();
        let present: Vec<u32> = {
            let mut u: Vec<u32> = log.visits().iter().map(|v| v.user).collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        let victim = *present.choose(&mut rng).unwrap();
        let neighbour = log.filter_rows(|_, v| v.user != victim);

        let full = LimitedTable::new(&log, m, c);
        let reduced = LimitedTable::new(&neighbour, m, c);
        let mut affected = 0;
        for (i, entry) in full.table().iter().enumerate() {
            let id = full.table().location_id(entry);
            let h = full.entropies()[i];
            match reduced.table().get(id) {
                Some(other) => {
                    if other != entry {
                        affected += 1;
                        let delta = (h - other.entropy()).abs();
                        worst_delta = worst_delta.max(delta);
                        check(delta <= gs + 1e-9, || format!("pair {pair}: location {id} moved by {delta} > {gs}"))?;
                    }
                }
                // The victim was the only visitor: entropy 0 before, location gone after.
                None => {
                    affected += 1;
                    check(h == 0.0, || format!("pair {pair}: vanished location {id} had entropy {h}"))?;
                }
            }
        }
        check(reduced.table().len() <= full.table().len(), || format!("pair {pair}: removal added locations"))?;
        check(affected <= m as usize, || format!("pair {pair}: {affected} locations affected, M = {m}"))?;
        worst_affected = worst_affected.max(affected);
    }
    Ok(format!("200 pairs; max |dH| {worst_delta:.4} <= {gs:.4}, max affected {worst_affected}"))
}

fn laplace_moments() -> Outcome {
    let mut rng = NoiseSource::new(12345).stream("laplace");
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| laplace_sample(1.0, &mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    check(mean.abs() < 0.005, || format!("mean {mean}"))?;
    check((var - 2.0).abs() <= 0.05 * 2.0, || format!("variance {var}"))?;
    Ok(format!("mean {mean:+.5}, variance {var:.4}"))
}

fn sparse_log() -> CheckInLog {
    generate_synthetic(&GeneratorConfig::sparse_scaled(1)).unwrap()
}

/// Mean KL over 20 seeds falls as epsilon grows, and crowd blending beats
/// plain truncation at the strongest privacy level.
fn kl_trend(log: &CheckInLog) -> Outcome {
    let grid = [0.1, 0.5, 1.0, 5.0];
    let spec = SweepSpec {
        param: SweepParam::Epsilon,
        values: grid.to_vec(),
        reps: 20,
        mode: MetricMode::Default,
    };
    let mut summary = Vec::new();
    let mut at_strongest = Vec::new();
    let mut failures = Vec::new();
    for mechanism in [Mechanism::Limit, Mechanism::LimitSs, Mechanism::LimitCb] {
        let base = PrivacyParams {
            mechanism,
            ..PrivacyParams::default()
        };
        let table = run_sweep(log, &base, &spec).map_err(|e| e.to_string())?;
        let means: Vec<f64> = grid.iter().map(|&e| table.aggregate(e).unwrap().kl.mean).collect();
        if !means.windows(2).all(|w| w[1] < w[0]) {
            failures.push(format!("{mechanism} not strictly decreasing: {means:.4?}"));
        }
        summary.push(format!("{mechanism} {means:.4?}"));
        at_strongest.push(means[0]);
    }
    let (limit, cb) = (at_strongest[0], at_strongest[2]);
    if cb >= limit {
        failures.push(format!("limit-cb KL {cb:.4} not below limit KL {limit:.4} at epsilon 0.1"));
    }
    if failures.is_empty() {
        Ok(summary.join("; "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), summary.join("; ")))
    }
}

fn ratio_for(log: &CheckInLog, k: u64) -> Result<f64, String> {
    let params = PrivacyParams {
        mechanism: Mechanism::LimitCb,
        k,
        eligibility_k: 20,
        ..PrivacyParams::default()
    };
    let records = publish(log, &params, None).map_err(|e| e.to_string())?;
    let report = evaluate(&count_visits(log), &records, MetricMode::Default, 20).map_err(|e| e.to_string())?;
    Ok(report.published_ratio)
}

/// Crowd blending publishes every eligible location of the dense data but not
/// of the sparse data.
fn published_ratio(sparse: &CheckInLog) -> Outcome {
    let sparse_ratio = ratio_for(sparse, 50)?;
    let dense = generate_synthetic(&GeneratorConfig::dense_scaled(1)).unwrap();
    let mut dense_ratios = Vec::new();
    for k in [10u64, 20, 30, 40, 50] {
        let r = ratio_for(&dense, k)?;
        check(r == 1.0, || format!("dense ratio {r} at k = {k}"))?;
        dense_ratios.push(r);
    }
    check(sparse_ratio < 1.0, || format!("sparse ratio {sparse_ratio}"))?;
    Ok(format!("dense {dense_ratios:?} for k = 10..50; sparse {sparse_ratio:.3}"))
}

/// Noise scales per location: baseline > limit >= limit-ss past the crossover,
/// limit-cb < limit, each matching the written-and-reread bound curve.
fn noise_ordering(log: &CheckInLog) -> Outcome {
    let base = PrivacyParams {
        c: 20,
        m: 5,
        epsilon: 5.0,
        delta: 1e-8,
        k: 25,
        ..PrivacyParams::default()
    };
    let n_max = LimitedTable::new(log, base.m, base.c).max_users();
    let sp = SensitivityParams::new(base.c, n_max, base.epsilon, base.delta, base.xi).unwrap();
    let ss = precompute_smooth_sensitivity(&sp).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    write_curve(&bound_curve(&ss), std::fs::File::create(&path).unwrap()).map_err(|e| e.to_string())?;
    let curve = read_curve(BufReader::new(std::fs::File::open(&path).unwrap())).map_err(|e| e.to_string())?;

    let run = |mechanism| {
        let p = PrivacyParams { mechanism, ..base.clone() };
        publish(log, &p, Some(&ss)).map_err(|e| e.to_string())
    };
    let baseline = run(Mechanism::Baseline)?;
    let limit = run(Mechanism::Limit)?;
    let limit_ss = run(Mechanism::LimitSs)?;
    let limit_cb = run(Mechanism::LimitCb)?;

    let (m, eps) = (base.m as f64, base.epsilon);
    let gs = curve[0].global;
    // Smallest n from which 2 SS(n) <= GS holds for every larger n in the curve.
    let crossover = curve
        .iter()
        .rposition(|p| 2.0 * p.smooth > p.global)
        .map_or(1, |i| curve[i].n + 1);
    let baseline_scale = baseline[0].noise_scale;
    let mut past_crossover = 0;
    for ((l, s), b) in limit.iter().zip(&limit_ss).zip(&limit_cb) {
        check(l.location_id == s.location_id && l.location_id == b.location_id, || "records misaligned".into())?;
        let point = &curve[l.n_users as usize - 1];
        check(point.n == l.n_users, || "curve rows out of order".into())?;
        check(l.noise_scale == m * point.global / eps, || format!("limit scale off curve at {}", l.location_id))?;
        check(s.noise_scale == m * 2.0 * point.smooth / eps, || format!("limit-ss scale off curve at {}", s.location_id))?;
        check(baseline_scale > l.noise_scale, || format!("baseline {baseline_scale} <= limit {}", l.noise_scale))?;
        if l.n_users >= crossover {
            past_crossover += 1;
            check(l.noise_scale >= s.noise_scale, || {
                format!("{}: limit {} < limit-ss {} at n = {}", l.location_id, l.noise_scale, s.noise_scale, l.n_users)
            })?;
        }
        if b.published() {
            let k_point = &curve[base.k as usize - 1];
            check(b.noise_scale == m * k_point.local / eps, || format!("limit-cb scale off curve at {}", b.location_id))?;
            check(b.noise_scale < l.noise_scale, || format!("limit-cb {} >= limit {}", b.noise_scale, l.noise_scale))?;
        }
    }
    check(past_crossover > 0, || "no location past the crossover".into())?;
    check(baseline.iter().all(|r| r.noise_scale == baseline_scale), || "baseline scale varies".into())?;
    Ok(format!(
        "baseline {baseline_scale:.2} > limit {:.3} (GS {gs:.4}); crossover n = {crossover}, {past_crossover} locations past it; limit-cb {:.3}",
        m * gs / eps,
        m * curve[base.k as usize - 1].local / eps
    ))
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let sparse = std::cell::OnceCell::new();
    let sparse = || sparse.get_or_init(sparse_log);

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 sensitivity closed forms", Box::new(closed_forms)),
        ("2 brute-force oracle bound", Box::new(brute_force_bound)),
        ("3 smooth-sensitivity equivalence", Box::new(smooth_equivalence)),
        ("4 differential-privacy audit", Box::new(dp_audit)),
        ("5 laplace sampler moments", Box::new(laplace_moments)),
        ("6 KL trend over epsilon", Box::new(|| kl_trend(sparse()))),
        ("7 published ratio", Box::new(|| published_ratio(sparse()))),
        ("8 noise-magnitude ordering", Box::new(|| noise_ordering(sparse()))),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
