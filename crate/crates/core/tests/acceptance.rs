//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use metareduce::challenge::{
    classify, random_top_hit_probability_exact, skewness, welch_p, AlphaThreshold, Difficulty, DEFAULT_ALPHA,
};
use metareduce::config_space::{close_dependencies, ComponentSpec, Roster, StrategyLabel};
use metareduce::expectation::{
    expected_oracle_average, expected_random_average, expected_random_optimal, normalize, Normalized,
};
use metareduce::harness::{
    aggregate_report, consistency, nemenyi_test, rank_strategies, run_constrained_search, run_matrix,
    strategy_cells, write_aggregate_csv, write_consistency_csv, write_runs_csv, write_strategy_ranks_csv,
    prior_best_pipeline, FailurePolicy, RunOutcome, RunStatus, SearchBudget, SearchSettings, StrategySpaces,
    SurrogateSurface,
};
use metareduce::landmarking::{
    landmark_matches, landmark_profile, most_similar_dataset, recommend_landmarked_space, select_landmarkers,
    LandmarkProfile,
};
use metareduce::meta_store::{EvaluationRecord, IngestOptions, MetaKnowledgeBase, PipelineFilter, Status};
use metareduce::ranking::{build_ranking, rank_with_ties, RankKey};
use metareduce::synth::{planted_sample, PLANTED_BUDGET};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_means(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(0.0..1.0)).collect()
}

fn identity_suite() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let p = rng.random_range(3..=12);
        let means = random_means(&mut rng, p);
        let all = expected_oracle_average(&means, p).unwrap();
        for k in 1..=p {
            let r = expected_random_average(&means, k).unwrap();
            ensure!(r == all, "R_avg({k}) = {r} but the full-pool average is {all}");
        }
        let r1 = expected_random_optimal(&means, 1).unwrap();
        ensure!((r1 - all).abs() <= 1e-12, "R_opt(1) = {r1}, eO_avg(P) = {all}");
        let rp = expected_random_optimal(&means, p).unwrap();
        let o1 = expected_oracle_average(&means, 1).unwrap();
        ensure!((rp - o1).abs() <= 1e-12, "R_opt(P) = {rp}, eO_avg(1) = {o1}");
    }
    ensure!(start.elapsed() < Duration::from_secs(5), "took {:?}", start.elapsed());
    Ok(())
}

fn combinatorial_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in 1..=12usize {
        let means = random_means(&mut rng, p);
        let mut sums = vec![0.0; p + 1];
        let mut counts = vec![0u64; p + 1];
        for mask in 1u32..(1 << p) {
            let k = mask.count_ones() as usize;
            let best = (0..p).filter(|i| mask & (1 << i) != 0).map(|i| means[i]).fold(f64::INFINITY, f64::min);
            sums[k] += best;
            counts[k] += 1;
        }
        for k in 1..=p {
            let brute = sums[k] / counts[k] as f64;
            let closed = expected_random_optimal(&means, k).unwrap();
            ensure!((brute - closed).abs() <= 1e-12, "P={p} k={k}: enumeration {brute}, closed form {closed}");
        }
    }
    ensure!(start.elapsed() < Duration::from_secs(30), "took {:?}", start.elapsed());
    Ok(())
}

fn outcome(run: usize, cv: Option<Vec<f64>>) -> RunOutcome {
    RunOutcome {
        strategy_label: "O1-k4".into(),
        dataset_id: "d".into(),
        run_index: run,
        status: if cv.is_some() { RunStatus::Completed } else { RunStatus::Failed },
        best_cv: cv,
        best_pipeline: None,
        cost_spent: 1.0,
    }
}

/// `agreeing` runs with the same fold errors, the rest completed but far
/// apart from each other, then `failed` failures.
fn outcome_set(agreeing: usize, apart: usize, failed: usize) -> Vec<RunOutcome> {
    let shared = vec![0.20, 0.21, 0.19, 0.20, 0.22];
    let mut out = Vec::new();
    for _ in 0..agreeing {
        out.push(outcome(out.len(), Some(shared.clone())));
    }
    for i in 0..apart {
        let level = 0.4 + 0.1 * i as f64;
        out.push(outcome(out.len(), Some(vec![level, level + 0.001, level - 0.001, level, level + 0.002])));
    }
    for _ in 0..failed {
        out.push(outcome(out.len(), None));
    }
    out
}

fn consistency_values() -> Check {
    let c = |set: &[RunOutcome]| consistency(set, DEFAULT_ALPHA, AlphaThreshold::Conventional);
    for (agreeing, expected) in [(2, 0.1), (3, 0.3), (4, 0.6), (5, 1.0)] {
        let got = c(&outcome_set(agreeing, 5 - agreeing, 0));
        ensure!(got == expected, "{agreeing} of 5 agreeing gives {got}, expected {expected}");
    }
    let mut ceiling: f64 = 0.0;
    for (agreeing, apart) in [(2, 0), (0, 2), (1, 1)] {
        ceiling = ceiling.max(c(&outcome_set(agreeing, apart, 3)));
    }
    ensure!(ceiling == 0.1, "three failures allow consistency up to {ceiling}");
    Ok(())
}

fn tie_rank_rule() -> Check {
    let got = rank_with_ties(&[0.1, 0.2, 0.2, 0.4]);
    ensure!(got == vec![1.0, 2.5, 2.5, 4.0], "ranks {got:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let p = rng.random_range(1..=30usize);
        // Coarse values so ties are common.
        let values: Vec<f64> = (0..p).map(|_| rng.random_range(0..6) as f64 / 10.0).collect();
        let sum: f64 = rank_with_ties(&values).iter().sum();
        let expected = (p * (p + 1)) as f64 / 2.0;
        ensure!(sum == expected, "{values:?}: rank sum {sum}, expected {expected}");
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    (0..k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn random_hit_probability() -> Check {
    for p in 1..=12u64 {
        for g in 1..=p {
            for k in 1..=p {
                // Top performers are the first g indices.
                let top = (1u32 << g) - 1;
                let (mut hits, mut total) = (0u64, 0u64);
                for mask in 1u32..(1 << p) {
                    if mask.count_ones() as u64 == k {
                        total += 1;
                        hits += u64::from(mask & top != 0);
                    }
                }
                let brute = BigRational::new(BigInt::from(hits), BigInt::from(total));
                let formula = BigRational::from_integer(BigInt::from(1))
                    - BigRational::new(binomial(p - g, k), binomial(p, k));
                let got = random_top_hit_probability_exact(p, g, k).unwrap();
                ensure!(got == brute && got == formula, "P={p} g={g} k={k}: {got} vs {brute} / {formula}");
            }
        }
    }
    let anchor = random_top_hit_probability_exact(10, 2, 3).unwrap();
    ensure!(anchor == BigRational::new(8.into(), 15.into()), "P=10 g=2 k=3 gives {anchor}");
    Ok(())
}

fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let a = G[0] + (1..9).map(|i| G[i] / (x + i as f64)).sum::<f64>();
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Two-sided Student-t tail by Simpson quadrature of the density over [0, |t|].
fn t_two_sided(t: f64, df: f64) -> f64 {
    let norm = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
    let f = |x: f64| norm * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let n = 20_000;
    let h = t.abs() / n as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (1.0 - 2.0 * s * h / 3.0).clamp(0.0, 1.0)
}

fn welch_oracle(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (n, m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
    };
    let ((na, ma, va), (nb, mb, vb)) = (stats(a), stats(b));
    let (qa, qb) = (va / na, vb / nb);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    t_two_sided(t, df)
}

fn welch_oracle_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        let (na, nb) = (rng.random_range(2..=15usize), rng.random_range(2..=15usize));
        let da = Normal::new(rng.random_range(0.1..0.4), rng.random_range(0.01..0.1)).unwrap();
        let db = Normal::new(rng.random_range(0.1..0.4), rng.random_range(0.01..0.1)).unwrap();
        let a: Vec<f64> = (0..na).map(|_| da.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..nb).map(|_| db.sample(&mut rng)).collect();
        let p = welch_p(&a, &b).unwrap();
        let oracle = welch_oracle(&a, &b);
        ensure!((p - oracle).abs() <= 1e-9, "pair {i}: welch_p {p}, quadrature {oracle}");
        let swapped = welch_p(&b, &a).unwrap();
        ensure!((p - swapped).abs() <= 1e-12, "pair {i}: not symmetric ({p} vs {swapped})");
        let shift = rng.random_range(-1.0..1.0);
        let sa: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let sb: Vec<f64> = b.iter().map(|v| v + shift).collect();
        let shifted = welch_p(&sa, &sb).unwrap();
        ensure!((p - shifted).abs() <= 1e-12, "pair {i}: shift by {shift} moves p from {p} to {shifted}");
    }
    Ok(())
}

fn normalization_anchors() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let (o, r) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        if o == r {
            continue;
        }
        ensure!(normalize(o, o, r) == Normalized::Score(0.0), "oracle value not 0 for ({o}, {r})");
        ensure!(normalize(r, o, r) == Normalized::Score(1.0), "random value not 1 for ({o}, {r})");
    }
    ensure!(normalize(0.3, 0.2, 0.2) == Normalized::Undefined, "equal oracle and random must be undefined");

    let sample = planted_sample();
    let base = sample.automl_base().map_err(|e| e.to_string())?;
    let table = build_ranking(&base, PipelineFilter::All, RankKey::Mean).map_err(|e| e.to_string())?;
    let (dataset, meta) = (&sample.manifest.penalty_cells[0].0, &sample.manifest.penalty_cells[0].1);
    let means = table.values_for(dataset).unwrap().to_vec();
    let pool_value = table.value(dataset, meta).unwrap();
    let score = normalize(
        pool_value,
        expected_oracle_average(&means, 1).unwrap(),
        expected_random_average(&means, 1).unwrap(),
    );
    ensure!(matches!(score, Normalized::Score(s) if s > 1.0), "all-penalty k=1 pool scored {score}");
    Ok(())
}

fn landmark_end_to_end() -> Check {
    let sample = planted_sample();
    let base = sample.automl_base().map_err(|e| e.to_string())?;
    let table = build_ranking(&base, PipelineFilter::All, RankKey::Mean).map_err(|e| e.to_string())?;
    let landmarkers = select_landmarkers(&base, 5).map_err(|e| e.to_string())?;
    ensure!(landmarkers == sample.manifest.landmarkers, "landmarkers {landmarkers:?}");
    let profiles: Vec<LandmarkProfile> =
        base.datasets().iter().map(|d| landmark_profile(&base, d, &landmarkers).unwrap()).collect();
    for profile in &profiles {
        let d = &profile.dataset_id;
        let priors: Vec<LandmarkProfile> = profiles.iter().filter(|p| &p.dataset_id != d).cloned().collect();
        let planted = &sample.manifest.neighbours[d];
        let hit = most_similar_dataset(profile, &priors).map_err(|e| e.to_string())?;
        ensure!(&hit.dataset_id == planted, "{d}: neighbour {} instead of {planted}", hit.dataset_id);
        for k in 1..=sample.roster.len() {
            let space = recommend_landmarked_space(&table, &sample.roster, profile, &priors, k).unwrap();
            let expected = &sample.manifest.orders[planted][..k];
            ensure!(space.predictor_pool == expected, "{d} k={k}: pool {:?}", space.predictor_pool);
            ensure!(space.landmark_cost == sample.manifest.landmark_cost, "{d}: cost {}", space.landmark_cost);
        }
    }

    let space = recommend_landmarked_space(&table, &sample.roster, &profiles[0], &profiles[1..], 4).unwrap();
    let surface = SurrogateSurface::new(sample.surface.clone()).map_err(|e| e.to_string())?;
    let settings = SearchSettings::default();
    let short = SearchBudget::new(space.landmark_cost - 10.0);
    let starved = run_constrained_search(&space, "d1", &surface, &short, &settings, 1);
    ensure!(!starved.is_completed(), "a budget below the landmark cost still completed");
    let ample = SearchBudget::new(PLANTED_BUDGET);
    let fed = run_constrained_search(&space, "d1", &surface, &ample, &settings, 1);
    ensure!(fed.is_completed(), "an ample budget failed");
    Ok(())
}

/// One-sided sign test: probability of at least `wins` successes in `n` fair trials.
fn sign_test(wins: usize, n: usize) -> f64 {
    let total = 2f64.powi(n as i32);
    (wins..=n).map(|i| binomial(n as u64, i as u64).to_string().parse::<f64>().unwrap()).sum::<f64>() / total
}

fn planted_hierarchy() -> Check {
    let start = Instant::now();
    let sample = planted_sample();
    let base = sample.automl_base().map_err(|e| e.to_string())?;
    let table = build_ranking(&base, PipelineFilter::All, RankKey::Mean).map_err(|e| e.to_string())?;
    let surface = SurrogateSurface::new(sample.surface.clone()).map_err(|e| e.to_string())?;
    let mut spaces = StrategySpaces::new(&sample.roster);
    spaces.rankings.push(&table);
    let labels: Vec<StrategyLabel> =
        ["O1-k4", "M1-k4", "R-k4", "baseline"].iter().map(|l| l.parse().unwrap()).collect();
    let datasets = base.datasets().to_vec();
    let seeds: Vec<u64> = (1..=30).collect();
    let budget = SearchBudget { runs_per_strategy: 1, ..SearchBudget::new(PLANTED_BUDGET) };
    let outcomes = run_matrix(&labels, &datasets, &seeds, &surface, &budget, &SearchSettings::default(), |l, d, s| {
        spaces.build(l, d, s)
    })
    .map_err(|e| e.to_string())?;

    // Per-seed mean best error over datasets, failures scored as 1.
    let mut per_seed = vec![vec![0.0; seeds.len()]; labels.len()];
    for o in &outcomes {
        let li = labels.iter().position(|l| l.to_string() == o.strategy_label).unwrap();
        per_seed[li][o.run_index] += o.mean_cv_error().unwrap_or(1.0) / datasets.len() as f64;
    }
    for pair in 0..labels.len() - 1 {
        let (better, worse) = (&per_seed[pair], &per_seed[pair + 1]);
        let gap: f64 = worse.iter().zip(better).map(|(w, b)| w - b).sum::<f64>() / seeds.len() as f64;
        let wins = worse.iter().zip(better).filter(|(w, b)| w > b).count();
        let losses = worse.iter().zip(better).filter(|(w, b)| w < b).count();
        let p = sign_test(wins, wins + losses);
        ensure!(
            gap >= 0.0 && p < 0.05,
            "{} vs {}: mean gap {gap}, sign test {wins}/{} p = {p}",
            labels[pair],
            labels[pair + 1],
            wins + losses
        );
    }
    ensure!(start.elapsed() < Duration::from_secs(120), "took {:?}", start.elapsed());
    Ok(())
}

fn dependency_closure() -> Check {
    let ids = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<String>>();
    let mut predictors: Vec<ComponentSpec> =
        (0..22).filter(|&i| i != 7).map(|i| ComponentSpec::predictor(format!("P{i}"))).collect();
    predictors.push(ComponentSpec::kernel("P7", "P6"));
    predictors.extend((22..30).map(|i| ComponentSpec::meta_predictor(format!("P{i}"))));
    let roster = Roster { predictors, ..Roster::default() };

    let mut ranking = ids(&["P25", "P22", "P7", "P19", "P6", "P0"]);
    let rest: Vec<String> = roster.predictor_ids().into_iter().filter(|p| !ranking.contains(p)).collect();
    ranking.extend(rest);

    let cases: [(&[&str], &[&str]); 4] = [
        (&["P25", "P22"], &["P19"]),
        (&["P7"], &["P6"]),
        (&["P7", "P25"], &["P6"]),
        (&["P3", "P1"], &[]),
    ];
    for (pool, expected) in cases {
        let (closed, added) = close_dependencies(&ids(pool), &ranking, &roster).map_err(|e| e.to_string())?;
        ensure!(added == ids(expected), "{pool:?}: added {added:?}, expected {expected:?}");
        let mut want = ids(pool);
        want.extend(ids(expected));
        ensure!(closed == want, "{pool:?}: closed pool {closed:?}");
        let (again, more) = close_dependencies(&closed, &ranking, &roster).map_err(|e| e.to_string())?;
        ensure!(more.is_empty() && again == closed, "{pool:?}: closing twice added {more:?}");
    }
    Ok(())
}

fn simulate_bytes() -> Result<Vec<Vec<u8>>, String> {
    let sample = planted_sample();
    let base = sample.automl_base().map_err(|e| e.to_string())?;
    let second = sample.default_base().map_err(|e| e.to_string())?;
    let tables = [
        build_ranking(&base, PipelineFilter::All, RankKey::Mean).map_err(|e| e.to_string())?,
        build_ranking(&second, PipelineFilter::All, RankKey::Mean).map_err(|e| e.to_string())?,
    ];
    let surface = SurrogateSurface::new(sample.surface.clone()).map_err(|e| e.to_string())?;
    let mut spaces = StrategySpaces::new(&sample.roster);
    spaces.rankings = tables.iter().collect();
    for b in [&base, &second] {
        let landmarkers = select_landmarkers(b, 5).map_err(|e| e.to_string())?;
        let hits: HashMap<_, _> = landmark_matches(b, &landmarkers)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(p, m)| (p.dataset_id, m))
            .collect();
        spaces.landmarks.push(hits);
    }
    let datasets = base.datasets().to_vec();
    for d in &datasets {
        if let Some(p) = prior_best_pipeline(&base, d) {
            spaces.prior_best.insert(d.clone(), p);
        }
    }
    let labels = StrategyLabel::catalog(&[1, 4, 8]);
    let seeds: Vec<u64> = (1..=5).collect();
    let budget = SearchBudget::new(500.0);
    let outcomes = run_matrix(&labels, &datasets, &seeds, &surface, &budget, &SearchSettings::default(), |l, d, s| {
        spaces.build(l, d, s)
    })
    .map_err(|e| e.to_string())?;
    let cells = strategy_cells(&outcomes, DEFAULT_ALPHA, AlphaThreshold::Conventional, FailurePolicy::Penalize);
    let ranks = rank_strategies(&cells);
    let avg: Vec<(String, f64)> = ranks.iter().map(|r| (r.strategy.clone(), r.avg_rank)).collect();
    let nemenyi = nemenyi_test(&avg, datasets.len(), DEFAULT_ALPHA).map_err(|e| e.to_string())?;
    let aggregate = aggregate_report(&cells, &ranks).map_err(|e| e.to_string())?;

    let mut files = vec![Vec::new(); 4];
    write_runs_csv(&outcomes, &mut files[0]).map_err(|e| e.to_string())?;
    write_consistency_csv(&cells, &mut files[1]).map_err(|e| e.to_string())?;
    write_strategy_ranks_csv(&ranks, &mut files[2]).map_err(|e| e.to_string())?;
    write_aggregate_csv(&aggregate, &mut files[3]).map_err(|e| e.to_string())?;
    files.push(serde_json::to_vec_pretty(&nemenyi).map_err(|e| e.to_string())?);
    Ok(files)
}

fn determinism() -> Check {
    let first = simulate_bytes()?;
    let second = simulate_bytes()?;
    ensure!(first.iter().all(|f| !f.is_empty()), "an output file is empty");
    for (i, (a, b)) in first.iter().zip(&second).enumerate() {
        ensure!(a == b, "output file {i} differs between identical runs");
    }
    Ok(())
}

fn skewness_anchors() -> Check {
    let s = skewness(&[0.25, 0.5, 0.75]).map_err(|e| e.to_string())?;
    ensure!(s == 0.5, "symmetric vector gives {s}");
    let s = skewness(&[0.1, 0.2, 0.3, 0.4, 0.5]).map_err(|e| e.to_string())?;
    ensure!(s == 0.5, "symmetric grid gives {s}");
    let s = skewness(&[0.0, 0.0, 0.0, 1.0]).map_err(|e| e.to_string())?;
    ensure!(s == 0.25, "[0,0,0,1] gives {s}");

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let p = rng.random_range(2..=12);
        let v = random_means(&mut rng, p);
        let (scale, shift) = (rng.random_range(0.1..10.0), rng.random_range(-5.0..5.0));
        let w: Vec<f64> = v.iter().map(|x| scale * x + shift).collect();
        let (a, b) = (skewness(&v).unwrap(), skewness(&w).unwrap());
        ensure!((a - b).abs() <= 1e-12, "affine map moved skewness from {a} to {b}");
    }

    // A few strong predictors and a long tail of poor ones.
    let means = [0.10, 0.18, 0.38, 0.40, 0.42, 0.44, 0.46, 0.50];
    let records: Vec<EvaluationRecord> = means
        .iter()
        .enumerate()
        .flat_map(|(p, &m)| {
            (0..3).map(move |f| EvaluationRecord {
                base_id: "b".into(),
                dataset_id: "top_heavy".into(),
                predictor_id: format!("P{p}"),
                pipeline: vec![format!("P{p}")],
                config_id: "default".into(),
                fold_index: f,
                error_rate: Some(m + 0.01 * (f as f64 - 1.0)),
                eval_time_s: 1.0,
                status: Status::Ok,
            })
        })
        .collect();
    let base = MetaKnowledgeBase::from_records(records, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let cell_means: Vec<f64> = base
        .predictors()
        .iter()
        .map(|p| base.aggregate("top_heavy", p, PipelineFilter::All).unwrap().mean_error)
        .collect();
    let s = skewness(&cell_means).map_err(|e| e.to_string())?;
    ensure!(s > 0.5 && classify(s) == Difficulty::Hard, "top-heavy surface has skewness {s}");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("random-average and oracle identities", identity_suite),
        ("closed-form random optimum equals subset enumeration", combinatorial_oracle),
        ("consistency of constructed outcome sets", consistency_values),
        ("tie-rank rule and rank sums", tie_rank_rule),
        ("random top-performer hit probability", random_hit_probability),
        ("Welch p against a quadrature oracle", welch_oracle_check),
        ("normalization anchors and the worse-than-random regime", normalization_anchors),
        ("landmark neighbours, recommendations and cost deduction", landmark_end_to_end),
        ("oracle <= leaderboard <= random <= baseline on the planted surface", planted_hierarchy),
        ("dependency closure fixtures and idempotence", dependency_closure),
        ("byte-identical simulation re-runs", determinism),
        ("skewness anchors and hard classification", skewness_anchors),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(()) => println!("PASS criterion {}: {name} ({:.2?})", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
