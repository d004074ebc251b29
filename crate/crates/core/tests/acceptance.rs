//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the PASS/FAIL lines are always shown.
//! Exits nonzero when any criterion fails.

// Negated comparisons are deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use qrw_core::eval::{
    f1_trend, partition_metrics, pr_curve, reactivity_rate, relative_f1_change, EvalRecord,
};
use qrw_core::markov::snapshot::{read_graph, write_graph};
use qrw_core::markov::{
    build_graph, fundamental_row, phi_infinity, rewrite_table, top_rewrites, BuildConfig, ChainMode,
    EdgeCounts, MarkovGraph, RewriteTable, SolverConfig, StateSpace,
};
use qrw_core::meta::{
    beta_superiority, build_superposition, detect_msts, mst_weights, select_alpha, wilson_interval,
    wilson_width, z_for_confidence, AlphaConfig, AlphaTier, BetaEvidence, EdgeMeta, EdgeParams,
    EdgeRoleRatios, MetaSection, PopulationCounts, SelfAwareConfig, TierStats, DEFAULT_CONFIDENCE,
    DEFAULT_ETA, DEFAULT_QUAD_EPS,
};
use qrw_core::session::{parse_hypothesis, Hypothesis, Outcome, Session, Turn};
use qrw_core::sim::{
    benchmark, count_flips, run_loop, scenario_type1, scenario_type2, write_simlog,
    music, BenchmarkShape, SimulationConfig,
};
use qrw_core::template::{
    build_dags, extract_template, generate_synthetic, ArticleRules, EntitySpan, Synthesis, Template,
    TemplateDag, Token,
};
use qrw_core::train::TrainMode;
use qrw_core::Graph;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("fundamental matrix", fundamental_matrix),
        ("beta superiority", beta_superiority_checks),
        ("wilson gate", wilson_gate),
        ("superposition limits", superposition_limits),
        ("degeneracy reproduction", degeneracy),
        ("self-aware superiority", self_aware_superiority),
        ("template pipeline", template_pipeline),
        ("metric arithmetic", metric_arithmetic),
        ("determinism and persistence", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.iter().any(|o| o == &id.to_string() || name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------- helpers

fn state(i: usize) -> Hypothesis {
    parse_hypothesis(&format!("Test|Probe|Slot:s{i}")).unwrap()
}

fn space(n: usize) -> StateSpace {
    StateSpace::new((0..n).map(state))
}

/// Random chain over `n` transient states in which every row has a direct
/// absorbing edge.
fn random_chain(n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut counts = EdgeCounts::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.5) {
                counts.insert((i, j), rng.random_range(1..20));
            }
        }
        counts.insert((i, n), rng.random_range(1..10));
        if rng.random_bool(0.7) {
            counts.insert((i, n + 1), rng.random_range(1..10));
        }
    }
    MarkovGraph::from_counts(space(n), counts, None).unwrap()
}

/// Dense `(I − Q)⁻¹` by Gauss–Jordan elimination with partial pivoting.
fn dense_fundamental(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.state_count();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| f64::from(i == j) - g.transition(i, j)).collect();
            row.extend((0..n).map(|j| f64::from(i == j)));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

fn dense_phi(g: &Graph) -> Vec<Vec<f64>> {
    let n_mat = dense_fundamental(g);
    n_mat
        .iter()
        .map(|row| row.iter().enumerate().map(|(j, v)| g.success_probability(j) * v).collect())
        .collect()
}

// ---------------------------------------------------------------- 1

fn fundamental_matrix() -> Verdict {
    let solver = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=10);
        let g = random_chain(n, &mut rng);
        let oracle = dense_fundamental(&g);
        for i in 0..n {
            let row = fundamental_row(&g, i, &solver).map_err(|e| e.to_string())?;
            for j in 0..n {
                worst = worst.max((row[j] - oracle[i][j]).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "max |N - dense| = {worst:e} exceeds 1e-9");

    let walks = 1_000_000;
    let mut worst_mc: f64 = 0.0;
    for _ in 0..3 {
        let g = random_chain(5, &mut rng);
        let mut absorbed_from = [0u64; 5];
        for _ in 0..walks {
            let mut at = 0;
            loop {
                let u: f64 = rng.random();
                let mut acc = g.success_probability(at);
                if u < acc {
                    absorbed_from[at] += 1;
                    break;
                }
                acc += g.failure_probability(at);
                if u < acc {
                    break;
                }
                let mut next = None;
                for &(j, p) in g.transient_row(at) {
                    acc += p;
                    if u < acc {
                        next = Some(j);
                        break;
                    }
                }
                // Rounding slack at the top of the row.
                match next.or_else(|| g.transient_row(at).last().map(|&(j, _)| j)) {
                    Some(j) => at = j,
                    None => break,
                }
            }
        }
        for (j, &hits) in absorbed_from.iter().enumerate() {
            let phi = phi_infinity(&g, 0, j, &solver).map_err(|e| e.to_string())?;
            worst_mc = worst_mc.max((phi - hits as f64 / walks as f64).abs());
        }
    }
    ensure!(worst_mc <= 1e-2, "max |phi - Monte Carlo| = {worst_mc:e} exceeds 1e-2");
    Ok(format!("dense max err {worst:.2e}; Monte Carlo max err {worst_mc:.2e}"))
}

// ---------------------------------------------------------------- 2

fn beta_superiority_checks() -> Verdict {
    let ev = |a, b| BetaEvidence::new(a, b).unwrap();
    for (a, b) in [(1.0, 1.0), (2.0, 5.0), (0.5, 0.5), (40.0, 3.0), (7.5, 7.5)] {
        let v = beta_superiority(ev(a, b), ev(a, b), DEFAULT_QUAD_EPS).map_err(|e| e.to_string())?;
        ensure!((v - 0.5).abs() <= DEFAULT_QUAD_EPS, "symmetric ({a}, {b}) gave {v}");
    }
    let two_thirds = beta_superiority(ev(1.0, 2.0), ev(1.0, 1.0), DEFAULT_QUAD_EPS).map_err(|e| e.to_string())?;
    ensure!((two_thirds - 2.0 / 3.0).abs() <= 1e-6, "Beta(1,1) over Beta(1,2) gave {two_thirds}");

    let mut rng = ChaCha8Rng::seed_from_u64(0xBE7A);
    let draws = 1_000_000;
    let mut worst_z: f64 = 0.0;
    for _ in 0..50 {
        let p: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.5..30.0));
        let (x, w) = (ev(p[0], p[1]), ev(p[2], p[3]));
        let exact = beta_superiority(x, w, DEFAULT_QUAD_EPS).map_err(|e| e.to_string())?;
        let (dx, dw) = (Beta::new(p[0], p[1]).unwrap(), Beta::new(p[2], p[3]).unwrap());
        let wins = (0..draws).filter(|_| dw.sample(&mut rng) > dx.sample(&mut rng)).count();
        let estimate = wins as f64 / draws as f64;
        let se = (exact * (1.0 - exact) / draws as f64).sqrt().max(1.0 / draws as f64);
        let z = (estimate - exact).abs() / se;
        ensure!(z <= 3.0, "params {p:?}: quadrature {exact}, Monte Carlo {estimate} ({z:.2} SE)");
        worst_z = worst_z.max(z);
    }
    Ok(format!("2/3 case err {:.1e}; worst Monte Carlo deviation {worst_z:.2} SE", (two_thirds - 2.0 / 3.0).abs()))
}

// ---------------------------------------------------------------- 3

/// Closed form `(2k + z² ± z·√(z² + 4k(n−k)/n)) / (2(n + z²))`.
fn reference_wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let root = z * (z * z + 4.0 * k * (n - k) / n).sqrt();
    let denom = 2.0 * (n + z * z);
    (((2.0 * k + z * z - root) / denom).max(0.0), ((2.0 * k + z * z + root) / denom).min(1.0))
}

fn wilson_gate() -> Verdict {
    ensure!(DEFAULT_ETA == 0.588 && DEFAULT_CONFIDENCE == 0.89, "defaults are {DEFAULT_ETA} / {DEFAULT_CONFIDENCE}");
    let config = AlphaConfig::default();
    ensure!(config.eta == 0.588 && config.confidence == 0.89, "AlphaConfig default not wired");
    ensure!(SelfAwareConfig::default().alpha == config, "SelfAwareConfig default not wired");
    ensure!(
        SimulationConfig::new(TrainMode::SelfAware, 1, 1, 0).alpha == config,
        "SimulationConfig default not wired"
    );

    // Two-sided quantiles computed independently of the library.
    for (confidence, z_ref) in [(0.89, 1.5981931399228169), (0.95, 1.9599639845400536)] {
        let z = z_for_confidence(confidence).map_err(|e| e.to_string())?;
        ensure!((z - z_ref).abs() < 1e-9, "z({confidence}) = {z}");
        let mut worst: f64 = 0.0;
        for n in 1..=120u64 {
            for k in 0..=n {
                let (lo, hi) = wilson_interval(k, n, confidence).map_err(|e| e.to_string())?;
                let (rlo, rhi) = reference_wilson(k, n, z_ref);
                worst = worst.max((lo - rlo).abs()).max((hi - rhi).abs());
            }
        }
        ensure!(worst <= 1e-12, "interval deviates from reference by {worst:e} at {confidence}");
    }

    // Fixed observed proportion, growing n.
    for (num, den) in [(0u64, 1u64), (1, 4), (1, 2), (3, 4), (1, 1)] {
        let mut previous = f64::INFINITY;
        for m in 1..=100u64 {
            let w = wilson_width(num * m, den * m, DEFAULT_CONFIDENCE).map_err(|e| e.to_string())?;
            ensure!(w < previous, "width not decreasing at {}/{}", num * m, den * m);
            previous = w;
        }
    }

    let stats = |xs, xn, ws, wn| TierStats {
        untouched: PopulationCounts { successes: xs, trials: xn },
        rewritten: PopulationCounts { successes: ws, trials: wn },
    };
    let supported = stats(2, 20, 18, 20);
    let sparse = stats(0, 1, 1, 1);
    let entity = [stats(3, 4, 1, 2), stats(0, 2, 2, 3)];
    let cases = [
        (Some(&supported), Some(&stats(10, 20, 10, 20)), AlphaTier::Customer),
        (Some(&sparse), Some(&supported), AlphaTier::Global),
        (None, Some(&supported), AlphaTier::Global),
        (Some(&sparse), Some(&sparse), AlphaTier::Entity),
        (None, None, AlphaTier::Entity),
    ];
    for (customer, global, tier) in cases {
        let choice = select_alpha(customer, global, &entity, &config).map_err(|e| e.to_string())?;
        ensure!(choice.tier == tier, "expected {tier}, got {}", choice.tier);
    }
    // Boundary: k = 0 gives width z² / (n + z²), so n = 2 is the first
    // population narrow enough; k = n/2 needs n = 6.
    ensure!(!stats(0, 1, 0, 1).is_supported(&config).unwrap(), "n = 1 passed the gate");
    ensure!(stats(0, 2, 0, 2).is_supported(&config).unwrap(), "n = 2 failed the gate");
    ensure!(!stats(2, 4, 2, 4).is_supported(&config).unwrap(), "2/4 passed the gate");
    ensure!(stats(3, 6, 3, 6).is_supported(&config).unwrap(), "3/6 failed the gate");
    Ok("reference formula within 1e-12 on n <= 120; tier order customer, global, entity".into())
}

// ---------------------------------------------------------------- 4

fn turn(s: &str, t: i64) -> Turn {
    Turn::user(s, parse_hypothesis(&format!("Test|Probe|Slot:{s}")).unwrap(), t)
}

fn rewritten(s: &str, t: i64) -> Turn {
    Turn::rewrite(s, parse_hypothesis(&format!("Test|Probe|Slot:{s}")).unwrap(), t)
}

fn session(turns: Vec<Turn>, outcome: Outcome) -> Session {
    Session::new("c", turns).with_outcome(outcome)
}

/// Hand-built logs: `u` rewritten to `r`, followed by `f`, `s⁺` or `s⁻`.
fn mst_fixtures() -> Vec<Vec<Session>> {
    use Outcome::{Failure, Success};
    let small = vec![
        session(vec![turn("u", 0), rewritten("r", 0), turn("f", 1)], Success),
        session(vec![turn("u", 0), rewritten("r", 0)], Failure),
        session(vec![turn("u", 0)], Failure),
        session(vec![turn("r", 0)], Success),
        session(vec![turn("f", 0)], Success),
    ];
    let medium = vec![
        session(vec![turn("u", 0), rewritten("r", 0), turn("f", 1)], Success),
        session(vec![turn("u", 0), rewritten("r", 0), turn("f", 1)], Failure),
        session(vec![turn("u", 0), rewritten("r", 0)], Success),
        session(vec![turn("u", 0), turn("x", 1)], Success),
        session(vec![turn("u", 0), turn("f", 1)], Failure),
        session(vec![turn("r", 0), turn("x", 1)], Success),
        session(vec![turn("x", 0)], Failure),
        session(vec![turn("f", 0)], Success),
    ];
    let large = vec![
        session(vec![turn("a", 0), rewritten("b", 0), turn("c", 1)], Success),
        session(vec![turn("a", 0), rewritten("b", 0), turn("d", 1)], Failure),
        session(vec![turn("c", 0), rewritten("e", 0)], Success),
        session(vec![turn("c", 0), rewritten("e", 0), turn("g", 1)], Success),
        session(vec![turn("a", 0), turn("d", 1)], Failure),
        session(vec![turn("b", 0), turn("c", 1)], Success),
        session(vec![turn("d", 0), turn("e", 1)], Success),
        session(vec![turn("e", 0)], Success),
        session(vec![turn("g", 0)], Failure),
        session(vec![turn("g", 0), turn("c", 1)], Success),
    ];
    vec![small, medium, large]
}

/// Superposition of `sessions` with viability `alpha` on every triplet.
///
/// Succeeding edges into an absorbing state use relevance `rho_absorbing`
/// (zero in the builder), all others `rho`.
fn forced_superposition(sessions: &[Session], alpha: f64, rho: f64, rho_absorbing: f64) -> Graph {
    let detection = detect_msts(sessions, 1).unwrap();
    let n = detection.space.len();
    let meta: MetaSection = detection
        .roles
        .iter()
        .filter(|(_, r)| r.in_triplet())
        .map(|(&(src, dst), r)| {
            let (beta, gamma) = mst_weights(alpha, if dst >= n { rho_absorbing } else { rho });
            let meta = EdgeMeta {
                roles: r.ratios(),
                params: EdgeParams { alpha, beta, gamma },
                tier: None,
            };
            ((src, dst), meta)
        })
        .collect();
    build_superposition(detection.space, detection.counts, meta).unwrap()
}

fn same_rows_bitwise(a: &Graph, b: &Graph) -> bool {
    a.state_count() == b.state_count()
        && (0..a.state_count()).all(|i| {
            a.transient_row(i)
                .iter()
                .zip(b.transient_row(i))
                .all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits())
                && a.transient_row(i).len() == b.transient_row(i).len()
                && a.success_probability(i).to_bits() == b.success_probability(i).to_bits()
                && a.failure_probability(i).to_bits() == b.failure_probability(i).to_bits()
        })
}

/// Φ matrices over the hypotheses both graphs share, each checked against the
/// dense oracle first.
fn phi_by_hypothesis(g: &Graph) -> Result<BTreeMap<(Hypothesis, Hypothesis), f64>, String> {
    let dense = dense_phi(g);
    let solver = SolverConfig::default();
    let hyps = g.space().hypotheses();
    let mut out = BTreeMap::new();
    for i in 0..g.state_count() {
        for j in 0..g.state_count() {
            let phi = phi_infinity(g, i, j, &solver).map_err(|e| e.to_string())?;
            ensure!((phi - dense[i][j]).abs() <= 1e-9, "phi({i},{j}) = {phi}, dense {}", dense[i][j]);
            out.insert((hyps[i].clone(), hyps[j].clone()), phi);
        }
    }
    Ok(out)
}

fn superposition_limits() -> Verdict {
    let solver = SolverConfig::default();
    for (f, sessions) in mst_fixtures().iter().enumerate() {
        let detection = detect_msts(sessions, 1).unwrap();
        let n = detection.space.len();
        ensure!((3..=6).contains(&n), "fixture {f} has {n} states");

        // λ ≡ 1: every edge plain, or every role weight one.
        let baseline: Graph =
            MarkovGraph::from_counts(detection.space.clone(), detection.counts.clone(), None).unwrap();
        let plain: MetaSection = detection
            .counts
            .keys()
            .map(|&e| {
                let params = EdgeParams { alpha: 0.3, beta: 0.6, gamma: 0.9 };
                (e, EdgeMeta { roles: EdgeRoleRatios::PLAIN, params, tier: None })
            })
            .collect();
        let superposed: Graph =
            build_superposition(detection.space.clone(), detection.counts.clone(), plain).unwrap();
        ensure!(same_rows_bitwise(&superposed, &baseline), "fixture {f}: plain roles differ from baseline");
        let unit: MetaSection = detection
            .roles
            .iter()
            .filter(|(_, r)| r.in_triplet())
            .map(|(&e, r)| (e, EdgeMeta { roles: r.ratios(), params: EdgeParams::NEUTRAL, tier: None }))
            .collect();
        let superposed: Graph = build_superposition(detection.space.clone(), detection.counts.clone(), unit).unwrap();
        for i in 0..n {
            for (x, y) in superposed.transient_row(i).iter().zip(baseline.transient_row(i)) {
                ensure!(x.0 == y.0 && (x.1 - y.1).abs() <= 1e-15, "fixture {f}: unit weights moved row {i}");
            }
        }

        let sources: BTreeSet<Hypothesis> = detection.occurrences.iter().map(|o| o.source.clone()).collect();
        // Under the builder's relevance rule a rewrite keeps its succeeding
        // edges into s⁺/s⁻ at β = 0⁰ = 1, so with α = 0 only the triplet
        // sources' rows must match the discounting chain.
        for (alpha, rho, rho_absorbing, mode, whole_graph) in [
            (0.0, 0.7, 0.7, ChainMode::Discounting, true),
            (0.0, 0.7, 0.0, ChainMode::Discounting, false),
            (1.0, 0.4, 0.0, ChainMode::Unrolling, true),
            (1.0, 0.0, 0.0, ChainMode::Unrolling, true),
        ] {
            let in_scope = |h: &Hypothesis| whole_graph || sources.contains(h);
            let aware = forced_superposition(sessions, alpha, rho, rho_absorbing);
            let reference: Graph =
                build_graph(sessions, &BuildConfig { mode, min_state_support: 1 }).map_err(|e| e.to_string())?;
            let (pa, pr) = (phi_by_hypothesis(&aware)?, phi_by_hypothesis(&reference)?);
            for (pair, &v) in pr.iter().filter(|(p, _)| in_scope(&p.0)) {
                let w = pa.get(pair).copied().unwrap_or(0.0);
                ensure!(
                    (v - w).abs() <= 1e-12,
                    "fixture {f}, alpha {alpha}, rho {rho}: phi({}, {}) {w} vs {mode:?} {v}",
                    pair.0,
                    pair.1
                );
            }
            for support in [1, 2] {
                let scoped = |t: RewriteTable, g: &Graph| -> RewriteTable {
                    t.iter()
                        .filter(|(s, _)| g.space().index_of(s).is_some() && in_scope(s))
                        .map(|(s, t)| (s.clone(), t.clone()))
                        .collect()
                };
                let ta = scoped(rewrite_table(&aware, support, &solver).map_err(|e| e.to_string())?, &reference);
                let tr = scoped(rewrite_table(&reference, support, &solver).map_err(|e| e.to_string())?, &reference);
                ensure!(ta == tr, "fixture {f}, alpha {alpha}, rho {rho}: table differs from {mode:?}");
            }
        }
    }
    Ok("3 fixtures: plain roles bit-identical; alpha = 0 matches discounting, alpha = beta = 1 matches unrolling".into())
}

// ---------------------------------------------------------------- 5

fn degeneracy() -> Verdict {
    let theme = music("theme");
    let team2 = |mode| run_loop(&scenario_type2(), &SimulationConfig::new(mode, 60, 60, 1)).map_err(|e| e.to_string());
    let discounting = team2(TrainMode::Discounting)?;
    let aware = team2(TrainMode::SelfAware)?;
    let d_flips = discounting.count_flips(&theme).map_err(|e| e.to_string())?;
    let a_flips = count_flips(&aware.tables()[10..], &theme).map_err(|e| e.to_string())?;
    ensure!(d_flips >= 2, "discounting flipped {d_flips} times");
    ensure!(a_flips <= 1, "self-aware flipped {a_flips} times after day 10");

    let (source, bad) = (music("la da dee"), music("lady"));
    let lady = |mode| run_loop(&scenario_type1(), &SimulationConfig::new(mode, 60, 70, 1)).map_err(|e| e.to_string());
    let unrolled = lady(TrainMode::Unrolling)?.days_with_rewrite(&source, &bad);
    let kept = lady(TrainMode::SelfAware)?.days_with_rewrite(&source, &bad);
    ensure!(unrolled > 0 && unrolled >= 3 * kept, "unrolling kept it {unrolled} days, self-aware {kept}");
    Ok(format!(
        "type2 flips: discounting {d_flips}, self-aware after day 10 {a_flips}; type1 defective rewrite days: unrolling {unrolled}, self-aware {kept}"
    ))
}

// ---------------------------------------------------------------- 6

fn self_aware_superiority() -> Verdict {
    let shape = BenchmarkShape::default();
    ensure!(shape.clean + shape.misrecognized + shape.externally_rewritten >= 50, "benchmark too small");
    let (mut auc_wins, mut defect_wins) = (0, 0);
    let mut lines = Vec::new();
    for seed in 0..20u64 {
        let world = benchmark(shape, seed);
        let run = |mode| run_loop(&world, &SimulationConfig::new(mode, 30, 600, seed)).map_err(|e| e.to_string());
        let (base, aware) = (run(TrainMode::Discounting)?, run(TrainMode::SelfAware)?);
        let auc = |r: &qrw_core::sim::SimulationRun| r.days.last().and_then(|d| d.metrics.pr_auc).unwrap_or(0.0);
        let (ab, aa) = (auc(&base), auc(&aware));
        let (db, da) = (base.defect_rate(7), aware.defect_rate(7));
        auc_wins += usize::from(aa > ab);
        defect_wins += usize::from(da < db);
        lines.push(format!("{seed}:{ab:.3}/{aa:.3},{db:.3}/{da:.3}"));
    }
    let summary = format!("PR-AUC wins {auc_wins}/20, defect wins {defect_wins}/20");
    ensure!(auc_wins >= 18 && defect_wins >= 18, "{summary} [{}]", lines.join(" "));
    Ok(summary)
}

// ---------------------------------------------------------------- 7

fn reachable(dag: &TemplateDag, starts: &[usize], forward: bool) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = starts.iter().copied().collect();
    let mut stack: Vec<usize> = starts.to_vec();
    while let Some(n) = stack.pop() {
        for &(a, b) in &dag.edges {
            let (from, to) = if forward { (a, b) } else { (b, a) };
            if from == n && seen.insert(to) {
                stack.push(to);
            }
        }
    }
    seen
}

fn template_pipeline() -> Verdict {
    let words = ["play", "by", "the", "to", "a", "my", "on"];
    let slots = ["<SongName>", "<ArtistName>", "<Room>"];
    let mut rng = ChaCha8Rng::seed_from_u64(0x7E57);
    let mut dag_count = 0;
    for set in 0..100 {
        let templates: Vec<Template> = (0..rng.random_range(1..10))
            .map(|_| {
                let form: Vec<&str> = (0..rng.random_range(1..8))
                    .map(|_| if rng.random_bool(0.3) { slots[rng.random_range(0..3)] } else { words[rng.random_range(0..7)] })
                    .collect();
                Template::parse(&form.join(" "), "PlayMusicIntent", "en").unwrap()
            })
            .collect();
        let dags = build_dags(&templates).map_err(|e| e.to_string())?;
        for dag in &dags {
            ensure!(dag.topological_order().is_some(), "set {set}: cyclic DAG");
            let from_entry = reachable(dag, &dag.entries, true);
            let to_exit = reachable(dag, &dag.exits, false);
            ensure!(
                (0..dag.nodes.len()).all(|n| from_entry.contains(&n) && to_exit.contains(&n)),
                "set {set}: node off every entry-exit path"
            );
        }
        for t in &templates {
            ensure!(dags.iter().any(|d| d.realizes(&t.tokens)), "set {set}: `{}` not covered", t.form());
        }
        dag_count += dags.len();
    }

    let utterances = [
        ("add escape by enrique iglesias to kacey's playlist", vec![("escape", "SongName"), ("enrique iglesias", "ArtistName"), ("kacey's", "PlaylistName")]),
        ("add believe to my playlist", vec![("believe", "SongName")]),
    ];
    let mut templates = Vec::new();
    for (u, spans) in &utterances {
        let spans: Vec<EntitySpan> = spans
            .iter()
            .map(|(text, ty)| {
                let start = u.find(text).unwrap();
                EntitySpan::new(start, start + text.len(), *ty)
            })
            .collect();
        templates.push(extract_template(u, &spans, &[], "AddToPlaylistIntent", "en").map_err(|e| e.to_string())?);
    }
    ensure!(
        templates[0].tokens.iter().filter(|t| matches!(t, Token::Placeholder(_))).count() == 3,
        "extracted `{}`",
        templates[0].form()
    );
    let dags = build_dags(&templates).map_err(|e| e.to_string())?;
    let entities: BTreeMap<String, String> = [("SongName", "escape"), ("ArtistName", "enrique iglesias"), ("PlaylistName", "kacey's")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let expected = "add escape by enrique iglesias to kacey's playlist";
    match generate_synthetic(&entities, &dags, &ArticleRules::english()) {
        Synthesis::Text(t) if t == expected => {}
        other => return Err(format!("playlist fixture produced {other:?}")),
    }
    Ok(format!("100 random sets ({dag_count} DAGs) acyclic and covering; playlist fixture exact"))
}

// ---------------------------------------------------------------- 8

/// Precision and recall at every distinct threshold, by direct counting.
fn threshold_sweep(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&y| y).count() as f64;
    thresholds
        .into_iter()
        .map(|t| {
            let picked: Vec<bool> = scores.iter().zip(labels).filter(|(s, _)| **s >= t).map(|(_, &y)| y).collect();
            let tp = picked.iter().filter(|&&y| y).count() as f64;
            (t, tp / picked.len() as f64, tp / positives)
        })
        .collect()
}

fn metric_arithmetic() -> Verdict {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let labels = [true, false, true, true, false];
    let m = partition_metrics(&labels, &labels).map_err(|e| e.to_string())?;
    ensure!(m.precision == 1.0 && m.recall == 1.0 && m.accuracy == 1.0 && m.f1 == 1.0, "identity: {m:?}");
    let m = partition_metrics(&[false; 5], &labels).map_err(|e| e.to_string())?;
    ensure!(m.recall == 0.0 && m.precision == 0.0 && m.f1 == 0.0, "all negative: {m:?}");
    // TP = 2, FP = 1, FN = 1, TN = 1.
    let m = partition_metrics(&[true, true, true, false, false], &[true, true, false, true, false])
        .map_err(|e| e.to_string())?;
    ensure!(close(m.precision, 2.0 / 3.0) && close(m.recall, 2.0 / 3.0) && close(m.accuracy, 0.6), "counts: {m:?}");
    ensure!(partition_metrics(&[true], &[true, false]).is_err(), "length mismatch accepted");

    let c = pr_curve(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).map_err(|e| e.to_string())?;
    ensure!(c.area == 1.0, "separating area {}", c.area);
    let (scores, ys) = ([0.9, 0.7, 0.7, 0.3], [true, false, true, false]);
    let c = pr_curve(&scores, &ys).map_err(|e| e.to_string())?;
    let sweep = threshold_sweep(&scores, &ys);
    ensure!(c.points.len() == sweep.len(), "{} points vs {}", c.points.len(), sweep.len());
    for (p, &(t, prec, rec)) in c.points.iter().zip(&sweep) {
        ensure!(p.threshold == t && close(p.precision, prec) && close(p.recall, rec), "{p:?} vs {:?}", (t, prec, rec));
    }
    // Points (1/2, 1), (1, 2/3), (1, 1/2) from a start at precision 1.
    let area = 0.5 * 1.0 + 0.5 * (1.0 + 2.0 / 3.0) / 2.0 + 0.0;
    ensure!(close(c.area, area), "hand area {area}, got {}", c.area);
    ensure!(pr_curve(&[0.5], &[false]).is_err(), "no-positive curve accepted");

    let mut rng = ChaCha8Rng::seed_from_u64(0xA0C);
    let mut worst: f64 = 0.0;
    for prevalence in [0.1, 0.3, 0.5] {
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let ys: Vec<bool> = (0..n).map(|_| rng.random_bool(prevalence)).collect();
        let observed = ys.iter().filter(|&&y| y).count() as f64 / n as f64;
        let area = pr_curve(&scores, &ys).map_err(|e| e.to_string())?.area;
        ensure!((area - observed).abs() <= 0.02, "area {area} vs prevalence {observed}");
        worst = worst.max((area - observed).abs());
    }

    let (a, b, c_) = (state(0), state(1), state(2));
    let table = |t: Option<&Hypothesis>| -> RewriteTable { t.map(|t| (a.clone(), t.clone())).into_iter().collect() };
    let steady = vec![table(Some(&b)); 5];
    let every = vec![table(Some(&b)), table(Some(&c_)), table(Some(&b)), table(Some(&c_)), table(Some(&b))];
    let once = vec![table(Some(&b)), table(Some(&b)), table(Some(&c_)), table(Some(&c_)), table(Some(&c_))];
    for (tables, expected) in [(steady, 0.0), (every, 1.0), (once, 0.25)] {
        let r = reactivity_rate(&tables, std::slice::from_ref(&a)).map_err(|e| e.to_string())?;
        ensure!(close(r.rates[0].1, expected), "reactivity {} vs {expected}", r.rates[0].1);
    }
    ensure!(reactivity_rate(&[table(None)], std::slice::from_ref(&a)).is_err(), "single snapshot accepted");

    for (series, expected) in [
        (vec![0.4, 0.4, 0.4], vec![0.0, 0.0, 0.0]),
        (vec![0.3, 0.6], vec![0.0, 1.0]),
        (vec![0.5, 0.6], vec![0.0, 0.2]),
    ] {
        let got = relative_f1_change(&series).map_err(|e| e.to_string())?;
        ensure!(got.iter().zip(&expected).all(|(g, e)| close(*g, *e)), "{series:?} gave {got:?}");
    }
    ensure!(relative_f1_change(&[0.0, 0.5]).is_err(), "zero baseline accepted");

    // Request `s0` with positive `s1`, negative `s2`. The first graph ranks
    // the negative higher (best F1 2/3), the second the positive (F1 1).
    let use_ = |s: usize, t: usize, ok: u64, bad: u64| {
        let mut v = Vec::new();
        for _ in 0..ok {
            v.push(Session::new("c", vec![turn(&format!("s{s}"), 0), turn(&format!("s{t}"), 1)]).with_outcome(Outcome::Success));
        }
        for _ in 0..bad {
            v.push(Session::new("c", vec![turn(&format!("s{s}"), 0), turn(&format!("s{t}"), 1)]).with_outcome(Outcome::Failure));
        }
        v
    };
    let graph = |pos_ok, neg_ok| -> Graph {
        let mut sessions = use_(0, 1, pos_ok, 4 - pos_ok);
        sessions.extend(use_(0, 2, neg_ok, 4 - neg_ok));
        build_graph(&sessions, &BuildConfig::default()).unwrap()
    };
    let pos = parse_hypothesis("Test|Probe|Slot:s1").unwrap();
    let neg = parse_hypothesis("Test|Probe|Slot:s2").unwrap();
    let request = parse_hypothesis("Test|Probe|Slot:s0").unwrap();
    let records = [EvalRecord::new(request, BTreeSet::from([pos]), BTreeSet::from([neg])).map_err(|e| e.to_string())?];
    let snapshots = [graph(1, 3), graph(1, 3), graph(3, 1)];
    let trend = f1_trend(&snapshots, &records, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ensure!(trend.len() == 3 && close(trend[0], 0.0) && close(trend[1], 0.0) && close(trend[2], 0.5), "trend {trend:?}");
    Ok(format!("hand oracles match; worst prevalence gap {worst:.4}"))
}

// ---------------------------------------------------------------- 9

fn determinism() -> Verdict {
    let solver = SolverConfig::default();
    let mut checked = 0;
    for (world, mode) in [
        (scenario_type2(), TrainMode::SelfAware),
        (scenario_type1(), TrainMode::Unrolling),
        (benchmark(BenchmarkShape::default(), 4), TrainMode::SelfAware),
    ] {
        let config = SimulationConfig::new(mode, 6, 120, 42);
        let (a, b) = (run_loop(&world, &config).unwrap(), run_loop(&world, &config).unwrap());
        let log = |r: &qrw_core::sim::SimulationRun| write_simlog(&r.log_records()).unwrap();
        ensure!(log(&a) == log(&b), "simlog differs between identical runs");
        let other = run_loop(&world, &SimulationConfig { seed: 43, ..config }).unwrap();
        ensure!(log(&a) != log(&other), "seed has no effect");
        for (da, db) in a.days.iter().zip(&b.days) {
            let text = write_graph(&da.graph);
            ensure!(text == write_graph(&db.graph), "day {} snapshot differs", da.day);
            let loaded: Graph = read_graph(&text).map_err(|e| e.to_string())?;
            ensure!(write_graph(&loaded) == text, "day {} snapshot does not re-serialize", da.day);
            for support in [1, config.min_rewrite_support] {
                let before = rewrite_table(&da.graph, support, &solver).map_err(|e| e.to_string())?;
                let after = rewrite_table(&loaded, support, &solver).map_err(|e| e.to_string())?;
                ensure!(before == after, "day {} table changed after reload", da.day);
            }
            for source in 0..da.graph.state_count() {
                let before = top_rewrites(&da.graph, source, 5, 1, &solver).map_err(|e| e.to_string())?;
                let after = top_rewrites(&loaded, source, 5, 1, &solver).map_err(|e| e.to_string())?;
                ensure!(
                    before.len() == after.len()
                        && before.iter().zip(&after).all(|(x, y)| x.target == y.target && x.score.to_bits() == y.score.to_bits()),
                    "day {} source {source} ranking changed after reload",
                    da.day
                );
            }
            checked += 1;
        }
    }
    Ok(format!("3 worlds byte-identical across reruns; {checked} snapshots reload to identical rankings"))
}
