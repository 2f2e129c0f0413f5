//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion, with
//! the underlying checks indented below it, and exits nonzero if any
//! criterion fails.
//!
//! Replica stores are kept under the cargo target tmpdir, so a rerun resumes
//! them instead of simulating again. Set `BBM_ACCEPTANCE_ONLY=1,4,11` to run a
//! subset.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bbm_core::analysis::{
    bramson_analysis, cf_fit_analysis, cf_synthetic_pregate, infimum_checks, isotropy_checks, normalization_check,
    normalized_moduli, oracle_checks, partition_pairs, ppp_slope_check, tail_check, Check,
};
use bbm_core::functionals::{
    additive_martingale, complex_partition, extract_clusters, normalization, pairwise_overlap, KahanSum,
};
use bbm_core::gates::Gates;
use bbm_core::harness::{aggregate, read_store, run, ExperimentConfig, Metric, PartitionPart, Store};
use bbm_core::rng::node_rng;
use bbm_core::sim::{bridge_min_sample, NodeKind};
use bbm_core::stats::{empirical_cf, hill_estimator, ks_uniform, kuiper_uniform_angle};
use bbm_core::{simulate, Complex64, MrcaIndex, ReplicaOutput, Result, SimConfig};
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Root seed of every acceptance store, fixed before any data was looked at.
const ROOT_SEED: u64 = 1;

struct Outcome {
    checks: Vec<Check>,
    /// Failures that are not numeric checks (errors, missing data).
    errors: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new(), errors: Vec::new() }
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn extend(&mut self, cs: impl IntoIterator<Item = Check>) {
        self.checks.extend(cs);
    }

    fn absorb<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{what}: {e}"));
                None
            }
        }
    }

    fn flag(&mut self, name: &str, ok: bool, note: impl Into<String>) {
        let v = if ok { 1.0 } else { 0.0 };
        self.push(Check::band(name, v, 1.0, 1.0, 1.0).with_note(note));
    }

    fn pass(&self) -> bool {
        self.errors.is_empty() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

fn store_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn farm(name: &str, config: &mut ExperimentConfig) -> Result<(Store, Duration)> {
    config.output_path = store_dir().join(format!("{name}.jsonl"));
    config.root_seed = ROOT_SEED;
    let start = Instant::now();
    run(config)?;
    let took = start.elapsed();
    Ok((read_store(&config.output_path)?, took))
}

fn failures_note(store: &Store) -> String {
    let all_pruned = store.failures().filter(|f| f.all_pruned).count();
    format!("replicas={} failures={} all_pruned={all_pruned}", store.replicas().count(), store.failures().count())
}

/// Replicas whose every subtree was certified negligible have a partition
/// bounded by the pruning certificate; only other failures count against a store.
fn no_hard_failures(store: &Store) -> bool {
    store.failures().all(|f| f.all_pruned)
}

fn runtime_check(name: &str, took: Duration, limit_s: f64) -> Check {
    Check::band(format!("{name} runtime s"), took.as_secs_f64(), 0.0, 0.0, limit_s)
        .with_note("0 when the store was resumed complete")
}

fn c1_oracles(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut c = ExperimentConfig::new(SimConfig::exact(1.0, 0), vec![3.0, 6.0], 5000, "");
    c.gamma_grid = vec![0.7, 0.75, 1.0, 1.5];
    c.beta_grid = vec![0.75];
    c.overlap = true;
    let Some((store, took)) = out.absorb("store", farm("c1_exact_t3_t6", &mut c)) else { return out };
    let Some(rows) = out.absorb("oracle checks", oracle_checks(&store, gates)) else { return out };
    // gated rows; the remaining |Z|^2 and overlap rows are informational
    let gated = |name: &str| {
        name.ends_with(" N(t)")
            || name.ends_with(" sum e^-X")
            || name.ends_with(" sum X e^-X")
            || name.ends_with(" sum e^-0.7X")
            || name.ends_with(" sum e^-1.5X")
            || name.ends_with(" overlap(gamma=0.75,beta=0.75)")
    };
    for mut r in rows {
        if !gated(&r.name) {
            r.name = format!("info: {}", r.name);
            r.pass = true;
        }
        out.push(r);
    }
    out.push(runtime_check("farm", took, 600.0));
    out
}

fn c2_prune_fidelity(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let (t, gamma, beta, eps) = (8.0, 0.8, 0.6, 1e-8);
    let start = Instant::now();
    let mut worst_ratio = 0.0f64;
    let mut pruned_pairs = 0;
    let mut mismatched = Vec::new();
    let mut violations = Vec::new();
    for i in 0..200u64 {
        let seed = bbm_core::rng::replica_seed(ROOT_SEED, 0, i);
        let exact = simulate(&SimConfig::exact(t, seed));
        let mut pc = SimConfig::exact(t, seed);
        pc.prune_epsilon = Some(eps);
        pc.gamma_grid = vec![gamma];
        let pruned = simulate(&pc);
        let Some(exact) = out.absorb("exact replica", exact) else { return out };
        let by_key: HashMap<u64, (f64, f64)> =
            exact.leaves().iter().map(|l| (exact.genealogy.node(l.node).key, (l.x, l.y))).collect();
        let z_exact = complex_partition(&exact, gamma, beta, None).raw;
        let (z_pruned, bound, scale) = match &pruned {
            Ok(p) => {
                let same = p.leaves().iter().all(|l| by_key.get(&p.genealogy.node(l.node).key) == Some(&(l.x, l.y)));
                if !same {
                    mismatched.push(i);
                }
                if p.pruned_subtrees > 0 {
                    pruned_pairs += 1;
                }
                let scale: f64 = p.leaves().iter().map(|l| (-gamma * l.x).exp()).sum();
                (complex_partition(p, gamma, beta, None).raw, p.pruned_mass_bound[0], scale)
            }
            Err(bbm_core::Error::AllPruned { .. }) => (Complex64::new(0.0, 0.0), f64::NAN, 0.0),
            Err(e) => {
                out.errors.push(format!("pruned replica {i}: {e}"));
                continue;
            }
        };
        let norm = normalization(t, gamma);
        let dz = (z_exact - z_pruned).norm() * norm;
        // summation rounding of the kept terms, far below any certificate
        let rounding = 64.0 * f64::EPSILON * scale * norm;
        let allowed = gates.prune_fidelity_factor * bound * norm + rounding;
        if !(dz <= allowed) {
            violations.push(format!("{i}: dz={dz:.3e} allowed={allowed:.3e}"));
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(dz / (bound * norm));
        }
    }
    out.flag("kept leaves identical to exact", mismatched.is_empty(), format!("mismatched replicas: {mismatched:?}"));
    out.flag(
        "|dZ_norm| <= 10 x certificate in every pair",
        violations.is_empty(),
        format!("pairs=200 with_pruning={pruned_pairs} worst dz/bound={worst_ratio:.3e} {}", violations.join("; ")),
    );
    out.push(runtime_check("paired runs", start.elapsed(), 1200.0));
    out
}

fn brute_overlap(r: &ReplicaOutput, idx: &MrcaIndex, gamma: f64, beta: f64) -> f64 {
    let t = r.t_final;
    let leaves = r.leaves();
    let mut s = KahanSum::default();
    for i in 0..leaves.len() {
        for j in 0..leaves.len() {
            let tau = idx.mrca_time(i, j).unwrap();
            s.add((-gamma * (leaves[i].x + leaves[j].x) - 2.0 * beta * beta * (t - tau)).exp());
        }
    }
    s.value()
}

fn c3_overlap_brute_force(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut rng = node_rng(ROOT_SEED ^ 0x0c3);
    let mut worst = 0.0f64;
    let mut total_leaves = 0;
    for i in 0..100u64 {
        let t = 0.5 + 3.5 * rng.random::<f64>();
        let Some(r) = out.absorb("replica", simulate(&SimConfig::exact(t, 1000 + i))) else { return out };
        total_leaves += r.n_leaves();
        let idx = MrcaIndex::new(&r);
        for (g, b) in [(0.75, 0.75), (1.0, 0.5), (1.5, 1.0), (0.6, 0.0)] {
            let fast = pairwise_overlap(&r, g, b);
            let slow = brute_overlap(&r, &idx, g, b);
            worst = worst.max((fast - slow).abs() / slow);
        }
    }
    out.push(
        Check::band("max relative difference", worst, 0.0, 0.0, gates.overlap_rel_tol)
            .with_note(format!("trees=100 leaves={total_leaves} pairs (gamma,beta)=4 per tree")),
    );
    out
}

fn c4_bramson(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut sim = SimConfig::exact(1.0, 0);
    sim.prune_epsilon = Some(1e-6);
    sim.track_min_level = Some(5.0);
    sim.track_y = false;
    let mut c = ExperimentConfig::new(sim, vec![8.0, 12.0, 16.0], 2000, "");
    let Some((store, _)) = out.absorb("store", farm("c4_bramson", &mut c)) else { return out };
    let Some(rep) = out.absorb("bramson analysis", bramson_analysis(&store, gates)) else { return out };
    out.extend(rep.checks);
    out.flag("store", true, failures_note(&store));
    out
}

/// Pruned `t = 12` store shared by the tail, CF-fit and PPP criteria.
fn store_a(out: &mut Outcome) -> Option<(Store, Duration)> {
    let mut sim = SimConfig::exact(1.0, 0);
    sim.prune_epsilon = Some(1e-6);
    sim.gamma_grid = vec![0.75, 0.8, 1.0];
    sim.track_min_level = Some(4.0);
    let mut c = ExperimentConfig::new(sim, vec![12.0], 20_000, "");
    c.gamma_grid = vec![0.75, 0.8, 1.0];
    c.beta_grid = vec![0.75, 0.8];
    c.cluster_k = 3.0;
    c.cluster_b = 5.0;
    c.cluster_cap = 100_000;
    out.absorb("store", farm("a_pruned_t12", &mut c))
}

fn c5_tails(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let Some((store, took)) = store_a(&mut out) else { return out };
    for gamma in [0.75, 1.0] {
        let name = format!("Hill |Z_norm| (gamma={gamma},beta=0.75)");
        if let Some(v) = out.absorb(&name, normalized_moduli(&store, gamma, 0.75)) {
            if let Some(c) = out.absorb(&name, tail_check(&name, &v, gamma, None, gates)) {
                out.push(c);
            }
        }
    }
    out.flag("store", no_hard_failures(&store), failures_note(&store));
    out.push(runtime_check("farm", took, 7200.0));
    out
}

fn c6_isotropy(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut c = ExperimentConfig::new(SimConfig::exact(1.0, 0), vec![10.0], 5000, "");
    c.gamma_grid = vec![0.8];
    c.beta_grid = vec![0.8];
    let Some((store, _)) = out.absorb("store", farm("c6_exact_t10", &mut c)) else { return out };
    let Some(pairs) = out.absorb("pairs", partition_pairs(&store, 0.8, 0.8)) else { return out };
    let z: Vec<Complex64> = pairs.into_iter().map(|p| p.0).collect();
    if let Some(rows) = out.absorb("isotropy", isotropy_checks(&z, gates)) {
        for mut r in rows {
            if r.name.starts_with("kuiper") {
                r.name = format!("info: {}", r.name);
                r.pass = true;
            }
            out.push(r);
        }
    }
    out
}

fn c7_cf_fit(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    if let Some(rows) = out.absorb("synthetic pre-gate", cf_synthetic_pregate(gates, ROOT_SEED)) {
        out.extend(rows);
    }
    let Some((store, _)) = store_a(&mut out) else { return out };
    let Some(pairs) = out.absorb("pairs", partition_pairs(&store, 0.8, 0.8)) else { return out };
    if let Some(rep) = out.absorb("cf fit", cf_fit_analysis(&pairs, 0.8, gates)) {
        out.push(rep.check);
    }
    out
}

fn c8_ppp(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let Some((store, _)) = store_a(&mut out) else { return out };
    let n = store.replicas().count();
    out.push(Check::band("replicas aggregated", n as f64, 5000.0, 5000.0, f64::INFINITY));
    if let Some(c) = out.absorb("ppp slope", ppp_slope_check(&store, gates)) {
        out.push(c);
    }
    out
}

fn c9_normalization(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut sim = SimConfig::exact(1.0, 0);
    sim.prune_epsilon = Some(1e-6);
    sim.gamma_grid = vec![0.75, 1.0];
    let mut c = ExperimentConfig::new(sim, vec![6.0, 8.0, 10.0, 12.0], 2000, "");
    c.gamma_grid = vec![0.75, 1.0];
    c.beta_grid = vec![0.75];
    let Some((store, _)) = out.absorb("store", farm("b_pruned_t6_t12", &mut c)) else { return out };
    for gamma in [0.75, 1.0] {
        if let Some((_, check)) = out.absorb("normalization", normalization_check(&store, gamma, 0.75, gates)) {
            out.push(check);
        }
    }
    out.flag("store", no_hard_failures(&store), failures_note(&store));
    out
}

fn c10_infimum(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let mut sim = SimConfig::exact(1.0, 0);
    sim.track_y = false;
    sim.track_bridge_minima = true;
    let mut c = ExperimentConfig::new(sim, vec![8.0], 5000, "");
    c.beta_grid = vec![0.0];
    let Some((store, _)) = out.absorb("store", farm("c10_exact_t8_minima", &mut c)) else { return out };
    if let Some(rows) = out.absorb("infimum", infimum_checks(&store, gates)) {
        out.extend(rows);
    }
    out
}

fn small_config(dir: &std::path::Path, name: &str, parallelism: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(SimConfig::exact(1.0, 0), vec![2.0, 4.0], 150, dir.join(name));
    c.gamma_grid = vec![0.75, 1.5];
    c.beta_grid = vec![0.0, 0.75];
    c.trunc_levels = vec![1.0];
    c.overlap = true;
    c.cluster_k = 3.0;
    c.cluster_b = 1.0;
    c.cluster_cap = 8;
    c.root_seed = ROOT_SEED;
    c.parallelism = Some(parallelism);
    c
}

fn engineering(out: &mut Outcome) -> Result<()> {
    let dir = store_dir().join("engineering");
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;

    // reruns and thread counts
    let a = small_config(&dir, "a.jsonl", 1);
    let b = small_config(&dir, "b.jsonl", 1);
    let p = small_config(&dir, "p.jsonl", 4);
    run(&a)?;
    run(&b)?;
    run(&p)?;
    let bytes_a = fs::read(&a.output_path)?;
    out.flag("rerun byte-identical", bytes_a == fs::read(&b.output_path)?, format!("{} bytes", bytes_a.len()));
    let serial = read_store(&a.output_path)?.sorted_replicas();
    let parallel = read_store(&p.output_path)?.sorted_replicas();
    out.flag("4 threads give the record set of 1 thread", serial == parallel, format!("records={}", serial.len()));

    // resume: cut the file mid-line, drop whole lines, and rerun
    let r = small_config(&dir, "r.jsonl", 2);
    fs::copy(sidecar(&a), sidecar(&r))?;
    let lines: Vec<usize> = bytes_a.iter().enumerate().filter(|(_, c)| **c == b'\n').map(|(i, _)| i).collect();
    let cut = lines[lines.len() - 40] + 1 + 17;
    fs::write(&r.output_path, &bytes_a[..cut])?;
    let s = run(&r)?;
    let resumed = fs::read(&r.output_path)?;
    let sorted_resumed = read_store(&r.output_path)?.sorted_replicas();
    let sorted_a = read_store(&a.output_path)?.sorted_replicas();
    out.flag(
        "resume after interruption completes the same records",
        sorted_resumed == sorted_a && resumed.len() == bytes_a.len(),
        format!("skipped={} completed={}", s.skipped, s.completed),
    );
    let again = run(&r)?;
    out.flag(
        "resume of a complete store is a no-op",
        again.completed == 0 && fs::read(&r.output_path)? == resumed,
        format!("skipped={}", again.skipped),
    );

    // permutation invariance of every aggregate
    let mut recs = read_store(&a.output_path)?.sorted_replicas();
    let metrics = [
        Metric::NLeaves,
        Metric::Additive(0.75),
        Metric::Derivative,
        Metric::RecenteredMin,
        Metric::Overlap { gamma: 1.5, beta: 0.75 },
        Metric::Partition { gamma: 0.75, beta: 0.75, trunc: Some(1.0), part: PartitionPart::Re },
        Metric::Partition { gamma: 1.5, beta: 0.75, trunc: None, part: PartitionPart::AbsNormalized },
    ];
    let before: Vec<_> = metrics.iter().map(|m| aggregate(&recs, m)).collect::<Result<_>>()?;
    let mut rng = node_rng(ROOT_SEED);
    let mut same = true;
    for _ in 0..20 {
        recs.shuffle(&mut rng);
        let after: Vec<_> = metrics.iter().map(|m| aggregate(&recs, m)).collect::<Result<_>>()?;
        same &= after == before;
    }
    out.flag("aggregates invariant under 20 shuffles", same, format!("metrics={}", metrics.len()));
    Ok(())
}

fn sidecar(c: &ExperimentConfig) -> PathBuf {
    bbm_core::harness::sidecar_path(&c.output_path)
}

/// `P(N(t) = k) = e^-t (1 - e^-t)^(k-1)`; chi-square over `k = 1..K` and a tail cell.
fn yule_chi_square(t: f64, n: usize) -> Result<(f64, usize)> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for i in 0..n as u64 {
        let mut c = SimConfig::exact(t, 50_000 + i);
        c.track_y = false;
        *counts.entry(simulate(&c)?.n_leaves()).or_default() += 1;
    }
    let q = 1.0 - (-t).exp();
    let mut stat = 0.0;
    let mut cells = 0;
    let mut seen = 0;
    let mut mass = 0.0;
    let mut k = 1;
    loop {
        let pk = (-t).exp() * q.powi(k as i32 - 1);
        if n as f64 * (1.0 - mass - pk) < 5.0 {
            break;
        }
        let o = *counts.get(&k).unwrap_or(&0) as f64;
        let e = n as f64 * pk;
        stat += (o - e).powi(2) / e;
        cells += 1;
        seen += o as usize;
        mass += pk;
        k += 1;
    }
    let o = (n - seen) as f64;
    let e = n as f64 * (1.0 - mass);
    stat += (o - e).powi(2) / e;
    cells += 1;
    let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
    Ok((p, cells))
}

fn properties(out: &mut Outcome, gates: &Gates) -> Result<()> {
    let (p, cells) = yule_chi_square(2.0, 10_000)?;
    out.push(Check::band("Yule N(2) chi-square p", p, 1.0, gates.ks_min_p, 1.0).with_note(format!("cells={cells}")));

    // bridge minimum: F(m) = exp(-(a-m)(b-m)/dt) maps samples to uniforms
    let mut rng = node_rng(ROOT_SEED ^ 0xb1);
    let (a, b, dt) = (0.3, -0.4, 0.7);
    let u: Vec<f64> = (0..100_000)
        .map(|_| {
            let m = bridge_min_sample(a, b, dt, rng.random::<f64>().max(f64::MIN_POSITIVE)).unwrap();
            (-(a - m) * (b - m) / dt).exp()
        })
        .collect();
    let ks = ks_uniform(&u)?;
    out.push(Check::band("bridge minimum KS p", ks.p_value, 1.0, gates.ks_min_p, 1.0).with_note("n=100000"));

    // per-replica structural properties over exact and pruned trees
    let mut bad: Vec<String> = Vec::new();
    for i in 0..40u64 {
        let t = 2.0 + (i % 5) as f64;
        let mut c = SimConfig::exact(t, 7_000 + i);
        if i % 2 == 1 {
            c.prune_epsilon = Some(1e-2);
            c.gamma_grid = vec![0.75, 1.0];
            c.track_min_level = Some(1.0);
        }
        let r = match simulate(&c) {
            Ok(r) => r,
            Err(bbm_core::Error::AllPruned { .. }) => continue,
            Err(e) => return Err(e),
        };
        let mut note = |ok: bool, what: &str| {
            if !ok {
                bad.push(format!("seed {}: {what}", 7_000 + i));
            }
        };
        note(r.genealogy.validate().is_ok(), "genealogy invariants");

        let stubs: Vec<f64> = r
            .genealogy
            .nodes()
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Pruned { certificate } => Some(certificate),
                _ => None,
            })
            .collect();
        let eps = c.prune_epsilon.unwrap_or(0.0);
        note(stubs.len() == r.pruned_subtrees, "stub count equals pruned subtrees");
        note(stubs.iter().all(|&s| s <= eps), "every certificate at most eps");
        let cert_sum: f64 = stubs.iter().sum();
        let tracked: f64 = r.pruned_mass_bound.iter().sum::<f64>() + r.pruned_min_bound;
        note(
            r.pruned_mass_bound.iter().all(|&m| m <= cert_sum * (1.0 + 1e-12)) && cert_sum <= tracked * (1.0 + 1e-12),
            "certificate accounting",
        );

        let t = r.t_final;
        for &g in &[0.75, 1.0] {
            let z = complex_partition(&r, g, 0.0, None);
            note(z.raw.im == 0.0 && z.raw.re == additive_martingale(&r, g), "beta = 0 reduces to the additive sum");
            note(z.normalized == z.raw * t.powf(1.5 * g), "normalization identity");
            let w = pairwise_overlap(&r, g, 0.0);
            note((w - z.raw.re * z.raw.re).abs() <= 1e-12 * w, "overlap at beta = 0 is |Z|^2");
        }

        let idx = MrcaIndex::new(&r);
        let leaves = r.leaves();
        for (x, y) in [(0usize, leaves.len() - 1), (leaves.len() / 2, leaves.len() / 3)] {
            note(idx.mrca_time(x, y).ok() == Some(ancestor_walk(&r, x, y)), "mrca equals the ancestor walk");
        }

        if let Ok(cl) = extract_clusters(&r, 2.0, 1.0) {
            let mut members: Vec<usize> = Vec::new();
            for s in &cl {
                members.push(s.anchor_leaf);
                note(s.members.windows(2).all(|w| w[0].dx <= w[1].dx), "members sorted by dx");
                note(s.members.iter().all(|m| m.split_age < 1.0 && m.dx >= 0.0), "members within depth");
            }
            let sz: usize = cl.iter().map(|s| s.members.len() + 1).sum();
            let window = r.sorted().x.partition_point(|&x| x <= bbm_core::sim::bramson_shift(t) + 2.0);
            members.sort_unstable();
            members.dedup();
            note(sz == window && members.len() == cl.len(), "clusters partition the window");
        } else {
            note(false, "cluster extraction");
        }
    }
    out.flag("structural invariants on 40 replicas", bad.is_empty(), bad.join("; "));

    // ECF symmetry, Hill scale invariance, Kuiper rotation invariance
    let mut rng = node_rng(ROOT_SEED ^ 0xec);
    let z: Vec<Complex64> =
        (0..2000).map(|_| Complex64::new(rng.random::<f64>() - 0.3, 2.0 * rng.random::<f64>() - 1.0)).collect();
    let pts = [[0.7, -1.3], [-0.7, 1.3], [2.0, 0.5], [-2.0, -0.5]];
    let phi = empirical_cf(&z, &pts)?;
    let sym = (phi[0] - phi[1].conj()).norm() < 1e-12 && (phi[2] - phi[3].conj()).norm() < 1e-12;
    out.flag("ecf conjugate symmetry and |phi| <= 1", sym && phi.iter().all(|p| p.norm() <= 1.0 + 1e-12), "");

    let v: Vec<f64> = (0..5000).map(|_| rng.random::<f64>().powf(-0.5)).collect();
    let k = gates.hill_k(v.len());
    let h1 = hill_estimator(&v, k)?;
    let h2 = hill_estimator(&v.iter().map(|x| x * 37.5).collect::<Vec<_>>(), k)?;
    out.flag("hill scale invariance", (h1 - h2).abs() <= 1e-10 * h1, format!("a={h1:.6}"));

    let k0 = kuiper_uniform_angle(&z)?;
    let rot = Complex64::from_polar(1.0, 1.234);
    let k1 = kuiper_uniform_angle(&z.iter().map(|w| w * rot).collect::<Vec<_>>())?;
    out.flag(
        "kuiper rotation invariance",
        (k0.statistic - k1.statistic).abs() <= 1e-9,
        format!("V={:.6}", k0.statistic),
    );
    Ok(())
}

fn ancestor_walk(r: &ReplicaOutput, i: usize, j: usize) -> f64 {
    if i == j {
        return r.t_final;
    }
    let g = &r.genealogy;
    let path = |mut n| {
        let mut v = vec![n];
        while let Some(p) = g.node(n).parent {
            v.push(p);
            n = p;
        }
        v
    };
    let a = path(r.leaves()[i].node);
    let b = path(r.leaves()[j].node);
    let common = a.iter().find(|n| b.contains(n)).unwrap();
    g.node(*common).split_time().unwrap()
}

fn c11_engineering(gates: &Gates) -> Outcome {
    let mut out = Outcome::new();
    let r = engineering(&mut out);
    out.absorb("engineering", r);
    let r = properties(&mut out, gates);
    out.absorb("properties", r);
    out
}

fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

type Criterion = (usize, &'static str, fn(&Gates) -> Outcome);

fn main() -> ExitCode {
    let gates = Gates::default();
    let criteria: [Criterion; 11] = [
        (1, "exact-mode oracle suite", c1_oracles),
        (2, "pruning fidelity", c2_prune_fidelity),
        (3, "overlap recursion vs brute force", c3_overlap_brute_force),
        (4, "Bramson centering", c4_bramson),
        (5, "tail index", c5_tails),
        (6, "isotropy", c6_isotropy),
        (7, "stable-mixture CF fit", c7_cf_fit),
        (8, "PPP intensity", c8_ppp),
        (9, "normalization exponent", c9_normalization),
        (10, "infimum bound", c10_infimum),
        (11, "engineering gates", c11_engineering),
    ];
    let only: Option<Vec<usize>> =
        std::env::var("BBM_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut report = String::new();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = f(&gates);
        let verdict = if o.pass() { "PASS" } else { "FAIL" };
        if !o.pass() {
            failed += 1;
        }
        let line = format!("[{verdict}] {id} {name} ({:.1} s)", start.elapsed().as_secs_f64());
        println!("{line}");
        writeln!(report, "{line}").unwrap();
        for c in &o.checks {
            let row = format!(
                "    {} {}: {} in [{}, {}] {}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                num(c.value),
                num(c.lo),
                num(c.hi),
                c.note
            );
            println!("{row}");
            writeln!(report, "{row}").unwrap();
        }
        for e in &o.errors {
            println!("    ERR  {e}");
            writeln!(report, "    ERR  {e}").unwrap();
        }
    }
    let _ = fs::create_dir_all(store_dir());
    let _ = fs::write(store_dir().join("report.txt"), report);
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
