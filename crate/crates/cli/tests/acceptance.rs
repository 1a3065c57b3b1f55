//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::collections::HashMap;
use std::process::Command;
use std::time::{Duration, Instant};

use pairfiber::enumerate::{enumerate_fiber, Count};
use pairfiber::io::{format_significant, parse_count_matrix, parse_matrix};
use pairfiber::markov::quadruples;
use pairfiber::sampler::Chain;
use pairfiber::table::cell_count;
use pairfiber::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBTABLE_COUNTS: [&str; 9] = [
    "2952470953799239962752797659386190",
    "252762217255461089482462934497",
    "242451808378958740321921",
    "384937707376563538670706387547",
    "11636397863410272633",
    "51895845228141509162048464",
    "5538280355961059",
    "336625602844011493310899",
    "777971438252448",
];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }
}

fn data(name: &str) -> String {
    let path = format!("{}/../core/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn observed_table() -> PairTable {
    parse_count_matrix(&data("observed.txt")).unwrap()
}

fn pi(j: usize, k: usize) -> PairIndex {
    PairIndex::new(j, k, 22).unwrap()
}

/// True when `value` rounded to `digits` significant digits equals `printed`.
fn agrees_at_displayed_precision(value: f64, printed: f64, digits: usize) -> bool {
    let shown: f64 = format_significant(value, digits).parse().unwrap();
    (shown - printed).abs() < 1e-9
}

fn null_fit(t: &PairTable) -> FittedModel {
    fit(&ModelSpec::no_proximity(t.n()).unwrap(), t, &FitConfig::default()).unwrap()
}

fn mle_reproduction() -> Outcome {
    let mut o = Outcome::new();
    let t = observed_table();
    let start = Instant::now();
    let model = null_fit(&t);
    let elapsed = start.elapsed();
    let printed = parse_matrix::<f64>(&data("printed_fit.txt")).unwrap().table;
    let mut mismatches = Vec::new();
    for (p, v) in model.fitted.iter() {
        if !agrees_at_displayed_precision(v, printed[p], 2) {
            mismatches.push(format!("{p} {} vs {}", format_significant(v, 2), printed[p]));
        }
    }
    o.check(
        mismatches.is_empty(),
        format!("cells agreeing with the printed fit at 2 significant digits: {}/231", 231 - mismatches.len()),
    );
    if !mismatches.is_empty() {
        o.note(format!("first mismatches: {}", mismatches[..mismatches.len().min(6)].join(", ")));
    }
    let sums = parse_count_matrix(&data("observed.txt")).unwrap().margins();
    let mut worst: f64 = 0.0;
    let mut fitted_margins = [0.0; 22];
    for (p, v) in model.fitted.iter() {
        fitted_margins[p.j() - 1] += v;
        fitted_margins[p.k() - 1] += v;
    }
    for (k, &u) in sums.as_slice().iter().enumerate() {
        worst = worst.max((fitted_margins[k] - u as f64).abs());
    }
    o.check(worst < 1e-6, format!("largest fitted-margin error {worst:.2e} (< 1e-6)"));
    o.check(elapsed < Duration::from_secs(1), format!("fit runtime {elapsed:?} (< 1 s)"));
    o
}

fn deviation_reproduction() -> Outcome {
    let mut o = Outcome::new();
    let t = observed_table();
    let model = null_fit(&t);
    let dev = deviation_table(&t, &model.fitted).unwrap();
    let printed = parse_matrix::<f64>(&data("printed_deviations.txt")).unwrap().table;
    let mut agree = 0;
    for (p, v) in dev.iter() {
        if agrees_at_displayed_precision(v, printed[p], 2) {
            agree += 1;
        }
    }
    o.check(agree == 231, format!("cells agreeing with the printed deviations: {agree}/231"));
    for (p, want) in [(pi(1, 22), 16.0), (pi(13, 14), 15.0)] {
        o.check(
            agrees_at_displayed_precision(dev[p], want, 2),
            format!("deviation {p} = {:.2} (printed {want})", dev[p]),
        );
    }
    o
}

fn observed_statistic() -> Outcome {
    let mut o = Outcome::new();
    let t = observed_table();
    let x2 = chi_square_stat(&t, &null_fit(&t).fitted).unwrap();
    o.check((x2 - 346.63).abs() <= 0.05, format!("chi-square {x2:.3} (target 346.63 +/- 0.05)"));
    let printed = parse_matrix::<f64>(&data("printed_fit.txt")).unwrap().table;
    o.note(format!("chi-square against the printed fit: {:.3}", chi_square_stat(&t, &printed).unwrap()));
    o
}

fn basis_size() -> Outcome {
    let mut o = Outcome::new();
    let b22 = generate_basis(22).unwrap();
    o.check(b22.len() == 29_260, format!("generate_basis(22) has {} moves", b22.len()));
    let b4 = generate_basis(4).unwrap();
    o.check(b4.len() == 4, format!("generate_basis(4) has {} moves", b4.len()));
    let design = design_matrix(&ModelSpec::no_proximity(22).unwrap());
    let in_kernel = b22.moves().iter().all(|m| {
        let v = m.to_vector(22);
        (0..design.rows()).all(|r| (0..design.cols()).map(|c| design.get(r, c) as i64 * v[c]).sum::<i64>() == 0)
    });
    o.check(in_kernel, "every move preserves all 22 margins".into());
    o
}

fn pair_scan_check() -> Outcome {
    let mut o = Outcome::new();
    let t = observed_table();
    let start = Instant::now();
    let rows = pair_scan(&t, &ScanConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let top: Vec<PairIndex> = rows.iter().take(2).map(|r| r.pair).collect();
    let expected = [pi(1, 22), pi(13, 14)];
    o.check(
        top.contains(&expected[0]) && top.contains(&expected[1]),
        format!("two most significant pairs: {} and {} (want (1,22) and (13,14))", top[0], top[1]),
    );
    let by_pair: HashMap<PairIndex, &PairScanRow> = rows.iter().map(|r| (r.pair, r)).collect();
    for (p, want) in [(pi(1, 22), 17.27), (pi(13, 14), 13.66)] {
        let row = by_pair[&p];
        let g = row.statistic.unwrap();
        o.check(
            (g - want).abs() <= 0.05 * want,
            format!("statistic {p} = {g:.3} (want {want} +/- 5%), rank {}", rows.iter().position(|r| r.pair == p).unwrap() + 1),
        );
        o.note(format!(
            "{p}: deviance {:.3}, Pearson cell {:.3}, raw p {:.2e}, Bonferroni {:.4}",
            row.deviance.unwrap(),
            row.pearson_cell,
            row.p_raw.unwrap(),
            row.p_adjusted.unwrap()
        ));
    }
    let p = chisq_sf(13.66, 1);
    o.check(format_significant(p, 2) == "0.00022", format!("chisq_sf(13.66, 1) = {p:.3e}"));
    o.check(elapsed < Duration::from_secs(10), format!("231 fits in {elapsed:?} (< 10 s)"));
    o
}

fn goodness_of_fit() -> Outcome {
    let mut o = Outcome::new();
    let t = observed_table();
    let fhat = null_fit(&t).fitted;
    let basis = generate_basis(22).unwrap();
    let stat = |x: &PairTable| chi_square_stat(x, &fhat).unwrap();
    let cfg = ChainConfig { seed: 2007, thinning: 1_000, burn_in: 1_000, samples: 10_000, ..Default::default() };
    let start = Instant::now();
    let res = run_chain(&t, &basis, &cfg, stat).unwrap();
    let frac = res.exceed_count as f64 / res.samples as f64;
    o.check(
        frac >= 0.999,
        format!(
            "exceed fraction {frac:.4} over {} samples ({:?} target, {} steps, {:?})",
            res.samples,
            cfg.target,
            res.steps_total,
            start.elapsed()
        ),
    );
    o.note(format!("observed {:.2}; sampled min/mean/max {:.1}/{:.1}/{:.1}", res.observed_stat, res.min, res.mean, res.max));
    let hyper = run_chain(&t, &basis, &ChainConfig { target: Target::Hypergeometric, ..cfg }, stat).unwrap();
    o.note(format!(
        "hypergeometric target for comparison: exceed fraction {:.4}, sampled mean {:.1}",
        hyper.exceed_count as f64 / hyper.samples as f64,
        hyper.mean
    ));
    o
}

struct Instance {
    start: PairTable,
    fiber: FiberEnumeration,
}

fn random_instances(count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.random_range(4..=5);
        let cells: Vec<u64> = (0..cell_count(n)).map(|_| rng.random_range(0..=2)).collect();
        let start = PairTable::from_cells(n, cells).unwrap();
        let u = start.margins();
        if !u.as_slice().iter().all(|&x| (1..=6).contains(&x)) {
            continue;
        }
        let converged = fit(&ModelSpec::no_proximity(n).unwrap(), &start, &FitConfig::default())
            .map(|m| m.converged)
            .unwrap_or(false);
        let Ok(fiber) = enumerate_fiber(&u, None, 200) else { continue };
        if converged && fiber.len() >= 3 {
            out.push(Instance { start, fiber });
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut o = Outcome::new();
    let instances = random_instances(20);
    let (mut worst_tv, mut worst_p, mut connected) = (0.0f64, 0.0f64, 0);
    for (i, inst) in instances.iter().enumerate() {
        let n = inst.start.n();
        let basis = generate_basis(n).unwrap();
        let mut chain = Chain::new(&inst.start, &basis, Target::Hypergeometric, 1000 + i as u64).unwrap();
        chain.advance(10_000);
        let steps = 1_000_000u64;
        let mut visits: HashMap<Vec<u64>, u64> = HashMap::new();
        for _ in 0..steps {
            chain.step();
            *visits.entry(chain.table().cells().to_vec()).or_default() += 1;
        }
        let tv: f64 = inst
            .fiber
            .tables()
            .iter()
            .zip(inst.fiber.weights())
            .map(|(t, w)| (visits.get(t.cells()).copied().unwrap_or(0) as f64 / steps as f64 - w).abs())
            .sum::<f64>()
            / 2.0;
        worst_tv = worst_tv.max(tv);

        let fhat = null_fit(&inst.start).fitted;
        let exact = exact_p_value(inst.fiber.margins(), &inst.start, &fhat, 10_000).unwrap();
        let cfg = ChainConfig {
            seed: 2000 + i as u64,
            burn_in: 1_000,
            thinning: 10,
            samples: 100_000,
            target: Target::Hypergeometric,
            keep_stream: false,
        };
        let mc = run_chain(&inst.start, &basis, &cfg, |t| chi_square_stat(t, &fhat).unwrap()).unwrap();
        worst_p = worst_p.max((mc.p_value - exact).abs());

        if connectivity_check(inst.fiber.margins(), &basis, 10_000).unwrap() {
            connected += 1;
        }
    }
    let sizes: Vec<usize> = instances.iter().map(|i| i.fiber.len()).collect();
    o.note(format!(
        "{} instances, n in {{4,5}}, margins <= 6, fiber sizes {}..={}",
        instances.len(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    ));
    o.check(worst_tv <= 0.02, format!("(a) worst total variation at 10^6 steps: {worst_tv:.4} (<= 0.02)"));
    o.check(worst_p <= 0.02, format!("(b) worst |MCMC p - exact p|: {worst_p:.4} (<= 0.02)"));
    o.check(connected == instances.len(), format!("(c) connected fibers: {connected}/{}", instances.len()));
    o
}

fn random_reduce(t: &PairTable, rng: &mut ChaCha8Rng) -> PairTable {
    let n = t.n();
    let mut t = t.clone();
    let quads: Vec<[usize; 4]> = quadruples(n).collect();
    let p = |a: usize, b: usize| PairIndex::new(a, b, n).unwrap();
    loop {
        let mut options = Vec::new();
        for &[i, j, k, l] in &quads {
            for (a, b) in [(p(i, j), p(k, l)), (p(i, l), p(j, k))] {
                if t[a] > 0 && t[b] > 0 {
                    options.push((a, b, p(i, k), p(j, l)));
                }
            }
        }
        if options.is_empty() {
            return t;
        }
        let (a, b, c, d) = options[rng.random_range(0..options.len())];
        t[a] -= 1;
        t[b] -= 1;
        t[c] += 1;
        t[d] += 1;
    }
}

fn normal_form_check() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut confluent, mut idempotent) = (0, 0);
    let total = 1000;
    for _ in 0..total {
        let n = rng.random_range(4..=8);
        let cells: Vec<u64> = (0..cell_count(n)).map(|_| rng.random_range(0..=3)).collect();
        let t = PairTable::from_cells(n, cells).unwrap();
        let nf = normal_form(&t);
        if random_reduce(&t, &mut rng) == nf.table && random_reduce(&t, &mut rng) == nf.table {
            confluent += 1;
        }
        let again = normal_form(&nf.table);
        if again.table == nf.table && again.steps == 0 {
            idempotent += 1;
        }
    }
    o.check(confluent == total, format!("randomized reduction orders agree on {confluent}/{total} tables (n <= 8)"));
    o.check(idempotent == total, format!("normal_form idempotent on {idempotent}/{total} tables"));

    let t = observed_table();
    let basis = generate_basis(22).unwrap();
    let mut chain = Chain::new(&t, &basis, Target::Uniform, 77).unwrap();
    chain.advance(30_000);
    let members = 30;
    let mut steps = Vec::with_capacity(members);
    let target = normal_form(&t).table;
    let mut same = true;
    for _ in 0..members {
        chain.advance(30_000);
        let nf = normal_form(chain.table());
        same &= nf.table == target;
        steps.push(nf.steps);
    }
    let mean = steps.iter().sum::<u64>() as f64 / members as f64;
    o.check(same, format!("{members} fiber members of the data table share one normal form"));
    o.check(
        (5_000.0..=45_000.0).contains(&mean),
        format!("mean unit steps to the normal form {mean:.0} (within a factor 3 of 15000)"),
    );
    o
}

fn magnitude_arithmetic() -> Outcome {
    let mut o = Outcome::new();
    let counts: Vec<Count> = SUBTABLE_COUNTS.iter().map(|s| Count::Decimal(s.to_string())).collect();
    let sub = subtable_lower_bound(&counts).unwrap().log10_value;
    o.check((sub - 214.8).abs() <= 0.1, format!("subtable lower bound log10 {sub:.3} (214.8 +/- 0.1)"));

    let printed = parse_matrix::<f64>(&data("printed_fit.txt")).unwrap().table;
    let ell = ellipsoid_log_volume(printed.cells(), 346.63).unwrap().log10_value;
    o.check((265.0..=267.0).contains(&ell), format!("ellipsoid log10 volume {ell:.3} (in [265, 267])"));
    let t = observed_table();
    let mle = ellipsoid_log_volume(null_fit(&t).fitted.cells(), 346.63).unwrap().log10_value;
    o.note(format!("same volume with the computed fit: {mle:.3}"));

    let b = log_binomial(27_706, 30).unwrap().log10_value;
    o.check((b - 100.85).abs() <= 0.01, format!("log10 C(27706, 30) = {b:.4} (100.85 +/- 0.01)"));
    let composed = composed_lower_bound(sub, 27_706, 30).unwrap();
    let (m, e) = composed.scientific();
    o.check(
        (composed.log10_value - 315.6).abs() <= 0.1 && e == 315 && format_significant(m, 1) == "4",
        format!("composed bound {m:.2}e{e} (log10 {:.3}, about 4e315)", composed.log10_value),
    );
    let ratio = fiber_ratio_report(sub, (1.8e293f64).log10(), Some(300.0)).unwrap();
    let (m, e) = ratio.scientific();
    o.check(
        e == -7 && format_significant(m, 2) == "1.8",
        format!("ratio with a conservative floor of 10^300 and 1.8e293 inside: {m:.2}e{e}"),
    );
    let lattice = lattice_correction_magnitude(346.63, 231).unwrap().log10_value;
    o.note(format!("lattice-point term log10 {lattice:.3}"));
    o
}

fn determinism() -> Outcome {
    let mut o = Outcome::new();
    let path = format!("{}/../core/tests/data/observed.txt", env!("CARGO_MANIFEST_DIR"));
    let args = [
        "gof", &path, "--matrix", "--seed", "11", "--thin", "500", "--samples", "200", "--chains", "3", "--keep-stream",
    ];
    let run = || Command::new(env!("CARGO_BIN_EXE_pairfiber")).args(args).output().unwrap();
    let (a, b) = (run(), run());
    o.check(a.status.success() && b.status.success(), "both gof runs exit 0".into());
    o.check(!a.stdout.is_empty() && a.stdout == b.stdout, format!("reports byte-identical ({} bytes)", a.stdout.len()));
    let mut other: Vec<&str> = args.to_vec();
    other[4] = "12";
    let c = Command::new(env!("CARGO_BIN_EXE_pairfiber")).args(&other).output().unwrap();
    o.check(c.stdout != a.stdout, "a different seed changes the report".into());
    o
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("MLE reproduction", mle_reproduction),
        ("Deviation reproduction", deviation_reproduction),
        ("Observed statistic", observed_statistic),
        ("Basis size", basis_size),
        ("Pair scan", pair_scan_check),
        ("Goodness-of-fit at desk scale", goodness_of_fit),
        ("Oracle equivalence", oracle_equivalence),
        ("Normal form", normal_form_check),
        ("Fiber-size magnitudes", magnitude_arithmetic),
        ("Determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        println!("[{}] {:>2} {name} ({:.2?})", if outcome.pass { "PASS" } else { "FAIL" }, i + 1, start.elapsed());
        for line in &outcome.details {
            println!("       {line}");
        }
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
