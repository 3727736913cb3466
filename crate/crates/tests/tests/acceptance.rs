//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use ghzauth::adversary::{collective_error_rate, detection_probability};
use ghzauth::entanglement::{apply_ops, deduce_ops, swap_distribution, swap_distribution_of_states};
use ghzauth::{
    run_session, AttackModel, BellOutcome, CollectiveCoeffs, GhzLabel, PauliChoice, Session, SessionConfig, Sign,
    StateVector,
};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tuple(names: &[&str]) -> Vec<BellOutcome> {
    names.iter().map(|s| s.parse().unwrap()).collect()
}

fn ops_from_mask(mask: usize, n: usize) -> Vec<PauliChoice> {
    (0..n).map(|i| PauliChoice::from_bit(mask & (1 << (n - 1 - i)) != 0)).collect()
}

/// Support of `(ops on GHZ_n) ⊗ GHZ_n` under pairwise Bell measurement.
fn support_after_ops(ops: &[PauliChoice]) -> Vec<(Vec<BellOutcome>, f64)> {
    let ghz = StateVector::prepare_ghz(ops.len()).unwrap();
    let p = apply_ops(&ghz, ops, 0).unwrap();
    let dist = swap_distribution_of_states(&p, &ghz).unwrap();
    dist.support().map(|(t, w)| (t.to_vec(), w)).collect()
}

fn minus_count(t: &[BellOutcome]) -> usize {
    t.iter().filter(|o| o.sign == Sign::Minus).count()
}

fn support_matches(p: &GhzLabel, q: &GhzLabel, expected: &[Vec<BellOutcome>], weight: f64) -> Outcome {
    let dist = swap_distribution::<f64>(p, q).map_err(|e| e.to_string())?;
    let worst = expected.iter().map(|t| (dist.probability(t) - weight).abs()).fold(0.0, f64::max);
    ensure(
        dist.support_size() == expected.len() && worst <= TOL,
        format!("{p} ⊗ {q}: {} outcomes, max |p - {weight}| = {worst:.2e}", dist.support_size()),
    )
}

fn table_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("tables.json");
    let start = Instant::now();
    let code = ghzauth_cli::run_from_args(["ghzauth", "verify-tables", "--out", out.to_str().unwrap()]);
    let elapsed = start.elapsed();
    let tables: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let rows = tables["transformations"].as_array().map_or(0, Vec::len);
    ensure(
        code == 0 && rows == 8 && elapsed < Duration::from_secs(1),
        format!("exit {code}, {rows} rows match the fixture, {elapsed:.2?}"),
    )
}

fn bell_pair_swap() -> Outcome {
    let phi = GhzLabel::ghz(2).unwrap();
    let expected: Vec<Vec<BellOutcome>> = BellOutcome::ALL.iter().map(|&o| vec![o, o]).collect();
    support_matches(&phi, &phi, &expected, 0.25)
}

fn ghz_swap_supports() -> Outcome {
    let psi1 = GhzLabel::psi(1).unwrap();
    let psi7 = GhzLabel::psi(7).unwrap();
    let eq7 = [
        ["Phi+", "Phi+", "Phi+"],
        ["Phi+", "Phi-", "Phi-"],
        ["Phi-", "Phi+", "Phi-"],
        ["Phi-", "Phi-", "Phi+"],
        ["Psi+", "Psi+", "Psi+"],
        ["Psi+", "Psi-", "Psi-"],
        ["Psi-", "Psi+", "Psi-"],
        ["Psi-", "Psi-", "Psi+"],
    ];
    let eq8 = [
        ["Psi+", "Psi+", "Phi+"],
        ["Psi+", "Psi-", "Phi-"],
        ["Psi-", "Psi+", "Phi-"],
        ["Psi-", "Psi-", "Phi+"],
        ["Phi+", "Phi+", "Psi+"],
        ["Phi+", "Phi-", "Psi-"],
        ["Phi-", "Phi+", "Psi-"],
        ["Phi-", "Phi-", "Psi+"],
    ];
    let a = support_matches(&psi1, &psi1, &eq7.map(|t| tuple(&t)), 0.125)?;
    let b = support_matches(&psi7, &psi1, &eq8.map(|t| tuple(&t)), 0.125)?;
    Ok(format!("{a}; {b}"))
}

fn honest_completeness() -> Outcome {
    let start = Instant::now();
    let mut accepted = 0;
    let mut mismatching = 0;
    let mut s2_mismatches = 0;
    for seed in 0..100 {
        let report = run_session(&SessionConfig::honest(2, 256, 0.25, 64, seed)).map_err(|e| e.to_string())?;
        accepted += usize::from(report.all_accepted());
        mismatching += report.verdicts.iter().map(|v| v.mismatching_groups + v.inconsistent_groups).sum::<usize>();
        s2_mismatches += report.s2.mismatches;
    }
    let elapsed = start.elapsed();
    ensure(
        accepted == 100 && mismatching == 0 && s2_mismatches == 0 && elapsed < Duration::from_secs(10),
        format!(
            "{accepted}/100 accepted, {mismatching} group mismatches, {s2_mismatches} S2 mismatches, {elapsed:.2?}"
        ),
    )
}

fn multiparty() -> Outcome {
    let mut sessions = 0;
    for r in 3..=5 {
        for seed in 0..10 {
            let mut s =
                Session::distribute(SessionConfig::honest(r, 128, 0.25, 32, seed)).map_err(|e| e.to_string())?;
            s.eavesdrop_check().map_err(|e| e.to_string())?;
            s.partition_groups().map_err(|e| e.to_string())?;
            s.encode_keys().map_err(|e| e.to_string())?;
            s.trent_randomize().map_err(|e| e.to_string())?;
            let report = s.authenticate().map_err(|e| e.to_string())?;
            if !report.all_accepted() {
                return Err(format!("r={r} seed={seed}: not all users accepted"));
            }
            for (g, group) in s.groups().iter().enumerate() {
                for (j, key) in s.keys().iter().enumerate() {
                    if group.deduced_bits[j] != key.bit(g) {
                        return Err(format!("r={r} seed={seed} group {g}: user {} bit differs from key", j + 1));
                    }
                }
            }
            sessions += 1;
        }
    }
    let mut tuples = 0;
    for n in 2..=5 {
        for mask in 0..(1usize << n) {
            let ops = ops_from_mask(mask, n);
            let want: Vec<bool> = ops[1..].iter().map(|o| o.classical_bit()).collect();
            for (t, _) in support_after_ops(&ops) {
                let d = deduce_ops(&t, ops[0]).map_err(|e| e.to_string())?;
                if d.user_bits != want || !d.consistent {
                    return Err(format!("n={n} ops={mask:0n$b}: deduction from {t:?} failed"));
                }
                tuples += 1;
            }
        }
    }
    Ok(format!("{sessions} sessions (r=3..5) all accepted with deduced bits = key bits; {tuples} support tuples (n<=5) deduce exactly"))
}

fn impersonation() -> Outcome {
    let mut exact = true;
    for r in 2..=5 {
        for mix in [0.0, 0.5, 1.0] {
            let p = detection_probability::<f64>(&AttackModel::ImpersonateTrent, r, mix).map_err(|e| e.to_string())?;
            exact &= p == 0.5;
        }
    }
    let mut config = SessionConfig::honest(2, 16, 0.25, 4, 0).with_attack(AttackModel::ImpersonateTrent);
    config.check_threshold = 0.0;
    assert_eq!(config.sample_count(), 4);
    let trials = 10_000;
    let sweep = ghzauth_cli::sweep(&config, trials).map_err(|e| e.to_string())?;
    let expect = 1.0 / 16.0;
    let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
    let z = (sweep.s2_pass_rate - expect) / sigma;
    ensure(
        exact && z.abs() <= 3.0,
        format!(
            "detection_probability = 1/2 exactly: {exact}; S2 pass rate {:.4} vs 1/16 ({z:+.2}σ)",
            sweep.s2_pass_rate
        ),
    )
}

/// Random valid coefficients with `|δ2| = |α1|`, the case the closed form covers.
fn random_coeffs(rng: &mut ChaCha8Rng) -> CollectiveCoeffs {
    let a: f64 = rng.gen_range(0.55..0.98);
    let mut branch = |lead: f64| -> [Complex<f64>; 4] {
        let phase = |rng: &mut ChaCha8Rng| Complex::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rest = (1.0 - lead * lead).sqrt();
        [
            phase(rng) * lead,
            phase(rng) * (rest * raw[0] / norm),
            phase(rng) * (rest * raw[1] / norm),
            phase(rng) * (rest * raw[2] / norm),
        ]
    };
    let b0 = branch(a);
    let b1 = branch(a);
    // order: α1 β1 γ1 δ1 | δ2 γ2 β2 α2
    CollectiveCoeffs::new([b0[0], b0[1], b0[2], b0[3], b1[0], b1[1], b1[2], b1[3]]).unwrap()
}

fn collective_attack() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for set in 0..20 {
        let coeffs = random_coeffs(&mut rng);
        let predicted = collective_error_rate(&coeffs).map_err(|e| e.to_string())?;
        let base = SessionConfig::honest(2, 2000, 0.99, 10, 0).with_attack(AttackModel::GeneralCollective { coeffs });
        let (mut samples, mut mismatches) = (0usize, 0usize);
        let mut seed = 1000 * set;
        while samples < 10_000 {
            let report = run_session(&base.clone().with_seed(seed)).map_err(|e| e.to_string())?;
            samples += report.s2.z_samples;
            mismatches += report.s2.z_mismatches;
            seed += 1;
        }
        let rate = mismatches as f64 / samples as f64;
        let sigma = (predicted * (1.0 - predicted) / samples as f64).sqrt();
        let z = (rate - predicted) / sigma;
        if z.abs() > 3.0 {
            return Err(format!("set {set}: Z mismatch rate {rate:.4} vs 1-|α1|² = {predicted:.4} ({z:+.2}σ)"));
        }
        worst = worst.max(z.abs());
    }
    Ok(format!("20 coefficient sets, >= 10^4 Z samples each, worst deviation {worst:.2}σ"))
}

fn parity_literal() -> Outcome {
    // literal statement: every nonzero tuple has an even number of minus signs
    let (mut total, mut odd) = (0usize, 0usize);
    let mut law_holds = true;
    for r in 2..=5 {
        let n = r + 1;
        for mask in 0..(1usize << n) {
            for (t, _) in support_after_ops(&ops_from_mask(mask, n)) {
                total += 1;
                odd += minus_count(&t) % 2;
                law_holds &= minus_count(&t) % 2 == mask.count_ones() as usize % 2;
            }
        }
    }
    ensure(
        odd == 0,
        format!(
            "{odd} of {total} nonzero tuples have an odd number of minus signs; \
             minus-count parity = operator-count parity holds for all: {law_holds}"
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.json");
    let config = SessionConfig::honest(3, 64, 0.25, 16, 42).with_attack(AttackModel::ImpersonateTrent);
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let commands: [&[&str]; 4] = [
        &["run", "--config", cfg, "--reveal"],
        &["run", "--config", cfg, "--seed", "7"],
        &["sweep", "--trials", "200", "--config", cfg],
        &["verify-tables"],
    ];
    for args in commands {
        let mut files = Vec::new();
        for copy in 0..2 {
            let out = dir.path().join(format!("out{copy}.json"));
            let mut argv = vec!["ghzauth"];
            argv.extend_from_slice(args);
            argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
            ghzauth_cli::run_from_args(argv);
            files.push(std::fs::read(&out).map_err(|e| format!("{}: {e}", args.join(" ")))?);
        }
        if files[0] != files[1] {
            return Err(format!("`{}` produced different files", args.join(" ")));
        }
    }
    Ok("run, run --seed, sweep and verify-tables outputs byte-identical across two invocations".into())
}

fn main() {
    std::env::remove_var("GHZAUTH_SEED");
    let criteria: [Criterion; 9] = [
        ("transformation table reproduction", table_reproduction),
        ("Bell-pair swapping distribution", bell_pair_swap),
        ("GHZ swapping supports", ghz_swap_supports),
        ("honest completeness r=2", honest_completeness),
        ("multiparty generalization r=3..5", multiparty),
        ("impersonation detection", impersonation),
        ("collective-attack error rate", collective_attack),
        ("even minus-sign parity", parity_literal),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag}: {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
