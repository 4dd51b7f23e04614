//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines print on success too.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cwbench::exact::{grassmann_measure, int, sphere_area, PiScalar, Rational};
use cwbench::formulas::{theorem1, theorem1_by_substitution, theorem2, theorem2_by_transfer};
use cwbench::geometry::{flattened_mci, parallel_flattened_mci_oracle, BodySpec, Harmonic2dSpec, Harmonic3dSpec, SupportBody};
use cwbench::grassmann::{kubota_check, mc_grassmann_integral};
use cwbench::report::{to_jsonl, CheckReport, Config, ConfigValue, Side, Verdict};
use cwbench::verify::{fixtures_2d, fixtures_3d, run_check, run_suite, with_threads, Summary};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::from(1), |acc, j| acc * j)
}

/// `O_m = 2π^{(m+1)/2} / Γ((m+1)/2)` with the Gamma value written out.
fn sphere_area_closed_form(m: u32) -> PiScalar {
    if m % 2 == 1 {
        let k = (m + 1) / 2;
        PiScalar::monomial(Rational::new(2.into(), factorial(k - 1)), k)
    } else {
        let k = m / 2;
        let num = BigInt::from(2).pow(2 * k + 1) * factorial(k);
        PiScalar::monomial(Rational::new(num, factorial(2 * k)), k)
    }
}

fn config(entries: &[(&str, ConfigValue)]) -> Config {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn side(s: &Side) -> f64 {
    match s {
        Side::Real(v) => *v,
        Side::Exact(_) => f64::NAN,
    }
}

fn criterion_1() -> Outcome {
    for m in 0..=12u32 {
        let got = sphere_area(m as i64).map_err(|e| e.to_string())?;
        let want = sphere_area_closed_form(m);
        ensure(got == want, || format!("O_{m} = {got}, closed form {want}"))?;
    }
    let o3 = PiScalar::monomial(int(2), 2);
    let o5 = PiScalar::monomial(int(1), 3);
    ensure(sphere_area(3).unwrap() == o3, || "O_3 != 2*pi^2".into())?;
    ensure(sphere_area(5).unwrap() == o5, || "O_5 != pi^3".into())?;
    let mut pairs = 0;
    for n in 2..=10i64 {
        for r in 1..n {
            let a = grassmann_measure(n, r).map_err(|e| e.to_string())?;
            let b = grassmann_measure(n, n - r).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("m(G_{{{r},{}}}) = {a} but m(G_{{{},{r}}}) = {b}", n - r, n - r))?;
            pairs += 1;
        }
    }
    Ok(format!("O_0..O_12 exact, {pairs} symmetric Grassmann pairs"))
}

fn exact_sweep<F, G>(direct: F, derived: G) -> Outcome
where
    F: Fn(i64, i64, i64) -> Result<cwbench::symbolic::FormulaPoly, cwbench::formulas::FormulaError>,
    G: Fn(i64, i64, i64) -> Result<cwbench::symbolic::FormulaPoly, cwbench::formulas::FormulaError>,
{
    let mut triples = 0;
    for n in 2..=8 {
        for r in 1..n {
            for l in 0..n {
                let a = direct(n, r, l).map_err(|e| e.to_string())?;
                let b = derived(n, r, l).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("(n={n}, r={r}, l={l}): {a} vs {b}"))?;
                triples += 1;
            }
        }
    }
    Ok(format!("{triples} triples exactly equal"))
}

fn criterion_2() -> Outcome {
    exact_sweep(theorem1, theorem1_by_substitution)
}

fn criterion_3() -> Outcome {
    exact_sweep(theorem2, theorem2_by_transfer)
}

fn random_2d(rng: &mut ChaCha8Rng) -> BodySpec {
    let w = rng.random_range(0.5..2.0);
    let mut amp = |scale: f64| rng.random_range(-scale..scale) * w;
    BodySpec::OddHarmonic2d {
        halfwidth: w,
        harmonics: vec![
            Harmonic2dSpec { degree: 3, cos: amp(0.03), sin: amp(0.03) },
            Harmonic2dSpec { degree: 5, cos: amp(0.008), sin: amp(0.008) },
        ],
    }
}

fn random_3d(rng: &mut ChaCha8Rng) -> BodySpec {
    let w = rng.random_range(0.8..1.5);
    let mut harmonics = vec![Harmonic3dSpec { degree: 1, order: rng.random_range(-1..=1), coef: rng.random_range(-0.2..0.2) }];
    for _ in 0..2 {
        harmonics.push(Harmonic3dSpec { degree: 3, order: rng.random_range(-3..=3), coef: rng.random_range(-0.01..0.01) * w });
    }
    BodySpec::OddHarmonic3d { halfwidth: w, harmonics }
}

fn criterion_4() -> Outcome {
    let mut worst_ball = 0.0f64;
    for n in [2usize, 3] {
        let o = sphere_area(n as i64 - 1).unwrap().to_f64();
        for radius in [0.5, 1.0, 2.0] {
            let body = SupportBody::ball(radius, n).map_err(|e| e.to_string())?;
            for i in 0..n {
                let got = body.mean_curvature_integral(i).map_err(|e| e.to_string())?;
                let want = o * radius.powi((n - 1 - i) as i32);
                let e = rel(got, want);
                ensure(e <= 1e-10, || format!("Ball({radius}) n={n} M_{i}: {got} vs {want}"))?;
                worst_ball = worst_ball.max(e);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst_steiner = 0.0f64;
    let mut steiner_checks = 0;
    for k in 0..8 {
        let (n, spec) = if k % 2 == 0 { (2, random_2d(&mut rng)) } else { (3, random_3d(&mut rng)) };
        let rho = rng.random_range(0.05..1.0);
        let base = [
            ("n", ConfigValue::Int(n)),
            ("body", ConfigValue::Body(spec.clone())),
            ("rho", ConfigValue::Real(rho)),
        ];
        let mut reports = vec![run_check("steiner-volume", &config(&base)).map_err(|e| e.to_string())?];
        for i in 0..=n {
            let mut c = config(&base);
            c.insert("i".into(), ConfigValue::Int(i));
            reports.push(run_check("steiner-quermass", &c).map_err(|e| e.to_string())?);
        }
        for r in reports {
            ensure(r.rel_error <= 1e-9, || format!("{} on {} rho={rho}: rel {:e}", r.check_id, spec.to_json(), r.rel_error))?;
            worst_steiner = worst_steiner.max(r.rel_error);
            steiner_checks += 1;
        }
    }

    let mut worst_barbier = 0.0f64;
    let harmonic: Vec<BodySpec> =
        fixtures_2d().into_iter().filter(|b| matches!(b, BodySpec::OddHarmonic2d { .. })).collect();
    ensure(harmonic.len() == 3, || format!("expected three planar odd-harmonic fixtures, got {}", harmonic.len()))?;
    for spec in &harmonic {
        let body = spec.build(2).map_err(|e| e.to_string())?;
        let width = body.constant_width(1e-10).map_err(|e| e.to_string())?.ok_or("fixture is not of constant width")?;
        let perimeter = body.mean_curvature_integral(0).map_err(|e| e.to_string())?;
        let e = rel(perimeter, PI * width);
        ensure(e <= 1e-10, || format!("Barbier on {}: {perimeter} vs pi*{width}", spec.to_json()))?;
        worst_barbier = worst_barbier.max(e);
    }
    Ok(format!(
        "ball M_i max rel {worst_ball:.1e}; {steiner_checks} Steiner checks max rel {worst_steiner:.1e}; Barbier max rel {worst_barbier:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    let disc = SupportBody::ball(1.0, 2).map_err(|e| e.to_string())?;
    let want = [2.0 * PI, PI * PI, 4.0 * PI];
    let mut worst = 0.0f64;
    for (q, w) in want.iter().enumerate() {
        let got = flattened_mci(3, &disc, q).map_err(|e| e.to_string())?;
        ensure(rel(got, *w) <= 1e-9, || format!("flattened disc M_{q} = {got}, want {w}"))?;
        worst = worst.max(rel(got, *w));
    }
    for rho in [0.25, 1.0] {
        let got = parallel_flattened_mci_oracle(3, &disc, rho, 1).map_err(|e| e.to_string())?;
        let w = PI * PI + 4.0 * PI * rho;
        ensure(rel(got, w) <= 1e-9, || format!("parallel disc rho={rho}: M_1 = {got}, want {w}"))?;
        worst = worst.max(rel(got, w));
    }
    Ok(format!("flattened disc and parallel discs max rel {worst:.1e}"))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_6() -> Outcome {
    const SAMPLES: u64 = 100_000;
    const SEED: u64 = 42;
    let ball = SupportBody::ball(1.0, 3).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for r in [1usize, 2] {
        let a = kubota_check(&ball, r, SAMPLES, SEED).map_err(|e| e.to_string())?;
        let b = kubota_check(&ball, r, SAMPLES, SEED).map_err(|e| e.to_string())?;
        ensure(a.verdict == Verdict::Pass, || format!("kubota r={r}: {}", a.to_json_line()))?;
        ensure(a.to_json_line() == b.to_json_line(), || format!("kubota r={r} not reproducible"))?;
        lines.push(format!("kubota r={r} rel {:.1e}", a.rel_error));
    }

    let transfer = config(&[
        ("n", ConfigValue::Int(3)),
        ("r", ConfigValue::Int(2)),
        ("t", ConfigValue::Int(0)),
        ("body", ConfigValue::Body(BodySpec::ball(1.0, 3))),
        ("samples", ConfigValue::Int(SAMPLES as i64)),
        ("seed", ConfigValue::Int(SEED as i64)),
    ]);
    let a = run_check("transfer-c4", &transfer).map_err(|e| e.to_string())?;
    let b = run_check("transfer-c4", &transfer).map_err(|e| e.to_string())?;
    ensure(a.verdict == Verdict::Pass, || format!("transfer: {}", a.to_json_line()))?;
    ensure(a.to_json_line() == b.to_json_line(), || "transfer not reproducible".into())?;
    let target = 4.0 * PI * PI;
    for (name, v) in [("lhs", side(&a.lhs)), ("rhs", side(&a.rhs))] {
        ensure(rel(v, target) <= 1e-9, || format!("transfer {name} = {v}, want 4*pi^2"))?;
    }
    lines.push("transfer both sides 4*pi^2".into());

    // The ball's projections all have the same area, so the slope is taken on
    // a constant-width solid whose projected area varies with the plane.
    let solid = fixtures_3d()
        .into_iter()
        .find(|b| matches!(b, BodySpec::OddHarmonic3d { .. }))
        .ok_or("no solid fixture")?
        .build(3)
        .map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for samples in [1_000u64, 10_000, 100_000] {
        let est = mc_grassmann_integral(|f| solid.project(f).and_then(|p| p.volume()), 3, 2, samples, SEED)
            .map_err(|e| e.to_string())?;
        points.push(((samples as f64).ln(), est.standard_error.ln()));
    }
    let slope = least_squares_slope(&points);
    ensure((slope + 0.5).abs() <= 0.05, || format!("standard error slope {slope:.4}"))?;
    lines.push(format!("SE slope {slope:.4}"));
    Ok(lines.join("; "))
}

fn criterion_7(full: &[CheckReport]) -> Outcome {
    let stadium = config(&[
        ("n", ConfigValue::Int(2)),
        ("r", ConfigValue::Int(1)),
        ("l", ConfigValue::Int(0)),
        ("body", ConfigValue::Body(BodySpec::ball(1.0, 2))),
        ("rho", ConfigValue::Real(0.5)),
    ]);
    let report = run_check("thm1-vs-oracle", &stadium).map_err(|e| e.to_string())?;
    let diff = side(&report.lhs) - side(&report.rhs);
    let want = 4.0 * PI - 8.0;
    ensure(rel(diff, want) <= 1e-9, || format!("stadium lhs - rhs = {diff}, want 4*pi - 8"))?;
    ensure(report.verdict == Verdict::DiscrepancyDocumented, || format!("stadium verdict {}", report.verdict.as_str()))?;

    let mut top = 0;
    let mut worst = 0.0f64;
    for (n, fixtures) in [(2i64, fixtures_2d()), (3, fixtures_3d())] {
        for spec in fixtures {
            for r in 1..n {
                for rho in [0.0, 0.5, 1.0] {
                    let c = config(&[
                        ("n", ConfigValue::Int(n)),
                        ("r", ConfigValue::Int(r)),
                        ("l", ConfigValue::Int(n - 1)),
                        ("body", ConfigValue::Body(spec.clone())),
                        ("rho", ConfigValue::Real(rho)),
                    ]);
                    let rep = run_check("thm1-vs-oracle", &c).map_err(|e| e.to_string())?;
                    ensure(rep.verdict == Verdict::Pass && rep.rel_error <= 1e-9, || rep.to_json_line())?;
                    worst = worst.max(rep.rel_error);
                    top += 1;
                }
            }
        }
    }

    let summary = Summary::of(full);
    ensure(summary.ok(), || format!("full suite has {} failures", summary.fail))?;
    Ok(format!(
        "stadium residual {diff:.6}; {top} top-index checks max rel {worst:.1e}; full suite pass={} documented={} fail=0",
        summary.pass, summary.documented
    ))
}

fn criterion_8(full_one: &str) -> Outcome {
    for threads in [2usize, 8] {
        let text = with_threads(threads, || run_suite("full")).map_err(|e| e.to_string())?;
        let text = to_jsonl(&text);
        ensure(text == full_one, || format!("full suite JSONL differs between 1 and {threads} workers"))?;
    }
    Ok(format!("full suite JSONL identical under 1, 2, 8 workers ({} bytes)", full_one.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |index: usize, title: &str, limit: Option<Duration>, start: Instant, outcome: Outcome| {
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {index} PASS [{elapsed:.2?}] {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {index} FAIL [{elapsed:.2?}] {title}: {detail}");
            }
        }
    };

    let secs = |s: u64| Some(Duration::from_secs(s));
    let t = Instant::now();
    report(1, "exact sphere and Grassmann arithmetic", secs(1), t, criterion_1());
    let t = Instant::now();
    report(2, "thm-1.1 internal consistency", secs(10), t, criterion_2());
    let t = Instant::now();
    report(3, "thm-1.2 transfer", secs(10), t, criterion_3());
    let t = Instant::now();
    report(4, "classical identities on fixtures", secs(30), t, criterion_4());
    let t = Instant::now();
    report(5, "flattened disc fixtures", None, t, criterion_5());
    let t = Instant::now();
    report(6, "statistical checks", secs(60), t, criterion_6());

    let t = Instant::now();
    let full = with_threads(1, || run_suite("full"));
    let (c7, c8) = match full {
        Ok(reports) => {
            let text = to_jsonl(&reports);
            (criterion_7(&reports), Some(text))
        }
        Err(e) => (Err(format!("full suite: {e}")), None),
    };
    report(7, "discrepancy ledger", None, t, c7);
    let t = Instant::now();
    let c8 = match c8 {
        Some(text) => criterion_8(&text),
        None => Err("full suite did not run".into()),
    };
    report(8, "determinism across workers", None, t, c8);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
