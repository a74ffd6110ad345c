//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p jacobi-fields-cli --test acceptance`.

use std::fs;
use std::time::Instant;

use jacobi_fields::fields::{FieldKind, FieldModel, FieldSpec};
use jacobi_fields::fock::{self, BaseSpace, FockOperator, FockSpace};
use jacobi_fields::jacobi1d::{recurrence_coefficients_from_moments, DiscreteMeasure, JacobiMatrix};
use jacobi_fields::measures::{
    char_functional, check_moment_growth, free_cumulant_partial_sum, free_cumulant_tail_bound,
    free_cumulant_transform, gamma_laplace, CellParam, FunctionalKind, GridDomain, KolmogorovMeasure, SigmaKernel,
    TestFunction,
};
use jacobi_fields::partitions::{moments_from_cumulants, multilinear_cumulant, CumulantMode};
use jacobi_fields::sampler::{self, NoiseKind, RngSpec, SE_THRESHOLD};
use jacobi_fields::Execution;
use jacobi_fields_cli::{cmd_sample, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;
const VOLUMES: [f64; 3] = [1.0, 0.5, 2.0];

type Check = Result<(bool, String), String>;

fn domain() -> GridDomain {
    GridDomain::from_volumes(&VOLUMES).unwrap()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn random_phi(r: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> TestFunction {
    TestFunction::new((0..len).map(|_| r.random_range(lo..hi)).collect())
}

fn two_atoms() -> KolmogorovMeasure {
    KolmogorovMeasure::new(vec![(1.0, 0.5), (2.0, 0.25)]).unwrap()
}

fn levy(sigma: KolmogorovMeasure, compensated: bool) -> FieldKind {
    FieldKind::Levy { sigma: SigmaKernel::Uniform(sigma), compensated }
}

/// The field kinds of the moment-equality criterion.
fn moment_kinds() -> Vec<(&'static str, FieldKind)> {
    vec![
        ("gaussian", FieldKind::Gaussian),
        ("poisson λ=1", FieldKind::Poisson { lambda: 1.0 }),
        ("poisson λ=2", FieldKind::Poisson { lambda: 2.0 }),
        ("levy δ₁", levy(KolmogorovMeasure::dirac(1.0), true)),
        ("levy δ₁ uncompensated", levy(KolmogorovMeasure::dirac(1.0), false)),
        ("levy two atoms", levy(two_atoms(), true)),
        ("levy two atoms uncompensated", levy(two_atoms(), false)),
        ("free_levy δ₀", FieldKind::FreeLevy { sigma: KolmogorovMeasure::dirac(0.0) }),
        ("free_levy δ₁", FieldKind::FreeLevy { sigma: KolmogorovMeasure::dirac(1.0) }),
    ]
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn criterion_1() -> Check {
    let d = domain();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, (name, kind)) in moment_kinds().into_iter().enumerate() {
        let model = FieldModel::new(FieldSpec::new(kind, d.clone(), 6).map_err(err)?).map_err(err)?;
        let mut r = rng(100 + k as u64);
        for _ in 0..20 {
            let phis: Vec<TestFunction> = (0..6).map(|_| random_phi(&mut r, 3, -1.0, 1.0)).collect();
            for n in 1..=6 {
                for word in [phis[..n].to_vec(), vec![phis[0].clone(); n]] {
                    let a = model.joint_moment(&word).map_err(err)?;
                    let b = model.predicted_moment(&word).map_err(err)?;
                    let diff = (a - b).abs();
                    if !(diff <= 1e-9) {
                        return Ok((false, format!("{name}, n={n}: operator {a:e} vs partition sum {b:e}")));
                    }
                    worst = worst.max(diff);
                    count += 1;
                }
            }
        }
    }
    Ok((true, format!("{count} moments, 9 kinds, max |diff| = {worst:.2e} (tol 1e-9)")))
}

/// Random vector supported on degrees `≤ max_degree`.
fn random_state(r: &mut ChaCha8Rng, space: &FockSpace, max_degree: usize) -> Vec<f64> {
    (0..space.dim()).map(|i| if space.degree(i) <= max_degree { r.random_range(-1.0..1.0) } else { 0.0 }).collect()
}

fn criterion_2() -> Check {
    let mut r = rng(200);
    let (mut ccr, mut free, mut adj) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..40 {
        let dim = r.random_range(1..=6usize);
        let n = r.random_range(1..=5usize);
        let weights: Vec<f64> = (0..dim).map(|_| r.random_range(0.25..2.0)).collect();
        let base = BaseSpace::new(weights).map_err(err)?;
        let phi: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let c = base.inner(&phi, &psi);
        let symmetric = trial % 2 == 0;
        let space = if symmetric { FockSpace::symmetric(base, n) } else { FockSpace::full(base, n) }.map_err(err)?;
        let am = fock::annihilate(&space, &phi).map_err(err)?;
        let ap = fock::create(&space, &psi).map_err(err)?;
        let am_psi = fock::annihilate(&space, &psi).map_err(err)?;
        for _ in 0..3 {
            // Relations are exact on states below the top degree.
            let v = random_state(&mut r, &space, n - 1);
            let lhs = am.apply(&ap.apply(&v).map_err(err)?).map_err(err)?;
            let rhs: Vec<f64> = if symmetric {
                let back = ap.apply(&am.apply(&v).map_err(err)?).map_err(err)?;
                lhs.iter().zip(&back).zip(&v).map(|((x, y), z)| x - y - c * z).collect()
            } else {
                lhs.iter().zip(&v).map(|(x, z)| x - c * z).collect()
            };
            let res = space.norm(&rhs) / space.norm(&v);
            if symmetric {
                ccr = ccr.max(res);
            } else {
                free = free.max(res);
            }
            let u = random_state(&mut r, &space, n - 1);
            let w = random_state(&mut r, &space, n);
            let left = space.inner(&ap.apply(&u).map_err(err)?, &w);
            let right = space.inner(&u, &am_psi.apply(&w).map_err(err)?);
            adj = adj.max((left - right).abs() / (space.norm(&u) * space.norm(&w)));
        }
    }
    let pass = ccr <= 1e-12 && free <= 1e-12 && adj <= 1e-12;
    Ok((pass, format!("CCR {ccr:.2e}, free relation {free:.2e}, adjointness {adj:.2e} (tol 1e-12)")))
}

fn criterion_3() -> Check {
    let d = domain();
    let mut worst = 0.0f64;
    for (k, (name, kind)) in moment_kinds().into_iter().filter(|(_, k)| !k.is_free()).enumerate() {
        let model = FieldModel::new(FieldSpec::new(kind, d.clone(), 4).map_err(err)?).map_err(err)?;
        let mut r = rng(300 + k as u64);
        for _ in 0..10 {
            let (phi, psi) = (random_phi(&mut r, 3, -1.0, 1.0), random_phi(&mut r, 3, -1.0, 1.0));
            let res = model.commutator_residual(&phi, &psi).map_err(err)?;
            if !(res <= 1e-12) {
                return Ok((false, format!("{name}: residual {res:e}")));
            }
            worst = worst.max(res);
        }
    }
    Ok((true, format!("7 classical kinds × 10 pairs, max residual {worst:.2e} (tol 1e-12)")))
}

fn criterion_4() -> Check {
    let d = domain();
    let sigmas = [KolmogorovMeasure::dirac(0.0), KolmogorovMeasure::dirac(1.0), two_atoms()];
    let models = sigmas
        .iter()
        .map(|s| FieldModel::new(FieldSpec::new(FieldKind::FreeLevy { sigma: s.clone() }, d.clone(), 6).map_err(err)?).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = rng(400);
    let mut trace = 0.0f64;
    for t in 0..50 {
        let model = &models[t % models.len()];
        let total = r.random_range(2..=6usize);
        let split = r.random_range(1..total);
        let word: Vec<TestFunction> = (0..total).map(|_| random_phi(&mut r, 3, -1.0, 1.0)).collect();
        let ab = word.clone();
        let ba: Vec<TestFunction> = word[split..].iter().chain(&word[..split]).cloned().collect();
        let diff = (model.joint_moment(&ab).map_err(err)? - model.joint_moment(&ba).map_err(err)?).abs();
        trace = trace.max(diff);
    }

    // Fields supported on cell 0 and on cells {1, 2} are freely independent.
    let mut mixed = 0.0f64;
    for model in &models {
        for _ in 0..4 {
            let a = TestFunction::new(vec![r.random_range(-1.0..1.0), 0.0, 0.0]);
            let b = TestFunction::new(vec![0.0, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
            let (field_a, field_b) = (model.field(&a).map_err(err)?, model.field(&b).map_err(err)?);
            for n in 2..=5usize {
                // Random word with both fields present.
                let mut pattern: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
                pattern[0] = true;
                pattern[n - 1] = false;
                let k = multilinear_cumulant(n, CumulantMode::Free, |pos| {
                    let sub: Vec<&FockOperator> =
                        pos.iter().map(|&p| if pattern[p - 1] { &field_a } else { &field_b }).collect();
                    fock::vacuum_expectation(&sub)
                })
                .map_err(err)?;
                mixed = mixed.max(k.abs());
            }
        }
    }
    let pass = trace <= 1e-9 && mixed <= 1e-9;
    Ok((pass, format!("max |τ(ab)−τ(ba)| {trace:.2e} over 50 pairs, max mixed free cumulant {mixed:.2e} (tol 1e-9)")))
}

fn criterion_5() -> Check {
    let mut r = rng(500);
    let mut worst_error = 0.0f64;
    for t in 0..10 {
        let cells = r.random_range(1..=3usize);
        let vols: Vec<f64> = (0..cells).map(|_| r.random_range(0.25..2.0)).collect();
        let d = GridDomain::from_volumes(&vols).map_err(err)?;
        let atoms = r.random_range(1..=3usize);
        let mut list: Vec<(f64, f64)> = Vec::new();
        while list.len() < atoms {
            let s: f64 = r.random_range(-2.0..2.0);
            if list.iter().all(|a| (a.0 - s).abs() > 1e-3) {
                list.push((s, r.random_range(0.1..1.5)));
            }
        }
        let sigma = KolmogorovMeasure::new(list).map_err(err)?;
        let raw = random_phi(&mut r, cells, -1.0, 1.0);
        // Shrink φ when needed so that max |sφ| ≤ 0.5.
        let q = sigma.support().map(|(s, _)| s.abs()).fold(0.0, f64::max) * raw.max_abs();
        let phi = if q > 0.5 { raw.scaled(0.5 / q) } else { raw };
        let closed = free_cumulant_transform(&phi, &d, &sigma).map_err(err)?;
        // Allowance for rounding in the two sums.
        let rounding = 64.0 * f64::EPSILON * (1.0 + closed.abs());
        for n in 1..=40 {
            let partial = free_cumulant_partial_sum(&phi, &d, &sigma, n).map_err(err)?;
            let bound = free_cumulant_tail_bound(&phi, &d, &sigma, n).map_err(err)?;
            let error = (closed - partial).abs();
            if error > bound + rounding {
                return Ok((false, format!("draw {t}, N={n}: error {error:e} exceeds bound {bound:e}")));
            }
            if n == 40 {
                if !(error <= 1e-10) {
                    return Ok((false, format!("draw {t}: error after 40 terms {error:e}")));
                }
                worst_error = worst_error.max(error);
            }
        }
    }
    Ok((true, format!("10 draws, max error after 40 terms {worst_error:.2e} (tol 1e-10), tail bound held for N=1..40")))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Raw moments `0..=n_max` from classical cumulants `κ(k)`.
fn moments_from_classical_cumulants(n_max: usize, kappa: impl Fn(usize) -> f64) -> Result<Vec<f64>, String> {
    let mut out = vec![1.0];
    for n in 1..=n_max {
        out.push(moments_from_cumulants(n, CumulantMode::Classical, |b| Ok(kappa(b.len()))).map_err(err)?);
    }
    Ok(out)
}

fn criterion_6() -> Check {
    let factorial = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let gaussian = moments_from_classical_cumulants(9, |k| if k == 2 { 1.0 } else { 0.0 })?;
    let poisson = moments_from_classical_cumulants(9, |_| 1.0)?;
    // Gamma noise with α = β = 1 on a unit cell: κ_k = (k−1)!.
    let gamma = moments_from_classical_cumulants(9, |k| factorial(k - 1))?;
    let laguerre = recurrence_coefficients_from_moments(&gamma, 5).map_err(err)?;
    let sections = [
        ("hermite", JacobiMatrix::hermite(5), &gaussian),
        ("charlier", JacobiMatrix::charlier(1.0, 5), &poisson),
        ("laguerre", laguerre, &gamma),
    ];
    let mut worst = 0.0f64;
    for (name, j, target) in &sections {
        let m = j.spectral_moments(8).map_err(err)?;
        for n in 0..=8 {
            let e = relative(m[n], target[n]);
            if !(e <= 1e-8) {
                return Ok((false, format!("{name} moment {n}: {} vs {}", m[n], target[n])));
            }
            worst = worst.max(e);
        }
    }

    let mut r = rng(600);
    let mut round_trip = 0.0f64;
    for _ in 0..20 {
        let k = r.random_range(1..=6usize);
        let mut nodes: Vec<f64>;
        loop {
            nodes = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
            nodes.sort_by(f64::total_cmp);
            if nodes.windows(2).all(|w| w[1] - w[0] > 0.1) {
                break;
            }
        }
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let measure = DiscreteMeasure { nodes, weights: raw.iter().map(|w| w / total).collect() };
        let moments = measure.moments(2 * k - 1);
        let j = recurrence_coefficients_from_moments(&moments, k).map_err(err)?;
        let back = j.finite_moments(2 * k - 1);
        let mut res = moments.iter().zip(&back).map(|(a, b)| relative(*b, *a)).fold(0.0, f64::max);
        let again = recurrence_coefficients_from_moments(&back, k).map_err(err)?;
        res = res.max(again.diag().iter().zip(j.diag()).map(|(a, b)| relative(*a, *b)).fold(0.0, f64::max));
        res = res.max(again.offdiag().iter().zip(j.offdiag()).map(|(a, b)| relative(*a, *b)).fold(0.0, f64::max));
        round_trip = round_trip.max(res);
    }
    let pass = round_trip <= 1e-9;
    Ok((pass, format!("sections max rel err {worst:.2e} (tol 1e-8), round trip on 20 measures {round_trip:.2e} (tol 1e-9)")))
}

fn criterion_7() -> Check {
    let d = domain();
    const N: usize = 100_000;
    let kinds: Vec<(&str, NoiseKind, FunctionalKind, Option<SigmaKernel>)> = vec![
        ("gaussian", NoiseKind::Gaussian, FunctionalKind::Gaussian, None),
        ("poisson λ=1", NoiseKind::Poisson { lambda: 1.0 }, FunctionalKind::Poisson { lambda: 1.0 }, None),
        ("poisson λ=2", NoiseKind::Poisson { lambda: 2.0 }, FunctionalKind::Poisson { lambda: 2.0 }, None),
        (
            "levy δ₁",
            NoiseKind::Levy { sigma: KolmogorovMeasure::dirac(1.0).into(), compensated: true },
            FunctionalKind::LevyCompensated,
            Some(KolmogorovMeasure::dirac(1.0).into()),
        ),
        (
            "levy δ₁ uncompensated",
            NoiseKind::Levy { sigma: KolmogorovMeasure::dirac(1.0).into(), compensated: false },
            FunctionalKind::LevyUncompensated,
            Some(KolmogorovMeasure::dirac(1.0).into()),
        ),
        (
            "levy two atoms",
            NoiseKind::Levy { sigma: two_atoms().into(), compensated: true },
            FunctionalKind::LevyCompensated,
            Some(two_atoms().into()),
        ),
        (
            "levy two atoms uncompensated",
            NoiseKind::Levy { sigma: two_atoms().into(), compensated: false },
            FunctionalKind::LevyUncompensated,
            Some(two_atoms().into()),
        ),
    ];
    let mut r = rng(700);
    let mut worst_z = 0.0f64;
    let mut checks = 0;
    let z = |diff: f64, se: f64| if diff == 0.0 { 0.0 } else { diff / se };
    for (k, (name, noise, functional, sigma)) in kinds.iter().enumerate() {
        let samples = sampler::sample(noise, &d, RngSpec::new(SEED, k as u64), N, Execution::Parallel).map_err(err)?;
        for _ in 0..5 {
            let phi = random_phi(&mut r, 3, -1.0, 1.0);
            let est = sampler::empirical_char_functional(&samples, &phi).map_err(err)?;
            let exact = char_functional(*functional, &phi, &d, sigma.as_ref()).map_err(err)?;
            let zr = z((est.value.re - exact.re).abs(), est.stderr[0]);
            let zi = z((est.value.im - exact.im).abs(), est.stderr[1]);
            if !(zr <= SE_THRESHOLD && zi <= SE_THRESHOLD) {
                return Ok((false, format!("{name}: φ={:?} off by ({zr:.2}, {zi:.2}) SE", phi.values)));
            }
            worst_z = worst_z.max(zr).max(zi);
            checks += 1;
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let cov = sampler::empirical_covariance(&samples, a, b).map_err(err)?;
            let zc = z(cov.value.abs(), cov.stderr);
            if !(zc <= SE_THRESHOLD) {
                return Ok((false, format!("{name}: cells {a},{b} covariance {:.3e} is {zc:.2} SE from 0", cov.value)));
            }
            worst_z = worst_z.max(zc);
            checks += 1;
        }
    }
    for (alpha, beta) in [
        (CellParam::Uniform(1.0), CellParam::Uniform(1.0)),
        (CellParam::PerCell(vec![1.0, 0.5, 2.0]), CellParam::PerCell(vec![2.0, 1.0, 0.5])),
    ] {
        let noise = NoiseKind::Gamma { alpha: alpha.clone(), beta: beta.clone() };
        let samples = sampler::sample(&noise, &d, RngSpec::new(SEED, 50 + checks as u64), N, Execution::Parallel)
            .map_err(err)?;
        for _ in 0..5 {
            let phi = random_phi(&mut r, 3, 0.0, 2.0);
            let est = sampler::empirical_laplace_functional(&samples, &phi).map_err(err)?;
            let exact = gamma_laplace(&phi, &d, &alpha, &beta).map_err(err)?;
            let zl = z((est.value - exact).abs(), est.stderr);
            if !(zl <= SE_THRESHOLD) {
                return Ok((false, format!("gamma: φ={:?} off by {zl:.2} SE", phi.values)));
            }
            worst_z = worst_z.max(zl);
            checks += 1;
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let cov = sampler::empirical_covariance(&samples, a, b).map_err(err)?;
            let zc = z(cov.value.abs(), cov.stderr);
            if !(zc <= SE_THRESHOLD) {
                return Ok((false, format!("gamma: cells {a},{b} covariance is {zc:.2} SE from 0")));
            }
            worst_z = worst_z.max(zc);
            checks += 1;
        }
    }
    Ok((true, format!("{checks} checks at 1e5 samples, max deviation {worst_z:.2} SE (threshold 4)")))
}

fn criterion_8() -> Check {
    let sigmas = [
        ("δ₀", KolmogorovMeasure::dirac(0.0)),
        ("δ₁", KolmogorovMeasure::dirac(1.0)),
        ("2δ₁", KolmogorovMeasure::new(vec![(1.0, 2.0)]).unwrap()),
        ("{(1,0.5),(2,0.25)}", two_atoms()),
    ];
    let mut summary = Vec::new();
    for (name, sigma) in &sigmas {
        let c = check_moment_growth(sigma, 20).map_err(err)?;
        let mut factorial = 1.0;
        for n in 1..=20i32 {
            factorial *= n as f64;
            let m: f64 = sigma.atoms().iter().map(|(s, w)| w * s.abs().powi(n)).sum();
            if !(m <= c.powi(n) * factorial) {
                return Ok((false, format!("σ={name}, n={n}: ∫|s|ⁿdσ = {m:e} > Cⁿ n! with C = {c}")));
            }
        }
        summary.push(format!("{name}: C={c:.4}"));
    }
    Ok((true, summary.join(", ")))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("samples.jsonl");
    let text = format!(
        r#"{{"kind":"levy","sigma":{{"atoms":[[0.0,0.5],[1.0,0.5],[2.0,0.25]]}},
            "domain":{{"cells":[{{"id":0,"volume":1.0}},{{"id":1,"volume":0.5}},{{"id":2,"volume":2.0}}]}},
            "phi":[[0.3,-0.7,0.2],[1.0,0.0,-0.5]],"samples":20000,"seed":{SEED},"stream":3,"out":{:?}}}"#,
        path.to_str().unwrap()
    );
    let config = RunConfig::from_json(&text).map_err(err)?;
    let first = cmd_sample(&config).map_err(err)?;
    let first_bytes = fs::read(&path).map_err(err)?;
    let second = cmd_sample(&config).map_err(err)?;
    let second_bytes = fs::read(&path).map_err(err)?;
    let pass = first == second && first_bytes == second_bytes && !first_bytes.is_empty();
    Ok((pass, format!("{} sample bytes and {} report bytes compared", first_bytes.len(), first.report.len())))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("operator moments equal partition sums", criterion_1),
        ("CCR, free relation and adjointness", criterion_2),
        ("classical fields commute", criterion_3),
        ("traciality and free independence", criterion_4),
        ("free cumulant transform partial sums", criterion_5),
        ("Jacobi sections and moment round trips", criterion_6),
        ("statistical functional checks", criterion_7),
        ("moment-growth bound", criterion_8),
        ("sampling determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] criterion {}: {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
