use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jacobi_fields::fields::{FieldKind, FieldModel, FieldSpec};
use jacobi_fields::measures::{GridDomain, KolmogorovMeasure, SigmaKernel, TestFunction};
use jacobi_fields::sampler::{sample, NoiseKind, RngSpec};
use jacobi_fields::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sigma() -> KolmogorovMeasure {
    KolmogorovMeasure::new(vec![(0.0, 0.5), (1.0, 0.5), (2.0, 0.25)]).unwrap()
}

fn sampling(c: &mut Criterion) {
    let domain = GridDomain::from_volumes(&[1.0, 0.5, 2.0, 1.5]).unwrap();
    let kind = NoiseKind::Levy { sigma: SigmaKernel::Uniform(sigma()), compensated: true };
    let mut group = c.benchmark_group("sample_levy_20000");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample(&kind, &domain, RngSpec::new(7, 0), 20_000, exec).unwrap())
        });
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let domain = GridDomain::from_volumes(&[1.0, 0.5, 2.0]).unwrap();
    let kind = FieldKind::Levy { sigma: SigmaKernel::Uniform(sigma()), compensated: true };
    let model = FieldModel::new(FieldSpec::new(kind, domain, 4).unwrap()).unwrap();
    let words: Vec<Vec<TestFunction>> = (0..32)
        .map(|i| {
            let t = i as f64 / 32.0;
            vec![TestFunction::new(vec![t, 1.0 - t, 0.5]); 4]
        })
        .collect();
    let mut group = c.benchmark_group("joint_moments_32_words");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| model.joint_moments(&words, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampling, moments);
criterion_main!(benches);
