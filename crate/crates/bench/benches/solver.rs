use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wso_bench::training_set;
use wso_core::kernels::KernelSpec;
use wso_core::qp::{self, SolverOptions};
use wso_core::wso::assemble_dual;

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual_solve");
    group.sample_size(10);
    for n in [10, 25, 50] {
        let ts = training_set(n, 20, 3);
        for (name, kernel) in [("linear", KernelSpec::Linear), ("gaussian", KernelSpec::gaussian(0.05).unwrap())] {
            let qp = assemble_dual(&ts, &kernel, 1.0, 1.0).unwrap();
            group.bench_with_input(BenchmarkId::new(name, qp.dim()), &qp, |b, qp| {
                b.iter(|| qp::solve(qp, &SolverOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, solve);
criterion_main!(benches);
