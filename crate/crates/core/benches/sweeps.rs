use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use optomech_squeeze::output::detection_map;
use optomech_squeeze::sde::{simulate, SimConfig};
use optomech_squeeze::sweep::{mirror_point, run_sweep, SweepSpec, MIRROR_COLUMNS};
use optomech_squeeze::{build_drift, solve_steady_state, Execution, SystemParams};
use std::f64::consts::PI;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn gain_sweep(c: &mut Criterion) {
    let base = SystemParams::default().with_theta(PI / 16.0);
    let spec = SweepSpec::new("sweep-gain", "gain", 0.0, 0.49, 16, base).unwrap();
    let mut group = c.benchmark_group("gain_sweep_16");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(&spec, MIRROR_COLUMNS, exec, mirror_point))
        });
    }
    group.finish();
}

fn detection(c: &mut Criterion) {
    let p = SystemParams::default().with_gain(0.49).with_theta(PI / 16.0);
    let ss = solve_steady_state(&p).unwrap();
    let omegas: Vec<f64> = (0..64).map(|i| -0.1 + 0.2 * i as f64 / 63.0).collect();
    let phis: Vec<f64> = (0..32).map(|i| PI * i as f64 / 31.0).collect();
    let mut group = c.benchmark_group("detection_map_64x32");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| detection_map(&omegas, &phis, &ss, &p, exec).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let p = SystemParams::default().with_gamma_m(0.1).with_cooperativity(5.0).with_gain(0.3);
    let ss = solve_steady_state(&p).unwrap();
    let dm = build_drift(&ss, &p);
    let cfg = SimConfig::auto(&dm, 20.0, 8, 1);
    let mut group = c.benchmark_group("sde_8_trajectories");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| simulate(&dm, &cfg, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gain_sweep, detection, oracle);
criterion_main!(benches);
