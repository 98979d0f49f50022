use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ferrojet::dno::{kernel_identity, DnoOptions, DnoSolver};
use ferrojet::solver::{
    gzcs_grid, gzcs_seed, scaled_grid, solve_pfdkdv, GzcsProblem, GzcsSpec, ReducedConfig, ResidualMap,
};
use ferrojet::spectral::{Parity, SpectralField, SpectralGrid};
use ferrojet::specfun::{f_ratio, i_scaled, k_scaled, struve_l};
use ferrojet::operators::KMode;
use ferrojet::wnl::MagnetizationLaw;

fn specfun(c: &mut Criterion) {
    let xs: Vec<f64> = (1..=200).map(|j| 0.15 * j as f64).collect();
    c.bench_function("specfun: I0,K0,L0,f on 200 points", |b| {
        b.iter(|| xs.iter().map(|&x| i_scaled(0, x) + k_scaled(0, x) + struve_l(0, x) + f_ratio(x)).sum::<f64>())
    });
}

fn greens(c: &mut Criterion) {
    c.bench_function("green's kernel identities at k=5, r=0.5", |b| b.iter(|| kernel_identity(black_box(5.0), 0.5).unwrap()));
}

fn dno(c: &mut Criterion) {
    let g = SpectralGrid::new(std::f64::consts::PI * 4.0, 128).unwrap();
    let solver = DnoSolver::new(g.clone(), DnoOptions::default()).unwrap();
    let eta = SpectralField::from_fn(&g, |z| 0.1 * (0.5 * z).cos(), Parity::Even);
    let xi = SpectralField::from_fn(&g, |z| (-(z * z) / 4.0).exp(), Parity::Even);
    c.bench_function("DNO solve, N=128", |b| b.iter(|| solver.k_eta_xi(&eta, &xi).unwrap()));
}

fn newton(c: &mut Criterion) {
    let law = MagnetizationLaw::linear();
    let g = scaled_grid().unwrap();
    let mut group = c.benchmark_group("newton");
    group.sample_size(10);
    group.bench_function("PFDKdV gamma=5 eps=0.1", |b| {
        b.iter(|| solve_pfdkdv(5.0, &law, 0.1, &g, &ReducedConfig::default()).unwrap())
    });
    group.finish();
}

fn gzcs_residual(c: &mut Criterion) {
    let (l, n) = gzcs_grid(5.0, 0.1).unwrap();
    let g = SpectralGrid::new(l, n).unwrap();
    let seed = gzcs_seed(&GzcsSpec::new(5.0, 0.1), &g).unwrap();
    let map = GzcsProblem::new(&g, 5.0, MagnetizationLaw::linear(), 2.0 * 0.99, KMode::Expansion(2)).unwrap();
    c.bench_function(&format!("full-equation residual, N={n}"), |b| b.iter(|| map.residual(&seed).unwrap()));
}

criterion_group!(benches, specfun, greens, dno, newton, gzcs_residual);
criterion_main!(benches);
