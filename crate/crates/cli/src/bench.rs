//! Multiply-add counts and timings of single-layer forward passes on fully
//! connected graphs.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use modeconv::config::canonical_hash;
use modeconv::graph::SensorGraph;
use modeconv::linalg::{CMatrix, RMatrix};
use modeconv::modeconv::cheb::{cheb_forward, ChebWeights, ScaledLaplacian};
use modeconv::modeconv::fast::{modeconv_fast_forward, SplitBasis};
use modeconv::modeconv::laplace::modeconv_laplace_forward;
use modeconv::modeconv::{
    complex_svd, normalized_laplacian, ModalBasis, OpCounter, SpectralWeights,
};
use modeconv::{Error, Result, VERSION};

use crate::LayerArg;

#[derive(Debug, Clone, clap::Args)]
pub struct BenchArgs {
    /// Node counts.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "fast,cheb")]
    pub kinds: Vec<LayerArg>,
    /// Chebyshev filter size.
    #[arg(long = "cheb-size", default_value_t = 5)]
    pub cheb_size: usize,
    /// Retained modes as a fraction of the node count: `m = n / modes_divisor`.
    #[arg(long = "modes-divisor", default_value_t = 4)]
    pub modes_divisor: usize,
    /// Feature width in and out.
    #[arg(long, default_value_t = 16)]
    pub features: usize,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub layer: String,
    pub nodes: usize,
    pub edges: usize,
    /// `n(n−1)/2` for a fully connected graph.
    pub edges_expected: usize,
    /// Filter size for Chebyshev, retained modes for the complex layers.
    pub k_or_m: usize,
    pub multiply_adds: u64,
    /// Closed-form count for the same configuration.
    pub multiply_adds_analytic: u64,
    pub seconds_per_forward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub environment: Environment,
    pub rows: Vec<BenchRow>,
}

/// Fast layer: `UᴴX`, `PW`, `UQ` in split-real form plus the output mix.
pub fn fast_count(n: usize, m: usize, d_in: usize, d_out: usize, complex_input: bool) -> u64 {
    let proj = if complex_input { 4 } else { 2 } * n * m * d_in;
    (proj + 4 * m * d_in * d_out + 4 * n * m * d_out + 2 * n * d_out * d_out) as u64
}

/// Chebyshev layer with `size` terms on an operator with `nnz` stored entries.
pub fn cheb_count(n: usize, nnz: usize, size: usize, d_in: usize, d_out: usize) -> u64 {
    let props = size.saturating_sub(1);
    let combos = size.saturating_sub(2);
    (props * nnz * d_in + combos * n * d_in + size * n * d_in * d_out) as u64
}

/// Laplace layer: `XW` (real input), dense `A_norm` product, output mix.
pub fn laplace_count(n: usize, d_in: usize, d_out: usize) -> u64 {
    (2 * n * d_in * d_out + 2 * n * n * d_out + 2 * n * d_out * d_out) as u64
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Run `f` `reps` times and return its count and median wall time.
fn measure(reps: usize, mut f: impl FnMut(&mut OpCounter) -> Result<()>) -> Result<(u64, f64)> {
    let mut count = 0;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut ops = OpCounter::new();
        let t0 = Instant::now();
        f(&mut ops)?;
        times.push(t0.elapsed().as_secs_f64().max(1e-12));
        count = ops.multiply_adds;
    }
    Ok((count, median(times)))
}

pub fn run_bench(args: &BenchArgs) -> Result<BenchReport> {
    if let Some(&n) = args.sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!(
            "bench sizes must be at least 2 nodes, got {n}"
        )));
    }
    if args.repetitions == 0 || args.features == 0 || args.modes_divisor == 0 || args.cheb_size == 0
    {
        return Err(Error::Config(
            "repetitions, features, modes divisor and filter size must be positive".into(),
        ));
    }
    let d = args.features;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let graph = SensorGraph::fully_connected(n)?;
        let edges = graph.undirected_edge_count();
        let lap = normalized_laplacian(&graph, true)?;
        let x = random(n, d, &mut rng);
        for &kind in &args.kinds {
            let row = match kind {
                LayerArg::Fast => {
                    let m = (n / args.modes_divisor).max(1);
                    let a = CMatrix::from_fn(n, n, |_, _| {
                        num_complex::Complex64::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        )
                    });
                    let svd = complex_svd(&a)?;
                    let basis = SplitBasis::from(&ModalBasis {
                        u: svd.u.columns(0, m).into_owned(),
                        singular_values: svd.singular_values[..m].to_vec(),
                    });
                    let w = spectral(d, &mut rng);
                    let (ops, t) = measure(args.repetitions, |ops| {
                        modeconv_fast_forward(&x, None, &basis, &w, ops).map(|_| ())
                    })?;
                    (("fast", m), ops, fast_count(n, m, d, d, false), t)
                }
                LayerArg::Laplace => {
                    let w = spectral(d, &mut rng);
                    let (ops, t) = measure(args.repetitions, |ops| {
                        modeconv_laplace_forward(&x, None, &lap.a_norm, &w, ops).map(|_| ())
                    })?;
                    (("laplace", n), ops, laplace_count(n, d, d), t)
                }
                LayerArg::Cheb => {
                    let scaled = ScaledLaplacian::new(&lap.laplacian)?;
                    let mut w = ChebWeights::zeros(args.cheb_size - 1, d, d);
                    for th in &mut w.theta {
                        *th = random(d, d, &mut rng);
                    }
                    let (ops, t) = measure(args.repetitions, |ops| {
                        cheb_forward(&x, &scaled, &w, ops).map(|_| ())
                    })?;
                    (
                        ("cheb", args.cheb_size),
                        ops,
                        cheb_count(n, scaled.entries.len(), args.cheb_size, d, d),
                        t,
                    )
                }
            };
            let ((layer, k_or_m), multiply_adds, analytic, seconds) = row;
            rows.push(BenchRow {
                layer: layer.into(),
                nodes: n,
                edges,
                edges_expected: n * (n - 1) / 2,
                k_or_m,
                multiply_adds,
                multiply_adds_analytic: analytic,
                seconds_per_forward: seconds,
            });
        }
    }
    let settings = (
        &args.sizes,
        args.kinds
            .iter()
            .map(|k| format!("{k:?}").to_lowercase())
            .collect::<Vec<_>>(),
        args.cheb_size,
        args.modes_divisor,
        args.features,
        args.repetitions,
        args.seed,
    );
    Ok(BenchReport {
        config_hash: canonical_hash(&settings),
        environment: Environment {
            version: VERSION.into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: 1,
        },
        rows,
    })
}

fn spectral(d: usize, rng: &mut ChaCha8Rng) -> SpectralWeights {
    SpectralWeights {
        w_r: random(d, d, rng),
        w_i: random(d, d, rng),
        mix: random(2 * d, d, rng),
        bias: random(1, d, rng),
    }
}

pub fn bench_csv(r: &BenchReport) -> String {
    let mut s = String::from(
        "layer,nodes,edges,edges_expected,k_or_m,multiply_adds,multiply_adds_analytic,seconds_per_forward\n",
    );
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            row.layer,
            row.nodes,
            row.edges,
            row.edges_expected,
            row.k_or_m,
            row.multiply_adds,
            row.multiply_adds_analytic,
            row.seconds_per_forward
        );
    }
    s
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let report = run_bench(args)?;
    match &args.out {
        Some(dir) => {
            crate::write_json(&dir.join("bench.json"), &report)?;
            crate::write(&dir.join("bench.csv"), &bench_csv(&report))?;
        }
        None => print!("{}", bench_csv(&report)),
    }
    Ok(report)
}
