//! Instance generators, matrix files, regularization-path sweeps and the
//! synthetic benchmark.

pub mod bench;
pub mod io;
pub mod path;
pub mod synth;

pub use bench::{run_benchmark, write_bench_csv, BenchConfig, BenchRow, Method};
pub use io::{read_matrix, write_matrix};
pub use path::{reg_path_sweep, sparsity_transition, PathRow, RegPath};
pub use synth::{gen_synthetic, toy_problem, Rng, SyntheticSpec};
