//! Runs a small robustness sweep against the memorizer fixture over a
//! in-process adapter, stores the run directory and prints
//! the report table.
//!
//!     cargo run --example sweep_report [-- OUT_DIR]

use std::sync::Arc;

use clinperturb::harness::report::render_table;
use clinperturb::harness::{run_matrix, MatrixConfig, Memorizer, RunDir, SystemAdapter};
use clinperturb::perturb::Method;
use clinperturb::resources::Resources;
use clinperturb::synthetic::bundled_test;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("clinperturb-sweep").display().to_string());
    let test = bundled_test();
    let conn = SystemAdapter::in_process(Arc::new(Memorizer::new(&test)), "memorizer").connect().expect("connect");
    let cfg = MatrixConfig {
        methods: vec![Method::CharDelete, Method::CharSwap, Method::Cmw, Method::WordRepeat],
        pps: vec![1, 2, 4],
        ..MatrixConfig::new("synthetic")
    };
    let outcome = run_matrix(&conn, &test, &Resources::bundled(), &cfg).expect("sweep");
    let dir = RunDir::new(&out);
    dir.write(&outcome.manifest, &outcome.runs).expect("write run dir");
    print!("{}", render_table(&outcome.reports));
    println!("{} runs written to {out}", outcome.runs.len());
}
