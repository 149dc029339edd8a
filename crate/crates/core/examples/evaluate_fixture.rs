//! Serves the perceptron fixture over HTTP and evaluates it on the clean
//! synthetic test set and one perturbed copy, through the same adapter a real
//! system would use.
//!
//!     cargo run --example evaluate_fixture [-- METHOD PPS]

use std::sync::Arc;

use clinperturb::corpus::Task;
use clinperturb::harness::fixtures::HttpFixture;
use clinperturb::harness::matrix::{score_clean, score_perturbed};
use clinperturb::harness::{Perceptron, SystemAdapter};
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec};
use clinperturb::resources::Resources;
use clinperturb::synthetic::{bundled_test, bundled_train};

fn main() {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().map_or("cmw", |a| a.leak()).parse().unwrap_or_else(|e| panic!("{e}"));
    let pps: usize = args.next().map_or(2, |a| a.parse().expect("PPS"));

    let fixture = HttpFixture::start(Arc::new(Perceptron::train(&bundled_train())), "127.0.0.1:0").expect("bind");
    let conn = SystemAdapter::parse(&fixture.url).expect("adapter").connect().expect("handshake");
    println!("connected to {} (tasks {:?})", fixture.url, conn.tasks());

    let test = bundled_test();
    let spec = PerturbationSpec::new(method, pps, 42).expect("pps >= 1");
    let set = perturb_corpus(&test, &spec, &Resources::bundled(), 0);
    let clean = score_clean(&conn, "synthetic", &test).expect("clean run");
    let noisy = score_perturbed(&conn, "synthetic", method, pps, &set.perturbed, &Default::default(), true)
        .expect("perturbed run");
    for task in Task::ALL {
        let c = clean.iter().find(|r| r.task == task).and_then(|r| r.score);
        let n = noisy.iter().find(|r| r.task == task).and_then(|r| r.score);
        println!("{:<4} clean {:>7.4}  {method} pps={pps} {:>7.4}", task.as_str(), c.unwrap_or(f64::NAN), n.unwrap_or(f64::NAN));
    }
}
