//! Perturbs the bundled synthetic corpus with every method and prints how
//! many samples each method could touch.
//!
//!     cargo run --example perturb_corpus [-- PPS SEED]

use clinperturb::corpus::Task;
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec};
use clinperturb::resources::Resources;
use clinperturb::synthetic::bundled_test;

fn main() {
    let mut args = std::env::args().skip(1);
    let pps: usize = args.next().map_or(1, |a| a.parse().expect("PPS"));
    let seed: u64 = args.next().map_or(42, |a| a.parse().expect("SEED"));
    let res = Resources::bundled();
    let corpus = bundled_test();
    println!("{:<12} {:>6} {:>6} {:>6} {:>6}   (perturbed / not applicable per task, pps={pps})", "method", "ner", "re", "ti", "ss");
    for method in Method::ALL {
        let spec = PerturbationSpec::new(method, pps, seed).expect("pps >= 1");
        let out = perturb_corpus(&corpus, &spec, &res, 0);
        let cell = |task: Task| {
            let ok = out.perturbed.iter().filter(|p| p.noisy.task() == task).count();
            let na = out.not_applicable.iter().filter(|n| n.id.starts_with(task.as_str())).count();
            format!("{ok}/{na}")
        };
        println!(
            "{:<12} {:>6} {:>6} {:>6} {:>6}",
            method.name(),
            cell(Task::Ner),
            cell(Task::Re),
            cell(Task::Ti),
            cell(Task::Ss)
        );
    }
}
