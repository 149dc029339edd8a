//! Scores a few hand-made predictions with each task metric and runs a paired
//! t-test over two systems' per-run scores.
//!
//!     cargo run --example compute_metrics

use clinperturb::corpus::BioTag;
use clinperturb::metrics::{accuracy, entity_f1, format2, micro_f1, paired_ttest, pearson};

fn tags(s: &str) -> Vec<BioTag> {
    s.split_whitespace().map(|t| t.parse().expect("BIO tag")).collect()
}

fn main() {
    let gold = vec![tags("B-problem I-problem O O B-test"), tags("O B-treatment O")];
    let pred = vec![tags("B-problem I-problem O O O"), tags("O B-treatment O")];
    println!("NER entity F1   {:.4}", entity_f1(&pred, &gold).unwrap());

    let classes = ["TrIP", "TrAP", "PIP", "none"];
    let (g, p) = (["TrAP", "PIP", "none", "TrIP"], ["TrAP", "none", "none", "TrIP"]);
    println!("RE micro F1     {:.4}", micro_f1(&p, &g, &classes).unwrap());
    println!("TI accuracy     {:.4}", accuracy(&["yes", "no", "no"], &["yes", "no", "yes"]).unwrap());
    println!("SS Pearson      {:.4}", pearson(&[0.5, 2.0, 3.5, 4.0], &[1.0, 2.5, 3.0, 4.5]).unwrap());

    // same five seeds, clean vs perturbed
    let clean = [0.871, 0.866, 0.874, 0.869, 0.872];
    let noisy = [0.812, 0.820, 0.809, 0.815, 0.818];
    let t = paired_ttest(&clean, &noisy).unwrap();
    println!("paired t        t={:.3} df={} p={:.2e}", t.t, t.df, t.p_two_tailed);
    println!("shown as        {}", format2(-100.0 * t.mean_diff));
}
