//! Builds a questionnaire from the reviewed negation and char-swap samples,
//! records ratings from three simulated raters and prints agreement per part.
//!
//!     cargo run --example rating_stats

use clinperturb::curation::{Category, Part, QuestionnaireConfig, Rating, Store};
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec};
use clinperturb::resources::Resources;
use clinperturb::synthetic::bundled_test;

fn main() {
    let test = bundled_test();
    let res = Resources::bundled();
    let mut store = Store::in_memory();
    for m in Method::ALL {
        let set = perturb_corpus(&test, &PerturbationSpec::new(m, 1, 42).unwrap(), &res, 0);
        store.enqueue("synthetic", &set.perturbed[..set.perturbed.len().min(20)], &test).expect("enqueue");
    }
    let items = store.questionnaire(&QuestionnaireConfig::default());
    println!("{} questionnaire items", items.len());
    for (i, item) in items.iter().enumerate() {
        for rater in ["r1", "r2", "r3"] {
            // mostly agreement on the low-risk part, more splits on the rest
            let category = match (item.part, rater, i % 3) {
                (Part::LowRisk, "r2", _) if i % 5 == 0 => Category::ChangedMeaning,
                (Part::LowRisk, _, _) => Category::SameMeaning,
                (Part::HighRisk, "r3", 0) => Category::SameMeaning,
                (Part::HighRisk, _, 2) => Category::NotUnderstandable,
                _ => Category::ChangedMeaning,
            };
            let r = Rating { rater: rater.into(), sample: item.sample.clone(), category, part: item.part };
            store.record_rating(r).expect("rating");
        }
    }
    for part in [Part::LowRisk, Part::HighRisk] {
        let s = store.rating_stats(part).expect("stats");
        let kappa = s.kappa.map_or_else(|| s.kappa_undefined.clone().unwrap_or_default(), |k| format!("{k:.3}"));
        println!("{:<9} n={:<3} kappa {kappa} {:?} {:?}", part.as_str(), s.samples, s.band, s.counts);
    }
}
