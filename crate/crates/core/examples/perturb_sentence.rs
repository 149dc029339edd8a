//! Applies one method to a single sentence and prints the edit log.
//!
//!     cargo run --example perturb_sentence -- negation "She developed hypotension." [PPS] [SEED]

use clinperturb::corpus::{Payload, Sample};
use clinperturb::perturb::{perturb_sample, Method, PerturbationSpec};
use clinperturb::resources::Resources;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let method: Method = args.first().map_or("char-delete", String::as_str).parse().unwrap_or_else(|e| panic!("{e}"));
    let text = args.get(1).cloned().unwrap_or_else(|| "Patient was agreeable to speaking with social work.".into());
    let pps = args.get(2).map_or(1, |a| a.parse().expect("PPS"));
    let seed = args.get(3).map_or(42, |a| a.parse().expect("SEED"));
    let sample = Sample {
        id: "example".into(),
        payload: Payload::Re { text, entities: vec![], label: "none".into() },
        extra: Default::default(),
    };
    let spec = PerturbationSpec::new(method, pps, seed).expect("pps >= 1");
    match perturb_sample(&sample, &spec, &Resources::bundled()) {
        Ok(p) => {
            if let Payload::Re { text, .. } = &p.noisy.payload {
                println!("{text}");
            }
            for e in &p.edits {
                println!("  token {:>2}: {:?} -> {:?}", e.location.token, e.before, e.after);
            }
        }
        Err(na) => println!("{na}"),
    }
}
