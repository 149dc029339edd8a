//! Starts the curation API on an in-memory store, enqueues negated samples,
//! records a few decisions over HTTP and prints progress and the export.
//!
//!     cargo run --example curation_session [-- --serve]
//!
//! With `--serve` the server keeps running so the API can be explored with
//! curl; otherwise it exits after the scripted session.

use clinperturb::curation::{CurationServer, Store};
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec};
use clinperturb::resources::Resources;
use clinperturb::synthetic::bundled_test;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde_json::{json, Value};

fn main() {
    let serve = std::env::args().any(|a| a == "--serve");
    let test = bundled_test();
    let set = perturb_corpus(&test, &PerturbationSpec::new(Method::Negation, 1, 42).unwrap(), &Resources::bundled(), 0);
    let mut store = Store::in_memory();
    let added = store.enqueue("synthetic", &set.perturbed[..12], &test).expect("enqueue");
    println!("enqueued: {added:?}");

    let server = CurationServer::start(store, "127.0.0.1:0", None).expect("bind");
    println!("curation API on {}", server.url);
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let get = |path: &str| -> String {
        agent.get(format!("{}{path}", server.url)).call().unwrap().body_mut().read_to_string().unwrap()
    };
    let queue: Value = serde_json::from_str(&get("/api/queue?status=pending")).unwrap();
    let keys: Vec<&str> = queue["items"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    for (i, key) in keys.iter().enumerate() {
        let status = if i % 4 == 3 { "excluded" } else { "accepted" };
        let path = format!("{}/api/samples/{}/decision", server.url, utf8_percent_encode(key, NON_ALPHANUMERIC));
        let reply = agent.post(path).send(json!({ "reviewer": "r1", "status": status }).to_string()).unwrap();
        println!("  {key} -> {status} ({})", reply.status());
    }
    println!("progress: {}", get("/api/progress?method=negation&dataset=synthetic"));
    println!("export: {} reviewed samples", get("/api/export?method=negation").lines().count());
    if serve {
        server.wait();
    }
}
