mod common;

use std::collections::BTreeMap;

use clinperturb::corpus::Sample;
use clinperturb::curation::{CurationServer, Part, Store};
use clinperturb::perturb::rng::SplitMix64;
use clinperturb::perturb::{perturb_corpus, Method, PerturbationSpec, PerturbedSample};
use common::{corpus, fleiss_by_pairs, res, review_session, sample_path, Api};
use serde_json::{json, Value};

fn perturbed(method: Method, n: usize) -> Vec<PerturbedSample> {
    let spec = PerturbationSpec::new(method, 1, 42).unwrap();
    perturb_corpus(corpus(), &spec, res(), 0).perturbed.into_iter().take(n).collect()
}

fn enqueue_body(samples: &[PerturbedSample]) -> Value {
    json!({
        "dataset": "synthetic",
        "samples": samples.iter().map(PerturbedSample::to_json).collect::<Vec<_>>(),
        "originals": corpus().iter().map(Sample::to_json).collect::<Vec<_>>(),
    })
}

fn decide(api: &Api, key: &str, rater: &str, body: Value) -> common::ApiReply {
    api.post(&format!("{}/decision", sample_path(key)), Some(rater), &body)
}

#[test]
fn scripted_review_session() {
    let summary = review_session().unwrap_or_else(|e| panic!("{e}"));
    assert!(summary.contains("export 40"));
}

#[test]
fn sample_detail_shows_the_diff() {
    let server = CurationServer::start(Store::in_memory(), "127.0.0.1:0", None).unwrap();
    let api = Api::new(&server.url);
    let items = perturbed(Method::WordDelete, 3);
    api.post("/api/enqueue", None, &enqueue_body(&items));
    let d = api.get(&sample_path(&items[0].key())).json();
    assert_eq!(d["id"], items[0].key().as_str());
    assert_eq!(d["status"], "pending");
    assert_eq!(d["meaning_risk"], true);
    assert_eq!(d["original"]["id"], d["noisy"]["id"]);
    assert_ne!(d["original"], d["noisy"]);
    assert_eq!(d["edits"].as_array().unwrap().len(), items[0].edits.len());
    assert_eq!(api.get("/api/queue?method=word-delete&status=pending").json()["count"], 3);
    assert_eq!(api.get("/api/queue?method=lcc").json()["count"], 0);
    assert_eq!(api.get("/api/queue?status=bogus").status, 400);
}

#[test]
fn conflicts_and_adjudication() {
    let server = CurationServer::start(Store::in_memory(), "127.0.0.1:0", None).unwrap();
    let api = Api::new(&server.url);
    let items = perturbed(Method::Negation, 2);
    let safe = perturbed(Method::CharSwap, 1);
    let r = api.post("/api/enqueue", None, &enqueue_body(&items)).json();
    assert_eq!(r["pending"], 2);
    let r = api.post("/api/enqueue", None, &enqueue_body(&safe)).json();
    assert_eq!((r["pending"].as_u64(), r["not_required"].as_u64()), (Some(0), Some(1)));
    assert_eq!(api.post("/api/enqueue", None, &enqueue_body(&items)).json()["duplicates"], 2);

    let key = items[0].key();
    assert_eq!(decide(&api, &key, "a", json!({ "status": "accepted", "revision": 0 })).status, 200);
    // a stale revision is refused
    let stale = decide(&api, &key, "a", json!({ "status": "excluded", "revision": 0 }));
    assert_eq!((stale.status, stale.json()["error"].as_str()), (409, Some("conflict")));
    // a second reviewer may not overwrite the decision of record
    let other = decide(&api, &key, "b", json!({ "status": "excluded" }));
    assert_eq!(other.status, 409);
    assert!(other.body.contains("already decided by a"));
    // the same reviewer may revise
    assert_eq!(decide(&api, &key, "a", json!({ "status": "excluded", "revision": 1 })).status, 200);
    // an adjudicator overrides
    let adj = decide(&api, &key, "lead", json!({ "status": "accepted", "role": "adjudicator" })).json();
    assert_eq!((adj["status"].as_str(), adj["revision"].as_u64()), (Some("accepted"), Some(3)));
    assert_eq!(adj["decision"]["status"], "excluded");
    assert_eq!(adj["adjudicated"]["reviewer"], "lead");

    assert_eq!(decide(&api, &safe[0].key(), "a", json!({ "status": "accepted" })).status, 409);
    assert_eq!(decide(&api, "nope@x", "a", json!({ "status": "accepted" })).status, 404);
    assert_eq!(decide(&api, &items[1].key(), "", json!({ "status": "accepted" })).status, 422);
    assert_eq!(decide(&api, &items[1].key(), "a", json!({ "status": "maybe" })).status, 400);
    let bad = decide(&api, &items[1].key(), "a", json!({ "status": "accepted", "revised_label": "neutral" }));
    assert_eq!(bad.status, 422);
    // reviewer id may come from the body instead of the header
    let r = api.post(
        &format!("{}/decision", sample_path(&items[1].key())),
        None,
        &json!({ "status": "accepted", "reviewer": "c" }),
    );
    assert_eq!(r.json()["decision"]["reviewer"], "c");
}

#[test]
fn quota_pauses_enqueueing() {
    let server = CurationServer::start(Store::in_memory(), "127.0.0.1:0", None).unwrap();
    let api = Api::new(&server.url);
    let q = api.post("/api/quota", None, &json!({ "method": "rws", "dataset": "synthetic", "target": 2 })).json();
    assert_eq!((q["target"].as_u64(), q["count"].as_u64(), q["paused"].as_bool()), (Some(2), Some(0), Some(false)));
    let items = perturbed(Method::Rws, 5);
    api.post("/api/enqueue", None, &enqueue_body(&items[..3]));
    for p in &items[..2] {
        assert_eq!(decide(&api, &p.key(), "a", json!({ "status": "accepted" })).status, 200);
    }
    let q = api.get("/api/progress?method=rws&dataset=synthetic").json();
    assert_eq!((q["count"].as_u64(), q["remaining"].as_u64(), q["paused"].as_bool()), (Some(2), Some(0), Some(true)));
    assert_eq!(q["progress"], 1.0);
    let r = api.post("/api/enqueue", None, &enqueue_body(&items[3..])).json();
    assert_eq!((r["paused"].as_u64(), r["pending"].as_u64()), (Some(2), Some(0)));
    let all = api.get("/api/progress").json();
    assert_eq!(all["quotas"].as_array().unwrap().len(), 1);
    assert_eq!(api.get("/api/progress?method=negation&dataset=synthetic").status, 404);
    assert_eq!(api.post("/api/quota", None, &json!({ "method": "rws" })).status, 400);
}

fn rate_all(api: &Api, items: &[Value], raters: usize, rng: &mut SplitMix64, skew: u64) -> Vec<Vec<usize>> {
    let cats = ["same-meaning", "changed-meaning", "not-understandable"];
    let mut matrix = Vec::new();
    for item in items {
        let mut row = vec![0; 3];
        for r in 0..raters {
            let roll = rng.next_u64() % 10;
            let c = if roll < skew { 0 } else { (roll % 3) as usize };
            row[c] += 1;
            let reply = api.post(
                "/api/ratings",
                Some(&format!("rater-{r}")),
                &json!({ "sample": item["sample"], "category": cats[c] }),
            );
            assert_eq!(reply.status, 201, "{}", reply.body);
        }
        matrix.push(row);
    }
    matrix
}

#[test]
fn questionnaire_ratings_and_kappa() {
    let server = CurationServer::start(Store::in_memory(), "127.0.0.1:0", None).unwrap();
    let api = Api::new(&server.url);
    let mut items = Vec::new();
    for m in Method::ALL {
        items.extend(perturbed(m, 12));
    }
    api.post("/api/enqueue", None, &enqueue_body(&items));
    let q = api.get("/api/questionnaire?low=30&high=20&seed=7").json();
    let q = q["items"].as_array().unwrap().clone();
    let (low, high): (Vec<Value>, Vec<Value>) = q.into_iter().partition(|i| i["part"] == "low-risk");
    assert_eq!((low.len(), high.len()), (30, 20));
    // stratified: every method of a part appears, none more than once over its share
    let mut per_method: BTreeMap<String, usize> = BTreeMap::new();
    for i in low.iter().chain(&high) {
        *per_method.entry(i["method"].as_str().unwrap().to_string()).or_default() += 1;
    }
    assert_eq!(per_method.len(), 16);
    assert!(high.iter().all(|i| i["method"].as_str().unwrap().parse::<Method>().unwrap().is_meaning_risk()));
    assert!(per_method.iter().all(|(m, n)| if m.parse::<Method>().unwrap().is_meaning_risk() { *n == 5 } else { *n <= 3 }));
    assert_eq!(api.get("/api/questionnaire?low=30&high=20&seed=7").json()["items"], json!(low.iter().chain(&high).collect::<Vec<_>>()));

    assert_eq!(api.get("/api/stats?part=low-risk").status, 422);
    let mut rng = SplitMix64::new(11);
    let low_matrix = rate_all(&api, &low, 3, &mut rng, 7);
    let high_matrix = rate_all(&api, &high, 3, &mut rng, 3);
    let dup = api.post("/api/ratings", Some("rater-0"), &json!({ "sample": low[0]["sample"], "category": "same-meaning" }));
    assert_eq!(dup.status, 409);

    for (part, matrix) in [("low-risk", &low_matrix), ("high-risk", &high_matrix)] {
        let s = api.get(&format!("/api/stats?part={part}")).json();
        assert_eq!(s["raters"], 3);
        assert_eq!(s["samples"].as_u64().unwrap() as usize, matrix.len());
        let kappa = s["kappa"].as_f64().unwrap();
        assert!((kappa - fleiss_by_pairs(matrix)).abs() < 1e-12, "{part}: {kappa}");
        let pct: f64 = s["percentages"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
        assert!((pct - 100.0).abs() < 1e-9);
        assert!(s["band"].is_string());
    }
    assert_eq!(api.get("/api/stats").status, 400);

    // a rater missing one sample makes the part incomplete
    let extra = api.post("/api/ratings", Some("rater-9"), &json!({ "sample": low[0]["sample"], "category": "same-meaning" }));
    assert_eq!(extra.status, 201);
    assert_eq!(api.get("/api/stats?part=low-risk").status, 422);
    let part = server.store.read().unwrap().ratings().iter().filter(|r| r.part == Part::HighRisk).count();
    assert_eq!(part, 60);
}

#[test]
fn store_replays_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let items = perturbed(Method::WordOrder, 120);
    let dump = {
        let server = CurationServer::start(Store::open(dir.path()).unwrap(), "127.0.0.1:0", None).unwrap();
        let api = Api::new(&server.url);
        api.post("/api/enqueue", None, &enqueue_body(&items));
        for (i, p) in items.iter().enumerate() {
            let status = ["accepted", "excluded", "accepted"][i % 3];
            decide(&api, &p.key(), "a", json!({ "status": status, "timestamp": 1000 + i }));
        }
        api.post("/api/ratings", Some("r1"), &json!({ "sample": items[0].key(), "category": "same-meaning" }));
        let dump = server.store.read().unwrap().dump();
        assert_eq!(dump["events"], 241);
        dump
    };
    // 241 events: one snapshot at 200 plus 41 logged after it
    assert!(dir.path().join("snapshot.json").exists());
    assert_eq!(std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap().lines().count(), 241);
    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(reopened.dump(), dump);

    // replay of the log alone gives the same state
    std::fs::remove_file(dir.path().join("snapshot.json")).unwrap();
    let replayed = Store::open(dir.path()).unwrap();
    assert_eq!(replayed.dump(), dump);
    assert_eq!(replayed.export(Some(Method::WordOrder), None).len(), 80);
}

#[test]
fn unknown_routes_and_placeholder_ui() {
    let server = CurationServer::start(Store::in_memory(), "127.0.0.1:0", None).unwrap();
    let api = Api::new(&server.url);
    assert_eq!(api.get("/api/nothing").status, 404);
    assert_eq!(api.get("/elsewhere").status, 404);
    let home = api.get("/");
    assert_eq!(home.status, 200);
    assert!(home.body.contains("/api/"));
    assert_eq!(api.post("/api/enqueue", None, &json!({})).status, 400);

    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<p>review</p>").unwrap();
    let with_ui = CurationServer::start(Store::in_memory(), "127.0.0.1:0", Some(ui.path().into())).unwrap();
    let api = Api::new(&with_ui.url);
    assert_eq!(api.get("/samples/anything").body, "<p>review</p>");
    assert_eq!(api.get("/api/queue").status, 200);
}
