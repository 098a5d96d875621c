use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use relcrowd_cli::http::{router, AppState};
use relcrowd_core::corpus::synthetic::{generate, SyntheticSpec};
use relcrowd_core::{Corpus, RelationType, SemanticQualifier};
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus() -> Corpus {
    generate(&SyntheticSpec { unanimous: 8, majority: 8, ..SyntheticSpec::default() }, 3)
}

fn app(dir: &Path) -> Router {
    let corpora = HashMap::from([("small".to_string(), corpus())]);
    router(Arc::new(AppState::open(dir, corpora).unwrap()))
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, id: &str) -> Value {
    let body = json!({
        "corpus": "small",
        "campaign_id": id,
        "config": { "sample_size": 6, "judgments_per_unit": 2, "quiz_size": 4, "test_interleave_period": 3 },
    });
    let (status, v) = call(app, Method::POST, "/campaigns", None, Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v
}

fn gold(corpus: &Corpus, unit_id: &str) -> RelationType {
    corpus.gold_for(unit_id).and_then(|g| g.published).expect("published gold")
}

fn wrong(r: RelationType) -> RelationType {
    RelationType::ALL.into_iter().find(|&x| x != r).unwrap()
}

fn judgment(assignment_id: &str, relation: RelationType) -> Value {
    let qualifier = relation.takes_qualifier().then_some(SemanticQualifier::Treats);
    json!({ "assignment_id": assignment_id, "relation": relation, "qualifier": qualifier })
}

async fn register(app: &Router, id: &str) -> (String, String) {
    let (status, v) = call(app, Method::POST, &format!("/campaigns/{id}/workers"), None, None).await;
    assert_eq!(status, StatusCode::CREATED);
    (v["worker_id"].as_str().unwrap().to_string(), v["token"].as_str().unwrap().to_string())
}

/// Registers a worker and answers the quiz, correctly or not.
async fn quiz(app: &Router, id: &str, correct: bool) -> (String, String, Value) {
    let corpus = corpus();
    let (wid, token) = register(app, id).await;
    let uri = format!("/campaigns/{id}/workers/{wid}/quiz");
    let (status, q) = call(app, Method::GET, &uri, Some(&token), None).await;
    assert_eq!(status, StatusCode::OK);
    let responses: Vec<Value> = q["questions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|item| {
            let g = gold(&corpus, item["unit"]["unit_id"].as_str().unwrap());
            let relation = if correct { g } else { wrong(g) };
            json!({ "question_id": item["question_id"], "relation": relation })
        })
        .collect();
    let (status, result) = call(app, Method::POST, &uri, Some(&token), Some(json!({ "responses": responses }))).await;
    assert_eq!(status, StatusCode::OK, "{result}");
    (wid, token, result)
}

/// Answers every assignment with gold until the worker is told there is none.
async fn work(app: &Router, id: &str, wid: &str, token: &str) -> usize {
    let corpus = corpus();
    let mut answered = 0;
    loop {
        let (status, a) =
            call(app, Method::GET, &format!("/campaigns/{id}/workers/{wid}/next"), Some(token), None).await;
        if status == StatusCode::NO_CONTENT {
            return answered;
        }
        assert_eq!(status, StatusCode::OK, "{a}");
        let body =
            judgment(a["assignment_id"].as_str().unwrap(), gold(&corpus, a["unit"]["unit_id"].as_str().unwrap()));
        let uri = format!("/campaigns/{id}/workers/{wid}/judgments");
        let (status, ack) = call(app, Method::POST, &uri, Some(token), Some(body)).await;
        assert_eq!(status, StatusCode::OK, "{ack}");
        assert_eq!(ack["status"], "accepted");
        answered += 1;
    }
}

#[tokio::test]
async fn full_campaign_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let created = create(&app, "c1").await;
    assert_eq!(created, json!({ "campaign_id": "c1", "units": 6, "quiz_size": 4, "closed": false }));

    let (w1, t1, r1) = quiz(&app, "c1", true).await;
    assert_eq!(r1, json!({ "passed": true, "accuracy": "1.0000" }));
    let (w2, t2, _) = quiz(&app, "c1", true).await;
    let first = work(&app, "c1", &w1, &t1).await;
    let second = work(&app, "c1", &w2, &t2).await;
    // 6 units at 2 judgments each, one worker per unit, plus interleaved tests.
    assert!(first >= 6 && second >= 6, "{first} {second}");

    let (status, report) = call(&app, Method::GET, "/campaigns/c1/report", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["units"], 6);
    assert_eq!(report["strict"]["fraction"], "1.0000", "{report}");

    let log = std::fs::read_to_string(dir.path().join("campaigns/c1.jsonl")).unwrap();
    let first_unit = log
        .lines()
        .find_map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["kind"] == "JudgmentSubmitted").then(|| v["payload"]["unit_id"].as_str().unwrap().to_string())
        })
        .unwrap();
    let (status, agg) =
        call(&app, Method::GET, &format!("/campaigns/c1/units/{first_unit}/aggregate"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(agg["agreement"], "1.0000");
    assert_eq!(agg["chosen"], json!(gold(&corpus(), &first_unit)));
}

#[tokio::test]
async fn failed_quiz_forbids_work() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    create(&app, "c2").await;
    let (wid, token, result) = quiz(&app, "c2", false).await;
    assert_eq!(result, json!({ "passed": false, "accuracy": "0.0000" }));
    let (status, err) = call(&app, Method::GET, &format!("/campaigns/c2/workers/{wid}/next"), Some(&token), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(err["error"], "forbidden");
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    create(&app, "c3").await;

    let (s, _) =
        call(&app, Method::POST, "/campaigns", None, Some(json!({ "corpus": "small", "campaign_id": "c3" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, Method::POST, "/campaigns", None, Some(json!({ "corpus": "nope" }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::POST, "/campaigns", None, Some(json!({ "corpus": "small", "colour": 1 }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(
        &app,
        Method::POST,
        "/campaigns",
        None,
        Some(json!({ "corpus": "small", "config": { "sample_size": 99 } })),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) =
        call(&app, Method::POST, "/campaigns", None, Some(json!({ "corpus": "small", "campaign_id": "../x" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, Method::GET, "/campaigns/zzz/report", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (wid, token) = register(&app, "c3").await;
    let next = format!("/campaigns/c3/workers/{wid}/next");
    assert_eq!(call(&app, Method::GET, &next, None, None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, Method::GET, &next, Some("bogus"), None).await.0, StatusCode::UNAUTHORIZED);
    // Pending the quiz.
    assert_eq!(call(&app, Method::GET, &next, Some(&token), None).await.0, StatusCode::FORBIDDEN);

    let quiz_uri = format!("/campaigns/c3/workers/{wid}/quiz");
    let (s, _) = call(&app, Method::POST, &quiz_uri, Some(&token), Some(json!({ "responses": [] }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (w, t, _) = quiz(&app, "c3", true).await;
    let (s, _) = call(
        &app,
        Method::POST,
        &format!("/campaigns/c3/workers/{w}/quiz"),
        Some(&t),
        Some(json!({ "responses": [] })),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (_, a) = call(&app, Method::GET, &format!("/campaigns/c3/workers/{w}/next"), Some(&t), None).await;
    let aid = a["assignment_id"].as_str().unwrap().to_string();
    let judgments = format!("/campaigns/c3/workers/{w}/judgments");
    let missing_qualifier = json!({ "assignment_id": aid, "relation": "positive" });
    let (s, _) = call(&app, Method::POST, &judgments, Some(&t), Some(missing_qualifier)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, Method::POST, &judgments, Some(&t), Some(json!({ "relation": "negative" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) =
        call(&app, Method::POST, &judgments, Some(&t), Some(judgment("a999999", RelationType::Negative))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let relation = gold(&corpus(), a["unit"]["unit_id"].as_str().unwrap());
    let (s, _) = call(&app, Method::POST, &judgments, Some(&t), Some(judgment(&aid, relation))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, e) = call(&app, Method::POST, &judgments, Some(&t), Some(judgment(&aid, relation))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["error"], "conflict");

    let (s, _) = call(&app, Method::GET, "/campaigns/c3/units/nope/aggregate", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn restart_replays_campaign_logs() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let app = app(dir.path());
        create(&app, "c4").await;
        let (wid, token, _) = quiz(&app, "c4", true).await;
        let (w2, t2, _) = quiz(&app, "c4", true).await;
        work(&app, "c4", &wid, &token).await;
        work(&app, "c4", &w2, &t2).await;
        call(&app, Method::GET, "/campaigns/c4/report", None, None).await.1
    };
    let app = app(dir.path());
    let (status, after) = call(&app, Method::GET, "/campaigns/c4/report", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    // Worker ids continue from the log.
    let (wid, _) = register(&app, "c4").await;
    assert_eq!(wid, "w0003");
}
