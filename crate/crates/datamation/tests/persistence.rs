//! State that survives a restart over the same data directory.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use datamation::http::{router, AppState, DOC_ID_HEADER};
use datamation::DataDir;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn boot(dir: &std::path::Path) -> Router {
    router(Arc::new(AppState::open(DataDir::open(dir).unwrap()).unwrap()))
}

async fn call(app: &Router, method: Method, uri: &str, body: String) -> (StatusCode, Option<String>, String) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let doc_id = res.headers().get(DOC_ID_HEADER).map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, doc_id, String::from_utf8(bytes.to_vec()).unwrap())
}

fn field(text: &str, key: &str) -> String {
    let v: Value = serde_json::from_str(text).unwrap();
    v[key].as_str().unwrap().to_string()
}

#[tokio::test]
async fn sessions_docs_and_corrections_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let query = "which cars from 1980 have fewer than 6 cylinders and the best mpg?";

    let (dataset, session, doc_id, doc_text, view) = {
        let app = boot(dir.path());
        let (_, _, body) = call(&app, Method::POST, "/datasets?name=cars", fixture("cars.csv")).await;
        let dataset = field(&body, "id");
        let (_, _, body) = call(&app, Method::POST, "/sessions", json!({ "dataset_id": dataset }).to_string()).await;
        let session = field(&body, "session_id");
        let (_, _, body) = call(&app, Method::POST, &format!("/sessions/{session}/decompose"), json!({ "query": query }).to_string()).await;
        let original = field(&body, "script");
        let (status, _, _) = call(
            &app,
            Method::POST,
            &format!("/sessions/{session}/feedback"),
            json!({ "original": original, "corrected": fixture("cars_1980_corrected.qdmr") }).to_string(),
        )
        .await;
        assert_eq!(status, StatusCode::NO_CONTENT);
        let insert = json!({ "version": 1, "edit": "insert_op", "payload": { "at": 7, "op": "AGGREGATE(count, #6)" } });
        let (status, doc_id, doc_text) = call(&app, Method::PATCH, &format!("/sessions/{session}/pipeline"), insert.to_string()).await;
        assert_eq!(status, StatusCode::OK, "{doc_text}");
        let (_, _, view) = call(&app, Method::GET, &format!("/sessions/{session}"), String::new()).await;
        (dataset, session, doc_id.unwrap(), doc_text, view)
    };

    let app = boot(dir.path());
    let (status, _, again) = call(&app, Method::GET, &format!("/sessions/{session}"), String::new()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, view);

    let (_, _, stored) = call(&app, Method::GET, &format!("/datamations/{doc_id}"), String::new()).await;
    assert_eq!(stored, doc_text);
    let (_, _, recompiled) = call(&app, Method::POST, &format!("/sessions/{session}/compile"), String::new()).await;
    assert_eq!(recompiled, doc_text);

    let (_, _, body) = call(&app, Method::POST, "/sessions", json!({ "dataset_id": dataset }).to_string()).await;
    let fresh = field(&body, "session_id");
    let (_, _, body) = call(&app, Method::POST, &format!("/sessions/{fresh}/decompose"), json!({ "query": query }).to_string()).await;
    assert_eq!(field(&body, "script").lines().count(), 8);
}

#[test]
fn stored_documents_are_byte_identical_on_reload() {
    let dir = tempfile::tempdir().unwrap();
    let data = DataDir::open(dir.path()).unwrap();
    let table = datamation::read_table(fixture("flights.csv").as_bytes(), "flights", &Default::default()).unwrap();
    let p = datamation_core::parse_pipeline(&fixture("flights_max_passengers.qdmr")).unwrap();
    let doc = datamation_core::compile_datamation(&p, &table, &Default::default()).unwrap();
    let (id, text) = data.put_doc(&doc).unwrap();
    let loaded = data.load_doc(&id).unwrap();
    assert_eq!(datamation::canonical_json(&loaded).unwrap(), text);
    let (again, _) = data.put_doc(&loaded).unwrap();
    assert_eq!(again, id);
    assert_eq!(data.doc_text(&id).unwrap(), text);
}
