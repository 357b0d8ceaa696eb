mod common;

use axum::http::{Method, StatusCode};
use blockvision_core::detect::{FrameDetection, PipelineConfig};
use blockvision_core::io::{encode_png, encode_ppm};
use blockvision_core::raster::Image;
use blockvision_core::scene::{random_scene, render_scene, PerturbLevel};
use blockvision_core::session::{InstructionKind, Phase, SessionLog};
use blockvision_core::ColorCounts;
use blockvision_service::{app_state, router, Store};
use common::{create, send, tap, tap_ok};

fn app() -> axum::Router {
    router(app_state(None, PipelineConfig::default()).unwrap())
}

#[tokio::test]
async fn create_returns_await_ready() {
    let app = app();
    let (s, v) = create(&app, "{}").await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["instruction"]["kind"], "awaitReady");
    let (_, w) = create(&app, r#"{"rngSeed": 9}"#).await;
    assert_ne!(v["sessionId"], w["sessionId"]);
}

#[tokio::test]
async fn invalid_config_is_400() {
    let app = app();
    let (s, v) = create(&app, r#"{"cyclesPerHand": 0}"#).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("cyclesPerHand"));
    let (s, _) = send(&app, Method::POST, "/sessions", b"{not json".to_vec()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn taps_follow_the_protocol() {
    let app = app();
    let (_, v) = create(&app, r#"{"rngSeed": 42}"#).await;
    let id = v["sessionId"].as_str().unwrap();
    let first = tap_ok(&app, id, 1000).await;
    assert_eq!(first.kind, InstructionKind::MoveBlock);
    assert!(first.color.is_some());
    let (s, _) = tap(&app, id, 900).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = tap(&app, "nope", 5000).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, b) = send(&app, Method::GET, &format!("/sessions/{id}/instruction"), Vec::new()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&b).unwrap()["kind"], "moveBlock");
    let (s, _) = send(&app, Method::GET, &format!("/sessions/{id}/report"), Vec::new()).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn tap_after_done_is_409() {
    let app = app();
    let (_, v) = create(&app, "{}").await;
    let id = v["sessionId"].as_str().unwrap();
    let mut t = 0;
    loop {
        t += 100;
        if tap_ok(&app, id, t).await.kind == InstructionKind::Complete {
            break;
        }
    }
    let fb = tap_ok(&app, id, t + 100).await;
    assert_eq!(fb.kind, InstructionKind::Feedback);
    assert_eq!(fb.error_count, Some(0));
    let (s, _) = tap(&app, id, t + 200).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn frames_are_detected_and_keyed_to_the_move() {
    let app = app();
    let (_, v) = create(&app, "{}").await;
    let id = v["sessionId"].as_str().unwrap();
    let uri = format!("/sessions/{id}/frames");
    let spec = random_scene(5, ColorCounts::new(2, 1, 1), PerturbLevel::Clean).unwrap();
    let png = encode_png(&render_scene(&spec).unwrap()).unwrap();

    let (s, _) = send(&app, Method::POST, &uri, png.clone()).await;
    assert_eq!(s, StatusCode::CONFLICT, "no move yet");
    tap_ok(&app, id, 10).await;
    tap_ok(&app, id, 20).await;
    tap_ok(&app, id, 30).await;

    let (s, b) = send(&app, Method::POST, &uri, png).await;
    assert_eq!(s, StatusCode::OK);
    let f: FrameDetection = serde_json::from_slice(&b).unwrap();
    assert_eq!(f.frame_id, 1);
    assert_eq!(f.blocks.len(), 4);

    let (s, _) = send(&app, Method::POST, &uri, b"P6\n640 480\n255\n\x01\x02".to_vec()).await;
    assert_eq!(s, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let blank = encode_ppm(&Image::filled(640, 480, [200, 200, 200]).unwrap());
    let (s, b) = send(&app, Method::POST, &uri, blank).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let f: FrameDetection = serde_json::from_slice(&b).unwrap();
    assert!(f.aborted);
    assert!(f.abort_reason.unwrap().contains("incomplete perimeter"));
}

#[tokio::test]
async fn restart_replays_every_session() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::default();
    let (ids, states) = {
        let app = router(app_state(Some(dir.path()), cfg.clone()).unwrap());
        let mut ids = Vec::new();
        for (seed, taps) in [(1u64, 7u64), (2, 40)] {
            let (_, v) = create(&app, &format!(r#"{{"rngSeed": {seed}, "errorMode": "cumulativeLegacy"}}"#)).await;
            let id = v["sessionId"].as_str().unwrap().to_string();
            for k in 1..=taps {
                let (s, _) = tap(&app, &id, k * 250).await;
                if s != StatusCode::OK {
                    break;
                }
            }
            ids.push(id);
        }
        let store = Store::open(dir.path()).unwrap();
        let mut states = Vec::new();
        for id in &ids {
            let rec = store.get(id).unwrap();
            let rec = rec.lock().await;
            states.push((rec.session.clone(), rec.error_mode));
        }
        (ids, states)
    };

    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.ids().len(), 2);
    for (id, (session, mode)) in ids.iter().zip(&states) {
        let rec = store.get(id).unwrap();
        let rec = rec.lock().await;
        assert_eq!(&rec.session, session);
        assert_eq!(&rec.error_mode, mode);
        let text = std::fs::read_to_string(dir.path().join(id).join("events.jsonl")).unwrap();
        assert_eq!(SessionLog::from_jsonl(&text).unwrap(), session.log());
    }
    // The finished one has its report on disk.
    let done = store.get(&ids[1]).unwrap();
    let done = done.lock().await;
    assert_eq!(done.session.phase(), Phase::Done);
    assert!(done.report.is_some());
}

#[tokio::test]
async fn partial_last_line_is_dropped_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = router(app_state(Some(dir.path()), PipelineConfig::default()).unwrap());
        let (_, v) = create(&app, "{}").await;
        let id = v["sessionId"].as_str().unwrap().to_string();
        tap_ok(&app, &id, 10).await;
        id
    };
    let path = dir.path().join(&id).join("events.jsonl");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"kind\":\"moveTap\",\"timest");
    std::fs::write(&path, text).unwrap();

    let app = router(app_state(Some(dir.path()), PipelineConfig::default()).unwrap());
    let next = tap_ok(&app, &id, 20).await;
    assert!(matches!(next.kind, InstructionKind::MoveBlock | InstructionKind::AwaitReady));
    let log = SessionLog::from_jsonl(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(log.events.len(), 2);
}

#[tokio::test]
async fn feedback_is_issued_when_accuracy_is_undefined() {
    let app = app();
    let (_, v) = create(&app, r#"{"rngSeed": 5, "errorMode": "cumulativeLegacy"}"#).await;
    let id = v["sessionId"].as_str().unwrap().to_string();
    // Every frame shows far more blocks than were moved.
    let crowded = encode_png(&render_scene(&random_scene(3, ColorCounts::new(4, 4, 4), PerturbLevel::Clean).unwrap()).unwrap()).unwrap();
    let mut t = 0;
    let feedback = loop {
        t += 1000;
        let instr = tap_ok(&app, &id, t).await;
        if instr.kind == InstructionKind::Feedback {
            break instr;
        }
        // Rejected with 409 until the first move.
        send(&app, Method::POST, &format!("/sessions/{id}/frames"), crowded.clone()).await;
    };
    let (s, b) = send(&app, Method::GET, &format!("/sessions/{id}/report"), Vec::new()).await;
    assert!(feedback.error_count.unwrap() > 30);
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{}", String::from_utf8_lossy(&b));
}
