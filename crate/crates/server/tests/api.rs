mod common;

use std::time::Duration;

use common::*;
use reqwest::multipart::{Form, Part};
use reqwest::{Client, StatusCode};
use sensordash::api::GraphPayload;
use sensordash::{start, ServeError, ServiceConfig};
use sensordash_core::alert::SinkConfig;
use sensordash_core::{SensorType, TimeRange};
use serde_json::{json, Value};

const SECOND: Duration = Duration::from_secs(1);

fn with_file_sink(dir: &tempfile::TempDir) -> ServiceConfig {
    ServiceConfig {
        sinks: vec![SinkConfig::File {
            path: dir.path().join("alerts.jsonl"),
        }],
        ..ServiceConfig::ephemeral()
    }
}

async fn get_json(url: &str) -> (StatusCode, Value) {
    let resp = reqwest::get(url).await.unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap_or(Value::Null))
}

/// Sends readings and waits until the store holds all of them.
async fn ingest(handle: &sensordash::ServiceHandle, readings: &[sensordash_core::SensorReading]) {
    let sender = Sender::new(handle.udp_addr).await;
    for r in readings {
        sender.send(r).await;
    }
    let pipeline = handle.pipeline.clone();
    let want = readings.len();
    eventually(SECOND, || {
        let pipeline = pipeline.clone();
        async move {
            let store = pipeline.store();
            let have: usize = store.keys().iter().filter_map(|k| store.len(k)).sum();
            (have >= want).then_some(())
        }
    })
    .await
    .expect("readings stored within 1 s");
}

#[tokio::test]
async fn healthz_and_empty_sensor_list() {
    let started = tokio::time::Instant::now();
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let (status, body) = get_json(&format!("{base}/healthz")).await;
    assert_eq!(status, 200);
    assert!(started.elapsed() < SECOND);
    assert_eq!(body["status"], "ok");
    let (status, body) = get_json(&format!("{base}/sensors")).await;
    assert_eq!(status, 200);
    assert_eq!(body, json!([]));
    handle.shutdown().await;
}

#[tokio::test]
async fn equal_ports_fail_startup() {
    let config = ServiceConfig {
        listen_udp: "127.0.0.1:47123".into(),
        listen_http: "127.0.0.1:47123".into(),
        ..ServiceConfig::ephemeral()
    };
    let err = start(config).await.err().expect("startup fails");
    assert!(matches!(err, ServeError::Config(_)));
    assert!(err.is_config());
}

#[tokio::test]
async fn occupied_port_is_a_runtime_error() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let config = ServiceConfig {
        listen_http: taken.local_addr().unwrap().to_string(),
        ..ServiceConfig::ephemeral()
    };
    let err = start(config).await.err().expect("bind fails");
    assert!(matches!(err, ServeError::Bind { .. }));
    assert!(!err.is_config());
}

#[tokio::test]
async fn ingested_reading_is_listed_and_queryable() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    ingest(&handle, &[reading("n1", SensorType::Temperature, 0, 1_000, 24.5)]).await;
    let (_, body) = get_json(&format!("{base}/sensors")).await;
    assert_eq!(body.as_array().unwrap().len(), 1);
    let entry = &body[0];
    assert_eq!(entry["node_id"], "n1");
    assert_eq!(entry["sensor_type"], "temperature");
    assert_eq!(entry["unit"], "°C");
    assert_eq!(entry["latest"]["value"], 24.5);
    assert_eq!(entry["latest"]["timestamp_ms"], 1_000);

    let (status, body) = get_json(&format!("{base}/sensors/n1/temperature/series")).await;
    assert_eq!(status, 200);
    assert_eq!(body["points"], json!([{"timestamp_ms": 1000, "value": 24.5}]));
    let (status, body) = get_json(&format!("{base}/sensors/n1/temperature/summary")).await;
    assert_eq!(status, 200);
    assert_eq!((body["low"].as_f64(), body["count"].as_u64()), (Some(24.5), Some(1)));
    handle.shutdown().await;
}

#[tokio::test]
async fn series_and_summary_windows() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let readings: Vec<_> = (0..100)
        .map(|i| reading("line-a", SensorType::Light, i, 10_000 + i as u64 * 1000, 300.0 + i as f64))
        .collect();
    ingest(&handle, &readings).await;
    let url = format!("{base}/sensors/line-a/light");

    let (_, body) = get_json(&format!("{url}/series?from=20000&to=29000")).await;
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), 10);
    assert_eq!(points[0]["value"], 310.0);

    let (_, body) = get_json(&format!("{url}/series?max_points=10")).await;
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), 10);
    // Bucket means of ten consecutive values.
    assert_eq!(points[0]["value"], 304.5);

    let (_, body) = get_json(&format!("{url}/summary?from=20000&to=29000")).await;
    assert_eq!(body["low"], 310.0);
    assert_eq!(body["high"], 319.0);
    assert_eq!(body["mean"], 314.5);
    assert_eq!(body["latest"], 319.0);
    handle.shutdown().await;
}

#[tokio::test]
async fn query_errors_map_to_statuses() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    ingest(&handle, &[reading("n1", SensorType::Humidity, 0, 5_000, 40.0)]).await;
    let cases = [
        ("/sensors/n2/humidity/series", 404),
        ("/sensors/n1/smoke/summary", 404),
        ("/sensors/n1/pressure/series", 404),
        ("/sensors/bad%20id/humidity/series", 400),
        ("/sensors/n1/humidity/series?from=10&to=5", 400),
        ("/sensors/n1/humidity/series?max_points=1", 400),
        ("/sensors/n1/humidity/series?from=abc", 400),
        ("/sensors/n1/humidity/summary?from=6000", 422),
        ("/graphs/pie", 404),
    ];
    for (path, want) in cases {
        let resp = reqwest::get(format!("{base}{path}")).await.unwrap();
        assert_eq!(resp.status().as_u16(), want, "{path}");
    }
    let (_, body) = get_json(&format!("{base}/sensors/n1/humidity/summary?from=6000")).await;
    assert!(body["error"].as_str().unwrap().contains("no samples"));
    handle.shutdown().await;
}

#[tokio::test]
async fn graph_payloads_follow_store() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = with_file_sink(&dir);
    config.rules = vec![serde_json::from_value(json!({
        "rule_id": "hot",
        "selection": {"one": {"node_id": "n1", "sensor_type": "temperature"}},
        "comparator": "above",
        "threshold": 30.0
    }))
    .unwrap()];
    let (handle, base) = service(config).await;
    let mut readings = Vec::new();
    for i in 0..20u32 {
        readings.push(reading("n1", SensorType::Temperature, i, 1_000 * i as u64, 20.0 + (i % 5) as f64));
        readings.push(reading("n1", SensorType::Light, i, 1_000 * i as u64, 500.0 - i as f64));
    }
    ingest(&handle, &readings).await;

    let store = handle.pipeline.store();
    for graph in ["bar", "radar"] {
        let payload: GraphPayload = reqwest::get(format!("{base}/graphs/{graph}?from=2000&to=14000"))
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert_eq!(payload.sensors.len(), 2);
        for s in &payload.sensors {
            let direct = store.summarize(&s.key, TimeRange::new(2000, 14000).unwrap()).unwrap();
            let sensordash::api::GraphData::Summary { summary } = &s.data else {
                panic!("{graph} carries summaries");
            };
            assert_eq!(summary.as_ref(), Some(&direct));
        }
        let temp = payload.sensors.iter().find(|s| s.key.sensor_type == SensorType::Temperature).unwrap();
        assert_eq!(temp.thresholds.len(), 1);
        assert_eq!(temp.thresholds[0].threshold, 30.0);
        let light = payload.sensors.iter().find(|s| s.key.sensor_type == SensorType::Light).unwrap();
        assert!(light.thresholds.is_empty());
    }
    for graph in ["line", "area"] {
        let (status, body) = get_json(&format!("{base}/graphs/{graph}?max_points=5")).await;
        assert_eq!(status, 200);
        assert_eq!(body["graph_type"], graph);
        for s in body["sensors"].as_array().unwrap() {
            assert_eq!(s["series"].as_array().unwrap().len(), 5);
            assert!(s.get("summary").is_none());
        }
    }
    // A window with no samples yields null triples rather than an error.
    let (status, body) = get_json(&format!("{base}/graphs/bar?from=900000")).await;
    assert_eq!(status, 200);
    assert!(body["sensors"][0]["summary"].is_null());
    handle.shutdown().await;
}

#[tokio::test]
async fn rule_crud_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (handle, base) = service(with_file_sink(&dir)).await;
    let client = Client::new();
    let rule = json!({
        "selection": {"subset": [
            {"node_id": "n1", "sensor_type": "temperature"},
            {"node_id": "n2", "sensor_type": "temperature"}
        ]},
        "comparator": "above",
        "threshold": 30.0
    });
    let resp = client.put(format!("{base}/alerts/rules/hot")).json(&rule).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let stored: Value = resp.json().await.unwrap();
    assert_eq!(stored["rule_id"], "hot");
    assert_eq!(stored["enabled"], true);

    let mut updated = rule.clone();
    updated["threshold"] = json!(35.5);
    let resp = client.put(format!("{base}/alerts/rules/hot")).json(&updated).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let (_, list) = get_json(&format!("{base}/alerts/rules")).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["threshold"], 35.5);
    assert_eq!(list[0]["selection"], rule["selection"]);

    let bad = [
        ("hot", "{not json".to_string()),
        ("hot", json!({"rule_id": "other", "selection": "all", "comparator": "above", "threshold": 1}).to_string()),
        ("hot", json!({"selection": {"subset": []}, "comparator": "above", "threshold": 1}).to_string()),
        ("manual", json!({"selection": "all", "comparator": "below", "threshold": 1}).to_string()),
    ];
    for (id, body) in bad {
        let resp = client
            .put(format!("{base}/alerts/rules/{id}"))
            .header("content-type", "application/json")
            .body(body.clone())
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::BAD_REQUEST, "{body}");
    }

    let resp = client.delete(format!("{base}/alerts/rules/hot")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::NO_CONTENT);
    let resp = client.delete(format!("{base}/alerts/rules/hot")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    let (_, list) = get_json(&format!("{base}/alerts/rules")).await;
    assert_eq!(list, json!([]));
    handle.shutdown().await;
}

#[tokio::test]
async fn enabled_rule_needs_a_sink() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let client = Client::new();
    let mut rule = json!({"selection": "all", "comparator": "below", "threshold": 5});
    let resp = client.put(format!("{base}/alerts/rules/cold")).json(&rule).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::CONFLICT);
    rule["enabled"] = json!(false);
    let resp = client.put(format!("{base}/alerts/rules/cold")).json(&rule).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    handle.shutdown().await;
}

#[tokio::test]
async fn manual_alerts_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let (handle, base) = service(with_file_sink(&dir)).await;
    let readings = [
        reading("n1", SensorType::Temperature, 0, 1_000, 22.0),
        reading("n1", SensorType::Humidity, 0, 1_000, 41.0),
        reading("n2", SensorType::Temperature, 0, 1_000, 23.0),
        reading("n2", SensorType::Light, 0, 1_000, 410.0),
    ];
    ingest(&handle, &readings).await;
    let client = Client::new();
    let post = |body: Value| client.post(format!("{base}/alerts/manual")).json(&body).send();

    let resp = post(json!({"selection": "all"})).await.unwrap();
    assert_eq!(resp.status(), 200);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["count"], 4);
    assert!(body["events"].as_array().unwrap().iter().all(|e| e["kind"] == "manual"));

    let one = json!({"selection": {"one": {"node_id": "n2", "sensor_type": "light"}}});
    let body: Value = post(one).await.unwrap().json().await.unwrap();
    assert_eq!(body["count"], 1);
    assert_eq!(body["events"][0]["triggering_value"], 410.0);

    let unknown = json!({"selection": {"one": {"node_id": "n9", "sensor_type": "light"}}});
    assert_eq!(post(unknown).await.unwrap().status(), StatusCode::NOT_FOUND);
    assert_eq!(post(json!({"selection": {"subset": []}})).await.unwrap().status(), StatusCode::BAD_REQUEST);
    assert_eq!(post(json!({"sel": "all"})).await.unwrap().status(), StatusCode::BAD_REQUEST);

    let log = eventually(SECOND, || async {
        let (_, log) = get_json(&format!("{base}/alerts/log?limit=3")).await;
        (log.as_array().map(Vec::len) == Some(3)).then_some(log)
    })
    .await
    .expect("deliveries logged");
    assert_eq!(log[2]["event"]["key"]["sensor_type"], "light");
    assert_eq!(log[2]["deliveries"][0]["ok"], true);
    handle.shutdown().await;
}

#[tokio::test]
async fn stream_carries_readings_and_alerts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = with_file_sink(&dir);
    config.rules = vec![serde_json::from_value(json!({
        "rule_id": "hot", "selection": "all", "comparator": "above", "threshold": 30.0
    }))
    .unwrap()];
    let (handle, base) = service(config).await;
    let mut sse = SseClient::connect(&base, None).await;
    let sender = Sender::new(handle.udp_addr).await;

    sender.send(&reading("n1", SensorType::Temperature, 0, 1_000, 25.0)).await;
    let ev = sse.next(SECOND).await.expect("reading within 1 s");
    assert_eq!(ev.event, "reading");
    assert_eq!(ev.json()["value"], 25.0);
    assert_eq!(ev.json()["type"], "reading");

    let sent = tokio::time::Instant::now();
    sender.send(&reading("n1", SensorType::Temperature, 1, 2_000, 35.0)).await;
    let alert = sse.next_named("alert", 2 * SECOND).await.expect("alert within 2 s");
    assert!(sent.elapsed() < 2 * SECOND);
    let body = alert.json();
    assert_eq!(body["rule_id"], "hot");
    assert_eq!(body["triggering_value"], 35.0);
    assert_eq!(alert.id, Some(body["event_id"].to_string()));

    // Staying above the threshold does not fire again.
    sender.send(&reading("n1", SensorType::Temperature, 2, 3_000, 36.0)).await;
    let ev = sse.next(SECOND).await.unwrap();
    assert_eq!((ev.event.as_str(), ev.json()["value"].as_f64()), ("reading", Some(36.0)));
    handle.shutdown().await;
}

#[tokio::test]
async fn reconnect_replays_missed_alerts() {
    let dir = tempfile::tempdir().unwrap();
    let (handle, base) = service(with_file_sink(&dir)).await;
    ingest(&handle, &[reading("n1", SensorType::Smoke, 0, 1_000, 3.0)]).await;
    let client = Client::new();
    let mut ids = Vec::new();
    for _ in 0..3 {
        let body: Value = client
            .post(format!("{base}/alerts/manual"))
            .json(&json!({"selection": "all"}))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        ids.push(body["events"][0]["event_id"].as_u64().unwrap());
    }
    eventually(SECOND, || async { (handle.pipeline.alert_log().len() == 3).then_some(()) })
        .await
        .unwrap();

    let mut sse = SseClient::connect(&base, Some(ids[0])).await;
    let replayed: Vec<u64> = [sse.next(SECOND).await.unwrap(), sse.next(SECOND).await.unwrap()]
        .iter()
        .map(|e| e.id.as_ref().unwrap().parse().unwrap())
        .collect();
    assert_eq!(replayed, &ids[1..]);

    // Live alerts continue after the replay without duplicates.
    let body: Value = client
        .post(format!("{base}/alerts/manual"))
        .json(&json!({"selection": "all"}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let next = sse.next_named("alert", SECOND).await.unwrap();
    assert_eq!(next.id, Some(body["events"][0]["event_id"].to_string()));
    handle.shutdown().await;
}

#[tokio::test]
async fn shutdown_closes_open_streams() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let mut sse = SseClient::connect(&base, None).await;
    tokio::time::timeout(5 * SECOND, handle.shutdown())
        .await
        .expect("shutdown completes with a stream open");
    assert!(sse.next(SECOND).await.is_none());
}

#[tokio::test]
async fn malformed_datagrams_are_counted() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let sender = Sender::new(handle.udp_addr).await;
    sender.send_raw(b"SDV1|n1|temperature|0|1000|abc").await;
    sender.send_raw(&[0xff; 300]).await;
    sender.send(&reading("n1", SensorType::Temperature, 0, 1_000, 21.0)).await;
    sender.send(&reading("n1", SensorType::Temperature, 0, 1_000, 21.0)).await;
    let body = eventually(SECOND, || async {
        let (_, body) = get_json(&format!("{base}/healthz")).await;
        (body["datagrams"]["received"] == 4).then_some(body)
    })
    .await
    .expect("all datagrams received");
    assert_eq!(body["datagrams"]["rejected"], 2);
    assert_eq!(body["datagrams"]["duplicates"], 1);
    assert_eq!(body["sensors"], 1);
    handle.shutdown().await;
}

fn gaze_session_csv() -> (String, String) {
    let mut events = String::from("graph_type,question_id,answer,correct,start_ms,end_ms\n");
    let mut gaze = String::from("timestamp_ms,x,y\n");
    let mut t = 0u64;
    let spots = [[150.0, 120.0], [700.0, 400.0], [1250.0, 700.0]];
    for g in ["bar", "line", "radar", "area"] {
        for q in 0..5 {
            let start = t;
            for s in spots {
                for j in 0..25 {
                    gaze.push_str(&format!("{t},{},{}\n", s[0] + (j % 4) as f64, s[1] + (j % 3) as f64));
                    t += 16;
                }
            }
            events.push_str(&format!("{g},q{q},a,{},{start},{}\n", q != 4, t - 16));
            t += 400;
        }
    }
    (events, gaze)
}

#[tokio::test]
async fn gaze_analytics_endpoint() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let (events, gaze) = gaze_session_csv();
    let form = Form::new()
        .part("gaze", Part::text(gaze.clone()).file_name("gaze.csv"))
        .part("events", Part::text(events.clone()).file_name("events.csv"))
        .text("screen", "1366x768");
    let resp = Client::new().post(format!("{base}/analytics/gaze")).multipart(form).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    let report: Value = resp.json().await.unwrap();
    assert_eq!(report["table"]["rows"][0]["cells"], json!(["4", "4", "4", "4"]));
    for g in report["graphs"].as_array().unwrap() {
        assert_eq!(g["k_star"], 3);
        // Equal counts order by region label.
        let top: Vec<(&str, &str, u64)> = g["top_transitions"].as_array().unwrap()[..2]
            .iter()
            .map(|t| (t["from"].as_str().unwrap(), t["to"].as_str().unwrap(), t["count"].as_u64().unwrap()))
            .collect();
        assert_eq!(top, [("middle-centre", "bottom-right", 5), ("top-left", "middle-centre", 5)]);
    }

    let missing = Form::new().text("gaze", gaze.clone());
    let resp = Client::new().post(format!("{base}/analytics/gaze")).multipart(missing).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    let bad_screen = Form::new().text("gaze", gaze).text("events", events).text("screen", "wide");
    let resp = Client::new().post(format!("{base}/analytics/gaze")).multipart(bad_screen).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    handle.shutdown().await;
}

#[tokio::test]
async fn fitts_analytics_endpoint() {
    let (handle, base) = service(ServiceConfig::ephemeral()).await;
    let mut trials = String::from("participant_id,feedback,A,W,rep,movement_time_ms,error_distance\n");
    let mut subjective = String::from("participant_id,feedback,sus,tlx\n");
    let conditions = ["none", "visual", "haptic", "multimodal"];
    for p in 0..4 {
        for (c, fb) in conditions.iter().enumerate() {
            for (a, w) in [(1.0, 0.05), (1.5, 0.1), (2.0, 0.15), (1.0, 0.1)] {
                for rep in 0..25 {
                    let id = (a / w + 1.0f64).log2();
                    let mt = 150.0 + 110.0 * id + (p * 7 + c * 11 + rep % 5) as f64;
                    trials.push_str(&format!("p{p},{fb},{a},{w},{rep},{mt},{}\n", (rep % 7) as f64 * 0.01));
                }
            }
            subjective.push_str(&format!("p{p},{fb},{},{}\n", 60 + p * 3 + c * 4, 50 - p * 2 - c * 3));
        }
    }
    let form = Form::new()
        .text("trials", trials.clone())
        .text("subjective", subjective)
        .text("alpha", "0.01")
        .text("t_test", "paired");
    let resp = Client::new().post(format!("{base}/analytics/fitts")).multipart(form).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    let report: Value = resp.json().await.unwrap();
    assert_eq!(report["alpha"], 0.01);
    assert_eq!(report["table"].as_array().unwrap().len(), 4);
    assert_eq!(report["fits"].as_array().unwrap().len(), 4);
    assert_eq!(report["anova"]["sus"]["df_between"], 3);
    assert_eq!(report["anova"]["sus"]["df_within"], 12);

    let bad = Form::new().text("trials", "participant_id,feedback\np1,loud\n");
    let resp = Client::new().post(format!("{base}/analytics/fitts")).multipart(bad).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    let bad_alpha = Form::new().text("trials", trials).text("alpha", "2");
    let resp = Client::new().post(format!("{base}/analytics/fitts")).multipart(bad_alpha).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    handle.shutdown().await;
}

#[tokio::test]
async fn persisted_readings_replay_into_another_service() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("readings.jsonl");
    let config = ServiceConfig {
        persistence_path: Some(path.clone()),
        ..ServiceConfig::ephemeral()
    };
    let (first, _) = service(config).await;
    let readings: Vec<_> = (0..150)
        .map(|i| reading("n3", SensorType::Flood, i, 60_000 + i as u64 * 1000, (i % 9) as f64))
        .collect();
    ingest(&first, &readings).await;
    first.shutdown().await;

    let (second, base) = service(ServiceConfig::ephemeral()).await;
    let sent = sensordash::cli::replay(&path, &second.udp_addr.to_string(), 0).await.unwrap();
    assert_eq!(sent, 150);
    let pipeline = second.pipeline.clone();
    eventually(SECOND, || {
        let pipeline = pipeline.clone();
        async move { (pipeline.store().len(&key("n3", SensorType::Flood)) == Some(150)).then_some(()) }
    })
    .await
    .expect("replayed readings stored");
    let (_, body) = get_json(&format!("{base}/sensors/n3/flood/series?max_points=200")).await;
    let values: Vec<f64> = body["points"].as_array().unwrap().iter().map(|p| p["value"].as_f64().unwrap()).collect();
    assert_eq!(values, readings.iter().map(|r| r.value).collect::<Vec<_>>());
    second.shutdown().await;
}
