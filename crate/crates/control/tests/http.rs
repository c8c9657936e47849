use std::thread;
use std::time::Duration;

use pact_control::serve;
use pact_core::item::Inventory;
use pact_core::runtime::{
    control_channel, run_paced, Episode, EpisodeSetup, LatencyModel, Mode, PlannedAction, SequencePlanner,
};
use pact_core::skills::SkillCall;
use pact_core::world_sim::{FieldSpec, ScenarioConfig};
use serde_json::{json, Value};

fn episode(limit: u64) -> Episode {
    let mut cfg = ScenarioConfig::resource_collection(Inventory::new(), 2);
    cfg.field = FieldSpec::empty();
    cfg.tick_limit = limit;
    cfg.initial_inventory = [("oak_log", 2)].into_iter().collect();
    let plans = || SequencePlanner::new((0..1000).map(|_| PlannedAction::new(SkillCall::Idle { ticks: 4 }, 0, "")));
    let setup = EpisodeSetup::new(cfg, 5, Mode::Parallel)
        .agent("A1", plans(), LatencyModel::constant(2))
        .agent("A2", plans(), LatencyModel::constant(2));
    Episode::new(setup).unwrap()
}

fn get(base: &str, path: &str) -> Value {
    ureq::get(&format!("{base}{path}")).call().unwrap().body_mut().read_json().unwrap()
}

fn post(base: &str, path: &str, body: Value) -> (u16, Value) {
    let resp = ureq::post(&format!("{base}{path}")).config().http_status_as_error(false).build().send_json(body).unwrap();
    let status = resp.status().as_u16();
    let mut resp = resp;
    (status, resp.body_mut().read_json().unwrap())
}

#[test]
fn endpoints_drive_a_live_episode() {
    let (handle, endpoint) = control_channel();
    let server = serve("127.0.0.1:0", handle.clone()).unwrap();
    let base = format!("http://{}", server.addr());
    let (pause_tx, pause_rx) = std::sync::mpsc::channel::<()>();
    let runner = thread::spawn(move || {
        let mut ep = episode(300);
        ep.set_paused(true);
        pause_tx.send(()).unwrap();
        run_paced(ep, endpoint, Duration::from_millis(2), false)
    });
    pause_rx.recv().unwrap();
    thread::sleep(Duration::from_millis(20));

    // Fresh, paused episode: every agent still holds its starting items.
    let s = get(&base, "/state");
    assert_eq!(s["tick"], 0);
    assert_eq!(s["paused"], true);
    for a in s["world"]["agents"].as_array().unwrap() {
        assert_eq!(a["inventory"], json!({"oak_log": 2}));
        assert_eq!(a["health"], 20.0);
    }

    let (code, _) = post(&base, "/resume", json!({}));
    assert_eq!(code, 200);
    thread::sleep(Duration::from_millis(40));
    let (code, ack) = post(&base, "/pause", json!({}));
    assert_eq!(code, 200);
    let frozen = ack["tick"].as_u64().unwrap();
    assert!(frozen > 0);
    let t1 = get(&base, "/state")["tick"].clone();
    thread::sleep(Duration::from_millis(30));
    let t2 = get(&base, "/state")["tick"].clone();
    assert_eq!(t1, t2);
    assert_eq!(t1.as_u64().unwrap(), frozen);

    let text = "hunt a pig for obtaining porkchops";
    let (code, _) = post(&base, "/chat", json!({"sender": "Alex", "team": "A", "text": text}));
    assert_eq!(code, 200);
    let chat = &get(&base, "/state")["memory"]["A"]["chatLog"];
    let lines: Vec<String> = chat
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|g| g["messages"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_owned()))
        .collect();
    assert!(lines.contains(&format!("Alex: {text}")), "{lines:?}");

    let (code, err) = post(&base, "/chat", json!({"sender": "Alex", "team": "A", "text": ""}));
    assert_eq!(code, 400);
    assert!(err["error"].is_string());
    let (code, _) = post(&base, "/chat", json!({"sender": "Alex"}));
    assert_eq!(code, 400);
    let (code, _) = post(&base, "/chat", json!({"sender": "Alex", "team": "Nobody", "text": "hi"}));
    assert_eq!(code, 400);

    let agent = get(&base, "/state?agent=A2");
    assert_eq!(agent["agent"]["id"], "A2");

    // The rejected requests did not disturb the episode.
    assert_eq!(get(&base, "/state")["tick"].as_u64().unwrap(), frozen);

    post(&base, "/resume", json!({}));
    let report = runner.join().unwrap();
    assert!(report.ticks >= 300);
    let controls = report
        .event_log
        .iter()
        .filter(|e| matches!(e.body, pact_core::world_sim::EventBody::ControlChat { .. }))
        .count();
    assert_eq!(controls, 1);
    drop(server);
}

#[test]
fn state_outlives_the_episode() {
    let (handle, endpoint) = control_channel();
    let server = serve("127.0.0.1:0", handle.clone()).unwrap();
    let base = format!("http://{}", server.addr());
    let runner = thread::spawn(move || run_paced(episode(30), endpoint, Duration::ZERO, false));
    let report = runner.join().unwrap();
    let s = get(&base, "/state");
    assert_eq!(s["finished"], true);
    assert_eq!(s["tick"].as_u64().unwrap(), report.ticks);
    let (code, _) = post(&base, "/pause", json!({}));
    assert_eq!(code, 409);
}
