//! Synthetic corpora in the published on-disk layouts, plus the two worked
//! example dialogs (restaurant booking, bus + rental car).
#![allow(dead_code)]

pub mod eval20;

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

pub struct ServiceDef {
    pub name: &'static str,
    pub slots: &'static [&'static str],
    pub intents: &'static [(&'static str, &'static [&'static str])],
}

pub const SERVICES: &[ServiceDef] = &[
    ServiceDef {
        name: "Restaurants_1",
        slots: &[
            "restaurant_name", "date", "time", "location", "number_of_seats", "cuisine",
            "price_range", "rating", "category",
        ],
        intents: &[
            ("ReserveRestaurant", &["restaurant_name", "location", "time", "date", "number_of_seats"]),
            ("FindRestaurants", &["category", "location"]),
        ],
    },
    ServiceDef {
        name: "Buses_1",
        slots: &[
            "from_city", "to_city", "departure_date", "departure_time", "num_passengers",
            "additional_luggage", "from_station", "transfers",
        ],
        intents: &[
            ("FindBus", &["from_city", "to_city", "departure_date"]),
            (
                "BuyBusTicket",
                &["from_city", "to_city", "departure_date", "departure_time", "num_passengers", "additional_luggage"],
            ),
        ],
    },
    ServiceDef {
        name: "RentalCars_1",
        slots: &[
            "city", "start_date", "end_date", "pickup_time", "car_type", "pickup_location",
            "add_insurance", "car_name", "price_per_day",
        ],
        intents: &[
            ("GetCarsAvailable", &["city", "start_date", "end_date", "pickup_time", "car_type"]),
            (
                "ReserveCar",
                &["pickup_location", "start_date", "end_date", "pickup_time", "car_type", "add_insurance"],
            ),
        ],
    },
    ServiceDef {
        name: "Alarm_1",
        slots: &["alarm_time", "alarm_name", "new_alarm_time"],
        intents: &[("GetAlarms", &[]), ("AddAlarm", &["new_alarm_time"])],
    },
    ServiceDef {
        name: "Hotels_2",
        slots: &["where_to", "number_of_adults", "check_in_date", "check_out_date", "rating"],
        intents: &[("SearchHouse", &["where_to"]), ("BookHouse", &["where_to", "check_in_date"])],
    },
    ServiceDef {
        name: "Weather_1",
        slots: &["city", "date", "temperature", "precipitation"],
        intents: &[("GetWeather", &["city"])],
    },
];

pub fn service(name: &str) -> &'static ServiceDef {
    SERVICES.iter().find(|s| s.name == name).expect("known service")
}

pub fn schema_json() -> Value {
    Value::Array(
        SERVICES
            .iter()
            .map(|s| {
                json!({
                    "service_name": s.name,
                    "description": format!("Synthetic {} service", s.name),
                    "slots": s.slots.iter().map(|slot| json!({
                        "name": slot,
                        "description": format!("The {}", slot.replace('_', " ")),
                        "is_categorical": *slot == "car_type",
                        "possible_values": if *slot == "car_type" { vec!["SUV", "Sedan", "Hatchback"] } else { vec![] },
                    })).collect::<Vec<_>>(),
                    "intents": s.intents.iter().map(|(name, req)| json!({
                        "name": name,
                        "description": format!("Intent {name}"),
                        "is_transactional": false,
                        "required_slots": req,
                        "optional_slots": {},
                        "result_slots": s.slots,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

const WORDS: &[&str] = &[
    "please", "book", "a", "table", "for", "two", "tomorrow", "find", "me", "bus", "tickets", "to",
    "Fresno", "what", "time", "is", "it", "sure", "anything", "else", "thanks", "the", "car",
    "hotel", "in", "Paris", "rain", "alarm", "at", "noon",
];

fn sentence(rng: &mut StdRng) -> String {
    let n = rng.gen_range(3..10);
    let mut words: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    words[0] = if rng.gen_bool(0.5) { "Okay" } else { "Well" };
    let mut s = words.join(" ");
    s.push(if rng.gen_bool(0.3) { '?' } else { '.' });
    s
}

const SYSTEM_ACTS: &[&str] = &[
    "INFORM", "OFFER", "REQUEST", "CONFIRM", "GOODBYE", "INFORM_COUNT", "NOTIFY_SUCCESS", "REQ_MORE",
];

/// Ground truth the generator knows about one written dialog.
#[derive(Debug, Clone)]
pub struct Truth {
    pub dialog_id: String,
    pub split: &'static str,
    pub services: Vec<String>,
    pub n_turns: usize,
    pub n_calls: usize,
}

fn system_frame(rng: &mut StdRng, svc: &ServiceDef, with_call: bool) -> Value {
    let act = SYSTEM_ACTS[rng.gen_range(0..SYSTEM_ACTS.len())];
    let slot = svc.slots[rng.gen_range(0..svc.slots.len())];
    let mut frame = json!({
        "service": svc.name,
        "slots": [],
        "actions": [{"act": act, "slot": slot, "values": ["x"], "canonical_values": ["x"]}],
    });
    if with_call {
        let (intent, req) = svc.intents[rng.gen_range(0..svc.intents.len())];
        let params: serde_json::Map<String, Value> = req
            .iter()
            .map(|s| (s.to_string(), Value::String(format!("{s} value"))))
            .collect();
        let n_results = rng.gen_range(0..5);
        let results: Vec<Value> = (0..n_results)
            .map(|i| {
                let mut r = params.clone();
                r.insert(svc.slots[0].to_string(), Value::String(format!("result {i}")));
                Value::Object(r)
            })
            .collect();
        frame["service_call"] = json!({"method": intent, "parameters": params});
        frame["service_results"] = Value::Array(results);
    }
    frame
}

fn user_frame(rng: &mut StdRng, svc: &ServiceDef) -> Value {
    let (intent, req) = svc.intents[rng.gen_range(0..svc.intents.len())];
    let values: serde_json::Map<String, Value> = req
        .iter()
        .take(2)
        .map(|s| (s.to_string(), json!([format!("{s} value")])))
        .collect();
    json!({
        "service": svc.name,
        "slots": [],
        "actions": [{"act": "INFORM_INTENT", "slot": "intent", "values": [intent]}],
        "state": {"active_intent": intent, "requested_slots": [], "slot_values": values},
    })
}

/// One random SGD-format dialog.
pub fn random_dialog(rng: &mut StdRng, id: &str, split: &'static str) -> (Value, Truth) {
    let first = &SERVICES[rng.gen_range(0..SERVICES.len())];
    let mut services = vec![first.name.to_string()];
    if rng.gen_bool(0.35) {
        let second = &SERVICES[rng.gen_range(0..SERVICES.len())];
        if second.name != first.name {
            services.push(second.name.to_string());
        }
    }
    let exchanges = rng.gen_range(1..9);
    let mut turns = Vec::new();
    let mut calls = 0;
    for _ in 0..exchanges {
        let svc = service(&services[rng.gen_range(0..services.len())]);
        turns.push(json!({
            "speaker": "USER",
            "utterance": sentence(rng),
            "frames": [user_frame(rng, svc)],
        }));
        let mut frames = vec![];
        let with_call = rng.gen_bool(0.3);
        frames.push(system_frame(rng, svc, with_call));
        calls += with_call as usize;
        if services.len() > 1 && rng.gen_bool(0.2) {
            let other = service(&services[1]);
            let second_call = rng.gen_bool(0.5);
            frames.push(system_frame(rng, other, second_call));
            calls += second_call as usize;
        }
        turns.push(json!({
            "speaker": "SYSTEM",
            "utterance": sentence(rng),
            "frames": frames,
        }));
    }
    let truth = Truth {
        dialog_id: id.to_string(),
        split,
        services: services.clone(),
        n_turns: turns.len(),
        n_calls: calls,
    };
    (
        json!({"dialogue_id": id, "services": services, "turns": turns}),
        truth,
    )
}

pub fn write_json(path: &Path, value: &Value) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

/// Write an SGD tree with `per_split` random dialogs per split, spread over
/// two dialogue files each. The restaurant worked example is added to train.
pub fn write_sgd(root: &Path, seed: u64, per_split: usize) -> Vec<Truth> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut truths = Vec::new();
    for split in ["train", "dev", "test"] {
        write_json(&root.join(split).join("schema.json"), &schema_json());
        let mut files: Vec<Vec<Value>> = vec![Vec::new(), Vec::new()];
        for i in 0..per_split {
            let id = format!("{}_{:05}", 100 + i % 7, i + per_split * split_no(split));
            let (d, t) = random_dialog(&mut rng, &id, split);
            files[i % 2].push(d);
            truths.push(t);
        }
        if split == "train" {
            let (d, t) = restaurant_dialog();
            files[0].push(d);
            truths.push(t);
        }
        for (k, f) in files.into_iter().enumerate() {
            write_json(
                &root.join(split).join(format!("dialogues_{:03}.json", k + 1)),
                &Value::Array(f),
            );
        }
    }
    truths
}

fn split_no(split: &str) -> usize {
    match split {
        "train" => 0,
        "dev" => 1,
        _ => 2,
    }
}

fn act(act: &str, slot: &str) -> Value {
    json!({"act": act, "slot": slot, "values": []})
}

fn sys(text: &str, service: &str, acts: Vec<Value>) -> Value {
    json!({"speaker": "SYSTEM", "utterance": text, "frames": [{"service": service, "slots": [], "actions": acts}]})
}

fn usr(text: &str, service: &str) -> Value {
    json!({"speaker": "USER", "utterance": text, "frames": [{"service": service, "slots": [], "actions": [act("INFORM", "")]}]})
}

pub const RESERVE_RESULT: [(&str, &str); 8] = [
    ("cuisine", "Asian"),
    ("date", "2019-03-11"),
    ("location", "San Francisco"),
    ("number_of_seats", "2"),
    ("price_range", "moderate"),
    ("rating", "4.0"),
    ("restaurant_name", "Butterfly Restaurant"),
    ("time", "11:30"),
];

/// The restaurant booking worked example (dialog `1_00001`): six exchanges,
/// one reservation call attached to the fourth system turn.
pub fn restaurant_dialog() -> (Value, Truth) {
    let s = "Restaurants_1";
    let result: serde_json::Map<String, Value> = RESERVE_RESULT
        .iter()
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect();
    let mut booked = sys(
        "Your table has been booked successfully and they serve Asian cuisine.",
        s,
        vec![act("NOTIFY_SUCCESS", ""), act("INFORM", "cuisine")],
    );
    booked["frames"][0]["service_call"] = json!({
        "method": "ReserveRestaurant",
        "parameters": {
            "date": "2019-03-11", "location": "San Francisco", "number_of_seats": "2",
            "restaurant_name": "Butterfly Restaurant", "time": "11:30"
        }
    });
    booked["frames"][0]["service_results"] = json!([Value::Object(result)]);
    let turns = vec![
        usr("Can you book a table for me at the Ancient Szechuan for the 11th of this month at 11:30 am?", s),
        sys("In which city are you trying to book the table?", s, vec![act("REQUEST", "location")]),
        usr("Can you book a table at the Butterfly restaurant in San Francisco?", s),
        sys(
            "Please confirm that you need a table for 2 at the Butterfly Restaurant in San Francisco at 11:30 am on March 11th.",
            s,
            vec![act("CONFIRM", "restaurant_name"), act("CONFIRM", "number_of_seats")],
        ),
        usr("That's perfect. What cuisine do they offer?", s),
        booked,
        usr("Can you get me the user rating of the restaurant? Is it expensive?", s),
        sys(
            "Their prices are moderate and they have a user rating of 4.0.",
            s,
            vec![act("INFORM", "price_range"), act("INFORM", "rating")],
        ),
        usr("Thanks a bunch!", s),
        sys("Is there anything else I can do for you?", s, vec![act("REQ_MORE", "")]),
        usr("No. Thank you. That's all I need.", s),
        sys("Have a great day!", s, vec![act("GOODBYE", "")]),
    ];
    let truth = Truth {
        dialog_id: "1_00001".into(),
        split: "train",
        services: vec![s.into()],
        n_turns: turns.len(),
        n_calls: 1,
    };
    (
        json!({"dialogue_id": "1_00001", "services": [s], "turns": turns}),
        truth,
    )
}

/// KETOD tree: `train.json`, `dev.json`, `test.json` and a `schema.json`.
/// Every third system turn carries knowledge enrichment.
pub fn write_ketod(root: &Path, seed: u64, per_split: usize) -> Vec<Truth> {
    let mut rng = StdRng::seed_from_u64(seed);
    write_json(&root.join("schema.json"), &schema_json());
    let mut truths = Vec::new();
    for split in ["train", "dev", "test"] {
        let mut dialogs = Vec::new();
        for i in 0..per_split {
            let id = format!("{}_{:05}", 200 + i % 5, i + per_split * split_no(split));
            let (mut d, mut t) = random_dialog(&mut rng, &id, split);
            let turns = d["turns"].as_array_mut().unwrap();
            for (k, turn) in turns.iter_mut().enumerate() {
                if turn["speaker"] == "SYSTEM" && k % 6 == 1 {
                    turn["enrich"] = json!(true);
                    turn["entity_query"] = json!([["Butterfly Restaurant"]]);
                    turn["kg_snippets_text"] = json!(["Butterfly is a restaurant on the pier."]);
                    turn["enriched_response"] = json!("Butterfly sits on the pier. Anything else?");
                    t.n_calls += 1;
                } else if turn["speaker"] == "SYSTEM" {
                    turn["enrich"] = json!(false);
                }
            }
            dialogs.push(d);
            truths.push(t);
        }
        write_json(&root.join(format!("{split}.json")), &Value::Array(dialogs));
    }
    truths
}

/// BiToD tree with English and Chinese files.
pub fn write_bitod(root: &Path, per_file: usize) -> usize {
    let mut n_en = 0;
    for lang in ["en", "zh"] {
        for split in ["train", "valid", "test"] {
            let mut map = serde_json::Map::new();
            for i in 0..per_file {
                let id = format!("{lang}_{split}_{i}");
                let locale = if lang == "en" { "en_US" } else { "zh_CN" };
                let events = json!([
                    {"Agent": "User", "Actions": [{"act": "inform_intent"}], "active_intent": format!("restaurants_{locale}_search"), "Text": "Find me a restaurant in Kowloon."},
                    {"Agent": "Wizard", "Actions": [{"act": "request", "slot": "price_level"}], "Text": "What price range?"},
                    {"Agent": "User", "Actions": [{"act": "inform"}], "Text": "Cheap please."},
                    {"Agent": "Wizard", "Actions": "query", "API": format!("restaurants_{locale}_search"), "Constraints": [{"location": "equal_to(Kowloon)"}, {"price_level": "equal_to(cheap)"}]},
                    {"Agent": "KnowledgeBase", "Item": {"name": "Noodle House", "rating": 9}, "TotalItems": 3},
                    {"Agent": "Wizard", "Actions": [{"act": "offer", "slot": "name"}], "Text": "Noodle House is cheap and rated 9."},
                    {"Agent": "User", "Actions": [{"act": "thank"}], "Text": "Thanks."},
                    {"Agent": "Wizard", "Actions": [{"act": "goodbye"}], "Text": "Bye."}
                ]);
                map.insert(id, json!({"Scenario": {}, "Events": events}));
                if lang == "en" {
                    n_en += 1;
                }
            }
            write_json(&root.join(format!("{lang}_{split}.json")), &Value::Object(map));
        }
    }
    n_en
}
