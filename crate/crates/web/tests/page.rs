//! The inputs the static page ships with must produce the documented values.

use causa_web::{blame, responsibility, voting};
use serde_json::Value;

fn page() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/www/index.html")).unwrap()
}

fn textarea(html: &str, id: &str) -> String {
    let open = format!("<textarea id=\"{id}\"");
    let start = html.find(&open).unwrap();
    let body = &html[start..];
    let body = &body[body.find('>').unwrap() + 1..body.find("</textarea>").unwrap()];
    body.replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&")
}

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn default_model_form() {
    let model = textarea(&page(), "model-text");
    let plain = json(responsibility(&model, "", "ST=1", "BS=1", false).unwrap());
    assert_eq!(plain["responsibility"], "1");
    let allowed = json(responsibility(&model, "", "ST=1", "BS=1", true).unwrap());
    assert_eq!(allowed["responsibility"], "1/2");
}

#[test]
fn default_blame_scenario() {
    let scenario = textarea(&page(), "blame-text");
    let plain = json(blame(&scenario, false).unwrap());
    assert_eq!(plain["blame"], "5/8");
    let allowed = json(blame(&scenario, true).unwrap());
    assert_eq!(allowed["blame"], "1/2");
    let dr: Vec<&str> = allowed["situations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["responsibility"].as_str().unwrap())
        .collect();
    assert_eq!(dr, ["0", "1/2", "1/2", "1"]);
}

#[test]
fn default_ballot() {
    // the page starts with eleven voters all voting 1
    let out = json(voting(&"1".repeat(11)).unwrap());
    assert_eq!(out["voters"].as_array().unwrap().len(), 11);
    assert_eq!(out["voters"][0]["responsibility"], "1/6");
}
