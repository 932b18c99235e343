use std::path::{Path, PathBuf};

use ciflow::bundle::{Bundle, BundleWire};
use ciflow::standoff::{from_standoff, to_standoff};
use ciflow_core::markup::{parse_inline, to_inline};
use ciflow_core::model::char_slice;
use ciflow_core::{FlowStatement, ParameterKind, PolicyDocument, Span};
use proptest::prelude::*;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z]{1,8}",
        "[0-9]{1,3}",
        Just("naïve".to_string()),
        Just("données".to_string()),
        Just("\u{1F600}".to_string()),
        Just("\"quoted\"".to_string()),
        Just("a<b&c>".to_string()),
        Just("tab\there".to_string()),
    ]
}

fn flow(id: usize) -> impl Strategy<Value = FlowStatement> {
    (
        prop::collection::vec(word(), 1..16),
        prop::collection::vec((any::<bool>(), 0..5usize), 16),
        prop::option::of("[a-z ]{0,12}"),
    )
        .prop_map(move |(words, marks, source)| {
            let mut text = String::new();
            let mut spans = vec![];
            for (w, (mark, kind)) in words.iter().zip(marks) {
                if !text.is_empty() {
                    text.push(' ');
                }
                let start = text.chars().count();
                text.push_str(w);
                if mark {
                    let end = text.chars().count();
                    spans.push(Span::new(start, end, ParameterKind::ALL[kind]).unwrap());
                }
            }
            FlowStatement::new(format!("f{id}"), text, spans, source).unwrap()
        })
}

fn document() -> impl Strategy<Value = PolicyDocument> {
    (0..6usize)
        .prop_flat_map(|n| (0..n).map(flow).collect::<Vec<_>>())
        .prop_map(|flows| PolicyDocument::new("policy-1", "2018", flows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn standoff_round_trip(doc in document()) {
        let bytes = to_standoff(&doc);
        let back = from_standoff(&bytes).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(to_standoff(&back), bytes);
    }

    #[test]
    fn markup_round_trip(doc in document()) {
        let back = parse_inline(&to_inline(&doc)).unwrap();
        prop_assert_eq!(back, doc);
    }
}

#[test]
fn boxed_example_has_four_spans() {
    let doc = parse_inline(&std::fs::read_to_string(corpus("example_flow.xml")).unwrap()).unwrap();
    assert_eq!(doc.policy_id(), "facebook");
    assert_eq!(doc.flows().len(), 1);
    let flow = &doc.flows()[0];
    let got: Vec<(ParameterKind, &str)> = flow.spans().iter().map(|s| (s.kind(), flow.span_text(s))).collect();
    assert_eq!(
        got,
        [
            (ParameterKind::Recipient, "We"),
            (ParameterKind::Attribute, "contact information"),
            (ParameterKind::Sender, "you"),
            (
                ParameterKind::TransmissionPrinciple,
                "if you upload, sync or import this information (such as an address book) from a device"
            ),
        ]
    );
    let s = &flow.spans()[1];
    assert_eq!((s.start(), s.end()), (16, 35));
    assert_eq!(char_slice(flow.text(), 16, 35), "contact information");

    let json = to_standoff(&doc);
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["flows"].as_array().unwrap().len(), 1);
    assert_eq!(v["flows"][0]["spans"].as_array().unwrap().len(), 4);
    assert_eq!(v["flows"][0]["spans"][3]["kind"], "tp");
    assert_eq!(from_standoff(&json).unwrap(), doc);
}

#[test]
fn corpus_files_are_canonical() {
    for name in ["fb_prev.json", "fb_updated.json"] {
        let bytes = std::fs::read(corpus(name)).unwrap();
        let doc = from_standoff(&bytes).unwrap();
        assert_eq!(to_standoff(&doc), bytes, "{name}");
    }
}

#[test]
fn bundle_directory_round_trip() {
    let bundle = Bundle::read_dir(&corpus("replay")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    bundle.write_dir(dir.path(), false).unwrap();
    assert_eq!(Bundle::read_dir(dir.path()).unwrap(), bundle);
    assert!(bundle.write_dir(dir.path(), false).is_err());
    bundle.write_dir(dir.path(), true).unwrap();

    for file in ["excerpts.json", "sessions.json", "gold/w04.json", "responses/a01__s1.json"] {
        let a = std::fs::read(corpus("replay").join(file)).unwrap();
        let b = std::fs::read(dir.path().join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn bundle_wire_round_trip() {
    let bundle = Bundle::read_dir(&corpus("replay")).unwrap();
    let wire = bundle.to_wire();
    let json = serde_json::to_vec(&wire).unwrap();
    let back: BundleWire = serde_json::from_slice(&json).unwrap();
    assert_eq!(Bundle::from_wire(back).unwrap(), bundle);
}

#[test]
fn bundle_rejects_bad_content() {
    let dir = tempfile::tempdir().unwrap();
    Bundle::read_dir(&corpus("replay")).unwrap().write_dir(dir.path(), false).unwrap();

    let response = dir.path().join("responses/a01__w01.json");
    let original = std::fs::read_to_string(&response).unwrap();
    std::fs::write(&response, original.replace("\"end\": 2", "\"end\": 2000")).unwrap();
    let err = Bundle::read_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("a01__w01"), "{err}");
    std::fs::write(&response, &original).unwrap();

    std::fs::write(dir.path().join("responses/a01__nowhere.json"), &original).unwrap();
    assert!(Bundle::read_dir(dir.path()).is_err());
    std::fs::remove_file(dir.path().join("responses/a01__nowhere.json")).unwrap();

    std::fs::write(dir.path().join("excerpts.json"), "[{\"excerpt_id\": 3}]").unwrap();
    let err = Bundle::read_dir(dir.path()).unwrap_err().to_string();
    assert!(err.contains("excerpts.json"), "{err}");
}
