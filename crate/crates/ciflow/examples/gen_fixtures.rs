//! Regenerates the checked-in corpus under `corpus/`.
//!
//! ```text
//! cargo run -p ciflow --example gen_fixtures -- corpus
//! ```
//!
//! The two policy versions are synthetic, but their parameter counts,
//! missing parameters, multi-instance flows and vague-term rates follow the
//! published measurements of the 2018 Facebook policy update. The replay
//! bundle is a small crowdsourcing run with three screening questions and
//! ten work excerpts.

use std::path::{Path, PathBuf};

use ciflow::bundle::{Bundle, SessionRecord};
use ciflow::lexicon::default_lexicon;
use ciflow::output::write_atomic;
use ciflow::standoff::to_standoff;
use ciflow_core::analysis::{vagueness_scan, VaguenessCategory};
use ciflow_core::crowd::Excerpt;
use ciflow_core::markup::parse_inline;
use ciflow_core::text::tokenize;
use ciflow_core::{AnnotationSet, FlowStatement, ParameterKind, PolicyDocument, Span, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ParameterKind::{Attribute, Recipient, Sender, TransmissionPrinciple as Tp};

const WE: &str = "We [Facebook]";
const YOU: &str = "you";
const THIRD: &str = "third party service, vendors, partners";

#[derive(Clone, Copy, PartialEq)]
enum Vague {
    Conditional,
    General,
    Modal,
    Numeric,
}

#[derive(Default)]
struct Spec {
    senders: Vec<String>,
    recipients: Vec<String>,
    attributes: Vec<String>,
    tps: Vec<String>,
    vague: Vec<Vague>,
}

struct Builder {
    text: String,
    len: usize,
    spans: Vec<Span>,
}

impl Builder {
    fn plain(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn span(&mut self, s: &str, kind: ParameterKind) {
        let start = self.len;
        self.plain(s);
        self.spans.push(Span::new(start, self.len, kind).unwrap());
    }

    fn list(&mut self, items: &[String], kind: ParameterKind, sep: &str, last: &str) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.plain(if i + 1 == items.len() { last } else { sep });
            }
            self.span(item, kind);
        }
    }
}

fn render(id: String, spec: &Spec) -> FlowStatement {
    let mut b = Builder {
        text: String::new(),
        len: 0,
        spans: vec![],
    };
    if spec.vague.contains(&Vague::General) {
        b.plain("Typically, ");
    }
    if spec.vague.contains(&Vague::Numeric) {
        b.plain("In certain cases, ");
    }
    let modal = if spec.vague.contains(&Vague::Modal) { "may " } else { "" };
    if spec.senders.is_empty() {
        b.list(&spec.attributes, Attribute, ", ", " and ");
        if spec.recipients.is_empty() {
            b.plain(&format!(" {modal}be collected"));
        } else {
            b.plain(&format!(" {modal}be shared with "));
            b.list(&spec.recipients, Recipient, ", ", " and ");
        }
    } else {
        b.list(&spec.senders, Sender, ", ", " and ");
        b.plain(&format!(" {modal}provide "));
        b.list(&spec.attributes, Attribute, ", ", " and ");
        if !spec.recipients.is_empty() {
            b.plain(" to ");
            b.list(&spec.recipients, Recipient, ", ", " and ");
        }
    }
    if !spec.tps.is_empty() {
        b.plain(" ");
        b.list(&spec.tps, Tp, "; ", "; ");
    }
    if spec.vague.contains(&Vague::Conditional) {
        b.plain(" as needed");
    }
    b.plain(".");
    FlowStatement::new(id, b.text, b.spans, None).unwrap()
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Distinct attribute phrases in a fixed order.
fn attribute_pool() -> Vec<String> {
    let heads = [
        "payment", "location", "device", "contact", "browser", "purchase", "camera", "message",
        "network", "account", "profile", "photo", "video", "search", "login", "billing", "calendar",
        "address book", "battery", "signal", "connection", "storage", "keyboard", "audio", "app",
    ];
    let tails = ["details", "history", "settings", "records", "identifiers", "metadata", "logs", "preferences"];
    let mut out = vec![];
    for t in tails {
        for h in heads {
            out.push(format!("{h} {t}"));
        }
    }
    out
}

fn tp_pool() -> Vec<String> {
    let verbs = ["use", "visit", "install", "update", "open", "join", "create", "leave", "follow", "rate"];
    let objects = [
        "our Products", "our apps", "a group", "an event", "a Page", "our Services", "Messenger",
        "Instagram", "a game", "a payment feature", "a fundraiser", "a marketplace listing",
    ];
    let mut out = vec![];
    for o in objects {
        for v in verbs {
            out.push(format!("when you {v} {o}"));
        }
    }
    out
}

fn take(pool: &mut std::vec::IntoIter<String>, n: usize) -> Vec<String> {
    let v: Vec<String> = pool.by_ref().take(n).collect();
    assert_eq!(v.len(), n, "pool exhausted");
    v
}

/// For each `(flow, fixed, extra)`, appends the fixed items and then the
/// next `extra` pool entries.
fn fill(
    specs: &mut [Spec],
    field: fn(&mut Spec) -> &mut Vec<String>,
    layout: &[(usize, Vec<String>, usize)],
    pool: &mut std::vec::IntoIter<String>,
) {
    for (flow, fixed, extra) in layout {
        let dst = field(&mut specs[*flow]);
        dst.extend(fixed.iter().cloned());
        dst.extend(take(pool, *extra));
    }
}

fn set_vague(specs: &mut [Spec], flows: impl IntoIterator<Item = usize>, v: Vague) {
    for i in flows {
        specs[i].vague.push(v);
    }
}

fn previous() -> PolicyDocument {
    let mut specs: Vec<Spec> = (0..42).map(|_| Spec::default()).collect();

    // senders: absent in flows 0-13, we+you in three flows
    let mut s_layout = vec![];
    let mut singles = vec![];
    for f in 14..42 {
        if [14, 20, 30].contains(&f) {
            s_layout.push((f, strings(&[WE, YOU]), 0));
        } else {
            singles.push(f);
        }
    }
    for (i, f) in singles.into_iter().enumerate() {
        match i {
            0..=10 => s_layout.push((f, strings(&[WE]), 0)),
            11..=13 => s_layout.push((f, strings(&[YOU]), 0)),
            _ => s_layout.push((f, vec![], 1)),
        }
    }
    let mut pool = strings(&[
        "WhatsApp", "advertisers", "app developers", "publishers", "partners", "your friends",
        "connected TVs", "web-connected devices you use", "businesses you interact with",
        "measurement vendors", "Page admins",
    ])
    .into_iter();
    fill(&mut specs, |s| &mut s.senders, &s_layout, &mut pool);

    // recipients: absent in flow 18, ten in flow 19, two in flows 20-28
    let mut r_layout = vec![(19, strings(&[WE, THIRD]), 8)];
    for f in 20..29 {
        r_layout.push((f, strings(&[WE, THIRD]), 0));
    }
    let singles: Vec<usize> = (0..42).filter(|f| !(18..29).contains(f)).collect();
    for (i, f) in singles.into_iter().enumerate() {
        match i {
            0..=11 => r_layout.push((f, strings(&[WE]), 0)),
            12..=21 => r_layout.push((f, strings(&[THIRD]), 0)),
            _ => r_layout.push((f, vec![], 1)),
        }
    }
    let mut pool = strings(&[
        "family of companies that are part of Facebook",
        "people you share and communicate with",
        "partners conducting academic research",
        "partners conducting surveys",
        "third-party companies who help us provide and improve our services",
        "advertisers",
        "measurement partners",
        "law enforcement",
        "vendors and service providers",
        "apps and websites you use",
        "game developers",
        "payment processors",
        "your friends",
        "the public",
        "marketing partners",
        "analytics providers",
        "Page administrators",
    ])
    .into_iter();
    fill(&mut specs, |s| &mut s.recipients, &r_layout, &mut pool);

    // attributes: 96 instances, 86 unique
    let sizes = [18, 5, 5, 4, 4, 4, 4, 4, 3, 3, 3, 3, 3, 3, 2, 2];
    let mut a_layout = vec![];
    for f in 0..26 {
        let fixed = match f {
            0..=7 => strings(&["information"]),
            8..=9 => strings(&["information about you"]),
            10..=11 => strings(&["information we have"]),
            12..=13 => strings(&["non-personally identifiable information only"]),
            _ => vec![],
        };
        let extra = 1 - fixed.len();
        a_layout.push((f, fixed, extra));
    }
    for (i, n) in sizes.iter().enumerate() {
        a_layout.push((26 + i, vec![], *n));
    }
    let mut pool = attribute_pool().into_iter();
    fill(&mut specs, |s| &mut s.attributes, &a_layout, &mut pool);

    // transmission principles: absent in flows 12-17
    let sizes = [5, 4, 4, 3, 3, 3, 3, 2, 2, 2, 2, 2, 2, 2, 2, 2];
    let mut t_layout = vec![];
    for f in (0..42).filter(|f| !(12..18).contains(f)) {
        let n = if (18..34).contains(&f) { sizes[f - 18] } else { 1 };
        t_layout.push((f, vec![], n));
    }
    let mut pool = tp_pool().into_iter();
    fill(&mut specs, |s| &mut s.tps, &t_layout, &mut pool);

    set_vague(&mut specs, (0..38).step_by(2), Vague::Modal);
    set_vague(&mut specs, [1, 11, 21, 31], Vague::Conditional);
    set_vague(&mut specs, [5, 15, 25], Vague::General);
    set_vague(&mut specs, [3, 13, 23, 33, 39], Vague::Numeric);

    let flows = specs.iter().enumerate().map(|(i, s)| render(format!("p{:02}", i + 1), s)).collect();
    PolicyDocument::new("facebook", "2018-04-previous", flows).unwrap()
}

fn updated() -> PolicyDocument {
    let mut specs: Vec<Spec> = (0..72).map(|_| Spec::default()).collect();

    // senders: absent in flows 0-32
    let mut s_layout = vec![];
    for f in 33..39 {
        s_layout.push((f, strings(&[WE, YOU]), 0));
    }
    s_layout.push((39, strings(&[WE, YOU]), 1));
    s_layout.push((40, strings(&[WE, YOU]), 2));
    for (i, f) in (41..72).enumerate() {
        match i {
            0..=8 => s_layout.push((f, strings(&[WE]), 0)),
            9..=11 => s_layout.push((f, strings(&[YOU]), 0)),
            _ => s_layout.push((f, vec![], 1)),
        }
    }
    let mut pool = strings(&[
        "WhatsApp", "advertisers", "app developers", "publishers", "partners", "your friends",
        "connected TVs", "web-connected devices you use", "businesses you interact with",
        "measurement vendors", "Page admins", "other people using Facebook and Instagram",
        "Oculus", "third-party data providers", "game developers", "event organizers",
        "sellers on Marketplace", "group administrators", "fundraiser organizers",
        "the people you message", "your contacts", "merchants",
    ])
    .into_iter();
    fill(&mut specs, |s| &mut s.senders, &s_layout, &mut pool);

    // recipients: absent in flows 47 and 48
    let mut r_layout = vec![(0, strings(&[WE, THIRD]), 5)];
    for f in 1..5 {
        r_layout.push((f, strings(&[WE, THIRD]), 1));
    }
    for f in 5..19 {
        r_layout.push((f, strings(&[WE, THIRD]), 0));
    }
    let singles: Vec<usize> = (19..72).filter(|f| ![47, 48].contains(f)).collect();
    for (i, f) in singles.into_iter().enumerate() {
        match i {
            0..=12 => r_layout.push((f, strings(&[WE]), 0)),
            13..=17 => r_layout.push((f, strings(&[THIRD]), 0)),
            _ => r_layout.push((f, vec![], 1)),
        }
    }
    let mut pool = strings(&[
        "Facebook companies",
        "audience they choose",
        "specific friends or accounts",
        "people in your networks",
        "friends and followers",
        "people and businesses outside the audience that you shared with",
        "research partners",
        "research partners who we collaborate with",
        "academics",
        "websites that integrate with our products",
        "companies that aggregate",
        "content creator",
        "seller",
        "Page admins",
        "regulators",
        "family of companies that are part of Facebook",
        "people you share and communicate with",
        "partners conducting academic research",
        "partners conducting surveys",
        "advertisers",
        "measurement partners",
        "law enforcement",
        "vendors and service providers",
        "apps and websites you use",
        "game developers",
        "payment processors",
        "your friends",
        "the public",
        "marketing partners",
        "analytics providers",
        "Page administrators",
        "fundraiser beneficiaries",
        "event hosts",
        "group members",
        "your followers",
        "integrated partners",
        "courier services",
        "banks",
        "emergency responders",
        "auditors",
        "translators",
        "Oculus",
    ])
    .into_iter();
    fill(&mut specs, |s| &mut s.recipients, &r_layout, &mut pool);

    // attributes: 208 instances, 179 unique
    let mut a_layout = vec![(0, vec![], 40)];
    a_layout.extend((1..12).map(|f| (f, vec![], 6)));
    a_layout.extend((12..18).map(|f| (f, vec![], 5)));
    a_layout.extend((18..36).map(|f| (f, vec![], 2)));
    let mut repeated = vec![];
    for (text, n) in [
        ("information", 15),
        ("content", 5),
        ("information about you", 4),
        ("information that we have", 4),
        ("public information", 4),
        ("communications", 2),
        ("shipping and contact details", 2),
    ] {
        repeated.extend(std::iter::repeat_n(text, n));
    }
    for (f, text) in (36..72).zip(repeated) {
        a_layout.push((f, strings(&[text]), 0));
    }
    let mut pool = attribute_pool().into_iter().skip(28).collect::<Vec<_>>().into_iter();
    fill(&mut specs, |s| &mut s.attributes, &a_layout, &mut pool);

    // transmission principles: absent in flows 32-46; every earlier one kept
    let with_tp: Vec<usize> = (0..72).filter(|f| !(32..47).contains(f)).collect();
    let mut t_layout = vec![];
    for f in with_tp {
        let n = match f {
            0 => 8,
            1..=15 => 3,
            16..=29 => 2,
            _ => 1,
        };
        t_layout.push((f, vec![], n));
    }
    let mut pool = tp_pool().into_iter();
    fill(&mut specs, |s| &mut s.tps, &t_layout, &mut pool);

    set_vague(&mut specs, (0..64).step_by(2), Vague::Modal);
    set_vague(&mut specs, [1, 11, 21, 31, 41, 51, 61], Vague::Conditional);
    set_vague(&mut specs, [5, 15, 25, 35, 45], Vague::General);
    set_vague(&mut specs, [3, 13, 23, 33, 43, 53, 63, 67, 69], Vague::Numeric);

    let flows = specs.iter().enumerate().map(|(i, s)| render(format!("u{:02}", i + 1), s)).collect();
    PolicyDocument::new("facebook", "2018-04-updated", flows).unwrap()
}

fn check_vagueness(doc: &PolicyDocument, expected: [usize; 4]) {
    let scan = vagueness_scan(doc, &default_lexicon());
    let got: Vec<usize> = VaguenessCategory::ALL.iter().map(|c| scan.flagged_counts[c]).collect();
    assert_eq!(got, expected, "{}: unexpected vague terms", doc.version_label());
}

/// Screening questions and work excerpts as (id, gold markup, majority markup).
/// The majority markup is what a strict majority of annotators submits.
const SCREENING: [(&str, &str); 3] = [
    (
        "s1",
        "<recipient>We</recipient> collect <attribute>the content and other information</attribute> <sender>you</sender> provide <tp>when you use our Products</tp>.",
    ),
    (
        "s2",
        "<sender>Advertisers</sender> and <sender>app developers</sender> send <recipient>us</recipient> <attribute>information about your activities off Facebook</attribute> <tp>using our business tools</tp>.",
    ),
    (
        "s3",
        "<recipient>We</recipient> receive <attribute>your phone number</attribute> from <sender>your contacts</sender> <tp>if they upload their address book</tp>.",
    ),
];

const WORK: [(&str, &str, &str); 10] = [
    (
        "w01",
        "<recipient>We</recipient> collect <attribute>your contact information</attribute> when <sender>you</sender> <tp>register for an account</tp>.",
        "<recipient>We</recipient> collect <attribute>your contact information</attribute> when <sender>you</sender> <tp>register for an account</tp>.",
    ),
    (
        "w02",
        "<sender>Advertisers</sender> send <recipient>us</recipient> <attribute>purchase records</attribute> <tp>through our business tools</tp>.",
        "<sender>Advertisers</sender> send <recipient>us</recipient> <attribute>purchase records</attribute> through our <tp>business tools</tp>.",
    ),
    (
        "w03",
        "<recipient>We</recipient> share <attribute>device identifiers</attribute> with <recipient>measurement partners</recipient> <tp>to report ad performance</tp>.",
        "<recipient>We</recipient> share <attribute>device identifiers</attribute> with measurement partners <tp>to report ad performance</tp>.",
    ),
    (
        "w04",
        "<tp>When you use our apps</tp>, <recipient>we</recipient> receive <attribute>location data</attribute> from your phone.",
        "When <sender>you</sender> use our apps, <recipient>we</recipient> receive <attribute>location data</attribute> from your phone.",
    ),
    (
        "w05",
        "<sender>Your friends</sender> may share <attribute>photos of you</attribute> with <recipient>their audience</recipient>.",
        "Your friends may share <attribute>photos of you</attribute> with <recipient>their audience</recipient>.",
    ),
    (
        "w06",
        "<recipient>We</recipient> collect <attribute>information</attribute> and <attribute>messages you send</attribute> <tp>when you communicate with others</tp>.",
        "<recipient>We</recipient> collect information and <attribute>messages you send</attribute> <tp>when you communicate with others</tp>.",
    ),
    (
        "w07",
        "<sender>Partners</sender> provide <recipient>us</recipient> <attribute>information about your activities</attribute> <tp>whether or not you have an account</tp>.",
        "<sender>Partners</sender> provide <recipient>us</recipient> <attribute>information about your activities</attribute> whether or not <sender>you</sender> have an account.",
    ),
    (
        "w08",
        "<recipient>Service providers</recipient> receive <attribute>payment details</attribute> <tp>to process your orders</tp>.",
        "<recipient>Service providers</recipient> receive <attribute>payment details</attribute> to process your orders.",
    ),
    (
        "w09",
        "<sender>You</sender> can choose to provide <attribute>your religious views</attribute> in <tp>your profile fields</tp>.",
        "You can choose to provide <attribute>your religious views</attribute> in <tp>your profile fields</tp>.",
    ),
    (
        "w10",
        "<recipient>We</recipient> use <attribute>camera features</attribute> <tp>to suggest effects</tp> and <recipient>advertisers</recipient> receive <attribute>reports</attribute>.",
        "<recipient>We</recipient> use <attribute>camera features</attribute> <tp>to suggest effects</tp> and <recipient>advertisers</recipient> receive <attribute>reports</attribute>.",
    ),
];

const ANNOTATORS_PER_EXCERPT: [usize; 10] = [7, 8, 9, 10, 11, 12, 11, 11, 11, 12];
const QUALIFIED: usize = 21;
const BASE_MS: u64 = 1_541_000_000_000;

/// Text and spans of a one-flow markup string.
fn one_flow(id: &str, markup: &str) -> (String, Vec<Span>) {
    let doc = parse_inline(&format!("<flow id=\"{id}\">{markup}</flow>")).unwrap();
    let flow = &doc.flows()[0];
    (flow.text().to_string(), flow.spans().to_vec())
}

/// Token-level perturbation of `spans`, written back as maximal runs.
fn noisy(rng: &mut ChaCha8Rng, text: &str, spans: &[Span]) -> Vec<Span> {
    let tokens = tokenize(text);
    let mut labels: Vec<Option<ParameterKind>> = tokens
        .iter()
        .map(|t| spans.iter().find(|s| s.contains(t.start)).map(|s| s.kind()))
        .collect();
    for l in &mut labels {
        if rng.random_bool(0.3) {
            *l = match rng.random_range(0..5) {
                0 => None,
                k => Some(ParameterKind::CROWD[k - 1]),
            };
        }
    }
    let mut out = vec![];
    let mut i = 0;
    while i < tokens.len() {
        let Some(kind) = labels[i] else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j + 1 < tokens.len() && labels[j + 1] == Some(kind) {
            j += 1;
        }
        out.push(Span::new(tokens[i].start, tokens[j].end, kind).unwrap());
        i = j + 1;
    }
    out
}

fn replay_bundle() -> Bundle {
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let mut clock = BASE_MS;
    let mut tick = || {
        clock += 47_000;
        Timestamp(clock)
    };
    let mut excerpts = vec![];
    let mut responses = vec![];
    let mut sessions = vec![];

    let qualified: Vec<String> = (1..=QUALIFIED).map(|i| format!("a{i:02}")).collect();
    let failing: Vec<String> = (1..=4).map(|i| format!("f{i:02}")).collect();

    for (q, (id, markup)) in SCREENING.iter().enumerate() {
        let (text, gold) = one_flow(id, markup);
        let len = text.chars().count();
        let gold_set = AnnotationSet::new("gold", *id, gold.clone(), len, Timestamp(0)).unwrap();
        excerpts.push(Excerpt::screening(*id, text.clone(), gold_set, q as u8 + 1).unwrap());
        for (i, a) in qualified.iter().enumerate() {
            // a handful of qualified workers skip the third question
            let spans = if q == 2 && i % 7 == 3 { vec![] } else { gold.clone() };
            responses.push(AnnotationSet::new(a, *id, spans, len, tick()).unwrap());
        }
        for (i, a) in failing.iter().enumerate() {
            let spans = match (i, q) {
                (0, 0) => vec![],
                (1, 1) | (1, 2) => vec![],
                (2, 2) => continue,
                (3, 0) => gold[..1].to_vec(),
                _ => gold.clone(),
            };
            responses.push(AnnotationSet::new(a, *id, spans, len, tick()).unwrap());
        }
    }

    let mut slot = 0;
    for ((id, gold_markup, majority_markup), n) in WORK.iter().zip(ANNOTATORS_PER_EXCERPT) {
        let (text, gold) = one_flow(id, gold_markup);
        let (majority_text, majority) = one_flow(id, majority_markup);
        assert_eq!(text, majority_text, "{id}: gold and majority text differ");
        let len = text.chars().count();
        let gold_set = AnnotationSet::new("gold", *id, gold.clone(), len, Timestamp(0)).unwrap();
        excerpts.push(Excerpt::work(*id, text.clone(), Some(gold_set)).unwrap());
        let strict = n / 2 + 1;
        for k in 0..n {
            let annotator = &qualified[slot % QUALIFIED];
            slot += 1;
            let spans = if k < strict { majority.clone() } else { noisy(&mut rng, &text, &gold) };
            responses.push(AnnotationSet::new(annotator, *id, spans, len, tick()).unwrap());
        }
    }

    for a in &qualified {
        sessions.push(SessionRecord {
            annotator_id: a.clone(),
            failed_screening: false,
        });
    }
    for a in &failing {
        sessions.push(SessionRecord {
            annotator_id: a.clone(),
            failed_screening: true,
        });
    }
    Bundle::new(excerpts, responses, sessions).unwrap()
}

const EXAMPLE_MARKUP: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<policy id="facebook" version="2018-04-updated">
<flow id="f1"><recipient>We</recipient> also collect <attribute>contact information</attribute> that <sender>you</sender> provide <tp>if you upload, sync or import this information (such as an address book) from a device</tp>.</flow>
</policy>
"#;

fn main() {
    let dir: PathBuf = std::env::args_os().nth(1).map(Into::into).unwrap_or_else(|| "corpus".into());
    std::fs::create_dir_all(&dir).unwrap();

    let prev = previous();
    let upd = updated();
    check_vagueness(&prev, [4, 3, 19, 5]);
    check_vagueness(&upd, [7, 5, 32, 9]);

    let write = |name: &str, bytes: &[u8]| write_atomic(&dir.join(name), bytes, true).unwrap();
    write("fb_prev.json", &to_standoff(&prev));
    write("fb_updated.json", &to_standoff(&upd));
    write("example_flow.xml", EXAMPLE_MARKUP.as_bytes());
    let bundle = replay_bundle();
    let replay_dir: &Path = &dir.join("replay");
    bundle.write_dir(replay_dir, true).unwrap();
    eprintln!(
        "wrote {} flows, {} flows, {} excerpts, {} responses",
        prev.flows().len(),
        upd.flows().len(),
        bundle.excerpts.len(),
        bundle.responses.len()
    );
}
