//! Inline annotation markup.
//!
//! This is the toolkit's own XML-like dialect:
//!
//! ```text
//! <policy id="facebook" version="2018-04">
//! <flow id="f1" source="Things you do"><recipient>We</recipient> also collect
//! <attribute>contact information</attribute> ...</flow>
//! </policy>
//! ```
//!
//! Flows are `<flow id="...">` elements (optional `source` attribute); inside
//! them the tags `<sender>`, `<recipient>`, `<subject>`, `<attribute>` and
//! `<tp>` mark parameters. Parameter tags never nest. The `<policy>` wrapper
//! is optional. Text outside flows, comments and an XML declaration are
//! ignored. The entities `&lt; &gt; &amp; &quot; &apos;` are decoded; any
//! other `&` is literal. Span offsets refer to the decoded, tag-free text.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{FlowStatement, ModelError, ParameterKind, PolicyDocument, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkupErrorKind {
    UnknownTag(String),
    NestedParameters,
    NestedFlow,
    Unbalanced { expected: String, found: String },
    Unclosed(String),
    ParameterOutsideFlow(String),
    MissingAttribute { tag: String, attribute: String },
    EmptyParameter(String),
    Malformed(String),
    Model(ModelError),
}

/// Parse failure with a 1-based line and column (in characters).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct MarkupError {
    pub line: usize,
    pub column: usize,
    pub kind: MarkupErrorKind,
}

impl fmt::Display for MarkupErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkupErrorKind::UnknownTag(name) => write!(f, "unknown tag `{name}`"),
            MarkupErrorKind::NestedParameters => f.write_str("nested parameters unsupported"),
            MarkupErrorKind::NestedFlow => f.write_str("flows cannot nest"),
            MarkupErrorKind::Unbalanced { expected, found } => {
                write!(f, "unbalanced tags: expected `</{expected}>`, found `</{found}>`")
            }
            MarkupErrorKind::Unclosed(name) => write!(f, "unclosed `<{name}>`"),
            MarkupErrorKind::ParameterOutsideFlow(name) => {
                write!(f, "`<{name}>` outside of a flow")
            }
            MarkupErrorKind::MissingAttribute { tag, attribute } => {
                write!(f, "`<{tag}>` requires attribute `{attribute}`")
            }
            MarkupErrorKind::EmptyParameter(name) => write!(f, "empty `<{name}>` parameter"),
            MarkupErrorKind::Malformed(what) => write!(f, "malformed markup: {what}"),
            MarkupErrorKind::Model(err) => write!(f, "{err}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Cursor {
    chars: Vec<char>,
    i: usize,
    pos: Pos,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            i: 0,
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.chars.get(self.i + k) == Some(&c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn err(&self, at: Pos, kind: MarkupErrorKind) -> MarkupError {
        MarkupError {
            line: at.line,
            column: at.column,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    /// Skips past `terminator`, or errors at `start` if it never appears.
    fn skip_until(&mut self, terminator: &str, start: Pos) -> Result<(), MarkupError> {
        while !self.starts_with(terminator) {
            if self.bump().is_none() {
                return Err(self.err(
                    start,
                    MarkupErrorKind::Malformed(format!("missing `{terminator}`")),
                ));
            }
        }
        self.skip(terminator.chars().count());
        Ok(())
    }
}

#[derive(Debug)]
struct Tag {
    name: String,
    closing: bool,
    attrs: Vec<(String, String)>,
    at: Pos,
}

impl Tag {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn required(&self, name: &str) -> Result<String, MarkupError> {
        self.attr(name).map(String::from).ok_or(MarkupError {
            line: self.at.line,
            column: self.at.column,
            kind: MarkupErrorKind::MissingAttribute {
                tag: self.name.clone(),
                attribute: name.into(),
            },
        })
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == ':'
}

/// Reads a tag starting at `<`. Comments and declarations return `None`.
fn read_tag(cur: &mut Cursor) -> Result<Option<Tag>, MarkupError> {
    let at = cur.pos;
    if cur.starts_with("<!--") {
        cur.skip(4);
        cur.skip_until("-->", at)?;
        return Ok(None);
    }
    if cur.starts_with("<?") {
        cur.skip(2);
        cur.skip_until("?>", at)?;
        return Ok(None);
    }
    cur.bump();
    let closing = if cur.peek() == Some('/') {
        cur.bump();
        true
    } else {
        false
    };
    let mut name = String::new();
    while let Some(c) = cur.peek().filter(|c| is_name_char(*c)) {
        name.push(c);
        cur.bump();
    }
    if name.is_empty() {
        return Err(cur.err(at, MarkupErrorKind::Malformed("expected a tag name after `<`".into())));
    }
    let mut attrs = Vec::new();
    loop {
        cur.skip_ws();
        match cur.peek() {
            Some('>') => {
                cur.bump();
                break;
            }
            Some('/') => {
                return Err(cur.err(
                    at,
                    MarkupErrorKind::Malformed(format!("self-closing `<{name}/>` is not allowed")),
                ))
            }
            Some(c) if is_name_char(c) && !closing => {
                let mut key = String::new();
                while let Some(c) = cur.peek().filter(|c| is_name_char(*c)) {
                    key.push(c);
                    cur.bump();
                }
                cur.skip_ws();
                if cur.bump() != Some('=') {
                    return Err(cur.err(
                        at,
                        MarkupErrorKind::Malformed(format!("attribute `{key}` needs a value")),
                    ));
                }
                cur.skip_ws();
                let quote = match cur.bump() {
                    Some(q @ ('"' | '\'')) => q,
                    _ => {
                        return Err(cur.err(
                            at,
                            MarkupErrorKind::Malformed(format!("attribute `{key}` must be quoted")),
                        ))
                    }
                };
                let mut raw = String::new();
                loop {
                    match cur.bump() {
                        Some(c) if c == quote => break,
                        Some(c) => raw.push(c),
                        None => {
                            return Err(cur.err(
                                at,
                                MarkupErrorKind::Malformed("unterminated attribute value".into()),
                            ))
                        }
                    }
                }
                attrs.push((key, decode_entities(&raw)));
            }
            Some(_) => {
                return Err(cur.err(
                    at,
                    MarkupErrorKind::Malformed(format!("unexpected character in `<{name}>`")),
                ))
            }
            None => return Err(cur.err(at, MarkupErrorKind::Unclosed(name))),
        }
    }
    Ok(Some(Tag {
        name,
        closing,
        attrs,
        at,
    }))
}

const ENTITIES: [(&str, char); 5] = [
    ("&lt;", '<'),
    ("&gt;", '>'),
    ("&amp;", '&'),
    ("&quot;", '"'),
    ("&apos;", '\''),
];

fn decode_entities(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(idx) = rest.find('&') {
        out.push_str(&rest[..idx]);
        rest = &rest[idx..];
        match ENTITIES.iter().find(|(e, _)| rest.starts_with(e)) {
            Some((e, c)) => {
                out.push(*c);
                rest = &rest[e.len()..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn escape(text: &str, out: &mut String, attribute: bool) {
    for c in text.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' if attribute => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}

struct OpenFlow {
    id: String,
    source_ref: Option<String>,
    text: String,
    len: usize,
    spans: Vec<Span>,
    param: Option<(ParameterKind, usize, Pos)>,
    at: Pos,
}

/// Parses inline markup into a document.
pub fn parse_inline(src: &str) -> Result<PolicyDocument, MarkupError> {
    let mut cur = Cursor::new(src);
    let mut policy_id = String::new();
    let mut version_label = String::new();
    let mut policy_open: Option<Pos> = None;
    let mut flows: Vec<(FlowStatement, Pos)> = Vec::new();
    let mut open: Option<OpenFlow> = None;

    while let Some(c) = cur.peek() {
        if c != '<' {
            let entity = if c == '&' {
                ENTITIES
                    .iter()
                    .find(|(e, _)| cur.starts_with(e))
                    .map(|(e, d)| (e.len(), *d))
            } else {
                None
            };
            let (width, decoded) = entity.unwrap_or((1, c));
            cur.skip(width);
            if let Some(flow) = open.as_mut() {
                flow.text.push(decoded);
                flow.len += 1;
            }
            continue;
        }
        let Some(tag) = read_tag(&mut cur)? else {
            continue;
        };
        let kind = tag.name.parse::<ParameterKind>().ok();
        match (tag.name.as_str(), tag.closing) {
            ("policy", false) => {
                if policy_open.is_some() || open.is_some() || !flows.is_empty() {
                    return Err(cur.err(
                        tag.at,
                        MarkupErrorKind::Malformed("`<policy>` must wrap the whole document".into()),
                    ));
                }
                policy_id = tag.attr("id").unwrap_or_default().to_string();
                version_label = tag.attr("version").unwrap_or_default().to_string();
                policy_open = Some(tag.at);
            }
            ("policy", true) => {
                if let Some(flow) = &open {
                    return Err(cur.err(
                        tag.at,
                        MarkupErrorKind::Unbalanced {
                            expected: match flow.param {
                                Some((k, _, _)) => k.as_str().into(),
                                None => "flow".into(),
                            },
                            found: "policy".into(),
                        },
                    ));
                }
                if policy_open.take().is_none() {
                    return Err(cur.err(
                        tag.at,
                        MarkupErrorKind::Malformed("`</policy>` without `<policy>`".into()),
                    ));
                }
            }
            ("flow", false) => {
                if open.is_some() {
                    return Err(cur.err(tag.at, MarkupErrorKind::NestedFlow));
                }
                open = Some(OpenFlow {
                    id: tag.required("id")?,
                    source_ref: tag.attr("source").map(String::from),
                    text: String::new(),
                    len: 0,
                    spans: Vec::new(),
                    param: None,
                    at: tag.at,
                });
            }
            ("flow", true) => {
                let Some(flow) = open.take() else {
                    return Err(cur.err(
                        tag.at,
                        MarkupErrorKind::Malformed("`</flow>` without `<flow>`".into()),
                    ));
                };
                if let Some((kind, _, _)) = flow.param {
                    return Err(cur.err(
                        tag.at,
                        MarkupErrorKind::Unbalanced {
                            expected: kind.as_str().into(),
                            found: "flow".into(),
                        },
                    ));
                }
                let statement = FlowStatement::new(flow.id, flow.text, flow.spans, flow.source_ref)
                    .map_err(|e| cur.err(flow.at, MarkupErrorKind::Model(e)))?;
                flows.push((statement, flow.at));
            }
            (name, closing) => {
                let Some(kind) = kind else {
                    return Err(cur.err(tag.at, MarkupErrorKind::UnknownTag(name.into())));
                };
                let Some(flow) = open.as_mut() else {
                    return Err(cur.err(tag.at, MarkupErrorKind::ParameterOutsideFlow(name.into())));
                };
                match (closing, flow.param) {
                    (false, Some(_)) => {
                        return Err(cur.err(tag.at, MarkupErrorKind::NestedParameters));
                    }
                    (false, None) => flow.param = Some((kind, flow.len, tag.at)),
                    (true, None) => {
                        return Err(cur.err(
                            tag.at,
                            MarkupErrorKind::Unbalanced {
                                expected: "flow".into(),
                                found: name.into(),
                            },
                        ));
                    }
                    (true, Some((open_kind, start, at))) => {
                        if open_kind != kind {
                            return Err(cur.err(
                                tag.at,
                                MarkupErrorKind::Unbalanced {
                                    expected: open_kind.as_str().into(),
                                    found: name.into(),
                                },
                            ));
                        }
                        let span = Span::new(start, flow.len, kind)
                            .map_err(|_| cur.err(at, MarkupErrorKind::EmptyParameter(name.into())))?;
                        flow.spans.push(span);
                        flow.param = None;
                    }
                }
            }
        }
    }

    if let Some(flow) = open {
        let (name, at) = match flow.param {
            Some((kind, _, at)) => (kind.as_str().to_string(), at),
            None => ("flow".to_string(), flow.at),
        };
        return Err(cur.err(at, MarkupErrorKind::Unclosed(name)));
    }
    if let Some(at) = policy_open {
        return Err(cur.err(at, MarkupErrorKind::Unclosed("policy".into())));
    }
    let at = flows.last().map(|(_, at)| *at).unwrap_or(cur.pos);
    PolicyDocument::new(policy_id, version_label, flows.into_iter().map(|(f, _)| f).collect())
        .map_err(|e| cur.err(at, MarkupErrorKind::Model(e)))
}

/// Writes a document back to inline markup, one flow per line.
pub fn to_inline(doc: &PolicyDocument) -> String {
    let mut out = String::new();
    out.push_str("<policy id=\"");
    escape(doc.policy_id(), &mut out, true);
    out.push_str("\" version=\"");
    escape(doc.version_label(), &mut out, true);
    out.push_str("\">\n");
    for flow in doc.flows() {
        out.push_str("<flow id=\"");
        escape(flow.id(), &mut out, true);
        out.push('"');
        if let Some(source) = flow.source_ref() {
            out.push_str(" source=\"");
            escape(source, &mut out, true);
            out.push('"');
        }
        out.push('>');
        let chars: Vec<char> = flow.text().chars().collect();
        let mut at = 0;
        for span in flow.spans() {
            let before: String = chars[at..span.start()].iter().collect();
            escape(&before, &mut out, false);
            let inner: String = chars[span.start()..span.end()].iter().collect();
            let name = span.kind().as_str();
            out.push('<');
            out.push_str(name);
            out.push('>');
            escape(&inner, &mut out, false);
            out.push_str("</");
            out.push_str(name);
            out.push('>');
            at = span.end();
        }
        let rest: String = chars[at..].iter().collect();
        escape(&rest, &mut out, false);
        out.push_str("</flow>\n");
    }
    out.push_str("</policy>\n");
    out
}
