//! Structured-response extraction for the three agent roles.

use serde_json::{Map, Value};

use super::{parse_action, Decision, ReflectionResult, ResponseError, Verdict, VideoLocation};

/// Returns the contents of fenced code blocks, or the whole text when
/// there are none. An unterminated fence runs to the end of the text.
pub fn strip_fences(raw: &str) -> String {
    if !raw.contains("```") {
        return raw.to_string();
    }
    let mut blocks = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip an info string such as `json`.
        let body_start = after.find('\n').map(|n| n + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                blocks.push(body);
                rest = "";
            }
        }
    }
    blocks.join("\n")
}

/// Candidate `{...}` spans with balanced braces, skipping braces inside
/// string literals.
fn balanced_objects(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    while let Some(rel) = text[start..].find('{') {
        let open = start + rel;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut end = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(e) => {
                spans.push((open, e + 1));
                start = open + 1;
            }
            None => break,
        }
    }
    spans
}

/// Rewrites bare `True`/`False`/`None` outside string literals to JSON
/// literals; the video prompt itself asks for `False`.
fn normalize_literals(obj: &str) -> String {
    let mut out = String::with_capacity(obj.len());
    let mut in_str = false;
    let mut escaped = false;
    let mut chars = obj.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if in_str {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_str = true;
            out.push(c);
            continue;
        }
        if c.is_ascii_alphabetic() {
            let word_end = obj[i..]
                .find(|ch: char| !ch.is_ascii_alphanumeric() && ch != '_')
                .map(|n| i + n)
                .unwrap_or(obj.len());
            let word = &obj[i..word_end];
            let replaced = match word {
                "True" => "true",
                "False" => "false",
                "None" | "Null" => "null",
                w => w,
            };
            out.push_str(replaced);
            while chars.peek().is_some_and(|&(j, _)| j < word_end) {
                chars.next();
            }
            continue;
        }
        out.push(c);
    }
    out
}

/// The first balanced JSON object in `raw`, after fence stripping.
pub fn extract_json_object(raw: &str) -> Result<Map<String, Value>, ResponseError> {
    let stripped = strip_fences(raw);
    for text in [stripped.as_str(), raw] {
        for (a, b) in balanced_objects(text) {
            let span = &text[a..b];
            let parsed = serde_json::from_str::<Value>(span)
                .or_else(|_| serde_json::from_str::<Value>(&normalize_literals(span)));
            if let Ok(Value::Object(map)) = parsed {
                return Ok(map);
            }
        }
    }
    Err(ResponseError::NoJson)
}

/// Case-insensitive key lookup, exact match preferred.
fn field<'a>(map: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    map.get(key).or_else(|| {
        map.iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key) || k.replace(' ', "_").eq_ignore_ascii_case(key))
            .map(|(_, v)| v)
    })
}

fn text_field(map: &Map<String, Value>, key: &'static str) -> Result<String, ResponseError> {
    match field(map, key) {
        None | Some(Value::Null) => Err(ResponseError::MissingField(key)),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Ok(other.to_string()),
    }
}

fn operation_field(map: &Map<String, Value>) -> Result<crate::agent::Action, ResponseError> {
    match field(map, "Operation") {
        None | Some(Value::Null) => Err(ResponseError::MissingField("Operation")),
        Some(Value::String(s)) => parse_action(s),
        Some(other) => Err(ResponseError::Malformed(format!("Operation must be a string, got {other}"))),
    }
}

pub fn parse_decision(raw: &str) -> Result<Decision, ResponseError> {
    let map = extract_json_object(raw)?;
    let operation = operation_field(&map)?;
    Ok(Decision {
        thought: text_field(&map, "Thought")?,
        operation,
        summary: text_field(&map, "Summary")?,
    })
}

/// True when the last non-empty line, outside any JSON object, contains a
/// standalone `True` token.
fn last_line_affirms(text: &str) -> bool {
    let trimmed = text.trim_end();
    let line_start = trimmed.rfind('\n').map(|n| n + 1).unwrap_or(0);
    let line = &trimmed[line_start..];
    let in_object = balanced_objects(trimmed)
        .iter()
        .any(|&(a, b)| a < trimmed.len() && b > line_start);
    !in_object
        && line
            .split(|c: char| !c.is_ascii_alphanumeric())
            .any(|tok| tok.eq_ignore_ascii_case("true"))
}

/// A final line carrying a standalone `True` passes the proposal through;
/// otherwise the first JSON object must carry a replacement `Operation`.
/// A replacement identical to the original also counts as a pass-through.
pub fn parse_reflection(raw: &str, original: &Decision) -> Result<ReflectionResult, ResponseError> {
    let stripped = strip_fences(raw);
    let pass = ReflectionResult {
        verdict: Verdict::PassThrough,
        raw_reasoning: raw.to_string(),
    };
    if last_line_affirms(&stripped) || last_line_affirms(raw) {
        return Ok(pass);
    }
    let map = extract_json_object(raw)?;
    let action = operation_field(&map)?;
    if action == original.operation {
        return Ok(pass);
    }
    Ok(ReflectionResult {
        verdict: Verdict::Refined(action),
        raw_reasoning: raw.to_string(),
    })
}

fn frame_field(map: &Map<String, Value>) -> Result<usize, ResponseError> {
    let bad = |v: &Value| ResponseError::Malformed(format!("Frame must be a non-negative integer, got {v}"));
    match field(map, "Frame") {
        None | Some(Value::Null) => Err(ResponseError::MissingField("Frame")),
        Some(v @ Value::Number(n)) => {
            if let Some(u) = n.as_u64() {
                Ok(u as usize)
            } else {
                match n.as_f64() {
                    Some(f) if f >= 0.0 && f.fract() == 0.0 => Ok(f as usize),
                    _ => Err(bad(v)),
                }
            }
        }
        Some(v @ Value::String(s)) => s.trim().parse::<usize>().map_err(|_| bad(v)),
        Some(v) => Err(bad(v)),
    }
}

fn bool_field(map: &Map<String, Value>, key: &'static str) -> Result<bool, ResponseError> {
    match field(map, key) {
        None | Some(Value::Null) => Err(ResponseError::MissingField(key)),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("true") => Ok(true),
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("false") => Ok(false),
        Some(v) => Err(ResponseError::Malformed(format!("{key} must be a boolean, got {v}"))),
    }
}

fn analysis_field(map: &Map<String, Value>) -> Result<Option<String>, ResponseError> {
    if !map.keys().any(|k| k.eq_ignore_ascii_case("analysis")) {
        return Err(ResponseError::MissingField("Analysis"));
    }
    Ok(match field(map, "Analysis") {
        Some(Value::String(s)) => {
            let t = s.trim();
            if t.is_empty() || t.eq_ignore_ascii_case("null") || t.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(s.clone())
            }
        }
        Some(Value::Null) | None => None,
        Some(other) => Some(other.to_string()),
    })
}

pub fn parse_video(raw: &str) -> Result<VideoLocation, ResponseError> {
    let map = extract_json_object(raw)?;
    let loc = VideoLocation {
        thought: text_field(&map, "Thought")?,
        frame: frame_field(&map)?,
        analysis: analysis_field(&map)?,
        need_back: bool_field(&map, "Need_Back")?,
    };
    loc.validate()?;
    Ok(loc)
}
