use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ResponseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = ResponseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_matches('"');
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ResponseError::Malformed(format!("unknown scroll direction {s:?}")))
    }
}

/// The operation vocabulary shared by all three agents.
///
/// Text parameters are trimmed and non-empty when produced by [`parse_action`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    /// Tap the element carrying this Set-of-Mark number.
    Click { id: u32 },
    /// Tap the first element whose text matches.
    ClickText { text: String },
    Scroll { direction: Direction },
    Type { text: String },
    Back,
    Home,
    Done,
}

impl Action {
    pub fn verb(&self) -> &'static str {
        match self {
            Action::Click { .. } => "Click",
            Action::ClickText { .. } => "Click_text",
            Action::Scroll { .. } => "Scroll",
            Action::Type { .. } => "Type",
            Action::Back => "Back",
            Action::Home => "Home",
            Action::Done => "Done",
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self, Action::Done)
    }

    /// Whether executing the action touches the device.
    pub fn is_device_action(&self) -> bool {
        !self.is_done()
    }
}

fn quote_if_ambiguous(text: &str) -> String {
    // A text that itself looks quoted gets one extra pair, which the parser
    // strips again.
    if text.len() >= 2 && text.starts_with('"') && text.ends_with('"') {
        format!("\"{text}\"")
    } else {
        text.to_string()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click { id } => write!(f, "Click ({id})"),
            Action::ClickText { text } => write!(f, "Click_text ({})", quote_if_ambiguous(text)),
            Action::Scroll { direction } => write!(f, "Scroll ({direction})"),
            Action::Type { text } => write!(f, "Type ({})", quote_if_ambiguous(text)),
            Action::Back => f.write_str("Back"),
            Action::Home => f.write_str("Home"),
            Action::Done => f.write_str("Done"),
        }
    }
}

fn text_param(raw: &str) -> Result<String, ResponseError> {
    let mut t = raw.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        t = t[1..t.len() - 1].trim();
    }
    if t.is_empty() {
        return Err(ResponseError::Malformed("empty text parameter".into()));
    }
    Ok(t.to_string())
}

/// Parses the canonical operation forms, e.g. `Click (3)`, `Scroll (down)`,
/// `Type (Hello)`, `Back`. Verbs are matched case-insensitively and
/// whitespace around the verb and parentheses is ignored.
pub fn parse_action(s: &str) -> Result<Action, ResponseError> {
    let s = s.trim();
    let (verb, param) = match s.find('(') {
        Some(open) => {
            let close = s
                .rfind(')')
                .filter(|&c| c > open)
                .ok_or_else(|| ResponseError::Malformed(format!("unbalanced parentheses in {s:?}")))?;
            if !s[close + 1..].trim().is_empty() {
                return Err(ResponseError::Malformed(format!("trailing text after operation in {s:?}")));
            }
            (s[..open].trim(), Some(&s[open + 1..close]))
        }
        None => (s, None),
    };
    let lowered = verb.to_ascii_lowercase();
    fn require<'a>(verb: &str, p: Option<&'a str>) -> Result<&'a str, ResponseError> {
        p.ok_or_else(|| ResponseError::Malformed(format!("{verb} requires a parameter")))
    }
    let no_param = |p: Option<&str>| match p {
        Some(p) if !p.trim().is_empty() => {
            Err(ResponseError::Malformed(format!("{verb} takes no parameter")))
        }
        _ => Ok(()),
    };
    match lowered.as_str() {
        "click" => {
            let p = require(verb, param)?.trim();
            let id = p
                .parse::<u32>()
                .map_err(|_| ResponseError::Malformed(format!("click id {p:?} is not a non-negative integer")))?;
            Ok(Action::Click { id })
        }
        "click_text" => Ok(Action::ClickText { text: text_param(require(verb, param)?)? }),
        "scroll" => Ok(Action::Scroll { direction: require(verb, param)?.parse()? }),
        "type" => Ok(Action::Type { text: text_param(require(verb, param)?)? }),
        "back" => no_param(param).map(|_| Action::Back),
        "home" => no_param(param).map(|_| Action::Home),
        "done" => no_param(param).map(|_| Action::Done),
        _ => Err(ResponseError::Vocabulary(verb.to_string())),
    }
}

impl FromStr for Action {
    type Err = ResponseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_action(s)
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_action(&s).map_err(serde::de::Error::custom)
    }
}
