use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use image::{Rgb, RgbImage};
use serde::Deserialize;

use super::{
    annotate, find_by_text, sort_traversal, Device, DeviceError, DeviceState, MarkIds, Result,
    UiElement,
};
use crate::agent::{parse_action, Action, Direction};
use crate::render::{draw_text, fill_rect, stroke_rect, text_height, text_width};

const DEFAULT_WIDTH: u32 = 360;
const DEFAULT_HEIGHT: u32 = 640;
const TITLE_BAR: u32 = 44;

fn default_width() -> u32 {
    DEFAULT_WIDTH
}

fn default_height() -> u32 {
    DEFAULT_HEIGHT
}

fn all_directions() -> Vec<Direction> {
    Direction::ALL.to_vec()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    initial: String,
    home: String,
    #[serde(default = "default_width")]
    width: u32,
    #[serde(default = "default_height")]
    height: u32,
    #[serde(default = "all_directions", deserialize_with = "de_directions")]
    scroll: Vec<Direction>,
    #[serde(default)]
    screens: BTreeMap<String, RawScreen>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScreen {
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: Vec<String>,
    #[serde(default)]
    background: Option<[u8; 3]>,
    #[serde(default)]
    elements: Vec<RawElement>,
    #[serde(default)]
    transitions: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: u32,
    bounds: [i32; 4],
    #[serde(default)]
    text: Option<String>,
    #[serde(default = "yes")]
    clickable: bool,
}

fn yes() -> bool {
    true
}

fn de_directions<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Direction>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    names
        .iter()
        .map(|n| n.parse().map_err(serde::de::Error::custom))
        .collect()
}

/// One simulated screen.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenDef {
    pub id: String,
    pub title: String,
    /// Free text lines drawn under the title bar.
    pub text: Vec<String>,
    pub background: Rgb<u8>,
    /// In traversal order.
    pub elements: Vec<UiElement>,
    pub transitions: HashMap<Action, String>,
}

impl ScreenDef {
    pub fn element(&self, mark_id: u32) -> Option<&UiElement> {
        self.elements.iter().find(|e| e.mark_id == mark_id)
    }

    fn mark_ids(&self) -> MarkIds {
        MarkIds(self.elements.iter().map(|e| e.mark_id).collect())
    }
}

/// A validated simulated app: screens, their elements and the action edges
/// between them.
#[derive(Debug, Clone, PartialEq)]
pub struct UiGraph {
    pub initial: String,
    pub home: String,
    pub width: u32,
    pub height: u32,
    pub scroll: Vec<Direction>,
    pub screens: BTreeMap<String, ScreenDef>,
}

/// A stable pastel colour per screen id so consecutive screens differ
/// visibly in a recording.
fn background_for(id: &str) -> Rgb<u8> {
    let mut h: u32 = 0x811c_9dc5;
    for b in id.bytes() {
        h = (h ^ b as u32).wrapping_mul(0x0100_0193);
    }
    let channel = |shift: u32| 150 + ((h >> shift) & 0x5f) as u8;
    Rgb([channel(0), channel(8), channel(16)])
}

/// Parses and validates a UI graph document. `source_name` is used in error
/// messages.
pub fn parse_ui_graph(text: &str, source_name: &str) -> Result<UiGraph> {
    let fail = |problems: Vec<String>| DeviceError::Graph { source_name: source_name.to_string(), problems };
    let raw: RawGraph = toml::from_str(text).map_err(|e| fail(vec![e.to_string()]))?;

    let mut problems = Vec::new();
    if raw.screens.is_empty() {
        problems.push("screens: no screens defined".to_string());
    } else {
        for (field, id) in [("initial", &raw.initial), ("home", &raw.home)] {
            if !raw.screens.contains_key(id) {
                problems.push(format!("{field}: screen {id:?} does not exist"));
            }
        }
    }
    if raw.width == 0 || raw.height == 0 {
        problems.push(format!("width/height: {}x{} is empty", raw.width, raw.height));
    }

    let mut screens = BTreeMap::new();
    for (id, s) in &raw.screens {
        let mut elements: Vec<UiElement> = s
            .elements
            .iter()
            .map(|e| UiElement {
                mark_id: e.id,
                bounds: e.bounds.into(),
                text: e.text.clone(),
                clickable: e.clickable,
            })
            .collect();
        for e in &elements {
            if e.mark_id == 0 {
                problems.push(format!("screens.{id}.elements: mark id must be at least 1"));
            }
            if e.bounds.is_empty() {
                problems.push(format!("screens.{id}.elements: element {} has empty bounds", e.mark_id));
            }
        }
        sort_traversal(&mut elements);
        for pair in elements.windows(2) {
            if pair[1].mark_id <= pair[0].mark_id {
                problems.push(format!(
                    "screens.{id}.elements: mark ids must increase in top-to-bottom, left-to-right order ({} precedes {})",
                    pair[0].mark_id, pair[1].mark_id
                ));
            }
        }

        let mut transitions = HashMap::new();
        for (key, target) in &s.transitions {
            let path = format!("screens.{id}.transitions.{key:?}");
            let action = match parse_action(key) {
                Ok(a) => a,
                Err(e) => {
                    problems.push(format!("{path}: {e}"));
                    continue;
                }
            };
            if action.is_done() {
                problems.push(format!("{path}: Done never changes the screen"));
                continue;
            }
            if let Action::Click { id: mark } = action {
                if !elements.iter().any(|e| e.mark_id == mark) {
                    problems.push(format!("{path}: no element with mark {mark} on this screen"));
                }
            }
            if !raw.screens.contains_key(target) {
                problems.push(format!("{path}: target screen {target:?} does not exist"));
            }
            if transitions.insert(action.clone(), target.clone()).is_some() {
                problems.push(format!("{path}: duplicates another key for {action}"));
            }
        }

        screens.insert(
            id.clone(),
            ScreenDef {
                id: id.clone(),
                title: s.title.clone(),
                text: s.text.clone(),
                background: s.background.map(Rgb).unwrap_or_else(|| background_for(id)),
                elements,
                transitions,
            },
        );
    }

    if !problems.is_empty() {
        return Err(fail(problems));
    }
    Ok(UiGraph { initial: raw.initial, home: raw.home, width: raw.width, height: raw.height, scroll: raw.scroll, screens })
}

pub fn load_ui_graph(path: &Path) -> Result<UiGraph> {
    let text = fs::read_to_string(path).map_err(|e| DeviceError::Io(format!("{}: {e}", path.display())))?;
    parse_ui_graph(&text, &path.display().to_string())
}

impl UiGraph {
    pub fn screen(&self, id: &str) -> Option<&ScreenDef> {
        self.screens.get(id)
    }

    /// The screen as pixels, without Set-of-Mark annotation.
    pub fn render(&self, id: &str) -> Option<RgbImage> {
        let s = self.screen(id)?;
        let mut img = RgbImage::from_pixel(self.width, self.height, s.background);
        let ink = Rgb([25, 25, 35]);
        let scale = (self.width / 180).max(1);

        let bar = TITLE_BAR * scale / 2;
        fill_rect(&mut img, 0, 0, self.width, bar, Rgb([40, 44, 60]));
        let ty = (bar.saturating_sub(text_height(scale)) / 2) as i64;
        draw_text(&mut img, 8, ty, &s.title, scale, Rgb([245, 245, 245]));

        let line_h = text_height(scale) + 4 * scale;
        for (i, line) in s.text.iter().enumerate() {
            let y = (bar + 8 + i as u32 * line_h) as i64;
            draw_text(&mut img, 8, y, line, scale, ink);
        }

        for e in &s.elements {
            let b = e.bounds;
            let (w, h) = (b.width() as u32, b.height() as u32);
            if e.clickable {
                fill_rect(&mut img, b.left as i64, b.top as i64, w, h, Rgb([248, 248, 248]));
                stroke_rect(&mut img, b.left as i64, b.top as i64, w, h, 1, Rgb([120, 120, 130]));
            }
            if let Some(text) = &e.text {
                let tx = b.left as i64 + (w as i64 - text_width(text, scale) as i64).max(0) / 2;
                let ty = b.top as i64 + (h as i64 - text_height(scale) as i64).max(0) / 2;
                draw_text(&mut img, tx, ty, text, scale, ink);
            }
        }
        Some(img)
    }
}

/// Renders a screen recording that walks `path`, holding each screen for
/// `hold` frames.
pub fn render_demonstration(graph: &UiGraph, path: &[String], hold: usize) -> Result<Vec<RgbImage>> {
    let mut frames = Vec::with_capacity(path.len() * hold);
    for id in path {
        let img = graph
            .render(id)
            .ok_or_else(|| DeviceError::Io(format!("demonstration path names unknown screen {id:?}")))?;
        frames.extend(std::iter::repeat_n(img, hold));
    }
    Ok(frames)
}

/// A deterministic state machine over a [`UiGraph`].
#[derive(Debug, Clone)]
pub struct SimDevice {
    graph: Arc<UiGraph>,
    current: String,
    trail: Vec<String>,
    executed: Vec<Action>,
}

impl SimDevice {
    pub fn new(graph: impl Into<Arc<UiGraph>>) -> Self {
        let graph = graph.into();
        let current = graph.initial.clone();
        Self { trail: vec![current.clone()], current, graph, executed: Vec::new() }
    }

    pub fn graph(&self) -> &UiGraph {
        &self.graph
    }

    pub fn current_screen(&self) -> &str {
        &self.current
    }

    /// Every screen visited, starting with the initial one.
    pub fn trail(&self) -> &[String] {
        &self.trail
    }

    /// Actions that reached the device, `Done` included.
    pub fn executed(&self) -> &[Action] {
        &self.executed
    }

    fn screen(&self) -> &ScreenDef {
        self.graph.screen(&self.current).expect("current screen exists in a validated graph")
    }

    /// Where `action` leads from the current screen.
    fn target(&self, action: &Action) -> Result<Option<String>> {
        let screen = self.screen();
        let grounding = |reason: String| DeviceError::Grounding {
            action: action.clone(),
            reason,
            available: screen.mark_ids(),
        };
        let edge = |a: &Action| screen.transitions.get(a).cloned();
        let found = match action {
            Action::Done => return Ok(None),
            Action::Click { id } => {
                screen.element(*id).ok_or_else(|| grounding(format!("no element with mark {id}")))?;
                edge(action)
            }
            Action::ClickText { text } => {
                let hit = find_by_text(&screen.elements, text)
                    .ok_or_else(|| grounding(format!("no element with text {text:?}")))?;
                edge(action).or_else(|| edge(&Action::Click { id: hit.mark_id }))
            }
            Action::Scroll { direction } => {
                if !self.graph.scroll.contains(direction) {
                    return Err(DeviceError::Unsupported { action: action.clone(), available: screen.mark_ids() });
                }
                edge(action)
            }
            Action::Type { .. } => edge(action).or_else(|| edge(&Action::Type { text: "*".into() })),
            Action::Home => edge(action).or_else(|| Some(self.graph.home.clone())),
            Action::Back => edge(action),
        };
        found.map(Some).ok_or_else(|| DeviceError::DeadEnd {
            action: action.clone(),
            screen: self.current.clone(),
            available: screen.mark_ids(),
        })
    }
}

impl Device for SimDevice {
    fn capture(&self) -> Result<DeviceState> {
        let screen = self.screen();
        let raw = self.graph.render(&self.current).expect("current screen renders");
        Ok(DeviceState {
            screenshot: annotate(&raw, &screen.elements),
            elements: screen.elements.clone(),
            screen_id: Some(self.current.clone()),
        })
    }

    fn execute(&mut self, action: &Action) -> Result<DeviceState> {
        let target = self.target(action)?;
        self.executed.push(action.clone());
        if let Some(next) = target {
            log::debug!("sim: {} --{action}--> {next}", self.current);
            self.current = next;
            self.trail.push(self.current.clone());
        }
        self.capture()
    }

    fn supports_scroll(&self, direction: Direction) -> bool {
        self.graph.scroll.contains(&direction)
    }
}
