//! Action execution and observation.
//!
//! [`Device`] is the contract the orchestrator drives. [`SimDevice`] walks a
//! [`UiGraph`] deterministically; [`AdbDevice`] drives a phone over the
//! Android debug bridge. Both return screenshots annotated with numbered
//! Set-of-Mark boxes so agents can refer to elements by id.

mod adb;
mod sim;
mod som;

use std::fmt;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Action, Direction};

pub use adb::{
    escape_input_text, parse_hierarchy, real_adapter_command, AdbCommand, AdbDevice, CommandOutput,
    CommandRunner, SystemRunner, SCROLL_DURATION_MS,
};
pub use sim::{load_ui_graph, parse_ui_graph, render_demonstration, ScreenDef, SimDevice, UiGraph};
pub use som::annotate;

/// A screen rectangle in pixels, right/bottom exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct Rect {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl From<[i32; 4]> for Rect {
    fn from([left, top, right, bottom]: [i32; 4]) -> Self {
        Self { left, top, right, bottom }
    }
}

impl From<Rect> for [i32; 4] {
    fn from(r: Rect) -> Self {
        [r.left, r.top, r.right, r.bottom]
    }
}

impl Rect {
    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    pub fn is_empty(&self) -> bool {
        self.width() <= 0 || self.height() <= 0
    }

    pub fn center(&self) -> (i32, i32) {
        ((self.left + self.right) / 2, (self.top + self.bottom) / 2)
    }
}

/// An element the agents can address by its mark number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    pub mark_id: u32,
    pub bounds: Rect,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default = "default_true")]
    pub clickable: bool,
}

fn default_true() -> bool {
    true
}

/// Top-to-bottom, then left-to-right; ties keep their input order.
pub fn sort_traversal(elements: &mut [UiElement]) {
    elements.sort_by_key(|e| (e.bounds.top, e.bounds.left));
}

/// One observation of the device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    /// Screenshot with Set-of-Mark boxes drawn.
    pub screenshot: RgbImage,
    /// In traversal order.
    pub elements: Vec<UiElement>,
    /// Known only on simulated devices.
    pub screen_id: Option<String>,
}

impl DeviceState {
    pub fn mark_ids(&self) -> Vec<u32> {
        self.elements.iter().map(|e| e.mark_id).collect()
    }

    pub fn element(&self, mark_id: u32) -> Option<&UiElement> {
        self.elements.iter().find(|e| e.mark_id == mark_id)
    }
}

/// Available mark ids, printed as `[1, 2, 3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkIds(pub Vec<u32>);

impl fmt::Display for MarkIds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("device unreachable: {0}")]
    Connectivity(String),
    #[error("cannot ground {action}: {reason} (available marks {available})")]
    Grounding {
        action: Action,
        reason: String,
        available: MarkIds,
    },
    #[error("dead end: {action} has no transition from screen {screen:?} (available marks {available})")]
    DeadEnd {
        action: Action,
        screen: String,
        available: MarkIds,
    },
    #[error("{action} is not supported by this device")]
    Unsupported { action: Action, available: MarkIds },
    #[error("invalid UI graph {source_name}:\n  {}", problems.join("\n  "))]
    Graph { source_name: String, problems: Vec<String> },
    #[error("{0}")]
    Io(String),
}

impl DeviceError {
    /// True for errors that mean the agent's action could not be carried out
    /// on the current screen.
    pub fn is_grounding(&self) -> bool {
        matches!(
            self,
            DeviceError::Grounding { .. } | DeviceError::DeadEnd { .. } | DeviceError::Unsupported { .. }
        )
    }
}

pub type Result<T, E = DeviceError> = std::result::Result<T, E>;

/// The execution surface. A handle belongs to one task run at a time.
pub trait Device {
    /// Observes the device without changing it.
    fn capture(&self) -> Result<DeviceState>;

    /// Carries out `action` and returns the state afterwards. `Done` leaves
    /// the device untouched.
    fn execute(&mut self, action: &Action) -> Result<DeviceState>;

    fn supports_scroll(&self, direction: Direction) -> bool {
        let _ = direction;
        true
    }
}

impl<D: Device + ?Sized> Device for Box<D> {
    fn capture(&self) -> Result<DeviceState> {
        (**self).capture()
    }

    fn execute(&mut self, action: &Action) -> Result<DeviceState> {
        (**self).execute(action)
    }

    fn supports_scroll(&self, direction: Direction) -> bool {
        (**self).supports_scroll(direction)
    }
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// First element (traversal order) whose text equals `text`, ignoring case
/// and whitespace runs; failing that, the first whose text contains it.
pub fn find_by_text<'a>(elements: &'a [UiElement], text: &str) -> Option<&'a UiElement> {
    let wanted = normalize_text(text);
    if wanted.is_empty() {
        return None;
    }
    let with_text = || elements.iter().filter_map(|e| e.text.as_deref().map(|t| (e, normalize_text(t))));
    with_text()
        .find(|(_, t)| *t == wanted)
        .or_else(|| with_text().find(|(_, t)| t.contains(&wanted)))
        .map(|(e, _)| e)
}
