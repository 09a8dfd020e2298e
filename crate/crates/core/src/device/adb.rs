use std::cell::RefCell;
use std::fmt;
use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use image::RgbImage;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::{annotate, find_by_text, sort_traversal, Device, DeviceError, DeviceState, MarkIds, Rect, Result, UiElement};
use crate::agent::{Action, Direction};

pub const SCROLL_DURATION_MS: u32 = 300;
const SCROLL_FAR: f64 = 0.7;
const SCROLL_NEAR: f64 = 0.3;
const DUMP_PATH: &str = "/sdcard/vidguide_window_dump.xml";

/// Arguments following `adb [-s serial]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdbCommand {
    pub args: Vec<String>,
}

impl AdbCommand {
    fn shell(parts: &[&str]) -> Self {
        Self { args: std::iter::once("shell").chain(parts.iter().copied()).map(String::from).collect() }
    }
}

impl fmt::Display for AdbCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "adb {}", self.args.join(" "))
    }
}

/// Escapes a payload for `input text`, which runs through the device shell
/// and reads `%s` as a space.
pub fn escape_input_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len() * 2);
    for c in text.chars() {
        match c {
            ' ' => out.push_str("%s"),
            '\\' | '\'' | '"' | '`' | '$' | '&' | '|' | ';' | '<' | '>' | '(' | ')' | '*' | '?' | '!'
            | '#' | '~' | '[' | ']' | '{' | '}' | '%' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

fn resolve<'a>(action: &Action, elements: &'a [UiElement]) -> Result<&'a UiElement> {
    let available = || MarkIds(elements.iter().map(|e| e.mark_id).collect());
    let found = match action {
        Action::Click { id } => elements.iter().find(|e| e.mark_id == *id),
        Action::ClickText { text } => find_by_text(elements, text),
        _ => None,
    };
    let e = found.ok_or_else(|| DeviceError::Grounding {
        action: action.clone(),
        reason: "no matching element on screen".into(),
        available: available(),
    })?;
    if e.bounds.is_empty() {
        return Err(DeviceError::Grounding {
            action: action.clone(),
            reason: format!("element {} has empty bounds {:?}", e.mark_id, <[i32; 4]>::from(e.bounds)),
            available: available(),
        });
    }
    Ok(e)
}

/// Translates an action into the debug-bridge invocation that performs it,
/// or `None` for `Done`. `screen` is the display size in pixels.
pub fn real_adapter_command(action: &Action, elements: &[UiElement], screen: (u32, u32)) -> Result<Option<AdbCommand>> {
    let (w, h) = (screen.0 as f64, screen.1 as f64);
    let frac = |total: f64, f: f64| ((total * f).round() as i64).to_string();
    let cmd = match action {
        Action::Done => return Ok(None),
        Action::Click { .. } | Action::ClickText { .. } => {
            let (x, y) = resolve(action, elements)?.bounds.center();
            AdbCommand::shell(&["input", "tap", &x.to_string(), &y.to_string()])
        }
        Action::Scroll { direction } => {
            // Scrolling down reveals content below, so the finger moves up.
            let (x1, y1, x2, y2) = match direction {
                Direction::Down => (frac(w, 0.5), frac(h, SCROLL_FAR), frac(w, 0.5), frac(h, SCROLL_NEAR)),
                Direction::Up => (frac(w, 0.5), frac(h, SCROLL_NEAR), frac(w, 0.5), frac(h, SCROLL_FAR)),
                Direction::Right => (frac(w, SCROLL_FAR), frac(h, 0.5), frac(w, SCROLL_NEAR), frac(h, 0.5)),
                Direction::Left => (frac(w, SCROLL_NEAR), frac(h, 0.5), frac(w, SCROLL_FAR), frac(h, 0.5)),
            };
            let ms = SCROLL_DURATION_MS.to_string();
            AdbCommand::shell(&["input", "swipe", &x1, &y1, &x2, &y2, &ms])
        }
        Action::Type { text } => AdbCommand::shell(&["input", "text", &escape_input_text(text)]),
        Action::Back => AdbCommand::shell(&["input", "keyevent", "4"]),
        Action::Home => AdbCommand::shell(&["input", "keyevent", "3"]),
    };
    Ok(Some(cmd))
}

fn parse_bounds(s: &str) -> Option<Rect> {
    // "[x1,y1][x2,y2]"
    let nums: Vec<i32> = s
        .split(|c: char| !(c.is_ascii_digit() || c == '-'))
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    match nums[..] {
        [l, t, r, b] => Some(Rect { left: l, top: t, right: r, bottom: b }),
        _ => None,
    }
}

/// Extracts addressable elements from a view-hierarchy dump: clickable nodes
/// and nodes carrying visible text. Mark ids follow traversal order.
pub fn parse_hierarchy(xml: &str) -> Result<Vec<UiElement>> {
    let mut reader = Reader::from_str(xml);
    let mut elements = Vec::new();
    loop {
        let event = reader
            .read_event()
            .map_err(|e| DeviceError::Io(format!("hierarchy dump at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(node) | Event::Empty(node) if node.name().as_ref() == b"node" => {
                let mut text = None;
                let mut desc = None;
                let mut clickable = false;
                let mut bounds = None;
                for attr in node.attributes().flatten() {
                    let value = attr
                        .unescape_value()
                        .map_err(|e| DeviceError::Io(format!("hierarchy dump attribute: {e}")))?
                        .into_owned();
                    match attr.key.as_ref() {
                        b"text" => text = Some(value).filter(|v| !v.trim().is_empty()),
                        b"content-desc" => desc = Some(value).filter(|v| !v.trim().is_empty()),
                        b"clickable" => clickable = value == "true",
                        b"bounds" => bounds = parse_bounds(&value),
                        _ => {}
                    }
                }
                let text = text.or(desc);
                if let Some(bounds) = bounds.filter(|b| !b.is_empty()) {
                    if clickable || text.is_some() {
                        elements.push(UiElement { mark_id: 0, bounds, text, clickable });
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    sort_traversal(&mut elements);
    for (i, e) in elements.iter_mut().enumerate() {
        e.mark_id = i as u32 + 1;
    }
    Ok(elements)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutput {
    pub success: bool,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

/// Runs `adb` with the given arguments. Swappable so the adapter can be
/// exercised without a phone.
pub trait CommandRunner {
    fn run(&self, args: &[String]) -> std::io::Result<CommandOutput>;
}

/// Spawns the real `adb` binary.
#[derive(Debug, Clone)]
pub struct SystemRunner {
    pub adb: PathBuf,
    pub serial: Option<String>,
}

impl Default for SystemRunner {
    fn default() -> Self {
        Self { adb: PathBuf::from("adb"), serial: None }
    }
}

impl CommandRunner for SystemRunner {
    fn run(&self, args: &[String]) -> std::io::Result<CommandOutput> {
        let mut cmd = Command::new(&self.adb);
        if let Some(serial) = &self.serial {
            cmd.args(["-s", serial]);
        }
        let out = cmd.args(args).output()?;
        Ok(CommandOutput {
            success: out.status.success(),
            stdout: out.stdout,
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        })
    }
}

/// A phone reached over the Android debug bridge.
pub struct AdbDevice<R: CommandRunner = SystemRunner> {
    runner: R,
    /// Pause after each action so the UI settles before the next capture.
    pub settle: Duration,
    last: RefCell<Option<Vec<UiElement>>>,
}

impl<R: CommandRunner> AdbDevice<R> {
    pub fn new(runner: R) -> Self {
        Self { runner, settle: Duration::from_millis(800), last: RefCell::new(None) }
    }

    pub fn with_settle(mut self, settle: Duration) -> Self {
        self.settle = settle;
        self
    }

    fn run(&self, args: Vec<String>) -> Result<CommandOutput> {
        let out = self
            .runner
            .run(&args)
            .map_err(|e| DeviceError::Connectivity(format!("adb {}: {e}", args.join(" "))))?;
        if !out.success {
            return Err(DeviceError::Connectivity(format!("adb {} failed: {}", args.join(" "), out.stderr.trim())));
        }
        Ok(out)
    }

    fn screencap(&self) -> Result<RgbImage> {
        let out = self.run(vec!["exec-out".into(), "screencap".into(), "-p".into()])?;
        image::load_from_memory_with_format(&out.stdout, image::ImageFormat::Png)
            .map(|img| img.to_rgb8())
            .map_err(|e| DeviceError::Connectivity(format!("screencap returned an unreadable image: {e}")))
    }

    fn dump_elements(&self) -> Result<Vec<UiElement>> {
        self.run(AdbCommand::shell(&["uiautomator", "dump", DUMP_PATH]).args)?;
        let out = self.run(vec!["exec-out".into(), "cat".into(), DUMP_PATH.into()])?;
        parse_hierarchy(&String::from_utf8_lossy(&out.stdout))
    }
}

impl<R: CommandRunner> Device for AdbDevice<R> {
    fn capture(&self) -> Result<DeviceState> {
        let screenshot = self.screencap()?;
        let elements = match self.dump_elements() {
            Ok(e) => e,
            Err(err) => {
                // Without marks the agents fall back to Click_text.
                log::warn!("hierarchy dump unavailable, capturing without marks: {err}");
                Vec::new()
            }
        };
        *self.last.borrow_mut() = Some(elements.clone());
        Ok(DeviceState { screenshot: annotate(&screenshot, &elements), elements, screen_id: None })
    }

    fn execute(&mut self, action: &Action) -> Result<DeviceState> {
        if action.is_done() {
            return self.capture();
        }
        let needs_elements = matches!(action, Action::Click { .. } | Action::ClickText { .. });
        let (elements, size) = if needs_elements || matches!(action, Action::Scroll { .. }) {
            let state = self.capture()?;
            (state.elements, state.screenshot.dimensions())
        } else {
            (self.last.borrow().clone().unwrap_or_default(), (0, 0))
        };
        if let Some(cmd) = real_adapter_command(action, &elements, size)? {
            log::debug!("{cmd}");
            self.run(cmd.args)?;
        }
        if !self.settle.is_zero() {
            std::thread::sleep(self.settle);
        }
        self.capture()
    }
}
