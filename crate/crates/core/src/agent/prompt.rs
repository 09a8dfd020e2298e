//! Prompt rendering for the decision, reflection and video agents.
//!
//! Template text lives in `assets/prompts/` and is substituted in a single
//! pass, so instruction text that happens to contain `{user_task}` or JSON
//! braces is copied through untouched.

use image::{imageops, Rgb, RgbImage};
use serde::Serialize;
use thiserror::Error;

use super::{AgentRole, Decision, ModelRequest};
use crate::render;
use crate::video::Mosaic;

fn asset(raw: &'static str) -> &'static str {
    raw.strip_suffix('\n').unwrap_or(raw)
}

pub fn decision_system_template() -> &'static str {
    asset(include_str!("../../assets/prompts/decision_system.txt"))
}
pub fn decision_first_user_template() -> &'static str {
    asset(include_str!("../../assets/prompts/decision_first_user.txt"))
}
pub fn decision_next_user_template() -> &'static str {
    asset(include_str!("../../assets/prompts/decision_next_user.txt"))
}
pub fn reflection_system_template() -> &'static str {
    asset(include_str!("../../assets/prompts/reflection_system.txt"))
}
pub fn video_system_template() -> &'static str {
    asset(include_str!("../../assets/prompts/video_system.txt"))
}
pub fn video_user_template() -> &'static str {
    asset(include_str!("../../assets/prompts/video_user.txt"))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("{0} must not be empty")]
    EmptyField(&'static str),
    #[error("video agent needs exactly 2 screenshots (before, after), got {0}")]
    Arity(usize),
    #[error("Done is never sent to reflection; it terminates the run directly")]
    DoneProposal,
    #[error("screenshots differ in size: {0:?} vs {1:?}")]
    ScreenshotShape((u32, u32), (u32, u32)),
}

/// Replaces `{name}` for each known name; every other byte is copied.
pub fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = vars.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail[1 + name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// One line of the operation history shown to the decision agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum HistoryEntry {
    /// A completed operation; rendered as a numbered `Step-n:` line.
    Step(String),
    /// Off-track analysis from the video agent, rendered unnumbered.
    Advisory(String),
}

pub fn render_history(history: &[HistoryEntry]) -> String {
    let mut n = 0;
    history
        .iter()
        .map(|entry| match entry {
            HistoryEntry::Step(s) => {
                n += 1;
                format!("Step-{n}: {s}")
            }
            HistoryEntry::Advisory(a) => format!("Off-track analysis: {a}"),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn require(name: &'static str, value: &str) -> Result<(), PromptError> {
    if value.trim().is_empty() {
        Err(PromptError::EmptyField(name))
    } else {
        Ok(())
    }
}

/// Builds the decision request. An empty history selects the first-turn
/// template.
pub fn render_decision_prompt(
    mosaic: &Mosaic,
    screenshot: &RgbImage,
    video_task: &str,
    user_task: &str,
    history: &[HistoryEntry],
) -> Result<ModelRequest, PromptError> {
    require("video instruction", video_task)?;
    require("user instruction", user_task)?;
    let history_text = render_history(history);
    let vars = [
        ("video_task", video_task),
        ("user_task", user_task),
        ("history", history_text.as_str()),
    ];
    let user_template = if history.is_empty() {
        decision_first_user_template()
    } else {
        decision_next_user_template()
    };
    Ok(ModelRequest::new(
        AgentRole::Decision,
        substitute(decision_system_template(), &vars),
        substitute(user_template, &vars),
        vec![mosaic.image.clone(), screenshot.clone()],
    ))
}

/// Builds the reflection request; the proposal is embedded in the same JSON
/// shape the decision agent answered with.
pub fn render_reflection_prompt(
    mosaic: &Mosaic,
    screenshot: &RgbImage,
    video_task: &str,
    user_task: &str,
    proposed: &Decision,
) -> Result<ModelRequest, PromptError> {
    require("video instruction", video_task)?;
    require("user instruction", user_task)?;
    if proposed.operation.is_done() {
        return Err(PromptError::DoneProposal);
    }
    let operation = proposed.to_json();
    let vars = [
        ("video_task", video_task),
        ("user_task", user_task),
        ("operation", operation.as_str()),
    ];
    Ok(ModelRequest::new(
        AgentRole::Reflection,
        substitute(reflection_system_template(), &vars),
        String::new(),
        vec![mosaic.image.clone(), screenshot.clone()],
    ))
}

const PAIR_GUTTER: u32 = 12;

/// Places `before` and `after` side by side, each with a caption banner.
pub fn compose_before_after(before: &RgbImage, after: &RgbImage) -> Result<RgbImage, PromptError> {
    if before.dimensions() != after.dimensions() {
        return Err(PromptError::ScreenshotShape(before.dimensions(), after.dimensions()));
    }
    let (w, h) = before.dimensions();
    let mut canvas = RgbImage::from_pixel(w * 2 + PAIR_GUTTER, h, Rgb([48, 48, 48]));
    imageops::replace(&mut canvas, before, 0, 0);
    imageops::replace(&mut canvas, after, (w + PAIR_GUTTER) as i64, 0);
    let scale = (h / 200).max(1);
    let fg = Rgb([255, 255, 255]);
    let bg = Rgb([0, 0, 128]);
    render::draw_label(&mut canvas, 0, 0, "BEFORE", scale, fg, bg);
    render::draw_label(&mut canvas, (w + PAIR_GUTTER) as i64, 0, "AFTER", scale, fg, bg);
    Ok(canvas)
}

/// Builds the video-agent request from the window mosaic and the
/// before/after screenshot pair of the last operation.
pub fn render_video_prompt(
    mosaic: &Mosaic,
    before_after: &[RgbImage],
    video_task: &str,
    user_task: &str,
) -> Result<ModelRequest, PromptError> {
    require("video instruction", video_task)?;
    require("user instruction", user_task)?;
    let [before, after] = before_after else {
        return Err(PromptError::Arity(before_after.len()));
    };
    let pair = compose_before_after(before, after)?;
    let vars = [("video_task", video_task), ("user_task", user_task)];
    Ok(ModelRequest::new(
        AgentRole::Video,
        substitute(video_system_template(), &vars),
        substitute(video_user_template(), &vars),
        vec![mosaic.image.clone(), pair],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Action;

    #[test]
    fn substitute_is_single_pass() {
        let out = substitute("a {x} {y} {z} {", &[("x", "{y}"), ("y", "2")]);
        assert_eq!(out, "a {y} 2 {z} {");
    }

    #[test]
    fn templates_keep_json_braces() {
        assert!(decision_system_template().ends_with("\"Summary\": Briefly summarize this operation}"));
        assert!(video_system_template().contains("{\"Thought\": Your thought"));
        assert!(!decision_first_user_template().ends_with('\n'));
    }

    #[test]
    fn history_numbering_skips_advisories() {
        let h = vec![
            HistoryEntry::Step("open app".into()),
            HistoryEntry::Advisory("wrong page".into()),
            HistoryEntry::Step("go back".into()),
        ];
        assert_eq!(
            render_history(&h),
            "Step-1: open app\nOff-track analysis: wrong page\nStep-2: go back"
        );
    }

    fn mosaic() -> Mosaic {
        Mosaic {
            image: RgbImage::new(4, 2),
            frame_labels: vec!["frame-1".into()],
            absolute_indices: vec![1],
            source_indices: vec![0],
            terminal_marked: true,
        }
    }

    #[test]
    fn reflection_rejects_done() {
        let d = Decision { thought: "t".into(), operation: Action::Done, summary: "s".into() };
        let err = render_reflection_prompt(&mosaic(), &RgbImage::new(2, 2), "a", "b", &d).unwrap_err();
        assert_eq!(err, PromptError::DoneProposal);
    }

    #[test]
    fn video_prompt_arity() {
        let shot = RgbImage::new(3, 3);
        let err = render_video_prompt(&mosaic(), std::slice::from_ref(&shot), "a", "b").unwrap_err();
        assert_eq!(err, PromptError::Arity(1));
        let req = render_video_prompt(&mosaic(), &[shot.clone(), shot], "a", "b").unwrap();
        assert_eq!(req.images.len(), 2);
        assert_eq!(req.images[1].dimensions(), (3 * 2 + PAIR_GUTTER, 3));
    }

    #[test]
    fn empty_user_instruction() {
        let err = render_decision_prompt(&mosaic(), &RgbImage::new(2, 2), "dial 123", "  ", &[]).unwrap_err();
        assert_eq!(err, PromptError::EmptyField("user instruction"));
    }
}
