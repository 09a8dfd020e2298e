//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::Deserialize;
use vidguide::agent::{
    render_decision_prompt, render_reflection_prompt, render_video_prompt, HistoryEntry,
};
use vidguide::agent::{Decision, ModelRequest};
use vidguide::video::{build_mosaic, Frame, KeyframeSet, Mosaic};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn demo_dir() -> PathBuf {
    manifest_dir().join("demo")
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests").join("golden")
}

/// Flat-colored keyframes, one per entry.
pub fn solid_keys(colors: &[[u8; 3]]) -> KeyframeSet {
    let frames = colors
        .iter()
        .enumerate()
        .map(|(i, c)| Frame::new(i * 10, RgbImage::from_pixel(24, 40, Rgb(*c))).unwrap())
        .collect();
    KeyframeSet::new("solid", frames).unwrap()
}

pub fn tiny_mosaic() -> Mosaic {
    let keys = solid_keys(&[[200, 0, 0], [0, 200, 0], [0, 0, 200]]);
    build_mosaic(&keys, 1, 4).unwrap()
}

#[derive(Debug, Deserialize)]
pub struct PromptCase {
    pub video_task: String,
    pub user_task: String,
    pub history: Vec<HistoryEntry>,
    pub decision: Decision,
}

pub const PROMPT_KINDS: [&str; 4] = ["decision_first", "decision_next", "reflection", "video"];

pub fn load_case(n: usize) -> PromptCase {
    let path = golden_dir().join(format!("case_{n}.json"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn framed(request: &ModelRequest) -> String {
    format!("=== system ===\n{}\n=== user ===\n{}\n", request.system, request.user)
}

/// Renders one prompt kind for a case in the golden file layout.
pub fn render_case(case: &PromptCase, kind: &str) -> String {
    let mosaic = tiny_mosaic();
    let screen = RgbImage::from_pixel(24, 40, Rgb([9, 9, 9]));
    let request = match kind {
        "decision_first" => render_decision_prompt(&mosaic, &screen, &case.video_task, &case.user_task, &[]),
        "decision_next" => {
            render_decision_prompt(&mosaic, &screen, &case.video_task, &case.user_task, &case.history)
        }
        "reflection" => render_reflection_prompt(&mosaic, &screen, &case.video_task, &case.user_task, &case.decision),
        "video" => render_video_prompt(&mosaic, &[screen.clone(), screen.clone()], &case.video_task, &case.user_task),
        other => panic!("unknown prompt kind {other}"),
    };
    framed(&request.unwrap())
}

/// Every (case, kind) whose rendering differs from its golden file.
pub fn golden_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for n in 1..=3 {
        let case = load_case(n);
        for kind in PROMPT_KINDS {
            let path = golden_dir().join(format!("{kind}_{n}.txt"));
            let want = std::fs::read_to_string(&path).unwrap();
            let got = render_case(&case, kind);
            if got != want {
                bad.push(first_difference(&path, &want, &got));
            }
        }
    }
    bad
}

fn first_difference(path: &Path, want: &str, got: &str) -> String {
    let line = want
        .lines()
        .zip(got.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| want.lines().count().min(got.lines().count()));
    format!(
        "{} differs at line {}: want {:?}, got {:?}",
        path.file_name().unwrap().to_string_lossy(),
        line + 1,
        want.lines().nth(line).unwrap_or("<eof>"),
        got.lines().nth(line).unwrap_or("<eof>")
    )
}

pub mod oracle;
pub mod scenarios;
