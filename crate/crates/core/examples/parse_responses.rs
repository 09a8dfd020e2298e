//! Parses the kind of loosely formatted answers chat models give.

use vidguide::agent::{parse_decision, parse_reflection, parse_video};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let decision = parse_decision(
        "Sure! Here is my answer:\n```json\n{\"Thought\": \"Open the app\", \"Operation\": \"click ( 1 )\", \"Summary\": \"Open Messages\"}\n```",
    )?;
    println!("decision: {} ({})", decision.operation, decision.summary);

    let kept = parse_reflection("The step matches frame-2.\nTrue", &decision)?;
    println!("reflection keeps it: {:?}", kept.verdict);
    let fixed = parse_reflection(
        "Frame-1 confirms first.\n{\"Thought\": \"confirm\", \"Operation\": \"Click_text (Confirm)\", \"Summary\": \"Confirm\"}",
        &decision,
    )?;
    println!("reflection replaces it with {}", fixed.resolved(&decision));

    let loc = parse_video("{\"Thought\": \"wrong page\", \"Frame\": 0, \"Analysis\": \"Sound opened\", \"Need_Back\": True}")?;
    println!("video: frame {}, off track {}, need back {}", loc.frame, loc.is_off_track(), loc.need_back);

    match parse_decision("I think you should tap the button.") {
        Ok(d) => println!("unexpected: {d:?}"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
