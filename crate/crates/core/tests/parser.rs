use proptest::prelude::*;
use vidguide::agent::{parse_action, parse_decision, parse_video, Action, Decision, Direction};

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ()\"'{}:,é中+\\\\-]{1,16}"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty after trim", |s| !s.is_empty())
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        any::<u32>().prop_map(|id| Action::Click { id }),
        text().prop_map(|text| Action::ClickText { text }),
        proptest::sample::select(Direction::ALL.to_vec()).prop_map(|direction| Action::Scroll { direction }),
        text().prop_map(|text| Action::Type { text }),
        Just(Action::Back),
        Just(Action::Home),
        Just(Action::Done),
    ]
}

fn prose() -> impl Strategy<Value = String> {
    "[a-zA-Z .,:\n]{0,40}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn action_round_trip(a in action()) {
        prop_assert_eq!(parse_action(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn wrappers_do_not_change_the_decision(
        a in action(), thought in text(), summary in text(),
        before in prose(), after in prose(), fence in 0usize..3,
    ) {
        let d = Decision { thought, operation: a, summary };
        let body = d.to_json();
        let fenced = match fence {
            0 => body.clone(),
            1 => format!("```json\n{body}\n```"),
            _ => format!("```\n{body}\n```"),
        };
        let wrapped = format!("{before}{fenced}{after}");
        prop_assert_eq!(parse_decision(&wrapped).unwrap(), parse_decision(&body).unwrap());
    }
}

#[test]
fn verbs_are_case_insensitive_and_spacing_tolerant() {
    assert_eq!(parse_action("  click(4) ").unwrap(), Action::Click { id: 4 });
    assert_eq!(parse_action("SCROLL ( Down )").unwrap(), Action::Scroll { direction: Direction::Down });
    assert_eq!(parse_action("Type (\"hi there\")").unwrap(), Action::Type { text: "hi there".into() });
    assert!(parse_action("Swipe (up)").is_err());
    assert!(parse_action("Click (-1)").is_err());
    assert!(parse_action("Back (now)").is_err());
}

#[test]
fn video_answer_accepts_python_literals() {
    let raw = "```json\n{\"Thought\": \"off\", \"Frame\": 0, \"Analysis\": \"wrong app\", \"Need_Back\": True}\n```";
    let loc = parse_video(raw).unwrap();
    assert_eq!(loc.frame, 0);
    assert!(loc.need_back);
    assert!(loc.is_off_track());
}

#[test]
fn decision_with_unknown_verb_is_rejected() {
    let raw = r#"{"Thought": "t", "Operation": "Swipe (up)", "Summary": "s"}"#;
    assert!(parse_decision(raw).is_err());
}
