//! Shows the debug-bridge commands actions turn into, without a phone.

use vidguide::agent::parse_action;
use vidguide::device::{parse_hierarchy, real_adapter_command};

const DUMP: &str = r#"<hierarchy rotation="0">
  <node text="" clickable="false" bounds="[0,0][1080,2400]">
    <node text="Wi-Fi" clickable="true" bounds="[0,400][1080,520]" />
    <node text="" content-desc="Search" clickable="true" bounds="[900,80][1040,200]" />
  </node>
</hierarchy>"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let elements = parse_hierarchy(DUMP)?;
    for e in &elements {
        println!("mark {} {:?} {:?}", e.mark_id, e.text, <[i32; 4]>::from(e.bounds));
    }
    for op in ["Click (1)", "Click_text (wi-fi)", "Scroll (down)", "Type (it's 5 & up)", "Back", "Home", "Done"] {
        let action = parse_action(op)?;
        match real_adapter_command(&action, &elements, (1080, 2400))? {
            Some(cmd) => println!("{op:<20} {cmd}"),
            None => println!("{op:<20} (nothing sent)"),
        }
    }
    Ok(())
}
