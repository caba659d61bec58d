//! The Dialogue/Format subset of the ASS subtitle format.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssEvent {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
    pub style: String,
}

impl AssEvent {
    pub fn new(start_ms: u64, end_ms: u64, text: impl Into<String>) -> Self {
        AssEvent {
            start_ms,
            end_ms,
            text: text.into(),
            style: "Default".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("events overlap: [{a_start}, {a_end}) and [{b_start}, {b_end})")]
    OverlappingEvents {
        a_start: u64,
        a_end: u64,
        b_start: u64,
        b_end: u64,
    },
    #[error("event [{start_ms}, {end_ms}) is not representable: {reason}")]
    Unrepresentable { start_ms: u64, end_ms: u64, reason: String },
}

const FORMAT_FIELDS: &str = "Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text";

/// `H:MM:SS.cc` to milliseconds.
fn parse_timestamp(s: &str) -> Option<u64> {
    let mut parts = s.trim().split(':');
    let (h, m, rest) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let (sec, cs) = rest.split_once('.')?;
    let digits = |x: &str, len: Option<usize>| {
        !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit()) && len.is_none_or(|l| x.len() == l)
    };
    if !digits(h, None) || !digits(m, Some(2)) || !digits(sec, Some(2)) || !digits(cs, Some(2)) {
        return None;
    }
    let (h, m, sec, cs): (u64, u64, u64, u64) = (h.parse().ok()?, m.parse().ok()?, sec.parse().ok()?, cs.parse().ok()?);
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + cs * 10)
}

fn format_timestamp(ms: u64) -> String {
    let cs = ms / 10;
    let (h, rem) = (cs / 360_000, cs % 360_000);
    let (m, rem) = (rem / 6000, rem % 6000);
    let (s, cs) = (rem / 100, rem % 100);
    format!("{h}:{m:02}:{s:02}.{cs:02}")
}

/// Drops `{...}` override blocks and turns `\N` into a space.
fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut depth = 0usize;
    for ch in raw.chars() {
        match ch {
            '{' => depth += 1,
            '}' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out.replace("\\N", " ")
}

/// Parses `Dialogue:` lines of the `[Events]` section. Other sections are
/// ignored; a missing `[Events]` section yields no events.
pub fn parse_ass(text: &str) -> Result<Vec<AssEvent>, AssError> {
    let mut in_events = false;
    let mut columns: Option<Vec<String>> = None;
    let mut events = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_start_matches('\u{feff}').trim_end_matches('\r');
        let head = line.trim();
        if head.starts_with('[') && head.ends_with(']') {
            in_events = head.eq_ignore_ascii_case("[events]");
            continue;
        }
        if !in_events {
            continue;
        }
        let err = |reason: String| AssError::Parse { line: line_no, reason };
        // Text is the last column and may end in spaces, so only trim the left.
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("Format:") {
            columns = Some(rest.split(',').map(|c| c.trim().to_ascii_lowercase()).collect());
        } else if let Some(rest) = trimmed.strip_prefix("Dialogue:") {
            let cols = columns
                .as_ref()
                .ok_or_else(|| err("Dialogue before Format line".into()))?;
            let col = |name: &str| {
                cols.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| err(format!("Format has no {name} column")))
            };
            let (start_i, end_i, style_i, text_i) = (col("start")?, col("end")?, col("style")?, col("text")?);
            let fields: Vec<&str> = rest.trim_start().splitn(cols.len(), ',').collect();
            if fields.len() != cols.len() {
                return Err(err(format!("expected {} fields, found {}", cols.len(), fields.len())));
            }
            let start_ms = parse_timestamp(fields[start_i])
                .ok_or_else(|| err(format!("bad Start timestamp {:?}", fields[start_i])))?;
            let end_ms =
                parse_timestamp(fields[end_i]).ok_or_else(|| err(format!("bad End timestamp {:?}", fields[end_i])))?;
            if start_ms >= end_ms {
                return Err(err("Start must be before End".into()));
            }
            events.push(AssEvent {
                start_ms,
                end_ms,
                text: clean_text(fields[text_i]),
                style: fields[style_i].trim().to_string(),
            });
        }
    }
    Ok(events)
}

/// Writes a minimal script (Script Info, one style, Events). Events must be
/// sorted and non-overlapping, with centisecond-aligned times.
pub fn emit_ass(events: &[AssEvent]) -> Result<String, AssError> {
    for pair in events.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.start_ms < a.end_ms {
            return Err(AssError::OverlappingEvents {
                a_start: a.start_ms,
                a_end: a.end_ms,
                b_start: b.start_ms,
                b_end: b.end_ms,
            });
        }
    }
    for e in events {
        let reason = if e.start_ms >= e.end_ms {
            Some("start must be before end")
        } else if e.start_ms % 10 != 0 || e.end_ms % 10 != 0 {
            Some("times must be whole centiseconds")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(AssError::Unrepresentable {
                start_ms: e.start_ms,
                end_ms: e.end_ms,
                reason: reason.into(),
            });
        }
    }

    let mut out = String::new();
    out.push_str("[Script Info]\nScriptType: v4.00+\nPlayResX: 640\nPlayResY: 360\n\n");
    out.push_str("[V4+ Styles]\n");
    out.push_str("Format: Name, Fontname, Fontsize, PrimaryColour, Alignment\n");
    out.push_str("Style: Default,Arial,24,&H00FFFFFF,2\n\n");
    out.push_str("[Events]\n");
    let _ = writeln!(out, "Format: {FORMAT_FIELDS}");
    for e in events {
        let style = if e.style.is_empty() {
            "Default"
        } else {
            e.style.as_str()
        };
        let _ = writeln!(
            out,
            "Dialogue: 0,{},{},{style},,0,0,0,,{}",
            format_timestamp(e.start_ms),
            format_timestamp(e.end_ms),
            e.text.replace('\n', "\\N"),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "[Events]\nFormat: Layer, Start, End, Style, Name, MarginL, MarginR, MarginV, Effect, Text\n";

    #[test]
    fn parses_standard_dialogue() {
        let text = format!("{HEADER}Dialogue: 0,0:00:01.00,0:00:02.50,Default,,0,0,0,,Hi\n");
        assert_eq!(parse_ass(&text).unwrap(), vec![AssEvent::new(1000, 2500, "Hi")]);
    }

    #[test]
    fn strips_overrides_and_line_breaks() {
        let text = format!(
            "{HEADER}Dialogue: 0,0:00:00.00,0:00:01.00,Default,,0,0,0,,{{\\b1}}Bold{{\\b0}} word\nDialogue: 0,0:00:01.00,0:00:02.00,Default,,0,0,0,,a\\Nb, c\n"
        );
        let events = parse_ass(&text).unwrap();
        assert_eq!(events[0].text, "Bold word");
        assert_eq!(events[1].text, "a b, c");
    }

    #[test]
    fn no_events_section_is_empty() {
        assert_eq!(parse_ass("[Script Info]\nTitle: x\n").unwrap(), vec![]);
        assert_eq!(parse_ass("").unwrap(), vec![]);
    }

    #[test]
    fn ignores_other_sections_and_comments() {
        let text = format!(
            "[V4+ Styles]\nDialogue: junk\n{HEADER}Comment: 0,0:00:00.00,0:00:01.00,Default,,0,0,0,,skip\n[Fonts]\nDialogue: junk\n"
        );
        assert_eq!(parse_ass(&text).unwrap(), vec![]);
    }

    #[test]
    fn column_order_comes_from_format() {
        let text = "[Events]\nFormat: Start, End, Style, Text\nDialogue: 0:00:03.10,0:00:04.00,Alt,x, y\n";
        assert_eq!(
            parse_ass(text).unwrap(),
            vec![AssEvent {
                start_ms: 3100,
                end_ms: 4000,
                text: "x, y".into(),
                style: "Alt".into()
            }]
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let missing_format = "[Events]\nDialogue: 0,0:00:01.00,0:00:02.00,Default,,0,0,0,,Hi\n";
        assert!(matches!(
            parse_ass(missing_format),
            Err(AssError::Parse { line: 2, .. })
        ));
        let bad_ts = format!("{HEADER}Dialogue: 0,0:0:01.00,0:00:02.00,Default,,0,0,0,,Hi\n");
        assert!(matches!(parse_ass(&bad_ts), Err(AssError::Parse { line: 3, .. })));
        let short = format!("{HEADER}Dialogue: 0,0:00:01.00\n");
        assert!(matches!(parse_ass(&short), Err(AssError::Parse { line: 3, .. })));
        let backwards = format!("{HEADER}Dialogue: 0,0:00:02.00,0:00:01.00,Default,,0,0,0,,Hi\n");
        assert!(parse_ass(&backwards).is_err());
    }

    #[test]
    fn emits_timestamps() {
        let text = emit_ass(&[AssEvent::new(1000, 2500, "Hi")]).unwrap();
        assert!(
            text.contains("Dialogue: 0,0:00:01.00,0:00:02.50,Default,,0,0,0,,Hi"),
            "{text}"
        );
        assert_eq!(format_timestamp(3_723_450), "1:02:03.45");
    }

    #[test]
    fn empty_emit_is_valid() {
        let text = emit_ass(&[]).unwrap();
        assert!(text.contains("[Events]"));
        assert_eq!(parse_ass(&text).unwrap(), vec![]);
    }

    #[test]
    fn emit_rejects_overlap_and_sub_centisecond() {
        let overlap = [AssEvent::new(0, 1000, "a"), AssEvent::new(500, 1500, "b")];
        assert!(matches!(emit_ass(&overlap), Err(AssError::OverlappingEvents { .. })));
        assert!(matches!(
            emit_ass(&[AssEvent::new(0, 1005, "a")]),
            Err(AssError::Unrepresentable { .. })
        ));
    }

    pub(crate) fn arb_events() -> impl Strategy<Value = Vec<AssEvent>> {
        proptest::collection::vec(
            (
                0u64..500,
                1u64..500,
                "[A-Za-z0-9][A-Za-z0-9 ,.!?']{0,30}",
                "[A-Za-z]{1,8}",
            ),
            0..20,
        )
        .prop_map(|items| {
            let mut t = 0;
            items
                .into_iter()
                .map(|(gap, len, text, style)| {
                    let start = t + gap * 10;
                    let end = start + len * 10;
                    t = end;
                    AssEvent {
                        start_ms: start,
                        end_ms: end,
                        text,
                        style,
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(events in arb_events()) {
            prop_assert_eq!(parse_ass(&emit_ass(&events).unwrap()).unwrap(), events);
        }
    }
}
