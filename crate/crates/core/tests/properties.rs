//! Invariants checked against independent oracles over generated inputs.

use mediaclaw::canonical;
use mediaclaw::media::{frame_at, ArtifactId, AudioKind, AudioSegment, OverlayRole, SynthMedia};
use mediaclaw::providers::ass::AssEvent;
use mediaclaw::providers::local::burn_subtitles;
use mediaclaw::skills::actions::{match_action, split_sentences, ActionRule, ActionRuleSet};
use mediaclaw::skills::compose::{concat_videos, normalize_loudness};
use mediaclaw::skills::edit::{apply_edit, plan_edit, transcribe, EditOp, EditOptions};
use mediaclaw::skills::templates::{poster_score, POSTER_DIMENSIONS};
use mediaclaw::skills::SkillError;
use proptest::prelude::*;
use serde_json::Value;

const FPS: [u32; 4] = [5, 10, 25, 50];

fn arb_fps() -> impl Strategy<Value = u32> {
    proptest::sample::select(FPS.to_vec())
}

fn fnv1a(input: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in input.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn arb_json() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        "[ -~\\n\"\\\\é中]{0,8}".prop_map(Value::String),
    ];
    leaf.prop_recursive(4, 64, 6, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            proptest::collection::btree_map("[a-zA-Z_ é]{0,6}", inner, 0..6)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

/// Non-overlapping events in arbitrary order; times need not sit on any grid.
fn arb_events(span: u64) -> impl Strategy<Value = Vec<AssEvent>> {
    proptest::collection::vec((0u64..400, 1u64..900, "[a-z]{1,6}"), 0..8)
        .prop_map(move |items| {
            let mut t = 0;
            let mut out = Vec::new();
            for (gap, len, text) in items {
                let start = t + gap;
                let end = (start + len).min(span + 500);
                if start >= end {
                    break;
                }
                out.push(AssEvent::new(start, end, text));
                t = end;
            }
            out
        })
        .prop_shuffle()
}

const VOCAB: [&str; 5] = ["hello there", "Hello, there!", "um", "uh um", "next point"];

/// Grid-aligned transcript segments: (is_speech, word index, frames).
fn arb_segments() -> impl Strategy<Value = Vec<(bool, usize, u64)>> {
    proptest::collection::vec((any::<bool>(), 0..VOCAB.len(), 1u64..8), 1..14)
}

fn video_from(segments: &[(bool, usize, u64)]) -> SynthMedia {
    let mut audio = Vec::new();
    let mut t = 0;
    for &(speech, word, frames) in segments {
        let end = t + frames * 200;
        audio.push(if speech {
            AudioSegment::speech(t, end, VOCAB[word], -20.0)
        } else {
            AudioSegment::silence(t, end, -60.0)
        });
        t = end;
    }
    let mut video = SynthMedia::video_with(640, 360, 5, t, |k| [k as u8, 0, 0]);
    video.audio = audio;
    video
}

fn words(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn frames_sit_on_the_grid(fps in arb_fps(), frames in 0u64..120, probe in 0u64..20_000) {
        let duration = frames * 1000 / u64::from(fps);
        let video = SynthMedia::video_with(640, 360, fps, duration, |k| [k as u8, 1, 2]);
        video.validate().unwrap();
        prop_assert_eq!(video.frames.len() as u64, frames);
        for (i, f) in video.frames.iter().enumerate() {
            prop_assert_eq!(f.t_ms * u64::from(fps), i as u64 * 1000);
        }
        if frames > 0 {
            let probe = probe % (duration + 1);
            let expect = video.frames.iter().rev().find(|f| f.t_ms <= probe).unwrap();
            prop_assert_eq!(frame_at(&video, probe).unwrap(), expect);
        }
    }

    #[test]
    fn concat_is_additive(fps in arb_fps(), lens in proptest::collection::vec(1u64..30, 1..6)) {
        let step = 1000 / u64::from(fps);
        let parts: Vec<SynthMedia> = lens
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut v = SynthMedia::video_with(320, 180, fps, n * step, |_| [i as u8, 0, 0]);
                v.audio.push(AudioSegment::speech(0, n * step, format!("s{i}"), -20.0));
                v
            })
            .collect();
        let out = concat_videos(&parts.iter().collect::<Vec<_>>()).unwrap();
        out.validate().unwrap();
        prop_assert_eq!(out.duration_ms, lens.iter().sum::<u64>() * step);
        prop_assert_eq!(out.frames.len() as u64, lens.iter().sum::<u64>());
        let mut offset = 0;
        let mut starts = Vec::new();
        let mut frame = 0;
        for (i, n) in lens.iter().enumerate() {
            starts.push(offset.to_string());
            for k in 0..*n {
                let f = &out.frames[frame];
                prop_assert_eq!(f.t_ms, offset + k * step);
                prop_assert_eq!(f.fill_rgb[0], i as u8);
                frame += 1;
            }
            let seg = out.audio.iter().find(|a| a.text == format!("s{i}")).unwrap();
            prop_assert_eq!((seg.t0_ms, seg.t1_ms), (offset, offset + n * step));
            offset += n * step;
        }
        prop_assert_eq!(&out.meta["boundaries_ms"], &starts.join(","));
    }

    #[test]
    fn burned_frames_match_interval_oracle(fps in arb_fps(), frames in 1u64..60, events in arb_events(6000)) {
        let duration = frames * 1000 / u64::from(fps);
        let video = SynthMedia::video_with(640, 360, fps, duration, |_| [0, 0, 0]);
        let out = burn_subtitles(&video, &events).unwrap();
        prop_assert_eq!(out.frames.len(), video.frames.len());
        for f in &out.frames {
            let expect: Vec<&str> = events
                .iter()
                .filter(|e| e.start_ms <= f.t_ms && f.t_ms < e.end_ms)
                .map(|e| e.text.as_str())
                .collect();
            let got: Vec<&str> = f
                .overlays
                .iter()
                .filter(|o| o.role == OverlayRole::Subtitle)
                .map(|o| o.text.as_str())
                .collect();
            prop_assert_eq!(got, expect, "frame at {}", f.t_ms);
        }
        let again = burn_subtitles(&out, &[]).unwrap();
        prop_assert_eq!(&again.frames, &out.frames);
        prop_assert_eq!(&again.meta["subtitle_burns"], "2");
    }

    #[test]
    fn split_recovers_generated_sentences(
        sentences in proptest::collection::vec(("[a-zA-Z]{1,5}( [a-zA-Z]{1,5}){0,3}", proptest::sample::select(vec!['.', '!', '?', ';', '。', '！'])), 0..8),
        pads in proptest::collection::vec("[ \\t\\n]{0,3}", 9),
    ) {
        let mut script = pads[0].clone();
        let mut expect = Vec::new();
        for (i, (body, term)) in sentences.iter().enumerate() {
            script.push_str(body);
            script.push(*term);
            script.push_str(&pads[i + 1]);
            expect.push(format!("{body}{term}"));
        }
        prop_assert_eq!(split_sentences(&script), expect);
    }

    #[test]
    fn split_pieces_are_clean(script in "[a-z .!?;\\n。]{0,60}") {
        let terms = ['.', '!', '?', ';', '。', '！', '？', '；'];
        let pieces = split_sentences(&script);
        for (i, p) in pieces.iter().enumerate() {
            prop_assert_eq!(p.trim(), p.as_str());
            prop_assert!(!p.chars().all(|c| terms.contains(&c)));
            let inner = p.char_indices().filter(|(_, c)| terms.contains(c)).map(|(j, _)| j);
            for j in inner {
                prop_assert!(j + p[j..].chars().next().unwrap().len_utf8() == p.len(), "terminator inside {p:?}");
            }
            if i + 1 < pieces.len() {
                prop_assert!(terms.contains(&p.chars().last().unwrap()));
            }
        }
        let letters = |s: &str| s.chars().filter(|c| c.is_alphabetic()).collect::<String>();
        prop_assert_eq!(letters(&pieces.concat()), letters(&script));
    }

    #[test]
    fn first_matching_rule_wins(
        rule_count in 1usize..6,
        present in proptest::collection::vec(any::<bool>(), 6),
        upper in any::<bool>(),
    ) {
        let rules = ActionRuleSet {
            scenario: "generated".into(),
            rules: (0..rule_count)
                .map(|i| ActionRule {
                    keywords: vec![format!("k{i}za"), format!("k{i}zb")],
                    action_id: format!("act{i}"),
                })
                .collect(),
            default_action_id: "idle".into(),
        };
        let mut sentence = String::from("the anchor says");
        for i in (0..rule_count).rev().filter(|i| present[*i]) {
            sentence.push_str(&format!(" k{i}z{}", if i % 2 == 0 { "a" } else { "b" }));
        }
        if upper {
            sentence = sentence.to_uppercase();
        }
        let expect = (0..rule_count).find(|i| present[*i]).map_or("idle".to_string(), |i| format!("act{i}"));
        prop_assert_eq!(match_action(&sentence, &rules), expect.as_str());
    }

    #[test]
    fn edit_plan_and_render_agree(segments in arb_segments(), threshold_frames in 0u64..6) {
        let id = ArtifactId::from("art_src");
        let video = video_from(&segments);
        let transcript = transcribe(&id, &video).unwrap();
        let options = EditOptions { silence_threshold_ms: threshold_frames * 200, ..EditOptions::default() };
        let filler = |t: &str| { let w = words(t); !w.is_empty() && w.split(' ').all(|x| ["um", "uh", "er"].contains(&x)) };
        let edl = match plan_edit(&[transcript], "tidy", &options) {
            Ok(edl) => edl,
            Err(SkillError::EmptyAfterEdit) => {
                let keepable = video.audio.iter().any(|a| match a.kind {
                    AudioKind::Silence => a.t1_ms - a.t0_ms <= options.silence_threshold_ms,
                    AudioKind::Speech => !filler(&a.text),
                });
                prop_assert!(!keepable);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };

        let decided: Vec<usize> = edl.operations.iter().filter_map(|op| match op {
            EditOp::Keep { segment } | EditOp::Drop { segment, .. } => Some(segment.index),
            EditOp::Transition { .. } => None,
        }).collect();
        prop_assert_eq!(decided, (0..video.audio.len()).collect::<Vec<_>>());

        let kept: Vec<&AudioSegment> = edl.keeps().map(|s| &video.audio[s.index]).collect();
        for a in &kept {
            match a.kind {
                AudioKind::Silence => prop_assert!(a.t1_ms - a.t0_ms <= options.silence_threshold_ms),
                AudioKind::Speech => prop_assert!(!filler(&a.text)),
            }
        }
        let spoken: Vec<String> = kept.iter().filter(|a| a.kind == AudioKind::Speech).map(|a| words(&a.text)).collect();
        prop_assert!(spoken.windows(2).all(|w| w[0] != w[1]));
        let last_take = video.audio.iter().rev().find(|a| a.kind == AudioKind::Speech && !filler(&a.text));
        if let Some(last) = last_take {
            prop_assert!(kept.iter().any(|a| std::ptr::eq(*a, last)));
        }

        let out = apply_edit(&[(id.clone(), &video)], &edl).unwrap();
        let total: u64 = kept.iter().map(|a| a.t1_ms - a.t0_ms).sum();
        prop_assert_eq!(out.duration_ms, total);
        prop_assert_eq!(out.frames.len() as u64, total / 200);
        let mut t = 0;
        for (seg, orig) in out.audio.iter().zip(&kept) {
            prop_assert_eq!((seg.t0_ms, seg.t1_ms - seg.t0_ms), (t, orig.t1_ms - orig.t0_ms));
            prop_assert_eq!(&seg.text, &orig.text);
            t = seg.t1_ms;
        }
        prop_assert_eq!(out.audio.len(), kept.len());
        let idx: Vec<usize> = edl.keeps().map(|s| s.index).collect();
        let cuts = idx.windows(2).filter(|w| w[1] != w[0] + 1).count();
        let transitions = edl.operations.iter().filter(|op| matches!(op, EditOp::Transition { .. })).count();
        prop_assert_eq!(transitions, cuts);
    }

    #[test]
    fn loudness_normalization(
        levels in proptest::collection::vec((any::<bool>(), -60.0f64..0.0), 1..10),
        target in -30.0f64..-5.0,
    ) {
        let segs: Vec<AudioSegment> = levels
            .iter()
            .enumerate()
            .map(|(i, (speech, l))| {
                let (t0, t1) = (i as u64 * 100, i as u64 * 100 + 100);
                if *speech { AudioSegment::speech(t0, t1, "x", *l) } else { AudioSegment::silence(t0, t1, *l) }
            })
            .collect();
        let media = SynthMedia::audio(segs.clone());
        let out = normalize_loudness(&media, target).unwrap();
        let gains: Vec<f64> = serde_json::from_str(&out.meta["gain_applied"]).unwrap();
        let expect: Vec<f64> = segs.iter().filter(|s| s.kind == AudioKind::Speech).map(|s| target - s.loudness_lufs).collect();
        prop_assert_eq!(gains.len(), expect.len());
        prop_assert!(gains.iter().zip(&expect).all(|(g, e)| (g - e).abs() < 1e-9));
        for (a, b) in out.audio.iter().zip(&segs) {
            let want = if b.kind == AudioKind::Speech { target } else { b.loudness_lufs };
            prop_assert_eq!(a.loudness_lufs, want);
            prop_assert_eq!((a.t0_ms, a.t1_ms), (b.t0_ms, b.t1_ms));
        }
        let twice = normalize_loudness(&out, target).unwrap();
        let zero: Vec<f64> = serde_json::from_str(&twice.meta["gain_applied"]).unwrap();
        prop_assert!(zero.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn poster_scores_follow_the_hash(fill in any::<[u8; 3]>(), dim in proptest::sample::select(POSTER_DIMENSIONS.to_vec())) {
        let score = poster_score(fill, dim);
        prop_assert!((60..=100).contains(&score));
        let key = format!("{},{},{}|{dim}", fill[0], fill[1], fill[2]);
        prop_assert_eq!(u64::from(score), 60 + fnv1a(&key) % 41);
    }

    #[test]
    fn canonical_json_is_sorted_and_compact(value in arb_json()) {
        let text = canonical::value_to_string(&value);
        // serde_json's default map is ordered by key bytes and prints compactly.
        prop_assert_eq!(&text, &serde_json::to_string(&value).unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &value);
        prop_assert_eq!(canonical::to_string(&back).unwrap(), text);
    }
}
