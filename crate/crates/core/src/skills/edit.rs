//! Transcript-driven editing: mock ASR, edit planning over the transcript,
//! and rendering an edit decision list back onto the source videos.

use serde::{Deserialize, Serialize};

use super::compose::common_format;
use super::SkillError;
use crate::canonical;
use crate::media::{
    ArtifactId, AudioKind, AudioSegment, MediaKind, OverlayEvent, OverlayPosition, OverlayRole, SynthMedia,
};

/// Timestamped speech and silence of one source video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub source: ArtifactId,
    pub width: u32,
    pub height: u32,
    pub fps: u32,
    pub duration_ms: u64,
    pub segments: Vec<AudioSegment>,
}

/// Mock ASR: the embedded audio segments, verbatim.
pub fn transcribe(source: &ArtifactId, video: &SynthMedia) -> Result<Transcript, SkillError> {
    video.expect_kind(MediaKind::Video)?;
    if video.audio.is_empty() {
        return Err(SkillError::NoAudio(source.to_string()));
    }
    Ok(Transcript {
        source: source.clone(),
        width: video.width.unwrap_or(0),
        height: video.height.unwrap_or(0),
        fps: video.fps.unwrap_or(0),
        duration_ms: video.duration_ms,
        segments: video.audio.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOptions {
    /// Silences strictly longer than this are cut.
    pub silence_threshold_ms: u64,
    pub fillers: Vec<String>,
}

impl Default for EditOptions {
    fn default() -> Self {
        EditOptions {
            silence_threshold_ms: 500,
            fillers: ["um", "uh", "er"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub source: ArtifactId,
    /// Index into the source transcript.
    pub index: usize,
    pub t0_ms: u64,
    pub t1_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Silence,
    Filler,
    RepeatedTake,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Keep {
        segment: SegmentRef,
    },
    Drop {
        segment: SegmentRef,
        reason: DropReason,
    },
    /// `at_ms` is on the output timeline.
    Transition {
        effect: String,
        at_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditDecisionList {
    pub goal: String,
    pub sources: Vec<ArtifactId>,
    pub operations: Vec<EditOp>,
}

impl EditDecisionList {
    pub fn keeps(&self) -> impl Iterator<Item = &SegmentRef> {
        self.operations.iter().filter_map(|op| match op {
            EditOp::Keep { segment } => Some(segment),
            _ => None,
        })
    }

    pub fn to_canonical_json(&self) -> String {
        canonical::to_string(self).expect("edl serialization is infallible")
    }
}

const STRIPPED: [char; 9] = ['.', '!', '?', ';', ',', '。', '！', '？', '；'];

/// Lowercased words with terminators and commas removed.
pub fn normalize_text(text: &str) -> String {
    text.to_lowercase()
        .replace(STRIPPED, " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_filler(normalized: &str, fillers: &[String]) -> bool {
    !normalized.is_empty() && normalized.split(' ').all(|w| fillers.iter().any(|f| f == w))
}

/// Cuts long silences, fillers and all but the last of each run of repeated
/// takes; fades mark every discontinuity between kept segments.
pub fn plan_edit(
    transcripts: &[Transcript],
    goal: &str,
    options: &EditOptions,
) -> Result<EditDecisionList, SkillError> {
    if transcripts.is_empty() {
        return Err(SkillError::EmptyInput);
    }
    let first = (transcripts[0].width, transcripts[0].height, transcripts[0].fps);
    for (index, t) in transcripts.iter().enumerate().skip(1) {
        let found = (t.width, t.height, t.fps);
        if found != first {
            return Err(SkillError::MixedDimensions {
                index,
                expected: first,
                found,
            });
        }
    }
    let fillers: Vec<String> = options.fillers.iter().map(|f| normalize_text(f)).collect();

    let flat: Vec<(&Transcript, usize, &AudioSegment)> = transcripts
        .iter()
        .flat_map(|t| t.segments.iter().enumerate().map(move |(i, s)| (t, i, s)))
        .collect();
    let mut decisions: Vec<Option<DropReason>> = vec![None; flat.len()];
    let mut takes: Vec<(usize, String)> = Vec::new();
    for (pos, (_, _, seg)) in flat.iter().enumerate() {
        match seg.kind {
            AudioKind::Silence if seg.duration_ms() > options.silence_threshold_ms => {
                decisions[pos] = Some(DropReason::Silence);
            }
            AudioKind::Silence => {}
            AudioKind::Speech => {
                let norm = normalize_text(&seg.text);
                if is_filler(&norm, &fillers) {
                    decisions[pos] = Some(DropReason::Filler);
                } else {
                    takes.push((pos, norm));
                }
            }
        }
    }
    for pair in takes.windows(2) {
        if !pair[0].1.is_empty() && pair[0].1 == pair[1].1 {
            decisions[pair[0].0] = Some(DropReason::RepeatedTake);
        }
    }

    let mut operations = Vec::new();
    let mut cursor = 0;
    let mut last_keep: Option<&SegmentRef> = None;
    let refs: Vec<SegmentRef> = flat
        .iter()
        .map(|(t, index, seg)| SegmentRef {
            source: t.source.clone(),
            index: *index,
            t0_ms: seg.t0_ms,
            t1_ms: seg.t1_ms,
        })
        .collect();
    for (segment, decision) in refs.iter().zip(&decisions) {
        match decision {
            Some(reason) => operations.push(EditOp::Drop {
                segment: segment.clone(),
                reason: *reason,
            }),
            None => {
                if let Some(prev) = last_keep {
                    if prev.source != segment.source || prev.t1_ms != segment.t0_ms {
                        operations.push(EditOp::Transition {
                            effect: "fade".into(),
                            at_ms: cursor,
                        });
                    }
                }
                operations.push(EditOp::Keep {
                    segment: segment.clone(),
                });
                cursor += segment.t1_ms - segment.t0_ms;
                last_keep = Some(segment);
            }
        }
    }
    if last_keep.is_none() {
        return Err(SkillError::EmptyAfterEdit);
    }
    Ok(EditDecisionList {
        goal: goal.to_string(),
        sources: transcripts.iter().map(|t| t.source.clone()).collect(),
        operations,
    })
}

/// Renders `edl` against its sources onto a gapless timeline.
pub fn apply_edit(sources: &[(ArtifactId, &SynthMedia)], edl: &EditDecisionList) -> Result<SynthMedia, SkillError> {
    let videos: Vec<&SynthMedia> = sources.iter().map(|(_, v)| *v).collect();
    let (width, height, fps) = common_format(&videos)?;
    let mut out = SynthMedia::video_with(width, height, fps, 0, |_| [0, 0, 0]);
    let on_grid = |t: u64| (t * u64::from(fps)).is_multiple_of(1000);

    for keep in edl.keeps() {
        let out_of_bounds = |reason: &str| SkillError::RangeOutOfBounds {
            source_id: keep.source.to_string(),
            t0_ms: keep.t0_ms,
            t1_ms: keep.t1_ms,
            reason: reason.to_string(),
        };
        let (_, video) = sources
            .iter()
            .find(|(id, _)| *id == keep.source)
            .ok_or_else(|| out_of_bounds("source not supplied"))?;
        if keep.t0_ms >= keep.t1_ms || keep.t1_ms > video.duration_ms {
            return Err(out_of_bounds("range outside the source"));
        }
        if !on_grid(keep.t0_ms) || !on_grid(keep.t1_ms) {
            return Err(out_of_bounds("range not aligned to the frame grid"));
        }
        let offset = out.duration_ms;
        let inside = |t0: u64, t1: u64| keep.t0_ms <= t0 && t1 <= keep.t1_ms;
        out.frames.extend(
            video
                .frames
                .iter()
                .filter(|f| keep.t0_ms <= f.t_ms && f.t_ms < keep.t1_ms)
                .map(|f| {
                    let mut f = f.clone();
                    f.t_ms = f.t_ms - keep.t0_ms + offset;
                    f
                }),
        );
        out.audio.extend(
            video
                .audio
                .iter()
                .filter(|a| inside(a.t0_ms, a.t1_ms))
                .map(|a| AudioSegment {
                    t0_ms: a.t0_ms - keep.t0_ms + offset,
                    t1_ms: a.t1_ms - keep.t0_ms + offset,
                    ..a.clone()
                }),
        );
        out.duration_ms += keep.t1_ms - keep.t0_ms;
    }

    for op in &edl.operations {
        if let EditOp::Transition { effect, at_ms } = op {
            let idx = out.frames.partition_point(|f| f.t_ms < *at_ms);
            let overlay = OverlayEvent {
                text: effect.clone(),
                role: OverlayRole::Transition,
                position: OverlayPosition::Center,
            };
            for i in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
                if let Some(frame) = out.frames.get_mut(i) {
                    frame.overlays.push(overlay.clone());
                }
            }
        }
    }
    out.meta.insert("edl".into(), edl.to_canonical_json());
    out.validate()?;
    Ok(out)
}
