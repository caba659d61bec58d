//! Synthetic media container and artifact store.
//!
//! [`SynthMedia`] is a deterministic stand-in for real media: a video is a
//! grid of frames that each carry a flat fill color, overlays and tags, and
//! audio is a list of timed segments carrying their transcript text. Every
//! tool in the crate reads and writes this container.

mod store;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{ArtifactId, ArtifactStore, IndexRecord, Lineage, MediaArtifact, Producer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Image,
    Video,
    Audio,
    Text,
}

impl MediaKind {
    pub const ALL: [MediaKind; 4] = [MediaKind::Image, MediaKind::Video, MediaKind::Audio, MediaKind::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Image => "image",
            MediaKind::Video => "video",
            MediaKind::Audio => "audio",
            MediaKind::Text => "text",
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An RGB fill triple. Channels are `u8`, so the 0..=255 bound holds by type.
pub type Rgb = [u8; 3];

/// Renders a fill as `"r,g,b"`.
pub fn rgb_string(rgb: Rgb) -> String {
    format!("{},{},{}", rgb[0], rgb[1], rgb[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayRole {
    Subtitle,
    Label,
    Transition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayPosition {
    Bottom,
    Top,
    Center,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayEvent {
    pub text: String,
    pub role: OverlayRole,
    pub position: OverlayPosition,
}

impl OverlayEvent {
    pub fn subtitle(text: impl Into<String>) -> Self {
        OverlayEvent {
            text: text.into(),
            role: OverlayRole::Subtitle,
            position: OverlayPosition::Bottom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthFrame {
    pub t_ms: u64,
    pub fill_rgb: Rgb,
    /// Insertion-ordered; burned overlays are only ever appended.
    #[serde(default)]
    pub overlays: Vec<OverlayEvent>,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

impl SynthFrame {
    pub fn new(t_ms: u64, fill_rgb: Rgb) -> Self {
        SynthFrame {
            t_ms,
            fill_rgb,
            overlays: Vec::new(),
            tags: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioKind {
    Speech,
    Silence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSegment {
    pub t0_ms: u64,
    pub t1_ms: u64,
    #[serde(default)]
    pub text: String,
    pub kind: AudioKind,
    pub loudness_lufs: f64,
}

impl AudioSegment {
    pub fn speech(t0_ms: u64, t1_ms: u64, text: impl Into<String>, loudness_lufs: f64) -> Self {
        AudioSegment {
            t0_ms,
            t1_ms,
            text: text.into(),
            kind: AudioKind::Speech,
            loudness_lufs,
        }
    }

    pub fn silence(t0_ms: u64, t1_ms: u64, loudness_lufs: f64) -> Self {
        AudioSegment {
            t0_ms,
            t1_ms,
            text: String::new(),
            kind: AudioKind::Silence,
            loudness_lufs,
        }
    }

    pub fn duration_ms(&self) -> u64 {
        self.t1_ms - self.t0_ms
    }

    /// Same segment moved `offset_ms` later.
    pub fn shifted(&self, offset_ms: u64) -> Self {
        AudioSegment {
            t0_ms: self.t0_ms + offset_ms,
            t1_ms: self.t1_ms + offset_ms,
            ..self.clone()
        }
    }
}

/// The deterministic media container.
///
/// Field applicability depends on `kind`: `width`/`height` for image and
/// video, `fps` for video only, `frames` for image (exactly one) and video,
/// `audio` for audio and video, `text` for text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMedia {
    pub kind: MediaKind,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub fps: Option<u32>,
    pub duration_ms: u64,
    #[serde(default)]
    pub frames: Vec<SynthFrame>,
    #[serde(default)]
    pub audio: Vec<AudioSegment>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// Timestamp of frame `index` on an `fps` grid.
pub fn frame_time_ms(index: u64, fps: u32) -> u64 {
    index * 1000 / u64::from(fps)
}

/// Number of frames a video of `duration_ms` holds at `fps`.
pub fn frame_count(duration_ms: u64, fps: u32) -> u64 {
    duration_ms * u64::from(fps) / 1000
}

impl SynthMedia {
    pub fn image(width: u32, height: u32, fill_rgb: Rgb) -> Self {
        SynthMedia {
            kind: MediaKind::Image,
            width: Some(width),
            height: Some(height),
            fps: None,
            duration_ms: 0,
            frames: vec![SynthFrame::new(0, fill_rgb)],
            audio: Vec::new(),
            text: String::new(),
            meta: BTreeMap::new(),
        }
    }

    /// A video whose frames are produced by `fill(index)` on the `fps` grid.
    pub fn video_with(width: u32, height: u32, fps: u32, duration_ms: u64, mut fill: impl FnMut(u64) -> Rgb) -> Self {
        let frames = (0..frame_count(duration_ms, fps))
            .map(|k| SynthFrame::new(frame_time_ms(k, fps), fill(k)))
            .collect();
        SynthMedia {
            kind: MediaKind::Video,
            width: Some(width),
            height: Some(height),
            fps: Some(fps),
            duration_ms,
            frames,
            audio: Vec::new(),
            text: String::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn audio(segments: Vec<AudioSegment>) -> Self {
        let duration_ms = segments.iter().map(|s| s.t1_ms).max().unwrap_or(0);
        SynthMedia {
            kind: MediaKind::Audio,
            width: None,
            height: None,
            fps: None,
            duration_ms,
            frames: Vec::new(),
            audio: segments,
            text: String::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        SynthMedia {
            kind: MediaKind::Text,
            width: None,
            height: None,
            fps: None,
            duration_ms: 0,
            frames: Vec::new(),
            audio: Vec::new(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn expect_kind(&self, expected: MediaKind) -> Result<(), MediaError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(MediaError::WrongKind {
                expected,
                found: self.kind,
            })
        }
    }

    /// Fill of the single frame of an image (or the first frame of a video).
    pub fn fill(&self) -> Option<Rgb> {
        self.frames.first().map(|f| f.fill_rgb)
    }

    /// Width and height, for media kinds that have them.
    pub fn dimensions(&self) -> Option<(u32, u32)> {
        Some((self.width?, self.height?))
    }

    /// Checks every container invariant, naming the first rule that fails.
    pub fn validate(&self) -> Result<(), MediaError> {
        let bad = |rule: String| Err(MediaError::InvalidManifest(rule));

        for (i, frame) in self.frames.iter().enumerate() {
            for overlay in &frame.overlays {
                if overlay.role == OverlayRole::Subtitle && overlay.text.is_empty() {
                    return bad(format!("frames[{i}]: subtitle overlay with empty text"));
                }
            }
        }
        let mut prev_end = 0;
        for (i, seg) in self.audio.iter().enumerate() {
            if seg.t0_ms >= seg.t1_ms {
                return bad(format!("audio[{i}]: t0_ms must be < t1_ms"));
            }
            if seg.t0_ms < prev_end {
                return bad(format!("audio[{i}]: segments overlap or are unsorted"));
            }
            if seg.kind == AudioKind::Silence && !seg.text.is_empty() {
                return bad(format!("audio[{i}]: silence segment carries text"));
            }
            if !seg.loudness_lufs.is_finite() {
                return bad(format!("audio[{i}]: loudness is not finite"));
            }
            prev_end = seg.t1_ms;
        }

        match self.kind {
            MediaKind::Image => {
                self.require_dimensions()?;
                if self.fps.is_some() {
                    return bad("image: fps must be absent".into());
                }
                if self.duration_ms != 0 {
                    return bad("image: duration_ms must be 0".into());
                }
                if self.frames.len() != 1 {
                    return bad("image: exactly one frame required".into());
                }
                if self.frames[0].t_ms != 0 {
                    return bad("image: frame t_ms must be 0".into());
                }
                if !self.audio.is_empty() {
                    return bad("image: audio must be empty".into());
                }
            }
            MediaKind::Video => {
                self.require_dimensions()?;
                let fps = match self.fps {
                    Some(fps) if fps > 0 => fps,
                    _ => return bad("video: fps must be a positive integer".into()),
                };
                let expected = frame_count(self.duration_ms, fps);
                if expected == 0 {
                    return bad("video: at least one frame required".into());
                }
                if self.frames.len() as u64 != expected {
                    return bad(format!(
                        "video: frames.len ({}) != floor(duration_ms * fps / 1000) ({expected})",
                        self.frames.len()
                    ));
                }
                for (k, frame) in self.frames.iter().enumerate() {
                    let t = frame_time_ms(k as u64, fps);
                    if frame.t_ms != t {
                        return bad(format!("video: frame {k} has t_ms {} (expected {t})", frame.t_ms));
                    }
                }
                if prev_end > self.duration_ms {
                    return bad("video: audio extends past duration_ms".into());
                }
            }
            MediaKind::Audio => {
                if !self.frames.is_empty() {
                    return bad("audio: frames must be empty".into());
                }
                if self.width.is_some() || self.height.is_some() || self.fps.is_some() {
                    return bad("audio: width/height/fps must be absent".into());
                }
                if self.duration_ms != prev_end {
                    return bad("audio: duration_ms must equal max(t1_ms) over segments".into());
                }
            }
            MediaKind::Text => {
                if !self.frames.is_empty() || !self.audio.is_empty() {
                    return bad("text: frames and audio must be empty".into());
                }
                if self.width.is_some() || self.height.is_some() || self.fps.is_some() {
                    return bad("text: width/height/fps must be absent".into());
                }
                if self.duration_ms != 0 {
                    return bad("text: duration_ms must be 0".into());
                }
            }
        }
        Ok(())
    }

    fn require_dimensions(&self) -> Result<(), MediaError> {
        match (self.width, self.height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => Ok(()),
            _ => Err(MediaError::InvalidManifest(format!(
                "{}: width and height must be positive integers",
                self.kind
            ))),
        }
    }

    /// Canonical JSON form of this manifest.
    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self).expect("manifest serialization is infallible")
    }
}

/// Frame showing at `t_ms`: the one with the largest timestamp not after the
/// query. `t_ms == duration_ms` yields the last frame.
pub fn frame_at(media: &SynthMedia, t_ms: u64) -> Result<&SynthFrame, MediaError> {
    media.expect_kind(MediaKind::Video)?;
    if t_ms > media.duration_ms || media.frames.is_empty() {
        return Err(MediaError::OutOfRange {
            t_ms,
            duration_ms: media.duration_ms,
        });
    }
    let idx = media.frames.partition_point(|f| f.t_ms <= t_ms);
    Ok(&media.frames[idx.saturating_sub(1)])
}

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("artifact not found: {0}")]
    NotFound(String),
    #[error("t_ms {t_ms} outside [0, {duration_ms}]")]
    OutOfRange { t_ms: u64, duration_ms: u64 },
    #[error("expected {expected} media, found {found}")]
    WrongKind { expected: MediaKind, found: MediaKind },
    #[error("artifact store I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt artifact record: {0}")]
    Corrupt(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(duration_ms: u64, fps: u32) -> SynthMedia {
        SynthMedia::video_with(640, 360, fps, duration_ms, |k| [k as u8, 0, 0])
    }

    #[test]
    fn frame_at_floor_semantics() {
        let v = video(5000, 5);
        assert_eq!(v.frames.len(), 25);
        assert_eq!(frame_at(&v, 4999).unwrap().t_ms, 4800);
        assert_eq!(frame_at(&v, 4999).unwrap().fill_rgb[0], 24);
        assert_eq!(frame_at(&v, 0).unwrap().t_ms, 0);
        assert_eq!(frame_at(&v, 5000).unwrap().t_ms, 4800);
        assert_eq!(frame_at(&v, 199).unwrap().t_ms, 0);
        assert_eq!(frame_at(&v, 200).unwrap().t_ms, 200);
    }

    #[test]
    fn frame_at_errors() {
        let v = video(1000, 5);
        assert!(matches!(frame_at(&v, 1001), Err(MediaError::OutOfRange { .. })));
        let img = SynthMedia::image(1, 1, [0, 0, 0]);
        assert!(matches!(frame_at(&img, 0), Err(MediaError::WrongKind { .. })));
    }

    #[test]
    fn frame_at_uneven_fps() {
        let v = video(1000, 3);
        let times: Vec<u64> = v.frames.iter().map(|f| f.t_ms).collect();
        assert_eq!(times, vec![0, 333, 666]);
        assert_eq!(frame_at(&v, 665).unwrap().t_ms, 333);
        assert_eq!(frame_at(&v, 1000).unwrap().t_ms, 666);
    }

    #[test]
    fn validate_catches_frame_count() {
        let mut v = video(5000, 5);
        v.frames.pop();
        let err = v.validate().unwrap_err().to_string();
        assert!(err.contains("frames.len"), "{err}");
    }

    #[test]
    fn validate_image_and_audio_rules() {
        assert!(SynthMedia::image(640, 360, [1, 2, 3]).validate().is_ok());
        let mut img = SynthMedia::image(640, 360, [1, 2, 3]);
        img.duration_ms = 10;
        assert!(img.validate().is_err());

        let a = SynthMedia::audio(vec![
            AudioSegment::speech(0, 400, "hello", -20.0),
            AudioSegment::silence(400, 800, -60.0),
        ]);
        assert_eq!(a.duration_ms, 800);
        assert!(a.validate().is_ok());
        assert_eq!(SynthMedia::audio(vec![]).duration_ms, 0);

        let overlap = SynthMedia::audio(vec![
            AudioSegment::speech(0, 400, "a", -20.0),
            AudioSegment::speech(300, 500, "b", -20.0),
        ]);
        assert!(overlap.validate().is_err());

        let mut noisy = SynthMedia::audio(vec![AudioSegment::silence(0, 100, -60.0)]);
        noisy.audio[0].text = "x".into();
        assert!(noisy.validate().is_err());
    }

    #[test]
    fn subtitle_overlay_needs_text() {
        let mut v = video(200, 5);
        v.frames[0].overlays.push(OverlayEvent::subtitle(""));
        assert!(v.validate().is_err());
    }
}
