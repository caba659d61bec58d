//! Whole-video transforms used by the skills: concatenation, last-frame
//! extraction, brightness correction and loudness normalization.

use super::SkillError;
use crate::media::{frame_at, AudioKind, MediaKind, SynthMedia};

/// Shared width, height and fps of a set of videos.
pub(crate) fn common_format(videos: &[&SynthMedia]) -> Result<(u32, u32, u32), SkillError> {
    let first = videos.first().ok_or(SkillError::EmptyInput)?;
    let format = |v: &SynthMedia| -> Result<(u32, u32, u32), SkillError> {
        v.expect_kind(MediaKind::Video)?;
        Ok((v.width.unwrap_or(0), v.height.unwrap_or(0), v.fps.unwrap_or(0)))
    };
    let expected = format(first)?;
    for (index, v) in videos.iter().enumerate().skip(1) {
        let found = format(v)?;
        if found != expected {
            return Err(SkillError::MixedDimensions { index, expected, found });
        }
    }
    Ok(expected)
}

/// Frames and audio of each segment shifted by the summed duration of the
/// segments before it. `meta.boundaries_ms` lists every segment's start.
pub fn concat_videos(segments: &[&SynthMedia]) -> Result<SynthMedia, SkillError> {
    let (width, height, fps) = common_format(segments)?;
    let mut out = SynthMedia::video_with(width, height, fps, 0, |_| [0, 0, 0]);
    let mut boundaries = Vec::with_capacity(segments.len());
    for (index, seg) in segments.iter().enumerate() {
        if seg.duration_ms * u64::from(fps) % 1000 != 0 {
            return Err(SkillError::OffGrid {
                index,
                duration_ms: seg.duration_ms,
            });
        }
        let offset = out.duration_ms;
        boundaries.push(offset.to_string());
        out.frames.extend(seg.frames.iter().map(|f| {
            let mut f = f.clone();
            f.t_ms += offset;
            f
        }));
        out.audio.extend(seg.audio.iter().map(|a| a.shifted(offset)));
        out.duration_ms += seg.duration_ms;
    }
    out.meta.insert("segment_count".into(), segments.len().to_string());
    out.meta.insert("boundaries_ms".into(), boundaries.join(","));
    Ok(out)
}

/// The frame showing at the very end of `video`, as a standalone image.
pub fn last_frame_image(video: &SynthMedia) -> Result<SynthMedia, SkillError> {
    let frame = frame_at(video, video.duration_ms)?;
    let (w, h) = video.dimensions().unwrap_or((0, 0));
    Ok(SynthMedia::image(w, h, frame.fill_rgb).with_meta("source_t_ms", frame.t_ms.to_string()))
}

pub const DEFAULT_TARGET_BRIGHTNESS: u8 = 128;

/// Mean of per-frame channel means, rounded half up.
pub fn brightness(video: &SynthMedia) -> Result<u8, SkillError> {
    video.expect_kind(MediaKind::Video)?;
    let n = video.frames.len() as u64;
    if n == 0 {
        return Err(SkillError::EmptyInput);
    }
    let total: u64 = video.frames.iter().flat_map(|f| f.fill_rgb).map(u64::from).sum();
    Ok(((2 * total + 3 * n) / (6 * n)) as u8)
}

/// Shifts every channel so the mean brightness lands on `target`, clamping
/// to the channel range.
pub fn auto_color(video: &SynthMedia, target: u8) -> Result<SynthMedia, SkillError> {
    let before = brightness(video)?;
    let shift = i16::from(target) - i16::from(before);
    let mut out = video.clone();
    for frame in &mut out.frames {
        frame.fill_rgb = frame.fill_rgb.map(|c| (i16::from(c) + shift).clamp(0, 255) as u8);
    }
    let after = brightness(&out)?;
    out.meta.insert("brightness_before".into(), before.to_string());
    out.meta.insert("brightness_after".into(), after.to_string());
    Ok(out)
}

pub const DEFAULT_TARGET_LUFS: f64 = -14.0;

/// Sets every speech segment to `target_lufs`. `meta.gain_applied` is the
/// JSON list of per-speech-segment gains.
pub fn normalize_loudness(media: &SynthMedia, target_lufs: f64) -> Result<SynthMedia, SkillError> {
    if media.audio.is_empty() {
        return Err(SkillError::NoAudio("media".into()));
    }
    let mut out = media.clone();
    let mut gains = Vec::new();
    for seg in out.audio.iter_mut().filter(|s| s.kind == AudioKind::Speech) {
        gains.push(target_lufs - seg.loudness_lufs);
        seg.loudness_lufs = target_lufs;
    }
    let gains = serde_json::to_string(&gains).unwrap_or_default();
    out.meta.insert("gain_applied".into(), gains);
    Ok(out)
}
