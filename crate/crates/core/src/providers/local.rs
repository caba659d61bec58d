//! In-process tools that bypass routing: subtitle burning and green-screen
//! background replacement.

use async_trait::async_trait;
use thiserror::Error;

use super::ass::{parse_ass, AssError, AssEvent};
use super::{CapabilityHandler, HandlerCall, ProviderError};
use crate::media::{MediaError, MediaKind, OverlayEvent, Rgb, SynthMedia};
use crate::registry::CapabilityId;

#[derive(Debug, Error)]
pub enum LocalToolError {
    #[error(transparent)]
    WrongKind(#[from] MediaError),
    #[error("subtitle events overlap: [{0}, {1}) and [{2}, {3})")]
    OverlappingEvents(u64, u64, u64, u64),
    #[error("subtitle event [{0}, {1}) is empty or has no text")]
    InvalidEvent(u64, u64),
    #[error(transparent)]
    Ass(#[from] AssError),
}

/// Stamps a bottom subtitle overlay on every frame inside each half-open
/// event interval. The input is left untouched.
pub fn burn_subtitles(video: &SynthMedia, events: &[AssEvent]) -> Result<SynthMedia, LocalToolError> {
    video.expect_kind(MediaKind::Video)?;
    let mut sorted: Vec<&AssEvent> = events.iter().collect();
    sorted.sort_by_key(|e| (e.start_ms, e.end_ms));
    for e in &sorted {
        if e.start_ms >= e.end_ms || e.text.is_empty() {
            return Err(LocalToolError::InvalidEvent(e.start_ms, e.end_ms));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start_ms < pair[0].end_ms {
            return Err(LocalToolError::OverlappingEvents(
                pair[0].start_ms,
                pair[0].end_ms,
                pair[1].start_ms,
                pair[1].end_ms,
            ));
        }
    }

    let mut out = video.clone();
    for frame in &mut out.frames {
        let idx = sorted.partition_point(|e| e.start_ms <= frame.t_ms);
        if let Some(e) = idx.checked_sub(1).map(|i| sorted[i]) {
            if frame.t_ms < e.end_ms {
                frame.overlays.push(OverlayEvent::subtitle(e.text.clone()));
            }
        }
    }
    let burns = out
        .meta
        .get("subtitle_burns")
        .and_then(|n| n.parse::<u64>().ok())
        .unwrap_or(0);
    out.meta.insert("subtitle_burns".into(), (burns + 1).to_string());
    out.meta.insert("subtitle_events".into(), sorted.len().to_string());
    Ok(out)
}

/// Green-screen test on a frame fill: `G > 1.5 * max(R, B)` and `G >= 100`.
pub fn is_green_screen(rgb: Rgb) -> bool {
    let [r, g, b] = rgb.map(u32::from);
    2 * g > 3 * r.max(b) && g >= 100
}

/// Frame-level chroma key: green-screen frames take the background image's
/// fill and a `chroma_replaced` tag. Everything else is preserved.
pub fn replace_background(video: &SynthMedia, background: &SynthMedia) -> Result<SynthMedia, LocalToolError> {
    video.expect_kind(MediaKind::Video)?;
    background.expect_kind(MediaKind::Image)?;
    let fill = background.fill().ok_or_else(|| {
        LocalToolError::WrongKind(MediaError::InvalidManifest("background image has no frame".into()))
    })?;
    let mut out = video.clone();
    let mut replaced = 0usize;
    for frame in out.frames.iter_mut().filter(|f| is_green_screen(f.fill_rgb)) {
        frame.fill_rgb = fill;
        frame.tags.insert("chroma_replaced".into(), "true".into());
        replaced += 1;
    }
    out.meta.insert("chroma_replaced_frames".into(), replaced.to_string());
    Ok(out)
}

/// Handler for both local tools.
#[derive(Debug, Default, Clone, Copy)]
pub struct LocalTools;

#[async_trait]
impl CapabilityHandler for LocalTools {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        let bad = |e: LocalToolError| ProviderError::BadParams(e.to_string());
        match call.capability {
            CapabilityId::BurnSubtitles => {
                let (_, video) = call.artifact("video")?;
                let events = parse_ass(call.str("subtitles_ass")?).map_err(|e| bad(e.into()))?;
                burn_subtitles(video, &events).map_err(bad)
            }
            CapabilityId::ReplaceBackground => {
                let (_, video) = call.artifact("video")?;
                let (_, background) = call.artifact("background")?;
                replace_background(video, background).map_err(bad)
            }
            other => Err(ProviderError::BadParams(format!("{other} is not a local tool"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{AudioSegment, OverlayRole};

    fn grid_video() -> SynthMedia {
        SynthMedia::video_with(640, 360, 5, 5000, |k| [k as u8, 0, 0])
    }

    #[test]
    fn burns_half_open_interval() {
        let v = grid_video();
        let out = burn_subtitles(&v, &[AssEvent::new(1000, 2000, "A")]).unwrap();
        let stamped: Vec<usize> = out
            .frames
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.overlays.is_empty())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(stamped, vec![5, 6, 7, 8, 9]);
        let o = &out.frames[5].overlays[0];
        assert_eq!((o.text.as_str(), o.role), ("A", OverlayRole::Subtitle));
        assert!(v.frames.iter().all(|f| f.overlays.is_empty()));
    }

    #[test]
    fn empty_burn_only_records_meta() {
        let v = grid_video();
        let mut out = burn_subtitles(&v, &[]).unwrap();
        assert_eq!(out.meta["subtitle_burns"], "1");
        out.meta.clear();
        assert_eq!(out, v);
    }

    #[test]
    fn overlap_is_rejected() {
        let err = burn_subtitles(
            &grid_video(),
            &[AssEvent::new(500, 1500, "b"), AssEvent::new(0, 1000, "a")],
        );
        assert!(matches!(
            err,
            Err(LocalToolError::OverlappingEvents(0, 1000, 500, 1500))
        ));
    }

    #[test]
    fn burning_twice_duplicates_overlays() {
        let events = [AssEvent::new(0, 400, "x")];
        let once = burn_subtitles(&grid_video(), &events).unwrap();
        let twice = burn_subtitles(&once, &events).unwrap();
        assert_eq!(twice.frames[0].overlays.len(), 2);
        assert_eq!(twice.meta["subtitle_burns"], "2");
    }

    #[test]
    fn burn_requires_video() {
        let img = SynthMedia::image(1, 1, [0, 0, 0]);
        assert!(matches!(burn_subtitles(&img, &[]), Err(LocalToolError::WrongKind(_))));
    }

    #[test]
    fn chroma_threshold_cases() {
        assert!(is_green_screen([40, 200, 30]));
        assert!(!is_green_screen([200, 180, 40]));
        assert!(!is_green_screen([10, 99, 10]));
        assert!(is_green_screen([10, 100, 10]));
        // exactly 1.5x is not strictly greater
        assert!(!is_green_screen([100, 150, 0]));
        assert!(is_green_screen([100, 151, 0]));
    }

    #[test]
    fn replaces_only_green_frames() {
        let fills = [[40, 200, 30], [200, 180, 40], [10, 99, 10]];
        let mut v = SynthMedia::video_with(640, 360, 5, 600, |k| fills[k as usize]);
        v.audio.push(AudioSegment::speech(0, 400, "hi", -20.0));
        v.frames[0].overlays.push(OverlayEvent::subtitle("keep"));
        let bg = SynthMedia::image(640, 360, [7, 8, 9]);
        let out = replace_background(&v, &bg).unwrap();
        assert_eq!(out.frames[0].fill_rgb, [7, 8, 9]);
        assert_eq!(out.frames[0].tags["chroma_replaced"], "true");
        assert_eq!(out.frames[0].overlays, v.frames[0].overlays);
        assert_eq!(out.frames[1], v.frames[1]);
        assert_eq!(out.frames[2], v.frames[2]);
        assert_eq!(out.audio, v.audio);
        assert_eq!(
            (out.duration_ms, out.fps, out.frames.len()),
            (v.duration_ms, v.fps, v.frames.len())
        );
    }

    #[test]
    fn background_must_be_image() {
        let v = grid_video();
        assert!(matches!(replace_background(&v, &v), Err(LocalToolError::WrongKind(_))));
    }
}
