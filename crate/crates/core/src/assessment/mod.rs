//! Error counting, the accuracy statistic and move timing.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{BlockColor, ColorCounts};
use crate::detect::{DetectedBlock, FrameDetection};
use crate::session::{EventKind, Hand, ProgressEvent, SessionLog};
use crate::Point;

/// Two detections closer than this (rectified pixels) are the same block.
pub const SAME_BLOCK_RADIUS: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssessmentError {
    #[error("{frames} frames for {expected} expected multisets")]
    MismatchedLengths { frames: usize, expected: usize },
    #[error("accuracy undefined: {0}")]
    DomainError(String),
    #[error("malformed session log: {0}")]
    MalformedLog(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorMode {
    /// Every frame's excess blocks are counted again in later frames.
    CumulativeLegacy,
    /// Each wrong block is counted once while it stays in place.
    #[default]
    UniquePerBlock,
}

fn excess(blocks: &[DetectedBlock], expected: &ColorCounts) -> ColorCounts {
    let seen = ColorCounts::from_colors(blocks.iter().map(|b| b.color));
    let mut out = ColorCounts::default();
    for c in BlockColor::ALL {
        *out.get_mut(c) = seen.get(c).saturating_sub(expected.get(c));
    }
    out
}

/// Counts perceived errors over a frame sequence. `expected[k]` is the color
/// multiset that should be in the target area at frame `k`; a drop in its
/// total marks a new hand and clears the remembered wrong blocks.
pub fn count_perceived_errors(
    frames: &[Vec<DetectedBlock>],
    expected: &[ColorCounts],
    mode: ErrorMode,
) -> Result<u32, AssessmentError> {
    if frames.len() != expected.len() {
        return Err(AssessmentError::MismatchedLengths {
            frames: frames.len(),
            expected: expected.len(),
        });
    }
    match mode {
        ErrorMode::CumulativeLegacy => Ok(frames
            .iter()
            .zip(expected)
            .map(|(f, e)| excess(f, e).total())
            .sum()),
        ErrorMode::UniquePerBlock => Ok(unique_errors(frames, expected)),
    }
}

fn unique_errors(frames: &[Vec<DetectedBlock>], expected: &[ColorCounts]) -> u32 {
    let mut known: Vec<(Point, BlockColor)> = Vec::new();
    let mut total = 0;
    let mut prev: &[DetectedBlock] = &[];
    let mut prev_total = 0;
    for (blocks, exp) in frames.iter().zip(expected) {
        if exp.total() < prev_total {
            known.clear();
            prev = &[];
        }
        prev_total = exp.total();
        let over = excess(blocks, exp);
        for c in BlockColor::ALL {
            let want = over.get(c) as usize;
            let idx: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].color == c).collect();
            let mut matched = vec![false; idx.len()];
            let mut known_used = vec![false; known.len()];
            let mut hits = 0;
            for (m, &i) in idx.iter().enumerate() {
                let p = blocks[i].center();
                let hit = known.iter().enumerate().position(|(k, (q, kc))| {
                    !known_used[k] && *kc == c && q.distance(p) <= SAME_BLOCK_RADIUS
                });
                if let Some(k) = hit {
                    known_used[k] = true;
                    known[k].0 = p;
                    matched[m] = true;
                    hits += 1;
                }
            }
            let fresh = want.saturating_sub(hits);
            if fresh == 0 {
                continue;
            }
            // New wrong blocks: prefer blocks that were not there last frame.
            let mut pool: Vec<(bool, usize)> = idx
                .iter()
                .enumerate()
                .filter(|(m, _)| !matched[*m])
                .map(|(_, &i)| {
                    let p = blocks[i].center();
                    let was_there = prev
                        .iter()
                        .any(|b| b.color == c && b.center().distance(p) <= SAME_BLOCK_RADIUS);
                    (was_there, i)
                })
                .collect();
            pool.sort();
            for &(_, i) in pool.iter().take(fresh) {
                known.push((blocks[i].center(), c));
                total += 1;
            }
        }
        prev = blocks;
    }
    total
}

/// Percentage of moves not flagged falsely: `100 * (moved - (perceived - actual)) / moved`,
/// rounded half-up to hundredths using exact integer arithmetic.
pub fn accuracy(moved: u32, actual: u32, perceived: u32) -> Result<f64, AssessmentError> {
    if moved == 0 {
        return Err(AssessmentError::DomainError("no blocks moved".into()));
    }
    if perceived < actual {
        return Err(AssessmentError::DomainError(format!(
            "perceived errors ({perceived}) below actual errors ({actual})"
        )));
    }
    let false_pos = perceived - actual;
    if false_pos > moved {
        return Err(AssessmentError::DomainError(format!(
            "{false_pos} false positives exceed {moved} moves"
        )));
    }
    let (m, good) = (u64::from(moved), u64::from(moved - false_pos));
    let hundredths = (20_000 * good + m) / (2 * m);
    Ok(hundredths as f64 / 100.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimingReport {
    pub mean_color_change_ms: Option<f64>,
    pub mean_same_color_ms: Option<f64>,
    pub per_move_durations: Vec<u64>,
}

fn mean(v: &[u64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64)
}

/// Move durations and the color-change versus same-color means. Moves in the
/// first cycle of each hand are in neither class.
pub fn timing_report(events: &[ProgressEvent]) -> Result<TimingReport, AssessmentError> {
    let malformed = |m: String| AssessmentError::MalformedLog(m);
    let mut durations = Vec::new();
    let mut change = Vec::new();
    let mut same = Vec::new();
    let mut last_tap: Option<u64> = None;
    let mut hand: Option<Hand> = None;
    // Color of each cycle of the current hand.
    let mut cycle_colors: Vec<BlockColor> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if let Some(t) = last_tap {
            if e.timestamp <= t {
                return Err(malformed(format!("event {i}: timestamp not increasing")));
            }
        }
        match e.kind {
            EventKind::ReadyTap | EventKind::HandSwitch => {
                last_tap = Some(e.timestamp);
                hand = Some(e.hand);
                cycle_colors.clear();
            }
            EventKind::MoveTap => {
                let start = last_tap.ok_or_else(|| malformed(format!("event {i}: move before ready tap")))?;
                if hand != Some(e.hand) {
                    return Err(malformed(format!("event {i}: move outside its hand")));
                }
                let color = e
                    .color_instructed
                    .ok_or_else(|| malformed(format!("event {i}: move without a color")))?;
                let ci = e.cycle_index as usize;
                if ci == cycle_colors.len() {
                    cycle_colors.push(color);
                } else if ci + 1 != cycle_colors.len() || cycle_colors[ci] != color {
                    return Err(malformed(format!("event {i}: inconsistent cycle index")));
                }
                let d = e.timestamp - start;
                durations.push(d);
                if ci > 0 {
                    if e.move_index == 1 && cycle_colors[ci - 1] != color {
                        change.push(d);
                    } else {
                        same.push(d);
                    }
                }
                last_tap = Some(e.timestamp);
            }
            EventKind::FeedbackIssued => {
                last_tap = Some(e.timestamp);
            }
        }
    }
    Ok(TimingReport {
        mean_color_change_ms: mean(&change),
        mean_same_color_ms: mean(&same),
        per_move_durations: durations,
    })
}

/// Expected color multiset after each move: the colors instructed so far in
/// the current hand.
pub fn expected_after_moves(events: &[ProgressEvent]) -> Vec<ColorCounts> {
    let mut out = Vec::new();
    let mut acc = ColorCounts::default();
    let mut hand = None;
    for e in events.iter().filter(|e| e.kind == EventKind::MoveTap) {
        if hand != Some(e.hand) {
            acc = ColorCounts::default();
            hand = Some(e.hand);
        }
        if let Some(c) = e.color_instructed {
            acc.add(c);
        }
        out.push(acc);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssessmentReport {
    pub blocks_moved: u32,
    pub actual_errors: u32,
    pub perceived_errors: u32,
    pub accuracy_percent: f64,
    pub mean_color_change_ms: Option<f64>,
    pub mean_same_color_ms: Option<f64>,
    pub per_move_durations: Vec<u64>,
    pub error_mode: ErrorMode,
    /// Frames whose detection was aborted (counted as empty).
    pub aborted_frames: u32,
}

impl AssessmentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Perceived error count for a session, without the accuracy statistic.
/// Defined even when the count exceeds the moves, which makes accuracy undefined.
pub fn session_perceived_errors(
    log: &SessionLog,
    frames: &[FrameDetection],
    mode: ErrorMode,
) -> Result<u32, AssessmentError> {
    let expected = expected_after_moves(&log.events);
    count_perceived_errors(&per_move_blocks(frames, expected.len())?, &expected, mode)
}

// Frames keyed by move ordinal; a move without a frame is an empty frame.
fn per_move_blocks(frames: &[FrameDetection], moved: usize) -> Result<Vec<Vec<DetectedBlock>>, AssessmentError> {
    let mismatch = AssessmentError::MismatchedLengths {
        frames: frames.len(),
        expected: moved,
    };
    let mut per_move: Vec<Option<&FrameDetection>> = vec![None; moved];
    for f in frames {
        match per_move.get_mut(f.frame_id as usize) {
            Some(slot @ None) => *slot = Some(f),
            _ => return Err(mismatch),
        }
    }
    Ok(per_move
        .iter()
        .map(|f| f.map(|f| f.blocks.clone()).unwrap_or_default())
        .collect())
}

/// One detection per completed move, matched by `frameId` (the zero-based
/// move ordinal). Moves without a frame count as empty frames.
pub fn build_report(
    log: &SessionLog,
    frames: &[FrameDetection],
    actual_errors: u32,
    mode: ErrorMode,
) -> Result<AssessmentReport, AssessmentError> {
    let timing = timing_report(&log.events)?;
    let expected = expected_after_moves(&log.events);
    let moved = expected.len();
    let blocks = per_move_blocks(frames, moved)?;
    let aborted_frames = frames.iter().filter(|f| f.aborted).count() as u32;
    let perceived = count_perceived_errors(&blocks, &expected, mode)?;
    let accuracy_percent = accuracy(moved as u32, actual_errors, perceived)?;
    Ok(AssessmentReport {
        blocks_moved: moved as u32,
        actual_errors,
        perceived_errors: perceived,
        accuracy_percent,
        mean_color_change_ms: timing.mean_color_change_ms,
        mean_same_color_ms: timing.mean_same_color_ms,
        per_move_durations: timing.per_move_durations,
        error_mode: mode,
        aborted_frames,
    })
}

/// One row of an accuracy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub moved: u32,
    pub actual: u32,
    pub perceived: u32,
    pub accuracy: f64,
}

impl TableRow {
    pub fn new(label: impl Into<String>, moved: u32, actual: u32, perceived: u32) -> Result<Self, AssessmentError> {
        Ok(Self {
            label: label.into(),
            moved,
            actual,
            perceived,
            accuracy: accuracy(moved, actual, perceived)?,
        })
    }

    /// Sums the rows into a total row.
    pub fn total(rows: &[TableRow]) -> Result<Self, AssessmentError> {
        let (m, a, p) = rows
            .iter()
            .fold((0, 0, 0), |(m, a, p), r| (m + r.moved, a + r.actual, p + r.perceived));
        Self::new("Total", m, a, p)
    }
}

/// Writes rows as CSV with a header line.
pub fn write_table_csv<W: io::Write>(rows: &[TableRow], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user", "moved", "actualErrors", "perceivedErrors", "accuracy"])?;
    for r in rows {
        wr.write_record([
            r.label.clone(),
            r.moved.to_string(),
            r.actual.to_string(),
            r.perceived.to_string(),
            format!("{:.2}", r.accuracy),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{Session, SessionConfig};
    use crate::Quad;

    fn block(x: f64, y: f64, c: BlockColor) -> DetectedBlock {
        DetectedBlock::new(Quad::axis_square(x - 20.0, y - 20.0, 40.0), c)
    }

    fn ev(kind: EventKind, t: u64, cycle: u32, mv: u32, c: BlockColor) -> ProgressEvent {
        ProgressEvent {
            kind,
            timestamp: t,
            hand: Hand::First,
            cycle_index: cycle,
            move_index: mv,
            color_instructed: Some(c),
            number_to_move: 2,
            depleted: false,
            error_count: None,
        }
    }

    #[test]
    fn correct_frames_have_no_errors() {
        let f = vec![vec![block(50., 50., BlockColor::Red), block(150., 50., BlockColor::Red)]; 3];
        let e = vec![ColorCounts::new(2, 0, 0); 3];
        for mode in [ErrorMode::CumulativeLegacy, ErrorMode::UniquePerBlock] {
            assert_eq!(count_perceived_errors(&f, &e, mode).unwrap(), 0);
        }
        assert_eq!(count_perceived_errors(&[], &[], ErrorMode::UniquePerBlock).unwrap(), 0);
    }

    #[test]
    fn stationary_wrong_block() {
        let wrong = block(300., 300., BlockColor::Green);
        let mut frames = Vec::new();
        let mut expected = Vec::new();
        for k in 0..4 {
            let mut f: Vec<_> = (0..=k).map(|i| block(50. + 60. * i as f64, 50., BlockColor::Red)).collect();
            f.push(wrong);
            frames.push(f);
            expected.push(ColorCounts::new(k as u32 + 1, 0, 0));
        }
        assert_eq!(count_perceived_errors(&frames, &expected, ErrorMode::CumulativeLegacy).unwrap(), 4);
        assert_eq!(count_perceived_errors(&frames, &expected, ErrorMode::UniquePerBlock).unwrap(), 1);
    }

    #[test]
    fn mismatched_lengths() {
        assert_eq!(
            count_perceived_errors(&[vec![]], &[], ErrorMode::CumulativeLegacy),
            Err(AssessmentError::MismatchedLengths { frames: 1, expected: 0 })
        );
    }

    #[test]
    fn accuracy_domain() {
        assert!(accuracy(0, 0, 0).is_err());
        assert!(accuracy(10, 3, 2).is_err());
        assert!(accuracy(2, 0, 5).is_err());
        assert_eq!(accuracy(22, 0, 9).unwrap(), 59.09);
        assert_eq!(accuracy(10, 0, 0).unwrap(), 100.0);
    }

    #[test]
    fn constant_spacing_is_same_color() {
        use BlockColor::Red;
        let events = vec![
            ev(EventKind::ReadyTap, 0, 0, 0, Red),
            ev(EventKind::MoveTap, 1000, 0, 1, Red),
            ev(EventKind::MoveTap, 2000, 0, 2, Red),
            ev(EventKind::MoveTap, 3000, 1, 1, Red),
            ev(EventKind::MoveTap, 4000, 1, 2, Red),
        ];
        let r = timing_report(&events).unwrap();
        assert_eq!(r.mean_same_color_ms, Some(1000.0));
        assert_eq!(r.mean_color_change_ms, None);
        assert_eq!(r.per_move_durations, vec![1000; 4]);
    }

    #[test]
    fn color_change_move_is_separated() {
        use BlockColor::{Green, Red};
        let events = vec![
            ev(EventKind::ReadyTap, 0, 0, 0, Red),
            ev(EventKind::MoveTap, 1000, 0, 1, Red),
            ev(EventKind::MoveTap, 2000, 0, 2, Red),
            ev(EventKind::MoveTap, 4500, 1, 1, Green),
            ev(EventKind::MoveTap, 5500, 1, 2, Green),
        ];
        let r = timing_report(&events).unwrap();
        assert_eq!(r.mean_color_change_ms, Some(2500.0));
        assert_eq!(r.mean_same_color_ms, Some(1000.0));
    }

    #[test]
    fn single_cycle_has_no_means() {
        use BlockColor::Blue;
        let events = vec![
            ev(EventKind::ReadyTap, 0, 0, 0, Blue),
            ev(EventKind::MoveTap, 800, 0, 1, Blue),
            ev(EventKind::MoveTap, 1700, 0, 2, Blue),
        ];
        let r = timing_report(&events).unwrap();
        assert_eq!((r.mean_color_change_ms, r.mean_same_color_ms), (None, None));
    }

    #[test]
    fn malformed_logs() {
        use BlockColor::Blue;
        let events = vec![ev(EventKind::MoveTap, 800, 0, 1, Blue)];
        assert!(matches!(timing_report(&events), Err(AssessmentError::MalformedLog(_))));
        let events = vec![ev(EventKind::ReadyTap, 800, 0, 0, Blue), ev(EventKind::MoveTap, 800, 0, 1, Blue)];
        assert!(matches!(timing_report(&events), Err(AssessmentError::MalformedLog(_))));
    }

    #[test]
    fn all_correct_run_is_perfect() {
        let mut s = Session::new(SessionConfig::with_seed(8)).unwrap();
        let mut t = 0;
        while s.phase() != crate::session::Phase::Feedback {
            t += 900;
            s.record_tap(t).unwrap();
        }
        let r = build_report(&s.log(), &[], 0, ErrorMode::UniquePerBlock).unwrap();
        assert_eq!(r.accuracy_percent, 100.0);
        assert_eq!(r.perceived_errors, 0);
        assert_eq!(r.per_move_durations.len() as u32, r.blocks_moved);
    }

    #[test]
    fn csv_rows() {
        let rows = vec![TableRow::new("1", 22, 0, 9).unwrap(), TableRow::new("2", 23, 0, 4).unwrap()];
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "user,moved,actualErrors,perceivedErrors,accuracy\n1,22,0,9,59.09\n2,23,0,4,82.61\n"
        );
        assert_eq!(TableRow::total(&rows).unwrap().moved, 45);
    }
}
