//! The instructed move-block protocol as a seeded state machine.
//!
//! A ready tap starts a hand; every later tap reports one moved block. After
//! the drawn number of blocks the next cycle starts at once with a fresh color
//! and count. After `cycles_per_hand` cycles the first hand ends with a
//! switch-hands prompt and the engine waits for a new ready tap; after the
//! second hand it waits for the error count.

mod log;

pub use self::log::{SessionHeader, SessionLog, LOG_VERSION};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{BlockColor, ColorCounts};
use crate::rng::SplitMix64;

pub const HANDS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("timestamp {got} ms is not after the previous event at {last} ms")]
    OutOfOrderTimestamp { last: u64, got: u64 },
    #[error("taps are not accepted in the {0} phase")]
    TapInPhase(Phase),
    #[error("session is not waiting for feedback")]
    NotInFeedbackPhase,
    #[error("malformed session log: {0}")]
    MalformedLog(String),
}

/// Inclusive range of blocks drawn per cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionConfig {
    pub cycles_per_hand: u32,
    pub blocks_per_cycle_range: CountRange,
    pub colors: Vec<BlockColor>,
    pub rng_seed: u64,
    pub block_inventory: ColorCounts,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            cycles_per_hand: 5,
            blocks_per_cycle_range: CountRange { min: 2, max: 3 },
            colors: BlockColor::ALL.to_vec(),
            rng_seed: 0,
            block_inventory: ColorCounts::new(30, 30, 13),
        }
    }
}

impl SessionConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    /// Rejects configs that cannot run a single cycle. Inventories that can
    /// run dry over a whole session are allowed; depletion is flagged on the
    /// events instead.
    pub fn validate(&self) -> Result<(), SessionError> {
        let r = self.blocks_per_cycle_range;
        if self.cycles_per_hand == 0 {
            return Err(SessionError::InvalidConfig("cyclesPerHand must be at least 1".into()));
        }
        if r.min == 0 || r.min > r.max {
            return Err(SessionError::InvalidConfig(format!(
                "blocksPerCycleRange {}..{} is empty",
                r.min, r.max
            )));
        }
        if self.colors.is_empty() {
            return Err(SessionError::InvalidConfig("no colors configured".into()));
        }
        for (i, c) in self.colors.iter().enumerate() {
            if self.colors[..i].contains(c) {
                return Err(SessionError::InvalidConfig(format!("color {c} listed twice")));
            }
            if self.block_inventory.get(*c) < r.max {
                return Err(SessionError::InvalidConfig(format!(
                    "inventory of {c} ({}) is below one cycle's maximum ({})",
                    self.block_inventory.get(*c),
                    r.max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Phase {
    AwaitReady,
    AwaitMove,
    Feedback,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::AwaitReady => "awaitReady",
            Phase::AwaitMove => "awaitMove",
            Phase::Feedback => "feedback",
            Phase::Done => "done",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Hand {
    First,
    Second,
}

impl Hand {
    fn from_done(hands_done: u32) -> Self {
        if hands_done == 0 {
            Hand::First
        } else {
            Hand::Second
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    ReadyTap,
    MoveTap,
    /// The ready tap that starts the second hand.
    HandSwitch,
    FeedbackIssued,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProgressEvent {
    pub kind: EventKind,
    pub timestamp: u64,
    pub hand: Hand,
    /// Zero-based cycle within the hand.
    pub cycle_index: u32,
    /// One-based move within the cycle; 0 for ready taps and feedback.
    pub move_index: u32,
    pub color_instructed: Option<BlockColor>,
    /// Blocks drawn for the cycle.
    pub number_to_move: u32,
    /// Set when the cycle asks for more blocks of a color than remain.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub depleted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_count: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InstructionKind {
    AwaitReady,
    MoveBlock,
    SwitchHands,
    /// Both hands done; the error count is being computed.
    Complete,
    Feedback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Instruction {
    pub kind: InstructionKind,
    pub color: Option<BlockColor>,
    pub error_count: Option<u32>,
}

impl Instruction {
    fn plain(kind: InstructionKind) -> Self {
        Self {
            kind,
            color: None,
            error_count: None,
        }
    }

    pub fn move_block(color: BlockColor) -> Self {
        Self {
            kind: InstructionKind::MoveBlock,
            color: Some(color),
            error_count: None,
        }
    }

    pub fn feedback(n: u32) -> Self {
        Self {
            kind: InstructionKind::Feedback,
            color: None,
            error_count: Some(n),
        }
    }
}

/// The protocol variables plus bookkeeping for replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub number_of_errors: u32,
    pub number_blocks_moved: u32,
    pub number_cycles_completed: u32,
    pub color_to_move: Option<BlockColor>,
    pub number_to_move: u32,
    pub hands_done: u32,
    pub phase: Phase,
    pub last_timestamp: Option<u64>,
    pub rng_state: u64,
    /// Blocks moved so far in the session, per color.
    pub moved_per_color: ColorCounts,
    /// After the hand switch: true until the fresh ready tap.
    pub switching: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    config: SessionConfig,
    state: SessionState,
    rng: SplitMix64,
    events: Vec<ProgressEvent>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let rng = SplitMix64::new(config.rng_seed);
        Ok(Self {
            state: SessionState {
                number_of_errors: 0,
                number_blocks_moved: 0,
                number_cycles_completed: 0,
                color_to_move: None,
                number_to_move: 0,
                hands_done: 0,
                phase: Phase::AwaitReady,
                last_timestamp: None,
                rng_state: rng.state(),
                moved_per_color: ColorCounts::default(),
                switching: false,
            },
            config,
            rng,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn events(&self) -> &[ProgressEvent] {
        &self.events
    }

    pub fn header(&self) -> SessionHeader {
        SessionHeader::new(self.config.clone())
    }

    pub fn log(&self) -> SessionLog {
        SessionLog {
            header: self.header(),
            events: self.events.clone(),
        }
    }

    /// The prompt currently on display.
    pub fn current_instruction(&self) -> Instruction {
        match self.state.phase {
            Phase::AwaitReady if self.state.switching => Instruction::plain(InstructionKind::SwitchHands),
            Phase::AwaitReady => Instruction::plain(InstructionKind::AwaitReady),
            Phase::AwaitMove => Instruction::move_block(self.state.color_to_move.expect("cycle has a color")),
            Phase::Feedback => Instruction::plain(InstructionKind::Complete),
            Phase::Done => Instruction::feedback(self.state.number_of_errors),
        }
    }

    pub fn draw_color(&mut self) -> BlockColor {
        let n = self.config.colors.len() as u64;
        self.config.colors[self.rng.below(n) as usize]
    }

    pub fn draw_count(&mut self) -> u32 {
        let r = self.config.blocks_per_cycle_range;
        self.rng.in_range(r.min, r.max)
    }

    fn check_time(&self, t: u64) -> Result<(), SessionError> {
        match self.state.last_timestamp {
            Some(last) if t <= last => Err(SessionError::OutOfOrderTimestamp { last, got: t }),
            _ => Ok(()),
        }
    }

    // Color then count for a new cycle; true if the color cannot cover it.
    fn start_cycle(&mut self) -> bool {
        let color = self.draw_color();
        let count = self.draw_count();
        self.state.color_to_move = Some(color);
        self.state.number_to_move = count;
        self.state.number_blocks_moved = 0;
        self.state.rng_state = self.rng.state();
        let left = self
            .config
            .block_inventory
            .get(color)
            .saturating_sub(self.state.moved_per_color.get(color));
        left < count
    }

    fn event(&self, kind: EventKind, t: u64, depleted: bool) -> ProgressEvent {
        let s = &self.state;
        ProgressEvent {
            kind,
            timestamp: t,
            hand: Hand::from_done(s.hands_done),
            cycle_index: s.number_cycles_completed,
            move_index: s.number_blocks_moved,
            color_instructed: s.color_to_move,
            number_to_move: s.number_to_move,
            depleted,
            error_count: None,
        }
    }

    /// Handles one head tap at time `t` (milliseconds).
    pub fn record_tap(&mut self, t: u64) -> Result<(Instruction, ProgressEvent), SessionError> {
        match self.state.phase {
            Phase::Feedback | Phase::Done => return Err(SessionError::TapInPhase(self.state.phase)),
            _ => {}
        }
        self.check_time(t)?;
        let (instruction, event) = if self.state.phase == Phase::AwaitReady {
            let kind = if self.state.switching {
                EventKind::HandSwitch
            } else {
                EventKind::ReadyTap
            };
            self.state.switching = false;
            let depleted = self.start_cycle();
            self.state.phase = Phase::AwaitMove;
            let color = self.state.color_to_move.expect("cycle started");
            (Instruction::move_block(color), self.event(kind, t, depleted))
        } else {
            self.record_move(t)
        };
        self.state.last_timestamp = Some(t);
        self.events.push(event.clone());
        Ok((instruction, event))
    }

    fn record_move(&mut self, t: u64) -> (Instruction, ProgressEvent) {
        let color = self.state.color_to_move.expect("cycle in progress");
        self.state.number_blocks_moved += 1;
        self.state.moved_per_color.add(color);
        let event = self.event(EventKind::MoveTap, t, false);
        if self.state.number_blocks_moved != self.state.number_to_move {
            return (Instruction::move_block(color), event);
        }
        self.state.number_cycles_completed += 1;
        if self.state.number_cycles_completed != self.config.cycles_per_hand {
            let depleted = self.start_cycle();
            let mut event = event;
            event.depleted = depleted;
            let next = self.state.color_to_move.expect("cycle started");
            return (Instruction::move_block(next), event);
        }
        self.state.hands_done += 1;
        if self.state.hands_done < HANDS {
            self.state.number_blocks_moved = 0;
            self.state.number_cycles_completed = 0;
            self.state.color_to_move = None;
            self.state.number_to_move = 0;
            self.state.phase = Phase::AwaitReady;
            self.state.switching = true;
            return (Instruction::plain(InstructionKind::SwitchHands), event);
        }
        self.state.phase = Phase::Feedback;
        (Instruction::plain(InstructionKind::Complete), event)
    }

    /// Reports the error count to the user and ends the session.
    pub fn finalize(&mut self, error_count: u32, t: u64) -> Result<(Instruction, ProgressEvent), SessionError> {
        if self.state.phase != Phase::Feedback {
            return Err(SessionError::NotInFeedbackPhase);
        }
        self.check_time(t)?;
        self.state.number_of_errors = error_count;
        self.state.phase = Phase::Done;
        self.state.last_timestamp = Some(t);
        let mut event = self.event(EventKind::FeedbackIssued, t, false);
        event.hand = Hand::Second;
        event.error_count = Some(error_count);
        self.events.push(event.clone());
        Ok((Instruction::feedback(error_count), event))
    }

    /// Rebuilds a session by feeding a log's events through a fresh engine.
    /// Every regenerated event must equal the logged one.
    pub fn replay(log: &SessionLog) -> Result<Self, SessionError> {
        log.header.check_version()?;
        let mut s = Session::new(log.header.config.clone())?;
        for (i, e) in log.events.iter().enumerate() {
            let got = match e.kind {
                EventKind::FeedbackIssued => {
                    let n = e
                        .error_count
                        .ok_or_else(|| SessionError::MalformedLog(format!("event {i}: feedback without errorCount")))?;
                    s.finalize(n, e.timestamp)
                }
                _ => s.record_tap(e.timestamp),
            }
            .map_err(|err| SessionError::MalformedLog(format!("event {i}: {err}")))?
            .1;
            if &got != e {
                return Err(SessionError::MalformedLog(format!(
                    "event {i} does not match the replayed protocol"
                )));
            }
        }
        Ok(s)
    }
}
