//! Piecewise time dependence of channel multipliers.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::layout::{Layout, Multipliers};

/// Tolerance for segment boundary matching, s.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScheduleError {
    #[error("time {t} s outside schedule interval [0, {duration}] s")]
    OutOfRange { t: f64, duration: f64 },
    #[error("invalid schedule: {0}")]
    Invalid(String),
    #[error("schedule drives channel {0}, which the layout does not define")]
    UnknownChannel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Constant,
    Linear,
    /// `from + (to - from)·sin²(πs/2)`: zero slope at both ends.
    Cos2,
    /// Jumps from `from` to `to` at `t0` (right-continuous) and holds `to`.
    Step,
}

impl SegmentKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(Self::Constant),
            "linear" => Some(Self::Linear),
            "cos2" => Some(Self::Cos2),
            "step" => Some(Self::Step),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Cos2 => "cos2",
            Self::Step => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub kind: SegmentKind,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        let span = self.t1 - self.t0;
        let s = if span > 0.0 {
            ((t - self.t0) / span).clamp(0.0, 1.0)
        } else {
            1.0
        };
        match self.kind {
            SegmentKind::Constant => self.from,
            SegmentKind::Linear => self.from + (self.to - self.from) * s,
            SegmentKind::Cos2 => self.from + (self.to - self.from) * (FRAC_PI_2 * s).sin().powi(2),
            SegmentKind::Step => self.to,
        }
    }

    fn end_value(&self) -> f64 {
        match self.kind {
            SegmentKind::Constant => self.from,
            _ => self.to,
        }
    }
}

/// Contiguous segments covering `[0, duration]` for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSchedule {
    segments: Vec<Segment>,
}

impl ChannelSchedule {
    pub fn new(segments: Vec<Segment>) -> Self {
        ChannelSchedule { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn validate(&self, name: &str, duration: f64) -> Result<(), ScheduleError> {
        let bad = |msg: String| Err(ScheduleError::Invalid(format!("channel {name}: {msg}")));
        let Some(first) = self.segments.first() else {
            return bad("no segments".into());
        };
        if first.t0.abs() > TIME_EPS {
            return bad(format!("first segment starts at {} s, not 0", first.t0));
        }
        let last = self.segments.last().unwrap();
        if (last.t1 - duration).abs() > TIME_EPS.max(1e-12 * duration) {
            return bad(format!("last segment ends at {} s, duration is {duration} s", last.t1));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.t0.is_finite() && s.t1.is_finite() && s.from.is_finite() && s.to.is_finite()) {
                return bad(format!("segment {i} has non-finite fields"));
            }
            let zero_ok = s.kind == SegmentKind::Step;
            if s.t1 < s.t0 || (!zero_ok && s.t1 - s.t0 <= 0.0) {
                return bad(format!("segment {i} has non-positive length"));
            }
            if s.kind == SegmentKind::Constant && s.from != s.to {
                return bad(format!("constant segment {i} has from != to"));
            }
            if i > 0 {
                let prev = &self.segments[i - 1];
                if (s.t0 - prev.t1).abs() > TIME_EPS {
                    return bad(format!("gap or overlap before segment {i}"));
                }
                let jump = (s.from - prev.end_value()).abs();
                if jump > 1e-12 * (1.0 + prev.end_value().abs()) {
                    return bad(format!(
                        "segment {i} starts at {} but previous segment ends at {}",
                        s.from,
                        prev.end_value()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Right-continuous evaluation; `t` must already lie in `[0, duration]`.
    pub fn value(&self, t: f64) -> f64 {
        // Last segment whose start is <= t; zero-length steps at t are included.
        let idx = self
            .segments
            .iter()
            .rposition(|s| s.t0 <= t)
            .unwrap_or(0);
        self.segments[idx].value(t)
    }

    pub fn has_steps(&self) -> bool {
        self.segments.iter().any(|s| s.kind == SegmentKind::Step)
    }
}

/// Incremental construction of a [`ChannelSchedule`].
#[derive(Debug, Clone)]
pub struct ChannelScheduleBuilder {
    t: f64,
    value: f64,
    segments: Vec<Segment>,
}

impl ChannelScheduleBuilder {
    pub fn starting_at(value: f64) -> Self {
        ChannelScheduleBuilder {
            t: 0.0,
            value,
            segments: Vec::new(),
        }
    }

    fn push(mut self, dt: f64, kind: SegmentKind, to: f64) -> Self {
        let t1 = self.t + dt;
        self.segments.push(Segment {
            t0: self.t,
            t1,
            kind,
            from: self.value,
            to,
        });
        self.t = t1;
        self.value = to;
        self
    }

    pub fn hold(self, dt: f64) -> Self {
        let v = self.value;
        self.push(dt, SegmentKind::Constant, v)
    }

    pub fn linear(self, dt: f64, to: f64) -> Self {
        self.push(dt, SegmentKind::Linear, to)
    }

    pub fn cos2(self, dt: f64, to: f64) -> Self {
        self.push(dt, SegmentKind::Cos2, to)
    }

    /// Jump to `to` now and hold it for `dt`.
    pub fn step(self, to: f64, dt: f64) -> Self {
        self.push(dt, SegmentKind::Step, to)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn build(self) -> ChannelSchedule {
        ChannelSchedule {
            segments: self.segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    duration: f64,
    channels: BTreeMap<String, ChannelSchedule>,
}

impl Schedule {
    pub fn new(
        duration: f64,
        channels: BTreeMap<String, ChannelSchedule>,
    ) -> Result<Schedule, ScheduleError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ScheduleError::Invalid(format!(
                "duration must be positive, got {duration}"
            )));
        }
        for (name, ch) in &channels {
            ch.validate(name, duration)?;
        }
        Ok(Schedule { duration, channels })
    }

    /// A schedule holding every listed channel at a fixed value.
    pub fn constant(duration: f64, values: &[(&str, f64)]) -> Result<Schedule, ScheduleError> {
        let channels = values
            .iter()
            .map(|(n, v)| {
                (
                    n.to_string(),
                    ChannelScheduleBuilder::starting_at(*v).hold(duration).build(),
                )
            })
            .collect();
        Schedule::new(duration, channels)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn channels(&self) -> &BTreeMap<String, ChannelSchedule> {
        &self.channels
    }

    fn check_time(&self, t: f64) -> Result<(), ScheduleError> {
        if !(t >= 0.0 && t <= self.duration) {
            return Err(ScheduleError::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(())
    }

    pub fn value(&self, channel: &str, t: f64) -> Result<Option<f64>, ScheduleError> {
        self.check_time(t)?;
        Ok(self.channels.get(channel).map(|c| c.value(t)))
    }

    /// Channel multipliers for `layout` at time `t`. Channels the schedule
    /// does not drive stay at one.
    pub fn multipliers(&self, layout: &Layout, t: f64) -> Result<Multipliers, ScheduleError> {
        self.check_time(t)?;
        for name in self.channels.keys() {
            if layout.channel_index(name).is_none() {
                return Err(ScheduleError::UnknownChannel(name.clone()));
            }
        }
        let values = layout
            .channels()
            .iter()
            .map(|ch| self.channels.get(&ch.name).map_or(1.0, |c| c.value(t)))
            .collect();
        Ok(Multipliers(values))
    }

    /// Times at which any channel changes segment.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .channels
            .values()
            .flat_map(|c| c.segments.iter().flat_map(|s| [s.t0, s.t1]))
            .collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup_by(|a, b| (*a - *b).abs() < TIME_EPS);
        ts
    }

    /// Time-reversed schedule, `t -> duration - t`. Undefined for schedules
    /// with instantaneous steps, whose right-continuity cannot be preserved.
    pub fn reversed(&self) -> Result<Schedule, ScheduleError> {
        let mut channels = BTreeMap::new();
        for (name, ch) in &self.channels {
            if ch.has_steps() {
                return Err(ScheduleError::Invalid(format!(
                    "channel {name}: schedules with steps cannot be reversed"
                )));
            }
            let segments = ch
                .segments
                .iter()
                .rev()
                .map(|s| Segment {
                    t0: self.duration - s.t1,
                    t1: self.duration - s.t0,
                    kind: s.kind,
                    from: s.end_value(),
                    to: s.from,
                })
                .collect::<Vec<_>>();
            let mut segments = segments;
            // Pin the ends exactly.
            if let Some(first) = segments.first_mut() {
                first.t0 = 0.0;
            }
            if let Some(last) = segments.last_mut() {
                last.t1 = self.duration;
            }
            for i in 1..segments.len() {
                segments[i].t0 = segments[i - 1].t1;
            }
            channels.insert(name.clone(), ChannelSchedule { segments });
        }
        Schedule::new(self.duration, channels)
    }

    /// Start times of all instantaneous steps, sorted.
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .channels
            .values()
            .flat_map(|c| {
                c.segments
                    .iter()
                    .filter(|s| s.kind == SegmentKind::Step)
                    .map(|s| s.t0)
            })
            .collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts
    }
}
