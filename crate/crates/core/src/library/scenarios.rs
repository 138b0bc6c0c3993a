//! Conveyor-belt and collider layouts and their schedules.
//!
//! The conductor pattern approximates the transport chip: a Z-shaped guide
//! wire, two meander wires M1 and M2 whose ŷ crossings modulate the axial
//! field, and two single crossing wires H1 and H2 that can hold a well in
//! place. Exact dimensions of the real chip are not known; the defaults are
//! plausible values, not a reproduction.

use std::collections::BTreeMap;

use super::{guide_height, invalid, LibraryError, ZGeometry};
use crate::layout::{Binding, Conductor, Layout, Vec3};
use crate::schedule::{ChannelScheduleBuilder, Schedule};
use crate::units::gauss_to_tesla;

pub const CONVEYOR: &str = "conveyor";

pub const CH_GUIDE: &str = "I0";
pub const CH_M1: &str = "M1";
pub const CH_M2: &str = "M2";
pub const CH_H1: &str = "H1";
pub const CH_H2: &str = "H2";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConveyorParams {
    /// Guide current, A.
    pub i0: f64,
    /// T
    pub b0y: f64,
    /// Axial bias; must be positive so that −ŷ crossings attract, T.
    pub b0x: f64,
    pub z: ZGeometry,
    /// Distance between neighbouring crossings of one meander, m. The
    /// pattern repeats after `2·period`. With the crossings much further
    /// apart than the guide height the wells hop between crossings rather
    /// than slide.
    pub period: f64,
    /// M1 crossings sit at `k·period` for |k| ≤ `cells`.
    pub cells: usize,
    pub meander_current: f64,
    /// Half-length of each meander crossing along ŷ, m.
    pub meander_half_width: f64,
    /// Current of H1/H2 at multiplier 1, flowing along −ŷ (attracting), A.
    pub hold_current: f64,
    /// H1 sits at −`hold_position`, H2 at +`hold_position`, m.
    pub hold_position: f64,
}

impl Default for ConveyorParams {
    fn default() -> Self {
        ConveyorParams {
            i0: 1.0,
            b0y: gauss_to_tesla(16.0),
            b0x: gauss_to_tesla(10.0),
            z: ZGeometry::default(),
            period: 200e-6,
            cells: 14,
            meander_current: 0.3,
            meander_half_width: 1e-3,
            hold_current: 0.3,
            hold_position: 3.2e-3,
        }
    }
}

impl ConveyorParams {
    pub fn z0(&self) -> f64 {
        guide_height(self.i0, self.b0y)
    }

    /// Distance one well travels per full M1/M2 cycle.
    pub fn lattice_period(&self) -> f64 {
        2.0 * self.period
    }

    pub fn m1_crossings(&self) -> Vec<f64> {
        let n = self.cells as i64;
        (-n..=n).map(|k| k as f64 * self.period).collect()
    }

    pub fn m2_crossings(&self) -> Vec<f64> {
        // Shifted by half a crossing distance, one extra on the left so the
        // pattern is symmetric about x = 0.
        let n = self.cells as i64;
        (-n - 1..=n).map(|k| (k as f64 + 0.5) * self.period).collect()
    }

    /// Positions of the wells with only M1 on at multiplier +1.
    pub fn m1_wells(&self) -> Vec<f64> {
        self.m1_crossings()
            .into_iter()
            .enumerate()
            .filter(|(i, _)| (i + self.cells) % 2 == 0)
            .map(|(_, x)| x)
            .collect()
    }

    fn validate(&self) -> Result<(), LibraryError> {
        let finite = [
            self.i0,
            self.b0y,
            self.b0x,
            self.period,
            self.meander_current,
            self.meander_half_width,
            self.hold_current,
            self.hold_position,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return invalid("conveyor parameters must be finite");
        }
        if !(self.i0 > 0.0 && self.b0y > 0.0 && self.b0x > 0.0) {
            return invalid("conveyor needs positive guide current, B0y and B0x");
        }
        if !(self.period > 0.0 && self.meander_half_width > 0.0) {
            return invalid("meander period and width must be positive");
        }
        let half = 0.5 * self.z.central_length;
        let extent = (self.cells as f64 + 0.5) * self.period;
        if extent >= half || self.hold_position.abs() >= half {
            return invalid(format!(
                "meanders ({extent:e} m) and hold wires must lie inside the central guide section (±{half:e} m)"
            ));
        }
        Ok(())
    }
}

/// Meander whose ŷ crossings at `xs` carry the current along −ŷ at every
/// second crossing starting from the one with `attract_first`.
fn meander(name: &str, xs: &[f64], half_width: f64, current: f64, attract_first: bool) -> Conductor {
    let mut path = Vec::with_capacity(2 * xs.len());
    let mut up = !attract_first;
    for &x in xs {
        let (a, b) = if up { (-half_width, half_width) } else { (half_width, -half_width) };
        path.push(Vec3::new(x, a, 0.0));
        path.push(Vec3::new(x, b, 0.0));
        up = !up;
    }
    Conductor::polyline(name, path, current)
}

/// Conveyor-belt layout. Channels: `I0` (guide), `M1`, `M2`, `H1`, `H2`;
/// the bias is static.
pub fn make_conveyor(p: &ConveyorParams) -> Result<Layout, LibraryError> {
    p.validate()?;
    let h = 0.5 * p.z.central_length;
    let l = p.z.end_length;
    let guide = Conductor::polyline(
        CH_GUIDE,
        vec![
            Vec3::new(-h, -l, 0.0),
            Vec3::new(-h, 0.0, 0.0),
            Vec3::new(h, 0.0, 0.0),
            Vec3::new(h, l, 0.0),
        ],
        p.i0,
    );
    // Crossing k = 0 of each meander attracts at multiplier +1.
    let m1 = p.m1_crossings();
    let m2 = p.m2_crossings();
    let m1 = meander(CH_M1, &m1, p.meander_half_width, p.meander_current, p.cells % 2 == 0);
    let m2 = meander(CH_M2, &m2, p.meander_half_width, p.meander_current, (p.cells + 1) % 2 == 0);
    let w = p.meander_half_width;
    let hold = |name: &str, x: f64| {
        Conductor::straight(name, Vec3::new(x, w, 0.0), Vec3::new(x, -w, 0.0), p.hold_current)
    };
    let mut b = Layout::builder()
        .conductor(guide)
        .conductor(m1)
        .conductor(m2)
        .conductor(hold(CH_H1, -p.hold_position))
        .conductor(hold(CH_H2, p.hold_position))
        .bias(Vec3::new(p.b0x, p.b0y, 0.0));
    for ch in [CH_GUIDE, CH_M1, CH_M2, CH_H1, CH_H2] {
        b = b.channel(ch, vec![Binding::Conductor(ch.into())]);
    }
    Ok(b
        .metadata(
            CONVEYOR,
            &[
                ("I0", p.i0),
                ("B0x", p.b0x),
                ("B0y", p.b0y),
                ("z0", p.z0()),
                ("period", p.period),
                ("cells", p.cells as f64),
                ("meander_current", p.meander_current),
                ("hold_current", p.hold_current),
                ("hold_position", p.hold_position),
            ],
        )
        .build()?)
}

/// M1/M2 channels under construction.
struct Drive {
    m1: ChannelScheduleBuilder,
    m2: ChannelScheduleBuilder,
}

impl Drive {
    fn new() -> Self {
        Drive {
            m1: ChannelScheduleBuilder::starting_at(1.0),
            m2: ChannelScheduleBuilder::starting_at(0.0),
        }
    }

    fn hold(mut self, dt: f64) -> Self {
        self.m1 = self.m1.hold(dt);
        self.m2 = self.m2.hold(dt);
        self
    }

    /// `cycles` transport cycles of four cos² ramps each; positive cycles
    /// move the wells towards +x.
    fn run(mut self, cycles: i64, quarter: f64) -> Self {
        // (M1, M2) visits (1,0) → (0,1) → (−1,0) → (0,−1) → (1,0) forwards.
        let fwd = [(0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)];
        let bwd = [(0.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
        let steps = if cycles >= 0 { fwd } else { bwd };
        for _ in 0..cycles.unsigned_abs() {
            for (a, b) in steps {
                self.m1 = self.m1.cos2(quarter, a);
                self.m2 = self.m2.cos2(quarter, b);
            }
        }
        self
    }
}

fn check_timing(quarter: f64) -> Result<(), LibraryError> {
    if !(quarter > 0.0 && quarter.is_finite()) {
        return invalid("ramp time must be positive");
    }
    Ok(())
}

/// Conveyor schedule: `cycles` full M1/M2 cycles (negative runs backwards).
pub fn make_conveyor_schedule(quarter: f64, cycles: i64) -> Result<Schedule, LibraryError> {
    check_timing(quarter)?;
    if cycles == 0 {
        return invalid("conveyor schedule needs at least one cycle");
    }
    let d = Drive::new().run(cycles, quarter);
    let duration = d.m1.time();
    let mut channels = BTreeMap::new();
    channels.insert(CH_M1.to_string(), d.m1.build());
    channels.insert(CH_M2.to_string(), d.m2.build());
    channels.insert(CH_H1.to_string(), ChannelScheduleBuilder::starting_at(0.0).hold(duration).build());
    channels.insert(CH_H2.to_string(), ChannelScheduleBuilder::starting_at(0.0).hold(duration).build());
    Schedule::new(duration, channels).map_err(|e| LibraryError::InvalidParams(e.to_string()))
}

/// Timing of the collider preparation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColliderTiming {
    /// Initial hold after loading (RF cleaning), s.
    pub load_hold: f64,
    /// Length of one cos² ramp, s.
    pub quarter: f64,
    /// Transport cycles that carry the right cloud to H2.
    pub cycles: i64,
    /// Final hold before release (RF cleaning), s.
    pub final_hold: f64,
    /// Time simulated after the release, s.
    pub after_release: f64,
}

impl Default for ColliderTiming {
    fn default() -> Self {
        ColliderTiming {
            load_hold: 300e-3,
            quarter: 5e-3,
            cycles: 1,
            final_hold: 100e-3,
            after_release: 100e-3,
        }
    }
}

/// Preparation and release: hold, transport right, raise H2 to hold the
/// right cloud, transport back, raise H1, hold, then switch off every wire
/// except the guide in one step. Returns the schedule and the release time.
pub fn make_collider_schedule(t: &ColliderTiming) -> Result<(Schedule, f64), LibraryError> {
    check_timing(t.quarter)?;
    let holds = [t.load_hold, t.final_hold, t.after_release];
    if holds.iter().any(|h| !(*h > 0.0 && h.is_finite())) || t.cycles < 1 {
        return invalid("collider holds must be positive and at least one transport cycle is needed");
    }
    let d = Drive::new()
        .hold(t.load_hold)
        .run(t.cycles, t.quarter)
        .hold(t.quarter)
        .run(-t.cycles, t.quarter)
        .hold(t.quarter + t.final_hold);
    let release = d.m1.time();
    let transport = 4.0 * t.cycles as f64 * t.quarter;
    let m1 = d.m1.step(0.0, t.after_release).build();
    let m2 = d.m2.step(0.0, t.after_release).build();
    // Once back, the left cloud is pinned by H1 as the right one is by H2,
    // so both sit in mirror-image wells at the release.
    let h1 = ChannelScheduleBuilder::starting_at(0.0)
        .hold(t.load_hold + 2.0 * transport + t.quarter)
        .cos2(t.quarter, 1.0)
        .hold(t.final_hold)
        .step(0.0, t.after_release)
        .build();
    let h2 = ChannelScheduleBuilder::starting_at(0.0)
        .hold(t.load_hold + transport)
        .cos2(t.quarter, 1.0)
        .hold(transport + t.quarter + t.final_hold)
        .step(0.0, t.after_release)
        .build();
    let mut channels = BTreeMap::new();
    channels.insert(CH_M1.to_string(), m1);
    channels.insert(CH_M2.to_string(), m2);
    channels.insert(CH_H1.to_string(), h1);
    channels.insert(CH_H2.to_string(), h2);
    let duration = release + t.after_release;
    let s = Schedule::new(duration, channels).map_err(|e| LibraryError::InvalidParams(e.to_string()))?;
    Ok((s, release))
}

/// Layout after the release: the guide and bias only.
pub fn released(layout: &Layout) -> Result<Layout, LibraryError> {
    let guide = layout
        .conductor_by_name(CH_GUIDE)
        .ok_or_else(|| LibraryError::InvalidParams("layout has no guide conductor I0".into()))?;
    Ok(Layout::builder()
        .conductor(guide.clone())
        .bias(layout.bias())
        .gravity(layout.include_gravity())
        .build()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meanders_alternate_and_attract_at_origin() {
        let p = ConveyorParams::default();
        let l = make_conveyor(&p).unwrap();
        let m1 = l.conductor_by_name(CH_M1).unwrap();
        // Crossing k = 0 is the (cells)th ŷ segment; it must run along −ŷ.
        let seg = &m1.path[2 * p.cells..2 * p.cells + 2];
        assert_eq!(seg[0].x, 0.0);
        assert!(seg[1].y < seg[0].y);
        let m2 = l.conductor_by_name(CH_M2).unwrap();
        let k0 = p.m2_crossings().iter().position(|&x| (x - 0.5 * p.period).abs() < 1e-12).unwrap();
        assert!(m2.path[2 * k0 + 1].y < m2.path[2 * k0].y);
        assert!(p.m1_wells().contains(&0.0));
    }

    #[test]
    fn conveyor_schedule_is_periodic() {
        let s = make_conveyor_schedule(5e-3, 2).unwrap();
        assert!((s.duration() - 40e-3).abs() < 1e-15);
        for ch in [CH_M1, CH_M2] {
            assert_eq!(s.value(ch, 0.0).unwrap(), s.value(ch, s.duration()).unwrap());
        }
        assert_eq!(s.value(CH_M1, 10e-3).unwrap(), Some(-1.0));
        assert!(make_conveyor_schedule(0.0, 1).is_err());
    }

    #[test]
    fn collider_release_switches_wires_off() {
        let (s, release) = make_collider_schedule(&ColliderTiming::default()).unwrap();
        let before = release - 1e-9;
        assert_eq!(s.value(CH_H2, before).unwrap(), Some(1.0));
        assert_eq!(s.value(CH_H1, before).unwrap(), Some(1.0));
        assert_eq!(s.value(CH_M1, before).unwrap(), Some(1.0));
        for ch in [CH_M1, CH_M2, CH_H1, CH_H2] {
            assert_eq!(s.value(ch, release).unwrap(), Some(0.0));
        }
        assert_eq!(s.step_times().len(), 4);
    }

    #[test]
    fn rejects_pattern_outside_guide() {
        let p = ConveyorParams {
            cells: 20,
            ..ConveyorParams::default()
        };
        assert!(make_conveyor(&p).is_err());
    }
}
