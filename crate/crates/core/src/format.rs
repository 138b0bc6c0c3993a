//! Layout and schedule files.
//!
//! Both are JSON objects carrying a `format_version` ("1.x") and a `units`
//! table. Every length, current, field and time in the file is read in the
//! declared units and converted to SI; builder metadata is kept in SI and
//! tagged as such. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "format_version": "1.0",
//!   "units": {"length": "um", "current": "A", "field": "G"},
//!   "conductors": [
//!     {"name": "I0", "path": [[-10000, 0, 0], [10000, 0, 0]], "current": 2.0}
//!   ],
//!   "bias": {"x": 0, "y": 160, "z": 0},
//!   "channels": {"guide": [{"conductor": "I0"}, {"bias": "y"}]},
//!   "gravity": false
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{
    Axis, Binding, Conductor, CrossSection, FilamentModel, InfiniteWire, Layout, LayoutMetadata, ValidationError,
    Vec3,
};
use crate::schedule::{ChannelSchedule, Schedule, ScheduleError, Segment, SegmentKind};
use crate::units::{CurrentUnit, FieldUnit, LengthUnit, TimeUnit};

pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_VERSION: &str = "1.0";
const METADATA_UNITS: &str = "SI";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormatError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unsupported format_version {0:?} (this reader handles {FORMAT_MAJOR}.x)")]
    Version(String),
    #[error("unit error: {0}")]
    Unit(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Syntax(e.to_string())
    }
}

impl From<ScheduleError> for FormatError {
    fn from(e: ScheduleError) -> Self {
        FormatError::Validation(ValidationError(e.to_string()))
    }
}

fn check_version(v: &str) -> Result<(), FormatError> {
    let major = v.split('.').next().and_then(|m| m.parse::<u32>().ok());
    match major {
        Some(FORMAT_MAJOR) => Ok(()),
        _ => Err(FormatError::Version(v.to_string())),
    }
}

fn unit<U>(tag: Option<&str>, what: &str, parse: fn(&str) -> Option<U>) -> Result<U, FormatError> {
    let tag = tag.ok_or_else(|| FormatError::Unit(format!("missing {what} unit")))?;
    parse(tag).ok_or_else(|| FormatError::Unit(format!("unknown {what} unit {tag:?}")))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    current: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrossSection {
    width: f64,
    height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawModel {
    Thin,
    Ribbon { n_w: usize, n_h: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConductor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    path: Vec<[f64; 3]>,
    current: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cross_section: Option<RawCrossSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<RawModel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    anchor: [f64; 3],
    direction: [f64; 3],
    current: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBias {
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
    #[serde(default)]
    z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawBinding {
    Conductor(String),
    InfiniteWire(String),
    Bias(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetadata {
    builder: String,
    units: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    format_version: String,
    #[serde(default)]
    units: Option<RawUnits>,
    #[serde(default)]
    conductors: Vec<RawConductor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    infinite_wires: Vec<RawWire>,
    #[serde(default)]
    bias: RawBias,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    channels: BTreeMap<String, Vec<RawBinding>>,
    #[serde(default)]
    gravity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<RawMetadata>,
}

/// Parses a layout file into a validated SI [`Layout`].
pub fn parse_layout(text: &str) -> Result<Layout, FormatError> {
    let raw: RawLayout = serde_json::from_str(text)?;
    check_version(&raw.format_version)?;
    let units = raw
        .units
        .ok_or_else(|| FormatError::Unit("missing units table".into()))?;
    let lu = unit(units.length.as_deref(), "length", LengthUnit::parse)?;
    let cu = unit(units.current.as_deref(), "current", CurrentUnit::parse)?;
    let fu = unit(units.field.as_deref(), "field", FieldUnit::parse)?;
    if units.time.is_some() {
        return Err(FormatError::Unit("layout files take no time unit".into()));
    }
    let point = |p: [f64; 3]| Vec3::new(lu.to_si(p[0]), lu.to_si(p[1]), lu.to_si(p[2]));

    let mut b = Layout::builder();
    for c in raw.conductors {
        let model = match c.model {
            None | Some(RawModel::Thin) => FilamentModel::Thin,
            Some(RawModel::Ribbon { n_w, n_h }) => FilamentModel::Ribbon { n_w, n_h },
        };
        b = b.conductor(Conductor {
            name: c.name,
            path: c.path.into_iter().map(point).collect(),
            current: cu.to_si(c.current),
            cross_section: c.cross_section.map(|s| CrossSection {
                width: lu.to_si(s.width),
                height: lu.to_si(s.height),
            }),
            model,
        });
    }
    for w in raw.infinite_wires {
        // Directions are unit vectors and carry no length unit.
        b = b.infinite_wire(InfiniteWire {
            name: w.name,
            anchor: point(w.anchor),
            direction: Vec3::from(w.direction),
            current: cu.to_si(w.current),
        });
    }
    b = b.bias(Vec3::new(fu.to_si(raw.bias.x), fu.to_si(raw.bias.y), fu.to_si(raw.bias.z)));
    for (name, bindings) in raw.channels {
        let bindings = bindings
            .into_iter()
            .map(|r| match r {
                RawBinding::Conductor(n) => Ok(Binding::Conductor(n)),
                RawBinding::InfiniteWire(n) => Ok(Binding::InfiniteWire(n)),
                RawBinding::Bias(a) => Axis::parse(&a)
                    .map(Binding::Bias)
                    .ok_or_else(|| ValidationError(format!("channel {name}: bias axis {a:?} is not x, y or z"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        b = b.channel(name, bindings);
    }
    b = b.gravity(raw.gravity);
    if let Some(m) = raw.metadata {
        if m.units != METADATA_UNITS {
            return Err(FormatError::Unit(format!(
                "metadata parameters must be tagged {METADATA_UNITS:?}, got {:?}",
                m.units
            )));
        }
        b = b.metadata_raw(Some(LayoutMetadata {
            builder: m.builder,
            params: m.params,
        }));
    }
    Ok(b.build()?)
}

/// Writes a layout in µm, A and G.
pub fn serialize_layout(layout: &Layout) -> String {
    let lu = LengthUnit::Micrometer;
    let cu = CurrentUnit::Ampere;
    let fu = FieldUnit::Gauss;
    let point = |p: &Vec3| [lu.from_si(p.x), lu.from_si(p.y), lu.from_si(p.z)];
    let raw = RawLayout {
        format_version: FORMAT_VERSION.into(),
        units: Some(RawUnits {
            length: Some(lu.tag().into()),
            current: Some(cu.tag().into()),
            field: Some(fu.tag().into()),
            time: None,
        }),
        conductors: layout
            .conductors()
            .iter()
            .map(|c| RawConductor {
                name: c.name.clone(),
                path: c.path.iter().map(point).collect(),
                current: cu.from_si(c.current),
                cross_section: c.cross_section.map(|s| RawCrossSection {
                    width: lu.from_si(s.width),
                    height: lu.from_si(s.height),
                }),
                model: match c.model {
                    FilamentModel::Thin => None,
                    FilamentModel::Ribbon { n_w, n_h } => Some(RawModel::Ribbon { n_w, n_h }),
                },
            })
            .collect(),
        infinite_wires: layout
            .infinite_wires()
            .iter()
            .map(|w| RawWire {
                name: w.name.clone(),
                anchor: point(&w.anchor),
                direction: [w.direction.x, w.direction.y, w.direction.z],
                current: cu.from_si(w.current),
            })
            .collect(),
        bias: {
            let b = layout.bias();
            RawBias {
                x: fu.from_si(b.x),
                y: fu.from_si(b.y),
                z: fu.from_si(b.z),
            }
        },
        channels: layout
            .channels()
            .iter()
            .map(|ch| {
                let bindings = ch
                    .bindings
                    .iter()
                    .map(|b| match b {
                        Binding::Conductor(n) => RawBinding::Conductor(n.clone()),
                        Binding::InfiniteWire(n) => RawBinding::InfiniteWire(n.clone()),
                        Binding::Bias(a) => RawBinding::Bias(a.tag().into()),
                    })
                    .collect();
                (ch.name.clone(), bindings)
            })
            .collect(),
        gravity: layout.include_gravity(),
        metadata: layout.metadata().map(|m| RawMetadata {
            builder: m.builder.clone(),
            units: METADATA_UNITS.into(),
            params: m.params.clone(),
        }),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("layout serialises");
    s.push('\n');
    s
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    t0: f64,
    t1: f64,
    kind: String,
    from: f64,
    to: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    format_version: String,
    #[serde(default)]
    units: Option<RawUnits>,
    duration: f64,
    channels: BTreeMap<String, Vec<RawSegment>>,
}

/// Parses a schedule file; times are converted to seconds.
pub fn parse_schedule(text: &str) -> Result<Schedule, FormatError> {
    let raw: RawSchedule = serde_json::from_str(text)?;
    check_version(&raw.format_version)?;
    let units = raw
        .units
        .ok_or_else(|| FormatError::Unit("missing units table".into()))?;
    let tu = unit(units.time.as_deref(), "time", TimeUnit::parse)?;
    if units.length.is_some() || units.current.is_some() || units.field.is_some() {
        return Err(FormatError::Unit("schedule files take only a time unit".into()));
    }
    let mut channels = BTreeMap::new();
    for (name, segs) in raw.channels {
        let segments = segs
            .into_iter()
            .map(|s| {
                let kind = SegmentKind::parse(&s.kind).ok_or_else(|| {
                    ValidationError(format!("channel {name}: unknown segment kind {:?}", s.kind))
                })?;
                Ok(Segment {
                    t0: tu.to_si(s.t0),
                    t1: tu.to_si(s.t1),
                    kind,
                    from: s.from,
                    to: s.to,
                })
            })
            .collect::<Result<Vec<_>, ValidationError>>()?;
        channels.insert(name, ChannelSchedule::new(segments));
    }
    Ok(Schedule::new(tu.to_si(raw.duration), channels)?)
}

/// Writes a schedule with times in ms.
pub fn serialize_schedule(schedule: &Schedule) -> String {
    let tu = TimeUnit::Millisecond;
    let raw = RawSchedule {
        format_version: FORMAT_VERSION.into(),
        units: Some(RawUnits {
            length: None,
            current: None,
            field: None,
            time: Some(tu.tag().into()),
        }),
        duration: tu.from_si(schedule.duration()),
        channels: schedule
            .channels()
            .iter()
            .map(|(name, ch)| {
                let segs = ch
                    .segments()
                    .iter()
                    .map(|s| RawSegment {
                        t0: tu.from_si(s.t0),
                        t1: tu.from_si(s.t1),
                        kind: s.kind.tag().into(),
                        from: s.from,
                        to: s.to,
                    })
                    .collect();
                (name.clone(), segs)
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("schedule serialises");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_total;

    const MINIMAL: &str = r#"{
        "format_version": "1.0",
        "units": {"length": "mm", "current": "A", "field": "G"},
        "conductors": [{"path": [[-10, 0, 0], [10, 0, 0]], "current": 2}],
        "bias": {"y": 160}
    }"#;

    #[test]
    fn minimal_file() {
        let l = parse_layout(MINIMAL).unwrap();
        assert_eq!(l.conductors().len(), 1);
        assert!((l.bias().norm() - 0.016).abs() < 1e-15);
        assert_eq!(l.conductors()[0].path[1].x, 0.01);
    }

    #[test]
    fn bias_only_file() {
        let l = parse_layout(r#"{"format_version": "1.2", "units": {"length": "um", "current": "A", "field": "G"},
            "bias": {"z": 1}}"#)
        .unwrap();
        let b = field_total(&l, Vec3::new(1.0, -2.0, 3.0), &l.unit_multipliers()).unwrap();
        assert_eq!(b, Vec3::new(0.0, 0.0, 1e-4));
    }

    #[test]
    fn error_classes() {
        let dangling = r#"{"format_version": "1.0", "units": {"length": "um", "current": "A", "field": "G"},
            "conductors": [{"name": "Z", "path": [[0,0,0],[1,0,0]], "current": 1}],
            "channels": {"M1": [{"conductor": "M1"}]}}"#;
        assert!(matches!(parse_layout(dangling), Err(FormatError::Validation(_))));
        assert!(matches!(parse_layout("{ not json"), Err(FormatError::Syntax(_))));
        let unknown_key = MINIMAL.replace("\"bias\"", "\"bais\"");
        assert!(matches!(parse_layout(&unknown_key), Err(FormatError::Syntax(_))));
        let bad_unit = MINIMAL.replace("\"mm\"", "\"furlong\"");
        assert!(matches!(parse_layout(&bad_unit), Err(FormatError::Unit(_))));
        let no_units = r#"{"format_version": "1.0", "bias": {"z": 1}}"#;
        assert!(matches!(parse_layout(no_units), Err(FormatError::Unit(_))));
        let v2 = MINIMAL.replace("\"1.0\"", "\"2.0\"");
        assert!(matches!(parse_layout(&v2), Err(FormatError::Version(_))));
        let ribbon = r#"{"format_version": "1.0", "units": {"length": "um", "current": "A", "field": "G"},
            "conductors": [{"path": [[0,0,0],[1,0,0]], "current": 1, "model": {"kind": "ribbon", "n_w": 3, "n_h": 2}}]}"#;
        assert!(matches!(parse_layout(ribbon), Err(FormatError::Validation(_))));
    }

    #[test]
    fn schedule_round_trip() {
        let text = r#"{"format_version": "1.0", "units": {"time": "ms"}, "duration": 10,
            "channels": {"M1": [{"t0": 0, "t1": 4, "kind": "cos2", "from": 1, "to": 0},
                                {"t0": 4, "t1": 4, "kind": "step", "from": 0, "to": 0.5},
                                {"t0": 4, "t1": 10, "kind": "constant", "from": 0.5, "to": 0.5}]}}"#;
        let s = parse_schedule(text).unwrap();
        assert_eq!(s.duration(), 0.01);
        assert_eq!(s.value("M1", 0.004).unwrap(), Some(0.5));
        let again = parse_schedule(&serialize_schedule(&s)).unwrap();
        assert_eq!(again, s);
        assert!(matches!(
            parse_schedule(&text.replace("\"ms\"", "\"fortnight\"")),
            Err(FormatError::Unit(_))
        ));
    }
}
