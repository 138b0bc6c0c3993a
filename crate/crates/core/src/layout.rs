//! Conductor layouts: the immutable scene of wires, bias field and channel
//! bindings that every field evaluation runs against.

use std::collections::BTreeMap;

use nalgebra::{Rotation3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Minimum separation of consecutive path points, m.
pub const MIN_POINT_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("validation failed: {0}")]
pub struct ValidationError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ValidationError> {
    Err(ValidationError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.index()] = 1.0;
        v
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        match i {
            0 => Some(Axis::X),
            1 => Some(Axis::Y),
            2 => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Rectangular conductor cross-section, m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilamentModel {
    /// One filament along the path spine.
    Thin,
    /// `n_w × n_h` parallel filaments, each centred in its sub-rectangle.
    Ribbon { n_w: usize, n_h: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conductor {
    pub name: Option<String>,
    pub path: Vec<Vec3>,
    /// Signed current along the path direction, A.
    pub current: f64,
    pub cross_section: Option<CrossSection>,
    pub model: FilamentModel,
}

impl Conductor {
    pub fn polyline(name: impl Into<String>, path: Vec<Vec3>, current: f64) -> Self {
        Conductor {
            name: Some(name.into()),
            path,
            current,
            cross_section: None,
            model: FilamentModel::Thin,
        }
    }

    pub fn straight(name: impl Into<String>, from: Vec3, to: Vec3, current: f64) -> Self {
        Self::polyline(name, vec![from, to], current)
    }

    pub fn with_cross_section(mut self, width: f64, height: f64) -> Self {
        self.cross_section = Some(CrossSection { width, height });
        self
    }

    pub fn with_model(mut self, model: FilamentModel) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let label = self.name.as_deref().unwrap_or("<unnamed>");
        if self.path.len() < 2 {
            return invalid(format!("conductor {label}: path needs at least 2 points"));
        }
        if !self.current.is_finite() {
            return invalid(format!("conductor {label}: current is not finite"));
        }
        for (i, w) in self.path.windows(2).enumerate() {
            if w.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return invalid(format!("conductor {label}: non-finite path point"));
            }
            if (w[1] - w[0]).norm() <= MIN_POINT_SEPARATION {
                return invalid(format!(
                    "conductor {label}: points {i} and {} coincide",
                    i + 1
                ));
            }
        }
        if let Some(cs) = self.cross_section {
            if !(cs.width > 0.0 && cs.height > 0.0) {
                return invalid(format!("conductor {label}: cross-section must be positive"));
            }
        }
        if let FilamentModel::Ribbon { n_w, n_h } = self.model {
            if self.cross_section.is_none() {
                return invalid(format!("conductor {label}: ribbon model requires a cross-section"));
            }
            if n_w == 0 || n_h == 0 {
                return invalid(format!("conductor {label}: ribbon subdivisions must be >= 1"));
            }
        }
        Ok(())
    }

    /// Filament polylines with their share of the conductor current.
    fn filaments(&self) -> Vec<(f64, Vec<Vec3>)> {
        match (self.model, self.cross_section) {
            (FilamentModel::Thin, None) => vec![(1.0, self.path.clone())],
            (FilamentModel::Thin, Some(cs)) => {
                vec![(1.0, offset_path(&self.path, 0.0, 0.5 * cs.height))]
            }
            (FilamentModel::Ribbon { n_w, n_h }, Some(cs)) => {
                let share = 1.0 / (n_w * n_h) as f64;
                let mut out = Vec::with_capacity(n_w * n_h);
                for iw in 0..n_w {
                    let lateral = ((iw as f64 + 0.5) / n_w as f64 - 0.5) * cs.width;
                    for ih in 0..n_h {
                        let vertical = (ih as f64 + 0.5) / n_h as f64 * cs.height;
                        out.push((share, offset_path(&self.path, lateral, vertical)));
                    }
                }
                out
            }
            (FilamentModel::Ribbon { .. }, None) => unreachable!("validated"),
        }
    }
}

/// In-plane unit normal (ẑ × t̂) of a segment direction.
fn lateral_normal(t: Vec3) -> Vec3 {
    let n = Vec3::z().cross(&t);
    if n.norm() < 1e-12 {
        Vec3::x()
    } else {
        n.normalize()
    }
}

/// Offsets a polyline sideways (mitred at the corners) and vertically.
fn offset_path(path: &[Vec3], lateral: f64, vertical: f64) -> Vec<Vec3> {
    let normals: Vec<Vec3> = path
        .windows(2)
        .map(|w| lateral_normal((w[1] - w[0]).normalize()))
        .collect();
    let up = Vec3::new(0.0, 0.0, vertical);
    (0..path.len())
        .map(|k| {
            let shift = if lateral == 0.0 {
                Vec3::zeros()
            } else if k == 0 {
                normals[0] * lateral
            } else if k == path.len() - 1 {
                normals[k - 1] * lateral
            } else {
                let (n0, n1) = (normals[k - 1], normals[k]);
                let m = n0 + n1;
                if m.norm() < 1e-9 {
                    n0 * lateral
                } else {
                    let m = m.normalize();
                    m * (lateral / m.dot(&n0))
                }
            };
            path[k] + shift + up
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteWire {
    pub name: Option<String>,
    pub anchor: Vec3,
    /// Unit direction of positive current.
    pub direction: Vec3,
    pub current: f64,
}

impl InfiniteWire {
    /// Builds a wire, normalising `direction`.
    pub fn new(name: impl Into<String>, anchor: Vec3, direction: Vec3, current: f64) -> Self {
        InfiniteWire {
            name: Some(name.into()),
            anchor,
            direction: direction.normalize(),
            current,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let label = self.name.as_deref().unwrap_or("<unnamed>");
        if (self.direction.norm() - 1.0).abs() > 1e-12 {
            return invalid(format!("infinite wire {label}: direction must be a unit vector"));
        }
        if !self.current.is_finite() || !self.anchor.iter().all(|c| c.is_finite()) {
            return invalid(format!("infinite wire {label}: non-finite parameters"));
        }
        Ok(())
    }
}

/// Element of a layout that a channel multiplier can scale.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Binding {
    Conductor(String),
    InfiniteWire(String),
    Bias(Axis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub bindings: Vec<Binding>,
}

/// Builder provenance carried along with a layout (parameters in SI units).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayoutMetadata {
    pub builder: String,
    pub params: BTreeMap<String, f64>,
}

/// Reference to the element a filament belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementRef {
    Conductor(usize),
    InfiniteWire(usize),
}

/// One straight-segment filament chain carrying a fixed share of an element's current.
#[derive(Debug, Clone, PartialEq)]
pub struct Filament {
    pub element: ElementRef,
    pub fraction: f64,
    pub points: Vec<Vec3>,
}

/// Per-channel scalar multipliers, ordered like [`Layout::channels`].
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers(pub Vec<f64>);

impl Multipliers {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct Layout {
    conductors: Vec<Conductor>,
    infinite_wires: Vec<InfiniteWire>,
    bias: Vec3,
    channels: Vec<Channel>,
    include_gravity: bool,
    metadata: Option<LayoutMetadata>,
    conductor_channel: Vec<Option<usize>>,
    wire_channel: Vec<Option<usize>>,
    bias_channel: [Option<usize>; 3],
    filaments: Vec<Filament>,
}

impl PartialEq for Layout {
    fn eq(&self, other: &Self) -> bool {
        self.conductors == other.conductors
            && self.infinite_wires == other.infinite_wires
            && self.bias == other.bias
            && self.channels == other.channels
            && self.include_gravity == other.include_gravity
            && self.metadata == other.metadata
    }
}

#[derive(Debug, Clone, Default)]
pub struct LayoutBuilder {
    conductors: Vec<Conductor>,
    infinite_wires: Vec<InfiniteWire>,
    bias: Vec3,
    channels: Vec<Channel>,
    include_gravity: bool,
    metadata: Option<LayoutMetadata>,
}

impl LayoutBuilder {
    pub fn conductor(mut self, c: Conductor) -> Self {
        self.conductors.push(c);
        self
    }

    pub fn infinite_wire(mut self, w: InfiniteWire) -> Self {
        self.infinite_wires.push(w);
        self
    }

    pub fn bias(mut self, b: Vec3) -> Self {
        self.bias = b;
        self
    }

    pub fn channel(mut self, name: impl Into<String>, bindings: Vec<Binding>) -> Self {
        self.channels.push(Channel {
            name: name.into(),
            bindings,
        });
        self
    }

    pub fn gravity(mut self, on: bool) -> Self {
        self.include_gravity = on;
        self
    }

    pub fn metadata(mut self, builder: impl Into<String>, params: &[(&str, f64)]) -> Self {
        self.metadata = Some(LayoutMetadata {
            builder: builder.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
        self
    }

    pub fn metadata_raw(mut self, meta: Option<LayoutMetadata>) -> Self {
        self.metadata = meta;
        self
    }

    pub fn build(self) -> Result<Layout, ValidationError> {
        Layout::assemble(self)
    }
}

impl Layout {
    pub fn builder() -> LayoutBuilder {
        LayoutBuilder::default()
    }

    /// Layout with no conductors and a uniform field.
    pub fn bias_only(bias: Vec3) -> Layout {
        Layout::builder().bias(bias).build().expect("bias-only layout is valid")
    }

    fn assemble(b: LayoutBuilder) -> Result<Layout, ValidationError> {
        for c in &b.conductors {
            c.validate()?;
        }
        for w in &b.infinite_wires {
            w.validate()?;
        }
        if !b.bias.iter().all(|c| c.is_finite()) {
            return invalid("bias field is not finite");
        }
        let mut names = std::collections::HashSet::new();
        for c in b.conductors.iter().filter_map(|c| c.name.as_ref()) {
            if !names.insert(c.clone()) {
                return invalid(format!("duplicate element name {c}"));
            }
        }
        for w in b.infinite_wires.iter().filter_map(|w| w.name.as_ref()) {
            if !names.insert(w.clone()) {
                return invalid(format!("duplicate element name {w}"));
            }
        }

        let mut conductor_channel = vec![None; b.conductors.len()];
        let mut wire_channel = vec![None; b.infinite_wires.len()];
        let mut bias_channel = [None; 3];
        let mut channel_names = std::collections::HashSet::new();
        for (ci, ch) in b.channels.iter().enumerate() {
            if !channel_names.insert(ch.name.clone()) {
                return invalid(format!("duplicate channel name {}", ch.name));
            }
            for binding in &ch.bindings {
                let slot = match binding {
                    Binding::Conductor(n) => {
                        let i = b
                            .conductors
                            .iter()
                            .position(|c| c.name.as_deref() == Some(n.as_str()))
                            .ok_or_else(|| {
                                ValidationError(format!(
                                    "channel {} binds unknown conductor {n}",
                                    ch.name
                                ))
                            })?;
                        &mut conductor_channel[i]
                    }
                    Binding::InfiniteWire(n) => {
                        let i = b
                            .infinite_wires
                            .iter()
                            .position(|w| w.name.as_deref() == Some(n.as_str()))
                            .ok_or_else(|| {
                                ValidationError(format!(
                                    "channel {} binds unknown infinite wire {n}",
                                    ch.name
                                ))
                            })?;
                        &mut wire_channel[i]
                    }
                    Binding::Bias(axis) => &mut bias_channel[axis.index()],
                };
                if slot.is_some() {
                    return invalid(format!(
                        "element {binding:?} is bound to more than one channel"
                    ));
                }
                *slot = Some(ci);
            }
        }

        let mut filaments = Vec::new();
        for (i, c) in b.conductors.iter().enumerate() {
            for (fraction, points) in c.filaments() {
                filaments.push(Filament {
                    element: ElementRef::Conductor(i),
                    fraction,
                    points,
                });
            }
        }

        let layout = Layout {
            conductors: b.conductors,
            infinite_wires: b.infinite_wires,
            bias: b.bias,
            channels: b.channels,
            include_gravity: b.include_gravity,
            metadata: b.metadata,
            conductor_channel,
            wire_channel,
            bias_channel,
            filaments,
        };
        crate::library::validate_metadata(&layout)?;
        Ok(layout)
    }

    /// Builder pre-populated with this layout's contents.
    pub fn to_builder(&self) -> LayoutBuilder {
        LayoutBuilder {
            conductors: self.conductors.clone(),
            infinite_wires: self.infinite_wires.clone(),
            bias: self.bias,
            channels: self.channels.clone(),
            include_gravity: self.include_gravity,
            metadata: self.metadata.clone(),
        }
    }

    pub fn conductors(&self) -> &[Conductor] {
        &self.conductors
    }

    pub fn infinite_wires(&self) -> &[InfiniteWire] {
        &self.infinite_wires
    }

    pub fn bias(&self) -> Vec3 {
        self.bias
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn include_gravity(&self) -> bool {
        self.include_gravity
    }

    pub fn metadata(&self) -> Option<&LayoutMetadata> {
        self.metadata.as_ref()
    }

    pub fn metadata_param(&self, key: &str) -> Option<f64> {
        self.metadata.as_ref().and_then(|m| m.params.get(key).copied())
    }

    pub fn filaments(&self) -> &[Filament] {
        &self.filaments
    }

    pub fn conductor_by_name(&self, name: &str) -> Option<&Conductor> {
        self.conductors
            .iter()
            .find(|c| c.name.as_deref() == Some(name))
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// All multipliers equal to one: the static layout.
    pub fn unit_multipliers(&self) -> Multipliers {
        Multipliers(vec![1.0; self.channels.len()])
    }

    /// Multipliers from `(channel, value)` pairs; unspecified channels stay at one.
    pub fn multipliers(&self, values: &[(&str, f64)]) -> Result<Multipliers, ValidationError> {
        let mut m = self.unit_multipliers();
        for (name, v) in values {
            let i = self
                .channel_index(name)
                .ok_or_else(|| ValidationError(format!("unknown channel {name}")))?;
            m.0[i] = *v;
        }
        Ok(m)
    }

    pub fn check_multipliers(&self, m: &Multipliers) -> Result<(), ValidationError> {
        if m.0.len() != self.channels.len() {
            return invalid(format!(
                "expected {} channel multipliers, got {}",
                self.channels.len(),
                m.0.len()
            ));
        }
        Ok(())
    }

    fn scale(slot: Option<usize>, m: &Multipliers) -> f64 {
        slot.map_or(1.0, |i| m.0[i])
    }

    /// Current carried by a filament under the given multipliers, A.
    pub fn filament_current(&self, f: &Filament, m: &Multipliers) -> f64 {
        match f.element {
            ElementRef::Conductor(i) => {
                self.conductors[i].current * f.fraction * Self::scale(self.conductor_channel[i], m)
            }
            ElementRef::InfiniteWire(i) => {
                self.infinite_wires[i].current * f.fraction * Self::scale(self.wire_channel[i], m)
            }
        }
    }

    pub fn conductor_current(&self, i: usize, m: &Multipliers) -> f64 {
        self.conductors[i].current * Self::scale(self.conductor_channel[i], m)
    }

    pub fn wire_current(&self, i: usize, m: &Multipliers) -> f64 {
        self.infinite_wires[i].current * Self::scale(self.wire_channel[i], m)
    }

    pub fn effective_bias(&self, m: &Multipliers) -> Vec3 {
        Vec3::new(
            self.bias.x * Self::scale(self.bias_channel[0], m),
            self.bias.y * Self::scale(self.bias_channel[1], m),
            self.bias.z * Self::scale(self.bias_channel[2], m),
        )
    }

    pub fn element_label(&self, e: ElementRef) -> String {
        match e {
            ElementRef::Conductor(i) => self.conductors[i]
                .name
                .clone()
                .unwrap_or_else(|| format!("conductor #{i}")),
            ElementRef::InfiniteWire(i) => self.infinite_wires[i]
                .name
                .clone()
                .unwrap_or_else(|| format!("infinite wire #{i}")),
        }
    }

    /// Superposition of two layouts. Element and channel names must not clash.
    pub fn merged(&self, other: &Layout) -> Result<Layout, ValidationError> {
        let mut b = self.to_builder();
        b.conductors.extend(other.conductors.iter().cloned());
        b.infinite_wires.extend(other.infinite_wires.iter().cloned());
        b.bias += other.bias;
        b.channels.extend(other.channels.iter().cloned());
        b.include_gravity |= other.include_gravity;
        b.metadata = None;
        b.build()
    }

    /// All currents and the bias multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Layout {
        let mut b = self.to_builder();
        for c in &mut b.conductors {
            c.current *= s;
        }
        for w in &mut b.infinite_wires {
            w.current *= s;
        }
        b.bias *= s;
        b.metadata = None;
        b.build().expect("scaling preserves validity")
    }

    /// Rigid motion `p -> R p + t` applied to every element. The bias (an
    /// axial vector under proper rotations) is rotated along.
    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: Vec3) -> Layout {
        let mut b = self.to_builder();
        for c in &mut b.conductors {
            for p in &mut c.path {
                *p = rotation * *p + translation;
            }
        }
        for w in &mut b.infinite_wires {
            w.anchor = rotation * w.anchor + translation;
            w.direction = rotation * w.direction;
        }
        b.bias = rotation * b.bias;
        b.metadata = None;
        b.build().expect("rigid motion preserves validity")
    }

    /// Same elements with a different uniform bias.
    pub fn with_bias(&self, bias: Vec3) -> Layout {
        let mut b = self.to_builder();
        b.bias = bias;
        b.build().expect("bias change preserves validity")
    }

    pub fn with_gravity(&self, on: bool) -> Layout {
        let mut b = self.to_builder();
        b.include_gravity = on;
        b.build().expect("gravity flag preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wire() -> Conductor {
        Conductor::straight("I0", Vec3::new(-0.01, 0.0, 0.0), Vec3::new(0.01, 0.0, 0.0), 2.0)
    }

    #[test]
    fn dangling_channel_binding_rejected() {
        let err = Layout::builder()
            .conductor(wire())
            .channel("M1", vec![Binding::Conductor("M1".into())])
            .build()
            .unwrap_err();
        assert!(err.0.contains("unknown conductor"));
    }

    #[test]
    fn duplicate_channel_rejected() {
        let err = Layout::builder()
            .conductor(wire())
            .channel("A", vec![Binding::Conductor("I0".into())])
            .channel("A", vec![Binding::Bias(Axis::X)])
            .build()
            .unwrap_err();
        assert!(err.0.contains("duplicate channel"));
    }

    #[test]
    fn ribbon_needs_cross_section() {
        let c = wire().with_model(FilamentModel::Ribbon { n_w: 3, n_h: 3 });
        assert!(c.validate().is_err());
        let c = c.with_cross_section(10e-6, 7e-6);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn coincident_points_rejected() {
        let c = Conductor::polyline("a", vec![Vec3::zeros(), Vec3::zeros()], 1.0);
        assert!(c.validate().is_err());
        let c = Conductor::polyline("a", vec![Vec3::zeros()], 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn unit_multipliers_reproduce_static_currents() {
        let l = Layout::builder()
            .conductor(wire())
            .bias(Vec3::new(0.0, 0.016, 0.0))
            .channel("main", vec![Binding::Conductor("I0".into()), Binding::Bias(Axis::Y)])
            .build()
            .unwrap();
        let m = l.unit_multipliers();
        assert_eq!(l.conductor_current(0, &m), 2.0);
        assert_eq!(l.effective_bias(&m), l.bias());
        let half = l.multipliers(&[("main", 0.5)]).unwrap();
        assert_eq!(l.conductor_current(0, &half), 1.0);
        assert_eq!(l.effective_bias(&half).y, 0.008);
    }

    #[test]
    fn ribbon_filaments_fill_cross_section() {
        let c = wire()
            .with_cross_section(10e-6, 7e-6)
            .with_model(FilamentModel::Ribbon { n_w: 2, n_h: 1 });
        let l = Layout::builder().conductor(c).build().unwrap();
        let f = l.filaments();
        assert_eq!(f.len(), 2);
        assert!((f[0].fraction - 0.5).abs() < 1e-15);
        // ẑ × x̂ = ŷ, lateral offsets ±w/4, centred at h/2.
        assert!((f[0].points[0].y + 2.5e-6).abs() < 1e-18);
        assert!((f[1].points[0].y - 2.5e-6).abs() < 1e-18);
        assert!((f[0].points[0].z - 3.5e-6).abs() < 1e-18);
    }

    #[test]
    fn mitred_corner_keeps_lateral_distance() {
        let path = vec![
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        let off = offset_path(&path, 0.1, 0.0);
        // First leg runs along +y (normal -x), second along +x (normal +y).
        assert!((off[0].x + 0.1).abs() < 1e-12);
        assert!((off[1].x + 0.1).abs() < 1e-12 && (off[1].y - 0.1).abs() < 1e-12);
        assert!((off[2].y - 0.1).abs() < 1e-12);
    }

    #[test]
    fn thin_with_cross_section_sits_at_half_height() {
        let l = Layout::builder()
            .conductor(wire().with_cross_section(10e-6, 7e-6))
            .build()
            .unwrap();
        assert!((l.filaments()[0].points[0].z - 3.5e-6).abs() < 1e-18);
    }
}
