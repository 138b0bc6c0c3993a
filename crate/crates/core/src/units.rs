//! Conversions between the internal SI system and the laboratory units used
//! in files and on the command line (gauss, micrometre, millisecond).
//!
//! Conversion *into* SI divides by the power of ten and conversion *out of* SI
//! multiplies, so each direction is a single correctly rounded operation.

/// Tesla per gauss.
pub const GAUSS: f64 = 1e-4;
/// Metres per micrometre.
pub const MICROMETER: f64 = 1e-6;
/// Metres per millimetre.
pub const MILLIMETER: f64 = 1e-3;
/// Seconds per millisecond.
pub const MILLISECOND: f64 = 1e-3;

pub fn gauss_to_tesla(g: f64) -> f64 {
    g / 1e4
}

pub fn tesla_to_gauss(t: f64) -> f64 {
    t * 1e4
}

/// G/cm to T/m.
pub fn gauss_per_cm_to_si(g: f64) -> f64 {
    g / 1e2
}

pub fn si_to_gauss_per_cm(t_per_m: f64) -> f64 {
    t_per_m * 1e2
}

/// G/cm² and T/m² are the same number.
pub fn gauss_per_cm2_to_si(g: f64) -> f64 {
    g
}

pub fn si_to_gauss_per_cm2(t_per_m2: f64) -> f64 {
    t_per_m2
}

pub fn um_to_m(um: f64) -> f64 {
    um / 1e6
}

pub fn m_to_um(m: f64) -> f64 {
    m * 1e6
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm / 1e3
}

pub fn m_to_mm(m: f64) -> f64 {
    m * 1e3
}

pub fn ms_to_s(ms: f64) -> f64 {
    ms / 1e3
}

pub fn s_to_ms(s: f64) -> f64 {
    s * 1e3
}

/// Length unit tags accepted in layout files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthUnit {
    Meter,
    Millimeter,
    Micrometer,
    Nanometer,
}

impl LengthUnit {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "m" => Some(Self::Meter),
            "mm" => Some(Self::Millimeter),
            "um" | "µm" | "μm" => Some(Self::Micrometer),
            "nm" => Some(Self::Nanometer),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Meter => "m",
            Self::Millimeter => "mm",
            Self::Micrometer => "um",
            Self::Nanometer => "nm",
        }
    }

    fn per_meter(self) -> f64 {
        match self {
            Self::Meter => 1.0,
            Self::Millimeter => 1e3,
            Self::Micrometer => 1e6,
            Self::Nanometer => 1e9,
        }
    }

    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Self::Meter => v,
            _ => v / self.per_meter(),
        }
    }

    pub fn from_si(self, v: f64) -> f64 {
        match self {
            Self::Meter => v,
            _ => v * self.per_meter(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentUnit {
    Ampere,
    Milliampere,
}

impl CurrentUnit {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "A" => Some(Self::Ampere),
            "mA" => Some(Self::Milliampere),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Ampere => "A",
            Self::Milliampere => "mA",
        }
    }

    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Self::Ampere => v,
            Self::Milliampere => v / 1e3,
        }
    }

    pub fn from_si(self, v: f64) -> f64 {
        match self {
            Self::Ampere => v,
            Self::Milliampere => v * 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldUnit {
    Tesla,
    Gauss,
    Milligauss,
}

impl FieldUnit {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "T" => Some(Self::Tesla),
            "G" => Some(Self::Gauss),
            "mG" => Some(Self::Milligauss),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Tesla => "T",
            Self::Gauss => "G",
            Self::Milligauss => "mG",
        }
    }

    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Self::Tesla => v,
            Self::Gauss => v / 1e4,
            Self::Milligauss => v / 1e7,
        }
    }

    pub fn from_si(self, v: f64) -> f64 {
        match self {
            Self::Tesla => v,
            Self::Gauss => v * 1e4,
            Self::Milligauss => v * 1e7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Second,
    Millisecond,
    Microsecond,
}

impl TimeUnit {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "s" => Some(Self::Second),
            "ms" => Some(Self::Millisecond),
            "us" | "µs" | "μs" => Some(Self::Microsecond),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Second => "s",
            Self::Millisecond => "ms",
            Self::Microsecond => "us",
        }
    }

    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Self::Second => v,
            Self::Millisecond => v / 1e3,
            Self::Microsecond => v / 1e6,
        }
    }

    pub fn from_si(self, v: f64) -> f64 {
        match self {
            Self::Second => v,
            Self::Millisecond => v * 1e3,
            Self::Microsecond => v * 1e6,
        }
    }
}
