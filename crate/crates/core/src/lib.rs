//! Design and analysis of magnetic microtraps formed by planar current
//! conductors ("atom chips") and uniform bias fields.
//!
//! Internally everything is SI. File and command-line I/O use G, µm, mm, A
//! and ms with explicit unit tags; see [`units`].

pub mod analysis;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod format;
pub mod layout;
pub mod library;
pub mod schedule;
pub mod species;
pub mod units;

pub use error::Error;
pub use layout::{Axis, Conductor, FilamentModel, InfiniteWire, Layout, Mat3, Multipliers, Vec3};
pub use schedule::Schedule;
pub use species::{species_rb87, AtomSpecies};
