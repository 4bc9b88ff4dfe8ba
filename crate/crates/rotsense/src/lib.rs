//! Rotation sensing from UHF RFID backscatter.
//!
//! A circularly polarized reader antenna and a linearly polarized tag antenna
//! form a polarization-diverse link: as the tag rotates by an angle α, the
//! backscattered signal picks up a phase of −2α on top of the usual offset
//! and propagation terms. Tracking that phase across one tag response — one
//! complex sample per FM0 symbol transition — gives a signed rotation
//! frequency per message, keyed to the tag's EPC, with no extra hardware on
//! the tag.
//!
//! The crate has two halves that close on each other:
//!
//! - a complex-baseband **simulator** ([`linkmodel`]) that composes static
//!   clutter, propagation, the Jones-calculus backscatter coefficient
//!   ([`polarization`]) and seeded noise into tag-response frames, and
//! - the **receiver pipeline** ([`fm0codec`], [`phasepipe`], [`rotor`]) that
//!   recovers bits, the per-transition difference signal, its unwrapped phase
//!   slope, and finally the signed rotation frequency per EPC.
//!
//! The simulator doubles as the ground-truth oracle for the estimator: a
//! frame synthesized at some rotation rate must decode back to that rate.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example phase_law               # backscatter phase vs. tag angle
//! cargo run --example constellation_circle    # difference-signal constellation sweep
//! cargo run --example elliptical_phase_error  # phase error of an imperfect reader
//! cargo run --example synthesize_and_decode   # one frame through the full pipeline
//! cargo run --example multi_tag_inventory     # three tags, per-EPC aggregates
//! cargo run --example speed_benchmark         # relative error vs. rotation speed
//! cargo run --example sample_size             # measurement-count planning
//! ```
//!
//! The `rotsense` binary wraps the same library behind `simulate`, `decode`,
//! `sweep` and `bench` subcommands; see the README for file formats.

pub mod cli;
pub mod fm0codec;
pub mod linkmodel;
pub mod phasepipe;
pub mod polarization;
pub mod rotor;

pub use fm0codec::{DecodedMessage, EdgePolarity, Epc, SymbolTransition};
pub use linkmodel::{
    BasebandFrame, ChannelModel, FrameTruth, LinkParams, ReaderModel, TagModel,
};
pub use phasepipe::{DiffSample, PhaseSeries, SlopeFit};
pub use polarization::{JonesMatrix, JonesVector, PolarizationSpec};
pub use rotor::{AggregateEstimate, RotationEstimate};
