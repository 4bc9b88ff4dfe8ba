//! Complex-baseband synthesis of a rotating tag's backscatter response.
//!
//! Each received sample is modeled as
//!
//! ```text
//! s(t) = static_sum + m(t) · g(α(t)) · a(d) + n(t)
//! ```
//!
//! where `static_sum` lumps transmit leakage, environmental multipath and
//! structural scattering, `m(t) ∈ {0, 1}` is the FM0 load-modulation level
//! (the absorbing state contributes no differential term), `g(α)` is the
//! polarization backscatter coefficient at the tag's current rotation angle,
//! `a(d)` carries the round-trip propagation phase, the reader phase offset
//! and a 1/d² two-way amplitude, and `n(t)` is seeded circular Gaussian
//! noise. Frames synthesized this way are the ground truth the receiver
//! pipeline is tested against.

use crate::fm0codec::{self, Epc};
use crate::polarization::{
    lhcp_analyzer, receive_coefficient, rotated_polarizer, wrap_angle, JonesMatrix,
    PolarizationError, PolarizationSpec,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Closest allowed tag distance; the 1/d² amplitude diverges below this.
pub const MIN_DISTANCE_M: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("carrier frequency must be positive, got {0}")]
    InvalidCarrier(f64),
    #[error("reference impedance must be positive, got {0}")]
    InvalidImpedance(f64),
    #[error("distance must be at least {MIN_DISTANCE_M} m, got {0}")]
    InvalidDistance(f64),
    #[error("noise std must be non-negative and finite, got {0}")]
    InvalidNoise(f64),
    #[error("datarate must be positive, got {0}")]
    InvalidDatarate(f64),
    #[error("samples per symbol must be even and at least 2, got {0}")]
    InvalidSamplesPerSymbol(usize),
    #[error("t1 window must be non-empty")]
    InvalidT1Window,
    #[error("payload length must be at least 1 bit")]
    InvalidPayloadLen,
    #[error("expected {expected} payload bits, got {got}")]
    BitCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

// ---------------------------------------------------------------------------
// Scene description
// ---------------------------------------------------------------------------

/// One rotating (or static) tag in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagModel {
    pub epc: Epc,
    pub pol: PolarizationSpec,
    /// Rotation angle at t = 0, radians.
    #[serde(default)]
    pub alpha0: f64,
    /// Signed rotation rate in turns per second. Positive rates advance the
    /// backscatter phase (the tag angle decreasing over time); a tag whose
    /// angle increases reads back as a negative frequency.
    #[serde(default)]
    pub f_rot: f64,
    /// Out-of-plane tilt, radians. Recorded for bookkeeping only; the model
    /// is planar and does not act on it.
    #[serde(default)]
    pub tilt_beta: f64,
    /// Tag position in meters. Metadata only; the channel distance governs
    /// amplitude and propagation phase.
    #[serde(default)]
    pub position: [f64; 3],
}

impl TagModel {
    /// Rotation angle at absolute time `t` seconds.
    pub fn alpha_at(&self, t: f64) -> f64 {
        self.alpha0 - TAU * self.f_rot * t
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !self.alpha0.is_finite() {
            return Err(LinkError::NonFinite { field: "alpha0" });
        }
        if !self.f_rot.is_finite() {
            return Err(LinkError::NonFinite { field: "f_rot" });
        }
        if !self.tilt_beta.is_finite() {
            return Err(LinkError::NonFinite { field: "tilt_beta" });
        }
        Ok(())
    }
}

/// Reader-side parameters: transmit polarization, receive analyzer, carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderModel {
    pub tx_pol: PolarizationSpec,
    /// Receive-path analyzer matrix. Defaults to the left-hand circular
    /// projector, the receive behavior of a right-hand circular antenna.
    #[serde(default = "default_analyzer")]
    pub rx_analyzer: JonesMatrix,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Phase offset from cables and reader components, radians. Any
    /// load-modulation phase is folded in here for synthesis; only the sum
    /// is observable.
    #[serde(default)]
    pub phi_os: f64,
    /// Reference impedance in ohms.
    #[serde(default = "default_z0")]
    pub z0: f64,
}

fn default_analyzer() -> JonesMatrix {
    lhcp_analyzer()
}

fn default_z0() -> f64 {
    50.0
}

impl ReaderModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0) {
            return Err(LinkError::InvalidCarrier(self.carrier_freq));
        }
        if !(self.z0.is_finite() && self.z0 > 0.0) {
            return Err(LinkError::InvalidImpedance(self.z0));
        }
        if !self.phi_os.is_finite() {
            return Err(LinkError::NonFinite { field: "phi_os" });
        }
        if !self.rx_analyzer.is_finite() {
            return Err(LinkError::NonFinite { field: "rx_analyzer" });
        }
        Ok(())
    }
}

/// Propagation channel: lumped static clutter, distance, noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Sum of all load-independent received components, volts.
    #[serde(default = "zero_complex")]
    pub static_sum: Complex64,
    /// Reader-to-tag distance in meters.
    pub distance: f64,
    /// Per-component (I and Q) noise standard deviation, volts.
    #[serde(default)]
    pub noise_std: f64,
    /// Seed for the frame noise generator (ChaCha8 keyed by this value).
    #[serde(default)]
    pub rng_seed: u64,
}

fn zero_complex() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !self.static_sum.is_finite() {
            return Err(LinkError::NonFinite { field: "static_sum" });
        }
        if !(self.distance.is_finite() && self.distance >= MIN_DISTANCE_M) {
            return Err(LinkError::InvalidDistance(self.distance));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(LinkError::InvalidNoise(self.noise_std));
        }
        Ok(())
    }
}

/// Uplink timing: symbol rate, oversampling, T1 quiet window, payload size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Tag-to-reader symbol rate in Hz.
    pub datarate: f64,
    /// Samples per FM0 symbol; must be even so half-symbols land on sample
    /// boundaries.
    pub samples_per_symbol: usize,
    /// Unmodulated carrier samples before the response starts.
    pub t1_samples: usize,
    /// Number of payload bits per message (PC + EPC + CRC for the standard
    /// 128-bit layout).
    pub payload_bits: usize,
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.datarate.is_finite() && self.datarate > 0.0) {
            return Err(LinkError::InvalidDatarate(self.datarate));
        }
        if self.samples_per_symbol < 2 || self.samples_per_symbol % 2 != 0 {
            return Err(LinkError::InvalidSamplesPerSymbol(self.samples_per_symbol));
        }
        if self.t1_samples == 0 {
            return Err(LinkError::InvalidT1Window);
        }
        if self.payload_bits == 0 {
            return Err(LinkError::InvalidPayloadLen);
        }
        Ok(())
    }

    /// Baseband sample rate in Hz.
    pub fn sample_rate(&self) -> f64 {
        self.datarate * self.samples_per_symbol as f64
    }

    /// Symbols per message including preamble and the trailing dummy bit.
    pub fn message_symbols(&self) -> usize {
        fm0codec::PREAMBLE_SYMBOLS + self.payload_bits + fm0codec::TRAILER_SYMBOLS
    }

    /// Total samples per frame including the T1 window.
    pub fn frame_samples(&self) -> usize {
        self.t1_samples + self.message_symbols() * self.samples_per_symbol
    }
}

/// Generation truth attached to simulator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub epc: Epc,
    pub f_rot: f64,
    pub alpha_at_start: f64,
}

/// One tag response at complex baseband.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Leading samples that carry only carrier and clutter.
    pub t1_len: usize,
    pub truth: Option<FrameTruth>,
}

// ---------------------------------------------------------------------------
// Phase and gain terms
// ---------------------------------------------------------------------------

/// Round-trip propagation phase −2·(2πf/c)·d.
pub fn propagation_phase(distance: f64, carrier: f64) -> f64 {
    -2.0 * (TAU * carrier / SPEED_OF_LIGHT) * distance
}

/// Total received phase: offset + propagation + load modulation + rotation,
/// wrapped into (−π, π]. The rotation term is −2α.
pub fn total_phase(
    distance: f64,
    alpha: f64,
    phi_os: f64,
    phi_bs: f64,
    carrier: f64,
) -> Result<f64, LinkError> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(LinkError::InvalidDistance(distance));
    }
    if !(carrier.is_finite() && carrier > 0.0) {
        return Err(LinkError::InvalidCarrier(carrier));
    }
    if !(alpha.is_finite() && phi_os.is_finite() && phi_bs.is_finite()) {
        return Err(LinkError::NonFinite { field: "phase term" });
    }
    let phi_pol = -2.0 * alpha;
    Ok(wrap_angle(
        phi_os + propagation_phase(distance, carrier) + phi_bs + phi_pol,
    ))
}

/// Deterministic channel gain a(d) = e^{j(φ_prop + φ_os)} / d².
fn channel_gain(reader: &ReaderModel, channel: &ChannelModel) -> Complex64 {
    let phase = propagation_phase(channel.distance, reader.carrier_freq) + reader.phi_os;
    Complex64::from_polar(1.0 / (channel.distance * channel.distance), phase)
}

/// Noiseless differential backscatter value b(t) = g(α(t)) · a(d) at the
/// absolute time `t` of the tag's rotation timeline.
pub fn differential_at(
    tag: &TagModel,
    reader: &ReaderModel,
    channel: &ChannelModel,
    t: f64,
) -> Result<Complex64, LinkError> {
    tag.validate()?;
    reader.validate()?;
    channel.validate()?;
    let source = reader.tx_pol.source_vector()?;
    let element = tag.pol.element_matrix()?;
    let rotated = rotated_polarizer(&element, tag.alpha_at(t))?;
    Ok(receive_coefficient(&source, &rotated, &reader.rx_analyzer) * channel_gain(reader, channel))
}

/// Noise std that yields a given single-transition phase std at the scene's
/// initial orientation. A transition differences two samples, doubling the
/// noise variance, so the per-sample std is `target · |b| / √2`.
pub fn noise_std_for_phase_std(
    target_phase_std: f64,
    tag: &TagModel,
    reader: &ReaderModel,
    channel: &ChannelModel,
) -> Result<f64, LinkError> {
    if !(target_phase_std.is_finite() && target_phase_std >= 0.0) {
        return Err(LinkError::InvalidNoise(target_phase_std));
    }
    let b = differential_at(tag, reader, channel, 0.0)?;
    Ok(target_phase_std * b.norm() / 2.0_f64.sqrt())
}

// ---------------------------------------------------------------------------
// Frame synthesis
// ---------------------------------------------------------------------------

/// Synthesize one tag response frame starting at absolute time `t_start`.
///
/// The rotation angle evolves on the absolute timeline, so frames generated
/// with consecutive start times share a continuous angle trajectory. All
/// randomness comes from `channel.rng_seed`; identical inputs produce
/// bit-identical frames.
pub fn synth_frame(
    tag: &TagModel,
    reader: &ReaderModel,
    channel: &ChannelModel,
    link: &LinkParams,
    bits: &[bool],
    t_start: f64,
) -> Result<BasebandFrame, LinkError> {
    tag.validate()?;
    reader.validate()?;
    channel.validate()?;
    link.validate()?;
    if bits.len() != link.payload_bits {
        return Err(LinkError::BitCountMismatch {
            expected: link.payload_bits,
            got: bits.len(),
        });
    }

    let levels = fm0codec::fm0_encode(bits, link.samples_per_symbol)
        .expect("payload validated non-empty");
    let fs = link.sample_rate();
    let source = reader.tx_pol.source_vector()?;
    let element = tag.pol.element_matrix()?;
    let gain = channel_gain(reader, channel);

    let mut rng = ChaCha8Rng::seed_from_u64(channel.rng_seed);
    let noise = Normal::new(0.0, channel.noise_std).expect("noise std validated");

    let total = link.t1_samples + levels.len();
    let mut samples = Vec::with_capacity(total);
    for i in 0..total {
        let t = t_start + i as f64 / fs;
        let reflecting = i >= link.t1_samples && levels[i - link.t1_samples] == 1;
        let mut s = channel.static_sum;
        if reflecting {
            let rotated = rotated_polarizer(&element, tag.alpha_at(t))?;
            s += receive_coefficient(&source, &rotated, &reader.rx_analyzer) * gain;
        }
        // two draws per sample regardless of state keeps the stream aligned
        let n_re = noise.sample(&mut rng);
        let n_im = noise.sample(&mut rng);
        samples.push(s + Complex64::new(n_re, n_im));
    }

    Ok(BasebandFrame {
        samples,
        sample_rate: fs,
        t1_len: link.t1_samples,
        truth: Some(FrameTruth {
            epc: tag.epc,
            f_rot: tag.f_rot,
            alpha_at_start: tag.alpha_at(t_start),
        }),
    })
}

/// Noiseless differential constellation over a full turn: one point
/// `(α, b(α))` per `step` radians, sweeping the tag element directly through
/// the rotation angle (the tag's own timeline is ignored).
pub fn sweep_constellation(
    tag: &TagModel,
    reader: &ReaderModel,
    channel: &ChannelModel,
    step: f64,
) -> Result<Vec<(f64, Complex64)>, LinkError> {
    assert!(step > 0.0, "sweep step must be positive");
    reader.validate()?;
    channel.validate()?;
    let source = reader.tx_pol.source_vector()?;
    let element = tag.pol.element_matrix()?;
    let gain = channel_gain(reader, channel);

    let mut points = Vec::new();
    let mut k = 0usize;
    loop {
        let alpha = k as f64 * step;
        if alpha >= TAU {
            break;
        }
        let rotated = rotated_polarizer(&element, alpha)?;
        let b = receive_coefficient(&source, &rotated, &reader.rx_analyzer) * gain;
        points.push((alpha, b));
        k += 1;
    }
    Ok(points)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn test_scene() -> (TagModel, ReaderModel, ChannelModel, LinkParams) {
        let tag = TagModel {
            epc: Epc::from_u64(0xE20012345678),
            pol: PolarizationSpec::LinearDipole { angle: 0.0 },
            alpha0: 0.0,
            f_rot: 0.0,
            tilt_beta: 0.0,
            position: [0.5, 0.0, 0.0],
        };
        let reader = ReaderModel {
            tx_pol: PolarizationSpec::Rhcp,
            rx_analyzer: lhcp_analyzer(),
            carrier_freq: 915e6,
            phi_os: 0.0,
            z0: 50.0,
        };
        let channel = ChannelModel {
            static_sum: Complex64::new(0.0, 0.0),
            distance: 0.5,
            noise_std: 0.0,
            rng_seed: 1,
        };
        let link = LinkParams {
            datarate: 40e3,
            samples_per_symbol: 4,
            t1_samples: 40,
            payload_bits: 16,
        };
        (tag, reader, channel, link)
    }

    fn test_bits(n: usize) -> Vec<bool> {
        (0..n).map(|i| i % 3 == 0).collect()
    }

    #[test]
    fn total_phase_vanishing_terms() {
        assert_eq!(total_phase(0.0, 0.0, 0.0, 0.0, 915e6).unwrap(), 0.0);
    }

    #[test]
    fn total_phase_half_wavelength_round_trip() {
        let f = 915e6;
        let half_lambda = SPEED_OF_LIGHT / (2.0 * f);
        // two-way path over half a wavelength is a full turn
        let phi = total_phase(half_lambda, 0.0, 0.0, 0.0, f).unwrap();
        assert!(phi.abs() < 1e-9, "phi = {phi}");
    }

    #[test]
    fn total_phase_rotation_term() {
        let phi = total_phase(0.0, PI / 4.0, 0.0, 0.0, 915e6).unwrap();
        assert!((phi + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn total_phase_rejects_bad_geometry() {
        assert!(total_phase(-1.0, 0.0, 0.0, 0.0, 915e6).is_err());
        assert!(total_phase(0.5, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(total_phase(0.5, f64::NAN, 0.0, 0.0, 915e6).is_err());
    }

    #[test]
    fn t1_window_is_pure_static() {
        let (tag, reader, mut channel, link) = test_scene();
        channel.static_sum = Complex64::new(3.0, -2.0);
        let frame = synth_frame(&tag, &reader, &channel, &link, &test_bits(16), 0.0).unwrap();
        for s in &frame.samples[..link.t1_samples] {
            assert_eq!(*s, channel.static_sum);
        }
        assert_eq!(frame.samples.len(), link.frame_samples());
    }

    #[test]
    fn static_scene_has_constant_difference() {
        let (tag, reader, mut channel, link) = test_scene();
        channel.static_sum = Complex64::new(1.0, 1.0);
        let bits = test_bits(16);
        let frame = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        let levels = fm0codec::fm0_encode(&bits, link.samples_per_symbol).unwrap();

        let expected = differential_at(&tag, &reader, &channel, 0.0).unwrap();
        for (i, &level) in levels.iter().enumerate() {
            let s = frame.samples[link.t1_samples + i];
            let diff = s - channel.static_sum;
            if level == 1 {
                assert!((diff - expected).norm() < 1e-12, "sample {i}");
            } else {
                assert!(diff.norm() < 1e-15, "sample {i}");
            }
        }
    }

    #[test]
    fn rotation_advances_differential_phase() {
        let (mut tag, reader, channel, _) = test_scene();
        tag.f_rot = 10.0;
        let dt = 1.0 / 40e3;
        let b0 = differential_at(&tag, &reader, &channel, 0.0).unwrap();
        let b1 = differential_at(&tag, &reader, &channel, dt).unwrap();
        // positive rate advances phase by +2·(2π·f_rot)·Δt per symbol
        let advance = wrap_angle(b1.arg() - b0.arg());
        let expected = 2.0 * TAU * 10.0 * dt;
        assert!((advance - expected).abs() < 1e-9, "advance = {advance}");
    }

    #[test]
    fn frames_are_deterministic_per_seed() {
        let (tag, reader, mut channel, link) = test_scene();
        channel.noise_std = 0.05;
        channel.rng_seed = 99;
        let bits = test_bits(16);
        let a = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        let b = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        assert_eq!(a.samples, b.samples);

        channel.rng_seed = 100;
        let c = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn clutter_shifts_every_sample_uniformly() {
        let (tag, reader, mut channel, link) = test_scene();
        channel.noise_std = 0.02;
        let bits = test_bits(16);
        let base = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        channel.static_sum = Complex64::new(-3.0, 7.0);
        let shifted = synth_frame(&tag, &reader, &channel, &link, &bits, 0.0).unwrap();
        for (a, b) in base.samples.iter().zip(&shifted.samples) {
            assert_eq!(b - a, channel.static_sum);
        }
    }

    #[test]
    fn rotation_timeline_is_continuous_across_frames() {
        let (mut tag, reader, channel, link) = test_scene();
        tag.f_rot = 7.0;
        let bits = test_bits(16);
        let t0 = 0.0;
        let t1 = 0.005;
        let f0 = synth_frame(&tag, &reader, &channel, &link, &bits, t0).unwrap();
        let f1 = synth_frame(&tag, &reader, &channel, &link, &bits, t1).unwrap();
        let a0 = f0.truth.as_ref().unwrap().alpha_at_start;
        let a1 = f1.truth.as_ref().unwrap().alpha_at_start;
        assert!((a1 - (a0 - TAU * 7.0 * (t1 - t0))).abs() < 1e-12);
    }

    #[test]
    fn synth_rejects_wrong_bit_count() {
        let (tag, reader, channel, link) = test_scene();
        let err = synth_frame(&tag, &reader, &channel, &link, &test_bits(8), 0.0);
        assert!(matches!(err, Err(LinkError::BitCountMismatch { .. })));
    }

    #[test]
    fn synth_rejects_too_close_tag() {
        let (tag, reader, mut channel, link) = test_scene();
        channel.distance = 1e-4;
        let err = synth_frame(&tag, &reader, &channel, &link, &test_bits(16), 0.0);
        assert!(matches!(err, Err(LinkError::InvalidDistance(_))));
    }

    #[test]
    fn sweep_matches_phase_law() {
        let (tag, reader, channel, _) = test_scene();
        let points = sweep_constellation(&tag, &reader, &channel, 5.0_f64.to_radians()).unwrap();
        assert_eq!(points.len(), 72);
        let b0 = points[0].1;
        for &(alpha, b) in &points {
            assert!((b.norm() - b0.norm()).abs() / b0.norm() < 1e-12);
            let err = wrap_angle(b.arg() - b0.arg() + 2.0 * alpha).abs();
            assert!(err < 1e-9, "alpha = {alpha}");
        }
    }

    #[test]
    fn sweep_radius_shrinks_with_distance() {
        let (tag, reader, mut channel, _) = test_scene();
        let near = sweep_constellation(&tag, &reader, &channel, 0.5).unwrap();
        channel.distance = 0.8;
        let far = sweep_constellation(&tag, &reader, &channel, 0.5).unwrap();
        assert!(far[0].1.norm() < near[0].1.norm());
    }

    #[test]
    fn sweep_full_turn_step_yields_single_point() {
        let (tag, reader, channel, _) = test_scene();
        let points = sweep_constellation(&tag, &reader, &channel, TAU).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].0, 0.0);
    }

    #[test]
    fn calibrated_noise_matches_target_phase_std() {
        let (tag, reader, mut channel, _) = test_scene();
        let target = 0.1;
        let std = noise_std_for_phase_std(target, &tag, &reader, &channel).unwrap();
        channel.noise_std = std;

        // empirical check: phase spread of b + (n1 − n2) around arg(b)
        let b = differential_at(&tag, &reader, &channel, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, std).unwrap();
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let noise = Complex64::new(
                normal.sample(&mut rng) - normal.sample(&mut rng),
                normal.sample(&mut rng) - normal.sample(&mut rng),
            );
            let dphi = wrap_angle((b + noise).arg() - b.arg());
            acc += dphi * dphi;
        }
        let measured = (acc / n as f64).sqrt();
        assert!(
            (measured - target).abs() < 0.01,
            "measured phase std {measured}"
        );
    }
}
