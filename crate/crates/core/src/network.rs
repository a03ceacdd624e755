//! Network scenarios and channel generation.
//!
//! Two channel regimes: i.i.d. time/frequency-varying diagonal extended
//! channels, and coherence-structured channels induced by reconfigurable
//! receive-antenna switching patterns.

use std::collections::BTreeMap;

use num_complex::Complex64;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::sampling::{sample_annulus, stream_rng, MagnitudeBounds, StreamPurpose, EVE_STREAM};

/// Observer identity: a legitimate receiver (1-based) or the external
/// eavesdropper. The eavesdropper is never counted in K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RxId {
    Rx(usize),
    Eve,
}

impl std::fmt::Display for RxId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RxId::Rx(k) => write!(f, "{k}"),
            RxId::Eve => write!(f, "eve"),
        }
    }
}

impl Serialize for RxId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RxId::Rx(k) => s.serialize_u64(*k as u64),
            RxId::Eve => s.serialize_str("eve"),
        }
    }
}

impl<'de> Deserialize<'de> for RxId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(RxId::Rx(k as usize)),
            Raw::Tag(t) if t == "eve" => Ok(RxId::Eve),
            Raw::Tag(t) => Err(D::Error::custom(format!("unknown receiver id {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeVariant {
    XncmVarying,
    XncmExternalEve,
    BccBlind,
}

/// Declares a scenario: M transmitters, K receivers, channel variant, and the
/// number of scalar slots in one symbol extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub num_tx: usize,
    pub num_rx: usize,
    pub variant: SchemeVariant,
    pub extension_len: usize,
    pub noise_power: f64,
}

impl NetworkSpec {
    pub fn new(
        num_tx: usize,
        num_rx: usize,
        variant: SchemeVariant,
        extension_len: usize,
    ) -> Result<Self> {
        if num_tx < 2 || num_rx < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need M >= 2 and K >= 2, got M = {num_tx}, K = {num_rx}"
            )));
        }
        if extension_len == 0 {
            return Err(Error::InvalidNetwork("extension length must be positive".into()));
        }
        Ok(NetworkSpec {
            num_tx,
            num_rx,
            variant,
            extension_len,
            noise_power: 1.0,
        })
    }
}

/// Per-receiver antenna mode sequence over one supersymbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchPattern {
    pub num_modes: usize,
    /// `modes[k-1][t]` is the 1-based mode of receiver k in slot t.
    pub modes: Vec<Vec<usize>>,
}

impl SwitchPattern {
    pub fn supersymbol_len(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }
}

/// Mode vectors and the switch pattern behind a coherence-structured channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindChannels {
    /// `mode_vectors[k-1][m-1]` is the 1 x M row H_k(m).
    pub mode_vectors: Vec<Vec<Vec<Complex64>>>,
    pub pattern: SwitchPattern,
}

/// Diagonal extended channels per (observer, transmitter), plus the
/// mode-vector data when the channel coherence comes from antenna switching.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChannelSet {
    pub num_tx: usize,
    pub num_rx: usize,
    pub extension_len: usize,
    pub bounds: MagnitudeBounds,
    pub entries: BTreeMap<(RxId, usize), Vec<Complex64>>,
    pub blind: Option<BlindChannels>,
}

impl ExtendedChannelSet {
    pub fn has_eve(&self) -> bool {
        self.entries.keys().any(|(rx, _)| *rx == RxId::Eve)
    }

    pub fn diagonal(&self, rx: RxId, tx: usize) -> Result<&[Complex64]> {
        self.entries
            .get(&(rx, tx))
            .map(Vec::as_slice)
            .ok_or(Error::MissingChannel { rx, tx })
    }

    /// All observers with channel rows, receivers first, eve last.
    pub fn observers(&self) -> Vec<RxId> {
        if self.blind.is_some() {
            return (1..=self.num_rx).map(RxId::Rx).collect();
        }
        let mut out: Vec<RxId> = (1..=self.num_rx).map(RxId::Rx).collect();
        if self.has_eve() {
            out.push(RxId::Eve);
        }
        out
    }

    /// Materializes the full beta x (M*beta) block-diagonal channel of one
    /// receiver in the switching regime: slot t carries the 1 x M row
    /// H_k(pattern_k(t)) in block position t.
    pub fn blind_receiver_matrix(&self, rx: usize) -> Result<CMat> {
        let blind = self.blind.as_ref().ok_or_else(|| {
            Error::DimensionMismatch("channel set has no switching structure".into())
        })?;
        let m = self.num_tx;
        let beta = self.extension_len;
        let pattern = blind
            .pattern
            .modes
            .get(rx - 1)
            .ok_or(Error::MissingChannel { rx: RxId::Rx(rx), tx: 1 })?;
        let vectors = &blind.mode_vectors[rx - 1];
        let mut h = CMat::zeros(beta, m * beta);
        for (t, &mode) in pattern.iter().enumerate() {
            let row = &vectors[mode - 1];
            for c in 0..m {
                h[(t, t * m + c)] = row[c];
            }
        }
        Ok(h)
    }

    /// Effective observation of a transmit-side beamformer at `rx`:
    /// diagonal scaling in the varying regime, block-diagonal product in the
    /// switching regime.
    pub fn observe(&self, rx: RxId, tx: usize, beamformer: &CMat) -> Result<CMat> {
        if self.blind.is_some() {
            let k = match rx {
                RxId::Rx(k) => k,
                RxId::Eve => {
                    return Err(Error::MissingChannel { rx, tx });
                }
            };
            let h = self.blind_receiver_matrix(k)?;
            if h.ncols() != beamformer.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "channel is {}x{} but beamformer has {} rows",
                    h.nrows(),
                    h.ncols(),
                    beamformer.nrows()
                )));
            }
            return Ok(&h * beamformer);
        }
        let diag = self.diagonal(rx, tx)?;
        if diag.len() != beamformer.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal has {} slots but beamformer has {} rows",
                diag.len(),
                beamformer.nrows()
            )));
        }
        let mut out = beamformer.clone();
        for (t, h) in diag.iter().enumerate() {
            for c in 0..out.ncols() {
                out[(t, c)] *= h;
            }
        }
        Ok(out)
    }
}

/// Draws i.i.d. time/frequency-varying extended channels. Deterministic for a
/// fixed (spec, seed); every coefficient magnitude stays inside the bounds.
pub fn draw_varying_channels(spec: &NetworkSpec, seed: u64) -> Result<ExtendedChannelSet> {
    if spec.variant == SchemeVariant::BccBlind {
        return Err(Error::InvalidNetwork(
            "varying-channel draw requires a varying-channel variant".into(),
        ));
    }
    let spec = NetworkSpec::new(spec.num_tx, spec.num_rx, spec.variant, spec.extension_len)?;
    let bounds = MagnitudeBounds::default();
    let mut entries = BTreeMap::new();
    let mut observers: Vec<(RxId, u64)> = (1..=spec.num_rx).map(|k| (RxId::Rx(k), k as u64)).collect();
    if spec.variant == SchemeVariant::XncmExternalEve {
        observers.push((RxId::Eve, EVE_STREAM));
    }
    for (rx, rx_stream) in observers {
        for tx in 1..=spec.num_tx {
            let mut rng = stream_rng(seed, StreamPurpose::Channel, rx_stream, tx as u64);
            let diag: Vec<Complex64> = (0..spec.extension_len)
                .map(|_| sample_annulus(&mut rng, bounds))
                .collect();
            entries.insert((rx, tx), diag);
        }
    }
    Ok(ExtendedChannelSet {
        num_tx: spec.num_tx,
        num_rx: spec.num_rx,
        extension_len: spec.extension_len,
        bounds,
        entries,
        blind: None,
    })
}

/// Switching pattern for the two-receiver blind scheme over beta = M^2 - 1
/// slots: receiver 1 cycles through the modes, receiver 2 holds each mode for
/// M consecutive slots with the final block truncated.
pub fn blind_switch_pattern(num_tx: usize, num_rx: usize) -> Result<SwitchPattern> {
    if num_rx != 2 {
        return Err(Error::UnsupportedK { k: num_rx });
    }
    if num_tx < 2 {
        return Err(Error::InvalidNetwork(format!("need M >= 2, got M = {num_tx}")));
    }
    let beta = num_tx * num_tx - 1;
    let cycling: Vec<usize> = (0..beta).map(|t| t % num_tx + 1).collect();
    let holding: Vec<usize> = (0..beta).map(|t| t / num_tx + 1).collect();
    Ok(SwitchPattern {
        num_modes: num_tx,
        modes: vec![cycling, holding],
    })
}

/// Draws one independent 1 x M mode vector per (receiver, mode) and ties the
/// supersymbol coherence structure to the pattern.
pub fn build_switching_channels(
    num_tx: usize,
    num_rx: usize,
    pattern: &SwitchPattern,
    seed: u64,
) -> Result<ExtendedChannelSet> {
    if pattern.modes.len() != num_rx {
        return Err(Error::DimensionMismatch(format!(
            "pattern covers {} receivers, network has {num_rx}",
            pattern.modes.len()
        )));
    }
    let beta = pattern.supersymbol_len();
    if beta == 0 {
        return Err(Error::InvalidNetwork("empty switch pattern".into()));
    }
    for (k, modes) in pattern.modes.iter().enumerate() {
        if modes.len() != beta {
            return Err(Error::DimensionMismatch(format!(
                "receiver {} pattern has {} slots, expected {beta}",
                k + 1,
                modes.len()
            )));
        }
        for (t, &mode) in modes.iter().enumerate() {
            if mode == 0 || mode > num_tx {
                return Err(Error::ModeOutOfRange {
                    receiver: k + 1,
                    slot: t,
                    mode,
                    num_modes: num_tx,
                });
            }
        }
    }
    let bounds = MagnitudeBounds::default();
    let mode_vectors: Vec<Vec<Vec<Complex64>>> = (1..=num_rx)
        .map(|k| {
            (1..=num_tx)
                .map(|mode| {
                    let mut rng =
                        stream_rng(seed, StreamPurpose::ModeVector, k as u64, mode as u64);
                    (0..num_tx).map(|_| sample_annulus(&mut rng, bounds)).collect()
                })
                .collect()
        })
        .collect();
    Ok(ExtendedChannelSet {
        num_tx,
        num_rx,
        extension_len: beta,
        bounds,
        entries: BTreeMap::new(),
        blind: Some(BlindChannels {
            mode_vectors,
            pattern: pattern.clone(),
        }),
    })
}

// --- JSON schema -----------------------------------------------------------
//
// {"M":.., "K":.., "L":.., "entries":[{"rx":.., "tx":.., "re":[..], "im":[..]}],
//  "patterns":[[..],[..]], "mode_vectors":[[{"re":[..],"im":[..]},..],..]}

#[derive(Serialize, Deserialize)]
struct ComplexVecDto {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVecDto {
    fn from_slice(v: &[Complex64]) -> Self {
        ComplexVecDto {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    fn to_vec(&self) -> std::result::Result<Vec<Complex64>, String> {
        if self.re.len() != self.im.len() {
            return Err("re/im length mismatch".into());
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct EntryDto {
    rx: RxId,
    tx: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelSetDto {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    entries: Vec<EntryDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    patterns: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode_vectors: Option<Vec<Vec<ComplexVecDto>>>,
}

impl Serialize for ExtendedChannelSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let dto = ChannelSetDto {
            m: self.num_tx,
            k: self.num_rx,
            l: self.extension_len,
            entries: self
                .entries
                .iter()
                .map(|(&(rx, tx), diag)| {
                    let v = ComplexVecDto::from_slice(diag);
                    EntryDto { rx, tx, re: v.re, im: v.im }
                })
                .collect(),
            patterns: self.blind.as_ref().map(|b| b.pattern.modes.clone()),
            mode_vectors: self.blind.as_ref().map(|b| {
                b.mode_vectors
                    .iter()
                    .map(|per_rx| per_rx.iter().map(|v| ComplexVecDto::from_slice(v)).collect())
                    .collect()
            }),
        };
        dto.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtendedChannelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dto = ChannelSetDto::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for e in dto.entries {
            let diag = ComplexVecDto { re: e.re, im: e.im }
                .to_vec()
                .map_err(D::Error::custom)?;
            entries.insert((e.rx, e.tx), diag);
        }
        let blind = match (dto.patterns, dto.mode_vectors) {
            (Some(patterns), Some(modes)) => {
                let mode_vectors = modes
                    .into_iter()
                    .map(|per_rx| {
                        per_rx
                            .into_iter()
                            .map(|v| v.to_vec().map_err(D::Error::custom))
                            .collect::<std::result::Result<Vec<_>, _>>()
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Some(BlindChannels {
                    mode_vectors,
                    pattern: SwitchPattern { num_modes: dto.m, modes: patterns },
                })
            }
            (None, None) => None,
            _ => {
                return Err(D::Error::custom(
                    "patterns and mode_vectors must be present together",
                ))
            }
        };
        Ok(ExtendedChannelSet {
            num_tx: dto.m,
            num_rx: dto.k,
            extension_len: dto.l,
            bounds: MagnitudeBounds::default(),
            entries,
            blind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, k: usize, variant: SchemeVariant, l: usize) -> NetworkSpec {
        NetworkSpec::new(m, k, variant, l).unwrap()
    }

    #[test]
    fn varying_draw_respects_bounds() {
        let s = spec(2, 2, SchemeVariant::XncmVarying, 2);
        let ch = draw_varying_channels(&s, 7).unwrap();
        assert_eq!(ch.entries.len(), 4);
        for diag in ch.entries.values() {
            assert_eq!(diag.len(), 2);
            for &z in diag {
                assert!(ch.bounds.contains(z));
            }
        }
    }

    #[test]
    fn varying_draw_is_deterministic() {
        let s = spec(3, 2, SchemeVariant::XncmVarying, 3);
        let a = draw_varying_channels(&s, 11).unwrap();
        let b = draw_varying_channels(&s, 11).unwrap();
        assert_eq!(a, b);
        let c = draw_varying_channels(&s, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn eve_variant_populates_eve_rows() {
        let s = spec(2, 2, SchemeVariant::XncmExternalEve, 9);
        let ch = draw_varying_channels(&s, 1).unwrap();
        // 2 rx + eve, times 2 tx
        assert_eq!(ch.entries.len(), 6);
        assert!(ch.has_eve());
        assert_eq!(ch.diagonal(RxId::Eve, 1).unwrap().len(), 9);
    }

    #[test]
    fn zero_extension_rejected() {
        assert!(NetworkSpec::new(2, 2, SchemeVariant::XncmVarying, 0).is_err());
        assert!(NetworkSpec::new(1, 2, SchemeVariant::XncmVarying, 2).is_err());
    }

    #[test]
    fn switch_pattern_m2() {
        let p = blind_switch_pattern(2, 2).unwrap();
        assert_eq!(p.modes[0], vec![1, 2, 1]);
        assert_eq!(p.modes[1], vec![1, 1, 2]);
    }

    #[test]
    fn switch_pattern_m3() {
        let p = blind_switch_pattern(3, 2).unwrap();
        assert_eq!(p.modes[0], vec![1, 2, 3, 1, 2, 3, 1, 2]);
        assert_eq!(p.modes[1], vec![1, 1, 1, 2, 2, 2, 3, 3]);
    }

    #[test]
    fn switch_pattern_m4_generalizes() {
        let p = blind_switch_pattern(4, 2).unwrap();
        assert_eq!(p.supersymbol_len(), 15);
        assert_eq!(p.modes[0], vec![1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3]);
        assert_eq!(p.modes[1], vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4]);
    }

    #[test]
    fn switch_pattern_needs_two_receivers() {
        assert!(matches!(blind_switch_pattern(2, 3), Err(Error::UnsupportedK { k: 3 })));
    }

    #[test]
    fn switching_channel_rows_follow_pattern() {
        let p = blind_switch_pattern(2, 2).unwrap();
        let ch = build_switching_channels(2, 2, &p, 5).unwrap();
        let h1 = ch.blind_receiver_matrix(1).unwrap();
        assert_eq!((h1.nrows(), h1.ncols()), (3, 6));
        let blind = ch.blind.as_ref().unwrap();
        for t in 0..3 {
            let mode = p.modes[0][t];
            for c in 0..2 {
                assert_eq!(h1[(t, 2 * t + c)], blind.mode_vectors[0][mode - 1][c]);
            }
        }
        // slots 0 and 2 reuse mode 1: identical rows, shifted blocks
        assert_eq!(h1[(0, 0)], h1[(2, 4)]);
        assert_eq!(h1[(0, 1)], h1[(2, 5)]);
    }

    #[test]
    fn switching_channel_m3_holding_receiver_repeats_rows() {
        let p = blind_switch_pattern(3, 2).unwrap();
        let ch = build_switching_channels(3, 2, &p, 5).unwrap();
        let blind = ch.blind.as_ref().unwrap();
        let h2 = ch.blind_receiver_matrix(2).unwrap();
        for t in 0..3 {
            for c in 0..3 {
                assert_eq!(h2[(t, 3 * t + c)], blind.mode_vectors[1][0][c]);
            }
        }
    }

    #[test]
    fn switching_rejects_bad_mode() {
        let mut p = blind_switch_pattern(2, 2).unwrap();
        p.modes[1][2] = 9;
        assert!(matches!(
            build_switching_channels(2, 2, &p, 5),
            Err(Error::ModeOutOfRange { receiver: 2, slot: 2, mode: 9, .. })
        ));
    }

    #[test]
    fn channel_json_round_trip() {
        let s = spec(2, 2, SchemeVariant::XncmExternalEve, 3);
        let ch = draw_varying_channels(&s, 2).unwrap();
        let json = serde_json::to_string(&ch).unwrap();
        assert!(json.contains("\"M\":2"));
        assert!(json.contains("\"eve\""));
        let back: ExtendedChannelSet = serde_json::from_str(&json).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn channel_json_keys_match_the_schema() {
        let s = spec(2, 2, SchemeVariant::XncmExternalEve, 3);
        let ch = draw_varying_channels(&s, 2).unwrap();
        let doc: serde_json::Value = serde_json::to_value(&ch).unwrap();
        let top: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(top, vec!["K", "L", "M", "entries"]);
        let entry = doc["entries"][0].as_object().unwrap();
        let keys: Vec<&str> = entry.keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["im", "re", "rx", "tx"]);
        assert_eq!(doc["L"], 3);
        assert_eq!(doc["entries"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn blind_json_round_trip() {
        let p = blind_switch_pattern(3, 2).unwrap();
        let ch = build_switching_channels(3, 2, &p, 9).unwrap();
        let json = serde_json::to_string(&ch).unwrap();
        let back: ExtendedChannelSet = serde_json::from_str(&json).unwrap();
        assert_eq!(ch, back);
    }
}
