//! Nanotube geometry, threshold derivation and square-law drain-current
//! models for MOSFET-like CNFETs and reference bulk MOSFETs.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Graphene lattice constant in nm (`sqrt(3)` times the C-C bond length).
pub const DEFAULT_LATTICE_CONSTANT_NM: f64 = 0.249;

/// Threshold numerator in V·nm: `Vth = 0.42 / d`.
pub const THRESHOLD_COEFFICIENT: f64 = 0.42;

/// Default transconductance per tube in A/V².
pub const DEFAULT_TRANSCONDUCTANCE_PER_TUBE: f64 = 1.0e-4;

/// Default intrinsic gate capacitance per tube in F.
pub const DEFAULT_GATE_CAPACITANCE_PER_TUBE: f64 = 1.0e-17;

/// Zigzag index range searched when tuning a threshold.
pub const ZIGZAG_SEARCH_RANGE: std::ops::RangeInclusive<u32> = 4..=60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("invalid chirality ({n},{m}): n must be >= 1 and m <= n")]
    InvalidChirality { n: u32, m: u32 },
    #[error("diameter must be positive and finite, got {0}")]
    InvalidDiameter(f64),
    #[error("lattice constant must be positive and finite, got {0}")]
    InvalidLattice(f64),
    #[error("chirality ({n},{m}) is metallic and cannot form a transistor channel")]
    Metallic { n: u32, m: u32 },
    #[error("target threshold must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("no semiconducting zigzag tube reaches {target} V within {tolerance} V (closest: ({nearest},0) at {nearest_vth:.4} V)")]
    UnreachableThreshold {
        target: f64,
        tolerance: f64,
        nearest: u32,
        nearest_vth: f64,
    },
    #[error("tube count must be at least 1")]
    ZeroTubes,
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
}

/// Nanotube roll-up vector `(n, m)` in canonical order `m <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chirality {
    n: u32,
    m: u32,
}

impl Chirality {
    pub fn new(n: u32, m: u32) -> Result<Self, DeviceError> {
        if n == 0 || m > n {
            return Err(DeviceError::InvalidChirality { n, m });
        }
        Ok(Self { n, m })
    }

    pub fn zigzag(n: u32) -> Result<Self, DeviceError> {
        Self::new(n, 0)
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn m(self) -> u32 {
        self.m
    }

    pub fn is_semiconducting(self) -> bool {
        is_semiconducting(self)
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    N,
    P,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

/// Tube diameter in nm: `a * sqrt(n² + nm + m²) / π`.
pub fn diameter(c: Chirality, lattice_constant: f64) -> Result<f64, DeviceError> {
    if !(lattice_constant.is_finite() && lattice_constant > 0.0) {
        return Err(DeviceError::InvalidLattice(lattice_constant));
    }
    let (n, m) = (c.n as f64, c.m as f64);
    Ok(lattice_constant * (n * n + n * m + m * m).sqrt() / PI)
}

/// Threshold magnitude in V for a tube of diameter `d` nm.
pub fn threshold_voltage(d: f64) -> Result<f64, DeviceError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(DeviceError::InvalidDiameter(d));
    }
    Ok(THRESHOLD_COEFFICIENT / d)
}

pub fn is_semiconducting(c: Chirality) -> bool {
    (c.n as i64 - c.m as i64).rem_euclid(3) != 0
}

/// Threshold of a chirality at the given lattice constant.
pub fn chirality_threshold(c: Chirality, lattice_constant: f64) -> Result<f64, DeviceError> {
    threshold_voltage(diameter(c, lattice_constant)?)
}

/// Semiconducting zigzag tube whose threshold is nearest `target_vth`.
///
/// Ties resolve to the smaller `n`.
pub fn chirality_for_threshold(
    target_vth: f64,
    tolerance: f64,
    lattice_constant: f64,
) -> Result<Chirality, DeviceError> {
    if !(target_vth.is_finite() && target_vth > 0.0) {
        return Err(DeviceError::InvalidTarget(target_vth));
    }
    let mut best: Option<(Chirality, f64)> = None;
    for n in ZIGZAG_SEARCH_RANGE {
        let c = Chirality { n, m: 0 };
        if !is_semiconducting(c) {
            continue;
        }
        let vth = chirality_threshold(c, lattice_constant)?;
        let miss = (vth - target_vth).abs();
        if best.is_none_or(|(_, b)| miss < (b - target_vth).abs()) {
            best = Some((c, vth));
        }
    }
    let (c, vth) = best.expect("search range contains semiconducting tubes");
    if (vth - target_vth).abs() > tolerance {
        return Err(DeviceError::UnreachableThreshold {
            target: target_vth,
            tolerance,
            nearest: c.n,
            nearest_vth: vth,
        });
    }
    Ok(c)
}

/// Every semiconducting zigzag tube in the search range with its threshold,
/// ordered by decreasing threshold.
pub fn zigzag_ladder(lattice_constant: f64) -> Result<Vec<(Chirality, f64)>, DeviceError> {
    ZIGZAG_SEARCH_RANGE
        .map(|n| Chirality { n, m: 0 })
        .filter(|c| is_semiconducting(*c))
        .map(|c| Ok((c, chirality_threshold(c, lattice_constant)?)))
        .collect()
}

/// Drain current and its partial derivatives at one bias point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrainCurrent {
    /// Current flowing into the drain terminal, A.
    pub id: f64,
    /// ∂id/∂vgs, S.
    pub gm: f64,
    /// ∂id/∂vds, S.
    pub gds: f64,
}

/// Forward-mode (vds >= 0) n-type square law.
fn square_law_forward(k: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> DrainCurrent {
    let vov = vgs - vth;
    if vov <= 0.0 {
        return DrainCurrent::default();
    }
    let clm = 1.0 + lambda * vds;
    if vds < vov {
        let core = k * (vov * vds - 0.5 * vds * vds);
        DrainCurrent {
            id: core * clm,
            gm: k * vds * clm,
            gds: k * (vov - vds) * clm + core * lambda,
        }
    } else {
        let core = 0.5 * k * vov * vov;
        DrainCurrent {
            id: core * clm,
            gm: k * vov * clm,
            gds: core * lambda,
        }
    }
}

/// Symmetric n-type square law: drain and source swap roles when vds < 0.
fn square_law_n(k: f64, vth: f64, lambda: f64, vgs: f64, vds: f64) -> DrainCurrent {
    if vds >= 0.0 {
        square_law_forward(k, vth, lambda, vgs, vds)
    } else {
        let r = square_law_forward(k, vth, lambda, vgs - vds, -vds);
        DrainCurrent {
            id: -r.id,
            gm: -r.gm,
            gds: r.gm + r.gds,
        }
    }
}

/// Square law for either polarity. `vth` is the threshold magnitude.
pub fn square_law(
    polarity: Polarity,
    k: f64,
    vth: f64,
    lambda: f64,
    vgs: f64,
    vds: f64,
) -> DrainCurrent {
    let s = polarity.sign();
    let r = square_law_n(k, vth, lambda, s * vgs, s * vds);
    DrainCurrent {
        id: s * r.id,
        gm: r.gm,
        gds: r.gds,
    }
}

/// MOSFET-like (doped source/drain, unipolar) CNFET parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnfetParams {
    pub chirality: Chirality,
    pub polarity: Polarity,
    pub tube_count: u32,
    /// Fitting constant, A/V² per tube.
    pub transconductance_per_tube: f64,
    /// nm.
    pub lattice_constant: f64,
    /// Gate-to-source capacitance per tube, F.
    pub gate_capacitance_per_tube: f64,
}

impl CnfetParams {
    pub fn new(chirality: Chirality, polarity: Polarity) -> Self {
        Self {
            chirality,
            polarity,
            tube_count: 3,
            transconductance_per_tube: DEFAULT_TRANSCONDUCTANCE_PER_TUBE,
            lattice_constant: DEFAULT_LATTICE_CONSTANT_NM,
            gate_capacitance_per_tube: DEFAULT_GATE_CAPACITANCE_PER_TUBE,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !self.chirality.is_semiconducting() {
            return Err(DeviceError::Metallic {
                n: self.chirality.n,
                m: self.chirality.m,
            });
        }
        if self.tube_count == 0 {
            return Err(DeviceError::ZeroTubes);
        }
        if !(self.transconductance_per_tube.is_finite() && self.transconductance_per_tube > 0.0) {
            return Err(DeviceError::NonPositive("transconductance"));
        }
        if !(self.gate_capacitance_per_tube.is_finite() && self.gate_capacitance_per_tube >= 0.0)
        {
            return Err(DeviceError::NonPositive("gate capacitance"));
        }
        self.threshold().map(|_| ())
    }

    pub fn threshold(&self) -> Result<f64, DeviceError> {
        chirality_threshold(self.chirality, self.lattice_constant)
    }

    pub fn gate_capacitance(&self) -> f64 {
        self.gate_capacitance_per_tube * self.tube_count as f64
    }
}

pub fn cnfet_drain_current(p: &CnfetParams, vgs: f64, vds: f64) -> Result<DrainCurrent, DeviceError> {
    let vth = p.threshold()?;
    let k = p.transconductance_per_tube * p.tube_count as f64;
    Ok(square_law(p.polarity, k, vth, 0.0, vgs, vds))
}

/// Reference bulk MOSFET parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosfetParams {
    pub polarity: Polarity,
    /// Threshold magnitude, V.
    pub threshold: f64,
    /// A/V².
    pub transconductance: f64,
    /// 1/V.
    pub channel_length_modulation: f64,
    /// Gate-to-source capacitance, F.
    pub gate_capacitance: f64,
}

impl MosfetParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(DeviceError::NonPositive("threshold"));
        }
        if !(self.transconductance.is_finite() && self.transconductance > 0.0) {
            return Err(DeviceError::NonPositive("transconductance"));
        }
        if !(self.channel_length_modulation.is_finite() && self.channel_length_modulation >= 0.0) {
            return Err(DeviceError::NonPositive("channel-length modulation"));
        }
        if !(self.gate_capacitance.is_finite() && self.gate_capacitance >= 0.0) {
            return Err(DeviceError::NonPositive("gate capacitance"));
        }
        Ok(())
    }
}

pub fn mosfet_drain_current(p: &MosfetParams, vgs: f64, vds: f64) -> DrainCurrent {
    square_law(
        p.polarity,
        p.transconductance,
        p.threshold,
        p.channel_length_modulation,
        vgs,
        vds,
    )
}
