//! Scenario description shared by every rate computation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Circular cellular topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Each cell-site hears its own users and both neighbouring cells.
    Wyner,
    /// Each cell-site hears its own users and the left neighbouring cell.
    SoftHandoff,
}

impl Model {
    /// Smallest circle for which the neighbour pattern is well defined.
    pub fn min_cells(self) -> usize {
        match self {
            Model::Wyner => 3,
            Model::SoftHandoff => 2,
        }
    }

    /// Received power gain of the cell array: `1 + 2α²` or `1 + α²`.
    pub fn array_gain(self, alpha: f64) -> f64 {
        match self {
            Model::Wyner => 1.0 + 2.0 * alpha * alpha,
            Model::SoftHandoff => 1.0 + alpha * alpha,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Wyner => "wyner",
            Model::SoftHandoff => "sh",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wyner" => Ok(Model::Wyner),
            "sh" | "soft-handoff" | "softhandoff" => Ok(Model::SoftHandoff),
            other => Err(Error::Validation(format!("unknown model `{other}`"))),
        }
    }
}

/// Statistics of the channel coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// All coefficients are unity.
    Gaussian,
    /// Independent CN(0, 1) coefficients.
    Rayleigh,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Gaussian => "gaussian",
            ChannelKind::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "awgn" => Ok(ChannelKind::Gaussian),
            "rayleigh" => Ok(ChannelKind::Rayleigh),
            other => Err(Error::Validation(format!("unknown channel `{other}`"))),
        }
    }
}

/// Intra-cell access protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// All users of a cell transmit simultaneously over the whole band.
    Wideband,
    /// One user per cell is active at a time with the full cell power.
    Tdma,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Wideband => "wb",
            Protocol::Tdma => "tdma",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wb" | "wideband" => Ok(Protocol::Wideband),
            "tdma" => Ok(Protocol::Tdma),
            other => Err(Error::Validation(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Marker for "infinitely many users per cell" (the large-K regime).
pub const INFINITE_USERS: usize = usize::MAX;

/// Full description of a scenario.
///
/// `p` is the linear total-cell SNR and `c_backhaul` the per-site backhaul
/// capacity in bits per channel use (`f64::INFINITY` for an unlimited
/// backhaul).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub model: Model,
    pub alpha: f64,
    pub p: f64,
    pub k_users: usize,
    pub c_backhaul: f64,
    pub channel: ChannelKind,
    pub protocol: Protocol,
}

impl SystemParams {
    /// Non-fading scenario with one user per cell.
    pub fn gaussian(model: Model, alpha: f64, p: f64, c_backhaul: f64) -> Self {
        SystemParams {
            model,
            alpha,
            p,
            k_users: 1,
            c_backhaul,
            channel: ChannelKind::Gaussian,
            protocol: Protocol::Wideband,
        }
    }

    /// Rayleigh-faded wideband scenario with `k_users` per cell.
    pub fn rayleigh(model: Model, alpha: f64, p: f64, c_backhaul: f64, k_users: usize) -> Self {
        SystemParams {
            model,
            alpha,
            p,
            k_users,
            c_backhaul,
            channel: ChannelKind::Rayleigh,
            protocol: Protocol::Wideband,
        }
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol = protocol;
        self
    }

    pub fn with_users(mut self, k_users: usize) -> Self {
        self.k_users = k_users;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_power(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_backhaul(mut self, c_backhaul: f64) -> Self {
        self.c_backhaul = c_backhaul;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::Validation(format!(
                "power must be positive and finite, got {}",
                self.p
            )));
        }
        if self.c_backhaul.is_nan() || self.c_backhaul < 0.0 {
            return Err(Error::Validation(format!(
                "backhaul capacity must be non-negative, got {}",
                self.c_backhaul
            )));
        }
        if self.k_users == 0 {
            return Err(Error::Validation("at least one user per cell".into()));
        }
        Ok(())
    }

    /// Users entering the channel matrix: TDMA activates a single user.
    pub fn active_users(&self) -> usize {
        match self.protocol {
            Protocol::Tdma => 1,
            Protocol::Wideband => self.k_users,
        }
    }

    /// Wideband fading with (effectively) infinitely many users per cell.
    pub fn is_large_k(&self) -> bool {
        self.protocol == Protocol::Wideband && self.k_users == INFINITE_USERS
    }

    pub fn array_gain(&self) -> f64 {
        self.model.array_gain(self.alpha)
    }
}

/// Linear power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Decibels from a linear power ratio.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_out_of_range_values() {
        let ok = SystemParams::gaussian(Model::Wyner, 0.5, 10.0, 3.0);
        assert!(ok.validate().is_ok());
        assert!(ok.with_alpha(1.2).validate().is_err());
        assert!(ok.with_alpha(-0.1).validate().is_err());
        assert!(ok.with_power(0.0).validate().is_err());
        assert!(ok.with_backhaul(-1.0).validate().is_err());
        assert!(ok.with_users(0).validate().is_err());
        assert!(ok.with_backhaul(f64::INFINITY).validate().is_ok());
    }

    #[test]
    fn tdma_activates_one_user() {
        let p = SystemParams::rayleigh(Model::Wyner, 0.3, 10.0, 3.0, 5);
        assert_eq!(p.active_users(), 5);
        assert_eq!(p.with_protocol(Protocol::Tdma).active_users(), 1);
    }

    #[test]
    fn enum_round_trip() {
        for m in [Model::Wyner, Model::SoftHandoff] {
            assert_eq!(m.to_string().parse::<Model>().unwrap(), m);
        }
        for c in [ChannelKind::Gaussian, ChannelKind::Rayleigh] {
            assert_eq!(c.to_string().parse::<ChannelKind>().unwrap(), c);
        }
        for p in [Protocol::Wideband, Protocol::Tdma] {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert!("planar".parse::<Model>().is_err());
    }
}
