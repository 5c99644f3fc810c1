//! Empirical checks of the local functional inequalities behind time analyticity.

mod energy;
mod mean_value;
pub mod region;
mod sobolev;

pub use energy::{
    caccioppoli_check, localized_estimate_check, localized_sweep, CaccioppoliReport, CaccioppoliRow,
    LocalizedReport, LocalizedSweep, LOCALIZED_GROWTH_LIMIT,
};
pub use mean_value::{
    mean_value_check, moser_chain_check, subsolution_margin, MeanValueReport, MoserChainConfig,
    MoserChainReport, MoserStep, MOSER_RATIO_LIMIT,
};
pub use region::{RegionQuadrature, SpaceTimeRegion};
pub use sobolev::{bump, sobolev_check, SobolevReport};

use crate::error::{Error, Result};
use crate::soliton::Point;

/// Upper end of the radii the local estimates are stated for.
pub const MAX_RADIUS: f64 = 2.0;

/// `Q_r(p, s) = B_p(r) x [s - r^2, s]` together with the cutoff `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicCylinder {
    pub p: Point,
    pub s: f64,
    pub r: f64,
    pub delta: f64,
}

impl ParabolicCylinder {
    pub fn new(p: Point, s: f64, r: f64, delta: f64) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::validation("cylinder radius must be positive"));
        }
        if r >= MAX_RADIUS {
            return Err(Error::out_of_scope(alloc::format!(
                "radius {r} is outside the local scope r < {MAX_RADIUS}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::validation("cutoff delta must lie in (0, 1)"));
        }
        if !s.is_finite() {
            return Err(Error::validation("vertex time must be finite"));
        }
        Ok(Self { p, s, r, delta })
    }

    /// `Q_{sigma r}(p, s)`.
    pub fn scaled(&self, sigma: f64) -> SpaceTimeRegion {
        let rho = sigma * self.r;
        SpaceTimeRegion { center: self.p.clone(), radius: rho, t0: self.s - rho * rho, t1: self.s }
    }

    pub fn outer(&self) -> SpaceTimeRegion {
        self.scaled(1.0)
    }

    pub fn inner(&self) -> SpaceTimeRegion {
        self.scaled(self.delta)
    }
}
