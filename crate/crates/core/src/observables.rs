//! Photon statistics and atomic inversion of a density matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::SpaceConfig;
use crate::liouvillian::DensityMatrix;

/// Entries in `[-CLAMP_TOL, 0)` are reported as zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Entries below this fail [`PhotonDistribution::validate`].
pub const NEGATIVE_FLOOR: f64 = -1e-8;
/// Mandel Q is undefined below this mean photon number.
pub const MIN_MEAN_FOR_Q: f64 = 1e-12;

/// Mandel `Q = (⟨n²⟩ − ⟨n⟩²)/⟨n⟩ − 1`, `None` when `⟨n⟩` is (numerically) zero.
pub fn mandel_q(n1: f64, n2: f64) -> Option<f64> {
    (n1 >= MIN_MEAN_FOR_Q).then(|| (n2 - n1 * n1) / n1 - 1.0)
}

/// Raw photon-number moments, inversion and Mandel Q of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    /// ⟨|2⟩⟨2| − |1⟩⟨1|⟩.
    pub d: f64,
    pub q: Option<f64>,
}

impl MomentSet {
    /// Moments of a photon distribution without atomic information; `d` is
    /// set to NaN.
    pub fn from_distribution(dist: &PhotonDistribution) -> Self {
        let mut n = [0.0; 4];
        for (k, &p) in dist.probs().iter().enumerate() {
            let x = k as f64;
            n[0] += x * p;
            n[1] += x * x * p;
            n[2] += x * x * x * p;
            n[3] += x * x * x * x * p;
        }
        Self {
            n1: n[0],
            n2: n[1],
            n3: n[2],
            n4: n[3],
            d: f64::NAN,
            q: mandel_q(n[0], n[1]),
        }
    }

    pub fn variance(&self) -> f64 {
        self.n2 - self.n1 * self.n1
    }
}

/// Probabilities `ρ(n)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let d = Self { probs };
        d.validate()?;
        Ok(d)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((n, &p)) = self
            .probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= NEGATIVE_FLOOR))
        {
            return Err(Error::InvalidState(format!(
                "rho({n}) = {p:.3e} is negative"
            )));
        }
        let total = self.total();
        if !((total - 1.0).abs() <= 1e-8) {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    /// `½ Σ |p(n) − q(n)|`, padding the shorter vector with zeros.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        let len = self.probs.len().max(other.len());
        let at = |v: &[f64], n: usize| v.get(n).copied().unwrap_or(0.0);
        0.5 * (0..len)
            .map(|n| (at(&self.probs, n) - at(other, n)).abs())
            .sum::<f64>()
    }
}

/// Field distribution `ρ(n) = Σ_atom ⟨atom, n|ρ|atom, n⟩`.
pub fn photon_distribution(rho: &DensityMatrix) -> PhotonDistribution {
    let space = rho.space();
    let m = rho.matrix();
    let probs = (0..space.field_dim())
        .map(|n| {
            let p = m[(
                space.index(SpaceConfig::ATOM_LOWER, n),
                space.index(SpaceConfig::ATOM_LOWER, n),
            )]
                .re
                + m[(
                    space.index(SpaceConfig::ATOM_UPPER, n),
                    space.index(SpaceConfig::ATOM_UPPER, n),
                )]
                    .re;
            if (-CLAMP_TOL..0.0).contains(&p) {
                0.0
            } else {
                p
            }
        })
        .collect();
    PhotonDistribution { probs }
}

/// Raw moments `Tr[ρ (a†a)^k]`, `k = 1..4`, inversion and Mandel Q.
pub fn moments(rho: &DensityMatrix) -> MomentSet {
    let space = rho.space();
    let m = rho.matrix();
    let mut set = MomentSet::from_distribution(&photon_distribution(rho));
    set.d = (0..space.field_dim())
        .map(|n| {
            m[(
                space.index(SpaceConfig::ATOM_UPPER, n),
                space.index(SpaceConfig::ATOM_UPPER, n),
            )]
                .re
                - m[(
                    space.index(SpaceConfig::ATOM_LOWER, n),
                    space.index(SpaceConfig::ATOM_LOWER, n),
                )]
                    .re
        })
        .sum();
    set
}
