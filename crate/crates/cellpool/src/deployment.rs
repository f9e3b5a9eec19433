//! Concrete network instantiation: base-station layouts, user placement,
//! and strategy-dependent association.

use crate::analytic::Strategy;
use crate::error::{invalid, Error, Result};
use crate::rng::{substream, StreamDomain};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Contiguous block of subchannel indices a base station may transmit on.
/// Transmit power is split equally across exactly these subchannels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubchannelRange {
    pub first: u32,
    pub count: u32,
}

impl SubchannelRange {
    pub fn contains(&self, c: u32) -> bool {
        c >= self.first && c < self.first + self.count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    /// Owning operator, 1 or 2.
    pub operator: u8,
    pub x: f64,
    pub y: f64,
    /// Set by the simulator per strategy before scheduling.
    pub subchannels: SubchannelRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    /// Subscription operator, 1 or 2 (who bills the user, not who serves).
    pub operator: u8,
    pub x: f64,
    pub y: f64,
    pub serving_bs: Option<usize>,
}

/// Rectangular deployment region. Config files may give the dimensions with
/// a length suffix ("20 km"); bare numbers are meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(
        default = "default_region_dim",
        deserialize_with = "crate::units::de_length"
    )]
    pub width: f64,
    #[serde(
        default = "default_region_dim",
        deserialize_with = "crate::units::de_length"
    )]
    pub height: f64,
}

fn default_region_dim() -> f64 {
    20_000.0
}

impl Default for Region {
    fn default() -> Self {
        Region {
            width: default_region_dim(),
            height: default_region_dim(),
        }
    }
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !(self.height > 0.0)
            || !self.width.is_finite() || !self.height.is_finite()
        {
            return Err(invalid(
                "region",
                format!("dimensions must be positive, got {} x {}", self.width, self.height),
            ));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// How synthesized layouts scatter the stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutMode {
    /// Independent uniform positions (binomial point process).
    Uniform,
    /// Near-regular grid with positions jittered inside their cells; closer
    /// to how real macro deployments look than pure uniform scatter.
    PerturbedGrid,
}

impl std::str::FromStr for LayoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(LayoutMode::Uniform),
            "perturbed-grid" | "perturbed_grid" | "grid" => Ok(LayoutMode::PerturbedGrid),
            other => Err(invalid(
                "layout_mode",
                format!("unknown mode `{other}` (uniform|perturbed-grid)"),
            )),
        }
    }
}

/// Scatter n1 operator-1 and n2 operator-2 stations over the region.
/// Deterministic per seed; operator-1 stations get the lower ids.
pub fn synthesize_layout(
    counts: (usize, usize),
    region: &Region,
    seed: u64,
    mode: LayoutMode,
) -> Result<Vec<BaseStation>> {
    region.validate()?;
    let (n1, n2) = counts;
    if n1 + n2 == 0 {
        return Err(invalid("counts", "need at least one base station".to_string()));
    }
    let mut out = Vec::with_capacity(n1 + n2);
    for (op_idx, n) in [(1u8, n1), (2u8, n2)] {
        if n == 0 {
            continue;
        }
        let mut rng = substream(seed, StreamDomain::Layout, op_idx as u32, 0);
        let positions: Vec<(f64, f64)> = match mode {
            LayoutMode::Uniform => (0..n)
                .map(|_| {
                    (
                        region.width * rng.random::<f64>(),
                        region.height * rng.random::<f64>(),
                    )
                })
                .collect(),
            LayoutMode::PerturbedGrid => {
                let cols = (n as f64).sqrt().ceil() as usize;
                let rows = n.div_ceil(cols);
                let (cw, ch) = (region.width / cols as f64, region.height / rows as f64);
                (0..n)
                    .map(|i| {
                        let (col, row) = (i % cols, i / cols);
                        // Center of the cell plus up to 35% displacement.
                        let jx = (rng.random::<f64>() - 0.5) * 0.7;
                        let jy = (rng.random::<f64>() - 0.5) * 0.7;
                        (
                            (col as f64 + 0.5 + jx) * cw,
                            (row as f64 + 0.5 + jy) * ch,
                        )
                    })
                    .collect()
            }
        };
        for (x, y) in positions {
            out.push(BaseStation {
                id: out.len(),
                operator: op_idx,
                x,
                y,
                subchannels: SubchannelRange { first: 0, count: 0 },
            });
        }
    }
    Ok(out)
}

/// Place `ceil(per_cell * station count)` users per operator uniformly over
/// the region. `run` selects the independent placement substream for one
/// simulation run.
pub fn deploy_users(
    per_cell: (f64, f64),
    layout: &[BaseStation],
    region: &Region,
    seed: u64,
    run: u32,
) -> Result<Vec<User>> {
    region.validate()?;
    if !(per_cell.0 >= 0.0) || !(per_cell.1 >= 0.0) {
        return Err(invalid("users_per_cell", "must be >= 0".to_string()));
    }
    let mut rng = substream(seed, StreamDomain::UserPlacement, run, 0);
    let mut out = Vec::new();
    for (op, target) in [(1u8, per_cell.0), (2u8, per_cell.1)] {
        let n_bs = layout.iter().filter(|b| b.operator == op).count();
        let n_users = (target * n_bs as f64).ceil() as usize;
        for _ in 0..n_users {
            out.push(User {
                id: out.len(),
                operator: op,
                x: region.width * rng.random::<f64>(),
                y: region.height * rng.random::<f64>(),
                serving_bs: None,
            });
        }
    }
    Ok(out)
}

/// Attach every user to the candidate station with the strongest long-term
/// average received power (path loss times shadowing, no fast fading).
/// NoCoop restricts candidates to the user's own operator; the pooled
/// strategies consider every station. Ties go to the lower station id.
pub fn associate(
    users: &mut [User],
    layout: &[BaseStation],
    strategy: Strategy,
    statics: &crate::channel::ChannelStatics,
) -> Result<()> {
    for (u_idx, user) in users.iter_mut().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (b_idx, bs) in layout.iter().enumerate() {
            if strategy == Strategy::NoCoop && bs.operator != user.operator {
                continue;
            }
            let power = statics.static_gain(b_idx, u_idx);
            let better = match best {
                None => true,
                Some((_, p)) => power > p,
            };
            if better {
                best = Some((b_idx, power));
            }
        }
        match best {
            Some((b_idx, _)) => user.serving_bs = Some(b_idx),
            None => return Err(Error::NoCandidateBs { user_id: user.id }),
        }
    }
    Ok(())
}
