//! End-to-end OFDMA experiments: deploy a network, associate users per
//! strategy, draw per-frame channels, run the tile allocator, and aggregate
//! per-user throughput across frames and runs.
//!
//! All randomness is keyed by (seed, domain, run, frame) and never by
//! strategy, so strategies compared on one config see identical placements,
//! shadowing, and fading.

use crate::analytic::{RadioParams, Strategy};
use crate::channel::{draw_channel, ChannelStatics, PathLossModel};
use crate::deployment::{
    associate, deploy_users, synthesize_layout, BaseStation, LayoutMode, Region, SubchannelRange,
    User,
};
use crate::error::{invalid, Result};
use crate::scheduler::{allocate_frame, AllocParams};
use crate::stats::quantile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::time::Instant;

/// Where the base stations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BsSource {
    /// Scatter count1 + count2 stations over the region.
    Synthetic {
        count1: usize,
        count2: usize,
        mode: LayoutMode,
    },
    /// Load a layout CSV (operator,x_m,y_m or operator,lat,lon).
    File { path: PathBuf },
}

/// One operator's share of the scenario. Bandwidth accepts a frequency
/// suffix in config files ("10 MHz"); bare numbers are Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorScenario {
    /// Licensed bandwidth, Hz.
    #[serde(
        default = "default_bandwidth",
        deserialize_with = "crate::units::de_bandwidth"
    )]
    pub bandwidth: f64,
    /// Mean subscribers per cell; the deployed count is ceil(value * cells).
    #[serde(default = "default_users_per_cell")]
    pub users_per_cell: f64,
}

impl Default for OperatorScenario {
    fn default() -> Self {
        OperatorScenario {
            bandwidth: default_bandwidth(),
            users_per_cell: default_users_per_cell(),
        }
    }
}

fn default_bandwidth() -> f64 {
    10e6
}

fn default_users_per_cell() -> f64 {
    100.0
}

fn default_bs_source() -> BsSource {
    BsSource::Synthetic {
        count1: 16,
        count2: 13,
        mode: LayoutMode::PerturbedGrid,
    }
}

fn default_strategy() -> Strategy {
    Strategy::NoCoop
}

fn default_seed() -> u64 {
    1729
}

fn default_path_loss() -> PathLossModel {
    PathLossModel::LogDistance
}

fn default_sigma_db() -> f64 {
    8.0
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_subchannels() -> u32 {
    32
}

fn default_slots() -> u32 {
    60
}

fn default_frames() -> u32 {
    30
}

fn default_runs() -> u32 {
    5
}

/// Complete description of one frame-level experiment. Every field has a
/// reference-scenario default, so an empty config file is a valid (and
/// canonical) scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub region: Region,
    #[serde(default = "default_bs_source")]
    pub bs_source: BsSource,
    #[serde(default)]
    pub operator1: OperatorScenario,
    #[serde(default)]
    pub operator2: OperatorScenario,
    #[serde(default)]
    pub radio: RadioParams,
    /// Subchannels per licensed band (an operator with zero bandwidth
    /// contributes zero subchannels).
    #[serde(default = "default_subchannels")]
    pub subchannels_per_band: u32,
    #[serde(default = "default_slots")]
    pub slots_per_frame: u32,
    #[serde(default = "default_frames")]
    pub frames: u32,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_path_loss")]
    pub path_loss: PathLossModel,
    /// Log-normal shadowing spread; accepts "8 dB" in config files.
    #[serde(
        default = "default_sigma_db",
        deserialize_with = "crate::units::de_db"
    )]
    pub shadowing_sigma_db: f64,
    /// Utility floor in bit/s for the proportional-fair allocator.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Feed interference terms into SINR as raw gains without the
    /// per-subchannel power split (see channel::tile_rate).
    #[serde(default)]
    pub literal_interference: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config deserializes via field defaults")
    }
}

impl ScenarioConfig {
    /// Check every field and report all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.region.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.radio.validate() {
            problems.push(e.to_string());
        }
        if let BsSource::Synthetic { count1, count2, .. } = self.bs_source {
            if count1 + count2 == 0 {
                problems.push("bs_source: need at least one station".into());
            }
        }
        for (name, op) in [("operator1", self.operator1), ("operator2", self.operator2)] {
            if !(op.bandwidth >= 0.0) || !op.bandwidth.is_finite() {
                problems.push(format!("{name}.bandwidth: must be >= 0, got {}", op.bandwidth));
            }
            if !(op.users_per_cell >= 0.0) || !op.users_per_cell.is_finite() {
                problems.push(format!(
                    "{name}.users_per_cell: must be >= 0, got {}",
                    op.users_per_cell
                ));
            }
        }
        if self.operator1.bandwidth == 0.0 && self.operator2.bandwidth == 0.0 {
            problems.push("bandwidth: at least one operator needs spectrum".into());
        }
        for (name, v) in [
            ("subchannels_per_band", self.subchannels_per_band),
            ("slots_per_frame", self.slots_per_frame),
            ("frames", self.frames),
            ("runs", self.runs),
        ] {
            if v < 1 {
                problems.push(format!("{name}: must be >= 1"));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0) || !self.shadowing_sigma_db.is_finite() {
            problems.push("shadowing_sigma_db: must be >= 0".into());
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            problems.push("epsilon: must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(crate::error::Error::ConfigSchema { problems })
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding; stamped into reports so
    /// an output file identifies the exact configuration that produced it.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(&bytes);
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Subchannel counts of the two licensed bands.
    fn band_widths(&self) -> (u32, u32) {
        let c = self.subchannels_per_band;
        (
            if self.operator1.bandwidth > 0.0 { c } else { 0 },
            if self.operator2.bandwidth > 0.0 { c } else { 0 },
        )
    }
}

/// Throughput of one user in one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserThroughput {
    /// Subscription operator (who bills the user, not who serves).
    pub operator: u8,
    pub run: u32,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub throughput_bps: f64,
    pub fraction: f64,
}

/// Aggregated outcome of an experiment. Means are plain arithmetic means of
/// the per-user list (per operator and overall); the CDF pools every
/// (user, run) sample. `wall_secs` is measurement metadata and deliberately
/// excluded from serialization so identical inputs give identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub strategy: Strategy,
    pub layout_source: String,
    pub config_sha256: String,
    pub seed: u64,
    pub per_user: Vec<UserThroughput>,
    pub op_mean_bps: [Option<f64>; 2],
    pub overall_mean_bps: f64,
    pub cdf: Vec<CdfPoint>,
    #[serde(skip)]
    pub wall_secs: f64,
}

/// One line of a strategy comparison; `operator` None means all users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub strategy: Strategy,
    pub operator: Option<u8>,
    pub mean_bps: f64,
    pub gain_vs_nocoop_pct: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub nocoop: ThroughputReport,
    pub flexroam: ThroughputReport,
    pub merger: ThroughputReport,
    pub rows: Vec<GainRow>,
}

/// One scheduler invocation: the stations allowed to transmit (with their
/// subchannel permissions already set) and that band's subchannel width.
struct Pass {
    stations: Vec<BaseStation>,
    w_c: f64,
}

/// Scheduler passes for one strategy. NoCoop and FlexRoam run each licensed
/// band separately; Merger runs one global pass over the pooled band with
/// every subchannel carrying W_total / C_total.
fn passes_for(config: &ScenarioConfig, layout: &[BaseStation], strategy: Strategy) -> Vec<Pass> {
    let (c1, c2) = config.band_widths();
    let c_total = c1 + c2;
    match strategy {
        Strategy::Merger => {
            let stations: Vec<BaseStation> = layout
                .iter()
                .map(|b| BaseStation {
                    subchannels: SubchannelRange { first: 0, count: c_total },
                    ..*b
                })
                .collect();
            let w_c =
                (config.operator1.bandwidth + config.operator2.bandwidth) / c_total as f64;
            vec![Pass { stations, w_c }]
        }
        Strategy::NoCoop | Strategy::FlexRoam => {
            let mut passes = Vec::new();
            for (op, first, count, w) in [
                (1u8, 0, c1, config.operator1.bandwidth),
                (2u8, c1, c2, config.operator2.bandwidth),
            ] {
                if count == 0 {
                    continue;
                }
                let stations: Vec<BaseStation> = layout
                    .iter()
                    .filter(|b| b.operator == op)
                    .map(|b| BaseStation {
                        subchannels: SubchannelRange { first, count },
                        ..*b
                    })
                    .collect();
                if stations.is_empty() {
                    continue;
                }
                passes.push(Pass {
                    stations,
                    w_c: w / count as f64,
                });
            }
            passes
        }
    }
}

fn resolve_layout(config: &ScenarioConfig) -> Result<(Vec<BaseStation>, String)> {
    match &config.bs_source {
        BsSource::Synthetic { count1, count2, mode } => {
            let layout = synthesize_layout((*count1, *count2), &config.region, config.seed, *mode)?;
            Ok((layout, format!("synthetic:{count1}+{count2}")))
        }
        BsSource::File { path } => {
            let layout = crate::ingest::load_bs_csv(path)?;
            if layout.is_empty() {
                return Err(invalid("bs_source", format!("{} holds no stations", path.display())));
            }
            Ok((layout, path.display().to_string()))
        }
    }
}

struct RunOutput {
    operators: Vec<u8>,
    /// Indexed [strategy][user]: frame-averaged throughput, bit/s.
    throughput: Vec<Vec<f64>>,
}

fn simulate_run(
    config: &ScenarioConfig,
    layout: &[BaseStation],
    strategies: &[Strategy],
    passes: &[Vec<Pass>],
    run: u32,
) -> Result<RunOutput> {
    let users0 = deploy_users(
        (config.operator1.users_per_cell, config.operator2.users_per_cell),
        layout,
        &config.region,
        config.seed,
        run,
    )?;
    if users0.is_empty() {
        return Err(invalid("users_per_cell", "scenario deploys no users"));
    }
    let statics = ChannelStatics::build(
        layout,
        &users0,
        config.path_loss,
        config.radio.path_loss_exponent,
        config.shadowing_sigma_db,
        config.seed,
        run,
    );

    let mut assoc: Vec<Vec<User>> = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut users = users0.clone();
        associate(&mut users, layout, strategy, &statics)?;
        assoc.push(users);
    }

    let (c1, c2) = config.band_widths();
    let c_total = (c1 + c2) as usize;
    let t_slots = config.slots_per_frame as usize;
    let n_users = users0.len();
    let mut acc = vec![vec![0.0f64; n_users]; strategies.len()];

    for frame in 0..config.frames {
        let real = draw_channel(&statics, c_total, config.seed, run, frame);
        for (s_idx, strategy_passes) in passes.iter().enumerate() {
            for pass in strategy_passes {
                let params = AllocParams {
                    t_slots,
                    c_total,
                    w_c: pass.w_c,
                    epsilon: config.epsilon,
                    literal_interference: config.literal_interference,
                };
                let state =
                    allocate_frame(&pass.stations, &assoc[s_idx], &real, &config.radio, &params);
                for (m, a) in acc[s_idx].iter_mut().enumerate() {
                    *a += state.final_rate(m) / t_slots as f64;
                }
            }
        }
    }

    let f = config.frames as f64;
    for per_strategy in &mut acc {
        for v in per_strategy.iter_mut() {
            *v /= f;
        }
    }
    Ok(RunOutput {
        operators: users0.iter().map(|u| u.operator).collect(),
        throughput: acc,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Quantile-spaced empirical CDF points over the report's pooled per-user
/// throughputs; always ends at (max, 1.0).
pub fn emit_cdf(report: &ThroughputReport, n_points: usize) -> Result<Vec<CdfPoint>> {
    if report.per_user.is_empty() {
        return Err(crate::error::Error::EmptyReport);
    }
    if n_points < 1 {
        return Err(invalid("n_points", "must be >= 1"));
    }
    let mut sorted: Vec<f64> = report.per_user.iter().map(|u| u.throughput_bps).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut out = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let p = if n_points == 1 { 1.0 } else { k as f64 / (n_points - 1) as f64 };
        let x = quantile(&sorted, p);
        let below = sorted.partition_point(|&v| v <= x);
        out.push(CdfPoint {
            throughput_bps: x,
            fraction: below as f64 / n,
        });
    }
    Ok(out)
}

fn run_strategies(
    config: &ScenarioConfig,
    strategies: &[Strategy],
) -> Result<Vec<ThroughputReport>> {
    config.validate()?;
    let start = Instant::now();
    let (layout, layout_source) = resolve_layout(config)?;
    let passes: Vec<Vec<Pass>> = strategies
        .iter()
        .map(|&s| passes_for(config, &layout, s))
        .collect();

    let outputs: Result<Vec<RunOutput>> = (0..config.runs)
        .into_par_iter()
        .map(|run| simulate_run(config, &layout, strategies, &passes, run))
        .collect();
    let outputs = outputs?;
    let digest = config.digest();
    let wall = start.elapsed().as_secs_f64();

    let mut reports = Vec::with_capacity(strategies.len());
    for (s_idx, &strategy) in strategies.iter().enumerate() {
        let mut per_user = Vec::new();
        for (run, out) in outputs.iter().enumerate() {
            for (m, &op) in out.operators.iter().enumerate() {
                per_user.push(UserThroughput {
                    operator: op,
                    run: run as u32,
                    throughput_bps: out.throughput[s_idx][m],
                });
            }
        }
        let op_mean_bps = [1u8, 2].map(|op| {
            mean(
                per_user
                    .iter()
                    .filter(|u| u.operator == op)
                    .map(|u| u.throughput_bps),
            )
        });
        let overall_mean_bps =
            mean(per_user.iter().map(|u| u.throughput_bps)).expect("at least one user");
        let mut report = ThroughputReport {
            strategy,
            layout_source: layout_source.clone(),
            config_sha256: digest.clone(),
            seed: config.seed,
            per_user,
            op_mean_bps,
            overall_mean_bps,
            cdf: Vec::new(),
            wall_secs: wall,
        };
        report.cdf = emit_cdf(&report, 101)?;
        reports.push(report);
    }
    Ok(reports)
}

/// Run the configured strategy end to end.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ThroughputReport> {
    let mut reports = run_strategies(config, &[config.strategy])?;
    Ok(reports.pop().expect("one strategy in, one report out"))
}

/// Run all three strategies under common random numbers and tabulate
/// per-operator and overall gains relative to NoCoop.
pub fn compare_strategies(config: &ScenarioConfig) -> Result<StrategyComparison> {
    let mut reports = run_strategies(config, &Strategy::ALL)?;
    let merger = reports.pop().expect("merger report");
    let flexroam = reports.pop().expect("flexroam report");
    let nocoop = reports.pop().expect("nocoop report");

    let mut rows = Vec::new();
    for report in [&nocoop, &flexroam, &merger] {
        let entries: [(Option<u8>, Option<f64>, Option<f64>); 3] = [
            (None, Some(report.overall_mean_bps), Some(nocoop.overall_mean_bps)),
            (Some(1), report.op_mean_bps[0], nocoop.op_mean_bps[0]),
            (Some(2), report.op_mean_bps[1], nocoop.op_mean_bps[1]),
        ];
        for (operator, mean_bps, base) in entries {
            let Some(mean_bps) = mean_bps else { continue };
            let gain_vs_nocoop_pct = match base {
                Some(b) if b > 0.0 => Some(100.0 * (mean_bps / b - 1.0)),
                _ => None,
            };
            rows.push(GainRow {
                strategy: report.strategy,
                operator,
                mean_bps,
                gain_vs_nocoop_pct,
            });
        }
    }
    Ok(StrategyComparison {
        nocoop,
        flexroam,
        merger,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp1};

    fn tiny_config() -> ScenarioConfig {
        ScenarioConfig {
            region: Region { width: 4000.0, height: 4000.0 },
            bs_source: BsSource::Synthetic {
                count1: 3,
                count2: 2,
                mode: LayoutMode::Uniform,
            },
            operator1: OperatorScenario { bandwidth: 10e6, users_per_cell: 3.0 },
            operator2: OperatorScenario { bandwidth: 10e6, users_per_cell: 3.0 },
            radio: RadioParams {
                tx_power: 39.81,
                noise_density: 3.98e-21,
                path_loss_exponent: 3.76,
            },
            subchannels_per_band: 4,
            slots_per_frame: 5,
            frames: 2,
            runs: 2,
            strategy: Strategy::NoCoop,
            seed: 424242,
            path_loss: PathLossModel::PureExponent,
            shadowing_sigma_db: 8.0,
            epsilon: 1.0,
            literal_interference: false,
        }
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let cfg = tiny_config();
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.config_sha256, cfg.digest());
        assert!(a.per_user.len() == 2 * (9 + 6));
    }

    #[test]
    fn report_means_are_plain_averages_and_cdf_is_monotone() {
        let cfg = tiny_config();
        let rep = run_scenario(&cfg).unwrap();
        let direct =
            rep.per_user.iter().map(|u| u.throughput_bps).sum::<f64>() / rep.per_user.len() as f64;
        assert!((rep.overall_mean_bps - direct).abs() < 1e-9);
        for op in [1u8, 2] {
            let vals: Vec<f64> = rep
                .per_user
                .iter()
                .filter(|u| u.operator == op)
                .map(|u| u.throughput_bps)
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((rep.op_mean_bps[(op - 1) as usize].unwrap() - m).abs() < 1e-9);
        }
        let mut last = CdfPoint { throughput_bps: f64::NEG_INFINITY, fraction: 0.0 };
        for p in &rep.cdf {
            assert!(p.throughput_bps >= last.throughput_bps);
            assert!(p.fraction >= last.fraction);
            assert!(p.fraction <= 1.0);
            last = *p;
        }
        assert_eq!(last.fraction, 1.0);
    }

    #[test]
    fn pooling_strategies_order_the_overall_means() {
        let mut cfg = tiny_config();
        cfg.bs_source = BsSource::Synthetic {
            count1: 6,
            count2: 5,
            mode: LayoutMode::Uniform,
        };
        cfg.region = Region { width: 8000.0, height: 8000.0 };
        cfg.operator1.users_per_cell = 12.0;
        cfg.operator2.users_per_cell = 12.0;
        cfg.subchannels_per_band = 8;
        cfg.slots_per_frame = 10;
        cfg.frames = 3;
        cfg.runs = 2;
        let cmp = compare_strategies(&cfg).unwrap();
        let n = cmp.nocoop.overall_mean_bps;
        let f = cmp.flexroam.overall_mean_bps;
        let m = cmp.merger.overall_mean_bps;
        assert!(n > 0.0);
        assert!(f >= n, "flexroam {f} < nocoop {n}");
        assert!(m > f, "merger {m} <= flexroam {f}");

        // Comparison rows agree with the reports they summarize.
        for row in &cmp.rows {
            if row.operator.is_none() && row.strategy == Strategy::Merger {
                assert!((row.mean_bps - m).abs() < 1e-9);
                let gain = row.gain_vs_nocoop_pct.unwrap();
                assert!((gain - 100.0 * (m / n - 1.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_second_operator_makes_strategies_identical() {
        let mut cfg = tiny_config();
        cfg.bs_source = BsSource::Synthetic {
            count1: 4,
            count2: 0,
            mode: LayoutMode::Uniform,
        };
        cfg.operator2 = OperatorScenario { bandwidth: 0.0, users_per_cell: 0.0 };
        let cmp = compare_strategies(&cfg).unwrap();
        let a: Vec<f64> = cmp.nocoop.per_user.iter().map(|u| u.throughput_bps).collect();
        let b: Vec<f64> = cmp.flexroam.per_user.iter().map(|u| u.throughput_bps).collect();
        let c: Vec<f64> = cmp.merger.per_user.iter().map(|u| u.throughput_bps).collect();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // And the one-strategy entry point sees the same numbers under CRN.
        let solo = run_scenario(&cfg).unwrap();
        let d: Vec<f64> = solo.per_user.iter().map(|u| u.throughput_bps).collect();
        assert_eq!(a, d);
    }

    #[test]
    fn single_link_matches_direct_fading_average() {
        let mut cfg = tiny_config();
        cfg.bs_source = BsSource::Synthetic {
            count1: 1,
            count2: 0,
            mode: LayoutMode::Uniform,
        };
        cfg.operator1 = OperatorScenario { bandwidth: 10e6, users_per_cell: 1.0 };
        cfg.operator2 = OperatorScenario { bandwidth: 0.0, users_per_cell: 0.0 };
        cfg.subchannels_per_band = 32;
        cfg.slots_per_frame = 10;
        cfg.frames = 800;
        cfg.runs = 1;
        cfg.shadowing_sigma_db = 0.0;
        let rep = run_scenario(&cfg).unwrap();
        assert_eq!(rep.per_user.len(), 1);
        let sim = rep.per_user[0].throughput_bps;

        // Rebuild the run's static gain and average the Shannon rate over
        // the fading law directly: 32 subchannels, each P/32 transmit power
        // on W/32 bandwidth.
        let layout = synthesize_layout((1, 0), &cfg.region, cfg.seed, LayoutMode::Uniform).unwrap();
        let users = deploy_users((1.0, 0.0), &layout, &cfg.region, cfg.seed, 0).unwrap();
        let statics = ChannelStatics::build(
            &layout,
            &users,
            cfg.path_loss,
            cfg.radio.path_loss_exponent,
            0.0,
            cfg.seed,
            0,
        );
        let g = statics.static_gain(0, 0);
        let w_c = 10e6 / 32.0;
        let p_c = cfg.radio.tx_power / 32.0;
        let n_w = cfg.radio.noise_density * w_c;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(909);
        let mut acc = 0.0;
        let draws = 400_000;
        for _ in 0..draws {
            let fade: f64 = Exp1.sample(&mut rng);
            acc += w_c * (p_c * g * fade / n_w).ln_1p() / std::f64::consts::LN_2;
        }
        let direct = 32.0 * acc / draws as f64;
        let rel = (sim - direct).abs() / direct;
        assert!(rel < 0.01, "sim {sim} vs direct {direct} (rel {rel})");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = tiny_config();
        cfg.runs = 0;
        assert!(run_scenario(&cfg).is_err());

        let mut cfg = tiny_config();
        cfg.operator1.bandwidth = 0.0;
        cfg.operator2.bandwidth = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.region = Region { width: -1.0, height: 1.0 };
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.operator2.users_per_cell = f64::NAN;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cdf_examples() {
        let one = ThroughputReport {
            strategy: Strategy::NoCoop,
            layout_source: "test".into(),
            config_sha256: String::new(),
            seed: 0,
            per_user: vec![UserThroughput { operator: 1, run: 0, throughput_bps: 5e5 }],
            op_mean_bps: [Some(5e5), None],
            overall_mean_bps: 5e5,
            cdf: Vec::new(),
            wall_secs: 0.0,
        };
        let pts = emit_cdf(&one, 5).unwrap();
        for p in &pts {
            assert_eq!(p.throughput_bps, 5e5);
            assert_eq!(p.fraction, 1.0);
        }

        let mut many = one.clone();
        many.per_user = (0..100)
            .map(|i| UserThroughput { operator: 1, run: 0, throughput_bps: 1e3 * i as f64 })
            .collect();
        let pts = emit_cdf(&many, 11).unwrap();
        assert_eq!(pts.last().unwrap().fraction, 1.0);
        assert_eq!(pts.last().unwrap().throughput_bps, 99e3);
        // Quantile round-trip: each emitted abscissa sits within one sample
        // of the direct order statistic.
        let sorted: Vec<f64> = (0..100).map(|i| 1e3 * i as f64).collect();
        for (k, p) in pts.iter().enumerate() {
            let target = quantile(&sorted, k as f64 / 10.0);
            assert!((p.throughput_bps - target).abs() <= 1e3 + 1e-9);
        }

        let mut empty = one.clone();
        empty.per_user.clear();
        assert!(emit_cdf(&empty, 5).is_err());
    }
}
