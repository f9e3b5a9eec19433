//! Ergodic-rate and throughput formulas for two pooling operators, evaluated
//! by deterministic quadrature.
//!
//! The downlink model: base stations of operator i form an independent
//! Poisson point process of density `lambda_i`, every link suffers unit-mean
//! Rayleigh power fading, path loss is `r^-alpha`, and a user attaches to its
//! nearest eligible base station. The fading-averaged spectral rate
//! `E[ln(1 + SINR)]` then reduces, through the standard
//! `E[ln(1+X)] = int P(X > e^t - 1) dt` device and the PPP probability
//! generating functional, to a double integral
//!
//! ```text
//! R = int_0^inf H(beta(t)) / A(t) dt
//! A(t)    = 1 + (lambda_I / lambda_S) * rho(t, alpha)
//! beta(t) = (N0 w (e^t - 1) / P_t) * (pi lambda_S A(t))^(-alpha/2)
//! H(b)    = int_0^inf exp(-v - b v^(alpha/2)) dv
//! ```
//!
//! where `lambda_S` is the density of candidate serving stations and
//! `lambda_I` the density of co-channel interferers. No cooperation is
//! `lambda_S = lambda_I = lambda_i`; pooled infrastructure serves from the
//! superposed process (`lambda_S = lambda_1 + lambda_2`) while interference
//! stays on the serving operator's band (`lambda_I = lambda_i`); a full
//! merger is a single virtual operator with summed density and bandwidth.
//! `rho(t, alpha)` is the interference kernel computed by
//! [`interference_integral`].

use crate::error::{invalid, Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};

/// One operator's deployment density, licensed bandwidth, and subscriber
/// density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    /// Base stations per square meter.
    pub bs_density: f64,
    /// Licensed bandwidth in Hz.
    pub bandwidth: f64,
    /// Subscribers per square meter.
    pub user_density: f64,
}

impl OperatorParams {
    /// Full validation for contexts that need a real operator: positive
    /// densities and at least as many users as base stations.
    pub fn validate(&self) -> Result<()> {
        if !(self.bs_density > 0.0) || !self.bs_density.is_finite() {
            return Err(invalid("bs_density", format!("must be > 0, got {}", self.bs_density)));
        }
        if !(self.bandwidth >= 0.0) || !self.bandwidth.is_finite() {
            return Err(invalid("bandwidth", format!("must be >= 0, got {}", self.bandwidth)));
        }
        if !(self.user_density > 0.0) || !self.user_density.is_finite() {
            return Err(invalid(
                "user_density",
                format!("must be > 0, got {}", self.user_density),
            ));
        }
        if self.user_density < self.bs_density {
            return Err(invalid(
                "user_density",
                format!(
                    "model assumes at least one user per cell on average \
                     (user_density {} < bs_density {})",
                    self.user_density, self.bs_density
                ),
            ));
        }
        Ok(())
    }

    /// Relaxed validation for pooling entry points, which accept one operator
    /// degenerating to zero density / zero bandwidth as a documented limit.
    fn validate_degenerate_ok(&self) -> Result<()> {
        if !(self.bs_density >= 0.0) || !self.bs_density.is_finite() {
            return Err(invalid("bs_density", format!("must be >= 0, got {}", self.bs_density)));
        }
        if !(self.bandwidth >= 0.0) || !self.bandwidth.is_finite() {
            return Err(invalid("bandwidth", format!("must be >= 0, got {}", self.bandwidth)));
        }
        Ok(())
    }
}

/// Radio parameters shared by both operators. In config files the power
/// fields accept unit suffixes ("46 dBm", "-174 dBm/Hz"); bare numbers are
/// watts and W/Hz. Defaults are the reference-scenario values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Transmit power per base station, W.
    #[serde(
        default = "default_tx_power",
        deserialize_with = "crate::units::de_power"
    )]
    pub tx_power: f64,
    /// Noise power spectral density, W/Hz.
    #[serde(
        default = "default_noise_density",
        deserialize_with = "crate::units::de_noise_density"
    )]
    pub noise_density: f64,
    /// Path-loss exponent; the interference integrals diverge at or below 2.
    #[serde(default = "default_alpha")]
    pub path_loss_exponent: f64,
}

fn default_tx_power() -> f64 {
    crate::units::dbm_to_watts(46.0)
}

fn default_noise_density() -> f64 {
    crate::units::dbm_to_watts(-174.0)
}

fn default_alpha() -> f64 {
    3.76
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power: default_tx_power(),
            noise_density: default_noise_density(),
            path_loss_exponent: default_alpha(),
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return Err(invalid("tx_power", format!("must be > 0, got {}", self.tx_power)));
        }
        if !(self.noise_density >= 0.0) || !self.noise_density.is_finite() {
            return Err(invalid(
                "noise_density",
                format!("must be >= 0, got {}", self.noise_density),
            ));
        }
        if !(self.path_loss_exponent > 2.0) || !self.path_loss_exponent.is_finite() {
            return Err(invalid(
                "path_loss_exponent",
                format!("must be > 2, got {}", self.path_loss_exponent),
            ));
        }
        Ok(())
    }
}

/// The three cooperation strategies under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Each operator keeps its own stations and spectrum.
    NoCoop,
    /// Users may attach to either operator's stations; spectrum stays
    /// separate, so interference is confined to the serving operator's band.
    FlexRoam,
    /// One virtual operator: pooled stations and pooled spectrum.
    Merger,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::NoCoop, Strategy::FlexRoam, Strategy::Merger];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NoCoop => "nocoop",
            Strategy::FlexRoam => "flexroam",
            Strategy::Merger => "merger",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nocoop" | "no-coop" => Ok(Strategy::NoCoop),
            "flexroam" | "flex-roam" => Ok(Strategy::FlexRoam),
            "merger" => Ok(Strategy::Merger),
            other => Err(invalid(
                "strategy",
                format!("unknown strategy `{other}` (nocoop|flexroam|merger)"),
            )),
        }
    }
}

/// Tolerances for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-7,
            abs_tol: 0.0,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(invalid("abs_tol", format!("must be >= 0, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(invalid("max_subdivisions", "must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// A spectral rate and its bandwidth-weighted bit-rate equivalent.
///
/// `spectral_rate_nats` is the fading- and geometry-averaged
/// `E[ln(1+SINR)]` in nats/s/Hz (for pooled-infrastructure sharing, the
/// density-weighted mixture over the two operators). `throughput_bps`
/// applies each term's own bandwidth and the nats-to-bits conversion but not
/// yet the cell-to-user ratio; [`throughput`] multiplies that in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub spectral_rate_nats: f64,
    pub throughput_bps: f64,
    pub error_estimate: f64,
}

/// Interference kernel `rho(t, alpha)`.
///
/// For a user at distance r from its serving station, averaging the Rayleigh
/// fades of all interferers beyond r over a PPP of density `lambda` gives an
/// exclusion factor `exp(-pi lambda r^2 rho(t, alpha))` at SINR threshold
/// `e^t - 1`. Substituting `w = r / v` (v the interferer distance) turns the
/// defining tail integral into the finite form actually computed here:
///
/// ```text
/// rho(t, alpha) = int_0^1 2 m w^(alpha-3) / (1 + m w^alpha) dw,  m = e^t - 1
/// ```
///
/// For very large `m` the quadrature would have to chase a boundary layer at
/// `w ~ m^(-1/alpha)`, so the asymptotic expansion
/// `rho = m^(2/alpha) (T0 - z + z^(1+alpha/2)/(1+alpha/2)) `, with
/// `z = m^(-2/alpha)` and `T0 = (2 pi / alpha) / sin(2 pi / alpha)`, takes
/// over; its relative error is O(m^(-(2+alpha)/alpha)), far below the
/// quadrature tolerance at the switch point.
pub fn interference_integral(t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(invalid(
            "alpha",
            format!("interference integral requires alpha > 2, got {alpha}"),
        ));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let m = t.exp_m1();
    if m > ASYMPTOTE_SWITCH {
        return Ok(rho_asymptotic(ln_expm1(t), alpha));
    }
    let f = |w: f64| 2.0 * m * w.powf(alpha - 3.0) / (1.0 + m * w.powf(alpha));
    let est = quad::integrate(f, 0.0, 1.0, 1e-12, 1e-300, 400)?;
    Ok(est.value.max(0.0))
}

const ASYMPTOTE_SWITCH: f64 = 1e10;

/// Tail asymptote of the branch-point factor T0.
fn tail_constant(alpha: f64) -> f64 {
    let x = 2.0 * std::f64::consts::PI / alpha;
    x / x.sin()
}

/// ln(e^t - 1), stable for all t > 0.
fn ln_expm1(t: f64) -> f64 {
    if t > 30.0 {
        // e^t - 1 = e^t (1 - e^-t)
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// rho for large m, given ln(m); may legitimately overflow to infinity.
fn rho_asymptotic(ln_m: f64, alpha: f64) -> f64 {
    let t0 = tail_constant(alpha);
    let z = (-2.0 * ln_m / alpha).exp();
    let scale = (2.0 * ln_m / alpha).exp();
    scale * (t0 - z + z.powf(1.0 + alpha / 2.0) / (1.0 + alpha / 2.0))
}

/// Threshold in t beyond which the tail asymptote takes over from the table;
/// chosen so m = e^t - 1 crosses [`ASYMPTOTE_SWITCH`] exactly there.
fn switch_t() -> f64 {
    ASYMPTOTE_SWITCH.ln_1p()
}

/// Precomputed interference kernel on a refined grid.
///
/// Rate integrands evaluate `rho` at every quadrature node, so the kernel is
/// tabulated once per (alpha, tolerance) pair. Stored is the smooth ratio
/// `W(t) = rho(t) / (e^t - 1)` on a uniform grid over [0, t_switch]: W runs
/// from the exact limit 2/(alpha-2) at t = 0 down to O(m^(2/alpha - 1)) at
/// the switch point, with all t-derivatives bounded by O(W), so local
/// 6-point Lagrange interpolation converges like h^6. Beyond the switch the
/// closed-form tail asymptote is exact to ~1e-25 relative and needs no
/// table. The grid is doubled until the measured midpoint error is below a
/// tenth of the requested rate tolerance.
#[derive(Debug, Clone)]
pub struct RhoTable {
    alpha: f64,
    t_max: f64,
    values: Vec<f64>,
}

impl RhoTable {
    pub fn build(alpha: f64, rel_tol: f64) -> Result<RhoTable> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("must be > 2, got {alpha}")));
        }
        let target = (rel_tol / 10.0).clamp(1e-12, 1e-3);
        let t_max = switch_t();
        let w0 = 2.0 / (alpha - 2.0);
        let mut n = 65usize;
        loop {
            let values: Vec<f64> = (0..n)
                .map(|i| Self::w_direct(alpha, i as f64 / (n - 1) as f64 * t_max))
                .collect::<Result<_>>()?;
            let table = RhoTable {
                alpha,
                t_max,
                values,
            };
            // Measure true interpolation error at the knot midpoints. Far
            // out on the grid W is orders of magnitude below W(0) and its
            // own relative error barely moves the rate integral, so the
            // error scale gets a floor proportional to W(0).
            let mut worst: f64 = 0.0;
            for i in 0..n - 1 {
                let t = (i as f64 + 0.5) / (n - 1) as f64 * t_max;
                let exact = Self::w_direct(alpha, t)?;
                let got = table.w_interp(t);
                let scale = exact.abs().max(1e-3 * w0);
                worst = worst.max((got - exact).abs() / scale);
            }
            if worst <= target {
                return Ok(table);
            }
            if n >= 8193 {
                return Err(Error::QuadratureDidNotConverge {
                    best: worst,
                    error_estimate: worst,
                    tolerance: target,
                });
            }
            n = 2 * n - 1;
        }
    }

    /// W(t) = rho(t) / (e^t - 1) from the defining integral.
    fn w_direct(alpha: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(2.0 / (alpha - 2.0));
        }
        Ok(interference_integral(t, alpha)? / t.exp_m1())
    }

    /// Local 6-point Lagrange interpolation on the uniform grid.
    fn w_interp(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = self.t_max / (n - 1) as f64;
        let pos = t / h;
        let center = pos.floor() as isize;
        let first = (center - 2).clamp(0, n as isize - 6) as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..6 {
            let xk = (first + k) as f64;
            let dx = pos - xk;
            if dx == 0.0 {
                return self.values[first + k];
            }
            // Barycentric weights for 6 equispaced nodes: (-1)^k C(5, k).
            let w = [1.0, -5.0, 10.0, -10.0, 5.0, -1.0][k] / dx;
            num += w * self.values[first + k];
            den += w;
        }
        (num / den).max(0.0)
    }

    /// rho(t) via the table (or the tail asymptote past the switch point);
    /// infinite results are legitimate for enormous t and are handled by the
    /// rate integrand.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.t_max {
            return rho_asymptotic(ln_expm1(t), self.alpha);
        }
        self.w_interp(t) * t.exp_m1()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Noise integral H(beta) = int_0^inf exp(-v - beta v^(alpha/2)) dv.
///
/// Substituting v = s z / (1 - z)... the integration variable is rescaled by
/// s = min(1, beta^(-2/alpha)) so the boundary layer of a large beta lands
/// mid-interval instead of vanishing below the first quadrature node.
fn h_integral(beta: f64, alpha: f64, rel_tol: f64) -> quad::QuadEstimate {
    if beta <= 0.0 {
        return quad::QuadEstimate { value: 1.0, error: 0.0 };
    }
    if !beta.is_finite() {
        return quad::QuadEstimate { value: 0.0, error: 0.0 };
    }
    let s = if beta > 1.0 { beta.powf(-2.0 / alpha) } else { 1.0 };
    // beta * s^(alpha/2) <= 1 by construction
    let bs = beta * s.powf(alpha / 2.0);
    let f = |y: f64| {
        if y >= 1.0 {
            return 0.0;
        }
        let z = y / (1.0 - y);
        let e = -s * z - bs * z.powf(alpha / 2.0);
        e.exp() * s / ((1.0 - y) * (1.0 - y))
    };
    match quad::integrate(f, 0.0, 1.0, rel_tol, 1e-300, 200) {
        Ok(est) => est,
        // The noise factor sits inside an outer integrand which cannot
        // propagate errors; the best estimate with its (small) residual is
        // the right degradation.
        Err(Error::QuadratureDidNotConverge { best, error_estimate, .. }) => quad::QuadEstimate {
            value: best,
            error: error_estimate,
        },
        Err(_) => unreachable!("interval is fixed and finite"),
    }
}

/// The reduced double integral for a generic (serving density, interferer
/// density, bandwidth) triple. This is the single evaluation path every
/// strategy funnels through.
fn rate_general(
    w: f64,
    lambda_serve: f64,
    lambda_interf: f64,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
    rho: &RhoTable,
) -> Result<quad::QuadEstimate> {
    let alpha = radio.path_loss_exponent;
    let q = lambda_interf / lambda_serve;
    let mu = radio.noise_density * w / radio.tx_power;
    // beta(t) = mu m (pi lambda_S)^(-a/2) A^(-a/2); assembled in log space
    // because m alone overflows f64 long before the integrand is negligible.
    let ln_pref = if mu > 0.0 {
        mu.ln() - 0.5 * alpha * (std::f64::consts::PI * lambda_serve).ln()
    } else {
        f64::NEG_INFINITY
    };
    let inner_tol = (quad_cfg.rel_tol / 10.0).clamp(1e-13, 1e-4);

    let integrand = |u: f64| {
        if u <= 0.0 {
            return 1.0;
        }
        if u >= 1.0 {
            return 0.0;
        }
        let t = u / (1.0 - u);
        let a = 1.0 + q * rho.eval(t);
        // Jacobian of t = u / (1 - u)
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        if !a.is_finite() {
            return 0.0;
        }
        if mu == 0.0 {
            return jac / a;
        }
        let ln_beta = ln_pref + ln_expm1(t) - 0.5 * alpha * a.ln();
        let h = h_integral(ln_beta.exp(), alpha, inner_tol);
        jac * h.value / a
    };

    quad::integrate(
        integrand,
        0.0,
        1.0,
        quad_cfg.rel_tol,
        quad_cfg.abs_tol,
        quad_cfg.max_subdivisions,
    )
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Average ergodic spectral rate with no cooperation: the user attaches to
/// the nearest own-operator station and every other station of that operator
/// interferes on the full band `w`.
pub fn rate_nocoop(
    w: f64,
    lambda: f64,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
) -> Result<RateResult> {
    radio.validate()?;
    quad_cfg.validate()?;
    if !(w > 0.0) || !w.is_finite() {
        return Err(invalid("w", format!("bandwidth must be > 0, got {w}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("density must be > 0, got {lambda}")));
    }
    let rho = RhoTable::build(radio.path_loss_exponent, quad_cfg.rel_tol)?;
    rate_nocoop_with_table(w, lambda, radio, quad_cfg, &rho)
}

fn rate_nocoop_with_table(
    w: f64,
    lambda: f64,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
    rho: &RhoTable,
) -> Result<RateResult> {
    let est = rate_general(w, lambda, lambda, radio, quad_cfg, rho)?;
    Ok(RateResult {
        spectral_rate_nats: est.value,
        throughput_bps: w * est.value / LN_2,
        error_estimate: est.error,
    })
}

/// Average ergodic rate with shared infrastructure and separate spectrum.
///
/// A user attaches to the nearest station of either operator, so serving
/// distances follow the superposed density; interference arrives only on the
/// serving operator's own band. The returned spectral rate is the
/// density-weighted mixture of the two conditional rates, and the
/// bandwidth-weighted throughput keeps each term's own `W_i`.
pub fn rate_flexroam(
    op1: &OperatorParams,
    op2: &OperatorParams,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
) -> Result<RateResult> {
    radio.validate()?;
    quad_cfg.validate()?;
    op1.validate_degenerate_ok()?;
    op2.validate_degenerate_ok()?;
    let total = op1.bs_density + op2.bs_density;
    if !(total > 0.0) {
        return Err(invalid("bs_density", "need lambda_1 + lambda_2 > 0".to_string()));
    }
    let rho = RhoTable::build(radio.path_loss_exponent, quad_cfg.rel_tol)?;
    let mut rate_mix = 0.0;
    let mut thr_mix = 0.0;
    let mut err_mix = 0.0;
    for op in [op1, op2] {
        if op.bs_density == 0.0 {
            continue;
        }
        let est = rate_general(op.bandwidth, total, op.bs_density, radio, quad_cfg, &rho)?;
        let weight = op.bs_density / total;
        rate_mix += weight * est.value;
        thr_mix += weight * op.bandwidth * est.value / LN_2;
        err_mix += weight * est.error;
    }
    Ok(RateResult {
        spectral_rate_nats: rate_mix,
        throughput_bps: thr_mix,
        error_estimate: err_mix,
    })
}

/// Average ergodic rate after a full merger: by definition the no-cooperation
/// rate of the combined operator, so this delegates and is bit-identical to
/// `rate_nocoop(w1 + w2, lambda_1 + lambda_2)`.
pub fn rate_merger(
    op1: &OperatorParams,
    op2: &OperatorParams,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
) -> Result<RateResult> {
    op1.validate_degenerate_ok()?;
    op2.validate_degenerate_ok()?;
    rate_nocoop(
        op1.bandwidth + op2.bandwidth,
        op1.bs_density + op2.bs_density,
        radio,
        quad_cfg,
    )
}

/// Average user throughput in bit/s for one operator's subscribers.
///
/// Without cooperation each subscriber shares its cell with `eta_i/lambda_i`
/// users on average; with pooling both operators' users share the combined
/// deployment, giving the factor `(lambda_1+lambda_2)/(eta_1+eta_2)`, equal
/// for both operators.
pub fn throughput(
    strategy: Strategy,
    op1: &OperatorParams,
    op2: &OperatorParams,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
    for_operator: u8,
) -> Result<RateResult> {
    if for_operator != 1 && for_operator != 2 {
        return Err(invalid("for_operator", format!("must be 1 or 2, got {for_operator}")));
    }
    match strategy {
        Strategy::NoCoop => {
            let op = if for_operator == 1 { op1 } else { op2 };
            op.validate()?;
            let r = rate_nocoop(op.bandwidth, op.bs_density, radio, quad_cfg)?;
            let share = op.bs_density / op.user_density;
            Ok(scale_throughput(r, share))
        }
        Strategy::FlexRoam | Strategy::Merger => {
            let eta = op1.user_density + op2.user_density;
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(invalid("user_density", "need eta_1 + eta_2 > 0".to_string()));
            }
            let r = match strategy {
                Strategy::FlexRoam => rate_flexroam(op1, op2, radio, quad_cfg)?,
                _ => rate_merger(op1, op2, radio, quad_cfg)?,
            };
            let share = (op1.bs_density + op2.bs_density) / eta;
            Ok(scale_throughput(r, share))
        }
    }
}

fn scale_throughput(r: RateResult, share: f64) -> RateResult {
    RateResult {
        spectral_rate_nats: r.spectral_rate_nats,
        throughput_bps: r.throughput_bps * share,
        error_estimate: r.error_estimate * share,
    }
}

/// Which of operator 2's parameters a sweep scales relative to operator 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    BsDensity,
    UserDensity,
    Bandwidth,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bs-density" | "bs_density" | "lambda" => Ok(SweepAxis::BsDensity),
            "user-density" | "user_density" | "eta" => Ok(SweepAxis::UserDensity),
            "bandwidth" | "w" => Ok(SweepAxis::Bandwidth),
            other => Err(invalid(
                "axis",
                format!("unknown sweep axis `{other}` (bs-density|user-density|bandwidth)"),
            )),
        }
    }
}

/// One (ratio, strategy, operator) cell of a sweep table. Failed cells carry
/// the error text so a sweep never aborts part-way.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub strategy: Strategy,
    pub operator: u8,
    pub result: std::result::Result<RateResult, String>,
}

/// Evaluate the chosen strategies on a grid of operator-2 to operator-1
/// parameter ratios. Rows arrive in (grid, strategy, operator) order; pooled
/// strategies emit the same value for both operators.
pub fn sweep(
    strategies: &[Strategy],
    op1: &OperatorParams,
    op2: &OperatorParams,
    radio: &RadioParams,
    quad_cfg: &QuadratureConfig,
    axis: SweepAxis,
    grid: &[f64],
) -> Vec<SweepRow> {
    use rayon::prelude::*;

    let per_point: Vec<Vec<SweepRow>> = grid
        .par_iter()
        .map(|&ratio| {
            let mut rows = Vec::with_capacity(strategies.len() * 2);
            if !(ratio > 0.0) || !ratio.is_finite() {
                for &strategy in strategies {
                    for operator in [1u8, 2u8] {
                        rows.push(SweepRow {
                            ratio,
                            strategy,
                            operator,
                            result: Err(format!("non-positive ratio {ratio}")),
                        });
                    }
                }
                return rows;
            }
            let mut swept = *op2;
            match axis {
                SweepAxis::BsDensity => swept.bs_density = ratio * op1.bs_density,
                SweepAxis::UserDensity => swept.user_density = ratio * op1.user_density,
                SweepAxis::Bandwidth => swept.bandwidth = ratio * op1.bandwidth,
            }
            for &strategy in strategies {
                match strategy {
                    Strategy::NoCoop => {
                        for operator in [1u8, 2u8] {
                            let result = throughput(strategy, op1, &swept, radio, quad_cfg, operator)
                                .map_err(|e| e.to_string());
                            rows.push(SweepRow {
                                ratio,
                                strategy,
                                operator,
                                result,
                            });
                        }
                    }
                    Strategy::FlexRoam | Strategy::Merger => {
                        let shared = throughput(strategy, op1, &swept, radio, quad_cfg, 1)
                            .map_err(|e| e.to_string());
                        for operator in [1u8, 2u8] {
                            rows.push(SweepRow {
                                ratio,
                                strategy,
                                operator,
                                result: shared.clone(),
                            });
                        }
                    }
                }
            }
            rows
        })
        .collect();

    per_point.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_radio() -> RadioParams {
        RadioParams {
            tx_power: crate::units::dbm_to_watts(46.0),
            noise_density: crate::units::dbm_to_watts(-174.0),
            path_loss_exponent: 3.76,
        }
    }

    fn table_op() -> OperatorParams {
        OperatorParams {
            bs_density: 4e-8,
            bandwidth: 1e7,
            user_density: 4e-6,
        }
    }

    /// Composite-Simpson evaluation of the interference kernel on the same
    /// substituted [0, 1] domain, entirely independent of the adaptive
    /// Gauss-Kronrod machinery.
    fn rho_simpson_oracle(t: f64, alpha: f64, intervals: usize) -> f64 {
        let m = t.exp_m1();
        let f = |w: f64| {
            if w == 0.0 {
                // limit is 0 for alpha > 3 (the only case the oracle needs)
                0.0
            } else {
                2.0 * m * w.powf(alpha - 3.0) / (1.0 + m * w.powf(alpha))
            }
        };
        let n = intervals * 2;
        let h = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            let w = i as f64 * h;
            acc += f(w) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn kernel_zero_threshold_is_zero() {
        assert_eq!(interference_integral(0.0, 3.76).unwrap(), 0.0);
    }

    #[test]
    fn kernel_closed_form_at_exponent_four() {
        // At alpha = 4 the kernel integrates to arctan in closed form;
        // with e^t - 1 = 1 the value is pi/4.
        let v = interference_integral(2f64.ln(), 4.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn kernel_matches_simpson_oracle() {
        let v = interference_integral(1.0, 3.76).unwrap();
        let oracle = rho_simpson_oracle(1.0, 3.76, 1 << 19);
        assert!(
            (v - oracle).abs() / oracle < 1e-8,
            "adaptive {v} vs simpson {oracle}"
        );
        // Frozen from an independent high-precision evaluation.
        assert!((v - 1.3913551663624468).abs() < 3e-9, "got {v:.12}");
    }

    #[test]
    fn kernel_rejects_divergent_exponent() {
        assert!(interference_integral(1.0, 2.0).is_err());
        assert!(interference_integral(1.0, 1.5).is_err());
        assert!(interference_integral(-0.5, 4.0).is_err());
    }

    #[test]
    fn kernel_monotone_in_threshold() {
        let mut last = 0.0;
        for i in 0..60 {
            let t = 0.1 * i as f64;
            let v = interference_integral(t, 3.76).unwrap();
            assert!(v >= last, "rho decreased at t={t}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let table = RhoTable::build(3.76, 1e-7).unwrap();
        for i in 1..40 {
            let t = 0.005 * (i * i) as f64; // 0.005 .. 7.6, log-ish spread
            let direct = interference_integral(t, 3.76).unwrap();
            let interp = table.eval(t);
            assert!(
                (interp - direct).abs() / direct.max(1e-6) < 1e-7,
                "t={t}: table {interp} direct {direct}"
            );
        }
        // Far tail: asymptote territory.
        let direct = interference_integral(150.0, 3.76).unwrap();
        let interp = table.eval(150.0);
        assert!((interp - direct).abs() / direct < 1e-6);
    }

    #[test]
    fn noise_integral_limits() {
        assert_eq!(h_integral(0.0, 3.76, 1e-10).value, 1.0);
        // Frozen from an independent high-precision evaluation.
        let h = h_integral(0.37, 3.76, 1e-11).value;
        assert!((h - 0.7048498962368853).abs() < 1e-8, "got {h}");
        // Huge beta: mass shrinks like Gamma(1+2/a) beta^(-2/a), stays finite.
        let h = h_integral(1e8, 3.76, 1e-10).value;
        assert!(h > 0.0 && h < 1e-3, "got {h}");
    }

    #[test]
    fn baseline_spectral_rate() {
        // Frozen from an independent high-precision evaluation of the
        // reduced double integral at the reference parameter set.
        let r = rate_nocoop(1e7, 4e-8, &table_radio(), &QuadratureConfig::default()).unwrap();
        assert!(
            (r.spectral_rate_nats - 1.339591653558778).abs() < 2e-6,
            "got {}",
            r.spectral_rate_nats
        );
        assert!(r.error_estimate < 1e-5);
        assert!((r.throughput_bps - 1e7 * r.spectral_rate_nats / LN_2).abs() < 1e-6);
    }

    #[test]
    fn interference_limited_rate_is_scale_free() {
        // With zero noise the SINR distribution does not depend on density
        // or bandwidth, so the rate must agree across a decade of density.
        let quad_cfg = QuadratureConfig::default();
        let radio = RadioParams {
            noise_density: 0.0,
            ..table_radio()
        };
        let a = rate_nocoop(1e7, 4e-8, &radio, &quad_cfg).unwrap();
        let b = rate_nocoop(5e6, 4e-7, &radio, &quad_cfg).unwrap();
        assert!(
            (a.spectral_rate_nats - b.spectral_rate_nats).abs()
                < 10.0 * quad_cfg.rel_tol * a.spectral_rate_nats
        );
        // Frozen noise-free reference value at this exponent.
        assert!((a.spectral_rate_nats - 1.3461179486882404).abs() < 2e-6);
    }

    #[test]
    fn interference_limited_rate_closed_form_exponent_four() {
        let radio = RadioParams {
            noise_density: 0.0,
            path_loss_exponent: 4.0,
            ..table_radio()
        };
        let r = rate_nocoop(1e7, 4e-8, &radio, &QuadratureConfig::default()).unwrap();
        // Frozen from an independent high-precision evaluation.
        assert!(
            (r.spectral_rate_nats - 1.4889876246658296).abs() < 2e-6,
            "got {}",
            r.spectral_rate_nats
        );
    }

    #[test]
    fn vanishing_bandwidth_approaches_noise_free_rate_from_below() {
        let quad_cfg = QuadratureConfig::default();
        let radio = table_radio();
        let noise_free = rate_nocoop(
            1e7,
            4e-8,
            &RadioParams {
                noise_density: 0.0,
                ..radio
            },
            &quad_cfg,
        )
        .unwrap()
        .spectral_rate_nats;
        let mut last = 0.0;
        for w in [1e7, 1e5, 1e3] {
            let r = rate_nocoop(w, 4e-8, &radio, &quad_cfg).unwrap().spectral_rate_nats;
            assert!(r < noise_free, "w={w}: {r} !< {noise_free}");
            assert!(r > last, "rate should grow as bandwidth (noise) shrinks");
            last = r;
        }
        assert!((noise_free - last) / noise_free < 1e-3);
    }

    #[test]
    fn rate_decreases_with_noise() {
        let quad_cfg = QuadratureConfig::default();
        let mut last = f64::INFINITY;
        for scale in [0.0, 1.0, 100.0, 10000.0] {
            let radio = RadioParams {
                noise_density: scale * crate::units::dbm_to_watts(-174.0),
                ..table_radio()
            };
            let r = rate_nocoop(1e7, 4e-8, &radio, &quad_cfg).unwrap().spectral_rate_nats;
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn pooled_infra_rate_baseline_and_symmetry() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let r12 = rate_flexroam(&op, &op, &table_radio(), &quad_cfg).unwrap();
        // Frozen from an independent high-precision evaluation.
        assert!(
            (r12.spectral_rate_nats - 1.9476988638185455).abs() < 2e-6,
            "got {}",
            r12.spectral_rate_nats
        );

        let lop = OperatorParams {
            bs_density: 2.5e-8,
            bandwidth: 7e6,
            user_density: 3e-6,
        };
        let a = rate_flexroam(&lop, &op, &table_radio(), &quad_cfg).unwrap();
        let b = rate_flexroam(&op, &lop, &table_radio(), &quad_cfg).unwrap();
        assert_eq!(a.spectral_rate_nats.to_bits(), b.spectral_rate_nats.to_bits());
        assert_eq!(a.throughput_bps.to_bits(), b.throughput_bps.to_bits());
    }

    #[test]
    fn pooled_infra_degenerates_to_single_operator() {
        let quad_cfg = QuadratureConfig::default();
        let zero = OperatorParams {
            bs_density: 0.0,
            bandwidth: 0.0,
            user_density: 0.0,
        };
        let r = rate_flexroam(&table_op(), &zero, &table_radio(), &quad_cfg).unwrap();
        let n = rate_nocoop(1e7, 4e-8, &table_radio(), &quad_cfg).unwrap();
        let tol = 10.0 * quad_cfg.rel_tol * n.spectral_rate_nats;
        assert!((r.spectral_rate_nats - n.spectral_rate_nats).abs() < tol);
    }

    #[test]
    fn merger_is_the_delegation_identity() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let lop = OperatorParams {
            bs_density: 1.7e-8,
            bandwidth: 6e6,
            user_density: 2e-6,
        };
        let m = rate_merger(&op, &lop, &table_radio(), &quad_cfg).unwrap();
        let n = rate_nocoop(1e7 + 6e6, 4e-8 + 1.7e-8, &table_radio(), &quad_cfg).unwrap();
        assert_eq!(m.spectral_rate_nats.to_bits(), n.spectral_rate_nats.to_bits());
        assert_eq!(m.throughput_bps.to_bits(), n.throughput_bps.to_bits());

        let zero = OperatorParams {
            bs_density: 0.0,
            bandwidth: 0.0,
            user_density: 0.0,
        };
        let m0 = rate_merger(&op, &zero, &table_radio(), &quad_cfg).unwrap();
        let n0 = rate_nocoop(1e7, 4e-8, &table_radio(), &quad_cfg).unwrap();
        assert_eq!(m0.spectral_rate_nats.to_bits(), n0.spectral_rate_nats.to_bits());
    }

    #[test]
    fn throughput_matches_reference_points() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let radio = table_radio();
        // eta = 100 lambda puts 100 users in the average cell.
        let n = throughput(Strategy::NoCoop, &op, &op, &radio, &quad_cfg, 1).unwrap();
        assert!((n.throughput_bps / 193.3e3 - 1.0).abs() < 0.01, "nocoop {}", n.throughput_bps);

        let op2 = OperatorParams {
            user_density: 0.8 * op.user_density,
            ..op
        };
        let n2 = throughput(Strategy::NoCoop, &op, &op2, &radio, &quad_cfg, 2).unwrap();
        assert!((n2.throughput_bps / 241.58e3 - 1.0).abs() < 0.01, "nocoop2 {}", n2.throughput_bps);

        let f = throughput(Strategy::FlexRoam, &op, &op2, &radio, &quad_cfg, 1).unwrap();
        let f2 = throughput(Strategy::FlexRoam, &op, &op2, &radio, &quad_cfg, 2).unwrap();
        assert_eq!(f.throughput_bps.to_bits(), f2.throughput_bps.to_bits());
        assert!((f.throughput_bps / 312.21e3 - 1.0).abs() < 0.01, "flex {}", f.throughput_bps);
    }

    #[test]
    fn throughput_scales_exactly_inversely_with_user_density() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let radio = table_radio();
        let base = throughput(Strategy::FlexRoam, &op, &op, &radio, &quad_cfg, 1).unwrap();
        for k in [2.0, 4.0, 8.0] {
            let scaled_op = OperatorParams {
                user_density: k * op.user_density,
                ..op
            };
            let scaled =
                throughput(Strategy::FlexRoam, &scaled_op, &scaled_op, &radio, &quad_cfg, 1)
                    .unwrap();
            // Exact for power-of-two factors: scaling by 2^-j commutes with
            // each of the two roundings involved.
            assert_eq!(
                scaled.throughput_bps.to_bits(),
                (base.throughput_bps / k).to_bits(),
                "k={k}"
            );
        }
    }

    #[test]
    fn throughput_rejects_bad_operator_index() {
        let e = throughput(
            Strategy::NoCoop,
            &table_op(),
            &table_op(),
            &table_radio(),
            &QuadratureConfig::default(),
            3,
        );
        assert!(e.is_err());
    }

    #[test]
    fn nocoop_rejects_degenerate_inputs() {
        let quad_cfg = QuadratureConfig::default();
        assert!(rate_nocoop(0.0, 4e-8, &table_radio(), &quad_cfg).is_err());
        assert!(rate_nocoop(1e7, 0.0, &table_radio(), &quad_cfg).is_err());
        let bad_radio = RadioParams {
            path_loss_exponent: 2.0,
            ..table_radio()
        };
        assert!(rate_nocoop(1e7, 4e-8, &bad_radio, &quad_cfg).is_err());
    }

    #[test]
    fn single_point_sweep_equals_direct_throughput() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let radio = table_radio();
        let rows = sweep(
            &[Strategy::NoCoop, Strategy::Merger],
            &op,
            &op,
            &radio,
            &quad_cfg,
            SweepAxis::UserDensity,
            &[1.0],
        );
        assert_eq!(rows.len(), 4);
        let direct = throughput(Strategy::NoCoop, &op, &op, &radio, &quad_cfg, 1).unwrap();
        let row = rows
            .iter()
            .find(|r| r.strategy == Strategy::NoCoop && r.operator == 1)
            .unwrap();
        let got = row.result.as_ref().unwrap();
        assert_eq!(got.throughput_bps.to_bits(), direct.throughput_bps.to_bits());
    }

    #[test]
    fn sweep_survives_bad_grid_points() {
        let quad_cfg = QuadratureConfig::default();
        let op = table_op();
        let rows = sweep(
            &[Strategy::NoCoop],
            &op,
            &op,
            &table_radio(),
            &quad_cfg,
            SweepAxis::BsDensity,
            &[0.5, -1.0, 1.5],
        );
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().filter(|r| r.result.is_err()).count() == 2);
        assert!(rows
            .iter()
            .filter(|r| (r.ratio - 0.5).abs() < 1e-12 || (r.ratio - 1.5).abs() < 1e-12)
            .all(|r| r.result.is_ok()));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }
}
