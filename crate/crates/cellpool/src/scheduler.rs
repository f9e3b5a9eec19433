//! Centralized greedy multi-cell OFDMA tile allocator.
//!
//! Each frame is a T x C grid of tiles per base station. Tiles are handed
//! out one (subchannel, slot) round at a time: stations take turns (fewest
//! tiles first), each proposing its best user for the tile, and a proposal
//! is accepted only if the log-utility gain of the proposing user strictly
//! exceeds the utility lost by already-scheduled co-channel users through
//! the extra interference. Utilities use U(R) = ln(eps + R) so the first
//! tile of an empty frame is always worth taking.

use crate::analytic::RadioParams;
use crate::channel::{tile_rate, ChannelRealization};
use crate::deployment::{BaseStation, User};
use crate::error::{invalid, Result};

/// Knobs of one allocation pass. `w_c` is the bandwidth of a single
/// subchannel; `c_total` is the global subchannel count (stations are
/// restricted to their own `subchannels` range inside it).
#[derive(Debug, Clone, Copy)]
pub struct AllocParams {
    pub t_slots: usize,
    pub c_total: usize,
    pub w_c: f64,
    pub epsilon: f64,
    pub literal_interference: bool,
}

impl AllocParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_slots < 1 {
            return Err(invalid("t_slots", "must be >= 1"));
        }
        if self.c_total < 1 {
            return Err(invalid("c_total", "must be >= 1"));
        }
        if !(self.w_c > 0.0) || !self.w_c.is_finite() {
            return Err(invalid("w_c", format!("must be positive, got {}", self.w_c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid(
                "epsilon",
                format!("utility floor must be positive, got {}", self.epsilon),
            ));
        }
        Ok(())
    }
}

/// Marginal utility of one candidate assignment, split into the proposing
/// user's gain and the co-channel users' loss.
#[derive(Debug, Clone, Copy)]
pub struct UtilityDelta {
    pub gain: f64,
    pub loss: f64,
    pub net: f64,
}

impl UtilityDelta {
    fn new(gain: f64, loss: f64) -> UtilityDelta {
        UtilityDelta {
            gain,
            loss,
            net: gain - loss,
        }
    }
}

/// Outcome of one frame of allocation.
///
/// `x` and `y` are the assignment and activity indicators; `rate_at` gives
/// each user's accumulated rate after each slot; `final_rate` is the frame
/// total. `active_on` lists the stations busy on a tile in the order they
/// were accepted, which fixes the floating-point summation order of
/// interference terms and makes re-derivations reproduce the allocator's
/// arithmetic exactly.
#[derive(Debug, Clone)]
pub struct AllocationState {
    n_bs: usize,
    n_users: usize,
    c_total: usize,
    t_slots: usize,
    x: Vec<bool>,
    y: Vec<bool>,
    r: Vec<f64>,
    cur: Vec<f64>,
    order: Vec<Vec<(u32, u32)>>,
    candidate_evals: u64,
}

impl AllocationState {
    pub fn new(n_bs: usize, n_users: usize, c_total: usize, t_slots: usize) -> AllocationState {
        AllocationState {
            n_bs,
            n_users,
            c_total,
            t_slots,
            x: vec![false; n_users * c_total * t_slots],
            y: vec![false; n_bs * c_total * t_slots],
            r: vec![0.0; n_users * t_slots],
            cur: vec![0.0; n_users],
            order: vec![Vec::new(); c_total * t_slots],
            candidate_evals: 0,
        }
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn c_total(&self) -> usize {
        self.c_total
    }

    pub fn t_slots(&self) -> usize {
        self.t_slots
    }

    pub fn x(&self, user: usize, c: usize, t: usize) -> bool {
        self.x[(user * self.c_total + c) * self.t_slots + t]
    }

    pub fn y(&self, bs: usize, c: usize, t: usize) -> bool {
        self.y[(bs * self.c_total + c) * self.t_slots + t]
    }

    /// Accumulated rate of `user` at the end of slot `t` (bit/s summed over
    /// the user's tiles so far).
    pub fn rate_at(&self, user: usize, t: usize) -> f64 {
        self.r[user * self.t_slots + t]
    }

    /// Total accumulated rate of `user` over the frame.
    pub fn final_rate(&self, user: usize) -> f64 {
        self.cur[user]
    }

    /// (station, user) pairs scheduled on tile (c, t), in acceptance order.
    pub fn active_on(&self, c: usize, t: usize) -> &[(u32, u32)] {
        &self.order[c * self.t_slots + t]
    }

    /// Number of candidate-user rate evaluations performed while building
    /// this state; the unit the O(T C B N) complexity claim is measured in.
    pub fn candidate_evals(&self) -> u64 {
        self.candidate_evals
    }

    fn snapshot_slot(&mut self, t: usize) {
        for m in 0..self.n_users {
            self.r[m * self.t_slots + t] = self.cur[m];
        }
    }

    fn utility(&self, user: usize, epsilon: f64) -> f64 {
        (epsilon + self.cur[user]).ln()
    }
}

fn per_subchannel_power(stations: &[BaseStation], radio: &RadioParams, n_bs: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_bs];
    for bs in stations {
        if bs.subchannels.count > 0 {
            p[bs.id] = radio.tx_power / bs.subchannels.count as f64;
        }
    }
    p
}

/// Rate user `m` would see on tile (c, t) with the given active set, the
/// same arithmetic the allocator uses internally.
fn rate_under(
    state: &AllocationState,
    real: &ChannelRealization,
    power: &[f64],
    noise_w: f64,
    w_c: f64,
    literal: bool,
    user: usize,
    serving: usize,
    c: usize,
    t: usize,
    extra_bs: Option<usize>,
) -> f64 {
    let mut active: Vec<usize> = state
        .active_on(c, t)
        .iter()
        .map(|&(b, _)| b as usize)
        .collect();
    if let Some(b) = extra_bs {
        active.push(b);
    }
    tile_rate(real, user, serving, c, &active, power, noise_w, w_c, literal)
}

/// Marginal utility of assigning tile (c, t) at station `bs` to `user`,
/// evaluated against the current state by full recomputation. The fast
/// allocator reproduces these numbers incrementally; this entry point is
/// the reference definition.
#[allow(clippy::too_many_arguments)]
pub fn marginal_utility(
    user: usize,
    bs: usize,
    c: usize,
    t: usize,
    state: &AllocationState,
    stations: &[BaseStation],
    users: &[User],
    real: &ChannelRealization,
    radio: &RadioParams,
    params: &AllocParams,
) -> Result<UtilityDelta> {
    params.validate()?;
    if state.y(bs, c, t) {
        return Err(invalid(
            "bs",
            format!("station {bs} is already active on subchannel {c}, slot {t}"),
        ));
    }
    if users[user].serving_bs != Some(bs) {
        return Err(invalid(
            "user",
            format!("user {user} is not served by station {bs}"),
        ));
    }
    let power = per_subchannel_power(stations, radio, state.n_bs());
    let noise_w = radio.noise_density * params.w_c;
    let eps = params.epsilon;

    let r_new = rate_under(
        state,
        real,
        &power,
        noise_w,
        params.w_c,
        params.literal_interference,
        user,
        bs,
        c,
        t,
        Some(bs),
    );
    let gain = (eps + state.final_rate(user) + r_new).ln() - state.utility(user, eps);

    let mut loss = 0.0;
    for &(b_i, m_i) in state.active_on(c, t) {
        let (b_i, m_i) = (b_i as usize, m_i as usize);
        let r_old = rate_under(
            state,
            real,
            &power,
            noise_w,
            params.w_c,
            params.literal_interference,
            m_i,
            b_i,
            c,
            t,
            None,
        );
        let r_upd = rate_under(
            state,
            real,
            &power,
            noise_w,
            params.w_c,
            params.literal_interference,
            m_i,
            b_i,
            c,
            t,
            Some(bs),
        );
        loss += state.utility(m_i, eps) - (eps + state.final_rate(m_i) - r_old + r_upd).ln();
    }
    Ok(UtilityDelta::new(gain, loss))
}

/// Apply one accepted assignment: mark the tile, credit the new user with
/// its rate under the enlarged active set, and replace every co-channel
/// user's old tile rate with its recomputed one.
#[allow(clippy::too_many_arguments)]
pub fn commit_assignment(
    state: &mut AllocationState,
    user: usize,
    bs: usize,
    c: usize,
    t: usize,
    stations: &[BaseStation],
    users: &[User],
    real: &ChannelRealization,
    radio: &RadioParams,
    params: &AllocParams,
) -> Result<()> {
    params.validate()?;
    if state.y(bs, c, t) {
        return Err(invalid(
            "bs",
            format!("station {bs} is already active on subchannel {c}, slot {t}"),
        ));
    }
    if users[user].serving_bs != Some(bs) {
        return Err(invalid(
            "user",
            format!("user {user} is not served by station {bs}"),
        ));
    }
    let power = per_subchannel_power(stations, radio, state.n_bs());
    let noise_w = radio.noise_density * params.w_c;

    let r_new = rate_under(
        state,
        real,
        &power,
        noise_w,
        params.w_c,
        params.literal_interference,
        user,
        bs,
        c,
        t,
        Some(bs),
    );
    let co_active: Vec<(u32, u32)> = state.active_on(c, t).to_vec();
    for &(b_i, m_i) in &co_active {
        let (b_i, m_i) = (b_i as usize, m_i as usize);
        let r_old = rate_under(
            state,
            real,
            &power,
            noise_w,
            params.w_c,
            params.literal_interference,
            m_i,
            b_i,
            c,
            t,
            None,
        );
        let r_upd = rate_under(
            state,
            real,
            &power,
            noise_w,
            params.w_c,
            params.literal_interference,
            m_i,
            b_i,
            c,
            t,
            Some(bs),
        );
        state.cur[m_i] += r_upd - r_old;
    }
    state.cur[user] += r_new;
    state.x[(user * state.c_total + c) * state.t_slots + t] = true;
    state.y[(bs * state.c_total + c) * state.t_slots + t] = true;
    state.order[c * state.t_slots + t].push((bs as u32, user as u32));
    Ok(())
}

/// One accepted tile inside the fast path's per-round working set.
struct TileRec {
    bs: usize,
    user: usize,
    signal: f64,
    interf: f64,
    rate: f64,
}

/// Allocate one frame.
///
/// `stations` is the set allowed to transmit in this pass; ids index rows
/// of `real`, which must cover all stations and users. Users served by
/// stations outside the pass (or by nobody) are left alone. Slots are
/// processed in order; within each (subchannel, slot) round stations act
/// in ascending order of (tiles assigned so far, id), each putting forward
/// the candidate user with the largest net utility delta (ties to the
/// lowest user id) and winning the tile only when that delta is strictly
/// positive.
pub fn allocate_frame(
    stations: &[BaseStation],
    users: &[User],
    real: &ChannelRealization,
    radio: &RadioParams,
    params: &AllocParams,
) -> AllocationState {
    params.validate().expect("invalid allocation parameters");
    let n_bs = real.n_bs();
    let n_users = real.n_users();
    assert_eq!(real.n_subch(), params.c_total, "realization width != c_total");
    assert!(users.len() <= n_users);
    let mut state = AllocationState::new(n_bs, n_users, params.c_total, params.t_slots);

    // M_b, keyed by global station id; user ids ascend within each list so
    // the first strict maximum is automatically the lowest-id tie winner.
    let mut served: Vec<Vec<usize>> = vec![Vec::new(); n_bs];
    for u in users {
        if let Some(b) = u.serving_bs {
            served[b].push(u.id);
        }
    }

    let power = per_subchannel_power(stations, radio, n_bs);
    let noise_w = radio.noise_density * params.w_c;
    let w_c = params.w_c;
    let eps = params.epsilon;
    let literal = params.literal_interference;

    // Stations that can ever act on a given subchannel.
    let mut on_subch: Vec<Vec<usize>> = vec![Vec::new(); params.c_total];
    for bs in stations {
        assert!(
            bs.subchannels.first as usize + bs.subchannels.count as usize <= params.c_total,
            "station {} subchannel range exceeds c_total",
            bs.id
        );
        if served[bs.id].is_empty() {
            continue;
        }
        for c in bs.subchannels.first..bs.subchannels.first + bs.subchannels.count {
            on_subch[c as usize].push(bs.id);
        }
    }

    let mut tiles_of = vec![0u32; n_bs];
    let mut ln_cur = vec![eps.ln(); n_users];
    let mut round: Vec<usize> = Vec::new();
    let mut recs: Vec<TileRec> = Vec::new();

    for t in 0..params.t_slots {
        for c in 0..params.c_total {
            round.clear();
            round.extend_from_slice(&on_subch[c]);
            round.sort_unstable_by_key(|&b| (tiles_of[b], b));
            recs.clear();

            for &b in &round {
                let p_b = power[b];
                // Utility the already-scheduled tiles would lose if b joins
                // this subchannel; independent of which user b picks.
                let mut loss = 0.0;
                for rec in &recs {
                    let extra = if literal {
                        real.gain(b, rec.user, c)
                    } else {
                        p_b * real.gain(b, rec.user, c)
                    };
                    let r_upd =
                        w_c * (rec.signal / (noise_w + (rec.interf + extra))).ln_1p()
                            / std::f64::consts::LN_2;
                    loss += ln_cur[rec.user] - (eps + state.cur[rec.user] - rec.rate + r_upd).ln();
                }

                let mut best: Option<(f64, usize, f64, f64)> = None;
                for &m in &served[b] {
                    state.candidate_evals += 1;
                    let mut interf = 0.0;
                    for rec in &recs {
                        interf += if literal {
                            real.gain(rec.bs, m, c)
                        } else {
                            power[rec.bs] * real.gain(rec.bs, m, c)
                        };
                    }
                    let r_m =
                        w_c * (p_b * real.gain(b, m, c) / (noise_w + interf)).ln_1p()
                            / std::f64::consts::LN_2;
                    let net = (eps + state.cur[m] + r_m).ln() - ln_cur[m] - loss;
                    if best.map_or(true, |(bn, ..)| net > bn) {
                        best = Some((net, m, r_m, interf));
                    }
                }

                let Some((net, m_star, r_star, interf_star)) = best else {
                    continue;
                };
                if net <= 0.0 {
                    continue;
                }
                for rec in recs.iter_mut() {
                    let extra = if literal {
                        real.gain(b, rec.user, c)
                    } else {
                        p_b * real.gain(b, rec.user, c)
                    };
                    rec.interf += extra;
                    let r_upd = w_c * (rec.signal / (noise_w + rec.interf)).ln_1p()
                        / std::f64::consts::LN_2;
                    state.cur[rec.user] += r_upd - rec.rate;
                    rec.rate = r_upd;
                    ln_cur[rec.user] = (eps + state.cur[rec.user]).ln();
                }
                // The serving term keeps its power split even in the
                // literal-interference reading.
                let signal = p_b * real.gain(b, m_star, c);
                recs.push(TileRec {
                    bs: b,
                    user: m_star,
                    signal,
                    interf: interf_star,
                    rate: r_star,
                });
                state.cur[m_star] += r_star;
                ln_cur[m_star] = (eps + state.cur[m_star]).ln();
                state.x[(m_star * state.c_total + c) * state.t_slots + t] = true;
                state.y[(b * state.c_total + c) * state.t_slots + t] = true;
                state.order[c * state.t_slots + t].push((b as u32, m_star as u32));
                tiles_of[b] += 1;
            }
        }
        state.snapshot_slot(t);
    }
    state
}

/// Per-user average throughput over completed frames, bit/s. A tile
/// contributes its rate for one slot out of T, so each frame contributes
/// final_rate / T, averaged over frames.
pub fn user_throughput(frames: &[AllocationState]) -> Result<Vec<f64>> {
    let Some(first) = frames.first() else {
        return Err(invalid("frames", "no completed frames"));
    };
    let n = first.n_users();
    let t = first.t_slots() as f64;
    let mut out = vec![0.0; n];
    for frame in frames {
        if frame.n_users() != n || frame.t_slots() != first.t_slots() {
            return Err(invalid("frames", "inconsistent frame dimensions"));
        }
        for (acc, m) in out.iter_mut().zip(0..n) {
            *acc += frame.final_rate(m) / t;
        }
    }
    let f = frames.len() as f64;
    for v in &mut out {
        *v /= f;
    }
    Ok(out)
}
