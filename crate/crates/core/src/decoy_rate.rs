//! Secret-key rate estimation for BB84 with vacuum-plus-weak decoy states.
//!
//! Everything here is a pure function of value types. The channel is
//! summarised by a single transmittance `delta`: the probability that one
//! photon leaving the transmitter is detected at the receiver (detector
//! efficiency included). [`crate::link_budget`] computes it from the optical
//! link parameters.
//!
//! The flow is:
//!
//! 1. [`ChannelObservables::from_transmittance`] gives the gains and QBERs of
//!    the signal and decoy intensities (or you supply measured ones).
//! 2. [`single_photon_bounds`] turns those observables into a lower bound on
//!    the single-photon gain and an upper bound on its error rate.
//! 3. [`secret_key_rate`] combines both into a key rate in bits per second.

use thiserror::Error;

/// Photon-number terms kept when summing the Poisson series.
pub const SERIES_TERMS: u32 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("yield is zero, error rate undefined")]
    ZeroYield,
    #[error("channel gain is zero, QBER undefined")]
    DegenerateChannel,
    #[error("single-photon yield lower bound collapsed to {y1_lower:e} (channel too noisy)")]
    BoundCollapse { y1_lower: f64 },
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), RateError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(RateError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), RateError> {
    check(name, value, (0.0..=1.0).contains(&value), "must lie in [0, 1]")
}

/// How the n-photon yield combines background clicks with signal detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YieldModel {
    /// `Y_n = Y0 + d_n - Y0 d_n`; never exceeds one.
    #[default]
    Exact,
    /// `Y_n = Y0 + d_n`, the usual small-`Y0` shortcut. Only meant for
    /// reproducing tables computed that way.
    Approximate,
}

/// Parameters of the decoy-state BB84 source and post-processing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyProtocolParams {
    /// Mean photon number of the signal states.
    pub mu: f64,
    /// Mean photon number of the weak decoy states.
    pub nu: f64,
    /// Sifting efficiency of the protocol.
    pub q: f64,
    /// Error-correction inefficiency relative to the Shannon limit.
    pub f_ec: f64,
    /// Background (dark count) yield per pulse.
    pub y0: f64,
    /// Error rate of background clicks.
    pub e0: f64,
    /// Pulses per second.
    pub pulse_rate: f64,
    pub yield_model: YieldModel,
}

impl Default for DecoyProtocolParams {
    fn default() -> Self {
        Self {
            mu: 0.3,
            nu: 0.1,
            q: 0.5,
            f_ec: 1.22,
            y0: 1.7e-6,
            e0: 0.5,
            pulse_rate: 10e6,
            yield_model: YieldModel::Exact,
        }
    }
}

impl DecoyProtocolParams {
    pub fn validate(&self) -> Result<(), RateError> {
        check("mu", self.mu, self.mu > 0.0, "must be positive")?;
        check(
            "nu",
            self.nu,
            self.nu > 0.0 && self.nu < self.mu,
            "must satisfy 0 < nu < mu",
        )?;
        check("q", self.q, self.q > 0.0 && self.q <= 1.0, "must lie in (0, 1]")?;
        check("f_ec", self.f_ec, self.f_ec >= 1.0, "must be at least 1")?;
        check("y0", self.y0, (0.0..1.0).contains(&self.y0), "must lie in [0, 1)")?;
        check_probability("e0", self.e0)?;
        check(
            "pulse_rate",
            self.pulse_rate,
            self.pulse_rate > 0.0,
            "must be positive",
        )
    }
}

/// Gains and QBERs of the signal (`mu`) and decoy (`nu`) intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelObservables {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu: f64,
}

impl ChannelObservables {
    /// Expected observables for a channel of transmittance `delta`.
    pub fn from_transmittance(delta: f64, params: &DecoyProtocolParams) -> Result<Self, RateError> {
        params.validate()?;
        let (q_mu, e_mu) = gain_and_qber(params.mu, delta, params)?;
        let (q_nu, e_nu) = gain_and_qber(params.nu, delta, params)?;
        Ok(Self {
            q_mu,
            e_mu,
            q_nu,
            e_nu,
        })
    }

    /// Observables from measured gains alone, with each QBER taken from the
    /// dark-count identity `E Q = e0 Y0`.
    pub fn from_gains(q_mu: f64, q_nu: f64, params: &DecoyProtocolParams) -> Result<Self, RateError> {
        check("q_mu", q_mu, q_mu > 0.0 && q_mu <= 1.0, "must lie in (0, 1]")?;
        check("q_nu", q_nu, q_nu > 0.0 && q_nu <= 1.0, "must lie in (0, 1]")?;
        Ok(Self {
            q_mu,
            e_mu: qber_from_gain(q_mu, params),
            q_nu,
            e_nu: qber_from_gain(q_nu, params),
        })
    }

    fn validate(&self) -> Result<(), RateError> {
        check_probability("q_mu", self.q_mu)?;
        check_probability("e_mu", self.e_mu)?;
        check_probability("q_nu", self.q_nu)?;
        check_probability("e_nu", self.e_nu)
    }
}

/// QBER implied by a gain under the pure dark-count error model.
pub fn qber_from_gain(gain: f64, params: &DecoyProtocolParams) -> f64 {
    params.e0 * params.y0 / gain
}

/// Probability that a phase-randomised coherent pulse of mean photon
/// number `mu` holds exactly `n` photons.
pub fn poisson_pn(n: u32, mu: f64) -> Result<f64, RateError> {
    check("mu", mu, mu >= 0.0, "must be non-negative")?;
    if mu == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    // log-space keeps large n from overflowing n!
    let log_fact: f64 = (1..=n).map(|k| f64::from(k).ln()).sum();
    Ok((f64::from(n) * mu.ln() - mu - log_fact).exp())
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64, RateError> {
    check_probability("x", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

fn multi_photon_detection(n: u32, delta: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // 1 - (1 - delta)^n without cancellation for tiny delta
    -(f64::from(n) * (-delta).ln_1p()).exp_m1()
}

/// Yield of an `n`-photon pulse using the exact combination rule.
pub fn yield_n(n: u32, delta: f64, y0: f64) -> Result<f64, RateError> {
    yield_n_with(n, delta, y0, YieldModel::Exact)
}

pub fn yield_n_with(n: u32, delta: f64, y0: f64, model: YieldModel) -> Result<f64, RateError> {
    check_probability("delta", delta)?;
    check_probability("y0", y0)?;
    let d_n = multi_photon_detection(n, delta);
    Ok(match model {
        YieldModel::Exact => y0 + d_n - y0 * d_n,
        YieldModel::Approximate => y0 + d_n,
    })
}

/// Error rate of `n`-photon pulses when only background clicks err.
pub fn error_rate_n(n: u32, delta: f64, y0: f64) -> Result<f64, RateError> {
    let y = yield_n(n, delta, y0)?;
    if y == 0.0 {
        return Err(RateError::ZeroYield);
    }
    Ok(y0 / (2.0 * y))
}

/// Gain and QBER of coherent pulses of the given intensity, closed form.
pub fn gain_and_qber(
    intensity: f64,
    delta: f64,
    params: &DecoyProtocolParams,
) -> Result<(f64, f64), RateError> {
    check("intensity", intensity, intensity >= 0.0, "must be non-negative")?;
    check_probability("delta", delta)?;
    let arrival = -(-delta * intensity).exp_m1();
    let gain = match params.yield_model {
        YieldModel::Exact => params.y0 + (1.0 - params.y0) * arrival,
        YieldModel::Approximate => params.y0 + arrival,
    };
    if gain == 0.0 {
        return Err(RateError::DegenerateChannel);
    }
    Ok((gain, params.e0 * params.y0 / gain))
}

/// Same quantity as [`gain_and_qber`], summed photon number by photon number
/// over the first `terms` Poisson terms.
pub fn gain_and_qber_series(
    intensity: f64,
    delta: f64,
    params: &DecoyProtocolParams,
    terms: u32,
) -> Result<(f64, f64), RateError> {
    check("intensity", intensity, intensity >= 0.0, "must be non-negative")?;
    let mut gain = 0.0;
    let mut errors = 0.0;
    for n in 0..=terms {
        let p = poisson_pn(n, intensity)?;
        let y = yield_n_with(n, delta, params.y0, params.yield_model)?;
        gain += y * p;
        // e_n Y_n = e0 Y0 for every n
        errors += params.e0 * params.y0 * p;
    }
    if gain == 0.0 {
        return Err(RateError::DegenerateChannel);
    }
    Ok((gain, errors / gain))
}

/// Decoy-state estimates for single-photon pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonBounds {
    pub y1_lower: f64,
    pub q1_lower: f64,
    pub e1_upper: f64,
}

/// Lower bound on the single-photon yield and gain, upper bound on the
/// single-photon error rate, from signal and weak-decoy observables.
///
/// Returns [`RateError::BoundCollapse`] when the yield bound is not positive;
/// no key can be certified in that case.
pub fn single_photon_bounds(
    obs: &ChannelObservables,
    params: &DecoyProtocolParams,
) -> Result<SinglePhotonBounds, RateError> {
    params.validate()?;
    obs.validate()?;
    let (mu, nu, y0) = (params.mu, params.nu, params.y0);
    let scale = mu / (mu * nu - nu * nu);
    let y1 = scale
        * (obs.q_nu * nu.exp()
            - obs.q_mu * mu.exp() * (nu * nu) / (mu * mu)
            - (mu * mu - nu * nu) / (mu * mu) * y0);
    if y1.is_nan() || y1 <= 0.0 {
        return Err(RateError::BoundCollapse { y1_lower: y1 });
    }
    let y1_lower = y1.min(1.0);
    let q1_lower = mu * (-mu).exp() * y1_lower;
    let e1 = (obs.e_nu * obs.q_nu * nu.exp() - params.e0 * y0) / (y1_lower * nu);
    Ok(SinglePhotonBounds {
        y1_lower,
        q1_lower,
        e1_upper: e1.clamp(0.0, 0.5),
    })
}

/// Secret-key rate in bits per second, clamped at zero.
pub fn secret_key_rate(
    obs: &ChannelObservables,
    bounds: &SinglePhotonBounds,
    params: &DecoyProtocolParams,
) -> Result<f64, RateError> {
    let leak = obs.q_mu * params.f_ec * binary_entropy(obs.e_mu)?;
    let single = bounds.q1_lower * (1.0 - binary_entropy(bounds.e1_upper)?);
    let per_pulse = params.q * (single - leak);
    Ok(per_pulse.max(0.0) * params.pulse_rate)
}

/// Key rate straight from observables; a collapsed bound yields zero.
pub fn key_rate_from_observables(
    obs: &ChannelObservables,
    params: &DecoyProtocolParams,
) -> Result<f64, RateError> {
    match single_photon_bounds(obs, params) {
        Ok(bounds) => secret_key_rate(obs, &bounds, params),
        Err(RateError::BoundCollapse { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Key rate of a channel with transmittance `delta`.
pub fn key_rate_for_transmittance(delta: f64, params: &DecoyProtocolParams) -> Result<f64, RateError> {
    let obs = ChannelObservables::from_transmittance(delta, params)?;
    key_rate_from_observables(&obs, params)
}
