//! Power, RC-thermal and lifetime failure-rate models.
//!
//! Power is switching plus leakage: `C_eff·V²·f + alpha·T + beta`. Core
//! temperature follows a lumped RC network with neighbor coupling,
//! `dT/dt = -a·T + b`, whose closed-form step is used throughout the
//! simulator (neighbor temperatures are held constant over a step; the
//! caller bounds step length). Wear-out is modeled by four mechanisms
//! (electromigration, stress migration, dielectric breakdown, NBTI) whose
//! MTTFs convert to additive failure rates under the sum-of-failure-rates
//! assumption; schedules are compared via the global system failure rate,
//! the time-weighted mean of the instantaneous rate over executed task time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::VfLevel;

/// Seconds in ten years; reference MTTF used when calibrating scale factors.
pub const TEN_YEARS_S: f64 = 10.0 * 365.25 * 24.0 * 3600.0;

/// Reference operating point for scale-factor calibration.
pub const CALIBRATION_TEMP_K: f64 = 353.15;
pub const CALIBRATION_VOLT: f64 = 1.1;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error(
        "thermal network unstable: rate coefficient a = {a} must be positive \
             (leakage slope alpha exceeds total conductance)"
    )]
    Instability { a: f64 },
    #[error("model outside validity range: {0}")]
    Domain(String),
    #[error("no task has executed; GSFR undefined")]
    EmptySchedule,
}

/// Switching-capacitance power model constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerParams {
    /// Effective switching capacitance, J/V².
    pub c_eff: f64,
    /// Leakage/temperature slope, W/K.
    pub alpha: f64,
    /// Constant leakage offset, W.
    pub beta: f64,
}

/// Chip-level RC thermal constants shared by all cores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// Thermal capacitance, J/K.
    pub c: f64,
    /// Thermal conductance to ambient, W/K.
    pub g: f64,
    /// Ambient temperature, K.
    pub t_amb: f64,
}

/// TDDB fit constants (voltage exponent is `a - b·T`; the thermal exponent
/// is `(x + y/T + z·T) / (k_B·T)`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TddbFit {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Wear-out mechanism constants. Activation energies are stored already
/// divided by Boltzmann's constant, so exponents are `ea / T` with `ea` in
/// kelvin. `scale` maps a mechanism name to its MTTF scale factor in
/// seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityParams {
    pub ea_em_sm: f64,
    pub j: f64,
    pub j_circ: f64,
    pub n_em: f64,
    pub n_sm: f64,
    pub t0_sm: f64,
    pub ea_nbti: f64,
    pub gamma_nbti: f64,
    pub tddb: TddbFit,
    /// Boltzmann constant in eV/K for the TDDB exponent.
    pub k_b: f64,
    pub scale: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mechanism {
    Em,
    Sm,
    Tddb,
    Nbti,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::Em,
        Mechanism::Sm,
        Mechanism::Tddb,
        Mechanism::Nbti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Em => "em",
            Mechanism::Sm => "sm",
            Mechanism::Tddb => "tddb",
            Mechanism::Nbti => "nbti",
        }
    }
}

/// Per-mechanism failure rates, 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechRates {
    pub em: f64,
    pub sm: f64,
    pub tddb: f64,
    pub nbti: f64,
}

impl MechRates {
    pub fn get(&self, m: Mechanism) -> f64 {
        match m {
            Mechanism::Em => self.em,
            Mechanism::Sm => self.sm,
            Mechanism::Tddb => self.tddb,
            Mechanism::Nbti => self.nbti,
        }
    }

    /// Sum over mechanisms: the core's instantaneous failure rate.
    pub fn total(&self) -> f64 {
        self.em + self.sm + self.tddb + self.nbti
    }
}

/// Dynamic per-core accounting state maintained by a simulation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CoreState {
    /// Current temperature, K.
    pub temp: f64,
    /// Wall-clock time until which the core is committed, s.
    pub busy_until: f64,
    /// Accumulated instantaneous-failure-rate × execution-time (GSFR numerator share).
    pub lambda_time_integral: f64,
    /// Accumulated task execution time, s (GSFR denominator share).
    pub exe_time_total: f64,
    /// Accumulated energy, J.
    pub energy_total: f64,
    /// Accumulated busy seconds.
    pub utilization_busy: f64,
}

/// Aggregated neighbor coupling for one core: `g_sum = Σ G(c,c')` and
/// `gt_sum = Σ G(c,c')·T_c'` with neighbor temperatures frozen by the caller.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeighborCoupling {
    pub g_sum: f64,
    pub gt_sum: f64,
}

impl NeighborCoupling {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a (f64, f64)>) -> Self {
        let mut g_sum = 0.0;
        let mut gt_sum = 0.0;
        for &(g, t) in pairs {
            g_sum += g;
            gt_sum += g * t;
        }
        NeighborCoupling { g_sum, gt_sum }
    }
}

/// Total power draw at the given operating point and temperature.
pub fn power(vf: &VfLevel, temp: f64, p: &PowerParams) -> f64 {
    dynamic_power(vf, p) + p.alpha * temp + p.beta
}

/// Switching term of the power model.
pub fn dynamic_power(vf: &VfLevel, p: &PowerParams) -> f64 {
    p.c_eff * vf.voltage * vf.voltage * vf.frequency
}

/// Leakage-only power of an idle core.
pub fn idle_power(temp: f64, p: &PowerParams) -> f64 {
    p.alpha * temp + p.beta
}

/// Exponential rate coefficient `a = (G - alpha + Σ G(c,c')) / C`.
pub fn thermal_rate(th: &ThermalSpec, pw: &PowerParams, neighbor_g_sum: f64) -> f64 {
    (th.g - pw.alpha + neighbor_g_sum) / th.c
}

fn forcing_term(dyn_power: f64, nbr: &NeighborCoupling, th: &ThermalSpec, pw: &PowerParams) -> f64 {
    (th.g * th.t_amb + nbr.gt_sum + dyn_power + pw.beta) / th.c
}

/// Steady-state temperature `b/a` for the given dynamic power (0 for idle).
pub fn steady_state_temp(
    dyn_power: f64,
    nbr: &NeighborCoupling,
    th: &ThermalSpec,
    pw: &PowerParams,
) -> Result<f64, PhysicsError> {
    let a = thermal_rate(th, pw, nbr.g_sum);
    if a <= 0.0 {
        return Err(PhysicsError::Instability { a });
    }
    Ok(forcing_term(dyn_power, nbr, th, pw) / a)
}

/// Closed-form temperature after `duration` seconds starting from `t0`,
/// running at `vf` (or idle when `None`), with neighbor temperatures held
/// constant.
pub fn temp_after(
    t0: f64,
    duration: f64,
    vf: Option<&VfLevel>,
    nbr: &NeighborCoupling,
    th: &ThermalSpec,
    pw: &PowerParams,
) -> Result<f64, PhysicsError> {
    let dyn_p = vf.map_or(0.0, |v| dynamic_power(v, pw));
    Ok(temp_step_with_integral(t0, duration, dyn_p, nbr, th, pw)?.0)
}

/// Like [`temp_after`] but also returns the exact `∫T dt` over the step,
/// which the simulator needs for leakage-energy and average-temperature
/// accounting.
pub fn temp_step_with_integral(
    t0: f64,
    duration: f64,
    dyn_power: f64,
    nbr: &NeighborCoupling,
    th: &ThermalSpec,
    pw: &PowerParams,
) -> Result<(f64, f64), PhysicsError> {
    let a = thermal_rate(th, pw, nbr.g_sum);
    if a <= 0.0 {
        return Err(PhysicsError::Instability { a });
    }
    if duration == 0.0 {
        return Ok((t0, 0.0));
    }
    let t_inf = forcing_term(dyn_power, nbr, th, pw) / a;
    let decay = (-a * duration).exp();
    let t_end = t_inf + (t0 - t_inf) * decay;
    let integral = t_inf * duration + (t0 - t_inf) * (1.0 - decay) / a;
    Ok((t_end, integral))
}

/// Per-mechanism failure rates at the given temperature and voltage.
pub fn mechanism_failure_rates(
    temp: f64,
    vf: &VfLevel,
    r: &ReliabilityParams,
) -> Result<MechRates, PhysicsError> {
    if !temp.is_finite() || temp <= 0.0 {
        return Err(PhysicsError::Domain(format!(
            "temperature {temp} K not positive"
        )));
    }
    if temp >= r.t0_sm {
        return Err(PhysicsError::Domain(format!(
            "temperature {temp} K at or above stress-free temperature {} K",
            r.t0_sm
        )));
    }
    let scale = |m: Mechanism| -> f64 { r.scale.get(m.as_str()).copied().unwrap_or(1.0) };
    let mttf_em = scale(Mechanism::Em) * em_base(temp, r);
    let mttf_sm = scale(Mechanism::Sm) * sm_base(temp, r);
    let mttf_tddb = scale(Mechanism::Tddb) * tddb_base(temp, vf.voltage, r);
    let mttf_nbti = scale(Mechanism::Nbti) * nbti_base(temp, vf.voltage, r);
    Ok(MechRates {
        em: mttf_em.recip(),
        sm: mttf_sm.recip(),
        tddb: mttf_tddb.recip(),
        nbti: mttf_nbti.recip(),
    })
}

fn em_base(temp: f64, r: &ReliabilityParams) -> f64 {
    (r.j - r.j_circ).powf(-r.n_em) * (r.ea_em_sm / temp).exp()
}

fn sm_base(temp: f64, r: &ReliabilityParams) -> f64 {
    (r.t0_sm - temp).powf(-r.n_sm) * (r.ea_em_sm / temp).exp()
}

fn tddb_base(temp: f64, volt: f64, r: &ReliabilityParams) -> f64 {
    let v_exp = r.tddb.a - r.tddb.b * temp;
    let thermal = (r.tddb.x + r.tddb.y / temp + r.tddb.z * temp) / (r.k_b * temp);
    volt.recip().powf(v_exp) * thermal.exp()
}

fn nbti_base(temp: f64, volt: f64, r: &ReliabilityParams) -> f64 {
    volt.powf(-r.gamma_nbti) * (r.ea_nbti / temp).exp()
}

impl ReliabilityParams {
    /// Mechanism constants with scale factors calibrated so that each
    /// mechanism's MTTF at the reference point (353.15 K, 1.1 V) equals ten
    /// years.
    pub fn calibrated_default() -> Self {
        let mut r = ReliabilityParams {
            ea_em_sm: 10444.07,
            j: 150.0,
            j_circ: 0.0,
            n_em: 1.1,
            n_sm: 2.5,
            t0_sm: 500.0,
            ea_nbti: 4651.16,
            gamma_nbti: 5.0,
            tddb: TddbFit {
                a: 78.0,
                b: -0.08,
                x: 0.76,
                y: -66.8,
                z: -8.37e-4,
            },
            k_b: 8.61e-5,
            scale: BTreeMap::new(),
        };
        let (t, v) = (CALIBRATION_TEMP_K, CALIBRATION_VOLT);
        r.scale.insert("em".into(), TEN_YEARS_S / em_base(t, &r));
        r.scale.insert("sm".into(), TEN_YEARS_S / sm_base(t, &r));
        r.scale
            .insert("tddb".into(), TEN_YEARS_S / tddb_base(t, v, &r));
        r.scale
            .insert("nbti".into(), TEN_YEARS_S / nbti_base(t, v, &r));
        r
    }
}

/// Sum-of-failure-rates over all cores and mechanisms.
pub fn sofr(per_core: &[MechRates]) -> f64 {
    per_core.iter().map(MechRates::total).sum()
}

/// Global system failure rate: accumulated rate-time over accumulated
/// execution time. Errors when nothing has executed.
pub fn gsfr(states: &[CoreState]) -> Result<f64, PhysicsError> {
    let exe: f64 = states.iter().map(|s| s.exe_time_total).sum();
    if exe <= 0.0 {
        return Err(PhysicsError::EmptySchedule);
    }
    let num: f64 = states.iter().map(|s| s.lambda_time_integral).sum();
    Ok(num / exe)
}
