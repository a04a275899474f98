//! Numerical oracles for the thermal closed form and monotonicity sweeps.

use mpsched_core::graphs::VfLevel;
use mpsched_core::physics::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_constants() -> (ThermalSpec, PowerParams) {
    (
        ThermalSpec {
            c: 0.03,
            g: 0.3,
            t_amb: 293.0,
        },
        PowerParams {
            c_eff: 1e-8,
            alpha: 0.1,
            beta: -11.0,
        },
    )
}

/// RK4 integration of dT/dt = -a T + b with constant coefficients.
fn rk4_temp(
    t0: f64,
    duration: f64,
    dyn_p: f64,
    nbr: &NeighborCoupling,
    th: &ThermalSpec,
    pw: &PowerParams,
    dt: f64,
) -> f64 {
    let a = thermal_rate(th, pw, nbr.g_sum);
    let b = (th.g * th.t_amb + nbr.gt_sum + dyn_p + pw.beta) / th.c;
    let f = |t: f64| -a * t + b;
    let steps = (duration / dt).ceil() as usize;
    let h = duration / steps as f64;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t);
        let k2 = f(t + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h * k2);
        let k4 = f(t + h * k3);
        t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t
}

#[test]
fn closed_form_matches_rk4_on_reference_case() {
    let (th, pw) = reference_constants();
    let vf = VfLevel {
        voltage: 1.1,
        frequency: 600e6,
    };
    let nbr = NeighborCoupling::default();
    let closed = temp_after(300.0, 10e-3, Some(&vf), &nbr, &th, &pw).unwrap();
    let dyn_p = dynamic_power(&vf, &pw);
    let rk4 = rk4_temp(300.0, 10e-3, dyn_p, &nbr, &th, &pw, 1e-5);
    assert!((closed - rk4).abs() < 1e-6, "closed {closed} vs rk4 {rk4}");
}

#[test]
fn closed_form_matches_rk4_on_random_cases() {
    let (th, pw) = reference_constants();
    let levels = [
        VfLevel {
            voltage: 1.06,
            frequency: 300e6,
        },
        VfLevel {
            voltage: 1.1,
            frequency: 600e6,
        },
        VfLevel {
            voltage: 1.2,
            frequency: 900e6,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for case in 0..200 {
        let t0 = rng.gen_range(293.0..420.0);
        let duration = rng.gen_range(1e-4..0.5);
        let vf = &levels[rng.gen_range(0..3)];
        let n_nbr = rng.gen_range(0..4);
        let pairs: Vec<(f64, f64)> = (0..n_nbr)
            .map(|_| (0.1, rng.gen_range(293.0..420.0)))
            .collect();
        let nbr = NeighborCoupling::from_pairs(&pairs);
        let closed = temp_after(t0, duration, Some(vf), &nbr, &th, &pw).unwrap();
        let rk4 = rk4_temp(t0, duration, dynamic_power(vf, &pw), &nbr, &th, &pw, 1e-5);
        assert!(
            (closed - rk4).abs() < 1e-6,
            "case {case}: closed {closed} vs rk4 {rk4}"
        );
    }
}

#[test]
fn semigroup_property_over_random_draws() {
    let (th, pw) = reference_constants();
    let vf = VfLevel {
        voltage: 1.2,
        frequency: 900e6,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let t0 = rng.gen_range(293.0..430.0);
        let d1 = rng.gen_range(0.0..0.5);
        let d2 = rng.gen_range(0.0..0.5);
        let nbr = NeighborCoupling::from_pairs(&[(0.1, rng.gen_range(293.0..430.0))]);
        let whole = temp_after(t0, d1 + d2, Some(&vf), &nbr, &th, &pw).unwrap();
        let mid = temp_after(t0, d1, Some(&vf), &nbr, &th, &pw).unwrap();
        let split = temp_after(mid, d2, Some(&vf), &nbr, &th, &pw).unwrap();
        assert!((whole - split).abs() < 1e-9, "{whole} vs {split}");
    }
}

#[test]
fn power_and_rates_monotone_in_temperature_on_grid() {
    let (_, pw) = reference_constants();
    let r = ReliabilityParams::calibrated_default();
    let vf = VfLevel {
        voltage: 1.1,
        frequency: 600e6,
    };
    let mut prev_power = f64::NEG_INFINITY;
    let mut prev = MechRates {
        em: 0.0,
        sm: 0.0,
        tddb: 0.0,
        nbti: 0.0,
    };
    for k in 0..=107 {
        let t = 293.0 + k as f64; // [293, 400]
        let p = power(&vf, t, &pw);
        assert!(p >= prev_power);
        prev_power = p;
        let rates = mechanism_failure_rates(t, &vf, &r).unwrap();
        for m in Mechanism::ALL {
            assert!(
                rates.get(m) >= prev.get(m),
                "{} not monotone at {t} K",
                m.as_str()
            );
        }
        prev = rates;
    }
}
