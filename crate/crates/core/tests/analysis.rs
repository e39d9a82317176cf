use awpi::analysis::{
    chattering_threshold, detect_deadlock, last_relock, max_step_exit_deadlock, min_step_avoid_deadlock_differentiable,
    min_step_avoid_deadlock_discrete, SummandReading,
};
use awpi::{
    bundled, simulate, step_elm, step_epm, step_itm, ItmSettings, LimiterState, Method, PiParams, SimState,
    StepOutcome,
};

fn params() -> PiParams {
    PiParams::new(1.0, 20.0, -1.0, 1.0).unwrap()
}

/// Locked at exactly `w_max` with input `u_prev`.
fn locked_high(p: &PiParams, u_prev: f64) -> SimState {
    SimState::from_parts(p, 0.0, p.w_max - p.kp * u_prev, u_prev, LimiterState::UPPER)
}

/// A single toggling ITM step: the input barely drops, so the step sits
/// between the locked and unlocked equation sets.
fn toggling_step(p: &PiParams, u: f64, h: f64, epsilon: f64) -> StepOutcome {
    let u_prev = u + 0.1 * 0.5 * h * p.ki * u / p.kp;
    let settings = ItmSettings { epsilon, h_init: h, h_min_floor: h, h_cap: h, ..ItmSettings::default() };
    step_itm(p, &locked_high(p, u_prev), u, h, &settings).outcome
}

#[test]
fn exit_bound_is_sharp() {
    let p = params();
    for (u, eps) in [(0.2915, 1e-3), (0.2915, 2.915e-3), (0.05, 1e-4), (0.8, 4e-3)] {
        let h_max = max_step_exit_deadlock(&p, u, eps).unwrap();
        assert_eq!(toggling_step(&p, u, h_max * (1.0 - 1e-6), eps), StepOutcome::ConvergedByTolerance, "u={u}, eps={eps}");
        assert_eq!(toggling_step(&p, u, h_max * (1.0 + 1e-6), eps), StepOutcome::NotConverged, "u={u}, eps={eps}");
    }
}

#[test]
fn exit_bound_reference_values() {
    let p = params();
    assert!((max_step_exit_deadlock(&p, 0.2915, 1e-3).unwrap() - 3.431e-4).abs() < 1e-7);
    assert!((max_step_exit_deadlock(&p, 0.2915, 2.915e-3).unwrap() - 1e-3).abs() < 1e-15);
    assert_eq!(max_step_exit_deadlock(&p, 0.0, 1e-3).unwrap(), f64::INFINITY);
}

#[test]
fn discrete_and_differentiable_bounds_bracket_the_deadlock() {
    let p = params();
    let u = 0.2915;
    let du = -1e-3;
    let h_discrete = min_step_avoid_deadlock_discrete(&p, u, du).unwrap();
    assert!((h_discrete - 2.0 * (p.kp / p.ki) * du.abs() / u).abs() < 1e-15);
    let h_min = min_step_avoid_deadlock_differentiable(&p, u, -1.0, -1.0).unwrap();
    assert!((h_min - 0.1915).abs() < 1e-12);
    assert!(h_discrete < 3.5e-4 && h_discrete < h_min / 500.0);

    // a unit-slope ramp: every step size between the two bounds deadlocks,
    // past the differentiable bound the integrator stays unlocked
    let settings = |h: f64| ItmSettings { epsilon: 1e-3, h_init: h, h_min_floor: h, h_cap: h, ..ItmSettings::default() };
    for h in [5e-4, 1e-3, 1e-2, 0.1, 0.19] {
        let rec = step_itm(&p, &locked_high(&p, u), u - h, h, &settings(h));
        assert_eq!(rec.outcome, StepOutcome::NotConverged, "h = {h}");
    }
    let h = 0.2;
    let rec = step_itm(&p, &locked_high(&p, u), u - h, h, &settings(h));
    assert_eq!(rec.outcome, StepOutcome::Converged);
    assert_eq!(rec.limiter_after, LimiterState::WITHIN);
}

#[test]
fn simulated_deadlock_matches_the_bounds() {
    let log = simulate(&bundled("ramp_itm").unwrap()).unwrap();
    let episodes = detect_deadlock(&log);
    let first = &episodes[0];
    assert!((first.t_onset - 3.709).abs() < 0.01);
    assert!((first.u_onset - 0.2915).abs() < 0.01);
    let exit_h = first.exit_h.unwrap();
    assert!(exit_h < 3.431e-4);
    let exit_u = first.exit_u.unwrap();
    // the accepted attempt satisfies the bound at its own input
    assert!(exit_h < max_step_exit_deadlock(&log.params, exit_u, 1e-3).unwrap());
}

/// Whether the integrator, unlocked by the step to `u_t` from a locked
/// state at `w_max`, stays unlocked for `k_max` more steps of an input
/// falling by `du` per step. Runs the library steppers.
fn stays_unlocked(method: Method, p: &PiParams, u_t: f64, du: f64, h: f64, k_max: usize) -> bool {
    let mut state = locked_high(p, u_t - du);
    for k in 0..=k_max {
        let u = u_t + k as f64 * du;
        state = match method {
            Method::Epm => step_epm(p, &state, u, h).state_after,
            _ => step_elm(p, &state, u, h).state_after,
        };
        if state.limiter.is_limited() {
            assert!(k > 0, "the first falling step must unlock");
            return false;
        }
    }
    true
}

fn brute_force_threshold(method: Method, p: &PiParams, du: f64, h: f64, k_max: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 2.0);
    assert!(stays_unlocked(method, p, lo + 1e-9, du, h, k_max));
    assert!(!stays_unlocked(method, p, hi, du, h, k_max));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if stays_unlocked(method, p, mid, du, h, k_max) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn thresholds_fall_as_the_integrator_dominates() {
    let du = -1e-3;
    for method in [Method::Epm, Method::Elm] {
        let mut grid = Vec::new();
        for kp in [0.5, 1.0, 2.0] {
            for ki in [5.0, 20.0, 80.0] {
                for h in [5e-4, 1e-3, 2e-3] {
                    let p = PiParams::new(kp, ki, -1.0, 1.0).unwrap();
                    let predicted =
                        chattering_threshold(method, &p, h, du, 0.0, 10, SummandReading::Cumulative).unwrap().threshold_u;
                    let simulated = brute_force_threshold(method, &p, du, h, 10);
                    assert!(
                        (predicted - simulated).abs() <= du.abs(),
                        "{method} kp={kp} ki={ki} h={h}: predicted {predicted}, simulated {simulated}"
                    );
                    grid.push((ki * h / kp, predicted, simulated));
                }
            }
        }
        grid.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in grid.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi.0 > lo.0 * (1.0 + 1e-12) {
                assert!(hi.1 < lo.1, "{method}: predicted {} at r={} vs {} at r={}", lo.1, lo.0, hi.1, hi.0);
                assert!(hi.2 < lo.2, "{method}: simulated {} at r={} vs {} at r={}", lo.2, lo.0, hi.2, hi.0);
            }
        }
    }
}

#[test]
fn simulated_last_relock_is_within_one_increment_of_the_prediction() {
    let p = params();
    for (name, method) in [("ramp_epm", Method::Epm), ("ramp_elm", Method::Elm)] {
        let log = simulate(&bundled(name).unwrap()).unwrap();
        let relock = last_relock(&log).unwrap().u;
        let predicted =
            chattering_threshold(method, &p, 1e-3, -1e-3, 0.0, 10, SummandReading::Cumulative).unwrap().threshold_u;
        assert!((relock - predicted).abs() <= 1e-3 * (1.0 + 1e-9), "{name}: relock {relock}, predicted {predicted}");
    }
}

#[test]
fn literal_reading_predicts_a_higher_threshold() {
    let p = params();
    for method in [Method::Epm, Method::Elm] {
        let cumulative = chattering_threshold(method, &p, 1e-3, -1e-3, 0.0, 10, SummandReading::Cumulative).unwrap();
        let literal = chattering_threshold(method, &p, 1e-3, -1e-3, 0.0, 10, SummandReading::Literal).unwrap();
        assert!(literal.threshold_u > cumulative.threshold_u);
        assert_eq!(cumulative.binding_k, 10);
    }
}
