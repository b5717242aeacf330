//! Discrete PID with clamped integral (anti-windup) and clamped output.

/// Gains plus output and integral bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub out_min: f64,
    pub out_max: f64,
    pub integral_max: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            out_min: -1.0,
            out_max: 1.0,
            integral_max: 5.0,
        }
    }
}

impl PidGains {
    /// Gap-keeping defaults; output clamp matches the plant accel limits.
    ///
    /// The distance signal a follower acts on refreshes only when a CAM
    /// arrives, so the error is a sawtooth and the derivative spikes at
    /// every arrival. The spike saturates at `out_max` and the clipping
    /// asymmetry biases the loop; `integral_max` is sized to let the
    /// integrator cancel that bias instead of parking the platoon short of
    /// the setpoint.
    pub fn longitudinal_default() -> Self {
        PidGains {
            kp: 0.5,
            ki: 0.08,
            kd: 0.7,
            out_min: -6.0,
            out_max: 3.0,
            integral_max: 40.0,
        }
    }

    /// Steering defaults; output clamp matches the plant steer limit.
    pub fn lateral_default() -> Self {
        PidGains {
            kp: 1.2,
            ki: 0.0,
            kd: 0.3,
            out_min: -0.6,
            out_max: 0.6,
            integral_max: 5.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.out_min >= self.out_max {
            return Err(format!(
                "out_min {} must be below out_max {}",
                self.out_min, self.out_max
            ));
        }
        if self.integral_max <= 0.0 {
            return Err(format!(
                "integral_max {} must be positive",
                self.integral_max
            ));
        }
        Ok(())
    }
}

/// Controller memory between steps.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

/// One controller update.
///
/// The integral accumulates `error * dt` first (clamped to
/// `+/- integral_max`), then the output is
/// `kp*e + ki*I + kd*(e - e_prev)/dt` clamped to `[out_min, out_max]`.
/// The derivative term is zero on the first call.
pub fn pid_step(gains: &PidGains, state: &PidState, error: f64, dt: f64) -> (f64, PidState) {
    debug_assert!(dt > 0.0, "dt must be positive");
    let integral = (state.integral + error * dt).clamp(-gains.integral_max, gains.integral_max);
    let derivative = if state.initialized {
        (error - state.prev_error) / dt
    } else {
        0.0
    };
    let output = (gains.kp * error + gains.ki * integral + gains.kd * derivative)
        .clamp(gains.out_min, gains.out_max);
    (
        output,
        PidState {
            integral,
            prev_error: error,
            initialized: true,
        },
    )
}
