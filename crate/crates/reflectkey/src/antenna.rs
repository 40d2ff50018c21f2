//! Thevenin power budget for a receiving antenna.
//!
//! A receive antenna never delivers all captured power to its load: part is
//! dissipated in the loss resistance and part is re-radiated through the
//! radiation resistance, where it becomes observable to third parties. Under
//! a conjugate-matched load the split has a simple closed form, and for a
//! lossless antenna exactly half the total power is re-radiated. The
//! re-radiation ratio computed here is what motivates a nonzero reflection
//! coefficient in the channel model.

use serde::Serialize;

use crate::error::{Error, Result};

/// Complex load impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadImpedance {
    pub re: f64,
    pub im: f64,
}

/// Thevenin equivalent circuit of a receiving antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntennaCircuit {
    /// Loss resistance R_l in ohms, >= 0.
    pub r_loss: f64,
    /// Radiation resistance R_r in ohms, > 0.
    pub r_rad: f64,
    /// Antenna reactance X_A in ohms.
    pub x_a: f64,
    /// Load impedance Z_L at the feed point.
    pub z_load: LoadImpedance,
    /// Open-circuit induced voltage V_OC in volts, > 0.
    pub v_oc: f64,
}

impl AntennaCircuit {
    pub fn new(r_loss: f64, r_rad: f64, x_a: f64, z_load: LoadImpedance, v_oc: f64) -> Result<Self> {
        if !r_loss.is_finite() || r_loss < 0.0 {
            return Err(Error::invalid("r_loss", format!("must be >= 0, got {r_loss}")));
        }
        if !r_rad.is_finite() || r_rad <= 0.0 {
            return Err(Error::invalid("r_rad", format!("must be > 0, got {r_rad}")));
        }
        if !x_a.is_finite() {
            return Err(Error::invalid("x_a", "must be finite"));
        }
        if !z_load.re.is_finite() || !z_load.im.is_finite() {
            return Err(Error::invalid("z_load", "must be finite"));
        }
        if !v_oc.is_finite() || v_oc <= 0.0 {
            return Err(Error::invalid("v_oc", format!("must be > 0, got {v_oc}")));
        }
        Ok(AntennaCircuit {
            r_loss,
            r_rad,
            x_a,
            z_load,
            v_oc,
        })
    }

    /// Antenna impedance Z_A = R_l + R_r + jX_A.
    pub fn antenna_impedance(&self) -> LoadImpedance {
        LoadImpedance {
            re: self.r_loss + self.r_rad,
            im: self.x_a,
        }
    }

    fn is_conjugate_matched(&self) -> bool {
        let za = self.antenna_impedance();
        let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        tol(self.z_load.re, za.re) && tol(self.z_load.im, -za.im)
    }
}

/// Power split at the receiver under conjugate match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBreakdown {
    /// Power delivered into the load, watts.
    pub p_load: f64,
    /// Power dissipated as heat in R_l, watts.
    pub p_diss: f64,
    /// Power re-radiated through R_r, watts.
    pub p_rerad: f64,
    /// Total power at the receiver side, watts.
    pub p_total: f64,
    /// Re-radiation ratio p_rerad / p_total, in (0, 1/2].
    pub ratio: f64,
}

/// Replaces the load with the conjugate match Z_L = Z_A* = R_l + R_r - jX_A.
pub fn matched_load(circuit: &AntennaCircuit) -> AntennaCircuit {
    let za = circuit.antenna_impedance();
    AntennaCircuit {
        z_load: LoadImpedance { re: za.re, im: -za.im },
        ..*circuit
    }
}

/// Power split under conjugate match:
///
/// ```text
/// P_L = V_OC^2 / (8 (R_l + R_r))          (into the load)
/// P_l = V_OC^2 R_l / (8 (R_l + R_r)^2)    (heat)
/// P_r = V_OC^2 R_r / (8 (R_l + R_r)^2)    (re-radiated)
/// ```
///
/// The total is their sum, so conservation holds exactly, and the ratio for
/// a lossless antenna is exactly 1/2. Refuses a non-matched circuit: the
/// formulas above are derived under the match.
pub fn power_breakdown(circuit: &AntennaCircuit) -> Result<PowerBreakdown> {
    if !circuit.is_conjugate_matched() {
        return Err(Error::invalid(
            "z_load",
            format!(
                "power formulas require a conjugate-matched load; call matched_load first \
                 (got {}{:+}j, antenna impedance {}{:+}j)",
                circuit.z_load.re,
                circuit.z_load.im,
                circuit.antenna_impedance().re,
                circuit.antenna_impedance().im
            ),
        ));
    }
    let r_sum = circuit.r_loss + circuit.r_rad;
    let base = circuit.v_oc * circuit.v_oc / (8.0 * r_sum);
    let p_load = base;
    let p_diss = base * (circuit.r_loss / r_sum);
    let p_rerad = base * (circuit.r_rad / r_sum);
    let p_total = p_load + p_diss + p_rerad;
    Ok(PowerBreakdown {
        p_load,
        p_diss,
        p_rerad,
        p_total,
        ratio: p_rerad / p_total,
    })
}

/// Heuristic bridge from a power ratio to an amplitude reflection
/// coefficient: `alpha = coupling * sqrt(ratio)`.
///
/// This is not a derived result; the coupling factor stands in for
/// everything the scalar power budget cannot capture (structural
/// scattering, pattern mismatch, path geometry).
pub fn suggest_alpha(ratio: f64, coupling: f64) -> Result<f64> {
    if !ratio.is_finite() || !(0.0..=0.5).contains(&ratio) {
        return Err(Error::invalid("ratio", format!("must lie in [0, 1/2], got {ratio}")));
    }
    if !coupling.is_finite() || !(0.0..=1.0).contains(&coupling) {
        return Err(Error::invalid(
            "coupling",
            format!("must lie in [0, 1], got {coupling}"),
        ));
    }
    Ok(coupling * ratio.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circuit(r_loss: f64, r_rad: f64, x_a: f64, v_oc: f64) -> AntennaCircuit {
        let c = AntennaCircuit::new(r_loss, r_rad, x_a, LoadImpedance { re: 0.0, im: 0.0 }, v_oc)
            .unwrap();
        matched_load(&c)
    }

    #[test]
    fn matched_load_is_conjugate() {
        let c = circuit(0.0, 50.0, 10.0, 1.0);
        assert_eq!(c.z_load, LoadImpedance { re: 50.0, im: -10.0 });

        let c = circuit(5.0, 45.0, 0.0, 1.0);
        assert_eq!(c.z_load, LoadImpedance { re: 50.0, im: 0.0 });
    }

    #[test]
    fn matched_load_is_idempotent() {
        let c = circuit(3.0, 47.0, -8.0, 2.0);
        assert_eq!(matched_load(&c), c);
    }

    #[test]
    fn lossless_antenna_reradiates_half() {
        let b = power_breakdown(&circuit(0.0, 50.0, 12.0, 1.0)).unwrap();
        assert_eq!(b.ratio, 0.5);
        assert_eq!(b.p_diss, 0.0);
    }

    #[test]
    fn equal_resistances_reradiate_quarter() {
        let b = power_breakdown(&circuit(50.0, 50.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(b.ratio, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn hand_evaluated_split() {
        // V_OC = 2, R_l = 0, R_r = 1.
        let b = power_breakdown(&circuit(0.0, 1.0, 0.0, 2.0)).unwrap();
        assert_eq!(b.p_load, 0.5);
        assert_eq!(b.p_rerad, 0.5);
        assert_eq!(b.p_diss, 0.0);
        assert_eq!(b.p_total, 1.0);
    }

    #[test]
    fn unmatched_circuit_is_refused() {
        let c = AntennaCircuit::new(
            0.0,
            50.0,
            10.0,
            LoadImpedance { re: 50.0, im: 10.0 },
            1.0,
        )
        .unwrap();
        assert!(power_breakdown(&c).is_err());
    }

    #[test]
    fn invalid_circuits_are_rejected() {
        let zl = LoadImpedance { re: 0.0, im: 0.0 };
        assert!(AntennaCircuit::new(0.0, 0.0, 0.0, zl, 1.0).is_err());
        assert!(AntennaCircuit::new(-1.0, 50.0, 0.0, zl, 1.0).is_err());
        assert!(AntennaCircuit::new(0.0, 50.0, 0.0, zl, 0.0).is_err());
        assert!(AntennaCircuit::new(0.0, f64::NAN, 0.0, zl, 1.0).is_err());
    }

    #[test]
    fn alpha_bridge_examples() {
        assert_eq!(suggest_alpha(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            suggest_alpha(0.5, 1.0).unwrap(),
            0.7071067811865476,
            epsilon = 1e-12
        );
        // Coupling that lands on alpha = 0.05 for a lossless antenna.
        assert_relative_eq!(
            suggest_alpha(0.5, 0.07071067811865475).unwrap(),
            0.05,
            epsilon = 1e-12
        );
        assert!(suggest_alpha(0.6, 1.0).is_err());
        assert!(suggest_alpha(0.5, 1.5).is_err());
        assert!(suggest_alpha(-0.1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn power_is_conserved_and_ratio_bounded(
            r_loss in 0.0f64..200.0,
            r_rad in 0.01f64..200.0,
            x_a in -100.0f64..100.0,
            v_oc in 0.01f64..100.0,
        ) {
            let b = power_breakdown(&circuit(r_loss, r_rad, x_a, v_oc)).unwrap();
            // Conservation holds exactly: the total is defined as the sum.
            prop_assert_eq!(b.p_load + b.p_diss + b.p_rerad, b.p_total);
            // Closed form for the total, Thevenin under conjugate match.
            let closed = v_oc * v_oc / (4.0 * (r_loss + r_rad));
            prop_assert!((b.p_total - closed).abs() <= 1e-12 * closed);
            // Ratio in (0, 1/2], equality only when lossless.
            prop_assert!(b.ratio > 0.0 && b.ratio <= 0.5);
            let closed_ratio = r_rad / (2.0 * (r_loss + r_rad));
            prop_assert!((b.ratio - closed_ratio).abs() <= 1e-12);
            if r_loss > 0.0 {
                prop_assert!(b.ratio < 0.5);
            }
        }

        #[test]
        fn ratio_strictly_decreases_in_loss_resistance(
            r_rad in 0.01f64..200.0,
            r_loss in 0.0f64..100.0,
            bump in 0.1f64..100.0,
        ) {
            let lo = power_breakdown(&circuit(r_loss, r_rad, 0.0, 1.0)).unwrap();
            let hi = power_breakdown(&circuit(r_loss + bump, r_rad, 0.0, 1.0)).unwrap();
            prop_assert!(hi.ratio < lo.ratio);
        }

        #[test]
        fn powers_scale_quadratically_in_voltage(
            r_loss in 0.0f64..100.0,
            r_rad in 0.01f64..100.0,
            v_oc in 0.01f64..10.0,
            c in 0.1f64..10.0,
        ) {
            let base = power_breakdown(&circuit(r_loss, r_rad, 0.0, v_oc)).unwrap();
            let scaled = power_breakdown(&circuit(r_loss, r_rad, 0.0, c * v_oc)).unwrap();
            let c2 = c * c;
            prop_assert!((scaled.p_total - c2 * base.p_total).abs() <= 1e-9 * scaled.p_total.abs());
            prop_assert!((scaled.p_rerad - c2 * base.p_rerad).abs() <= 1e-9 * scaled.p_total.abs());
            prop_assert!((scaled.ratio - base.ratio).abs() <= 1e-12);
        }
    }
}
