//! Physical-layer channel model for hybrid RF/FSO nodes.
//!
//! Everything downstream (link enumeration, the integer program, the engines) consumes
//! this module's handful of scalar functions:
//!
//! * dBm/mW conversions,
//! * FSO geometric loss `p_rx = p_tx * (D / (D + 100*d*theta))^2` with aperture
//!   diameter `D` and distance `d` in metres and beam opening `theta` in radians
//!   (beam sets are configured in mrad and converted at this boundary),
//! * RF path loss `p_rx = p_tx * g_ref * (1m/d)^alpha` with `d` clamped to >= 1 m,
//! * FSK and OOK bit-error rates built on a complementary error function that is
//!   accurate to better than 1e-12 absolute on [0, 6],
//! * `max_range`, the closed-form inversion of the loss models at the receiver
//!   sensitivity, used to decide link availability.
//!
//! The FSK BER ships in two modes. `Monotone` (default) uses
//! `0.5*erfc(p_rx / (2*p_noise))`, which decreases as received power grows. `Literal`
//! keeps the negated argument `0.5*erfc(-p_rx / (2*p_noise))`, which *increases* with
//! received power and saturates near 1; it exists so the behaviour of the published
//! formula can be reproduced in fidelity experiments, and is never the default.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

// ---- transceiver and parameter types -------------------------------------------------

/// Hardware family of a transceiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransceiverKind {
    Rf,
    Fso,
}

/// One transceiver slot on a node.
///
/// `sensitivity_dbm` doubles as the receiver sensitivity of the peer end: the model
/// assumes a homogeneous fleet, so availability of a link is judged against the
/// transmitting transceiver's own spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransceiverSpec {
    pub kind: TransceiverKind,
    /// Raw channel capacity in Mbps, before sharing and BER derating.
    pub c_max_mbps: f64,
    /// Receiver sensitivity in dBm; converted to mW wherever power is compared.
    pub sensitivity_dbm: f64,
    /// Aperture diameter in metres (enters the FSO geometric loss only).
    pub diameter_m: f64,
    /// Widest usable beam opening in mrad. Ignored for RF.
    pub max_beam_mrad: f64,
    /// Highest usable transmit power in mW; candidates above it are never generated.
    pub max_power_mw: f64,
}

impl TransceiverSpec {
    pub fn sensitivity_mw(&self) -> f64 {
        dbm_to_mw(self.sensitivity_dbm)
    }

    /// Field-level validation; `what` names the owner in error messages.
    pub fn validate(&self, what: &str, problems: &mut Vec<String>) {
        if !(self.c_max_mbps > 0.0) {
            problems.push(format!("{what}: c_max_mbps must be > 0 (got {})", self.c_max_mbps));
        }
        if !self.sensitivity_dbm.is_finite() {
            problems.push(format!("{what}: sensitivity_dbm must be finite"));
        }
        if !(self.diameter_m > 0.0) {
            problems.push(format!("{what}: diameter_m must be > 0 (got {})", self.diameter_m));
        }
        if self.kind == TransceiverKind::Fso && !(self.max_beam_mrad > 0.0) {
            problems.push(format!(
                "{what}: max_beam_mrad must be > 0 for FSO (got {})",
                self.max_beam_mrad
            ));
        }
        if !(self.max_power_mw > 0.0) {
            problems.push(format!("{what}: max_power_mw must be > 0 (got {})", self.max_power_mw));
        }
    }
}

/// A mesh node: position in metres plus its transceiver complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub transceivers: Vec<TransceiverSpec>,
}

impl NodeSpec {
    pub fn distance_to(&self, other: &NodeSpec) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Which FSK BER formula variant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BerMode {
    #[default]
    Monotone,
    Literal,
}

/// Environment-level channel parameters shared by every link in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    /// RF receiver noise power in mW.
    pub p_noise_rf_mw: f64,
    /// FSO receiver noise power in mW.
    pub p_noise_fso_mw: f64,
    /// Photodetector responsivity in A/W (enters the OOK BER argument).
    pub responsivity_a_per_w: f64,
    pub ber_mode: BerMode,
    /// RF path-loss exponent `alpha`.
    pub rf_pathloss_exponent: f64,
    /// RF received power at the 1 m reference distance, as a fraction of p_tx.
    pub rf_reference_gain: f64,
    /// Upper cap applied to every computed range (bounds the theta -> 0 FSO limit).
    pub range_cap_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            p_noise_rf_mw: 1e-9,
            p_noise_fso_mw: 4e-6,
            responsivity_a_per_w: 0.5,
            ber_mode: BerMode::Monotone,
            rf_pathloss_exponent: 2.0,
            rf_reference_gain: 1e-6,
            range_cap_m: 1e6,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self, problems: &mut Vec<String>) {
        if !(self.p_noise_rf_mw > 0.0) {
            problems.push(format!("channel.p_noise_rf_mw must be > 0 (got {})", self.p_noise_rf_mw));
        }
        if !(self.p_noise_fso_mw > 0.0) {
            problems.push(format!(
                "channel.p_noise_fso_mw must be > 0 (got {})",
                self.p_noise_fso_mw
            ));
        }
        if !(self.responsivity_a_per_w > 0.0) {
            problems.push(format!(
                "channel.responsivity_a_per_w must be > 0 (got {})",
                self.responsivity_a_per_w
            ));
        }
        if !(self.rf_pathloss_exponent >= 1.0) {
            problems.push(format!(
                "channel.rf_pathloss_exponent must be >= 1 (got {})",
                self.rf_pathloss_exponent
            ));
        }
        if !(self.rf_reference_gain > 0.0) {
            problems.push(format!(
                "channel.rf_reference_gain must be > 0 (got {})",
                self.rf_reference_gain
            ));
        }
        if !(self.range_cap_m > 0.0) {
            problems.push(format!("channel.range_cap_m must be > 0 (got {})", self.range_cap_m));
        }
    }
}

/// The discrete decision sets: selectable transmit powers and beam openings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSets {
    pub powers_mw: Vec<f64>,
    pub beams_mrad: Vec<f64>,
}

impl DiscreteSets {
    pub fn new(powers_mw: Vec<f64>, beams_mrad: Vec<f64>) -> Result<Self> {
        let sets = DiscreteSets { powers_mw, beams_mrad };
        let mut problems = Vec::new();
        sets.validate(&mut problems);
        if problems.is_empty() {
            Ok(sets)
        } else {
            Err(Error::InvalidScenario { problems })
        }
    }

    pub fn validate(&self, problems: &mut Vec<String>) {
        if self.powers_mw.is_empty() {
            problems.push("powers_mw must not be empty".to_string());
        }
        // An empty beam menu is fine as long as nothing optical needs it.
        check_level_set("powers_mw", &self.powers_mw, problems);
        check_level_set("beams_mrad", &self.beams_mrad, problems);
    }
}

fn check_level_set(name: &str, values: &[f64], problems: &mut Vec<String>) {
    for (k, v) in values.iter().enumerate() {
        if !(*v > 0.0) || !v.is_finite() {
            problems.push(format!("{name}[{k}] must be positive and finite (got {v})"));
        }
    }
    for w in values.windows(2) {
        if !(w[1] > w[0]) {
            problems.push(format!("{name} must be strictly increasing ({} then {})", w[0], w[1]));
        }
    }
}

// ---- unit conversions ----------------------------------------------------------------

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn mrad_to_rad(mrad: f64) -> f64 {
    mrad * 1e-3
}

// ---- loss models ---------------------------------------------------------------------

/// FSO received power after geometric spreading.
///
/// `p_tx * (diameter / (diameter + 100 * distance * theta))^2`, all powers in mW,
/// lengths in metres, `theta_rad` in radians. At `distance = 0` the full transmit
/// power arrives; the result decreases strictly in both distance and beam opening.
pub fn geometric_loss(p_tx_mw: f64, diameter_m: f64, distance_m: f64, theta_rad: f64) -> f64 {
    let denom = diameter_m + 100.0 * distance_m * theta_rad;
    let ratio = diameter_m / denom;
    p_tx_mw * ratio * ratio
}

/// RF received power under power-law path loss with a 1 m reference distance.
///
/// Distances below 1 m clamp to 1 m so the model never amplifies.
pub fn rf_path_loss(p_tx_mw: f64, distance_m: f64, params: &ChannelParams) -> f64 {
    let d = distance_m.max(1.0);
    p_tx_mw * params.rf_reference_gain / d.powf(params.rf_pathloss_exponent)
}

// ---- bit-error rates -----------------------------------------------------------------

/// FSK bit-error rate for an RF link at the given received power (mW).
///
/// Monotone mode: `0.5 * erfc(p_rx / (2 * p_noise))`, strictly decreasing in `p_rx`
/// and bounded in (0, 0.5]. Literal mode keeps the negated argument and is clamped
/// to [0, 1].
pub fn ber_rf_fsk(p_rx_mw: f64, params: &ChannelParams) -> Result<f64> {
    if !(params.p_noise_rf_mw > 0.0) {
        return Err(Error::Domain(format!(
            "p_noise_rf_mw must be > 0 (got {})",
            params.p_noise_rf_mw
        )));
    }
    let arg = p_rx_mw / (2.0 * params.p_noise_rf_mw);
    Ok(match params.ber_mode {
        // erfc underflows to 0 past an argument of roughly 27; floor the result so
        // the monotone band stays strictly positive for downstream derating.
        BerMode::Monotone => (0.5 * libm::erfc(arg)).max(f64::MIN_POSITIVE),
        BerMode::Literal => (0.5 * libm::erfc(-arg)).clamp(0.0, 1.0),
    })
}

/// OOK bit-error rate for an FSO link at the given received power (mW):
/// `0.5 * erfc(R * p_rx / (2 * sqrt(2) * p_noise))`.
pub fn ber_fso_ook(p_rx_mw: f64, params: &ChannelParams) -> Result<f64> {
    if !(params.p_noise_fso_mw > 0.0) {
        return Err(Error::Domain(format!(
            "p_noise_fso_mw must be > 0 (got {})",
            params.p_noise_fso_mw
        )));
    }
    let arg =
        params.responsivity_a_per_w * p_rx_mw / (2.0 * std::f64::consts::SQRT_2 * params.p_noise_fso_mw);
    Ok((0.5 * libm::erfc(arg)).max(f64::MIN_POSITIVE))
}

// ---- range inversion -----------------------------------------------------------------

/// Longest distance at which a transmission at `p_tx_mw` still meets the receiver
/// sensitivity, for this transceiver's loss model.
///
/// FSO inverts the geometric loss: `d = D * (sqrt(p_tx/S) - 1) / (100 * theta)`;
/// a non-positive `theta_rad` means an unspread beam and yields the configured cap.
/// RF inverts the path-law: `max(1, (p_tx * g_ref / S)^(1/alpha))`, and returns 0
/// when even the clamped 1 m received power is below sensitivity. Both branches
/// return 0 whenever no distance qualifies and never exceed `params.range_cap_m`.
pub fn max_range(tx: &TransceiverSpec, p_tx_mw: f64, theta_rad: f64, params: &ChannelParams) -> f64 {
    let s_mw = tx.sensitivity_mw();
    match tx.kind {
        TransceiverKind::Fso => {
            if p_tx_mw < s_mw {
                return 0.0;
            }
            if theta_rad <= 0.0 {
                return params.range_cap_m;
            }
            let d = tx.diameter_m * ((p_tx_mw / s_mw).sqrt() - 1.0) / (100.0 * theta_rad);
            d.min(params.range_cap_m)
        }
        TransceiverKind::Rf => {
            if p_tx_mw * params.rf_reference_gain < s_mw {
                return 0.0;
            }
            let d = (p_tx_mw * params.rf_reference_gain / s_mw)
                .powf(1.0 / params.rf_pathloss_exponent)
                .max(1.0);
            d.min(params.range_cap_m)
        }
    }
}

// ---- tests ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force complementary error function, independent of the implementation path:
    /// Maclaurin series of erf for small arguments, Lentz-evaluated continued fraction
    /// for large ones. Good to ~1e-15 absolute on [0, 6].
    fn erfc_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_oracle(-x);
        }
        if x < 2.0 {
            // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
            let mut term = x;
            let mut sum = x;
            let mut n = 0u32;
            while term.abs() > 1e-20 && n < 200 {
                n += 1;
                term *= -x * x / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            // erfc(x) = exp(-x^2)/sqrt(pi) * K, K the continued fraction
            // 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), terms a_n = n/2.
            let tiny = 1e-300;
            let mut f = tiny;
            let mut c = f;
            let mut d = 0.0;
            let mut b = x;
            for n in 0..500 {
                let a = if n == 0 { 1.0 } else { n as f64 / 2.0 };
                d = b + a * d;
                if d.abs() < tiny {
                    d = tiny;
                }
                c = b + a / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-17 {
                    break;
                }
                b = x; // every denominator term is x
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() * f
        }
    }

    #[test]
    fn erfc_matches_brute_force_oracle_within_1e12_on_0_to_6() {
        let mut worst = 0.0f64;
        let mut at = 0.0f64;
        let mut x = 0.0;
        while x <= 6.0 {
            let diff = (libm::erfc(x) - erfc_oracle(x)).abs();
            if diff > worst {
                worst = diff;
                at = x;
            }
            x += 1e-3;
        }
        assert!(worst <= 1e-12, "worst |erfc - oracle| = {worst:.3e} at x = {at}");
    }

    #[test]
    fn erfc_handles_negated_arguments_for_literal_mode() {
        for x in [0.25, 1.0, 2.5, 4.0] {
            let diff = (libm::erfc(-x) - erfc_oracle(-x)).abs();
            assert!(diff <= 1e-12, "x = {x}: diff = {diff:.3e}");
        }
    }

    #[test]
    fn dbm_conversions_hit_frozen_values() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(-43.0) - 5.01187233627272514e-5).abs() < 1e-19);
        assert!((dbm_to_mw(-84.0) - 3.98107170553496896e-9).abs() < 1e-23);
        assert_eq!(mw_to_dbm(1.0), 0.0);
        assert_eq!(dbm_to_mw(10.0), 10.0);
    }

    #[test]
    fn geometric_loss_frozen_example() {
        // 10 mW, 5 cm aperture, 100 m, 80 mrad.
        let got = geometric_loss(10.0, 0.05, 100.0, mrad_to_rad(80.0));
        let want = 3.90576176452255328e-8;
        assert!(
            (got - want).abs() <= 1e-22,
            "geometric_loss = {got:.17e}, want {want:.17e}"
        );
    }

    #[test]
    fn geometric_loss_zero_distance_returns_full_power() {
        assert_eq!(geometric_loss(7.5, 0.1, 0.0, 0.08), 7.5);
    }

    #[test]
    fn rf_path_loss_clamps_below_one_metre() {
        let params = ChannelParams::default();
        let at_1m = rf_path_loss(5.0, 1.0, &params);
        assert_eq!(rf_path_loss(5.0, 0.2, &params), at_1m);
        assert_eq!(rf_path_loss(5.0, 0.0, &params), at_1m);
        assert!((at_1m - 5.0 * params.rf_reference_gain).abs() < 1e-18);
    }

    #[test]
    fn ber_fsk_monotone_frozen_point() {
        // p_rx chosen so p_rx / (2 p_noise) = 1 -> 0.5 erfc(1).
        let params = ChannelParams { p_noise_rf_mw: 1e-9, ..ChannelParams::default() };
        let ber = ber_rf_fsk(2e-9, &params).unwrap();
        assert!((ber - 7.86496035251425668e-2).abs() < 1e-15, "ber = {ber:.17e}");
    }

    #[test]
    fn ber_fsk_literal_rises_with_power_and_stays_in_unit_interval() {
        let params = ChannelParams {
            ber_mode: BerMode::Literal,
            p_noise_rf_mw: 1e-9,
            ..ChannelParams::default()
        };
        let lo = ber_rf_fsk(1e-10, &params).unwrap();
        let hi = ber_rf_fsk(1e-8, &params).unwrap();
        assert!(lo < hi, "literal mode must increase with received power ({lo} vs {hi})");
        assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        assert!(hi > 0.5, "well above noise the literal form saturates toward 1 (got {hi})");
    }

    #[test]
    fn ber_fso_ook_frozen_point() {
        // R * p_rx = 2 sqrt(2) p_noise -> argument exactly 1.
        let params = ChannelParams {
            p_noise_fso_mw: 1e-6,
            responsivity_a_per_w: 0.5,
            ..ChannelParams::default()
        };
        let p_rx = 2.0 * std::f64::consts::SQRT_2 * 1e-6 / 0.5;
        let ber = ber_fso_ook(p_rx, &params).unwrap();
        assert!((ber - 7.86496035251425668e-2).abs() < 1e-15, "ber = {ber:.17e}");
    }

    #[test]
    fn ber_rejects_non_positive_noise() {
        let mut params = ChannelParams::default();
        params.p_noise_rf_mw = 0.0;
        assert!(ber_rf_fsk(1e-6, &params).is_err());
        params.p_noise_rf_mw = 1e-9;
        params.p_noise_fso_mw = -1.0;
        assert!(ber_fso_ook(1e-6, &params).is_err());
    }

    fn fso_spec() -> TransceiverSpec {
        TransceiverSpec {
            kind: TransceiverKind::Fso,
            c_max_mbps: 500.0,
            sensitivity_dbm: -43.0,
            diameter_m: 0.05,
            max_beam_mrad: 240.0,
            max_power_mw: 10.0,
        }
    }

    fn rf_spec() -> TransceiverSpec {
        TransceiverSpec {
            kind: TransceiverKind::Rf,
            c_max_mbps: 50.0,
            sensitivity_dbm: -84.0,
            diameter_m: 0.05,
            max_beam_mrad: 0.0,
            max_power_mw: 10.0,
        }
    }

    #[test]
    fn max_range_fso_frozen_example() {
        let got = max_range(&fso_spec(), 10.0, 0.08, &ChannelParams::default());
        assert!((got - 2.78552245094351925).abs() < 1e-12, "range = {got:.17}");
    }

    #[test]
    fn max_range_below_sensitivity_is_zero() {
        let params = ChannelParams::default();
        assert_eq!(max_range(&fso_spec(), 1e-6, 0.08, &params), 0.0);
        // RF: 1 mW * 1e-6 gain = 1e-6 mW at 1 m, far above -84 dBm, so nonzero...
        assert!(max_range(&rf_spec(), 1.0, 0.0, &params) > 0.0);
        // ...but a hot sensitivity kills it.
        let mut deaf = rf_spec();
        deaf.sensitivity_dbm = 0.0;
        assert_eq!(max_range(&deaf, 1.0, 0.0, &params), 0.0);
    }

    #[test]
    fn max_range_fso_zero_theta_hits_cap() {
        let params = ChannelParams { range_cap_m: 12345.0, ..ChannelParams::default() };
        assert_eq!(max_range(&fso_spec(), 10.0, 0.0, &params), 12345.0);
    }

    #[test]
    fn max_range_rf_frozen_values() {
        let params = ChannelParams::default();
        let r5 = max_range(&rf_spec(), 5.0, 0.0, &params);
        let r10 = max_range(&rf_spec(), 10.0, 0.0, &params);
        assert!((r5 - 3.54392891541970840e1).abs() < 1e-10, "r5 = {r5:.17}");
        assert!((r10 - 5.01187233627272519e1).abs() < 1e-10, "r10 = {r10:.17}");
    }

    #[test]
    fn discrete_sets_reject_empty_unsorted_or_nonpositive() {
        assert!(DiscreteSets::new(vec![], vec![80.0]).is_err());
        // No beam menu is fine: purely RF deployments never consult it.
        assert!(DiscreteSets::new(vec![5.0], vec![]).is_ok());
        assert!(DiscreteSets::new(vec![10.0, 5.0], vec![80.0]).is_err());
        assert!(DiscreteSets::new(vec![5.0, 5.0], vec![80.0]).is_err());
        assert!(DiscreteSets::new(vec![-5.0], vec![80.0]).is_err());
        assert!(DiscreteSets::new(vec![5.0, 10.0], vec![80.0, 160.0, 240.0]).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn geometric_loss_decreases_with_distance(
            p in 1e-3f64..100.0,
            dia in 1e-3f64..2.0,
            d1 in 0.0f64..1e4,
            extra in 1e-6f64..1e4,
            theta in 1e-4f64..0.5,
        ) {
            let near = geometric_loss(p, dia, d1, theta);
            let far = geometric_loss(p, dia, d1 + extra, theta);
            prop_assert!(far < near, "far {far} !< near {near}");
        }

        #[test]
        fn geometric_loss_decreases_with_beam_opening(
            p in 1e-3f64..100.0,
            dia in 1e-3f64..2.0,
            d in 1e-3f64..1e4,
            theta in 1e-4f64..0.5,
            wider in 1e-6f64..0.5,
        ) {
            let narrow = geometric_loss(p, dia, d, theta);
            let wide = geometric_loss(p, dia, d, theta + wider);
            prop_assert!(wide < narrow);
        }

        #[test]
        fn monotone_bers_decrease_with_received_power_and_stay_in_band(
            p1 in 1e-12f64..1e-3,
            factor in 1.0001f64..1e3,
        ) {
            let params = ChannelParams::default();
            let (a, b) = (ber_rf_fsk(p1, &params).unwrap(), ber_rf_fsk(p1 * factor, &params).unwrap());
            prop_assert!(b <= a, "fsk: {b} > {a}");
            prop_assert!(a <= 0.5 && a > 0.0);
            let params = ChannelParams { p_noise_fso_mw: 1e-5, ..params };
            let (a, b) = (ber_fso_ook(p1, &params).unwrap(), ber_fso_ook(p1 * factor, &params).unwrap());
            prop_assert!(b <= a, "ook: {b} > {a}");
            prop_assert!(a <= 0.5 && a > 0.0);
        }

        #[test]
        fn max_range_round_trips_through_the_loss_model(
            p_over_s_db in 0.1f64..60.0,
            dia in 1e-2f64..2.0,
            theta in 1e-3f64..0.3,
            sens_dbm in -90.0f64..-20.0,
        ) {
            let params = ChannelParams::default();
            let mut tx = fso_spec();
            tx.sensitivity_dbm = sens_dbm;
            tx.diameter_m = dia;
            let s = tx.sensitivity_mw();
            let p_tx = s * 10f64.powf(p_over_s_db / 10.0);
            let r = max_range(&tx, p_tx, theta, &params);
            prop_assert!(r > 0.0);
            if r < params.range_cap_m {
                let back = geometric_loss(p_tx, dia, r, theta);
                prop_assert!(((back - s) / s).abs() <= 1e-9, "rel err {}", ((back - s) / s).abs());
            }

            let mut rf = rf_spec();
            rf.sensitivity_dbm = sens_dbm;
            let p_rf = s / params.rf_reference_gain * 10f64.powf(p_over_s_db / 10.0);
            let r = max_range(&rf, p_rf, 0.0, &params);
            if r > 1.0 && r < params.range_cap_m {
                let back = rf_path_loss(p_rf, r, &params);
                prop_assert!(((back - s) / s).abs() <= 1e-9);
            }
        }

        #[test]
        fn dbm_mw_round_trip(mw in 1e-12f64..1e3) {
            let back = dbm_to_mw(mw_to_dbm(mw));
            prop_assert!(((back - mw) / mw).abs() <= 1e-12);
        }
    }
}
