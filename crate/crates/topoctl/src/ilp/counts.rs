//! Closed-form size formulas for the program, plus the audit that compares them with
//! what the builder actually emits.
//!
//! The formulas are implemented exactly as printed in the formulation:
//!
//! * variables: `W = N[(N-1)(SD*T + P(1 + T*PHI^2)) + T*P]`
//! * constraints: `Z = N(N-1)[T*SD + 2T + (T-1)PHI] + N[SD + 2PT + 2(T-1)] + SD`
//!
//! They assume uniform transceiver counts and full availability. The constraint
//! formula reproduces its quoted reference tally (5,890 at N=10, SD=10, T=4, P=4,
//! PHI=4). The variable formula does *not*: as printed it evaluates to 27,160 at the
//! same configuration, while the tally quoted alongside it is 25,740 and direct
//! enumeration of generated variables on fully-connected all-FSO geometry gives
//! 26,800 (`N*T*P` power vars + `N(N-1)*T*P*PHI^2` tuple selectors + `N(N-1)*T*SD`
//! route vars). No bracketing we tried reproduces 25,740; the formula's
//! `P(1 + T*PHI^2)` term also counts `P` once per ordered pair (an extra
//! `N(N-1)*P = 360`) with no enumeration counterpart. [`instance_summary`] reports
//! formula, reference tally and actual side by side rather than hiding the spread;
//! tests treat enumerated counts as ground truth.

use serde_json::json;

use super::IlpInstance;

/// Variable-count formula, as printed. Arguments: node count, request count,
/// transceivers per node, power levels, beam openings.
pub fn count_variables(n: u64, sd: u64, t: u64, p: u64, phi: u64) -> u64 {
    n * ((n - 1) * (sd * t + p * (1 + t * phi * phi)) + t * p)
}

/// Constraint-count formula, as printed.
pub fn count_constraints(n: u64, sd: u64, t: u64, p: u64, phi: u64) -> u64 {
    n * (n - 1) * (t * sd + 2 * t + (t - 1) * phi)
        + n * (sd + 2 * p * t + 2 * (t - 1))
        + sd
}

/// Variable count by direct bookkeeping on fully-connected uniform geometry:
/// every ordered pair carries every tuple and every link carries every request.
pub fn enumerated_variables_full(n: u64, sd: u64, t: u64, p: u64, phi: u64) -> u64 {
    n * t * p + n * (n - 1) * t * p * phi * phi + n * (n - 1) * t * sd
}

/// Reference tally quoted alongside the variable formula for (10, 10, 4, 4, 4);
/// kept so the audit can report the spread explicitly.
pub const QUOTED_VARIABLE_TALLY_10_10_4_4_4: u64 = 25_740;

/// Size audit of a built instance: actual counts, per-family row counts, and the
/// closed-form values for the given uniform parameters.
pub fn instance_summary(inst: &IlpInstance, sd: u64, t: u64, p: u64, phi: u64) -> serde_json::Value {
    let n = inst.n_nodes as u64;
    let families: serde_json::Map<String, serde_json::Value> = inst
        .rows_by_family()
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    json!({
        "nodes": n,
        "requests": sd,
        "scenario_digest": inst.scenario_digest,
        "variables": {
            "actual": inst.n_vars(),
            "formula": count_variables(n, sd, t, p, phi),
            "enumerated_full_geometry": enumerated_variables_full(n, sd, t, p, phi),
        },
        "constraints": {
            "actual": inst.n_rows(),
            "formula": count_constraints(n, sd, t, p, phi),
            "by_family": families,
        },
        "note": "formula values assume uniform slots and full availability; \
                 actual counts are ground truth for sparse geometry",
    })
}
