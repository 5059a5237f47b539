//! LP-format export.
//!
//! The writer is deterministic: variable names are derived from structural
//! coordinates, rows keep builder order, each row sits on one line, and numbers are
//! printed with Rust's shortest round-trip formatting (never scientific notation),
//! so two exports of the same instance are byte-identical and third-party solvers
//! can consume the file directly.

use std::fmt::Write as _;

use crate::{Error, Result};

use super::{IlpInstance, RowTag, Sense, VarKind};

/// Deterministic variable name: `l_<from>_<to>_<tx>_<req>` for route-use,
/// `g_<from>_<to>_<tx>_<p>_<bt>_<br>` for tuple-select (beam token `o` = omni),
/// `x_<node>_<tx>_<p>` for power-on.
pub fn var_name(kind: &VarKind) -> String {
    match *kind {
        VarKind::RouteUse { from, to, tx, req } => format!("l_{from}_{to}_{tx}_{req}"),
        VarKind::SelectTuple { from, to, tx, power_idx, beam_tx, beam_rx, .. } => format!(
            "g_{from}_{to}_{tx}_{power_idx}_{}_{}",
            beam_tx.token(),
            beam_rx.token()
        ),
        VarKind::PowerOn { node, tx, power_idx } => format!("x_{node}_{tx}_{power_idx}"),
    }
}

/// Deterministic row name, unique within an instance.
pub fn row_name(tag: &RowTag) -> String {
    match *tag {
        RowTag::RouteFlow { node, req } => format!("flow_{node}_{req}"),
        RowTag::RouteLink { from, to, tx, req } => format!("rl_{from}_{to}_{tx}_{req}"),
        RowTag::HopBudget { req } => format!("hop_{req}"),
        RowTag::LinkThroughput { from, to, tx } => format!("thr_{from}_{to}_{tx}"),
        RowTag::PowerUpper { node, tx, power_idx } => format!("pu_{node}_{tx}_{power_idx}"),
        RowTag::PowerLower { node, tx, power_idx } => format!("pl_{node}_{tx}_{power_idx}"),
        RowTag::FsoOutSelect { node, tx } => format!("fo_{node}_{tx}"),
        RowTag::FsoInSelect { node, tx } => format!("fi_{node}_{tx}"),
        RowTag::RfPairSelect { from, to, tx } => format!("rf_{from}_{to}_{tx}"),
        RowTag::BeamConsistency { from, to, tx, beam_tx } => {
            format!("bc_{from}_{to}_{tx}_{beam_tx}")
        }
        RowTag::AlignmentPair { from, to, tx, beam_tx } => {
            format!("ap_{from}_{to}_{tx}_{beam_tx}")
        }
        RowTag::AlignmentWitness { from, to, witness, tx, beam_tx } => {
            format!("aw_{from}_{to}_{witness}_{tx}_{beam_tx}")
        }
    }
}

fn push_term(out: &mut String, first: bool, coeff: f64, name: &str) {
    let mag = coeff.abs();
    if first {
        if coeff < 0.0 {
            out.push_str("- ");
        }
    } else if coeff < 0.0 {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    let _ = write!(out, "{mag} {name}");
}

/// Serialize the instance as an LP-format model named `problem`.
///
/// All variables are declared binary. Structurally empty rows (a flow row at an
/// isolated node, say) are rendered as `0 <first-variable>` so the file stays
/// syntactically valid while preserving the row.
pub fn export_lp(inst: &IlpInstance, problem: &str) -> Result<String> {
    if inst.variables.is_empty() {
        return Err(Error::Mismatch("cannot export an instance with no variables".into()));
    }
    let names: Vec<String> = inst.variables.iter().map(|v| var_name(&v.kind)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {problem}");
    let _ = writeln!(out, "\\ scenario digest: {}", inst.scenario_digest);
    let _ = writeln!(
        out,
        "\\ {} binary variables, {} constraints",
        inst.n_vars(),
        inst.n_rows()
    );
    out.push_str("Minimize\n obj:");
    let mut wrote_obj = false;
    for v in &inst.variables {
        if v.objective != 0.0 {
            out.push(' ');
            let mut term = String::new();
            push_term(&mut term, !wrote_obj, v.objective, &names[v.id]);
            out.push_str(&term);
            wrote_obj = true;
        }
    }
    if !wrote_obj {
        let _ = write!(out, " 0 {}", names[0]);
    }
    if inst.objective_offset != 0.0 {
        // LP objectives accept a constant term.
        let off = inst.objective_offset;
        let _ = write!(out, " {} {}", if off < 0.0 { "-" } else { "+" }, off.abs());
    }
    out.push_str("\nSubject To\n");
    for c in &inst.constraints {
        let _ = write!(out, " {}:", row_name(&c.tag));
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", names[0]);
        } else {
            for (k, &(id, coeff)) in c.terms.iter().enumerate() {
                out.push(' ');
                let mut term = String::new();
                push_term(&mut term, k == 0, coeff, &names[id]);
                out.push_str(&term);
            }
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", c.rhs);
    }
    out.push_str("Binary\n");
    for chunk in names.chunks(8) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}
