//! The constants table: closed forms next to their recomputed values.

use ddasym::analysis::{fmt17, LqExponent};
use ddasym::profiles::{self, Moments};
use ddasym::{PrefactorMode, QuadratureSpec};

use crate::CliResult;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstantRow {
    pub name: String,
    pub value: f64,
    /// Independent value this row is compared against, if any.
    pub reference: Option<f64>,
    pub rel_diff: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstantsTable {
    pub version: String,
    pub config_hash: String,
    pub rows: Vec<ConstantRow>,
}

fn row(name: &str, value: f64, reference: Option<f64>, note: &str) -> ConstantRow {
    ConstantRow {
        name: name.into(),
        value,
        reference,
        rel_diff: reference.map(|r| (value - r).abs() / r.abs().max(f64::MIN_POSITIVE)),
        note: note.into(),
    }
}

/// Printed values the arithmetic rows are compared with.
pub const PRINTED_KAPPA: f64 = 3.04326e-5;
pub const PRINTED_MOMENT_COEFFICIENT: f64 = 9.12978e-5;
pub const PRINTED_LOG_INTEGRAL: f64 = 0.18117215;

/// Builds the table. The quadrature rows use `quad`; the moment coefficient
/// is computed for `M₀ = 1` in both prefactor modes.
pub fn cmd_constants(quad: &QuadratureSpec) -> CliResult<ConstantsTable> {
    let mut rows = Vec::new();
    for q in LqExponent::standard() {
        rows.push(row(&format!("gamma_{q}"), q.gamma(), None, "(3/2)(1 - 1/q)"));
    }
    let kappa = profiles::kappa();
    let mc = profiles::moment_coefficient_closed();
    let li = profiles::log_integral_closed();
    rows.push(row("kappa", kappa, Some(PRINTED_KAPPA), "(2pi - 3sqrt3)/(2^7 3^2 pi^3) vs printed"));
    rows.push(row("moment_coefficient", mc, Some(PRINTED_MOMENT_COEFFICIENT), "(2pi - 3sqrt3)/(2^7 3 pi^3) vs printed"));
    rows.push(row("log_integral", li, Some(PRINTED_LOG_INTEGRAL), "(2pi - 3sqrt3)/6 vs printed"));

    let two_d = profiles::dimensionless_log_integral(quad)?;
    let reduced = profiles::dimensionless_log_integral_reduced(quad)?;
    rows.push(row("log_integral_quad_2d", two_d, Some(li), "iterated quadrature vs closed form"));
    rows.push(row("log_integral_quad_reduced", reduced, Some(li), "inner integral in closed form vs closed form"));
    rows.push(row("log_integral_paths", two_d, Some(reduced), "2d path vs reduced path"));

    let m = Moments::radial(1.0);
    let oracle = profiles::moment_coefficient(&m, quad, PrefactorMode::Oracle)?;
    let paper = profiles::moment_coefficient(&m, quad, PrefactorMode::Paper)?;
    rows.push(row("moment_coefficient_quad_oracle", oracle, Some(mc), "radial quadrature, oracle prefactor"));
    rows.push(row("moment_coefficient_quad_paper", paper, Some(mc), "radial quadrature, printed prefactor"));
    let ratio = paper / oracle;
    rows.push(row("moment_coefficient_paper_over_oracle", ratio, Some(std::f64::consts::PI.sqrt().recip()), "expected 1/sqrt(pi)"));
    rows.push(row("kappa_quad_oracle", oracle / 3.0, Some(kappa), "oracle moment coefficient / 3"));
    rows.push(row(
        "field_prefactor_paper_over_oracle",
        PrefactorMode::Paper.field_prefactor() / PrefactorMode::Oracle.field_prefactor(),
        Some(2.0 / std::f64::consts::PI.sqrt()),
        "expected 2sqrt(pi)/pi",
    ));
    rows.push(row(
        "u1rad_prefactor_paper_over_oracle",
        profiles::u1rad_prefactor(PrefactorMode::Paper) / profiles::u1rad_prefactor(PrefactorMode::Oracle),
        Some(std::f64::consts::PI.sqrt().recip()),
        "1/(8pi^2) over (4pi)^(-3/2)",
    ));
    let mut cfg = ddasym::config::ConfigFile::new();
    cfg.set("tolerance", "abs", quad.abs_tol.to_string());
    cfg.set("tolerance", "rel", quad.rel_tol.to_string());
    Ok(ConstantsTable { version: ddasym::VERSION.into(), config_hash: cfg.hash_hex(), rows })
}

impl ConstantsTable {
    pub fn get(&self, name: &str) -> Option<&ConstantRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# ddasym {} config_hash={}\nname,value,reference,rel_diff,note\n", self.version, self.config_hash);
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},\"{}\"\n", r.name, fmt17(r.value), opt(r.reference), opt(r.rel_diff), r.note));
        }
        out
    }

    /// Aligned plain-text rendering for the terminal.
    pub fn to_text(&self) -> String {
        let mut out = format!("ddasym {} constants (config_hash={})\n", self.version, self.config_hash);
        out.push_str(&format!("{:<40} {:>24} {:>24} {:>10}\n", "name", "value", "reference", "rel_diff"));
        for r in &self.rows {
            let reference = r.reference.map(|v| format!("{v:.15e}")).unwrap_or_default();
            let diff = r.rel_diff.map(|v| format!("{v:.2e}")).unwrap_or_default();
            out.push_str(&format!("{:<40} {:>24} {:>24} {:>10}  {}\n", r.name, format!("{:.15e}", r.value), reference, diff, r.note));
        }
        out
    }
}
