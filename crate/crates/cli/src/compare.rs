//! `compare`: residuals of simulated snapshots against expansions.

use std::path::{Path, PathBuf};

use ddasym::analysis::{self, LqExponent, ResidualOptions, ResidualReport};
use ddasym::profiles::ExpansionSpec;
use ddasym::solver::{self, FieldState};
use ddasym::QuadratureSpec;

use crate::simulate::SimulationManifest;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub expansions: Vec<ExpansionSpec>,
    /// Empty means `{1, 2, ∞}`.
    pub q_list: Vec<LqExponent>,
    pub fit_window: Option<(f64, f64)>,
    /// Overrides the shift stored in the manifest.
    pub time_shift: Option<f64>,
    pub apply_window_rule: bool,
    pub quad: QuadratureSpec,
}

/// Whether a richer expansion beats a poorer one at every common time.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Ordering {
    pub poorer: String,
    pub richer: String,
    pub q: LqExponent,
    pub richer_smaller_everywhere: bool,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutput {
    pub reports: Vec<ResidualReport>,
    pub orderings: Vec<Ordering>,
    pub files: Vec<PathBuf>,
}

pub fn load_snapshots(dir: &Path) -> CliResult<(SimulationManifest, Vec<FieldState>)> {
    let manifest = SimulationManifest::read(dir)?;
    let snaps = manifest
        .snapshot_paths(dir)
        .iter()
        .map(|p| solver::read_snapshot(p).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    if snaps.is_empty() {
        return Err(CliError::Usage(format!("{} lists no snapshots", dir.display())));
    }
    Ok((manifest, snaps))
}

/// Residual ratio richer/poorer at every time present in both reports.
pub fn ordering(poorer: &ResidualReport, richer: &ResidualReport, q: LqExponent) -> Ordering {
    let a = poorer.residuals(q);
    let b = richer.residuals(q);
    let mut worst: f64 = 0.0;
    for (t, r) in &b {
        if let Some((_, p)) = a.iter().find(|(s, _)| s == t) {
            worst = worst.max(r / p);
        }
    }
    Ordering {
        poorer: poorer.expansion_label.clone(),
        richer: richer.expansion_label.clone(),
        q,
        richer_smaller_everywhere: worst < 1.0,
        worst_ratio: worst,
    }
}

fn gnuplot_script(files: &[(String, String)], q_list: &[LqExponent]) -> String {
    let mut s = String::from(
        "# residual norms against profile time; run with: gnuplot -p residuals.gp\n\
         set datafile separator ','\nset logscale xy\nset key left bottom\n\
         set xlabel 'T'\nset ylabel 'residual'\n",
    );
    for (i, q) in q_list.iter().enumerate() {
        if i > 0 {
            s.push_str("pause -1 'next q'\n");
        }
        s.push_str(&format!("set title 'L^{q} residual'\nplot "));
        let parts: Vec<String> = files
            .iter()
            .map(|(label, csv)| {
                format!("'{csv}' skip 2 using (strcol(3) eq '{q}' ? $2 : 1/0):4 with linespoints title '{label}'")
            })
            .collect();
        s.push_str(&parts.join(", \\\n     "));
        s.push('\n');
    }
    s
}

/// Writes `residual_<label>.{csv,json}` per expansion and `residuals.gp`
/// into `out`.
pub fn cmd_compare(dir: &Path, out: &Path, opts: &CompareOptions) -> CliResult<CompareOutput> {
    let (manifest, snaps) = load_snapshots(dir)?;
    let moments = analysis::moments_of_grid(&snaps[0]);
    let options = ResidualOptions {
        time_shift: opts.time_shift.unwrap_or(manifest.time_shift),
        apply_window_rule: opts.apply_window_rule,
        fit_window: opts.fit_window,
    };
    let mut reports = Vec::new();
    let mut files = Vec::new();
    let mut plotted = Vec::new();
    for spec in &opts.expansions {
        let report = analysis::residual_report(&snaps, &moments, spec, &opts.q_list, &opts.quad, &options)?;
        let stem = format!("residual_{}", report.expansion_label.replace('+', "_"));
        let csv = out.join(format!("{stem}.csv"));
        let json = out.join(format!("{stem}.json"));
        crate::write_text(&csv, &report.to_csv())?;
        crate::write_text(&json, &report.to_json()?)?;
        plotted.push((report.expansion_label.clone(), format!("{stem}.csv")));
        files.push(csv);
        files.push(json);
        reports.push(report);
    }
    let q_list = reports.first().map(|r| r.q_list.clone()).unwrap_or_default();
    let gp = out.join("residuals.gp");
    let header = format!("# ddasym {} config_hash={}\n", ddasym::VERSION, manifest.config_hash);
    crate::write_text(&gp, &(header + &gnuplot_script(&plotted, &q_list)))?;
    files.push(gp);
    let mut orderings = Vec::new();
    for pair in reports.windows(2) {
        for &q in &q_list {
            orderings.push(ordering(&pair[0], &pair[1], q));
        }
    }
    Ok(CompareOutput { reports, orderings, files })
}

/// Human-readable fit summary with the theoretical targets.
pub fn summary(out: &CompareOutput) -> String {
    let mut s = String::new();
    for r in &out.reports {
        s.push_str(&format!("expansion {} ({} in-window snapshots)\n", r.expansion_label, r.times.len()));
        for f in &r.fits {
            let slope = |d: &Option<analysis::DecayFit>| d.as_ref().map(|d| format!("{:+.4}", d.slope)).unwrap_or_else(|| "n/a".into());
            s.push_str(&format!(
                "  q={:<4} slope {}  log-corrected {}  targets {:+.2} / {:+.2}\n",
                f.q.to_string(),
                slope(&f.plain),
                slope(&f.log_corrected),
                f.first_claim_target,
                f.second_claim_target
            ));
        }
    }
    for o in &out.orderings {
        s.push_str(&format!(
            "{} vs {} (q={}): {} (worst ratio {:.6})\n",
            o.richer,
            o.poorer,
            o.q,
            if o.richer_smaller_everywhere { "smaller at every time" } else { "NOT smaller at every time" },
            o.worst_ratio
        ));
    }
    s
}
