//! `profile-table`: the expansion terms tabulated at chosen points.
//!
//! Output is comma-separated with one header row after the `#` lines, so
//! it loads directly in gnuplot (`set datafile separator ','`). A cell
//! whose quadrature missed its tolerance is written as `ERR`, which gnuplot
//! treats as missing data; the remaining cells are still computed.

use ddasym::analysis::fmt17;
use ddasym::profiles::{self, Moments};
use ddasym::{PrefactorMode, QuadratureSpec, SpaceTimePoint};

use crate::{CliError, CliResult};

pub const COLUMNS: [&str; 12] = [
    "t",
    "x1",
    "x2",
    "x3",
    "r",
    "u0",
    "u1odd",
    "u1rad_paper",
    "u1rad_oracle",
    "k2log",
    "j",
    "m0sq_j_minus_u1rad",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Failed,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Value(v) => f.write_str(&fmt17(*v)),
            Cell::Failed => f.write_str("ERR"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub config_hash: String,
    pub rows: Vec<Vec<Cell>>,
    /// `(row, column, message)` for each failed cell.
    pub errors: Vec<(usize, String, String)>,
}

/// Points along the first axis at the given radii.
pub fn radial_points(radii: &[f64]) -> Vec<[f64; 3]> {
    radii.iter().map(|&r| [r, 0.0, 0.0]).collect()
}

/// `x,y,z;x,y,z;...`
pub fn parse_points(s: &str) -> CliResult<Vec<[f64; 3]>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let v: Vec<f64> = ddasym::config::parse_list(p).map_err(CliError::Usage)?;
            v.try_into().map_err(|_| CliError::Usage(format!("point '{p}' needs three coordinates")))
        })
        .collect()
}

pub fn cmd_profile_table(times: &[f64], points: &[[f64; 3]], m: &Moments, quad: &QuadratureSpec) -> CliResult<ProfileTable> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
        return Err(CliError::Usage(format!("profile times must be positive, got {t}")));
    }
    if times.is_empty() || points.is_empty() {
        return Err(CliError::Usage("profile-table needs at least one time and one point".into()));
    }
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &t in times {
        for &x in points {
            let p = SpaceTimePoint::new(t, x);
            let row_index = rows.len();
            let mut cell = |name: &str, v: ddasym::Result<f64>| match v {
                Ok(v) => Cell::Value(v),
                Err(e) => {
                    errors.push((row_index, name.to_string(), e.to_string()));
                    Cell::Failed
                }
            };
            let u1_oracle = profiles::eval_u1rad(m, p, quad, PrefactorMode::Oracle);
            let j = profiles::eval_j(p, quad);
            let diff = match (&j, &u1_oracle) {
                (Ok(j), Ok(u)) => Ok(m.m0 * m.m0 * j - u),
                (Err(e), _) | (_, Err(e)) => Err(ddasym::Error::Analysis(format!("depends on a failed cell: {e}"))),
            };
            let row = vec![
                Cell::Value(t),
                Cell::Value(x[0]),
                Cell::Value(x[1]),
                Cell::Value(x[2]),
                Cell::Value(p.r()),
                cell("u0", profiles::eval_u0(m, p)),
                cell("u1odd", profiles::eval_u1odd(m, p)),
                cell("u1rad_paper", profiles::eval_u1rad(m, p, quad, PrefactorMode::Paper)),
                cell("u1rad_oracle", u1_oracle),
                cell("k2log", profiles::eval_k2_log_term(m, p)),
                cell("j", j),
                cell("m0sq_j_minus_u1rad", diff),
            ];
            rows.push(row);
        }
    }
    let mut cfg = ddasym::config::ConfigFile::new();
    cfg.set("table", "t", times.iter().map(f64::to_string).collect::<Vec<_>>().join(", "));
    cfg.set("table", "points", points.iter().map(|x| format!("{},{},{}", x[0], x[1], x[2])).collect::<Vec<_>>().join("; "));
    cfg.set("table", "m0", m.m0.to_string());
    cfg.set("table", "m1", m.m1.iter().map(f64::to_string).collect::<Vec<_>>().join(", "));
    cfg.set("tolerance", "abs", quad.abs_tol.to_string());
    cfg.set("tolerance", "rel", quad.rel_tol.to_string());
    Ok(ProfileTable { config_hash: cfg.hash_hex(), rows, errors })
}

impl ProfileTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# ddasym {} config_hash={}\n", ddasym::VERSION, self.config_hash);
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::to_string).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = COLUMNS.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}
