//! Flat-file formats: the trajectory table (CSV with `# key=value` footer),
//! the sweep table, and the JSON run summary.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_homogeneous, closing_diagnostics, metric_norms_at, ClosingOptions, ClosingReport, HomogeneityClass, SweepRow,
};
use crate::error::{Error, Result};
use crate::g2_algebra::FCoeffs;
use crate::integrate::{Termination, Trajectory};
use crate::np_system::{constraints, oracle, OracleName, TauElement};

pub const TRAJECTORY_HEADER: [&str; 11] = ["t", "f0", "f1", "f2", "f3", "f4", "g1", "g2", "g3", "R1", "R2"];
pub const SWEEP_HEADER: [&str; 7] =
    ["a", "termination", "t_star", "max_drift", "class", "closing_verdict", "closing_residual"];

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub t: f64,
    pub f: FCoeffs,
    /// Metric norms `(g1, g2, g3)`; NaN where the form is degenerate.
    pub g: [f64; 3],
    pub r1: f64,
    pub r2: f64,
}

impl TableRow {
    /// Row with norms and constraints computed from `f`.
    pub fn from_f(t: f64, f: FCoeffs, lambda: f64) -> Self {
        let g = metric_norms_at(&f).map_or([f64::NAN; 3], |(a, b, c)| [a, b, c]);
        let c = constraints(&f, lambda);
        TableRow { t, f, g, r1: c.r1, r2: c.r2 }
    }
}

/// A sampled path as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub rows: Vec<TableRow>,
    /// Footer entries in file order.
    pub footer: Vec<(String, String)>,
}

impl TrajectoryTable {
    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_footer(&mut self, key: &str, value: String) {
        match self.footer.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.footer.push((key.to_string(), value)),
        }
    }

    /// The `lambda` footer entry.
    pub fn lambda(&self) -> Result<f64> {
        let v = self.footer_value("lambda").ok_or_else(|| Error::Malformed("missing `# lambda=` footer".into()))?;
        parse_f64(v, "lambda")
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let rows = traj
            .samples
            .iter()
            .map(|s| {
                let m = s.metric;
                TableRow {
                    t: s.t,
                    f: s.f,
                    g: [m.g1, m.g2, m.g1 + m.g2 + 2.0 * m.g3],
                    r1: s.constraints.r1,
                    r2: s.constraints.r2,
                }
            })
            .collect();
        let mut footer = vec![("termination".to_string(), traj.termination.to_string())];
        if let Some(a) = traj.a {
            footer.push(("a".into(), format_f64(a)));
        }
        footer.push(("lambda".into(), format_f64(traj.lambda)));
        TrajectoryTable { rows, footer }
    }

    /// `n` uniformly spaced interior points of the oracle's domain, at its
    /// native `lambda`.
    pub fn from_oracle(name: OracleName, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig("need at least 2 samples".into()));
        }
        let rows = interior_points(name, n)
            .into_iter()
            .map(|t| Ok(TableRow::from_f(t, oracle(name, t)?.f, name.lambda())))
            .collect::<Result<_>>()?;
        let footer = vec![("oracle".to_string(), name.to_string()), ("lambda".to_string(), format_f64(name.lambda()))];
        Ok(TrajectoryTable { rows, footer })
    }

    /// Applies `tau` rowwise; `o` also negates and reverses the time column.
    /// Norm and constraint columns are recomputed from `f` (NaN norms on a
    /// singular orbit), except by the identity, which copies rows.
    pub fn transform(&self, tau: TauElement) -> Result<Self> {
        let lambda = self.lambda()?;
        let mut rows: Vec<TableRow> = self
            .rows
            .iter()
            .map(|r| {
                if tau == TauElement::Identity {
                    return *r;
                }
                let t = if tau.reflects_time() { -r.t } else { r.t };
                TableRow::from_f(t, tau.apply(&r.f), lambda)
            })
            .collect();
        if tau.reflects_time() {
            rows.reverse();
        }
        let mut out = TrajectoryTable { rows, footer: self.footer.clone() };
        let chain = match self.footer_value("tau") {
            Some(prev) => format!("{tau}*{prev}"),
            None => tau.to_string(),
        };
        out.set_footer("tau", chain);
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
            for r in &self.rows {
                let [f0, f1, f2, f3, f4] = r.f.to_array();
                let vals = [r.t, f0, f1, f2, f3, f4, r.g[0], r.g[1], r.g[2], r.r1, r.r2];
                csv.write_record(vals.iter().map(|x| format_f64(*x))).map_err(csv_err)?;
            }
            csv.flush()?;
        }
        for (k, v) in &self.footer {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Parses and validates a table: exact header, 11 numeric columns, `t`
    /// finite and strictly increasing.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut body = String::new();
        let mut footer = Vec::new();
        for line in r.lines() {
            let line = line?;
            if let Some(c) = line.strip_prefix('#') {
                let (k, v) = c
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Malformed(format!("footer line without `=`: {line:?}")))?;
                footer.push((k.trim().to_string(), v.trim().to_string()));
            } else if !footer.is_empty() && !line.trim().is_empty() {
                return Err(Error::Malformed("data after footer".into()));
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = csv.headers().map_err(csv_err)?;
        if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
            return Err(Error::Malformed(format!("expected header {:?}", TRAJECTORY_HEADER.join(","))));
        }
        let mut rows: Vec<TableRow> = Vec::new();
        for (i, rec) in csv.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != TRAJECTORY_HEADER.len() {
                return Err(Error::Malformed(format!("row {}: {} columns", i + 1, rec.len())));
            }
            let v: Vec<f64> =
                rec.iter().zip(TRAJECTORY_HEADER).map(|(x, name)| parse_f64(x, name)).collect::<Result<_>>()?;
            let row = TableRow {
                t: v[0],
                f: FCoeffs::new(v[1], v[2], v[3], v[4], v[5]),
                g: [v[6], v[7], v[8]],
                r1: v[9],
                r2: v[10],
            };
            if !row.t.is_finite() {
                return Err(Error::Malformed(format!("row {}: non-finite t", i + 1)));
            }
            if let Some(prev) = rows.last() {
                if row.t <= prev.t {
                    return Err(Error::Malformed(format!("row {}: t = {} not increasing", i + 1, row.t)));
                }
            }
            rows.push(row);
        }
        Ok(TrajectoryTable { rows, footer })
    }
}

pub(crate) fn interior_points(name: OracleName, n: usize) -> Vec<f64> {
    let (lo, hi) = name.domain();
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Malformed(format!("{what}: cannot parse {s:?} as a number")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Malformed(e.to_string())
}

/// Fixed-schema JSON summary of a singular-IVP run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSummary {
    pub a: f64,
    pub lambda: f64,
    pub termination: Termination,
    pub t_star: Option<f64>,
    pub max_drift: f64,
    pub classification: HomogeneityClass,
    pub closing_report: Option<ClosingReport>,
}

impl SolveSummary {
    /// `closing_report` is `None` unless the run degenerated and the
    /// diagnostic could be evaluated.
    pub fn new(traj: &Trajectory, classify_tol: f64, closing: &ClosingOptions, closing_tol: f64) -> Result<Self> {
        let a = traj.a.ok_or_else(|| Error::InvalidConfig("not a singular-IVP trajectory".into()))?;
        let closing_report = match closing_diagnostics(traj, closing, closing_tol) {
            Ok(r) => Some(r),
            Err(Error::NoDegeneration) | Err(Error::FitWindowTooSmall(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SolveSummary {
            a,
            lambda: traj.lambda,
            termination: traj.termination,
            t_star: traj.termination.t_star(),
            max_drift: traj.max_drift,
            classification: classify_homogeneous(traj, classify_tol).class,
            closing_report,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is always serializable")
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        csv.write_record([
            format_f64(r.a),
            r.termination.map(|t| t.kind().to_string()).unwrap_or_default(),
            opt(r.t_star),
            opt(r.max_drift),
            r.class.map(|c| c.to_string()).unwrap_or_default(),
            r.closing_verdict.clone().unwrap_or_default(),
            opt(r.closing_residual),
        ])
        .map_err(csv_err)?;
    }
    csv.flush()?;
    Ok(())
}
