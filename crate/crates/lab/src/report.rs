//! Markdown summaries of artifact directories. Only reads artifacts, never recomputes.

use std::fmt::Write;
use std::path::Path;

use serde_json::Value;

use crate::artifacts::{read_json, ArtifactError, SUMMARY, VERIFY};

/// Artifacts of one run directory.
pub struct RunArtifacts {
    pub label: String,
    pub summary: Value,
    pub verify: Option<Value>,
}

impl RunArtifacts {
    pub fn load(dir: &Path) -> Result<Self, ArtifactError> {
        let s = dir.join(SUMMARY);
        if !s.is_file() {
            return Err(ArtifactError::Missing(dir.display().to_string()));
        }
        let v = dir.join(VERIFY);
        Ok(RunArtifacts {
            label: dir.display().to_string(),
            summary: read_json(&s)?,
            verify: if v.is_file() {
                Some(read_json(&v)?)
            } else {
                None
            },
        })
    }

    fn checks(&self) -> Vec<&Value> {
        self.verify
            .as_ref()
            .and_then(|v| v["checks"].as_array())
            .map(|a| a.iter().collect())
            .unwrap_or_default()
    }

    /// (label, value) pairs of the fitted constants present in the summary.
    pub fn constants(&self) -> Vec<(String, String)> {
        let s = &self.summary;
        let mut out = Vec::new();
        let mut push = |k: &str, v: &Value| {
            if !v.is_null() {
                out.push((k.to_string(), fmt_value(v)));
            }
        };
        push("mu", &s["mu"]);
        push("s", &s["s"]);
        push("c", &s["c"]);
        let m = &s["metric"];
        push("C1 (min over delta)", &m["c1_min"]);
        push("C2 (max over delta)", &m["c2_max"]);
        push("convergence rate", &m["convergence_rate"]);
        if let Some(env) = m["envelope"].as_array() {
            for e in env {
                push(
                    &format!("length envelope C, cone {}", fmt_value(&e[0])),
                    &e[1],
                );
            }
        }
        let e = &s["energy"];
        if !e.is_null() {
            let d = e["i_over_j_defect"].as_f64().unwrap_or(f64::NAN);
            let ij = Value::String(format!("2 (max defect {d:.3e})"));
            push("I/J", &ij);
            push("eps_hat", &e["properness"]["eps_hat"]);
            push("C_hat", &e["properness"]["c_hat"]);
            push("C0 fit", &e["properness"]["c0_fit"]);
            push("alpha_pass", &e["alpha"]["alpha_pass"]);
            push("alpha probe", &e["alpha_error"]);
        }
        out
    }
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x.fract() == 0.0 && x.abs() < 1e6 => format!("{x}"),
            Some(x) => format!("{x:.6e}"),
            None => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn status(c: &Value) -> &'static str {
    match (c["passed"].as_bool(), c["enabled"].as_bool()) {
        (Some(true), _) => "pass",
        (Some(false), Some(false)) => "fail (informational)",
        _ => "FAIL",
    }
}

/// Table of checks and constants of one run.
pub fn single(run: &RunArtifacts) -> String {
    let mut o = String::new();
    let s = &run.summary;
    writeln!(o, "# {}\n", run.label).unwrap();
    writeln!(
        o,
        "command `{}`, N = {}, deltas {}, reference {}\n",
        fmt_value(&s["command"]),
        fmt_value(&s["grid"]["n"]),
        fmt_value(&s["deltas"]),
        fmt_value(&s["reference"]),
    )
    .unwrap();
    let checks = run.checks();
    if !checks.is_empty() {
        writeln!(o, "## Checks\n").unwrap();
        writeln!(o, "| check | value | bound | margin | status |").unwrap();
        writeln!(o, "|---|---|---|---|---|").unwrap();
        for c in &checks {
            let op = if c["kind"] == "upper" { "<=" } else { ">=" };
            writeln!(
                o,
                "| {} | {} | {} {} | {} | {} |",
                fmt_value(&c["name"]),
                fmt_value(&c["value"]),
                op,
                fmt_value(&c["bound"]),
                fmt_value(&c["margin"]),
                status(c),
            )
            .unwrap();
        }
        let v = run.verify.as_ref().expect("checks come from verify.json");
        writeln!(
            o,
            "\n{} passed, {} failed\n",
            fmt_value(&v["passed"]),
            fmt_value(&v["failed"])
        )
        .unwrap();
    }
    writeln!(o, "## Constants\n").unwrap();
    writeln!(o, "| constant | value |").unwrap();
    writeln!(o, "|---|---|").unwrap();
    for (k, v) in run.constants() {
        writeln!(o, "| {k} | {v} |").unwrap();
    }
    writeln!(o, "\n## Sweep\n").unwrap();
    writeln!(o, "| delta | t | residual | steps |").unwrap();
    writeln!(o, "|---|---|---|---|").unwrap();
    for f in s["finals"].as_array().into_iter().flatten() {
        writeln!(
            o,
            "| {} | {} | {} | {} |",
            fmt_value(&f["delta"]),
            fmt_value(&f["t"]),
            fmt_value(&f["residual"]),
            fmt_value(&f["steps"]),
        )
        .unwrap();
    }
    o
}

/// Side-by-side comparison of two runs.
pub fn diff(a: &RunArtifacts, b: &RunArtifacts) -> String {
    let mut o = String::new();
    writeln!(o, "# {} vs {}\n", a.label, b.label).unwrap();
    writeln!(o, "| | A | B |").unwrap();
    writeln!(o, "|---|---|---|").unwrap();
    for key in ["command", "mu", "s", "c", "deltas", "reference"] {
        writeln!(
            o,
            "| {key} | {} | {} |",
            fmt_value(&a.summary[key]),
            fmt_value(&b.summary[key])
        )
        .unwrap();
    }
    writeln!(
        o,
        "| N | {} | {} |",
        fmt_value(&a.summary["grid"]["n"]),
        fmt_value(&b.summary["grid"]["n"])
    )
    .unwrap();

    let (ca, cb) = (a.constants(), b.constants());
    writeln!(o, "\n## Constants\n").unwrap();
    writeln!(o, "| constant | A | B |").unwrap();
    writeln!(o, "|---|---|---|").unwrap();
    let mut names: Vec<&String> = ca.iter().map(|(k, _)| k).collect();
    for (k, _) in &cb {
        if !names.contains(&k) {
            names.push(k);
        }
    }
    let find = |l: &[(String, String)], k: &str| {
        l.iter()
            .find(|(n, _)| n == k)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| "-".into())
    };
    for k in names {
        writeln!(o, "| {k} | {} | {} |", find(&ca, k), find(&cb, k)).unwrap();
    }

    let (xa, xb) = (a.checks(), b.checks());
    if !xa.is_empty() || !xb.is_empty() {
        writeln!(o, "\n## Checks\n").unwrap();
        writeln!(o, "| check | A value | A status | B value | B status |").unwrap();
        writeln!(o, "|---|---|---|---|---|").unwrap();
        let mut names: Vec<&Value> = xa.iter().map(|c| &c["name"]).collect();
        for c in &xb {
            if !names.contains(&&c["name"]) {
                names.push(&c["name"]);
            }
        }
        for n in names {
            let pick = |l: &[&Value]| -> (String, String) {
                match l.iter().find(|c| &c["name"] == n) {
                    Some(c) => (fmt_value(&c["value"]), status(c).to_string()),
                    None => ("-".into(), "-".into()),
                }
            };
            let ((va, sa), (vb, sb)) = (pick(&xa), pick(&xb));
            writeln!(o, "| {} | {va} | {sa} | {vb} | {sb} |", fmt_value(n)).unwrap();
        }
    }

    writeln!(o, "\n## Sweeps\n").unwrap();
    writeln!(o, "| delta | A residual | A steps | B residual | B steps |").unwrap();
    writeln!(o, "|---|---|---|---|---|").unwrap();
    let fa = a.summary["finals"].as_array().cloned().unwrap_or_default();
    let fb = b.summary["finals"].as_array().cloned().unwrap_or_default();
    let mut deltas: Vec<&Value> = fa.iter().map(|f| &f["delta"]).collect();
    for f in &fb {
        if !deltas.contains(&&f["delta"]) {
            deltas.push(&f["delta"]);
        }
    }
    for d in deltas {
        let pick = |l: &[Value]| match l.iter().find(|f| &f["delta"] == d) {
            Some(f) => (fmt_value(&f["residual"]), fmt_value(&f["steps"])),
            None => ("-".into(), "-".into()),
        };
        let ((ra, sa), (rb, sb)) = (pick(&fa), pick(&fb));
        writeln!(o, "| {} | {ra} | {sa} | {rb} | {sb} |", fmt_value(d)).unwrap();
    }
    o
}

/// One directory gives a summary, two give a diff.
pub fn report(dirs: &[&Path]) -> Result<String, ArtifactError> {
    match dirs {
        [a] => Ok(single(&RunArtifacts::load(a)?)),
        [a, b] => Ok(diff(&RunArtifacts::load(a)?, &RunArtifacts::load(b)?)),
        _ => Err(ArtifactError::Missing(
            "report takes one or two directories".into(),
        )),
    }
}
