//! Football configuration (beta = 1/2 at 0 and infinity, mu = 1) at N = 256 over
//! delta in {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}. Runs the verify pipeline twice, then checks each
//! criterion from the artifacts against oracles written here.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use conic_ma::sphere::{ConeData, FieldDocument, SphereGrid};
use conic_ma_lab::config::ExperimentConfig;
use conic_ma_lab::{run, Command};
use serde_json::Value;

const N: u64 = 256;
const DELTAS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
const BETA: f64 = 0.5;
const MU: f64 = 1.0;

const RESIDUAL_TOL: f64 = 1e-9;
const TOL_CURV: f64 = 1e-3;
const ORDER_RATIO: (f64, f64) = (3.0, 5.0);
const NORMALIZATION_TOL: f64 = 1e-8;
const VOLUME_TOL: f64 = 1e-6;
const C_TOL: f64 = 1e-4;
const I2J_TOL: f64 = 1e-8;
const COCYCLE_TOL: f64 = 1e-6;
const GAUGE_TOL: f64 = 1e-8;
const FIRST_VARIATION_TOL: f64 = 1e-4;
const SCALING_TOL: f64 = 1e-8;
const INEQUALITY_TOL: f64 = 1e-6;
const PATH_TOL: f64 = 1e-4;
const RADIAL_TOL: f64 = 0.01;
const DIAMETER_TOL: f64 = 0.03;
const REFERENCE_TOL: f64 = 1e-3;
const SANDWICH_SPREAD: f64 = 2.0;
const SHORTCUT_RATIO_TOL: f64 = 1e-6;

struct Run {
    dir: PathBuf,
    summary: Value,
    verify: Value,
    convergence: Value,
}

impl Run {
    fn load(dir: &Path) -> Run {
        let json = |name: &str| -> Value {
            let text =
                std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
            serde_json::from_str(&text).unwrap()
        };
        Run {
            dir: dir.to_path_buf(),
            summary: json("summary.json"),
            verify: json("verify.json"),
            convergence: json("convergence.json"),
        }
    }

    fn check(&self, name: &str) -> f64 {
        self.verify["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("no check {name}"))["value"]
            .as_f64()
            .unwrap()
    }

    /// Rows of a CSV artifact keyed by header.
    fn csv(&self, name: &str) -> Vec<BTreeMap<String, String>> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(self.dir.join(name))
            .unwrap();
        let headers = r.headers().unwrap().clone();
        r.records()
            .map(|rec| {
                let rec = rec.unwrap();
                headers
                    .iter()
                    .zip(rec.iter())
                    .map(|(h, v)| (h.to_string(), v.to_string()))
                    .collect()
            })
            .collect()
    }

    fn per_delta(&self) -> &Vec<Value> {
        self.convergence["per_delta"].as_array().unwrap()
    }
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn solver(r: &Run) -> Outcome {
    let rows = r.csv("trace.csv");
    let max_res = rows.iter().map(|x| num(x, "residual")).fold(0.0, f64::max);
    let guard = rows
        .iter()
        .map(|x| num(x, "lambda1") - num(x, "t"))
        .fold(f64::INFINITY, f64::min);
    let mut ends = Vec::new();
    for d in DELTAS {
        let last = rows.iter().filter(|x| num(x, "delta") == d).last();
        ends.push(last.map(|x| num(x, "t")).unwrap_or(f64::NAN));
    }
    let reached = ends.iter().all(|&t| t == MU);
    outcome(
        reached && max_res <= RESIDUAL_TOL && guard > 0.0,
        format!(
            "final t {ends:?}, max residual {max_res:.2e} (<= {RESIDUAL_TOL:e}), \
             min lambda1 - t {guard:.4}"
        ),
    )
}

fn ricci(r: &Run) -> Outcome {
    let min = r
        .per_delta()
        .iter()
        .map(|p| f(&p["ricci"]["min_density"]))
        .fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = r.convergence["order"]["ricci"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| f(&e[1]) / f(&e[2]))
        .collect();
    let ordered = ratios.len() == DELTAS.len()
        && ratios
            .iter()
            .all(|&q| q >= ORDER_RATIO.0 && q <= ORDER_RATIO.1);
    outcome(
        min >= -TOL_CURV && ordered,
        format!("min Ricci density {min:.4e}, discrepancy ratio N/2 : N {ratios:.3?}"),
    )
}

fn regularization(r: &Run) -> Outcome {
    let pd = r.per_delta();
    let norm = pd
        .iter()
        .map(|p| f(&p["normalization_defect"]).abs())
        .fold(0.0, f64::max);
    let vol = pd
        .iter()
        .map(|p| (f(&p["volume"]) - 2.0 * PI).abs())
        .fold(0.0, f64::max);
    // B(1/2, 1/2) = pi
    let c = f(&r.summary["c"]);
    let c_err = (c + PI.ln()).abs();
    let gaps: Vec<f64> = pd.iter().map(|p| (f(&p["c_delta"]) - c).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    // log-log slope of |c_delta - c| against delta
    let (x0, x1) = (DELTAS[0].ln(), DELTAS[4].ln());
    let slope = (gaps[0].ln() - gaps[4].ln()) / (x0 - x1);
    outcome(
        norm <= NORMALIZATION_TOL && vol <= VOLUME_TOL && c_err <= C_TOL && monotone && slope > 0.0,
        format!(
            "normalization {norm:.2e}, volume error {vol:.2e}, |c + log pi| {c_err:.2e}, \
             |c_delta - c| {gaps:.4?} (slope {slope:.3})"
        ),
    )
}

fn identities(r: &Run) -> Outcome {
    let rows = r.csv("energies.csv");
    let i2j = rows
        .iter()
        .map(|x| {
            let (i, j) = (num(x, "i"), num(x, "j"));
            if j == 0.0 {
                i.abs()
            } else {
                (i / (2.0 * j) - 1.0).abs()
            }
        })
        .fold(0.0, f64::max);
    let family = r.check("i_equals_2j");
    let cocycle = r.check("cocycle");
    let gauge = r.check("ding_gauge");
    let fv = r.check("first_variation_j");
    outcome(
        i2j <= I2J_TOL
            && family <= I2J_TOL
            && cocycle <= COCYCLE_TOL
            && gauge <= GAUGE_TOL
            && fv <= FIRST_VARIATION_TOL,
        format!(
            "I/2J - 1: solved states {i2j:.2e}, random family {family:.2e}; cocycle {cocycle:.2e}, \
             gauge {gauge:.2e}, first variation {fv:.2e}"
        ),
    )
}

fn inequalities(r: &Run) -> Outcome {
    let scaling = r.check("scaling_equality");
    let names = [
        "jensen_gap",
        "mabuchi_ding_bound",
        "interpolation",
        "regularized_ding_bound",
    ];
    let slacks: Vec<f64> = names.iter().map(|n| r.check(n)).collect();
    outcome(
        scaling <= SCALING_TOL && slacks.iter().all(|&s| s >= -INEQUALITY_TOL),
        format!(
            "scaling {scaling:.2e}; slacks {}",
            names
                .iter()
                .zip(&slacks)
                .map(|(n, s)| format!("{n} {s:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn minimizer(r: &Run) -> Outcome {
    let gap = r.check("minimizer");
    let f_ref = r.check("minimum_nonpositive");
    outcome(
        gap >= -INEQUALITY_TOL && f_ref <= INEQUALITY_TOL,
        format!("min F(phi) - F(phi_ref) {gap:.4e}, F(phi_ref) {f_ref:.4e}"),
    )
}

fn path(r: &Run) -> Outcome {
    let p = &r.convergence["order"]["path"];
    let (e1, e2) = (f(&p[1]).abs(), f(&p[2]).abs());
    let worst = r.check("path_identity");
    let ratio = e1 / e2;
    outcome(
        worst <= PATH_TOL && ratio >= ORDER_RATIO.0 && ratio <= ORDER_RATIO.1,
        format!("max error {worst:.3e}, smallest delta {e1:.3e} -> {e2:.3e} with doubled steps (x{ratio:.3})"),
    )
}

/// (2 / mu) log(1 + r^(2 beta)) - log(1 + r^2) + (c - log beta) / mu
fn football_potential(r: f64) -> f64 {
    let c = -PI.ln();
    (2.0 / MU) * (1.0 + r.powf(2.0 * BETA)).ln() - (1.0 + r * r).ln() + (c - BETA.ln()) / MU
}

fn football(r: &Run) -> Outcome {
    let rows = r.csv("geodesics.csv");
    let exact = |kind: &'static str| {
        rows.iter()
            .filter(move |x| x["kind"] == kind && x["metric"] == "football exact")
    };
    let radial = exact("radial")
        .map(|x| {
            // sqrt(2 / beta) arctan(r0^beta)
            let o = 2.0 * num(x, "param").powf(BETA).atan();
            (num(x, "value") - o).abs() / o
        })
        .fold(0.0, f64::max);
    let diameter = exact("diameter")
        .map(|x| (num(x, "value") - PI).abs() / PI)
        .fold(0.0, f64::max);

    let text = std::fs::read_to_string(r.dir.join("extrapolated.json")).unwrap();
    let doc: FieldDocument = serde_json::from_str(&text).unwrap();
    let g = SphereGrid::with_depth(
        N as usize,
        ConeData::football(BETA),
        doc.r_overlap,
        doc.depth,
    )
    .unwrap();
    let phi = g.from_document(&doc).unwrap();
    let mut sup: f64 = 0.0;
    for i in 0..g.len() {
        let m = g.z(i).norm();
        if (0.5..=2.0).contains(&m) {
            sup = sup.max((phi.values[i] - football_potential(m)).abs());
        }
    }
    let parts = [
        radial <= RADIAL_TOL,
        diameter <= DIAMETER_TOL,
        sup <= REFERENCE_TOL,
    ];
    outcome(
        parts.iter().all(|&p| p),
        format!(
            "radial length error {radial:.2e} (<= {RADIAL_TOL}), diameter error {diameter:.2e} \
             (<= {DIAMETER_TOL}), extrapolated vs closed form on 1/2 <= |z| <= 2: {sup:.3e} \
             (<= {REFERENCE_TOL:e})"
        ),
    )
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn convergence(r: &Run) -> Outcome {
    let sup: Vec<f64> = r.convergence["study"]["sup_diff"]
        .as_array()
        .unwrap()
        .iter()
        .map(f)
        .collect();
    let decreasing = sup.windows(2).all(|w| w[1] < w[0]);
    let rate = log_slope(&DELTAS, &sup);
    let pd = r.per_delta();
    let c1: Vec<f64> = pd.iter().map(|p| f(&p["sandwich"]["c1"])).collect();
    let c2: Vec<f64> = pd.iter().map(|p| f(&p["sandwich"]["c2"])).collect();
    let sandwich = spread(&c1).max(spread(&c2));

    let rows = r.csv("geodesics.csv");
    let mut shortcut = true;
    let mut ratio_err: f64 = 0.0;
    for beta in [0.3, 0.5, 0.7] {
        for metric in ["model cone", "football"] {
            let label = format!("{metric} beta = {beta}");
            let pick = |kind: &str| -> Vec<(f64, f64)> {
                rows.iter()
                    .filter(|x| x["kind"] == kind && x["metric"] == label)
                    .map(|x| (num(x, "param"), num(x, "value")))
                    .collect()
            };
            let (through, around) = (pick("shortcut_through"), pick("shortcut_around"));
            shortcut &= !through.is_empty() && through.len() == around.len();
            for ((eps, t), (eps2, a)) in through.iter().zip(&around) {
                shortcut &= eps == eps2 && a < t;
                if metric == "model cone" {
                    // the developed cone has angle 2 pi beta; the chord subtends pi beta
                    ratio_err = ratio_err.max((a / t - (PI * beta / 2.0).sin()).abs());
                }
            }
        }
    }
    outcome(
        decreasing && rate > 0.0 && sandwich <= SANDWICH_SPREAD && shortcut && ratio_err <= SHORTCUT_RATIO_TOL,
        format!(
            "sup_K |phi_delta - phi_ref| {sup:.4?} (rate {rate:.3}), sandwich spread {sandwich:.3}, \
             shortcut for beta in {{0.3, 0.5, 0.7}}: {shortcut}, model ratio error {ratio_err:.1e}"
        ),
    )
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let mut names: Vec<String> = std::fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut other: Vec<String> = std::fs::read_dir(b)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    other.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok())
        .collect();
    outcome(
        names == other && differing.is_empty(),
        format!(
            "{} artifacts compared, differing: {differing:?}",
            names.len()
        ),
    )
}

fn main() -> ExitCode {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let cfg_path = root.join("configs/football.conf");
    let scratch = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let (dir_a, dir_b) = (scratch.join("run-a"), scratch.join("run-b"));
    for d in [&dir_a, &dir_b] {
        let _ = std::fs::remove_dir_all(d);
    }

    let cfg = ExperimentConfig::load(&cfg_path).expect("football config");
    assert_eq!(cfg.geometry.n as u64, N, "acceptance runs at N = {N}");
    assert_eq!(cfg.solver.deltas, DELTAS);

    let started = Instant::now();
    let first = run(Command::Verify, cfg.clone(), Some(&dir_a)).expect("first run");
    eprintln!("first run: {:.0} s", started.elapsed().as_secs_f64());
    // the second run uses a different worker count
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let second = pool
        .install(|| run(Command::Verify, cfg, Some(&dir_b)))
        .expect("second run");
    eprintln!("second run: {:.0} s", started.elapsed().as_secs_f64());
    let _ = (first, second);

    let r = Run::load(&dir_a);
    let criteria: Vec<(&str, Outcome)> = vec![
        (
            "1 continuity path reaches mu under the eigenvalue guard",
            solver(&r),
        ),
        ("2 Ricci lower bound and second-order agreement", ricci(&r)),
        ("3 normalization, c_delta -> c, volume", regularization(&r)),
        ("4 functional identities", identities(&r)),
        ("5 inequality suite", inequalities(&r)),
        ("6 reference minimizes the Ding functional", minimizer(&r)),
        ("7 path identity and its order", path(&r)),
        ("8 football oracles", football(&r)),
        ("9 convergence surrogates", convergence(&r)),
        ("10 bit-identical artifacts", determinism(&dir_a, &dir_b)),
    ];
    let mut failed = 0;
    for (name, o) in &criteria {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
