use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use super::HarnessError;
use crate::codec;
use crate::decimation::{self, BoundReport, DecimationOperators};
use crate::frames::{self, AnalysisOperator, FrameSpec};
use crate::linalg::{self, CMatrix};
use crate::operators::DecimationPlan;
use crate::quantizer::{self, Alphabet, QuantizationOutput};

pub const CSV_HEADER: [&str; 21] = [
    "k",
    "m",
    "rho",
    "eta",
    "r",
    "L",
    "delta",
    "scheme",
    "u_inf",
    "err",
    "err_bound",
    "lfb",
    "lfb_bound",
    "var",
    "var_bound",
    "bits_actual",
    "bits_formula",
    "overloaded",
    "radius",
    "status",
    "trial",
];

/// One row per (grid point × scheme × signal). Measurement fields are empty
/// when the grid point was skipped; `status` then carries the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub k: usize,
    pub m: usize,
    pub rho: usize,
    pub eta: usize,
    pub r: usize,
    #[serde(rename = "L")]
    pub half_len: u32,
    pub delta: f64,
    pub scheme: String,
    pub u_inf: Option<f64>,
    pub err: Option<f64>,
    pub err_bound: Option<f64>,
    pub lfb: Option<f64>,
    pub lfb_bound: Option<f64>,
    pub var: Option<f64>,
    pub var_bound: Option<f64>,
    pub bits_actual: Option<u64>,
    pub bits_formula: Option<f64>,
    pub overloaded: Option<bool>,
    pub radius: f64,
    pub status: String,
    pub trial: usize,
}

impl ExperimentRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fields(&self) -> Vec<String> {
        fn num(v: f64) -> String {
            format!("{v:.16e}")
        }
        fn opt(v: Option<f64>) -> String {
            v.map(num).unwrap_or_default()
        }
        vec![
            self.k.to_string(),
            self.m.to_string(),
            self.rho.to_string(),
            self.eta.to_string(),
            self.r.to_string(),
            self.half_len.to_string(),
            num(self.delta),
            self.scheme.clone(),
            opt(self.u_inf),
            opt(self.err),
            opt(self.err_bound),
            opt(self.lfb),
            opt(self.lfb_bound),
            opt(self.var),
            opt(self.var_bound),
            self.bits_actual.map(|b| b.to_string()).unwrap_or_default(),
            opt(self.bits_formula),
            self.overloaded.map(|b| b.to_string()).unwrap_or_default(),
            num(self.radius),
            self.status.clone(),
            self.trial.to_string(),
        ]
    }
}

pub fn write_csv(records: &[ExperimentRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        w.write_record(rec.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize()
        .map(|r| r.map_err(HarnessError::from))
        .collect()
}

pub fn read_csv_file(path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

struct Point {
    r: usize,
    rho: usize,
    scheme: Scheme,
}

/// Everything that depends on the grid point but not on the signal.
enum Prepared {
    Decimated {
        frame: AnalysisOperator,
        ops: DecimationOperators,
    },
    Dual {
        frame: AnalysisOperator,
        dual: CMatrix,
        post: CMatrix,
    },
}

fn prepare(
    template: &FrameSpec,
    plan: &DecimationPlan,
    scheme: Scheme,
) -> Result<Prepared, String> {
    let frame = frames::build_ugf(&template.with_length(plan.m));
    match scheme {
        Scheme::Adapted => {
            let ops = decimation::adapted(plan, &frame).map_err(|e| e.to_string())?;
            Ok(Prepared::Decimated { frame, ops })
        }
        Scheme::Alternative => {
            let ops = decimation::alternative(plan, &frame).map_err(|e| e.to_string())?;
            Ok(Prepared::Decimated { frame, ops })
        }
        Scheme::Beta(beta) => {
            let v = decimation::beta_matrix(beta, template.k(), plan.m).map_err(|e| e.to_string())?;
            let dual = decimation::v_dual(&v, &frame.phi).map_err(|e| e.to_string())?;
            Ok(Prepared::Dual { frame, dual, post: v })
        }
        Scheme::Canonical => {
            let dual = decimation::canonical_dual(&frame.phi).map_err(|e| e.to_string())?;
            let post = CMatrix::identity(plan.m);
            Ok(Prepared::Dual { frame, dual, post })
        }
    }
}

fn quantize(
    y: &[Complex64],
    r: usize,
    scheme: Scheme,
    k: usize,
    alphabet: &Alphabet,
) -> Result<QuantizationOutput, String> {
    let out = match scheme {
        Scheme::Beta(beta) => quantizer::beta_shaping(y, beta, y.len() / k, alphabet),
        _ => quantizer::sigma_delta(y, r, alphabet),
    };
    out.map_err(|e| e.to_string())
}

fn plain_error(x: &[Complex64], dual: &CMatrix, q: &QuantizationOutput) -> Result<f64, String> {
    let x_rec = decimation::reconstruct(dual, &q.q()).map_err(|e| e.to_string())?;
    Ok(linalg::vec_norm2(
        &x.iter().zip(&x_rec).map(|(a, b)| a - b).collect::<Vec<_>>(),
    ))
}

/// Payload bits and formula bits for the decimated schemes.
fn bits(ops: &DecimationOperators, q: &QuantizationOutput) -> (Option<u64>, f64) {
    let plan = &ops.plan;
    let alphabet = q.alphabet;
    let formula = codec::bit_budget(plan, alphabet.half_len, plan.m);
    let re = ops.numerator.mul_vec_i128(&q.numerators_re());
    let im = ops.numerator.mul_vec_i128(&q.numerators_im());
    let actual = match (re, im) {
        (Some(re), Some(im)) => {
            codec::encode_numerators(plan, alphabet.half_len, alphabet.delta, &re, &im)
                .ok()
                .map(|b| b.header.payload_bits() as u64)
        }
        _ => None,
    };
    (actual, formula)
}

fn fill(rec: &mut ExperimentRecord, report: &BoundReport) {
    rec.u_inf = Some(report.u_inf);
    rec.err = Some(report.err);
    rec.err_bound = Some(report.bound);
    rec.lfb = Some(report.lfb);
    rec.lfb_bound = report.lfb_bound;
    rec.var = Some(report.var);
    rec.var_bound = report.var_bound;
}

fn measure(
    prepared: &Prepared,
    x: &[Complex64],
    r: usize,
    scheme: Scheme,
    alphabet: &Alphabet,
    rec: &mut ExperimentRecord,
) -> Result<(), String> {
    let frame = match prepared {
        Prepared::Decimated { frame, .. } | Prepared::Dual { frame, .. } => frame,
    };
    let y = frame.analyze(x);
    let q = quantize(&y, r, scheme, rec.k, alphabet)?;
    rec.overloaded = Some(q.overloaded);
    if let Prepared::Decimated { ops, .. } = prepared {
        let (actual, formula) = bits(ops, &q);
        rec.bits_actual = actual;
        rec.bits_formula = Some(formula);
    }
    if q.overloaded {
        let dual = match prepared {
            Prepared::Decimated { ops, .. } => &ops.dual,
            Prepared::Dual { dual, .. } => dual,
        };
        rec.u_inf = Some(q.u_inf());
        rec.err = Some(plain_error(x, dual, &q)?);
        rec.status = "overloaded".into();
        return Ok(());
    }
    let report = match prepared {
        Prepared::Decimated { frame, ops } => decimation::bound_report(x, frame, &q, ops),
        Prepared::Dual { frame, dual, post } => decimation::generic_report(x, frame, &q, dual, post),
    }
    .map_err(|e| e.to_string())?;
    fill(rec, &report);
    Ok(())
}

fn run_point(
    cfg: &ExperimentConfig,
    template: &FrameSpec,
    alphabet: &Alphabet,
    signals: &[Vec<Complex64>],
    radius: f64,
    point: &Point,
) -> Vec<ExperimentRecord> {
    let eta = cfg.eta_for(point.r);
    let blank = |trial: usize, m: usize, status: String| ExperimentRecord {
        k: cfg.k,
        m,
        rho: point.rho,
        eta,
        r: point.r,
        half_len: cfg.half_len,
        delta: cfg.delta,
        scheme: point.scheme.label(),
        u_inf: None,
        err: None,
        err_bound: None,
        lfb: None,
        lfb_bound: None,
        var: None,
        var_bound: None,
        bits_actual: None,
        bits_formula: None,
        overloaded: None,
        radius,
        status,
        trial,
    };
    let skipped = |m: usize, reason: String| {
        (0..signals.len())
            .map(|t| blank(t, m, format!("skipped: {reason}")))
            .collect()
    };
    let plan = match DecimationPlan::from_eta(point.r, eta, point.rho) {
        Ok(p) => p,
        Err(e) => return skipped(eta * point.rho, e.to_string()),
    };
    let prepared = match prepare(template, &plan, point.scheme) {
        Ok(p) => p,
        Err(e) => return skipped(plan.m, e),
    };
    signals
        .iter()
        .enumerate()
        .map(|(t, x)| {
            let mut rec = blank(t, plan.m, "ok".into());
            if let Err(e) = measure(&prepared, x, point.r, point.scheme, alphabet, &mut rec) {
                rec = blank(t, plan.m, format!("failed: {e}"));
            }
            rec
        })
        .collect()
}

/// Runs every grid point in `r × ρ × scheme` order and writes the CSV to
/// `cfg.output` when set. Grid-point failures become row statuses.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, HarnessError> {
    cfg.validate()?;
    let template = cfg.frame_template()?;
    let alphabet = cfg.alphabet()?;
    let (signals, radius) = cfg.signals()?;
    let points: Vec<Point> = cfg
        .r
        .iter()
        .flat_map(|&r| {
            cfg.rho.iter().flat_map(move |&rho| {
                cfg.schemes.iter().map(move |&scheme| Point { r, rho, scheme })
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let records: Vec<ExperimentRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(cfg, &template, &alphabet, &signals, radius, p))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    if let Some(path) = &cfg.output {
        let file = std::fs::File::create(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        write_csv(&records, std::io::BufWriter::new(file))?;
    }
    Ok(records)
}

/// Reconstruction for the first signal at one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    pub r: usize,
    pub rho: usize,
    pub scheme: String,
    pub x: Vec<Complex64>,
    pub x_rec: Vec<Complex64>,
    pub err: f64,
}

pub fn reconstruct_all(cfg: &ExperimentConfig) -> Result<Vec<Reconstruction>, HarnessError> {
    let template = cfg.frame_template()?;
    let alphabet = cfg.alphabet()?;
    let (signals, _) = cfg.signals()?;
    let x = &signals[0];
    let mut out = Vec::new();
    for &r in &cfg.r {
        for &rho in &cfg.rho {
            for &scheme in &cfg.schemes {
                let Ok(plan) = DecimationPlan::from_eta(r, cfg.eta_for(r), rho) else {
                    continue;
                };
                let Ok(prepared) = prepare(&template, &plan, scheme) else {
                    continue;
                };
                let (frame, dual) = match &prepared {
                    Prepared::Decimated { frame, ops } => (frame, &ops.dual),
                    Prepared::Dual { frame, dual, .. } => (frame, dual),
                };
                let Ok(q) = quantize(&frame.analyze(x), r, scheme, cfg.k, &alphabet) else {
                    continue;
                };
                let x_rec = decimation::reconstruct(dual, &q.q())?;
                let err = linalg::vec_norm2(
                    &x.iter().zip(&x_rec).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                out.push(Reconstruction {
                    r,
                    rho,
                    scheme: scheme.label(),
                    x: x.clone(),
                    x_rec,
                    err,
                });
            }
        }
    }
    Ok(out)
}

/// Adapted-scheme encoding of the first signal at the first grid point.
pub fn encode_first(cfg: &ExperimentConfig) -> Result<codec::EncodedBlock, HarnessError> {
    let template = cfg.frame_template()?;
    let alphabet = cfg.alphabet()?;
    let (signals, _) = cfg.signals()?;
    let (&r, &rho) = cfg
        .r
        .first()
        .zip(cfg.rho.first())
        .ok_or_else(|| HarnessError::Config("empty order or rho list".into()))?;
    let plan = DecimationPlan::from_eta(r, cfg.eta_for(r), rho)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let frame = frames::build_ugf(&template.with_length(plan.m));
    let q = quantizer::sigma_delta(&frame.analyze(&signals[0]), r, &alphabet)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(codec::encode(&q, &plan)?)
}
