use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::random_in_ball;
use crate::codec;
use crate::decimation;
use crate::frames::{self, FrameSpec};
use crate::linalg::{self, CMatrix};
use crate::operators::{self, DecimationPlan};
use crate::quantizer::{self, Alphabet, QuantizationOutput, Shaping};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Integer-exact checks only.
    Quick,
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub level: Level,
    /// Negates `Δ̄_ρ` inside the block-difference twist check.
    pub flip_dbar: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest residual, or largest violation margin for inequalities
    /// (nonpositive when they hold).
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckResult>,
    /// Decay slope per order on the one-dimensional grid (full level only).
    pub slopes: BTreeMap<usize, f64>,
    /// Largest `err / err_bound` across the randomized error-bound runs.
    pub max_bound_slack: Option<f64>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `{checks: {name: bool}, slopes, max_bound_slack}`.
    pub fn summary(&self) -> serde_json::Value {
        let checks: BTreeMap<&str, bool> =
            self.checks.iter().map(|c| (c.name.as_str(), c.passed)).collect();
        serde_json::json!({
            "checks": checks,
            "slopes": self.slopes,
            "max_bound_slack": self.max_bound_slack,
        })
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            worst: f64::NEG_INFINITY,
            failures: Vec::new(),
        }
    }

    /// Records one case; `margin ≤ 0` passes.
    fn case(&mut self, margin: f64, label: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(margin);
        if margin.is_nan() || margin > 0.0 {
            self.failures.push(label());
        }
    }

    fn fail(&mut self, label: String) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        self.failures.push(label);
    }

    fn finish(self) -> CheckResult {
        let passed = self.failures.is_empty() && self.cases > 0;
        let detail = if passed {
            format!("{} cases", self.cases)
        } else if self.cases == 0 {
            "no cases".into()
        } else {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            format!("{} of {} cases failed: {}", self.failures.len(), self.cases, shown.join("; "))
        };
        CheckResult {
            name: self.name.into(),
            passed,
            cases: self.cases,
            worst: if self.cases == 0 { 0.0 } else { self.worst },
            detail,
        }
    }
}

/// Frames used by the floating-point grid: `k ∈ {1, 2}`, diagonal and
/// rotated generators.
pub fn grid_frames() -> Vec<(String, FrameSpec)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    let w = CMatrix::new(2, 2, vec![c(h, 0.0), c(0.0, h), c(0.0, h), c(h, 0.0)])
        .expect("finite entries");
    vec![
        ("k1_l1".into(), FrameSpec::harmonic(&[1], 1).expect("valid")),
        ("k2_l1_m1".into(), FrameSpec::harmonic(&[1, -1], 1).expect("valid")),
        ("k2_l1_2".into(), FrameSpec::harmonic(&[1, 2], 1).expect("valid")),
        (
            "k2_rotated".into(),
            FrameSpec::from_eigen(&[2.0, -1.0], Some(w), vec![c(0.6, 0.0), c(0.0, 0.8)], 1)
                .expect("valid"),
        ),
    ]
}

/// `(frame name, spec at length m, plan)` for `r ∈ {1,2,3}`, `η ∈ {3rk, 6rk}`,
/// `ρ ∈ {2, 4, 8}`.
pub fn grid_points() -> Vec<(String, FrameSpec, DecimationPlan)> {
    let mut out = Vec::new();
    for (name, spec) in grid_frames() {
        let k = spec.k();
        for r in 1..=3 {
            for eta in [3 * r * k, 6 * r * k] {
                for rho in [2, 4, 8] {
                    let plan = DecimationPlan::from_eta(r, eta, rho).expect("valid plan");
                    out.push((name.clone(), spec.with_length(plan.m), plan));
                }
            }
        }
    }
    out
}

fn twist_check(flip: bool) -> CheckResult {
    let mut t = Tally::new("twist_scale");
    for rho in 1..=8 {
        for eta in 1..=12 {
            let m = rho * eta;
            let mut dbar = operators::dbar_rho(m, rho).expect("valid block");
            if flip {
                dbar = dbar.checked_scale(-1).expect("no overflow");
            }
            let d = operators::sub_sample(m, rho).expect("valid block");
            let lhs = &d * &dbar;
            let rhs = &operators::delta(eta) * &d;
            t.case(if lhs == rhs { 0.0 } else { 1.0 }, || format!("rho={rho} eta={eta}"));
        }
    }
    t.finish()
}

fn alt_vs_ada_check() -> CheckResult {
    let mut t = Tally::new("alt_vs_ada");
    for rho in 1..=8 {
        for eta in 1..=12 {
            let m = rho * eta;
            let s = operators::s_rho(m, rho).expect("valid block");
            let lhs = s.num.checked_scale(rho as i64).expect("no overflow");
            let rhs = (&operators::dbar_rho(m, rho).expect("valid block") * &operators::delta_inv(m))
                .checked_scale(s.den)
                .expect("no overflow");
            t.case(if lhs == rhs { 0.0 } else { 1.0 }, || format!("rho={rho} eta={eta}"));
        }
    }
    t.finish()
}

fn causality_check() -> CheckResult {
    let mut t = Tally::new("block_causality");
    for r in 1..=3 {
        for rho in 1..=8 {
            for eta in 1..=6 {
                let plan = DecimationPlan::from_eta(r, eta, rho).expect("valid plan");
                let ok = decimation::is_block_causal(&operators::adapted_numerator(&plan), rho);
                t.case(if ok { 0.0 } else { 1.0 }, || format!("r={r} rho={rho} eta={eta}"));
            }
        }
    }
    t.finish()
}

fn first_order_equality_check() -> CheckResult {
    let mut t = Tally::new("alt_first_order_equal");
    for rho in 1..=8 {
        for eta in 1..=8 {
            let plan = DecimationPlan::from_eta(1, eta, rho).expect("valid plan");
            let same = operators::adapted_numerator(&plan) == operators::alternative_numerator(&plan);
            t.case(if same { 0.0 } else { 1.0 }, || format!("rho={rho} eta={eta}"));
        }
    }
    t.finish()
}

fn random_levels(rng: &mut impl Rng, m: usize, half_len: u32, r: usize) -> QuantizationOutput {
    let l = half_len as i32;
    QuantizationOutput {
        levels_re: (0..m).map(|_| rng.random_range(-l..l)).collect(),
        levels_im: (0..m).map(|_| rng.random_range(-l..l)).collect(),
        u: vec![Complex64::new(0.0, 0.0); m],
        shaping: Shaping::SigmaDelta { order: r },
        alphabet: Alphabet::new(0.25, half_len).expect("valid alphabet"),
        overloaded: false,
    }
}

fn codec_check() -> CheckResult {
    let mut t = Tally::new("data_storage");
    let mut rng = ChaCha8Rng::seed_from_u64(0xadec);
    for r in 1..=3 {
        for rho in [1, 2, 4, 8] {
            for eta in [1, 3, 6, 12] {
                for half_len in [1, 8] {
                    let plan = DecimationPlan::from_eta(r, eta, rho).expect("valid plan");
                    let q = random_levels(&mut rng, plan.m, half_len, r);
                    let label = || format!("r={r} rho={rho} eta={eta} L={half_len}");
                    let block = match codec::encode(&q, &plan) {
                        Ok(b) => b,
                        Err(e) => {
                            t.fail(format!("{}: {e}", label()));
                            continue;
                        }
                    };
                    let bytes = block.to_bytes();
                    let decoded = codec::EncodedBlock::from_bytes(&bytes)
                        .and_then(|b| codec::decode(&b));
                    let numerator = operators::adapted_numerator(&plan);
                    let exact = decoded.is_ok_and(|d| {
                        Some(d.numerators_re) == numerator.mul_vec_i128(&q.numerators_re())
                            && Some(d.numerators_im) == numerator.mul_vec_i128(&q.numerators_im())
                    });
                    t.case(if exact { 0.0 } else { 1.0 }, || format!("{} roundtrip", label()));
                    let budget = codec::bit_budget(&plan, half_len, plan.m);
                    let bits = block.header.payload_bits() as f64;
                    // The 4η slack is only claimed for the working alphabet.
                    if half_len == 8 {
                        t.case(bits - budget - 4.0 * eta as f64, || format!("{} bits {bits} vs {budget}", label()));
                    }
                    let lhs = -budget / (2.0 * eta as f64);
                    let rhs = -(r as f64) * (2.0 * plan.m as f64).log2() - (2.0 * half_len as f64).log2();
                    t.case(
                        (lhs - rhs).abs() - tolerances::EXPONENT_REL * rhs.abs().max(1.0),
                        || format!("{} exponent {lhs} vs {rhs}", label()),
                    );
                }
            }
        }
    }
    t.finish()
}

fn stability_check() -> CheckResult {
    let mut t = Tally::new("stability");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ab1e);
    let mut stable_cases = 0;
    while stable_cases < 1000 {
        let r = rng.random_range(1..=3usize);
        let half_len = rng.random_range(1..=16u32);
        let alphabet = Alphabet::new(rng.random_range(0.05..1.0), half_len).expect("valid");
        let m = rng.random_range(1..=64usize);
        let amp = alphabet.range() * rng.random_range(0.0..1.2);
        let y: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-amp..=amp), rng.random_range(-amp..=amp)))
            .collect();
        if quantizer::stability_margin(&y, r, &alphabet) < 0.0 {
            continue;
        }
        stable_cases += 1;
        let q = quantizer::sigma_delta(&y, r, &alphabet).expect("valid order");
        let excess = q.u_component_inf() - alphabet.delta / 2.0;
        t.case(excess - tolerances::BOUND_SLACK, || format!("r={r} m={m} excess {excess:.3e}"));
        t.case(if q.overloaded { 1.0 } else { 0.0 }, || format!("r={r} m={m} overloaded"));
    }
    t.finish()
}

/// Per-grid-point floating checks; each returns `(check, margin, label)`.
fn grid_cases(name: &str, spec: &FrameSpec, plan: &DecimationPlan) -> Vec<(&'static str, f64, String)> {
    let label = format!("{name} r={} eta={} rho={}", plan.r, plan.eta, plan.rho);
    let mut out = Vec::new();
    let factors = match frames::frame_factors(spec, plan) {
        Ok(f) => f,
        Err(e) => return vec![("frame_factors", f64::INFINITY, format!("{label}: {e}"))],
    };
    out.push((
        "c_lemma",
        frames::cumsum_residual(spec, &factors) - tolerances::EXPANSION_REL,
        label.clone(),
    ));
    let d_res = frames::block_difference_residual(spec, plan, &factors).unwrap_or(f64::INFINITY);
    out.push(("d_lemma", d_res - tolerances::EXPANSION_REL, label.clone()));
    let e_res = decimation::expansion_check(spec, plan).unwrap_or(f64::INFINITY);
    out.push(("deci_expansion", e_res - tolerances::EXPANSION_REL, label.clone()));
    out.push(("dc_lb", 2.0 / PI - frames::dc_lower_ratio(spec, plan), label.clone()));

    let frame = frames::build_ugf(spec);
    match decimation::adapted(plan, &frame) {
        Ok(ops) => {
            let c = frames::lower_frame_const(spec).unwrap_or(0.0);
            let lfb = linalg::sigma_min_sq(&ops.a_phi);
            let lfb_bound = decimation::lower_frame_bound(spec.k(), c, plan.r);
            out.push(("lower_frame_bound", lfb_bound - lfb - tolerances::BOUND_SLACK, label.clone()));
            let var = decimation::variation(&ops);
            let var_bound = decimation::variation_bound(plan.r, plan.eta);
            out.push(("variation_bound", var - var_bound - tolerances::BOUND_SLACK, label.clone()));
        }
        Err(e) => out.push(("lower_frame_bound", f64::INFINITY, format!("{label}: {e}"))),
    }
    out
}

/// Randomized runs of quantize → decimate → reconstruct against the
/// closed-form error bound; returns the check and the largest `err/bound`.
fn error_bound_check(points: &[(String, FrameSpec, DecimationPlan)]) -> (CheckResult, f64) {
    let alphabet = Alphabet::new(0.25, 8).expect("valid");
    let runs: Vec<(f64, f64, String)> = points
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (name, spec, plan))| {
            let frame = frames::build_ugf(spec);
            let ops = decimation::adapted(plan, &frame);
            let radius = alphabet.range() - (2f64.powi(plan.r as i32) - 1.0) * alphabet.delta / 2.0;
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let mut out = Vec::new();
            if let Ok(ops) = ops {
                for trial in 0..8 {
                    let x = random_in_ball(&mut rng, spec.k(), radius);
                    let q = quantizer::sigma_delta(&frame.analyze(&x), plan.r, &alphabet)
                        .expect("valid order");
                    let label = format!("{name} r={} eta={} rho={} trial={trial}", plan.r, plan.eta, plan.rho);
                    match decimation::bound_report(&x, &frame, &q, &ops) {
                        Ok(rep) => out.push((rep.err, rep.bound, label)),
                        Err(e) => out.push((f64::INFINITY, 0.0, format!("{label}: {e}"))),
                    }
                }
            }
            out
        })
        .collect();
    let mut t = Tally::new("error_bound");
    let mut max_ratio: f64 = 0.0;
    for (err, bound, label) in runs {
        max_ratio = max_ratio.max(err / bound);
        t.case(err - bound, || label);
    }
    (t.finish(), max_ratio)
}

fn second_order_difference_check() -> CheckResult {
    let mut t = Tally::new("alt_second_order_differs");
    for rho in [2, 4, 8] {
        for eta in [6, 12] {
            let plan = DecimationPlan::from_eta(2, eta, rho).expect("valid plan");
            let a = operators::adapted_numerator(&plan);
            let b = operators::alternative_numerator(&plan);
            let max_diff = (0..a.rows())
                .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
                .map(|(i, j)| (a.get(i, j) - b.get(i, j)).abs())
                .max()
                .unwrap_or(0) as f64
                / plan.rho_pow() as f64;
            t.case(1e-6 - max_diff, || format!("rho={rho} eta={eta} identical"));
        }
    }
    t.finish()
}

fn alternative_bound_check() -> CheckResult {
    let mut t = Tally::new("alternative_error_bound");
    let alphabet = Alphabet::new(0.25, 8).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(0xa17);
    for r in 1..=2 {
        for rho in [2, 4, 8] {
            let plan = DecimationPlan::from_eta(r, 6 * r, rho).expect("valid plan");
            let frame = frames::build_ugf(&FrameSpec::harmonic(&[1], plan.m).expect("valid"));
            let Ok(ops) = decimation::alternative(&plan, &frame) else {
                t.fail(format!("r={r} rho={rho} construction failed"));
                continue;
            };
            for _ in 0..4 {
                let x = random_in_ball(&mut rng, 1, 1.0);
                let q = quantizer::sigma_delta(&frame.analyze(&x), r, &alphabet).expect("valid");
                match decimation::bound_report(&x, &frame, &q, &ops) {
                    Ok(rep) => t.case(rep.err - rep.bound, || format!("r={r} rho={rho}")),
                    Err(e) => t.fail(format!("r={r} rho={rho}: {e}")),
                }
            }
        }
    }
    t.finish()
}

/// Mean-error decay slope for `k = 1, λ = 1`, `η = 6r`, `ρ ∈ {2,…,32}`.
pub fn decay_slopes(signals: usize) -> BTreeMap<usize, f64> {
    let alphabet = Alphabet::new(0.25, 8).expect("valid");
    (1..=3usize)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
            let radius = alphabet.range() - (2f64.powi(r as i32) - 1.0) * alphabet.delta / 2.0;
            let xs: Vec<Vec<Complex64>> =
                (0..signals).map(|_| random_in_ball(&mut rng, 1, radius)).collect();
            let points: Vec<(f64, f64)> = [2usize, 4, 8, 16, 32]
                .iter()
                .map(|&rho| {
                    let plan = DecimationPlan::from_eta(r, 6 * r, rho).expect("valid plan");
                    let frame = frames::build_ugf(&FrameSpec::harmonic(&[1], plan.m).expect("valid"));
                    let ops = decimation::adapted(&plan, &frame).expect("hypotheses hold");
                    let mean = xs
                        .iter()
                        .map(|x| {
                            let q = quantizer::sigma_delta(&frame.analyze(x), r, &alphabet).expect("valid");
                            decimation::bound_report(x, &frame, &q, &ops).map(|rep| rep.err).unwrap_or(f64::NAN)
                        })
                        .sum::<f64>()
                        / xs.len() as f64;
                    (rho as f64, mean)
                })
                .collect();
            (r, super::fit::fit_slope(&points).unwrap_or(f64::NAN))
        })
        .collect()
}

fn decay_check(slopes: &BTreeMap<usize, f64>) -> CheckResult {
    let mut t = Tally::new("decay_order");
    for (&r, &slope) in slopes {
        t.case(slope + (r as f64 - 0.25), || format!("r={r} slope {slope:.3}"));
    }
    t.finish()
}

pub fn verify(options: VerifyOptions) -> VerifyReport {
    let mut checks = vec![
        twist_check(options.flip_dbar),
        alt_vs_ada_check(),
        causality_check(),
        first_order_equality_check(),
        codec_check(),
    ];
    let mut slopes = BTreeMap::new();
    let mut max_bound_slack = None;
    if options.level == Level::Full {
        let points = grid_points();
        let cases: Vec<_> = points
            .par_iter()
            .flat_map_iter(|(name, spec, plan)| grid_cases(name, spec, plan))
            .collect();
        let mut tallies: BTreeMap<&'static str, Tally> = BTreeMap::new();
        for name in ["c_lemma", "d_lemma", "deci_expansion", "dc_lb", "lower_frame_bound", "variation_bound"] {
            tallies.insert(name, Tally::new(name));
        }
        for (name, margin, label) in cases {
            tallies.entry(name).or_insert_with(|| Tally::new(name)).case(margin, || label);
        }
        checks.extend(tallies.into_values().map(Tally::finish));
        let (bound, ratio) = error_bound_check(&points);
        checks.push(bound);
        max_bound_slack = Some(ratio);
        checks.push(stability_check());
        checks.push(second_order_difference_check());
        checks.push(alternative_bound_check());
        slopes = decay_slopes(64);
        checks.push(decay_check(&slopes));
    }
    VerifyReport {
        level: options.level,
        checks,
        slopes,
        max_bound_slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_level_passes() {
        let report = verify(VerifyOptions {
            level: Level::Quick,
            flip_dbar: false,
        });
        assert!(report.passed(), "{:#?}", report.checks);
    }

    #[test]
    fn flipped_block_difference_fails_twist() {
        let report = verify(VerifyOptions {
            level: Level::Quick,
            flip_dbar: true,
        });
        let twist = report.checks.iter().find(|c| c.name == "twist_scale").unwrap();
        assert!(!twist.passed);
        assert!(report.checks.iter().filter(|c| c.name != "twist_scale").all(|c| c.passed));
    }
}
