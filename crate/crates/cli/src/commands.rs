use std::path::Path;

use gibbs_factor::cone::{contraction_check, contraction_profile};
use gibbs_factor::ganalysis::{
    decay_fit, default_n_max, eta_general, eta_optimize, g_approx, g_limit, rate_compare, variation_profile,
};
use gibbs_factor::system::{fixture_example2, fixture_full_shift, fixture_three_shift};
use gibbs_factor::{
    Classification, DecayFit, EtaBound, EtaFormula, EtaInputs, Error, Factor, Gibbs, GibbsOptions, MixingIndex,
    PotentialMode, Result, SystemDescription, VariationProfile, Word,
};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::report::{measure, num, nums, rational, rationals, Report};
use crate::{Cli, Command, Global, ProfileArgs};

const ORACLE_TOLERANCE: f64 = 1e-10;
const LIMIT_TOLERANCE: f64 = 1e-10;
const EXAMPLE2_TOLERANCE: f64 = 1e-6;
const FWM_SEARCH_DEPTH: usize = 8;
/// Witnesses listed per N in `fwm` reports.
const WITNESSES_SHOWN: usize = 5;

pub enum Output {
    Report(Report),
    Text(String),
}

struct Loaded {
    desc: SystemDescription,
    options: GibbsOptions,
}

impl Loaded {
    fn gibbs(&self) -> Result<Gibbs> {
        self.desc.gibbs(&self.options)
    }

    fn factor(&self) -> Result<Factor> {
        self.desc.build_factor(&self.options)
    }
}

fn load(path: &Path, global: &Global, command: &'static str) -> Result<(Loaded, Report)> {
    let desc = SystemDescription::from_path(path)?;
    Ok(start(desc, global, command))
}

fn start(desc: SystemDescription, global: &Global, command: &'static str) -> (Loaded, Report) {
    let mut report = Report::new(command, Some(desc.to_json_string()));
    report.input("exact", global.exact);
    report.input("budget", global.budget);
    report.diagnostic("exact", global.exact);
    report.diagnostic("budget", global.budget);
    report.diagnostic("seed", global.seed);
    report.diagnostic("warnings", desc.warnings.clone());
    let options = GibbsOptions { exact: global.exact, limit: global.budget, ..GibbsOptions::default() };
    (Loaded { desc, options }, report)
}

fn perron_diagnostics(report: &mut Report, g: &Gibbs) {
    report.diagnostic("perron_iterations", g.perron().iterations);
    report.diagnostic("perron_residual", num(g.perron().residual));
}

fn render(factor: &Factor, word: &[usize]) -> String {
    factor.map().image().render(word)
}

pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let report = match &cli.command {
        Command::Validate { system } => validate(system, g)?,
        Command::Perron { system } => perron(system, g)?,
        Command::Measure { system, word } => measure_cmd(system, word, g)?,
        Command::Project { system, word, oracle } => project(system, word, *oracle, g)?,
        Command::ProjectVerify { system, max_len } => project_verify(system, *max_len, g)?,
        Command::Fwm { system, max_n } => fwm(system, *max_n, g)?,
        Command::Gfun { system, word } => gfun(system, word, g)?,
        Command::GfunLimit { system, prefix, tail, jmax } => gfun_limit(system, prefix, tail, *jmax, g)?,
        Command::Variation { system, profile } => variation(system, profile, g)?,
        Command::Fit { system, profile, n0 } => fit(system, profile, *n0, g)?,
        Command::Eta { system, theta, sigma, optimize, grid, n, full_shift, compare, profile, n0 } => {
            let req = EtaRequest {
                theta: *theta,
                sigma: if *optimize { None } else { *sigma },
                grid: *grid,
                n: *n,
                full_shift: *full_shift,
                compare: compare.then_some((profile, *n0)),
            };
            eta(system, &req, g)?
        }
        Command::Contraction { system, n, samples } => contraction(system, *n, *samples, g)?,
        Command::Example2 => example2(g)?,
        Command::Fixture { name } => return fixture(name).map(|d| Output::Text(d.to_json_string() + "\n")),
    };
    Ok(Output::Report(report))
}

fn fixture(name: &str) -> Result<SystemDescription> {
    match name {
        "example2" => Ok(fixture_example2()),
        "three-shift" => Ok(fixture_three_shift()),
        _ => match name.strip_prefix("full-shift-").and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if (1..=64).contains(&n) => Ok(fixture_full_shift(n)),
            _ => Err(Error::InvalidParameter(format!(
                "unknown fixture {name:?}; expected example2, three-shift or full-shift-N"
            ))),
        },
    }
}

fn validate(path: &Path, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "validate")?;
    let sft = &sys.desc.sft;
    let n = sft.size();
    let mixing = match sft.mixing_index((n - 1) * (n - 1) + 1) {
        MixingIndex::Mixing(p) => json!(p),
        MixingIndex::NotMixing => Json::Null,
    };
    let potential = sys.desc.build_potential()?;
    report.result("alphabet", sft.alphabet().names().to_vec());
    report.result("mixing_index", mixing);
    report.result("depth", potential.depth());
    report.result("mode", match potential.mode() {
        PotentialMode::Phi => "phi",
        PotentialMode::Weight => "weight",
    });
    report.result("exact_capable", potential.supports_exact());
    report.result("sup_norm", num(potential.sup_norm()));
    report.result("variations", nums(&potential.variations()));
    let factor = sys.desc.factor.as_ref().map(|f| {
        let fibers: serde_json::Map<String, Json> = (0..f.image().size())
            .map(|b| {
                let fiber: Vec<&str> =
                    (0..n).filter(|&a| f.apply_symbol(a) == b).map(|a| sft.alphabet().name(a)).collect();
                (f.image().name(b).to_owned(), json!(fiber))
            })
            .collect();
        json!({ "image": f.image().names(), "fibers": fibers })
    });
    report.result("factor", factor.unwrap_or(Json::Null));
    Ok(report)
}

fn perron(path: &Path, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "perron")?;
    let g = sys.gibbs()?;
    let p = g.perron();
    report.result("lambda", num(p.lambda));
    report.result("pressure", num(p.lambda.ln()));
    report.result("h", nums(&p.h));
    report.result("nu", nums(&p.nu));
    report.result("block_length", g.block_length());
    if let Some(e) = g.exact_perron() {
        report.result("exact", json!({ "lambda": rational(&e.lambda), "h": rationals(&e.h), "nu": rationals(&e.nu) }));
    }
    perron_diagnostics(&mut report, &g);
    Ok(report)
}

fn measure_cmd(path: &Path, word: &str, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "measure")?;
    report.input("word", word);
    let g = sys.gibbs()?;
    let w = sys.desc.sft.alphabet().parse_word(word)?;
    let exact = if g.is_exact() { Some(g.exact_cylinder(&w)?) } else { None };
    report.result("word", sys.desc.sft.alphabet().render(&w));
    report.result("measure", measure(g.log_cylinder(&w)?, exact.as_ref()));
    perron_diagnostics(&mut report, &g);
    Ok(report)
}

fn image_word(factor: &Factor, text: &str) -> Result<Word> {
    let w = factor.map().image().parse_word(text)?;
    if w.is_empty() {
        return Err(Error::InvalidParameter("empty image word".into()));
    }
    Ok(w)
}

/// Relative error between two log-measures; zero when both vanish.
fn log_relative_error(a: f64, b: f64) -> f64 {
    match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (false, false) => (a - b).exp_m1().abs(),
        _ => f64::INFINITY,
    }
}

fn project(path: &Path, word: &str, oracle: bool, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "project")?;
    report.input("word", word);
    report.input("oracle", oracle);
    let factor = sys.factor()?;
    let w = image_word(&factor, word)?;
    let exact = factor.gibbs().is_exact();
    let log_m = factor.log_projected_measure(&w)?;
    let exact_m = if exact { Some(factor.exact_projected_measure(&w)?) } else { None };
    report.result("word", render(&factor, &w));
    report.result("measure", measure(log_m, exact_m.as_ref()));
    if oracle {
        let tol = global.tol.unwrap_or(ORACLE_TOLERANCE);
        report.input("tol", num(tol));
        report.diagnostic("tol", num(tol));
        let log_b = factor.log_projected_measure_bruteforce(&w, global.budget)?;
        let exact_b = if exact { Some(factor.exact_projected_measure_bruteforce(&w, global.budget)?) } else { None };
        let rel = log_relative_error(log_m, log_b);
        let matched = match (&exact_m, &exact_b) {
            (Some(a), Some(b)) => a == b,
            _ => rel <= tol,
        };
        report.result("oracle", json!({
            "measure": measure(log_b, exact_b.as_ref()),
            "relative_error": num(rel),
            "match": matched,
        }));
        if !matched {
            report.violate(format!("block product and brute force disagree on {}", render(&factor, &w)));
        }
    }
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn project_verify(path: &Path, max_len: usize, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "project-verify")?;
    let tol = global.tol.unwrap_or(ORACLE_TOLERANCE);
    report.input("max_len", max_len);
    report.input("tol", num(tol));
    report.diagnostic("tol", num(tol));
    let factor = sys.factor()?;
    let exact = factor.gibbs().is_exact();
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    let mut mismatches = Vec::new();
    for len in 1..=max_len {
        for w in factor.image_words(len, global.budget)? {
            let a = factor.log_projected_measure(&w)?;
            let b = factor.log_projected_measure_bruteforce(&w, global.budget)?;
            let rel = log_relative_error(a, b);
            worst = worst.max(rel);
            let ok = if exact {
                factor.exact_projected_measure(&w)? == factor.exact_projected_measure_bruteforce(&w, global.budget)?
            } else {
                rel <= tol
            };
            if !ok {
                mismatches.push(render(&factor, &w));
            }
            checked += 1;
        }
    }
    report.result("words_checked", checked);
    report.result("max_relative_error", num(worst));
    report.result("mismatches", mismatches.len());
    report.result("first_mismatches", mismatches.iter().take(10).cloned().collect::<Vec<_>>());
    report.result("all_match", mismatches.is_empty());
    if !mismatches.is_empty() {
        report.violate(format!("{} image words disagree with the brute-force oracle", mismatches.len()));
    }
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn fwm_json(factor: &Factor, search: &gibbs_factor::FwmSearch) -> Json {
    let rec = factor.gibbs().transfer().recoding();
    let domain = factor.gibbs().potential().sft().alphabet();
    let reports: Vec<Json> = search
        .reports
        .iter()
        .map(|r| {
            let witnesses: Vec<Json> = r
                .witnesses
                .iter()
                .take(WITNESSES_SHOWN)
                .map(|w| {
                    json!({
                        "word": render(factor, &w.word),
                        "first": domain.render(rec.block(w.first)),
                        "last": domain.render(rec.block(w.last)),
                    })
                })
                .collect();
            json!({
                "n": r.n,
                "holds": r.holds,
                "words_checked": r.words_checked,
                "witness_count": r.witnesses.len(),
                "witnesses_truncated": r.witnesses_truncated || r.witnesses.len() > WITNESSES_SHOWN,
                "witnesses": witnesses,
            })
        })
        .collect();
    json!({
        "status": if search.found.is_some() { "Found" } else { "NotFound" },
        "n": search.found,
        "block_length": factor.block_length(),
        "reports": reports,
    })
}

fn fwm(path: &Path, max_n: usize, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "fwm")?;
    report.input("max_n", max_n);
    let factor = sys.factor()?;
    let search = factor.fwm_search(max_n, global.budget)?;
    if let Json::Object(m) = fwm_json(&factor, &search) {
        report.results.extend(m);
    }
    Ok(report)
}

fn gfun(path: &Path, word: &str, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "gfun")?;
    report.input("word", word);
    let factor = sys.factor()?;
    let g = g_approx(&factor, &image_word(&factor, word)?)?;
    report.result("word", render(&factor, &g.word));
    report.result("n", g.n);
    report.result("g", measure(g.log_value, g.exact.as_ref()));
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn gfun_limit(path: &Path, prefix: &str, tail: &str, jmax: usize, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "gfun-limit")?;
    let tol = global.tol.unwrap_or(LIMIT_TOLERANCE);
    report.input("prefix", prefix);
    report.input("tail", tail);
    report.input("jmax", jmax);
    report.input("tol", num(tol));
    report.diagnostic("tol", num(tol));
    let factor = sys.factor()?;
    let p = factor.map().image().parse_word(prefix)?;
    let t = image_word(&factor, tail)?;
    let lim = g_limit(&factor, &p, &t, jmax, tol)?;
    let stages: Vec<Json> = lim
        .stages
        .iter()
        .map(|s| {
            json!({
                "j": s.j,
                "repetitions": s.repetitions,
                "n": s.n,
                "value": num(s.value),
                "exact": s.exact.as_ref().map(rational),
                "extrapolated": s.extrapolated.map(num),
            })
        })
        .collect();
    report.result("point", format!("{}({})^inf", render(&factor, &p), render(&factor, &t)));
    report.result("value", num(lim.value));
    report.result("error_estimate", num(lim.error_estimate));
    report.result("converged", lim.converged);
    report.result("stages", stages);
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn profile_for(factor: &Factor, args: &ProfileArgs, report: &mut Report, budget: usize) -> Result<VariationProfile> {
    let n_max = args.n_max.unwrap_or_else(|| default_n_max(args.m));
    report.input("m", args.m);
    report.input("n_max", n_max);
    let profile = variation_profile(factor, args.m, n_max, budget)?;
    let rows: Vec<Json> = profile
        .var_hat
        .iter()
        .zip(&profile.pair_classes)
        .enumerate()
        .map(|(i, (v, c))| json!({ "n": i + 1, "var_hat": num(*v), "pair_classes": c }))
        .collect();
    report.result("profile", json!({ "m": profile.m, "words": profile.words, "rows": rows }));
    Ok(profile)
}

fn fit_json(fit: &DecayFit) -> Json {
    json!({
        "n0": fit.n0,
        "window": fit.window,
        "classification": fit.classification.as_str(),
        "exp_rate": num(fit.exp_rate),
        "r_squared_exp": num(fit.r_squared_exp),
        "poly_exponent": num(fit.poly_exponent),
        "r_squared_poly": num(fit.r_squared_poly),
    })
}

fn variation(path: &Path, args: &ProfileArgs, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "variation")?;
    let factor = sys.factor()?;
    profile_for(&factor, args, &mut report, global.budget)?;
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn fit(path: &Path, args: &ProfileArgs, n0: usize, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "fit")?;
    report.input("n0", n0);
    let factor = sys.factor()?;
    let profile = profile_for(&factor, args, &mut report, global.budget)?;
    report.result("fit", fit_json(&decay_fit(&profile.var_hat, n0)?));
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

struct EtaRequest<'a> {
    theta: f64,
    sigma: Option<f64>,
    grid: usize,
    n: Option<usize>,
    full_shift: bool,
    compare: Option<(&'a ProfileArgs, usize)>,
}

fn eta_json(b: &EtaBound) -> Json {
    json!({
        "theta": num(b.theta),
        "sigma": num(b.sigma),
        "n": b.n,
        "k": num(b.k),
        "m_const": num(b.m_const),
        "eta": num(b.eta),
        "c": num(b.c),
        "rate": num(b.rate()),
        "formula": match b.formula {
            EtaFormula::General => "general",
            EtaFormula::FullShift => "full-shift",
        },
        "full_shift_eta": b.full_shift_eta.map(num),
    })
}

fn eta(path: &Path, req: &EtaRequest, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "eta")?;
    report.input("theta", num(req.theta));
    report.input("sigma", req.sigma.map(num));
    report.input("grid", req.grid);
    report.input("full_shift", req.full_shift);
    let factor = sys.factor()?;
    let n = match req.n {
        Some(n) => n,
        None => {
            let search = factor.fwm_search(FWM_SEARCH_DEPTH, global.budget)?;
            report.diagnostic("fwm_search", fwm_json(&factor, &search)["status"].clone());
            search.found.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "not fiber-wise mixing up to N = {FWM_SEARCH_DEPTH}; the rate bound needs a mixing index"
                ))
            })?
        }
    };
    report.input("n", n);
    let inputs = EtaInputs::from_gibbs(factor.gibbs(), req.theta, n)?;
    report.result("inputs", json!({
        "holder_constant": num(inputs.holder_constant),
        "sup_norm": num(inputs.sup_norm),
        "ln1_sup_norm": num(inputs.ln1_sup_norm),
    }));
    let formula = if req.full_shift { EtaFormula::FullShift } else { EtaFormula::General };
    let bound = match req.sigma {
        Some(sigma) => eta_general(&inputs, sigma)?,
        None => eta_optimize(&inputs, req.grid, formula)?,
    };
    report.result("bound", eta_json(&bound));
    if let Some((args, n0)) = req.compare {
        report.input("n0", n0);
        let profile = profile_for(&factor, args, &mut report, global.budget)?;
        let fit = decay_fit(&profile.var_hat, n0)?;
        report.result("fit", fit_json(&fit));
        match rate_compare(&fit, &bound) {
            Ok(v) => {
                report.result("verdict", json!({
                    "empirical_rate": num(v.empirical_rate),
                    "theoretical_rate": num(v.theoretical_rate),
                    "satisfied": v.satisfied,
                }));
                if !v.satisfied {
                    report.violate(format!(
                        "empirical rate {} exceeds the bound {}",
                        v.empirical_rate, v.theoretical_rate
                    ));
                }
            }
            Err(Error::WrongClassification(c)) => {
                report.result("verdict", Json::Null);
                if fit.classification == Classification::Polynomial {
                    report.violate(format!("variation decays polynomially on a fiber-wise mixing factor ({c})"));
                }
            }
            Err(e) => return Err(e),
        }
    }
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn contraction(path: &Path, n: usize, samples: usize, global: &Global) -> Result<Report> {
    let (sys, mut report) = load(path, global, "contraction")?;
    report.input("n", n);
    report.input("samples", samples);
    report.input("seed", global.seed);
    let factor = sys.factor()?;
    let profile = contraction_profile(&factor, n, global.budget)?;
    let rows: Vec<Json> = profile
        .per_word
        .iter()
        .map(|(w, d)| json!({ "word": render(&factor, w), "delta": num(*d), "tau": num((d / 4.0).tanh()) }))
        .collect();
    report.result("max_delta", num(profile.max_delta));
    report.result("max_tau", num(profile.max_tau));
    report.result("per_word", rows);
    if samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
        let (mut checked, mut violations) = (0usize, 0usize);
        for (w, d) in &profile.per_word {
            if !d.is_finite() {
                continue;
            }
            let m = factor.block_product(w)?.matrix.transpose();
            let dim = m.cols();
            for _ in 0..samples {
                let u: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
                let v: Vec<f64> = (0..dim).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
                if !contraction_check(&m, &u, &v)?.holds {
                    violations += 1;
                }
                checked += 1;
            }
        }
        report.result("contraction_checks", json!({ "checked": checked, "violations": violations }));
        if violations > 0 {
            report.violate(format!("{violations} sampled pairs violate the contraction inequality"));
        }
    }
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}

fn example2(global: &Global) -> Result<Report> {
    let exact_global = Global { exact: true, ..global.clone() };
    let (sys, mut report) = start(fixture_example2(), &exact_global, "example2");
    let tol = global.tol.unwrap_or(EXAMPLE2_TOLERANCE);
    report.input("tol", num(tol));
    report.diagnostic("tol", num(tol));
    let factor = sys.factor()?;
    let p = factor.gibbs().exact_perron().expect("exact mode");
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    report.result("lambda", rational(&p.lambda));
    report.result("h", rationals(&p.h));
    report.result("nu", rationals(&p.nu));
    let mut failures = Vec::new();
    if p.lambda != q(3, 1) {
        failures.push("lambda != 3");
    }
    if p.h.iter().any(|x| x.is_zero() || *x != p.h[0]) {
        failures.push("h is not constant");
    }
    if p.nu != [q(1, 6), q(2, 6), q(2, 6), q(1, 6)] {
        failures.push("nu != (1,2,2,1)/6");
    }
    let lim = g_limit(&factor, &[], &[0], 30, LIMIT_TOLERANCE)?;
    report.result("g_zero_infinity", json!({
        "value": num(lim.value),
        "error_estimate": num(lim.error_estimate),
        "converged": lim.converged,
        "expected": "1/3",
    }));
    if (lim.value - 1.0 / 3.0).abs() > tol {
        failures.push("g(0^inf) != 1/3");
    }
    let search = factor.fwm_search(FWM_SEARCH_DEPTH, global.budget)?;
    let zero_run = search
        .reports
        .last()
        .and_then(|r| r.witnesses.first())
        .is_some_and(|w| w.word.iter().all(|&a| a == 0));
    report.result("fwm", fwm_json(&factor, &search));
    if search.found.is_some() || !zero_run {
        failures.push("expected NotFound with a 0-run witness");
    }
    let total = factor.gibbs().exact_cylinder(&[0])? + factor.gibbs().exact_cylinder(&[1])?
        + factor.gibbs().exact_cylinder(&[2])? + factor.gibbs().exact_cylinder(&[3])?;
    if !total.is_one() {
        failures.push("total mass != 1");
    }
    report.result("checks_passed", failures.is_empty());
    if !failures.is_empty() {
        report.violate(failures.join("; "));
    }
    perron_diagnostics(&mut report, factor.gibbs());
    Ok(report)
}
