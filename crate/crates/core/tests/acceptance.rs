//! End-to-end acceptance checks. Prints one PASS or FAIL line per criterion and
//! exits non-zero when any criterion fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metaprior::analysis::{run_analysis, AnalysisConfig, ModelChoice, ResultDocument};
use metaprior::fisher::{fisher_z, inv_fisher_z};
use metaprior::fixed::{combine_studies, fixed_effects_fit, posterior_update, FixedMode};
use metaprior::ingest::Delimiter;
use metaprior::mcmc::{chain_rng, draw_inverse_gamma, draw_normal, quadrature_oracle_fixed, QuadratureGrid};
use metaprior::model::{InverseGammaPrior, McmcConfig, NormalPosterior, Study, ZDatum};
use metaprior::power::{PowerScheme, ThresholdRule};
use metaprior::random::{
    conditional_zeta_i, fit_random, random_effects_fit, sweep, RandomEffectsPriors, RandomEffectsState,
};
use metaprior::regression::{fit_regression, meta_regression_fit, DesignMatrix, RegressionPriors};
use metaprior::service::{router, ServiceConfig};
use metaprior::synth::{synthetic_studies, SynthSpec};

/// Closed-form tables are printed to three decimals; "within 5e-4" is read
/// inclusively, with slack for the binary representation of the bound.
const TABLE_TOL: f64 = 5e-4 + 1e-12;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("single_study_power_grid", single_study),
        ("two_study_power_grid", two_study),
        ("three_study_random_effects_mcmc", three_study),
        ("quadrature_oracle_equivalence", oracle),
        ("gibbs_joint_distribution_test", joint_distribution),
        ("intercept_only_regression_reduces_to_random_effects", reduction),
        ("property_suite", properties),
        ("synthetic_large_sample_downweighting", synthetic),
        ("cli_service_parity", parity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("{tag} {name}: {} [{:.2}s]", outcome.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn z_half() -> f64 {
    fisher_z(0.5).unwrap()
}

fn single_study() -> Outcome {
    let rows = [
        (0.0, 0.0, 1.0),
        (0.1, 0.392, 0.286),
        (0.2, 0.458, 0.167),
        (0.3, 0.485, 0.118),
        (0.4, 0.499, 0.091),
        (0.5, 0.509, 0.074),
        (0.6, 0.515, 0.063),
        (0.7, 0.520, 0.054),
        (0.8, 0.523, 0.048),
        (0.9, 0.526, 0.043),
        (1.0, 0.528, 0.038),
    ];
    let prior = NormalPosterior::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (alpha, mean, var) in rows {
        let post = combine_studies(&prior, &[ZDatum::new(z_half(), 0.04, alpha).unwrap()]);
        let err = (post.mean - mean).abs().max((post.variance - var).abs());
        worst = worst.max(err);
        if err > TABLE_TOL {
            misses.push(format!("alpha={alpha}: ({:.5}, {:.5})", post.mean, post.variance));
        }
    }
    Outcome::new(
        misses.is_empty(),
        format!("{}/11 rows, max abs error {worst:.2e} {}", 11 - misses.len(), misses.join(" ")),
    )
}

fn two_study() -> Outcome {
    let rows = [
        (0.0, 0.0, 0.0, 100.0),
        (1.0, 0.0, 0.549, 0.040),
        (0.0, 1.0, 0.000, 0.010),
        (0.1, 1.0, 0.013, 0.010),
        (1.0, 0.1, 0.392, 0.029),
        (0.5, 0.5, 0.110, 0.016),
        (0.2, 1.0, 0.026, 0.010),
        (1.0, 0.2, 0.305, 0.022),
        (0.2, 0.8, 0.032, 0.012),
        (0.8, 0.2, 0.275, 0.025),
        (1.0, 1.0, 0.110, 0.008),
    ];
    let prior = NormalPosterior::new(0.0, 100.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (a1, a2, mean, var) in rows {
        let data = [ZDatum::new(z_half(), 0.04, a1).unwrap(), ZDatum::new(0.0, 0.01, a2).unwrap()];
        let post = combine_studies(&prior, &data);
        let err = (post.mean - mean).abs().max((post.variance - var).abs());
        worst = worst.max(err);
        if err > TABLE_TOL {
            misses.push(format!("({a1},{a2}): ({:.5}, {:.5})", post.mean, post.variance));
        }
    }
    Outcome::new(
        misses.is_empty(),
        format!("{}/11 rows, max abs error {worst:.2e} {}", 11 - misses.len(), misses.join(" ")),
    )
}

fn three_study_data(a3: f64) -> Vec<ZDatum> {
    vec![
        ZDatum::new(z_half(), 0.01, 1.0).unwrap(),
        ZDatum::new(0.0, 0.04, 1.0).unwrap(),
        ZDatum::new(-z_half(), 0.01, a3).unwrap(),
    ]
}

fn three_study_priors() -> RandomEffectsPriors {
    RandomEffectsPriors {
        zeta: NormalPosterior::new(0.0, 100.0).unwrap(),
        tau: InverseGammaPrior::default(),
    }
}

fn three_study() -> Outcome {
    const NAMES: [&str; 4] = ["rho", "rho[1]", "rho[2]", "rho[3]"];
    let rows: [(f64, [f64; 4], f64); 3] = [
        (1.0, [-0.002, 0.482, -0.001, -0.482], 0.02),
        (0.1, [0.061, 0.476, 0.022, -0.305], 0.02),
        (0.01, [0.215, 0.469, 0.099, 0.099], 0.03),
    ];
    let seeds: Vec<u64> = (1..=20).collect();
    // hits[row][param] = seeds within tolerance.
    let mut hits = [[0usize; 4]; 3];
    let mut seeds_all_match = 0;
    let mut slowest = Duration::ZERO;
    let mut sums = [[0.0f64; 4]; 3];
    for &seed in &seeds {
        let mut all = true;
        for (row, (a3, expect, tol)) in rows.iter().enumerate() {
            let config = McmcConfig { seed, ..McmcConfig::default() };
            let start = Instant::now();
            let fit = fit_random(&three_study_data(*a3), &three_study_priors(), &config).unwrap();
            slowest = slowest.max(start.elapsed());
            for (k, name) in NAMES.iter().enumerate() {
                let got = fit.parameter(name).unwrap().mean;
                sums[row][k] += got;
                if (got - expect[k]).abs() <= *tol {
                    hits[row][k] += 1;
                } else {
                    all = false;
                }
            }
        }
        seeds_all_match += usize::from(all);
    }
    let min_hits = hits.iter().flatten().copied().min().unwrap();
    let n = seeds.len() as f64;
    let averages: Vec<String> = sums
        .iter()
        .map(|r| format!("({})", r.iter().map(|s| format!("{:.3}", s / n)).collect::<Vec<_>>().join(",")))
        .collect();
    Outcome::new(
        min_hits >= 18 && slowest < Duration::from_secs(5),
        format!(
            "each of 12 means within tolerance for >= {min_hits}/20 seeds (need 18); all 12 at once for {seeds_all_match}/20 seeds; seed-averaged {}; slowest fit {:.3}s",
            averages.join(" "),
            slowest.as_secs_f64()
        ),
    )
}

fn oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = QuadratureGrid { lower: -40.0, upper: 40.0, points: 40_001 };
    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for _ in 0..100 {
        let prior = NormalPosterior::new(rng.random_range(-1.0..1.0), rng.random_range(0.05..10.0)).unwrap();
        let m = rng.random_range(1..=5);
        let data: Vec<ZDatum> = (0..m)
            .map(|_| {
                ZDatum::new(rng.random_range(-2.0..2.0), rng.random_range(0.002..0.3), rng.random_range(0.0..=2.0))
                    .unwrap()
            })
            .collect();
        let closed = combine_studies(&prior, &data);
        let (mean, var) = quadrature_oracle_fixed(&prior, &data, &grid).unwrap();
        worst = worst.max((mean - closed.mean).abs()).max((var - closed.variance).abs());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("100 configurations, max abs difference {worst:.2e} (limit 1e-6)"),
    )
}

/// Mean and batch-means standard error.
fn mean_and_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let size = xs.len() / batches;
    let bm: Vec<f64> = xs.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let b = bm.len() as f64;
    let var = bm.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

fn joint_distribution() -> Outcome {
    const DRAWS: usize = 200_000;
    let priors = RandomEffectsPriors {
        zeta: NormalPosterior::new(0.2, 0.5).unwrap(),
        tau: InverseGammaPrior::new(3.0, 0.4).unwrap(),
    };
    let phi = [0.02, 0.05];
    let alpha = [1.0, 0.5];
    let start = Instant::now();

    // Marginal-conditional: independent draws from the prior.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let forward: Vec<f64> = (0..DRAWS).map(|_| draw_normal(&mut rng, &priors.zeta)).collect();

    // Successive-conditional: alternate data generation and one Gibbs sweep.
    let mut gibbs = chain_rng(12, 0);
    let zeta = draw_normal(&mut rng, &priors.zeta);
    let tau = draw_inverse_gamma(&mut rng, priors.tau.shape, priors.tau.rate).unwrap();
    let zeta_i = (0..2).map(|_| draw_normal(&mut rng, &NormalPosterior { mean: zeta, variance: tau })).collect();
    let mut state = RandomEffectsState { zeta, tau, zeta_i };
    let mut successive = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        // zᵢ | ζᵢ under the powered likelihood has variance φᵢ/αᵢ.
        let data: Vec<ZDatum> = (0..2)
            .map(|i| {
                let z = draw_normal(&mut rng, &NormalPosterior { mean: state.zeta_i[i], variance: phi[i] / alpha[i] });
                ZDatum::new(z, phi[i], alpha[i]).unwrap()
            })
            .collect();
        sweep(&mut gibbs, &data, &priors, &mut state).unwrap();
        successive.push(state.zeta);
    }

    let mut lines = Vec::new();
    let mut pass = true;
    for (label, g) in [("E[zeta]", (|x: f64| x) as fn(f64) -> f64), ("E[zeta^2]", |x: f64| x * x)] {
        let f: Vec<f64> = forward.iter().map(|&x| g(x)).collect();
        let s: Vec<f64> = successive.iter().map(|&x| g(x)).collect();
        let (mf, sf) = mean_and_se(&f, 100);
        let (ms, ss) = mean_and_se(&s, 100);
        let t = (mf - ms) / (sf * sf + ss * ss).sqrt();
        pass &= t.abs() <= 3.0;
        lines.push(format!("{label}: forward {mf:.4} vs gibbs {ms:.4}, {t:+.2} SE"));
    }
    let elapsed = start.elapsed();
    Outcome::new(pass && elapsed < Duration::from_secs(30), lines.join("; "))
}

fn three_study_studies(a3: f64) -> Vec<Study> {
    vec![
        Study::new("1", 0.5, 103).unwrap().with_power(1.0).unwrap(),
        Study::new("2", 0.0, 28).unwrap().with_power(1.0).unwrap(),
        Study::new("3", -0.5, 103).unwrap().with_power(a3).unwrap(),
    ]
}

fn reduction() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let config = McmcConfig::default();
    let re_priors = three_study_priors();
    let reg_priors = RegressionPriors::uniform(1, re_priors.zeta, re_priors.tau);
    let mut lines = Vec::new();
    for a3 in [1.0, 0.1, 0.01] {
        let studies = three_study_studies(a3);
        let re = random_effects_fit(&studies, &PowerScheme::FromColumn, &re_priors, &config).unwrap();
        let reg = meta_regression_fit(&studies, &[], &PowerScheme::FromColumn, &reg_priors, &config).unwrap();
        let dz = (re.parameter("zeta").unwrap().mean - reg.parameter("beta[intercept]").unwrap().mean).abs();
        let dt = (re.parameter("tau").unwrap().mean - reg.parameter("tau").unwrap().mean).abs();
        worst = worst.max(dz).max(dt);
        lines.push(format!("a3={a3}: |dzeta|={dz:.1e} |dtau|={dt:.1e}"));
    }
    Outcome::new(
        worst <= 0.02 && start.elapsed() < Duration::from_secs(10),
        format!("same seed; {}", lines.join(", ")),
    )
}

fn random_datum(rng: &mut ChaCha8Rng, alpha_max: f64) -> ZDatum {
    ZDatum::new(rng.random_range(-2.0..2.0), rng.random_range(0.002..0.5), rng.random_range(0.0..=alpha_max)).unwrap()
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };

    for _ in 0..2000 {
        let prior = NormalPosterior::new(rng.random_range(-1.0..1.0), rng.random_range(0.01..100.0)).unwrap();
        let m = rng.random_range(1..=8);
        let data: Vec<ZDatum> = (0..m).map(|_| random_datum(&mut rng, 2.0)).collect();

        // Order invariance and sequential folding.
        let batch = combine_studies(&prior, &data);
        let mut shuffled = data.clone();
        shuffled.shuffle(&mut rng);
        let permuted = combine_studies(&prior, &shuffled);
        check(
            (batch.mean - permuted.mean).abs() <= 1e-12 && (batch.variance - permuted.variance).abs() <= 1e-12,
            "order invariance",
        );
        let folded = data.iter().fold(prior, |p, d| posterior_update(&p, d));
        check(
            (batch.mean - folded.mean).abs() <= 1e-12 && (batch.variance - folded.variance).abs() <= 1e-12,
            "sequential-batch equivalence",
        );

        // Power-variance duality, to the last few ulps of the inflated variance.
        let d = random_datum(&mut rng, 3.0);
        if d.alpha > 0.0 {
            let powered = posterior_update(&prior, &d);
            let inflated = posterior_update(&prior, &ZDatum::new(d.z, d.phi / d.alpha, 1.0).unwrap());
            check(
                (powered.mean - inflated.mean).abs() <= 1e-12 * (1.0 + powered.mean.abs())
                    && (powered.variance - inflated.variance).abs() <= 1e-12 * powered.variance,
                "power-variance duality",
            );
        }

        // Zero power everywhere returns the prior exactly.
        let silenced: Vec<ZDatum> = data.iter().map(|d| ZDatum { alpha: 0.0, ..*d }).collect();
        check(combine_studies(&prior, &silenced) == prior, "zero-power prior recovery");

        // Convexity of the fixed-effects mean.
        let lo = data.iter().map(|d| d.z).fold(prior.mean, f64::min);
        let hi = data.iter().map(|d| d.z).fold(prior.mean, f64::max);
        check(batch.mean >= lo - 1e-12 && batch.mean <= hi + 1e-12, "fixed-effects convexity");

        // Shrinkage: ζᵢ | ζ, τ lies between ζ and zᵢ.
        let zeta = rng.random_range(-2.0..2.0);
        let tau = rng.random_range(1e-4..10.0);
        let c = conditional_zeta_i(zeta, tau, &d);
        let (a, b) = (zeta.min(d.z), zeta.max(d.z));
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        check(c.mean >= a - slack && c.mean <= b + slack, "shrinkage convexity");
        let dead = conditional_zeta_i(zeta, tau, &ZDatum { alpha: 0.0, ..d });
        check(dead.mean == zeta && dead.variance == tau, "zero-power study conditional");
    }

    // Fisher round trip on a dense grid.
    let steps = 2_000_000;
    let mut fisher_worst: f64 = 0.0;
    for k in 0..=steps {
        let r = -0.999_999 + 2.0 * 0.999_999 * k as f64 / steps as f64;
        fisher_worst = fisher_worst.max((inv_fisher_z(fisher_z(r).unwrap()) - r).abs());
    }
    check(fisher_worst <= 1e-12, "fisher round trip");

    // Seed determinism of both samplers and of a whole analysis.
    let config = McmcConfig { iterations: 3_000, burn_in: 1_000, seed: 31, ..McmcConfig::default() };
    let data = three_study_data(0.1);
    let a = fit_random(&data, &three_study_priors(), &config).unwrap();
    let b = fit_random(&data, &three_study_priors(), &config).unwrap();
    check(a.chains == b.chains, "random-effects determinism");
    let design = DesignMatrix::new(&[vec![2.0], vec![5.0], vec![3.0]], &["quality".to_string()]).unwrap();
    let priors = RegressionPriors::diffuse(2);
    let a = fit_regression(&data, &design, &priors, &config).unwrap();
    let b = fit_regression(&data, &design, &priors, &config).unwrap();
    check(a.chains == b.chains, "regression determinism");
    let text = common::read_fixture("three_study.txt");
    let mut cfg = AnalysisConfig::new("r", "n");
    cfg.model = ModelChoice::All;
    cfg.power_col = Some("tenth".into());
    cfg.covariates = vec!["quality".into()];
    cfg.iters = 3_000;
    cfg.burnin = 1_000;
    let a = run_analysis(&text, Delimiter::Whitespace, &cfg).unwrap().document.without_timestamps();
    let b = run_analysis(&text, Delimiter::Whitespace, &cfg).unwrap().document.without_timestamps();
    check(a.to_json() == b.to_json(), "analysis determinism");

    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("2000 randomized cases per property, fisher round trip max error {fisher_worst:.1e}")
        } else {
            format!("violated: {}", failures.join(", "))
        },
    )
}

fn synthetic() -> Outcome {
    let spec = SynthSpec::default();
    let scheme1 = PowerScheme::Uniform { value: 1.0 };
    let scheme3 = PowerScheme::ThresholdRule { rule: "n>1000:0.1;default:1".parse::<ThresholdRule>().unwrap() };
    let prior = NormalPosterior::new(0.0, 1e6).unwrap();
    let config = McmcConfig::default();
    let mut failures = Vec::new();
    let mut example = String::new();
    for seed in 1..=20u64 {
        let studies = synthetic_studies(&spec, seed).unwrap();
        let r_min = studies.iter().map(|s| s.r).fold(f64::INFINITY, f64::min);
        let r_max = studies.iter().map(|s| s.r).fold(f64::NEG_INFINITY, f64::max);
        let n_min = studies.iter().map(|s| s.n).min().unwrap();
        let n_max = studies.iter().map(|s| s.n).max().unwrap();
        let mean_r = studies.iter().map(|s| s.r).sum::<f64>() / studies.len() as f64;
        let mut by_n: Vec<&Study> = studies.iter().collect();
        by_n.sort_by_key(|s| std::cmp::Reverse(s.n));
        let shape_ok = studies.len() == 56
            && (r_min, r_max) == (0.01, 0.52)
            && (n_min, n_max) == (50, 2136)
            && by_n[..2].iter().all(|s| s.r > mean_r);
        let est = |scheme: &PowerScheme| {
            let fit = fixed_effects_fit(&studies, scheme, &prior, &config, FixedMode::Analytic).unwrap();
            (fit.parameter("zeta").unwrap().mean, fit.parameter("rho").unwrap().mean)
        };
        let ((z1, r1), (z3, r3)) = (est(&scheme1), est(&scheme3));
        if seed == 1 {
            example = format!("seed 1: rho {r1:.3} (uniform) vs {r3:.3} (n>1000 at 0.1)");
        }
        if !(shape_ok && z3 < z1 && r3 < r1) {
            failures.push(seed);
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{}/20 generated datasets satisfy shape and ordering; {example}", 20 - failures.len()),
    )
}

fn parity() -> Outcome {
    struct Case {
        args: Vec<&'static str>,
        config: AnalysisConfig,
    }
    let fixed = {
        let mut c = AnalysisConfig::new("r", "n");
        c.model = ModelChoice::Fixed;
        c.power_col = Some("a".into());
        c.prior_var = 100.0;
        c.seed = 3;
        Case {
            args: vec!["--model", "fixed", "--power-col", "a", "--prior-var", "100", "--seed", "3"],
            config: c,
        }
    };
    let random = {
        let mut c = AnalysisConfig::new("r", "n");
        c.power_col = Some("hundredth".into());
        c.prior_var = 100.0;
        c.seed = 17;
        c.random_effects = true;
        Case {
            args: vec!["--power-col", "hundredth", "--prior-var", "100", "--seed", "17", "--random-effects"],
            config: c,
        }
    };
    let all = {
        let mut c = AnalysisConfig::new("r", "n");
        c.model = ModelChoice::All;
        c.power_rule = Some("r<0:0.1;default:1".into());
        c.covariates = vec!["quality".into()];
        c.iters = 4_000;
        c.burnin = 1_000;
        Case {
            args: vec![
                "--model", "all", "--power-rule", "r<0:0.1;default:1", "--covariates", "quality", "--iters",
                "4000", "--burnin", "1000",
            ],
            config: c,
        }
    };
    let dir = tempfile::tempdir().unwrap();
    let rt = common::runtime();
    let app = router(ServiceConfig::default());
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, fixture, case) in [("fixed", "two_study.txt", fixed), ("random", "three_study.txt", random), ("all", "three_study.txt", all)] {
        let out = dir.path().join(format!("{name}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_metaprior"))
            .arg("fit")
            .arg("--data")
            .arg(common::fixture(fixture))
            .args(["--cor", "r", "--n", "n"])
            .args(&case.args)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            pass = false;
            lines.push(format!("{name}: cli failed: {}", String::from_utf8_lossy(&status.stderr)));
            continue;
        }
        let cli_doc = std::fs::read_to_string(&out).unwrap();
        let body = serde_json::json!({ "data": common::read_fixture(fixture), "config": case.config });
        let (code, service_doc) = rt.block_on(common::analyze(&app, body));
        let bytes_equal = common::strip_timestamps(&cli_doc) == common::strip_timestamps(&service_doc);
        let typed_equal = ResultDocument::from_json(&cli_doc).unwrap().without_timestamps()
            == ResultDocument::from_json(&service_doc).unwrap().without_timestamps();
        let ok = code.is_success() && bytes_equal && typed_equal;
        pass &= ok;
        let doc = ResultDocument::from_json(&service_doc).unwrap();
        let models: Vec<&str> = doc.meta.models.iter().map(|m| m.model.as_str()).collect();
        lines.push(format!(
            "{name} [{}]: {}",
            models.join("+"),
            if ok { "identical" } else { "DIFFERENT" }
        ));
    }
    Outcome::new(pass, lines.join(", "))
}
