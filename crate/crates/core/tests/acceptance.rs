//! Numbered end-to-end acceptance checks.
//!
//! Each test pins the tolerances of one acceptance criterion as
//! constants, drives the public API exactly as a user would, and prints
//! a `criterion N: PASS` line with the measured margins (visible with
//! `--nocapture`). A failing check panics with a matching
//! `criterion N: FAIL` message. Byte-identical re-run determinism of
//! the emitted files (criterion 10) lives in the command-line crate's
//! acceptance test, next to the code that writes those files.
//!
//! The regression checks (criteria 8 and 9) share one trained model and
//! one set of sample banks, built on first use; the build cost is
//! charged against criterion 8's runtime budget.

use faultstab::dataset::{generate, Dataset, DatasetContext};
use faultstab::geometry::{
    fault_point, sine_basis, FaultParams, ParamBox, SourceRegion, SOURCE_HALF_WIDTH,
};
use faultstab::kernel::{green_phi_grad_y, kernel_h, kernel_h_dm, kernel_h_grad_x, KernelConfig};
use faultstab::operator::svd_subspace;
use faultstab::regressor::{
    evaluate_mlp, evaluate_nn, train_mlp, Evaluation, MlpModel, SampleBank,
};
use faultstab::seeding::stream_rng;
use faultstab::stability::quadcheck::{
    closed_form_cosine, forward_data_probe, quadrature_order_check, OracleRule,
};
use faultstab::stability::{
    empirical_lipschitz, local_constant, projection_lipschitz_check, StabilityConfig,
    StabilityContext,
};
use rand::Rng;
use std::sync::OnceLock;
use std::time::Instant;

/// Draw one `(m, x, y)` triple from the admissible parameter box, the
/// observation square, and the source square.
fn random_case(seed: u64, index: u64) -> (FaultParams, [f64; 2], [f64; 2]) {
    let mut rng = stream_rng(seed, index);
    let m = ParamBox::default().sample(&mut rng);
    let x = [rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0)];
    let y = [rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0)];
    (m, x, y)
}

/// Mean of the three per-parameter errors, one number per method.
fn mean_mae(e: &Evaluation) -> f64 {
    (e.mae[0] + e.mae[1] + e.mae[2]) / 3.0
}

const C1_SEED: u64 = 2103;
const C1_CASES: u64 = 100;
const C1_STEP_M: f64 = 1e-5;
const C1_STEP_X: f64 = 1e-4;
const C1_REL_TOL: f64 = 1e-6;
const C1_TIME_LIMIT_S: f64 = 5.0;

#[test]
fn criterion_01_kernel_derivatives_match_finite_differences() {
    let cfg = KernelConfig::default();
    let start = Instant::now();
    let mut worst_m = 0.0f64;
    let mut worst_x = 0.0f64;
    for i in 0..C1_CASES {
        let (m, x, y) = random_case(C1_SEED, i);

        let analytic = kernel_h_dm(&m, x, y, &cfg).unwrap();
        let h = C1_STEP_M;
        let fd = [
            (kernel_h(&FaultParams { a: m.a + h, ..m }, x, y, &cfg).unwrap()
                - kernel_h(&FaultParams { a: m.a - h, ..m }, x, y, &cfg).unwrap())
                / (2.0 * h),
            (kernel_h(&FaultParams { b: m.b + h, ..m }, x, y, &cfg).unwrap()
                - kernel_h(&FaultParams { b: m.b - h, ..m }, x, y, &cfg).unwrap())
                / (2.0 * h),
            (kernel_h(&FaultParams { d: m.d + h, ..m }, x, y, &cfg).unwrap()
                - kernel_h(&FaultParams { d: m.d - h, ..m }, x, y, &cfg).unwrap())
                / (2.0 * h),
        ];
        let scale = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = (0..3)
            .map(|k| (fd[k] - analytic[k]).abs())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            // The cutoff switches the kernel off on a neighbourhood, so
            // the difference quotients must vanish identically too.
            assert_eq!(
                diff, 0.0,
                "criterion 1: FAIL - case {i}: zero parameter gradient but nonzero differences"
            );
        } else {
            let rel = diff / scale;
            assert!(
                rel < C1_REL_TOL,
                "criterion 1: FAIL - case {i}: parameter gradient relative error {rel:.3e} >= {C1_REL_TOL:.0e}"
            );
            worst_m = worst_m.max(rel);
        }

        let analytic = kernel_h_grad_x(&m, x, y, &cfg).unwrap();
        let h = C1_STEP_X;
        let fd = [
            (kernel_h(&m, [x[0] + h, x[1]], y, &cfg).unwrap()
                - kernel_h(&m, [x[0] - h, x[1]], y, &cfg).unwrap())
                / (2.0 * h),
            (kernel_h(&m, [x[0], x[1] + h], y, &cfg).unwrap()
                - kernel_h(&m, [x[0], x[1] - h], y, &cfg).unwrap())
                / (2.0 * h),
        ];
        let scale = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = (0..2)
            .map(|k| (fd[k] - analytic[k]).abs())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            assert_eq!(
                diff, 0.0,
                "criterion 1: FAIL - case {i}: zero surface gradient but nonzero differences"
            );
        } else {
            let rel = diff / scale;
            assert!(
                rel < C1_REL_TOL,
                "criterion 1: FAIL - case {i}: surface gradient relative error {rel:.3e} >= {C1_REL_TOL:.0e}"
            );
            worst_x = worst_x.max(rel);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < C1_TIME_LIMIT_S,
        "criterion 1: FAIL - took {elapsed:.1} s (limit {C1_TIME_LIMIT_S} s)"
    );
    println!(
        "criterion 1: PASS - {C1_CASES} cases, worst relative error {worst_m:.3e} (parameters, \
         step {C1_STEP_M:.0e}) / {worst_x:.3e} (surface, step {C1_STEP_X:.0e}), {elapsed:.2} s"
    );
}

const C2_SEED: u64 = 2203;
const C2_CASES: u64 = 100;
const C2_REL_TOL: f64 = 1e-14;
/// Cases that must land where the layer is switched on, so the identity
/// is not checked on zeros alone.
const C2_MIN_ACTIVE: usize = 40;

#[test]
fn criterion_02_surface_kernel_doubles_the_free_space_term() {
    let cfg = KernelConfig::default();
    let mut worst = 0.0f64;
    let mut active = 0usize;
    for i in 0..C2_CASES {
        let (m, x, y) = random_case(C2_SEED, i);
        let yf = fault_point(&m, y[0], y[1]);
        let chi = cfg.chi(yf[2]);
        let single = if chi == 0.0 {
            0.0
        } else {
            active += 1;
            let g = green_phi_grad_y([x[0], x[1], 0.0], yf).unwrap();
            (g[0] * -m.a + g[1] * -m.b + g[2]) * chi
        };
        let h = kernel_h(&m, x, y, &cfg).unwrap();
        let denom = h.abs().max((2.0 * single).abs());
        if denom == 0.0 {
            continue;
        }
        let rel = (h - 2.0 * single).abs() / denom;
        assert!(
            rel < C2_REL_TOL,
            "criterion 2: FAIL - case {i}: relative error {rel:.3e} >= {C2_REL_TOL:.0e}"
        );
        worst = worst.max(rel);
    }
    assert!(
        active >= C2_MIN_ACTIVE,
        "criterion 2: FAIL - only {active} cases hit the active layer"
    );
    println!(
        "criterion 2: PASS - {C2_CASES} cases ({active} on the active layer), worst relative \
         error {worst:.3e}"
    );
}

const C3_LADDER: [usize; 4] = [6, 11, 21, 41];
const C3_SLOPE_RANGE: (f64, f64) = (-1.3, -0.8);
const C3_TIME_LIMIT_S: f64 = 30.0;

#[test]
fn criterion_03_data_quadrature_error_decays_at_first_order() {
    let start = Instant::now();
    let basis = sine_basis(3, SOURCE_HALF_WIDTH).unwrap();
    let region = SourceRegion::new(SOURCE_HALF_WIDTH, 8).unwrap();
    let cfg = KernelConfig::default();
    let m = FaultParams::new(0.3, -0.2, -25.0).unwrap();
    let coeffs: Vec<f64> = (0..basis.len()).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let probe = forward_data_probe(
        &m,
        &coeffs,
        &basis,
        &region,
        &cfg,
        4,
        OracleRule::default(),
    )
    .unwrap();
    let checks = quadrature_order_check(&[closed_form_cosine(), probe], &C3_LADDER).unwrap();
    let mut slopes = Vec::new();
    for check in &checks {
        let slope = check.slope.fitted().unwrap_or_else(|| {
            panic!(
                "criterion 3: FAIL - {} was integrated exactly, no slope to fit",
                check.name
            )
        });
        assert!(
            (C3_SLOPE_RANGE.0..=C3_SLOPE_RANGE.1).contains(&slope),
            "criterion 3: FAIL - {} slope {slope:.3} outside [{}, {}]",
            check.name,
            C3_SLOPE_RANGE.0,
            C3_SLOPE_RANGE.1
        );
        slopes.push(format!("{} {slope:.3}", check.name));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < C3_TIME_LIMIT_S,
        "criterion 3: FAIL - took {elapsed:.1} s (limit {C3_TIME_LIMIT_S} s)"
    );
    println!(
        "criterion 3: PASS - slopes {} over n = {C3_LADDER:?}, {elapsed:.1} s",
        slopes.join(", ")
    );
}

const C4_SEED: u64 = 404;
const C4_PARAMS: u64 = 20;
const C4_MEMBERS: usize = 50;
const C4_Q: usize = 5;
const C4_SLACK: f64 = 1e-10;
const C4_TIME_LIMIT_S: f64 = 120.0;

#[test]
fn criterion_04_subspace_data_norms_stay_above_sigma_q() {
    let ctx = StabilityContext::with_defaults().unwrap();
    let start = Instant::now();
    let mut min_margin = f64::INFINITY;
    for i in 0..C4_PARAMS {
        let mut rng = stream_rng(C4_SEED, i);
        let m = ctx.param_box.sample(&mut rng);
        let op = ctx.assembly.assemble(&m).unwrap();
        let sub = svd_subspace(&op, C4_Q).unwrap();
        for j in 0..C4_MEMBERS {
            let u = sub.random_unit_member(&mut rng);
            let u_norm: f64 = u.iter().map(|c| c * c).sum::<f64>().sqrt();
            let data_norm = op.data_norm(&u).unwrap();
            let floor = (1.0 - C4_SLACK) * sub.sigma_q() * u_norm;
            assert!(
                data_norm >= floor,
                "criterion 4: FAIL - parameters {i} member {j}: |Au| = {data_norm:.6e} below \
                 (1 - {C4_SLACK:.0e}) sigma_q |u| = {floor:.6e}"
            );
            min_margin = min_margin.min(data_norm / (sub.sigma_q() * u_norm) - 1.0);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < C4_TIME_LIMIT_S,
        "criterion 4: FAIL - took {elapsed:.1} s (limit {C4_TIME_LIMIT_S} s)"
    );
    println!(
        "criterion 4: PASS - {} slips at {C4_PARAMS} parameter points, smallest margin \
         |Au|/(sigma_q |u|) - 1 = {min_margin:.3e}, {elapsed:.1} s",
        C4_PARAMS as usize * C4_MEMBERS
    );
}

const C5_SEED: u64 = 31;
const C5_M0: (f64, f64, f64) = (0.0, 0.0, -30.0);
const C5_RADIUS: f64 = 0.05;
const C5_PAIRS: usize = 50;
/// Rank with the widest relative gap near `m0`: the pair behind rank 5
/// splits by under 2 percent there, while rank 6 keeps a 23 percent gap,
/// comfortably above the 10 percent precondition.
const C5_Q: usize = 6;
const C5_GAP_MIN: f64 = 0.10;
const C5_MAX_OVER_MEDIAN: f64 = 10.0;

#[test]
fn criterion_05_projector_sensitivity_stays_bounded_near_base_point() {
    let ctx = StabilityContext::with_defaults().unwrap();
    let m0 = FaultParams::new(C5_M0.0, C5_M0.1, C5_M0.2).unwrap();
    // The check itself rejects any sampled point whose relative gap
    // falls below 10 percent, so an Ok result certifies the gap
    // precondition at all 50 pairs.
    let check = projection_lipschitz_check(&ctx, &m0, C5_RADIUS, C5_PAIRS, C5_Q, C5_SEED)
        .unwrap_or_else(|e| panic!("criterion 5: FAIL - {e}"));
    assert!(
        check.gap_m0 >= C5_GAP_MIN,
        "criterion 5: FAIL - relative gap {:.3} at the base point is below {C5_GAP_MIN}",
        check.gap_m0
    );
    assert!(
        check.ratios.iter().all(|r| r.is_finite()),
        "criterion 5: FAIL - non-finite projector ratio"
    );
    let spread = check.max_ratio / check.median_ratio;
    assert!(
        spread < C5_MAX_OVER_MEDIAN,
        "criterion 5: FAIL - max/median ratio {spread:.2} >= {C5_MAX_OVER_MEDIAN}"
    );
    println!(
        "criterion 5: PASS - {C5_PAIRS} pairs in radius {C5_RADIUS} at rank {C5_Q}, gap at base \
         {:.3}, ratio max {:.3} median {:.3} (max/median {spread:.2})",
        check.gap_m0, check.max_ratio, check.median_ratio
    );
}

const C6_TRIALS: usize = 1000;
const C6_COARSE_FLOOR: f64 = 0.5;
const C6_TIME_LIMIT_S: f64 = 900.0;

#[test]
fn criterion_06_thousand_trial_stability_bound_is_positive() {
    let ctx = StabilityContext::with_defaults().unwrap();
    let cfg = StabilityConfig {
        trials: C6_TRIALS,
        ..StabilityConfig::default()
    };
    let start = Instant::now();
    let report = empirical_lipschitz(&ctx, &cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        report.c_hat > 0.0,
        "criterion 6: FAIL - c_hat = {} is not positive",
        report.c_hat
    );
    let min_ratio = report
        .min_coarse_over_dense
        .expect("criterion 6: FAIL - no coarse grid in the default context");
    assert!(
        min_ratio >= C6_COARSE_FLOOR,
        "criterion 6: FAIL - worst coarse/dense ratio {min_ratio:.3} below {C6_COARSE_FLOOR}"
    );
    assert!(
        elapsed < C6_TIME_LIMIT_S,
        "criterion 6: FAIL - took {elapsed:.0} s (limit {C6_TIME_LIMIT_S} s)"
    );
    println!(
        "criterion 6: PASS - c_hat {:.4e} over {} completed trials ({} skipped), coarse bound \
         {:.4e}, worst coarse/dense ratio {min_ratio:.3}, {elapsed:.0} s",
        report.c_hat,
        report.completed,
        report.skipped,
        report.c_hat_coarse.unwrap_or(f64::NAN)
    );
}

const C7_SEED: u64 = 4242;
const C7_PAIRS: u64 = 10;
const C7_STEP: f64 = 1e-2;
const C7_REL_TOL: f64 = 0.20;

#[test]
fn criterion_07_local_constant_tracks_the_restricted_ratio() {
    let ctx = StabilityContext::with_defaults().unwrap();
    let cfg = StabilityConfig::default();
    let mut worst = 0.0f64;
    for i in 0..C7_PAIRS {
        let mut rng = stream_rng(C7_SEED, i);
        let m = ctx.param_box.sample(&mut rng);
        let mut dir = [0.0f64; 3];
        for d in dir.iter_mut() {
            *d = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        for d in dir.iter_mut() {
            *d /= norm;
        }
        let lc = local_constant(&ctx, &m, dir, &cfg)
            .unwrap_or_else(|e| panic!("criterion 7: FAIL - pair {i}: {e}"));
        assert!(
            lc.value > 0.0,
            "criterion 7: FAIL - pair {i}: local constant {} is not positive",
            lc.value
        );
        // Finite-step counterpart along the same direction: project the
        // base subspace onto the shifted one, push it through the
        // shifted operator, and remove what the base data range
        // explains. The smallest singular value of what is left, over
        // the step, is the restricted empirical ratio.
        let shifted = FaultParams {
            a: m.a + C7_STEP * dir[0],
            b: m.b + C7_STEP * dir[1],
            d: m.d + C7_STEP * dir[2],
        };
        let op = ctx.assembly.assemble(&m).unwrap();
        let sub = svd_subspace(&op, cfg.q).unwrap();
        let op_shifted = ctx.assembly.assemble(&shifted).unwrap();
        let sub_shifted = svd_subspace(&op_shifted, cfg.q).unwrap();
        let vq = sub.right_q();
        let tracked = sub_shifted.right_q() * (sub_shifted.right_q().transpose() * vq);
        let data = &op_shifted.weighted * tracked;
        let uq = sub.left_q();
        let resid = &data - uq * (uq.transpose() * &data);
        let gram = resid.transpose() * &resid;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let smallest = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt();
        let restricted = smallest / C7_STEP;
        let rel = (lc.value - restricted).abs() / restricted;
        assert!(
            rel <= C7_REL_TOL,
            "criterion 7: FAIL - pair {i}: local constant {:.4e} vs restricted ratio \
             {restricted:.4e} at step {C7_STEP} differ by {rel:.3} (tolerance {C7_REL_TOL})",
            lc.value
        );
        worst = worst.max(rel);
    }
    println!(
        "criterion 7: PASS - {C7_PAIRS} seeded pairs, local constants positive, worst relative \
         deviation from the step-{C7_STEP} restricted ratio {worst:.3}"
    );
}

const TRAIN_COUNT: usize = 20_000;
const TRAIN_Q: usize = 5;
const TRAIN_SEED: u64 = 101;
const TEST_COUNT: usize = 500;
const TEST_SEED: u64 = 202;
const RICH_Q: usize = 50;
const RICH_SEED: u64 = 303;
const NOISE_LEVEL: f64 = 0.05;
const NOISE_SEED: u64 = 404;
const HIDDEN: [usize; 3] = [64, 32, 16];
const GAMMA: f64 = 0.2;
const ITERS: usize = 2000;
const MLP_SEED: u64 = 1;
const SUB_COUNT: usize = 2000;
const SUB_SEED: u64 = 9;

/// Shared artifacts for criteria 8 and 9: one trained network, the full
/// and reduced banks, and the three held-out test sets.
struct Regressors {
    model: MlpModel,
    bank_full: SampleBank,
    bank_sub: SampleBank,
    test: Dataset,
    rich_clean: Dataset,
    rich_noisy: Dataset,
    build_seconds: f64,
}

static REGRESSORS: OnceLock<Regressors> = OnceLock::new();

fn regressors() -> &'static Regressors {
    REGRESSORS.get_or_init(|| {
        let start = Instant::now();
        let ctx = DatasetContext::with_defaults().unwrap();
        let train = generate(&ctx, TRAIN_COUNT, TRAIN_Q, TRAIN_SEED).unwrap();
        let test = generate(&ctx, TEST_COUNT, TRAIN_Q, TEST_SEED).unwrap();
        let rich_clean = generate(&ctx, TEST_COUNT, RICH_Q, RICH_SEED).unwrap();
        let rich_noisy = rich_clean.with_noise(NOISE_LEVEL, NOISE_SEED).unwrap();
        let model = train_mlp(&train, &HIDDEN, GAMMA, ITERS, MLP_SEED).unwrap();
        let bank_full = SampleBank::from_dataset(&train, "s").unwrap();
        let bank_sub = bank_full.subsample(SUB_COUNT, SUB_SEED).unwrap();
        Regressors {
            model,
            bank_full,
            bank_sub,
            test,
            rich_clean,
            rich_noisy,
            build_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

const C8_ERR_A_MAX: f64 = 0.08;
const C8_TIME_LIMIT_S: f64 = 7200.0;

#[test]
fn criterion_08_trained_network_beats_nearest_neighbor_baselines() {
    let start = Instant::now();
    let reg = regressors();
    let mlp = evaluate_mlp(&reg.model, &reg.test).unwrap();
    let nn_full = evaluate_nn(&reg.bank_full, &reg.test).unwrap();
    let nn_sub = evaluate_nn(&reg.bank_sub, &reg.test).unwrap();
    let (e_mlp, e_full, e_sub) = (mean_mae(&mlp), mean_mae(&nn_full), mean_mae(&nn_sub));
    assert!(
        e_mlp < e_full && e_full < e_sub,
        "criterion 8: FAIL - error ordering broken: mlp {e_mlp:.4}, bank {e_full:.4}, reduced \
         bank {e_sub:.4}"
    );
    assert!(
        mlp.mae[0] < C8_ERR_A_MAX,
        "criterion 8: FAIL - mlp error for a is {:.4} (limit {C8_ERR_A_MAX})",
        mlp.mae[0]
    );
    assert!(
        mlp.batch_seconds < nn_full.batch_seconds,
        "criterion 8: FAIL - {} mlp predictions took {:.3} s, linear search {:.3} s",
        TEST_COUNT,
        mlp.batch_seconds,
        nn_full.batch_seconds
    );
    let elapsed = reg.build_seconds + start.elapsed().as_secs_f64();
    assert!(
        elapsed < C8_TIME_LIMIT_S,
        "criterion 8: FAIL - took {elapsed:.0} s including artifact build (limit \
         {C8_TIME_LIMIT_S} s)"
    );
    println!(
        "criterion 8: PASS - mean error mlp {e_mlp:.4} < bank {e_full:.4} < reduced bank \
         {e_sub:.4}; mlp error for a {:.4}; batch {:.3} s vs search {:.3} s; {elapsed:.0} s \
         total",
        mlp.mae[0], mlp.batch_seconds, nn_full.batch_seconds
    );
}

const C9_MLP_FACTOR: f64 = 2.0;
const C9_NN_DRIFT: f64 = 0.10;

#[test]
fn criterion_09_noise_leaves_the_regressors_usable() {
    let reg = regressors();
    let mlp_clean = mean_mae(&evaluate_mlp(&reg.model, &reg.rich_clean).unwrap());
    let mlp_noisy = mean_mae(&evaluate_mlp(&reg.model, &reg.rich_noisy).unwrap());
    assert!(
        mlp_noisy <= C9_MLP_FACTOR * mlp_clean,
        "criterion 9: FAIL - mlp error {mlp_noisy:.4} on noisy data exceeds {C9_MLP_FACTOR} x \
         clean error {mlp_clean:.4}"
    );
    let mut drifts = Vec::new();
    for (name, bank) in [("bank", &reg.bank_full), ("reduced bank", &reg.bank_sub)] {
        let clean = mean_mae(&evaluate_nn(bank, &reg.rich_clean).unwrap());
        let noisy = mean_mae(&evaluate_nn(bank, &reg.rich_noisy).unwrap());
        let drift = (noisy - clean).abs() / clean;
        assert!(
            drift < C9_NN_DRIFT,
            "criterion 9: FAIL - {name} error moved from {clean:.4} to {noisy:.4} under noise \
             ({drift:.3} relative, limit {C9_NN_DRIFT})"
        );
        drifts.push(format!("{name} {clean:.4} -> {noisy:.4} ({drift:.3})"));
    }
    println!(
        "criterion 9: PASS - mlp {mlp_clean:.4} -> {mlp_noisy:.4} (factor {:.2} of limit \
         {C9_MLP_FACTOR}); {}",
        mlp_noisy / mlp_clean,
        drifts.join("; ")
    );
}
