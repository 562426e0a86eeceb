//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use faer::Mat;
use kf_core::dmd::dmd;
use kf_core::forecast::analyze_window;
use kf_core::generators::{
    inject_disturbance, lorenz_simulate, sinusoids, synthetic_kmd, DisturbanceKind, LorenzParams,
};
use kf_core::kmd::vandermonde;
use kf_core::{
    build_hankel, ddmd_rrr, fit_amplitudes_wls, global_predict, local_predict, relative_error,
    AmplitudeMethod, GkpConfig, KmdModel, LkpConfig, RrrConfig, SnapshotMatrix, WeightSpec,
    WindowSpec, C64,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn to_faer<T: Copy + nalgebra::Scalar + faer::traits::ComplexField>(m: &DMatrix<T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn faer_eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    to_faer(a)
        .eigenvalues()
        .expect("oracle eigenvalues")
        .into_iter()
        .map(|z| C64::new(z.re, z.im))
        .collect()
}

fn faer_min_singular(a: &DMatrix<C64>) -> f64 {
    let s = to_faer(a).singular_values().expect("oracle singular values");
    s.into_iter().fold(f64::INFINITY, f64::min)
}

fn faer_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = to_faer(a).thin_svd().expect("oracle svd");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let cut = 1e-14 * s[0];
    DMatrix::from_fn(a.ncols(), a.nrows(), |i, j| {
        (0..s.nrows())
            .filter(|&k| s[k] > cut)
            .map(|k| v[(i, k)] * u[(j, k)] / s[k])
            .sum()
    })
}

/// Conjugate-closed spectrum with pairwise distances of at least `gap`.
fn spectrum(rng: &mut ChaCha8Rng, n: usize, modulus: (f64, f64), gap: f64) -> Vec<C64> {
    'retry: loop {
        let mut eigs: Vec<C64> = Vec::with_capacity(n);
        while eigs.len() < n {
            let rho = rng.gen_range(modulus.0..modulus.1);
            if n - eigs.len() >= 2 && rng.gen_bool(0.7) {
                let z = C64::from_polar(rho, rng.gen_range(0.15..std::f64::consts::PI - 0.15));
                eigs.push(z);
                eigs.push(z.conj());
            } else {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                eigs.push(C64::new(sign * rho, 0.0));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if (eigs[i] - eigs[j]).norm() < gap {
                    continue 'retry;
                }
            }
        }
        return eigs;
    }
}

/// Real block-diagonal matrix with the given conjugate-closed spectrum.
fn real_block(eigs: &[C64]) -> DMatrix<f64> {
    let n = eigs.len();
    let mut d = DMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let z = eigs[i];
        if z.im == 0.0 {
            d[(i, i)] = z.re;
            i += 1;
        } else {
            d[(i, i)] = z.re;
            d[(i, i + 1)] = z.im;
            d[(i + 1, i)] = -z.im;
            d[(i + 1, i + 1)] = z.re;
            i += 2;
        }
    }
    d
}

struct KrylovCase {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

fn krylov_cases() -> Vec<KrylovCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..50)
        .map(|i| {
            let n = rng.gen_range(6..=12);
            let eigs = spectrum(&mut rng, n, (0.7, 1.1), 0.1);
            let s = gaussian(&mut rng, n, n);
            let a = &s * real_block(&eigs) * s.clone().try_inverse().expect("invertible basis");
            let m = if i % 2 == 0 { n } else { rng.gen_range(n / 2 + 1..n) };
            let mut cols = vec![DVector::from_fn(n, |_, _| normal(&mut rng))];
            for _ in 0..m {
                let next = &a * cols.last().unwrap();
                cols.push(next);
            }
            let h = DMatrix::from_columns(&cols);
            KrylovCase {
                x: h.columns(0, m).into_owned(),
                y: h.columns(1, m).into_owned(),
            }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut failures = 0;
    for case in krylov_cases() {
        let dec = match ddmd_rrr(&case.x, &case.y, &RrrConfig::default()) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("ddmd_rrr failed: {e}")),
        };
        let a = &case.y * faer_pinv(&case.x);
        let u = &dec.basis;
        let oracle = faer_eigenvalues(&(u.transpose() * a * u));
        let rez = dec.residuals.as_ref().expect("refined residuals");
        for (lam, r) in dec.eigenvalues.iter().zip(rez) {
            if *r >= 1e-8 {
                continue;
            }
            checked += 1;
            let dist = oracle.iter().map(|mu| (lam - mu).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(dist);
            if dist > 1e-8 {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && checked > 0,
        format!("{checked} low-residual eigenvalues over 50 instances, worst distance {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0;
    let mut nontrivial = 0;
    for case in krylov_cases() {
        let dec = match ddmd_rrr(&case.x, &case.y, &RrrConfig::default()) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("ddmd_rrr failed: {e}")),
        };
        let a = (&case.y * faer_pinv(&case.x)).map(|v| C64::new(v, 0.0));
        let u = dec.basis.map(|v| C64::new(v, 0.0));
        let au = &a * &u;
        let rez = dec.residuals.as_ref().expect("refined residuals");
        for (lam, r) in dec.eigenvalues.iter().zip(rez) {
            let oracle = faer_min_singular(&(&au - &u * *lam));
            worst = worst.max((r - oracle).abs());
            pairs += 1;
            if oracle > 1e-6 {
                nontrivial += 1;
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{pairs} pairs ({nontrivial} with residual > 1e-6), worst |rez - oracle| {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let m_h = rng.gen_range(8..=20);
        let n_h = m_h / d + 2;
        let s = SnapshotMatrix::new(gaussian(&mut rng, d, n_h + m_h)).unwrap();
        let h = match build_hankel(&s, WindowSpec::new(0, n_h, m_h)) {
            Ok(h) => h,
            Err(e) => return outcome(false, format!("hankel: {e}")),
        };
        let dec = match dmd(&h.x().into_owned(), &h.y().into_owned(), 1e-12) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("dmd: {e}")),
        };
        if dec.len() != m_h {
            return outcome(false, format!("rank {} instead of m = {m_h}", dec.len()));
        }
        let model = match KmdModel::fit(&h, &dec, &AmplitudeMethod::Exact) {
            Ok(m) => m,
            Err(e) => return outcome(false, format!("exact amplitudes: {e}")),
        };
        let alpha = DMatrix::from_diagonal(&DVector::from_vec(model.amplitudes.clone()));
        let recon = &model.modes * alpha * vandermonde(&model.eigenvalues, m_h);
        for k in 0..m_h {
            let actual: Vec<f64> = h.data().column(k).iter().copied().collect();
            let err = recon.column(k).iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            let pred: Vec<f64> = recon.column(k).iter().map(|z| z.re).collect();
            let rel = relative_error(&pred, &actual).max(err / DVector::from_vec(actual.clone()).norm());
            worst = worst.max(rel);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("20 random windows with r = m, worst column relative error {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = rng.gen_range(1..=8);
        let m = rng.gen_range(r.max(2)..=40);
        let l = rng.gen_range(2..=10);
        let eigs: Vec<C64> = (0..r)
            .map(|_| C64::from_polar(rng.gen_range(0.8..1.05), rng.gen_range(-3.0..3.0)))
            .collect();
        let modes = DMatrix::from_fn(l, r, |_, _| C64::new(normal(&mut rng), normal(&mut rng)));
        let snaps = gaussian(&mut rng, l, m);
        let temporal: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
        let spatial: Vec<f64> = (0..l).map(|_| rng.gen_range(0.5..2.0)).collect();
        let weights = WeightSpec {
            temporal: Some(temporal.clone()),
            spatial: Some(spatial.clone()),
        };
        let fit = match fit_amplitudes_wls(&modes, &eigs, &snaps, &weights) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("wls: {e}")),
        };

        // Stacked rows w_k sqrt(Omega) V diag(lambda^k), solved by QR.
        let mut a = DMatrix::<C64>::zeros(l * m, r);
        let mut b = DVector::<C64>::zeros(l * m);
        for k in 0..m {
            for i in 0..l {
                let scale = temporal[k] * spatial[i].sqrt();
                for j in 0..r {
                    a[(k * l + i, j)] = modes[(i, j)] * eigs[j].powi(k as i32) * scale;
                }
                b[k * l + i] = C64::new(snaps[(i, k)] * scale, 0.0);
            }
        }
        let (q, rr) = a.qr().unpack();
        let rhs = q.adjoint() * b;
        let oracle = match rr.solve_upper_triangular(&rhs) {
            Some(x) => x,
            None => return outcome(false, "oracle system is singular".into()),
        };
        let got = DVector::from_vec(fit.amplitudes);
        worst = worst.max((got - &oracle).norm() / oracle.norm());
    }
    outcome(
        worst <= 1e-8,
        format!("20 instances (r <= 8, M <= 40), worst relative difference {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, n_h, m_h, horizon) = (3, 15, 15, 100);
    let mut worst_eig = 0.0f64;
    let mut worst_pred = 0.0f64;
    for _ in 0..30 {
        let r = rng.gen_range(1..=6);
        let eigs = spectrum(&mut rng, r, (0.9, 1.02), 0.15);
        let mut modes = DMatrix::<C64>::zeros(d, r);
        let mut amps = vec![C64::new(0.0, 0.0); r];
        let mut j = 0;
        while j < r {
            let amp = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-3.0..3.0));
            if eigs[j].im == 0.0 {
                for i in 0..d {
                    modes[(i, j)] = C64::new(normal(&mut rng), 0.0);
                }
                amps[j] = C64::new(amp.norm(), 0.0);
                j += 1;
            } else {
                for i in 0..d {
                    let v = C64::new(normal(&mut rng), normal(&mut rng));
                    modes[(i, j)] = v;
                    modes[(i, j + 1)] = v.conj();
                }
                amps[j] = amp;
                amps[j + 1] = amp.conj();
                j += 2;
            }
        }
        let total = n_h + m_h + horizon;
        let s = match synthetic_kmd(&eigs, &modes, &amps, total) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("synthetic_kmd: {e}")),
        };
        let train = s.time_slice(0, n_h + m_h).unwrap();
        let rrr = RrrConfig::default();
        let analysis = match analyze_window(&train, WindowSpec::new(0, n_h, m_h), &rrr, &AmplitudeMethod::default()) {
            Ok(a) => a,
            Err(e) => return outcome(false, format!("window analysis: {e}")),
        };
        let Some(model) = analysis.model else {
            return outcome(false, "no accepted pairs on an exact modal signal".into());
        };
        if model.eigenvalues.len() != r {
            return outcome(false, format!("recovered {} eigenvalues, expected {r}", model.eigenvalues.len()));
        }
        for lam in &eigs {
            let dist = model.eigenvalues.iter().map(|mu| (lam - mu).norm()).fold(f64::INFINITY, f64::min);
            worst_eig = worst_eig.max(dist);
        }
        let start = n_h + m_h;
        let pred = match model.predict_at(start, total - 1) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("predict: {e}")),
        };
        for (c, t) in (start..total).enumerate() {
            let p: Vec<f64> = pred.column(c).iter().copied().collect();
            worst_pred = worst_pred.max(relative_error(&p, &s.snapshot_vec(t)));
        }
    }
    outcome(
        worst_eig <= 1e-6 && worst_pred <= 1e-4,
        format!(
            "30 signals, worst eigenvalue error {worst_eig:.2e} (tol 1e-6), worst {horizon}-step relative error {worst_pred:.2e} (tol 1e-4)"
        ),
    )
}

fn criterion_6() -> Outcome {
    let traj = match lorenz_simulate(&LorenzParams::default(), 3400) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("lorenz: {e}")),
    };
    let x = traj.observable(0).unwrap();
    let rrr = RrrConfig { eta: 0.01, ..RrrConfig::default() };
    let (n_h, m_h) = (300, 100);

    let mut recon = Vec::new();
    for b in [100, 650] {
        let a = match analyze_window(&x, WindowSpec::new(b, n_h, m_h), &rrr, &AmplitudeMethod::default()) {
            Ok(a) => a,
            Err(e) => return outcome(false, format!("window at {b}: {e}")),
        };
        let Some(model) = a.model else {
            return outcome(false, format!("window at {b} accepted no pairs"));
        };
        let end = b + n_h + m_h - 1;
        let pred = model.predict_at(model.t0_index, end).unwrap();
        let actual: Vec<f64> = (model.t0_index..=end).map(|t| x.values()[(0, t)]).collect();
        let p: Vec<f64> = pred.row(0).iter().copied().collect();
        recon.push((b, a.accepted.len(), relative_error(&p, &actual)));
    }
    let recon_ok = recon.iter().all(|r| r.2 < 0.01);

    let starts: Vec<usize> = (1450..=2150).step_by(50).collect();
    let mut empty = Vec::new();
    for &b in &starts {
        match analyze_window(&x, WindowSpec::new(b, n_h, m_h), &rrr, &AmplitudeMethod::default()) {
            Ok(a) if a.accepted.is_empty() => empty.push(b),
            Ok(_) => {}
            Err(e) => return outcome(false, format!("window at {b}: {e}")),
        }
    }
    let detail = format!(
        "reconstruction {} (tol 1e-2); {}/{} windows in t [14.5, 25.5] with no pair below 0.01 (first at t = {:.1})",
        recon
            .iter()
            .map(|(b, k, e)| format!("t0 {:.1}: {k} pairs, error {e:.2e}", *b as f64 * 0.01))
            .collect::<Vec<_>>()
            .join(", "),
        empty.len(),
        starts.len(),
        empty.first().map_or(f64::NAN, |b| *b as f64 * 0.01),
    );
    outcome(recon_ok && !empty.is_empty(), detail)
}

const T_STAR: usize = 150;
const DISTURBANCE_LEN: usize = 12;

fn black_swan_instance() -> (SnapshotMatrix, SnapshotMatrix, GkpConfig) {
    let clean = sinusoids(&[(1.0, 0.21, 0.3), (0.6, 0.57, 1.1)], 3.0, 300).unwrap();
    let disturbed = inject_disturbance(&clean, T_STAR, DISTURBANCE_LEN, DisturbanceKind::Step, 1.0).unwrap();
    let mut cfg = GkpConfig::new(24, 16);
    cfg.dp = 4;
    cfg.tau_g = 5;
    cfg.rrr.eta = 1e-3;
    (clean, disturbed, cfg)
}

fn criterion_7() -> Outcome {
    let (clean, disturbed, cfg) = black_swan_instance();
    let report = match global_predict(&disturbed, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("global_predict: {e}")),
    };
    let control = match global_predict(&clean, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("control run: {e}")),
    };
    let dp = cfg.dp;
    let hit = report
        .flagged_intervals
        .iter()
        .any(|iv| iv.t_begin <= T_STAR + dp && T_STAR <= iv.t_end + dp);
    let intervals: Vec<String> = report
        .flagged_intervals
        .iter()
        .map(|iv| format!("[{}, {}] sweep {}", iv.t_begin, iv.t_end, iv.sweep))
        .collect();
    outcome(
        hit && control.flagged_intervals.is_empty(),
        format!(
            "step at t* = {T_STAR}: flagged {}; control flagged {} intervals",
            intervals.join(", "),
            control.flagged_intervals.len()
        ),
    )
}

/// Mean relative error of one-step predictions for `t` in `range`, each from
/// the window ending at `t - 1` of `train`, scored against `actual`.
fn one_step_error(
    train: &SnapshotMatrix,
    actual: &SnapshotMatrix,
    cfg: &GkpConfig,
    range: std::ops::Range<usize>,
) -> Result<f64, String> {
    let rrr = RrrConfig { eta: f64::INFINITY, ..cfg.rrr };
    let mut sum = 0.0;
    let n = range.len();
    for t in range {
        let w = WindowSpec::ending_at(t - 1, cfg.n_h, cfg.m_h).ok_or("window does not fit")?;
        let a = analyze_window(train, w, &rrr, &cfg.amplitudes).map_err(|e| e.to_string())?;
        let model = a.model.ok_or("no model")?;
        let p = model.predict_at(t, t).map_err(|e| e.to_string())?;
        sum += relative_error(&[p[(0, 0)]], &actual.snapshot_vec(t));
    }
    Ok(sum / n as f64)
}

fn criterion_8() -> Outcome {
    let (_, disturbed, cfg) = black_swan_instance();
    let report = match global_predict(&disturbed, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("global_predict: {e}")),
    };
    let after = T_STAR + DISTURBANCE_LEN;
    let range = after..after + 50;
    let (pre, post) = match (
        one_step_error(&disturbed, &disturbed, &cfg, range.clone()),
        one_step_error(&report.retouched, &disturbed, &cfg, range),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };

    let mut allowed = vec![false; disturbed.len()];
    let mut clipped = true;
    for iv in &report.flagged_intervals {
        if let Some((lo, hi)) = iv.retouched {
            clipped &= lo >= iv.t_begin && hi <= iv.t_end.min(iv.t_begin + cfg.l_bs);
            for slot in &mut allowed[lo..=hi] {
                *slot = true;
            }
        }
    }
    let changed: Vec<usize> = (0..disturbed.len())
        .filter(|&t| {
            disturbed.values().column(t).iter().zip(report.retouched.values().column(t).iter())
                .any(|(a, b)| a.to_bits() != b.to_bits())
        })
        .collect();
    let identical = changed.iter().all(|&t| allowed[t]);
    outcome(
        post < pre && identical && clipped && !changed.is_empty(),
        format!(
            "mean one-step error over t in [{after}, {}): {pre:.3e} before, {post:.3e} after retouching; {} samples changed, all inside clipped intervals: {}",
            after + 50,
            changed.len(),
            identical && clipped
        ),
    )
}

fn criterion_9() -> Outcome {
    let lam = C64::from_polar(0.995, 0.4);
    let modes = DMatrix::from_row_slice(2, 2, &[
        C64::new(1.0, 0.5), C64::new(1.0, -0.5),
        C64::new(-0.3, 1.0), C64::new(-0.3, -1.0),
    ]);
    let amps = [C64::new(1.0, 0.2), C64::new(1.0, -0.2)];
    let exact = synthetic_kmd(&[lam, lam.conj()], &modes, &amps, 160).unwrap();
    let cfg = LkpConfig::default();
    let steady = match local_predict(&exact, &cfg, 5, 160) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("local_predict: {e}")),
    };
    let grows = steady
        .local_steps
        .windows(2)
        .all(|w| w[1].n_h + w[1].m_h == w[0].n_h + w[0].m_h + 1 && w[1].n_h >= w[0].n_h && w[1].m_h >= w[0].m_h);
    let no_reset = steady.local_steps.iter().all(|s| !s.reset && s.predicted);
    let last = steady.local_steps.last().unwrap();

    let switch = 60;
    let lam2 = C64::from_polar(0.99, 1.1);
    let after = synthetic_kmd(&[lam2, lam2.conj()], &modes, &amps, 160).unwrap();
    let mut values = exact.values().clone();
    for t in switch..160 {
        values.set_column(t, &after.values().column(t));
    }
    let switched = SnapshotMatrix::new(values).unwrap();
    let report = match local_predict(&switched, &cfg, 5, 160) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("local_predict: {e}")),
    };
    let first_reset = report.local_steps.iter().find(|s| s.reset);
    let (fired, detail) = match first_reset {
        Some(s) => (
            s.p > switch && s.p - switch <= cfg.tau_l,
            format!("first reset at p = {} (error {:.2e}, eps_ref {})", s.p, s.error.unwrap_or(f64::NAN), cfg.eps_ref),
        ),
        None => (false, "no reset".into()),
    };
    outcome(
        grows && no_reset && fired,
        format!(
            "exact signal: {} steps, monotone growth {grows}, no reset {no_reset}, final {}x{}; switch at {switch}: {detail}",
            steady.local_steps.len(),
            last.n_h,
            last.m_h
        ),
    )
}

fn kf(args: &[&str], threads_env: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kf"));
    cmd.args(args);
    match threads_env {
        Some(n) => cmd.env("KF_THREADS", n),
        None => cmd.env_remove("KF_THREADS"),
    };
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("kf {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn dir_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|it| it.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let series = p("gen-sin/series.csv");
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("gen-sin", vec!["generate".into(), "sinusoids".into(), "--component".into(), "1,0.21,0.3".into(),
            "--component".into(), "0.6,0.57,1.1".into(), "--offset".into(), "3".into(), "--steps".into(), "160".into(),
            "--disturb-at".into(), "90".into(), "--disturb-length".into(), "6".into(), "--magnitude".into(), "1".into()]),
        ("gen-lorenz", vec!["generate".into(), "lorenz".into(), "--steps".into(), "400".into()]),
        ("gen-kmd", vec!["generate".into(), "kmd".into(), "--mode".into(), "0.99,0.3,1,0.2".into(),
            "--mode".into(), "1,0,2,0".into(), "--steps".into(), "50".into()]),
        ("global", vec!["forecast-global".into(), "-i".into(), series.clone(), "--hankel".into(), "12x8".into(),
            "--eta".into(), "1e-3".into(), "--dp".into(), "2".into(), "--lead".into(), "3".into(), "--clamp-nonnegative".into()]),
        ("local", vec!["forecast-local".into(), "-i".into(), series.clone(), "--end".into(), "120".into()]),
        ("spectrum", vec!["spectrum".into(), "-i".into(), series.clone(), "--hankel".into(), "12x8".into(), "--dp".into(), "5".into()]),
        ("retouch", vec!["retouch".into(), "-i".into(), series.clone(), "--hankel".into(), "12x8".into(),
            "--eta".into(), "1e-3".into(), "--dp".into(), "2".into()]),
    ];
    let mut compared = 0;
    for (name, args) in &runs {
        let first = p(name);
        let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
        argv.extend(["--out", &first, "--threads", "4"]);
        if let Err(e) = kf(&argv, None) {
            return outcome(false, e);
        }
        let manifest = p(&format!("{name}/manifest.json"));
        let (a, b) = (p(&format!("{name}-replay-a")), p(&format!("{name}-replay-b")));
        if let Err(e) = kf(&["--manifest", &manifest, "--out", &a, "--threads", "1"], None) {
            return outcome(false, e);
        }
        if let Err(e) = kf(&["--manifest", &manifest, "--out", &b], Some("3")) {
            return outcome(false, e);
        }
        let (fa, fb, f0) = (dir_files(Path::new(&a)), dir_files(Path::new(&b)), dir_files(Path::new(&first)));
        if fa.len() != f0.len() || fb.len() != f0.len() || f0.is_empty() {
            return outcome(false, format!("{name}: output file sets differ"));
        }
        for ((x, y), z) in f0.iter().zip(&fa).zip(&fb) {
            let (bx, by, bz) = (std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), std::fs::read(z).unwrap());
            if bx != by || by != bz {
                return outcome(false, format!("{} differs between runs", x.display()));
            }
            compared += 1;
        }
    }
    outcome(
        true,
        format!("{} subcommand runs, each replayed twice from its manifest; {compared} files byte-identical", runs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 10] = [
        ("eigenvalue recovery", criterion_1, Some(Duration::from_secs(5))),
        ("residual optimality", criterion_2, None),
        ("exact reconstruction", criterion_3, None),
        ("WLS formula equivalence", criterion_4, None),
        ("spectral round-trip and extrapolation", criterion_5, None),
        ("Lorenz case study", criterion_6, Some(Duration::from_secs(60))),
        ("Black Swan detection", criterion_7, None),
        ("retouching efficacy", criterion_8, None),
        ("local predictor behavior", criterion_9, None),
        ("determinism", criterion_10, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = result.pass && in_time;
        let budget = limit.map(|l| format!(", limit {}s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {} {name}: {} [{:.2}s{budget}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
