//! Acceptance suite for the reference scenario (M = 16, user at 120°,
//! noise variance 1e-2, 2000 eavesdropper angles).
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//! Run with `cargo test --test acceptance`.

use std::process::ExitCode;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use distortion_pls::array::{array_response, ArrayGeometry, ChannelVector};
use distortion_pls::bussgang::{check_hermitian_psd, poly3_bussgang, TransmitCovariance};
use distortion_pls::config::{PaSelector, PrecoderSelector, ScenarioConfig};
use distortion_pls::experiments::{
    ibo_range, run_pattern_experiment, run_secrecy_vs_ibo, Scenario,
};
use distortion_pls::metrics::{
    distortion_pattern, outage_curve, quadratic_form, secrecy_rate_at_outage, signal_pattern,
    to_db, total_power_and_directivity,
};
use distortion_pls::pa::Poly3Params;
use distortion_pls::precoder::{z3ro, z3ro_with_saturated_set};

use PaSelector::{Poly3, Rapp};
use PrecoderSelector::{Mrt, MrtAn, Z3ro};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, centre: f64, half_width: f64) -> bool {
    (x - centre).abs() <= half_width
}

fn reference() -> Scenario {
    Scenario::new(&ScenarioConfig::default()).expect("reference scenario")
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cn(rng: &mut StdRng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn p10(s: &Scenario, kind: PrecoderSelector, pa: PaSelector, ibo: f64) -> f64 {
    s.evaluate(kind, pa, ibo)
        .unwrap()
        .secrecy
        .rate_at_outage(0.10)
        .unwrap()
}

fn mean_rate(s: &Scenario, kind: PrecoderSelector, ibo: f64) -> f64 {
    s.evaluate(kind, Poly3, ibo).unwrap().secrecy.mean_rate()
}

fn linear_snr() -> Outcome {
    let mut cfg = ScenarioConfig::default();
    cfg.pa.beta1 = Some([1.0, 0.0]);
    cfg.pa.beta3 = Some([0.0, 0.0]);
    let s = Scenario::new(&cfg).unwrap();
    let snr_db = to_db(s.evaluate(Mrt, Poly3, 0.0).unwrap().secrecy.snr_legit);
    outcome(
        within(snr_db, 32.04, 0.01),
        format!("SNR = {snr_db:.4} dB (target 32.04 +/- 0.01)"),
    )
}

fn z3ro_null() -> Outcome {
    let s = reference();
    let pre = s.precoder(Z3ro).unwrap();
    let stats = s.amplifier_stats(Poly3, -10.0, &pre).unwrap();
    let at_user = quadratic_form(&s.legit_channel, &stats.distortion_cov).max(0.0);
    let pattern = distortion_pattern(&s.geometry, &stats.distortion_cov, &s.grid).unwrap();
    let peak = pattern.values.iter().cloned().fold(0.0, f64::max);
    let depth = to_db(at_user) - to_db(peak);
    outcome(
        depth <= -60.0,
        format!("P_dist(120 deg) - max P_dist = {depth:.1} dB (need <= -60)"),
    )
}

fn secrecy_at_minus5(s: &Scenario) -> (f64, f64) {
    (p10(s, Z3ro, Poly3, -5.0), p10(s, Mrt, Poly3, -5.0))
}

fn outage_secrecy() -> Outcome {
    let (z, m) = secrecy_at_minus5(&reference());
    let ratio = z / m;
    outcome(
        within(z, 4.2, 0.8) && ratio >= 2.0,
        format!(
            "Z3RO R_s@10% = {z:.3} (target 4.2 +/- 0.8: {}), MRT = {m:.3}, ratio = {ratio:.2} (need >= 2.0: {})",
            verdict(within(z, 4.2, 0.8)),
            verdict(ratio >= 2.0)
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn saturated_average() -> Outcome {
    let s = reference();
    let (z, m, a) = (
        mean_rate(&s, Z3ro, 0.0),
        mean_rate(&s, Mrt, 0.0),
        mean_rate(&s, MrtAn, 0.0),
    );
    let checks = [
        within(z, 8.5, 1.5),
        within(m, 1.0, 0.7),
        within(a, 2.5, 1.0),
        z > a && a > m,
    ];
    outcome(
        checks.iter().all(|b| *b),
        format!(
            "Z3RO = {z:.3} (8.5 +/- 1.5: {}), MRT = {m:.3} (1.0 +/- 0.7: {}), MRT+AN = {a:.3} (2.5 +/- 1.0: {}), Z3RO > AN > MRT: {}",
            verdict(checks[0]),
            verdict(checks[1]),
            verdict(checks[2]),
            verdict(checks[3])
        ),
    )
}

fn linear_average() -> Outcome {
    let s = reference();
    let (z, m, a) = (
        mean_rate(&s, Z3ro, -20.0),
        mean_rate(&s, Mrt, -20.0),
        mean_rate(&s, MrtAn, -20.0),
    );
    let best = a > z && a > m;
    let level = within(a, 7.0, 1.5);
    outcome(
        best && level,
        format!(
            "MRT+AN = {a:.3} (7 +/- 1.5: {}), MRT = {m:.3}, Z3RO = {z:.3}, AN best: {}",
            verdict(level),
            verdict(best)
        ),
    )
}

fn angle_sweep() -> Outcome {
    let s = reference();
    let rates = |k, ibo| s.evaluate(k, Poly3, ibo).unwrap().secrecy.rates;
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let (mrt_lin, z3_lin) = (rates(Mrt, -20.0), rates(Z3ro, -20.0));
    let peak = max(&mrt_lin);
    let low_ok = within(peak, 10.5, 2.0) && peak > max(&z3_lin);

    let (mrt_sat, z3_sat) = (rates(Mrt, 0.0), rates(Z3ro, 0.0));
    let outside: Vec<usize> = s
        .grid
        .degrees()
        .enumerate()
        .filter(|(_, d)| (d - 120.0).abs() > 5.0)
        .map(|(i, _)| i)
        .collect();
    let share = |pred: &dyn Fn(usize) -> bool| {
        outside.iter().filter(|&&i| pred(i)).count() as f64 / outside.len() as f64
    };
    let z3_band = share(&|i| (7.0..=10.0).contains(&z3_sat[i]));
    let mrt_low = share(&|i| mrt_sat[i] <= 4.0);
    let high_ok = z3_band >= 0.8 && mrt_low >= 0.8;
    outcome(
        low_ok && high_ok,
        format!(
            "IBO -20: MRT max = {peak:.2} vs Z3RO max = {:.2} ({}); IBO 0 (angles outside +/-5 deg): Z3RO in [7,10] on {:.1}%, MRT <= 4 on {:.1}% ({}; MRT max = {:.2})",
            max(&z3_lin),
            verdict(low_ok),
            100.0 * z3_band,
            100.0 * mrt_low,
            verdict(high_ok),
            max(&mrt_sat)
        ),
    )
}

fn rapp_crossover() -> Outcome {
    let s = reference();
    let mut losses = Vec::new();
    let mut lines = Vec::new();
    for ibo in ibo_range(-10.0, 0.0, 1.0) {
        let (z, m) = (p10(&s, Z3ro, Rapp, ibo), p10(&s, Mrt, Rapp, ibo));
        if z <= m {
            losses.push(ibo);
        }
        lines.push(format!("{ibo:.0}: {z:.2}/{m:.2}"));
    }
    outcome(
        losses.is_empty(),
        format!(
            "Z3RO/MRT R_s@10% per IBO [{}]; Z3RO not ahead at {:?}",
            lines.join(", "),
            losses
        ),
    )
}

fn orthogonality() -> Outcome {
    let s = reference();
    let pre = s.precoder(Z3ro).unwrap();
    let poly = s.poly3_at(-5.0).unwrap();
    let gain = poly3_bussgang(&poly, &pre.transmit_covariance()).gain;
    let m = pre.weights.len();
    let n = 1_000_000usize;
    let mut rng = StdRng::seed_from_u64(8);
    let mut sum = vec![c(0.0, 0.0); m * m];
    let mut sum_sq = vec![0.0; m * m];
    let mut x = vec![c(0.0, 0.0); m];
    let mut e = vec![c(0.0, 0.0); m];
    for _ in 0..n {
        let sym = cn(&mut rng);
        for i in 0..m {
            x[i] = pre.weights[i] * sym;
            e[i] = poly.apply(x[i]) - gain[i] * x[i];
        }
        for i in 0..m {
            for j in 0..m {
                let v = e[i] * x[j].conj();
                sum[i * m + j] += v;
                sum_sq[i * m + j] += v.norm_sqr();
            }
        }
    }
    let nf = n as f64;
    let mut worst = 0.0f64;
    for k in 0..m * m {
        let mean = sum[k] / nf;
        let sd = (sum_sq[k] / nf - mean.norm_sqr()).max(0.0).sqrt();
        worst = worst.max(mean.norm() / (sd / nf.sqrt()));
    }
    outcome(
        worst < 5.0,
        format!(
            "max |E[e x^H]| = {worst:.2} standard errors over {} entries (need < 5)",
            m * m
        ),
    )
}

fn closed_form_covariance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let m = 4;
    let n = 400_000usize;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w = DVector::from_fn(m, |_, _| cn(&mut rng));
        let w = &w / Complex64::from(w.norm());
        let poly = Poly3Params::new(
            c(rng.gen_range(0.8..1.2), rng.gen_range(-0.1..0.1)),
            c(rng.gen_range(-2.0..0.0), rng.gen_range(-0.3..0.3)),
        )
        .unwrap();
        let stats = poly3_bussgang(&poly, &TransmitCovariance::from_beam(&w));
        let mut sum = vec![c(0.0, 0.0); m * m];
        let mut sum_sq = vec![0.0; m * m];
        let mut e = vec![c(0.0, 0.0); m];
        for _ in 0..n {
            let sym = cn(&mut rng);
            for i in 0..m {
                let x = w[i] * sym;
                e[i] = poly.apply(x) - stats.gain[i] * x;
            }
            for i in 0..m {
                for j in 0..m {
                    let v = e[i] * e[j].conj();
                    sum[i * m + j] += v;
                    sum_sq[i * m + j] += v.norm_sqr();
                }
            }
        }
        let nf = n as f64;
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                let mean = sum[k] / nf;
                let se = ((sum_sq[k] / nf - mean.norm_sqr()).max(0.0) / nf).sqrt();
                worst = worst.max((mean - stats.distortion_cov[(i, j)]).norm() / se);
            }
        }
    }
    outcome(
        worst <= 3.0,
        format!("max |C_e - MC| = {worst:.2} standard errors over 10 precoders, M = 4 (need <= 3)"),
    )
}

/// `|Σ h_m w_m |w_m|²|` relative to the sum of the magnitudes of its terms.
fn third_order_residual(h: &ChannelVector, w: &DVector<Complex64>) -> f64 {
    let (sum, scale) =
        h.as_vector()
            .iter()
            .zip(w.iter())
            .fold((c(0.0, 0.0), 0.0), |(a, b), (hm, wm)| {
                let t = hm * wm * wm.norm_sqr();
                (a + t, b + t.norm())
            });
    sum.norm() / scale
}

fn null_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for (m, ms) in [(4, 1), (8, 1), (8, 3), (16, 1), (16, 7)] {
        let geom = ArrayGeometry::half_wavelength(m).unwrap();
        let los = array_response(&geom, 120f64.to_radians()).unwrap();
        let random = ChannelVector::new(DVector::from_fn(m, |_, _| cn(&mut rng)));
        for h in [los, random] {
            worst = worst.max(third_order_residual(&h, &z3ro(&h, ms).unwrap().weights));
        }
        let last: Vec<usize> = (m - ms..m).collect();
        let h = array_response(&geom, 0.7).unwrap();
        worst = worst.max(third_order_residual(
            &h,
            &z3ro_with_saturated_set(&h, &last).unwrap().weights,
        ));
    }
    outcome(
        worst < 1e-12,
        format!("max relative |sum h w |w|^2| = {worst:.2e} (need < 1e-12)"),
    )
}

fn invariants() -> Outcome {
    let s = reference();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };

    for kind in [Mrt, Z3ro, MrtAn] {
        for pa in [Poly3, Rapp] {
            for ibo in [-20.0, -10.0, -5.0, 0.0] {
                let point = s.evaluate(kind, pa, ibo).unwrap();
                let r = &point.secrecy;
                let tag = format!("{kind}/{pa}/{ibo}");
                check(
                    r.sndr_legit <= r.snr_legit * (1.0 + 1e-12),
                    format!("{tag}: SNDR > SNR at user"),
                );
                check(
                    r.sndr_eve
                        .iter()
                        .zip(&r.snr_eve)
                        .all(|(a, b)| *a <= b * (1.0 + 1e-12)),
                    format!("{tag}: SNDR > SNR at an eavesdropper"),
                );
                check(
                    check_hermitian_psd(&point.stats.distortion_cov, "C_e").is_ok(),
                    format!("{tag}: C_e not Hermitian PSD"),
                );

                let thresholds: Vec<f64> = (0..=60).map(|i| i as f64 * 0.25).collect();
                let curve = outage_curve(&r.rates, &thresholds);
                check(
                    curve.windows(2).all(|w| w[0] <= w[1]),
                    format!("{tag}: outage curve not monotone"),
                );
                let q: Vec<f64> = (1..100)
                    .map(|i| secrecy_rate_at_outage(&r.rates, i as f64 / 100.0).unwrap())
                    .collect();
                check(
                    q.windows(2).all(|w| w[0] <= w[1]),
                    format!("{tag}: quantile not monotone"),
                );
            }
        }
    }

    for kind in [Mrt, Z3ro, MrtAn] {
        let pre = s.precoder(kind).unwrap();
        let stats = s.amplifier_stats(Poly3, -3.0, &pre).unwrap();
        let sig = signal_pattern(&s.geometry, &stats.gain, &pre.weights, &s.grid).unwrap();
        let dist = distortion_pattern(&s.geometry, &stats.distortion_cov, &s.grid).unwrap();
        let rep = total_power_and_directivity(&sig, &dist.values, &s.grid).unwrap();
        let integral = s.grid.integrate(&rep.directivity);
        check(
            (integral / std::f64::consts::PI - 1.0).abs() < 1e-3,
            format!("{kind}: directivity integrates to {integral}"),
        );
    }

    let mut cfg = ScenarioConfig::default();
    cfg.sweep.ibo_db = Some(vec![-6.0, 0.0]);
    cfg.pa.models = Some(vec![Rapp]);
    let a = run_secrecy_vs_ibo(&cfg).unwrap().tables[0].to_bytes();
    let b = run_secrecy_vs_ibo(&cfg).unwrap().tables[0].to_bytes();
    check(a == b, "secrecy sweep bytes differ between runs".into());
    let mut pcfg = ScenarioConfig::default();
    pcfg.sweep.ibo_db = Some(vec![-10.0]);
    let pa = run_pattern_experiment(&pcfg).unwrap().tables[0].to_bytes();
    let pb = run_pattern_experiment(&pcfg).unwrap().tables[0].to_bytes();
    check(pa == pb, "pattern bytes differ between runs".into());

    let n = failures.len();
    outcome(
        n == 0,
        if n == 0 {
            "SNDR <= SNR, C_e Hermitian PSD, monotone outage and quantiles, directivity integral, byte determinism".into()
        } else {
            failures.join("; ")
        },
    )
}

fn grid_stability() -> Outcome {
    let base = secrecy_at_minus5(&reference());
    let mut cfg = ScenarioConfig::default();
    cfg.scenario.grid_points = 4000;
    let fine = secrecy_at_minus5(&Scenario::new(&cfg).unwrap());
    let rel = |a: f64, b: f64| ((a - b) / a).abs();
    let moves = [
        rel(base.0, fine.0),
        rel(base.1, fine.1),
        rel(base.0 / base.1, fine.0 / fine.1),
    ];
    let worst = moves.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst < 0.02,
        format!(
            "2000 -> 4000 points: Z3RO {:.4} -> {:.4}, MRT {:.4} -> {:.4}, largest change {:.3}% (need < 2%)",
            base.0,
            fine.0,
            base.1,
            fine.1,
            100.0 * worst
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("linear-regime SNR", linear_snr),
        ("Z3RO distortion null", z3ro_null),
        ("secrecy at 10% outage, IBO -5 dB", outage_secrecy),
        ("average secrecy at IBO 0 dB", saturated_average),
        ("average secrecy at IBO -20 dB", linear_average),
        ("angle sweep", angle_sweep),
        ("Rapp crossover for IBO >= -10 dB", rapp_crossover),
        ("Bussgang orthogonality", orthogonality),
        ("closed-form C_e vs Monte-Carlo", closed_form_covariance),
        ("Z3RO null identity", null_identity),
        ("invariant suite", invariants),
        ("grid stability", grid_stability),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {} of {} passed",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
