use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use spt_mbqc::algebra::{c, expm, pure_state, trace, trace_distance, ComplexMatrix, C64, DEFAULT_CLOSURE_TOL};
use spt_mbqc::cohomology::{
    prime_power_parts, projective_irrep, weyl_cocycle, Cocycle, FiniteAbelianGroup, LogicalOps,
};
use spt_mbqc::lie::{
    block_report, brute_force_closure, canonical_labels, fill_grid, fill_grid_scheduled, generator_set_from_labels,
    grid_init, verify_certificate, MoveKind,
};
use spt_mbqc::mbqc::{
    apply_byproduct_word, calibrate_nu, compile_rotation, error_scan, execute_and_compare, logical_observables,
    operational_nu, program_error, pumping_errors, readout_probabilities, readout_probabilities_boundary,
    run_program, sample_trajectories, scan_n_slopes, sum_over_outcomes_step, uniform_program, linear_fit,
    MeasurementBasis, MixedVirtualState, TrajectoryOptions,
};
use spt_mbqc::mps::{aklt_logical_ops, aklt_tensor, fixed_point_data, random_primitive_junk, spt_tensor, transfer_channels, MPSTensor};
use spt_mbqc::Execution;

const JUNK_SEED: u64 = 7;
const ROUNDING: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

fn rz(angle: f64) -> ComplexMatrix {
    expm(&(sigma_z() * c(0.0, -angle / 2.0)))
}

fn generic_qubit() -> ComplexMatrix {
    pure_state(&[c(0.6, 0.2), c(0.1, 0.77)])
}

fn kappa2() -> MPSTensor {
    spt_tensor(&aklt_logical_ops(), &random_primitive_junk(3, 2, JUNK_SEED).unwrap()).unwrap()
}

fn timed<F: FnOnce() -> Outcome>(f: F) -> (Outcome, Duration) {
    let t0 = Instant::now();
    let o = f();
    (o, t0.elapsed())
}

fn aklt_calibration() -> Outcome {
    let (o, dt) = timed(|| {
        let nu = calibrate_nu(&aklt_tensor()).unwrap();
        let dev = nu.nu.iter().map(|z| (z - c(1.0 / 3.0, 0.0)).norm()).fold(0.0, f64::max);
        outcome(dev <= 1e-12, format!("max |nu_ij - 1/3| = {dev:.2e}"))
    });
    outcome(o.pass && dt < Duration::from_secs(1), format!("{}, {:.3} s", o.detail, dt.as_secs_f64()))
}

fn aklt_single_step() -> Outcome {
    let t = aklt_tensor();
    let psi = generic_qubit();
    let s0 = MixedVirtualState::with_fixed_junk(&psi, &t).unwrap();
    let th = 0.9;
    let (s1, _) = sum_over_outcomes_step(&s0, &MeasurementBasis::aklt_z(th), &t).unwrap();
    let u = rz(th);
    let mix = (&u * &psi * u.adjoint()) * c(2.0 / 3.0, 0.0) + &psi * c(1.0 / 3.0, 0.0);
    let d_mix = trace_distance(&s1.logical(), &mix);
    let dth = 1e-3;
    let (s2, _) = sum_over_outcomes_step(&s0, &MeasurementBasis::aklt_z(dth), &t).unwrap();
    let v = rz(2.0 / 3.0 * dth);
    let d_red = trace_distance(&s2.logical(), &(&v * &psi * v.adjoint()));
    outcome(d_mix <= 1e-10 && d_red <= 1e-6, format!("mixture distance {d_mix:.2e}, reduced-angle distance {d_red:.2e}"))
}

fn aklt_compilation() -> Outcome {
    let (o, dt) = timed(|| {
        let t = aklt_tensor();
        let nu = calibrate_nu(&t).unwrap();
        let p = compile_rotation(&t, &nu, 0, 1, PI, PI / 2.0, 1e-2).unwrap();
        let err = program_error(&p, &t).unwrap();
        let rows = error_scan(&t, 0, 1, PI, PI / 2.0, &[50, 100, 200, 400, 800, 1600, 3200], &[0], Execution::default()).unwrap();
        let slope = scan_n_slopes(&rows)[0].1;
        outcome(
            err <= 3e-2 && (slope + 1.0).abs() <= 0.15,
            format!("N = {}, error {err:.2e}, slope {slope:.4}", p.n_steps),
        )
    });
    outcome(o.pass && dt < Duration::from_secs(30), format!("{}, {:.2} s", o.detail, dt.as_secs_f64()))
}

fn generic_phase() -> Outcome {
    let t = kappa2();
    let nu = calibrate_nu(&t).unwrap();
    let p = compile_rotation(&t, &nu, 0, 1, PI, PI / 2.0, 1e-2).unwrap();
    let err = program_error(&p, &t).unwrap();
    let psi = generic_qubit();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let resid = pairs
        .iter()
        .map(|&(i, j)| execute_and_compare(&psi, &t, i, j, 1e-3, 0.4, 200).unwrap().1)
        .fold(0.0, f64::max);
    let rel = pairs.iter().map(|&(i, j)| operational_nu(&t, i, j, 200, 0.002).unwrap().relative_error).fold(0.0, f64::max);
    outcome(
        err <= 3e-2 && resid <= 1e-5 && rel <= 1e-2,
        format!("rotation error {err:.2e} (N = {}, m = {}), first-order residual {resid:.2e}, operational/spectral {rel:.2e}", p.n_steps, p.pump_length),
    )
}

fn pumping() -> Outcome {
    let t = kappa2();
    let ch = transfer_channels(&t).1.unwrap();
    let fp = fixed_point_data(&ch).unwrap();
    let junk0 = pure_state(&[c(1.0, 0.0), c(0.0, 0.0)]);
    let ms: Vec<usize> = (5..=30).collect();
    let errs = pumping_errors(&t, &junk0, &ms).unwrap();
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (rate, _) = linear_fit(&xs, &ys);
    let expect = fp.lambda1.ln();
    let rel = (rate - expect).abs() / expect.abs();
    outcome(rel <= 0.05, format!("fitted rate {rate:.4}, ln lambda1 {expect:.4}, relative {rel:.2e}"))
}

fn weyl_irrep_traces() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=8u32 {
        let g = FiniteAbelianGroup::weyl(d);
        let irrep = projective_irrep(&g, &weyl_cocycle(d).unwrap()).unwrap();
        for h in g.elements() {
            let expect = if h.is_identity() { (g.order() as f64).sqrt() } else { 0.0 };
            worst = worst.max((trace(irrep.v(&h)) - C64::new(expect, 0.0)).norm());
        }
    }
    outcome(worst <= 1e-10, format!("max |Tr V(h) - sqrt|H| delta| = {worst:.2e} over D = 2..8"))
}

fn grid_oracle() -> Outcome {
    let (o, dt) = timed(|| {
        let mut cases = 0;
        let mut bad = Vec::new();
        for d in [2u32, 3, 4, 5, 7, 8, 9] {
            let (p, _) = prime_power_parts(d).unwrap();
            for r in (1..d).filter(|r| r % p != 0) {
                let labels = canonical_labels(d, r);
                let g0 = grid_init(&generator_set_from_labels(d, &labels), r).unwrap();
                let (complete, g) = fill_grid(&g0);
                let ops = LogicalOps::from_weyl_labels(d, &labels).unwrap();
                let dim = brute_force_closure(&ops, &[0, 1, 2], DEFAULT_CLOSURE_TOL).unwrap().dim;
                cases += 1;
                if !(complete && dim == (d * d - 1) as usize && verify_certificate(&g0, g.move_log())) {
                    bad.push((d, r, complete, dim));
                }
            }
        }
        let g0 = grid_init(&generator_set_from_labels(8, &canonical_labels(8, 1)), 1).unwrap();
        let (complete, g, ms) = fill_grid_scheduled(&g0);
        let state = |label: &str| ms.iter().find(|m| m.label == label).map(|m| m.state.clone());
        let row1 = state("row/column 1").is_some_and(|s| (0..8).all(|i| s.is_marked((i, 1)) && s.is_marked((1, i))) && !s.is_marked((3, 0)));
        let row3 = state("row/column 3").is_some_and(|s| (0..8).all(|i| s.is_marked((i, 3)) && s.is_marked((3, i))) && !s.is_marked((2, 4)));
        let unlock = g
            .move_log()
            .iter()
            .find(|m| m.hermitian)
            .is_some_and(|m| m.kind == MoveKind::X && m.at == (1, 4) && m.inspected.contains(&(0, 4)) && m.marked.contains(&(2, 4)));
        outcome(
            bad.is_empty() && complete && row1 && row3 && unlock,
            format!("{cases} (D, r) cases agree, failures {bad:?}; D=8 milestones row1 {row1}, row3 {row3}, hermitian unlock {unlock}"),
        )
    });
    outcome(o.pass && dt < Duration::from_secs(60), format!("{}, {:.2} s", o.detail, dt.as_secs_f64()))
}

fn restricted_closures() -> Outcome {
    let battery: [&[u32]; 6] = [&[2, 2], &[3, 3], &[4, 4], &[2, 2, 3, 3], &[8, 8], &[9, 9]];
    let mut lines = Vec::new();
    let mut pass = true;
    for orders in battery {
        let g = FiniteAbelianGroup::new(orders.to_vec()).unwrap();
        let w = Cocycle::weyl_product(g.clone()).unwrap();
        let chars = g.characters();
        let sqrt = (g.order() as f64).sqrt().round() as u32;
        for q in (2..=sqrt).filter(|&q| sqrt % q == 0 && prime_power_parts(q).is_some()) {
            let b = block_report(&g, &w, &chars, q, DEFAULT_CLOSURE_TOL).unwrap();
            let need = (q * q - 1) as usize;
            pass &= b.oracle_dim >= need && b.grid_complete != Some(false);
            lines.push(format!("{orders:?}@{q}: {}>={need}", b.oracle_dim));
        }
    }
    outcome(pass, lines.join(", "))
}

fn monte_carlo() -> Outcome {
    let t = aklt_tensor();
    let nu = calibrate_nu(&t).unwrap();
    let p = uniform_program(&t, &nu, 0, 1, PI, PI / 2.0, 3, 0).unwrap();
    let psi = generic_qubit();
    let exact = logical_observables(&run_program(&p, &psi, &t).unwrap().logical());
    let rep = sample_trajectories(&p, &psi, &t, &TrajectoryOptions::new(100_000, 2024)).unwrap();
    let worst = rep
        .observable_means
        .iter()
        .zip(&rep.observable_sigmas)
        .zip(&exact)
        .map(|((m, s), e)| {
            // observables that are constant across shots have rounding-level spread
            let excess = ((m - e).abs() - ROUNDING).max(0.0);
            if excess == 0.0 { 0.0 } else if *s > 0.0 { excess / s } else { f64::INFINITY }
        })
        .fold(0.0, f64::max);
    let k2 = kappa2();
    let wire = uniform_program(&k2, &calibrate_nu(&k2).unwrap(), 0, 1, 0.0, 0.0, 4, 3).unwrap();
    let mut opts = TrajectoryOptions::new(2_000, 99);
    opts.keep_endpoints = true;
    let ends = sample_trajectories(&wire, &psi, &k2, &opts).unwrap().logical_endpoints.unwrap();
    let identical = ends.iter().all(|e| e.iter().zip(ends[0].iter()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    outcome(worst <= 5.0 && identical, format!("max deviation {worst:.2} bootstrap sigma, wire-only endpoints bitwise identical: {identical}"))
}

fn readout() -> Outcome {
    let t = kappa2();
    let psi = pure_state(&[c(0.3, 0.1), c(0.5, -0.8)]);
    let junk = pure_state(&[c(0.8, 0.0), c(0.1, 0.6)]);
    let s = MixedVirtualState::product(&psi, &junk).unwrap();
    let basis = MeasurementBasis::tilted(3, 0, 1, 0.25, -0.7).unwrap();
    let base = readout_probabilities(&s, &basis, &t, 3).unwrap();
    let mut cov = 0.0f64;
    for word in [vec![0usize], vec![1], vec![2], vec![0, 1], vec![2, 2, 1], vec![1, 0, 2, 2]] {
        let (s2, g) = apply_byproduct_word(&s, &t, &word).unwrap();
        let p = readout_probabilities(&s2, &basis.adapted(&t, &g).unwrap(), &t, 3).unwrap();
        cov = cov.max(base.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let sum_dev = (base.iter().sum::<f64>() - 1.0).abs();
    let ch = transfer_channels(&t).1.unwrap();
    let l1 = fixed_point_data(&ch).unwrap().lambda1;
    let boundary = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.5, 0.0)]);
    let delta = |k: usize| -> f64 {
        let a = readout_probabilities_boundary(&s, &basis, &t, k, &boundary).unwrap();
        let b = readout_probabilities_boundary(&s, &basis, &t, k + 10, &boundary).unwrap();
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let cfit = (0..=3).map(|k| delta(k) / l1.powi(k as i32)).fold(0.0, f64::max);
    let bound_ok = (0..=30).all(|k| delta(k) <= cfit * l1.powi(k as i32) * (1.0 + 1e-9) + 1e-14);
    let exact_shift = readout_probabilities(&s, &basis, &t, 13)
        .unwrap()
        .iter()
        .zip(&base)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        cov <= 1e-10 && sum_dev <= 1e-9 && bound_ok && exact_shift <= 1e-12,
        format!("frame deviation {cov:.2e}, sum deviation {sum_dev:.2e}, boundary decay within c lambda1^k (c = {cfit:.3e}): {bound_ok}, exact readout k-shift {exact_shift:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AKLT calibration", aklt_calibration),
        ("single-step mixture and reduced angle", aklt_single_step),
        ("AKLT gate compilation", aklt_compilation),
        ("generic-phase universality", generic_phase),
        ("pumping error decay", pumping),
        ("Weyl irrep traces", weyl_irrep_traces),
        ("grid/oracle equivalence", grid_oracle),
        ("restricted closures", restricted_closures),
        ("Monte-Carlo consistency", monte_carlo),
        ("readout invariance", readout),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
