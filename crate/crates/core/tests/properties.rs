use num_complex::Complex64;
use proptest::prelude::*;

use gupnls::config::{parse_config, RunConfig};
use gupnls::deformation::{DeformationModel, UnitsConfig};
use gupnls::evolution::{effective_potential, evolve, galilean_boost, EvolutionConfig, KineticScheme};
use gupnls::field::{
    abs_curvature_ratio, fisher_information, gaussian_state, position_stats, rescale_density, FieldStats,
    WaveField,
};
use gupnls::grid::{Boundary, Grid};
use gupnls::io::{read_field, write_field};
use gupnls::stationary::{logspace, min_position_uncertainty_scan, nu_of_q, PotentialSpec};
use gupnls::verification::{check_cramer_rao, check_gup_relation, check_sharper_hur, madelung_decompose};

fn units() -> UnitsConfig {
    UnitsConfig::default()
}

fn mixture(grid: &Grid, comps: &[(f64, f64, f64)]) -> WaveField {
    let amp: Vec<f64> = grid
        .axis_coords(0)
        .iter()
        .map(|x| {
            comps
                .iter()
                .map(|(c, v, w)| w * (-(x - c) * (x - c) / (2.0 * v)).exp())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    WaveField::from_real(grid.clone(), &amp, units())
        .unwrap()
        .normalize()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_is_increasing_and_below_identity(beta in 1e-4f64..10.0, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let m = DeformationModel::gup(beta).unwrap();
        let top = m.z_max_w();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let (wl, wh) = (m.w(lo * top).unwrap(), m.w(hi * top).unwrap());
        prop_assert!(wl < wh);
        prop_assert!(wh < hi * top);
    }

    #[test]
    fn w_inverse_undoes_w(beta in 1e-4f64..10.0, f in 0.0f64..0.999) {
        let m = DeformationModel::gup(beta).unwrap();
        let z = f * m.z_max_w();
        let back = m.w_inverse(m.w(z).unwrap()).unwrap();
        prop_assert!((back - z).abs() <= 1e-12 * z.max(1e-300) / (1.0 - f).max(1e-3));
    }

    #[test]
    fn nonlinearity_is_positive_and_increasing(beta in 1e-4f64..10.0, a in 0.001f64..0.99, b in 0.001f64..0.99) {
        let m = DeformationModel::gup(beta).unwrap();
        let top = m.z_max_nonlinearity();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let (wl, wh) = (m.nonlinearity(lo * top).unwrap(), m.nonlinearity(hi * top).unwrap());
        prop_assert!(wl > 0.0 && wl < wh);
    }

    #[test]
    fn scaling_transform_scales_w(beta in 1e-3f64..1.0, f in 0.01f64..0.4, kappa in 0.2f64..2.0) {
        let m = DeformationModel::gup(beta).unwrap();
        let dn = f * m.z_max_w();
        let target = kappa * m.w(dn).unwrap();
        match m.scaling_transform(dn, kappa) {
            Ok(out) => prop_assert!((m.w(out).unwrap() - target).abs() <= 1e-12 * target),
            Err(e) => prop_assert!(target > m.w_branch_max(), "{e}"),
        }
    }

    #[test]
    fn nu_is_increasing_with_ratio_approaching_one(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let (ql, qh) = (10f64.powf(lo), 10f64.powf(hi));
        prop_assert!(nu_of_q(ql) < nu_of_q(qh));
        // nu / 16 q^2 approaches one from above for large q
        if lo > 0.5 {
            let (rl, rh) = (nu_of_q(ql) / (16.0 * ql * ql), nu_of_q(qh) / (16.0 * qh * qh));
            prop_assert!((rh - 1.0).abs() <= (rl - 1.0).abs());
        }
    }

    #[test]
    fn min_length_scan_is_monotone(beta in 1e-3f64..10.0) {
        let s = min_position_uncertainty_scan(beta, &logspace(1e-2, 1e2, 50), units()).unwrap();
        prop_assert!(s.dx_sq.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(s.dx_sq.iter().all(|d| *d > s.limit));
    }

    #[test]
    fn fisher_is_translation_invariant(shift in -40i32..40, sigma in 0.6f64..1.5) {
        let g = Grid::dirichlet(&[(512, -16.0, 16.0)]).unwrap();
        let h = g.spacing()[0];
        let a = gaussian_state(&g, sigma, &[0.0], None, units()).unwrap().density();
        let b = gaussian_state(&g, sigma, &[shift as f64 * h], None, units()).unwrap().density();
        let (fa, fb) = (fisher_information(&a, 0, &g), fisher_information(&b, 0, &g));
        prop_assert!((fa - fb).abs() <= 1e-10 * fa);
    }

    #[test]
    fn fisher_of_product_is_per_axis(s1 in 0.7f64..1.4, s2 in 0.7f64..1.4) {
        let g = Grid::dirichlet(&[(96, -9.0, 9.0)]).unwrap();
        let a = gaussian_state(&g, s1, &[0.3], None, units()).unwrap();
        let b = gaussian_state(&g, s2, &[-0.2], None, units()).unwrap();
        let ab = a.tensor(&b).unwrap();
        let rho = ab.density();
        let fa = fisher_information(&a.density(), 0, &g);
        let fb = fisher_information(&b.density(), 0, &g);
        prop_assert!((fisher_information(&rho, 0, &ab.grid) - fa).abs() <= 1e-10 * fa);
        prop_assert!((fisher_information(&rho, 1, &ab.grid) - fb).abs() <= 1e-10 * fb);
    }

    #[test]
    fn fisher_scales_quadratically(kappa in 0.5f64..2.0, sigma in 0.8f64..1.3) {
        let g = Grid::dirichlet(&[(4096, -12.0, 12.0)]).unwrap();
        let rho = gaussian_state(&g, sigma, &[0.0], None, units()).unwrap().density();
        let scaled = rescale_density(&rho, kappa, &g).unwrap();
        let (f0, f1) = (fisher_information(&rho, 0, &g), fisher_information(&scaled, 0, &g));
        prop_assert!((f1 / (kappa * kappa * f0) - 1.0).abs() <= 2e-4);
    }

    #[test]
    fn cramer_rao_holds_for_mixtures(
        c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
        v1 in 0.2f64..1.0, v2 in 0.2f64..1.0,
        w in 0.1f64..0.9,
    ) {
        let g = Grid::dirichlet(&[(1024, -12.0, 12.0)]).unwrap();
        let psi = mixture(&g, &[(c1, v1, w), (c2, v2, 1.0 - w)]);
        for r in check_cramer_rao(&psi).unwrap() {
            prop_assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn madelung_reconstructs_field(v in -3.0f64..3.0, c in -1.0f64..1.0, sigma in 0.6f64..1.2) {
        let g = Grid::dirichlet(&[(256, -10.0, 10.0)]).unwrap();
        let psi = gaussian_state(&g, sigma, &[c], Some(&[v]), units()).unwrap();
        let m = madelung_decompose(&psi).unwrap();
        for (a, b) in m.reconstruct(1.0).iter().zip(&psi.values) {
            prop_assert!((a - b).norm() <= 1e-13);
        }
    }

    #[test]
    fn scaling_transform_is_superlinear(beta in 1e-3f64..1.0, f in 0.01f64..0.4, kappa in 1.01f64..3.0) {
        let m = DeformationModel::gup(beta).unwrap();
        let dn = f * m.z_max_w();
        if let Ok(out) = m.scaling_transform(dn, kappa) {
            prop_assert!(out > kappa * dn);
        }
    }

    #[test]
    fn identity_model_is_undeformed(z in 0.0f64..1e6, kappa in 0.1f64..10.0) {
        let m = DeformationModel::identity();
        prop_assert_eq!(m.w(z).unwrap(), z);
        prop_assert_eq!(m.w_inverse(z).unwrap(), z);
        prop_assert_eq!(m.nonlinearity(z).unwrap(), 0.0);
        prop_assert!((m.scaling_transform(z, kappa).unwrap() - kappa * z).abs() <= 1e-15 * kappa * z);
    }

    #[test]
    fn density_functionals_ignore_phase(a in -2.0f64..2.0, b in -1.0f64..1.0, c in -0.3f64..0.3, sigma in 0.6f64..1.4) {
        let g = Grid::dirichlet(&[(256, -10.0, 10.0)]).unwrap();
        let psi = gaussian_state(&g, sigma, &[0.3], None, units()).unwrap();
        let phased = psi.with_phase(|x| a * x[0] + b * (x[0] * 0.7).sin() + c * x[0] * x[0]);
        // |psi e^{i theta}| differs from |psi| only by rounding
        let (f0, f1) = (fisher_information(&psi.density(), 0, &g), fisher_information(&phased.density(), 0, &g));
        prop_assert!((f0 - f1).abs() <= 1e-14 * f0);
        for (u, v) in abs_curvature_ratio(&psi, 0).iter().zip(abs_curvature_ratio(&phased, 0)) {
            prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
        }
        let (m0, d0) = position_stats(&psi);
        let (m1, d1) = position_stats(&phased);
        prop_assert!((m0[0] - m1[0]).abs() <= 1e-14 && (d0[0] - d1[0]).abs() <= 1e-14);
    }

    #[test]
    fn nonlinear_potential_is_boost_invariant(beta in 1e-3f64..0.2, v in -3.0f64..3.0, sigma in 0.8f64..1.4) {
        let g = Grid::dirichlet(&[(256, -10.0, 10.0)]).unwrap();
        let psi = gaussian_state(&g, sigma, &[0.2], None, units()).unwrap();
        let boosted = galilean_boost(&psi, &[v], units()).unwrap();
        let m = DeformationModel::gup(beta).unwrap();
        let (v0, w0) = effective_potential(&psi, &m).unwrap();
        let (v1, w1) = effective_potential(&boosted, &m).unwrap();
        prop_assert!((w0[0] - w1[0]).abs() <= 1e-12 * w0[0]);
        let scale = v0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (a, b) in v0.iter().zip(&v1) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn fisher_length_times_spread_is_half_hbar(c1 in -2.0f64..2.0, v1 in 0.2f64..1.0, w in 0.1f64..0.9) {
        let g = Grid::dirichlet(&[(512, -12.0, 12.0)]).unwrap();
        let psi = mixture(&g, &[(c1, v1, w), (0.0, 0.6, 1.0 - w)]);
        let s = FieldStats::of(&psi);
        let hbar = psi.units.hbar;
        prop_assert!((s.delta_x_small[0] * s.delta_n_w[0] - 0.5 * hbar).abs() <= 1e-14);
    }

    #[test]
    fn gup_and_w_form_agree(
        beta in 1e-3f64..0.05,
        c1 in -2.0f64..2.0, v1 in 0.3f64..1.0, v in -1.0f64..1.0,
        w in 0.1f64..0.9,
    ) {
        let g = Grid::dirichlet(&[(1024, -12.0, 12.0)]).unwrap();
        let psi = galilean_boost(&mixture(&g, &[(c1, v1, w), (-0.5, 0.5, 1.0 - w)]), &[v], units()).unwrap();
        let m = DeformationModel::gup(beta).unwrap();
        let a = check_sharper_hur(&psi, &m).unwrap();
        let b = check_gup_relation(&psi, &m).unwrap();
        prop_assert!(a[0].passed && b[0].passed, "{a:?} {b:?}");
    }

    #[test]
    fn field_csv_round_trip(vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 16..64)) {
        let n = vals.len();
        let g = Grid::periodic(&[(n, -1.0, 2.0)]).unwrap();
        let values: Vec<Complex64> = vals.iter().map(|(r, i)| Complex64::new(*r, *i)).collect();
        let psi = WaveField::new(g, values, units()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_field(dir.path(), "f", &psi).unwrap();
        prop_assert_eq!(read_field(dir.path(), "f").unwrap(), psi);
    }

    #[test]
    fn config_round_trip(beta in 0.0f64..5.0, points in 16usize..4096, dt in 1e-5f64..0.1, seed in any::<u64>()) {
        let mut c = RunConfig { beta, seed, ..RunConfig::default() };
        c.grid.points = points;
        c.evolution.dt = dt;
        let text = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_conserves_norm(beta in 0.0f64..0.15, v in -1.0f64..1.0, c in -1.0f64..1.0, periodic in any::<bool>()) {
        let (boundary, scheme) = if periodic {
            (Boundary::Periodic, KineticScheme::SpectralPeriodic)
        } else {
            (Boundary::Dirichlet, KineticScheme::CrankNicolsonDirichlet)
        };
        // Tails stay above the node regularization and, on periodic grids,
        // the state is symmetric across the wrap.
        let g = Grid::centered(boundary, 1, 128, 5.0).unwrap();
        let c = if periodic { 0.0 } else { 0.2 * c };
        let psi = gaussian_state(&g, 0.8, &[c], Some(&[v]), units()).unwrap();
        let mut cfg = EvolutionConfig::new(
            0.0005,
            200,
            scheme,
            DeformationModel::gup(beta).unwrap(),
            PotentialSpec::Harmonic { zeta: 1.0 },
            units(),
        );
        cfg.w_recompute_every = 1 + (v.abs() * 3.0) as usize;
        let traj = evolve(&psi, &cfg).unwrap();
        prop_assert!(traj.max_norm_drift() <= 1e-10);
    }
}
