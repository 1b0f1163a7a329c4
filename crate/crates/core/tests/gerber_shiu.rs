mod common;

use common::*;
use gsrisk::gerber_shiu::{
    asymptotic_bound, cl_ruin_corrected, cl_ruin_expansion, correction_v, pk_cdf, resolvent_first_row, GsSolver,
    Penalty, PenaltyTable,
};
use gsrisk::numerics::Quadrature;
use gsrisk::scale::{base_scale_matrix, GridSpec};
use gsrisk::spectral::SpectralData;
use gsrisk::{Error, PhaseType, RiskModel};

const ONE: Penalty = Penalty::Constant { a: 1.0 };

fn solver<H: gsrisk::ClaimLaw + Clone>(m: &RiskModel<H>, u_max: f64) -> GsSolver<H> {
    GsSolver::new(m, ONE, GridSpec { h: 0.005, u_max }).unwrap()
}

#[test]
fn model_a_base_values() {
    // adaptive-quadrature prototype, confirmed by a 4e5-path simulation
    let s = solver(&model_a(0.0), 5.0);
    for (u, want) in [(0.0, 0.662264), (1.0, 0.472448), (2.0, 0.337037), (5.0, 0.122362)] {
        let got = s.base(u).unwrap();
        assert!((got - want).abs() < 2e-6, "u={u}: {got} vs {want}");
    }
}

#[test]
fn cramer_lundberg_discounted_ruin_closed_form() {
    // exp(1) claims: E[e^{-qτ}; τ < ∞] = (1 - R) e^{-R u}, -R the negative
    // root of c s - λ s / (1 + s) = q
    let q = 0.1;
    let m = cl_exp(0.0, q);
    let (c, lam) = (1.0, 0.8);
    // c s² + (c - λ - q) s - q = 0
    let b = c - lam - q;
    let r = (-b - (b * b + 4.0 * c * q).sqrt()) / (2.0 * c);
    let big_r = -r;
    let s = solver(&m, 10.0);
    for u in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let want = (1.0 - big_r) * (-big_r * u).exp();
        let got = s.base(u).unwrap();
        assert!((got - want).abs() < 1e-9, "u={u}: {got} vs {want}");
    }
}

#[test]
fn correction_matches_exact_phase_type_perturbation() {
    let base = model_a_ph(0.0);
    let s = solver(&base, 3.0);
    let e1 = 1e-3;
    let exact = |eps: f64| solver(&model_a_ph_exact(eps), 3.0);
    let (s1, s2) = (exact(e1), exact(2.0 * e1));
    for u in [0.0, 1.0, 2.0] {
        let b = s.base(u).unwrap();
        let d1 = (s1.base(u).unwrap() - b) / e1;
        let d2 = (s2.base(u).unwrap() - b) / (2.0 * e1);
        let fd = 2.0 * d1 - d2;
        let got = s.correction(u).unwrap();
        assert!(close(got, fd, 2e-3, 1e-6), "u={u}: {got} vs {fd}");
    }
}

#[test]
fn v_matches_exact_phase_type_perturbation() {
    let base = model_a_ph(0.0);
    let s = solver(&base, 3.0);
    let e1 = 1e-3;
    let pert = solver(&model_a_ph_exact(e1), 3.0);
    let pert2 = solver(&model_a_ph_exact(2.0 * e1), 3.0);
    for (u, z) in [(2.0, 1.0), (2.0, 3.0), (0.5, 0.2)] {
        let u0 = resolvent_first_row(&s.spectral, &s.scale, u, z)[0];
        let d1 = (resolvent_first_row(&pert.spectral, &pert.scale, u, z)[0] - u0) / e1;
        let d2 = (resolvent_first_row(&pert2.spectral, &pert2.scale, u, z)[0] - u0) / (2.0 * e1);
        let fd = 2.0 * d1 - d2;
        let got = correction_v(&s.spectral, &s.scale, &s.row_correction, u, z);
        assert!(close(got, fd, 2e-3, 1e-6), "(u,z)=({u},{z}): {got} vs {fd}");
    }
}

#[test]
fn resolvent_edge_cases_and_mass_bound() {
    let m = model_a(0.0);
    let s = solver(&m, 5.0);
    for u in [0.5, 2.0] {
        let r = resolvent_first_row(&s.spectral, &s.scale, u, 0.0);
        assert!(r.iter().all(|v| v.abs() < 1e-10), "{r:?}");
    }
    let e = s.spectral.exp_r(1.3);
    let r = resolvent_first_row(&s.spectral, &s.scale, 0.0, 1.3);
    assert!((r[0] - e[(0, 0)]).abs() < 1e-10 && (r[1] - e[(0, 1)]).abs() < 1e-10);
    let quad = Quadrature::default();
    for u in [0.0, 1.0, 5.0] {
        let mass: f64 = quad
            .integrate(
                |z: f64| resolvent_first_row(&s.spectral, &s.scale, u, z)[0],
                0.0,
                f64::INFINITY,
            )
            .unwrap();
        assert!(m.q * mass <= 1.0 && mass > 0.0, "u={u}: {mass}");
        for z in [0.1, 1.0, 4.0, 9.0] {
            assert!(resolvent_first_row(&s.spectral, &s.scale, u, z)[0] >= 0.0);
        }
    }
}

#[test]
fn no_correction_for_identical_heavy_law() {
    let m = RiskModel::new(
        params(1.0, 1.0, 0.5, 0.1, 0.1),
        Some(PhaseType::exponential(2.0)),
        PhaseType::exponential(1.0),
        PhaseType::exponential(1.0),
    )
    .unwrap();
    let s = solver(&m, 3.0);
    for u in [0.0, 1.0, 3.0] {
        let r = s.evaluate(u).unwrap();
        assert!(r.correction.abs() < 1e-10, "{r:?}");
        assert_eq!(r.eps, 0.1);
    }
}

#[test]
fn zero_eps_and_affine_in_eps() {
    let s = solver(&model_a(0.0), 5.0);
    for u in [0.0, 1.0, 2.0, 5.0] {
        let r0 = s.evaluate_at(u, 0.0).unwrap();
        assert_eq!(r0.corrected, r0.base);
        let r1 = s.evaluate_at(u, 0.05).unwrap();
        let r2 = s.evaluate_at(u, 0.1).unwrap();
        let slope = (r2.corrected - r1.corrected) / 0.05;
        assert!((slope - r1.correction).abs() < 1e-10);
        assert!(!r1.diagnostics.eps_warning);
        assert!(s.evaluate_at(u, 0.3).unwrap().diagnostics.eps_warning);
    }
    assert!(matches!(s.evaluate_at(1.0, 0.6), Err(Error::PreconditionViolated(_))));
    assert!(matches!(s.evaluate_at(6.0, 0.1), Err(Error::PreconditionViolated(_))));
}

#[test]
fn base_is_bounded_and_decays() {
    let pens = [
        Penalty::Constant { a: 2.0 },
        Penalty::DeficitIndicator { y0: 0.5, a: 1.0 },
        Penalty::BilateralExponential {
            s1: 0.3,
            s2: 0.7,
            a: 1.5,
        },
    ];
    for p in pens {
        let s = GsSolver::new(&model_a(0.0), p.clone(), GridSpec { h: 0.01, u_max: 10.0 }).unwrap();
        let mut prev = f64::INFINITY;
        for u in [0.0, 1.0, 3.0, 10.0] {
            let v = s.base(u).unwrap();
            assert!(v >= 0.0 && v <= p.bound() && v <= prev, "{p:?} u={u}: {v}");
            prev = v;
        }
        assert!(prev < 0.05 * p.bound());
    }
}

#[test]
fn penalty_scaling_is_linear() {
    let m = model_a(0.1);
    let p = Penalty::BilateralExponential {
        s1: 0.2,
        s2: 0.1,
        a: 1.0,
    };
    let g = GridSpec { h: 0.01, u_max: 2.0 };
    let s1 = GsSolver::new(&m, p.clone(), g).unwrap();
    let s3 = GsSolver::new(&m, p.scaled(3.0), g).unwrap();
    for u in [0.0, 2.0] {
        let (a, b) = (s1.evaluate(u).unwrap(), s3.evaluate(u).unwrap());
        assert!((3.0 * a.base - b.base).abs() < 1e-10 * b.base.abs().max(1.0));
        assert!((3.0 * a.correction - b.correction).abs() < 1e-9 * b.correction.abs().max(1.0));
    }
}

#[test]
fn penalty_integrals_against_exponential_law() {
    let law = PhaseType::exponential(1.0);
    let z = 0.7f64;
    let ind = Penalty::DeficitIndicator { y0: 0.4, a: 1.0 };
    assert!((ind.omega(&law, z).unwrap() - (-(z + 0.4)).exp()).abs() < 1e-14);
    let ex = Penalty::BilateralExponential {
        s1: 0.5,
        s2: 0.2,
        a: 2.0,
    };
    let want = 2.0 * (-0.2 * z).exp() * (-z).exp() / 1.5;
    assert!((ex.omega(&law, z).unwrap() - want).abs() < 1e-12);
    let flat = Penalty::Table(PenaltyTable {
        y: vec![0.0, 1.0, 2.0],
        z: vec![0.0, 5.0],
        values: vec![vec![0.5; 3], vec![0.5; 3]],
    });
    assert!((flat.omega(&law, z).unwrap() - 0.5 * (-z).exp()).abs() < 1e-9);
    assert_eq!(flat.bound(), 0.5);
    let bad = Penalty::Table(PenaltyTable {
        y: vec![0.0, 1.0],
        z: vec![0.0],
        values: vec![vec![1.0]],
    });
    assert!(bad.validate().is_err());
    assert!(Penalty::Constant { a: -1.0 }.validate().is_err());
}

#[test]
fn general_pipeline_rejects_zero_discount() {
    let m = cl_exp(0.0, 0.0);
    assert!(matches!(
        GsSolver::new(&m, ONE, GridSpec { h: 0.01, u_max: 1.0 }),
        Err(Error::PreconditionViolated(_))
    ));
}

#[test]
fn cramer_lundberg_ruin_closed_form() {
    let m = cl_exp(0.0, 0.0);
    let det = m.det_polynomial().unwrap();
    let w = base_scale_matrix(&m, &det).unwrap();
    for u in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let psi = cl_ruin_corrected(&m, u, 0.0).unwrap();
        assert!((psi - 0.8 * (-0.2 * u).exp()).abs() < 1e-10, "u={u}");
        let pk = pk_cdf(&m, u).unwrap();
        assert!((pk - 0.2 * w.eval(u)[(0, 0)]).abs() < 1e-10);
    }
    assert!((cl_ruin_corrected(&m, 5.0, 0.0).unwrap() - 0.294304).abs() < 1e-6);
    assert!(matches!(
        cl_ruin_expansion(&model_a(0.0), 1.0),
        Err(Error::PreconditionViolated(_))
    ));
    assert!(matches!(
        cl_ruin_expansion(&cl_exp(0.0, 0.1), 1.0),
        Err(Error::PreconditionViolated(_))
    ));
}

#[test]
fn cramer_lundberg_correction_matches_exact_hyperexponential() {
    // H = exp(mean 2): the ε-model has hyperexponential claims and an exact
    // Pollaczek–Khinchine solution
    let base = RiskModel::new(
        params(1.0, 0.4, 0.0, 0.0, 0.0),
        None,
        PhaseType::exponential(1.0),
        PhaseType::exponential(0.5),
    )
    .unwrap();
    let exact = |eps: f64| {
        let claims = PhaseType::from_rows(&[1.0 - eps, eps], &[vec![-1.0, 0.0], vec![0.0, -0.5]]).unwrap();
        RiskModel::new(
            params(1.0, 0.4, 0.0, 0.0, 0.0),
            None,
            claims,
            PhaseType::exponential(0.5),
        )
        .unwrap()
    };
    let e = 1e-4;
    for u in [0.0, 1.0, 3.0] {
        let r = cl_ruin_expansion(&base, u).unwrap();
        let fd = ((1.0 - pk_cdf(&exact(e), u).unwrap()) - r.psi) / e;
        assert!(close(r.correction, fd, 1e-3, 1e-7), "u={u}: {} vs {fd}", r.correction);
    }
}

#[test]
fn cramer_lundberg_pareto_against_renewal_solution() {
    // Ψ_ε(u) from a fine-grid solution of the defective renewal equation
    let m = cl_exp(0.0, 0.0);
    let table = [
        (1.0, [0.65573565, 0.65685980, 0.65872695, 0.66243724]),
        (2.0, [0.53820449, 0.54111042, 0.54590932, 0.55534292]),
    ];
    for (u, exact) in table {
        let r = cl_ruin_expansion(&m, u).unwrap();
        let mut errs = Vec::new();
        for (eps, want) in [0.02, 0.05, 0.1, 0.2].into_iter().zip(exact) {
            errs.push(((r.corrected(eps) - want).abs(), eps));
            assert!(
                (r.corrected(eps) - want).abs() < 4.0 * eps * eps * 0.05 + 2e-6,
                "u={u} eps={eps}"
            );
        }
        let (e1, x1) = errs[1];
        let (e3, x3) = errs[3];
        let slope = (e3 / e1).ln() / (x3 / x1).ln();
        assert!(slope > 1.7, "u={u}: slope {slope}");
    }
}

#[test]
fn asymptotic_bound_cramer_lundberg_and_divergence() {
    // CL at q = 0: ε λ a μ_h / (c - λ μ_p)
    let m = cl_exp(0.1, 0.0);
    let det = m.det_polynomial().unwrap();
    let sp = SpectralData::new(&m, &det).unwrap();
    let w = base_scale_matrix(&m, &det).unwrap();
    let b = asymptotic_bound(&m, &sp, &w, &ONE).unwrap();
    assert!((b - 0.1 * 0.8 / 0.2).abs() < 1e-6, "{b}");

    let a = model_a(0.1);
    let det = a.det_polynomial().unwrap();
    let sp = SpectralData::new(&a, &det).unwrap();
    let w = base_scale_matrix(&a, &det).unwrap();
    assert!(matches!(
        asymptotic_bound(&a, &sp, &w, &ONE),
        Err(Error::NonIntegrableKappa(_))
    ));
}
