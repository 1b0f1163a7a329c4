mod common;

use common::{close, params};
use gsrisk::cli::table::{self, Format, Row};
use gsrisk::distributions::ClaimLaw;
use gsrisk::fluid_map::DetPolynomial;
use gsrisk::scale::GridSpec;
use gsrisk::spectral::SpectralData;
use gsrisk::{Complex, GsSolver, HeavyTail, Penalty, PhaseType, RiskModel};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Spec {
    claim: PhaseType,
    gain: Option<PhaseType>,
    claim_rate: f64,
    gain_rate: f64,
    shape: f64,
    eps: f64,
    q: f64,
    margin: f64,
}

fn ph() -> impl Strategy<Value = PhaseType> {
    prop_oneof![
        (0.5f64..3.0).prop_map(PhaseType::exponential),
        (0.8f64..4.0).prop_map(|r| PhaseType::erlang(2, r)),
        (0.1f64..0.9, 0.4f64..1.5, 2.0f64..5.0).prop_map(|(p, a, b)| PhaseType::from_rows(
            &[p, 1.0 - p],
            &[vec![-a, 0.0], vec![0.0, -b]]
        )
        .unwrap()),
    ]
}

fn spec() -> impl Strategy<Value = Spec> {
    (
        ph(),
        proptest::option::of(ph()),
        0.2f64..1.5,
        0.1f64..1.0,
        1.8f64..3.5,
        0.0f64..0.3,
        0.02f64..0.5,
        0.1f64..1.0,
    )
        .prop_map(|(claim, gain, claim_rate, gain_rate, shape, eps, q, margin)| Spec {
            claim,
            gain,
            claim_rate,
            gain_rate,
            shape,
            eps,
            q,
            margin,
        })
}

/// Premium chosen so that both the base model and the mixture have the requested safety margin.
fn build(s: &Spec) -> RiskModel {
    let heavy = HeavyTail::pareto(s.shape, 1.0).unwrap();
    let gain_rate = if s.gain.is_some() { s.gain_rate } else { 0.0 };
    let gain_mean = s.gain.as_ref().map_or(0.0, |g| g.mean());
    let claim_mean = ((1.0 - s.eps) * s.claim.mean() + s.eps * heavy.mean()).max(s.claim.mean());
    let c = (s.claim_rate * claim_mean - gain_rate * gain_mean + s.margin).max(0.2);
    RiskModel::new(
        params(c, s.claim_rate, gain_rate, s.eps, s.q),
        s.gain.clone(),
        s.claim.clone(),
        heavy,
    )
    .unwrap()
}

fn spectral(m: &RiskModel) -> (DetPolynomial, SpectralData) {
    let det = m.det_polynomial().unwrap();
    let sp = SpectralData::new(m, &det).unwrap();
    (det, sp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_roots_are_closed_under_conjugation(s in spec()) {
        let m = build(&s);
        let (_, sp) = spectral(&m);
        prop_assert_eq!(sp.roots.len(), m.n_plus() + 1);
        for r in &sp.roots {
            prop_assert!(r.re > 0.0);
            prop_assert!(sp.roots.iter().any(|o| (o - r.conj()).norm() < 1e-9 * (1.0 + r.norm())));
        }
    }

    #[test]
    fn lambda_rows_annihilate_the_matrix_exponent(s in spec()) {
        let m = build(&s);
        let (_, sp) = spectral(&m);
        for (i, &rho) in sp.roots.iter().enumerate() {
            let f = m.matrix_exponent(rho, 0.0).unwrap();
            let row = sp.lambda.row(i) * &f;
            let scale = sp.lambda.row(i).iter().fold(0.0f64, |a, z| a.max(z.norm())) * f.iter().fold(1.0f64, |a, z| a.max(z.norm()));
            prop_assert!(row.iter().all(|z| z.norm() < 1e-9 * scale), "{}", row);
        }
    }

    #[test]
    fn exp_r_is_a_semigroup(s in spec(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let m = build(&s);
        let (_, sp) = spectral(&m);
        let lhs = sp.exp_r(a + b);
        let rhs = sp.exp_r(a) * sp.exp_r(b);
        prop_assert!((lhs - rhs).amax() < 1e-9);
    }

    #[test]
    fn zero_weight_leaves_the_base_value(s in spec(), u in 0.0f64..5.0) {
        let m = build(&s);
        let solver = GsSolver::new(&m, Penalty::Constant { a: 1.0 }, GridSpec::for_model(&m, 5.0)).unwrap();
        let r = solver.evaluate_at(u, 0.0).unwrap();
        prop_assert_eq!(r.corrected, r.base);
        prop_assert_eq!(r.base, solver.base(u).unwrap());
    }

    #[test]
    fn discounted_ruin_is_a_decreasing_probability(s in spec()) {
        let m = build(&s);
        let solver = GsSolver::new(&m, Penalty::Constant { a: 1.0 }, GridSpec::for_model(&m, 6.0)).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=12 {
            let v = solver.base(0.5 * k as f64).unwrap();
            prop_assert!((0.0..=1.0).contains(&v), "{}", v);
            prop_assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn more_discounting_lowers_the_base_value(s in spec(), u in 0.0f64..4.0) {
        let m = build(&s);
        let more = m.with_q(s.q * 2.0).unwrap();
        let pen = Penalty::Constant { a: 1.0 };
        let lo = GsSolver::new(&more, pen.clone(), GridSpec::for_model(&more, 4.0)).unwrap().base(u).unwrap();
        let hi = GsSolver::new(&m, pen, GridSpec::for_model(&m, 4.0)).unwrap().base(u).unwrap();
        prop_assert!(lo < hi);
    }

    #[test]
    fn penalty_scaling_is_linear(s in spec(), t in 0.1f64..5.0, u in 0.0f64..4.0, s1 in 0.0f64..2.0, s2 in 0.0f64..2.0) {
        let m = build(&s);
        let pen = Penalty::BilateralExponential { s1, s2, a: 1.0 };
        let grid = GridSpec::for_model(&m, 4.0);
        let one = GsSolver::new(&m, pen.clone(), grid).unwrap().evaluate(u).unwrap();
        let many = GsSolver::new(&m, pen.scaled(t), grid).unwrap().evaluate(u).unwrap();
        prop_assert!(close(many.base, t * one.base, 1e-10, 1e-14));
        prop_assert!(close(many.correction, t * one.correction, 1e-10, 1e-14));
    }

    #[test]
    fn correction_is_eps_free(s in spec(), u in 0.0f64..4.0) {
        let m = build(&s);
        let pen = Penalty::Constant { a: 1.0 };
        let a = GsSolver::new(&m, pen.clone(), GridSpec::for_model(&m, 4.0)).unwrap().evaluate(u).unwrap();
        let m2 = m.with_eps(0.0).unwrap();
        let b = GsSolver::new(&m2, pen, GridSpec::for_model(&m2, 4.0)).unwrap().evaluate_at(u, s.eps).unwrap();
        prop_assert!(close(a.correction, b.correction, 1e-12, 1e-15));
        prop_assert!(close(a.corrected, b.corrected, 1e-12, 1e-15));
    }

    #[test]
    fn phase_type_transform_matches_moments(p in ph(), s in 0.0f64..2.0) {
        let l = p.lst(Complex::new(0.0, 0.0)).unwrap();
        prop_assert!((l.re - 1.0).abs() < 1e-12);
        let d = p.lst_derivative(Complex::new(0.0, 0.0)).unwrap();
        prop_assert!((d.re + p.moment(1)).abs() < 1e-10 * p.moment(1));
        let e = p.equilibrium();
        prop_assert!((e.mean() - p.moment(2) / (2.0 * p.moment(1))).abs() < 1e-10 * e.mean());
        prop_assert!(p.lst(Complex::new(s, 0.0)).unwrap().re <= 1.0);
    }
}

proptest! {
    #[test]
    fn sig12_round_trips_to_twelve_digits(x in -1e12f64..1e12, e in -30i32..30) {
        let v = x * 10f64.powi(e);
        let back: f64 = table::sig12(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-12 * v.abs());
    }

    #[test]
    fn csv_and_json_tables_parse_back(vals in proptest::collection::vec((0.0f64..100.0, -1.0f64..1.0, proptest::option::of(0.0f64..1.0)), 0..8)) {
        let rows: Vec<Row> = vals
            .iter()
            .map(|&(u, v, mc)| Row { u, eps: 0.1, base: v, correction: -v, corrected: 0.9 * v, mc_mean: mc, mc_half_width: mc, tail_ratio: None })
            .collect();
        let mut csv_out = Vec::new();
        table::write(&rows, Format::Csv, &mut csv_out).unwrap();
        let mut reader = csv::Reader::from_reader(&csv_out[..]);
        prop_assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), table::HEADER.to_vec());
        let recs: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        prop_assert_eq!(recs.len(), rows.len());
        let mut json_out = Vec::new();
        table::write(&rows, Format::Json, &mut json_out).unwrap();
        let parsed: Vec<serde_json::Value> = serde_json::from_slice(&json_out).unwrap();
        for ((rec, obj), row) in recs.iter().zip(&parsed).zip(&rows) {
            let b: f64 = rec[2].parse().unwrap();
            prop_assert!((b - row.base).abs() <= 1e-11 * row.base.abs());
            prop_assert_eq!(obj["base"].as_f64().unwrap(), b);
            prop_assert_eq!(rec[5].is_empty(), row.mc_mean.is_none());
            prop_assert!(obj["tail_ratio"].is_null());
        }
    }

    #[test]
    fn u_grid_is_inclusive(a in 0.0f64..5.0, n in 0usize..40, h in 0.01f64..2.0) {
        let b = a + n as f64 * h;
        let g = table::parse_u_grid(&format!("{a}:{b}:{h}")).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert!((g[n] - b).abs() < 1e-9 * (1.0 + b));
    }
}
