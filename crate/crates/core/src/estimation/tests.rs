use super::*;
use crate::solver::MachineConfig;
use approx::{assert_abs_diff_eq, assert_relative_eq};
use std::cell::RefCell;

fn coarse_cfg() -> MachineConfig {
    MachineConfig {
        n_nodes: 31,
        dt: 0.1,
        ..MachineConfig::default()
    }
}

/// Small synthetic input set spanning drying time, thickness, cylinder
/// temperature and initial moisture.
fn synthetic_inputs(n: usize) -> Vec<(f64, f64, f64, f64)> {
    (0..n)
        .map(|i| {
            let x = i as f64;
            (
                24.0 + 4.0 * x,
                (2.8 + 0.3 * x) * 1e-4,
                385.0 + 2.2 * x,
                0.48 + 0.02 * x,
            )
        })
        .collect()
}

/// Dataset whose measured values are the simulated predictions at `truth`.
fn synthetic_dataset(truth: &EvapParams, cfg: &MachineConfig, n: usize) -> Vec<Sample> {
    synthetic_inputs(n)
        .into_iter()
        .enumerate()
        .map(|(i, (tau, thickness, t_cyl, m0))| {
            let mut s = Sample {
                key: format!("syn{}", i + 1),
                tau,
                thickness,
                t_cyl,
                m0,
                m_tau: 0.0,
            };
            s.m_tau = predictions_seq(std::slice::from_ref(&s), truth, cfg).unwrap()[0];
            s
        })
        .collect()
}

#[test]
fn sample_validation_names_fields() {
    let mut s = Sample {
        key: "a".into(),
        tau: 30.0,
        thickness: 6.3e-4,
        t_cyl: 403.15,
        m0: 0.63,
        m_tau: 0.068,
    };
    assert!(s.validate().is_ok());
    s.thickness = -1.0;
    let msg = s.validate().unwrap_err().to_string();
    assert!(msg.contains("thickness_m"), "{msg}");
    s.thickness = 6.3e-4;
    s.m_tau = 0.7;
    assert!(s.validate().unwrap_err().to_string().contains("M0"));
}

#[test]
fn classify_reference_rows() {
    assert_eq!(
        classify(7.78e-2, 5.53e-2, DRYING_THRESHOLD),
        DryingLabel::OverDried
    );
    assert_eq!(
        classify(3.79e-2, 6.62e-2, DRYING_THRESHOLD),
        DryingLabel::UnderDried
    );
    assert_eq!(
        classify(4.76e-2, 5.23e-2, DRYING_THRESHOLD),
        DryingLabel::CorrectlyDried
    );
}

#[test]
fn classify_is_antisymmetric() {
    let values = [0.03, 0.05, 0.065, 0.08, 0.095];
    for &a in &values {
        for &b in &values {
            let fwd = classify(a, b, DRYING_THRESHOLD);
            let rev = classify(b, a, DRYING_THRESHOLD);
            match fwd {
                DryingLabel::CorrectlyDried => assert_eq!(rev, DryingLabel::CorrectlyDried),
                DryingLabel::OverDried => assert_eq!(rev, DryingLabel::UnderDried),
                DryingLabel::UnderDried => assert_eq!(rev, DryingLabel::OverDried),
            }
        }
    }
}

#[test]
fn metrics_basics() {
    let m = metrics(&[0.05, 0.06], &[0.05, 0.06]).unwrap();
    assert_eq!(m.mse, 0.0);
    assert_eq!(m.mae, 0.0);

    let m = metrics(&[0.0, 0.1], &[0.01, 0.08]).unwrap();
    assert!(m.per_sample[0].relative.is_none());
    assert_relative_eq!(m.per_sample[1].relative.unwrap(), 0.2, max_relative = 1e-12);
    assert_relative_eq!(m.mae, 0.015, max_relative = 1e-12);
    assert_relative_eq!(m.mse, (0.0001 + 0.0004) / 2.0, max_relative = 1e-12);

    assert!(metrics(&[], &[]).is_err());
    assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn residuals_self_consistency_and_order() {
    let cfg = coarse_cfg();
    let truth = EvapParams::default();
    let dataset = synthetic_dataset(&truth, &cfg, 3);
    // Residuals vanish at the generating parameters.
    let r = residuals(&truth, &dataset, &cfg).unwrap();
    assert_eq!(r.len(), 3);
    for v in &r {
        assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-14);
    }
    // Parallel and sequential evaluation agree bit for bit.
    let par = predictions(&dataset, &truth, &cfg).unwrap();
    let seq = predictions_seq(&dataset, &truth, &cfg).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn residuals_increase_with_k() {
    // Larger k means more intense drying: predictions drop, so every
    // residual component M_tau - Mhat weakly increases.
    let cfg = coarse_cfg();
    let truth = EvapParams::default();
    let dataset = synthetic_dataset(&truth, &cfg, 4);
    let lo = residuals(&EvapParams::new(6e-4, truth.m_b, truth.gamma), &dataset, &cfg).unwrap();
    let hi = residuals(&EvapParams::new(9e-4, truth.m_b, truth.gamma), &dataset, &cfg).unwrap();
    for (l, h) in lo.iter().zip(&hi) {
        assert!(h >= l, "residual decreased with k: {l} -> {h}");
    }
}

#[test]
fn residuals_report_offending_sample() {
    let cfg = coarse_cfg();
    let mut dataset = synthetic_dataset(&EvapParams::default(), &cfg, 2);
    dataset[1].thickness = f64::NAN;
    let err = residuals(&EvapParams::default(), &dataset, &cfg).unwrap_err();
    assert!(err.to_string().contains("syn2"), "{err}");
}

#[test]
fn fd_jacobian_exact_on_affine_residuals() {
    // f(p) = A p + b: the forward difference recovers A to rounding.
    let a = [
        [2.0, -1.0, 0.5],
        [0.0, 3.0, -2.0],
        [1.0, 1.0, 1.0],
        [-4.0, 0.25, 2.0],
    ];
    let b = [1.0, -2.0, 0.0, 3.0];
    let f = move |p: [f64; 3]| -> crate::error::Result<Vec<f64>> {
        Ok(a.iter()
            .zip(b)
            .map(|(row, bi)| row[0] * p[0] + row[1] * p[1] + row[2] * p[2] + bi)
            .collect())
    };
    let bounds = Bounds {
        lower: [-10.0; 3],
        upper: [10.0; 3],
    };
    let p = [0.3, -0.7, 1.1];
    let f_base = f(p).unwrap();
    let mut evals = 0;
    let jac =
        trust_region::fd_columns(&f, p, &f_base, &bounds, [1.0; 3], None, &mut evals).unwrap();
    assert_eq!(evals, 3);
    assert_eq!(jac.len(), 4);
    for (row, expect) in jac.iter().zip(a.iter()) {
        for m in 0..3 {
            assert_relative_eq!(row[m], expect[m], max_relative = 1e-6);
        }
    }
}

#[test]
fn fd_jacobian_shape_and_central_difference_oracle() {
    let cfg = coarse_cfg();
    let truth = EvapParams::default();
    let dataset = synthetic_dataset(&truth, &cfg, 2);
    let at = EvapParams::new(7e-4, 0.12, 90.0);
    let bounds = Bounds::default();
    let jac = fd_jacobian(&at, &dataset, &cfg, &bounds, None).unwrap();
    assert_eq!(jac.len(), 2);

    // Central-difference oracle, built independently of fd_columns.
    let f = DatasetResiduals {
        dataset: &dataset,
        cfg: &cfg,
        beta: at.beta,
    };
    let p = [at.k, at.m_b, at.gamma];
    for m in 0..3 {
        let h = 1e-5 * p[m].abs();
        let mut hi = p;
        hi[m] += h;
        let mut lo = p;
        lo[m] -= h;
        let fh = f.eval(hi).unwrap();
        let fl = f.eval(lo).unwrap();
        for (i, (a, b)) in fh.iter().zip(&fl).enumerate() {
            let central = (a - b) / (2.0 * h);
            assert_relative_eq!(jac[i][m], central, max_relative = 1e-4, epsilon = 1e-12);
        }
    }
}

#[test]
fn fd_steps_flip_inward_at_bounds() {
    let log = RefCell::new(Vec::new());
    let f = |p: [f64; 3]| -> crate::error::Result<Vec<f64>> {
        log.borrow_mut().push(p);
        Ok(vec![p[0] + p[1] + p[2]])
    };
    let bounds = Bounds::default();
    // Base point on the upper k and gamma walls.
    let p = [1e-3, 0.1, 150.0];
    let f_base = f(p).unwrap();
    let mut evals = 0;
    trust_region::fd_columns(&f, p, &f_base, &bounds, [1e-4, 1e-2, 1.0], None, &mut evals)
        .unwrap();
    for q in log.borrow().iter().skip(1) {
        assert!(bounds.contains(*q), "evaluated outside bounds: {q:?}");
    }
}

#[test]
fn minimize_zero_residual_init_returns_immediately() {
    let f = |_p: [f64; 3]| -> crate::error::Result<Vec<f64>> { Ok(vec![0.0, 0.0]) };
    let out = trust_region::minimize(
        &f,
        &Bounds::default(),
        [5e-4, 0.1, 70.0],
        &TrOptions::default(),
    )
    .unwrap();
    assert_eq!(out.status, ConvergenceStatus::CostTol);
    assert_eq!(out.n_iterations, 0);
    assert_eq!(out.n_residual_evals, 1);
    assert_eq!(out.cost, 0.0);
}

#[test]
fn minimize_rejects_degenerate_bounds_and_infeasible_init() {
    let f = |_p: [f64; 3]| -> crate::error::Result<Vec<f64>> { Ok(vec![1.0]) };
    let degenerate = Bounds {
        lower: [1e-4, 0.1, 10.0],
        upper: [1e-3, 0.1, 150.0],
    };
    assert!(trust_region::minimize(&f, &degenerate, [5e-4, 0.1, 70.0], &TrOptions::default())
        .is_err());
    assert!(trust_region::minimize(
        &f,
        &Bounds::default(),
        [5e-3, 0.1, 70.0],
        &TrOptions::default()
    )
    .is_err());
}

#[test]
fn minimize_solves_a_bounded_quadratic() {
    // f(p) = W (p - target) with the target outside the box in gamma:
    // the solution pins gamma at its bound and matches elsewhere.
    let target = [5e-4, 0.15, 200.0];
    let w = [1.0, 1.0, 1e-3];
    let f = move |p: [f64; 3]| -> crate::error::Result<Vec<f64>> {
        Ok((0..3).map(|m| w[m] * (p[m] - target[m])).collect())
    };
    let bounds = Bounds::default();
    let out = trust_region::minimize(&f, &bounds, [2e-4, 0.05, 50.0], &TrOptions::default())
        .unwrap();
    assert_relative_eq!(out.params[0], target[0], max_relative = 1e-6);
    assert_relative_eq!(out.params[1], target[1], max_relative = 1e-6);
    assert_relative_eq!(out.params[2], 150.0, max_relative = 1e-6);
    for w in out.cost_history.windows(2) {
        assert!(w[1] <= w[0], "cost history not monotone: {:?}", out.cost_history);
    }
}

/// Records every evaluated point; used to instrument feasibility.
struct Recorder<'a, F: ResidualFn> {
    inner: &'a F,
    points: RefCell<Vec<[f64; 3]>>,
}

impl<F: ResidualFn> ResidualFn for Recorder<'_, F> {
    fn eval(&self, p: [f64; 3]) -> crate::error::Result<Vec<f64>> {
        self.points.borrow_mut().push(p);
        self.inner.eval(p)
    }
}

#[test]
fn minimize_feasibility_accounting_and_monotonicity() {
    // A curved residual whose minimum sits at the gamma bound, so the
    // iteration has to negotiate the box.
    let f = |p: [f64; 3]| -> crate::error::Result<Vec<f64>> {
        Ok(vec![
            1e3 * (p[0] - 4e-4),
            10.0 * (p[1] - 0.12) + 1e-4 * (p[2] - 160.0),
            1e-2 * (p[2] - 160.0),
            (p[0] * 1e3) * (p[1] - 0.1),
        ])
    };
    let rec = Recorder {
        inner: &f,
        points: RefCell::new(Vec::new()),
    };
    let bounds = Bounds::default();
    let out =
        trust_region::minimize(&rec, &bounds, [5e-4, 0.1, 70.0], &TrOptions::default()).unwrap();

    // Every evaluated point feasible.
    for p in rec.points.borrow().iter() {
        assert!(bounds.contains(*p), "infeasible evaluation {p:?}");
    }
    // Exactly 4 evaluations per iteration (base + 3 columns).
    assert_eq!(out.n_residual_evals, 4 * out.n_iterations);
    // Accepted costs non-increasing.
    for w in out.cost_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(bounds.contains(out.params));
}

#[test]
fn fit_recovers_synthetic_parameters_coarsely() {
    // Full-strength recovery (17 samples, finer grid) lives in the
    // acceptance suite; this is a fast smoke version.
    let cfg = coarse_cfg();
    let truth = EvapParams::new(9.99e-4, 9.75e-2, 1.49e2);
    let dataset = synthetic_dataset(&truth, &cfg, 6);
    let out = fit(
        &dataset,
        &Bounds::default(),
        &EvapParams::new(5e-4, 0.1, 70.0),
        &cfg,
        &FitOptions::default(),
    )
    .unwrap();
    assert!(
        out.cost_history.last().unwrap() < &1e-9,
        "final cost {:?}",
        out.cost_history.last()
    );
    assert_relative_eq!(out.params.k, truth.k, max_relative = 0.05);
    assert_relative_eq!(out.params.m_b, truth.m_b, max_relative = 0.05);
    assert!(out.params.gamma >= 10.0 && out.params.gamma <= 150.0);
    assert_eq!(out.n_residual_evals, 4 * out.n_iterations);
}

#[test]
fn fit_requires_nonempty_validated_dataset() {
    let cfg = coarse_cfg();
    assert!(fit(
        &[],
        &Bounds::default(),
        &EvapParams::new(5e-4, 0.1, 70.0),
        &cfg,
        &FitOptions::default()
    )
    .is_err());
}
