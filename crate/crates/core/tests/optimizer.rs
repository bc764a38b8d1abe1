use rfiot_core::optimizer::{optimize_1d, optimize_joint, Engine, OptWarning};
use rfiot_core::{Mode, Objective, OptimizeSpec, SystemParams};

#[test]
fn refinement_is_consistent() {
    let p = SystemParams::paper_defaults();
    let coarse = OptimizeSpec {
        refine_tol: 1e-2,
        ..OptimizeSpec::new(p, Mode::Downlink, Objective::DlThroughput)
    };
    let fine = OptimizeSpec {
        refine_tol: 5e-3,
        ..coarse
    };
    let a = optimize_1d(&coarse).unwrap();
    let b = optimize_1d(&fine).unwrap();
    assert!(b.value >= a.value * (1.0 - 1e-9));
    assert!((a.tau1 - b.tau1).abs() <= coarse.refine_tol);
}

#[test]
fn joint_dl_surface_falls_with_uplink_share() {
    let p = SystemParams::paper_defaults();
    let spec = OptimizeSpec {
        grid_resolution: 12,
        ..OptimizeSpec::new(p, Mode::Joint, Objective::DlThroughput)
    };
    let o = optimize_joint(&spec).unwrap();
    let grid = o.grid();
    let mut tau1s: Vec<f64> = grid.iter().map(|t| t.tau1).collect();
    tau1s.dedup();
    for t1 in tau1s {
        let row: Vec<f64> = grid.iter().filter(|t| t.tau1 == t1).map(|t| t.value).collect();
        assert!(row.windows(2).all(|w| w[1] <= w[0]), "tau1 = {t1}: {row:?}");
    }
    assert_eq!(o.tau3, 0.0);
    // the joint mode keeps the uplink SINR event at tau3 = 0, so the edge
    // differs from the downlink mode and the optimizer says so
    assert!(o
        .warnings
        .iter()
        .any(|w| matches!(w, OptWarning::BoundaryMismatch { .. })));
}

#[test]
fn boundary_throughputs_vanish() {
    let p = SystemParams::paper_defaults();
    let dl = OptimizeSpec::new(p, Mode::Joint, Objective::DlThroughput);
    let ul = OptimizeSpec::new(p, Mode::Joint, Objective::UlThroughput);
    assert_eq!(dl.evaluate(0.3, 0.7).unwrap(), 0.0);
    assert_eq!(ul.evaluate(0.3, 0.0).unwrap(), 0.0);
}

#[test]
fn weights_select_single_objectives() {
    let p = SystemParams::paper_defaults();
    let base = OptimizeSpec {
        grid_resolution: 10,
        ..OptimizeSpec::new(p, Mode::Joint, Objective::DlThroughput)
    };
    let dl = optimize_joint(&base).unwrap();
    let w_dl = optimize_joint(&OptimizeSpec {
        objective: Objective::WeightedSum { w_dl: 1.0, w_ul: 0.0 },
        ..base
    })
    .unwrap();
    let w_ul = optimize_joint(&OptimizeSpec {
        objective: Objective::WeightedSum { w_dl: 0.0, w_ul: 1.0 },
        ..base
    })
    .unwrap();
    let ul = optimize_joint(&OptimizeSpec {
        objective: Objective::UlThroughput,
        ..base
    })
    .unwrap();
    assert_eq!((dl.tau1, dl.tau3, dl.value), (w_dl.tau1, w_dl.tau3, w_dl.value));
    assert_eq!((ul.tau1, ul.tau3, ul.value), (w_ul.tau1, w_ul.tau3, w_ul.value));
    assert!((dl.tau1, dl.tau3) != (ul.tau1, ul.tau3));
}

#[test]
fn simulated_objective_tracks_analytic() {
    let p = SystemParams::paper_defaults();
    let analytic = OptimizeSpec::new(p, Mode::Downlink, Objective::DlThroughput);
    let mc = OptimizeSpec {
        engine: Engine::MonteCarlo {
            n_trials: 20_000,
            seed: 3,
        },
        ..analytic
    };
    for tau1 in [0.1, 0.4] {
        let a = analytic.evaluate(tau1, 0.0).unwrap();
        let m = mc.evaluate(tau1, 0.0).unwrap();
        assert!((a - m).abs() < 0.05 * a, "tau1 {tau1}: {a} vs {m}");
    }
}
