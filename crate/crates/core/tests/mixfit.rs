use effcap::channels::{composite_pdf, mean_snr, sample_composite, scale_to_mean};
use effcap::grid::{canonical_channel, parameter_grid};
use effcap::mixfit::{
    canonical_grid, fit_mg, fit_mog, pdf_mse, select_order, Family, MixtureModel, MogFitOptions,
    SelectOptions,
};

#[test]
fn mg_mass_is_one_across_grid() {
    for p in parameter_grid().unwrap() {
        for s in [5, 20, 50] {
            let m = fit_mg(&p, s).unwrap();
            assert!(
                (m.total_mass() - 1.0).abs() < 1e-12,
                "{p:?} S={s}: {}",
                m.total_mass()
            );
        }
    }
}

#[test]
fn mg_mean_matches_channel_mean() {
    let p = canonical_channel();
    for s in [5, 20, 50] {
        let m = fit_mg(&p, s).unwrap();
        let want = mean_snr(&p).unwrap();
        assert!(
            (m.mean() - want).abs() < 1e-4 * want,
            "{p:?}: {} vs {want}",
            m.mean()
        );
    }
}

#[test]
fn mg_canonical_pointwise() {
    let p = canonical_channel();
    let m = fit_mg(&p, 50).unwrap();
    let exact = composite_pdf(1.0, &p).unwrap();
    assert!(
        (m.pdf(1.0).unwrap() - exact).abs() < 1e-4,
        "{} vs {exact}",
        m.pdf(1.0).unwrap()
    );
}

#[test]
fn mg_error_shrinks_with_order() {
    let p = scale_to_mean(&canonical_channel(), 1.0).unwrap();
    let grid = canonical_grid(1.0);
    let mse = |s: usize| {
        let m = fit_mg(&p, s).unwrap();
        pdf_mse(
            |g| m.pdf(g).unwrap(),
            |g| composite_pdf(g, &p).unwrap(),
            &grid,
        )
        .unwrap()
    };
    let (a, b, c) = (mse(10), mse(30), mse(90));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn mog_fit_is_deterministic_and_normalised() {
    let p = canonical_channel();
    let samples = sample_composite(&p, 50_000, 3).unwrap();
    let opts = MogFitOptions {
        restarts: 3,
        ..MogFitOptions::default()
    };
    let a = fit_mog(&samples, 4, &opts).unwrap();
    let b = fit_mog(&samples, 4, &opts).unwrap();
    assert_eq!(a, b);
    let total: f64 = a.model.comps.iter().map(|c| c.rho).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(a
        .model
        .comps
        .windows(2)
        .all(|w| w[0].upsilon <= w[1].upsilon));
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    assert_eq!(a.model.gamma_bar, mean);
}

#[test]
fn mog_tracks_exact_density_in_bulk() {
    let p = scale_to_mean(&canonical_channel(), 1.0).unwrap();
    let samples = sample_composite(&p, 200_000, 5).unwrap();
    let fit = fit_mog(&samples, 6, &MogFitOptions::default()).unwrap();
    for &g in &[0.3, 0.8, 1.5, 3.0] {
        let exact = composite_pdf(g, &p).unwrap();
        let approx = fit.model.pdf(g).unwrap();
        assert!(
            (approx - exact).abs() < 0.05 * exact + 1e-3,
            "γ={g}: {approx} vs {exact}"
        );
    }
}

#[test]
fn select_order_stops_at_first_hit() {
    let p = canonical_channel();
    let sel = select_order(&p, Family::Mg, 1e-3, &SelectOptions::default()).unwrap();
    assert!(sel.met_target);
    assert_eq!(sel.trace.len(), sel.order);
    assert!(sel.trace[..sel.order - 1].iter().all(|t| t.1 > 1e-3));
    assert!(sel.mse <= 1e-3);
}

#[test]
fn select_order_reports_unmet_target() {
    let p = canonical_channel();
    let opts = SelectOptions {
        max_order: Some(6),
        ..SelectOptions::default()
    };
    let sel = select_order(&p, Family::Mg, 1e-30, &opts).unwrap();
    assert!(!sel.met_target);
    assert_eq!(sel.trace.len(), 6);
    let best = sel.trace.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    assert_eq!(sel.mse, best);
    assert!(select_order(&p, Family::Mg, 0.0, &opts).is_err());
}

#[test]
fn model_json_round_trip() {
    let mg = MixtureModel::Mg(fit_mg(&canonical_channel(), 7).unwrap());
    let text = mg.to_json();
    assert!(text.starts_with(r#"{"type":"mg""#), "{text}");
    assert_eq!(MixtureModel::from_json(&text).unwrap(), mg);

    let samples = sample_composite(&canonical_channel(), 20_000, 1).unwrap();
    let opts = MogFitOptions {
        restarts: 2,
        ..MogFitOptions::default()
    };
    let mog = MixtureModel::Mog(fit_mog(&samples, 3, &opts).unwrap().model);
    let text = mog.to_json();
    assert!(text.starts_with(r#"{"type":"mog""#), "{text}");
    assert_eq!(MixtureModel::from_json(&text).unwrap(), mog);
    assert!(MixtureModel::from_json(r#"{"type":"mg","terms":[]}"#).is_err());
}
