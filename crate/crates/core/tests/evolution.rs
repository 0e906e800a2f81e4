use proptest::prelude::*;
use qhel::evolution::{evolve, step_induction, theorem2_rhs, EvolutionParams};
use qhel::fields::{abc_field, random_powerlaw};
use qhel::invariants::{chi2_estimate, Seeding};
use qhel::spectral::SpectralField;
use qhel::tracer::SpectralLineField;
use qhel::Error;

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    assert_eq!(a.mode_count(), b.mode_count());
    a.modes()
        .iter()
        .zip(b.modes())
        .map(|(m, n)| (m.plus - n.plus).norm().max((m.minus - n.minus).norm()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(32) })]

    #[test]
    fn integrating_factor_is_exact_for_any_dt(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..2.0,
        alpha in -0.5f64..0.5, eta in 0.0f64..0.3, dt in 0.01f64..3.0,
    ) {
        let f = abc_field(a, b, c).unwrap();
        let p = EvolutionParams::new(alpha, eta, dt, dt);
        let out = step_induction(&f, &p).unwrap();
        let want = f.scaled((dt * (alpha - eta)).exp());
        prop_assert!(max_diff(&out, &want) <= 1e-14 * (1.0 + a.abs() + b.abs() + c));
    }
}

#[test]
fn mirror_parity_with_advection() {
    let b = random_powerlaw(5.0 / 3.0, 1.0, 0.3, 4, 2).unwrap();
    let v = abc_field(0.4, -0.2, 0.3).unwrap();
    let mut p = EvolutionParams::new(0.2, 0.05, 0.01, 0.05);
    p.velocity = Some(v.clone());
    p.kmax = Some(5);
    let fwd = evolve(&b, &p, 5).unwrap().snapshots.pop().unwrap().1;
    let mut q = EvolutionParams {
        alpha: -p.alpha,
        ..p.clone()
    };
    q.velocity = Some(v.mirrored());
    let mirrored = evolve(&b.mirrored(), &q, 5)
        .unwrap()
        .snapshots
        .pop()
        .unwrap()
        .1;
    assert!(max_diff(&mirrored, &fwd.mirrored()) < 1e-13 * b.energy().sqrt());
}

#[test]
fn ideal_run_conserves_helicity_and_quadratic_helicity() {
    let b = random_powerlaw(5.0 / 3.0, 1.0, 0.2, 4, 4).unwrap();
    let mut p = EvolutionParams::new(0.0, 0.0, 0.005, 0.05);
    p.velocity = Some(abc_field(0.3, 0.5, -0.2).unwrap());
    p.kmax = Some(5);
    let ev = evolve(&b, &p, 10).unwrap();
    let (first, last) = (&ev.series[0], ev.series.last().unwrap());
    assert!((last.helicity - first.helicity).abs() < 1e-8 * first.energy);
    let est = |f: &SpectralField| {
        chi2_estimate(
            &SpectralLineField::new(f),
            64,
            &[20.0, 40.0],
            8,
            Seeding::Stratified,
        )
        .unwrap()
    };
    let (e0, e1) = (
        est(&ev.snapshots[0].1),
        est(&ev.snapshots.last().unwrap().1),
    );
    let sigma = e0.combined().hypot(e1.combined());
    assert!(
        (e0.value - e1.value).abs() <= 2.0 * sigma,
        "{} vs {} ± {sigma}",
        e0.value,
        e1.value
    );
}

#[test]
fn quadratic_helicity_rate_stays_below_bound() {
    let b = random_powerlaw(5.0 / 3.0, 1.0, 0.3, 4, 6).unwrap();
    let p = EvolutionParams::new(0.3, 0.02, 0.1, 0.4);
    let ev = evolve(&b, &p, 2).unwrap();
    let est: Vec<_> = ev
        .snapshots
        .iter()
        .map(|(_, f)| {
            chi2_estimate(
                &SpectralLineField::new(f),
                64,
                &[20.0, 40.0],
                2,
                Seeding::Stratified,
            )
            .unwrap()
        })
        .collect();
    for i in 1..est.len() {
        let dt = ev.snapshots[i].0 - ev.snapshots[i - 1].0;
        let rate = (est[i].value.sqrt() - est[i - 1].value.sqrt()).abs() / dt;
        let sigma = (est[i].combined() / est[i].value.sqrt()
            + est[i - 1].combined() / est[i - 1].value.sqrt())
            / (2.0 * dt);
        let bound = ev.series[i].theorem2_rhs.min(ev.series[i - 1].theorem2_rhs);
        assert!(
            rate <= bound + 2.0 * sigma,
            "step {i}: {rate} > {bound} + 2·{sigma}"
        );
    }
    assert!(ev.series.iter().all(|r| r.theorem2_rhs
        == theorem2_rhs(&ev.snapshots.iter().find(|s| s.0 == r.t).unwrap().1, &p).unwrap()));
}

#[test]
fn bad_parameters_rejected() {
    let f = abc_field(1.0, 1.0, 1.0).unwrap();
    assert!(matches!(
        step_induction(&f, &EvolutionParams::new(0.0, -1.0, 0.1, 0.1)),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        evolve(&f, &EvolutionParams::new(0.0, 0.1, 0.3, 1.0), 1),
        Err(Error::InvalidParameter(_))
    ));
    let mut p = EvolutionParams::new(0.0, 0.0, 0.1, 0.1);
    p.velocity = Some(f.clone());
    p.kmax = Some(0);
    assert!(step_induction(&f, &p).is_err());
}
