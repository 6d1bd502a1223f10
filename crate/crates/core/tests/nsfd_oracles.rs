mod common;

use common::interior_point;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sirsd_koopman::model::{EpidemicParams, StateVec};
use sirsd_koopman::nsfd::{
    denominator_phi, nsfd_step, simulate_nsfd, simulate_reference, MortalityUpdate, NsfdConfig,
    Trajectory,
};
use sirsd_koopman::scenarios::Preset;

const REF_DT: f64 = 1e-3;

fn reference(p: Preset, t_end: f64) -> Trajectory {
    let s = p.scenario();
    let cfg = NsfdConfig::new(REF_DT, t_end, s.initial_state());
    simulate_reference(&cfg, &s.params).unwrap()
}

fn nsfd_error(p: Preset, dt: f64, reference: &Trajectory) -> f64 {
    let s = p.scenario();
    let cfg = NsfdConfig::new(dt, s.t_end, s.initial_state());
    let tr = simulate_nsfd(&cfg, &s.params).unwrap();
    let stride = (dt / REF_DT).round() as usize;
    tr.sup_distance(&reference.subsample(stride)).unwrap()
}

#[test]
fn reference_self_convergence() {
    let s = Preset::Covid.scenario();
    let coarse =
        simulate_reference(&NsfdConfig::new(1e-3, 200.0, s.initial_state()), &s.params).unwrap();
    let fine =
        simulate_reference(&NsfdConfig::new(5e-4, 200.0, s.initial_state()), &s.params).unwrap();
    let d = coarse.sup_distance(&fine.subsample(2)).unwrap();
    assert!(d <= 1e-8, "self-convergence distance {d:e}");
    for x in &fine.states {
        assert!((x.sum() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn influenza_nsfd_close_to_reference() {
    let r = reference(Preset::Influenza, 200.0);
    let e = nsfd_error(Preset::Influenza, 0.1, &r);
    assert!(e <= 5e-2, "sup-norm {e}");
}

#[test]
fn halving_dt_halves_the_error() {
    for p in [
        Preset::Covid,
        Preset::Influenza,
        Preset::Ebola,
        Preset::Measles,
    ] {
        let r = reference(p, 200.0);
        let e1 = nsfd_error(p, 0.1, &r);
        let e2 = nsfd_error(p, 0.05, &r);
        let ratio = e1 / e2;
        assert!((1.5..=2.5).contains(&ratio), "{}: ratio {ratio}", p.name());
        let order = ratio.log2();
        assert!(order >= 0.8, "{}: order {order}", p.name());
    }
}

#[test]
fn covid_shape() {
    let s = Preset::Covid.scenario();
    let tr = simulate_nsfd(&s.nsfd_config(), &s.params).unwrap();
    assert_eq!(tr.len(), 2001);
    let i: Vec<f64> = tr.states.iter().map(|x| x.i).collect();
    let peaks: Vec<usize> = (1..i.len() - 1)
        .filter(|&k| i[k] > i[k - 1] && i[k] >= i[k + 1])
        .collect();
    // Waning immunity produces a small second wave late in the run; the
    // outbreak itself is the single dominant interior maximum.
    let (kmax, imax) = i
        .iter()
        .enumerate()
        .fold((0, 0.0), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
    assert!(kmax > 0 && kmax < i.len() - 1);
    assert_eq!(peaks[0], kmax);
    assert!(tr.time(kmax) < 20.0);
    for &k in &peaks[1..] {
        assert!(
            i[k] < 0.2 * imax,
            "secondary peak {} at t={}",
            i[k],
            tr.time(k)
        );
    }
    let trough = i[kmax..].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(trough < 0.05 * imax);
}

#[test]
fn presets_positive_conservative_and_monotone_in_d() {
    for p in Preset::ALL {
        let s = p.scenario();
        let tr = simulate_nsfd(&s.nsfd_config(), &s.params).unwrap();
        for w in tr.states.windows(2) {
            assert!(w[1].d >= w[0].d - 1e-12, "{}: d decreased", p.name());
        }
        assert_eq!(tr.len(), 2001);
        for x in &tr.states[1..] {
            assert!(x.s >= 0.0 && x.i >= 0.0 && x.r >= 0.0 && x.d >= 0.0);
            // Closure holds bitwise; the float sum is within a few ulps of 1.
            assert_eq!(x.d, 1.0 - x.s - x.i - x.r, "{}: {x:?}", p.name());
            assert!((x.s + x.i + x.r + x.d - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}

#[test]
fn random_initial_states_stay_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 0..50 {
        let x0 = interior_point(&mut rng, 0.0);
        for p in Preset::ALL {
            let params = p.params();
            let mut x = x0;
            for k in 0..2000 {
                x = nsfd_step(&x, &params, 0.1).unwrap();
                assert!(
                    x.s >= 0.0 && x.i >= 0.0 && x.r >= 0.0,
                    "case {n} step {k}: {x:?}"
                );
            }
        }
    }
}

#[test]
fn waning_can_push_d_below_zero_from_a_death_free_start() {
    // The s-update reads r at the old level while r' drains omega*r', so
    // d' - d = phi*(mu*i' + omega*(r' - r)) can be negative. simulate_nsfd
    // reports the first state that leaves the simplex.
    let p = EpidemicParams::new(0.1, 0.05, 1e-4, 0.5).unwrap();
    let x0 = StateVec::new(0.1, 0.01, 0.89, 0.0);
    let y = nsfd_step(&x0, &p, 0.1).unwrap();
    assert!(y.d < 0.0);
    let cfg = NsfdConfig::new(0.1, 10.0, x0);
    match simulate_nsfd(&cfg, &p) {
        Err(sirsd_koopman::Error::Simplex { step: Some(1), .. }) => {}
        other => panic!("expected a simplex error at step 1, got {other:?}"),
    }
}

#[test]
fn differential_mortality_flag_agrees_when_omega_is_zero() {
    let s = Preset::Ebola.scenario();
    let mut cfg = s.nsfd_config();
    let closure = simulate_nsfd(&cfg, &s.params).unwrap();
    cfg.mortality = MortalityUpdate::Differential;
    let diff = simulate_nsfd(&cfg, &s.params).unwrap();
    assert!(closure.sup_distance(&diff).unwrap() < 1e-12);
}

#[test]
fn eta_changes_phi_but_keeps_positivity() {
    let s = Preset::Measles.scenario();
    let mut cfg = s.nsfd_config();
    cfg.eta = 0.5;
    let tr = simulate_nsfd(&cfg, &s.params).unwrap();
    assert!(tr.states.iter().all(|x| x.i >= 0.0));
    assert!(denominator_phi(0.1, 0.5) > 0.1);
}

proptest! {
    #[test]
    fn step_is_positive_for_any_phi(
        a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64,
        phi in 1e-4..50.0f64,
        beta in 0.01..5.0f64, gamma in 0.01..1.0f64, mu in 1e-4..1.0f64, omega in 0.0..1.0f64,
    ) {
        let t = a + b + c + 1.0;
        let x = StateVec::new(a / t, b / t, c / t, 1.0 - (a + b + c) / t);
        let p = EpidemicParams::new(beta, gamma, mu, omega).unwrap();
        let y = nsfd_step(&x, &p, phi).unwrap();
        prop_assert!(y.s >= 0.0 && y.i >= 0.0 && y.r >= 0.0);
        prop_assert!((y.sum() - 1.0).abs() <= 1e-15);
    }
}
