use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsma_core::sac::losses::{actor_loss, critic_loss, temperature_loss};
use rsma_core::sac::nn::{soft_update, Matrix, Mlp};
use rsma_core::sac::{action_to_allocation, reward, RawAction};
use rsma_core::{full_report, ChannelParams, Scenario, SicModel};

const STATE: usize = 6;
const ACTION: usize = 4;
const REL_TOL: f64 = 1e-4;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

/// One hidden unit whose pre-activation stays positive on the test inputs,
/// so the ReLU kink never sits inside a finite-difference stencil.
fn one_unit_net(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Mlp {
    let mut params: Vec<f64> = (0..inputs).map(|_| rng.random_range(-0.3..0.3)).collect();
    params.push(3.0);
    params.extend((0..outputs).map(|_| rng.random_range(-0.5..0.5)));
    params.extend((0..outputs).map(|_| rng.random_range(-0.5..0.5)));
    Mlp::from_params(&[inputs, 1, outputs], params).unwrap()
}

fn assert_close(analytic: &[f64], f: impl Fn(usize, f64) -> f64) {
    let h = 1e-6;
    for (i, &g) in analytic.iter().enumerate() {
        let fd = (f(i, h) - f(i, -h)) / (2.0 * h);
        let err = (g - fd).abs();
        assert!(err <= REL_TOL * fd.abs().max(1e-6), "param {i}: analytic {g}, finite difference {fd}");
    }
}

fn perturbed(net: &Mlp, i: usize, h: f64) -> Mlp {
    let mut n = net.clone();
    n.params_mut()[i] += h;
    n
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let critic = one_unit_net(&mut rng, STATE + ACTION, 1);
    let states = random_matrix(&mut rng, 5, STATE, 1.0);
    let actions = random_matrix(&mut rng, 5, ACTION, 1.0);
    let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (_, grad) = critic_loss(&critic, &states, &actions, &y);
    assert_close(&grad, |i, h| critic_loss(&perturbed(&critic, i, h), &states, &actions, &y).0);
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let actor = one_unit_net(&mut rng, STATE, 2 * ACTION);
    let q1 = one_unit_net(&mut rng, STATE + ACTION, 1);
    let q2 = one_unit_net(&mut rng, STATE + ACTION, 1);
    let states = random_matrix(&mut rng, 5, STATE, 1.0);
    let noise = random_matrix(&mut rng, 5, ACTION, 1.5);
    for alpha in [0.0, 0.2, 1.3] {
        let out = actor_loss(&actor, [&q1, &q2], &states, &noise, alpha);
        assert_close(&out.grad, |i, h| actor_loss(&perturbed(&actor, i, h), [&q1, &q2], &states, &noise, alpha).loss);
    }
}

#[test]
fn temperature_gradient_matches_finite_differences() {
    let log_probs = [-3.1, -4.7, -2.2, 0.4];
    for log_alpha in [-3.0, 0.2f64.ln(), 0.5] {
        let (_, g) = temperature_loss(log_alpha, &log_probs, -4.0);
        assert_close(&[g], |_, h| temperature_loss(log_alpha + h, &log_probs, -4.0).0);
    }
}

#[test]
fn soft_update_decays_geometrically() {
    let theta = vec![1.0, -2.0, 0.5];
    let mut bar = vec![0.0, 0.0, 0.0];
    let tau = 0.5;
    // With τ = 1/2 every step halves the gap exactly in binary floating point.
    for n in 1..=30 {
        soft_update(&theta, &mut bar, tau).unwrap();
        for (t, b) in theta.iter().zip(&bar) {
            assert_eq!(t - b, t * (1.0 - tau).powi(n));
        }
    }
    let mut bar = vec![0.0; 3];
    let tau = 0.005;
    for _ in 0..200 {
        soft_update(&theta, &mut bar, tau).unwrap();
    }
    for (t, b) in theta.iter().zip(&bar) {
        let expected = t * (1.0 - tau).powi(200);
        assert!(((t - b) - expected).abs() <= 1e-14 * t.abs());
    }
}

proptest! {
    #[test]
    fn mapping_is_feasible_with_zero_tolerance(
        a in prop::array::uniform4(-1.0f64..=1.0),
        g1 in 0.1f64..50.0, lambda in 0.0f64..=1.0, p in 0.1f64..1000.0, tau_frac in 0.0f64..=1.0,
    ) {
        let s = Scenario::new(ChannelParams::new(g1, 1.0).unwrap(), SicModel::new(lambda).unwrap(), p, tau_frac * p, 0.3).unwrap();
        let alloc = action_to_allocation(&RawAction::new(a).unwrap(), &s);
        prop_assert!(alloc.p_c >= s.tau_sic());
        prop_assert!(alloc.p_c + alloc.p1 + alloc.p2 <= s.power_budget());
        prop_assert!(alloc.p1 >= 0.0 && alloc.p2 >= 0.0);
        prop_assert!((0.0..=1.0).contains(&alloc.kappa.value()));
        let rep = full_report(&s, &alloc).unwrap();
        let r = reward(&s, &alloc, 10.0).unwrap();
        let recomputed = rep.r1 + rep.r2 + rep.rc1.min(rep.rc2)
            - 10.0 * ((0.3 - rep.r1).max(0.0) + (0.3 - rep.r2).max(0.0));
        prop_assert!((r - recomputed).abs() <= 1e-12);
    }
}
