use delay_noether::trajectory::{delayed_args, effective_breakpoints, PiecewiseTrajectory, Side};
use proptest::prelude::*;

fn breakpoints() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..6).prop_map(|gaps| {
        let mut t = -1.0;
        let mut out = vec![t];
        for g in gaps {
            t += g;
            out.push(t);
        }
        out
    })
}

fn smooth_jets(t: f64) -> Vec<Vec<f64>> {
    vec![
        vec![t.sin(), (0.5 * t).exp()],
        vec![t.cos(), 0.5 * (0.5 * t).exp()],
        vec![-t.sin(), 0.25 * (0.5 * t).exp()],
    ]
}

proptest! {
    #[test]
    fn hermite_interpolants_are_smooth_at_breakpoints(breaks in breakpoints()) {
        let q = PiecewiseTrajectory::hermite(3, &breaks, 2, smooth_jets).unwrap();
        for &b in &breaks[1..breaks.len() - 1] {
            for k in 0..3 {
                let left = q.eval_derivative(b, k, Side::Left).unwrap();
                let right = q.eval_derivative(b, k, Side::Right).unwrap();
                for (l, r) in left.iter().zip(&right) {
                    prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()), "k = {k} at {b}: {l} vs {r}");
                }
            }
        }
    }

    #[test]
    fn piecewise_linear_interpolates(values in prop::collection::vec(-5.0f64..5.0, 2..8)) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 0.5).collect();
        let nodes: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let q = PiecewiseTrajectory::piecewise_linear(1, &times, &nodes).unwrap();
        for (t, v) in times.iter().zip(&values) {
            for side in [Side::Left, Side::Right] {
                if (side == Side::Left && *t == times[0]) || (side == Side::Right && *t == *times.last().unwrap()) {
                    continue;
                }
                prop_assert!((q.eval_derivative(*t, 0, side).unwrap()[0] - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delayed_arguments_agree_with_evaluation(breaks in breakpoints(), frac in 0.0f64..1.0, tau_frac in 0.05f64..0.95) {
        let q = PiecewiseTrajectory::hermite(2, &breaks, 2, smooth_jets).unwrap();
        let span = q.end() - q.start();
        let tau = tau_frac * span;
        let t = q.start() + tau + frac * (span - tau);
        let args = delayed_args(&q, t, tau, 2, Side::Right).unwrap();
        prop_assert_eq!(args.flatten().len(), 1 + 2 * 2 * 3);
        for k in 0..=2 {
            let side = if t >= q.end() { Side::Left } else { Side::Right };
            prop_assert_eq!(&args.current[k], &q.eval_derivative(t, k, side).unwrap());
            prop_assert_eq!(&args.delayed[k], &q.eval_derivative(t - tau, k, Side::Right).unwrap());
        }
    }

    #[test]
    fn effective_breakpoints_are_idempotent(breaks in breakpoints(), tau_frac in 0.05f64..0.95, lo in 0.0f64..0.5, hi in 0.5f64..1.0) {
        let q = PiecewiseTrajectory::piecewise_linear(
            1,
            &breaks,
            &breaks.iter().map(|b| vec![b.sin()]).collect::<Vec<_>>(),
        ).unwrap();
        let span = q.end() - q.start();
        let tau = tau_frac * span;
        let window = (q.start() + tau + lo * (span - tau), q.start() + tau + hi * (span - tau));
        let eff = effective_breakpoints(&q, tau, window);
        prop_assert!(eff.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(eff[0], window.0);
        prop_assert_eq!(*eff.last().unwrap(), window.1);
        prop_assert!(eff.iter().all(|&b| b >= window.0 && b <= window.1));
        let again = effective_breakpoints(&q, tau, window);
        prop_assert_eq!(&eff, &again);
        let inner = (eff[0], eff[eff.len() - 1]);
        prop_assert_eq!(effective_breakpoints(&q, tau, inner), eff);
    }
}
