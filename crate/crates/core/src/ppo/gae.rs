//! Generalized advantage estimation.

/// Advantages and value targets for one rollout. `dones[t]` marks the last
/// step of an episode; `last_value` bootstraps the state after the batch.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "rollout arrays must be aligned");
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let keep = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * keep - values[t];
        next_adv = delta + gamma * lambda * keep * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_terminal_step() {
        let (a, r) = gae(&[1.0], &[0.0], &[true], 5.0, 0.99, 0.95);
        assert_eq!((a[0], r[0]), (1.0, 1.0));
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let rewards = [0.5, -1.0, 2.0];
        let values = [0.1, 0.3, -0.2];
        let dones = [false, true, false];
        let (a, _) = gae(&rewards, &values, &dones, 0.7, 0.9, 0.0);
        assert_eq!(a[0], 0.5 + 0.9 * 0.3 - 0.1);
        assert_eq!(a[1], -1.0 - 0.3);
        assert_eq!(a[2], 2.0 + 0.9 * 0.7 + 0.2);
    }

    #[test]
    fn matches_direct_sum() {
        let mut r = crate::rng::stream(8, crate::rng::Stream::Policy, 0);
        let n = 50;
        let rewards: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| r.random::<f64>() < 0.1).collect();
        let last = 0.37;
        let (g, l) = (0.99, 0.95);
        let (adv, ret) = gae(&rewards, &values, &dones, last, g, l);
        let value_at = |t: usize| if t == n { last } else { values[t] };
        let delta = |t: usize| rewards[t] + g * value_at(t + 1) * if dones[t] { 0.0 } else { 1.0 } - values[t];
        for t in 0..n {
            let mut sum = 0.0;
            let mut w = 1.0;
            for k in t..n {
                sum += w * delta(k);
                if dones[k] {
                    break;
                }
                w *= g * l;
            }
            assert!((sum - adv[t]).abs() < 1e-10);
            assert!((ret[t] - adv[t] - values[t]).abs() < 1e-15);
        }
    }
}
