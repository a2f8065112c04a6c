use crate::scalar::Scalar;

/// One-step TD residual `r + γ·v_next − v_old`. Pass `v_next = 0` on terminal transitions.
pub fn td_residual<T: Scalar>(r: T, v_next: T, v_old: T, gamma: T) -> T {
    r + gamma * v_next - v_old
}

/// GAE over a single segment by backward recursion `Â_t = δ_t + γλ·Â_{t+1}`.
pub fn gae<T: Scalar>(deltas: &[T], gamma: T, lambda: T) -> Vec<T> {
    let ends = vec![false; deltas.len()];
    gae_segmented(deltas, &ends, gamma, lambda)
}

/// GAE where `ends[t]` marks the last step of a segment; the recursion restarts after it.
pub fn gae_segmented<T: Scalar>(deltas: &[T], ends: &[bool], gamma: T, lambda: T) -> Vec<T> {
    assert_eq!(deltas.len(), ends.len(), "deltas and segment flags must align");
    let decay = gamma * lambda;
    let mut out = vec![T::zero(); deltas.len()];
    let mut running = T::zero();
    for t in (0..deltas.len()).rev() {
        if ends[t] {
            running = T::zero();
        }
        running = deltas[t] + decay * running;
        out[t] = running;
    }
    out
}

/// Discounted rewards-to-go per segment. `tail[t]` is added (discounted) after a segment end at `t`,
/// zero for terminals and a bootstrap value for truncations.
pub fn rewards_to_go<T: Scalar>(rewards: &[T], ends: &[bool], tail: &[T], gamma: T) -> Vec<T> {
    assert!(rewards.len() == ends.len() && ends.len() == tail.len(), "inputs must align");
    let mut out = vec![T::zero(); rewards.len()];
    let mut running = T::zero();
    for t in (0..rewards.len()).rev() {
        if ends[t] {
            running = tail[t];
        }
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn td_examples() {
        assert!((td_residual(1.0f64, 2.0, 1.5, 0.99) - 1.48).abs() < 1e-12);
        assert_eq!(td_residual(0.7, 123.0, 0.2, 0.0), 0.7 - 0.2);
    }

    #[test]
    fn gae_examples() {
        assert_eq!(gae(&[0.3, -1.0, 2.0], 0.99, 0.0), vec![0.3, -1.0, 2.0]);
        assert_eq!(gae(&[1.0, 1.0, 1.0], 1.0, 1.0), vec![3.0, 2.0, 1.0]);
        let a: Vec<f64> = gae(&[0.5, -0.2, 0.1], 0.99, 0.95);
        assert!((a[2] - 0.1).abs() < 1e-15);
        assert!((a[1] + 0.10595).abs() < 1e-12);
        // direct double sum
        let c: f64 = 0.99 * 0.95;
        let direct0 = 0.5 + c * -0.2 + c * c * 0.1;
        assert!((a[0] - direct0).abs() < 1e-12);
        assert!((a[0] - 0.40035).abs() < 1e-4);
    }

    #[test]
    fn segments_do_not_leak() {
        let a = gae_segmented(&[1.0, 1.0, 1.0, 1.0], &[false, true, false, true], 1.0, 1.0);
        assert_eq!(a, vec![2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn rewards_to_go_with_bootstrap() {
        let g = rewards_to_go(&[1.0, 1.0, 1.0], &[false, false, true], &[0.0, 0.0, 10.0], 0.5);
        assert_eq!(g, vec![1.0 + 0.5 * (1.0 + 0.5 * (1.0 + 5.0)), 1.0 + 0.5 * 6.0, 6.0]);
        let f32s = rewards_to_go(&[1.0f32, 2.0], &[false, true], &[0.0, 0.0], 1.0);
        assert_eq!(f32s, vec![3.0, 2.0]);
    }
}
