//! A joint channel-access law over the clients of one channel.
//!
//! Both the fitted latent model and the exact enumeration oracle implement
//! [`AccessLaw`], so schedulers and blueprinting can run against either.

/// Joint access probabilities for clients on one channel.
pub trait AccessLaw {
    fn num_clients(&self) -> usize;

    /// P(every client in `access` can transmit and every client in `blocked` cannot).
    /// Clients in neither list are marginalized out.
    fn joint(&self, access: &[usize], blocked: &[usize]) -> f64;

    fn marginal(&self, client: usize) -> f64 {
        self.joint(&[client], &[])
    }

    /// `profile[m][k]` is P(member `m` of `group` accesses and exactly `k` of the
    /// other members access).
    fn access_profile(&self, group: &[usize]) -> Vec<Vec<f64>> {
        access_profile_by_enumeration(self, group)
    }
}

/// Reference implementation of [`AccessLaw::access_profile`]: sums `joint` over all
/// `2^|group|` access patterns.
pub fn access_profile_by_enumeration<L: AccessLaw + ?Sized>(law: &L, group: &[usize]) -> Vec<Vec<f64>> {
    let n = group.len();
    let mut profile = vec![vec![0.0; n.max(1)]; n];
    let mut access = Vec::with_capacity(n);
    let mut blocked = Vec::with_capacity(n);
    for pattern in 0u32..(1u32 << n) {
        access.clear();
        blocked.clear();
        for (k, &c) in group.iter().enumerate() {
            if pattern >> k & 1 == 1 {
                access.push(c);
            } else {
                blocked.push(c);
            }
        }
        if access.is_empty() {
            continue;
        }
        let p = law.joint(&access, &blocked);
        let others = access.len() - 1;
        for (k, row) in profile.iter_mut().enumerate() {
            if pattern >> k & 1 == 1 {
                row[others] += p;
            }
        }
    }
    profile
}

/// Expected SISO utility of over-scheduling `group` on one resource block:
/// the RB pays member `m`'s utility only when `m` is the sole client that can transmit.
pub fn exclusive_utility(profile: &[Vec<f64>], utility: &[f64]) -> f64 {
    profile.iter().zip(utility).map(|(row, u)| row[0] * u).sum()
}

/// Expected MU-MIMO utility of scheduling `group`: each accessing member earns its
/// utility scaled by `stream_scale(number of accessing members)`.
pub fn group_utility(profile: &[Vec<f64>], utility: &[f64], stream_scale: impl Fn(usize) -> f64) -> f64 {
    profile
        .iter()
        .zip(utility)
        .map(|(row, u)| {
            row.iter()
                .enumerate()
                .map(|(others, p)| p * stream_scale(others + 1))
                .sum::<f64>()
                * u
        })
        .sum()
}
