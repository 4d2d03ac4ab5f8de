//! Exact first-order decoding over an arbitrary label count.

/// Scores of a linear-chain model for one sequence of length `s` over `n`
/// labels. `emissions` is `s x n` row-major, `transitions[a * n + b]` scores
/// label `a` followed by `b`.
#[derive(Debug, Clone, Copy)]
pub struct ChainScores<'a> {
    pub n: usize,
    pub emissions: &'a [f64],
    pub transitions: &'a [f64],
    pub start: &'a [f64],
    pub stop: &'a [f64],
}

impl ChainScores<'_> {
    pub fn len(&self) -> usize {
        self.emissions.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self) {
        let n = self.n;
        assert!(n > 0, "at least one label");
        assert_eq!(self.emissions.len() % n, 0, "emission rows");
        assert_eq!(self.transitions.len(), n * n, "transition matrix");
        assert_eq!(self.start.len(), n, "start weights");
        assert_eq!(self.stop.len(), n, "stop weights");
    }

    /// Total score of a label path.
    pub fn path_score(&self, path: &[usize]) -> f64 {
        self.check();
        let n = self.n;
        assert_eq!(path.len(), self.len(), "path length");
        let Some((&first, _)) = path.split_first() else {
            return 0.0;
        };
        let mut score = self.start[first] + self.emissions[first];
        for (i, w) in path.windows(2).enumerate() {
            score += self.transitions[w[0] * n + w[1]] + self.emissions[(i + 1) * n + w[1]];
        }
        score + self.stop[path[path.len() - 1]]
    }

    /// Highest-scoring path and its score. Ties go to the lowest label index
    /// at every backpointer and at the final position.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        self.check();
        let n = self.n;
        let s = self.len();
        if s == 0 {
            return (Vec::new(), 0.0);
        }
        let mut delta: Vec<f64> = (0..n).map(|y| self.start[y] + self.emissions[y]).collect();
        let mut back = vec![0usize; s * n];
        let mut next = vec![0.0; n];
        for t in 1..s {
            for y in 0..n {
                let mut best = 0;
                let mut best_score = delta[0] + self.transitions[y];
                for p in 1..n {
                    let sc = delta[p] + self.transitions[p * n + y];
                    if sc > best_score {
                        best = p;
                        best_score = sc;
                    }
                }
                back[t * n + y] = best;
                next[y] = best_score + self.emissions[t * n + y];
            }
            std::mem::swap(&mut delta, &mut next);
        }
        let mut last = 0;
        let mut best_score = delta[0] + self.stop[0];
        for y in 1..n {
            let sc = delta[y] + self.stop[y];
            if sc > best_score {
                last = y;
                best_score = sc;
            }
        }
        let mut path = vec![0; s];
        path[s - 1] = last;
        for t in (1..s).rev() {
            path[t - 1] = back[t * n + path[t]];
        }
        (path, best_score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(c: &ChainScores) -> f64 {
        let (n, s) = (c.n, c.len());
        let mut best = f64::NEG_INFINITY;
        let mut path = vec![0; s];
        for code in 0..n.pow(s as u32) {
            let mut k = code;
            for slot in path.iter_mut() {
                *slot = k % n;
                k /= n;
            }
            best = best.max(c.path_score(&path));
        }
        best
    }

    fn random(rng: &mut ChaCha8Rng, n: usize, s: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut v = |k: usize| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        (v(s * n), v(n * n), v(n), v(n))
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..240 {
            let s = 1 + trial % 6;
            let (e, t, a, b) = random(&mut rng, 4, s);
            let c = ChainScores { n: 4, emissions: &e, transitions: &t, start: &a, stop: &b };
            let (path, score) = c.viterbi();
            let oracle = brute_force(&c);
            assert!((score - oracle).abs() < 1e-12, "trial {trial}");
            assert!((c.path_score(&path) - score).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_scores_pick_label_zero() {
        let z = vec![0.0; 5 * 8];
        let t = vec![0.0; 64];
        let c = ChainScores { n: 8, emissions: &z, transitions: &t, start: &[0.0; 8], stop: &[0.0; 8] };
        assert_eq!(c.viterbi().0, vec![0; 5]);
    }

    #[test]
    fn strong_diagonal_overrides_inconsistent_emissions() {
        // Three labels, two tokens. Emissions favour 0 then 2 (3 + 3), but
        // switching labels costs 100, so the best of the nine paths stays on
        // one label: (2, 2) scores 1 + 3 = 4, (0, 0) scores 3 + 0 = 3.
        let big = -100.0;
        let t = vec![0.0, big, big, big, 0.0, big, big, big, 0.0];
        let e = vec![3.0, 0.0, 1.0, 0.0, 0.0, 3.0];
        let c = ChainScores { n: 3, emissions: &e, transitions: &t, start: &[0.0; 3], stop: &[0.0; 3] };
        assert_eq!(c.viterbi(), (vec![2, 2], 4.0));
        // Without the penalty the per-token argmax wins.
        let free = vec![0.0; 9];
        let c = ChainScores { transitions: &free, ..c };
        assert_eq!(c.viterbi(), (vec![0, 2], 6.0));
    }

    #[test]
    fn constant_shift_keeps_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (e, t, a, b) = random(&mut rng, 4, 5);
            let shift = rng.gen_range(-50.0..50.0);
            let shifted: Vec<f64> = e.iter().map(|x| x + shift).collect();
            let c1 = ChainScores { n: 4, emissions: &e, transitions: &t, start: &a, stop: &b };
            let c2 = ChainScores { emissions: &shifted, ..c1 };
            assert_eq!(c1.viterbi().0, c2.viterbi().0);
        }
    }
}
