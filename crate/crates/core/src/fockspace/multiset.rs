//! Ranking of sorted index multisets in colexicographic order.
//!
//! A multiset i₀ ≤ i₁ ≤ … ≤ i_{p-1} over K symbols maps to the strictly
//! increasing j_k = i_k + k, ranked by the combinatorial number system.

#[derive(Debug, Clone)]
pub struct Multisets {
    k: usize,
    max_degree: usize,
    binom: Vec<Vec<u64>>,
}

impl Multisets {
    pub fn new(k: usize, max_degree: usize) -> Self {
        let rows = k + max_degree + 1;
        let mut binom = vec![vec![0u64; max_degree + 2]; rows];
        for a in 0..rows {
            binom[a][0] = 1;
            for b in 1..=(max_degree + 1).min(a) {
                binom[a][b] = binom[a - 1][b - 1].saturating_add(if b < a { binom[a - 1][b] } else { 0 });
            }
        }
        Multisets { k, max_degree, binom }
    }

    pub fn symbols(&self) -> usize {
        self.k
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of multisets of size p.
    pub fn count(&self, p: usize) -> usize {
        if p == 0 {
            return 1;
        }
        assert!(p <= self.max_degree, "degree {p} beyond table");
        self.binom[self.k + p - 1][p] as usize
    }

    /// Rank of a sorted multiset.
    #[inline]
    pub fn rank(&self, sorted: &[usize]) -> usize {
        let mut r = 0u64;
        for (pos, &i) in sorted.iter().enumerate() {
            r += self.binom[i + pos][pos + 1];
        }
        r as usize
    }

    /// First multiset of size p (all zeros).
    pub fn first(&self, p: usize) -> Vec<usize> {
        vec![0; p]
    }

    /// Advance to the next multiset in colex order; false after the last one.
    #[inline]
    pub fn advance(&self, s: &mut [usize]) -> bool {
        let p = s.len();
        for pos in 0..p {
            let can = if pos + 1 < p { s[pos] < s[pos + 1] } else { s[pos] + 1 < self.k };
            if can {
                s[pos] += 1;
                for x in s.iter_mut().take(pos) {
                    *x = 0;
                }
                return true;
            }
        }
        false
    }

    /// Unrank by linear search over colex order (used only in tests and I/O).
    pub fn unrank(&self, p: usize, rank: usize) -> Vec<usize> {
        let mut s = vec![0; p];
        let mut r = rank as u64;
        for pos in (0..p).rev() {
            let mut j = pos;
            while self.binom.get(j + 1).is_some_and(|row| row[pos + 1] <= r) {
                j += 1;
            }
            r -= self.binom[j][pos + 1];
            s[pos] = j - pos;
        }
        s
    }
}

/// p!/Π μ_i! for a sorted multiset.
pub fn multiplicity(sorted: &[usize]) -> f64 {
    let mut out = factorial(sorted.len());
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            out /= factorial(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        out /= factorial(run);
    }
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, b| a * b as f64)
}

/// Merge two sorted slices into `out`, returning the filled length.
#[inline]
pub fn merge_into(a: &[usize], b: &[usize], out: &mut [usize]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out[k] = a[i];
            i += 1;
        } else {
            out[k] = b[j];
            j += 1;
        }
        k += 1;
    }
    while i < a.len() {
        out[k] = a[i];
        i += 1;
        k += 1;
    }
    while j < b.len() {
        out[k] = b[j];
        j += 1;
        k += 1;
    }
    k
}
