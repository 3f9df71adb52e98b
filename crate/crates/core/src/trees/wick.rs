use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WickKind {
    /// φ▷: multiplication by an evaluation.
    Creation,
    /// φ◁: derivative along a propagated direction.
    Annihilation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WickSymbol {
    pub kind: WickKind,
    pub label: String,
}

impl WickSymbol {
    pub fn create(label: &str) -> Self {
        WickSymbol { kind: WickKind::Creation, label: label.into() }
    }

    pub fn annihilate(label: &str) -> Self {
        WickSymbol { kind: WickKind::Annihilation, label: label.into() }
    }
}

pub type WickWord = Vec<WickSymbol>;

/// G(y − x) from contracting φ◁_y with φ▷_x.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub annihilation: String,
    pub creation: String,
}

/// coefficient · Π G-pairings · normal-ordered residue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickTerm {
    pub coefficient: i64,
    pub pairings: Vec<Pairing>,
    pub residue: WickWord,
}

/// Normal-orders a word using φ◁_y φ▷_x = φ▷_x φ◁_y + G(y − x), combining like terms.
pub fn wick_reduce(word: &[WickSymbol]) -> Vec<WickTerm> {
    let mut done: BTreeMap<(Vec<Pairing>, WickWord), i64> = BTreeMap::new();
    let mut stack: Vec<(Vec<Pairing>, WickWord)> = vec![(Vec::new(), word.to_vec())];
    while let Some((pairs, w)) = stack.pop() {
        let inversion = w
            .windows(2)
            .position(|p| p[0].kind == WickKind::Annihilation && p[1].kind == WickKind::Creation);
        match inversion {
            None => {
                let mut key = pairs;
                key.sort();
                *done.entry((key, w)).or_insert(0) += 1;
            }
            Some(i) => {
                let mut swapped = w.clone();
                swapped.swap(i, i + 1);
                let mut contracted = w.clone();
                let cre = contracted.remove(i + 1);
                let ann = contracted.remove(i);
                let mut with = pairs.clone();
                with.push(Pairing { annihilation: ann.label, creation: cre.label });
                stack.push((pairs, swapped));
                stack.push((with, contracted));
            }
        }
    }
    done.into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|((pairings, residue), coefficient)| WickTerm { coefficient, pairings, residue })
        .collect()
}

/// ⟨0|word|0⟩: the fully contracted terms.
pub fn vacuum_expectation(word: &[WickSymbol]) -> Vec<WickTerm> {
    let creations = word.iter().filter(|s| s.kind == WickKind::Creation).count();
    if 2 * creations != word.len() {
        return Vec::new();
    }
    wick_reduce(word).into_iter().filter(|t| t.residue.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair() {
        let w = vec![WickSymbol::annihilate("y"), WickSymbol::create("x")];
        let v = vacuum_expectation(&w);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].coefficient, 1);
        assert_eq!(v[0].pairings, vec![Pairing { annihilation: "y".into(), creation: "x".into() }]);
    }

    #[test]
    fn two_on_a_square() {
        let w = vec![
            WickSymbol::annihilate("1"),
            WickSymbol::annihilate("2"),
            WickSymbol::create("z"),
            WickSymbol::create("z"),
        ];
        let v = vacuum_expectation(&w);
        // G_{1z}G_{2z} + G_{2z}G_{1z}
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].coefficient, 2);
    }

    #[test]
    fn already_normal() {
        let w = vec![WickSymbol::create("x"), WickSymbol::annihilate("y")];
        let r = wick_reduce(&w);
        assert_eq!(r.len(), 1);
        assert!(r[0].pairings.is_empty());
        assert!(vacuum_expectation(&w).is_empty());
    }
}
