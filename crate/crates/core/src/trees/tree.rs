use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wick::{vacuum_expectation, WickSymbol};
use crate::dynamics::{NonlinearitySpec, Slot};
use crate::error::{Error, Result};
use crate::fockspace::multiset::factorial;
use crate::propagator::{sharp_lr, LinearSolution};
use crate::quad::gauss_legendre_on;
use crate::spectral::{CauchyPair, SpectralField};

/// A rooted subtree hanging below an edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subtree {
    /// A u-slot at time t.
    Leaf,
    /// Time-integrated vertex of monomial `monomial`; children in slot order.
    Node { monomial: usize, children: Vec<(Slot, Subtree)> },
}

impl Subtree {
    pub fn internal(&self) -> usize {
        match self {
            Subtree::Leaf => 0,
            Subtree::Node { children, .. } => 1 + children.iter().map(|(_, c)| c.internal()).sum::<usize>(),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Subtree::Leaf => 1,
            Subtree::Node { children, .. } => children.iter().map(|(_, c)| c.leaves()).sum(),
        }
    }

    /// Π over vertices and slot types of n!/Π mult!.
    pub fn symmetry(&self) -> f64 {
        match self {
            Subtree::Leaf => 1.0,
            Subtree::Node { children, .. } => {
                let mut groups: BTreeMap<Slot, BTreeMap<&Subtree, usize>> = BTreeMap::new();
                for (s, c) in children {
                    *groups.entry(*s).or_default().entry(c).or_default() += 1;
                }
                let mut w = 1.0;
                for g in groups.values() {
                    let n: usize = g.values().sum();
                    w *= factorial(n);
                    for &m in g.values() {
                        w /= factorial(m);
                    }
                }
                w * children.iter().map(|(_, c)| c.symmetry()).product::<f64>()
            }
        }
    }

    fn art(&self, v: &NonlinearitySpec, n: usize, prefix: &str, out: &mut String) {
        if let Subtree::Node { children, .. } = self {
            let len = children.len();
            for (i, (slot, c)) in children.iter().enumerate() {
                let last = i + 1 == len;
                out.push_str(prefix);
                out.push_str(if last { "└─ " } else { "├─ " });
                out.push_str(&slot.label());
                out.push_str(": ");
                out.push_str(&c.head(v, n));
                out.push('\n');
                let next = format!("{prefix}{}", if last { "   " } else { "│  " });
                c.art(v, n, &next, out);
            }
        }
    }

    fn head(&self, v: &NonlinearitySpec, n: usize) -> String {
        match self {
            Subtree::Leaf => "leaf [u]_t".into(),
            Subtree::Node { monomial, .. } => {
                let slots: Vec<String> = v.monomials[*monomial].slots(n).iter().map(Slot::label).collect();
                format!("V{monomial}({}) ∫dz", slots.join(","))
            }
        }
    }
}

/// A diagram for one homogeneous term of the series: root φ at time 0, one child edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedTree {
    pub child: Subtree,
    pub internal: usize,
    pub leaves: usize,
    pub symmetry: f64,
    /// (−1)^{internal}.
    pub sign: i32,
}

impl RootedTree {
    pub fn new(child: Subtree) -> Self {
        let internal = child.internal();
        RootedTree {
            leaves: child.leaves(),
            symmetry: child.symmetry(),
            sign: if internal.is_multiple_of(2) { 1 } else { -1 },
            internal,
            child,
        }
    }

    /// Text diagram, root at the top.
    pub fn art(&self, v: &NonlinearitySpec, n: usize) -> String {
        let mut s = format!("φ (x⁰ = 0)  sign {:+}  weight {}\n└─ {}\n", self.sign, self.symmetry, self.child.head(v, n));
        self.child.art(v, n, "   ", &mut s);
        s
    }
}

fn canonical(monomial: usize, mut children: Vec<(Slot, Subtree)>) -> Subtree {
    children.sort();
    Subtree::Node { monomial, children }
}

fn subtrees(order: usize, v: &NonlinearitySpec, n: usize, memo: &mut Vec<Option<Vec<Subtree>>>) -> Vec<Subtree> {
    if let Some(Some(s)) = memo.get(order) {
        return s.clone();
    }
    let out = if order == 0 {
        vec![Subtree::Leaf]
    } else {
        let mut set = BTreeSet::new();
        for (mi, m) in v.monomials.iter().enumerate() {
            if m.coefficient == 0.0 {
                continue;
            }
            let slots = m.slots(n);
            let q = slots.len();
            // compositions of order − 1 into q parts
            let mut parts = vec![0usize; q];
            loop {
                if parts.iter().sum::<usize>() == order - 1 {
                    let options: Vec<Vec<Subtree>> = parts.iter().map(|&k| subtrees(k, v, n, memo)).collect();
                    let mut idx = vec![0usize; q];
                    loop {
                        let children: Vec<(Slot, Subtree)> =
                            (0..q).map(|i| (slots[i], options[i][idx[i]].clone())).collect();
                        set.insert(canonical(mi, children));
                        let mut pos = 0;
                        while pos < q {
                            idx[pos] += 1;
                            if idx[pos] < options[pos].len() {
                                break;
                            }
                            idx[pos] = 0;
                            pos += 1;
                        }
                        if pos == q {
                            break;
                        }
                    }
                }
                let mut pos = 0;
                while pos < q {
                    parts[pos] += 1;
                    if parts[pos] < order {
                        break;
                    }
                    parts[pos] = 0;
                    pos += 1;
                }
                if pos == q {
                    break;
                }
            }
        }
        set.into_iter().collect()
    };
    if memo.len() <= order {
        memo.resize(order + 1, None);
    }
    memo[order] = Some(out.clone());
    out
}

/// All diagrams with `order` internal vertices.
pub fn enumerate_trees(order: usize, v: &NonlinearitySpec, n: usize) -> Vec<RootedTree> {
    if order > 0 && v.is_zero() {
        return Vec::new();
    }
    let mut memo = Vec::new();
    subtrees(order, v, n, &mut memo).into_iter().map(RootedTree::new).collect()
}

/// Weight of each u² diagram read off the fully contracted Wick word of the order-k term.
///
/// The word is ⟨0|φ◁_{y₁}⋯φ◁_{y_{k+1}} (φ▷_{z_k}φ▷_{z_k}φ◁_{z_k})⋯(φ▷_{z₁}φ▷_{z₁}φ◁_{z₁}) φ▷_x|0⟩
/// with the leaf labels divided out by (k+1)!. Every contraction is a tree whose
/// vertex times are a linear extension; the count per shape is divided by the
/// number of such extensions.
pub fn wick_weights(order: usize) -> BTreeMap<Subtree, f64> {
    let mut word = Vec::new();
    for j in 1..=order + 1 {
        word.push(WickSymbol::annihilate(&format!("y{j}")));
    }
    for j in (1..=order).rev() {
        let z = format!("z{j}");
        word.push(WickSymbol::create(&z));
        word.push(WickSymbol::create(&z));
        word.push(WickSymbol::annihilate(&z));
    }
    word.push(WickSymbol::create("x"));
    let mut counts: BTreeMap<Subtree, f64> = BTreeMap::new();
    for term in vacuum_expectation(&word) {
        let mut kids: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for p in &term.pairings {
            kids.entry(p.creation.clone()).or_default().push(p.annihilation.clone());
        }
        fn build(label: &str, kids: &BTreeMap<String, Vec<String>>) -> Subtree {
            if label.starts_with('y') {
                return Subtree::Leaf;
            }
            let children = kids
                .get(label)
                .map(|c| c.iter().map(|l| (Slot::U, build(l, kids))).collect())
                .unwrap_or_default();
            canonical(0, children)
        }
        let root_kids = &kids["x"];
        let shape = build(&root_kids[0], &kids);
        *counts.entry(shape).or_default() += term.coefficient as f64;
    }
    counts
        .into_iter()
        .map(|(s, c)| {
            let ext = linear_extensions(&s) as f64;
            (s, c / (factorial(order + 1) * ext))
        })
        .collect()
}

/// Number of vertex orderings with every parent before its children.
pub fn linear_extensions(s: &Subtree) -> usize {
    fn rec(s: &Subtree) -> (usize, f64) {
        match s {
            Subtree::Leaf => (0, 1.0),
            Subtree::Node { children, .. } => {
                let mut size = 0;
                let mut ways = 1.0;
                for (_, c) in children {
                    let (n, w) = rec(c);
                    // interleave n new vertices among size existing ones
                    ways *= w * factorial(size + n) / (factorial(size) * factorial(n));
                    size += n;
                }
                (size + 1, ways)
            }
        }
    }
    rec(s).1.round() as usize
}

/// Tree evaluation with the nodes → nodes+4 stability check.
#[derive(Debug, Clone, Serialize)]
pub struct TreeValue {
    pub value: f64,
    pub refined: f64,
    pub warning: Option<String>,
}

struct Evaluator<'a> {
    v: &'a NonlinearitySpec,
    leaf: LinearSolution,
    t: f64,
    nodes: usize,
    dealias: bool,
}

impl Evaluator<'_> {
    /// Unsigned Φ at time σ: Φ̂(σ) = ∫_σ^t sin(ε(z−σ))/ε Ŝ(z) dz.
    fn field(&self, s: &Subtree, sigma: f64) -> Result<CauchyPair> {
        match s {
            Subtree::Leaf => Ok(self.leaf.at(sigma)),
            Subtree::Node { monomial, children } => {
                let grid = self.leaf.grid();
                let mut out = CauchyPair::zeros(grid);
                if self.t <= sigma {
                    return Ok(out);
                }
                let coef = self.v.lambda * self.v.monomials[*monomial].coefficient;
                let (zs, ws) = gauss_legendre_on(self.nodes, sigma, self.t);
                for (&z, &w) in zs.iter().zip(&ws) {
                    let fields: Vec<SpectralField> = children
                        .iter()
                        .map(|(slot, c)| self.field(c, z).map(|d| slot.field(&d)))
                        .collect::<Result<_>>()?;
                    let src = NonlinearitySpec::monomial_product(&fields, self.dealias)?;
                    for i in 0..grid.len() {
                        let e = grid.epsilon(i);
                        let (sn, cs) = (e * (z - sigma)).sin_cos();
                        let a: Complex64 = src.coeffs[i] * (w * coef);
                        out.u0.coeffs[i] += a * (sn / e);
                        out.u1.coeffs[i] -= a * cs;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// sign · weight · ∫(Φ(0)φ₁ − ∂ₜΦ(0)φ₀) for the diagram, with leaves at [u]_t = d.
pub fn evaluate_tree(
    tree: &RootedTree,
    d: &CauchyPair,
    phi: &LinearSolution,
    v: &NonlinearitySpec,
    t: f64,
    nodes: usize,
    dealias: bool,
) -> Result<TreeValue> {
    d.grid().check_same(&phi.grid())?;
    if nodes == 0 {
        return Err(Error::InvalidArgument("need at least one quadrature node".into()));
    }
    let run = |k: usize| -> Result<f64> {
        let ev = Evaluator { v, leaf: sharp_lr(d, t), t, nodes: k, dealias };
        let root = ev.field(&tree.child, 0.0)?;
        let p = phi.at(0.0);
        let pairing = root.u0.integrate_product(&p.u1) - root.u1.integrate_product(&p.u0);
        Ok(tree.sign as f64 * tree.symmetry * pairing)
    };
    let value = run(nodes)?;
    if tree.internal == 0 {
        return Ok(TreeValue { value, refined: value, warning: None });
    }
    let refined = run(nodes + 4)?;
    let warning = if (refined - value).abs() > 0.01 * refined.abs().max(f64::MIN_POSITIVE) {
        Some(format!("quadrature unresolved: {value:.6e} with {nodes} nodes, {refined:.6e} with {}", nodes + 4))
    } else {
        None
    };
    Ok(TreeValue { value, refined, warning })
}
