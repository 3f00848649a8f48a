//! Norm calculus of the analytic-continuation series on a `U_pi`
//! correspondence graph whose nodes carry degrees in `[0, 1]`.
//!
//! Edges `y -> x` (with `x in U_pi(y)`) are good when `deg(x)` exceeds the
//! threshold and bad otherwise. The `N`-th term of the series collects the
//! paths of `N - 1` bad steps followed by one good step, divided by
//! `(a_pi pi^{r-1})^N`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::canonical::{degree_graph, DegreeEdge, SplitModule};
use crate::error::{Error, Result};
use crate::newton::{parse_rational, ser_rational, Rational, Valuation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    OrdinaryNbhd,
    Middle,
    DegZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Node {
    pub id: String,
    #[serde(serialize_with = "ser_rational")]
    pub deg: Rational,
    pub region: Region,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: Label,
}

#[derive(Clone, Debug)]
pub struct CorrGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    eps: Rational,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct NodeSpec {
    id: String,
    deg: String,
}

#[derive(Deserialize)]
struct EdgeSpec {
    from: String,
    to: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Deserialize)]
struct GraphSpec {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
}

fn region(deg: Rational, eps: Rational) -> Region {
    if deg <= eps {
        Region::DegZero
    } else if deg == Rational::one() {
        Region::OrdinaryNbhd
    } else {
        Region::Middle
    }
}

impl CorrGraph {
    /// Validate and label a graph. Labels, when given, must agree with the
    /// threshold `eps`.
    pub fn new(nodes: Vec<(String, Rational)>, edges: Vec<(String, String, Option<Label>)>, eps: Rational) -> Result<Self> {
        let bad = |m: String| Error::InvalidGraph(m);
        let mut index = HashMap::new();
        let mut out_nodes = Vec::with_capacity(nodes.len());
        for (id, deg) in nodes {
            if deg < Rational::zero() || deg > Rational::one() {
                return Err(bad(format!("node {id}: degree {deg} outside [0,1]")));
            }
            if index.insert(id.clone(), out_nodes.len()).is_some() {
                return Err(bad(format!("duplicate node {id}")));
            }
            out_nodes.push(Node { id, deg, region: region(deg, eps) });
        }
        let mut out_edges = Vec::with_capacity(edges.len());
        for (from, to, label) in edges {
            let look = |id: &str| index.get(id).copied().ok_or_else(|| bad(format!("unknown node {id}")));
            let (a, b) = (look(&from)?, look(&to)?);
            let (da, db) = (out_nodes[a].deg, out_nodes[b].deg);
            if da > db {
                return Err(bad(format!("edge {from} -> {to} lowers the degree from {da} to {db}")));
            }
            let computed = if db <= eps { Label::Bad } else { Label::Good };
            if let Some(l) = label {
                if l != computed {
                    return Err(bad(format!("edge {from} -> {to} labelled {l:?} but the threshold gives {computed:?}")));
                }
            }
            out_edges.push(Edge { from: a, to: b, label: computed });
        }
        Ok(CorrGraph { nodes: out_nodes, edges: out_edges, eps, index })
    }

    /// Parse `{nodes: [{id, deg}], edges: [{from, to, label}]}`.
    pub fn from_json(text: &str, eps: Rational) -> Result<Self> {
        let spec: GraphSpec = serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
        let nodes = spec
            .nodes
            .into_iter()
            .map(|n| Ok((n.id, parse_rational(&n.deg)?)))
            .collect::<Result<Vec<_>>>()?;
        let edges = spec
            .edges
            .into_iter()
            .map(|e| {
                let label = match e.label.as_deref() {
                    None => None,
                    Some("good") => Some(Label::Good),
                    Some("bad") => Some(Label::Bad),
                    Some(other) => return Err(Error::InvalidGraph(format!("unknown label {other:?}"))),
                };
                Ok((e.from, e.to, label))
            })
            .collect::<Result<Vec<_>>>()?;
        CorrGraph::new(nodes, edges, eps)
    }

    /// Graph from machine-computed degree edges; node ids get `prefix`.
    pub fn from_degree_edges(edges: &[DegreeEdge], prefix: &str, eps: Rational) -> Result<Self> {
        let mut nodes: Vec<(String, Rational)> = Vec::new();
        let mut seen = HashMap::new();
        let fin = |v: Valuation| v.finite().ok_or_else(|| Error::InvalidGraph("infinite degree".into()));
        let mut add = |id: String, deg: Rational, nodes: &mut Vec<(String, Rational)>| {
            if seen.insert(id.clone(), ()).is_none() {
                nodes.push((id, deg));
            }
        };
        let mut es = Vec::new();
        for e in edges {
            let (a, b) = (format!("{prefix}{}", e.from), format!("{prefix}{}", e.to));
            add(a.clone(), fin(e.deg_from)?, &mut nodes);
            add(b.clone(), fin(e.deg_to)?, &mut nodes);
            es.push((a, b, None));
        }
        CorrGraph::new(nodes, es, eps)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn eps(&self) -> Rational {
        self.eps
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.from == i).count()
    }

    /// Smallest strict degree increase along an edge starting in `(0, 1)`.
    pub fn min_increment(&self) -> Option<Rational> {
        self.edges
            .iter()
            .filter(|e| {
                let d = self.nodes[e.from].deg;
                d > Rational::zero() && d < Rational::one()
            })
            .map(|e| self.nodes[e.to].deg - self.nodes[e.from].deg)
            .filter(|d| *d > Rational::zero())
            .min()
    }
}

/// Correspondence graphs of several split modules, two `U_pi` steps deep,
/// merged into one graph. Checks `q` successors at every expanded node.
pub fn build_graph(modules: &[(SplitModule, usize)], eps: Rational) -> Result<CorrGraph> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, (split, h)) in modules.iter().enumerate() {
        let de = degree_graph(split, *h)?;
        let q = split.phi.big_q() as usize;
        let g = CorrGraph::from_degree_edges(&de, &format!("m{i}:"), eps)?;
        for (n, node) in g.nodes().iter().enumerate() {
            let d = g.out_degree(n);
            if d != 0 && d != q {
                return Err(Error::InvalidGraph(format!("node {} has {d} successors, expected {q}", node.id)));
            }
        }
        nodes.extend(g.nodes.iter().map(|n| (n.id.clone(), n.deg)));
        edges.extend(g.edges.iter().map(|e| (g.nodes[e.from].id.clone(), g.nodes[e.to].id.clone(), None)));
    }
    CorrGraph::new(nodes, edges, eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    #[serde(serialize_with = "ser_rational")]
    pub margin: Rational,
}

/// Convergence holds iff `v(a_pi) < k - r + 1`; the margin is the gap.
pub fn convergence_certificate(k: i64, r: i64, v_a: Rational) -> Certificate {
    let margin = Rational::from_integer(k - r + 1) - v_a;
    Certificate { certified: margin > Rational::zero(), margin }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub n: usize,
    /// paths of `n - 1` bad steps then one good step
    pub paths: u64,
    /// certified lower bound on the valuation of the term
    pub bound: Valuation,
    /// valuation lower bound from the endpoints actually reached
    pub observed: Valuation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesState {
    pub k: i64,
    pub r: i64,
    #[serde(serialize_with = "ser_rational")]
    pub v_a: Rational,
    /// thresholds `eps / N` used at each step
    pub thresholds: Vec<Valuation>,
    pub terms: Vec<Term>,
    /// lower bound on `v(f_j)` for each partial sum
    pub partial_bounds: Vec<Valuation>,
    /// step of the last nonempty term when the series stops inside `j` terms
    pub terminated_at: Option<usize>,
    /// common gap between consecutive nonempty term bounds, per step
    pub ratio: Option<Valuation>,
    pub certificate: Certificate,
}

impl SeriesState {
    /// Terms shrink geometrically: a common positive per-step ratio.
    pub fn decays(&self) -> bool {
        matches!(self.ratio, Some(Valuation::Finite(x)) if x > Rational::zero())
    }
}

/// Partial sums `f_1..f_j` at `start`. `f_val` gives `v(f)` on good nodes
/// (missing nodes count as `0`); the sup-norm bound uses the least value
/// over the good region.
pub fn kassaei_sum(
    g: &CorrGraph,
    start: &str,
    f_val: &HashMap<String, Rational>,
    k: i64,
    r: i64,
    v_a: Rational,
    j: usize,
) -> Result<SeriesState> {
    if j == 0 {
        return Err(Error::Precondition("need at least one term".into()));
    }
    let s = g.node(start).ok_or_else(|| Error::InvalidGraph(format!("unknown node {start}")))?;
    if let Some((id, v)) = f_val.iter().find(|(_, v)| **v < Rational::zero()) {
        return Err(Error::Precondition(format!("v(f) = {v} < 0 at {id}")));
    }
    let vf = |i: usize| f_val.get(&g.nodes[i].id).copied().unwrap_or_else(Rational::zero);
    let sup = (0..g.nodes.len())
        .filter(|&i| g.nodes[i].deg > g.eps)
        .map(vf)
        .min()
        .unwrap_or_else(Rational::zero);
    let cert = convergence_certificate(k, r, v_a);
    let mut frontier: BTreeMap<usize, u64> = BTreeMap::from([(s, 1)]);
    let mut terms = Vec::with_capacity(j);
    let mut thresholds = Vec::with_capacity(j);
    let mut terminated_at = None;
    for n in 1..=j {
        let eps_n = g.eps / Rational::from_integer(n as i64);
        thresholds.push(Valuation::Finite(eps_n));
        let mut next: BTreeMap<usize, u64> = BTreeMap::new();
        let mut paths = 0u64;
        let mut least: Option<Rational> = None;
        for (&y, &count) in &frontier {
            for e in g.edges.iter().filter(|e| e.from == y) {
                if g.nodes[e.to].deg <= eps_n {
                    let c = next.entry(e.to).or_insert(0);
                    *c = c.saturating_add(count);
                } else {
                    paths = paths.saturating_add(count);
                    least = Some(least.map_or(vf(e.to), |l| l.min(vf(e.to))));
                }
            }
        }
        let scale = Rational::from_integer(n as i64) * cert.margin;
        let (bound, observed) = match least {
            Some(l) => (Valuation::Finite(scale + sup), Valuation::Finite(scale + l)),
            None => (Valuation::Infinite, Valuation::Infinite),
        };
        terms.push(Term { n, paths, bound, observed });
        frontier = next;
        if frontier.is_empty() {
            terminated_at = terms.iter().rev().find(|t| t.paths > 0).map(|t| t.n).or(Some(n));
            break;
        }
    }
    let mut partial_bounds = Vec::with_capacity(terms.len());
    let mut acc = Valuation::Infinite;
    for t in &terms {
        acc = acc.min(t.bound);
        partial_bounds.push(acc);
    }
    let live: Vec<(usize, Rational)> = terms.iter().filter_map(|t| t.bound.finite().map(|b| (t.n, b))).collect();
    let gaps: Vec<Rational> = live
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / Rational::from_integer((w[1].0 - w[0].0) as i64))
        .collect();
    let ratio = match gaps.first() {
        Some(&g0) if gaps.iter().all(|&x| x == g0) => Some(Valuation::Finite(g0)),
        _ => None,
    };
    Ok(SeriesState {
        k,
        r,
        v_a,
        thresholds,
        terms,
        partial_bounds,
        terminated_at,
        ratio,
        certificate: cert,
    })
}

/// Steps needed to climb from degree `t` to `t_prime` with increments of at
/// least `t0`.
pub fn iterations_to_reach(t: Rational, t_prime: Rational, t0: Rational) -> Result<u64> {
    if t0 <= Rational::zero() {
        return Err(Error::Precondition("increment must be positive".into()));
    }
    if t_prime <= t {
        return Ok(0);
    }
    Ok(((t_prime - t) / t0).ceil().to_integer() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    /// `y` loops on itself through bad edges and has one good exit.
    fn bad_chain() -> CorrGraph {
        CorrGraph::new(
            vec![("y".into(), rat(0, 1)), ("g".into(), rat(1, 1))],
            vec![("y".into(), "y".into(), Some(Label::Bad)), ("y".into(), "g".into(), Some(Label::Good))],
            Rational::zero(),
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let chain = CorrGraph::new(
            vec![("a".into(), rat(0, 1)), ("b".into(), rat(1, 2)), ("c".into(), rat(1, 1))],
            vec![("a".into(), "b".into(), None), ("b".into(), "c".into(), None)],
            Rational::zero(),
        )
        .unwrap();
        assert_eq!(chain.nodes()[1].region, Region::Middle);
        assert!(chain.edges().iter().all(|e| e.label == Label::Good));
        let bad = CorrGraph::new(
            vec![("a".into(), rat(1, 2)), ("b".into(), rat(1, 3))],
            vec![("a".into(), "b".into(), None)],
            Rational::zero(),
        );
        assert!(matches!(bad, Err(Error::InvalidGraph(_))));
        let mislabelled = CorrGraph::new(
            vec![("a".into(), rat(0, 1)), ("b".into(), rat(1, 2))],
            vec![("a".into(), "b".into(), Some(Label::Bad))],
            Rational::zero(),
        );
        assert!(mislabelled.is_err());
        assert!(CorrGraph::new(vec![("a".into(), rat(3, 2))], vec![], Rational::zero()).is_err());
    }

    #[test]
    fn json_graph() {
        let text = r#"{"nodes": [{"id": "y", "deg": "0"}, {"id": "x", "deg": "1/2"}],
                       "edges": [{"from": "y", "to": "x", "label": "good"}]}"#;
        let g = CorrGraph::from_json(text, Rational::zero()).unwrap();
        assert_eq!(g.nodes()[1].deg, rat(1, 2));
        assert!(CorrGraph::from_json("{\"nodes\": [", Rational::zero()).is_err());
    }

    #[test]
    fn terminates_without_bad_edges() {
        let g = CorrGraph::new(
            vec![("y".into(), rat(1, 2)), ("x".into(), rat(1, 1))],
            vec![("y".into(), "x".into(), None)],
            Rational::zero(),
        )
        .unwrap();
        let s = kassaei_sum(&g, "y", &HashMap::new(), 5, 2, Rational::zero(), 6).unwrap();
        assert_eq!(s.terminated_at, Some(1));
        assert_eq!(s.terms.len(), 1);
    }

    #[test]
    fn geometric_bad_chain() {
        let g = bad_chain();
        let s = kassaei_sum(&g, "y", &HashMap::new(), 5, 2, Rational::zero(), 6).unwrap();
        let bounds: Vec<Valuation> = s.terms.iter().map(|t| t.bound).collect();
        assert_eq!(bounds, (1..=6).map(|n| Valuation::int(4 * n)).collect::<Vec<_>>());
        assert_eq!(s.ratio, Some(Valuation::int(4)));
        assert!(s.decays() && s.certificate.certified);
        assert!(s.terms.iter().all(|t| t.bound <= t.observed));
        // boundary: constant bounds, no certificate
        let s = kassaei_sum(&g, "y", &HashMap::new(), 5, 2, Rational::from_integer(4), 6).unwrap();
        assert_eq!(s.ratio, Some(Valuation::int(0)));
        assert!(!s.decays() && !s.certificate.certified);
    }

    #[test]
    fn machine_built_graph() {
        use crate::apoly::PolyRing;
        use crate::canonical::split_module;
        use crate::field::FieldCtx;
        use crate::local::Localization;
        use crate::ring::Ring;
        let a = PolyRing::new(FieldCtx::new(3, 1).unwrap());
        let loc = Localization::new(&a, &a.t(), 24, 2).unwrap();
        let r = loc.ring();
        let split = split_module(&a, &loc, &r.w(), &r.add(&r.one(), &r.w())).unwrap();
        let canon = split.canonical_index().unwrap();
        let g = build_graph(&[(split, canon)], Rational::zero()).unwrap();
        let root = g.node("m0:y").unwrap();
        assert_eq!(g.out_degree(root), 3);
        for e in g.edges().iter().filter(|e| e.from == root) {
            assert_eq!(g.nodes()[e.to].deg, Rational::one());
            assert_eq!(g.nodes()[e.to].region, Region::OrdinaryNbhd);
        }
    }

    #[test]
    fn certificates() {
        assert_eq!(convergence_certificate(5, 2, rat(3, 1)), Certificate { certified: true, margin: rat(1, 1) });
        assert!(!convergence_certificate(5, 2, rat(4, 1)).certified);
        assert!(!convergence_certificate(1, 2, rat(0, 1)).certified);
    }

    #[test]
    fn shrinking_thresholds() {
        let g = CorrGraph::new(
            vec![("y".into(), rat(0, 1)), ("m".into(), rat(1, 4)), ("x".into(), rat(1, 1))],
            vec![
                ("y".into(), "m".into(), None),
                ("m".into(), "m".into(), None),
                ("m".into(), "x".into(), None),
            ],
            rat(1, 2),
        )
        .unwrap();
        // at N = 1, 2 the node m (deg 1/4) is below eps/N; from N = 3 on it is good
        let s = kassaei_sum(&g, "y", &HashMap::new(), 4, 2, Rational::zero(), 4).unwrap();
        assert_eq!(s.thresholds[2], Valuation::frac(1, 6));
        assert_eq!(s.terms.iter().map(|t| t.paths).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(s.terminated_at, Some(3));
        assert_eq!(iterations_to_reach(rat(1, 4), rat(3, 4), rat(1, 8)).unwrap(), 4);
    }
}
