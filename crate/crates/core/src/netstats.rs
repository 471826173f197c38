//! Aggregate network statistics of a weighted directed matrix.
//!
//! Density and degree count self-loops (within-industry trade); reciprocity,
//! transitivity and assortativity are computed on the loop-free support.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::correlate::pearson;
use crate::flow::{Cell, FlowMatrix};
use crate::scalar::Scalar;
use crate::shares::ShareMatrix;

/// Anything that exposes a node count and weighted directed edges.
pub trait WeightedDigraph<S: Scalar> {
    fn node_count(&self) -> usize;
    fn weighted_edges(&self) -> Vec<(Cell, S)>;
}

impl<S: Scalar> WeightedDigraph<S> for FlowMatrix<S> {
    fn node_count(&self) -> usize {
        self.n()
    }
    fn weighted_edges(&self) -> Vec<(Cell, S)> {
        self.entries().collect()
    }
}

impl<S: Scalar> WeightedDigraph<S> for ShareMatrix<S> {
    fn node_count(&self) -> usize {
        self.n()
    }
    fn weighted_edges(&self) -> Vec<(Cell, S)> {
        self.entries().collect()
    }
}

fn support<S: Scalar>(g: &impl WeightedDigraph<S>) -> BTreeSet<Cell> {
    g.weighted_edges().into_iter().filter(|(_, w)| *w > S::zero()).map(|(c, _)| c).collect()
}

/// `n_edges / n^2`, loops included.
pub fn density<S: Scalar>(g: &impl WeightedDigraph<S>) -> S {
    let n = g.node_count();
    if n == 0 {
        return S::zero();
    }
    S::from_count(support(g).len()) / S::from_count(n * n)
}

/// Mean degree, mean strength and mean link weight; the last is `None` without edges.
pub fn degree_strength_weight<S: Scalar>(g: &impl WeightedDigraph<S>) -> (S, S, Option<S>) {
    let n = g.node_count();
    let edges: Vec<S> = g.weighted_edges().into_iter().map(|(_, w)| w).filter(|w| *w > S::zero()).collect();
    if n == 0 {
        return (S::zero(), S::zero(), None);
    }
    let total = edges.iter().fold(S::zero(), |acc, &w| acc + w);
    let n_s = S::from_count(n);
    let weight = (!edges.is_empty()).then(|| total / S::from_count(edges.len()));
    (S::from_count(edges.len()) / n_s, total / n_s, weight)
}

/// Fraction of non-loop links whose reverse link also exists.
pub fn reciprocity<S: Scalar>(g: &impl WeightedDigraph<S>) -> S {
    let links: BTreeSet<Cell> = support(g).into_iter().filter(|(i, j)| i != j).collect();
    if links.is_empty() {
        return S::zero();
    }
    let mutual = links.iter().filter(|(i, j)| links.contains(&(*j, *i))).count();
    S::from_count(mutual) / S::from_count(links.len())
}

fn undirected_neighbours<S: Scalar>(g: &impl WeightedDigraph<S>) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); g.node_count()];
    for (i, j) in support(g) {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    adj
}

/// Global clustering coefficient of the undirected loop-free projection:
/// closed connected triples over all connected triples.
pub fn transitivity<S: Scalar>(g: &impl WeightedDigraph<S>) -> S {
    let adj = undirected_neighbours(g);
    let mut triples: u64 = 0;
    let mut closed: u64 = 0;
    for nbrs in &adj {
        let d = nbrs.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        let list: Vec<usize> = nbrs.iter().copied().collect();
        for (a, &u) in list.iter().enumerate() {
            closed += list[a + 1..].iter().filter(|w| adj[u].contains(w)).count() as u64;
        }
    }
    if triples == 0 {
        return S::zero();
    }
    S::lit(closed as f64) / S::lit(triples as f64)
}

/// Pearson correlation, over non-loop directed links, between the total
/// (in + out, loop-free) degree of the source and of the target.
/// `None` when fewer than two links or either degree sequence is constant.
pub fn assortativity_by_degree<S: Scalar>(g: &impl WeightedDigraph<S>) -> Option<S> {
    let links: Vec<Cell> = support(g).into_iter().filter(|(i, j)| i != j).collect();
    let mut degree = vec![0usize; g.node_count()];
    for &(i, j) in &links {
        degree[i] += 1;
        degree[j] += 1;
    }
    if links.len() < 2 {
        return None;
    }
    let xs: Vec<S> = links.iter().map(|&(i, _)| S::from_count(degree[i])).collect();
    let ys: Vec<S> = links.iter().map(|&(_, j)| S::from_count(degree[j])).collect();
    pearson(&xs, &ys).ok().flatten()
}

/// One column of the network-properties table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkStatsReport<S: Scalar = f64> {
    pub density: S,
    pub average_degree: S,
    pub average_strength: S,
    pub average_weight: Option<S>,
    pub reciprocity: S,
    pub transitivity: S,
    pub assortativity_by_degree: Option<S>,
    pub n_nodes: usize,
    pub n_edges: usize,
}

pub const REPORT_CSV_HEADER: &str =
    "density,average_degree,average_strength,average_weight,reciprocity,transitivity,assortativity_by_degree,n_nodes,n_edges";

/// Placeholder written for undefined statistics.
pub const UNDEFINED: &str = "NA";

impl<S: Scalar> NetworkStatsReport<S> {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<S>| v.map(|x| x.to_string()).unwrap_or_else(|| UNDEFINED.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.density,
            self.average_degree,
            self.average_strength,
            opt(self.average_weight),
            self.reciprocity,
            self.transitivity,
            opt(self.assortativity_by_degree),
            self.n_nodes,
            self.n_edges
        )
    }
}

pub fn full_report<S: Scalar>(g: &impl WeightedDigraph<S>) -> NetworkStatsReport<S> {
    let (average_degree, average_strength, average_weight) = degree_strength_weight(g);
    NetworkStatsReport {
        density: density(g),
        average_degree,
        average_strength,
        average_weight,
        reciprocity: reciprocity(g),
        transitivity: transitivity(g),
        assortativity_by_degree: assortativity_by_degree(g),
        n_nodes: g.node_count(),
        n_edges: support(g).len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{IndustryCode, MatrixMeta, Orientation, Scheme, SourceTag, WeightKind};
    use crate::period::PeriodSpan;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> FlowMatrix {
        let meta = MatrixMeta {
            span: PeriodSpan::year(2019).unwrap(),
            scheme: Scheme::Cpa105,
            weight_kind: WeightKind::Value,
            orientation: Orientation::SupplierToBuyer,
            source: SourceTag::Synthetic,
        };
        let nodes = (0..n).map(|k| IndustryCode::new(Scheme::Cpa105, format!("N{k}")).unwrap()).collect();
        FlowMatrix::from_parts(meta, nodes, edges.iter().map(|&(i, j, w)| ((i, j), w)), [], []).unwrap()
    }

    fn complete(n: usize, w: f64, loops: bool) -> FlowMatrix {
        let edges: Vec<_> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j, w))).filter(|&(i, j, _)| loops || i != j).collect();
        graph(n, &edges)
    }

    #[test]
    fn density_cases() {
        assert_eq!(density(&complete(3, 1.0, true)), 1.0);
        assert_eq!(density(&graph(3, &[])), 0.0);
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (2, 2, 1.0)]);
        assert_eq!(density(&g), 0.3125);
    }

    #[test]
    fn averages() {
        let g = graph(2, &[(0, 1, 10.0)]);
        assert_eq!(degree_strength_weight(&g), (0.5, 5.0, Some(10.0)));
        let c = complete(4, 2.5, true);
        assert_eq!(degree_strength_weight(&c), (4.0, 10.0, Some(2.5)));
        assert_eq!(degree_strength_weight(&graph(3, &[])).2, None);
    }

    #[test]
    fn reciprocity_cases() {
        assert_eq!(reciprocity(&graph(2, &[(0, 1, 1.0), (1, 0, 1.0)])), 1.0);
        assert_eq!(reciprocity(&graph(2, &[(0, 1, 1.0)])), 0.0);
        // two mutual pairs plus four one-way links: 4 of 8 links reciprocated
        let g = graph(
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0), (0, 3, 1.0), (1, 2, 1.0)],
        );
        assert_eq!(reciprocity(&g), 0.5);
        // self-loops are not links for reciprocity
        let loops = graph(3, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)]);
        assert_eq!(reciprocity(&loops), 2.0 / 3.0);
    }

    #[test]
    fn transitivity_cases() {
        assert_eq!(transitivity(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])), 1.0);
        assert_eq!(transitivity(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0)])), 0.0);
        assert_eq!(transitivity(&graph(3, &[])), 0.0);
    }

    #[test]
    fn assortativity_cases() {
        let star: Vec<_> = (1..6).flat_map(|k| [(0, k, 1.0), (k, 0, 1.0)]).collect();
        assert!(assortativity_by_degree(&graph(6, &star)).unwrap() < 0.0);
        assert_eq!(assortativity_by_degree(&complete(4, 1.0, false)), None);
        assert_eq!(assortativity_by_degree(&graph(3, &[(0, 1, 1.0)])), None);
    }

    #[test]
    fn empty_report() {
        let r = full_report(&graph(3, &[]));
        assert_eq!(r.density, 0.0);
        assert_eq!(r.average_weight, None);
        assert_eq!(r.assortativity_by_degree, None);
        assert_eq!(r.csv_row(), "0,0,0,NA,0,0,NA,3,0");
    }

    #[test]
    fn three_node_worksheet() {
        // A->B (4), B->A (2), B->C (6), C->C (3)
        let g = graph(3, &[(0, 1, 4.0), (1, 0, 2.0), (1, 2, 6.0), (2, 2, 3.0)]);
        let r = full_report(&g);
        assert_eq!(r.density, 4.0 / 9.0);
        assert_eq!(r.average_degree, 4.0 / 3.0);
        assert_eq!(r.average_strength, 15.0 / 3.0);
        assert_eq!(r.average_weight, Some(15.0 / 4.0));
        assert_eq!(r.reciprocity, 2.0 / 3.0);
        // undirected projection is the path A-B-C
        assert_eq!(r.transitivity, 0.0);
        // loop-free degrees: A=2, B=3, C=1; links (A,B),(B,A),(B,C)
        // xs = (2,3,3), ys = (3,2,1): mean x 8/3, mean y 2
        // cov = (-2/3)(1) + (1/3)(0) + (1/3)(-1) = -1; var x = 4/9+1/9+1/9 = 2/3; var y = 2
        let expected = -1.0 / ((2.0_f64 / 3.0).sqrt() * 2.0_f64.sqrt());
        assert!((r.assortativity_by_degree.unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn support_only_statistics_ignore_weights() {
        let a = graph(4, &[(0, 1, 1.0), (1, 2, 5.0), (2, 0, 2.0), (2, 3, 9.0), (3, 2, 1.0)]);
        let b = graph(4, &[(0, 1, 7.0), (1, 2, 0.5), (2, 0, 3.0), (2, 3, 1.0), (3, 2, 4.0)]);
        let (ra, rb) = (full_report(&a), full_report(&b));
        assert_eq!(ra.density, rb.density);
        assert_eq!(ra.average_degree, rb.average_degree);
        assert_eq!(ra.reciprocity, rb.reciprocity);
        assert_eq!(ra.transitivity, rb.transitivity);
        assert_eq!(ra.assortativity_by_degree, rb.assortativity_by_degree);
        assert_ne!(ra.average_strength, rb.average_strength);
    }
}
