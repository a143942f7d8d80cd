use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::{Propensity, StochError};
use crate::graph::{strongly_connected, Digraph};
use crate::model::ReactionNetwork;
use crate::structure::conservation_certificate;

/// Enumeration limits. `cap` bounds each species count; transitions that
/// would leave the box are dropped.
#[derive(Debug, Clone)]
pub struct Limits {
    pub max_states: usize,
    pub cap: Option<Vec<u32>>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedClass {
    pub states: Vec<usize>,
    /// Every non-terminal source complex is off throughout the class.
    pub non_terminal_off: bool,
}

/// States reachable from `X(0)`, stored row-major with stride `m`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub m: usize,
    data: Vec<u32>,
    index: HashMap<Box<[u32]>, usize>,
    pub closed_classes: Vec<ClosedClass>,
    pub absorbing: Vec<bool>,
    /// Closed classes in which some non-terminal complex stays on.
    pub active_closed_classes: Vec<usize>,
    pub capped: bool,
    /// Transient classes (strongly connected, not closed) as lists of states.
    pub transient_classes: Vec<Vec<usize>>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.data.len() / self.m.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, k: usize) -> &[u32] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn index_of(&self, x: &[u32]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn transient(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.absorbing[k]).collect()
    }

    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.absorbing[k]).collect()
    }
}

fn within(cap: &Option<Vec<u32>>, x: &[u32]) -> bool {
    match cap {
        None => true,
        Some(c) => x.iter().zip(c).all(|(a, b)| a <= b),
    }
}

/// Breadth-first closure of `x0` under every enabled reaction, then closed
/// communicating classes by SCC condensation.
pub fn enumerate_state_space<P: Propensity>(
    net: &ReactionNetwork,
    prop: &P,
    x0: &[u32],
    limits: &Limits,
) -> Result<StateSpace, StochError> {
    let m = net.m();
    if x0.len() != m {
        return Err(StochError::Dimension {
            expected: m,
            got: x0.len(),
        });
    }
    if limits.cap.is_none() && !conservation_certificate(net).conservative {
        return Err(StochError::PossiblyInfinite);
    }
    let comp = prop.compiled();
    let mut data: Vec<u32> = Vec::new();
    let mut index: HashMap<Box<[u32]>, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    data.extend_from_slice(x0);
    index.insert(x0.into(), 0);
    queue.push_back(0usize);
    let mut x = vec![0u32; m];
    while let Some(k) = queue.pop_front() {
        for i in 0..comp.r() {
            x.copy_from_slice(&data[k * m..(k + 1) * m]);
            if prop.propensity(&x, i) <= 0.0 {
                continue;
            }
            comp.apply(&mut x, i);
            if !within(&limits.cap, &x) {
                continue;
            }
            let t = match index.get(x.as_slice()) {
                Some(&t) => t,
                None => {
                    let t = index.len();
                    if t >= limits.max_states {
                        return Err(StochError::CapExceeded {
                            limit: limits.max_states,
                            frontier: queue.len() + 1,
                        });
                    }
                    data.extend_from_slice(&x);
                    index.insert(x.clone().into(), t);
                    queue.push_back(t);
                    t
                }
            };
            if t != k {
                edges.push((k, t));
            }
        }
    }
    let n = index.len();
    let g = Digraph::from_edges(n, &edges);
    let scc = strongly_connected(&g);
    let closed = scc.closed(&g);
    let members = scc.members();
    let mut absorbing = vec![false; n];
    let mut closed_classes = Vec::new();
    let mut active = Vec::new();
    let mut transient_classes = Vec::new();
    let mut order: Vec<usize> = (0..scc.count).collect();
    order.sort_by_key(|&c| members[c][0]);
    for c in order {
        let states = members[c].clone();
        if closed[c] {
            let off = states.iter().all(|&k| comp.non_terminal_off(&data[k * m..(k + 1) * m]));
            if off {
                for &k in &states {
                    absorbing[k] = true;
                }
            } else {
                active.push(closed_classes.len());
            }
            closed_classes.push(ClosedClass {
                states,
                non_terminal_off: off,
            });
        } else {
            transient_classes.push(states);
        }
    }
    Ok(StateSpace {
        m,
        data,
        index,
        closed_classes,
        absorbing,
        active_closed_classes: active,
        capped: limits.cap.is_some(),
        transient_classes,
    })
}
