//! Bi-regular Label-Cover instances with d-to-1 projections.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::GadgetError;
use crate::rng;

/// Largest supported `d·R`; clause-side points live in G^{dR}.
pub const MAX_DR: usize = 12;

/// An edge `(u, v)` with projection `pi: [dR] → [R]`. Everything is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub pi: Vec<usize>,
}

impl Edge {
    /// Positions of the large alphabet that project to `t`, ascending.
    pub fn preimage(&self, t: usize) -> Vec<usize> {
        (0..self.pi.len()).filter(|&j| self.pi[j] == t).collect()
    }
}

/// Labels for both sides: `u[i] ∈ [R]`, `v[j] ∈ [dR]`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCoverInstance {
    r: usize,
    d: usize,
    n_u: usize,
    n_v: usize,
    edges: Vec<Edge>,
    labeling: Option<Labeling>,
}

impl LabelCoverInstance {
    /// Validates bi-regularity, the d-to-1 property of every projection, and
    /// that the planted labeling (if any) satisfies every edge.
    pub fn new(
        r: usize,
        d: usize,
        n_u: usize,
        n_v: usize,
        edges: Vec<Edge>,
        labeling: Option<Labeling>,
    ) -> Result<Self, GadgetError> {
        if r == 0 || d == 0 || n_u == 0 || n_v == 0 {
            return Err(GadgetError::InvalidParams(
                "R, d, |U| and |V| must be positive".into(),
            ));
        }
        if d * r > MAX_DR {
            return Err(GadgetError::CapExceeded(format!(
                "dR = {} exceeds the cap of {MAX_DR}",
                d * r
            )));
        }
        let mut deg_u = vec![0usize; n_u];
        let mut deg_v = vec![0usize; n_v];
        for (i, e) in edges.iter().enumerate() {
            if e.u >= n_u || e.v >= n_v {
                return Err(GadgetError::InvalidProjection {
                    edge: i,
                    reason: "endpoint out of range".into(),
                });
            }
            if e.pi.len() != d * r {
                return Err(GadgetError::InvalidProjection {
                    edge: i,
                    reason: format!("projection has length {}, expected {}", e.pi.len(), d * r),
                });
            }
            let mut counts = vec![0usize; r];
            for &t in &e.pi {
                if t >= r {
                    return Err(GadgetError::InvalidProjection {
                        edge: i,
                        reason: format!("label {} out of range", t + 1),
                    });
                }
                counts[t] += 1;
            }
            if let Some(t) = counts.iter().position(|&c| c != d) {
                return Err(GadgetError::InvalidProjection {
                    edge: i,
                    reason: format!("|π⁻¹({})| = {}, expected {d}", t + 1, counts[t]),
                });
            }
            deg_u[e.u] += 1;
            deg_v[e.v] += 1;
        }
        if deg_u.iter().any(|&x| x != deg_u[0]) || deg_v.iter().any(|&x| x != deg_v[0]) {
            return Err(GadgetError::NotBiregular);
        }
        let inst = Self {
            r,
            d,
            n_u,
            n_v,
            edges,
            labeling: None,
        };
        if let Some(l) = labeling {
            inst.check_labeling(&l)?;
            let violated = inst.edges.len() - inst.satisfied_edges(&l);
            if violated > 0 {
                return Err(GadgetError::LabelingNotPerfect(violated));
            }
            return Ok(Self {
                labeling: Some(l),
                ..inst
            });
        }
        Ok(inst)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labeling(&self) -> Option<&Labeling> {
        self.labeling.as_ref()
    }

    pub fn check_labeling(&self, l: &Labeling) -> Result<(), GadgetError> {
        let ok = l.u.len() == self.n_u
            && l.v.len() == self.n_v
            && l.u.iter().all(|&x| x < self.r)
            && l.v.iter().all(|&x| x < self.d * self.r);
        if ok {
            Ok(())
        } else {
            Err(GadgetError::InvalidParams("labeling has wrong shape or range".into()))
        }
    }

    /// Number of edges with π_e(A(v)) = A(u).
    pub fn satisfied_edges(&self, l: &Labeling) -> usize {
        self.edges
            .iter()
            .filter(|e| e.pi[l.v[e.v]] == l.u[e.u])
            .count()
    }

    /// Text form: `p lc R d nU nV nE`, then `e u v π(1) … π(dR)` lines and
    /// optional `a u <u> <label>` / `a v <v> <label>` lines, all 1-based.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "p lc {} {} {} {} {}",
            self.r,
            self.d,
            self.n_u,
            self.n_v,
            self.edges.len()
        );
        for e in &self.edges {
            let _ = write!(out, "e {} {}", e.u + 1, e.v + 1);
            for &t in &e.pi {
                let _ = write!(out, " {}", t + 1);
            }
            out.push('\n');
        }
        if let Some(l) = &self.labeling {
            for (i, &x) in l.u.iter().enumerate() {
                let _ = writeln!(out, "a u {} {}", i + 1, x + 1);
            }
            for (i, &x) in l.v.iter().enumerate() {
                let _ = writeln!(out, "a v {} {}", i + 1, x + 1);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, GadgetError> {
        let mut header: Option<[usize; 5]> = None;
        let mut edges = Vec::new();
        let mut lab_u: Vec<Option<usize>> = Vec::new();
        let mut lab_v: Vec<Option<usize>> = Vec::new();
        let mut any_label = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('c') {
                continue;
            }
            let bad = |reason: &str| GadgetError::Parse {
                line,
                reason: reason.into(),
            };
            let fields: Vec<&str> = body.split_whitespace().collect();
            let nums = |from: usize| -> Result<Vec<usize>, GadgetError> {
                fields[from..]
                    .iter()
                    .map(|f| f.parse::<usize>().map_err(|_| bad("expected a non-negative integer")))
                    .collect()
            };
            match fields[0] {
                "p" => {
                    if fields.get(1) != Some(&"lc") || fields.len() != 7 || header.is_some() {
                        return Err(bad("expected one `p lc R d nU nV nE` header"));
                    }
                    let n = nums(2)?;
                    header = Some([n[0], n[1], n[2], n[3], n[4]]);
                    lab_u = vec![None; n[2]];
                    lab_v = vec![None; n[3]];
                }
                "e" => {
                    let [r, d, n_u, n_v, _] = header.ok_or_else(|| bad("edge before header"))?;
                    let n = nums(1)?;
                    if n.len() != 2 + d * r {
                        return Err(bad("edge line has the wrong number of fields"));
                    }
                    if n[0] == 0 || n[0] > n_u || n[1] == 0 || n[1] > n_v || n[2..].contains(&0) {
                        return Err(bad("index out of range (indices are 1-based)"));
                    }
                    edges.push(Edge {
                        u: n[0] - 1,
                        v: n[1] - 1,
                        pi: n[2..].iter().map(|t| t - 1).collect(),
                    });
                }
                "a" => {
                    header.ok_or_else(|| bad("labeling before header"))?;
                    if fields.len() != 4 {
                        return Err(bad("expected `a u|v <vertex> <label>`"));
                    }
                    let n = nums(2)?;
                    let slots = match fields[1] {
                        "u" => &mut lab_u,
                        "v" => &mut lab_v,
                        _ => return Err(bad("side must be `u` or `v`")),
                    };
                    if n[0] == 0 || n[0] > slots.len() || n[1] == 0 {
                        return Err(bad("index out of range (indices are 1-based)"));
                    }
                    slots[n[0] - 1] = Some(n[1] - 1);
                    any_label = true;
                }
                _ => return Err(bad("unknown line type")),
            }
        }
        let [r, d, n_u, n_v, n_e] = header.ok_or(GadgetError::Parse {
            line: 0,
            reason: "missing `p lc` header".into(),
        })?;
        if edges.len() != n_e {
            return Err(GadgetError::Parse {
                line: 0,
                reason: format!("header declares {n_e} edges but {} were given", edges.len()),
            });
        }
        let labeling = if any_label {
            let u: Option<Vec<usize>> = lab_u.into_iter().collect();
            let v: Option<Vec<usize>> = lab_v.into_iter().collect();
            match (u, v) {
                (Some(u), Some(v)) => Some(Labeling { u, v }),
                _ => {
                    return Err(GadgetError::Parse {
                        line: 0,
                        reason: "labeling must cover every vertex".into(),
                    })
                }
            }
        } else {
            None
        };
        Self::new(r, d, n_u, n_v, edges, labeling)
    }
}

/// Random bi-regular Label-Cover instance with a planted perfect labeling.
///
/// Every `u` gets `degree` neighbours; every `v` gets `n_u·degree / n_v`.
pub fn make_label_cover(
    r: usize,
    d: usize,
    n_u: usize,
    n_v: usize,
    degree: usize,
    seed: u64,
) -> Result<LabelCoverInstance, GadgetError> {
    if r == 0 || d == 0 || n_u == 0 || n_v == 0 || degree == 0 {
        return Err(GadgetError::InvalidParams(
            "R, d, |U|, |V| and the degree must be positive".into(),
        ));
    }
    if d * r > MAX_DR {
        return Err(GadgetError::CapExceeded(format!(
            "dR = {} exceeds the cap of {MAX_DR}",
            d * r
        )));
    }
    if !(n_u * degree).is_multiple_of(n_v) {
        return Err(GadgetError::InfeasibleRegularity {
            n_u,
            n_v,
            degree,
        });
    }
    if degree > n_v {
        return Err(GadgetError::InfeasibleRegularity {
            n_u,
            n_v,
            degree,
        });
    }

    let mut rng = rng::seeded(seed);
    let mut v_perm: Vec<usize> = (0..n_v).collect();
    v_perm.shuffle(&mut rng);
    let label_u: Vec<usize> = (0..n_u).map(|_| rng.random_range(0..r)).collect();
    let label_v: Vec<usize> = (0..n_v).map(|_| rng.random_range(0..d * r)).collect();

    // Slot k = u·degree + j goes to v = k mod n_v: consecutive slots of one u
    // hit distinct v's, and every v receives the same number of slots.
    let mut edges = Vec::with_capacity(n_u * degree);
    for u in 0..n_u {
        for j in 0..degree {
            let v = v_perm[(u * degree + j) % n_v];
            let mut pi: Vec<usize> = (0..r).flat_map(|t| std::iter::repeat_n(t, d)).collect();
            pi.shuffle(&mut rng);
            let want = label_u[u];
            let at = label_v[v];
            if pi[at] != want {
                let p = pi.iter().position(|&t| t == want).expect("every label has d preimages");
                pi.swap(p, at);
            }
            edges.push(Edge { u, v, pi });
        }
    }
    LabelCoverInstance::new(
        r,
        d,
        n_u,
        n_v,
        edges,
        Some(Labeling {
            u: label_u,
            v: label_v,
        }),
    )
}
