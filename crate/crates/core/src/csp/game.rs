use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use super::BRUTE_FORCE_CAP;
use crate::error::{Error, Result, ARITY_MISMATCH, DOMAIN, PARSE, SIZE_CAP};
use crate::indexing::ProductSpace;
use crate::rational::{self, Prob};
use crate::rng::par_map;

/// One hyperedge `(v₁, …, v_k)` with its accepted label tuples `Φ_e`, stored as
/// a truth table over `Σ₁ × … × Σ_k` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameEdge {
    pub vertices: Vec<usize>,
    pub accepted: Vec<bool>,
}

/// A `k`-player game on a `k`-partite `k`-uniform hypergraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    alphabets: Vec<usize>,
    vertices: Vec<usize>,
    edges: Vec<GameEdge>,
    labels: ProductSpace,
}

impl Game {
    /// `vertices[i]` and `alphabets[i]` are `|V_i|` and `|Σ_i|`.
    pub fn new(vertices: Vec<usize>, alphabets: Vec<usize>) -> Result<Self> {
        if vertices.len() != alphabets.len() || vertices.is_empty() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("{} vertex sets and {} alphabets", vertices.len(), alphabets.len()),
            ));
        }
        let labels = ProductSpace::new(alphabets.clone())?;
        Ok(Game {
            alphabets,
            vertices,
            edges: Vec::new(),
            labels,
        })
    }

    pub fn players(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GameEdge] {
        &self.edges
    }

    fn check_vertices(&self, vertices: &[usize]) -> Result<()> {
        if vertices.len() != self.players() {
            return Err(Error::domain(ARITY_MISMATCH, format!("edge {vertices:?} for a {}-player game", self.players())));
        }
        if let Some(i) = (0..self.players()).find(|&i| vertices[i] >= self.vertices[i]) {
            return Err(Error::domain(DOMAIN, format!("vertex {} of player {i} out of range", vertices[i])));
        }
        Ok(())
    }

    pub fn add_edge_table(&mut self, vertices: Vec<usize>, accepted: Vec<bool>) -> Result<()> {
        self.check_vertices(&vertices)?;
        if accepted.len() != self.labels.total_size() {
            return Err(Error::domain(
                ARITY_MISMATCH,
                format!("acceptance table of {} entries, expected {}", accepted.len(), self.labels.total_size()),
            ));
        }
        self.edges.push(GameEdge { vertices, accepted });
        Ok(())
    }

    /// Add an edge whose accepted tuples are those listed; an empty list gives
    /// an edge no strategy satisfies.
    pub fn add_edge(&mut self, vertices: Vec<usize>, accepted: &[Vec<usize>]) -> Result<()> {
        let mut table = vec![false; self.labels.total_size()];
        for t in accepted {
            table[self.labels.index_of(t)?] = true;
        }
        self.add_edge_table(vertices, table)
    }

    pub fn add_edge_fn(&mut self, vertices: Vec<usize>, accept: impl Fn(&[usize]) -> bool) -> Result<()> {
        let table = self.labels.points().map(|t| accept(&t)).collect();
        self.add_edge_table(vertices, table)
    }

    /// Fraction of edges whose labels are accepted under `strategy[i][v]`;
    /// 1 for a game without edges.
    pub fn value_of(&self, strategy: &[Vec<usize>]) -> Result<Prob> {
        if strategy.len() != self.players()
            || (0..self.players()).any(|i| strategy[i].len() != self.vertices[i] || strategy[i].iter().any(|&s| s >= self.alphabets[i]))
        {
            return Err(Error::domain(DOMAIN, "strategy does not match the game's vertex sets and alphabets"));
        }
        let won = self.edges.iter().filter(|e| e.accepted[self.label_rank(e, strategy)]).count();
        Ok(self.fraction(won))
    }

    fn label_rank(&self, e: &GameEdge, strategy: &[Vec<usize>]) -> usize {
        (0..self.players()).map(|i| strategy[i][e.vertices[i]] * self.labels.stride(i)).sum()
    }

    fn fraction(&self, won: usize) -> Prob {
        if self.edges.is_empty() {
            rational::one()
        } else {
            rational::ratio(won as i64, self.edges.len() as i64)
        }
    }

    pub fn to_json(&self) -> GameJson {
        GameJson {
            vertices: self.vertices.clone(),
            alphabets: self.alphabets.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    vertices: e.vertices.clone(),
                    accepted: e
                        .accepted
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b)
                        .map(|(r, _)| self.labels.point_unchecked(r))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &GameJson) -> Result<Self> {
        let mut g = Game::new(j.vertices.clone(), j.alphabets.clone())?;
        for e in &j.edges {
            g.add_edge(e.vertices.clone(), &e.accepted)?;
        }
        Ok(g)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let j: GameJson = serde_json::from_str(text).map_err(|e| Error::domain(PARSE, e.to_string()))?;
        Self::from_json(&j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub vertices: Vec<usize>,
    pub accepted: Vec<Vec<usize>>,
}

/// `{ "vertices": [|V₁|,…], "alphabets": [|Σ₁|,…], "edges": [ { "vertices": [...], "accepted": [[...], …] } ] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameJson {
    pub vertices: Vec<usize>,
    pub alphabets: Vec<usize>,
    pub edges: Vec<EdgeJson>,
}

/// The two-player coloring game of a graph: player 1 colors the first endpoint
/// of an edge, player 2 the second, and they win when the colors differ.
pub fn coloring_game(vertices: usize, edges: &[(usize, usize)], colors: usize) -> Result<Game> {
    let mut g = Game::new(vec![vertices; 2], vec![colors; 2])?;
    for &(u, v) in edges {
        g.add_edge_fn(vec![u, v], |c| c[0] != c[1])?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameValue {
    pub value: Prob,
    pub won: usize,
    pub edges: usize,
    /// `strategy[i][v]` is the label player `i` gives vertex `v`.
    pub strategy: Vec<Vec<usize>>,
}

impl Serialize for GameValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("GameValue", 5)?;
        st.serialize_field("value", &rational::format(&self.value))?;
        st.serialize_field("value_f64", &rational::to_f64(&self.value))?;
        st.serialize_field("won", &self.won)?;
        st.serialize_field("edges", &self.edges)?;
        st.serialize_field("strategy", &self.strategy)?;
        st.end()
    }
}

/// `val(G) = max over strategies A_i: V_i → Σ_i` of the fraction of accepted edges.
///
/// Strategies of all but the last player are enumerated; once those are fixed
/// the last player's vertices decouple and each takes its best label.
pub fn game_value(g: &Game, threads: usize) -> Result<GameValue> {
    let k = g.players();
    let last = k - 1;
    let lead: f64 = (0..last).map(|i| (g.alphabets[i] as f64).powi(g.vertices[i] as i32)).product();
    if lead > BRUTE_FORCE_CAP {
        return Err(Error::domain(
            SIZE_CAP,
            format!("{lead:.3e} joint strategies exceed the brute-force cap {BRUTE_FORCE_CAP:e}"),
        ));
    }
    let lead = lead as usize;
    let mut incident = vec![Vec::new(); g.vertices[last]];
    for (e, edge) in g.edges.iter().enumerate() {
        incident[edge.vertices[last]].push(e);
    }
    let decode = |mut r: usize| -> Vec<Vec<usize>> {
        let mut s: Vec<Vec<usize>> = (0..last).map(|i| vec![0; g.vertices[i]]).collect();
        for i in (0..last).rev() {
            for v in (0..g.vertices[i]).rev() {
                s[i][v] = r % g.alphabets[i];
                r /= g.alphabets[i];
            }
        }
        s
    };
    let respond = |s: &[Vec<usize>]| -> (usize, Vec<usize>) {
        let stride = g.labels.stride(last);
        let mut total = 0;
        let mut reply = vec![0; g.vertices[last]];
        for (v, es) in incident.iter().enumerate() {
            let partial: Vec<usize> = es
                .iter()
                .map(|&e| (0..last).map(|i| s[i][g.edges[e].vertices[i]] * g.labels.stride(i)).sum())
                .collect();
            let (mut best, mut label) = (0, 0);
            for a in 0..g.alphabets[last] {
                let won = es.iter().zip(&partial).filter(|&(&e, &r)| g.edges[e].accepted[r + a * stride]).count();
                if won > best {
                    best = won;
                    label = a;
                }
            }
            total += best;
            reply[v] = label;
        }
        (total, reply)
    };
    let chunks = (threads.max(1) * 4).min(lead);
    let size = lead.div_ceil(chunks);
    let parts = par_map(lead.div_ceil(size), threads, |c| {
        let mut best = (0usize, c * size);
        for r in c * size..((c + 1) * size).min(lead) {
            let (won, _) = respond(&decode(r));
            if won > best.0 {
                best = (won, r);
            }
        }
        best
    });
    let (_, r) = parts.into_iter().fold((0, 0), |acc, p| if p.0 > acc.0 { p } else { acc });
    let mut strategy = decode(r);
    let (won, reply) = respond(&strategy);
    strategy.push(reply);
    Ok(GameValue {
        value: g.fraction(won),
        won,
        edges: g.edges.len(),
        strategy,
    })
}

/// The `n`-fold repeated game: vertex sets `V_iⁿ`, alphabets `Σ_iⁿ`, one edge
/// per `n`-tuple of base edges, accepting exactly when every coordinate's
/// labels are accepted by that coordinate's base edge.
///
/// Vertices and labels of the repeated game are ranked lexicographically.
pub fn repeat_game(g: &Game, n: usize) -> Result<Game> {
    let k = g.players();
    let edge_count = (g.edges.len() as f64).powi(n as i32);
    let table: f64 = g.alphabets.iter().map(|&m| (m as f64).powi(n as i32)).product();
    if edge_count * table > BRUTE_FORCE_CAP {
        return Err(Error::domain(
            SIZE_CAP,
            format!("repeated game needs {:.3e} table entries, above {BRUTE_FORCE_CAP:e}", edge_count * table),
        ));
    }
    let vspaces = (0..k).map(|i| ProductSpace::uniform(g.vertices[i], n)).collect::<Result<Vec<_>>>()?;
    let lspaces = (0..k).map(|i| ProductSpace::uniform(g.alphabets[i], n)).collect::<Result<Vec<_>>>()?;
    let mut out = Game::new(
        vspaces.iter().map(ProductSpace::total_size).collect(),
        lspaces.iter().map(ProductSpace::total_size).collect(),
    )?;
    let tuples = ProductSpace::uniform(g.edges.len().max(1), n)?;
    if g.edges.is_empty() {
        return Ok(out);
    }
    for t in tuples.points() {
        let es: Vec<&GameEdge> = t.iter().map(|&e| &g.edges[e]).collect();
        let vertices = (0..k)
            .map(|i| es.iter().fold(0, |acc, e| acc * g.vertices[i] + e.vertices[i]))
            .collect();
        let accepted = out
            .labels
            .points()
            .map(|labels| {
                (0..n).all(|j| {
                    let rank: usize = (0..k).map(|i| lspaces[i].digit(labels[i], j) * g.labels.stride(i)).sum();
                    es[j].accepted[rank]
                })
            })
            .collect();
        out.add_edge_table(vertices, accepted)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::rng::{self, Rng};

    fn random_game(seed: u64) -> Game {
        let mut r = rng::rng(seed);
        let k = r.gen_range(2..=3);
        let vertices: Vec<usize> = (0..k).map(|_| r.gen_range(1..=2)).collect();
        let alphabets: Vec<usize> = (0..k).map(|_| r.gen_range(1..=2)).collect();
        let mut g = Game::new(vertices.clone(), alphabets).unwrap();
        for _ in 0..r.gen_range(1..=3) {
            let vs = vertices.iter().map(|&m| r.gen_range(0..m)).collect();
            let table = (0..g.labels.total_size()).map(|_| r.gen_bool(0.5)).collect();
            g.add_edge_table(vs, table).unwrap();
        }
        g
    }

    fn exhaustive(g: &Game) -> Prob {
        let sizes: Vec<usize> = (0..g.players())
            .flat_map(|i| std::iter::repeat(g.alphabets[i]).take(g.vertices[i]))
            .collect();
        let space = ProductSpace::new(sizes).unwrap();
        space
            .points()
            .map(|flat| {
                let mut it = flat.into_iter();
                let s: Vec<Vec<usize>> = g.vertices.iter().map(|&m| it.by_ref().take(m).collect()).collect();
                g.value_of(&s).unwrap()
            })
            .max()
            .unwrap()
    }

    #[test]
    fn accept_everything_has_value_one() {
        let mut g = Game::new(vec![1, 1], vec![2, 3]).unwrap();
        g.add_edge_fn(vec![0, 0], |_| true).unwrap();
        assert_eq!(game_value(&g, 1).unwrap().value, rational::one());
        let g2 = repeat_game(&g, 3).unwrap();
        assert_eq!(g2.alphabets(), &[8, 27]);
        assert_eq!(game_value(&g2, 1).unwrap().value, rational::one());
    }

    #[test]
    fn triangle_coloring_game() {
        let g = coloring_game(3, &[(0, 1), (1, 2), (0, 2)], 2).unwrap();
        let v = game_value(&g, 1).unwrap();
        assert_eq!(v.value, rational::one());
        assert_eq!(g.value_of(&v.strategy).unwrap(), v.value);
    }

    #[test]
    fn matches_exhaustive_search_and_repetition_bound() {
        for seed in 0..30 {
            let g = random_game(seed);
            let v = game_value(&g, 2).unwrap();
            assert_eq!(v.value, exhaustive(&g), "seed {seed}");
            assert_eq!(g.value_of(&v.strategy).unwrap(), v.value);
            let g2 = repeat_game(&g, 2).unwrap();
            assert_eq!(g2.edges().len(), g.edges().len().pow(2));
            let v2 = game_value(&g2, 2).unwrap();
            assert!(v2.value >= &v.value * &v.value, "seed {seed}");
        }
    }

    #[test]
    fn repetition_is_conjunctive() {
        let mut g = Game::new(vec![2, 1], vec![2, 2]).unwrap();
        g.add_edge(vec![0, 0], &[vec![0, 0], vec![1, 1]]).unwrap();
        g.add_edge(vec![1, 0], &[vec![0, 1]]).unwrap();
        assert_eq!(game_value(&g, 1).unwrap().value, rational::one());
        let g2 = repeat_game(&g, 2).unwrap();
        // Edge (e0, e1): player 1 vertex (0, 1) = 1, player 2 vertex (0, 0) = 0.
        let e = &g2.edges()[1];
        assert_eq!(e.vertices, vec![1, 0]);
        let accepted: Vec<usize> = (0..16).filter(|&r| e.accepted[r]).collect();
        // Labels (a, b) in Σ₁² × Σ₂²: a = (a0, a1), b = (b0, b1) with a0 = b0 and (a1, b1) = (0, 1).
        let expect: Vec<usize> = [(0usize, 1usize), (2, 3)].iter().map(|&(a, b)| a * 4 + b).collect();
        assert_eq!(accepted, expect);
    }

    #[test]
    fn empty_edges_and_caps() {
        let mut g = Game::new(vec![1, 1], vec![2, 2]).unwrap();
        assert_eq!(game_value(&g, 1).unwrap().value, rational::one());
        g.add_edge(vec![0, 0], &[]).unwrap();
        assert_eq!(game_value(&g, 1).unwrap().value, ratio(0, 1));
        assert!(g.add_edge(vec![0, 1], &[]).is_err());
        let big = Game::new(vec![30, 1], vec![2, 2]).unwrap();
        assert_eq!(game_value(&big, 1).unwrap_err().code(), SIZE_CAP);
    }

    #[test]
    fn json_round_trip() {
        let g = random_game(4);
        let text = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(Game::from_json_str(&text).unwrap(), g);
    }
}
