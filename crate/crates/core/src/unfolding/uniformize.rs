use serde::{Deserialize, Serialize};

use crate::dimension::{strategy_tree, TreeError, TreeMeasure};
use crate::engine::{GameParams, Position, StrategyI};
use crate::strategies::IfsPlayerI;

/// Witness prefix σ has emitted by one node of its tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderEntry {
    pub node: usize,
    pub depth: usize,
    pub emitted: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub node: usize,
    pub reason: String,
}

/// The map from σ-positions to emitted witness prefixes, with the modulus
/// `h(k)` = least emitted length over depth-`k` nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformizationReport {
    pub depth: usize,
    pub table: Vec<CylinderEntry>,
    pub modulus: Vec<usize>,
    pub monotone: bool,
    /// Every node's prefix extends the prefix of each of its ancestors, so
    /// branches agreeing to depth `k` share `h(k)` digits.
    pub continuity: bool,
    pub mismatches: Vec<Mismatch>,
}

impl UniformizationReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.continuity && self.mismatches.is_empty()
    }
}

/// Explores every reply of II to `depth` rounds against the unfolded
/// strategy σ and tabulates the witness prefix emitted at each node.
/// `check` may flag a node whose position disagrees with its prefix.
pub fn uniformization_extract(
    sigma: &mut dyn StrategyI,
    params: &GameParams,
    depth: usize,
    max_nodes: usize,
    check: Option<&dyn Fn(&Position) -> Option<String>>,
) -> Result<UniformizationReport, TreeError> {
    let tm = strategy_tree(sigma, params, depth, max_nodes)?;
    Ok(tabulate(&tm, check))
}

fn tabulate(tm: &TreeMeasure, check: Option<&dyn Fn(&Position) -> Option<String>>) -> UniformizationReport {
    let mut table: Vec<CylinderEntry> = Vec::with_capacity(tm.nodes().len());
    let mut mismatches = Vec::new();
    let mut continuity = true;
    for (id, node) in tm.nodes().iter().enumerate() {
        let mut emitted = node.parent.map(|p| table[p].emitted.clone()).unwrap_or_default();
        if let Some(r) = &node.round {
            emitted.extend(&r.digits);
        }
        if let Some(p) = node.parent {
            continuity &= emitted.starts_with(&table[p].emitted);
        }
        if let Some(f) = check {
            if node.depth > 0 {
                if let Some(reason) = f(&tm.position(id)) {
                    mismatches.push(Mismatch { node: id, reason });
                }
            }
        }
        table.push(CylinderEntry { node: id, depth: node.depth, emitted });
    }
    let modulus: Vec<usize> =
        (0..=tm.depth()).map(|k| table.iter().filter(|e| e.depth == k).map(|e| e.emitted.len()).min().unwrap_or(0)).collect();
    let monotone = modulus.windows(2).all(|w| w[0] <= w[1]);
    UniformizationReport { depth: tm.depth(), table, modulus, monotone, continuity, mismatches }
}

/// Cross-check for the unfolded IFS player: the emitted digits must be a
/// prefix of the address of the piece centered at the last chosen point,
/// and the piece they name must contain that point.
pub fn ifs_address_check<'a>(player: &'a IfsPlayerI, params: &'a GameParams) -> impl Fn(&Position) -> Option<String> + 'a {
    move |pos: &Position| {
        let n = pos.len();
        let x = pos.last_chosen()?;
        let emitted = pos.witness();
        let level = player.level_for_round(params, n - 1);
        let ifs = player.ifs();
        let Some(address) = ifs.address_of_center(x, level) else {
            return Some(format!("{x:?} is not a level-{level} piece center"));
        };
        if emitted.len() > address.len() || emitted.iter().zip(&address).any(|(&d, &a)| d != u64::from(a)) {
            return Some(format!("emitted {emitted:?} is not a prefix of address {address:?}"));
        }
        let named: Vec<u32> = emitted.iter().map(|&d| d as u32).collect();
        if !ifs.piece(&named).ball.contains_closed(x) {
            return Some(format!("piece {named:?} does not contain {x:?}"));
        }
        None
    }
}
