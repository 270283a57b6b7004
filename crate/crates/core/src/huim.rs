//! High-utility itemset mining.
//!
//! Both miners run one depth-first search over utility lists. Items are
//! first ordered by transaction-weighted utilization (TWU); every itemset's
//! list records, per supporting transaction, the itemset's utility and the
//! remaining utility of items later in that order. An extension is explored
//! only while `utility + remaining` can still reach the threshold, which
//! over-approximates any superset's utility. The minimum-utility miner also
//! drops items whose TWU is below the threshold up front.
//!
//! The top-k miner starts at threshold 0 and raises it to the k-th best
//! utility found so far. Results are ordered by utility descending, then
//! size ascending, then lexicographically by item index.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::transact::TransactionDB;

pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinedItemset {
    /// Sorted item indices.
    pub items: Vec<usize>,
    pub utility: u64,
    pub support: usize,
}

impl MinedItemset {
    pub fn display(&self, db: &TransactionDB) -> String {
        let names: Vec<String> = self.items.iter().map(|&i| db.name(i)).collect();
        format!("{{{}}} {}", names.join(","), self.utility)
    }
}

/// The canonical result order.
pub fn canonical_cmp(a: &MinedItemset, b: &MinedItemset) -> Ordering {
    b.utility
        .cmp(&a.utility)
        .then(a.items.len().cmp(&b.items.len()))
        .then_with(|| a.items.cmp(&b.items))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    MinUtil(u64),
    TopK(usize),
}

#[derive(Clone, Copy)]
struct Entry {
    tid: usize,
    utility: u64,
    remaining: u64,
}

struct UtilityList {
    item: usize,
    entries: Vec<Entry>,
    utility: u64,
    remaining: u64,
}

impl UtilityList {
    fn new(item: usize, entries: Vec<Entry>) -> Self {
        let utility = entries.iter().map(|e| e.utility).sum();
        let remaining = entries.iter().map(|e| e.remaining).sum();
        UtilityList {
            item,
            entries,
            utility,
            remaining,
        }
    }

    /// List of `prefix ∪ {x, y}` from the lists of `prefix ∪ {x}` and
    /// `prefix ∪ {y}`, where `y` comes after `x` in the search order.
    fn join(prefix: Option<&UtilityList>, x: &UtilityList, y: &UtilityList) -> UtilityList {
        let mut out = Vec::with_capacity(x.entries.len().min(y.entries.len()));
        let (mut j, mut k) = (0, 0);
        for ex in &x.entries {
            while j < y.entries.len() && y.entries[j].tid < ex.tid {
                j += 1;
            }
            if j == y.entries.len() {
                break;
            }
            let ey = y.entries[j];
            if ey.tid != ex.tid {
                continue;
            }
            let shared = match prefix {
                Some(p) => {
                    while p.entries[k].tid < ex.tid {
                        k += 1;
                    }
                    p.entries[k].utility
                }
                None => 0,
            };
            out.push(Entry {
                tid: ex.tid,
                utility: ex.utility + ey.utility - shared,
                remaining: ey.remaining,
            });
        }
        UtilityList::new(y.item, out)
    }
}

/// Sink for discovered itemsets that also owns the live threshold.
trait Collector {
    fn threshold(&self) -> u64;
    fn offer(&mut self, items: &[usize], list: &UtilityList);
}

struct MinUtilCollector {
    min_util: u64,
    found: Vec<MinedItemset>,
}

impl Collector for MinUtilCollector {
    fn threshold(&self) -> u64 {
        self.min_util
    }

    fn offer(&mut self, items: &[usize], list: &UtilityList) {
        if list.utility >= self.min_util {
            self.found.push(itemset(items, list));
        }
    }
}

struct TopKCollector {
    k: usize,
    /// Kept in canonical order; never longer than `k`.
    best: Vec<MinedItemset>,
}

impl Collector for TopKCollector {
    fn threshold(&self) -> u64 {
        if self.best.len() < self.k {
            0
        } else {
            self.best.last().map_or(0, |m| m.utility)
        }
    }

    fn offer(&mut self, items: &[usize], list: &UtilityList) {
        if list.utility < self.threshold() {
            return;
        }
        let candidate = itemset(items, list);
        let pos = self
            .best
            .binary_search_by(|m| canonical_cmp(m, &candidate))
            .unwrap_or_else(|p| p);
        if pos < self.k {
            self.best.insert(pos, candidate);
            self.best.truncate(self.k);
        }
    }
}

fn itemset(items: &[usize], list: &UtilityList) -> MinedItemset {
    let mut items = items.to_vec();
    items.sort_unstable();
    MinedItemset {
        items,
        utility: list.utility,
        support: list.entries.len(),
    }
}

fn search<C: Collector>(
    prefix_items: &mut Vec<usize>,
    prefix: Option<&UtilityList>,
    lists: &[UtilityList],
    sink: &mut C,
) {
    for (i, x) in lists.iter().enumerate() {
        prefix_items.push(x.item);
        sink.offer(prefix_items, x);
        if x.utility + x.remaining >= sink.threshold() && i + 1 < lists.len() {
            let extensions: Vec<UtilityList> = lists[i + 1..]
                .iter()
                .map(|y| UtilityList::join(prefix, x, y))
                .filter(|l| !l.entries.is_empty())
                .collect();
            if !extensions.is_empty() {
                search(prefix_items, Some(x), &extensions, sink);
            }
        }
        prefix_items.pop();
    }
}

/// Single-item utility lists over items with TWU at least `min_twu`,
/// in ascending-TWU search order.
fn initial_lists(db: &TransactionDB, min_twu: u64) -> Vec<UtilityList> {
    let mut twu = vec![0u64; db.item_count];
    for t in &db.transactions {
        let tu = t.utility();
        for &(item, _) in &t.entries {
            twu[item] += tu;
        }
    }
    let mut present = vec![false; db.item_count];
    for t in &db.transactions {
        for &(item, _) in &t.entries {
            present[item] = true;
        }
    }
    let mut order: Vec<usize> = (0..db.item_count)
        .filter(|&i| present[i] && twu[i] >= min_twu)
        .collect();
    order.sort_by_key(|&i| (twu[i], i));
    let mut rank = vec![usize::MAX; db.item_count];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let mut entries: Vec<Vec<Entry>> = vec![Vec::new(); order.len()];
    for (tid, t) in db.transactions.iter().enumerate() {
        let mut revised: Vec<(usize, u64)> = t
            .entries
            .iter()
            .filter(|e| rank[e.0] != usize::MAX)
            .map(|&(item, u)| (rank[item], u))
            .collect();
        revised.sort_unstable();
        let mut remaining: u64 = revised.iter().map(|e| e.1).sum();
        for (r, u) in revised {
            remaining -= u;
            entries[r].push(Entry {
                tid,
                utility: u,
                remaining,
            });
        }
    }
    order
        .into_iter()
        .zip(entries)
        .map(|(item, e)| UtilityList::new(item, e))
        .collect()
}

/// Every itemset with utility at least `min_util`, in canonical order.
pub fn mine_min_util(db: &TransactionDB, min_util: u64) -> Vec<MinedItemset> {
    let lists = initial_lists(db, min_util);
    let mut sink = MinUtilCollector {
        min_util,
        found: Vec::new(),
    };
    search(&mut Vec::new(), None, &lists, &mut sink);
    sink.found.sort_by(canonical_cmp);
    sink.found
}

/// The `k` best itemsets in canonical order (fewer if fewer exist).
pub fn mine_top_k(db: &TransactionDB, k: usize) -> Vec<MinedItemset> {
    if k == 0 {
        return vec![];
    }
    let lists = initial_lists(db, 0);
    let mut sink = TopKCollector {
        k,
        best: Vec::new(),
    };
    search(&mut Vec::new(), None, &lists, &mut sink);
    sink.best
}

pub fn mine(db: &TransactionDB, threshold: Threshold) -> Vec<MinedItemset> {
    match threshold {
        Threshold::MinUtil(u) => mine_min_util(db, u),
        Threshold::TopK(k) => mine_top_k(db, k),
    }
}

/// Exhaustive enumeration over the items that occur in `db`.
pub fn brute_force(db: &TransactionDB, threshold: Threshold) -> Result<Vec<MinedItemset>> {
    let items: Vec<usize> = db
        .transactions
        .iter()
        .flat_map(|t| t.entries.iter().map(|e| e.0))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if items.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooManyItems {
            count: items.len(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut all = Vec::new();
    for mask in 1u32..(1u32 << items.len()) {
        let set: Vec<usize> = (0..items.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| items[b])
            .collect();
        let (mut utility, mut support) = (0u64, 0usize);
        for t in &db.transactions {
            let found: Option<Vec<u64>> = set
                .iter()
                .map(|i| t.entries.iter().find(|e| e.0 == *i).map(|e| e.1))
                .collect();
            if let Some(us) = found {
                utility += us.iter().sum::<u64>();
                support += 1;
            }
        }
        if support > 0 {
            all.push(MinedItemset {
                items: set,
                utility,
                support,
            });
        }
    }
    all.sort_by(canonical_cmp);
    Ok(match threshold {
        Threshold::MinUtil(u) => all.into_iter().filter(|m| m.utility >= u).collect(),
        Threshold::TopK(k) => {
            all.truncate(k);
            all
        }
    })
}

/// Upper bound on the utility of `items` and all of its supersets.
pub fn twu(db: &TransactionDB, items: &[usize]) -> u64 {
    db.transactions
        .iter()
        .filter(|t| items.iter().all(|i| t.entries.iter().any(|e| e.0 == *i)))
        .map(|t| t.utility())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transact::Transaction;

    pub(crate) const FIVE_TX: &str = "\
a b c d e:25:5 10 1 6 3
b c d e:20:8 3 6 3
a c d:8:5 1 2
a c e:22:10 6 6
b c e:9:4 2 3
";

    fn rendered(db: &TransactionDB, found: &[MinedItemset]) -> Vec<String> {
        found.iter().map(|m| m.display(db)).collect()
    }

    #[test]
    fn five_transactions_min_util_25() {
        let db = TransactionDB::parse(FIVE_TX).unwrap();
        let found = mine_min_util(&db, 25);
        assert_eq!(
            rendered(&db, &found),
            [
                "{b,c,d,e} 40",
                "{b,c,e} 37",
                "{b,d,e} 36",
                "{b,c,d} 34",
                "{b,e} 31",
                "{a,c,e} 31",
                "{b,d} 30",
                "{a,c} 28",
                "{b,c} 28",
                "{c,e} 27",
                "{a,b,c,d,e} 25",
            ]
        );
        assert_eq!(found, brute_force(&db, Threshold::MinUtil(25)).unwrap());
    }

    #[test]
    fn five_transactions_top_k() {
        let db = TransactionDB::parse(FIVE_TX).unwrap();
        assert_eq!(rendered(&db, &mine_top_k(&db, 1)), ["{b,c,d,e} 40"]);
        let top3: Vec<u64> = mine_top_k(&db, 3).iter().map(|m| m.utility).collect();
        assert_eq!(top3, [40, 37, 36]);
        assert!(mine_min_util(&db, 41).is_empty());
    }

    #[test]
    fn trivial_dbs() {
        let single = TransactionDB::new(
            vec![Transaction {
                example_id: 0,
                entries: vec![(0, 5)],
            }],
            1,
        );
        assert_eq!(
            mine_min_util(&single, 5),
            vec![MinedItemset {
                items: vec![0],
                utility: 5,
                support: 1
            }]
        );
        let empty = TransactionDB::new(vec![], 3);
        assert!(mine_top_k(&empty, 4).is_empty());
        let blank = TransactionDB::new(
            vec![Transaction {
                example_id: 0,
                entries: vec![],
            }],
            3,
        );
        assert!(brute_force(&blank, Threshold::MinUtil(0))
            .unwrap()
            .is_empty());
        assert!(mine_min_util(&blank, 0).is_empty());
    }

    #[test]
    fn ties_at_the_cutoff_prefer_smaller_then_lexicographic() {
        // {0}:4, {1}:4, {0,1}:4 all tie
        let db = TransactionDB::new(
            vec![
                Transaction {
                    example_id: 0,
                    entries: vec![(0, 2), (1, 2)],
                },
                Transaction {
                    example_id: 1,
                    entries: vec![(0, 2)],
                },
                Transaction {
                    example_id: 2,
                    entries: vec![(1, 2)],
                },
            ],
            2,
        );
        let top = mine_top_k(&db, 2);
        assert_eq!(
            top.iter().map(|m| m.items.clone()).collect::<Vec<_>>(),
            [vec![0], vec![1]]
        );
    }

    #[test]
    fn brute_force_cap() {
        let t = Transaction {
            example_id: 0,
            entries: (0..21).map(|i| (i, 1)).collect(),
        };
        assert!(brute_force(&TransactionDB::new(vec![t], 21), Threshold::TopK(1)).is_err());
    }
}
