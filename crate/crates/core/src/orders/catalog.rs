//! Seed maximal orders, one record per discriminant:
//! `D ; a b ; 16 integers ; denominator`.

use super::{compute_maximal_order, Order};
use crate::core_algebra::arith::{Int, Rat};
use crate::core_algebra::QuatAlgebra;
use crate::error::{Error, Result};
use crate::lattices::ZLattice;
use std::collections::BTreeMap;
use std::sync::Mutex;

const DEFAULT: &str = include_str!("../../data/maximal_orders.txt");

#[derive(Debug)]
pub struct Catalog {
    records: BTreeMap<u64, (i64, i64, Vec<Int>, Int)>,
    cache: Mutex<BTreeMap<u64, Order>>,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::parse(DEFAULT).expect("bundled catalog parses")
    }
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Self> {
        let mut records = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Catalog(format!("line {}: malformed record", ln + 1));
            let parts: Vec<&str> = line.split(';').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            let d: u64 = parts[0].parse().map_err(|_| bad())?;
            let ab: Vec<i64> = parts[1]
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let nums: Vec<Int> = parts[2]
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let den: Int = parts[3].parse().map_err(|_| bad())?;
            if ab.len() != 2 || nums.len() != 16 {
                return Err(bad());
            }
            records.insert(d, (ab[0], ab[1], nums, den));
        }
        Ok(Catalog { records, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn from_path(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Catalog(format!("cannot read {path}: {e}")))?;
        Self::parse(&text)
    }

    pub fn discriminants(&self) -> Vec<u64> {
        self.records.keys().copied().collect()
    }

    /// Maximal order of discriminant D, from the catalog when present and
    /// computed by saturation otherwise.
    pub fn maximal_order(&self, d: u64) -> Result<Order> {
        if let Some(o) = self.cache.lock().unwrap().get(&d) {
            return Ok(o.clone());
        }
        let o = match self.records.get(&d) {
            Some((a, b, nums, den)) => {
                let alg = QuatAlgebra::from_ints(*a, *b)?;
                let rows: Vec<Vec<Rat>> = nums
                    .chunks(4)
                    .map(|r| r.iter().map(|x| Rat::new(x.clone(), den.clone())).collect())
                    .collect();
                let lat = ZLattice::from_rat_gens(&rows, 4)
                    .map_err(|_| Error::Catalog(format!("record for D = {d} is degenerate")))?;
                let o = Order::from_lattice(&alg, lat)
                    .map_err(|e| Error::Catalog(format!("record for D = {d}: {e}")))?;
                if o.disc() != d || o.level() != 1 {
                    return Err(Error::Catalog(format!("record for D = {d} is not maximal")));
                }
                o
            }
            None => compute_maximal_order(d)?,
        };
        self.cache.lock().unwrap().insert(d, o.clone());
        Ok(o)
    }
}

/// Render an order as a catalog record.
pub fn record(o: &Order) -> String {
    let den = o.lat.den().clone();
    let nums: Vec<String> = o
        .lat
        .int_basis()
        .iter()
        .flat_map(|r| r.iter().map(|x| x.to_string()))
        .collect();
    format!("{} ; {} {} ; {} ; {}", o.disc(), o.alg.a, o.alg.b, nums.join(" "), den)
}
