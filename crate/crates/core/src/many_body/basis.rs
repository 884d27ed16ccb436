use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ModelParams, DEFAULT_BASIS_BUDGET};
use crate::error::{Error, Result};

/// Sorted list of occupied plane-wave modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlaterConfig {
    pub occupied: Vec<i64>,
}

impl SlaterConfig {
    pub fn total_momentum_index(&self) -> i64 {
        self.occupied.iter().sum()
    }
}

/// Crystal-momentum label: `Σ n` exactly, or `Σ n mod modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub value: i64,
    pub modulus: Option<i64>,
}

impl Sector {
    pub fn exact(value: i64) -> Self {
        Self {
            value,
            modulus: None,
        }
    }

    pub fn modular(value: i64, modulus: i64) -> Self {
        Self {
            value: value.rem_euclid(modulus),
            modulus: Some(modulus),
        }
    }

    pub fn contains(&self, total: i64) -> bool {
        match self.modulus {
            None => total == self.value,
            Some(q) => total.rem_euclid(q) == self.value,
        }
    }
}

/// Ordered set of `N`-fermion configurations, optionally restricted to one sector.
#[derive(Debug, Clone)]
pub struct SlaterBasis {
    m_modes: usize,
    n_particles: usize,
    masks: Vec<u128>,
    index: HashMap<u128, usize>,
    sector: Option<Sector>,
}

impl SlaterBasis {
    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn m_modes(&self) -> usize {
        self.m_modes
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn sector(&self) -> Option<Sector> {
        self.sector
    }

    pub fn config(&self, i: usize) -> SlaterConfig {
        SlaterConfig {
            occupied: modes_of(self.masks[i], self.m_modes),
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = SlaterConfig> + '_ {
        (0..self.dim()).map(|i| self.config(i))
    }

    /// Position of a configuration given by its occupation mask.
    pub fn position(&self, mask: u128) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn position_of(&self, config: &SlaterConfig) -> Option<usize> {
        let mut mask = 0u128;
        for &n in &config.occupied {
            let bit = n + self.m_modes as i64;
            if bit < 0 || bit > 2 * self.m_modes as i64 {
                return None;
            }
            mask |= 1u128 << bit;
        }
        self.position(mask)
    }

    pub(crate) fn mask(&self, i: usize) -> u128 {
        self.masks[i]
    }
}

fn modes_of(mask: u128, m_modes: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        let bit = rest.trailing_zeros() as i64;
        out.push(bit - m_modes as i64);
        rest &= rest - 1;
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All `N`-subsets of the `2M+1` modes in lexicographic order, keeping those
/// inside `sector`. Fails with [`Error::Capacity`] when `C(2M+1, N)` exceeds
/// `budget` (default [`DEFAULT_BASIS_BUDGET`]).
pub fn build_basis(
    params: &ModelParams,
    sector: Option<Sector>,
    budget: Option<u128>,
) -> Result<SlaterBasis> {
    params.validate()?;
    let n_modes = params.n_modes();
    let n = params.n_electrons;
    let budget = budget.unwrap_or(DEFAULT_BASIS_BUDGET);
    let needed = binomial(n_modes as u128, n as u128);
    if needed > budget {
        return Err(Error::Capacity {
            what: "Slater basis",
            needed,
            budget,
        });
    }
    let m = params.m_modes as i64;
    let mut masks = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let total: i64 = idx.iter().map(|&b| b as i64 - m).sum();
        if sector.is_none_or(|s| s.contains(total)) {
            masks.push(idx.iter().fold(0u128, |acc, &b| acc | (1u128 << b)));
        }
        // Advance to the next combination.
        let mut i = n;
        loop {
            if i == 0 {
                let index = masks.iter().enumerate().map(|(i, &k)| (k, i)).collect();
                return Ok(SlaterBasis {
                    m_modes: params.m_modes,
                    n_particles: n,
                    masks,
                    index,
                    sector,
                });
            }
            i -= 1;
            if idx[i] < n_modes - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Non-empty bases for every conserved crystal-momentum sector of the model.
pub fn build_sector_bases(params: &ModelParams, budget: Option<u128>) -> Result<Vec<SlaterBasis>> {
    let full = build_basis(params, None, budget)?;
    let modulus = params.momentum_modulus();
    let mut groups: std::collections::BTreeMap<i64, Vec<u128>> = Default::default();
    for &mask in &full.masks {
        let total: i64 = modes_of(mask, params.m_modes).iter().sum();
        let key = modulus.map_or(total, |q| total.rem_euclid(q));
        groups.entry(key).or_default().push(mask);
    }
    Ok(groups
        .into_iter()
        .map(|(value, masks)| {
            let index = masks.iter().enumerate().map(|(i, &k)| (k, i)).collect();
            SlaterBasis {
                m_modes: params.m_modes,
                n_particles: params.n_electrons,
                masks,
                index,
                sector: Some(match modulus {
                    None => Sector::exact(value),
                    Some(q) => Sector::modular(value, q),
                }),
            }
        })
        .collect())
}
