//! Seeded input generators.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{ExtArray, Record};

/// Key distribution of a generated input. Every generated record carries
/// its position as the tiebreak, so `(key, tiebreak)` is unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Independent uniform 64-bit keys.
    Uniform,
    /// Strictly increasing keys.
    Sorted,
    /// Strictly decreasing keys.
    Reverse,
    /// Uniform over exactly `k` raw key values (all of them present when `n >= k`).
    FewDistinct(u64),
    /// Half the records share key 0; the other half follow a geometric law
    /// over a handful of small keys with a uniform tail.
    AdversarialSkew,
}

impl Distribution {
    pub const ALL: [Distribution; 5] = [
        Distribution::Uniform,
        Distribution::Sorted,
        Distribution::Reverse,
        Distribution::FewDistinct(4),
        Distribution::AdversarialSkew,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Sorted => "sorted",
            Distribution::Reverse => "reverse",
            Distribution::FewDistinct(_) => "few-distinct",
            Distribution::AdversarialSkew => "adversarial-skew",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "uniform" | "uniform-random" => Distribution::Uniform,
            "sorted" => Distribution::Sorted,
            "reverse" => Distribution::Reverse,
            "few-distinct" => Distribution::FewDistinct(4),
            "adversarial-skew" | "skew" => Distribution::AdversarialSkew,
            _ => return Err(Error::Config("unknown input distribution")),
        })
    }
}

/// `n` records drawn from `dist`, deterministic per `seed`.
pub fn generate_records(n: usize, dist: Distribution, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n64 = n as u64;
    (0..n)
        .map(|i| {
            let i64_ = i as u64;
            let key = match dist {
                Distribution::Uniform => rng.gen(),
                Distribution::Sorted => i64_,
                Distribution::Reverse => n64 - 1 - i64_,
                Distribution::FewDistinct(k) => {
                    if n64 >= k && i64_ < k {
                        // guarantee every value appears
                        i64_
                    } else {
                        rng.gen_range(0..k)
                    }
                }
                Distribution::AdversarialSkew => {
                    if rng.gen_bool(0.5) {
                        0
                    } else {
                        let r: u64 = rng.gen();
                        let z = r.leading_zeros() as u64;
                        if z < 8 {
                            z + 1
                        } else {
                            r
                        }
                    }
                }
            };
            Record::new(key, i as u32)
        })
        .collect()
}

/// [`generate_records`] placed in secondary memory with block size `b`.
pub fn generate_input(n: usize, dist: Distribution, seed: u64, b: usize) -> ExtArray<Record> {
    ExtArray::from_vec(generate_records(n, dist, seed), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn empty() {
        for d in Distribution::ALL {
            assert!(generate_records(0, d, 1).is_empty());
        }
    }

    #[test]
    fn sorted_is_strictly_increasing() {
        let v = generate_records(1000, Distribution::Sorted, 3);
        assert!(v.windows(2).all(|w| w[0].key < w[1].key));
        let v = generate_records(1000, Distribution::Reverse, 3);
        assert!(v.windows(2).all(|w| w[0].key > w[1].key));
    }

    #[test]
    fn few_distinct_has_four_values() {
        let v = generate_records(5000, Distribution::FewDistinct(4), 9);
        let keys: BTreeSet<u64> = v.iter().map(|r| r.key).collect();
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn unique_and_deterministic() {
        for d in Distribution::ALL {
            let a = generate_records(3000, d, 42);
            assert_eq!(a, generate_records(3000, d, 42));
            let pairs: BTreeSet<(u64, u32)> = a.iter().map(|r| (r.key, r.tiebreak)).collect();
            assert_eq!(pairs.len(), 3000);
        }
        assert_ne!(
            generate_records(100, Distribution::Uniform, 1),
            generate_records(100, Distribution::Uniform, 2)
        );
    }

    #[test]
    fn names_roundtrip() {
        for d in Distribution::ALL {
            assert_eq!(d.name().parse::<Distribution>().unwrap(), d);
        }
        assert!("gaussian".parse::<Distribution>().is_err());
    }
}
