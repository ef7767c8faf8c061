//! Synthetic datasets for tests and experiments.
//!
//! Every generator is a pure function of its [`DatasetSpec`]: the same spec
//! always yields the same points in the same order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::points::{BoundsSpec, QuantizedPointSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    /// Independent uniform coordinates over the whole domain.
    Uniform,
    /// Uniform inside the low corner: every coordinate below `2^(b-2)`.
    Quadrant,
    /// Isotropic Gaussian blobs with uniformly placed centers. `sigma` is a
    /// fraction of each axis extent.
    GaussianMixture { blobs: u32, sigma: f64 },
    /// Regular lattice over the first `d-1` axes with a smooth random height
    /// on the last axis.
    TerrainGrid,
}

impl Generator {
    pub fn id(&self) -> &'static str {
        match self {
            Generator::Uniform => "uniform",
            Generator::Quadrant => "quadrant",
            Generator::GaussianMixture { .. } => "gaussian-mixture",
            Generator::TerrainGrid => "terrain-grid",
        }
    }

    pub fn mixture() -> Self {
        Generator::GaussianMixture { blobs: 4, sigma: 0.04 }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Generator::Uniform),
            "quadrant" => Ok(Generator::Quadrant),
            "gaussian-mixture" | "mixture" => Ok(Generator::mixture()),
            "terrain-grid" | "terrain" => Ok(Generator::TerrainGrid),
            _ => Err(invalid(format!(
                "unknown generator '{s}' (expected uniform, quadrant, gaussian-mixture or terrain-grid)"
            ))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub generator: Generator,
    pub n: usize,
    pub bounds: BoundsSpec,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(generator: Generator, n: usize, bounds: BoundsSpec, seed: u64) -> Self {
        DatasetSpec { generator, n, bounds, seed }
    }

    pub fn generate(&self) -> Result<QuantizedPointSet> {
        generate(self)
    }
}

pub fn generate(spec: &DatasetSpec) -> Result<QuantizedPointSet> {
    let bounds = &spec.bounds;
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut set = QuantizedPointSet::empty(bounds.clone());
    match spec.generator {
        Generator::Uniform => {
            for _ in 0..spec.n {
                let p: Vec<u32> = (0..d).map(|a| rng.gen_range(0..bounds.extent(a)) as u32).collect();
                set.push_unchecked(&p);
            }
        }
        Generator::Quadrant => {
            for _ in 0..spec.n {
                let p: Vec<u32> = (0..d)
                    .map(|a| {
                        let top = (bounds.extent(a) >> 2).max(1);
                        rng.gen_range(0..top) as u32
                    })
                    .collect();
                set.push_unchecked(&p);
            }
        }
        Generator::GaussianMixture { blobs, sigma } => {
            if blobs == 0 || !(sigma > 0.0 && sigma.is_finite()) {
                return Err(invalid("mixture needs at least one blob and a positive sigma"));
            }
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            let centers: Vec<Vec<f64>> =
                (0..blobs).map(|_| (0..d).map(|_| rng.gen_range(0.15..0.85)).collect()).collect();
            for _ in 0..spec.n {
                let c = &centers[rng.gen_range(0..centers.len())];
                let p: Vec<u32> = (0..d)
                    .map(|a| {
                        let ext = bounds.extent(a) as f64;
                        let x = (c[a] + sigma * unit.sample(&mut rng)) * ext;
                        x.floor().clamp(0.0, ext - 1.0) as u32
                    })
                    .collect();
                set.push_unchecked(&p);
            }
        }
        Generator::TerrainGrid => terrain(spec, &mut rng, &mut set)?,
    }
    Ok(set)
}

fn terrain(spec: &DatasetSpec, rng: &mut ChaCha8Rng, set: &mut QuantizedPointSet) -> Result<()> {
    let bounds = &spec.bounds;
    let d = bounds.dim();
    if d < 2 {
        return Err(invalid("terrain-grid needs at least two axes"));
    }
    let plan = d - 1;
    let side = lattice_side(spec.n as u64, plan as u32);
    if (0..plan).any(|a| side > bounds.extent(a)) {
        return Err(invalid(format!("a {side}-per-axis lattice does not fit the bounds")));
    }
    // a few random plane waves give a smooth height field
    let waves: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|i| {
            let freq: Vec<f64> = (0..plan).map(|_| rng.gen_range(-3.0..3.0) / f64::from(i + 1)).collect();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = 1.0 / f64::from(i + 1);
            (freq, phase, amp)
        })
        .collect();
    let amp_sum: f64 = waves.iter().map(|w| w.2).sum();
    let z_levels = (bounds.extent(plan) - 1) as f64;
    let mut p = vec![0u32; d];
    for idx in 0..spec.n as u64 {
        let mut rest = idx;
        let mut h = 0.0;
        for a in (0..plan).rev() {
            let j = rest % side;
            rest /= side;
            p[a] = if side == 1 { 0 } else { (j * (bounds.extent(a) - 1) / (side - 1)) as u32 };
        }
        for (freq, phase, amp) in &waves {
            let t: f64 = (0..plan).map(|a| freq[a] * f64::from(p[a]) / bounds.extent(a) as f64).sum();
            h += amp * (std::f64::consts::TAU * t + phase).sin();
        }
        let z = (0.5 + 0.5 * h / amp_sum) * z_levels;
        p[plan] = z.round().clamp(0.0, z_levels) as u32;
        set.push_unchecked(&p);
    }
    Ok(())
}

/// Smallest `g` with `g^k >= n`.
fn lattice_side(n: u64, k: u32) -> u64 {
    let mut g = (n as f64).powf(1.0 / f64::from(k)).floor().max(1.0) as u64;
    while g.checked_pow(k).is_some_and(|v| v < n) {
        g += 1;
    }
    while g > 1 && (g - 1).checked_pow(k).is_some_and(|v| v >= n) {
        g -= 1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(g: Generator, n: usize, bits: &[u8]) -> DatasetSpec {
        DatasetSpec::new(g, n, BoundsSpec::new(bits).unwrap(), 7)
    }

    #[test]
    fn empty_uniform() {
        assert!(spec(Generator::Uniform, 0, &[8, 8]).generate().unwrap().is_empty());
    }

    #[test]
    fn quadrant_stays_low() {
        let s = spec(Generator::Quadrant, 2000, &[10, 6, 3]).generate().unwrap();
        for p in s.iter() {
            assert!(p[0] < 256 && p[1] < 16 && p[2] < 2, "{p:?}");
        }
    }

    #[test]
    fn deterministic() {
        for g in [Generator::Uniform, Generator::Quadrant, Generator::mixture(), Generator::TerrainGrid] {
            let a = spec(g, 500, &[9, 9, 8]).generate().unwrap();
            let b = spec(g, 500, &[9, 9, 8]).generate().unwrap();
            assert_eq!(a, b, "{g}");
            let other = DatasetSpec { seed: 8, ..spec(g, 500, &[9, 9, 8]) }.generate().unwrap();
            assert_ne!(a, other, "{g}");
        }
    }

    #[test]
    fn terrain_is_a_lattice() {
        let s = spec(Generator::TerrainGrid, 3721, &[10, 10, 6]).generate().unwrap();
        assert_eq!(s.len(), 3721);
        let mut xy: Vec<(u32, u32)> = s.iter().map(|p| (p[0], p[1])).collect();
        xy.sort_unstable();
        xy.dedup();
        assert_eq!(xy.len(), 3721);
        let xs: std::collections::BTreeSet<u32> = s.iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 61);
        assert_eq!(*xs.iter().next_back().unwrap(), 1023);
    }

    #[test]
    fn lattice_sides() {
        assert_eq!(lattice_side(3721, 2), 61);
        assert_eq!(lattice_side(3722, 2), 62);
        assert_eq!(lattice_side(1, 3), 1);
        assert_eq!(lattice_side(27, 3), 3);
        assert_eq!(lattice_side(28, 3), 4);
    }

    #[test]
    fn unknown_generator() {
        assert!("sphere".parse::<Generator>().is_err());
        assert_eq!("terrain-grid".parse::<Generator>().unwrap(), Generator::TerrainGrid);
    }
}
