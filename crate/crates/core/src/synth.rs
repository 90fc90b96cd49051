//! Feature binarization, the planted-model generator and the exhaustive
//! optimum for tiny instances.

use ndarray::Array2;

use crate::batch::{Ranks, TuckerModel};
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};
use crate::tensor::{hamming_error, BoolMatrix, BoolTensor3, Dims, Mode};

/// One threshold per feature column; a raw value at or above its threshold is a 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec(pub Vec<f64>);

/// Slot matrix from raw per-object feature values.
pub fn binarize(raw: &Array2<f64>, thresholds: &ThresholdSpec) -> Result<BoolMatrix> {
    let (rows, cols) = raw.dim();
    if thresholds.0.len() != cols {
        return Err(Error::Config(format!(
            "{} thresholds for {cols} feature columns",
            thresholds.0.len()
        )));
    }
    if let Some(((i, j), v)) = raw.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite value {v} at row {i}, column {j}"
        )));
    }
    Ok(BoolMatrix::from_fn(rows, cols, |i, j| {
        raw[[i, j]] >= thresholds.0[j]
    }))
}

/// How the planted time factor evolves across slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drift {
    /// One time-factor row drawn once and repeated: every slot has the same
    /// reconstruction.
    Stationary,
    /// Every time-factor row drawn independently.
    Independent,
    /// Slots before `at` use one drawn row, slots from `at` on use a second.
    StepChange { at: usize },
    /// Stationary, plus cell `(object, feature)` flipped on every odd slot.
    Toggle { object: usize, feature: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub dims: Dims,
    pub ranks: Ranks,
    pub density_a: f64,
    pub density_b: f64,
    pub density_c: f64,
    pub density_core: f64,
    pub noise: f64,
    pub seed: u64,
    pub drift: Drift,
}

impl PlantedSpec {
    /// All four densities equal to `density`, no noise, independent time rows.
    pub fn uniform(dims: Dims, ranks: Ranks, density: f64, seed: u64) -> Self {
        PlantedSpec {
            dims,
            ranks,
            density_a: density,
            density_b: density,
            density_c: density,
            density_core: density,
            noise: 0.0,
            seed,
            drift: Drift::Independent,
        }
    }

    fn validate(&self) -> Result<()> {
        self.ranks.validate(self.dims)?;
        for (name, p) in [
            ("density_a", self.density_a),
            ("density_b", self.density_b),
            ("density_c", self.density_c),
            ("density_core", self.density_core),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        match self.drift {
            Drift::Toggle { object, feature }
                if object >= self.dims.o || feature >= self.dims.f =>
            {
                Err(Error::Config(format!(
                    "toggle cell ({object}, {feature}) outside {}x{}",
                    self.dims.o, self.dims.f
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Planted slots and the ground-truth model (for `Toggle`, the stationary model
/// underneath the toggled cell).
#[derive(Debug, Clone)]
pub struct Planted {
    pub slots: Vec<BoolMatrix>,
    pub truth: TuckerModel,
}

impl Planted {
    pub fn tensor(&self) -> BoolTensor3 {
        BoolTensor3::from_slices(&self.slots).expect("planted slots share a shape")
    }
}

pub fn generate_planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let Dims { o, f, t } = spec.dims;
    let Ranks { r1, r2, r3 } = spec.ranks;
    let draw = |rows: usize, cols: usize, p: f64, stream: Stream| {
        let mut rng = SeededRng::new(spec.seed, stream);
        BoolMatrix::from_fn(rows, cols, |_, _| rng.bernoulli(p))
    };
    let a = draw(o, r1, spec.density_a, Stream::FactorA);
    let b = draw(f, r2, spec.density_b, Stream::FactorB);
    let mut core_rng = SeededRng::new(spec.seed, Stream::Core);
    let core = BoolTensor3::from_fn(spec.ranks.as_dims(), |_, _, _| {
        core_rng.bernoulli(spec.density_core)
    });
    // A repeated time row that comes out empty would blank every slot it
    // covers, so those rows are redrawn until they hold a 1.
    let repeated = |n: usize| {
        let mut rng = SeededRng::new(spec.seed, Stream::FactorC);
        let mut m = BoolMatrix::zeros(n, r3);
        for k in 0..n {
            loop {
                for r in 0..r3 {
                    m.set(k, r, rng.bernoulli(spec.density_c));
                }
                if spec.density_c == 0.0 || m.row_count_ones(k) > 0 {
                    break;
                }
            }
        }
        m
    };
    let c = match spec.drift {
        Drift::Independent => draw(t, r3, spec.density_c, Stream::FactorC),
        Drift::Stationary | Drift::Toggle { .. } => {
            let row = repeated(1);
            BoolMatrix::from_fn(t, r3, |_, r| row.get(0, r))
        }
        Drift::StepChange { at } => {
            let rows = repeated(2);
            BoolMatrix::from_fn(t, r3, |k, r| rows.get(usize::from(k >= at), r))
        }
    };
    let truth = TuckerModel::new(core, a, b, c)?;
    let mut x = truth.reconstruct();
    if let Drift::Toggle { object, feature } = spec.drift {
        for k in (1..t).step_by(2) {
            let v = x.get(object, feature, k);
            x.set(object, feature, k, !v);
        }
    }
    if spec.noise > 0.0 {
        let mut rng = SeededRng::new(spec.seed, Stream::Noise);
        for k in 0..t {
            for j in 0..f {
                for i in 0..o {
                    if rng.bernoulli(spec.noise) {
                        let v = x.get(i, j, k);
                        x.set(i, j, k, !v);
                    }
                }
            }
        }
    }
    Ok(Planted {
        slots: x.slices(),
        truth,
    })
}

/// Largest `O*R1 + F*R2 + T*R3 + R1*R2*R3` the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_BITS: usize = 24;

/// Global minimum mismatch count over every binary model of the given ranks,
/// with one witness.
///
/// For each assignment of core, `B` and `C` the rows of `A` are independent,
/// so each row is minimized over its `2^R1` candidates; the result is the same
/// as enumerating `A` jointly.
pub fn exhaustive_oracle(x: &BoolTensor3, ranks: Ranks) -> Result<(usize, TuckerModel)> {
    let dims = x.dims();
    ranks.validate(dims)?;
    let Ranks { r1, r2, r3 } = ranks;
    let bits = dims.o * r1 + dims.f * r2 + dims.t * r3 + r1 * r2 * r3;
    if bits > EXHAUSTIVE_MAX_BITS {
        return Err(Error::Capacity(format!(
            "exhaustive search over 2^{bits} models exceeds the 2^{EXHAUSTIVE_MAX_BITS} guard"
        )));
    }
    let core_bits = r1 * r2 * r3;
    let b_bits = dims.f * r2;
    let c_bits = dims.t * r3;
    let rest_bits = core_bits + b_bits + c_bits;
    let x1 = crate::tensor::unfold(x, Mode::Mode1);

    let mut best: Option<(usize, TuckerModel)> = None;
    for code in 0u64..(1u64 << rest_bits) {
        let bit = |n: usize| (code >> n) & 1 == 1;
        let core = BoolTensor3::from_fn(ranks.as_dims(), |i, j, k| bit(i + r1 * (j + r2 * k)));
        let b = BoolMatrix::from_fn(dims.f, r2, |j, r| bit(core_bits + j * r2 + r));
        let c = BoolMatrix::from_fn(dims.t, r3, |k, r| bit(core_bits + b_bits + k * r3 + r));
        let basis =
            crate::tensor::mode_basis(&core, &BoolMatrix::zeros(dims.o, r1), &b, &c, Mode::Mode1)?;
        let mut a = BoolMatrix::zeros(dims.o, r1);
        let mut total = 0;
        let mut cover = vec![0u64; basis.cols().div_ceil(64)];
        for i in 0..dims.o {
            let target = x1.row_words(i);
            let mut row_best = (usize::MAX, 0u64);
            for mask in 0u64..(1u64 << r1) {
                cover.fill(0);
                for r in (0..r1).filter(|r| mask >> r & 1 == 1) {
                    for (cw, bw) in cover.iter_mut().zip(basis.row_words(r)) {
                        *cw |= bw;
                    }
                }
                let d: usize = target
                    .iter()
                    .zip(&cover)
                    .map(|(t, c)| (t ^ c).count_ones() as usize)
                    .sum();
                if d < row_best.0 {
                    row_best = (d, mask);
                }
            }
            total += row_best.0;
            for r in 0..r1 {
                a.set(i, r, row_best.1 >> r & 1 == 1);
            }
        }
        if best.as_ref().is_none_or(|(e, _)| total < *e) {
            best = Some((total, TuckerModel::new(core, a, b, c)?));
            if total == 0 {
                break;
            }
        }
    }
    let (err, model) = best.expect("search space is never empty");
    debug_assert_eq!(
        hamming_error(x, &model.reconstruct())
            .map(|e| e.mismatches)
            .ok(),
        Some(err)
    );
    Ok((err, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::hamming_error;
    use proptest::prelude::*;

    #[test]
    fn binarize_threshold_rule() {
        let raw = Array2::from_shape_vec((2, 2), vec![5.0, 2.0, 3.0, 2.999]).unwrap();
        let m = binarize(&raw, &ThresholdSpec(vec![3.0, 3.0])).unwrap();
        assert_eq!(m, BoolMatrix::from_rows(&[[1, 0], [1, 0]]));
    }

    #[test]
    fn binarize_errors() {
        let raw = Array2::from_shape_vec((1, 2), vec![1.0, f64::NAN]).unwrap();
        let err = binarize(&raw, &ThresholdSpec(vec![0.0, 0.0])).unwrap_err();
        assert!(err.to_string().contains("column 1"), "{err}");
        assert!(matches!(
            binarize(&raw, &ThresholdSpec(vec![0.0])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn binarize_matches_cellwise_oracle() {
        let mut rng = SeededRng::new(8, Stream::Noise);
        let raw = Array2::from_shape_fn((20, 6), |_| (rng.next_u64() % 1000) as f64 / 100.0);
        let th = ThresholdSpec((0..6).map(|j| j as f64 * 1.5).collect());
        let m = binarize(&raw, &th).unwrap();
        for i in 0..20 {
            for j in 0..6 {
                assert_eq!(m.get(i, j), raw[[i, j]] >= th.0[j]);
            }
        }
    }

    proptest! {
        #[test]
        fn binarize_is_monotone(vals in proptest::collection::vec(-10.0f64..10.0, 12), bump in 0.0f64..5.0, cell in 0usize..12) {
            let raw = Array2::from_shape_vec((4, 3), vals).unwrap();
            let th = ThresholdSpec(vec![0.0, 1.0, -1.0]);
            let mut raised = raw.clone();
            raised[[cell / 3, cell % 3]] += bump;
            let lo = binarize(&raw, &th).unwrap();
            let hi = binarize(&raised, &th).unwrap();
            for i in 0..4 {
                for j in 0..3 {
                    prop_assert!(!lo.get(i, j) || hi.get(i, j));
                }
            }
        }
    }

    fn spec(noise: f64, drift: Drift) -> PlantedSpec {
        PlantedSpec {
            noise,
            drift,
            ..PlantedSpec::uniform(Dims::new(20, 10, 15), Ranks::new(2, 2, 2), 0.4, 99)
        }
    }

    #[test]
    fn planted_noise_extremes() {
        let clean = generate_planted(&spec(0.0, Drift::Independent)).unwrap();
        let xhat = clean.truth.reconstruct();
        assert_eq!(clean.tensor(), xhat);
        let flipped = generate_planted(&spec(1.0, Drift::Independent)).unwrap();
        let e = hamming_error(&flipped.tensor(), &xhat).unwrap();
        assert_eq!(e.mismatches, 20 * 10 * 15);
    }

    #[test]
    fn planted_noise_concentrates() {
        // Binomial(3000, 0.05): mean 150, sd ~ 11.94.
        let sd = (3000.0f64 * 0.05 * 0.95).sqrt();
        for seed in 0..5 {
            let s = PlantedSpec {
                seed,
                ..spec(0.05, Drift::Independent)
            };
            let p = generate_planted(&s).unwrap();
            let e = hamming_error(&p.tensor(), &p.truth.reconstruct()).unwrap();
            assert!(
                (e.mismatches as f64 - 150.0).abs() <= 3.0 * sd,
                "seed {seed}: {}",
                e.mismatches
            );
        }
    }

    #[test]
    fn planted_is_reproducible() {
        let s = spec(0.1, Drift::Independent);
        let p1 = generate_planted(&s).unwrap();
        let p2 = generate_planted(&s).unwrap();
        assert_eq!(p1.slots, p2.slots);
        assert_eq!(p1.truth, p2.truth);
    }

    #[test]
    fn drift_modes() {
        let st = generate_planted(&spec(0.0, Drift::Stationary)).unwrap();
        assert!(st.slots.windows(2).all(|w| w[0] == w[1]));
        for seed in 0..40 {
            let s = PlantedSpec {
                drift: Drift::StepChange { at: 2 },
                ..PlantedSpec::uniform(Dims::new(4, 4, 4), Ranks::new(2, 2, 3), 0.1, seed)
            };
            let c = generate_planted(&s).unwrap().truth.c;
            assert!((0..4).all(|k| c.row_count_ones(k) > 0));
        }

        let step = generate_planted(&spec(0.0, Drift::StepChange { at: 7 })).unwrap();
        assert!(step.slots[..7].windows(2).all(|w| w[0] == w[1]));
        assert!(step.slots[7..].windows(2).all(|w| w[0] == w[1]));

        let tg = generate_planted(&spec(
            0.0,
            Drift::Toggle {
                object: 3,
                feature: 2,
            },
        ))
        .unwrap();
        let base = st.truth.reconstruct();
        for (k, s) in tg.slots.iter().enumerate() {
            for i in 0..20 {
                for j in 0..10 {
                    let flipped = (i, j) == (3, 2) && k % 2 == 1;
                    assert_eq!(s.get(i, j), base.get(i, j, k) ^ flipped);
                }
            }
        }
        assert!(generate_planted(&spec(
            0.0,
            Drift::Toggle {
                object: 20,
                feature: 0
            }
        ))
        .is_err());
        assert!(generate_planted(&PlantedSpec {
            noise: 1.5,
            ..spec(0.0, Drift::Stationary)
        })
        .is_err());
        assert!(generate_planted(&PlantedSpec {
            ranks: Ranks::new(21, 1, 1),
            ..spec(0.0, Drift::Stationary)
        })
        .is_err());
    }

    #[test]
    fn oracle_trivial_cases() {
        let zero = BoolTensor3::zeros(Dims::new(3, 3, 2));
        let (e, m) = exhaustive_oracle(&zero, Ranks::new(1, 1, 1)).unwrap();
        assert_eq!(e, 0);
        assert_eq!(m.core.count_ones(), 0);

        let mut x = BoolTensor3::zeros(Dims::new(3, 3, 2));
        for (i, j, k) in [
            (0, 1, 0),
            (2, 1, 0),
            (0, 2, 0),
            (2, 2, 0),
            (0, 1, 1),
            (2, 1, 1),
            (0, 2, 1),
            (2, 2, 1),
        ] {
            x.set(i, j, k, true);
        }
        let (e, m) = exhaustive_oracle(&x, Ranks::new(1, 1, 1)).unwrap();
        assert_eq!(e, 0);
        assert_eq!(m.reconstruct(), x);
    }

    #[test]
    fn oracle_guard() {
        let x = BoolTensor3::zeros(Dims::new(10, 10, 10));
        let err = exhaustive_oracle(&x, Ranks::new(1, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert!(err.to_string().contains("2^31"), "{err}");
    }

    /// Second enumerator: every bit of every component jointly, no row split.
    fn brute_force(x: &BoolTensor3, r: Ranks) -> usize {
        let d = x.dims();
        let n = d.o * r.r1 + d.f * r.r2 + d.t * r.r3 + r.cells();
        (0u64..1 << n)
            .map(|code| {
                let mut pos = 0;
                let mut take = || {
                    let v = (code >> pos) & 1 == 1;
                    pos += 1;
                    v
                };
                let a = BoolMatrix::from_fn(d.o, r.r1, |_, _| take());
                let b = BoolMatrix::from_fn(d.f, r.r2, |_, _| take());
                let c = BoolMatrix::from_fn(d.t, r.r3, |_, _| take());
                let g = BoolTensor3::from_fn(r.as_dims(), |_, _, _| take());
                let mut err = 0;
                for i in 0..d.o {
                    for j in 0..d.f {
                        for k in 0..d.t {
                            let mut v = false;
                            for (p, q, s) in g.iter_ones() {
                                v |= a.get(i, p) && b.get(j, q) && c.get(k, s);
                            }
                            err += (v != x.get(i, j, k)) as usize;
                        }
                    }
                }
                err
            })
            .min()
            .unwrap()
    }

    #[test]
    fn oracle_checkerboard_cross_check() {
        let x = BoolTensor3::from_fn(Dims::new(2, 2, 2), |i, j, k| (i + j + k) % 2 == 0);
        let (e, m) = exhaustive_oracle(&x, Ranks::new(1, 1, 1)).unwrap();
        assert_eq!(e, brute_force(&x, Ranks::new(1, 1, 1)));
        assert_eq!(hamming_error(&x, &m.reconstruct()).unwrap().mismatches, e);
    }

    #[test]
    fn oracle_agrees_with_brute_force_on_seeded_instances() {
        for seed in 0..6 {
            let mut rng = SeededRng::new(seed, Stream::Noise);
            let x = BoolTensor3::from_fn(Dims::new(3, 2, 2), |_, _, _| rng.bernoulli(0.5));
            let r = Ranks::new(1, 1, 1);
            assert_eq!(
                exhaustive_oracle(&x, r).unwrap().0,
                brute_force(&x, r),
                "seed {seed}"
            );
        }
    }
}
