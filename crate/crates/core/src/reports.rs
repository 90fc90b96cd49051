//! Change summaries of a fitted model over reporting frames: per-cell feature
//! variance, per-class activity share, and overall gain or loss per class.

use std::fmt::Write as _;
use std::ops::Range;

use ndarray::{Array2, Array3};

use crate::batch::TuckerModel;
use crate::error::{Error, Result};
use crate::tensor::BoolTensor3;

/// Groups consecutive slots into frames; the last frame may be short.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpec {
    pub slots_per_frame: usize,
    pub labels: Option<Vec<String>>,
}

impl FrameSpec {
    pub fn new(slots_per_frame: usize) -> Self {
        FrameSpec {
            slots_per_frame,
            labels: None,
        }
    }

    /// Slot ranges of the frames covering `t` slots.
    pub fn frames(&self, t: usize) -> Result<Vec<Range<usize>>> {
        if self.slots_per_frame == 0 {
            return Err(Error::Config("slots per frame must be >= 1".into()));
        }
        let frames: Vec<Range<usize>> = (0..t)
            .step_by(self.slots_per_frame)
            .map(|s| s..(s + self.slots_per_frame).min(t))
            .collect();
        if let Some(labels) = &self.labels {
            if labels.len() < frames.len() {
                return Err(Error::Config(format!(
                    "{} frame labels for {} frames",
                    labels.len(),
                    frames.len()
                )));
            }
        }
        Ok(frames)
    }

    pub fn label(&self, frame: usize) -> String {
        match &self.labels {
            Some(l) => l[frame].clone(),
            None => frame.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVarianceReport {
    /// `values[[o, f, frame]] = 4 p (1 - p)`, `p` the share of the frame's
    /// slots in which object `o` shows feature `f`.
    pub values: Array3<f64>,
    pub frames: FrameSpec,
    pub warnings: Vec<String>,
}

/// Normalized presence variance of every (object, feature) cell per frame.
pub fn feature_variance(x: &BoolTensor3, frames: &FrameSpec) -> Result<FeatureVarianceReport> {
    let dims = x.dims();
    let ranges = frames.frames(dims.t)?;
    let mut warnings = Vec::new();
    if ranges.is_empty() {
        warnings.push("tensor has no slots; no frames reported".to_string());
    }
    let mut values = Array3::zeros((dims.o, dims.f, ranges.len()));
    for (n, r) in ranges.iter().enumerate() {
        let len = r.len() as f64;
        for i in 0..dims.o {
            for j in 0..dims.f {
                let on = r.clone().filter(|&k| x.get(i, j, k)).count() as f64;
                let p = on / len;
                values[[i, j, n]] = 4.0 * p * (1.0 - p);
            }
        }
    }
    Ok(FeatureVarianceReport {
        values,
        frames: frames.clone(),
        warnings,
    })
}

/// [`feature_variance`] of a model's reconstruction.
pub fn model_feature_variance(
    model: &TuckerModel,
    frames: &FrameSpec,
) -> Result<FeatureVarianceReport> {
    feature_variance(&model.reconstruct(), frames)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProportionReport {
    /// `proportions[[class, frame]]`; each active frame's column sums to 1.
    pub proportions: Array2<f64>,
    /// Frames with no activity at all; their column is zero.
    pub inactive: Vec<bool>,
    pub frames: FrameSpec,
}

/// Number of active core cells touching object `o` at slot `t`, for every `(o, t)`.
pub fn activity(model: &TuckerModel) -> Array2<u64> {
    let (o, t) = (model.a.rows(), model.c.rows());
    let mut act = Array2::zeros((o, t));
    for (r1, _, r3) in model.core.iter_ones() {
        for i in model.a.col_ones(r1) {
            for k in model.c.col_ones(r3) {
                act[[i, k]] += 1;
            }
        }
    }
    act
}

/// Share of core activity held by each class (object) in each frame.
pub fn class_proportions(model: &TuckerModel, frames: &FrameSpec) -> Result<ClassProportionReport> {
    let act = activity(model);
    let (classes, t) = act.dim();
    let ranges = frames.frames(t)?;
    let mut proportions = Array2::zeros((classes, ranges.len()));
    let mut inactive = Vec::with_capacity(ranges.len());
    for (n, r) in ranges.iter().enumerate() {
        let means: Vec<f64> = (0..classes)
            .map(|i| r.clone().map(|k| act[[i, k]] as f64).sum::<f64>() / r.len() as f64)
            .collect();
        let total: f64 = means.iter().sum();
        inactive.push(total == 0.0);
        if total > 0.0 {
            for (i, m) in means.iter().enumerate() {
                proportions[[i, n]] = m / total;
            }
        }
    }
    Ok(ClassProportionReport {
        proportions,
        inactive,
        frames: frames.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLoss {
    pub class: usize,
    /// `None` for a class with no share in the first frame but some in the
    /// last; no percentage is defined then.
    pub gain_pct: Option<f64>,
    pub loss_pct: f64,
    pub new_class: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainLossReport {
    pub rows: Vec<GainLoss>,
}

/// Relative change of each class's share from the first frame to the last.
pub fn gain_loss(report: &ClassProportionReport) -> Result<GainLossReport> {
    let (classes, frames) = report.proportions.dim();
    if frames < 2 {
        return Err(Error::Input(format!(
            "gain/loss needs at least 2 frames, got {frames}"
        )));
    }
    let rows = (0..classes)
        .map(|c| {
            let first = report.proportions[[c, 0]];
            let last = report.proportions[[c, frames - 1]];
            let delta = last - first;
            if first == 0.0 && last > 0.0 {
                return GainLoss {
                    class: c,
                    gain_pct: None,
                    loss_pct: 0.0,
                    new_class: true,
                };
            }
            let base = first.max(f64::EPSILON);
            GainLoss {
                class: c,
                gain_pct: Some(100.0 * delta.max(0.0) / base),
                loss_pct: 100.0 * (-delta).max(0.0) / base,
                new_class: false,
            }
        })
        .collect();
    Ok(GainLossReport { rows })
}

pub fn feature_variance_csv(r: &FeatureVarianceReport) -> String {
    let mut out = String::from("object,feature,frame,value\n");
    let (o, f, n) = r.values.dim();
    for i in 0..o {
        for j in 0..f {
            for k in 0..n {
                writeln!(out, "{i},{j},{},{}", r.frames.label(k), r.values[[i, j, k]])
                    .expect("writing to a String");
            }
        }
    }
    out
}

pub fn class_proportions_csv(r: &ClassProportionReport) -> String {
    let mut out = String::from("class,frame,proportion\n");
    let (classes, frames) = r.proportions.dim();
    for c in 0..classes {
        for k in 0..frames {
            writeln!(out, "{c},{},{}", r.frames.label(k), r.proportions[[c, k]])
                .expect("writing to a String");
        }
    }
    out
}

/// New classes get an empty `gain_pct` field and `new_class` 1.
pub fn gain_loss_csv(r: &GainLossReport) -> String {
    let mut out = String::from("class,gain_pct,loss_pct,new_class\n");
    for g in &r.rows {
        let gain = g.gain_pct.map_or(String::new(), |v| v.to_string());
        writeln!(
            out,
            "{},{gain},{},{}",
            g.class,
            g.loss_pct,
            u8::from(g.new_class)
        )
        .expect("writing to a String");
    }
    out
}
