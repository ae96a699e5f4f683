//! Typed volumes on top of raw NPY arrays.
//!
//! Axis order is `(channel?, z?, y, x)`. Integer dtypes hold labels, floating
//! dtypes hold either a confidence map (no channel axis) or per-channel
//! probabilities (leading channel axis). REGIONS label files carry one 0/1
//! mask per region along the channel axis.

use std::path::Path;

use super::npy::{read_npy, write_npy, NpyArray, NpyData};
use crate::datamodel::{ConfidenceMap, LabelData, LabelMap, LabelMode};
use crate::error::{Error, Result};
use crate::segmetrics::{probs_to_confidence, ProbabilityMap};

/// Metadata a volume file does not carry itself.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMeta {
    pub spacing: Vec<f64>,
    pub label_mode: LabelMode,
    pub class_ids: Vec<u32>,
}

impl VolumeMeta {
    pub fn spatial_ndim(&self) -> usize {
        self.spacing.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Labels(LabelMap),
    Confidence(ConfidenceMap),
    Probabilities(ProbabilityMap),
}

fn out_of_range(path: &Path, value: f64, range: &'static str) -> Error {
    Error::ValueOutOfRange {
        path: path.to_path_buf(),
        value,
        range,
    }
}

fn check_unit_range(path: &Path, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&v) => Err(out_of_range(path, v, "[0, 1]")),
        None => Ok(()),
    }
}

fn shape_error(path: &Path, shape: &[usize], meta: &VolumeMeta) -> Error {
    Error::UnsupportedDtype {
        path: path.to_path_buf(),
        detail: format!(
            "shape {shape:?} fits neither {} spatial axes nor a leading channel axis",
            meta.spatial_ndim()
        ),
    }
}

pub fn read_volume(path: &Path, meta: &VolumeMeta) -> Result<Volume> {
    let NpyArray { shape, data } = read_npy(path)?;
    let d = meta.spatial_ndim();
    let channel_axis = match shape.len() {
        n if n == d => false,
        n if n == d + 1 => true,
        _ => return Err(shape_error(path, &shape, meta)),
    };
    let spatial = shape[shape.len() - d..].to_vec();
    let n_voxels: usize = spatial.iter().product();

    if let Some(labels) = data.to_u32() {
        return match (meta.label_mode, channel_axis) {
            (LabelMode::Exclusive, false) => LabelMap::exclusive(
                spatial,
                meta.spacing.clone(),
                meta.class_ids.clone(),
                labels,
            )
            .map(Volume::Labels),
            (LabelMode::Regions, true) => {
                if let Some(&v) = labels.iter().find(|&&v| v > 1) {
                    return Err(out_of_range(path, f64::from(v), "{0, 1}"));
                }
                let masks = labels
                    .chunks(n_voxels.max(1))
                    .map(|c| c.iter().map(|&v| v == 1).collect())
                    .collect();
                LabelMap::regions(spatial, meta.spacing.clone(), meta.class_ids.clone(), masks)
                    .map(Volume::Labels)
            }
            _ => Err(shape_error(path, &shape, meta)),
        };
    }

    let values = data.to_f64();
    check_unit_range(path, &values)?;
    if !channel_axis {
        return ConfidenceMap::new(spatial, values).map(Volume::Confidence);
    }
    let channels = values
        .chunks(n_voxels.max(1))
        .map(<[f64]>::to_vec)
        .collect();
    ProbabilityMap::new(spatial, meta.label_mode, channels)?
        .with_class_ids(meta.class_ids.clone())
        .map(|p| Volume::Probabilities(p.with_spacing(meta.spacing.clone())))
}

pub fn read_label_map(path: &Path, meta: &VolumeMeta) -> Result<LabelMap> {
    match read_volume(path, meta)? {
        Volume::Labels(l) => Ok(l),
        _ => Err(Error::UnsupportedDtype {
            path: path.to_path_buf(),
            detail: "expected an integer label volume".into(),
        }),
    }
}

/// A confidence map, or the entropy confidence of a probability volume.
pub fn read_confidence_map(path: &Path, meta: &VolumeMeta) -> Result<ConfidenceMap> {
    match read_volume(path, meta)? {
        Volume::Confidence(c) => Ok(c),
        Volume::Probabilities(p) => probs_to_confidence(&p),
        Volume::Labels(_) => Err(Error::UnsupportedDtype {
            path: path.to_path_buf(),
            detail: "expected a floating point confidence or probability volume".into(),
        }),
    }
}

/// A 1-D floating point feature vector of any range.
pub fn read_feature_vector(path: &Path) -> Result<Vec<f64>> {
    let NpyArray { shape, data } = read_npy(path)?;
    if shape.len() != 1 || data.is_integer() {
        return Err(Error::UnsupportedDtype {
            path: path.to_path_buf(),
            detail: format!("expected a 1-D float vector, got shape {shape:?}"),
        });
    }
    let values = data.to_f64();
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(out_of_range(path, v, "finite"));
    }
    Ok(values)
}

pub fn volume_to_npy(volume: &Volume) -> NpyArray {
    match volume {
        Volume::Labels(l) => match l.data() {
            LabelData::Exclusive(v) => {
                let data = if v.iter().all(|&x| x <= u32::from(u8::MAX)) {
                    NpyData::U8(v.iter().map(|&x| x as u8).collect())
                } else {
                    NpyData::U16(v.iter().map(|&x| x as u16).collect())
                };
                NpyArray {
                    shape: l.dims().to_vec(),
                    data,
                }
            }
            LabelData::Regions(masks) => NpyArray {
                shape: [&[masks.len()], l.dims()].concat(),
                data: NpyData::U8(masks.iter().flatten().map(|&b| u8::from(b)).collect()),
            },
        },
        Volume::Confidence(c) => NpyArray {
            shape: c.dims().to_vec(),
            data: NpyData::F64(c.values().to_vec()),
        },
        Volume::Probabilities(p) => NpyArray {
            shape: [&[p.channels().len()], p.dims()].concat(),
            data: NpyData::F64(p.channels().concat()),
        },
    }
}

pub fn write_volume(path: &Path, volume: &Volume) -> Result<()> {
    if let Volume::Labels(l) = volume {
        if let LabelData::Exclusive(v) = l.data() {
            if let Some(&x) = v.iter().find(|&&x| x > u32::from(u16::MAX)) {
                return Err(out_of_range(path, f64::from(x), "[0, 65535]"));
            }
        }
    }
    write_npy(path, &volume_to_npy(volume))
}
