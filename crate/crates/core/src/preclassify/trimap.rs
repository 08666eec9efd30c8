use crate::imagery::{DifferenceImage, Raster};

use super::fcm::{fcm, FcmConfig};
use super::PreclassifyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    Unchanged,
    Intermediate,
    Changed,
}

impl PixelClass {
    pub fn gray_level(self) -> u8 {
        match self {
            PixelClass::Unchanged => 0,
            PixelClass::Intermediate => 128,
            PixelClass::Changed => 255,
        }
    }

    pub fn from_gray_level(v: f64) -> Option<Self> {
        match v as u32 {
            0 if v == 0.0 => Some(PixelClass::Unchanged),
            128 if v == 128.0 => Some(PixelClass::Intermediate),
            255 if v == 255.0 => Some(PixelClass::Changed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriMap {
    width: usize,
    height: usize,
    labels: Vec<PixelClass>,
}

impl TriMap {
    pub fn new(width: usize, height: usize, labels: Vec<PixelClass>) -> Result<Self, PreclassifyError> {
        if width == 0 || height == 0 || width * height != labels.len() {
            return Err(PreclassifyError::InvalidConfig(format!(
                "{width}x{height} tri-map with {} labels",
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[PixelClass] {
        &self.labels
    }

    pub fn count(&self, class: PixelClass) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    /// Row-major indices of every pixel with the given label.
    pub fn indices_of(&self, class: PixelClass) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).collect()
    }

    /// Greymap with 0 / 128 / 255 for unchanged / intermediate / changed.
    pub fn to_raster(&self) -> Raster {
        let px = self.labels.iter().map(|l| f64::from(l.gray_level())).collect();
        Raster::new(self.width, self.height, px).expect("valid geometry")
    }

    pub fn from_raster(raster: &Raster) -> Result<Self, PreclassifyError> {
        let labels = raster
            .pixels()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                PixelClass::from_gray_level(v)
                    .ok_or_else(|| PreclassifyError::InvalidConfig(format!("tri-map pixel {i} has level {v}")))
            })
            .collect::<Result<_, _>>()?;
        Self::new(raster.width(), raster.height(), labels)
    }
}

/// Two-pass FCM labelling of the difference image.
///
/// Pass one splits all values into three clusters: the highest is changed,
/// the lowest unchanged, the middle intermediate. Pass two re-clusters only
/// the intermediate values; a sub-cluster whose center reaches the first
/// pass's top center is promoted to changed, one at or below the bottom
/// center is demoted to unchanged, and the rest stay intermediate.
/// A constant difference image carries no evidence of change and comes back
/// all unchanged.
pub fn hierarchical_trimap(di: &DifferenceImage) -> Result<TriMap, PreclassifyError> {
    hierarchical_trimap_with(di, &FcmConfig::default())
}

pub fn hierarchical_trimap_with(di: &DifferenceImage, cfg: &FcmConfig) -> Result<TriMap, PreclassifyError> {
    let cfg = FcmConfig { clusters: 3, ..*cfg };
    let values = di.values();
    let stage1 = fcm(values, &cfg)?;
    let mut labels = vec![PixelClass::Unchanged; values.len()];
    if stage1.degenerate {
        return TriMap::new(di.width(), di.height(), labels);
    }
    let (v_low, v_high) = (stage1.centers[0], stage1.centers[2]);
    let mut middle = Vec::new();
    for (i, label) in labels.iter_mut().enumerate() {
        *label = match stage1.hard_label(i) {
            0 => PixelClass::Unchanged,
            2 => PixelClass::Changed,
            _ => {
                middle.push(i);
                PixelClass::Intermediate
            }
        };
    }

    if !middle.is_empty() {
        let sub_values: Vec<f64> = middle.iter().map(|&i| values[i]).collect();
        let stage2 = fcm(&sub_values, &cfg)?;
        for (j, &i) in middle.iter().enumerate() {
            let center = stage2.centers[stage2.hard_label(j)];
            if center >= v_high {
                labels[i] = PixelClass::Changed;
            } else if center <= v_low {
                labels[i] = PixelClass::Unchanged;
            }
        }
    }
    TriMap::new(di.width(), di.height(), labels)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::numerics::Rng;

    /// Pixels labelled changed on the default synthetic scene must be
    /// almost all truly changed: they become the positive pseudo-labels.
    #[test]
    fn changed_set_is_precise_on_synthetic_scene() {
        use crate::imagery::log_ratio;
        use crate::synthgen::{generate, SceneSpec};

        let (i1, i2, truth) = generate(&SceneSpec::default_scene(42)).unwrap();
        let tri = hierarchical_trimap(&log_ratio(&i1, &i2).unwrap()).unwrap();
        let changed = tri.indices_of(PixelClass::Changed);
        let hits = changed.iter().filter(|&&i| truth.bits()[i] == 1).count();
        let precision = hits as f64 / changed.len() as f64;
        assert!(precision >= 0.95, "precision {precision} over {} pixels", changed.len());
    }

    fn di(values: Vec<f64>) -> DifferenceImage {
        let n = values.len();
        DifferenceImage::new(n, 1, values).unwrap()
    }

    #[test]
    fn three_groups() {
        let mut v = vec![0.0; 10];
        v.extend([0.5; 10]);
        v.extend([1.0; 10]);
        let t = hierarchical_trimap(&di(v)).unwrap();
        assert!(t.labels()[..10].iter().all(|&l| l == PixelClass::Unchanged));
        assert!(t.labels()[10..20].iter().all(|&l| l == PixelClass::Intermediate));
        assert!(t.labels()[20..].iter().all(|&l| l == PixelClass::Changed));
    }

    #[test]
    fn constant_is_all_unchanged() {
        let t = hierarchical_trimap(&di(vec![0.0; 16])).unwrap();
        assert_eq!(t.count(PixelClass::Unchanged), 16);
    }

    #[test]
    fn raster_round_trip_and_levels() {
        let t = TriMap::new(3, 1, vec![PixelClass::Changed, PixelClass::Unchanged, PixelClass::Intermediate]).unwrap();
        let r = t.to_raster();
        assert_eq!(r.pixels(), &[255.0, 0.0, 128.0]);
        assert_eq!(TriMap::from_raster(&r).unwrap(), t);
        assert!(TriMap::from_raster(&Raster::new(1, 1, vec![7.0]).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_monotone(seed in any::<u64>(), n in 4usize..120) {
            let mut rng = Rng::new(seed);
            let values: Vec<f64> = (0..n).map(|_| rng.uniform().powi(3)).collect();
            let t = hierarchical_trimap(&di(values.clone())).unwrap();

            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let permuted: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
            let tp = hierarchical_trimap(&di(permuted)).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(tp.labels()[j], t.labels()[i]);
            }

            let min_changed = t.indices_of(PixelClass::Changed).iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
            let max_unchanged = t.indices_of(PixelClass::Unchanged).iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min_changed >= max_unchanged);
        }
    }
}
