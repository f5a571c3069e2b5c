//! Receptive-field bookkeeping and the pairwise feature-robustness study:
//! for each layer, how strongly do a feature's input-space projections
//! correlate when one musical attribute varies and the others are held fixed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::synth::{all_specs, ChordType, Instrument, Key, ModelSignalSpec};

/// Effective receptive field of one conv layer on the input spectrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfEntry {
    /// 1-based layer index.
    pub layer: usize,
    /// Nominal span in input pixels under the doubling model: `3 * 2^(l-1)`.
    pub pixels: usize,
    /// Time span of `pixels` STFT frames in milliseconds (exact).
    pub width_ms: f64,
    /// Frequency span of `pixels` STFT bins in hertz (exact).
    pub height_hz: f64,
    /// Conventional rounded time span: `(pixels + 1)` hops at a hop length
    /// pre-rounded to 0.1 ms.
    pub table_width_ms: u32,
    /// Conventional rounded frequency span: `(pixels + 1)` bin spacings.
    pub table_height_hz: u32,
}

/// Nominal receptive-field span in pixels at layer `l` (1-based): each 2x2
/// pooling doubles the previous span.
pub fn nominal_rf_pixels(layer: usize) -> usize {
    3 << (layer - 1)
}

/// Exact receptive field of the post-conv activation at layer `l` (1-based),
/// from the conv(3x3, +2j) / pool(2x2, j doubles) recurrence.
pub fn exact_rf_pixels(layer: usize) -> usize {
    let mut rf = 3usize;
    let mut jump = 1usize;
    for _ in 1..layer {
        rf += jump; // pool widens by one stride
        jump *= 2;
        rf += 2 * jump; // next 3x3 conv
    }
    rf
}

/// Receptive-field entry for one layer at the given STFT geometry.
pub fn effective_rf(layer: usize, n_fft: usize, hop: usize, sample_rate: u32) -> Result<RfEntry> {
    if layer == 0 {
        return Err(Error::InvalidArgument("layer index is 1-based".into()));
    }
    if n_fft == 0 || hop == 0 || sample_rate == 0 {
        return Err(Error::InvalidArgument("STFT parameters must be positive".into()));
    }
    let n = nominal_rf_pixels(layer);
    let sr = sample_rate as f64;
    // n frames span (n - 1) hops plus one window.
    let width_ms = ((n - 1) * hop + n_fft) as f64 / sr * 1000.0;
    let bin_hz = sr / n_fft as f64;
    let height_hz = n as f64 * bin_hz;
    // Tabulated form: (n + 1) hops at a hop length quantized to 0.1 ms.
    let hop_ms_q = libm::round(hop as f64 / sr * 10_000.0) / 10.0;
    let table_width_ms = libm::round((n + 1) as f64 * hop_ms_q) as u32;
    let table_height_hz = libm::round((n + 1) as f64 * bin_hz) as u32;
    Ok(RfEntry {
        layer,
        pixels: n,
        width_ms,
        height_hz,
        table_width_ms,
        table_height_hz,
    })
}

/// One entry per layer.
pub fn rf_table(layers: usize, n_fft: usize, hop: usize, sample_rate: u32) -> Result<Vec<RfEntry>> {
    (1..=layers)
        .map(|l| effective_rf(l, n_fft, hop, sample_rate))
        .collect()
}

/// Sample Pearson correlation coefficient. `None` if the slices differ in
/// length, hold fewer than two points, or either has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}

/// The corpus attribute varied within a cell while the other two are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribute {
    Instrument,
    Chord,
    Key,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Instrument, Attribute::Chord, Attribute::Key];

    pub fn name(&self) -> &'static str {
        match self {
            Attribute::Instrument => "instrument",
            Attribute::Chord => "chord",
            Attribute::Key => "key",
        }
    }
}

/// Aggregated pairwise correlations for one (layer, attribute).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    /// 1-based layer index.
    pub layer: usize,
    pub attribute: Attribute,
    pub mean: f64,
    pub std: f64,
    /// Pairs that produced a correlation.
    pub n_pairs: usize,
    /// Pairs skipped because a projection had zero variance.
    pub n_skipped: usize,
}

/// Groups the 224 corpus specs into cells for one attribute: within a cell
/// only that attribute varies. Cell and member order are deterministic.
fn cells_for(attribute: Attribute) -> Vec<Vec<ModelSignalSpec>> {
    let specs = all_specs();
    let mut cells = Vec::new();
    match attribute {
        Attribute::Instrument => {
            for chord in ChordType::ALL {
                for key in Key::ALL {
                    cells.push(
                        specs
                            .iter()
                            .copied()
                            .filter(|s| s.chord == chord && s.key == key)
                            .collect(),
                    );
                }
            }
        }
        Attribute::Chord => {
            for instrument in Instrument::ALL {
                for key in Key::ALL {
                    cells.push(
                        specs
                            .iter()
                            .copied()
                            .filter(|s| s.instrument == instrument && s.key == key)
                            .collect(),
                    );
                }
            }
        }
        Attribute::Key => {
            for instrument in Instrument::ALL {
                for chord in ChordType::ALL {
                    cells.push(
                        specs
                            .iter()
                            .copied()
                            .filter(|s| s.instrument == instrument && s.chord == chord)
                            .collect(),
                    );
                }
            }
        }
    }
    cells
}

/// Running mean/std accumulator per layer.
struct Acc {
    n: usize,
    sum: f64,
    sum_sq: f64,
    skipped: usize,
}

/// Correlation study over the whole model-signal corpus.
///
/// `maps_for` supplies, for one signal, its input-space projections for every
/// (layer, feature) in layer-major order (`layers * features_per_layer`
/// slices, all the same length). It is called once per signal per attribute;
/// a cell's maps are held in memory only while that cell is processed, so a
/// caller can stream projections without materializing the full corpus.
///
/// Returns `layers * 3` rows, attribute-major then layer-major.
pub fn correlation_study<F>(
    layers: usize,
    features_per_layer: usize,
    mut maps_for: F,
) -> Result<Vec<CorrelationRow>>
where
    F: FnMut(&ModelSignalSpec) -> Result<Vec<Vec<f64>>>,
{
    if layers == 0 || features_per_layer == 0 {
        return Err(Error::InvalidArgument(
            "layers and features_per_layer must be >= 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(3 * layers);
    for attribute in Attribute::ALL {
        let mut accs: Vec<Acc> = (0..layers)
            .map(|_| Acc {
                n: 0,
                sum: 0.0,
                sum_sq: 0.0,
                skipped: 0,
            })
            .collect();
        for cell in cells_for(attribute) {
            let maps: Vec<Vec<Vec<f64>>> = cell
                .iter()
                .map(|spec| {
                    let m = maps_for(spec)?;
                    if m.len() != layers * features_per_layer {
                        return Err(Error::Shape(alloc::format!(
                            "expected {} maps for '{}', got {}",
                            layers * features_per_layer,
                            spec.stem(),
                            m.len()
                        )));
                    }
                    Ok(m)
                })
                .collect::<Result<_>>()?;
            for layer in 0..layers {
                let acc = &mut accs[layer];
                for feature in 0..features_per_layer {
                    let idx = layer * features_per_layer + feature;
                    for a in 0..maps.len() {
                        for b in a + 1..maps.len() {
                            match pearson(&maps[a][idx], &maps[b][idx]) {
                                Some(r) => {
                                    acc.n += 1;
                                    acc.sum += r;
                                    acc.sum_sq += r * r;
                                }
                                None => acc.skipped += 1,
                            }
                        }
                    }
                }
            }
        }
        for (layer, acc) in accs.into_iter().enumerate() {
            let mean = if acc.n > 0 { acc.sum / acc.n as f64 } else { 0.0 };
            let std = if acc.n > 1 {
                let var = (acc.sum_sq - acc.sum * acc.sum / acc.n as f64) / (acc.n - 1) as f64;
                libm::sqrt(var.max(0.0))
            } else {
                0.0
            };
            rows.push(CorrelationRow {
                layer: layer + 1,
                attribute,
                mean,
                std,
                n_pairs: acc.n,
                n_skipped: acc.skipped,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{DEFAULT_HOP, DEFAULT_N_FFT, DEFAULT_SAMPLE_RATE};
    use alloc::vec;

    #[test]
    fn pearson_hand_value() {
        // By hand: cov = 6.5/4, sx^2 = 5/4, sy^2 = 35/4 -> r = 6.5/sqrt(43.75).
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!((r - 0.9827).abs() < 1e-3);
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg = [3.0, 2.0, 1.0];
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        // Symmetric and scale-invariant.
        let y = [0.5, 0.1, 0.9];
        let r = pearson(&x, &y).unwrap();
        assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
        let y2: Vec<f64> = y.iter().map(|v| 7.0 * v + 3.0).collect();
        assert!((r - pearson(&x, &y2).unwrap()).abs() < 1e-12);
        // Degenerate inputs.
        assert!(pearson(&x, &[1.0, 1.0, 1.0]).is_none());
        assert!(pearson(&x, &[1.0, 2.0]).is_none());
        assert!(pearson(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn rf_pixels() {
        assert_eq!(
            (1..=5).map(nominal_rf_pixels).collect::<Vec<_>>(),
            vec![3, 6, 12, 24, 48]
        );
        assert_eq!(
            (1..=5).map(exact_rf_pixels).collect::<Vec<_>>(),
            vec![3, 8, 18, 38, 78]
        );
    }

    #[test]
    fn rf_table_values() {
        let table = rf_table(5, DEFAULT_N_FFT, DEFAULT_HOP, DEFAULT_SAMPLE_RATE).unwrap();
        let widths: Vec<u32> = table.iter().map(|e| e.table_width_ms).collect();
        let heights: Vec<u32> = table.iter().map(|e| e.table_height_hz).collect();
        assert_eq!(widths, vec![93, 162, 302, 580, 1137]);
        assert_eq!(heights, vec![86, 151, 280, 538, 1055]);
        // Exact spans: layer 1 covers 3 frames = 2 hops + 1 window.
        assert!((table[0].width_ms - 1024.0 / 11025.0 * 1000.0).abs() < 1e-9);
        assert!((table[0].height_hz - 3.0 * 11025.0 / 512.0).abs() < 1e-9);
        assert!(effective_rf(0, 512, 256, 11025).is_err());
    }

    #[test]
    fn cells_partition_the_corpus() {
        for attribute in Attribute::ALL {
            let cells = cells_for(attribute);
            let expected_len = match attribute {
                Attribute::Instrument => 7,
                Attribute::Chord => 8,
                Attribute::Key => 4,
            };
            let total: usize = cells.iter().map(|c| c.len()).sum();
            assert_eq!(total, 224);
            for cell in &cells {
                assert_eq!(cell.len(), expected_len);
            }
        }
    }

    #[test]
    fn identical_maps_give_mean_one() {
        // Every signal projects to the same non-constant map: all pairwise
        // correlations are exactly 1.
        let rows = correlation_study(2, 3, |_| {
            Ok(vec![vec![1.0, 2.0, 3.0, 4.0]; 6])
        })
        .unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!((row.mean - 1.0).abs() < 1e-12);
            assert!(row.std < 1e-12);
            assert_eq!(row.n_skipped, 0);
            let (cells, members) = match row.attribute {
                Attribute::Instrument => (32, 7),
                Attribute::Chord => (28, 8),
                Attribute::Key => (56, 4),
            };
            assert_eq!(row.n_pairs, 3 * cells * members * (members - 1) / 2);
        }
    }

    #[test]
    fn constant_maps_are_skipped() {
        let rows = correlation_study(1, 1, |_| Ok(vec![vec![5.0, 5.0, 5.0]])).unwrap();
        for row in &rows {
            assert_eq!(row.n_pairs, 0);
            assert!(row.n_skipped > 0);
            assert_eq!(row.mean, 0.0);
        }
    }

    #[test]
    fn signal_dependent_maps_are_deterministic() {
        let provider = |spec: &ModelSignalSpec| {
            let h = spec.stem().bytes().map(|b| b as f64).sum::<f64>();
            Ok(vec![vec![h, 2.0 * h, -h, 0.5], vec![1.0, h, h * h, 2.0]])
        };
        let a = correlation_study(1, 2, provider).unwrap();
        let b = correlation_study(1, 2, provider).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.n_pairs > 0));
    }

    #[test]
    fn rejects_bad_provider_and_shapes() {
        assert!(correlation_study(0, 1, |_| Ok(vec![])).is_err());
        // Wrong number of maps per signal.
        let res = correlation_study(2, 2, |_| Ok(vec![vec![1.0, 2.0]; 3]));
        assert!(matches!(res, Err(Error::Shape(_))));
    }
}
