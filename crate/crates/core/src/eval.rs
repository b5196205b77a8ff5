//! Detection scoring: component extraction from target maps, Pd/Fa
//! statistics, threshold-swept ROC curves, and trapezoidal AUC.

use crate::error::{Error, Result};
use crate::sequence::GrayImage;
use crate::synth::GroundTruth;

/// One detected blob: intensity-weighted centroid, peak response, and
/// pixel count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub score: f64,
    pub area: usize,
}

/// Extract 8-connected components of `map >= tau` and reduce each to a
/// detection at its intensity-weighted centroid, scored by the
/// component's peak value.
pub fn detect_components(map: &GrayImage, tau: f64) -> Vec<Detection> {
    let (w, h) = (map.width, map.height);
    let mut seen = vec![false; w * h];
    let mut dets = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            let s0 = sy * w + sx;
            if seen[s0] || map.pixels[s0] < tau {
                continue;
            }
            seen[s0] = true;
            stack.push((sx, sy));
            let (mut mass, mut mx, mut my, mut peak, mut area) = (0.0, 0.0, 0.0, 0.0f64, 0usize);
            while let Some((x, y)) = stack.pop() {
                let v = map.get(x, y);
                mass += v;
                mx += v * x as f64;
                my += v * y as f64;
                peak = peak.max(v);
                area += 1;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let ni = ny as usize * w + nx as usize;
                        if !seen[ni] && map.pixels[ni] >= tau {
                            seen[ni] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            let (cx, cy) = if mass > 0.0 {
                (mx / mass, my / mass)
            } else {
                (sx as f64, sy as f64)
            };
            dets.push(Detection { x: cx, y: cy, score: peak, area });
        }
    }
    dets
}

/// Probability of detection and false-alarm rate at one threshold.
///
/// Detections are matched to ground-truth centers greedily nearest-first:
/// the closest unmatched (detection, truth) pair within `match_radius` is
/// paired, then the process repeats. Pd = matched truths / total truths;
/// Fa = pixels belonging to unmatched detections / total image pixels.
pub fn pd_fa(
    maps: &[GrayImage],
    truth: &GroundTruth,
    tau: f64,
    match_radius: f64,
) -> Result<(f64, f64)> {
    assert!(match_radius > 0.0, "match_radius must be positive");
    if maps.len() != truth.centers.len() {
        return Err(Error::LengthMismatch(maps.len(), truth.centers.len()));
    }
    let mut total_truth = 0usize;
    let mut matched = 0usize;
    let mut false_pixels = 0usize;
    let mut total_pixels = 0usize;
    for (map, gts) in maps.iter().zip(truth.centers.iter()) {
        total_pixels += map.pixels.len();
        total_truth += gts.len();
        let dets = detect_components(map, tau);
        let mut det_used = vec![false; dets.len()];
        let mut gt_used = vec![false; gts.len()];
        loop {
            let mut best: Option<(usize, usize, f64)> = None;
            for (di, d) in dets.iter().enumerate() {
                if det_used[di] {
                    continue;
                }
                for (gi, &(gx, gy)) in gts.iter().enumerate() {
                    if gt_used[gi] {
                        continue;
                    }
                    let dist = ((d.x - gx).powi(2) + (d.y - gy).powi(2)).sqrt();
                    if dist <= match_radius && best.map_or(true, |(_, _, b)| dist < b) {
                        best = Some((di, gi, dist));
                    }
                }
            }
            match best {
                Some((di, gi, _)) => {
                    det_used[di] = true;
                    gt_used[gi] = true;
                    matched += 1;
                }
                None => break,
            }
        }
        false_pixels += dets
            .iter()
            .zip(det_used.iter())
            .filter(|(_, &u)| !u)
            .map(|(d, _)| d.area)
            .sum::<usize>();
    }
    let pd = if total_truth > 0 { matched as f64 / total_truth as f64 } else { 1.0 };
    let fa = false_pixels as f64 / total_pixels as f64;
    Ok((pd, fa))
}

/// Threshold sweep plus its summary areas.
#[derive(Debug, Clone)]
pub struct RocData {
    /// Uniform grid on [0, 1], descending.
    pub thresholds: Vec<f64>,
    pub pd: Vec<f64>,
    pub fa: Vec<f64>,
    /// Area under pd over fa, with (0,0) and (1,1) anchors.
    pub auc_pf_pd: f64,
    /// Area under fa over the threshold axis.
    pub auc_pf_tau: f64,
    /// Area under pd over the threshold axis.
    pub auc_pd_tau: f64,
}

impl RocData {
    /// Both rates must be nonincreasing in the threshold, and every area
    /// must land in [0, 1] (up to rounding).
    pub fn assert_invariants(&self) {
        for w in self.thresholds.windows(2) {
            assert!(w[1] <= w[0], "thresholds must descend");
        }
        // thresholds descend along the vectors, so rates may only grow.
        for w in self.pd.windows(2) {
            assert!(w[1] + 1e-12 >= w[0], "pd must be nonincreasing in the threshold");
        }
        for w in self.fa.windows(2) {
            assert!(w[1] + 1e-12 >= w[0], "fa must be nonincreasing in the threshold");
        }
        for v in [self.auc_pf_pd, self.auc_pf_tau, self.auc_pd_tau] {
            assert!((-1e-12..=1.0 + 1e-12).contains(&v), "AUC {v} outside [0,1]");
        }
    }
}

/// Threshold-swept ROC over normalized maps.
///
/// Maps are renormalized by their global maximum. At each threshold a
/// truth center counts as detected when the pixel nearest its center
/// reaches the threshold, and every at-threshold pixel farther than
/// `match_radius` from all truths counts as a false-alarm pixel.
/// Thresholding superlevel sets makes both rates nonincreasing in the
/// threshold, which the component-matching statistic of [`pd_fa`] cannot
/// guarantee (a merged blob's centroid can drift off a target as the
/// threshold falls), so sweeps use this coverage statistic.
pub fn roc_curves(
    maps: &[GrayImage],
    truth: &GroundTruth,
    n_thresholds: usize,
    match_radius: f64,
) -> Result<RocData> {
    if maps.len() != truth.centers.len() {
        return Err(Error::LengthMismatch(maps.len(), truth.centers.len()));
    }
    assert!(n_thresholds >= 2, "need at least two thresholds");
    let max = maps
        .iter()
        .flat_map(|m| m.pixels.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let r2 = match_radius * match_radius;

    let total_truth: usize = truth.centers.iter().map(|c| c.len()).sum();
    let total_pixels: usize = maps.iter().map(|m| m.pixels.len()).sum();

    // Per-truth score: the normalized value of the pixel nearest the true
    // center. A single pixel, not a disc maximum, so that on structureless
    // maps the score shares the outside-pixel distribution and the ROC sits
    // on the diagonal. The disc of radius `match_radius` only carves out a
    // buffer: pixels inside any disc are excluded from the false-alarm
    // population so target bleed does not count against the detector.
    let mut truth_scores: Vec<f64> = Vec::with_capacity(total_truth);
    let mut outside: Vec<f64> = Vec::with_capacity(total_pixels);
    for (map, gts) in maps.iter().zip(truth.centers.iter()) {
        for &(gx, gy) in gts {
            let x = (gx.round().max(0.0) as usize).min(map.width - 1);
            let y = (gy.round().max(0.0) as usize).min(map.height - 1);
            truth_scores.push(map.get(x, y) * scale);
        }
        for y in 0..map.height {
            for x in 0..map.width {
                let inside = gts
                    .iter()
                    .any(|&(gx, gy)| (x as f64 - gx).powi(2) + (y as f64 - gy).powi(2) <= r2);
                if !inside {
                    outside.push(map.get(x, y) * scale);
                }
            }
        }
    }
    outside.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut thresholds = Vec::with_capacity(n_thresholds);
    let mut pd = Vec::with_capacity(n_thresholds);
    let mut fa = Vec::with_capacity(n_thresholds);
    for i in (0..n_thresholds).rev() {
        let tau = i as f64 / (n_thresholds - 1) as f64;
        let hits = truth_scores.iter().filter(|&&p| p >= tau).count();
        let fp = outside.len() - outside.partition_point(|&v| v < tau);
        thresholds.push(tau);
        pd.push(if total_truth > 0 { hits as f64 / total_truth as f64 } else { 1.0 });
        fa.push(fp as f64 / total_pixels as f64);
    }

    // thresholds descend, so fa/pd come out ascending: ready for pd(fa).
    let mut xs = fa.clone();
    let mut ys = pd.clone();
    xs.insert(0, 0.0);
    ys.insert(0, 0.0);
    xs.push(1.0);
    ys.push(1.0);
    let auc_pf_pd = auc(&xs, &ys)?;
    let taus_asc: Vec<f64> = thresholds.iter().rev().copied().collect();
    let fa_by_tau: Vec<f64> = fa.iter().rev().copied().collect();
    let pd_by_tau: Vec<f64> = pd.iter().rev().copied().collect();
    let auc_pf_tau = auc(&taus_asc, &fa_by_tau)?;
    let auc_pd_tau = auc(&taus_asc, &pd_by_tau)?;
    let roc = RocData { thresholds, pd, fa, auc_pf_pd, auc_pf_tau, auc_pd_tau };
    roc.assert_invariants();
    Ok(roc)
}

/// Trapezoid area under `ys` over `xs`; `xs` must be sorted ascending and
/// the lists equally sized with at least two points.
pub fn auc(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::LengthMismatch(xs.len(), 2));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsortedInput);
    }
    let mut area = 0.0;
    for i in 1..xs.len() {
        area += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    Ok(area)
}

/// CSV with a `tau,pd,fa` header, one row per threshold.
pub fn roc_csv(roc: &RocData) -> String {
    let mut out = String::from("tau,pd,fa\n");
    for i in 0..roc.thresholds.len() {
        out.push_str(&format!(
            "{:.6},{:.8},{:.10}\n",
            roc.thresholds[i], roc.pd[i], roc.fa[i]
        ));
    }
    out
}

/// Second CSV: `metric,value` rows for the three areas.
pub fn auc_csv(roc: &RocData) -> String {
    format!(
        "metric,value\nauc_pf_pd,{:.8}\nauc_pf_tau,{:.8}\nauc_pd_tau,{:.8}\n",
        roc.auc_pf_pd, roc.auc_pf_tau, roc.auc_pd_tau
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image_from(rows: &[&[f64]]) -> GrayImage {
        let h = rows.len();
        let w = rows[0].len();
        let mut img = GrayImage::zeros(w, h);
        for (y, r) in rows.iter().enumerate() {
            for (x, v) in r.iter().enumerate() {
                img.set(x, y, *v);
            }
        }
        img
    }

    #[test]
    fn single_blob_detected_at_its_center() {
        let img = image_from(&[
            &[0.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.5, 0.0, 0.0],
            &[0.0, 0.5, 1.0, 0.5, 0.0],
            &[0.0, 0.0, 0.5, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0],
        ]);
        let dets = detect_components(&img, 0.25);
        assert_eq!(dets.len(), 1);
        let d = &dets[0];
        assert!((d.x - 2.0).abs() < 1e-12 && (d.y - 2.0).abs() < 1e-12);
        assert_eq!(d.area, 5);
        assert_eq!(d.score, 1.0);
    }

    #[test]
    fn separated_blobs_detected_individually() {
        let mut img = GrayImage::zeros(16, 16);
        img.set(2, 2, 0.9);
        img.set(12, 13, 0.8);
        let dets = detect_components(&img, 0.5);
        assert_eq!(dets.len(), 2);
    }

    #[test]
    fn diagonal_pixels_join_via_eight_connectivity() {
        let mut img = GrayImage::zeros(4, 4);
        img.set(1, 1, 0.9);
        img.set(2, 2, 0.9);
        let dets = detect_components(&img, 0.5);
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].area, 2);
    }

    /// Count components of a boolean mask with a union-find structure,
    /// independent of the library's flood fill.
    fn component_count_oracle(mask: &[bool], w: usize, h: usize) -> usize {
        let mut parent: Vec<usize> = (0..w * h).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for y in 0..h {
            for x in 0..w {
                if !mask[y * w + x] {
                    continue;
                }
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                        if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                            continue;
                        }
                        let (ny, nx) = (ny as usize, nx as usize);
                        if mask[ny * w + nx] {
                            let (a, b) = (find(&mut parent, y * w + x), find(&mut parent, ny * w + nx));
                            parent[a] = b;
                        }
                    }
                }
            }
        }
        (0..w * h)
            .filter(|&i| mask[i] && find(&mut parent, i) == i)
            .count()
    }

    #[test]
    fn component_counts_match_union_find_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for _ in 0..30 {
            let (w, h) = (rng.gen_range(4..20), rng.gen_range(4..20));
            let mut img = GrayImage::zeros(w, h);
            for p in img.pixels.iter_mut() {
                *p = if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 };
            }
            let mask: Vec<bool> = img.pixels.iter().map(|&p| p >= 0.5).collect();
            let dets = detect_components(&img, 0.5);
            assert_eq!(dets.len(), component_count_oracle(&mask, w, h), "{w}x{h}");
            let total_area: usize = dets.iter().map(|d| d.area).sum();
            assert_eq!(total_area, mask.iter().filter(|m| **m).count());
        }
    }

    #[test]
    fn pd_fa_basic_outcomes() {
        let mut img = GrayImage::zeros(16, 16);
        img.set(5, 6, 1.0);
        let maps = vec![img];
        let truth = GroundTruth { centers: vec![vec![(5.0, 6.0)]] };
        let (pd, fa) = pd_fa(&maps, &truth, 0.5, 4.0).unwrap();
        assert_eq!((pd, fa), (1.0, 0.0));

        // Detection far from the truth: a miss plus one false pixel.
        let truth_far = GroundTruth { centers: vec![vec![(14.0, 1.0)]] };
        let (pd, fa) = pd_fa(&maps, &truth_far, 0.5, 4.0).unwrap();
        assert_eq!(pd, 0.0);
        assert!((fa - 1.0 / 256.0).abs() < 1e-15);

        // No truths at all: pd defaults to 1.
        let truth_none = GroundTruth { centers: vec![vec![]] };
        let (pd, _) = pd_fa(&maps, &truth_none, 0.5, 4.0).unwrap();
        assert_eq!(pd, 1.0);
    }

    #[test]
    fn pd_fa_counts_false_pixels_not_blobs() {
        let mut img = GrayImage::zeros(256, 256);
        for i in 0..5 {
            img.set(20 + 3 * i, 40, 1.0); // five isolated single-pixel blobs
        }
        let maps = vec![img];
        let truth = GroundTruth { centers: vec![vec![]] };
        let (_, fa) = pd_fa(&maps, &truth, 0.5, 4.0).unwrap();
        assert!((fa - 5.0 / 65536.0).abs() < 1e-15);
    }

    #[test]
    fn pd_fa_rejects_mismatched_lengths() {
        let maps = vec![GrayImage::zeros(4, 4)];
        let truth = GroundTruth { centers: vec![vec![], vec![]] };
        assert!(matches!(pd_fa(&maps, &truth, 0.5, 4.0), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn perfect_maps_score_unit_auc() {
        let mut maps = Vec::new();
        let mut centers = Vec::new();
        for f in 0..4 {
            let mut img = GrayImage::zeros(32, 32);
            img.set(8 + f, 10, 1.0);
            maps.push(img);
            centers.push(vec![((8 + f) as f64, 10.0)]);
        }
        let roc = roc_curves(&maps, &GroundTruth { centers }, 101, 4.0).unwrap();
        roc.assert_invariants();
        assert_eq!(roc.auc_pf_pd, 1.0);
        // fa only fires at the tau = 0 endpoint (zero pixels are >= 0), so
        // the area is at most half of one threshold bin.
        assert!(roc.auc_pf_tau <= 0.5 / 100.0 + 1e-12);
    }

    #[test]
    fn empty_maps_never_fire() {
        let maps = vec![GrayImage::zeros(16, 16); 3];
        let centers = vec![vec![(4.0, 4.0)]; 3];
        let roc = roc_curves(&maps, &GroundTruth { centers }, 51, 4.0).unwrap();
        roc.assert_invariants();
        // Every positive threshold misses; only the tau = 0 endpoint trivially covers.
        for (t, pd) in roc.thresholds.iter().zip(&roc.pd) {
            if *t > 0.0 {
                assert_eq!(*pd, 0.0);
            }
        }
    }

    #[test]
    fn random_maps_score_near_half() {
        let mut aucs = Vec::new();
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut maps = Vec::new();
            let mut centers = Vec::new();
            for _ in 0..4 {
                let mut img = GrayImage::zeros(48, 48);
                for p in img.pixels.iter_mut() {
                    *p = rng.gen::<f64>();
                }
                maps.push(img);
                centers.push(vec![(rng.gen_range(6.0..42.0), rng.gen_range(6.0..42.0))]);
            }
            let roc = roc_curves(&maps, &GroundTruth { centers }, 201, 4.0).unwrap();
            roc.assert_invariants();
            aucs.push(roc.auc_pf_pd);
        }
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        assert!((mean - 0.5).abs() <= 0.05, "mean random AUC {mean}");
    }

    #[test]
    fn roc_is_invariant_to_map_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut maps = Vec::new();
        let mut centers = Vec::new();
        for _ in 0..3 {
            let mut img = GrayImage::zeros(24, 24);
            for p in img.pixels.iter_mut() {
                *p = rng.gen::<f64>() * 0.3;
            }
            img.set(12, 12, 0.31);
            maps.push(img);
            centers.push(vec![(12.0, 12.0)]);
        }
        let truth = GroundTruth { centers };
        let a = roc_curves(&maps, &truth, 101, 4.0).unwrap();
        for m in maps.iter_mut() {
            for p in m.pixels.iter_mut() {
                *p *= 2.5;
            }
        }
        let b = roc_curves(&maps, &truth, 101, 4.0).unwrap();
        assert_eq!(a.pd, b.pd);
        assert_eq!(a.fa, b.fa);
        assert_eq!(a.auc_pf_pd, b.auc_pf_pd);
    }

    #[test]
    fn auc_known_shapes() {
        // Unit step at the origin covers the whole square.
        assert_eq!(auc(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]).unwrap(), 1.0);
        // Diagonal: one half.
        assert!((auc(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(auc(&[0.5, 0.2], &[0.0, 1.0]), Err(Error::UnsortedInput)));
        assert!(matches!(auc(&[0.0, 1.0], &[0.0]), Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn auc_matches_riemann_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for _ in 0..40 {
            xs.push(xs.last().unwrap() + rng.gen::<f64>() * 0.02);
            ys.push((ys.last().unwrap() + rng.gen::<f64>() * 0.02).min(1.0));
        }
        let got = auc(&xs, &ys).unwrap();
        // Left-right averaged Riemann sum on a dense grid over the same
        // piecewise-linear interpolant.
        let interp = |x: f64| {
            let i = xs.partition_point(|&v| v <= x).min(xs.len() - 1).max(1);
            let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
            if x1 == x0 { y0 } else { y0 + (y1 - y0) * (x - x0) / (x1 - x0) }
        };
        let n = 100_000;
        let (lo, hi) = (xs[0], *xs.last().unwrap());
        let mut riemann = 0.0;
        for i in 0..n {
            let x0 = lo + (hi - lo) * i as f64 / n as f64;
            let x1 = lo + (hi - lo) * (i + 1) as f64 / n as f64;
            riemann += 0.5 * (interp(x0) + interp(x1)) * (x1 - x0);
        }
        assert!((got - riemann).abs() < 1e-4, "trapezoid {got} vs riemann {riemann}");
    }

    #[test]
    fn csv_outputs_are_well_formed() {
        let mut img = GrayImage::zeros(8, 8);
        img.set(4, 4, 1.0);
        let truth = GroundTruth { centers: vec![vec![(4.0, 4.0)]] };
        let roc = roc_curves(&[img], &truth, 11, 3.0).unwrap();
        let csv = roc_csv(&roc);
        assert!(csv.starts_with("tau,pd,fa\n"));
        assert_eq!(csv.lines().count(), 12);
        let summary = auc_csv(&roc);
        assert!(summary.starts_with("metric,value\n"));
        assert!(summary.contains("auc_pf_pd,"));
        assert!(summary.contains("auc_pf_tau,"));
        assert!(summary.contains("auc_pd_tau,"));
    }
}
