use airway_taper::ctsim::{rescale_mask, rescale_volume, rescale_voxel, snap_to_mask};
use airway_taper::lumen::MeasureConfig;
use airway_taper::phantom::{make_phantom, Centreline, PhantomSpec, PhantomTruth};
use airway_taper::pipeline::{extract_centrelines, measure_airways};
use airway_taper::skeleton::DistalPoint;
use airway_taper::taper::{read_results_csv, write_results_csv};
use airway_taper::volio::{load_mask, load_volume, save_mask, save_volume};

fn distal(truth: &PhantomTruth) -> Vec<DistalPoint> {
    truth
        .airways
        .iter()
        .map(|a| DistalPoint {
            id: a.id.clone(),
            voxel: a.distal_voxel,
        })
        .collect()
}

fn small_cfg() -> MeasureConfig {
    MeasureConfig {
        half_extent: 8.0,
        ..MeasureConfig::default()
    }
}

#[test]
fn straight_tube_through_disk() {
    let spec = PhantomSpec {
        margin_mm: [11.5, 11.5, 0.0],
        ..PhantomSpec::straight(4.5, -0.015, 30.0)
    };
    let (ct, mask, truth) = make_phantom(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_volume(&ct, dir.path().join("ct.mhd")).unwrap();
    save_mask(&mask, dir.path().join("mask.mhd")).unwrap();
    let ct2 = load_volume(dir.path().join("ct.mhd")).unwrap();
    let mask2 = load_mask(dir.path().join("mask.mhd")).unwrap();
    assert!(ct2.same_grid(&mask2));

    let m = measure_airways(&ct2, &mask2, &distal(&truth), &small_cfg()).unwrap();
    assert_eq!(m.len(), 1);
    let t = m[0].taper.as_ref().unwrap();
    assert!((t.taper + 0.015).abs() < 0.002, "taper {}", t.taper);
    assert!(t.n > 80);

    let mut csv = Vec::new();
    write_results_csv(std::slice::from_ref(t), &mut csv).unwrap();
    let back = read_results_csv(csv.as_slice()).unwrap();
    assert_eq!(back[0].airway_id, "airway");
}

#[test]
fn helix_length_matches_truth() {
    let spec = PhantomSpec {
        centreline: Centreline::Helix {
            radius_mm: 8.0,
            pitch_mm: 60.0,
        },
        ..PhantomSpec::straight(4.0, 0.0, 45.0)
    };
    let (_, mask, truth) = make_phantom(&spec).unwrap();
    let (_, centrelines) = extract_centrelines(&mask, &distal(&truth)).unwrap();
    let path = &centrelines[0].path.voxels;
    let a = &truth.airways[0];
    // Analytic arclength at the truth sample nearest to a voxel centre.
    let s_at = |v| {
        let p = mask.voxel_to_mm(v);
        let i = (0..a.centreline.len())
            .min_by(|&i, &j| {
                let d = |k: usize| (0..3).map(|c| (a.centreline[k][c] - p[c]).powi(2)).sum::<f64>();
                d(i).total_cmp(&d(j))
            })
            .unwrap();
        a.arclength[i]
    };
    let expected = s_at(path[path.len() - 1]) - s_at(path[0]);
    let measured = centrelines[0].spline.length();
    assert!((measured - expected).abs() < 1.0, "{measured} vs {expected}");
}

#[test]
fn y_split_gives_two_airways_from_the_carina() {
    let spec = PhantomSpec {
        centreline: Centreline::YSplit {
            branch_angle_deg: 70.0,
            split_fraction: 0.3,
        },
        margin_mm: [11.5, 11.5, 0.0],
        ..PhantomSpec::straight(4.5, -0.02, 50.0)
    };
    let (ct, mask, truth) = make_phantom(&spec).unwrap();
    let (_, centrelines) = extract_centrelines(&mask, &distal(&truth)).unwrap();
    assert_eq!(centrelines.len(), 2);
    assert_eq!(centrelines[0].path.voxels[0], centrelines[1].path.voxels[0]);
    let m = measure_airways(&ct, &mask, &distal(&truth), &small_cfg()).unwrap();
    assert!(m.iter().all(|a| a.taper.is_some()));
}

#[test]
fn rescaled_phantom_still_measures() {
    let spec = PhantomSpec {
        margin_mm: [11.5, 11.5, 0.0],
        ..PhantomSpec::straight(4.5, -0.02, 30.0)
    };
    let (ct, mask, truth) = make_phantom(&spec).unwrap();
    let scale = 1.4;
    let ct_s = rescale_volume(&ct, scale).unwrap();
    let mask_s = rescale_mask(&mask, scale).unwrap();
    assert!(ct_s.same_grid(&mask_s));
    let points: Vec<DistalPoint> = distal(&truth)
        .into_iter()
        .map(|d| {
            let v = rescale_voxel(d.voxel, scale, mask_s.dims());
            DistalPoint {
                voxel: snap_to_mask(&mask_s, v, 3).unwrap(),
                ..d
            }
        })
        .collect();
    let m = measure_airways(&ct_s, &mask_s, &points, &small_cfg()).unwrap();
    let t = m[0].taper.as_ref().unwrap().taper;
    assert!((t + 0.02).abs() < 0.005, "taper {t}");
}
