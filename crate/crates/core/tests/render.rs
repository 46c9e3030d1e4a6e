mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use tempfile::TempDir;
use tissuelens::geometry::level_to_level0;
use tissuelens::image_store::{open_dataset, Plane, RegionRect};
use tissuelens::render::{
    composite, lens_scale_ticks, lens_source_coord, map_intensity, render_cell_boundaries,
    render_context, render_lens, render_view, source_radius, split_screen, to_rgba, CellPalette,
    ChannelRenderSetting, ChannelSet, LensMode, LensState, Magnifier,
};
use tissuelens::{ErrorKind, LensGeometry};

use common::{channel_set, small_dataset};

fn scalar_composite(planes: &[Plane<u16>], set: &ChannelSet, x: usize, y: usize) -> [u8; 3] {
    let mut acc = [0u32; 3];
    for (p, s) in planes.iter().zip(&set.settings) {
        let v = f64::from(p.get(x, y));
        let t = ((v - f64::from(s.range_lo)) / f64::from(s.range_hi - s.range_lo)).clamp(0.0, 1.0);
        for k in 0..3 {
            acc[k] += (t * f64::from(s.color[k]) + 0.5).floor() as u32;
        }
    }
    acc.map(|v| v.min(255) as u8)
}

#[test]
fn composite_matches_scalar_loop() {
    let mut seed = 12345u64;
    let mut next = || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (seed >> 33) as u16
    };
    let planes: Vec<Plane<u16>> = (0..3)
        .map(|_| Plane::from_fn(16, 16, |_, _| next()))
        .collect();
    let set = ChannelSet::new(
        "s",
        vec![
            ChannelRenderSetting::new("a", [255, 10, 0], 1000, 50000),
            ChannelRenderSetting::new("b", [0, 200, 30], 0, 30000),
            ChannelRenderSetting::new("c", [90, 90, 255], 20000, 65535),
        ],
    );
    let refs: Vec<&Plane<u16>> = planes.iter().collect();
    let out = composite(&refs, &set).unwrap();
    for y in 0..16 {
        for x in 0..16 {
            assert_eq!(out.get(x, y), scalar_composite(&planes, &set, x, y));
        }
    }
}

#[test]
fn saturated_red_and_blue_make_magenta() {
    let p = Plane::filled(2, 2, 60000u16);
    let set = ChannelSet::new(
        "s",
        vec![
            ChannelRenderSetting::new("a", [255, 0, 0], 0, 100),
            ChannelRenderSetting::new("b", [0, 0, 255], 0, 100),
        ],
    );
    let out = composite(&[&p, &p], &set).unwrap();
    assert!(out.as_slice().iter().all(|&c| c == [255, 0, 255]));
    let s = ChannelRenderSetting::new("a", [200, 100, 0], 0, 200);
    assert_eq!(map_intensity(100, &s), [100, 50, 0]);
    assert_eq!(map_intensity(0, &s), [0, 0, 0]);
}

proptest! {
    #[test]
    fn composite_is_order_independent(values in prop::collection::vec(any::<u16>(), 12), colors in prop::collection::vec(any::<[u8; 3]>(), 3)) {
        let planes: Vec<Plane<u16>> = (0..3).map(|c| Plane::from_vec(2, 2, values[c * 4..c * 4 + 4].to_vec()).unwrap()).collect();
        let settings: Vec<ChannelRenderSetting> = (0..3)
            .map(|c| ChannelRenderSetting::new(format!("c{c}"), colors[c], 100 * c as u16, 40000 + c as u16))
            .collect();
        let fwd = composite(&[&planes[0], &planes[1], &planes[2]], &ChannelSet::new("f", settings.clone())).unwrap();
        let rev_settings = vec![settings[2].clone(), settings[0].clone(), settings[1].clone()];
        let rev = composite(&[&planes[2], &planes[0], &planes[1]], &ChannelSet::new("r", rev_settings)).unwrap();
        prop_assert_eq!(fwd, rev);
    }

    #[test]
    fn distortion_profiles_are_monotone(m in 1.0f64..8.0, f in 0.05f64..1.0, radius in 1.0f64..500.0) {
        for mag in [Magnifier::Normal, Magnifier::Fisheye, Magnifier::Plateau] {
            prop_assert_eq!(source_radius(0.0, radius, mag, m, f), 0.0);
            let mut prev = 0.0;
            for i in 0..=200 {
                let s = source_radius(f64::from(i) / 200.0, radius, mag, m, f);
                prop_assert!(s + 1e-12 >= prev);
                prev = s;
            }
        }
        prop_assert!((source_radius(1.0, radius, Magnifier::Fisheye, m, f) - radius).abs() <= 1e-9 * radius);
        if f < 1.0 {
            prop_assert!((source_radius(1.0, radius, Magnifier::Plateau, m, f) - radius).abs() <= 1e-9 * radius);
        }
        prop_assert!((source_radius(1.0, radius, Magnifier::Normal, m, f) - radius / m).abs() <= 1e-9 * radius);
    }
}

#[test]
fn plateau_with_full_fraction_matches_normal() {
    for i in 0..=10 {
        let rho = f64::from(i) / 10.0;
        assert_eq!(
            source_radius(rho, 50.0, Magnifier::Plateau, 3.0, 1.0),
            source_radius(rho, 50.0, Magnifier::Normal, 3.0, 1.0)
        );
    }
}

#[test]
fn source_coord_examples() {
    let g = LensGeometry::circle(200.0, 100.0, 100.0);
    for mag in [Magnifier::Normal, Magnifier::Fisheye, Magnifier::Plateau] {
        assert_eq!(
            lens_source_coord((200.0, 100.0), &g, mag, 2.0, 0.75).unwrap(),
            (200.0, 100.0)
        );
    }
    let (x, y) = lens_source_coord((275.0, 100.0), &g, Magnifier::Plateau, 2.0, 0.75).unwrap();
    assert!((x - 237.5).abs() < 1e-9 && (y - 100.0).abs() < 1e-12);
    let (x, _) = lens_source_coord((300.0, 100.0), &g, Magnifier::Fisheye, 2.0, 0.75).unwrap();
    assert!((x - 300.0).abs() < 1e-9);
    let e = lens_source_coord((301.0, 100.0), &g, Magnifier::Normal, 2.0, 0.75).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::BadRequest);
}

#[test]
fn boundaries_match_neighbourhood_scan() {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path(), 41);
    let h = open_dataset(&ds.dir).unwrap();
    let mask = h
        .read_mask_region(&RegionRect::new(0, 0, 0, 300, 220))
        .unwrap();
    let types: HashMap<u32, String> = ds
        .truth
        .cells
        .iter()
        .map(|c| (c.id, c.cell_type.clone()))
        .collect();
    let mut palette = CellPalette::default();
    palette.types.insert("Tumor".into(), [255, 0, 0]);
    palette.types.insert("T cell".into(), [0, 255, 0]);
    let overlay = render_cell_boundaries(&mask, &types, &palette, None);
    for y in 0..220usize {
        for x in 0..300usize {
            let id = mask.get(x, y);
            let mut edge = false;
            if id != 0 {
                for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0
                        && ny >= 0
                        && nx < 300
                        && ny < 220
                        && mask.get(nx as usize, ny as usize) != id
                    {
                        edge = true;
                    }
                }
            }
            let px = overlay.get(x, y);
            if edge {
                let expect = match types[&id].as_str() {
                    "Tumor" => [255, 0, 0],
                    "T cell" => [0, 255, 0],
                    _ => [128, 128, 128],
                };
                assert_eq!(px, [expect[0], expect[1], expect[2], 255]);
            } else {
                assert_eq!(px[3], 0);
            }
        }
    }
    let p = &ds.truth.patterns[0];
    let bg = mask.crop(
        p.x0 as usize,
        p.y0 as usize,
        (p.x0 + p.size) as usize,
        (p.y0 + p.size) as usize,
    );
    assert!(render_cell_boundaries(&bg, &types, &palette, None)
        .as_slice()
        .iter()
        .all(|px| px[3] == 0));
}

#[test]
fn adjacent_cells_are_both_outlined() {
    let mask = Plane::from_fn(6, 3, |x, _| if x < 3 { 1 } else { 2 });
    let types = HashMap::from([(1, "A".to_string()), (2, "B".to_string())]);
    let palette = CellPalette {
        types: HashMap::from([("A".to_string(), [1, 2, 3]), ("B".to_string(), [4, 5, 6])]),
        fallback: [9, 9, 9],
    };
    let out = render_cell_boundaries(&mask, &types, &palette, None);
    for y in 0..3 {
        assert_eq!(out.get(2, y), [1, 2, 3, 255]);
        assert_eq!(out.get(3, y), [4, 5, 6, 255]);
        assert_eq!(out.get(1, y)[3], 0);
    }
    let only = HashSet::from([2]);
    let out = render_cell_boundaries(&mask, &types, &palette, Some(&only));
    assert_eq!(out.get(2, 0)[3], 0);
    assert_eq!(out.get(3, 0)[3], 255);
}

struct Fixture {
    _dir: TempDir,
    handle: tissuelens::image_store::DatasetHandle,
    names: Vec<String>,
}

fn fixture(seed: u64) -> Fixture {
    let dir = TempDir::new().unwrap();
    let ds = small_dataset(dir.path(), seed);
    let handle = open_dataset(&ds.dir).unwrap();
    let names = handle
        .meta()
        .channels
        .iter()
        .map(|c| c.name.clone())
        .collect();
    Fixture {
        _dir: dir,
        handle,
        names,
    }
}

fn inside_pixels(viewport: &RegionRect, g: &LensGeometry) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..viewport.height() as usize {
        for x in 0..viewport.width() as usize {
            let qx = level_to_level0((viewport.x0 + x as u64) as f64, viewport.level);
            let qy = level_to_level0((viewport.y0 + y as u64) as f64, viewport.level);
            if g.contains(qx, qy) {
                out.push((x, y));
            }
        }
    }
    out
}

#[test]
fn identity_lens_equals_context() {
    let fx = fixture(42);
    let set = channel_set("ctx", &fx.names);
    for level in 0..2 {
        let (w, h) = fx.handle.meta().level_dims(level);
        let vp = RegionRect::new(level, 0, 0, w, h);
        let context = to_rgba(&render_context(&fx.handle, &vp, &set).unwrap());
        for (g, mag) in [
            (LensGeometry::circle(150.0, 110.0, 45.0), Magnifier::None),
            (LensGeometry::circle(150.0, 110.0, 45.0), Magnifier::Plateau),
            (LensGeometry::rect(90.0, 60.0, 30.0, 20.0), Magnifier::None),
        ] {
            let mut lens = LensState::new(g, set.clone());
            lens.magnifier = mag;
            let frame = render_view(&fx.handle, &vp, &set, Some(&lens)).unwrap();
            assert_eq!(frame, context, "level {level} {mag:?}");
        }
    }
}

#[test]
fn zero_alpha_leaves_context() {
    let fx = fixture(43);
    let ctx = channel_set("ctx", &fx.names);
    let other = channel_set("lens", &fx.names[1..]);
    let vp = RegionRect::new(0, 20, 10, 280, 200);
    let mut lens = LensState::new(LensGeometry::circle(140.0, 100.0, 60.0), other);
    lens.magnifier = Magnifier::Fisheye;
    lens.mag_factor = 3.0;
    lens.blend_alpha = 0.0;
    let frame = render_view(&fx.handle, &vp, &ctx, Some(&lens)).unwrap();
    assert_eq!(
        frame,
        to_rgba(&render_context(&fx.handle, &vp, &ctx).unwrap())
    );
}

#[test]
fn plateau_rim_is_seamless() {
    let fx = fixture(44);
    let set = channel_set("ctx", &fx.names);
    let vp = RegionRect::new(0, 0, 0, 300, 220);
    let g = LensGeometry::circle(150.0, 110.0, 40.0);
    let mut lens = LensState::new(g, set.clone());
    lens.magnifier = Magnifier::Plateau;
    lens.mag_factor = 2.0;
    let patch = render_lens(&fx.handle, &vp, &set, &lens).unwrap();
    assert_eq!(patch.source_level, 0);
    let context = render_context(&fx.handle, &vp, &set).unwrap();
    let mut rim = 0;
    let mut differs_inside = 0;
    for (x, y) in inside_pixels(&vp, &g) {
        let d = ((x as f64 - 150.0).powi(2) + (y as f64 - 110.0).powi(2)).sqrt();
        let px = patch
            .rgba
            .get((x as i64 - patch.x) as usize, (y as i64 - patch.y) as usize);
        let c = context.get(x, y);
        if d > 40.0 - 0.2 {
            rim += 1;
            assert_eq!([px[0], px[1], px[2]], c, "rim pixel ({x}, {y})");
        } else if [px[0], px[1], px[2]] != c {
            differs_inside += 1;
        }
    }
    assert!(rim > 0);
    assert!(
        differs_inside > 0,
        "magnified interior should differ from context"
    );
}

#[test]
fn lens_samples_finer_level_when_magnified() {
    let fx = fixture(45);
    let set = channel_set("ctx", &fx.names);
    let vp = RegionRect::new(2, 0, 0, 75, 55);
    let mut lens = LensState::new(LensGeometry::circle(150.0, 110.0, 60.0), set.clone());
    lens.magnifier = Magnifier::Normal;
    lens.mag_factor = 4.0;
    assert_eq!(
        render_lens(&fx.handle, &vp, &set, &lens)
            .unwrap()
            .source_level,
        0
    );
    lens.mag_factor = 2.0;
    assert_eq!(
        render_lens(&fx.handle, &vp, &set, &lens)
            .unwrap()
            .source_level,
        1
    );
}

#[test]
fn split_screen_placement_and_content() {
    let fx = fixture(46);
    let ctx = channel_set("ctx", &fx.names);
    let vp = RegionRect::new(0, 0, 0, 300, 220);
    let g = LensGeometry::circle(100.0, 100.0, 30.0);
    let mut lens = LensState::new(g, ctx.clone());
    lens.mode = LensMode::SplitScreen;
    let (a, b) = split_screen(&fx.handle, &vp, &ctx, &lens).unwrap();
    assert_eq!(a.rgba, b.rgba);
    let (ax0, ay0, ax1, ay1) = a.rect();
    let (bx0, by0, bx1, by1) = b.rect();
    assert!(bx0 >= ax1 || bx1 <= ax0 || by0 >= ay1 || by1 <= ay0);

    lens.lens_channel_set = channel_set("lens", &fx.names[2..]);
    let (a, b) = split_screen(&fx.handle, &vp, &ctx, &lens).unwrap();
    assert_ne!(a.rgba, b.rgba);
    let context = render_context(&fx.handle, &vp, &ctx).unwrap();
    for (x, y) in inside_pixels(&vp, &g) {
        let px = b
            .rgba
            .get((x as i64 - a.x) as usize, (y as i64 - a.y) as usize);
        assert_eq!([px[0], px[1], px[2]], context.get(x, y));
    }
}

#[test]
fn distortion_rejected_on_rectangles() {
    let fx = fixture(47);
    let ctx = channel_set("ctx", &fx.names);
    let mut lens = LensState::new(LensGeometry::rect(50.0, 50.0, 10.0, 10.0), ctx.clone());
    lens.magnifier = Magnifier::Fisheye;
    lens.mag_factor = 2.0;
    let e = render_view(
        &fx.handle,
        &RegionRect::new(0, 0, 0, 100, 100),
        &ctx,
        Some(&lens),
    )
    .unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Capability);
}

#[test]
fn scale_ticks_in_microns() {
    let g = LensGeometry::circle(0.0, 0.0, 500.0);
    let axis = lens_scale_ticks(&g, 0.325, 1.0).unwrap();
    assert!((axis.length_um - 325.0).abs() < 1e-9);
    let zoomed = lens_scale_ticks(&g, 0.325, 2.0).unwrap();
    assert_eq!(axis.step_um, zoomed.step_um);
    for (a, b) in axis.ticks.iter().zip(&zoomed.ticks) {
        assert_eq!(a.label_um, b.label_um);
        assert!((b.offset_px - 2.0 * a.offset_px).abs() < 1e-9);
    }
    let m = axis.step_um / 10f64.powf(axis.step_um.log10().floor());
    assert!([1.0, 2.0, 5.0].iter().any(|v| (v - m).abs() < 1e-9));
    assert!(lens_scale_ticks(&g, 0.325, 0.0).is_err());
}
