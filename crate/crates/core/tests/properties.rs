use proptest::prelude::*;

use bubble_core::harness::{fit_quadratic, Action, Event, ObjectPreset, Scenario};
use bubble_core::perception::{
    aggregate_shear, compute_mask, erode, fill_holes, flow_field, format_gain, largest_component, mask_ir, parse_gain,
    FlowConfig, GainMatrix, MaskConfig,
};
use bubble_core::pneumatics::{controller_step, parse_command, Command, ControllerConfig, ErrorReason};
use bubble_core::sim::{inflate_shape, press_at_width, render_splats, BubbleConfig, ObjectPrimitive, SplatStyle};
use bubble_core::{ContactMask, DepthImage, FlowField, Grid, IrImage};

fn grid<T: Clone + std::fmt::Debug, S: Strategy<Value = T> + Clone>(cell: S, max: usize) -> impl Strategy<Value = Grid<T>> {
    (3..max, 3..max).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(cell.clone(), w * h).prop_map(move |v| Grid::from_vec(w, h, v).unwrap())
    })
}

fn depth(values: Grid<f64>, pressure: f64) -> DepthImage {
    DepthImage::new(values, 0.0, pressure).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_frames_have_no_contact(values in grid(10.0f64..60.0, 24), threshold in 0.05f64..5.0) {
        let d = depth(values, 1050.0);
        let cfg = MaskConfig { threshold, ..MaskConfig::default() };
        prop_assert!(compute_mask(&d, &d, &cfg).unwrap().is_empty());
    }

    #[test]
    fn masks_are_closed_under_cleanup(reference in grid(20.0f64..22.0, 24), dents in proptest::collection::vec(0.0f64..6.0, 24 * 24)) {
        let (w, h) = reference.dims();
        let current = Grid::from_vec(w, h, reference.as_slice().iter().zip(&dents).map(|(r, d)| r - d).collect()).unwrap();
        let mask = compute_mask(&depth(reference, 1050.0), &depth(current, 1050.0), &MaskConfig::default()).unwrap();
        prop_assert_eq!(&fill_holes(&largest_component(&mask.values)), &mask.values);
    }

    #[test]
    fn masked_ir_keeps_only_the_patch(ir in grid(0.0f64..1.0, 20), seed in any::<u64>()) {
        let (w, h) = ir.dims();
        let bits: Vec<bool> = (0..w * h).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let mask = ContactMask::new(Grid::from_vec(w, h, bits).unwrap());
        let image = IrImage::new(ir, 0.0).unwrap();
        let once = mask_ir(&image, &mask).unwrap();
        for ((m, a), b) in mask.values.as_slice().iter().zip(once.values.as_slice()).zip(image.values.as_slice()) {
            prop_assert_eq!(*a, if *m { *b } else { 0.0 });
        }
        prop_assert_eq!(mask_ir(&once, &mask).unwrap(), once);
    }

    #[test]
    fn erosion_shrinks_monotonically(mask in grid(prop::bool::weighted(0.8), 30), r in 0usize..4) {
        let a = erode(&mask, r);
        let b = erode(&a, 1);
        let c = erode(&mask, r + 1);
        for i in 0..mask.len() {
            prop_assert!(!a.as_slice()[i] || mask.as_slice()[i]);
            prop_assert!(!c.as_slice()[i] || a.as_slice()[i]);
            prop_assert_eq!(b.as_slice()[i], c.as_slice()[i]);
        }
    }

    #[test]
    fn shear_aggregate_is_linear(
        vx in proptest::collection::vec(-3.0f64..3.0, 16 * 12),
        vy in proptest::collection::vec(-3.0f64..3.0, 16 * 12),
        a in -2.0f64..2.0,
        gain in proptest::array::uniform9(-1.0f64..1.0),
    ) {
        let (w, h) = (16, 12);
        let mask = ContactMask::new(Grid::from_vec(w, h, (0..w * h).map(|i| (3..13).contains(&(i % w)) && (2..10).contains(&(i / w))).collect()).unwrap());
        let field = |f: &dyn Fn(usize) -> [f64; 2]| FlowField {
            vectors: Grid::from_vec(w, h, (0..w * h).map(f).collect()).unwrap(),
            valid: Grid::filled(w, h, true),
        };
        let k = GainMatrix::from_row_slice(&gain);
        let f1 = field(&|i| [vx[i], vy[i]]);
        let f2 = field(&|i| [vy[i], -vx[i]]);
        let mix = field(&|i| [vx[i] + a * vy[i], vy[i] - a * vx[i]]);
        let (e1, e2, em) = (
            aggregate_shear(&f1, &mask, &k).unwrap(),
            aggregate_shear(&f2, &mask, &k).unwrap(),
            aggregate_shear(&mix, &mask, &k).unwrap(),
        );
        for j in 0..3 {
            let expect = e1.force[j] + a * e2.force[j];
            prop_assert!((em.force[j] - expect).abs() <= 1e-9 * (1.0 + expect.abs()), "{} vs {}", em.force[j], expect);
        }
    }

    #[test]
    fn quadratic_fits_recover_their_coefficients(c0 in -50.0f64..50.0, c1 in -1.0f64..1.0, c2 in -1e-2f64..1e-2) {
        let xs: Vec<f64> = (0..9).map(|i| 1010.0 + 10.0 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c0 + c1 * (x - 1050.0) + c2 * (x - 1050.0).powi(2)).collect();
        let fit = fit_quadratic(&xs, &ys).unwrap();
        prop_assert!((fit.c2 - c2).abs() <= 1e-9);
        for &x in &xs {
            prop_assert!((fit.eval(x) - (c0 + c1 * (x - 1050.0) + c2 * (x - 1050.0).powi(2))).abs() < 1e-6);
        }
    }

    #[test]
    fn commands_round_trip(bubble in 0usize..8, tenths in 10100u32..=10900) {
        let hpa = tenths as f64 / 10.0;
        prop_assert_eq!(parse_command(&format!("SET {bubble} {hpa}\n")), Ok(Command::Set { bubble, hpa }));
        prop_assert_eq!(parse_command(&format!("GET {bubble}")), Ok(Command::Get { bubble }));
        prop_assert_eq!(parse_command(&format!("VENT {bubble}\r\n")), Ok(Command::Vent { bubble }));
        prop_assert_eq!(parse_command(&format!("SET {bubble} {}", hpa + 100.0)), Err(ErrorReason::Range));
    }

    #[test]
    fn command_parser_never_panics(line in "\\PC{0,24}") {
        let _ = parse_command(&line);
    }

    #[test]
    fn controller_never_pumps_and_vents(estimate in 900.0f64..1200.0, setpoint in 1010.0f64..1090.0, band in 0.1f64..5.0) {
        let cfg = ControllerConfig { setpoint, deadband: band, ..ControllerConfig::default() };
        let act = controller_step(estimate, &cfg);
        prop_assert!(!(act.pump_on && act.valve_open));
        prop_assert_eq!(act.pump_on, estimate < setpoint - band);
        prop_assert_eq!(act.valve_open, estimate > setpoint + band);
    }

    #[test]
    fn gains_round_trip_exactly(values in proptest::array::uniform9(-1e6f64..1e6)) {
        let g = GainMatrix::from_row_slice(&values);
        prop_assert_eq!(parse_gain(&format_gain(&g)).unwrap(), g);
    }

    #[test]
    fn scenarios_round_trip(
        seed in any::<u64>(),
        object in 0usize..4,
        times in proptest::collection::vec(0u32..400, 0..6),
        p in 1010u32..1090,
    ) {
        let mut times = times;
        times.sort_unstable();
        let events = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let action = match i % 3 {
                    0 => Action::Pressure(p as f64),
                    1 => Action::Grasp(i % 2 == 0),
                    _ => Action::Shear([0.25 * i as f64, -0.5]),
                };
                Event { time: t as f64 / 10.0, action, line: 10 + i }
            })
            .collect();
        let s = Scenario { name: "rt".into(), object: ObjectPreset::ALL[object], seed, duration: 45.0, events, ..Scenario::default() };
        prop_assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identical_textures_give_zero_flow(points in proptest::collection::vec((0.0f64..48.0, 0.0f64..36.0), 20..60)) {
        let pts: Vec<[f64; 2]> = points.into_iter().map(|(x, y)| [x, y]).collect();
        let img = render_splats(48, 36, &pts, &SplatStyle::default());
        let flow = flow_field(&img, &img, &FlowConfig::default()).unwrap();
        prop_assert!(flow.as_slice().iter().all(|v| v[0].abs() < 1e-9 && v[1].abs() < 1e-9));
    }

    #[test]
    fn pressing_never_lifts_the_membrane(p in 1010.0f64..1090.0, radius in 3.0f64..30.0, width in 0.0f64..66.0, x in -10.0f64..10.0) {
        let free = inflate_shape(&BubbleConfig::default(), p).unwrap();
        let object = ObjectPrimitive::cylinder(radius).at(x, 0.0);
        let Ok(held) = press_at_width(&free, &object, width) else { return Ok(()) };
        for (a, b) in held.height_field.as_slice().iter().zip(free.height_field.as_slice()) {
            prop_assert!(a <= b);
        }
        prop_assert!(held.contact_area_px() <= held.height_field.len());
    }
}
