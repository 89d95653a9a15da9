use ccx::delaunay::{cell_interpolant, triangulate, PointCloud};
use ccx::envelope::{brute_force_envelope_1d, convex_envelope, SolverConfig, StencilConfig};
use ccx::field::{extend, GridSpec, Module, SampleMask, SampledFunction, ScalarField, Sign};
use ccx::io::{field_from_csv, field_to_csv};
use ccx::metrics::{psnr, relative_l2};
use ccx::prototypes::{analytic_average, analytic_lower, analytic_upper, PrototypeId};
use ccx::tasks::inpaint;
use ccx::transforms::{average_approximation, lower_transform, upper_transform, Engine, TransformParams};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn solver() -> SolverConfig {
    SolverConfig::with_tol(TOL)
}

fn field_strategy(max_side: usize) -> impl Strategy<Value = ScalarField> {
    (2..=max_side, 2..=max_side, -2.0..2.0f64, -2.0..2.0f64, 0.05..1.0f64).prop_flat_map(|(nx, ny, x0, y0, h)| {
        prop::collection::vec(-1.0..1.0f64, nx * ny)
            .prop_map(move |v| ScalarField::new(GridSpec::new(nx, ny, x0, y0, h).unwrap(), v).unwrap())
    })
}

fn sample_strategy(max_side: usize) -> impl Strategy<Value = SampledFunction> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(prop::option::weighted(0.3, -1.0..1.0f64), nx * ny).prop_filter_map(
            "empty sample",
            move |v| {
                let spec = GridSpec::new(nx, ny, 0.0, 0.0, 1.0 / (nx.max(ny) - 1) as f64).unwrap();
                v.iter()
                    .any(Option::is_some)
                    .then(|| SampledFunction::from_options(spec, &v, Module::AutoInfinity).unwrap())
            },
        )
    })
}

fn scale(f: &ScalarField) -> f64 {
    f.values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn envelope(f: &ScalarField) -> ScalarField {
    convex_envelope(f, &StencilConfig::default(), &solver()).unwrap().field
}

fn params(lambda: f64, engine: Engine) -> TransformParams {
    TransformParams::new(lambda).with_engine(engine).with_solver(solver())
}

fn engines() -> impl Strategy<Value = Engine> {
    prop_oneof![Just(Engine::Exact), Just(Engine::Stencil)]
}

fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
    prop::collection::btree_set((0..40i32, 0..40i32), 4..12)
        .prop_flat_map(|pts| {
            let n = pts.len();
            (Just(pts), prop::collection::vec(-1.0..1.0f64, n))
        })
        .prop_filter_map("degenerate cloud", |(pts, vals)| {
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(i, j)| (i as f64 * 0.025, j as f64 * 0.025)).collect();
            let pc = PointCloud::new(pts, vals).ok()?;
            triangulate(&pc, 1e-9).ok().map(|_| pc)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn extensions_bracket_and_agree_on_k(sf in sample_strategy(8), m in 2.0..10.0f64) {
        let plus = extend(&sf, Sign::Plus, Some(m)).unwrap();
        let minus = extend(&sf, Sign::Minus, Some(m)).unwrap();
        let member = &sf.mask.member;
        for k in 0..plus.values.len() {
            prop_assert!(plus.values[k] >= minus.values[k]);
            prop_assert_eq!(plus.values[k] == minus.values[k], member[k]);
            if !member[k] {
                prop_assert_eq!(plus.values[k].to_bits(), m.to_bits());
                prop_assert_eq!(minus.values[k].to_bits(), (-m).to_bits());
            }
        }
        let again = SampledFunction::from_field(&plus, sf.mask.clone(), Module::Finite(m)).unwrap();
        prop_assert_eq!(extend(&again, Sign::Plus, None).unwrap(), plus);
    }

    #[test]
    fn envelope_is_below_idempotent_and_convex(f in field_strategy(9)) {
        let g = envelope(&f);
        let s = scale(&f);
        for (a, b) in g.values.iter().zip(&f.values) {
            prop_assert!(a <= b);
        }
        prop_assert!(envelope(&g).max_abs_diff(&g) <= 100.0 * TOL * s);
        let spec = f.spec;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                    let (ip, jp, im, jm) = (i as i64 + di, j as i64 + dj, i as i64 - di, j as i64 - dj);
                    let inside = |a: i64, b: i64| a >= 0 && b >= 0 && a < spec.nx as i64 && b < spec.ny as i64;
                    if inside(ip, jp) && inside(im, jm) {
                        let mid = 2.0 * g.at(i, j);
                        let ends = g.at(ip as usize, jp as usize) + g.at(im as usize, jm as usize);
                        prop_assert!(mid <= ends + 1e-10 * s);
                    }
                }
            }
        }
    }

    #[test]
    fn envelope_is_monotone(f in field_strategy(8), bump in prop::collection::vec(0.0..1.0f64, 64)) {
        let g = ScalarField::new(f.spec, f.values.iter().zip(bump.iter().cycle()).map(|(v, b)| v + b).collect()).unwrap();
        let (ef, eg) = (envelope(&f), envelope(&g));
        let slack = 10.0 * TOL * scale(&g) * (g.values.len() as f64).sqrt();
        for (a, b) in ef.values.iter().zip(&eg.values) {
            prop_assert!(*a <= b + slack);
        }
    }

    #[test]
    fn envelope_ignores_the_grid_origin(f in field_strategy(8), dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let spec = f.spec;
        let moved = ScalarField::new(GridSpec::new(spec.nx, spec.ny, spec.x0 + dx, spec.y0 + dy, spec.h).unwrap(), f.values.clone()).unwrap();
        prop_assert_eq!(envelope(&f).values, envelope(&moved).values);
    }

    #[test]
    fn envelope_commutes_with_affine_addition(f in field_strategy(8), a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let ell = ScalarField::from_fn(f.spec, |x, y| a * x + b * y + c);
        let shifted = ScalarField::new(f.spec, f.values.iter().zip(&ell.values).map(|(v, l)| v + l).collect()).unwrap();
        let lhs = envelope(&shifted);
        let rhs: Vec<f64> = envelope(&f).values.iter().zip(&ell.values).map(|(v, l)| v + l).collect();
        let s = scale(&shifted);
        for (x, y) in lhs.values.iter().zip(&rhs) {
            prop_assert!((x - y).abs() <= 100.0 * TOL * s + 1e-13 * s);
        }
    }

    #[test]
    fn one_dimensional_envelope_matches_the_hull(values in prop::collection::vec(-1.0..1.0f64, 2..200)) {
        let n = values.len();
        let spec = GridSpec::new(n, 1, 0.0, 0.0, 1.0 / n as f64).unwrap();
        let g = envelope(&ScalarField::new(spec, values.clone()).unwrap());
        let xs: Vec<f64> = (0..n).map(|i| spec.x(i)).collect();
        let oracle = brute_force_envelope_1d(&xs, &values).unwrap();
        for (a, b) in g.values.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 100.0 * TOL);
        }
    }

    #[test]
    fn transforms_bracket_and_are_dual(f in field_strategy(8), lambda in 0.1..50.0f64, engine in engines()) {
        let p = params(lambda, engine);
        let lo = lower_transform(&f, &p).unwrap().field;
        let up = upper_transform(&f, &p).unwrap().field;
        let s = scale(&f) + lambda * f.spec.diameter().powi(2);
        for k in 0..f.values.len() {
            prop_assert!(lo.values[k] <= f.values[k] + 10.0 * TOL * s);
            prop_assert!(f.values[k] <= up.values[k] + 10.0 * TOL * s);
        }
        let neg = lower_transform(&f.map(|v| -v), &p).unwrap().field.map(|v| -v);
        prop_assert_eq!(up.values, neg.values);
    }

    #[test]
    fn transforms_are_monotone_in_lambda(f in field_strategy(8), l1 in 0.1..20.0f64, factor in 1.0..5.0f64, engine in engines()) {
        let (p1, p2) = (params(l1, engine), params(l1 * factor, engine));
        let s = scale(&f) + l1 * factor * f.spec.diameter().powi(2);
        let slack = 100.0 * TOL * s;
        let (lo1, lo2) = (lower_transform(&f, &p1).unwrap().field, lower_transform(&f, &p2).unwrap().field);
        let (up1, up2) = (upper_transform(&f, &p1).unwrap().field, upper_transform(&f, &p2).unwrap().field);
        for k in 0..f.values.len() {
            prop_assert!(lo1.values[k] <= lo2.values[k] + slack);
            prop_assert!(up2.values[k] <= up1.values[k] + slack);
        }
    }

    #[test]
    fn average_is_affine_equivariant(sf in sample_strategy(8), a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, lambda in 0.5..20.0f64) {
        // sampled corners make co[K] the whole grid, where the average does not depend on M
        let spec = sf.spec();
        let mut opts = sf.to_options();
        for (i, j) in [(0, 0), (spec.nx - 1, 0), (0, spec.ny - 1), (spec.nx - 1, spec.ny - 1)] {
            opts[spec.index(i, j)].get_or_insert(0.25);
        }
        let sf = SampledFunction::from_options(spec, &opts, Module::AutoInfinity).unwrap();
        let ell = ScalarField::from_fn(spec, |x, y| a * x + b * y + c);
        let shifted: Vec<Option<f64>> = opts.iter().zip(&ell.values).map(|(v, l)| v.map(|v| v + l)).collect();
        let sf2 = SampledFunction::from_options(spec, &shifted, Module::AutoInfinity).unwrap();
        let p = TransformParams::new(lambda);
        let base = average_approximation(&sf, &p).unwrap();
        let moved = average_approximation(&sf2, &p).unwrap();
        let s = base.m_used.max(moved.m_used);
        for k in 0..spec.len() {
            prop_assert!((moved.field.values[k] - base.field.values[k] - ell.values[k]).abs() <= 100.0 * 1e-13 * s);
        }
    }

    #[test]
    fn average_ignores_the_grid_origin(sf in sample_strategy(8), dx in -3i32..3, dy in -3i32..3, lambda in 0.5..20.0f64) {
        let spec = sf.spec();
        let moved = GridSpec::new(spec.nx, spec.ny, spec.x0 + dx as f64 * spec.h, spec.y0 + dy as f64 * spec.h, spec.h).unwrap();
        let sf2 = SampledFunction::from_options(moved, &sf.to_options(), Module::AutoInfinity).unwrap();
        let p = TransformParams::new(lambda);
        prop_assert_eq!(average_approximation(&sf, &p).unwrap().field.values, average_approximation(&sf2, &p).unwrap().field.values);
    }

    #[test]
    fn delaunay_cells_are_empty_circles(pc in cloud_strategy()) {
        for cell in triangulate(&pc, 1e-9).unwrap() {
            let tol = 1e-7 * cell.radius;
            for (k, &(x, y)) in pc.points.iter().enumerate() {
                let d = (x - cell.center.0).hypot(y - cell.center.1);
                if cell.vertex_ids.contains(&k) {
                    prop_assert!((d - cell.radius).abs() <= tol);
                } else {
                    prop_assert!(d >= cell.radius - tol);
                }
            }
            prop_assert_eq!(cell.regular, cell.vertex_ids.len() == 3);
        }
    }

    #[test]
    fn delaunay_interpolants_are_ordered_and_symmetric(pc in cloud_strategy()) {
        let neg = PointCloud::new(pc.points.clone(), pc.values.iter().map(|v| -v).collect()).unwrap();
        for cell in triangulate(&pc, 1e-9).unwrap() {
            let (plus, minus) = cell_interpolant(&pc, &cell).unwrap();
            let (nplus, nminus) = cell_interpolant(&neg, &cell).unwrap();
            for &v in &cell.vertex_ids {
                let (x, y) = pc.points[v];
                for g in [&plus, &minus] {
                    prop_assert!((g.eval(x, y).unwrap() - pc.values[v]).abs() <= 1e-9 * pc.max_abs().max(1.0));
                }
            }
            let n = cell.vertex_ids.len() as f64;
            let cx = cell.vertex_ids.iter().map(|&v| pc.points[v].0).sum::<f64>() / n;
            let cy = cell.vertex_ids.iter().map(|&v| pc.points[v].1).sum::<f64>() / n;
            let mut probes = vec![(cx, cy)];
            probes.extend(cell.vertex_ids.iter().map(|&v| (0.5 * (pc.points[v].0 + cx), 0.5 * (pc.points[v].1 + cy))));
            for (x, y) in probes {
                let (p, m) = (plus.eval(x, y).unwrap(), minus.eval(x, y).unwrap());
                prop_assert!(m <= p + 1e-12);
                prop_assert!((nplus.eval(x, y).unwrap() + m).abs() <= 1e-12);
                prop_assert!((nminus.eval(x, y).unwrap() + p).abs() <= 1e-12);
                if cell.regular {
                    prop_assert!((p - m).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn prototype_average_lies_between_the_transforms(x in -2.5..2.5f64, y in -2.5..2.5f64) {
        let ids = [
            PrototypeId::SignJump1D { lambda: 100.0 },
            PrototypeId::FourPoint { lambda: 3.0 },
            PrototypeId::EightPoint { lambda: 3.0 },
            PrototypeId::CrossParabolas { lambda: 10.0 },
            PrototypeId::CrossAbs { lambda: 10.0 },
            PrototypeId::TwoGables { lambda: 1.0, r: 1.0, h: 1.0 },
            PrototypeId::AnnulusLevels { lambda: 10.0, r: 1.0, big_r: 2.0, m: 5.0 },
        ];
        for id in ids {
            if let (Ok(a), Ok(l), Ok(u)) = (analytic_average(&id, x, y), analytic_lower(&id, x, y), analytic_upper(&id, x, y)) {
                // the extensions are +M below and -M above, so only the sign example is ordered l <= u
                let (lo, hi) = if matches!(id, PrototypeId::SignJump1D { .. }) { (l, u) } else { (l.min(u), l.max(u)) };
                prop_assert!(lo <= a + 1e-9 && a <= hi + 1e-9, "{} at ({x}, {y}): {l} {a} {u}", id.name());
            }
        }
        let four = PrototypeId::FourPoint { lambda: 3.0 };
        if let (Ok(a), Ok(b), Ok(c)) = (analytic_average(&four, x, y), analytic_average(&four, -x, y), analytic_average(&four, -x, -y)) {
            prop_assert!((a + b).abs() <= 1e-9 && (a - c).abs() <= 1e-9);
        }
        let eight = PrototypeId::EightPoint { lambda: 3.0 };
        if let (Ok(a), Ok(b)) = (analytic_average(&eight, x, y), analytic_average(&eight, -y, x)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn relative_error_is_scale_and_sign_invariant(f in field_strategy(6), noise in prop::collection::vec(-0.1..0.1f64, 36), c in prop_oneof![-100.0..-0.01f64, 0.01..100.0f64]) {
        prop_assume!(f.values.iter().any(|v| *v != 0.0));
        let g = ScalarField::new(f.spec, f.values.iter().zip(noise.iter().cycle()).map(|(v, e)| v + e).collect()).unwrap();
        let base = relative_l2(&f, &g, None).unwrap();
        let scaled = relative_l2(&f.map(|v| c * v), &g.map(|v| c * v), None).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn psnr_falls_as_the_error_grows(values in prop::collection::vec(0.0..255.0f64, 16), steps in prop::collection::vec(0.1..5.0f64, 2..6)) {
        let spec = GridSpec::new(4, 4, 0.0, 0.0, 1.0).unwrap();
        let f = ScalarField::new(spec, values).unwrap();
        let mut last = f64::INFINITY;
        let mut err = 0.0;
        for s in steps {
            err += s;
            let current = psnr(&f, &f.map(|v| v + err)).unwrap();
            prop_assert!(current < last);
            last = current;
        }
    }

    #[test]
    fn inpainting_keeps_undamaged_pixels(f in field_strategy(8), damage in prop::collection::vec(prop::bool::weighted(0.3), 64)) {
        let image = f.map(|v| 127.5 * (v + 1.0));
        let damage: Vec<bool> = damage.into_iter().cycle().take(image.values.len()).collect();
        prop_assume!(damage.iter().any(|d| !d));
        let out = inpaint(&image, &damage, &TransformParams::new(1.0)).unwrap();
        for k in 0..image.values.len() {
            if !damage[k] {
                prop_assert_eq!(out.values[k].to_bits(), image.values[k].to_bits());
            }
        }
    }

    #[test]
    fn field_csv_round_trips(f in field_strategy(6), tiny in prop::collection::vec(prop_oneof![Just(0.0), Just(-0.0), Just(1e-300), Just(-1.7976931348623157e308)], 1..4)) {
        let mut f = f;
        for (k, t) in tiny.into_iter().enumerate() {
            f.values[k] = t;
        }
        let back = field_from_csv(&field_to_csv(&f)).unwrap();
        prop_assert_eq!(back.spec, f.spec);
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn sample_masks_need_a_member() {
    let spec = GridSpec::new(3, 3, 0.0, 0.0, 1.0).unwrap();
    assert!(SampleMask::new(spec, vec![false; 9]).is_err());
}
