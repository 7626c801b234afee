//! Property tests over randomized inputs: analytic invariants of the
//! Stieltjes transform and semicircle law, storage symmetry, and sampling
//! reproducibility.

use num_complex::Complex64;
use proptest::prelude::*;

use dilute_wigner::eig::eigen_decompose;
use dilute_wigner::ensemble::{sample_matrix, sample_stream, EnsembleConfig, EntryLaw, SymmetricMatrix};
use dilute_wigner::resolvent::{trace_resolvent, SpectralPoint};
use dilute_wigner::theory;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stieltjes_transform_is_herglotz_and_solves_fixed_point(
        re in -8.0f64..8.0,
        im_mag in 0.1f64..10.0,
        sign in prop::bool::ANY,
        v2 in 0.3f64..3.0,
    ) {
        let z = Complex64::new(re, if sign { im_mag } else { -im_mag });
        let w = theory::stieltjes_w(z, v2).unwrap();
        prop_assert!(w.im * z.im > 0.0);
        prop_assert!(theory::fixed_point_residual(z, w, v2) <= 1e-11);
        // Stieltjes transform of a probability measure: |w| <= 1/|Im z|
        prop_assert!(w.norm() <= 1.0 / z.im.abs() + 1e-12);
    }

    #[test]
    fn semicircle_cdf_is_monotone_with_unit_range(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        v2 in 0.3f64..2.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (theory::semicircle_cdf(lo, v2), theory::semicircle_cdf(hi, v2));
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fh >= fl - 1e-14);
        prop_assert!(theory::semicircle_density(lo, v2) >= 0.0);
        prop_assert!((theory::semicircle_cdf(2.0 * v2.sqrt() + 0.1, v2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn packed_storage_is_symmetric(
        n in 1usize..12,
        i in 0usize..12,
        j in 0usize..12,
        x in -5.0f64..5.0,
    ) {
        let (i, j) = (i % n, j % n);
        let mut m = SymmetricMatrix::zeros(n);
        m.set(i, j, x);
        prop_assert_eq!(m.get(i, j), x);
        prop_assert_eq!(m.get(j, i), x);
    }

    #[test]
    fn sampling_is_reproducible_and_trace_resolvent_herglotz(
        seed in 0u64..1_000_000,
        idx in 0u64..1000,
    ) {
        let cfg = EnsembleConfig { n: 12, p: 5.0, law: EntryLaw::gaussian(1.0), seed };
        let a = sample_matrix(&cfg, &mut sample_stream(seed, idx)).unwrap();
        let b = sample_matrix(&cfg, &mut sample_stream(seed, idx)).unwrap();
        prop_assert_eq!(a.entries(), b.entries());

        let s = eigen_decompose(&a, false).unwrap();
        let point = SpectralPoint::new(Complex64::new(0.5, 3.0), 1.0).unwrap();
        let g = trace_resolvent(&s, &point);
        prop_assert!(g.im > 0.0);
        prop_assert!(g.norm() <= 1.0 / 3.0 + 1e-12);
    }
}
