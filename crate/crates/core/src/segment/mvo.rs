//! Microvascular-obstruction inclusion by hole filling.

use crate::volcore::{fill_holes_2d, Connectivity, Mask2};

/// Dark tissue enclosed between the blood pool and the hyper-enhanced scar:
/// `mvo = (fill(endo ∪ hyper) ∖ (endo ∪ hyper)) ∩ myo`, `final = hyper ∪ mvo`.
pub fn include_mvo(hyper: &Mask2, endo: &Mask2, myo: &Mask2) -> (Mask2, Mask2) {
    let u = endo.or(hyper);
    let filled = fill_holes_2d(&u, Connectivity::Four);
    let mvo = filled.minus(&u).and(myo).minus(hyper);
    (hyper.or(&mvo), mvo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volcore::Grid2;

    fn disk(cx: f64, cy: f64, r: f64) -> Mask2 {
        Grid2::from_fn(40, 40, |x, y| ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() < r)
    }

    #[test]
    fn no_enclosure_no_mvo() {
        let endo = disk(20.0, 20.0, 8.0);
        let myo = disk(20.0, 20.0, 14.0).minus(&endo);
        let hyper = Grid2::from_fn(40, 40, |x, y| myo.get(x, y) && x > 30);
        let (f, m) = include_mvo(&hyper, &endo, &myo);
        assert!(!m.any());
        assert_eq!(f, hyper);
    }

    #[test]
    fn enclosed_cluster_becomes_mvo() {
        let endo = disk(20.0, 20.0, 8.0);
        let myo = disk(20.0, 20.0, 14.0).minus(&endo);
        let core = Grid2::from_fn(40, 40, |x, y| myo.get(x, y) && (28..=30).contains(&x) && (18..=22).contains(&y));
        let hyper = Grid2::from_fn(40, 40, |x, y| myo.get(x, y) && x >= 27 && (15..=25).contains(&y)).minus(&core);
        let (f, m) = include_mvo(&hyper, &endo, &myo);
        assert!(core.is_subset_of(&m));
        assert!(!m.and(&hyper).any());
        assert_eq!(f.count(), hyper.count() + m.count());
        // idempotent on its own output
        let (f2, _) = include_mvo(&f, &endo, &myo);
        assert_eq!(f2, f);
    }
}
