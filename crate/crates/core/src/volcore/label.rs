use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::{Grid2, Mask2};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    fn neighbours(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => {
                &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
            }
        }
    }
}

/// Label foreground pixels; labels are dense `1..=count` in raster order of
/// each component's first pixel, background is 0.
pub fn connected_components(mask: &Mask2, conn: Connectivity) -> (Grid2<u32>, usize) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = Grid2::new(w, h, 0u32);
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask.data()[start] || labels.data()[start] != 0 {
            continue;
        }
        count += 1;
        labels.data_mut()[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for &(dx, dy) in conn.neighbours() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.data()[j] && labels.data()[j] == 0 {
                    labels.data_mut()[j] = count;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, count as usize)
}

/// Add every background pixel that cannot be reached from the slice border
/// through background under `conn`.
pub fn fill_holes_2d(mask: &Mask2, conn: Connectivity) -> Mask2 {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = Grid2::new(w, h, false);
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Mask2, queue: &mut VecDeque<usize>| {
        let i = y * w + x;
        if !mask.data()[i] && !outside.data()[i] {
            outside.data_mut()[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for &(dx, dy) in conn.neighbours() {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if !mask.data()[j] && !outside.data()[j] {
                outside.data_mut()[j] = true;
                queue.push_back(j);
            }
        }
    }
    outside.not()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn from_rows(rows: &[&str]) -> Mask2 {
        Grid2::from_fn(rows[0].len(), rows.len(), |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn empty_and_diagonal() {
        let m = Grid2::new(4, 4, false);
        assert_eq!(connected_components(&m, Connectivity::Eight).1, 0);
        let d = from_rows(&["#.", ".#"]);
        assert_eq!(connected_components(&d, Connectivity::Four).1, 2);
        assert_eq!(connected_components(&d, Connectivity::Eight).1, 1);
    }

    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let n = p[i];
            p[i] = r;
            i = n;
        }
        r
    }

    #[test]
    fn partition_matches_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for conn in [Connectivity::Four, Connectivity::Eight] {
            for _ in 0..30 {
                let m = Grid2::from_fn(16, 16, |_, _| rng.random_bool(0.45));
                let (labels, count) = connected_components(&m, conn);
                let mut parent: Vec<usize> = (0..256).collect();
                for y in 0..16isize {
                    for x in 0..16isize {
                        if !m.get(x as usize, y as usize) {
                            continue;
                        }
                        for &(dx, dy) in conn.neighbours() {
                            if let Some(true) = m.get_signed(x + dx, y + dy) {
                                let a = find(&mut parent, (y * 16 + x) as usize);
                                let b = find(&mut parent, ((y + dy) * 16 + x + dx) as usize);
                                parent[a] = b;
                            }
                        }
                    }
                }
                let mut roots = std::collections::BTreeSet::new();
                for i in 0..256 {
                    if m.data()[i] {
                        roots.insert(find(&mut parent, i));
                        assert!(labels.data()[i] >= 1 && labels.data()[i] as usize <= count);
                    } else {
                        assert_eq!(labels.data()[i], 0);
                    }
                }
                assert_eq!(roots.len(), count);
                for i in 0..256 {
                    for j in 0..256 {
                        if m.data()[i] && m.data()[j] {
                            let same_uf = find(&mut parent, i) == find(&mut parent, j);
                            assert_eq!(same_uf, labels.data()[i] == labels.data()[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hole_filling_cases() {
        let solid = from_rows(&[".....", ".###.", ".###.", ".###.", "....."]);
        assert_eq!(fill_holes_2d(&solid, Connectivity::Four), solid);

        let ring = from_rows(&["#####", "#####", "##.##", "#####", "#####"]);
        let filled = fill_holes_2d(&ring, Connectivity::Four);
        assert!(filled.data().iter().all(|&b| b));

        let c_shape = from_rows(&[".......", ".#####.", ".#.....", ".#.....", ".#####.", "......."]);
        assert_eq!(fill_holes_2d(&c_shape, Connectivity::Four), c_shape);
    }

    #[test]
    fn diagonal_gap_is_a_hole_under_four_connectivity() {
        let m = from_rows(&[".#.", "#.#", ".#."]);
        // centre touches the border only diagonally
        let f4 = fill_holes_2d(&m, Connectivity::Four);
        assert!(f4.get(1, 1));
        let f8 = fill_holes_2d(&m, Connectivity::Eight);
        assert!(!f8.get(1, 1));
    }
}
